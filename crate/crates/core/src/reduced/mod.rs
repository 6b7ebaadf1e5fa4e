//! Reduced system states and the dynamical map of the factorized case.

mod map;

pub use map::{
    apply_map, assemble_map, choi_matrix, cptp_check, dynamical_maps, overlap_r, propagator_l,
    ChoiMatrix, CptpReport, DynamicalMap, FactorizedPropagators, TRACE_TOLERANCE,
};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::PSD_TOLERANCE;
use crate::linalg::{hermitian_part, hermiticity_defect, min_hermitian_eigenvalue, weighted_inner};
use crate::model::Model;
use crate::solvers::SectorState;

/// `ρ(t)` on the system.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedState {
    pub t: f64,
    pub rho: DMatrix<C64>,
    /// `max|ρ − ρ†|` before symmetrization.
    pub hermiticity_defect: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReducedDiagnostics {
    pub trace_defect: f64,
    pub min_eigenvalue: f64,
    pub hermiticity_defect: f64,
}

impl ReducedDiagnostics {
    pub fn valid(&self) -> bool {
        self.trace_defect < 1e-10 && self.min_eigenvalue >= -PSD_TOLERANCE && self.hermiticity_defect < 1e-12
    }
}

impl ReducedState {
    pub fn trace(&self) -> C64 {
        self.rho.trace()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_hermitian_eigenvalue(&self.rho)
    }

    pub fn diagnostics(&self) -> ReducedDiagnostics {
        ReducedDiagnostics {
            trace_defect: (self.trace() - C64::new(1.0, 0.0)).norm(),
            min_eigenvalue: self.min_eigenvalue(),
            hermiticity_defect: self.hermiticity_defect,
        }
    }
}

/// `ρ_ij = c_i conj(c_j) + (g^j, g^i)`, then `ρ ← (ρ + ρ†)/2`.
pub fn reduced_density(model: &Model, state: &SectorState) -> Result<ReducedState> {
    let d = model.dim();
    if state.c.len() != d || state.g.len() != d {
        return Err(Error::DimensionMismatch {
            what: "sector state levels",
            expected: d,
            got: state.c.len(),
        });
    }
    if let Some(g) = state.g.iter().find(|g| g.len() != model.n_modes()) {
        return Err(Error::DimensionMismatch {
            what: "sector state mode samples",
            expected: model.n_modes(),
            got: g.len(),
        });
    }
    let w = model.weights();
    let raw = DMatrix::from_fn(d, d, |i, j| {
        state.c[i] * state.c[j].conj() + weighted_inner(w, &state.g[j], &state.g[i])
    });
    let defect = hermiticity_defect(&raw);
    if defect > 1e-12 {
        log::debug!("reduced density at t={} symmetrized (defect {defect:e})", state.t);
    }
    Ok(ReducedState {
        t: state.t,
        rho: hermitian_part(&raw),
        hermiticity_defect: defect,
    })
}
