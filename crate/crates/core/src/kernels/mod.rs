//! Memory kernel `M_kl(t)`, inhomogeneity `G_k(t)` and the reservoir
//! correlation functions with their spectral representation.
//!
//! Everything here is an exact weighted mode sum over the discretized
//! reservoir; summation runs over modes (ascending) inside, then over the
//! intermediate level `m` (ascending) outside.

mod correlations;
mod spectral;

pub use correlations::{correlations, gram_positivity_check, CorrelationSet, GramReport, PSD_TOLERANCE};
pub use spectral::{spectral_density_matrix, SpectralAtom, SpectralDensityMatrix};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::model::{InitialState, Model};

/// Tabulated `M(t)` and `G(t)` on a common time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    pub times: Vec<f64>,
    pub memory: Vec<DMatrix<C64>>,
    pub inhomogeneity: Vec<DVector<C64>>,
}

impl KernelTable {
    pub fn compute(model: &Model, initial: &InitialState, times: &[f64]) -> Result<Self> {
        Ok(KernelTable {
            times: times.to_vec(),
            memory: memory_kernel(model, times)?,
            inhomogeneity: inhomogeneity(model, initial, times)?,
        })
    }
}

pub(crate) fn check_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonFinite("times"));
    }
    Ok(())
}

/// `e^{−i t (ε_m + ω_n)}` for every level `m` and mode `n`.
fn phases(model: &Model, t: f64) -> Vec<C64> {
    let mut out = Vec::with_capacity(model.dim() * model.n_modes());
    for &e in model.energies() {
        for &w in model.frequencies() {
            out.push(C64::from_polar(1.0, -t * (e + w)));
        }
    }
    out
}

/// `M_kl(t) = Σ_m Σ_n w_n conj(f_mk(ω_n)) f_ml(ω_n) e^{−it(ε_m + ω_n)}`.
pub fn memory_kernel(model: &Model, times: &[f64]) -> Result<Vec<DMatrix<C64>>> {
    check_times(times)?;
    let d = model.dim();
    let n = model.n_modes();
    let w = model.weights();
    // products[(m, k, l)][n] = w_n conj(f_mk) f_ml
    let mut products = Vec::with_capacity(d * d * d * n);
    for m in 0..d {
        for k in 0..d {
            for l in 0..d {
                let (fk, fl) = (model.form_factor(m, k), model.form_factor(m, l));
                products.extend((0..n).map(|q| fk[q].conj() * fl[q] * w[q]));
            }
        }
    }
    Ok(times
        .iter()
        .map(|&t| {
            let ph = phases(model, t);
            DMatrix::from_fn(d, d, |k, l| {
                let mut acc = C64::new(0.0, 0.0);
                for m in 0..d {
                    let p = &products[((m * d + k) * d + l) * n..][..n];
                    let e = &ph[m * n..(m + 1) * n];
                    let mut inner = C64::new(0.0, 0.0);
                    for q in 0..n {
                        inner += p[q] * e[q];
                    }
                    acc += inner;
                }
                acc
            })
        })
        .collect())
}

/// `G_k(t) = −i Σ_m Σ_n w_n conj(f_mk(ω_n)) g_0^m(ω_n) e^{−it(ε_m + ω_n)}`.
pub fn inhomogeneity(
    model: &Model,
    initial: &InitialState,
    times: &[f64],
) -> Result<Vec<DVector<C64>>> {
    check_times(times)?;
    let d = model.dim();
    let n = model.n_modes();
    if initial.g0.len() != d || initial.g0.iter().any(|g| g.len() != n) {
        return Err(Error::DimensionMismatch {
            what: "initial mode functions g0",
            expected: n,
            got: initial.g0.first().map_or(0, Vec::len),
        });
    }
    if initial.is_factorized() {
        return Ok(vec![DVector::zeros(d); times.len()]);
    }
    let w = model.weights();
    let mut products = Vec::with_capacity(d * d * n);
    for m in 0..d {
        for k in 0..d {
            let fk = model.form_factor(m, k);
            let g = &initial.g0[m];
            products.extend((0..n).map(|q| fk[q].conj() * g[q] * w[q]));
        }
    }
    let minus_i = C64::new(0.0, -1.0);
    Ok(times
        .iter()
        .map(|&t| {
            let ph = phases(model, t);
            DVector::from_fn(d, |k, _| {
                let mut acc = C64::new(0.0, 0.0);
                for m in 0..d {
                    let p = &products[(m * d + k) * n..][..n];
                    let e = &ph[m * n..(m + 1) * n];
                    let mut inner = C64::new(0.0, 0.0);
                    for q in 0..n {
                        inner += p[q] * e[q];
                    }
                    acc += inner;
                }
                minus_i * acc
            })
        })
        .collect())
}
