//! Time evolution in the single-excitation sector.
//!
//! Three independent routes share the same discretized model:
//! * [`solve_direct`]: RK4 on the coupled amplitude/mode equations,
//! * [`solve_volterra`]: the closed integro-differential equation for the
//!   amplitudes, with [`reconstruct_modes`] recovering the mode functions,
//! * [`oracle_expm`]: exact propagation by diagonalizing the sector Hamiltonian.

mod direct;
mod oracle;
mod volterra;

pub use direct::solve_direct;
pub use oracle::{oracle_expm, oracle_trajectory, ExactPropagator, ORACLE_MAX_DIM};
pub use volterra::{
    reconstruct_modes, reconstruct_modes_at, solve_volterra, volterra_states, AmplitudeHistory,
    AmplitudeTrajectory,
};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::weighted_norm_sqr;
use crate::model::Model;

/// `dt · max|frequency|` above which a warning is logged.
pub const STEP_WARN: f64 = 0.1;
/// `dt · max|frequency|` above which integration is refused.
pub const STEP_LIMIT: f64 = 0.5;

/// `c_i(t)` and `g_t^i(ω_n)` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorState {
    pub t: f64,
    pub c: Vec<C64>,
    pub g: Vec<Vec<C64>>,
}

impl SectorState {
    /// `Σ|c_i|² + Σ(g^i, g^i)`.
    pub fn norm_sqr(&self, weights: &[f64]) -> f64 {
        let c: f64 = self.c.iter().map(|z| z.norm_sqr()).sum();
        c + self
            .g
            .iter()
            .map(|g| weighted_norm_sqr(weights, g))
            .sum::<f64>()
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().chain(self.g.iter().flatten()).all(|z| z.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Direct,
    Volterra,
    Oracle,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Direct => "direct",
            SolverKind::Volterra => "volterra",
            SolverKind::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMeta {
    pub solver: SolverKind,
    pub dt: f64,
    pub steps: usize,
    /// `max_t |norm(t) − norm(0)|` over the sampled times (None when the
    /// route does not carry mode functions).
    pub norm_drift: Option<f64>,
}

/// Full sector states at the requested times.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<SectorState>,
    pub meta: RunMeta,
}

impl Trajectory {
    pub fn norms(&self, weights: &[f64]) -> Vec<f64> {
        self.states.iter().map(|s| s.norm_sqr(weights)).collect()
    }

    /// `max_t max_k |c_k − c'_k|` against another trajectory on the same times.
    pub fn max_amplitude_deviation(&self, other: &Trajectory) -> f64 {
        max_deviation(
            self.states.iter().map(|s| s.c.as_slice()),
            other.states.iter().map(|s| s.c.as_slice()),
        )
    }
}

pub(crate) fn max_deviation<'a>(
    a: impl Iterator<Item = &'a [C64]>,
    b: impl Iterator<Item = &'a [C64]>,
) -> f64 {
    a.zip(b)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).norm()))
        .fold(0.0, f64::max)
}

pub(crate) fn norm_drift(states: &[SectorState], weights: &[f64], reference: f64) -> f64 {
    states
        .iter()
        .map(|s| (s.norm_sqr(weights) - reference).abs())
        .fold(0.0, f64::max)
}

/// Rejects `dt` that does not resolve the fastest frequency of the model.
pub fn check_step(model: &Model, dt: f64) -> Result<()> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParameter {
            name: "dt",
            reason: "must be positive".into(),
        });
    }
    let product = dt * model.max_frequency();
    if product > STEP_LIMIT {
        return Err(Error::StepTooLarge {
            dt,
            product,
            limit: STEP_LIMIT,
        });
    }
    if product > STEP_WARN {
        log::warn!("dt * max|frequency| = {product:.3} exceeds {STEP_WARN}; accuracy will suffer");
    }
    Ok(())
}

/// Output times must be finite, non-negative and strictly increasing.
pub(crate) fn check_output_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidTimes("no output times requested".into()));
    }
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::InvalidTimes(
            "output times must be finite and non-negative".into(),
        ));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidTimes(
            "output times must be strictly increasing".into(),
        ));
    }
    Ok(())
}

/// `n + 1` equally spaced times on `[0, t_end]`.
pub fn uniform_times(t_end: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| t_end * k as f64 / n as f64).collect()
}
