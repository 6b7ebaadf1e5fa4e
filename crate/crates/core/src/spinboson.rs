//! Two-level system with resonant (`σ⁻ ⊗ a*(f)`) and anti-resonant
//! (`σ⁺ ⊗ a*(h)`) one-boson channels, as a configuration of the generic model.
//!
//! Identification: `ε_0 = 0`, `ε_1 = ω`, `f_01 = f`, `f_10 = h`,
//! `f_00 = f_11 = 0`. The pairs `(c_0, g¹)` and `(c_1, g⁰)` then evolve
//! independently, which gives the two conserved weights `p0` and `p1`.

use std::f64::consts::TAU;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{weighted_inner, weighted_norm_sqr};
use crate::model::{build_model, FormFactorSet, InitialState, Model, ReservoirGrid, SystemSpec};
use crate::reduced::reduced_density;
use crate::solvers::Trajectory;

/// Tolerance of the exact identities checked by [`rwa_recovery_check`].
pub const RWA_IDENTITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SpinBosonConfig {
    /// Level splitting `ω`.
    pub omega: f64,
    pub reservoir: ReservoirGrid,
    /// Resonant form factor `f(ω_n)`.
    pub f: Vec<C64>,
    /// Anti-resonant form factor `h(ω_n)`.
    pub h: Vec<C64>,
}

impl SpinBosonConfig {
    /// RWA configuration: `h ≡ 0`.
    pub fn rwa(omega: f64, reservoir: ReservoirGrid, f: Vec<C64>) -> Self {
        let n = reservoir.n_modes();
        SpinBosonConfig {
            omega,
            reservoir,
            f,
            h: vec![C64::new(0.0, 0.0); n],
        }
    }
}

pub fn build_spinboson(cfg: &SpinBosonConfig) -> Result<Model> {
    let n = cfg.reservoir.n_modes();
    let mut ff = FormFactorSet::zeros(2, n);
    ff.set_channel(0, 1, cfg.f.clone())?;
    ff.set_channel(1, 0, cfg.h.clone())?;
    build_model(
        SystemSpec::new(vec![0.0, cfg.omega])?,
        cfg.reservoir.clone(),
        ff,
    )
}

/// True when the model has the two-channel shape above (any `ε_0`).
pub fn is_spinboson_shape(model: &Model) -> bool {
    model.dim() == 2
        && model.formfactors().is_zero_channel(0, 0)
        && model.formfactors().is_zero_channel(1, 1)
}

fn require_shape(model: &Model) -> Result<()> {
    if model.dim() != 2 {
        return Err(Error::NotSpinBoson(format!("d = {} (need 2)", model.dim())));
    }
    if !is_spinboson_shape(model) {
        return Err(Error::NotSpinBoson(
            "diagonal form factors f_00, f_11 must vanish".into(),
        ));
    }
    Ok(())
}

/// Recovers the configuration from a spin-boson shaped model with `ε_0 = 0`.
pub fn config_from_model(model: &Model) -> Result<SpinBosonConfig> {
    require_shape(model)?;
    if model.energies()[0] != 0.0 {
        return Err(Error::NotSpinBoson("ground energy must be 0".into()));
    }
    Ok(SpinBosonConfig {
        omega: model.energies()[1],
        reservoir: model.reservoir().clone(),
        f: model.form_factor(0, 1).to_vec(),
        h: model.form_factor(1, 0).to_vec(),
    })
}

/// `p0 = |c_0|² + (g¹, g¹)`, `p1 = |c_1|² + (g⁰, g⁰)` along a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantsOfMotion {
    pub times: Vec<f64>,
    pub p0: Vec<f64>,
    pub p1: Vec<f64>,
}

impl ConstantsOfMotion {
    /// `max_t |p_α(t) − p_α(0)|` for α = 0, 1.
    pub fn drift(&self) -> (f64, f64) {
        let d = |p: &[f64]| p.iter().map(|x| (x - p[0]).abs()).fold(0.0, f64::max);
        (d(&self.p0), d(&self.p1))
    }

    /// `max_t |p0 + p1 − 1|`.
    pub fn normalization_defect(&self) -> f64 {
        self.p0
            .iter()
            .zip(&self.p1)
            .map(|(a, b)| (a + b - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

pub fn constants_of_motion(model: &Model, trajectory: &Trajectory) -> Result<ConstantsOfMotion> {
    require_shape(model)?;
    let w = model.weights();
    let mut p0 = Vec::with_capacity(trajectory.states.len());
    let mut p1 = Vec::with_capacity(trajectory.states.len());
    for s in &trajectory.states {
        if s.g.len() != 2 || s.g.iter().any(|g| g.len() != model.n_modes()) {
            return Err(Error::Precondition(
                "trajectory must carry mode functions".into(),
            ));
        }
        p0.push(s.c[0].norm_sqr() + weighted_norm_sqr(w, &s.g[1]));
        p1.push(s.c[1].norm_sqr() + weighted_norm_sqr(w, &s.g[0]));
    }
    Ok(ConstantsOfMotion {
        times: trajectory.times.clone(),
        p0,
        p1,
    })
}

/// Model-specific kernels tabulated on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinBosonKernels {
    pub times: Vec<f64>,
    /// `m_0(t) = Σ w |h|² e^{−it(ω+ω_n)}`
    pub m0: Vec<C64>,
    /// `m_1(t) = Σ w |f|² e^{−itω_n}`
    pub m1: Vec<C64>,
    /// `n_0(t) = −i Σ w conj(h) g_0^1 e^{−it(ω+ω_n)}`
    pub n0: Vec<C64>,
    /// `n_1(t) = −i Σ w conj(f) g_0^0 e^{−itω_n}`
    pub n1: Vec<C64>,
}

fn mode_sum(weights: &[f64], a: &[C64], b: &[C64], freqs: &[f64], shift: f64, t: f64) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for q in 0..weights.len() {
        acc += a[q].conj() * b[q] * weights[q] * C64::from_polar(1.0, -t * (shift + freqs[q]));
    }
    acc
}

/// Evaluates `m0, m1` and, when initial data is given, `n0, n1`
/// (zero otherwise).
pub fn spinboson_kernels(
    cfg: &SpinBosonConfig,
    initial: Option<&InitialState>,
    times: &[f64],
) -> Result<SpinBosonKernels> {
    let n = cfg.reservoir.n_modes();
    if cfg.f.len() != n || cfg.h.len() != n {
        return Err(Error::DimensionMismatch {
            what: "spin-boson form factors",
            expected: n,
            got: cfg.f.len().min(cfg.h.len()),
        });
    }
    if let Some(s) = initial {
        if s.g0.len() != 2 || s.g0.iter().any(|g| g.len() != n) {
            return Err(Error::DimensionMismatch {
                what: "initial mode functions g0",
                expected: n,
                got: s.g0.first().map_or(0, Vec::len),
            });
        }
    }
    let w = cfg.reservoir.weights();
    let om = cfg.reservoir.frequencies();
    let minus_i = C64::new(0.0, -1.0);
    let mut out = SpinBosonKernels {
        times: times.to_vec(),
        m0: Vec::with_capacity(times.len()),
        m1: Vec::with_capacity(times.len()),
        n0: Vec::with_capacity(times.len()),
        n1: Vec::with_capacity(times.len()),
    };
    for &t in times {
        out.m0.push(mode_sum(w, &cfg.h, &cfg.h, om, cfg.omega, t));
        out.m1.push(mode_sum(w, &cfg.f, &cfg.f, om, 0.0, t));
        match initial {
            Some(s) => {
                out.n0.push(minus_i * mode_sum(w, &cfg.h, &s.g0[1], om, cfg.omega, t));
                out.n1.push(minus_i * mode_sum(w, &cfg.f, &s.g0[0], om, 0.0, t));
            }
            None => {
                out.n0.push(C64::new(0.0, 0.0));
                out.n1.push(C64::new(0.0, 0.0));
            }
        }
    }
    Ok(out)
}

/// Predicted `lim ρ_00(t) = |c_1(0)|² + (g_0^0, g_0^0)` when both amplitudes decay.
pub fn asymptotic_population(model: &Model, initial: &InitialState) -> Result<f64> {
    require_shape(model)?;
    if initial.c0.len() != 2 || initial.g0.len() != 2 || initial.g0[0].len() != model.n_modes() {
        return Err(Error::DimensionMismatch {
            what: "spin-boson initial state",
            expected: 2,
            got: initial.c0.len(),
        });
    }
    Ok(initial.c0[1].norm_sqr() + weighted_norm_sqr(model.weights(), &initial.g0[0]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticReport {
    pub predicted_rho00: f64,
    /// First time `|m_α(t)| ≤ |m_α(0)|/2` (None if the channel is empty or
    /// the kernel never halves before its recurrence time).
    pub half_life_m0: Option<f64>,
    pub half_life_m1: Option<f64>,
    /// `2π/Δω` with `Δω` the coupling-weighted mean mode spacing of each channel.
    pub recurrence_m0: Option<f64>,
    pub recurrence_m1: Option<f64>,
    /// Both non-empty channels decay well inside their recurrence window.
    pub decay_expected: bool,
}

fn half_life(weights: &[f64], ch: &[C64], freqs: &[f64], shift: f64, horizon: f64) -> Option<f64> {
    let m0 = mode_sum(weights, ch, ch, freqs, shift, 0.0).norm();
    if m0 == 0.0 || !horizon.is_finite() {
        return None;
    }
    const SAMPLES: usize = 4000;
    let dt = horizon / SAMPLES as f64;
    (1..=SAMPLES)
        .map(|k| k as f64 * dt)
        .find(|&t| mode_sum(weights, ch, ch, freqs, shift, t).norm() <= 0.5 * m0)
}

/// Prediction of the long-time ground population plus a guard telling
/// whether the finite-mode bath can be expected to reach it.
pub fn asymptotic_report(model: &Model, initial: &InitialState) -> Result<AsymptoticReport> {
    let predicted_rho00 = asymptotic_population(model, initial)?;
    let grid = model.reservoir();
    let (w, om) = (grid.weights(), grid.frequencies());
    let (f, h) = (model.form_factor(0, 1), model.form_factor(1, 0));
    let recurrence = |ch: &[C64]| -> Option<f64> {
        if ch.iter().all(|z| z.norm_sqr() == 0.0) {
            return None;
        }
        Some(grid.mean_spacing(ch).map_or(f64::INFINITY, |dw| TAU / dw))
    };
    let (rec0, rec1) = (recurrence(h), recurrence(f));
    let shift = model.energies()[1] - model.energies()[0];
    let hl0 = rec0.and_then(|r| half_life(w, h, om, shift, r));
    let hl1 = rec1.and_then(|r| half_life(w, f, om, 0.0, r));
    let decays = |rec: Option<f64>, hl: Option<f64>| rec.is_none() || hl.is_some();
    Ok(AsymptoticReport {
        predicted_rho00,
        half_life_m0: hl0,
        half_life_m1: hl1,
        recurrence_m0: rec0,
        recurrence_m1: rec1,
        decay_expected: decays(rec0, hl0) && decays(rec1, hl1) && (rec0.is_some() || rec1.is_some()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RwaReport {
    /// `max_t ||c_0(t)| − |c_0(0)||`.
    pub c0_modulus_defect: f64,
    /// `max_t |ρ_00(t) − (1 − |c_1(t)|²)|`.
    pub rho00_defect: f64,
    /// `max_t ||c_0(t)|² − |c_1(0)|²|`, reported for reference only; it
    /// vanishes only when `|c_0(0)| = |c_1(0)|`.
    pub printed_c0_identity_defect: f64,
    pub passed: bool,
}

/// Checks the RWA limit (`h ≡ 0`, `g_0^1 ≡ 0`) on a trajectory with mode data.
pub fn rwa_recovery_check(
    model: &Model,
    initial: &InitialState,
    trajectory: &Trajectory,
) -> Result<RwaReport> {
    require_shape(model)?;
    if !model.formfactors().is_zero_channel(1, 0) {
        return Err(Error::Precondition("anti-resonant form factor h must vanish".into()));
    }
    if initial.g0.len() != 2 || initial.g0[1].iter().any(|z| z.norm_sqr() != 0.0) {
        return Err(Error::Precondition("g_0^1 must vanish".into()));
    }
    let c0_0 = initial.c0[0].norm();
    let c1_0 = initial.c0[1].norm_sqr();
    let mut rep = RwaReport {
        c0_modulus_defect: 0.0,
        rho00_defect: 0.0,
        printed_c0_identity_defect: 0.0,
        passed: false,
    };
    for s in &trajectory.states {
        let rho = reduced_density(model, s)?;
        rep.c0_modulus_defect = rep.c0_modulus_defect.max((s.c[0].norm() - c0_0).abs());
        rep.rho00_defect = rep
            .rho00_defect
            .max((rho.rho[(0, 0)].re - (1.0 - s.c[1].norm_sqr())).abs());
        rep.printed_c0_identity_defect = rep
            .printed_c0_identity_defect
            .max((s.c[0].norm_sqr() - c1_0).abs());
    }
    rep.passed = rep.c0_modulus_defect < RWA_IDENTITY_TOLERANCE
        && rep.rho00_defect < RWA_IDENTITY_TOLERANCE;
    Ok(rep)
}

/// `ρ_00(t) = |c_0(t)|² + |c_1(0)|² − |c_1(t)|² + (g_0^0, g_0^0)`, the form
/// obtained from the conservation of `p0` and `p1`.
pub fn rho00_from_amplitudes(
    model: &Model,
    initial: &InitialState,
    c_t: &[C64],
) -> f64 {
    c_t[0].norm_sqr() + initial.c0[1].norm_sqr() - c_t[1].norm_sqr()
        + weighted_inner(model.weights(), &initial.g0[0], &initial.g0[0]).re
}
