//! Problem definition: system levels, the discretized reservoir, form factors
//! and initial data in the vacuum + one-boson sector.
//!
//! The reservoir label `k` only ever enters through the dispersion `ω(k)` and
//! inner products of mode functions, so modes are stored directly as frequency
//! samples `ω_n` with quadrature weights `w_n`. Every mode-function inner
//! product goes through [`weighted_inner`](crate::linalg::weighted_inner).

mod spectral;

pub use spectral::{
    discretize_spectral_family, DiscretizedBath, Discretization, QuadratureScheme, SpectralFamily,
    DEFAULT_MASS_THRESHOLD,
};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::weighted_norm_sqr;

/// Tolerance on `|norm − 1|` below which an initial state is silently rescaled.
pub const NORM_RESCALE_TOLERANCE: f64 = 1e-6;

/// Level energies `ε_i` (ħ = 1). Levels are indexed `0..d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SystemSpec {
    energies: Vec<f64>,
}

impl SystemSpec {
    pub fn new(energies: Vec<f64>) -> Result<Self> {
        if energies.is_empty() {
            return Err(Error::InvalidParameter {
                name: "energies",
                reason: "at least one level is required".into(),
            });
        }
        if energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::NonFinite("energies"));
        }
        Ok(SystemSpec { energies })
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }
}

impl TryFrom<Vec<f64>> for SystemSpec {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        SystemSpec::new(v)
    }
}

impl From<SystemSpec> for Vec<f64> {
    fn from(s: SystemSpec) -> Self {
        s.energies
    }
}

/// Reservoir modes: frequencies `ω_n` and quadrature weights `w_n` for `∫dk`.
///
/// Negative frequencies are allowed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid", into = "RawGrid")]
pub struct ReservoirGrid {
    frequencies: Vec<f64>,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    frequencies: Vec<f64>,
    weights: Vec<f64>,
}

impl ReservoirGrid {
    pub fn new(frequencies: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if frequencies.is_empty() {
            return Err(Error::InvalidParameter {
                name: "n_modes",
                reason: "at least one mode is required".into(),
            });
        }
        if weights.len() != frequencies.len() {
            return Err(Error::DimensionMismatch {
                what: "reservoir weights",
                expected: frequencies.len(),
                got: weights.len(),
            });
        }
        if frequencies.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite("reservoir frequencies"));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite("reservoir weights"));
        }
        if weights.iter().any(|&w| w <= 0.0) {
            return Err(Error::InvalidParameter {
                name: "weights",
                reason: "quadrature weights must be strictly positive".into(),
            });
        }
        Ok(ReservoirGrid {
            frequencies,
            weights,
        })
    }

    /// A single mode of unit weight.
    pub fn single_mode(frequency: f64) -> Result<Self> {
        Self::new(vec![frequency], vec![1.0])
    }

    pub fn n_modes(&self) -> usize {
        self.frequencies.len()
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weighted mean spacing between adjacent frequencies, where each gap is
    /// weighted by the coupling mass `w_n |g_n|²` of the modes around it.
    ///
    /// Returns `None` for a single mode.
    pub fn mean_spacing(&self, coupling: &[C64]) -> Option<f64> {
        let n = self.n_modes();
        if n < 2 {
            return None;
        }
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| self.frequencies[a].total_cmp(&self.frequencies[b]));
        let mass: Vec<f64> = idx
            .iter()
            .map(|&k| self.weights[k] * coupling[k].norm_sqr())
            .collect();
        let total: f64 = mass.iter().sum();
        let mut acc = 0.0;
        let mut norm = 0.0;
        for (pos, &k) in idx.iter().enumerate() {
            let lo = if pos > 0 { idx[pos - 1] } else { idx[pos + 1] };
            let gap = (self.frequencies[k] - self.frequencies[lo]).abs();
            let p = if total > 0.0 { mass[pos] } else { 1.0 };
            acc += p * gap;
            norm += p;
        }
        Some(acc / norm)
    }
}

impl TryFrom<RawGrid> for ReservoirGrid {
    type Error = Error;
    fn try_from(r: RawGrid) -> Result<Self> {
        ReservoirGrid::new(r.frequencies, r.weights)
    }
}

impl From<ReservoirGrid> for RawGrid {
    fn from(g: ReservoirGrid) -> Self {
        RawGrid {
            frequencies: g.frequencies,
            weights: g.weights,
        }
    }
}

/// Form factors `f_ij(ω_n)`: the amplitude for the transition `|j⟩ → |i⟩`
/// to create a boson in mode `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<Vec<C64>>>", into = "Vec<Vec<Vec<C64>>>")]
pub struct FormFactorSet {
    d: usize,
    n_modes: usize,
    values: Vec<C64>,
}

impl FormFactorSet {
    pub fn zeros(d: usize, n_modes: usize) -> Self {
        FormFactorSet {
            d,
            n_modes,
            values: vec![C64::new(0.0, 0.0); d * d * n_modes],
        }
    }

    /// Builds from a nested `[i][j][n]` array.
    pub fn from_nested(values: Vec<Vec<Vec<C64>>>) -> Result<Self> {
        let d = values.len();
        let n_modes = values
            .first()
            .and_then(|row| row.first())
            .map_or(0, Vec::len);
        let mut out = FormFactorSet::zeros(d, n_modes);
        for (i, row) in values.into_iter().enumerate() {
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    what: "form factor row",
                    expected: d,
                    got: row.len(),
                });
            }
            for (j, channel) in row.into_iter().enumerate() {
                out.set_channel(i, j, channel)?;
            }
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    /// Samples of `f_ij` over the mode grid.
    #[inline]
    pub fn channel(&self, i: usize, j: usize) -> &[C64] {
        let start = (i * self.d + j) * self.n_modes;
        &self.values[start..start + self.n_modes]
    }

    pub fn set_channel(&mut self, i: usize, j: usize, samples: Vec<C64>) -> Result<()> {
        if i >= self.d || j >= self.d {
            return Err(Error::DimensionMismatch {
                what: "form factor level index",
                expected: self.d,
                got: i.max(j) + 1,
            });
        }
        if samples.len() != self.n_modes {
            return Err(Error::DimensionMismatch {
                what: "form factor samples",
                expected: self.n_modes,
                got: samples.len(),
            });
        }
        let start = (i * self.d + j) * self.n_modes;
        self.values[start..start + self.n_modes].copy_from_slice(&samples);
        Ok(())
    }

    pub fn is_zero_channel(&self, i: usize, j: usize) -> bool {
        self.channel(i, j).iter().all(|z| *z == C64::new(0.0, 0.0))
    }

    fn to_nested(&self) -> Vec<Vec<Vec<C64>>> {
        (0..self.d)
            .map(|i| (0..self.d).map(|j| self.channel(i, j).to_vec()).collect())
            .collect()
    }
}

impl TryFrom<Vec<Vec<Vec<C64>>>> for FormFactorSet {
    type Error = Error;
    fn try_from(v: Vec<Vec<Vec<C64>>>) -> Result<Self> {
        FormFactorSet::from_nested(v)
    }
}

impl From<FormFactorSet> for Vec<Vec<Vec<C64>>> {
    fn from(f: FormFactorSet) -> Self {
        f.to_nested()
    }
}

/// A validated problem: immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel", into = "RawModel")]
pub struct Model {
    system: SystemSpec,
    reservoir: ReservoirGrid,
    formfactors: FormFactorSet,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    energies: SystemSpec,
    reservoir: ReservoirGrid,
    formfactors: FormFactorSet,
}

impl TryFrom<RawModel> for Model {
    type Error = Error;
    fn try_from(r: RawModel) -> Result<Self> {
        build_model(r.energies, r.reservoir, r.formfactors)
    }
}

impl From<Model> for RawModel {
    fn from(m: Model) -> Self {
        RawModel {
            energies: m.system,
            reservoir: m.reservoir,
            formfactors: m.formfactors,
        }
    }
}

/// Assembles a model restricted to the single-excitation sector.
///
/// No numerical work happens here; only consistency checks.
pub fn build_model(
    system: SystemSpec,
    reservoir: ReservoirGrid,
    formfactors: FormFactorSet,
) -> Result<Model> {
    if formfactors.dim() != system.dim() {
        return Err(Error::DimensionMismatch {
            what: "form factor levels",
            expected: system.dim(),
            got: formfactors.dim(),
        });
    }
    if formfactors.n_modes() != reservoir.n_modes() {
        return Err(Error::DimensionMismatch {
            what: "form factor samples",
            expected: reservoir.n_modes(),
            got: formfactors.n_modes(),
        });
    }
    if formfactors.values.iter().any(|z| !z.is_finite()) {
        return Err(Error::NonFinite("form factors"));
    }
    Ok(Model {
        system,
        reservoir,
        formfactors,
    })
}

impl Model {
    pub fn dim(&self) -> usize {
        self.system.dim()
    }

    pub fn n_modes(&self) -> usize {
        self.reservoir.n_modes()
    }

    pub fn energies(&self) -> &[f64] {
        self.system.energies()
    }

    pub fn frequencies(&self) -> &[f64] {
        self.reservoir.frequencies()
    }

    pub fn weights(&self) -> &[f64] {
        self.reservoir.weights()
    }

    pub fn system(&self) -> &SystemSpec {
        &self.system
    }

    pub fn reservoir(&self) -> &ReservoirGrid {
        &self.reservoir
    }

    pub fn formfactors(&self) -> &FormFactorSet {
        &self.formfactors
    }

    /// `f_ij` sampled on the grid.
    #[inline]
    pub fn form_factor(&self, i: usize, j: usize) -> &[C64] {
        self.formfactors.channel(i, j)
    }

    /// Largest angular frequency present in the sector Hamiltonian:
    /// `max(|ε_i|, |ε_i + ω_n|)`.
    pub fn max_frequency(&self) -> f64 {
        let mut m = 0.0f64;
        for &e in self.energies() {
            m = m.max(e.abs());
            for &w in self.frequencies() {
                m = m.max((e + w).abs());
            }
        }
        m
    }
}

/// Initial data `c_i(0)` and `g_0^i(ω_n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialState {
    pub c0: Vec<C64>,
    pub g0: Vec<Vec<C64>>,
    #[serde(skip, default = "one")]
    rescale: f64,
}

fn one() -> f64 {
    1.0
}

impl InitialState {
    pub fn new(c0: Vec<C64>, g0: Vec<Vec<C64>>) -> Self {
        InitialState {
            c0,
            g0,
            rescale: 1.0,
        }
    }

    /// System state ⊗ vacuum.
    pub fn factorized(c0: Vec<C64>, n_modes: usize) -> Self {
        let d = c0.len();
        Self::new(c0, vec![vec![C64::new(0.0, 0.0); n_modes]; d])
    }

    pub fn is_factorized(&self) -> bool {
        self.g0
            .iter()
            .all(|g| g.iter().all(|z| *z == C64::new(0.0, 0.0)))
    }

    /// `Σ|c_i|² + Σ(g^i, g^i)`.
    pub fn norm_sqr(&self, weights: &[f64]) -> f64 {
        let c: f64 = self.c0.iter().map(|z| z.norm_sqr()).sum();
        let g: f64 = self.g0.iter().map(|g| weighted_norm_sqr(weights, g)).sum();
        c + g
    }

    /// Factor applied by [`validate_initial_state`] (1 if untouched).
    pub fn rescale_factor(&self) -> f64 {
        self.rescale
    }

    /// Multiplies every amplitude by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        InitialState {
            c0: self.c0.iter().map(|z| z * s).collect(),
            g0: self
                .g0
                .iter()
                .map(|g| g.iter().map(|z| z * s).collect())
                .collect(),
            rescale: self.rescale * s,
        }
    }

    fn check_dims(&self, model: &Model) -> Result<()> {
        if self.c0.len() != model.dim() {
            return Err(Error::DimensionMismatch {
                what: "initial amplitudes c0",
                expected: model.dim(),
                got: self.c0.len(),
            });
        }
        if self.g0.len() != model.dim() {
            return Err(Error::DimensionMismatch {
                what: "initial mode functions g0",
                expected: model.dim(),
                got: self.g0.len(),
            });
        }
        for g in &self.g0 {
            if g.len() != model.n_modes() {
                return Err(Error::DimensionMismatch {
                    what: "initial mode function samples",
                    expected: model.n_modes(),
                    got: g.len(),
                });
            }
        }
        if self.c0.iter().chain(self.g0.iter().flatten()).any(|z| !z.is_finite()) {
            return Err(Error::NonFinite("initial state"));
        }
        Ok(())
    }
}

/// Checks dimensions and the unit norm. Near-unit states (deviation below
/// [`NORM_RESCALE_TOLERANCE`]) are rescaled; the factor is kept on the result.
pub fn validate_initial_state(model: &Model, state: &InitialState) -> Result<InitialState> {
    state.check_dims(model)?;
    let n2 = state.norm_sqr(model.weights());
    if n2 == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let norm = n2.sqrt();
    let deviation = (norm - 1.0).abs();
    if deviation > NORM_RESCALE_TOLERANCE {
        return Err(Error::NotNormalized {
            deviation,
            tolerance: NORM_RESCALE_TOLERANCE,
        });
    }
    if norm == 1.0 {
        return Ok(state.clone());
    }
    let out = state.scaled(1.0 / norm);
    if deviation > 1e-12 {
        log::debug!("initial state rescaled by {}", 1.0 / norm);
    }
    Ok(out)
}
