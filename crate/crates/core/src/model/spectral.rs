//! Spectral-density families and their discretization onto a finite mode grid.
//!
//! Analytic families are discretized in the cumulative-mass variable
//! `u = F(ω) ∈ (0, 1)`: nodes are placed in `u` (midpoint or Gauss–Legendre)
//! and mapped back through the quantile function, so mode density follows the
//! spectral weight. The resulting weights `w_n = Δu_n · M / J(ω_n)` are the
//! quadrature weights for `∫dω`, and the coupling is `g_n = √J(ω_n)`.
//! Tabulated densities are discretized directly in `ω`.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use super::ReservoirGrid;
use crate::error::{Error, Result};

/// Default fraction of total spectral weight dropped when truncating tails.
pub const DEFAULT_MASS_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpectralFamily {
    /// `J(ω) = S (γ/π) / ((ω − ω₀)² + γ²)`, `γ` the half width.
    Lorentzian {
        center: f64,
        width: f64,
        strength: f64,
    },
    /// `J(ω) = S exp(−(ω − ω₀)²/2σ²) / (σ√2π)`.
    Gaussian {
        center: f64,
        width: f64,
        strength: f64,
    },
    /// `J(ω) = α ω exp(−ω/ω_c)` for `ω ≥ 0`.
    OhmicExpCutoff { alpha: f64, cutoff: f64 },
    /// Piecewise-linear `J` through the given points. A single point is an
    /// atom of mass `values[0]`.
    Tabulated {
        frequencies: Vec<f64>,
        values: Vec<f64>,
    },
}

fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

impl SpectralFamily {
    pub fn validate(&self) -> Result<()> {
        match self {
            SpectralFamily::Lorentzian {
                center,
                width,
                strength,
            }
            | SpectralFamily::Gaussian {
                center,
                width,
                strength,
            } => {
                if !center.is_finite() {
                    return Err(Error::NonFinite("center"));
                }
                if !(width.is_finite() && *width > 0.0) {
                    return Err(invalid("width", "must be strictly positive"));
                }
                if !(strength.is_finite() && *strength >= 0.0) {
                    return Err(invalid("strength", "must be non-negative"));
                }
            }
            SpectralFamily::OhmicExpCutoff { alpha, cutoff } => {
                if !(alpha.is_finite() && *alpha >= 0.0) {
                    return Err(invalid("alpha", "must be non-negative"));
                }
                if !(cutoff.is_finite() && *cutoff > 0.0) {
                    return Err(invalid("cutoff", "must be strictly positive"));
                }
            }
            SpectralFamily::Tabulated {
                frequencies,
                values,
            } => {
                if frequencies.is_empty() {
                    return Err(invalid("frequencies", "table is empty"));
                }
                if frequencies.len() != values.len() {
                    return Err(Error::DimensionMismatch {
                        what: "tabulated values",
                        expected: frequencies.len(),
                        got: values.len(),
                    });
                }
                if frequencies.iter().chain(values).any(|x| !x.is_finite()) {
                    return Err(Error::NonFinite("tabulated spectral density"));
                }
                if frequencies.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(invalid("frequencies", "must be strictly increasing"));
                }
                if values.iter().any(|&v| v < 0.0) {
                    return Err(invalid("values", "spectral density must be non-negative"));
                }
            }
        }
        Ok(())
    }

    /// `J(ω)`.
    pub fn density(&self, omega: f64) -> f64 {
        match self {
            SpectralFamily::Lorentzian {
                center,
                width,
                strength,
            } => {
                let x = omega - center;
                strength * width / PI / (x * x + width * width)
            }
            SpectralFamily::Gaussian {
                center,
                width,
                strength,
            } => strength * normal(*center, *width).pdf(omega),
            SpectralFamily::OhmicExpCutoff { alpha, cutoff } => {
                if omega < 0.0 {
                    0.0
                } else {
                    alpha * omega * (-omega / cutoff).exp()
                }
            }
            SpectralFamily::Tabulated {
                frequencies,
                values,
            } => interpolate(frequencies, values, omega),
        }
    }

    /// `∫ J(ω) dω` over the whole line.
    pub fn total_mass(&self) -> f64 {
        match self {
            SpectralFamily::Lorentzian { strength, .. }
            | SpectralFamily::Gaussian { strength, .. } => *strength,
            SpectralFamily::OhmicExpCutoff { alpha, cutoff } => alpha * cutoff * cutoff,
            SpectralFamily::Tabulated {
                frequencies,
                values,
            } => {
                if frequencies.len() == 1 {
                    values[0]
                } else {
                    frequencies
                        .windows(2)
                        .zip(values.windows(2))
                        .map(|(f, v)| 0.5 * (f[1] - f[0]) * (v[0] + v[1]))
                        .sum()
                }
            }
        }
    }

    /// Normalized cumulative mass `F(ω)` of an analytic family.
    fn cdf(&self, omega: f64) -> f64 {
        match self {
            SpectralFamily::Lorentzian { center, width, .. } => {
                0.5 + ((omega - center) / width).atan() / PI
            }
            SpectralFamily::Gaussian { center, width, .. } => normal(*center, *width).cdf(omega),
            SpectralFamily::OhmicExpCutoff { cutoff, .. } => {
                if omega <= 0.0 {
                    0.0
                } else {
                    let x = omega / cutoff;
                    -(-x).exp_m1() - x * (-x).exp()
                }
            }
            SpectralFamily::Tabulated { .. } => unreachable!("tabulated families are not mapped"),
        }
    }

    /// Quantile `F⁻¹(u)` of an analytic family, `0 < u < 1`.
    fn quantile(&self, u: f64) -> f64 {
        match self {
            SpectralFamily::Lorentzian { center, width, .. } => {
                center + width * (PI * (u - 0.5)).tan()
            }
            SpectralFamily::Gaussian { center, width, .. } => {
                // the library quantile is only accurate to ~1e-9; polish with Newton
                let dist = normal(*center, *width);
                let mut x = dist.inverse_cdf(u);
                for _ in 0..3 {
                    let p = dist.pdf(x);
                    if p <= 0.0 {
                        break;
                    }
                    x -= (dist.cdf(x) - u) / p;
                }
                x
            }
            SpectralFamily::OhmicExpCutoff { cutoff, .. } => {
                // F is monotone on [0, ∞); bracket then bisect to full precision.
                let mut hi = 1.0;
                while self.cdf(hi * cutoff) < u {
                    hi *= 2.0;
                }
                let mut lo = 0.0;
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid == lo || mid == hi {
                        break;
                    }
                    if self.cdf(mid * cutoff) < u {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi) * cutoff
            }
            SpectralFamily::Tabulated { .. } => unreachable!("tabulated families are not mapped"),
        }
    }

    fn is_one_sided(&self) -> bool {
        matches!(self, SpectralFamily::OhmicExpCutoff { .. })
    }
}

fn normal(center: f64, width: f64) -> Normal {
    Normal::new(center, width).expect("validated gaussian parameters")
}

/// Linear interpolation, zero outside the table.
fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if xs.len() == 1 {
        return if x == xs[0] { ys[0] } else { 0.0 };
    }
    if x < xs[0] || x > xs[xs.len() - 1] {
        return 0.0;
    }
    let k = match xs.binary_search_by(|p| p.total_cmp(&x)) {
        Ok(k) => return ys[k],
        Err(k) => k,
    };
    let (x0, x1) = (xs[k - 1], xs[k]);
    let t = (x - x0) / (x1 - x0);
    ys[k - 1] * (1.0 - t) + ys[k] * t
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureScheme {
    Midpoint,
    GaussLegendre,
}

/// Discretization settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Discretization {
    pub n_modes: usize,
    pub scheme: QuadratureScheme,
    /// Explicit frequency interval. When absent, the tails are truncated so
    /// that `mass_threshold` of the total weight is dropped, and the dropped
    /// mass is folded back into the couplings.
    pub support: Option<(f64, f64)>,
    pub mass_threshold: f64,
}

impl Discretization {
    pub fn new(n_modes: usize, scheme: QuadratureScheme) -> Self {
        Discretization {
            n_modes,
            scheme,
            support: None,
            mass_threshold: DEFAULT_MASS_THRESHOLD,
        }
    }

    pub fn with_support(mut self, lo: f64, hi: f64) -> Self {
        self.support = Some((lo, hi));
        self
    }
}

/// A discretized bath: the mode grid and real non-negative couplings `g_n`
/// with `Σ_n w_n g_n² ≈ ∫ J(ω) dω`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedBath {
    pub grid: ReservoirGrid,
    pub coupling: Vec<f64>,
}

impl DiscretizedBath {
    /// `Σ_n w_n g_n²`.
    pub fn total_weight(&self) -> f64 {
        self.grid
            .weights()
            .iter()
            .zip(&self.coupling)
            .map(|(w, g)| w * g * g)
            .sum()
    }
}

/// Nodes and weights on `[a, b]`, ascending.
fn rule(scheme: QuadratureScheme, n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    match scheme {
        QuadratureScheme::Midpoint => {
            let h = (b - a) / n as f64;
            (0..n).map(|k| (a + (k as f64 + 0.5) * h, h)).collect()
        }
        QuadratureScheme::GaussLegendre => {
            let gl = GaussLegendre::new(NonZeroUsize::new(n).expect("n_modes >= 1"));
            let half = 0.5 * (b - a);
            let mut nodes: Vec<(f64, f64)> = gl
                .as_node_weight_pairs()
                .iter()
                .map(|&(x, w)| (a + half * (x + 1.0), half * w))
                .collect();
            nodes.sort_by(|p, q| p.0.total_cmp(&q.0));
            nodes
        }
    }
}

/// Samples a spectral family onto `settings.n_modes` reservoir modes.
pub fn discretize_spectral_family(
    family: &SpectralFamily,
    settings: &Discretization,
) -> Result<DiscretizedBath> {
    family.validate()?;
    if settings.n_modes == 0 {
        return Err(invalid("n_modes", "must be at least 1"));
    }
    if let Some((lo, hi)) = settings.support {
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(invalid("support", "unbounded support requires a cutoff"));
        }
        if hi <= lo {
            return Err(invalid("support", "upper bound must exceed lower bound"));
        }
    }
    if family.total_mass() <= 0.0 {
        return Err(invalid("family", "zero total spectral weight"));
    }
    match family {
        SpectralFamily::Tabulated {
            frequencies,
            values,
        } => discretize_tabulated(frequencies, values, settings),
        _ => discretize_mapped(family, settings),
    }
}

fn discretize_mapped(family: &SpectralFamily, settings: &Discretization) -> Result<DiscretizedBath> {
    let total = family.total_mass();
    let (u_lo, u_hi, fold) = match settings.support {
        Some((lo, hi)) => (family.cdf(lo), family.cdf(hi), 1.0),
        None => {
            let tau = settings.mass_threshold;
            if !(tau > 0.0 && tau < 1.0) {
                return Err(invalid(
                    "mass_threshold",
                    "unbounded support requires a cutoff: threshold must lie in (0, 1)",
                ));
            }
            let (lo, hi) = if family.is_one_sided() {
                (0.0, 1.0 - tau)
            } else {
                (0.5 * tau, 1.0 - 0.5 * tau)
            };
            (lo, hi, 1.0 / (hi - lo))
        }
    };
    if u_hi - u_lo <= 0.0 {
        return Err(invalid("support", "zero total weight inside the support"));
    }
    let mut frequencies = Vec::with_capacity(settings.n_modes);
    let mut weights = Vec::with_capacity(settings.n_modes);
    let mut coupling = Vec::with_capacity(settings.n_modes);
    for (u, du) in rule(settings.scheme, settings.n_modes, u_lo, u_hi) {
        let omega = family.quantile(u);
        let j = family.density(omega);
        if j.is_nan() || j <= 0.0 || !omega.is_finite() {
            return Err(Error::NonFinite("discretized spectral density"));
        }
        frequencies.push(omega);
        weights.push(du * total / j);
        coupling.push((j * fold).sqrt());
    }
    Ok(DiscretizedBath {
        grid: ReservoirGrid::new(frequencies, weights)?,
        coupling,
    })
}

fn discretize_tabulated(
    xs: &[f64],
    ys: &[f64],
    settings: &Discretization,
) -> Result<DiscretizedBath> {
    if xs.len() == 1 {
        let inside = settings
            .support
            .is_none_or(|(lo, hi)| lo <= xs[0] && xs[0] <= hi);
        if !inside {
            return Err(invalid("support", "zero total weight inside the support"));
        }
        return Ok(DiscretizedBath {
            grid: ReservoirGrid::single_mode(xs[0])?,
            coupling: vec![ys[0].sqrt()],
        });
    }
    let (mut lo, mut hi) = (xs[0], xs[xs.len() - 1]);
    if let Some((a, b)) = settings.support {
        lo = lo.max(a);
        hi = hi.min(b);
    }
    if hi <= lo {
        return Err(invalid("support", "zero total weight inside the support"));
    }
    let nodes = rule(settings.scheme, settings.n_modes, lo, hi);
    let coupling: Vec<f64> = nodes
        .iter()
        .map(|&(x, _)| interpolate(xs, ys, x).sqrt())
        .collect();
    if coupling.iter().all(|&g| g == 0.0) {
        return Err(invalid("family", "zero total spectral weight"));
    }
    let (frequencies, weights) = nodes.into_iter().unzip();
    Ok(DiscretizedBath {
        grid: ReservoirGrid::new(frequencies, weights)?,
        coupling,
    })
}
