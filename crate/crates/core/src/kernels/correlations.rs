use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::Rng;

use super::check_times;
use crate::error::{Error, Result};
use crate::linalg::min_hermitian_eigenvalue;
use crate::model::{InitialState, Model};

/// Eigenvalue floor for positive-semidefinite verdicts.
pub const PSD_TOLERANCE: f64 = 1e-10;

/// Mode data behind the correlation functions: one sampled vector per
/// combined index `x ∈ {(m,n)} ∪ {p}`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct ModeSource {
    pub frequencies: Vec<f64>,
    pub weights: Vec<f64>,
    pub vectors: Vec<Vec<C64>>,
}

impl ModeSource {
    pub fn new(model: &Model, initial: &InitialState) -> Self {
        let d = model.dim();
        let mut vectors = Vec::with_capacity(d * d + d);
        for m in 0..d {
            for n in 0..d {
                vectors.push(model.form_factor(m, n).to_vec());
            }
        }
        vectors.extend(initial.g0.iter().cloned());
        ModeSource {
            frequencies: model.frequencies().to_vec(),
            weights: model.weights().to_vec(),
            vectors,
        }
    }

    /// `C_xy(t) = Σ_n w_n conj(v_x(ω_n)) v_y(ω_n) e^{−i ω_n t}`.
    pub fn evaluate(&self, t: f64) -> DMatrix<C64> {
        let k = self.vectors.len();
        let ph: Vec<C64> = self
            .frequencies
            .iter()
            .zip(&self.weights)
            .map(|(&w, &wt)| C64::from_polar(wt, -w * t))
            .collect();
        DMatrix::from_fn(k, k, |x, y| {
            let (vx, vy) = (&self.vectors[x], &self.vectors[y]);
            let mut acc = C64::new(0.0, 0.0);
            for q in 0..ph.len() {
                acc += vx[q].conj() * vy[q] * ph[q];
            }
            acc
        })
    }
}

/// Reservoir correlation functions `a_{mn,pq}(t)`, `b_{mn,p}(t)`, `c_{p,q}(t)`
/// tabulated on a time grid.
///
/// Internally all three are blocks of one matrix-valued function over the
/// combined index set `{(m,n)} ∪ {p}` of size `d² + d`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSet {
    d: usize,
    times: Vec<f64>,
    tables: Vec<DMatrix<C64>>,
    source: Option<ModeSource>,
}

impl CorrelationSet {
    /// A table-only set (no mode data); off-grid evaluation interpolates.
    pub fn from_tables(d: usize, times: Vec<f64>, tables: Vec<DMatrix<C64>>) -> Result<Self> {
        if times.len() != tables.len() {
            return Err(Error::DimensionMismatch {
                what: "correlation tables",
                expected: times.len(),
                got: tables.len(),
            });
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidTimes("times must be strictly increasing".into()));
        }
        let k = d * d + d;
        if let Some(t) = tables.iter().find(|t| t.nrows() != k || t.ncols() != k) {
            return Err(Error::DimensionMismatch {
                what: "correlation table size",
                expected: k,
                got: t.nrows(),
            });
        }
        Ok(CorrelationSet {
            d,
            times,
            tables,
            source: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Full `(d²+d) × (d²+d)` table at grid index `ti`.
    pub fn table(&self, ti: usize) -> &DMatrix<C64> {
        &self.tables[ti]
    }

    #[inline]
    pub fn pair_index(&self, m: usize, n: usize) -> usize {
        m * self.d + n
    }

    #[inline]
    pub fn level_index(&self, p: usize) -> usize {
        self.d * self.d + p
    }

    /// `a_{mn,pq}(t_i)`.
    pub fn a(&self, ti: usize, m: usize, n: usize, p: usize, q: usize) -> C64 {
        self.tables[ti][(self.pair_index(m, n), self.pair_index(p, q))]
    }

    /// `b_{mn,p}(t_i)`.
    pub fn b(&self, ti: usize, m: usize, n: usize, p: usize) -> C64 {
        self.tables[ti][(self.pair_index(m, n), self.level_index(p))]
    }

    /// `c_{p,q}(t_i)`.
    pub fn c(&self, ti: usize, p: usize, q: usize) -> C64 {
        self.tables[ti][(self.level_index(p), self.level_index(q))]
    }

    /// The full matrix at an arbitrary time: exact mode sums when the mode
    /// data is available, linear interpolation of the tables otherwise.
    pub fn evaluate(&self, t: f64) -> Result<DMatrix<C64>> {
        if let Some(src) = &self.source {
            return Ok(src.evaluate(t));
        }
        let (first, last) = match (self.times.first(), self.times.last()) {
            (Some(&a), Some(&b)) => (a, b),
            _ => return Err(Error::OutOfRange(t)),
        };
        if t < first || t > last || !t.is_finite() {
            return Err(Error::OutOfRange(t));
        }
        let k = self.times.partition_point(|&s| s < t);
        if k < self.times.len() && self.times[k] == t {
            return Ok(self.tables[k].clone());
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let s = (t - t0) / (t1 - t0);
        Ok(self.tables[k - 1].scale(1.0 - s) + self.tables[k].scale(s))
    }
}

/// Tabulates `a`, `b`, `c` with exponent `e^{−i ω_n t}` (no level shift).
pub fn correlations(model: &Model, initial: &InitialState, times: &[f64]) -> Result<CorrelationSet> {
    check_times(times)?;
    if initial.g0.len() != model.dim() || initial.g0.iter().any(|g| g.len() != model.n_modes()) {
        return Err(Error::DimensionMismatch {
            what: "initial mode functions g0",
            expected: model.n_modes(),
            got: initial.g0.first().map_or(0, Vec::len),
        });
    }
    let source = ModeSource::new(model, initial);
    let tables = times.iter().map(|&t| source.evaluate(t)).collect();
    Ok(CorrelationSet {
        d: model.dim(),
        times: times.to_vec(),
        tables,
        source: Some(source),
    })
}

/// Result of the positivity check on the block Gram matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GramReport {
    pub min_eigenvalue: f64,
    /// Smallest `x†Gx / x†x` over the random probe vectors (∞ if none).
    pub min_quadratic_form: f64,
    pub dimension: usize,
}

impl GramReport {
    pub fn passed(&self) -> bool {
        self.min_eigenvalue >= -PSD_TOLERANCE
    }
}

/// Assembles the Gram matrix `G[(α,x),(β,y)] = C_xy(t_α − t_β)` over the
/// sample times and every combined index, and reports its smallest
/// eigenvalue. The cross blocks `b` and their conjugates enter through the
/// Hermitian structure of `C`.
pub fn gram_positivity_check<R: Rng + ?Sized>(
    corr: &CorrelationSet,
    sample_times: &[f64],
    n_random_vectors: usize,
    rng: &mut R,
) -> Result<GramReport> {
    check_times(sample_times)?;
    let k = corr.d * corr.d + corr.d;
    let s = sample_times.len();
    let dim = k * s;
    let mut gram = DMatrix::<C64>::zeros(dim, dim);
    for (a, &ta) in sample_times.iter().enumerate() {
        for (b, &tb) in sample_times.iter().enumerate() {
            let block = corr.evaluate(ta - tb)?;
            gram.view_mut((a * k, b * k), (k, k)).copy_from(&block);
        }
    }
    let min_eigenvalue = min_hermitian_eigenvalue(&gram);
    let mut min_quadratic_form = f64::INFINITY;
    for _ in 0..n_random_vectors {
        let x = DVector::<C64>::from_fn(dim, |_, _| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let nx = x.norm_squared();
        if nx == 0.0 {
            continue;
        }
        let q = (x.adjoint() * &gram * &x)[(0, 0)].re / nx;
        min_quadratic_form = min_quadratic_form.min(q);
    }
    Ok(GramReport {
        min_eigenvalue,
        min_quadratic_form,
        dimension: dim,
    })
}
