//! Small numerical helpers shared by every module: the weighted inner product,
//! Hermitian eigenvalue checks and a dense rank-4 tensor.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

/// `(f, g) = Σ_n w_n conj(f_n) g_n`.
///
/// This is the only inner product on mode functions used anywhere in the crate.
#[inline]
pub fn weighted_inner(weights: &[f64], f: &[C64], g: &[C64]) -> C64 {
    debug_assert_eq!(weights.len(), f.len());
    debug_assert_eq!(weights.len(), g.len());
    let mut acc = C64::new(0.0, 0.0);
    for ((w, a), b) in weights.iter().zip(f).zip(g) {
        acc += a.conj() * b * *w;
    }
    acc
}

/// `(f, f)` as a real number.
#[inline]
pub fn weighted_norm_sqr(weights: &[f64], f: &[C64]) -> f64 {
    weights.iter().zip(f).map(|(w, a)| w * a.norm_sqr()).sum()
}

/// `max_ij |A_ij - conj(A_ji)|`.
pub fn hermiticity_defect(a: &DMatrix<C64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `(A + A†) / 2`.
pub fn hermitian_part(a: &DMatrix<C64>) -> DMatrix<C64> {
    (a + a.adjoint()).scale(0.5)
}

/// Eigenvalues of the Hermitian part of `a`, ascending.
pub fn hermitian_eigenvalues(a: &DMatrix<C64>) -> Vec<f64> {
    if a.nrows() == 0 {
        return Vec::new();
    }
    let h = hermitian_part(a);
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Smallest eigenvalue of the Hermitian part of `a` (0 for an empty matrix).
pub fn min_hermitian_eigenvalue(a: &DMatrix<C64>) -> f64 {
    hermitian_eigenvalues(a).first().copied().unwrap_or(0.0)
}

/// Dense rank-4 tensor `T[a, b, c, e]` with all four indices running over `0..d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4 {
    d: usize,
    data: Vec<C64>,
}

impl Tensor4 {
    pub fn zeros(d: usize) -> Self {
        Tensor4 {
            d,
            data: vec![C64::new(0.0, 0.0); d * d * d * d],
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    fn offset(&self, a: usize, b: usize, c: usize, e: usize) -> usize {
        ((a * self.d + b) * self.d + c) * self.d + e
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize, c: usize, e: usize) -> C64 {
        self.data[self.offset(a, b, c, e)]
    }

    #[inline]
    pub fn set(&mut self, a: usize, b: usize, c: usize, e: usize, v: C64) {
        let k = self.offset(a, b, c, e);
        self.data[k] = v;
    }

    /// Row-major view over `(a, b, c, e)`.
    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn max_abs_diff(&self, other: &Tensor4) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }
}
