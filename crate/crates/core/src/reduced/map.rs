use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::PSD_TOLERANCE;
use crate::linalg::{min_hermitian_eigenvalue, weighted_inner, Tensor4};
use crate::model::{InitialState, Model};
use crate::solvers::{reconstruct_modes_at, solve_volterra};

/// Bound on `max_mn |Σ_i S_{im,in} − δ_mn|` for a trace-preserving verdict.
pub const TRACE_TOLERANCE: f64 = 1e-8;

/// `L(t)` and `R(t)` from the `d` basis runs `c(0) = e_l`, `g_0 = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorizedPropagators {
    pub times: Vec<f64>,
    /// `c_k(t) = Σ_l L_kl(t) c_l(0)`.
    pub l: Vec<DMatrix<C64>>,
    /// `(g_t^k, g_t^h) = Σ_mn R_{km,hn}(t) conj(c_m(0)) c_n(0)`.
    pub r: Vec<Tensor4>,
}

impl FactorizedPropagators {
    pub fn compute(model: &Model, times: &[f64], dt: f64) -> Result<Self> {
        let (d, n) = (model.dim(), model.n_modes());
        // gamma[m][ti][k] = mode function g^k at times[ti] for c(0) = e_m
        let mut columns = Vec::with_capacity(d);
        let mut gamma = Vec::with_capacity(d);
        for m in 0..d {
            let mut c0 = vec![C64::new(0.0, 0.0); d];
            c0[m] = C64::new(1.0, 0.0);
            let basis = InitialState::factorized(c0, n);
            let run = solve_volterra(model, &basis, times, dt)?;
            gamma.push(reconstruct_modes_at(model, &basis, &run.history, times)?);
            columns.push(run.amplitudes);
        }
        let w = model.weights();
        let mut l = Vec::with_capacity(times.len());
        let mut r = Vec::with_capacity(times.len());
        for ti in 0..times.len() {
            l.push(DMatrix::from_fn(d, d, |k, col| columns[col][ti][k]));
            let mut rt = Tensor4::zeros(d);
            for k in 0..d {
                for m in 0..d {
                    for h in 0..d {
                        for nn in 0..d {
                            let v = weighted_inner(w, &gamma[m][ti][k], &gamma[nn][ti][h]);
                            rt.set(k, m, h, nn, v);
                        }
                    }
                }
            }
            r.push(rt);
        }
        Ok(FactorizedPropagators {
            times: times.to_vec(),
            l,
            r,
        })
    }

    pub fn maps(&self) -> Result<Vec<DynamicalMap>> {
        self.times
            .iter()
            .zip(self.l.iter().zip(&self.r))
            .map(|(&t, (l, r))| assemble_map(l, r, t))
            .collect()
    }
}

/// Column `l` of `L(t)` is the amplitude solution started from `e_l`.
pub fn propagator_l(model: &Model, times: &[f64], dt: f64) -> Result<Vec<DMatrix<C64>>> {
    Ok(FactorizedPropagators::compute(model, times, dt)?.l)
}

/// `R_{km,hn}(t) = (γ_t^{k,m}, γ_t^{h,n})` with `γ^{k,m}` the mode function
/// `g^k` of the run started from `e_m`.
pub fn overlap_r(model: &Model, times: &[f64], dt: f64) -> Result<Vec<Tensor4>> {
    Ok(FactorizedPropagators::compute(model, times, dt)?.r)
}

/// `A_t` at every requested time.
pub fn dynamical_maps(model: &Model, times: &[f64], dt: f64) -> Result<Vec<DynamicalMap>> {
    FactorizedPropagators::compute(model, times, dt)?.maps()
}

/// `S_{jm,in}(t) = conj(L_jm(t)) L_in(t) + R_{jm,in}(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicalMap {
    pub t: f64,
    pub l: DMatrix<C64>,
    pub r: Tensor4,
    pub s: Tensor4,
}

pub fn assemble_map(l: &DMatrix<C64>, r: &Tensor4, t: f64) -> Result<DynamicalMap> {
    let d = l.nrows();
    if l.ncols() != d || r.dim() != d {
        return Err(Error::DimensionMismatch {
            what: "L/R dimensions",
            expected: d,
            got: r.dim(),
        });
    }
    let mut s = Tensor4::zeros(d);
    for j in 0..d {
        for m in 0..d {
            for i in 0..d {
                for n in 0..d {
                    s.set(j, m, i, n, l[(j, m)].conj() * l[(i, n)] + r.get(j, m, i, n));
                }
            }
        }
    }
    Ok(DynamicalMap {
        t,
        l: l.clone(),
        r: r.clone(),
        s,
    })
}

impl DynamicalMap {
    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    /// The identity map.
    pub fn identity(d: usize) -> Self {
        assemble_map(&DMatrix::identity(d, d), &Tensor4::zeros(d), 0.0).expect("square")
    }

    /// `A_t(|i⟩⟨j|)`.
    pub fn image_of_unit(&self, i: usize, j: usize) -> DMatrix<C64> {
        let d = self.dim();
        DMatrix::from_fn(d, d, |m, n| self.s.get(n, j, m, i))
    }

    /// `max |S − (conj(L) ⊗ L + R)|`; zero unless the fields were edited.
    pub fn decomposition_defect(&self) -> f64 {
        let rebuilt = assemble_map(&self.l, &self.r, self.t).expect("consistent dims");
        self.s.max_abs_diff(&rebuilt.s)
    }

    /// `max_mn |Σ_i S_{im,in} − δ_mn|`.
    pub fn trace_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for m in 0..d {
            for n in 0..d {
                let mut acc = C64::new(0.0, 0.0);
                for i in 0..d {
                    acc += self.s.get(i, m, i, n);
                }
                if m == n {
                    acc -= 1.0;
                }
                worst = worst.max(acc.norm());
            }
        }
        worst
    }
}

/// `A_t(ρ)_mn = Σ_ij S_{nj,mi} ρ_ij`, the linear extension to all of `M_d`.
pub fn apply_map(map: &DynamicalMap, rho0: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let d = map.dim();
    if rho0.nrows() != d || rho0.ncols() != d {
        return Err(Error::DimensionMismatch {
            what: "input matrix",
            expected: d,
            got: rho0.nrows(),
        });
    }
    Ok(DMatrix::from_fn(d, d, |m, n| {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..d {
            for j in 0..d {
                acc += map.s.get(n, j, m, i) * rho0[(i, j)];
            }
        }
        acc
    }))
}

/// `C = Σ_ij A_t(|i⟩⟨j|) ⊗ |i⟩⟨j|`, row index `m·d + i`, column `n·d + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiMatrix {
    pub t: f64,
    pub matrix: DMatrix<C64>,
}

pub fn choi_matrix(map: &DynamicalMap) -> ChoiMatrix {
    let d = map.dim();
    let matrix = DMatrix::from_fn(d * d, d * d, |row, col| {
        let (m, i) = (row / d, row % d);
        let (n, j) = (col / d, col % d);
        map.s.get(n, j, m, i)
    });
    ChoiMatrix { t: map.t, matrix }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CptpReport {
    pub t: f64,
    pub min_eigenvalue: f64,
    pub trace_defect: f64,
    pub hermiticity_defect: f64,
    pub verdict: bool,
}

pub fn cptp_check(choi: &ChoiMatrix, map: &DynamicalMap) -> CptpReport {
    let min_eigenvalue = min_hermitian_eigenvalue(&choi.matrix);
    let trace_defect = map.trace_defect();
    let hermiticity_defect = crate::linalg::hermiticity_defect(&choi.matrix);
    CptpReport {
        t: choi.t,
        min_eigenvalue,
        trace_defect,
        hermiticity_defect,
        verdict: min_eigenvalue >= -PSD_TOLERANCE && trace_defect < TRACE_TOLERANCE,
    }
}
