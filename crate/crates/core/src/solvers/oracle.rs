use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;

use super::{check_output_times, norm_drift, RunMeta, SectorState, SolverKind, Trajectory};
use crate::error::{Error, Result};
use crate::model::{validate_initial_state, InitialState, Model};

/// Largest sector dimension `d (1 + N)` the dense oracle accepts.
pub const ORACLE_MAX_DIM: usize = 2048;

/// Exact propagator of the sector Hamiltonian on the explicit basis
/// `{|i⟩⊗|Ω⟩} ∪ {|i⟩⊗|1_n⟩}`.
///
/// One-boson basis states are normalized with `√w_n`, so the amplitude of
/// `|i⟩⊗|1_n⟩` is `√w_n g^i(ω_n)` and the coupling element is
/// `⟨i,1_n|Ṽ|j,Ω⟩ = √w_n f_ij(ω_n)`.
#[derive(Debug, Clone)]
pub struct ExactPropagator {
    d: usize,
    n: usize,
    sqrt_w: Vec<f64>,
    hamiltonian: DMatrix<C64>,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<C64>,
}

impl ExactPropagator {
    pub fn new(model: &Model) -> Result<Self> {
        let (d, n) = (model.dim(), model.n_modes());
        let dim = d * (1 + n);
        if dim > ORACLE_MAX_DIM {
            return Err(Error::OracleTooLarge {
                dim,
                limit: ORACLE_MAX_DIM,
            });
        }
        let sqrt_w: Vec<f64> = model.weights().iter().map(|w| w.sqrt()).collect();
        let eps = model.energies();
        let omega = model.frequencies();
        let mut h = DMatrix::<C64>::zeros(dim, dim);
        for i in 0..d {
            h[(i, i)] = C64::new(eps[i], 0.0);
            for q in 0..n {
                let row = d + i * n + q;
                h[(row, row)] = C64::new(eps[i] + omega[q], 0.0);
                for j in 0..d {
                    let v = model.form_factor(i, j)[q] * sqrt_w[q];
                    h[(row, j)] = v;
                    h[(j, row)] = v.conj();
                }
            }
        }
        let eig = SymmetricEigen::new(h.clone());
        Ok(ExactPropagator {
            d,
            n,
            sqrt_w,
            hamiltonian: h,
            eigenvalues: eig.eigenvalues,
            eigenvectors: eig.eigenvectors,
        })
    }

    pub fn hamiltonian(&self) -> &DMatrix<C64> {
        &self.hamiltonian
    }

    /// `max |H − H†|`.
    pub fn hermiticity_defect(&self) -> f64 {
        crate::linalg::hermiticity_defect(&self.hamiltonian)
    }

    /// `U(t) = V e^{−iΛt} V†`.
    pub fn unitary(&self, t: f64) -> DMatrix<C64> {
        let phases = self.eigenvalues.map(|l| C64::from_polar(1.0, -l * t));
        let mut vp = self.eigenvectors.clone();
        for (mut col, p) in vp.column_iter_mut().zip(phases.iter()) {
            col *= *p;
        }
        vp * self.eigenvectors.adjoint()
    }

    /// `‖U(t)†U(t) − 1‖_max`.
    pub fn unitarity_defect(&self, t: f64) -> f64 {
        let u = self.unitary(t);
        let e = u.adjoint() * &u - DMatrix::<C64>::identity(u.nrows(), u.ncols());
        e.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn pack(&self, c: &[C64], g: &[Vec<C64>]) -> DVector<C64> {
        let (d, n) = (self.d, self.n);
        DVector::from_fn(d * (1 + n), |r, _| {
            if r < d {
                c[r]
            } else {
                let (i, q) = ((r - d) / n, (r - d) % n);
                g[i][q] * self.sqrt_w[q]
            }
        })
    }

    fn unpack(&self, psi: &DVector<C64>, t: f64) -> SectorState {
        let (d, n) = (self.d, self.n);
        SectorState {
            t,
            c: (0..d).map(|i| psi[i]).collect(),
            g: (0..d)
                .map(|i| (0..n).map(|q| psi[d + i * n + q] / self.sqrt_w[q]).collect())
                .collect(),
        }
    }

    /// Propagates a (validated) initial state to time `t`.
    pub fn evolve(&self, initial: &InitialState, t: f64) -> SectorState {
        if t == 0.0 {
            return SectorState {
                t,
                c: initial.c0.clone(),
                g: initial.g0.clone(),
            };
        }
        let psi0 = self.pack(&initial.c0, &initial.g0);
        let coeffs = self.eigenvectors.adjoint() * psi0;
        let rotated = DVector::from_fn(coeffs.len(), |k, _| {
            coeffs[k] * C64::from_polar(1.0, -self.eigenvalues[k] * t)
        });
        self.unpack(&(&self.eigenvectors * rotated), t)
    }
}

/// Exact sector state at time `t` by dense diagonalization.
pub fn oracle_expm(model: &Model, initial: &InitialState, t: f64) -> Result<SectorState> {
    let initial = validate_initial_state(model, initial)?;
    if !t.is_finite() {
        return Err(Error::NonFinite("t"));
    }
    Ok(ExactPropagator::new(model)?.evolve(&initial, t))
}

/// Exact states at every requested time from a single diagonalization.
pub fn oracle_trajectory(model: &Model, initial: &InitialState, times: &[f64]) -> Result<Trajectory> {
    let initial = validate_initial_state(model, initial)?;
    check_output_times(times)?;
    let prop = ExactPropagator::new(model)?;
    let states: Vec<SectorState> = times.iter().map(|&t| prop.evolve(&initial, t)).collect();
    let drift = norm_drift(&states, model.weights(), initial.norm_sqr(model.weights()));
    Ok(Trajectory {
        times: times.to_vec(),
        states,
        meta: RunMeta {
            solver: SolverKind::Oracle,
            dt: 0.0,
            steps: 0,
            norm_drift: Some(drift),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_model, FormFactorSet, ReservoirGrid, SystemSpec};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn model() -> Model {
        let grid = ReservoirGrid::new(vec![0.5, 1.5], vec![0.3, 0.7]).unwrap();
        let mut ff = FormFactorSet::zeros(2, 2);
        ff.set_channel(0, 1, vec![c(0.4, 0.1), c(0.2, -0.3)]).unwrap();
        ff.set_channel(1, 1, vec![c(0.0, 0.2), c(0.1, 0.0)]).unwrap();
        build_model(SystemSpec::new(vec![0.0, 1.0]).unwrap(), grid, ff).unwrap()
    }

    #[test]
    fn identity_at_zero() {
        let m = model();
        let s = InitialState::factorized(vec![c(0.6, 0.0), c(0.0, 0.8)], 2);
        let st = oracle_expm(&m, &s, 0.0).unwrap();
        assert_eq!(st.c, s.c0);
        assert_eq!(st.g, s.g0);
    }

    #[test]
    fn hamiltonian_is_hermitian_and_propagator_unitary() {
        let p = ExactPropagator::new(&model()).unwrap();
        assert_eq!(p.hermiticity_defect(), 0.0);
        for &t in &[0.3, 2.0, 10.0] {
            assert!(p.unitarity_defect(t) < 1e-12);
        }
    }

    #[test]
    fn free_phases_without_coupling() {
        let m = build_model(
            SystemSpec::new(vec![0.2, 1.1]).unwrap(),
            ReservoirGrid::new(vec![-0.4], vec![2.0]).unwrap(),
            FormFactorSet::zeros(2, 1),
        )
        .unwrap();
        let g0 = vec![vec![c(0.3, 0.0)], vec![c(0.0, 0.2)]];
        let s = InitialState::new(vec![c(0.7, 0.0), c(0.0, 0.0)], g0);
        let s = s.scaled(1.0 / s.norm_sqr(m.weights()).sqrt());
        let t = 3.3;
        let st = oracle_expm(&m, &s, t).unwrap();
        assert!((st.c[0] - s.c0[0] * C64::from_polar(1.0, -0.2 * t)).norm() < 1e-13);
        let ph = C64::from_polar(1.0, -t * (1.1 - 0.4));
        assert!((st.g[1][0] - s.g0[1][0] * ph).norm() < 1e-13);
    }

    #[test]
    fn dimension_guard() {
        let n = 1100;
        let m = build_model(
            SystemSpec::new(vec![0.0, 1.0]).unwrap(),
            ReservoirGrid::new(vec![0.0; n], vec![1.0; n]).unwrap(),
            FormFactorSet::zeros(2, n),
        )
        .unwrap();
        assert!(matches!(
            ExactPropagator::new(&m).unwrap_err(),
            Error::OracleTooLarge { dim: 2202, .. }
        ));
    }
}
