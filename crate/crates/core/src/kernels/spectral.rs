use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::correlations::{CorrelationSet, ModeSource};
use crate::model::{InitialState, Model};

/// Frequencies closer than this are merged into a single atom.
pub const MERGE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralAtom {
    pub frequency: f64,
    /// Hermitian PSD block over the combined index `{(m,n)} ∪ {p}`.
    pub block: DMatrix<C64>,
}

/// Atomic spectral measure of the correlation functions: the discrete
/// reservoir turns every spectral density into a finite sum of point masses.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDensityMatrix {
    pub d: usize,
    pub atoms: Vec<SpectralAtom>,
}

impl SpectralDensityMatrix {
    /// `Σ_atoms e^{−iωt} J(ω)`.
    pub fn correlation_at(&self, t: f64) -> DMatrix<C64> {
        let k = self.d * self.d + self.d;
        let mut acc = DMatrix::<C64>::zeros(k, k);
        for atom in &self.atoms {
            acc += &atom.block * C64::from_polar(1.0, -atom.frequency * t);
        }
        acc
    }

    /// Rebuilds the correlation tables on the grid of `like`.
    pub fn reconstruct(&self, like: &CorrelationSet) -> Vec<DMatrix<C64>> {
        like.times().iter().map(|&t| self.correlation_at(t)).collect()
    }

    /// Smallest eigenvalue over all atom blocks (0 if there are none).
    pub fn min_eigenvalue(&self) -> f64 {
        self.atoms
            .iter()
            .map(|a| crate::linalg::min_hermitian_eigenvalue(&a.block))
            .fold(0.0, f64::min)
    }
}

/// Builds the atoms `J(ω_n) = w_n v̄ vᵀ` (entry `J_xy = w_n conj(v_x) v_y`)
/// where `v` stacks the form-factor and initial mode-function samples at
/// mode `n`. Modes with vanishing `v` contribute nothing.
pub fn spectral_density_matrix(model: &Model, initial: &InitialState) -> SpectralDensityMatrix {
    let src = ModeSource::new(model, initial);
    let k = src.vectors.len();
    let mut order: Vec<usize> = (0..src.frequencies.len()).collect();
    order.sort_by(|&a, &b| src.frequencies[a].total_cmp(&src.frequencies[b]));

    let mut atoms: Vec<SpectralAtom> = Vec::new();
    for q in order {
        let v: Vec<C64> = src.vectors.iter().map(|vec| vec[q]).collect();
        if v.iter().all(|z| z.norm_sqr() == 0.0) {
            continue;
        }
        let w = src.weights[q];
        let block = DMatrix::from_fn(k, k, |x, y| v[x].conj() * v[y] * w);
        let omega = src.frequencies[q];
        match atoms.last_mut() {
            Some(last) if (omega - last.frequency).abs() <= MERGE_TOLERANCE => last.block += block,
            _ => atoms.push(SpectralAtom {
                frequency: omega,
                block,
            }),
        }
    }
    SpectralDensityMatrix {
        d: model.dim(),
        atoms,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_model, FormFactorSet, ReservoirGrid, SystemSpec};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn zero_model_has_no_atoms() {
        let m = build_model(
            SystemSpec::new(vec![0.0, 1.0]).unwrap(),
            ReservoirGrid::new(vec![0.0, 1.0], vec![1.0, 1.0]).unwrap(),
            FormFactorSet::zeros(2, 2),
        )
        .unwrap();
        let s = InitialState::factorized(vec![c(1.0, 0.0), c(0.0, 0.0)], 2);
        assert!(spectral_density_matrix(&m, &s).atoms.is_empty());
    }

    #[test]
    fn single_mode_single_atom() {
        let f = c(0.3, -0.4);
        let mut ff = FormFactorSet::zeros(1, 1);
        ff.set_channel(0, 0, vec![f]).unwrap();
        let m = build_model(
            SystemSpec::new(vec![0.7]).unwrap(),
            ReservoirGrid::new(vec![1.3], vec![0.5]).unwrap(),
            ff,
        )
        .unwrap();
        let s = InitialState::factorized(vec![c(1.0, 0.0)], 1);
        let sdm = spectral_density_matrix(&m, &s);
        assert_eq!(sdm.atoms.len(), 1);
        assert_eq!(sdm.atoms[0].frequency, 1.3);
        assert!((sdm.atoms[0].block[(0, 0)] - c(0.5 * 0.25, 0.0)).norm() < 1e-15);
        let rank = sdm.atoms[0]
            .block
            .clone()
            .svd(false, false)
            .singular_values
            .iter()
            .filter(|s| **s > 1e-14)
            .count();
        assert_eq!(rank, 1);
    }

    #[test]
    fn degenerate_modes_merge() {
        let mut ff = FormFactorSet::zeros(1, 3);
        ff.set_channel(0, 0, vec![c(1.0, 0.0), c(0.0, 1.0), c(0.5, 0.0)]).unwrap();
        let m = build_model(
            SystemSpec::new(vec![0.0]).unwrap(),
            ReservoirGrid::new(vec![1.0, 1.0 + 1e-13, 2.0], vec![1.0, 1.0, 1.0]).unwrap(),
            ff,
        )
        .unwrap();
        let s = InitialState::factorized(vec![c(1.0, 0.0)], 3);
        let sdm = spectral_density_matrix(&m, &s);
        assert_eq!(sdm.atoms.len(), 2);
        assert!((sdm.atoms[0].block[(0, 0)].re - 2.0).abs() < 1e-15);
        assert!(sdm.min_eigenvalue() >= -1e-15);
    }
}
