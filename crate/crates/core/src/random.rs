//! Random models and initial states for property tests and benchmarks.

use num_complex::Complex64 as C64;
use rand::Rng;

use crate::model::{build_model, FormFactorSet, InitialState, Model, ReservoirGrid, SystemSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomModelSpec {
    pub d: usize,
    pub n_modes: usize,
    pub energy_range: (f64, f64),
    pub frequency_range: (f64, f64),
    /// Each form factor sample has modulus at most `coupling_scale`.
    pub coupling_scale: f64,
}

impl RandomModelSpec {
    pub fn new(d: usize, n_modes: usize) -> Self {
        RandomModelSpec {
            d,
            n_modes,
            energy_range: (-1.0, 1.0),
            frequency_range: (-1.5, 2.0),
            coupling_scale: 0.3,
        }
    }
}

pub fn random_complex<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> C64 {
    // uniform in the disc of radius `scale`
    let r = scale * rng.gen::<f64>().sqrt();
    C64::from_polar(r, rng.gen_range(0.0..std::f64::consts::TAU))
}

/// Random energies, frequencies, weights (mean `1/N`) and all `d²` channels.
pub fn random_model<R: Rng + ?Sized>(rng: &mut R, spec: &RandomModelSpec) -> Model {
    let (elo, ehi) = spec.energy_range;
    let (wlo, whi) = spec.frequency_range;
    let n = spec.n_modes;
    let energies = (0..spec.d).map(|_| rng.gen_range(elo..=ehi)).collect();
    let freqs = (0..n).map(|_| rng.gen_range(wlo..=whi)).collect();
    let weights = (0..n)
        .map(|_| rng.gen_range(0.5..1.5) / n as f64)
        .collect();
    let mut ff = FormFactorSet::zeros(spec.d, n);
    for i in 0..spec.d {
        for j in 0..spec.d {
            let samples = (0..n).map(|_| random_complex(rng, spec.coupling_scale)).collect();
            ff.set_channel(i, j, samples).expect("sizes match");
        }
    }
    build_model(
        SystemSpec::new(energies).expect("finite energies"),
        ReservoirGrid::new(freqs, weights).expect("positive weights"),
        ff,
    )
    .expect("consistent model")
}

/// Unit vector `c(0)`, vacuum reservoir.
pub fn random_factorized_state<R: Rng + ?Sized>(rng: &mut R, d: usize, n_modes: usize) -> InitialState {
    let c: Vec<C64> = (0..d).map(|_| random_complex(rng, 1.0)).collect();
    let norm = c.iter().map(C64::norm_sqr).sum::<f64>().sqrt();
    InitialState::factorized(c.into_iter().map(|z| z / norm).collect(), n_modes)
}

/// Normalized state with a one-boson component carrying roughly
/// `boson_fraction` of the norm.
pub fn random_correlated_state<R: Rng + ?Sized>(
    rng: &mut R,
    model: &Model,
    boson_fraction: f64,
) -> InitialState {
    let (d, n) = (model.dim(), model.n_modes());
    let c: Vec<C64> = (0..d).map(|_| random_complex(rng, 1.0)).collect();
    let g: Vec<Vec<C64>> = (0..d)
        .map(|_| (0..n).map(|_| random_complex(rng, 1.0)).collect())
        .collect();
    let raw = InitialState::new(c, vec![vec![C64::new(0.0, 0.0); n]; d]);
    let cn = raw.norm_sqr(model.weights()).sqrt();
    let gs = InitialState::new(vec![C64::new(0.0, 0.0); d], g);
    let gn = gs.norm_sqr(model.weights()).sqrt();
    let a = (1.0 - boson_fraction).sqrt() / cn;
    let b = boson_fraction.sqrt() / gn;
    InitialState::new(
        raw.c0.iter().map(|z| z * a).collect(),
        gs.g0.iter().map(|g| g.iter().map(|z| z * b).collect()).collect(),
    )
}
