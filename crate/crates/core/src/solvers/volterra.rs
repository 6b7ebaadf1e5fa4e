use num_complex::Complex64 as C64;

use super::{check_output_times, check_step, norm_drift, RunMeta, SectorState, SolverKind, Trajectory};
use crate::error::{Error, Result};
use crate::kernels::{inhomogeneity, memory_kernel};
use crate::model::{validate_initial_state, InitialState, Model};

const I: C64 = C64::new(0.0, 1.0);

/// Relative tolerance for matching a requested time to the uniform grid.
const GRID_TOLERANCE: f64 = 1e-9;

/// Amplitudes `c(jh)` on the uniform grid `j = 0..=steps`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeHistory {
    pub dt: f64,
    pub samples: Vec<Vec<C64>>,
}

impl AmplitudeHistory {
    pub fn t_end(&self) -> f64 {
        self.dt * (self.samples.len().saturating_sub(1)) as f64
    }

    /// Grid index of `t`, if `t` lies on the grid within the history.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        grid_index(t, self.dt).and_then(|j| {
            if j < self.samples.len() {
                Ok(j)
            } else {
                Err(Error::InvalidTimes(format!(
                    "amplitude history covers [0, {}] but t = {t} was requested",
                    self.t_end()
                )))
            }
        })
    }
}

fn grid_index(t: f64, dt: f64) -> Result<usize> {
    let x = t / dt;
    let j = x.round();
    if (x - j).abs() > GRID_TOLERANCE * x.abs().max(1.0) {
        return Err(Error::InvalidTimes(format!(
            "t = {t} is not a multiple of the internal step {dt}"
        )));
    }
    Ok(j as usize)
}

/// Amplitudes at the requested times together with the full grid history.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeTrajectory {
    pub times: Vec<f64>,
    pub amplitudes: Vec<Vec<C64>>,
    pub history: AmplitudeHistory,
    pub meta: RunMeta,
}

impl AmplitudeTrajectory {
    pub fn max_amplitude_deviation(&self, other: &Trajectory) -> f64 {
        super::max_deviation(
            self.amplitudes.iter().map(Vec::as_slice),
            other.states.iter().map(|s| s.c.as_slice()),
        )
    }
}

/// Solves `ċ_k = −iε_k c_k − ∫₀ᵗ Σ_l M_kl(t−s) c_l(s) ds + G_k(t)` on the
/// uniform grid `t_j = j·dt` with a Heun predictor–corrector; the memory
/// integral is a composite trapezoid over the grid.
///
/// Every requested time must be an integer multiple of `dt`.
pub fn solve_volterra(
    model: &Model,
    initial: &InitialState,
    times: &[f64],
    dt: f64,
) -> Result<AmplitudeTrajectory> {
    let initial = validate_initial_state(model, initial)?;
    check_step(model, dt)?;
    check_output_times(times)?;
    let indices = times
        .iter()
        .map(|&t| grid_index(t, dt))
        .collect::<Result<Vec<_>>>()?;
    let steps = *indices.last().expect("non-empty times");

    let d = model.dim();
    let grid: Vec<f64> = (0..=steps).map(|j| j as f64 * dt).collect();
    // Flattened row-major M(t_j) and G(t_j).
    let mem: Vec<C64> = memory_kernel(model, &grid)?
        .into_iter()
        .flat_map(|m| {
            let mut v = Vec::with_capacity(d * d);
            for k in 0..d {
                for l in 0..d {
                    v.push(m[(k, l)]);
                }
            }
            v
        })
        .collect();
    let inh: Vec<C64> = inhomogeneity(model, &initial, &grid)?
        .into_iter()
        .flat_map(|g| g.iter().copied().collect::<Vec<_>>())
        .collect();
    let eps = model.energies();
    let m_at = |j: usize| &mem[j * d * d..(j + 1) * d * d];
    // Split re/im copies for the history sum: the kernel reversed in time,
    // so both operands of each dot product run forward.
    let mut rev_re = vec![vec![0.0; steps + 1]; d * d];
    let mut rev_im = vec![vec![0.0; steps + 1]; d * d];
    for j in 0..=steps {
        for kl in 0..d * d {
            let z = mem[j * d * d + kl];
            rev_re[kl][steps - j] = z.re;
            rev_im[kl][steps - j] = z.im;
        }
    }
    let mut hist_re: Vec<Vec<f64>> = (0..d).map(|_| Vec::with_capacity(steps + 1)).collect();
    let mut hist_im: Vec<Vec<f64>> = (0..d).map(|_| Vec::with_capacity(steps + 1)).collect();
    for l in 0..d {
        hist_re[l].push(initial.c0[l].re);
        hist_im[l].push(initial.c0[l].im);
    }

    let mut c: Vec<C64> = Vec::with_capacity((steps + 1) * d);
    c.extend_from_slice(&initial.c0);

    let h = dt;
    let zero = C64::new(0.0, 0.0);
    let mut f_n = vec![zero; d];
    // F_0: the memory integral vanishes at t = 0.
    for k in 0..d {
        f_n[k] = -I * eps[k] * c[k] + inh[k];
    }
    let mut partial = vec![zero; d];
    let mut pred = vec![zero; d];
    let mut next = vec![zero; d];

    for n in 0..steps {
        let cn = &c[n * d..(n + 1) * d];
        for k in 0..d {
            pred[k] = cn[k] + f_n[k] * h;
        }
        // P_{n+1} = h [½ M_{n+1} c_0 + Σ_{i=1}^{n} M_{n+1−i} c_i]
        let m_end = m_at(n + 1);
        for k in 0..d {
            let mut acc = zero;
            for l in 0..d {
                acc += m_end[k * d + l] * c[l] * 0.5;
                let kl = k * d + l;
                acc += history_dot(
                    &rev_re[kl][steps - n..steps],
                    &rev_im[kl][steps - n..steps],
                    &hist_re[l][1..=n],
                    &hist_im[l][1..=n],
                );
            }
            partial[k] = acc * h;
        }

        let m0 = m_at(0);
        let g_next = &inh[(n + 1) * d..(n + 2) * d];
        let rate = |state: &[C64], k: usize| -> C64 {
            let mut self_term = zero;
            for l in 0..d {
                self_term += m0[k * d + l] * state[l];
            }
            -I * eps[k] * state[k] - (partial[k] + self_term * (0.5 * h)) + g_next[k]
        };
        for k in 0..d {
            next[k] = cn[k] + (f_n[k] + rate(&pred, k)) * (0.5 * h);
        }
        for k in 0..d {
            f_n[k] = rate(&next, k);
        }
        if next.iter().any(|z| !z.is_finite()) {
            return Err(Error::Overflow((n + 1) as f64 * h));
        }
        c.extend_from_slice(&next);
        for l in 0..d {
            hist_re[l].push(next[l].re);
            hist_im[l].push(next[l].im);
        }
    }

    let samples: Vec<Vec<C64>> = c.chunks(d).map(<[C64]>::to_vec).collect();
    let amplitudes = indices.iter().map(|&j| samples[j].clone()).collect();
    Ok(AmplitudeTrajectory {
        times: times.to_vec(),
        amplitudes,
        history: AmplitudeHistory { dt, samples },
        meta: RunMeta {
            solver: SolverKind::Volterra,
            dt,
            steps,
            norm_drift: None,
        },
    })
}

/// `Σ_i a_i b_i` over split complex arrays, four independent lanes so the
/// loop vectorizes; the lane order is fixed, so results are deterministic.
fn history_dot(ar: &[f64], ai: &[f64], br: &[f64], bi: &[f64]) -> C64 {
    const LANES: usize = 4;
    let mut sr = [0.0; LANES];
    let mut si = [0.0; LANES];
    let split = ar.len() - ar.len() % LANES;
    for (((xr, xi), yr), yi) in ar[..split]
        .chunks_exact(LANES)
        .zip(ai[..split].chunks_exact(LANES))
        .zip(br[..split].chunks_exact(LANES))
        .zip(bi[..split].chunks_exact(LANES))
    {
        for q in 0..LANES {
            sr[q] += xr[q] * yr[q] - xi[q] * yi[q];
            si[q] += xr[q] * yi[q] + xi[q] * yr[q];
        }
    }
    let mut re = (sr[0] + sr[1]) + (sr[2] + sr[3]);
    let mut im = (si[0] + si[1]) + (si[2] + si[3]);
    for q in split..ar.len() {
        re += ar[q] * br[q] - ai[q] * bi[q];
        im += ar[q] * bi[q] + ai[q] * br[q];
    }
    C64::new(re, im)
}

/// Streams `g_t^m(ω_n)` along the history grid via the exact recurrence of
/// the composite trapezoid rule:
/// `Q_{j+1} = e^{−ihφ} Q_j + (h/2)(e^{−ihφ} S_j + S_{j+1})`,
/// `g(t_j) = e^{−i t_j φ} g_0 − i Q_j`, with `φ = ε_m + ω_n` and
/// `S_j = Σ_n f_mn c_n(t_j)`.
struct ModeReconstructor<'a> {
    model: &'a Model,
    initial: &'a InitialState,
    history: &'a AmplitudeHistory,
    step_phase: Vec<C64>,
    acc: Vec<C64>,
    source: Vec<C64>,
    index: usize,
}

impl<'a> ModeReconstructor<'a> {
    fn new(model: &'a Model, initial: &'a InitialState, history: &'a AmplitudeHistory) -> Self {
        let (d, n) = (model.dim(), model.n_modes());
        let h = history.dt;
        let mut step_phase = Vec::with_capacity(d * n);
        for &e in model.energies() {
            for &w in model.frequencies() {
                step_phase.push(C64::from_polar(1.0, -h * (e + w)));
            }
        }
        let mut r = ModeReconstructor {
            model,
            initial,
            history,
            step_phase,
            acc: vec![C64::new(0.0, 0.0); d * n],
            source: vec![C64::new(0.0, 0.0); d * n],
            index: 0,
        };
        r.source = r.source_at(0);
        r
    }

    fn source_at(&self, j: usize) -> Vec<C64> {
        let (d, n) = (self.model.dim(), self.model.n_modes());
        let cj = &self.history.samples[j];
        let mut s = vec![C64::new(0.0, 0.0); d * n];
        for m in 0..d {
            let sm = &mut s[m * n..(m + 1) * n];
            for (l, &cl) in cj.iter().enumerate() {
                let f = self.model.form_factor(m, l);
                for q in 0..n {
                    sm[q] += f[q] * cl;
                }
            }
        }
        s
    }

    fn advance_to(&mut self, j: usize) {
        let half = 0.5 * self.history.dt;
        while self.index < j {
            let next = self.source_at(self.index + 1);
            for ((a, (s0, s1)), p) in self
                .acc
                .iter_mut()
                .zip(self.source.iter().zip(&next))
                .zip(&self.step_phase)
            {
                *a = *p * *a + (*p * *s0 + *s1) * half;
            }
            self.source = next;
            self.index += 1;
        }
    }

    fn modes(&self) -> Vec<Vec<C64>> {
        let (d, n) = (self.model.dim(), self.model.n_modes());
        let t = self.index as f64 * self.history.dt;
        (0..d)
            .map(|m| {
                let e = self.model.energies()[m];
                (0..n)
                    .map(|q| {
                        let free = C64::from_polar(1.0, -t * (e + self.model.frequencies()[q]));
                        self.initial.g0[m][q] * free - I * self.acc[m * n + q]
                    })
                    .collect()
            })
            .collect()
    }
}

fn check_history(model: &Model, initial: &InitialState, history: &AmplitudeHistory) -> Result<()> {
    if history.samples.is_empty() {
        return Err(Error::InvalidTimes("empty amplitude history".into()));
    }
    if history.samples.iter().any(|c| c.len() != model.dim()) {
        return Err(Error::DimensionMismatch {
            what: "amplitude history",
            expected: model.dim(),
            got: history.samples[0].len(),
        });
    }
    if initial.g0.len() != model.dim() || initial.g0.iter().any(|g| g.len() != model.n_modes()) {
        return Err(Error::DimensionMismatch {
            what: "initial mode functions g0",
            expected: model.n_modes(),
            got: initial.g0.first().map_or(0, Vec::len),
        });
    }
    Ok(())
}

/// `g_t^m = e^{−it(ε_m+ω)} g_0^m − i ∫₀ᵗ e^{−i(t−s)(ε_m+ω)} Σ_n f_mn c_n(s) ds`,
/// trapezoid over the history grid.
pub fn reconstruct_modes(
    model: &Model,
    initial: &InitialState,
    history: &AmplitudeHistory,
    t: f64,
) -> Result<Vec<Vec<C64>>> {
    Ok(reconstruct_modes_at(model, initial, history, &[t])?
        .pop()
        .expect("one time requested"))
}

/// [`reconstruct_modes`] at several increasing times in one pass.
pub fn reconstruct_modes_at(
    model: &Model,
    initial: &InitialState,
    history: &AmplitudeHistory,
    times: &[f64],
) -> Result<Vec<Vec<Vec<C64>>>> {
    check_history(model, initial, history)?;
    check_output_times(times)?;
    let indices = times
        .iter()
        .map(|&t| history.index_of(t))
        .collect::<Result<Vec<_>>>()?;
    let mut rec = ModeReconstructor::new(model, initial, history);
    Ok(indices
        .into_iter()
        .map(|j| {
            rec.advance_to(j);
            rec.modes()
        })
        .collect())
}

/// Full sector states for a Volterra run (amplitudes plus reconstructed modes).
pub fn volterra_states(
    model: &Model,
    initial: &InitialState,
    run: &AmplitudeTrajectory,
) -> Result<Trajectory> {
    let initial = validate_initial_state(model, initial)?;
    let modes = reconstruct_modes_at(model, &initial, &run.history, &run.times)?;
    let states: Vec<SectorState> = run
        .times
        .iter()
        .zip(&run.amplitudes)
        .zip(modes)
        .map(|((&t, c), g)| SectorState { t, c: c.clone(), g })
        .collect();
    let reference = initial.norm_sqr(model.weights());
    let drift = norm_drift(&states, model.weights(), reference);
    Ok(Trajectory {
        times: run.times.clone(),
        states,
        meta: RunMeta {
            norm_drift: Some(drift),
            ..run.meta.clone()
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_model, FormFactorSet, ReservoirGrid, SystemSpec};
    use crate::solvers::{solve_direct, uniform_times};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn small_model() -> Model {
        let grid = ReservoirGrid::new(vec![0.8, 1.0, 1.3], vec![0.3, 0.4, 0.3]).unwrap();
        let mut ff = FormFactorSet::zeros(2, 3);
        ff.set_channel(0, 1, vec![c(0.3, 0.0), c(0.2, 0.1), c(0.0, 0.25)]).unwrap();
        ff.set_channel(1, 0, vec![c(0.1, 0.0), c(0.0, 0.1), c(0.15, 0.0)]).unwrap();
        build_model(SystemSpec::new(vec![0.0, 1.0]).unwrap(), grid, ff).unwrap()
    }

    #[test]
    fn free_phases_without_coupling() {
        let m = build_model(
            SystemSpec::new(vec![0.4, -0.9]).unwrap(),
            ReservoirGrid::new(vec![1.0], vec![1.0]).unwrap(),
            FormFactorSet::zeros(2, 1),
        )
        .unwrap();
        let s = InitialState::factorized(vec![c(0.6, 0.0), c(0.0, 0.8)], 1);
        let dt = 1e-3;
        let run = solve_volterra(&m, &s, &[1.0, 2.0], dt).unwrap();
        for (t, amp) in run.times.iter().zip(&run.amplitudes) {
            for k in 0..2 {
                let exact = s.c0[k] * C64::from_polar(1.0, -m.energies()[k] * t);
                // Heun on a pure rotation: O(h²) phase error.
                assert!((amp[k] - exact).norm() < 1e-6);
            }
        }
        let g = reconstruct_modes(&m, &s, &run.history, 2.0).unwrap();
        assert!(g.iter().flatten().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn reconstruction_at_zero_returns_initial_modes() {
        let m = small_model();
        let g0 = vec![vec![c(0.1, 0.0); 3], vec![c(0.0, 0.2); 3]];
        let mut s = InitialState::new(vec![c(0.5, 0.0), c(0.5, 0.0)], g0);
        s = s.scaled(1.0 / s.norm_sqr(m.weights()).sqrt());
        let run = solve_volterra(&m, &s, &[0.5], 1e-3).unwrap();
        let g = reconstruct_modes(&m, &s, &run.history, 0.0).unwrap();
        assert_eq!(g, s.g0);
    }

    #[test]
    fn agrees_with_direct_solver() {
        let m = small_model();
        let s = InitialState::factorized(vec![c(0.0, 0.0), c(1.0, 0.0)], 3);
        let times = uniform_times(4.0, 8);
        let dt = 1e-3;
        let v = solve_volterra(&m, &s, &times, dt).unwrap();
        let d = solve_direct(&m, &s, &times, dt).unwrap();
        assert!(v.max_amplitude_deviation(&d) < 1e-5);
        let full = volterra_states(&m, &s, &v).unwrap();
        for (a, b) in full.states.iter().zip(&d.states) {
            let mut diff = 0.0;
            for l in 0..2 {
                let delta: Vec<C64> = a.g[l].iter().zip(&b.g[l]).map(|(x, y)| x - y).collect();
                diff += crate::linalg::weighted_norm_sqr(m.weights(), &delta);
            }
            assert!(diff.sqrt() < 1e-5);
        }
    }

    #[test]
    fn off_grid_times_rejected() {
        let m = small_model();
        let s = InitialState::factorized(vec![c(1.0, 0.0), c(0.0, 0.0)], 3);
        assert!(matches!(
            solve_volterra(&m, &s, &[0.10005], 1e-3).unwrap_err(),
            Error::InvalidTimes(_)
        ));
        let run = solve_volterra(&m, &s, &[0.1], 1e-3).unwrap();
        assert!(reconstruct_modes(&m, &s, &run.history, 0.2).is_err());
    }
}
