use num_complex::Complex64 as C64;

use super::{check_output_times, check_step, norm_drift, RunMeta, SectorState, SolverKind, Trajectory};
use crate::error::{Error, Result};
use crate::model::{validate_initial_state, InitialState, Model};

const I: C64 = C64::new(0.0, 1.0);

/// Right-hand side of
/// `ċ_k = −iε_k c_k − i Σ_l (f_lk, g^l)`,
/// `ġ^l = −i(ε_l + ω) g^l − i Σ_j f_lj c_j`
/// on the flat state `[c_0..c_{d−1}, g^0(ω_0..ω_{N−1}), …]`.
struct SectorRhs<'a> {
    model: &'a Model,
    d: usize,
    n: usize,
    /// `w_n conj(f_lk(ω_n))` at `[(l * d + k) * n + q]`.
    wconj: Vec<C64>,
}

impl<'a> SectorRhs<'a> {
    fn new(model: &'a Model) -> Self {
        let (d, n) = (model.dim(), model.n_modes());
        let w = model.weights();
        let mut wconj = Vec::with_capacity(d * d * n);
        for l in 0..d {
            for k in 0..d {
                wconj.extend(model.form_factor(l, k).iter().zip(w).map(|(f, w)| f.conj() * *w));
            }
        }
        SectorRhs { model, d, n, wconj }
    }

    fn eval(&self, y: &[C64], out: &mut [C64]) {
        let (d, n) = (self.d, self.n);
        let eps = self.model.energies();
        let omega = self.model.frequencies();
        let (c, g) = y.split_at(d);
        let (dc, dg) = out.split_at_mut(d);
        for k in 0..d {
            let mut acc = C64::new(0.0, 0.0);
            for l in 0..d {
                let wf = &self.wconj[(l * d + k) * n..][..n];
                let gl = &g[l * n..(l + 1) * n];
                for q in 0..n {
                    acc += wf[q] * gl[q];
                }
            }
            dc[k] = -I * (c[k] * eps[k] + acc);
        }
        for l in 0..d {
            let gl = &g[l * n..(l + 1) * n];
            let dgl = &mut dg[l * n..(l + 1) * n];
            for q in 0..n {
                dgl[q] = gl[q] * (eps[l] + omega[q]);
            }
            for j in 0..d {
                let f = self.model.form_factor(l, j);
                let cj = c[j];
                for q in 0..n {
                    dgl[q] += f[q] * cj;
                }
            }
            for v in dgl.iter_mut() {
                *v *= -I;
            }
        }
    }
}

fn pack(state: &InitialState) -> Vec<C64> {
    let mut y = state.c0.clone();
    for g in &state.g0 {
        y.extend_from_slice(g);
    }
    y
}

fn unpack(y: &[C64], d: usize, n: usize, t: f64) -> SectorState {
    SectorState {
        t,
        c: y[..d].to_vec(),
        g: (0..d).map(|l| y[d + l * n..d + (l + 1) * n].to_vec()).collect(),
    }
}

/// Classical RK4 on the full `(d + dN)`-dimensional linear system.
///
/// Each interval between consecutive output times is split into the fewest
/// equal substeps not longer than `dt`.
pub fn solve_direct(
    model: &Model,
    initial: &InitialState,
    times: &[f64],
    dt: f64,
) -> Result<Trajectory> {
    let initial = validate_initial_state(model, initial)?;
    check_step(model, dt)?;
    check_output_times(times)?;

    let (d, n) = (model.dim(), model.n_modes());
    let rhs = SectorRhs::new(model);
    let len = d + d * n;
    let mut y = pack(&initial);
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (
        vec![C64::new(0.0, 0.0); len],
        vec![C64::new(0.0, 0.0); len],
        vec![C64::new(0.0, 0.0); len],
        vec![C64::new(0.0, 0.0); len],
        vec![C64::new(0.0, 0.0); len],
    );

    let mut t = 0.0;
    let mut steps = 0usize;
    let mut states = Vec::with_capacity(times.len());
    for &target in times {
        let span = target - t;
        let sub = if span > 0.0 {
            ((span / dt) - 1e-9).ceil().max(1.0) as usize
        } else {
            0
        };
        let h = if sub > 0 { span / sub as f64 } else { 0.0 };
        for _ in 0..sub {
            rhs.eval(&y, &mut k1);
            for i in 0..len {
                tmp[i] = y[i] + k1[i] * (0.5 * h);
            }
            rhs.eval(&tmp, &mut k2);
            for i in 0..len {
                tmp[i] = y[i] + k2[i] * (0.5 * h);
            }
            rhs.eval(&tmp, &mut k3);
            for i in 0..len {
                tmp[i] = y[i] + k3[i] * h;
            }
            rhs.eval(&tmp, &mut k4);
            for i in 0..len {
                y[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
            }
        }
        steps += sub;
        t = target;
        let state = unpack(&y, d, n, t);
        if !state.is_finite() {
            return Err(Error::Overflow(t));
        }
        states.push(state);
    }

    let reference = initial.norm_sqr(model.weights());
    let drift = norm_drift(&states, model.weights(), reference);
    Ok(Trajectory {
        times: times.to_vec(),
        states,
        meta: RunMeta {
            solver: SolverKind::Direct,
            dt,
            steps,
            norm_drift: Some(drift),
        },
    })
}
