use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sector_core::model::{InitialState, ReservoirGrid};
use sector_core::random::random_complex;
use sector_core::reduced::reduced_density;
use sector_core::solvers::{solve_direct, uniform_times, Trajectory};
use sector_core::spinboson::{
    asymptotic_population, build_spinboson, constants_of_motion, rho00_from_amplitudes,
    rwa_recovery_check, spinboson_kernels, SpinBosonConfig,
};

const I: C64 = C64::new(0.0, 1.0);

fn config(rng: &mut ChaCha8Rng, n: usize) -> SpinBosonConfig {
    let freqs = (0..n).map(|_| rng.gen_range(-0.5..2.5)).collect();
    let weights = (0..n).map(|_| rng.gen_range(0.5..1.5) / n as f64).collect();
    SpinBosonConfig {
        omega: rng.gen_range(0.5..1.5),
        reservoir: ReservoirGrid::new(freqs, weights).unwrap(),
        f: (0..n).map(|_| random_complex(rng, 0.5)).collect(),
        h: (0..n).map(|_| random_complex(rng, 0.4)).collect(),
    }
}

/// Normalized state with one-boson parts on both levels.
fn correlated(rng: &mut ChaCha8Rng, cfg: &SpinBosonConfig) -> InitialState {
    let n = cfg.reservoir.n_modes();
    let c = vec![random_complex(rng, 1.0), random_complex(rng, 1.0)];
    let g = vec![
        (0..n).map(|_| random_complex(rng, 0.7)).collect(),
        (0..n).map(|_| random_complex(rng, 0.7)).collect(),
    ];
    let s = InitialState::new(c, g);
    let norm = s.norm_sqr(cfg.reservoir.weights()).sqrt();
    s.scaled(1.0 / norm)
}

/// Two-level equations written out by hand, integrated with RK4:
/// ċ0 = −i(h, g¹), ċ1 = −iωc1 − i(f, g⁰),
/// ġ¹ = −i(ω+ω_k)g¹ − i h c0, ġ⁰ = −iω_k g⁰ − i f c1.
struct HandIntegrator<'a> {
    cfg: &'a SpinBosonConfig,
}

#[derive(Clone)]
struct HandState {
    c0: C64,
    c1: C64,
    g0: Vec<C64>,
    g1: Vec<C64>,
}

impl HandIntegrator<'_> {
    fn rate(&self, s: &HandState) -> HandState {
        let w = self.cfg.reservoir.weights();
        let om = self.cfg.reservoir.frequencies();
        let (f, h) = (&self.cfg.f, &self.cfg.h);
        let n = w.len();
        let mut hg1 = C64::new(0.0, 0.0);
        let mut fg0 = C64::new(0.0, 0.0);
        for k in 0..n {
            hg1 += w[k] * h[k].conj() * s.g1[k];
            fg0 += w[k] * f[k].conj() * s.g0[k];
        }
        HandState {
            c0: -I * hg1,
            c1: -I * self.cfg.omega * s.c1 - I * fg0,
            g0: (0..n).map(|k| -I * om[k] * s.g0[k] - I * f[k] * s.c1).collect(),
            g1: (0..n)
                .map(|k| -I * (self.cfg.omega + om[k]) * s.g1[k] - I * h[k] * s.c0)
                .collect(),
        }
    }

    fn axpy(s: &HandState, a: f64, r: &HandState) -> HandState {
        HandState {
            c0: s.c0 + r.c0 * a,
            c1: s.c1 + r.c1 * a,
            g0: s.g0.iter().zip(&r.g0).map(|(x, y)| x + y * a).collect(),
            g1: s.g1.iter().zip(&r.g1).map(|(x, y)| x + y * a).collect(),
        }
    }

    fn step(&self, s: &HandState, dt: f64) -> HandState {
        let k1 = self.rate(s);
        let k2 = self.rate(&Self::axpy(s, dt / 2.0, &k1));
        let k3 = self.rate(&Self::axpy(s, dt / 2.0, &k2));
        let k4 = self.rate(&Self::axpy(s, dt, &k3));
        let mut out = Self::axpy(s, dt / 6.0, &k1);
        out = Self::axpy(&out, dt / 3.0, &k2);
        out = Self::axpy(&out, dt / 3.0, &k3);
        Self::axpy(&out, dt / 6.0, &k4)
    }
}

#[test]
fn generic_solver_matches_hand_coded_two_level_integrator() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let cfg = config(&mut rng, 7);
    let model = build_spinboson(&cfg).unwrap();
    let initial = correlated(&mut rng, &cfg);
    let dt = 1e-3;
    let times = uniform_times(5.0, 10);
    let tr = solve_direct(&model, &initial, &times, dt).unwrap();

    let hand = HandIntegrator { cfg: &cfg };
    let mut s = HandState {
        c0: initial.c0[0],
        c1: initial.c0[1],
        g0: initial.g0[0].clone(),
        g1: initial.g0[1].clone(),
    };
    let steps_per_sample = 500;
    for (k, st) in tr.states.iter().enumerate() {
        if k > 0 {
            for _ in 0..steps_per_sample {
                s = hand.step(&s, dt);
            }
        }
        assert!((st.c[0] - s.c0).norm() < 1e-10, "c0 at t={}", st.t);
        assert!((st.c[1] - s.c1).norm() < 1e-10, "c1 at t={}", st.t);
        for q in 0..7 {
            assert!((st.g[0][q] - s.g0[q]).norm() < 1e-10);
            assert!((st.g[1][q] - s.g1[q]).norm() < 1e-10);
        }
    }
}

#[test]
fn free_two_level_system_without_coupling() {
    let grid = ReservoirGrid::new(vec![0.5, 1.0], vec![0.5, 0.5]).unwrap();
    let cfg = SpinBosonConfig::rwa(1.3, grid, vec![C64::new(0.0, 0.0); 2]);
    let model = build_spinboson(&cfg).unwrap();
    let initial = InitialState::factorized(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)], 2);
    let tr = solve_direct(&model, &initial, &[0.0, 2.0], 1e-3).unwrap();
    let end = &tr.states[1];
    assert!((end.c[0] - C64::new(0.6, 0.0)).norm() < 1e-14);
    assert!((end.c[1] - C64::new(0.0, 0.8) * C64::from_polar(1.0, -2.6)).norm() < 1e-12);
}

#[test]
fn constants_of_motion_for_correlated_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for n in [5, 8] {
        let cfg = config(&mut rng, n);
        let model = build_spinboson(&cfg).unwrap();
        let initial = correlated(&mut rng, &cfg);
        let tr = solve_direct(&model, &initial, &uniform_times(10.0, 50), 1e-3).unwrap();
        let com = constants_of_motion(&model, &tr).unwrap();
        let (d0, d1) = com.drift();
        assert!(d0 < 1e-8 && d1 < 1e-8, "{d0:e} {d1:e}");
        assert!(com.normalization_defect() < 1e-10);
        // Initial values are the sector weights of the initial state.
        let w = model.weights();
        let p0 = initial.c0[0].norm_sqr()
            + initial.g0[1].iter().zip(w).map(|(g, w)| w * g.norm_sqr()).sum::<f64>();
        assert!((com.p0[0] - p0).abs() < 1e-14);
    }
}

fn pair_change(tr_a: &Trajectory, tr_b: &Trajectory, level: usize, boson: usize) -> f64 {
    tr_a.states
        .iter()
        .zip(&tr_b.states)
        .map(|(a, b)| {
            let dc = (a.c[level] - b.c[level]).norm();
            let dg = a.g[boson]
                .iter()
                .zip(&b.g[boson])
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max);
            dc.max(dg)
        })
        .fold(0.0, f64::max)
}

#[test]
fn the_two_sectors_decouple() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let cfg = config(&mut rng, 6);
    let initial = correlated(&mut rng, &cfg);
    let times = uniform_times(5.0, 25);
    let base = solve_direct(&build_spinboson(&cfg).unwrap(), &initial, &times, 1e-3).unwrap();

    // Change f and g_0^0 (norm-preserving phase): (c_0, g¹) must not move.
    let mut cfg_f = cfg.clone();
    cfg_f.f = cfg.f.iter().map(|z| z * C64::new(0.3, 1.1)).collect();
    let mut init_f = initial.clone();
    init_f.g0[0] = initial.g0[0].iter().map(|z| z * C64::from_polar(1.0, 0.7)).collect();
    let run_f = solve_direct(&build_spinboson(&cfg_f).unwrap(), &init_f, &times, 1e-3).unwrap();
    assert!(pair_change(&base, &run_f, 0, 1) < 1e-12);
    assert!(pair_change(&base, &run_f, 1, 0) > 1e-3);

    // Change h and g_0^1: (c_1, g⁰) must not move.
    let mut cfg_h = cfg.clone();
    cfg_h.h = cfg.h.iter().map(|z| z.conj() * 1.7).collect();
    let mut init_h = initial.clone();
    init_h.g0[1] = initial.g0[1].iter().map(|z| z * C64::from_polar(1.0, -1.9)).collect();
    let run_h = solve_direct(&build_spinboson(&cfg_h).unwrap(), &init_h, &times, 1e-3).unwrap();
    assert!(pair_change(&base, &run_h, 1, 0) < 1e-12);
    assert!(pair_change(&base, &run_h, 0, 1) > 1e-3);
}

/// `∫₀^{t_j} a(t_j − s) b(s) ds` by the trapezoid rule on a uniform grid.
fn convolve(a: &[C64], b: &[C64], j: usize, h: f64) -> C64 {
    if j == 0 {
        return C64::new(0.0, 0.0);
    }
    let mut acc = (a[j] * b[0] + a[0] * b[j]) * 0.5;
    for i in 1..j {
        acc += a[j - i] * b[i];
    }
    acc * h
}

#[test]
fn solution_is_resolvent_plus_convolution_with_inhomogeneity() {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let cfg = config(&mut rng, 6);
    let model = build_spinboson(&cfg).unwrap();
    let initial = correlated(&mut rng, &cfg);
    let h = 1e-3;
    let times = uniform_times(4.0, 4000);
    let run = solve_direct(&model, &initial, &times, h).unwrap();
    let kernels = spinboson_kernels(&cfg, Some(&initial), &times).unwrap();
    let n = cfg.reservoir.n_modes();
    for level in 0..2 {
        let mut basis = vec![C64::new(0.0, 0.0); 2];
        basis[level] = C64::new(1.0, 0.0);
        let homogeneous =
            solve_direct(&model, &InitialState::factorized(basis, n), &times, h).unwrap();
        let a: Vec<C64> = homogeneous.states.iter().map(|s| s.c[level]).collect();
        let inh = if level == 0 { &kernels.n0 } else { &kernels.n1 };
        let mut worst = 0.0f64;
        for j in (0..times.len()).step_by(100) {
            let predicted = a[j] * initial.c0[level] + convolve(&a, inh, j, h);
            worst = worst.max((predicted - run.states[j].c[level]).norm());
        }
        assert!(worst < 1e-6, "level {level}: {worst:e}");
    }
}

/// Scalar Volterra solve `ċ = −iεc − ∫ m(t−s) c(s) ds + n(t)` (Heun +
/// trapezoid), written independently of the library solver.
fn scalar_volterra(eps: f64, m: &[C64], inh: &[C64], c0: C64, h: f64) -> Vec<C64> {
    let mut c = vec![c0];
    let rate = |c_hist: &[C64], cur: C64, j: usize| -> C64 {
        let mut mem = C64::new(0.0, 0.0);
        if j > 0 {
            mem = (m[j] * c_hist[0] + m[0] * cur) * 0.5;
            for i in 1..j {
                mem += m[j - i] * c_hist[i];
            }
            mem *= h;
        }
        -I * eps * cur - mem + inh[j]
    };
    for j in 0..m.len() - 1 {
        let f_j = rate(&c, c[j], j);
        let pred = c[j] + f_j * h;
        let next = c[j] + (f_j + rate(&c, pred, j + 1)) * (0.5 * h);
        c.push(next);
    }
    c
}

#[test]
fn model_specific_kernels_drive_the_amplitudes() {
    let mut rng = ChaCha8Rng::seed_from_u64(45);
    let cfg = config(&mut rng, 6);
    let model = build_spinboson(&cfg).unwrap();
    let initial = correlated(&mut rng, &cfg);
    let h = 1e-3;
    let times = uniform_times(3.0, 3000);
    let k = spinboson_kernels(&cfg, Some(&initial), &times).unwrap();
    let c0 = scalar_volterra(0.0, &k.m0, &k.n0, initial.c0[0], h);
    let c1 = scalar_volterra(cfg.omega, &k.m1, &k.n1, initial.c0[1], h);
    let direct = solve_direct(&model, &initial, &times, h).unwrap();
    let worst = direct
        .states
        .iter()
        .enumerate()
        .map(|(j, s)| (s.c[0] - c0[j]).norm().max((s.c[1] - c1[j]).norm()))
        .fold(0.0, f64::max);
    assert!(worst < 1e-5, "{worst:e}");
}

#[test]
fn population_identity_from_amplitudes() {
    let mut rng = ChaCha8Rng::seed_from_u64(46);
    let cfg = config(&mut rng, 6);
    let model = build_spinboson(&cfg).unwrap();
    let initial = correlated(&mut rng, &cfg);
    let tr = solve_direct(&model, &initial, &uniform_times(6.0, 30), 1e-3).unwrap();
    for s in &tr.states {
        let rho = reduced_density(&model, s).unwrap().rho;
        let r00 = rho00_from_amplitudes(&model, &initial, &s.c);
        assert!((rho[(0, 0)].re - r00).abs() < 1e-8);
        assert!((rho[(1, 1)].re - (1.0 - r00)).abs() < 1e-8);
    }
}

#[test]
fn rwa_recovery_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(47);
    let mut cfg = config(&mut rng, 6);
    cfg.h = vec![C64::new(0.0, 0.0); 6];
    let model = build_spinboson(&cfg).unwrap();
    let times = uniform_times(5.0, 25);

    let excited = InitialState::factorized(vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)], 6);
    let tr = solve_direct(&model, &excited, &times, 1e-3).unwrap();
    let rep = rwa_recovery_check(&model, &excited, &tr).unwrap();
    assert!(rep.passed && rep.rho00_defect < 1e-12);
    // c_0(0) = 0 = |c_1(0)|² − 1: the printed identity does not hold here.
    assert!(rep.printed_c0_identity_defect > 0.99);

    let ground = InitialState::factorized(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)], 6);
    let tr = solve_direct(&model, &ground, &times, 1e-3).unwrap();
    for s in &tr.states {
        assert_eq!(s.c[0], C64::new(1.0, 0.0));
        let rho = reduced_density(&model, s).unwrap().rho;
        assert!((rho[(0, 0)].re - 1.0).abs() < 1e-15);
    }

    // Mixed data with g_0^0 ≠ 0 still satisfies the general form.
    let mut mixed = correlated(&mut rng, &cfg);
    mixed.g0[1] = vec![C64::new(0.0, 0.0); 6];
    let mixed = mixed.scaled(1.0 / mixed.norm_sqr(model.weights()).sqrt());
    let tr = solve_direct(&model, &mixed, &times, 1e-3).unwrap();
    let rep = rwa_recovery_check(&model, &mixed, &tr).unwrap();
    assert!(rep.passed, "{rep:?}");
}

#[test]
fn resonant_single_mode_rwa_scales_with_initial_weight() {
    let lambda = 0.4;
    let grid = ReservoirGrid::new(vec![1.0], vec![1.0]).unwrap();
    let cfg = SpinBosonConfig::rwa(1.0, grid, vec![C64::new(lambda, 0.0)]);
    let model = build_spinboson(&cfg).unwrap();
    let initial = InitialState::factorized(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)], 1);
    let tr = solve_direct(&model, &initial, &uniform_times(2.0 * std::f64::consts::PI / lambda, 100), 1e-3)
        .unwrap();
    for s in &tr.states {
        let expected = (lambda * s.t).cos().powi(2) * 0.64;
        assert!((s.c[1].norm_sqr() - expected).abs() < 1e-9);
    }
}

#[test]
fn predicted_limits() {
    let mut rng = ChaCha8Rng::seed_from_u64(48);
    let cfg = config(&mut rng, 4);
    let model = build_spinboson(&cfg).unwrap();
    let s = correlated(&mut rng, &cfg);
    let w = model.weights();
    let expected = s.c0[1].norm_sqr() + s.g0[0].iter().zip(w).map(|(g, w)| w * g.norm_sqr()).sum::<f64>();
    assert!((asymptotic_population(&model, &s).unwrap() - expected).abs() < 1e-15);
}
