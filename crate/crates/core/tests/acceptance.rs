//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on failure.

use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sector_core::kernels::{correlations, gram_positivity_check, spectral_density_matrix};
use sector_core::model::{
    build_model, discretize_spectral_family, Discretization, FormFactorSet, InitialState, Model,
    QuadratureScheme, ReservoirGrid, SpectralFamily, SystemSpec,
};
use sector_core::random::{
    random_complex, random_correlated_state, random_factorized_state, random_model, RandomModelSpec,
};
use sector_core::reduced::{
    apply_map, choi_matrix, cptp_check, dynamical_maps, reduced_density, FactorizedPropagators,
};
use sector_core::solvers::{
    oracle_trajectory, solve_direct, solve_volterra, uniform_times, volterra_states, Trajectory,
};
use sector_core::spinboson::{
    asymptotic_report, build_spinboson, constants_of_motion, rwa_recovery_check, SpinBosonConfig,
};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

struct SuiteCase {
    model: Model,
    initial: InitialState,
    label: String,
}

/// 20 random models: d ∈ {2, 3}, N ∈ 4..=8, alternating factorized and
/// correlated initial data.
fn suite() -> Vec<SuiteCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5ec7_0001);
    (0..20)
        .map(|i| {
            let d = 2 + i % 2;
            let n = 4 + i % 5;
            let model = random_model(&mut rng, &RandomModelSpec::new(d, n));
            let (initial, kind) = if i % 4 < 2 {
                (random_factorized_state(&mut rng, d, n), "factorized")
            } else {
                (random_correlated_state(&mut rng, &model, 0.3), "correlated")
            };
            SuiteCase {
                model,
                initial,
                label: format!("#{i} d={d} N={n} {kind}"),
            }
        })
        .collect()
}

fn max_norm_drift(tr: &Trajectory, model: &Model) -> f64 {
    let norms = tr.norms(model.weights());
    norms.iter().map(|x| (x - 1.0).abs()).fold(0.0, f64::max)
}

fn criterion_1(cases: &[SuiteCase]) -> Outcome {
    let times = uniform_times(5.0, 50);
    let start = Instant::now();
    let mut worst = (0.0f64, String::new());
    for case in cases {
        let direct = solve_direct(&case.model, &case.initial, &times, 1e-3).unwrap();
        let oracle = oracle_trajectory(&case.model, &case.initial, &times).unwrap();
        let dev = direct.max_amplitude_deviation(&oracle);
        if dev > worst.0 {
            worst = (dev, case.label.clone());
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    outcome(
        worst.0 < 1e-6 && elapsed < 30.0,
        format!(
            "max |c_direct - c_oracle| = {:.2e} ({}), limit 1e-6; runtime {elapsed:.2} s, limit 30 s",
            worst.0, worst.1
        ),
    )
}

fn criterion_2(cases: &[SuiteCase]) -> Outcome {
    let times = uniform_times(5.0, 50);
    let mut worst_dev = (0.0f64, String::new());
    let mut worst_ratio = (f64::INFINITY, String::new());
    for case in cases {
        let direct = solve_direct(&case.model, &case.initial, &times, 1e-4).unwrap();
        let coarse = solve_volterra(&case.model, &case.initial, &times, 1e-3).unwrap();
        let fine = solve_volterra(&case.model, &case.initial, &times, 5e-4).unwrap();
        let (e1, e2) = (
            coarse.max_amplitude_deviation(&direct),
            fine.max_amplitude_deviation(&direct),
        );
        if e1 > worst_dev.0 {
            worst_dev = (e1, case.label.clone());
        }
        if e1 / e2 < worst_ratio.0 {
            worst_ratio = (e1 / e2, case.label.clone());
        }
    }
    outcome(
        worst_dev.0 < 1e-5 && worst_ratio.0 >= 3.5,
        format!(
            "max |c_volterra - c_direct| at dt=1e-3 = {:.2e} ({}), limit 1e-5; min halving ratio {:.2} ({}), limit 3.5",
            worst_dev.0, worst_dev.1, worst_ratio.0, worst_ratio.1
        ),
    )
}

fn criterion_3(cases: &[SuiteCase]) -> Outcome {
    let times = uniform_times(10.0, 100);
    let mut worst = (0.0f64, String::new());
    for case in cases {
        let direct = solve_direct(&case.model, &case.initial, &times, 1e-3).unwrap();
        let oracle = oracle_trajectory(&case.model, &case.initial, &times).unwrap();
        for (tr, route) in [(direct, "direct"), (oracle, "oracle")] {
            let drift = max_norm_drift(&tr, &case.model);
            if drift >= worst.0 {
                worst = (drift, format!("{} {route}", case.label));
            }
        }
    }
    outcome(
        worst.0 < 1e-8,
        format!("max |norm - 1| over T=10 = {:.2e} ({}), limit 1e-8", worst.0, worst.1),
    )
}

fn random_spinboson(rng: &mut ChaCha8Rng, n: usize) -> SpinBosonConfig {
    let freqs = (0..n).map(|_| rng.gen_range(0.0..2.5)).collect();
    let weights = (0..n).map(|_| rng.gen_range(0.5..1.5) / n as f64).collect();
    let f = (0..n).map(|_| random_complex(rng, 0.4)).collect();
    let h = (0..n).map(|_| random_complex(rng, 0.3)).collect();
    SpinBosonConfig {
        omega: rng.gen_range(0.5..1.5),
        reservoir: ReservoirGrid::new(freqs, weights).unwrap(),
        f,
        h,
    }
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5ec7_0004);
    let times = uniform_times(10.0, 100);
    let (mut drift, mut sum_defect, mut runs) = (0.0f64, 0.0f64, 0);
    for i in 0..8 {
        let cfg = random_spinboson(&mut rng, 5 + i % 4);
        let model = build_spinboson(&cfg).unwrap();
        let initial = if i % 2 == 0 {
            random_factorized_state(&mut rng, 2, model.n_modes())
        } else {
            random_correlated_state(&mut rng, &model, 0.4)
        };
        for tr in [
            solve_direct(&model, &initial, &times, 1e-3).unwrap(),
            oracle_trajectory(&model, &initial, &times).unwrap(),
        ] {
            let com = constants_of_motion(&model, &tr).unwrap();
            let (d0, d1) = com.drift();
            drift = drift.max(d0).max(d1);
            sum_defect = sum_defect.max(com.normalization_defect());
            runs += 1;
        }
    }
    outcome(
        drift < 1e-8 && sum_defect < 1e-10,
        format!(
            "{runs} spin-boson runs: max p0/p1 drift {drift:.2e} (limit 1e-8), max |p0 + p1 - 1| {sum_defect:.2e} (limit 1e-10)"
        ),
    )
}

fn cptp_models() -> Vec<(String, Model)> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5ec7_0005);
    let mut out = Vec::new();
    for (d, n) in [(2, 6), (3, 5)] {
        out.push((format!("random d={d} N={n}"), random_model(&mut rng, &RandomModelSpec::new(d, n))));
    }
    out.push((
        "spin-boson N=8".to_string(),
        build_spinboson(&random_spinboson(&mut rng, 8)).unwrap(),
    ));
    out
}

fn criterion_5() -> Outcome {
    let times: Vec<f64> = (1..=50).map(|k| 10.0 * k as f64 / 50.0).collect();
    let dt = 2.5e-4;
    let (mut min_eig, mut trace, mut herm) = (f64::INFINITY, 0.0f64, 0.0f64);
    let mut all = true;
    let mut count = 0;
    for (_, model) in cptp_models() {
        let props = FactorizedPropagators::compute(&model, &times, dt).unwrap();
        for map in props.maps().unwrap() {
            let rep = cptp_check(&choi_matrix(&map), &map);
            min_eig = min_eig.min(rep.min_eigenvalue);
            trace = trace.max(rep.trace_defect);
            herm = herm.max(rep.hermiticity_defect);
            all &= rep.verdict;
            count += 1;
        }
    }
    outcome(
        all && min_eig >= -1e-10 && trace < 1e-8,
        format!(
            "{count} maps (3 models x 50 times, Volterra dt={dt:e}): min Choi eigenvalue {min_eig:.2e} (limit -1e-10), max trace defect {trace:.2e} (limit 1e-8), Choi hermiticity {herm:.1e}"
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5ec7_0006);
    let mut worst = f64::INFINITY;
    let mut worst_q = f64::INFINITY;
    for i in 0..100 {
        let d = 2 + i % 2;
        let n = 4 + i % 5;
        let model = random_model(&mut rng, &RandomModelSpec::new(d, n));
        let initial = random_correlated_state(&mut rng, &model, 0.3);
        let mut ts: Vec<f64> = (0..5).map(|_| rng.gen_range(0.0..10.0)).collect();
        ts.sort_by(f64::total_cmp);
        let corr = correlations(&model, &initial, &ts).unwrap();
        let rep = gram_positivity_check(&corr, &ts, 20, &mut rng).unwrap();
        worst = worst.min(rep.min_eigenvalue);
        worst_q = worst_q.min(rep.min_quadratic_form);
    }
    outcome(
        worst >= -1e-10,
        format!(
            "100 models x 5 times: min Gram eigenvalue {worst:.2e} (limit -1e-10), min random quadratic form {worst_q:.2e}"
        ),
    )
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5ec7_0007);
    let times = uniform_times(10.0, 50);
    let mut worst = 0.0f64;
    for i in 0..20 {
        let d = 2 + i % 2;
        let n = 4 + i % 5;
        let model = random_model(&mut rng, &RandomModelSpec::new(d, n));
        let initial = random_correlated_state(&mut rng, &model, 0.3);
        let corr = correlations(&model, &initial, &times).unwrap();
        let spec = spectral_density_matrix(&model, &initial);
        for (k, m) in spec.reconstruct(&corr).iter().enumerate() {
            let diff = (m - corr.table(k)).iter().map(|z| z.norm()).fold(0.0, f64::max);
            worst = worst.max(diff);
        }
    }
    outcome(
        worst < 1e-12,
        format!("20 models x 51 times: max |C_spectral - C_direct| = {worst:.2e}, limit 1e-12"),
    )
}

fn criterion_8() -> Outcome {
    let lambda = 0.5;
    let mut ff = FormFactorSet::zeros(2, 1);
    ff.set_channel(0, 1, vec![C64::new(lambda, 0.0)]).unwrap();
    let model = build_model(
        SystemSpec::new(vec![0.0, 1.0]).unwrap(),
        ReservoirGrid::new(vec![1.0], vec![1.0]).unwrap(),
        ff,
    )
    .unwrap();
    let initial = InitialState::factorized(vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)], 1);
    let period = 2.0 * PI / lambda;
    let times = uniform_times(period, 400);
    let tr = solve_direct(&model, &initial, &times, 1e-3).unwrap();
    let worst = tr
        .states
        .iter()
        .map(|s| (s.c[1].norm_sqr() - (lambda * s.t).cos().powi(2)).abs())
        .fold(0.0, f64::max);
    outcome(
        worst < 1e-6,
        format!("max ||c1|^2 - cos^2(lambda t)| over one period = {worst:.2e}, limit 1e-6"),
    )
}

fn criterion_9() -> Outcome {
    let family = SpectralFamily::Lorentzian {
        center: 0.0,
        width: 1.0,
        strength: 0.5,
    };
    let settings = Discretization::new(400, QuadratureScheme::Midpoint).with_support(-20.0, 20.0);
    let bath = discretize_spectral_family(&family, &settings).unwrap();
    let coupling: Vec<C64> = bath.coupling.iter().map(|&g| C64::new(g, 0.0)).collect();
    let cfg = SpinBosonConfig {
        omega: 1.0,
        reservoir: bath.grid,
        f: coupling.clone(),
        h: coupling,
    };
    let model = build_spinboson(&cfg).unwrap();
    let t_end = 12.0;
    let times = uniform_times(t_end, 120);
    let mut finals = Vec::new();
    let mut lines = Vec::new();
    let mut guard = true;
    for c in [[0.0, 1.0], [1.0, 0.0]] {
        let initial = InitialState::factorized(vec![C64::new(c[0], 0.0), C64::new(c[1], 0.0)], 400);
        let rep = asymptotic_report(&model, &initial).unwrap();
        let half = rep.half_life_m0.unwrap_or(f64::INFINITY).max(rep.half_life_m1.unwrap_or(f64::INFINITY));
        let rec = rep.recurrence_m0.unwrap_or(f64::INFINITY).min(rep.recurrence_m1.unwrap_or(f64::INFINITY));
        guard &= rep.decay_expected && t_end >= 5.0 * half && t_end < rec;
        let tr = solve_direct(&model, &initial, &times, 4e-3).unwrap();
        let rho = reduced_density(&model, tr.states.last().unwrap()).unwrap();
        let r00 = rho.rho[(0, 0)].re;
        finals.push((r00, rep.predicted_rho00));
        lines.push(format!(
            "c(0)=({},{}): rho00(T)={r00:.4} predicted {:.1} (|diff| {:.1e})",
            c[0], c[1], rep.predicted_rho00, (r00 - rep.predicted_rho00).abs()
        ));
        if lines.len() == 1 {
            lines.push(format!("kernel half-life {half:.3}, recurrence {rec:.1}, T={t_end}"));
        }
    }
    let each = finals.iter().all(|(r, p)| (r - p).abs() < 5e-2);
    let sep = ((finals[0].0 - finals[1].0) - (finals[0].1 - finals[1].1)).abs();
    outcome(
        guard && each && sep < 5e-2,
        format!("{}; separation defect {sep:.1e}, limit 5e-2", lines.join("; ")),
    )
}

fn criterion_10() -> Outcome {
    let family = SpectralFamily::Lorentzian {
        center: 1.0,
        width: 0.3,
        strength: 0.2,
    };
    let settings = Discretization::new(200, QuadratureScheme::Midpoint).with_support(-2.0, 4.0);
    let bath = discretize_spectral_family(&family, &settings).unwrap();
    let cfg = SpinBosonConfig::rwa(
        1.0,
        bath.grid,
        bath.coupling.iter().map(|&g| C64::new(g, 0.0)).collect(),
    );
    let model = build_spinboson(&cfg).unwrap();
    let initial = InitialState::factorized(vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)], 200);
    let times = uniform_times(10.0, 100);
    let mut worst = 0.0f64;
    let mut c0 = 0.0f64;
    for tr in [
        solve_direct(&model, &initial, &times, 1e-3).unwrap(),
        oracle_trajectory(&model, &initial, &times).unwrap(),
    ] {
        let rep = rwa_recovery_check(&model, &initial, &tr).unwrap();
        worst = worst.max(rep.rho00_defect);
        c0 = c0.max(rep.c0_modulus_defect);
    }
    outcome(
        worst < 1e-12,
        format!("max |rho00 - (1 - |c1|^2)| = {worst:.2e} (limit 1e-12), c0 modulus defect {c0:.1e}"),
    )
}

fn criterion_11() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5ec7_0011);
    let times = uniform_times(5.0, 10);
    let dt = 1e-3;
    let mut worst = 0.0f64;
    for (d, n) in [(2, 6), (3, 5)] {
        let model = random_model(&mut rng, &RandomModelSpec::new(d, n));
        let maps = dynamical_maps(&model, &times, dt).unwrap();
        for _ in 0..5 {
            let initial = random_factorized_state(&mut rng, d, n);
            let run = solve_volterra(&model, &initial, &times, dt).unwrap();
            let tr = volterra_states(&model, &initial, &run).unwrap();
            let c = &initial.c0;
            let rho0 = DMatrix::from_fn(d, d, |i, j| c[i] * c[j].conj());
            for (map, state) in maps.iter().zip(&tr.states) {
                let predicted = apply_map(map, &rho0).unwrap();
                let direct = reduced_density(&model, state).unwrap().rho;
                let diff = (predicted - direct).iter().map(|z| z.norm()).fold(0.0, f64::max);
                worst = worst.max(diff);
            }
        }
    }
    outcome(
        worst < 1e-8,
        format!("10 factorized states x 11 times: max |A_t(rho0) - rho(t)| = {worst:.2e}, limit 1e-8"),
    )
}

fn main() {
    let cases = suite();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("oracle equivalence", Box::new(|| criterion_1(&cases))),
        ("volterra route and convergence", Box::new(|| criterion_2(&cases))),
        ("norm conservation", Box::new(|| criterion_3(&cases))),
        ("constants of motion", Box::new(criterion_4)),
        ("cptp verification", Box::new(criterion_5)),
        ("correlation positivity", Box::new(criterion_6)),
        ("spectral round trip", Box::new(criterion_7)),
        ("resonant rwa closed form", Box::new(criterion_8)),
        ("asymptotic population", Box::new(criterion_9)),
        ("rwa recovery", Box::new(criterion_10)),
        ("map consistency", Box::new(criterion_11)),
    ];
    let mut failures = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        let tag = if out.passed { "PASS" } else { "FAIL" };
        if !out.passed {
            failures += 1;
        }
        println!(
            "[{tag}] criterion {:>2} {name}: {} [{:.1} s]",
            k + 1,
            out.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
