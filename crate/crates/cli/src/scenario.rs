//! Runs a resolved scenario and writes its output files.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use sector_core::export::{cptp_json, kernel_table, trajectory_table, CsvTable};
use sector_core::kernels::KernelTable;
use sector_core::reduced::{choi_matrix, cptp_check, FactorizedPropagators};
use sector_core::solvers::{
    oracle_trajectory, solve_direct, solve_volterra, volterra_states, RunMeta, Trajectory,
};
use sector_core::spinboson::{asymptotic_report, is_spinboson_shape};

use crate::config::{RunConfig, Scenario, SolverChoice};
use crate::error::CliError;

/// Internal Volterra step: the largest `T / (samples·m)` not exceeding `dt`,
/// so every output time lies on the grid.
pub fn volterra_step(t_end: f64, samples: usize, dt: f64) -> f64 {
    let interval = t_end / samples as f64;
    let m = (interval / dt * (1.0 - 1e-12)).ceil().max(1.0);
    interval / m
}

pub fn config_hash(cfg: &RunConfig) -> String {
    let canonical = toml::to_string(cfg).expect("config serializes");
    Sha256::digest(canonical.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub program: &'static str,
    pub version: &'static str,
    pub config_sha256: String,
    pub solver: SolverChoice,
    pub dim: usize,
    pub modes: usize,
    pub runs: Vec<RunMeta>,
    pub max_norm_drift: f64,
    pub timings_ms: Vec<(String, f64)>,
    pub files: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub manifest: Manifest,
    /// `max|Δc|` between the two routes when both were run.
    pub deviation: Option<f64>,
}

struct Writer<'a> {
    dir: &'a Path,
    files: Vec<String>,
}

impl Writer<'_> {
    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn csv(&mut self, name: &str, table: &CsvTable) -> Result<(), CliError> {
        self.write(name, table.to_csv_string().as_bytes())
    }

    fn json(&mut self, name: &str, value: &serde_json::Value) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("json value");
        text.push('\n');
        self.write(name, text.as_bytes())
    }
}

fn timed<T>(
    timings: &mut Vec<(String, f64)>,
    label: &str,
    f: impl FnOnce() -> Result<T, CliError>,
) -> Result<T, CliError> {
    let start = Instant::now();
    let out = f()?;
    timings.push((label.to_string(), start.elapsed().as_secs_f64() * 1e3));
    Ok(out)
}

/// Runs the configured solvers and writes every output into `out_dir`.
pub fn run_scenario(sc: &Scenario, out_dir: &Path) -> Result<RunOutcome, CliError> {
    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let cfg = &sc.config;
    let (model, initial, times) = (&sc.model, &sc.initial, sc.times.as_slice());
    let mut w = Writer {
        dir: out_dir,
        files: Vec::new(),
    };
    let mut timings = Vec::new();
    let h = volterra_step(cfg.run.t_end, cfg.run.samples, cfg.run.dt);

    let direct = |timings: &mut Vec<(String, f64)>| {
        timed(timings, "direct", || Ok(solve_direct(model, initial, times, cfg.run.dt)?))
    };
    let volterra = |timings: &mut Vec<(String, f64)>| -> Result<Trajectory, CliError> {
        timed(timings, "volterra", || {
            let run = solve_volterra(model, initial, times, h)?;
            Ok(volterra_states(model, initial, &run)?)
        })
    };
    let trajectories: Vec<Trajectory> = match cfg.run.solver {
        SolverChoice::Direct => vec![direct(&mut timings)?],
        SolverChoice::Volterra => vec![volterra(&mut timings)?],
        SolverChoice::Both => vec![direct(&mut timings)?, volterra(&mut timings)?],
        SolverChoice::Oracle => vec![timed(&mut timings, "oracle", || {
            Ok(oracle_trajectory(model, initial, times)?)
        })?],
    };
    for tr in &trajectories {
        let table = trajectory_table(model, tr)?;
        w.csv(&format!("trajectory_{}.csv", tr.meta.solver.name()), &table)?;
    }

    let mut deviation = None;
    if let [a, b] = trajectories.as_slice() {
        let per_time: Vec<f64> = a
            .states
            .iter()
            .zip(&b.states)
            .map(|(x, y)| {
                x.c.iter()
                    .zip(&y.c)
                    .map(|(p, q)| (p - q).norm())
                    .fold(0.0, f64::max)
            })
            .collect();
        let max = per_time.iter().copied().fold(0.0, f64::max);
        deviation = Some(max);
        w.json(
            "deviation.json",
            &json!({
                "reference": a.meta.solver,
                "compared": b.meta.solver,
                "max_abs_dc": max,
                "times": times,
                "max_abs_dc_per_time": per_time,
            }),
        )?;
    }

    if cfg.output.kernels {
        let table = timed(&mut timings, "kernels", || {
            Ok(KernelTable::compute(model, initial, times)?)
        })?;
        w.csv("kernels.csv", &kernel_table(&table))?;
    }

    if cfg.output.cptp {
        let stride = (cfg.run.samples / cfg.output.cptp_samples).max(1);
        let map_times: Vec<f64> = times.iter().copied().step_by(stride).collect();
        let doc = timed(&mut timings, "cptp", || {
            let h_map = volterra_step(cfg.run.t_end, cfg.run.samples, cfg.output.map_dt(cfg.run.dt));
            let props = FactorizedPropagators::compute(model, &map_times, h_map)?;
            let maps = props.maps()?;
            let mut reports = Vec::with_capacity(maps.len());
            let mut pairs = Vec::with_capacity(maps.len());
            for map in maps {
                let choi = choi_matrix(&map);
                reports.push(cptp_check(&choi, &map));
                pairs.push((map, choi));
            }
            Ok(cptp_json(&reports, &pairs))
        })?;
        w.json("cptp.json", &doc)?;
    }

    if is_spinboson_shape(model) {
        let rep = asymptotic_report(model, initial)?;
        let last: Vec<f64> = trajectories
            .iter()
            .map(|tr| {
                let s = tr.states.last().expect("non-empty trajectory");
                sector_core::reduced::reduced_density(model, s).map(|r| r.rho[(0, 0)].re)
            })
            .collect::<Result<_, _>>()?;
        w.json(
            "asymptotics.json",
            &json!({ "report": rep, "final_rho00": last, "t_final": cfg.run.t_end }),
        )?;
    }

    let runs: Vec<RunMeta> = trajectories.iter().map(|t| t.meta.clone()).collect();
    let max_norm_drift = runs
        .iter()
        .filter_map(|m| m.norm_drift)
        .fold(0.0, f64::max);
    let mut files = w.files.clone();
    files.push("manifest.json".into());
    let manifest = Manifest {
        program: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config_sha256: config_hash(cfg),
        solver: cfg.run.solver,
        dim: model.dim(),
        modes: model.n_modes(),
        runs,
        max_norm_drift,
        timings_ms: timings,
        files,
    };
    w.json("manifest.json", &serde_json::to_value(&manifest).expect("manifest"))?;
    Ok(RunOutcome {
        out_dir: out_dir.to_path_buf(),
        manifest,
        deviation,
    })
}
