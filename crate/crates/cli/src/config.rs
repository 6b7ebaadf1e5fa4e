//! TOML run configuration: parsing, validation and resolution into core types.

use std::fmt;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use sector_core::model::{
    build_model, discretize_spectral_family, Discretization, FormFactorSet, InitialState, Model,
    QuadratureScheme, ReservoirGrid, SpectralFamily, SystemSpec, DEFAULT_MASS_THRESHOLD,
};
use sector_core::solvers::uniform_times;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    pub initial: InitialSection,
    pub run: RunSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub energies: Vec<f64>,
    pub reservoir: ReservoirSection,
    #[serde(default)]
    pub channels: Vec<ChannelSection>,
}

/// Either a spectral family with discretization settings or an explicit grid.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReservoirSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<SpectralFamily>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<QuadratureScheme>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequencies: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

/// Per-mode complex samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tabulated {
    pub re: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<f64>>,
}

/// Mode-function shape: `√J(ω_n)` of a family, explicit samples, or (when
/// neither is given) the discretized reservoir coupling. Always times `scale`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Shape {
    pub family: Option<SpectralFamily>,
    pub tabulated: Option<Tabulated>,
    pub scale: Option<[f64; 2]>,
}

/// Form factor `f_{to,from}`: the transition `|from⟩ → |to⟩` emitting a boson.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub to: usize,
    pub from: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<SpectralFamily>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tabulated: Option<Tabulated>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeEntry {
    pub level: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<SpectralFamily>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tabulated: Option<Tabulated>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<[f64; 2]>,
}

macro_rules! shape_of {
    ($t:ty) => {
        impl $t {
            pub fn shape(&self) -> Shape {
                Shape {
                    family: self.family.clone(),
                    tabulated: self.tabulated.clone(),
                    scale: self.scale,
                }
            }
        }
    };
}

shape_of!(ChannelSection);
shape_of!(ModeEntry);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    /// `[re, im]` per level.
    pub c0: Vec<[f64; 2]>,
    #[serde(default)]
    pub g0: Vec<ModeEntry>,
    /// Rescale the state to unit norm instead of rejecting it.
    #[serde(default)]
    pub normalize: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverChoice {
    Direct,
    Volterra,
    Both,
    Oracle,
}

impl std::str::FromStr for SolverChoice {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "direct" => Ok(SolverChoice::Direct),
            "volterra" => Ok(SolverChoice::Volterra),
            "both" => Ok(SolverChoice::Both),
            "oracle" => Ok(SolverChoice::Oracle),
            other => Err(format!(
                "unknown solver `{other}` (expected direct, volterra, both or oracle)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(rename = "T")]
    pub t_end: f64,
    pub dt: f64,
    /// Number of output intervals on `[0, T]`.
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_solver")]
    pub solver: SolverChoice,
}

fn default_samples() -> usize {
    100
}

fn default_solver() -> SolverChoice {
    SolverChoice::Direct
}

fn default_cptp_samples() -> usize {
    10
}

/// Upper bound on the map step when `output.cptp_dt` is absent. The trace
/// defect of the maps shrinks as the square of the step.
pub const DEFAULT_CPTP_DT: f64 = 2.5e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    #[serde(default)]
    pub kernels: bool,
    #[serde(default)]
    pub cptp: bool,
    #[serde(default = "default_cptp_samples")]
    pub cptp_samples: usize,
    /// Volterra step for the map construction (default `min(run.dt, 2.5e-4)`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cptp_dt: Option<f64>,
}

impl OutputSection {
    pub fn map_dt(&self, run_dt: f64) -> f64 {
        self.cptp_dt.unwrap_or(run_dt.min(DEFAULT_CPTP_DT))
    }
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: None,
            kernels: false,
            cptp: false,
            cptp_samples: default_cptp_samples(),
            cptp_dt: None,
        }
    }
}

/// One problem with a configuration, located by its key path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub path: String,
    pub reason: String,
}

impl ConfigIssue {
    fn new(path: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigIssue {
            path: path.into(),
            reason: reason.into(),
        }
    }
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.reason)
        } else {
            write!(f, "{}: {}", self.path, self.reason)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<ConfigIssue>);

impl ConfigErrors {
    pub fn single(path: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigErrors(vec![ConfigIssue::new(path, reason)])
    }

    pub fn mentions(&self, path: &str) -> bool {
        self.0.iter().any(|i| i.path == path)
    }
}

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lines: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        write!(f, "{}", lines.join("\n"))
    }
}

impl std::error::Error for ConfigErrors {}

/// Parses and validates a TOML configuration.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigErrors> {
    let de = toml::Deserializer::parse(text)
        .map_err(|e| ConfigErrors::single("", e.message().to_string()))?;
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." { String::new() } else { path };
        ConfigErrors::single(path, e.inner().message().to_string())
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Command-line overrides applied after parsing.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub solver: Option<SolverChoice>,
    pub dt: Option<f64>,
    pub modes: Option<usize>,
}

fn positive(issues: &mut Vec<ConfigIssue>, path: &str, x: f64) {
    if !(x.is_finite() && x > 0.0) {
        issues.push(ConfigIssue::new(path, "must be positive"));
    }
}

impl RunConfig {
    pub fn apply(&mut self, ov: &Overrides) -> Result<(), ConfigErrors> {
        if let Some(s) = ov.solver {
            self.run.solver = s;
        }
        if let Some(dt) = ov.dt {
            self.run.dt = dt;
        }
        if let Some(n) = ov.modes {
            if self.model.reservoir.family.is_none() {
                return Err(ConfigErrors::single(
                    "model.reservoir.modes",
                    "only applies to a reservoir family",
                ));
            }
            self.model.reservoir.modes = Some(n);
        }
        self.validate()
    }

    /// Checks every constraint that does not require building the model,
    /// then builds it once to surface the remaining ones.
    pub fn validate(&self) -> Result<(), ConfigErrors> {
        let mut issues = Vec::new();
        let d = self.model.energies.len();
        if d == 0 {
            issues.push(ConfigIssue::new("model.energies", "must not be empty"));
        }
        if self.model.energies.iter().any(|e| !e.is_finite()) {
            issues.push(ConfigIssue::new("model.energies", "must be finite"));
        }
        self.validate_reservoir(&mut issues);
        for (k, ch) in self.model.channels.iter().enumerate() {
            let p = format!("model.channels[{k}]");
            if ch.to >= d.max(1) {
                issues.push(ConfigIssue::new(format!("{p}.to"), format!("level out of range (d = {d})")));
            }
            if ch.from >= d.max(1) {
                issues.push(ConfigIssue::new(format!("{p}.from"), format!("level out of range (d = {d})")));
            }
            self.validate_shape(&mut issues, &p, &ch.shape());
            if self.model.channels[..k]
                .iter()
                .any(|o| (o.to, o.from) == (ch.to, ch.from))
            {
                issues.push(ConfigIssue::new(p, "duplicate channel"));
            }
        }
        if self.initial.c0.len() != d {
            issues.push(ConfigIssue::new(
                "initial.c0",
                format!("expected {d} amplitudes, got {}", self.initial.c0.len()),
            ));
        }
        for (k, e) in self.initial.g0.iter().enumerate() {
            let p = format!("initial.g0[{k}]");
            if e.level >= d.max(1) {
                issues.push(ConfigIssue::new(format!("{p}.level"), format!("level out of range (d = {d})")));
            }
            self.validate_shape(&mut issues, &p, &e.shape());
            if self.initial.g0[..k].iter().any(|o| o.level == e.level) {
                issues.push(ConfigIssue::new(p, "duplicate level"));
            }
        }
        positive(&mut issues, "run.T", self.run.t_end);
        positive(&mut issues, "run.dt", self.run.dt);
        if self.run.samples == 0 {
            issues.push(ConfigIssue::new("run.samples", "must be at least 1"));
        }
        if self.output.cptp {
            if self.output.cptp_samples == 0 {
                issues.push(ConfigIssue::new("output.cptp_samples", "must be at least 1"));
            }
            if let Some(h) = self.output.cptp_dt {
                positive(&mut issues, "output.cptp_dt", h);
            }
            if !self.initial.g0.is_empty() {
                issues.push(ConfigIssue::new(
                    "output.cptp",
                    "the dynamical map needs a factorized initial state (no initial.g0)",
                ));
            }
        }
        if !issues.is_empty() {
            return Err(ConfigErrors(issues));
        }
        self.resolve().map(|_| ())
    }

    fn validate_reservoir(&self, issues: &mut Vec<ConfigIssue>) {
        let r = &self.model.reservoir;
        let explicit = r.frequencies.is_some() || r.weights.is_some();
        match (&r.family, explicit) {
            (Some(_), true) => issues.push(ConfigIssue::new(
                "model.reservoir",
                "`family` and `frequencies`/`weights` are mutually exclusive",
            )),
            (None, false) => issues.push(ConfigIssue::new(
                "model.reservoir",
                "missing `family` or `frequencies` + `weights`",
            )),
            (Some(_), false) => {
                match r.modes {
                    None => issues.push(ConfigIssue::new("model.reservoir.modes", "missing key")),
                    Some(0) => issues.push(ConfigIssue::new("model.reservoir.modes", "must be at least 1")),
                    Some(_) => {}
                }
                if let Some(t) = r.mass_threshold {
                    if !(t > 0.0 && t < 1.0) {
                        issues.push(ConfigIssue::new(
                            "model.reservoir.mass_threshold",
                            "must lie in (0, 1)",
                        ));
                    }
                }
            }
            (None, true) => {
                if r.frequencies.is_none() {
                    issues.push(ConfigIssue::new("model.reservoir.frequencies", "missing key"));
                }
                if r.weights.is_none() {
                    issues.push(ConfigIssue::new("model.reservoir.weights", "missing key"));
                }
                for key in [
                    ("modes", r.modes.is_some()),
                    ("scheme", r.scheme.is_some()),
                    ("support", r.support.is_some()),
                    ("mass_threshold", r.mass_threshold.is_some()),
                ] {
                    if key.1 {
                        issues.push(ConfigIssue::new(
                            format!("model.reservoir.{}", key.0),
                            "only applies to a reservoir family",
                        ));
                    }
                }
            }
        }
    }

    fn validate_shape(&self, issues: &mut Vec<ConfigIssue>, path: &str, shape: &Shape) {
        if shape.family.is_some() && shape.tabulated.is_some() {
            issues.push(ConfigIssue::new(
                path,
                "`family` and `tabulated` are mutually exclusive",
            ));
        }
        if shape.family.is_none()
            && shape.tabulated.is_none()
            && self.model.reservoir.family.is_none()
        {
            issues.push(ConfigIssue::new(
                path,
                "needs `family` or `tabulated` when the reservoir is an explicit grid",
            ));
        }
        if let Some(t) = &shape.tabulated {
            if let Some(im) = &t.im {
                if im.len() != t.re.len() {
                    issues.push(ConfigIssue::new(
                        format!("{path}.tabulated.im"),
                        format!("expected {} values, got {}", t.re.len(), im.len()),
                    ));
                }
            }
        }
        if let Some(s) = shape.scale {
            if s.iter().any(|x| !x.is_finite()) {
                issues.push(ConfigIssue::new(format!("{path}.scale"), "must be finite"));
            }
        }
    }

    /// Builds the model, initial state and output grid.
    pub fn resolve(&self) -> Result<Scenario, ConfigErrors> {
        let at = |path: &str| {
            let path = path.to_string();
            move |e: sector_core::Error| ConfigErrors::single(path.clone(), e.to_string())
        };
        let d = self.model.energies.len();
        let r = &self.model.reservoir;
        let (grid, coupling) = match &r.family {
            Some(fam) => {
                let mut settings = Discretization::new(
                    r.modes.unwrap_or(0),
                    r.scheme.unwrap_or(QuadratureScheme::Midpoint),
                );
                settings.mass_threshold = r.mass_threshold.unwrap_or(DEFAULT_MASS_THRESHOLD);
                if let Some([lo, hi]) = r.support {
                    settings = settings.with_support(lo, hi);
                }
                let bath = discretize_spectral_family(fam, &settings).map_err(at("model.reservoir"))?;
                (bath.grid, Some(bath.coupling))
            }
            None => {
                let grid = ReservoirGrid::new(
                    r.frequencies.clone().unwrap_or_default(),
                    r.weights.clone().unwrap_or_default(),
                )
                .map_err(at("model.reservoir"))?;
                (grid, None)
            }
        };
        let n = grid.n_modes();
        let sample = |path: &str, shape: &Shape| -> Result<Vec<C64>, ConfigErrors> {
            let s = shape.scale.map_or(C64::new(1.0, 0.0), |[re, im]| C64::new(re, im));
            let raw: Vec<C64> = if let Some(fam) = &shape.family {
                fam.validate().map_err(at(&format!("{path}.family")))?;
                grid.frequencies()
                    .iter()
                    .map(|&w| C64::new(fam.density(w).max(0.0).sqrt(), 0.0))
                    .collect()
            } else if let Some(t) = &shape.tabulated {
                if t.re.len() != n {
                    return Err(ConfigErrors::single(
                        format!("{path}.tabulated.re"),
                        format!("expected {n} values (one per mode), got {}", t.re.len()),
                    ));
                }
                let im = t.im.clone().unwrap_or_else(|| vec![0.0; n]);
                t.re.iter().zip(&im).map(|(&a, &b)| C64::new(a, b)).collect()
            } else {
                let g = coupling.as_ref().ok_or_else(|| {
                    ConfigErrors::single(path, "no reservoir coupling to default to")
                })?;
                g.iter().map(|&x| C64::new(x, 0.0)).collect()
            };
            Ok(raw.into_iter().map(|z| z * s).collect())
        };
        let mut ff = FormFactorSet::zeros(d, n);
        for (k, ch) in self.model.channels.iter().enumerate() {
            let p = format!("model.channels[{k}]");
            ff.set_channel(ch.to, ch.from, sample(&p, &ch.shape())?)
                .map_err(at(&p))?;
        }
        let c0: Vec<C64> = self.initial.c0.iter().map(|&[a, b]| C64::new(a, b)).collect();
        let mut g0 = vec![vec![C64::new(0.0, 0.0); n]; d];
        for (k, e) in self.initial.g0.iter().enumerate() {
            g0[e.level] = sample(&format!("initial.g0[{k}]"), &e.shape())?;
        }
        let system = SystemSpec::new(self.model.energies.clone()).map_err(at("model.energies"))?;
        let model = build_model(system, grid, ff).map_err(at("model"))?;

        let mut initial = InitialState::new(c0, g0);
        if self.initial.normalize {
            let norm = initial.norm_sqr(model.weights());
            if norm == 0.0 || !norm.is_finite() {
                return Err(ConfigErrors::single("initial", "state has zero norm"));
            }
            initial = initial.scaled(1.0 / norm.sqrt());
        }
        let initial = sector_core::model::validate_initial_state(&model, &initial)
            .map_err(at("initial"))?;
        Ok(Scenario {
            times: uniform_times(self.run.t_end, self.run.samples),
            model,
            initial,
            config: self.clone(),
        })
    }
}

/// A validated configuration resolved into core objects.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: RunConfig,
    pub model: Model,
    pub initial: InitialState,
    pub times: Vec<f64>,
}
