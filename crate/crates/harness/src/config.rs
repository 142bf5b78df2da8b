//! Run configuration: a TOML file with `[model]`, `[grid]`, `[step]`, `[moments]`,
//! `[initial]`, `[run]` and (for sweeps) `[sweep]` sections. Dotted keys such as
//! `model.chi1 = 2.0` are equivalent to the sectioned form.

use std::fmt;
use std::path::{Path, PathBuf};

use chemo_core::dynamics::StepControl;
use chemo_core::functionals::{FunctionalError, MomentConfig, MomentRegime};
use chemo_core::initdata::Concentration;
use chemo_core::model::{select_lp_exponent, ModelError, ModelParams, SignalKind, Species};
use serde::{Deserialize, Serialize};

/// A configuration problem, located in the source text when possible.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub origin: String,
    pub line: Option<usize>,
    pub field: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.origin)?;
        if let Some(line) = self.line {
            write!(f, ":{line}")?;
        }
        write!(f, ": ")?;
        if let Some(field) = &self.field {
            write!(f, "{field}: ")?;
        }
        write!(f, "{}", self.message)
    }
}

impl std::error::Error for ConfigError {}

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignalName {
    KellerSegel,
    JaegerLuckhaus,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub n: usize,
    pub signal: SignalName,
    pub gamma: Option<f64>,
    #[serde(default = "one")]
    pub radius: f64,
    #[serde(default = "one")]
    pub d1: f64,
    #[serde(default = "one")]
    pub d2: f64,
    #[serde(default = "one")]
    pub d3: f64,
    #[serde(default = "one")]
    pub chi1: f64,
    #[serde(default = "one")]
    pub chi2: f64,
    #[serde(default = "one")]
    pub mu1: f64,
    #[serde(default = "one")]
    pub mu2: f64,
    #[serde(default = "one")]
    pub a1: f64,
    #[serde(default = "one")]
    pub a2: f64,
    #[serde(default = "one")]
    pub alpha: f64,
    #[serde(default = "one")]
    pub beta: f64,
    #[serde(default = "two")]
    pub kappa1: f64,
    #[serde(default = "two")]
    pub kappa2: f64,
    #[serde(default = "two")]
    pub lambda1: f64,
    #[serde(default = "two")]
    pub lambda2: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub cells: Option<usize>,
    /// Width ratio of neighbouring cells; 1 is uniform, > 1 refines towards the origin.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepSection {
    pub t_end: Option<f64>,
    pub cfl_advection: Option<f64>,
    pub diffusion_theta: Option<f64>,
    pub dt_min: Option<f64>,
    pub dt_max: Option<f64>,
    pub blowup_threshold: Option<f64>,
    pub max_steps: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentsSection {
    pub s0: f64,
    pub b: Option<f64>,
    pub regime: Option<MomentRegime>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialSection {
    Zero,
    Bump {
        u_amplitude: f64,
        #[serde(default)]
        v_amplitude: f64,
        width: Option<f64>,
    },
    Concentrated {
        m0: f64,
        m0_tilde: f64,
        limit: f64,
        r_star: Option<f64>,
        split: Option<f64>,
    },
    File {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub sample_stride: Option<u64>,
    pub fit_points: Option<usize>,
    pub profile_eps: Option<f64>,
    pub lp_exponent_u: Option<f64>,
    pub lq_exponent_v: Option<f64>,
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default = "yes")]
    pub simulate: bool,
    #[serde(default)]
    pub axes: toml::Table,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub model: ModelSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub step: StepSection,
    pub moments: Option<MomentsSection>,
    pub initial: Option<InitialSection>,
    #[serde(default)]
    pub run: RunSection,
    pub sweep: Option<SweepSection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub cells: usize,
    pub ratio: f64,
}

/// Initial data, fully resolved (file paths absolute, defaults filled in).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialSpec {
    Zero,
    Bump { u_amplitude: f64, v_amplitude: f64, width: f64 },
    Concentrated(Concentration<f64>),
    File { path: PathBuf },
}

/// Everything a single run depends on; its hash identifies the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub model: ModelParams<f64>,
    pub grid: GridSpec,
    pub step: StepControl<f64>,
    pub moments: Option<MomentConfig<f64>>,
    pub initial: InitialSpec,
    pub sample_stride: u64,
    pub fit_points: usize,
    pub profile_eps: f64,
    pub lp_exponent_u: f64,
    pub lq_exponent_v: f64,
    pub seed: u64,
}

impl RunConfig {
    /// SHA-256 of the canonical JSON form, as lowercase hex.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_string(self).expect("config serialises");
        format!("{:x}", Sha256::digest(json.as_bytes()))
    }
}

/// A parsed configuration file together with its source, for diagnostics.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub origin: String,
    pub base_dir: PathBuf,
    pub text: String,
    pub table: toml::Table,
    pub raw: RawConfig,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Line where `section.key` is set, in either sectioned or dotted form.
fn find_key(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.starts_with('[') {
            current = t.trim_matches(|c| c == '[' || c == ']').trim().to_string();
            continue;
        }
        let Some((lhs, _)) = t.split_once('=') else { continue };
        let lhs: String = lhs.chars().filter(|c| !c.is_whitespace() && *c != '"').collect();
        let full = if current.is_empty() { lhs } else { format!("{current}.{lhs}") };
        if full == format!("{section}.{key}") {
            return Some(i + 1);
        }
    }
    None
}

impl LoadedConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let origin = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            origin: origin.clone(),
            line: None,
            field: None,
            message: format!("cannot read config: {e}"),
        })?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &origin, &base_dir)
    }

    pub fn parse(text: &str, origin: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let located = |e: toml::de::Error| ConfigError {
            origin: origin.to_string(),
            line: e.span().map(|s| line_of(text, s.start)),
            field: None,
            message: e.message().trim().to_string(),
        };
        let table: toml::Table = toml::from_str(text).map_err(located)?;
        let raw: RawConfig = toml::from_str(text).map_err(located)?;
        Ok(Self { origin: origin.to_string(), base_dir: base_dir.to_path_buf(), text: text.to_string(), table, raw })
    }

    pub fn error(&self, section: &str, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError {
            origin: self.origin.clone(),
            line: find_key(&self.text, section, key),
            field: Some(format!("{section}.{key}")),
            message: message.into(),
        }
    }

    pub fn model(&self) -> Result<ModelParams<f64>, ConfigError> {
        model_from(&self.raw.model).map_err(|(key, msg)| self.error("model", key, msg))
    }

    pub fn output_dir(&self) -> Option<PathBuf> {
        self.raw.run.output_dir.as_ref().map(|p| self.base_dir.join(p))
    }

    pub fn run_config(&self) -> Result<RunConfig, ConfigError> {
        resolve(&self.raw, &self.base_dir).map_err(|(section, key, msg)| self.error(section, key, msg))
    }
}

fn model_from(m: &ModelSection) -> Result<ModelParams<f64>, (&'static str, String)> {
    let signal = match (m.signal, m.gamma) {
        (SignalName::KellerSegel, gamma) => SignalKind::KellerSegel { gamma: gamma.unwrap_or(1.0) },
        (SignalName::JaegerLuckhaus, None) => SignalKind::JaegerLuckhaus,
        (SignalName::JaegerLuckhaus, Some(_)) => {
            return Err(("gamma", "only applies to signal = \"keller-segel\"".into()));
        }
    };
    let p = ModelParams {
        d1: m.d1,
        d2: m.d2,
        d3: m.d3,
        chi1: m.chi1,
        chi2: m.chi2,
        mu1: m.mu1,
        mu2: m.mu2,
        a1: m.a1,
        a2: m.a2,
        alpha: m.alpha,
        beta: m.beta,
        kappa1: m.kappa1,
        kappa2: m.kappa2,
        lambda1: m.lambda1,
        lambda2: m.lambda2,
        n: m.n,
        radius: m.radius,
        signal,
    };
    p.validate().map_err(|e| match e {
        ModelError::NonPositive(name) => (name, "must be strictly positive".to_string()),
        ModelError::ExponentNotAboveOne(name) => (name, "must be strictly greater than 1 (κ > 1, λ > 1)".to_string()),
        ModelError::Dimension(n) => ("n", format!("dimension {n} is not supported (need n >= 2)")),
    })?;
    Ok(p)
}

type Located = (&'static str, &'static str, String);

fn resolve(raw: &RawConfig, base_dir: &Path) -> Result<RunConfig, Located> {
    let model = model_from(&raw.model).map_err(|(k, m)| ("model", k, m))?;
    let n = model.n;

    let grid = GridSpec { cells: raw.grid.cells.unwrap_or(400), ratio: raw.grid.ratio.unwrap_or(1.0) };
    if grid.cells < 2 {
        return Err(("grid", "cells", "need at least 2 cells".into()));
    }
    if !(grid.ratio >= 1.0 && grid.ratio.is_finite()) {
        return Err(("grid", "ratio", "must be a finite number >= 1".into()));
    }

    let s = &raw.step;
    let mut step = StepControl::new(s.t_end.unwrap_or(1.0));
    if let Some(x) = s.cfl_advection {
        step.cfl_advection = x;
    }
    if let Some(x) = s.diffusion_theta {
        step.diffusion_theta = x;
    }
    if let Some(x) = s.dt_min {
        step.dt_min = x;
    }
    if let Some(x) = s.dt_max {
        step.dt_max = x;
    }
    if let Some(x) = s.blowup_threshold {
        step.blowup_threshold = x;
    }
    if let Some(x) = s.max_steps {
        step.max_steps = x;
    }
    step.validate().map_err(|e| ("step", step_key(&e.to_string()), e.to_string()))?;

    let moments = match &raw.moments {
        None => None,
        Some(m) => {
            let regime = m.regime.unwrap_or(if model.signal.is_jaeger_luckhaus() {
                MomentRegime::JaegerLuckhaus
            } else {
                MomentRegime::KellerSegel
            });
            let b = m.b.unwrap_or_else(|| {
                let (lo, hi) = MomentConfig::<f64>::window(regime, n);
                0.5 * (lo + hi)
            });
            let cfg = MomentConfig { s0: m.s0, b, regime };
            cfg.validate(n, model.radius).map_err(|e| {
                let key = if matches!(e, FunctionalError::S0 { .. }) { "s0" } else { "b" };
                ("moments", key, e.to_string())
            })?;
            Some(cfg)
        }
    };

    let initial = match &raw.initial {
        None | Some(InitialSection::Zero) => InitialSpec::Zero,
        Some(InitialSection::Bump { u_amplitude, v_amplitude, width }) => {
            let width = width.unwrap_or(0.25 * model.radius);
            if !(*u_amplitude >= 0.0 && *v_amplitude >= 0.0) {
                return Err(("initial", "u_amplitude", "amplitudes must be nonnegative".into()));
            }
            if !(width > 0.0) {
                return Err(("initial", "width", "must be positive".into()));
            }
            InitialSpec::Bump { u_amplitude: *u_amplitude, v_amplitude: *v_amplitude, width }
        }
        Some(InitialSection::Concentrated { m0, m0_tilde, limit, r_star, split }) => {
            let r_star = match (r_star, &moments) {
                (Some(r), _) => *r,
                (None, Some(cfg)) => cfg.concentration_radius(n),
                (None, None) => {
                    return Err(("initial", "r_star", "required when no [moments] section is given".into()));
                }
            };
            let split = split.unwrap_or(if model.signal.is_jaeger_luckhaus() { 0.0 } else { 0.5 });
            InitialSpec::Concentrated(Concentration { m0: *m0, m0_tilde: *m0_tilde, r_star, limit: *limit, split })
        }
        Some(InitialSection::File { path }) => InitialSpec::File { path: base_dir.join(path) },
    };

    let r = &raw.run;
    let sample_stride = r.sample_stride.unwrap_or(10);
    if sample_stride == 0 {
        return Err(("run", "sample_stride", "must be >= 1".into()));
    }
    let fallback = n as f64 / 2.0 + 1.0;
    let profile_eps = r.profile_eps.unwrap_or(0.5 * (1.0 - 2.0 / n as f64));
    if !(profile_eps >= 0.0) {
        return Err(("run", "profile_eps", "must be nonnegative".into()));
    }
    Ok(RunConfig {
        grid,
        step,
        moments,
        initial,
        sample_stride,
        fit_points: r.fit_points.unwrap_or(10),
        profile_eps,
        lp_exponent_u: r
            .lp_exponent_u
            .unwrap_or_else(|| select_lp_exponent(&model, Species::First).unwrap_or(fallback)),
        lq_exponent_v: r
            .lq_exponent_v
            .unwrap_or_else(|| select_lp_exponent(&model, Species::Second).unwrap_or(fallback)),
        seed: r.seed.unwrap_or(0),
        model,
    })
}

fn step_key(message: &str) -> &'static str {
    ["cfl_advection", "diffusion_theta", "dt_max", "dt_min", "t_end"]
        .into_iter()
        .find(|k| message.contains(k))
        .unwrap_or("t_end")
}

/// Parameter grid of a sweep: axis paths (e.g. `model.chi1`) and their values.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub simulate: bool,
    pub axes: Vec<(String, Vec<toml::Value>)>,
}

impl SweepPlan {
    /// Number of points; zero when there are no axes or an axis is empty.
    pub fn len(&self) -> usize {
        if self.axes.is_empty() {
            return 0;
        }
        self.axes.iter().map(|(_, v)| v.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Values of point `index`, first axis varying slowest.
    pub fn point(&self, index: usize) -> Vec<(&str, &toml::Value)> {
        let mut rest = index;
        let mut out = vec![];
        for (name, values) in self.axes.iter().rev() {
            out.push((name.as_str(), &values[rest % values.len()]));
            rest /= values.len();
        }
        out.reverse();
        out
    }
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut Vec<(String, toml::Value)>) {
    for (k, v) in table {
        let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            toml::Value::Table(t) => flatten(&path, t, out),
            other => out.push((path, other.clone())),
        }
    }
}

impl LoadedConfig {
    pub fn sweep_plan(&self) -> Result<SweepPlan, ConfigError> {
        let Some(sweep) = &self.raw.sweep else {
            return Err(ConfigError {
                origin: self.origin.clone(),
                line: None,
                field: Some("sweep".into()),
                message: "a sweep needs a [sweep] section with [sweep.axes]".into(),
            });
        };
        let mut leaves = vec![];
        flatten("", &sweep.axes, &mut leaves);
        let mut axes = vec![];
        for (path, value) in leaves {
            match value {
                toml::Value::Array(values) => axes.push((path, values)),
                _ => {
                    return Err(ConfigError {
                        origin: self.origin.clone(),
                        line: None,
                        field: Some(format!("sweep.axes.{path}")),
                        message: "axis values must be an array".into(),
                    })
                }
            }
        }
        Ok(SweepPlan { simulate: sweep.simulate, axes })
    }

    /// The configuration with `overrides` applied at their dotted paths.
    pub fn with_overrides(&self, overrides: &[(&str, &toml::Value)]) -> Result<RunConfig, String> {
        let mut table = self.table.clone();
        table.remove("sweep");
        for (path, value) in overrides {
            let parts: Vec<&str> = path.split('.').collect();
            let mut cursor = &mut table;
            for part in &parts[..parts.len() - 1] {
                let entry = cursor.entry(part.to_string()).or_insert_with(|| toml::Value::Table(Default::default()));
                cursor = entry.as_table_mut().ok_or_else(|| format!("{path}: `{part}` is not a table"))?;
            }
            cursor.insert(parts[parts.len() - 1].to_string(), (*value).clone());
        }
        let raw: RawConfig = toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| e.message().to_string())?;
        resolve(&raw, &self.base_dir).map_err(|(s, k, m)| format!("{s}.{k}: {m}"))
    }
}
