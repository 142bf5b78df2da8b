//! Single runs: initial data, the time loop, audits and the output files.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use chemo_core::dynamics::{
    concavity_audit, mass_audit, run, ConcavityAudit, MassAudit, RunOptions, RunRecord, State, TerminationCause,
};
use chemo_core::functionals::{audit_inequality, MomentRegime, RiccatiAudit};
use chemo_core::grid::{RadialField, RadialGrid};
use chemo_core::initdata::{bump, make_concentrated, validate, Hypothesis, ValidationReport};
use chemo_core::model::{classify_regime, RegimePrediction};
use log::info;
use serde::{Deserialize, Serialize};

use crate::config::{InitialSpec, RunConfig};
use crate::format::{csv, g17, opt_g17, write_atomic};
use crate::HarnessError;

pub const FORMAT_VERSION: u32 = 1;
pub const SERIES_VERSION: u32 = 1;

/// Column order of `series.csv` (version [`SERIES_VERSION`]).
pub const SERIES_HEADER: [&str; 17] = [
    "t",
    "step",
    "dt",
    "mass_u",
    "mass_v",
    "sup_u",
    "sup_v",
    "min_u",
    "min_v",
    "lp_u",
    "lq_v",
    "concavity_margin",
    "phi_u",
    "phi_v",
    "psi_u",
    "psi_v",
    "profile_constant",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositivityAudit {
    pub min_u: f64,
    pub min_v: f64,
    pub passed: bool,
}

/// Riccati inequality check on `φ_U` (nonlocal signal) or `φ_U + φ_V` (linear signal).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub functional: String,
    pub audit: RiccatiAudit<f64>,
    pub termination_time: f64,
    /// Time between the last two samples.
    pub last_stride: f64,
    /// Bound at least the termination time minus one stride (blow-up runs), or
    /// absent / beyond `t_end` (runs that reached `t_end`).
    pub consistent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Audits {
    pub mass: MassAudit<f64>,
    pub positivity: PositivityAudit,
    pub concavity: ConcavityAudit<f64>,
    pub inequality: Option<InequalityReport>,
}

impl Audits {
    /// Names of violated hard invariants.
    pub fn violations(&self) -> Vec<&'static str> {
        let mut out = vec![];
        if !self.mass.passed {
            out.push("mass growth bound");
        }
        if !self.positivity.passed {
            out.push("positivity");
        }
        if !self.concavity.passed {
            out.push("concavity of the accumulated mass");
        }
        out
    }
}

/// Contents of `runrecord.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub format_version: u32,
    pub series_version: u32,
    pub config_hash: String,
    pub config: RunConfig,
    pub prediction: RegimePrediction<f64>,
    pub initial_validation: ValidationReport,
    pub record: RunRecord<f64>,
    pub audits: Audits,
}

pub fn build_grid(cfg: &RunConfig) -> Result<Arc<RadialGrid<f64>>, HarnessError> {
    let m = &cfg.model;
    Ok(Arc::new(RadialGrid::geometric(m.n, m.radius, cfg.grid.cells, cfg.grid.ratio)?))
}

/// Reads `r,u,v` rows (as written by `make-data`) onto `grid`.
pub fn read_initial_file(
    path: &Path,
    grid: &Arc<RadialGrid<f64>>,
) -> Result<(RadialField<f64>, RadialField<f64>), HarnessError> {
    let bad = |msg: String| HarnessError::InitialFile { path: path.to_path_buf(), message: msg };
    let text = std::fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("r,u,v") {
        return Err(bad("expected header `r,u,v`".into()));
    }
    let (mut u, mut v) = (vec![], vec![]);
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let fields: Result<Vec<f64>, _> = line.split(',').map(|f| f.trim().parse::<f64>()).collect();
        let fields = fields.map_err(|e| bad(format!("line {}: {e}", i + 2)))?;
        let [r, a, b] = fields[..] else {
            return Err(bad(format!("line {}: expected 3 fields", i + 2)));
        };
        let centre = *grid.cell_centers().get(u.len()).ok_or_else(|| bad("more rows than grid cells".into()))?;
        if (r - centre).abs() > 1e-12 * centre.max(1.0) {
            return Err(bad(format!("line {}: r = {r} does not match the grid centre {centre}", i + 2)));
        }
        u.push(a);
        v.push(b);
    }
    if u.len() != grid.cells() {
        return Err(bad(format!("{} rows for {} grid cells", u.len(), grid.cells())));
    }
    Ok((grid.field(u)?, grid.field(v)?))
}

/// Builds `(u_0, v_0)` and validates them against the hypothesis the data targets.
pub fn initial_data(
    cfg: &RunConfig,
) -> Result<(RadialField<f64>, RadialField<f64>, ValidationReport), HarnessError> {
    let g = build_grid(cfg)?;
    let (u, v, hypothesis) = match &cfg.initial {
        InitialSpec::Zero => (g.zeros(), g.zeros(), Hypothesis::Bounded),
        InitialSpec::Bump { u_amplitude, v_amplitude, width } => {
            (bump(&g, *u_amplitude, *width), bump(&g, *v_amplitude, *width), Hypothesis::Bounded)
        }
        InitialSpec::Concentrated(c) => {
            let (u, v) = make_concentrated(&g, c)?;
            let h = if cfg.model.signal.is_jaeger_luckhaus() {
                let share = 1.0 - c.split;
                Hypothesis::JaegerLuckhaus { m0: share * c.m0, m0_tilde: share * c.m0_tilde, r_star: c.r_star }
            } else {
                Hypothesis::KellerSegel { limit: c.limit, m0: c.m0, m0_tilde: c.m0_tilde, r_star: c.r_star }
            };
            (u, v, h)
        }
        InitialSpec::File { path } => {
            let (u, v) = read_initial_file(path, &g)?;
            (u, v, Hypothesis::Bounded)
        }
    };
    let report = validate(&u, &v, &hypothesis);
    Ok((u, v, report))
}

pub fn compute_audits(cfg: &RunConfig, record: &RunRecord<f64>) -> Audits {
    let mass = mass_audit(record, &cfg.model);
    let concavity = concavity_audit(record, &cfg.model);
    let min_u = record.samples.iter().map(|s| s.min_u).fold(f64::INFINITY, f64::min);
    let min_v = record.samples.iter().map(|s| s.min_v).fold(f64::INFINITY, f64::min);
    let positivity = PositivityAudit { min_u, min_v, passed: min_u >= 0.0 && min_v >= 0.0 };
    let inequality = cfg.moments.as_ref().and_then(|moments| {
        let samples: Vec<_> = record.samples.iter().filter_map(|s| s.moments.as_ref().map(|m| (s.t, m))).collect();
        let nonlocal = moments.regime == MomentRegime::JaegerLuckhaus;
        let times: Vec<f64> = samples.iter().map(|(t, _)| *t).collect();
        let phi: Vec<f64> =
            samples.iter().map(|(_, m)| if nonlocal { m.phi_u } else { m.phi_u + m.phi_v }).collect();
        let psi: Vec<f64> =
            samples.iter().map(|(_, m)| if nonlocal { m.psi_u } else { m.psi_u + m.psi_v }).collect();
        let audit = audit_inequality(&times, &phi, Some(&psi), moments, None).ok()?;
        let termination_time = record.termination.time;
        let last_stride = match times.len() {
            k if k >= 2 => times[k - 1] - times[k - 2],
            _ => 0.0,
        };
        let consistent = match record.termination.cause {
            TerminationCause::BlowupThreshold | TerminationCause::StepCollapse => {
                audit.blowup_bound.is_some_and(|b| b >= termination_time - last_stride)
            }
            _ => audit.blowup_bound.is_none_or(|b| b > cfg.step.t_end),
        };
        Some(InequalityReport {
            functional: if nonlocal { "phi_u" } else { "phi_u+phi_v" }.to_string(),
            audit,
            termination_time,
            last_stride,
            consistent,
        })
    });
    Audits { mass, positivity, concavity, inequality }
}

/// Runs the configuration in memory.
pub fn execute(cfg: &RunConfig) -> Result<RunReport, HarnessError> {
    let (u, v, initial_validation) = initial_data(cfg)?;
    let state = State::new(&cfg.model, u, v)?;
    let options = RunOptions {
        sample_stride: cfg.sample_stride,
        fit_points: cfg.fit_points,
        moments: cfg.moments,
        profile_eps: cfg.profile_eps,
        lp_exponent_u: cfg.lp_exponent_u,
        lq_exponent_v: cfg.lq_exponent_v,
    };
    let record = run(&cfg.model, state, &cfg.step, &options)?;
    let audits = compute_audits(cfg, &record);
    Ok(RunReport {
        format_version: FORMAT_VERSION,
        series_version: SERIES_VERSION,
        config_hash: cfg.hash(),
        config: cfg.clone(),
        prediction: classify_regime(&cfg.model),
        initial_validation,
        record,
        audits,
    })
}

pub fn series_csv(record: &RunRecord<f64>) -> String {
    let rows = record.samples.iter().map(|s| {
        let m = s.moments.as_ref();
        vec![
            g17(s.t),
            s.step.to_string(),
            g17(s.dt),
            g17(s.mass_u),
            g17(s.mass_v),
            g17(s.sup_u),
            g17(s.sup_v),
            g17(s.min_u),
            g17(s.min_v),
            g17(s.lp_u),
            g17(s.lq_v),
            g17(s.concavity_margin),
            opt_g17(m.map(|m| m.phi_u)),
            opt_g17(m.map(|m| m.phi_v)),
            opt_g17(m.map(|m| m.psi_u)),
            opt_g17(m.map(|m| m.psi_v)),
            opt_g17(m.map(|m| m.profile_constant)),
        ]
    });
    csv(&SERIES_HEADER, rows)
}

fn io_error(path: &Path) -> impl Fn(std::io::Error) -> HarnessError + '_ {
    move |e| HarnessError::Io { path: path.to_path_buf(), source: e }
}

pub fn write_file(path: &Path, contents: &[u8]) -> Result<(), HarnessError> {
    write_atomic(path, contents).map_err(io_error(path))
}

/// Writes `runrecord.json`, `series.csv` and `plotdata/*.csv` under `out`.
pub fn write_outputs(report: &RunReport, out: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let record = &report.record;
    let mut written = vec![];
    let mut put = |name: &str, contents: String| -> Result<(), HarnessError> {
        let path = out.join(name);
        write_file(&path, contents.as_bytes())?;
        written.push(path);
        Ok(())
    };
    let json = serde_json::to_string_pretty(report).map_err(|e| HarnessError::Record(e.to_string()))?;
    put("runrecord.json", json + "\n")?;
    put("series.csv", series_csv(record))?;
    put(
        "plotdata/sup_norms.csv",
        csv(
            &["t", "sup_u", "sup_v", "sup_sum"],
            record.samples.iter().map(|s| vec![g17(s.t), g17(s.sup_u), g17(s.sup_v), g17(s.sup_u + s.sup_v)]),
        ),
    )?;
    if report.config.moments.is_some() {
        put(
            "plotdata/moments.csv",
            csv(
                &["t", "phi_u", "phi_v", "psi_u", "psi_v"],
                record.samples.iter().filter_map(|s| {
                    s.moments.as_ref().map(|m| vec![g17(s.t), g17(m.phi_u), g17(m.phi_v), g17(m.psi_u), g17(m.psi_v)])
                }),
            ),
        )?;
    }
    let p = &record.final_profiles;
    put(
        "plotdata/profiles.csv",
        csv(
            &["r", "u", "v", "w"],
            (0..p.r.len()).map(|i| vec![g17(p.r[i]), g17(p.u[i]), g17(p.v[i]), g17(p.w[i])]),
        ),
    )?;
    Ok(written)
}

pub fn simulate(cfg: &RunConfig, out: &Path) -> Result<RunReport, HarnessError> {
    let report = execute(cfg)?;
    write_outputs(&report, out)?;
    info!("wrote {} ({:?})", out.display(), report.record.termination.cause);
    Ok(report)
}

/// `r,u,v` table of initial data, readable by `initial.kind = "file"`.
pub fn initial_csv(u: &RadialField<f64>, v: &RadialField<f64>) -> String {
    let r = u.grid().cell_centers();
    csv(&["r", "u", "v"], (0..r.len()).map(|i| vec![g17(r[i]), g17(u.values[i]), g17(v.values[i])]))
}
