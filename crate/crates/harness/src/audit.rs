//! Re-checking a saved run record.

use std::fmt::Write;
use std::path::Path;

use chemo_core::functionals::MomentConfig;

use crate::format::g17;
use crate::simulate::{compute_audits, Audits, RunReport};
use crate::HarnessError;

pub fn load_report(path: &Path) -> Result<RunReport, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io { path: path.to_path_buf(), source: e })?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Record(format!("{}: {e}", path.display())))
}

/// Recomputes every audit from the samples in `report`.
///
/// The moment functionals are stored per sample, so a supplied moment
/// configuration must be the one the run was sampled with.
pub fn audit(report: &RunReport, moments: Option<&MomentConfig<f64>>) -> Result<Audits, HarnessError> {
    if let Some(m) = moments {
        if report.config.moments.as_ref() != Some(m) {
            return Err(HarnessError::Record(format!(
                "record was sampled with moments {:?}, not {:?}",
                report.config.moments, m
            )));
        }
    }
    Ok(compute_audits(&report.config, &report.record))
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

pub fn render(report: &RunReport, audits: &Audits) -> String {
    let mut s = String::new();
    let t = &report.record.termination;
    let _ = writeln!(s, "record {} ({:?} at t = {}, {} steps)", &report.config_hash[..16], t.cause, g17(t.time), t.steps);
    let m = &audits.mass;
    let _ = writeln!(
        s,
        "mass        {}  max relative excess over e^(mu t) M0: u {}, v {} (tolerance {}, worst at t = {})",
        verdict(m.passed),
        g17(m.max_violation_u),
        g17(m.max_violation_v),
        g17(m.tolerance),
        g17(m.worst_time)
    );
    let p = &audits.positivity;
    let _ = writeln!(s, "positivity  {}  min u {}, min v {}", verdict(p.passed), g17(p.min_u), g17(p.min_v));
    let c = &audits.concavity;
    if c.applicable {
        let _ = writeln!(
            s,
            "concavity   {}  max U_ss / sup {} (tolerance 1e-06, worst at t = {})",
            verdict(c.passed),
            c.max_relative_margin.map(g17).unwrap_or_else(|| "none".into()),
            g17(c.worst_time)
        );
    } else {
        let _ = writeln!(s, "concavity   SKIP  hypotheses not met (nonlocal signal, mu bounds, nonincreasing data)");
    }
    match &audits.inequality {
        None => {
            let _ = writeln!(s, "riccati     SKIP  no moment samples");
        }
        Some(r) => {
            let a = &r.audit;
            let fmt = |x: Option<f64>| x.map(g17).unwrap_or_else(|| "none".into());
            let phi = if r.functional.contains('+') { format!("({})", r.functional) } else { r.functional.clone() };
            let _ = writeln!(
                s,
                "riccati     {}  d/dt {} >= A {}^2 - B with A = {}, B = {}; blow-up bound T = {}; termination {} (stride {}); min gap {}",
                if r.consistent { "CONSISTENT" } else { "INCONSISTENT" },
                phi,
                phi,
                fmt(a.a),
                fmt(a.b),
                fmt(a.blowup_bound),
                g17(r.termination_time),
                g17(r.last_stride),
                fmt(a.gap_min)
            );
        }
    }
    let violations = audits.violations();
    if violations.is_empty() {
        let _ = writeln!(s, "result      OK");
    } else {
        let _ = writeln!(s, "result      VIOLATED: {}", violations.join(", "));
    }
    s
}
