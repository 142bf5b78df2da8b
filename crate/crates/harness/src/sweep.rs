//! Parameter sweeps: one run per grid point, in parallel, collected in `atlas.csv`.
//!
//! Finished rows are appended to `atlas.partial.csv` as they complete, so an
//! interrupted sweep resumes where it stopped; the final `atlas.csv` is written
//! in grid order, independent of scheduling.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;
use std::sync::Mutex;

use chemo_core::model::classify_regime;
use log::{info, warn};
use rayon::prelude::*;

use crate::config::{LoadedConfig, SweepPlan};
use crate::format::{csv, g17, opt_g17, write_atomic};
use crate::simulate::simulate;
use crate::HarnessError;

const FIXED_BEFORE: [&str; 2] = ["point", "hash"];
const FIXED_AFTER: [&str; 6] = ["verdict", "termination", "final_time", "fit_blowup_time", "fit_exponent", "error"];

pub fn atlas_header(plan: &SweepPlan) -> Vec<String> {
    FIXED_BEFORE
        .iter()
        .map(|s| s.to_string())
        .chain(plan.axes.iter().map(|(name, _)| name.clone()))
        .chain(FIXED_AFTER.iter().map(|s| s.to_string()))
        .collect()
}

fn cell(value: &toml::Value) -> String {
    match value {
        toml::Value::Float(x) => g17(*x),
        toml::Value::Integer(i) => i.to_string(),
        toml::Value::String(s) => sanitize(s),
        other => sanitize(&other.to_string()),
    }
}

fn sanitize(s: &str) -> String {
    s.replace([',', '\n', '\r'], ";")
}

/// One atlas row; the hash is `-` when the point's configuration is invalid.
fn evaluate(cfg: &LoadedConfig, plan: &SweepPlan, index: usize, out: &Path, stride: Option<u64>) -> Vec<String> {
    let point = plan.point(index);
    let mut row = vec![index.to_string()];
    let values: Vec<String> = point.iter().map(|(_, v)| cell(v)).collect();
    let resolved = cfg.with_overrides(&point).map(|mut rc| {
        if let Some(k) = stride {
            rc.sample_stride = k;
        }
        rc
    });
    let rc = match resolved {
        Ok(rc) => rc,
        Err(message) => {
            row.push("-".into());
            row.extend(values);
            row.extend(["invalid", "", "", "", ""].map(String::from));
            row.push(sanitize(&message));
            return row;
        }
    };
    let hash = rc.hash();
    row.push(hash.clone());
    row.extend(values);
    row.push(format!("{:?}", classify_regime(&rc.model).verdict));
    if !plan.simulate {
        row.extend(["not-run", "", "", "", ""].map(String::from));
        return row;
    }
    match simulate(&rc, &out.join("points").join(&hash[..16])) {
        Ok(report) => {
            let t = &report.record.termination;
            row.push(format!("{:?}", t.cause));
            row.push(g17(t.time));
            row.push(opt_g17(t.fit.map(|f| f.t_blowup)));
            row.push(opt_g17(t.fit.map(|f| f.exponent)));
            row.push(String::new());
        }
        Err(e) => {
            warn!("point {index} failed: {e}");
            row.extend(["failed", "", "", ""].map(String::from));
            row.push(sanitize(&e.to_string()));
        }
    }
    row
}

/// Rows of an existing atlas or journal with the same header, keyed by hash.
fn completed_rows(path: &Path, header: &str) -> HashMap<String, Vec<String>> {
    let Ok(text) = std::fs::read_to_string(path) else {
        return HashMap::new();
    };
    let mut lines = text.lines();
    if lines.next() != Some(header) {
        warn!("{} has a different header; not resuming from it", path.display());
        return HashMap::new();
    }
    let width = header.split(',').count();
    lines
        .map(|l| l.split(',').map(String::from).collect::<Vec<_>>())
        .filter(|f| f.len() == width && f[1] != "-" && f[width - 1].is_empty() && !matches!(f[width - 5].as_str(), "failed" | "not-run"))
        .map(|f| (f[1].clone(), f))
        .collect()
}

pub struct SweepSummary {
    pub points: usize,
    pub reused: usize,
    pub failed: usize,
}

pub fn sweep(
    cfg: &LoadedConfig,
    out: &Path,
    workers: Option<usize>,
    stride: Option<u64>,
) -> Result<SweepSummary, HarnessError> {
    let plan = cfg.sweep_plan()?;
    let header = atlas_header(&plan);
    let header_line = header.join(",");
    let atlas = out.join("atlas.csv");
    let journal = out.join("atlas.partial.csv");
    std::fs::create_dir_all(out).map_err(|e| HarnessError::Io { path: out.to_path_buf(), source: e })?;

    let mut done = completed_rows(&atlas, &header_line);
    done.extend(completed_rows(&journal, &header_line));

    // hashes are known before running, so completed points can be skipped
    let hashes: Vec<Option<String>> = (0..plan.len())
        .map(|i| {
            cfg.with_overrides(&plan.point(i)).ok().map(|mut rc| {
                if let Some(k) = stride {
                    rc.sample_stride = k;
                }
                rc.hash()
            })
        })
        .collect();

    let journal_file = {
        let fresh = !journal.exists() || completed_rows(&journal, &header_line).is_empty();
        let mut f = std::fs::OpenOptions::new()
            .create(true)
            .append(!fresh)
            .write(true)
            .truncate(fresh)
            .open(&journal)
            .map_err(|e| HarnessError::Io { path: journal.clone(), source: e })?;
        if fresh {
            writeln!(f, "{header_line}").map_err(|e| HarnessError::Io { path: journal.clone(), source: e })?;
        }
        Mutex::new(f)
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| HarnessError::Record(e.to_string()))?;
    let reused = AtomicCount::default();
    let rows: Vec<Vec<String>> = pool.install(|| {
        (0..plan.len())
            .into_par_iter()
            .map(|i| {
                if let Some(row) = hashes[i].as_ref().and_then(|h| done.get(h)) {
                    reused.bump();
                    let mut row = row.clone();
                    row[0] = i.to_string();
                    return row;
                }
                let row = evaluate(cfg, &plan, i, out, stride);
                if let Ok(mut f) = journal_file.lock() {
                    // the journal only speeds up resumption; a failed append is not fatal
                    let _ = writeln!(f, "{}", row.join(","));
                }
                row
            })
            .collect()
    });

    let failed = rows.iter().filter(|r| !r.last().is_some_and(String::is_empty)).count();
    let refs: Vec<&str> = header.iter().map(String::as_str).collect();
    write_atomic(&atlas, csv(&refs, rows).as_bytes()).map_err(|e| HarnessError::Io { path: atlas.clone(), source: e })?;
    drop(journal_file);
    let _ = std::fs::remove_file(&journal);
    let summary = SweepSummary { points: plan.len(), reused: reused.get(), failed };
    info!("sweep: {} points, {} reused, {} failed", summary.points, summary.reused, summary.failed);
    Ok(summary)
}

#[derive(Default)]
struct AtomicCount(std::sync::atomic::AtomicUsize);

impl AtomicCount {
    fn bump(&self) {
        self.0.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
    }

    fn get(&self) -> usize {
        self.0.load(std::sync::atomic::Ordering::Relaxed)
    }
}
