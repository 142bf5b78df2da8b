use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chemo_core::model::{classify_regime, select_lp_exponent, Species};
use clap::{Parser, Subcommand};

use crate::audit::{audit, load_report, render};
use crate::config::LoadedConfig;
use crate::format::g17;
use crate::simulate::{initial_csv, initial_data, simulate, write_file};
use crate::sweep::sweep;
use crate::HarnessError;

#[derive(Debug, Parser)]
#[command(name = "chemolab", version, about = "Radial chemotaxis-competition experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the predicted regime and every hypothesis with its threshold.
    Classify {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run one configuration and write runrecord.json, series.csv and plotdata/.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Sample every K accepted steps (overrides run.sample_stride).
        #[arg(long)]
        stride: Option<u64>,
    },
    /// Run every point of [sweep.axes] and write atlas.csv.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: available parallelism).
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        stride: Option<u64>,
    },
    /// Re-check a saved runrecord.json; exits 1 if a hard invariant is violated.
    Audit {
        #[arg(long)]
        record: PathBuf,
        /// Config whose [moments] section must match the recorded one.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the configured initial data, validate it and write initial.csv.
    MakeData {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn out_dir(flag: Option<PathBuf>, cfg: &LoadedConfig) -> PathBuf {
    flag.or_else(|| cfg.output_dir()).unwrap_or_else(|| PathBuf::from("out"))
}

pub fn classify_text(cfg: &LoadedConfig) -> Result<String, HarnessError> {
    let p = cfg.model()?;
    let r = classify_regime(&p);
    let mut s = String::new();
    let _ = writeln!(s, "verdict: {:?}", r.verdict);
    for c in &r.details {
        let threshold = c.threshold.map(g17).unwrap_or_else(|| "-".into());
        let _ = writeln!(s, "  {:<18} {:<5} threshold {}", c.name, if c.satisfied { "yes" } else { "no" }, threshold);
    }
    for (name, species) in [("lp_exponent_u", Species::First), ("lq_exponent_v", Species::Second)] {
        let value = select_lp_exponent(&p, species).map(g17).unwrap_or_else(|| "infeasible".into());
        let _ = writeln!(s, "  {name:<18} {value}");
    }
    Ok(s)
}

fn run_command(command: Command) -> Result<i32, HarnessError> {
    match command {
        Command::Classify { config } => {
            let cfg = LoadedConfig::load(&config)?;
            print!("{}", classify_text(&cfg)?);
            Ok(0)
        }
        Command::Simulate { config, out, stride } => {
            let cfg = LoadedConfig::load(&config)?;
            let mut rc = cfg.run_config()?;
            if let Some(k) = stride {
                rc.sample_stride = k.max(1);
            }
            let out = out_dir(out, &cfg);
            let report = simulate(&rc, &out)?;
            let t = &report.record.termination;
            println!("{:?} at t = {} after {} steps; wrote {}", t.cause, g17(t.time), t.steps, out.display());
            for v in report.audits.violations() {
                println!("warning: {v} violated");
            }
            Ok(0)
        }
        Command::Sweep { config, out, workers, stride } => {
            let cfg = LoadedConfig::load(&config)?;
            let out = out_dir(out, &cfg);
            let summary = sweep(&cfg, &out, workers, stride)?;
            println!(
                "{} points ({} reused, {} failed); wrote {}",
                summary.points,
                summary.reused,
                summary.failed,
                out.join("atlas.csv").display()
            );
            Ok(0)
        }
        Command::Audit { record, config, out } => {
            let moments = match config {
                Some(path) => LoadedConfig::load(&path)?.run_config()?.moments,
                None => None,
            };
            let report = load_report(&record)?;
            let audits = audit(&report, moments.as_ref())?;
            let text = render(&report, &audits);
            print!("{text}");
            let dir = out.unwrap_or_else(|| record.parent().map(Path::to_path_buf).unwrap_or_default());
            let json = serde_json::to_string_pretty(&audits).map_err(|e| HarnessError::Record(e.to_string()))?;
            write_file(&dir.join("audit.json"), (json + "\n").as_bytes())?;
            Ok(if audits.violations().is_empty() { 0 } else { 1 })
        }
        Command::MakeData { config, out } => {
            let cfg = LoadedConfig::load(&config)?;
            let rc = cfg.run_config()?;
            let out = out_dir(out, &cfg);
            let (u, v, report) = initial_data(&rc)?;
            write_file(&out.join("initial.csv"), initial_csv(&u, &v).as_bytes())?;
            let json = serde_json::to_string_pretty(&report).map_err(|e| HarnessError::Record(e.to_string()))?;
            write_file(&out.join("validation.json"), (json + "\n").as_bytes())?;
            println!("mass u {}, mass v {}", g17(u.mass()), g17(v.mass()));
            for c in &report.checks {
                println!("  {:<16} {}  {}", c.name, if c.passed { "PASS" } else { "FAIL" }, c.detail);
            }
            Ok(if report.passed() { 0 } else { 1 })
        }
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CHEMO_LOG", "warn")).init();
    let cli = Cli::parse();
    match run_command(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
