use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn chemolab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chemolab")).args(args).output().unwrap()
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn write(dir: &Path, name: &str, contents: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path.to_str().unwrap().to_string()
}

fn simulate(config: &str, out: &Path) {
    let o = chemolab(&["simulate", "--config", config, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", text(&o.stderr));
}

fn shipped(name: &str) -> String {
    configs().join(name).to_str().unwrap().to_string()
}

#[test]
fn classify_shipped_configs() {
    let o = chemolab(&["classify", "--config", &shipped("bounded.toml")]);
    assert!(o.status.success());
    let out = text(&o.stdout);
    assert!(out.starts_with("verdict: BoundedByThm31"), "{out}");
    assert!(out.contains("bdd.chi1"));
    assert!(out.contains("lp_exponent_u"));

    let o = chemolab(&["classify", "--config", &shipped("jl_blowup.toml")]);
    assert!(text(&o.stdout).starts_with("verdict: JLBlowupEligible"), "{}", text(&o.stdout));
}

#[test]
fn empty_config_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "empty.toml", "");
    let o = chemolab(&["classify", "--config", &path]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o.stderr).contains("empty.toml"));
}

#[test]
fn bad_exponent_names_field_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "bad.toml", "[model]\nn = 3\nsignal = \"keller-segel\"\nkappa1 = 1.0\n");
    let o = chemolab(&["classify", "--config", &path]);
    assert_eq!(o.status.code(), Some(2));
    let err = text(&o.stderr);
    assert!(err.contains("model.kappa1"), "{err}");
    assert!(err.contains(":4:"), "{err}");
}

#[test]
fn unknown_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "typo.toml", "[model]\nn = 3\nsignal = \"keller-segel\"\nchi = 2.0\n");
    let o = chemolab(&["classify", "--config", &path]);
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o.stderr).contains("chi"));
}

#[test]
fn zero_data_stays_zero() {
    let dir = tempfile::tempdir().unwrap();
    simulate(&shipped("zero.toml"), dir.path());
    let series = std::fs::read_to_string(dir.path().join("series.csv")).unwrap();
    let mut lines = series.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let mass = header.iter().position(|h| *h == "mass_u").unwrap();
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    assert!(rows.len() > 2);
    for row in &rows {
        for col in mass..mass + 6 {
            assert_eq!(row[col], "0", "{row:?}");
        }
    }
    let profiles = std::fs::read_to_string(dir.path().join("plotdata/profiles.csv")).unwrap();
    assert_eq!(profiles.lines().next(), Some("r,u,v,w"));
}

#[test]
fn series_header_is_pinned() {
    let dir = tempfile::tempdir().unwrap();
    simulate(&shipped("zero.toml"), dir.path());
    let series = std::fs::read_to_string(dir.path().join("series.csv")).unwrap();
    assert_eq!(
        series.lines().next().unwrap(),
        "t,step,dt,mass_u,mass_v,sup_u,sup_v,min_u,min_v,lp_u,lq_v,concavity_margin,phi_u,phi_v,psi_u,psi_v,profile_constant"
    );
    let record: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("runrecord.json")).unwrap()).unwrap();
    assert_eq!(record["format_version"], 1);
    assert_eq!(record["series_version"], 1);
    assert_eq!(record["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    simulate(&shipped("ks_blowup.toml"), &a);
    simulate(&shipped("ks_blowup.toml"), &b);
    for file in ["series.csv", "runrecord.json", "plotdata/sup_norms.csv", "plotdata/moments.csv", "plotdata/profiles.csv"] {
        assert_eq!(std::fs::read(a.join(file)).unwrap(), std::fs::read(b.join(file)).unwrap(), "{file}");
    }
}

#[test]
fn single_point_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "one.toml",
        "model.n = 3\nmodel.signal = \"keller-segel\"\ngrid.cells = 40\nstep.t_end = 0.05\ninitial.kind = \"zero\"\n\
         [sweep.axes]\nmodel.chi1 = [1.5]\n",
    );
    let out = dir.path().join("out");
    let o = chemolab(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let atlas = std::fs::read_to_string(out.join("atlas.csv")).unwrap();
    let lines: Vec<&str> = atlas.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(
        lines[0],
        "point,hash,model.chi1,verdict,termination,final_time,fit_blowup_time,fit_exponent,error"
    );
    assert!(lines[1].contains(",1.5,BoundedByThm31,ReachedTEnd,0.050000000000000003,,,"), "{}", lines[1]);
    let hash = lines[1].split(',').nth(1).unwrap();
    assert!(out.join("points").join(&hash[..16]).join("series.csv").exists());
    assert!(!out.join("atlas.partial.csv").exists());
}

#[test]
fn threshold_sweep_flips_at_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = chemolab(&["sweep", "--config", &shipped("sweep_chi.toml"), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let atlas = std::fs::read_to_string(out.join("atlas.csv")).unwrap();
    let verdicts: Vec<(String, String)> = atlas
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[2].to_string(), f[4].to_string())
        })
        .collect();
    assert_eq!(verdicts.len(), 6);
    for (chi, verdict) in &verdicts {
        let bounded = chi.parse::<f64>().unwrap() < 3.0;
        assert_eq!(verdict == "BoundedByThm31", bounded, "chi {chi}: {verdict}");
    }
}

#[test]
fn empty_axes_give_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "none.toml", "model.n = 3\nmodel.signal = \"keller-segel\"\n[sweep.axes]\n");
    let out = dir.path().join("out");
    let o = chemolab(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    let atlas = std::fs::read_to_string(out.join("atlas.csv")).unwrap();
    assert_eq!(atlas.lines().count(), 1);
}

#[test]
fn sweep_resumes_completed_points() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "two.toml",
        "model.n = 3\nmodel.signal = \"keller-segel\"\ngrid.cells = 40\nstep.t_end = 0.02\n\
         initial.kind = \"bump\"\ninitial.u_amplitude = 1.0\ninitial.v_amplitude = 0.5\n\
         [sweep.axes]\nmodel.chi1 = [0.5, 1.0]\n",
    );
    let out = dir.path().join("out");
    let args = ["sweep", "--config", cfg.as_str(), "--out", out.to_str().unwrap()];
    assert!(chemolab(&args).status.success());
    let first = std::fs::read(out.join("atlas.csv")).unwrap();
    let o = chemolab(&args);
    assert!(o.status.success());
    assert!(text(&o.stdout).contains("2 reused"), "{}", text(&o.stdout));
    assert_eq!(std::fs::read(out.join("atlas.csv")).unwrap(), first);
}

fn edit_record(dir: &Path, config: &str, edit: impl FnOnce(&mut Value)) -> (PathBuf, Output) {
    simulate(config, dir);
    let path = dir.join("runrecord.json");
    let mut record: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    edit(&mut record);
    std::fs::write(&path, serde_json::to_string(&record).unwrap()).unwrap();
    let o = chemolab(&["audit", "--record", path.to_str().unwrap()]);
    (path, o)
}

#[test]
fn audit_flags_mass_growth() {
    let dir = tempfile::tempdir().unwrap();
    let (_, o) = edit_record(dir.path(), &shipped("bounded.toml"), |r| {
        let samples = r["record"]["samples"].as_array_mut().unwrap();
        let k = 1;
        let m = samples[k]["mass_u"].as_f64().unwrap();
        samples[k]["mass_u"] = Value::from(2.0 * m + 1.0);
    });
    assert_eq!(o.status.code(), Some(1));
    let out = text(&o.stdout);
    assert!(out.contains("VIOLATED: mass growth bound"), "{out}");
    assert!(dir.path().join("audit.json").exists());
}

#[test]
fn audit_of_clean_run_is_ok() {
    let dir = tempfile::tempdir().unwrap();
    let (_, o) = edit_record(dir.path(), &shipped("jl_blowup.toml"), |_| {});
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stdout));
    let out = text(&o.stdout);
    assert!(out.contains("riccati     CONSISTENT"), "{out}");
    assert!(out.contains("result      OK"));
}

#[test]
fn audit_recovers_synthetic_blowup_time() {
    // φ = 1/(T - t) solves φ' = φ², so the fitted bound should land on T
    let t_blowup = 1.0;
    let dir = tempfile::tempdir().unwrap();
    let (_, o) = edit_record(dir.path(), &shipped("jl_blowup.toml"), |r| {
        let template = r["record"]["samples"][0].clone();
        let samples: Vec<Value> = (0..90)
            .map(|k| {
                let t = k as f64 * 0.01;
                let mut s = template.clone();
                s["t"] = Value::from(t);
                s["step"] = Value::from(k);
                let m = &mut s["moments"];
                m["t"] = Value::from(t);
                m["phi_u"] = Value::from(1.0 / (t_blowup - t));
                m["psi_u"] = Value::from(1.0 / (t_blowup - t));
                s
            })
            .collect();
        r["record"]["samples"] = Value::from(samples);
        r["record"]["termination"]["time"] = Value::from(0.89);
    });
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stdout));
    let audits: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("audit.json")).unwrap()).unwrap();
    let bound = audits["inequality"]["audit"]["blowup_bound"].as_f64().unwrap();
    assert!((bound - t_blowup).abs() < 0.02 * t_blowup, "bound {bound}");
    assert_eq!(audits["inequality"]["consistent"], true);
}

#[test]
fn audit_rejects_mismatched_moments() {
    let dir = tempfile::tempdir().unwrap();
    simulate(&shipped("jl_blowup.toml"), dir.path());
    let record = dir.path().join("runrecord.json");
    let other = write(
        dir.path(),
        "other.toml",
        "model.n = 5\nmodel.signal = \"jaeger-luckhaus\"\nmoments.s0 = 0.002\nmoments.b = 1.15\n",
    );
    let o = chemolab(&["audit", "--record", record.to_str().unwrap(), "--config", &other]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o.stderr).contains("moments"));
}

#[test]
fn make_data_round_trips_through_file_input() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let o = chemolab(&["make-data", "--config", &shipped("jl_blowup.toml"), "--out", data.to_str().unwrap()]);
    assert!(o.status.success(), "{}", text(&o.stdout));
    let csv = std::fs::read_to_string(data.join("initial.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("r,u,v"));

    let base = std::fs::read_to_string(configs().join("jl_blowup.toml")).unwrap();
    let mut from_file = String::new();
    let mut skipping = false;
    for line in base.lines() {
        if line.trim_start().starts_with('[') {
            skipping = line.trim() == "[initial]";
        }
        if !skipping {
            from_file.push_str(line);
            from_file.push('\n');
        }
    }
    from_file.push_str(&format!("[initial]\nkind = \"file\"\npath = {:?}\n", data.join("initial.csv").to_str().unwrap()));
    let cfg = write(dir.path(), "from_file.toml", &from_file);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    simulate(&shipped("jl_blowup.toml"), &a);
    simulate(&cfg, &b);
    assert_eq!(std::fs::read(a.join("series.csv")).unwrap(), std::fs::read(b.join("series.csv")).unwrap());
}
