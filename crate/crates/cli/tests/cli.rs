use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_muskat"));
    for var in ["MUSKAT_OUT", "MUSKAT_SEED", "MUSKAT_THREADS", "MUSKAT_CONFIG", "MUSKAT_EPS"] {
        c.env_remove(var);
    }
    c
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn write_cfg(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

#[test]
fn flat_config_stays_flat() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let o = run(&["simulate", "--config", config("flat.cfg").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let traj = rows(&out.join("trajectory.csv"));
    let last = traj.last().unwrap();
    let dev = last[1..]
        .iter()
        .map(|v| (v.parse::<f64>().unwrap() - 0.5).abs())
        .fold(0.0, f64::max);
    assert!(dev <= 1e-12, "{dev}");
}

#[test]
fn linear_decay_rate_column() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let o = run(&["simulate", "--config", config("linear_decay.cfg").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let header = fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    assert!(header.starts_with("time,sup_norm,lip_seminorm,l2_norm,dn_pairing,theta_l2,fitted_rate\n"));
    let diag = rows(&out.join("diagnostics.csv"));
    assert_eq!(diag[0][6], "undefined");
    let rate: f64 = diag.last().unwrap()[6].parse().unwrap();
    assert!((rate / 2.0 - 1.0).abs() <= 0.01, "{rate}");
}

#[test]
fn manifest_digests_match_files() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    assert_eq!(code(&run(&["simulate", "--config", config("linear_decay.cfg").to_str().unwrap(), "--out", out.to_str().unwrap()])), 0);
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let outputs = m["outputs"].as_array().unwrap();
    assert_eq!(outputs.len(), 3);
    for e in outputs {
        let bytes = fs::read(out.join(e["file"].as_str().unwrap())).unwrap();
        assert_eq!(hex::encode(Sha256::digest(&bytes)), e["sha256"].as_str().unwrap());
        assert_eq!(bytes.len() as u64, e["bytes"].as_u64().unwrap());
    }
    assert_eq!(m["config"]["profile"], "cosine");
    assert_eq!(m["parameters"]["n_steps"], 500);
    assert_eq!(m["code_version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn missing_config_leaves_no_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let o = run(&["simulate", "--config", "/nonexistent/x.cfg", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(!out.exists());
}

#[test]
fn schema_errors_name_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let cfg = write_cfg(tmp.path(), "bad.cfg", "t_final = 1\nprofile = flat\nviscosity = 2\n");
    let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("viscosity"));
    let cfg = write_cfg(tmp.path(), "bad2.cfg", "t_final = 1\nprofile = flat\nkappa = -1\n");
    let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("kappa"));
    assert!(!out.exists());
    assert_eq!(code(&run(&["simulate"])), 2);
}

#[test]
fn runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_cfg(
        tmp.path(),
        "r.cfg",
        "n_points = 32\nt_final = 0.2\nprofile = random\namplitude = 0.3\nepsilon = 0.01\nscheme = heun\n",
    );
    let mut digests = Vec::new();
    for (i, seed) in ["5", "5", "6"].iter().enumerate() {
        let out = tmp.path().join(format!("o{i}"));
        let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", seed]);
        assert_eq!(code(&o), 0);
        let mut all = Vec::new();
        for f in ["trajectory.csv", "diagnostics.csv", "plot.csv"] {
            all.extend(fs::read(out.join(f)).unwrap());
        }
        digests.push(hex::encode(Sha256::digest(&all)));
    }
    assert_eq!(digests[0], digests[1]);
    assert_ne!(digests[0], digests[2]);
}

#[test]
fn environment_overrides_flags_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("env-out");
    let o = bin()
        .args(["simulate"])
        .env("MUSKAT_CONFIG", config("flat.cfg"))
        .env("MUSKAT_OUT", &out)
        .env("MUSKAT_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("manifest.json").exists());
}

#[test]
fn validate_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("v");
    let o = run(&["validate", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let table = String::from_utf8_lossy(&o.stdout);
    assert!(table.starts_with("check\tstatus\tdetail"));
    assert!(!table.contains("FAIL"));
    assert!(out.join("validate.tsv").exists());
}

#[test]
fn converge_reports_monotone_cauchy_column() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("c");
    let o = run(&["converge", "--config", config("kink_converge.cfg").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let d: Vec<f64> = rows(&out.join("cauchy.csv")).iter().map(|r| r[3].parse().unwrap()).collect();
    assert_eq!(d.len(), 3);
    assert!(d.windows(2).all(|w| w[1] < w[0]), "{d:?}");
}

#[test]
fn converge_edge_cases() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config("kink_converge.cfg");
    let out = tmp.path().join("single");
    let o = run(&["converge", "--config", cfg.to_str().unwrap(), "--eps", "0.1", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(rows(&out.join("cauchy.csv")).is_empty());
    let out = tmp.path().join("bad");
    let o = run(&["converge", "--config", cfg.to_str().unwrap(), "--eps", "0.05,0.1", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(!out.exists());
}

#[test]
fn spectrum_rates_match_linear_theory() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("s");
    let o = run(&["spectrum", "--config", config("spectrum.cfg").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(&out.join("spectrum.csv"));
    assert_eq!(r.len(), 5);
    for row in &r {
        let ratio: f64 = row[3].parse().unwrap();
        assert!((0.99..=1.01).contains(&ratio), "{row:?}");
    }
}

#[test]
fn spectrum_zero_and_large_amplitude() {
    let tmp = tempfile::tempdir().unwrap();
    let base = fs::read_to_string(config("spectrum.cfg")).unwrap();
    let zero = write_cfg(tmp.path(), "z.cfg", &base.replace("amplitude = 0.001", "amplitude = 0"));
    let out = tmp.path().join("z");
    assert_eq!(code(&run(&["spectrum", "--config", zero.to_str().unwrap(), "--out", out.to_str().unwrap()])), 0);
    for row in rows(&out.join("spectrum.csv")) {
        assert_eq!(row[1], "undefined");
    }
    for row in rows(&out.join("trajectory.csv")) {
        assert!(row[1..].iter().all(|v| v.parse::<f64>().unwrap() == 0.0));
    }
    // nonlinear regime: rates are reported, not asserted
    let big = write_cfg(
        tmp.path(),
        "b.cfg",
        &base
            .replace("amplitude = 0.001", "amplitude = 0.5")
            .replace("t_final = 1", "t_final = 0.1"),
    );
    let out = tmp.path().join("b");
    assert_eq!(code(&run(&["spectrum", "--config", big.to_str().unwrap(), "--out", out.to_str().unwrap()])), 0);
    assert_eq!(rows(&out.join("spectrum.csv")).len(), 5);
}
