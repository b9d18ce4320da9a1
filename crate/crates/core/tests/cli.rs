use std::path::Path;
use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_heatlab");

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn heatlab(args: &[&str]) -> std::process::Output {
    Command::new(BIN).args(args).output().unwrap()
}

const SHARP: &str = r#"
model = "vanhove"
seed = 4
beta = 1.0
t_grid = { start = 0.5, stop = 4.0, points = 8 }
alpha_grid = [-1.0, 0.0, 1.0]
[formfactor]
family = "SharpCutoff"
cutoff = 3.0
ir_power = 1.0
[vanhove]
t = 1.0
samples = 2000
moment_n = [1, 2]
gammas = [1.0]
window = [1.0, 2.0]
"#;

#[test]
fn empty_t_grid_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "model = \"vanhove\"\nt_grid = []\n");
    let out = heatlab(&["vanhove", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("t_grid"));
}

#[test]
fn unknown_key_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "beta = 1.0\n\nbetta = 2.0\n");
    let out = heatlab(&["vanhove", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn fock_cap_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        r#"
model = "fermion-impurity"
beta = 1.0
d_list = [20]
t_grid = [0.0, 1.0]
[formfactor]
family = "ExpTail"
rate = 1.0
[impurity]
scheme = { scheme = "Midpoint", spacing = 0.5 }
"#,
    );
    let out = heatlab(&["fermion-impurity", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn sharp_cutoff_scan_is_all_convergent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SHARP);
    let out = heatlab(&["vanhove", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("vanhove_report.json")).unwrap()).unwrap();
    assert_eq!(report["heatlab_version"], env!("CARGO_PKG_VERSION"));
    assert!(report["tolerances"]["abs_tol"].is_number());
    let eq = report["results"]["equivalence"].as_array().unwrap();
    assert_eq!(eq.len(), 3);
    for r in eq {
        for part in ["sup_over_grid", "window_integral", "form_factor"] {
            assert_eq!(r[part]["status"], "Convergent", "{}", r["label"]);
        }
    }
    let samples = std::fs::read_to_string(dir.path().join("vanhove_samples.csv")).unwrap();
    let mut lines = samples.lines();
    assert!(lines.next().unwrap().starts_with('#'));
    assert_eq!(lines.next(), Some("delta_q"));
    assert_eq!(lines.count(), 2000);
}

#[test]
fn seed_flag_changes_samples_and_reruns_match() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SHARP);
    let cfg = cfg.to_str().unwrap();
    let mut files = Vec::new();
    for (sub, seed) in [("a", "1"), ("b", "1"), ("c", "2")] {
        let out_dir = dir.path().join(sub);
        let out = heatlab(&["vanhove", "--config", cfg, "--seed", seed, "--threads", "1", "--out", out_dir.to_str().unwrap()]);
        assert!(out.status.success());
        files.push(std::fs::read(out_dir.join("vanhove_samples.csv")).unwrap());
    }
    assert_eq!(files[0], files[1]);
    assert_ne!(files[0], files[2]);
}

#[test]
fn tails_reads_sample_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SHARP);
    let out = heatlab(&["vanhove", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let samples = dir.path().join("vanhove_samples.csv");
    let tails = write(
        dir.path(),
        "t.toml",
        &format!("[tails]\nsamples = {:?}\nk = 100\n", samples.to_str().unwrap()),
    );
    let out = heatlab(&["tails", "--config", tails.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("tails_report.json")).unwrap()).unwrap();
    assert_eq!(report["results"]["samples"], 2000);
}
