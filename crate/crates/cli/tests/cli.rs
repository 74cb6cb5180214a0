use std::path::Path;
use std::process::{Command, Output};

fn bulkedge(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bulkedge"))
        .args(args)
        .current_dir(cwd)
        .env("BULKEDGE_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn landau_check_passes_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"options": {"numeric": false}}"#);
    let out = dir.path().join("run");
    let o = bulkedge(&["landau-check", "--config", &cfg, "--out", out.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["experiment"], "landau-check");
    let checks = summary["checks"].as_array().unwrap();
    assert!(checks.iter().all(|c| c["pass"] == true));
    let gap = checks.iter().find(|c| c["name"] == "triple_identity_gap").unwrap();
    assert!(gap["value"].as_f64().unwrap() < 1e-6);
    assert!(out.join("landau_lattice.csv").exists());
    assert_eq!(summary["resolved_config"]["options"]["numeric"], false);
}

#[test]
fn summary_reruns_to_the_same_checks() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"seed": 5, "options": {"numeric": false}}"#);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let o = bulkedge(&["landau-check", "--config", &cfg, "--out", a.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let summary = a.join("summary.json");
    let o = bulkedge(
        &["landau-check", "--config", summary.to_str().unwrap(), "--out", b.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        std::fs::read(a.join("summary.json")).unwrap(),
        std::fs::read(b.join("summary.json")).unwrap()
    );
}

#[test]
fn malformed_config_exits_2_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    for body in ["{not json", r#"{"options": {"lattice": 3}}"#, r#"{"thresholds": {"nope": 1}}"#] {
        let cfg = write(dir.path(), "bad.json", body);
        let o = bulkedge(&["landau-check", "--config", &cfg, "--out", out.to_str().unwrap()], dir.path());
        assert_eq!(o.status.code(), Some(2), "{body}");
        assert!(!out.exists());
    }
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["no-such-experiment"],
        vec!["landau-check", "--cutoff", "sharp"],
        vec!["landau-check", "--threads", "0"],
        vec!["streda", "--window", "1.2", "0.8"],
        vec!["landau-check", "--config", "missing.json"],
    ] {
        let o = bulkedge(&args, dir.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
    assert!(!dir.path().join("out").exists());
}

#[test]
fn failed_threshold_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"thresholds": {"triple_identity_gap": 0.0}, "options": {"numeric": false}}"#,
    );
    let out = dir.path().join("o");
    let o = bulkedge(&["landau-check", "--config", &cfg, "--out", out.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL triple_identity_gap"));
    assert!(out.join("summary.json").exists());
}

#[test]
fn sweep_csv_is_independent_of_threads() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str, name: &str| {
        let out = dir.path().join(name);
        let o = bulkedge(
            &["sweep", "--seed", "42", "--threads", threads, "--out", out.to_str().unwrap()],
            dir.path(),
        );
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(out.join("sweep.csv")).unwrap()
    };
    let one = run("1", "w1");
    assert_eq!(one, run("3", "w3"));
    let text = String::from_utf8(one).unwrap();
    assert_eq!(text.lines().count(), 1 + 24);
    assert!(text.starts_with("key,b,mu,T,L,replica,seed,status,value,error"));
}

#[test]
fn window_override_reaches_the_experiment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"options": {"top": 8.0, "h": 0.5}}"#);
    let out = dir.path().join("f");
    let o = bulkedge(
        &["spectral-flow", "--config", &cfg, "--window", "0.8", "1.2", "--kcount", "61", "--out", out.to_str().unwrap()],
        dir.path(),
    );
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("flow_gap1"), "{stdout}");
    assert!(!stdout.contains("flow_gap2"));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["resolved_config"]["k_count"], 61);
    assert!(out.join("bands_gap1.csv").exists());
}

#[test]
fn shipped_configs_resolve() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = bulkedge_core::ExperimentConfig::from_path(&path).unwrap();
        let id = cfg.experiment.expect("shipped configs name their experiment");
        assert_eq!(path.file_stem().unwrap().to_str(), Some(id.as_str()));
        bulkedge_core::experiments::resolve(id, &cfg).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        seen += 1;
    }
    assert!(seen >= 4);
}
