use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BASE: &str = "name = \"t\"\n\n[spec]\ndim = 1\nmass = 2.0\nn_max = 2\n\n[sampling]\ncount = 4000\nseed = 3\n";

fn with_coupling(g: f64) -> String {
    format!("coupling = {g:?}\n{BASE}")
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str], config: Option<&Path>, out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cylfield"));
    cmd.args(args);
    if let Some(c) = config {
        cmd.arg("--config").arg(c);
    }
    if let Some(o) = out {
        cmd.arg("--out").arg(o);
    }
    cmd.output().unwrap()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn success_writes_tables_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), BASE);
    let out = tmp.path().join("out");
    let o = run(&["shells"], Some(&cfg), Some(&out));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let table = std::fs::read_to_string(out.join("shells.tsv")).unwrap();
    assert!(table.starts_with("n:int\t"));
    assert_eq!(table.lines().count(), 4);
    let m = manifest(&out);
    assert_eq!(m["subcommand"], "shells");
    assert_eq!(m["config"]["spec"]["n_max"], 2);
    let files = m["files"].as_array().unwrap();
    assert!(files.iter().any(|f| f["path"] == "shells.tsv" && f["sha256"].as_str().unwrap().len() == 64));
}

#[test]
fn missing_or_malformed_config_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run(&["wick"], None, Some(&tmp.path().join("a"))).status.code(), Some(2));
    let bad = write_config(tmp.path(), &format!("{BASE}bogus = 1\n"));
    assert_eq!(run(&["wick"], Some(&bad), Some(&tmp.path().join("b"))).status.code(), Some(2));
    let bad = write_config(tmp.path(), &BASE.replace("mass = 2.0", "mass = -1.0"));
    let out = tmp.path().join("c");
    let o = run(&["wick"], Some(&bad), Some(&out));
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
    let missing = tmp.path().join("nope.toml");
    assert_eq!(run(&["wick"], Some(&missing), Some(&tmp.path().join("d"))).status.code(), Some(2));
}

#[test]
fn ess_collapse_exits_3_with_error_record() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &with_coupling(50.0));
    let out = tmp.path().join("out");
    let o = run(&["moments"], Some(&cfg), Some(&out));
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let err: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("error.json")).unwrap()).unwrap();
    assert_eq!(err["exit_code"], 3);
    assert!(err["error"].as_str().unwrap().contains("effective sample size"));
}

#[test]
fn manifest_replays_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &with_coupling(0.02));
    let first = tmp.path().join("first");
    assert!(run(&["moments", "--seed", "99"], Some(&cfg), Some(&first)).status.success());
    assert_eq!(manifest(&first)["config"]["sampling"]["seed"], 99);
    let replay = tmp.path().join("replay");
    assert!(run(&["moments"], Some(&first.join("manifest.json")), Some(&replay)).status.success());
    for f in ["moments.tsv", "ensemble.tsv"] {
        assert_eq!(std::fs::read(first.join(f)).unwrap(), std::fs::read(replay.join(f)).unwrap(), "{f}");
    }
    let other = tmp.path().join("other");
    assert!(run(&["moments"], Some(&cfg), Some(&other)).status.success());
    assert_ne!(std::fs::read(first.join("moments.tsv")).unwrap(), std::fs::read(other.join("moments.tsv")).unwrap());
}

#[test]
fn thread_count_does_not_change_results() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &with_coupling(0.02));
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert!(run(&["mixing", "--threads", "1"], Some(&cfg), Some(&a)).status.success());
    assert!(run(&["mixing", "--threads", "3"], Some(&cfg), Some(&b)).status.success());
    assert_eq!(manifest(&b)["threads"], 3);
    for f in ["mixing_decay.tsv", "series/mixing_heat.tsv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert_eq!(run(&["wick", "--threads", "0"], Some(&cfg), Some(&tmp.path().join("c"))).status.code(), Some(2));
}

#[test]
fn env_var_sets_default_output_root() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), BASE);
    let root = tmp.path().join("runs");
    let o = Command::new(env!("CARGO_BIN_EXE_cylfield"))
        .args(["wick", "--config"])
        .arg(&cfg)
        .env("CYLFIELD_OUT", &root)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(root.join("t").join("wick.tsv").is_file());
}

#[test]
fn saved_ensemble_is_written_only_on_request() {
    let tmp = tempfile::tempdir().unwrap();
    let plain = write_config(tmp.path(), BASE);
    let a = tmp.path().join("a");
    assert!(run(&["moments"], Some(&plain), Some(&a)).status.success());
    assert!(!a.join("ensemble.bin").exists());
    let saving = write_config(tmp.path(), &format!("{BASE}\n[output]\nsave_ensemble = true\n"));
    let b = tmp.path().join("b");
    assert!(run(&["moments"], Some(&saving), Some(&b)).status.success());
    assert!(std::fs::metadata(b.join("ensemble.bin")).unwrap().len() > 0);
}
