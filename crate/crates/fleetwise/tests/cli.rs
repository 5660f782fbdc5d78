use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use serde_json::Value;

const QUICK: &str = r#"
[dnn]
max_epochs = 5

[bnn]
max_epochs = 20
batch_size = 64
learning_rate = 0.003
patience = 5

[report]
forward_runs = 20

[farm]
months = 1
"#;

fn fleetwise(args: &[&str], seed_env: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fleetwise"));
    cmd.args(args).env_remove("FLEETWISE_SEED");
    if let Some(s) = seed_env {
        cmd.env("FLEETWISE_SEED", s);
    }
    cmd.output().unwrap()
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.lines().last().unwrap_or("")).unwrap_or_else(|_| panic!("not JSON: {text}"))
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

struct Fixture {
    _dir: tempfile::TempDir,
    config: PathBuf,
    farm: PathBuf,
}

/// One synthesised farm shared by the tests of this file.
fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let config = dir.path().join("quick.toml");
        fs::write(&config, QUICK).unwrap();
        let farm = dir.path().join("farm");
        let out = fleetwise(&["--seed", "3", "--config", p(&config), "--out", p(&farm), "synth"], None);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        Fixture { _dir: dir, config, farm }
    })
}

fn tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push((path.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(fleetwise(&[], None).status.code(), Some(2));
    let out = fleetwise(&["frobnicate"], None);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "usage");
    assert_eq!(fleetwise(&["train", "--kind", "gp", "--data", "x.csv"], None).status.code(), Some(2));
    assert_eq!(fleetwise(&["--help"], None).status.code(), Some(0));
    let bad_env = fleetwise(&["--out", "/nonexistent/never", "selfcheck"], Some("abc"));
    assert_eq!(bad_env.status.code(), Some(2));
}

#[test]
fn missing_model_names_the_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("absent_model.json");
    let data = fixture().farm.join("mp01.csv");
    let out = fleetwise(
        &["--out", p(&dir.path().join("o")), "deploy", "--model", p(&model), "--reference", p(&data), "--data", p(&data)],
        None,
    );
    assert_eq!(out.status.code(), Some(3));
    let err = stderr_json(&out);
    assert_eq!(err["error"], "io");
    assert_eq!(err["artifact"], p(&model));
    assert!(!dir.path().join("o").join("manifest.json").exists());
}

#[test]
fn invalid_config_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "test_fraction = 1.5\n").unwrap();
    let out = fleetwise(&["--config", p(&bad), "--out", p(&dir.path().join("o")), "selfcheck"], None);
    assert_eq!(out.status.code(), Some(4));
    fs::write(&bad, "unknown_key = 1\n").unwrap();
    let out = fleetwise(&["--config", p(&bad), "--out", p(&dir.path().join("o")), "selfcheck"], None);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(stderr_json(&out)["path"], p(&bad));
}

#[test]
fn selfcheck_passes_and_writes_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = fleetwise(&["--out", p(dir.path()), "selfcheck"], None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("selfcheck.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    let m = manifest(dir.path());
    assert_eq!(m["command"]["name"], "selfcheck");
    assert_eq!(m["outputs"][0]["path"], "selfcheck.json");
}

#[test]
fn seed_precedence_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let with_seed = dir.path().join("seeded.toml");
    fs::write(&with_seed, "seed = 21\n").unwrap();
    let run = |name: &str, args: &[&str], env: Option<&str>| {
        let out_dir = dir.path().join(name);
        let mut full = vec!["--out", p(&out_dir)];
        full.extend(args);
        full.push("selfcheck");
        assert!(fleetwise(&full, env).status.success());
        let m = manifest(&out_dir);
        (m["seed"].as_u64().unwrap(), m["seed_source"].as_str().unwrap().to_string(), m["config"]["seed"].clone())
    };
    assert_eq!(run("d", &[], None).0, 0);
    assert_eq!(run("e", &[], Some("8")), (8, "environment".into(), Value::from(8)));
    let cfg = ["--config", p(&with_seed)];
    assert_eq!(run("c", &cfg, Some("8")).0, 21);
    assert_eq!(run("f", &[&cfg[..], &["--seed", "5"]].concat(), Some("8")), (5, "flag".into(), Value::from(5)));
}

#[test]
fn synth_output_is_reproducible() {
    let f = fixture();
    let dir = tempfile::tempdir().unwrap();
    let again = dir.path().join("again");
    let out = fleetwise(&["--seed", "3", "--config", p(&f.config), "--out", p(&again), "synth"], None);
    assert!(out.status.success());
    let (a, b) = (tree(&f.farm), tree(&again));
    assert_eq!(a.len(), b.len());
    for ((pa, da), (pb, db)) in a.iter().zip(&b) {
        assert_eq!(pa, pb);
        if pa.as_os_str() != "manifest.json" {
            assert!(da == db, "{} differs", pa.display());
        }
    }
    let m = manifest(&f.farm);
    assert_eq!(m["config"]["farm"]["seed"], 3);
    let listed: Vec<&str> = m["outputs"].as_array().unwrap().iter().map(|o| o["path"].as_str().unwrap()).collect();
    assert!(listed.contains(&"mp02.csv") && listed.contains(&"farm.json"));
}

#[test]
fn train_and_deploy_are_bitwise_reproducible() {
    let f = fixture();
    let dir = tempfile::tempdir().unwrap();
    let fl = f.farm.join("fleet_leader.csv");
    let before = fs::read(&fl).unwrap();
    let mut runs = Vec::new();
    for k in 0..2 {
        let train = dir.path().join(format!("train{k}"));
        let out = fleetwise(&["--config", p(&f.config), "--out", p(&train), "train", "--data", p(&fl)], Some("4"));
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let deploy = dir.path().join(format!("deploy{k}"));
        let out = fleetwise(
            &[
                "--config",
                p(&f.config),
                "--out",
                p(&deploy),
                "deploy",
                "--model",
                p(&train.join("model.json")),
                "--reference",
                p(&train.join("train.csv")),
                "--data",
                p(&f.farm.join("mp01.csv")),
                "--data",
                p(&f.farm.join("mp02.csv")),
            ],
            Some("4"),
        );
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        runs.push((tree(&train), tree(&deploy)));
    }
    assert_eq!(runs[0].0, runs[1].0);
    let strip = |t: &[(PathBuf, Vec<u8>)]| -> Vec<(PathBuf, Vec<u8>)> {
        t.iter().filter(|(p, _)| p.as_os_str() != "manifest.json").cloned().collect()
    };
    assert_eq!(strip(&runs[0].1), strip(&runs[1].1));
    assert_eq!(fs::read(&fl).unwrap(), before);

    let deploy = dir.path().join("deploy0");
    for name in ["reports.json", "box_stats.csv", "histogram.csv", "marginals.csv", "rows/mp02.csv"] {
        assert!(deploy.join(name).exists(), "{name}");
    }
    let m = manifest(&deploy);
    assert_eq!(m["inputs"].as_array().unwrap().len(), 5);
}

#[test]
fn outputs_are_write_once() {
    let f = fixture();
    let fl = f.farm.join("fleet_leader.csv");
    let before = fs::read(&fl).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let args = ["--config", p(&f.config), "--out", p(dir.path()), "train", "--data", p(&fl), "--kind", "dnn"];
    assert!(fleetwise(&args, None).status.success());
    let again = fleetwise(&args, None);
    assert_eq!(again.status.code(), Some(2));

    // Writing into the farm directory would overwrite the input dataset.
    let clash = tempfile::tempdir().unwrap();
    let copy = clash.path().join("train.csv");
    fs::copy(&fl, &copy).unwrap();
    let out = fleetwise(
        &["--config", p(&f.config), "--out", p(clash.path()), "train", "--data", p(&copy), "--kind", "dnn"],
        None,
    );
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(fs::read(&copy).unwrap(), before);
}

#[test]
fn sweep_and_period_study_write_their_tables() {
    let f = fixture();
    let fl = f.farm.join("fleet_leader.csv");
    let dir = tempfile::tempdir().unwrap();
    let sweep = dir.path().join("sweep");
    let out = fleetwise(
        &["--config", p(&f.config), "--out", p(&sweep), "sweep", "--data", p(&fl), "--configs", "7,10", "--kinds", "dnn"],
        None,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(sweep.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);

    let dup = fleetwise(
        &["--config", p(&f.config), "--out", p(&dir.path().join("dup")), "sweep", "--data", p(&fl), "--configs", "7,7"],
        None,
    );
    assert_eq!(dup.status.code(), Some(4));

    let period = dir.path().join("period");
    let out = fleetwise(
        &["--config", p(&f.config), "--out", p(&period), "period-study", "--data", p(&fl), "--periods", "24"],
        None,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let result: Value = serde_json::from_str(&fs::read_to_string(period.join("period_study.json")).unwrap()).unwrap();
    assert_eq!(result["entries"].as_array().unwrap().len(), 1);
}

#[test]
fn compare_writes_models_and_table() {
    let f = fixture();
    let dir = tempfile::tempdir().unwrap();
    let out = fleetwise(
        &[
            "--config",
            p(&f.config),
            "--out",
            p(dir.path()),
            "compare",
            "--data",
            p(&f.farm.join("fleet_leader.csv")),
            "--turbine",
            p(&f.farm.join("mp02.csv")),
            "--kinds",
            "dnn,aleatoric,dnn",
        ],
        None,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("models/dnn.json").exists());
    assert!(dir.path().join("models/aleatoric_bnn.json").exists());
    let csv = fs::read_to_string(dir.path().join("comparison.csv")).unwrap();
    // Header plus two kinds on two turbines.
    assert_eq!(csv.lines().count(), 5);
}
