use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use densam::emergence::{classify_emergence, DEFAULT_DELTA};
use densam::patterns::generate_uniform;
use densam::EnergySpec;
use serde_json::Value;
use tempfile::TempDir;

fn densam(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_densam"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is json")
}

fn two_patterns(dir: &Path) {
    fs::write(dir.join("p.csv"), "0\n1\n").unwrap();
}

#[test]
fn kernels_table_lists_efficiencies() {
    let dir = TempDir::new().unwrap();
    let out = densam(&["kernels"], dir.path());
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let row = |name: &str| {
        text.lines()
            .find(|l| l.starts_with(name))
            .unwrap()
            .to_string()
    };
    assert!(row("epanechnikov").ends_with("1.000000"));
    assert!(row("gaussian").contains("0.951"));
    assert!(row("uniform").contains("0.929"));
    assert_eq!(text.lines().count(), 9);

    let out = densam(&["kernels", "--json"], dir.path());
    let table = json(&out);
    assert_eq!(table.as_array().unwrap().len(), 8);
    assert_eq!(table[0]["kernel"], "epanechnikov");
}

#[test]
fn enumerate_two_patterns() {
    let dir = TempDir::new().unwrap();
    two_patterns(dir.path());
    let out = densam(
        &[
            "enumerate",
            "--patterns",
            "p.csv",
            "--beta",
            "2",
            "--oracle",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&out);
    assert_eq!(report["memories"].as_array().unwrap().len(), 3);
    assert_eq!(report["novel_count"], 1);
    assert_eq!(report["globally_emergent"], true);

    // Disjoint supports leave only the stored patterns.
    let out = densam(
        &["enumerate", "--patterns", "p.csv", "--beta", "10"],
        dir.path(),
    );
    assert_eq!(json(&out)["memories"].as_array().unwrap().len(), 2);
}

#[test]
fn enumerate_oracle_mismatch_exits_4() {
    let dir = TempDir::new().unwrap();
    two_patterns(dir.path());
    let out = densam(
        &[
            "enumerate",
            "--patterns",
            "p.csv",
            "--beta",
            "2",
            "--oracle",
            "--oracle-delta",
            "0",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 4);
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("only pruned"));
}

#[test]
fn enumerate_writes_out_file() {
    let dir = TempDir::new().unwrap();
    two_patterns(dir.path());
    let out = densam(
        &[
            "enumerate",
            "--patterns",
            "p.csv",
            "--beta",
            "2",
            "--out",
            "m.json",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    let v: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("m.json")).unwrap()).unwrap();
    assert_eq!(v["memories"].as_array().unwrap().len(), 3);
}

#[test]
fn retrieve_modes_and_exit_codes() {
    let dir = TempDir::new().unwrap();
    two_patterns(dir.path());
    fs::write(dir.path().join("q.csv"), "0.3\n0.3\n").unwrap();
    fs::write(dir.path().join("far.csv"), "5\n").unwrap();
    fs::write(dir.path().join("bad.csv"), "0,x\n").unwrap();
    fs::write(dir.path().join("one.csv"), "0.05\n").unwrap();

    let out = densam(
        &[
            "retrieve",
            "--patterns",
            "p.csv",
            "--query",
            "q.csv",
            "--beta",
            "2",
            "--mode",
            "fixed-point",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    let r = json(&out);
    assert_eq!(r.as_array().unwrap().len(), 2);
    assert_eq!(r[0]["point"][0], 0.5);
    assert_eq!(r[0]["subset"], serde_json::json!([0, 1]));

    let out = densam(
        &[
            "retrieve",
            "--patterns",
            "p.csv",
            "--query",
            "one.csv",
            "--beta",
            "20",
            "--mode",
            "single",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)[0]["point"][0], 0.0);

    let out = densam(
        &[
            "retrieve",
            "--patterns",
            "p.csv",
            "--query",
            "q.csv",
            "--beta",
            "2",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    assert!((json(&out)[0]["point"][0].as_f64().unwrap() - 0.5).abs() < 1e-6);

    let out = densam(
        &[
            "retrieve",
            "--patterns",
            "p.csv",
            "--query",
            "far.csv",
            "--beta",
            "2",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 3);
    let out = densam(
        &[
            "retrieve",
            "--patterns",
            "bad.csv",
            "--query",
            "q.csv",
            "--beta",
            "2",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 2);
    let out = densam(
        &[
            "retrieve",
            "--patterns",
            "p.csv",
            "--query",
            "bad.csv",
            "--beta",
            "2",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 2);
    let out = densam(
        &[
            "retrieve",
            "--patterns",
            "missing.csv",
            "--query",
            "q.csv",
            "--beta",
            "2",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 2);
    let out = densam(
        &[
            "retrieve",
            "--patterns",
            "p.csv",
            "--query",
            "q.csv",
            "--beta",
            "-1",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 2);
}

#[test]
fn unknown_flags_exit_2() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&densam(&["enumerate", "--bogus"], dir.path())), 2);
    assert_eq!(
        code(&densam(&["kernels", "--json", "extra"], dir.path())),
        2
    );
}

#[test]
fn beta_search_and_support_fraction() {
    let dir = TempDir::new().unwrap();
    two_patterns(dir.path());
    let out = densam(
        &["beta-search", "--patterns", "p.csv", "--target-k", "2"],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    let r = json(&out);
    assert_eq!(r["hit_target"], true);
    assert_eq!(r["k_prime"], 2.0);

    fs::write(dir.path().join("mid.csv"), "0.5\n").unwrap();
    let out = densam(
        &[
            "support-fraction",
            "--patterns",
            "mid.csv",
            "--beta",
            "200",
            "--samples",
            "200000",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    let r = json(&out);
    let (f, se) = (
        r["fraction"].as_f64().unwrap(),
        r["std_error"].as_f64().unwrap(),
    );
    assert!((f - 0.2).abs() < 3.0 * se, "{f} +- {se}");
}

#[test]
fn generated_patterns_round_trip_through_csv() {
    let dir = TempDir::new().unwrap();
    let out = densam(
        &[
            "generate", "uniform", "--m", "9", "--d", "2", "--seed", "7", "--out", "u.csv",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    let out = densam(
        &["enumerate", "--patterns", "u.csv", "--beta", "40"],
        dir.path(),
    );
    assert_eq!(code(&out), 0);

    let patterns = generate_uniform(9, 2, 7).unwrap();
    let spec = EnergySpec::lsr(40.0).unwrap();
    let direct = classify_emergence(&patterns, &spec, DEFAULT_DELTA).unwrap();
    let mut expected = serde_json::to_string_pretty(&direct).unwrap();
    expected.push('\n');
    assert_eq!(String::from_utf8(out.stdout).unwrap(), expected);

    let out = densam(
        &["generate", "grid", "--points-per-dim", "3", "--d", "2"],
        dir.path(),
    );
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 9);
    let out = densam(
        &["generate", "mixture", "--m", "5", "--d", "3", "--k", "2"],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 5);
}

const SCALING: &str = r#"{
  "experiment": "minima_scaling",
  "generator": { "kind": "uniform", "m": 8, "d": 2 },
  "ladder": { "count": 4, "spacing": "geometric" },
  "seeds": [0, 1],
  "mc_samples": 2000
}"#;

fn read(dir: &Path, name: &str) -> Vec<u8> {
    fs::read(dir.join(name)).unwrap()
}

#[test]
fn sweep_writes_tables_and_manifest() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("cfg.json"), SCALING).unwrap();
    let out = densam(
        &["sweep", "--config", "cfg.json", "--out-dir", "a"],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let a = dir.path().join("a");
    let csv = String::from_utf8(read(&a, "rows.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 8);
    assert!(csv.starts_with("seed,ladder_index,beta,"));

    let manifest: Value = serde_json::from_slice(&read(&a, "manifest.json")).unwrap();
    assert_eq!(manifest["exit_status"], 0);
    assert_eq!(manifest["cells"], 8);
    assert_eq!(manifest["seeds"], serde_json::json!([0, 1]));
    let outputs: Vec<String> = manifest["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|o| o["path"].as_str().unwrap().to_string())
        .collect();
    for name in ["rows.csv", "summary.csv", "sidecar.json"] {
        assert!(
            outputs.iter().any(|p| p.ends_with(name)),
            "{name} missing from {outputs:?}"
        );
    }
    assert!(!a.join("manifest.json.tmp").exists());

    let sidecar: Value = serde_json::from_slice(&read(&a, "sidecar.json")).unwrap();
    assert_eq!(sidecar["csv_sha256"], manifest["outputs"][0]["sha256"]);

    // Same config, same bytes.
    let out = densam(
        &["sweep", "--config", "cfg.json", "--out-dir", "b"],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    let b = dir.path().join("b");
    for name in ["rows.csv", "summary.csv", "sidecar.json"] {
        assert_eq!(read(&a, name), read(&b, name), "{name} differs");
    }
}

#[test]
fn sweep_thread_count_does_not_change_output() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("cfg.json"), SCALING).unwrap();
    for (n, sub) in [("1", "one"), ("3", "three")] {
        let out = Command::new(env!("CARGO_BIN_EXE_densam"))
            .args(["sweep", "--config", "cfg.json", "--out-dir", sub])
            .env("DENSAM_THREADS", n)
            .current_dir(dir.path())
            .output()
            .unwrap();
        assert_eq!(code(&out), 0);
    }
    assert_eq!(
        read(&dir.path().join("one"), "rows.csv"),
        read(&dir.path().join("three"), "rows.csv")
    );

    let out = Command::new(env!("CARGO_BIN_EXE_densam"))
        .args(["kernels"])
        .env("DENSAM_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn empty_ladder_exits_5() {
    let dir = TempDir::new().unwrap();
    let cfg = SCALING.replace("\"count\": 4", "\"count\": 0");
    fs::write(dir.path().join("cfg.json"), cfg).unwrap();
    let out = densam(&["sweep", "--config", "cfg.json"], dir.path());
    assert_eq!(code(&out), 5);
    let manifest: Value = serde_json::from_slice(&read(dir.path(), "manifest.json")).unwrap();
    assert_eq!(manifest["exit_status"], 5);
}

#[test]
fn sweep_with_every_cell_failing_exits_5() {
    let dir = TempDir::new().unwrap();
    // At tiny beta every pattern neighbours all others, so each cell trips
    // the subset cap.
    let cfg = r#"{
      "experiment": "minima_scaling",
      "generator": { "kind": "uniform", "m": 40, "d": 2 },
      "ladder": { "count": 2, "spacing": "geometric", "lower": 0.01, "upper": 0.02 },
      "mc_samples": 10
    }"#;
    fs::write(dir.path().join("cfg.json"), cfg).unwrap();
    let out = densam(&["sweep", "--config", "cfg.json"], dir.path());
    assert_eq!(code(&out), 5);
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .contains("cell seed=0"));
}

#[test]
fn sweep_rejects_bad_config() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("cfg.json"), "{ not json").unwrap();
    assert_eq!(
        code(&densam(&["sweep", "--config", "cfg.json"], dir.path())),
        2
    );
    let cfg = SCALING.replace("\"seeds\": [0, 1]", "\"seeds\": []");
    fs::write(dir.path().join("cfg.json"), cfg).unwrap();
    assert_eq!(
        code(&densam(&["sweep", "--config", "cfg.json"], dir.path())),
        2
    );
}

#[test]
fn kernel_sweep_from_pattern_file() {
    let dir = TempDir::new().unwrap();
    fs::create_dir(dir.path().join("cfg")).unwrap();
    fs::write(dir.path().join("cfg/p.csv"), "0\n1\n").unwrap();
    let cfg = r#"{
      "experiment": "kernel_sweep",
      "generator": { "kind": "file", "path": "p.csv" },
      "ladder": { "count": 5, "spacing": "geometric" },
      "kernels": ["epanechnikov", "triangle"]
    }"#;
    fs::write(dir.path().join("cfg/k.json"), cfg).unwrap();
    let out = densam(
        &["sweep", "--config", "cfg/k.json", "--out-dir", "out"],
        dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = String::from_utf8(read(&dir.path().join("out"), "rows.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 10);
    assert!(!dir.path().join("out/summary.csv").exists());
}
