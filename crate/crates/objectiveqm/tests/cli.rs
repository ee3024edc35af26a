//! End-to-end CLI checks: every subcommand against real config files, exit
//! codes, output formats, and manifest behavior.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn binary() -> &'static str {
    env!("CARGO_BIN_EXE_objectiveqm")
}

fn workdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("objectiveqm-cli-{tag}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(binary()).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn born_emits_expected_csv() {
    let dir = workdir("born");
    let config = write_config(
        &dir,
        "born.json",
        r#"{
  "format_version": 1,
  "seed": 1,
  "state": {"kind": "preset", "name": "singlet"},
  "observables": [
    {"type": "spin", "label": "ZA", "direction": [0.0, 0.0, 1.0]},
    {"type": "spin", "label": "ZB", "direction": [0.0, 0.0, 1.0]},
    {"type": "product", "label": "ZZ", "left": "ZA", "right": "ZB"}
  ],
  "properties": [
    {"observable": "ZZ", "delta": [1.0]},
    {"observable": "ZZ", "delta": [-1.0]}
  ]
}"#,
    );
    let out = dir.join("out");
    let result = run(&["born", "--config", s(&config), "--out", s(&out)]);
    assert!(result.status.success());
    let csv = std::fs::read_to_string(out.join("born.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "observable,delta,probability");
    assert_eq!(lines.len(), 3);
    // Singlet: P(product = +1) = 0, P(product = -1) = 1.
    let p_plus: f64 = lines[1].rsplit(',').next().unwrap().parse().unwrap();
    let p_minus: f64 = lines[2].rsplit(',').next().unwrap().parse().unwrap();
    assert!(p_plus.abs() < 1e-12);
    assert!((p_minus - 1.0).abs() < 1e-12);
    assert!(out.join("manifest.json").exists());
}

#[test]
fn born_empty_properties_gives_empty_table() {
    let dir = workdir("born-empty");
    let config = write_config(
        &dir,
        "born.json",
        r#"{
  "format_version": 1,
  "seed": 1,
  "state": {"kind": "pure", "amplitudes": [[1.0, 0.0], [0.0, 0.0]]},
  "observables": [],
  "properties": []
}"#,
    );
    let out = dir.join("out");
    assert!(run(&["born", "--config", s(&config), "--out", s(&out)]).status.success());
    let csv = std::fs::read_to_string(out.join("born.csv")).unwrap();
    assert_eq!(csv, "observable,delta,probability\n");
}

#[test]
fn malformed_config_exits_2() {
    let dir = workdir("bad-config");
    let config = write_config(&dir, "bad.json", r#"{"format_version": 1, "seed": "#);
    let out = dir.join("out");
    let result = run(&["born", "--config", s(&config), "--out", s(&out)]);
    assert_eq!(result.status.code(), Some(2));

    let missing_seed = write_config(
        &dir,
        "noseed.json",
        r#"{"format_version": 1, "state": {"kind": "preset", "name": "singlet"}, "observables": [], "properties": []}"#,
    );
    let result = run(&["born", "--config", s(&missing_seed), "--out", s(&out)]);
    assert_eq!(result.status.code(), Some(2));

    let bad_preset = write_config(
        &dir,
        "preset.json",
        r#"{"format_version": 1, "seed": 3, "state": {"kind": "preset", "name": "w-state"}, "observables": [], "properties": []}"#,
    );
    let result = run(&["born", "--config", s(&bad_preset), "--out", s(&out)]);
    assert_eq!(result.status.code(), Some(2));
}

#[test]
fn simulate_inline_model_and_seeded_rerun() {
    let dir = workdir("simulate");
    let body = r#"{
  "format_version": 1,
  "seed": 11,
  "model": {"source": "inline", "model": {
    "format_version": 1,
    "mode": "stochastic-detection",
    "observables": [
      {"kind": "elementary", "label": "A", "a0": 0.0, "outcomes": [1.0, -1.0]}
    ],
    "classes": [
      {"weight": 0.5, "responses": {"A": {"detect": 0.8, "value": 1.0}}},
      {"weight": 0.5, "responses": {"A": {"detect": 0.4, "value": -1.0}}}
    ]
  }},
  "property": {"observable": "A", "delta": [1.0]},
  "n": 20000
}"#;
    let config = write_config(&dir, "sim.json", body);
    let out1 = dir.join("out1");
    let out2 = dir.join("out2");
    assert!(run(&["simulate", "--config", s(&config), "--out", s(&out1)]).status.success());
    assert!(run(&["simulate", "--config", s(&config), "--out", s(&out2)]).status.success());
    let t1 = std::fs::read(out1.join("tally.csv")).unwrap();
    let t2 = std::fs::read(out2.join("tally.csv")).unwrap();
    assert_eq!(t1, t2, "same seed must give identical tallies");

    let csv = String::from_utf8(t1).unwrap();
    for line in csv.lines().skip(1) {
        assert!(line.contains(",true,") || line.ends_with(",true") || line.ends_with(','));
    }

    // Different seed via override: different tally, manifest records it.
    let out3 = dir.join("out3");
    assert!(run(&["simulate", "--config", s(&config), "--out", s(&out3), "--seed", "12"])
        .status
        .success());
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out3.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["master_seed"], 12);
    assert_eq!(manifest["config"]["seed"], 12);
    let t3 = std::fs::read(out3.join("tally.csv")).unwrap();
    assert_ne!(t3, t2);
}

#[test]
fn synthesize_infeasible_is_success_with_status() {
    let dir = workdir("synth-infeasible");
    let config = write_config(
        &dir,
        "synth.json",
        r#"{
  "format_version": 1,
  "seed": 5,
  "task": {"type": "chsh", "targets": {"kind": "preset", "name": "chsh-optimal"}, "eta": 1.0}
}"#,
    );
    let out = dir.join("out");
    let result = run(&["synthesize", "--config", s(&config), "--out", s(&out)]);
    assert!(result.status.success(), "infeasible is a result, not an error");
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("synthesis.json")).unwrap()).unwrap();
    assert_eq!(report["status"], "infeasible");
    assert!(!out.join("model.json").exists());
}

#[test]
fn synthesize_product_model_loads_back() {
    let dir = workdir("synth-product");
    let config = write_config(
        &dir,
        "synth.json",
        r#"{
  "format_version": 1,
  "seed": 5,
  "task": {
    "type": "product",
    "state": {"kind": "mixture", "components": [
      {"weight": 0.5, "amplitudes": [[1.0, 0.0], [0.0, 0.0]]},
      {"weight": 0.5, "amplitudes": [[0.0, 0.0], [1.0, 0.0]]}
    ]},
    "observables": [{"type": "spin", "label": "Z", "direction": [0.0, 0.0, 1.0]}],
    "detect": 0.7
  }
}"#,
    );
    let out = dir.join("out");
    assert!(run(&["synthesize", "--config", s(&config), "--out", s(&out)]).status.success());
    let doc: objectiveqm::io::ModelFileDoc =
        serde_json::from_slice(&std::fs::read(out.join("model.json")).unwrap()).unwrap();
    let model = doc.to_model().unwrap();
    assert_eq!(model.classes().len(), 2);
    assert!(model.target().is_some());
}

#[test]
fn chsh_and_threshold_commands() {
    let dir = workdir("chsh");
    // Synthesize a feasible model first.
    let synth = write_config(
        &dir,
        "synth.json",
        r#"{
  "format_version": 1,
  "seed": 5,
  "task": {"type": "chsh", "targets": {"kind": "preset", "name": "chsh-optimal"}, "eta": 0.5}
}"#,
    );
    let synth_out = dir.join("synth-out");
    assert!(run(&["synthesize", "--config", s(&synth), "--out", s(&synth_out)]).status.success());

    let chsh = write_config(
        &dir,
        "chsh.json",
        r#"{
  "format_version": 1,
  "seed": 21,
  "model": {"source": "path", "path": "synth-out/model.json"},
  "n_per_block": 50000
}"#,
    );
    let chsh_out = dir.join("chsh-out");
    assert!(run(&["chsh", "--config", s(&chsh), "--out", s(&chsh_out)]).status.success());
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(chsh_out.join("chsh_report.json")).unwrap())
            .unwrap();
    assert_eq!(report["blocks"].as_array().unwrap().len(), 4);
    let s_est = report["s_estimate"].as_f64().unwrap();
    assert!((s_est - 2.0 * std::f64::consts::SQRT_2).abs() < 0.1);
    assert!(report["analytic_unconditional_s"].as_f64().unwrap() <= 2.0 + 1e-12);

    // Threshold with classical targets: eta* = 1 in one solve.
    let threshold = write_config(
        &dir,
        "threshold.json",
        r#"{
  "format_version": 1,
  "seed": 2,
  "targets": {"kind": "explicit", "e11": 1.0, "e12": 1.0, "e21": 1.0, "e22": 1.0,
              "a_marginals": [1.0, 1.0], "b_marginals": [1.0, 1.0]},
  "tol": 0.01
}"#,
    );
    let threshold_out = dir.join("threshold-out");
    assert!(run(&["threshold", "--config", s(&threshold), "--out", s(&threshold_out)])
        .status
        .success());
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(threshold_out.join("threshold.json")).unwrap())
            .unwrap();
    assert_eq!(report["status"], "ok");
    assert_eq!(report["report"]["eta_star"].as_f64().unwrap(), 1.0);
}

#[test]
fn ks_pipeline_on_peres_mermin() {
    let dir = workdir("ks");
    let config = write_config(
        &dir,
        "ks.json",
        r#"{
  "format_version": 1,
  "seed": 31,
  "system": {"kind": "preset", "name": "peres-mermin"},
  "n_per_context": 20000
}"#,
    );
    let out = dir.join("out");
    assert!(run(&["ks", "--config", s(&config), "--out", s(&out)]).status.success());
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("ks_report.json")).unwrap()).unwrap();
    assert_eq!(report["search"]["satisfying_count"], 0);
    assert_eq!(report["search"]["min_violations"], 1);
    assert_eq!(report["evasion_status"], "ok");
    for ctx in report["check"]["contexts"].as_array().unwrap() {
        assert_eq!(ctx["violations"], 0);
        assert_eq!(ctx["status"], "Verified");
        assert!(ctx["coincidences"].as_u64().unwrap() > 0);
    }
    assert!(out.join("evasion_model.json").exists());
}

#[test]
fn ks_accepts_user_defined_systems() {
    let dir = workdir("ks-explicit");
    let config = write_config(
        &dir,
        "ks.json",
        r#"{
  "format_version": 1,
  "seed": 17,
  "system": {"kind": "explicit",
    "observables": ["P", "Q", "R"],
    "contexts": [
      {"members": ["P", "Q"], "target": 1.0},
      {"members": ["Q", "R"], "target": -1.0}
    ]},
  "n_per_context": 5000
}"#,
    );
    let out = dir.join("out");
    assert!(run(&["ks", "--config", s(&config), "--out", s(&out)]).status.success());
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(out.join("ks_report.json")).unwrap()).unwrap();
    // Satisfiable: P = Q, R = -Q gives 2 satisfying assignments.
    assert_eq!(report["search"]["satisfying_count"], 2);
    assert_eq!(report["search"]["min_violations"], 0);
    for ctx in report["check"]["contexts"].as_array().unwrap() {
        assert_eq!(ctx["status"], "Verified");
    }

    // Bad member reference: config error.
    let broken = write_config(
        &dir,
        "broken.json",
        r#"{
  "format_version": 1,
  "seed": 17,
  "system": {"kind": "explicit",
    "observables": ["P"],
    "contexts": [{"members": ["P", "MISSING"], "target": 1.0}]},
  "n_per_context": 100
}"#,
    );
    let result = run(&["ks", "--config", s(&broken), "--out", s(&dir.join("out2"))]);
    assert_eq!(result.status.code(), Some(2));
}

#[test]
fn replay_verifies_and_detects_tampering() {
    let dir = workdir("replay");
    let config = write_config(
        &dir,
        "born.json",
        r#"{
  "format_version": 1,
  "seed": 8,
  "state": {"kind": "preset", "name": "singlet"},
  "observables": [
    {"type": "spin", "label": "ZA", "direction": [0.0, 0.0, 1.0]},
    {"type": "spin", "label": "ZB", "direction": [0.0, 0.0, 1.0]},
    {"type": "product", "label": "ZZ", "left": "ZA", "right": "ZB"}
  ],
  "properties": [{"observable": "ZZ", "delta": [1.0]}]
}"#,
    );
    let out = dir.join("out");
    assert!(run(&["born", "--config", s(&config), "--out", s(&out)]).status.success());

    let replay_out = dir.join("replay-out");
    let result = run(&[
        "replay",
        "--manifest",
        s(&out.join("manifest.json")),
        "--out",
        s(&replay_out),
    ]);
    assert!(result.status.success());
    assert_eq!(
        std::fs::read(out.join("born.csv")).unwrap(),
        std::fs::read(replay_out.join("born.csv")).unwrap()
    );

    // Tamper with a digest: replay must exit 3.
    let manifest_path = out.join("manifest.json");
    let mut manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&manifest_path).unwrap()).unwrap();
    manifest["outputs"][0]["sha256"] = serde_json::Value::from("0".repeat(64));
    std::fs::write(&manifest_path, serde_json::to_vec(&manifest).unwrap()).unwrap();
    let result = run(&[
        "replay",
        "--manifest",
        s(&manifest_path),
        "--out",
        s(&dir.join("replay-out-2")),
    ]);
    assert_eq!(result.status.code(), Some(3));
}
