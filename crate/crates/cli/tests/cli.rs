use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

const NET_C: &str = r#"{
  "nodes": ["1", "2", "3", "4"],
  "boundary": ["1", "2", "3"],
  "edges": [
    {"id": "1", "from": "1", "to": "4", "r_ohm": 0.98, "l_henry": 0.55},
    {"id": "2", "from": "2", "to": "4", "r_ohm": 0.99, "l_henry": 0.64},
    {"id": "3", "from": "3", "to": "4", "r_ohm": 0.58, "l_henry": 0.77}
  ]
}"#;

const NET_A: &str = r#"{
  "nodes": ["1", "2"],
  "boundary": ["1", "2"],
  "edges": [{"id": "a", "from": "1", "to": "2", "r_ohm": 1.0, "l_henry": 1.0}]
}"#;

const SINUSOID: &str = r#"{"signals": {
  "1": {"type": "sinusoid", "amplitude_v": 120, "freq_hz": 1.5, "phase_deg": 0},
  "2": {"type": "sinusoid", "amplitude_v": 120, "freq_hz": 1.5, "phase_deg": 30},
  "3": {"type": "sinusoid", "amplitude_v": 120, "freq_hz": 1.5, "phase_deg": -30}
}}"#;

const STEP: &str = r#"{"signals": {
  "1": {"type": "step", "value_v": 120},
  "2": {"type": "step", "value_v": 100},
  "3": {"type": "step", "value_v": 110}
}}"#;

fn kronred(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kronred"))
        .args(args)
        .current_dir(dir)
        .env_remove("KRONRED_SEED")
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout)))
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.trim()).unwrap_or_else(|e| panic!("stderr is not JSON ({e}): {text}"))
}

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        let ws = Workspace {
            dir: tempfile::tempdir().unwrap(),
        };
        ws.put("net_c.json", NET_C);
        ws.put("net_a.json", NET_A);
        ws.put("sinusoid.json", SINUSOID);
        ws.put("step.json", STEP);
        ws
    }

    fn path(&self) -> &Path {
        self.dir.path()
    }

    fn put(&self, name: &str, text: &str) -> PathBuf {
        let p = self.path().join(name);
        fs::write(&p, text).unwrap();
        p
    }

    fn manifest(&self, name: &str, excitation: &str, t_end: f64, extra: Value) -> String {
        let mut m = json!({
            "network": "net_c.json",
            "excitation": excitation,
            "f0": [-5.0, -5.0, 10.0],
            "solver": {"dt_s": 1e-4, "t_end_s": t_end, "record_stride": 10},
            "strategy": "tree",
            "output_dir": "out",
        });
        for (k, v) in extra.as_object().unwrap() {
            m[k] = v.clone();
        }
        self.put(name, &m.to_string());
        name.to_string()
    }

    fn run(&self, args: &[&str]) -> Output {
        kronred(args, self.path())
    }
}

#[test]
fn validate_accepts_wye_network() {
    let ws = Workspace::new();
    let out = ws.run(&["validate", "net_c.json"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["reduced_order"], 2);
    assert_eq!(v["interior"], json!(["4"]));
}

#[test]
fn validate_reports_zero_inductance() {
    let ws = Workspace::new();
    ws.put("bad.json", &NET_A.replace("\"l_henry\": 1.0", "\"l_henry\": 0.0"));
    let out = ws.run(&["validate", "bad.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "NonpositiveInductance");
}

#[test]
fn validate_reports_parse_position() {
    let ws = Workspace::new();
    ws.put("broken.json", "{\n  \"nodes\": [\"1\",\n}");
    let out = ws.run(&["validate", "broken.json"]);
    assert_eq!(out.status.code(), Some(2));
    let d = stderr_json(&out);
    assert_eq!(d["error"], "ParseError");
    assert_eq!(d["line"], 3);
    assert!(d["column"].as_u64().unwrap() >= 1);
}

#[test]
fn reduce_tree_strategy_gives_integer_basis() {
    let ws = Workspace::new();
    let out = ws.run(&["reduce", "net_c.json", "--p-strategy", "tree"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["P"], json!([[1.0, 0.0], [0.0, 1.0], [-1.0, -1.0]]));
    assert_eq!(v["strategy"], "tree");
}

#[test]
fn reduce_modal_strategy_gives_diagonal_matrices() {
    let ws = Workspace::new();
    let out = ws.run(&["reduce", "net_c.json", "--p-strategy", "modal"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    for key in ["Lhat", "Rhat"] {
        let m = v[key].as_array().unwrap();
        assert!(m[0][1].as_f64().unwrap().abs() < 1e-12 && m[1][0].as_f64().unwrap().abs() < 1e-12);
        assert!(m[0][0].as_f64().unwrap() > 0.0 && m[1][1].as_f64().unwrap() > 0.0);
    }
}

#[test]
fn reduce_without_interior_is_identity() {
    let ws = Workspace::new();
    for s in ["tree", "nullbasis", "modal"] {
        let out = ws.run(&["reduce", "net_a.json", "--p-strategy", s]);
        assert_eq!(out.status.code(), Some(0));
        let p = stdout_json(&out)["P"][0][0].as_f64().unwrap();
        assert!((p.abs() - 1.0).abs() < 1e-12, "{s}: P = {p}");
    }
}

#[test]
fn reduced_and_dae_runs_coincide() {
    let ws = Workspace::new();
    let m = ws.manifest("sin.json", "sinusoid.json", 10.0, json!({}));
    assert_eq!(ws.run(&["simulate", &m, "--method", "reduced"]).status.code(), Some(0));
    assert_eq!(ws.run(&["simulate", &m, "--method", "dae"]).status.code(), Some(0));
    let out = ws.run(&["compare", "out/reduced.csv", "out/dae.csv"]);
    assert_eq!(out.status.code(), Some(0));
    let d = stdout_json(&out);
    assert!(d["max_rel"].as_f64().unwrap() <= 1e-6, "{d}");
    assert_eq!(d["channels"], json!(["i_1", "i_2", "i_3"]));
}

#[test]
fn baseline_misses_step_steady_state() {
    let ws = Workspace::new();
    let m = ws.manifest("step_m.json", "step.json", 12.0, json!({"seed": 3}));
    assert_eq!(ws.run(&["simulate", &m, "--method", "dae"]).status.code(), Some(0));
    let out = ws.run(&["simulate", &m, "--method", "baseline", "--omega0", "9.42477796", "--oracle", "out/dae.csv"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: Value = serde_json::from_str(&fs::read_to_string(ws.path().join("out/baseline_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["runs"].as_array().unwrap().len(), 5);
    assert_eq!(summary["seed"], 3);

    let cmp = ws.run(&["compare", "out/baseline_1.csv", "out/dae.csv", "--from-time", "6"]);
    assert_eq!(cmp.status.code(), Some(0));
    assert!(stdout_json(&cmp)["steady_rel"].as_f64().unwrap() > 1e-2);
}

#[test]
fn baseline_requires_omega0() {
    let ws = Workspace::new();
    let m = ws.manifest("m.json", "step.json", 0.1, json!({}));
    assert_eq!(ws.run(&["simulate", &m, "--method", "baseline"]).status.code(), Some(64));
}

#[test]
fn seed_flag_beats_environment_which_beats_manifest() {
    let ws = Workspace::new();
    let m = ws.manifest("m.json", "step.json", 0.05, json!({"seed": 1}));
    let seed_of = |env: Option<&str>, flag: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_kronred"));
        cmd.args(["simulate", &m, "--method", "baseline", "--omega0", "9.42477796", "--draws", "2"]);
        cmd.current_dir(ws.path()).env_remove("KRONRED_SEED");
        if let Some(e) = env {
            cmd.env("KRONRED_SEED", e);
        }
        if let Some(f) = flag {
            cmd.args(["--seed", f]);
        }
        assert_eq!(cmd.output().unwrap().status.code(), Some(0));
        let s: Value = serde_json::from_str(&fs::read_to_string(ws.path().join("out/baseline_summary.json")).unwrap()).unwrap();
        s["seed"].as_u64().unwrap()
    };
    assert_eq!(seed_of(None, None), 1);
    assert_eq!(seed_of(Some("7"), None), 7);
    assert_eq!(seed_of(Some("7"), Some("9")), 9);
}

#[test]
fn explicit_gamma_vector_is_used() {
    let ws = Workspace::new();
    let m = ws.manifest("m.json", "step.json", 0.05, json!({}));
    let out = ws.run(&["simulate", &m, "--method", "baseline", "--omega0", "9.42477796", "--gamma-vector", "-2.5"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let s: Value = serde_json::from_str(&fs::read_to_string(ws.path().join("out/baseline_summary.json")).unwrap()).unwrap();
    assert_eq!(s["runs"][0]["gamma"], json!(-2.5));
    let bad = ws.run(&["simulate", &m, "--method", "baseline", "--omega0", "9.42477796", "--gamma-vector", "1,2"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn homogeneous_method_rejects_wye_benchmark() {
    let ws = Workspace::new();
    let m = ws.manifest("m.json", "step.json", 0.1, json!({}));
    let out = ws.run(&["simulate", &m, "--method", "homogeneous"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stderr_json(&out)["error"], "NotHomogeneous");
}

#[test]
fn saved_model_reproduces_csv_bit_for_bit() {
    let ws = Workspace::new();
    let m = ws.manifest("m.json", "sinusoid.json", 1.0, json!({}));
    assert_eq!(ws.run(&["reduce", "net_c.json", "--p-strategy", "modal", "--out", "model.json"]).status.code(), Some(0));
    let m2 = ws.manifest("m2.json", "sinusoid.json", 1.0, json!({"strategy": "modal", "output_dir": "direct"}));
    assert_eq!(ws.run(&["simulate", &m, "--model", "model.json"]).status.code(), Some(0));
    assert_eq!(ws.run(&["simulate", &m2]).status.code(), Some(0));
    let a = fs::read(ws.path().join("out/reduced.csv")).unwrap();
    let b = fs::read(ws.path().join("direct/reduced.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn inconsistent_initial_flows_are_rejected() {
    let ws = Workspace::new();
    let m = ws.manifest("m.json", "step.json", 0.1, json!({"f0": [1.0, 0.0, 0.0]}));
    let out = ws.run(&["simulate", &m, "--method", "reduced"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "InconsistentInitialCondition");
    let short = ws.manifest("s.json", "step.json", 0.1, json!({"f0": [1.0]}));
    assert_eq!(ws.run(&["simulate", &short]).status.code(), Some(2));
}

#[test]
fn compare_identical_files_is_zero() {
    let ws = Workspace::new();
    let m = ws.manifest("m.json", "step.json", 0.2, json!({}));
    assert_eq!(ws.run(&["simulate", &m, "--method", "dae"]).status.code(), Some(0));
    let d = stdout_json(&ws.run(&["compare", "out/dae.csv", "out/dae.csv"]));
    assert_eq!((d["max_abs"].as_f64(), d["max_rel"].as_f64(), d["steady_rel"].as_f64()), (Some(0.0), Some(0.0), Some(0.0)));
}

#[test]
fn phasor_balanced_wye_matches_delta_equivalent() {
    let ws = Workspace::new();
    ws.put("balanced.json", &NET_C.replace("0.98", "1.0").replace("0.99", "1.0").replace("0.58", "1.0").replace("0.55", "1.0").replace("0.64", "1.0").replace("0.77", "1.0"));
    let out = ws.run(&["phasor", "balanced.json", "--omega", "1", "--v1", "1@0,0@0,0@0"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    // branch admittance 1/(1+j) = 0.5 - 0.5j; the star of three gives Yr = y/3 (3I - 11^T)
    let y11 = &v["Yr"][0][0];
    assert!((y11["re"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-12);
    assert!((y11["im"].as_f64().unwrap() + 1.0 / 3.0).abs() < 1e-12);
    let v0 = &v["v0"][0];
    assert!((v0["magnitude"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-12);
    assert_eq!(ws.run(&["phasor", "balanced.json", "--omega", "1", "--v1", "1@0"]).status.code(), Some(2));
}

#[test]
fn paper_experiment_writes_all_outputs() {
    let ws = Workspace::new();
    let out = ws.run(&["paper-experiment", "--which", "sinusoid", "--out-dir", "exp"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csvs = fs::read_dir(ws.path().join("exp"))
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "csv"))
        .count();
    assert_eq!(csvs, 7);
    let summary: Value = serde_json::from_str(&fs::read_to_string(ws.path().join("exp/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["observations"].as_array().unwrap().len(), 4);
    assert!(summary["observations"].as_array().unwrap().iter().all(|o| o["holds"] == true));
}

#[test]
fn usage_errors_exit_64() {
    let ws = Workspace::new();
    assert_eq!(ws.run(&["paper-experiment", "--which", "square"]).status.code(), Some(64));
    assert_eq!(ws.run(&[]).status.code(), Some(64));
    assert_eq!(ws.run(&["--help"]).status.code(), Some(0));
}
