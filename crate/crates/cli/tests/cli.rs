use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_atomlayout"))
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin().args(args).current_dir(dir).output().expect("spawn")
}

fn ok(args: &[&str], dir: &Path) -> Value {
    let out = run(args, dir);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout json")
}

fn code(args: &[&str], dir: &Path) -> i32 {
    run(args, dir).status.code().unwrap()
}

const BELL: &str = r#"{"qubits":2,"ops":[["h",0],["cx",0,1]]}"#;

fn small_corpus(dir: &Path, name: &str, count: usize, widths: (usize, usize)) {
    let (lo, hi) = (widths.0.to_string(), widths.1.to_string());
    ok(
        &[
            "gen", "--count", &count.to_string(), "--out", name, "--seed", "5", "--width-min", &lo, "--width-max", &hi,
            "--instructions-min", "20", "--instructions-max", "30",
        ],
        dir,
    );
}

#[test]
fn gen_writes_files_manifest_and_config() {
    let t = TempDir::new().unwrap();
    small_corpus(t.path(), "a", 3, (10, 12));
    small_corpus(t.path(), "b", 3, (10, 12));
    let manifest = fs::read_to_string(t.path().join("a/manifest.csv")).unwrap();
    assert_eq!(manifest.lines().count(), 4);
    for i in 0..3 {
        let name = format!("circuit_{i:05}.json");
        let a = fs::read_to_string(t.path().join("a").join(&name)).unwrap();
        let b = fs::read_to_string(t.path().join("b").join(&name)).unwrap();
        assert_eq!(a, b);
        let v: Value = serde_json::from_str(&a).unwrap();
        let w = v["qubits"].as_u64().unwrap();
        assert!((10..=12).contains(&w));
    }
    let cfg: Value = serde_json::from_str(&fs::read_to_string(t.path().join("a/run_config.json")).unwrap()).unwrap();
    assert_eq!(cfg["command"], "gen");
    assert_eq!(cfg["seed"], 5);
    assert_eq!(cfg["corpus"]["width"], serde_json::json!([10, 12]));
}

#[test]
fn compile_bell_and_all_topologies() {
    let t = TempDir::new().unwrap();
    fs::write(t.path().join("bell.json"), BELL).unwrap();
    let v = ok(&["compile", "bell.json"], t.path());
    let rows = v["results"].as_array().unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0]["topology"], "square");
    assert_eq!(rows[0]["critical_pulse_count"], 4);
    assert_eq!(rows[0]["total_pulse_count"], 4);
    assert_eq!(rows[0]["swap_count"], 0);

    let v = ok(&["compile", "bell.json", "--all", "--schedule-out", "s.json"], t.path());
    assert_eq!(v["results"].as_array().unwrap().len(), 3);
    let dump: Value = serde_json::from_str(&fs::read_to_string(t.path().join("s.json")).unwrap()).unwrap();
    let rows = dump.as_array().unwrap();
    assert_eq!(rows.len(), 6);
    assert_eq!(rows[1]["gate"], "cx");
    assert_eq!(rows[1]["start"], 1);
    assert_eq!(rows[1]["duration"], 3);

    ok(&["compile", "bell.json", "--schedule-out", "t.csv"], t.path());
    let csv = fs::read_to_string(t.path().join("t.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "topology,id,gate,qubits,sites,start,duration");
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn features_csv_has_sidecar() {
    let t = TempDir::new().unwrap();
    fs::write(t.path().join("bell.json"), BELL).unwrap();
    ok(&["features", "bell.json", "--out", "f.csv"], t.path());
    let csv = fs::read_to_string(t.path().join("f.csv")).unwrap();
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    assert_eq!(header.len(), 15);
    assert_eq!(header[0], "file");
    assert!(t.path().join("f.csv.run.json").exists());
    let v = ok(&["features", "bell.json"], t.path());
    assert_eq!(v["rows"][0]["features"]["width"], 2.0);
}

#[test]
fn simulate_bell_is_correlated() {
    let t = TempDir::new().unwrap();
    fs::write(t.path().join("bell.json"), BELL).unwrap();
    let v = ok(&["simulate", "bell.json", "--noise", "0", "--shots", "400"], t.path());
    for k in ["00", "11"] {
        assert!((v["ideal"][k].as_f64().unwrap() - 0.5).abs() < 1e-12);
    }
    assert_eq!(v["bitwise_error"], 0.0);
    let counts = v["counts"].as_object().unwrap();
    assert!(counts.keys().all(|k| k == "00" || k == "11"));
}

#[test]
fn train_predict_bench_round_trip() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    small_corpus(d, "corpus", 50, (5, 8));
    let train = [
        "train", "--corpus", "corpus", "--out", "bank.json", "--epochs", "20", "--dataset-out", "ds.csv", "--seed", "2",
    ];
    ok(&train, d);
    let first = fs::read(d.join("bank.json")).unwrap();
    ok(&train, d);
    assert_eq!(first, fs::read(d.join("bank.json")).unwrap());

    let cv = fs::read_to_string(d.join("bank.json.cv.csv")).unwrap();
    assert_eq!(cv.lines().next().unwrap(), "topology,metric,fold,train_size,validation_size,mae");
    assert_eq!(cv.lines().count(), 1 + 3 * 5);
    let ds = fs::read_to_string(d.join("ds.csv")).unwrap();
    assert_eq!(ds.lines().count(), 51);
    assert!(d.join("bank.json.run.json").exists());

    fs::write(d.join("bell.json"), BELL).unwrap();
    let p = ok(&["predict", "--bank", "bank.json", "bell.json"], d);
    assert_eq!(p["predictions"].as_object().unwrap().len(), 3);
    let sel = p["selected"].as_str().unwrap();
    assert!(["square", "s-triangle", "t-triangle"].contains(&sel));

    let b = ok(&["bench", "--bank", "bank.json", "--corpus", "corpus", "--out", "bench.csv"], d);
    let m = &b["mean"];
    let oracle = m["oracle"].as_f64().unwrap();
    let worst = m["worst"].as_f64().unwrap();
    for key in ["predictor", "random", "random_mean", "square", "s_triangle", "t_triangle"] {
        let v = m[key].as_f64().unwrap();
        assert!(oracle <= v + 1e-9 && v <= worst + 1e-9, "{key}");
    }
    assert_eq!(fs::read_to_string(d.join("bench.csv")).unwrap().lines().count(), 51);

    // the bank has no fidelity models
    assert_eq!(code(&["predict", "--bank", "bank.json", "bell.json", "--metric", "fidelity"], d), 2);
}

#[test]
fn train_rejects_small_or_unsimulable_corpora() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    small_corpus(d, "tiny", 10, (5, 6));
    assert_eq!(code(&["train", "--corpus", "tiny", "--out", "b.json"], d), 2);
    assert!(!d.join("b.json").exists());

    small_corpus(d, "wide", 50, (13, 14));
    let args = ["train", "--corpus", "wide", "--out", "f.json", "--metric", "fidelity", "--epochs", "1"];
    assert_eq!(code(&args, d), 2);
}

#[test]
fn exit_codes() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    fs::write(d.join("bell.json"), BELL).unwrap();
    fs::write(d.join("broken.json"), "{\"qubits\": 2, \"ops\": [[\"cx\", 0, 0]]}").unwrap();
    assert_eq!(code(&["--help"], d), 0);
    assert_eq!(code(&["frobnicate"], d), 1);
    assert_eq!(code(&["compile", "bell.json", "--radii", "1,2"], d), 1);
    assert_eq!(code(&["simulate", "bell.json", "--shots", "0"], d), 1);
    assert_eq!(code(&["compile", "missing.json"], d), 2);
    assert_eq!(code(&["compile", "broken.json"], d), 2);
    assert_eq!(code(&["predict", "--bank", "bell.json", "bell.json"], d), 2);
    assert_eq!(code(&["validate", "bell.json"], d), 0);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    fs::write(d.join("bell.json"), BELL).unwrap();
    fs::write(d.join("cfg.json"), r#"{"seed": 9, "topology": "t-triangle", "shots": 50}"#).unwrap();
    let v = ok(&["compile", "bell.json", "--config", "cfg.json"], d);
    assert_eq!(v["results"][0]["topology"], "t-triangle");
    assert_eq!(v["run_config"]["seed"], 9);
    let v = ok(&["compile", "bell.json", "--config", "cfg.json", "--topology", "square", "--seed", "1"], d);
    assert_eq!(v["results"][0]["topology"], "square");
    assert_eq!(v["run_config"]["seed"], 1);
}
