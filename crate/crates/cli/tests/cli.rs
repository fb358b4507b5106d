use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn prgov(cache: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prgov")).env("PRG_CACHE_DIR", cache).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn list_scenarios_names_the_registry() {
    let tmp = TempDir::new().unwrap();
    let o = prgov(tmp.path(), &["list-scenarios"]);
    assert!(o.status.success());
    for name in ["one_link", "one_link_multi_n", "one_link_disturbance", "one_link_lambda", "two_link"] {
        assert!(stdout(&o).contains(name), "{name} missing");
    }
}

#[test]
fn one_link_prg_run_writes_clean_results() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let o = prgov(tmp.path(), &["run", "--scenario", "one_link", "--governor", "prg", "--n", "25", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let dir = out.join("one_link/prg_n25");
    let s = summary(&dir);
    assert_eq!(s["violations"], 0);
    assert!(s["max_abs_y"][0].as_f64().unwrap() <= 45.0 + 1e-6);
    let csv = std::fs::read_to_string(dir.join("trace.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "t,r_1,v_1,y_1,kappa,step_time_ns");
    assert_eq!(csv.lines().count(), 151);
    for f in ["output_1.csv", "command_1.csv", "kappa.csv", "plot.py"] {
        assert!(dir.join("plot").join(f).is_file(), "{f} missing");
    }
}

#[test]
fn same_seed_gives_identical_csv_bytes() {
    let tmp = TempDir::new().unwrap();
    let mut bodies = Vec::new();
    for out in ["a", "b"] {
        let out = tmp.path().join(out);
        let args = ["run", "--scenario", "one_link_disturbance", "--seed", "7", "--out", out.to_str().unwrap()];
        let o = prgov(tmp.path(), &args);
        assert!(o.status.success(), "{}", stderr(&o));
        bodies.push(std::fs::read(out.join("one_link_disturbance/disturbance_prg_n20/trace.csv")).unwrap());
    }
    assert_eq!(bodies[0], bodies[1]);
}

#[test]
fn unknown_scenario_fails_with_the_known_names() {
    let tmp = TempDir::new().unwrap();
    let o = prgov(tmp.path(), &["run", "--scenario", "no_such_arm"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("known scenarios: one_link"));
}

#[test]
fn rebuilding_a_set_hits_the_cache() {
    let tmp = TempDir::new().unwrap();
    let args = ["build-set", "--scenario", "one_link", "--governor", "prg", "--n", "25"];
    let first = prgov(tmp.path(), &args);
    assert!(first.status.success(), "{}", stderr(&first));
    assert!(stdout(&first).contains("t* = 50"));
    assert!(stdout(&first).contains("(built)"));
    let second = prgov(tmp.path(), &args);
    assert!(stdout(&second).contains("(loaded from cache)"));
    assert!(!stdout(&second).contains("(built)"));
}

#[test]
fn unstable_model_is_rejected_with_its_eigenvalue() {
    let tmp = TempDir::new().unwrap();
    let doc = r#"{
        "name": "unstable",
        "description": "integrator",
        "model": {"a": [[1.01]], "b": [[1.0]], "c": [[1.0]], "d": [[0.0]], "sample_time": 0.01},
        "constraints": {"hmat": [[1.0], [-1.0]], "h": [1.0, 1.0]},
        "trajectory": {"segments": [{"start": 0.0, "values": [0.5]}], "sample_time": 0.01},
        "steps": 10,
        "governors": [{"kind": "srg"}]
    }"#;
    let path = tmp.path().join("unstable.json");
    std::fs::write(&path, doc).unwrap();
    let o = prgov(tmp.path(), &["build-set", "--scenario", path.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("eigenvalue magnitude 1.01"), "{}", stderr(&o));
}

#[test]
fn config_document_with_flag_overrides() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let cfg = tmp.path().join("run.toml");
    std::fs::write(&cfg, format!("scenario = \"one_link\"\ngovernor = \"srg\"\nseed = 3\nout = {:?}\n", out.to_str().unwrap()))
        .unwrap();
    let o = prgov(tmp.path(), &["run", "--config", cfg.to_str().unwrap(), "--governor", "multi-n", "--horizons", "0,10"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = summary(&out.join("one_link/multi_n_0_10"));
    assert_eq!(s["seed"], 3);
    assert_eq!(s["kind"], "multi_n");
    assert!(!out.join("one_link/srg").exists());
}

#[test]
fn bench_writes_the_timing_table() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let o = prgov(tmp.path(), &["bench", "--governor", "prg", "--n", "5", "--repeats", "2", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = std::fs::read_to_string(out.join("one_link/timing.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "governor,kind,repeats,mean_ns,max_ns");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("prg_n5,prg,2,"));
}

#[test]
fn bench_ordering_assertion_on_the_four_governors() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let o = prgov(tmp.path(), &["bench", "--repeats", "10", "--assert-ordering", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
    let rows: Vec<serde_json::Value> =
        serde_json::from_str(&std::fs::read_to_string(out.join("one_link/timing.json")).unwrap()).unwrap();
    assert_eq!(rows.len(), 4);
}

#[test]
fn incomplete_governor_parameters_fail() {
    let tmp = TempDir::new().unwrap();
    let o = prgov(tmp.path(), &["run", "--governor", "lambda-prg"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("--lambda"));
}
