use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn msl(args: &[&str], env: &[(&str, &Path)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_msl"));
    cmd.args(args).env("RUST_LOG", "warn");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("msl runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut entries: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().into_string().unwrap(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    entries.sort();
    entries
}

#[test]
fn run_writes_reproducible_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let out = msl(
            &[
                "run",
                "fig1",
                "--horizon",
                "4000",
                "--seeds",
                "3",
                "--out",
                dir.to_str().unwrap(),
            ],
            &[],
        );
        assert!(out.status.success(), "{}", stderr(&out));
    }
    let first = files(&a);
    let names: Vec<&str> = first.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(
        names,
        vec!["plot_fig1.svg", "summary.json", "trace_20250101.csv"]
    );
    assert_eq!(first, files(&b));
    let summary: serde_json::Value = serde_json::from_slice(&first[1].1).unwrap();
    assert_eq!(summary["horizon"], 4000);
    assert_eq!(summary["seeds"]["count"], 3);
}

#[test]
fn default_output_root_comes_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let out = msl(
        &[
            "run",
            "thm2",
            "--horizon",
            "200",
            "--seeds",
            "2",
            "--format",
            "json",
        ],
        &[("MSL_OUT", tmp.path())],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(tmp.path().join("thm2/summary.json").exists());
    assert!(tmp.path().join("thm2/trace_20250101.json").exists());
}

#[test]
fn prop7_reports_its_check() {
    let tmp = tempfile::tempdir().unwrap();
    let out = msl(
        &[
            "run",
            "prop7",
            "--horizon",
            "9000",
            "--seeds",
            "4",
            "--out",
            tmp.path().to_str().unwrap(),
        ],
        &[],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("[PASS] regret/T of agent 0"), "{stdout}");
}

#[test]
fn documents_run_and_schema_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let doc = r#"{
  "name": "doc",
  "market": {"states": 2, "q": [0.6, 0.4], "horizon": 300},
  "agents": [{"kind": "fixed", "alpha": [0.6, 0.4]}, {"kind": "ogd"}],
  "seeds": {"base": 1, "count": 2},
  "outputs": [{"stat": "terminal_wealth"}]
}"#;
    let good = tmp.path().join("good.json");
    fs::write(&good, doc).unwrap();
    let out_dir = tmp.path().join("out");
    let out = msl(
        &[
            "run",
            good.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
        ],
        &[],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(out_dir.join("summary.json").exists());

    let bad = tmp.path().join("bad.json");
    fs::write(
        &bad,
        doc.replace("\"horizon\": 300", "\"horizon\": 300, \"speed\": 2"),
    )
    .unwrap();
    let out = msl(&["run", bad.to_str().unwrap()], &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("bad.json:3:"), "{err}");
    assert!(err.contains("speed"), "{err}");

    let out = msl(
        &["run", tmp.path().join("missing.json").to_str().unwrap()],
        &[],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(msl(&["sweep", "obs1", "--eps"], &[]).status.code(), Some(2));
    assert_eq!(msl(&["sweep", "obs9"], &[]).status.code(), Some(2));
    assert_eq!(msl(&["verify", "medium"], &[]).status.code(), Some(2));
    assert_eq!(
        msl(&["run", "fig1", "--format", "xml"], &[]).status.code(),
        Some(2)
    );
}

#[test]
fn sweep_writes_points_and_exponent() {
    let tmp = tempfile::tempdir().unwrap();
    let out = msl(
        &[
            "sweep",
            "obs1",
            "--eps",
            "0.16,0.24,0.32,0.4",
            "--seeds",
            "4",
            "--max-horizon",
            "20000",
            "--out",
            tmp.path().to_str().unwrap(),
        ],
        &[],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let exponent: serde_json::Value =
        serde_json::from_slice(&fs::read(tmp.path().join("exponent.json")).unwrap()).unwrap();
    assert_eq!(exponent["tau"].as_array().unwrap().len(), 4);
    assert!(exponent["fit"]["slope"].as_f64().unwrap() < 0.0);
    for eps in ["0.16", "0.24", "0.32", "0.4"] {
        assert!(tmp.path().join(format!("point_{eps}.json")).exists());
    }
}
