use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_schechter-heat");

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/configs")
}

fn run(task: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    Command::new(BIN)
        .arg(task)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn files(dir: &Path, ext: &str) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .map(|rd| {
            rd.map(|e| e.unwrap().path())
                .filter(|p| p.extension().is_some_and(|e| e == ext))
                .collect()
        })
        .unwrap_or_default();
    v.sort();
    v
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const HEAT: &str = r#"
seed = 5
[grid]
n = 1
R = 32.0
N = 1024
[task.heat]
times = [0.25, 0.5, 1.0, 2.0]
[output]
formats = ["json"]
"#;

#[test]
fn classify_example_passes_and_agrees() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run("classify", &configs().join("classify.toml"), tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let json = files(tmp.path(), "json");
    assert_eq!(json.len(), 1);
    let report: Value = serde_json::from_slice(&std::fs::read(&json[0]).unwrap()).unwrap();
    assert_eq!(report["status"], "PASS");
    assert_eq!(report["payload"]["agree"], true);
    assert_eq!(
        report["payload"]["numeric"]["verdict"],
        report["payload"]["expected_verdict"]
    );
    assert_eq!(files(tmp.path(), "csv").len(), 1);
}

#[test]
fn heat_json_only_writes_one_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "heat.toml", HEAT);
    let out_dir = tmp.path().join("out");
    let out = run("heat", &cfg, &out_dir, &[]);
    assert_eq!(out.status.code(), Some(0));
    let entries: Vec<_> = std::fs::read_dir(&out_dir).unwrap().collect();
    assert_eq!(entries.len(), 1);
    let report: Value = serde_json::from_slice(&std::fs::read(files(&out_dir, "json")[0].clone()).unwrap()).unwrap();
    let c = report["payload"]["envelope"]["c_fit"].as_f64().unwrap();
    assert!(c > 0.24 && c <= 0.25, "{c}");
    assert_eq!(report["payload"]["envelope"]["exponent"], 2.0);
}

#[test]
fn heat_svg_and_csv_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "heat.toml",
        &HEAT.replace(r#"formats = ["json"]"#, r#"formats = ["json", "csv", "svg"]"#),
    );
    let out = run("heat", &cfg, tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(0));
    let svg = files(tmp.path(), "svg");
    assert_eq!(svg.len(), 1);
    let text = std::fs::read_to_string(&svg[0]).unwrap();
    assert!(text.contains("<circle") && text.contains("<line"));
    let csv = files(tmp.path(), "csv");
    let dump = std::fs::read_to_string(&csv[0]).unwrap();
    assert!(dump.starts_with("t,x0,y0,re,im\n"));
    assert_eq!(dump.lines().count(), 1 + 4 * 1024);
}

#[test]
fn identical_runs_have_identical_payloads() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("tnorm.toml");
    let payload = |dir: &Path| {
        let out = run("tnorm", &cfg, dir, &[]);
        assert_eq!(out.status.code(), Some(0));
        let report: Value = serde_json::from_slice(&std::fs::read(&files(dir, "json")[0]).unwrap()).unwrap();
        (
            serde_json::to_vec(&report["payload"]).unwrap(),
            report["provenance"]["payload_hash"].clone(),
        )
    };
    let a = payload(&tmp.path().join("a"));
    let b = payload(&tmp.path().join("b"));
    assert_eq!(a, b);
    let c = {
        let dir = tmp.path().join("c");
        let out = run("tnorm", &cfg, &dir, &["--seed", "99"]);
        assert_eq!(out.status.code(), Some(0));
        let report: Value = serde_json::from_slice(&std::fs::read(&files(&dir, "json")[0]).unwrap()).unwrap();
        assert_eq!(report["provenance"]["seed"], 99);
        report["provenance"]["payload_hash"].clone()
    };
    assert_ne!(a.1, c);
}

#[test]
fn duplicate_task_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let text =
        format!("{HEAT}\n[task.classify]\nalpha = 0.5\nr = 1.0\ndeltas = {{ lo = 0.25, hi = 4.0, count = 9 }}\n");
    let cfg = write(tmp.path(), "dup.toml", &text);
    let out = run("heat", &cfg, &tmp.path().join("out"), &[]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("duplicate") && err.contains("task.heat"), "{err}");
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn config_errors_carry_field_paths() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        (HEAT.replace("N = 1024", "N = 1000"), "grid"),
        (
            HEAT.replace("times = [0.25, 0.5, 1.0, 2.0]", "times = [0.25, -0.5, 1.0]"),
            "task.heat.times",
        ),
        (HEAT.replace("R = 32.0", "R = \"wide\""), "grid.R"),
        (HEAT.replace("[task.heat]", "[task.heat]\nbogus = 1"), "task.heat"),
    ];
    for (i, (text, path)) in cases.iter().enumerate() {
        let cfg = write(tmp.path(), &format!("bad{i}.toml"), text);
        let out = run("heat", &cfg, &tmp.path().join("out"), &[]);
        assert_eq!(out.status.code(), Some(1));
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(path), "case {i}: {err}");
    }
    let out = run("dg", &write(tmp.path(), "h.toml", HEAT), &tmp.path().join("out"), &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn failed_verdict_exits_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    // a negative slack demands the empirical exponent beat the bound by 5
    let text = std::fs::read_to_string(configs().join("tnorm.toml"))
        .unwrap()
        .replace("trials = 32", "trials = 32\nexponent_slack = -5.0");
    let cfg = write(tmp.path(), "tnorm.toml", &text);
    let out = run("tnorm", &cfg, tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    let report: Value = serde_json::from_slice(&std::fs::read(&files(tmp.path(), "json")[0]).unwrap()).unwrap();
    assert_eq!(report["status"], "FAIL");
}

#[test]
fn task_errors_exit_with_one_and_are_reported() {
    let tmp = tempfile::tempdir().unwrap();
    // the spectral route needs V = 0
    let text = HEAT.replace(
        "[task.heat]",
        "[potential]\nfamily = \"constant\"\nc = 0.5\n[task.heat]",
    );
    let cfg = write(tmp.path(), "heat.toml", &text);
    let out = run("heat", &cfg, tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(1));
    let report: Value = serde_json::from_slice(&std::fs::read(&files(tmp.path(), "json")[0]).unwrap()).unwrap();
    assert_eq!(report["status"], "ERROR");
    assert!(report["error"].as_str().unwrap().contains("spectral"));
}

#[test]
fn thread_cap_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("conditions.toml");
    let out = Command::new(BIN)
        .args(["conditions", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path())
        .env("SCHECHTER_HEAT_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&std::fs::read(&files(tmp.path(), "json")[0]).unwrap()).unwrap();
    assert_eq!(report["provenance"]["threads"], 1);

    let out = Command::new(BIN)
        .args(["conditions", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path())
        .env("SCHECHTER_HEAT_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}
