use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mgfnorm::io::write_csv;
use mgfnorm::sampling::sample;
use mgfnorm::{AlternativeSpec, DataMatrix, SeededStream};
use serde_json::Value;

fn mgfnorm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mgfnorm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn normal_dataset(dir: &Path, name: &str, seed: u64, cube_first: bool) -> PathBuf {
    let x = sample(&AlternativeSpec::std_normal(3), 50, SeededStream::new(seed, 0)).unwrap();
    let mut m = x.into_inner();
    if cube_first {
        m.column_mut(0).apply(|v| *v = v.powi(3));
    }
    let path = dir.join(name);
    write_csv(&DataMatrix::new(m).unwrap(), &path).unwrap();
    path
}

fn p_values(report: &Value) -> Vec<f64> {
    report["results"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["p_value"].as_f64().unwrap())
        .collect()
}

#[test]
fn normal_data_is_typically_not_rejected() {
    // each of the seven tests rejects 5% of normal samples, so a single
    // data set may be rejected by one of them; count clean data sets
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let datasets = 20;
    let mut clean = 0;
    for seed in 0..datasets {
        let path = normal_dataset(dir.path(), &format!("normal{seed}.csv"), 300 + seed, false);
        let report = json(&mgfnorm(&[
            "test",
            path.to_str().unwrap(),
            "--reps",
            "10000",
            "--cache-dir",
            cache.to_str().unwrap(),
        ]));
        let p = p_values(&report);
        assert_eq!(p.len(), 7);
        clean += usize::from(p.iter().all(|v| *v > 0.05));
    }
    assert!(clean >= 14, "{clean}/{datasets} data sets with all p-values above 0.05");
}

#[test]
fn cubed_coordinate_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = normal_dataset(dir.path(), "cubed.csv", 314, true);
    let report = json(&mgfnorm(&["test", path.to_str().unwrap(), "--reps", "10000"]));
    let p = p_values(&report);
    assert!(p.iter().filter(|v| **v < 0.05).count() >= 4, "{p:?}");
}

#[test]
fn report_schema_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let path = normal_dataset(dir.path(), "data.csv", 314, false);
    let args = ["test", path.to_str().unwrap(), "--reps", "500", "--stat", "T,HZ,MS", "--gamma", "3,inf"];
    let mut a = json(&mgfnorm(&args));
    let mut b = json(&mgfnorm(&args));
    for key in ["command", "config", "results", "provenance"] {
        assert!(a.get(key).is_some(), "missing {key}");
    }
    assert_eq!(a["command"], "test");
    assert_eq!(a["provenance"]["algorithm"], "chacha20");
    assert_eq!(a["provenance"]["seed"], 1);
    let rows = a["results"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    for r in rows {
        for key in ["statistic", "gamma", "value", "scaled", "p_value", "std_error"] {
            assert!(r.get(key).is_some(), "missing {key} in {r}");
        }
        let p = r["p_value"].as_f64().unwrap();
        assert!(p > 0.0 && p <= 1.0);
    }
    assert!(rows[1]["note"].is_string());
    a["provenance"]["timestamp"] = Value::Null;
    b["provenance"]["timestamp"] = Value::Null;
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn malformed_csv_exits_with_parse_code() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "x,y\n1,2\n3,oops\n4,1\n0,0\n").unwrap();
    let out = mgfnorm(&["test", path.to_str().unwrap(), "--reps", "200"]);
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("line 3") && msg.contains("column 2"), "{msg}");
}

#[test]
fn collinear_data_exits_with_singular_code() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("flat.csv");
    std::fs::write(&path, "1,2\n2,4\n3,6\n4,8\n5,10\n").unwrap();
    let out = mgfnorm(&["test", path.to_str().unwrap(), "--reps", "200"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn bad_requests_exit_with_code_four() {
    assert_eq!(mgfnorm(&["tables", "T7"]).status.code(), Some(4));
    assert_eq!(mgfnorm(&["critvals", "--n", "20", "--d", "1", "--gamma", "1.5", "--reps", "200"]).status.code(), Some(4));
    assert_eq!(mgfnorm(&["power", "--alt", "bogus:d=2", "--reps", "200"]).status.code(), Some(4));
    assert_eq!(mgfnorm(&["critvals", "--n", "20", "--d", "1", "--alpha", "2"]).status.code(), Some(4));
}

#[test]
fn missing_input_exits_with_io_code() {
    assert_eq!(mgfnorm(&["test", "/nonexistent/data.csv"]).status.code(), Some(1));
}

#[test]
fn small_gamma_needs_override() {
    let out = mgfnorm(&[
        "critvals", "--n", "20", "--d", "1", "--gamma", "1.5", "--reps", "200", "--allow-small-gamma",
    ]);
    let report = json(&out);
    assert_eq!(report["results"][0]["gamma"], "1.5");
}

#[test]
fn empty_subset_gives_empty_report() {
    let report = json(&mgfnorm(&["tables", "T2", "--subset", ""]));
    assert_eq!(report["results"].as_array().unwrap().len(), 0);
}

#[test]
fn critvals_csv_and_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("cv.csv");
    let out = mgfnorm(&[
        "critvals", "--n", "20", "--d", "2", "--stat", "T,EN,HJ", "--gamma", "5", "--reps", "1000", "--format",
        "csv", "--out", out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut reader = csv::Reader::from_path(&out_path).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(&rows[0][0], "T");
    assert!(rows.iter().all(|r| r[6].parse::<f64>().unwrap() > 0.0));
}

#[test]
fn cache_dir_is_reused() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "critvals", "--n", "15", "--d", "1", "--gamma", "4", "--reps", "500", "--cache-dir",
        dir.path().to_str().unwrap(),
    ];
    let a = json(&mgfnorm(&args));
    assert!(std::fs::read_dir(dir.path()).unwrap().count() >= 1);
    let b = json(&mgfnorm(&args));
    assert_eq!(a["results"], b["results"]);
}

#[test]
fn power_under_the_null_is_near_alpha() {
    let report = json(&mgfnorm(&[
        "power", "--alt", "normal:d=2", "--n", "30", "--stat", "T,MS", "--gamma", "3", "--reps", "2000",
    ]));
    for r in report["results"].as_array().unwrap() {
        let p = r["value"].as_f64().unwrap();
        assert!((p - 0.05).abs() < 0.02, "{r}");
    }
    assert_eq!(report["config"]["alternative"], "normal:d=2");
}

#[test]
fn table_two_row_is_reproduced() {
    let report = json(&mgfnorm(&["tables", "T2", "--subset", "n=20,d=1", "--reps", "100000", "--seed", "7"]));
    let entries = report["results"].as_array().unwrap();
    assert_eq!(entries.len(), 7);
    for e in entries {
        assert_eq!(e["within_tolerance"], true, "{e}");
    }
}

#[test]
fn table_four_column_is_reproduced() {
    let report = json(&mgfnorm(&["tables", "T4", "--subset", "stat=T10", "--reps", "10000"]));
    let entries = report["results"].as_array().unwrap();
    assert_eq!(entries.len(), 17);
    let off: Vec<String> = entries
        .iter()
        .filter(|e| e["within_tolerance"] != true)
        .map(|e| format!("{}: {} vs {}", e["row"], e["reproduced"], e["reference"]))
        .collect();
    assert!(off.is_empty(), "{off:?}");
}

#[test]
fn text_format_lists_every_statistic() {
    let out = mgfnorm(&[
        "critvals", "--n", "20", "--d", "1", "--stat", "T,Z3,MK", "--gamma", "inf", "--reps", "300", "--format", "text",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for label in ["T ", "Z3", "MK", "note:"] {
        assert!(text.contains(label), "{text}");
    }
}
