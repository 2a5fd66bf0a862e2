use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn dichobell(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dichobell"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn csv_rows(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(String::from)
        .collect()
}

#[test]
fn ghz_defaults_are_unsat() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("ghz");
    let o = dichobell(&["ghz", "--out", out.to_str().unwrap()]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let s = summary(&out);
    assert_eq!(s["schema_version"], "1");
    assert_eq!(s["results"]["satisfiable"], false);
    assert_eq!(s["results"]["certificate"], serde_json::json!([0, 1, 2, 3]));
    assert_eq!(s["results"]["enumeration"]["satisfiable"], false);
    assert_eq!(s["results"]["routes_agree"], true);
    assert_eq!(s["results"]["lattice"]["size"], 5);
    for entry in s["manifest"].as_array().unwrap() {
        let path = out.join(entry["path"].as_str().unwrap());
        assert!(path.exists());
        assert_eq!(
            csv_rows(&path).len() - 1,
            entry["rows"].as_u64().unwrap() as usize
        );
    }
}

#[test]
fn chsh_values() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "chsh.json",
        r#"{"experiment":"chsh","samples":100000,"params":{"angles":{"a":0,"a2":1.5707963267948966,"b":0.7853981633974483,"b2":-0.7853981633974483}}}"#,
    );
    let out = tmp.path().join("out");
    let o = dichobell(&["chsh", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let r = &summary(&out)["results"];
    let s_qm = r["S_qm"].as_f64().unwrap();
    assert!((s_qm + 2.0 * 2f64.sqrt()).abs() < 1e-12);
    assert!(r["S_lhv"].as_f64().unwrap().abs() <= 2.0 + 1e-6);
    assert_eq!(r["pairs"].as_array().unwrap().len(), 4);
    assert_eq!(r["pairs"][0]["E_lhv_mc"]["n_samples"], 100000);
}

#[test]
fn flags_override_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "o.json",
        r#"{"experiment":"optical","seed":1,"samples":10}"#,
    );
    let out = tmp.path().join("o");
    let o = dichobell(&[
        "optical",
        "--config",
        &cfg,
        "--seed",
        "7",
        "--samples",
        "5000",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let s = summary(&out);
    assert_eq!(s["inputs"]["seed"], 7);
    assert_eq!(s["inputs"]["samples"], 5000);
    let counts: Value =
        serde_json::from_str(&fs::read_to_string(out.join("counts.json")).unwrap()).unwrap();
    assert_eq!(counts["n_total"], 5000);
    assert_eq!(counts["seed"], 7);
    assert_eq!(counts["model"], "shared_axis");
}

#[test]
fn run_subcommand_reads_tag() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "g.json",
        r#"{"experiment":"ghz","params":{"n":3,"m":1}}"#,
    );
    let out = tmp.path().join("g");
    let o = dichobell(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(
        summary(&out)["results"]["lattice"]["values"],
        serde_json::json!(["-1", "-1/3", "1/3", "1"])
    );
}

#[test]
fn config_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("x");
    let out = out.to_str().unwrap();

    let warp = write_config(tmp.path(), "warp.json", r#"{"experiment":"warp"}"#);
    let o = dichobell(&["run", "--config", &warp, "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("experiment"));

    let zero = write_config(
        tmp.path(),
        "zero.json",
        r#"{"experiment":"chsh","samples":0}"#,
    );
    let o = dichobell(&["chsh", "--config", &zero, "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("samples"));

    let typo = write_config(
        tmp.path(),
        "typo.json",
        r#"{"experiment":"chsh","params":{"angels":{}}}"#,
    );
    let o = dichobell(&["chsh", "--config", &typo, "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("params.angels"));

    let mismatch = write_config(tmp.path(), "m.json", r#"{"experiment":"ghz"}"#);
    assert_eq!(
        dichobell(&["optical", "--config", &mismatch, "--out", out])
            .status
            .code(),
        Some(2)
    );

    assert_eq!(dichobell(&["warp"]).status.code(), Some(2));
    assert_eq!(dichobell(&["run"]).status.code(), Some(2));
    assert_eq!(dichobell(&["ghz", "--seed", "x"]).status.code(), Some(2));
    assert!(!Path::new(out).exists());
}

#[test]
fn unwritable_out_dir_exits_three() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "not a directory").unwrap();
    let out = blocker.join("sub");
    let o = dichobell(&["ghz", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn correlate_csv_schema() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{"experiment":"correlate","samples":1000,"params":{"sweep":{"start":0,"stop":3.141592653589793,"count":11}}}"#,
    );
    let out = tmp.path().join("c");
    assert_eq!(
        dichobell(&["run", "--config", &cfg, "--out", out.to_str().unwrap()])
            .status
            .code(),
        Some(0)
    );
    let rows = csv_rows(&out.join("correlate.csv"));
    assert_eq!(rows[0], "tau,correlation,neg_cos,gap");
    assert_eq!(rows.len(), 12);
    // 17 significant digits in scientific notation
    assert_eq!(rows[1].split(',').next().unwrap(), "0.0000000000000000e0");
    let last: Vec<f64> = rows[11].split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(last[0], std::f64::consts::PI);
    assert!((last[1] - 1.0).abs() < 1e-15); // anti-aligned pair at τ = π
    let raw = fs::read(out.join("correlate.csv")).unwrap();
    assert!(!raw.contains(&b'\r'));
    assert_eq!(csv_rows(&out.join("kinks.csv"))[0], "kink");
    let gap = summary(&out)["results"]["cosine_gap"].as_f64().unwrap();
    assert!(gap >= 0.2);
}

#[test]
fn summary_keys_sorted() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("s");
    assert_eq!(
        dichobell(&["ghz", "--out", out.to_str().unwrap()])
            .status
            .code(),
        Some(0)
    );
    let text = fs::read_to_string(out.join("summary.json")).unwrap();
    let top: Vec<&str> = text
        .lines()
        .filter(|l| l.starts_with("  \""))
        .map(|l| l.trim().split('"').nth(1).unwrap())
        .collect();
    assert_eq!(
        top,
        vec![
            "experiment",
            "inputs",
            "manifest",
            "results",
            "schema_version"
        ]
    );
}

#[test]
fn every_experiment_is_byte_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    for exp in ["correlate", "chsh", "ghz", "optical"] {
        let out = tmp.path().join(exp);
        let out = out.to_str().unwrap();
        let run = || {
            let o = dichobell(&[exp, "--samples", "20000", "--seed", "3", "--out", out]);
            assert_eq!(o.status.code(), Some(0), "{exp}");
            let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(out)
                .unwrap()
                .map(|e| {
                    let e = e.unwrap();
                    (
                        e.file_name().to_string_lossy().into_owned(),
                        fs::read(e.path()).unwrap(),
                    )
                })
                .collect();
            files.sort();
            files
        };
        let first = run();
        let second = run();
        assert!(first.len() >= 2);
        assert_eq!(first, second, "{exp}");
    }
}
