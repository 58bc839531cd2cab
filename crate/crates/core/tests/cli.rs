use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn dyadic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dyadic"))
        .args(args)
        .env_remove("DYADIC_MAX_DEPTH")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn characteristics_of_a_depth_one_weight() {
    let r = json(&dyadic(&[
        "characteristics",
        "--w",
        r#"{"type":"leaves","depth":1,"leaves":[1,3]}"#,
        "--p",
        "2",
    ]));
    assert!((r["rhp"]["2"].as_f64().unwrap() - 5f64.sqrt() / 2.0).abs() < 1e-12);
    assert!((r["ap"]["2"].as_f64().unwrap() - 4.0 / 3.0).abs() < 1e-12);
    assert_eq!(r["doubling"].as_f64(), Some(4.0));
}

#[test]
fn characteristics_of_the_unit_weight() {
    let r = json(&dyadic(&["characteristics", "--w", "const1", "--p", "2", "--p", "3"]));
    for key in ["ap", "rhp"] {
        for p in ["2", "3"] {
            assert!((r[key][p].as_f64().unwrap() - 1.0).abs() < 1e-12);
        }
    }
    assert_eq!(r["aInf"].as_f64(), Some(1.0));
    assert_eq!(r["rh1"].as_f64(), Some(0.0));
}

#[test]
fn characteristics_of_a_triple() {
    let r = json(&dyadic(&[
        "characteristics",
        "--u",
        "const1",
        "--w",
        r#"{"depth":1,"leaves":[1,3]}"#,
    ]));
    assert!((r["sufficiencyC1"].as_f64().unwrap() - 1.25).abs() < 1e-12);
    assert_eq!(r["boundary"], "root-truncated");
}

#[test]
fn characteristics_usage_errors() {
    let out = dyadic(&["characteristics"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(code(&dyadic(&["characteristics", "--w", "{not json"])), 2);
    assert_eq!(
        code(&dyadic(&["characteristics", "--w", r#"{"depth":1,"leaves":[1,0]}"#])),
        3
    );
}

#[test]
fn norm_examples() {
    let r = json(&dyadic(&[
        "norm", "--op", "squarefn", "--u", "const1", "--v", "const1", "--w", "const1", "--depth", "1",
    ]));
    assert!((r["value"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(r["method"], "eigen");
    assert_eq!(r["depth"], 1);

    let r = json(&dyadic(&[
        "norm", "--op", "haarmult", "--t", "0", "--sigma", "all+", "--u", "const1", "--v", "const1",
    ]));
    assert!((r["value"].as_f64().unwrap() - 1.0).abs() < 1e-12);

    let r = json(&dyadic(&[
        "norm",
        "--op",
        "haarmult",
        "--sigma-sup",
        "--w",
        r#"{"depth":2,"leaves":[1,2,3,4]}"#,
    ]));
    assert_eq!(r["method"], "exhaustive");
    assert!(r["sigma"]["default"].is_number());

    let r = json(&dyadic(&[
        "norm", "--op", "positive", "--depth", "2", "--u", "const1", "--v", "const1", "--w", "const1",
    ]));
    assert!(r["value"].as_f64().unwrap().is_finite());
}

#[test]
fn depth_cap() {
    assert_eq!(
        code(&dyadic(&["norm", "--op", "squarefn", "--depth", "13", "--u", "const1"])),
        2
    );
    let capped = Command::new(env!("CARGO_BIN_EXE_dyadic"))
        .args(["norm", "--op", "squarefn", "--depth", "4"])
        .env("DYADIC_MAX_DEPTH", "3")
        .output()
        .unwrap();
    assert_eq!(code(&capped), 2);
    let raised = Command::new(env!("CARGO_BIN_EXE_dyadic"))
        .args(["norm", "--op", "squarefn", "--depth", "13"])
        .env("DYADIC_MAX_DEPTH", "20")
        .output()
        .unwrap();
    assert_eq!(code(&raised), 2);
}

#[test]
fn generated_specs_reparse_bitwise() {
    let out = dyadic(&[
        "generate", "--kind", "random", "--depth", "5", "--seed", "3", "--count", "3",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    for line in lines {
        let spec: Value = serde_json::from_str(line).unwrap();
        let printed: Vec<f64> = serde_json::from_value(spec["leaves"].clone()).unwrap();
        let rebuilt = dyadic_weights::io::parse_weight(line, None).unwrap();
        assert!(printed
            .iter()
            .zip(rebuilt.leaves())
            .all(|(a, b)| a.to_bits() == b.to_bits()));
        let r = json(&dyadic(&["characteristics", "--w", line]));
        assert_eq!(r["depth"], 5);
    }
}

#[test]
fn sweep_writes_series_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("sweep.csv");
    let out = dyadic(&[
        "sweep",
        "--family",
        "power",
        "--from",
        "-0.5",
        "--to",
        "0.5",
        "--steps",
        "4",
        "--depth",
        "4",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut reader = csv::Reader::from_path(&path).unwrap();
    assert_eq!(reader.headers().unwrap().get(0), Some("param"));
    assert_eq!(reader.records().count(), 5);
}

fn csv_rows(path: &Path) -> Vec<csv::StringRecord> {
    csv::Reader::from_path(path)
        .unwrap()
        .records()
        .map(Result::unwrap)
        .collect()
}

#[test]
fn verify_writes_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("out");
    let out = dyadic(&[
        "verify",
        "--depth",
        "3",
        "--seeds",
        "1..4",
        "--no-power",
        "--no-fixtures",
        "--output-dir",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let summary: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["failures"].as_array().unwrap().len(), 0);

    let header = csv::Reader::from_path(dir.join("verdicts.csv"))
        .unwrap()
        .headers()
        .unwrap()
        .clone();
    assert_eq!(
        header.iter().collect::<Vec<_>>(),
        ["claimId", "seed", "depth", "lhs", "rhs", "slack", "pass"]
    );
    let asserted = dyadic_weights::verify::CLAIMS
        .iter()
        .filter(|c| c.kind != dyadic_weights::verify::ClaimKind::Monitored)
        .count();
    assert_eq!(csv_rows(&dir.join("verdicts.csv")).len(), asserted * 4);
    let verdicts: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("verdicts.json")).unwrap()).unwrap();
    assert_eq!(verdicts.as_array().unwrap().len(), asserted * 4);
    assert!(dir.join("slack_histogram.csv").exists());
    assert_eq!(csv_rows(&dir.join("series_multiplier-ratio.csv")).len(), 4);
}

#[test]
fn verify_from_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("run");
    let config = serde_json::json!({
        "depth": 2,
        "seeds": [1, 2],
        "suite": ["sqfn-upper-bound", "rh1-ainf-ln16"],
        "outputDir": dir,
        "includePower": false,
        "includeFixtures": false,
        "tolerancesOverride": {"sqfn-upper-bound": 1e-6},
        "weightSpecs": {"mine": {"w": {"type": "power", "depth": 2, "alpha": 0.5}, "u": "const2"}}
    });
    let path = tmp.path().join("config.json");
    std::fs::write(&path, config.to_string()).unwrap();
    let out = dyadic(&["verify", "--config", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&dir.join("verdicts.csv"));
    assert_eq!(rows.len(), 2 * 3);
    assert!(rows.iter().any(|r| &r[1] == "mine"));
}

#[test]
fn verify_empty_suite_and_bad_configs() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("empty");
    let out = dyadic(&["verify", "--suite", "", "--output-dir", dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(dir.join("verdicts.csv")).unwrap();
    assert_eq!(text.trim(), "claimId,seed,depth,lhs,rhs,slack,pass");

    let missing = tmp.path().join("no/such/dir");
    assert_eq!(
        code(&dyadic(&[
            "verify",
            "--suite",
            "",
            "--output-dir",
            missing.to_str().unwrap()
        ])),
        2
    );
    let other = tmp.path().join("x");
    assert_eq!(
        code(&dyadic(&[
            "verify",
            "--suite",
            "nope",
            "--output-dir",
            other.to_str().unwrap()
        ])),
        2
    );
    assert_eq!(
        code(&dyadic(&[
            "verify",
            "--depth",
            "13",
            "--output-dir",
            other.to_str().unwrap()
        ])),
        2
    );
}

#[test]
fn tight_tolerance_override_fails_with_exit_one() {
    // A negative tolerance turns every equality case into a failure; outputs are still written.
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("strict");
    let config = serde_json::json!({
        "depth": 1,
        "seeds": [1, 1],
        "suite": ["sqfn-upper-bound"],
        "outputDir": dir,
        "includePower": false,
        "tolerancesOverride": {"sqfn-upper-bound": -0.5}
    });
    let path = tmp.path().join("config.json");
    std::fs::write(&path, config.to_string()).unwrap();
    let out = dyadic(&["verify", "--config", path.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(csv_rows(&dir.join("verdicts.csv")).iter().any(|r| &r[6] == "false"));
}
