use std::path::Path;
use std::process::{Command, Output};

fn araweat(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_araweat"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn toy(dir: &Path) {
    std::fs::write(dir.join("toy.vec"), "4 2\nx1 1 0\ny1 0 1\nm1 1 0\nf1 0 1\n").unwrap();
    std::fs::write(
        dir.join("toy.json"),
        r#"{"version": 1, "specs": [{"id": "toy", "kind": "explicit", "bias_type": "Toy", "lang": "en",
            "t1": ["x1"], "t2": ["y1"], "a1": ["m1"], "a2": ["f1"]}]}"#,
    )
    .unwrap();
}

#[test]
fn inspect_prints_dimensions_and_counts() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("s.vec"), "2 3\na 3 4 0\nb 0 0 0\na 1 1 1\n").unwrap();
    let out = araweat(&["inspect", "--space", "s.vec"], dir.path());
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["dim"], 3);
    assert_eq!(json["vocab_size"], 2);
    assert_eq!(json["meta"]["duplicates"], 1);
    assert_eq!(json["norms"]["zero_rows"], 1);
    assert_eq!(json["norms"]["max"], 5.0);
}

#[test]
fn audit_writes_report_in_requested_format() {
    let dir = tempfile::tempdir().unwrap();
    toy(dir.path());
    std::fs::write(
        dir.path().join("audit.json"),
        r#"{"spaces": [{"name": "toy", "path": "toy.vec"}], "spec_files": ["toy.json"], "metrics": ["W", "ECT"]}"#,
    )
    .unwrap();
    let out = araweat(
        &[
            "audit",
            "--config",
            "audit.json",
            "--out",
            "r.md",
            "--format",
            "markdown",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let md = std::fs::read_to_string(dir.path().join("r.md")).unwrap();
    assert!(md.contains("toy"));
    assert!(md.contains("n/a"), "two targets give an undefined ECT:\n{md}");

    let out = araweat(&["audit", "--config", "audit.json", "--out", "r.json"], dir.path());
    assert!(out.status.success());
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(json["rows"].as_array().unwrap().len(), 2);
    assert_eq!(json["rows"][0]["value"], 2.0);
}

#[test]
fn audit_exits_2_when_every_space_fails() {
    let dir = tempfile::tempdir().unwrap();
    toy(dir.path());
    std::fs::write(
        dir.path().join("audit.json"),
        r#"{"spaces": [{"name": "gone", "path": "missing.vec"}], "spec_files": ["toy.json"]}"#,
    )
    .unwrap();
    let out = araweat(&["audit", "--config", "audit.json", "--out", "r.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(json["failed_spaces"][0], "gone");
}

#[test]
fn audit_exits_1_on_bad_config() {
    let dir = tempfile::tempdir().unwrap();
    toy(dir.path());
    std::fs::write(
        dir.path().join("audit.json"),
        r#"{"spaces": [{"name": "toy", "path": "toy.vec"}], "spec_files": ["toy.json"], "min_coverage": 1.5}"#,
    )
    .unwrap();
    let out = araweat(&["audit", "--config", "audit.json", "--out", "r.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
}

#[test]
fn sts_prints_pearson() {
    let dir = tempfile::tempdir().unwrap();
    toy(dir.path());
    std::fs::write(
        dir.path().join("pairs.tsv"),
        "# gold\ta\tb\n5.0\tx1\tx1\n0.0\tx1\ty1\n3.5355339\tx1\tx1 y1\n",
    )
    .unwrap();
    let out = araweat(&["sts", "--space", "toy.vec", "--pairs", "pairs.tsv"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["n_pairs"], 3);
    assert!((json["pearson"].as_f64().unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn compare_correlates_sub_reports_with_conc() {
    let dir = tempfile::tempdir().unwrap();
    let row = |test: &str, metric: &str, v: f64| {
        serde_json::json!({"space": "s", "test": test, "metric": metric, "value": v,
            "p_value": null, "significant": null, "coverage": 1.0, "flags": []})
    };
    let report = |vals: [f64; 3]| {
        serde_json::json!({
            "created_at": "2020-01-01T00:00:00Z",
            "config_echo": {"spaces": [], "spec_files": []},
            "rows": [row("weat1", "W", vals[0]), row("weat2", "W", vals[1]), row("weat1", "KM", vals[2])],
        })
    };
    std::fs::write(dir.path().join("a.json"), report([0.2, 1.0, 0.5]).to_string()).unwrap();
    std::fs::write(dir.path().join("b.json"), report([0.6, 1.2, 0.9]).to_string()).unwrap();
    std::fs::write(dir.path().join("c.json"), report([0.4, 1.1, 0.7]).to_string()).unwrap();
    let out = araweat(
        &["compare", "--conc", "c.json", "--sub", "a.json", "b.json"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((json["correlation"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    let avg = &json["avg"]["values"];
    assert_eq!(avg[0][0], "weat1/W");
    assert!((avg[0][1].as_f64().unwrap() - 0.4).abs() < 1e-12);
}
