use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

fn regino(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_regino"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = regino(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json(args: &[&str]) -> Value {
    serde_json::from_str(&ok(args)).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synthetic_panel(dir: &Path) -> PathBuf {
    let path = dir.join("panel.csv");
    ok(&[
        "synth",
        "--stats",
        s(&data("table2_stats.csv")),
        "--corr",
        s(&data("table3_corr.csv")),
        "--out",
        s(&path),
    ]);
    path
}

#[test]
fn indices_shape_and_scale() {
    let path = data("example_employment.csv");
    let plain = ok(&["indices", s(&path)]);
    let lines: Vec<&str> = plain.lines().collect();
    assert_eq!(lines[0], "region,year,theil,related,unrelated,hoover");
    assert_eq!(lines.len(), 5);

    let a = json(&["indices", s(&path), "--format", "json"]);
    let b = json(&["indices", s(&path), "--format", "json", "--scale", "100"]);
    for (x, y) in a.as_array().unwrap().iter().zip(b.as_array().unwrap()) {
        let (hx, hy) = (x["hoover"].as_f64().unwrap(), y["hoover"].as_f64().unwrap());
        assert!((hy - 100.0 * hx).abs() < 1e-9);
    }
}

#[test]
fn uniform_employment_gives_log_n() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("emp.csv");
    let mut text = String::from("region,year,industry,parent,employment\n");
    for region in ["A", "B"] {
        for i in 0..7 {
            text.push_str(&format!("{region},2010,{i},P{},50\n", i % 3));
        }
    }
    std::fs::write(&path, text).unwrap();
    let rows = json(&["indices", s(&path), "--format", "json"]);
    for row in rows.as_array().unwrap() {
        assert!((row["theil"].as_f64().unwrap() - 7f64.ln()).abs() < 1e-12);
        assert_eq!(row["hoover"].as_f64().unwrap(), 0.0);
    }
}

#[test]
fn indices_schema_error_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("emp.csv");
    std::fs::write(
        &path,
        "region,year,industry,parent,employment\nA,2010,1,P,5\nA,2010,2,P,abc\n",
    )
    .unwrap();
    let out = regino(&["indices", s(&path)]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn table4_suite_on_synthetic_panel() {
    let dir = tempfile::tempdir().unwrap();
    let panel = synthetic_panel(dir.path());
    let specs = data("table4_specs.json");
    let md = ok(&["regress", s(&panel), s(&specs)]);
    assert!(md.lines().next().unwrap().ends_with("| 10. | 11. |"));
    for row in ["| R² |", "| F |", "| Avg VIF |", "| N |"] {
        assert!(md.contains(row), "missing {row}");
    }

    let suite = json(&[
        "regress",
        s(&panel),
        s(&specs),
        "--format",
        "json",
        "--jobs",
        "4",
    ]);
    let columns = suite["columns"].as_array().unwrap();
    assert_eq!(columns.len(), 11);
    for col in columns {
        let avg = col["result"]["avg_vif"].as_f64().unwrap();
        assert!(avg >= 1.0);
    }
    assert!(columns[0]["result"]["avg_vif"].as_f64().unwrap() < 10.0);

    let csv = ok(&["regress", s(&panel), s(&specs), "--format", "csv"]);
    assert!(csv.starts_with("column,term,estimate,robust_se"));
}

#[test]
fn table6_interactions_are_orthogonalised() {
    let dir = tempfile::tempdir().unwrap();
    let panel = synthetic_panel(dir.path());
    let md = ok(&["regress", s(&panel), s(&data("table6_specs.json"))]);
    assert!(md.contains("| RDEXP*SCIENGIN_L1 |"));
    assert!(md.contains("| RDPERS*RDGOV_L1 |"));
}

#[test]
fn regress_edge_cases() {
    let dir = tempfile::tempdir().unwrap();
    let panel = synthetic_panel(dir.path());
    let empty = dir.path().join("empty.json");
    std::fs::write(&empty, "").unwrap();
    assert!(regino(&["regress", s(&panel), s(&empty)]).status.success());

    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"[{"dependent": "PATINT", "regressors": ["RDEXP", "RDEXP"]}]"#,
    )
    .unwrap();
    let out = regino(&["regress", s(&panel), s(&bad)]);
    assert!(!out.status.success());

    let mixed = dir.path().join("mixed.json");
    std::fs::write(
        &mixed,
        r#"[{"dependent": "PATINT", "regressors": ["RDEXP", "RDEXP"]},
            {"dependent": "PATINT", "regressors": ["RDEXP"]}]"#,
    )
    .unwrap();
    let out = regino(&["regress", s(&panel), s(&mixed)]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("failed"));
}

#[test]
fn decompose_layout_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let panel = synthetic_panel(dir.path());
    let md = ok(&["decompose", s(&panel)]);
    assert!(md.starts_with("Variance Decomposition (N=117)"));
    assert!(md.contains("BETWEEN-REGIONS/σ^2 | BETWEEN-TIME/σ^2 | RESIDUAL/σ^2"));

    let rows = json(&["decompose", s(&panel), "--format", "json"]);
    for row in rows.as_array().unwrap() {
        let sum: f64 = ["between_region", "between_time", "residual"]
            .iter()
            .map(|k| row[k].as_f64().unwrap())
            .sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }

    let constant_in_time = dir.path().join("flat.csv");
    std::fs::write(
        &constant_in_time,
        "region,year,Z\nA,1,1\nA,2,1\nB,1,3\nB,2,3\nC,1,7\nC,2,7\n",
    )
    .unwrap();
    let row = &json(&["decompose", s(&constant_in_time), "--format", "json"])[0];
    assert_eq!(row["between_region"].as_f64().unwrap(), 1.0);
    assert_eq!(row["p_time"].as_f64().unwrap(), 1.0);

    let unbalanced = dir.path().join("unbalanced.csv");
    std::fs::write(&unbalanced, "region,year,Z\nA,1,1\nA,2,2\nB,1,3\n").unwrap();
    assert!(!regino(&["decompose", s(&unbalanced)]).status.success());
}

#[test]
fn elasticities_from_provenance() {
    let rows = json(&[
        "elasticities",
        s(&data("table5_provenance.csv")),
        "--format",
        "json",
    ]);
    let find = |v: &str| {
        rows.as_array()
            .unwrap()
            .iter()
            .find(|r| r["variable"] == v)
            .unwrap()
            .clone()
    };
    assert!((find("HTMANSERV")["delta"].as_f64().unwrap() - 0.003).abs() < 5e-4);
    assert_eq!(find("RDHIGHED")["matches"], Value::Bool(false));

    let dir = tempfile::tempdir().unwrap();
    let blank = dir.path().join("p.csv");
    std::fs::write(
        &blank,
        "variable,beta,source_column,x_mean,y_mean,expected\nRDGOV,0.1155,10,,,0.107\n",
    )
    .unwrap();
    assert!(!regino(&["elasticities", s(&blank)]).status.success());
    let rows = json(&[
        "elasticities",
        s(&blank),
        "--stats",
        s(&data("table2_stats.csv")),
        "--format",
        "json",
    ]);
    assert!((rows[0]["elasticity"].as_f64().unwrap() - 0.1025).abs() < 5e-4);

    let no_source = dir.path().join("n.csv");
    std::fs::write(
        &no_source,
        "variable,beta,source_column,x_mean,y_mean,expected\nRDGOV,0.1155,,3.8,4.3,\n",
    )
    .unwrap();
    assert!(!regino(&["elasticities", s(&no_source)]).status.success());
}

#[test]
fn game_commands() {
    let eq = json(&["game", "solve", "--a", "1", "--c", "4", "--format", "json"]);
    let e = &eq["equilibrium"];
    assert_eq!(e["r"].as_f64().unwrap(), 1.0);
    assert_eq!(e["q1"].as_f64().unwrap(), 0.0);
    assert!((e["q2"].as_f64().unwrap() + 2.0).abs() < 1e-12);
    assert_eq!(e["flags"]["q2_nonneg"], Value::Bool(false));

    let text = ok(&["game", "solve", "--a", "10", "--c", "1"]);
    assert!(text.contains("radicand -3"));

    let report = json(&[
        "game", "verify", "--a", "10", "--c", "1", "--r", "1", "--format", "json",
    ]);
    assert_eq!(report["quantity_stage_stationary"], Value::Bool(true));
    for check in report["checks"].as_array().unwrap() {
        assert_eq!(check["passed"], Value::Bool(true), "{check}");
    }

    for bad in [["--a", "nan", "--c", "1"], ["--a", "1", "--c", "-2"]] {
        let mut args = vec!["game", "solve"];
        args.extend(bad);
        assert!(!regino(&args).status.success());
    }

    let csv = ok(&["game", "region", "--steps", "4"]);
    assert!(csv.starts_with("a,c,r_real,q1_nonneg,q2_nonneg,p_nonneg\n"));
    assert_eq!(csv.lines().count(), 1 + 25);
}

#[test]
fn synth_writes_atomically_and_rejects_bad_targets() {
    let dir = tempfile::tempdir().unwrap();
    let path = synthetic_panel(dir.path());
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 118);
    let leftovers = std::fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(leftovers, 1);

    let corr = dir.path().join("corr.csv");
    std::fs::write(&corr, "variable,A,B,C\nA,1,,\nB,0.99,1,\nC,-0.99,0.99,1\n").unwrap();
    let stats = dir.path().join("stats.csv");
    std::fs::write(
        &stats,
        "variable,count,mean,sd,min,max\nA,117,0,1,-5,5\nB,117,0,1,-5,5\nC,117,0,1,-5,5\n",
    )
    .unwrap();
    let out = regino(&["synth", "--stats", s(&stats), "--corr", s(&corr)]);
    assert!(!out.status.success());
}

#[test]
fn describe_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let panel = synthetic_panel(dir.path());
    let stats = json(&["describe", s(&panel), "--format", "json"]);
    let patint = stats
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["variable"] == "PATINT")
        .unwrap();
    assert!((patint["mean"].as_f64().unwrap() - 4.3633).abs() < 0.02 * 4.3633);

    let corr = ok(&[
        "describe",
        s(&panel),
        "--variables",
        "PATINT,RDEXP,THEIL",
        "--correlations",
    ]);
    assert_eq!(corr.lines().next().unwrap(), "variable,PATINT,RDEXP,THEIL");
    assert!(corr.contains("PATINT,1.0000"));
}
