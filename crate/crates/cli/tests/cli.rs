use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn uatlab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uatlab"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn json(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&read(dir, name)).unwrap()
}

/// Data rows of a CSV, skipping the header and any comment line. Fields are not unquoted.
fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

#[test]
fn lemma_suite_passes() {
    let d = tempfile::tempdir().unwrap();
    let o = uatlab(d.path(), &["verify-lemmas", "--out", "o"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(d.path(), "o/lemmas.csv");
    assert!(csv.starts_with("# generated_unix="));
    assert!(rows(&csv).len() > 30);
    assert!(!csv.contains(",false,"));
}

#[test]
fn injected_fault_is_named() {
    let d = tempfile::tempdir().unwrap();
    let o = uatlab(d.path(), &["verify-lemmas", "--only", "difference", "--inject-fault", "--out", "o"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("difference_integral[broken_logistic,rho=1]"), "{err}");
}

#[test]
fn only_filters_groups() {
    let d = tempfile::tempdir().unwrap();
    let o = uatlab(d.path(), &["verify-lemmas", "--only", "bump", "--out", "o"]);
    assert_eq!(o.status.code(), Some(0));
    let r = rows(&read(d.path(), "o/lemmas.csv"));
    assert!(!r.is_empty() && r.iter().all(|row| row[0] == "bump"));
}

#[test]
fn depth3_schedule_writes_three_rows() {
    let d = tempfile::tempdir().unwrap();
    let o = uatlab(d.path(), &["approximate", "--out", "o", "--no-timestamp"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(&read(d.path(), "o/residuals.csv"));
    assert_eq!(r.len(), 3);
    let rel: Vec<f64> = r.iter().map(|row| row[2].parse().unwrap()).collect();
    assert!(rel.windows(2).all(|w| w[1] <= w[0]), "{rel:?}");
    let net: uatlab::DeepReluNet = serde_json::from_str(&read(d.path(), "o/net.json")).unwrap();
    assert_eq!(net.depth(), 3);
}

#[test]
fn lifted_ratio_column() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(
        d.path().join("lifted.json"),
        r#"{"method":"lifted","activation":"softplus","k":48,"knots":{"lo":-3,"hi":3},"y":[2,0.5]}"#,
    )
    .unwrap();
    let o = uatlab(d.path(), &["approximate", "--config", "lifted.json", "--out", "o"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(&read(d.path(), "o/lifted.csv"));
    let (ratio, want): (f64, f64) = (r[0][4].parse().unwrap(), r[0][5].parse().unwrap());
    assert_eq!(want, 0.5f64.sqrt());
    assert!((ratio - want).abs() < 1e-3, "{ratio}");
}

#[test]
fn config_errors_exit_2() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("inf.json"), r#"{"method":"depth3","domain":{"box":[["-inf","inf"]]}}"#).unwrap();
    std::fs::write(d.path().join("typo.json"), r#"{"method":"depth3","sigmas":[1]}"#).unwrap();
    for cfg in ["inf.json", "typo.json", "missing.json"] {
        let o = uatlab(d.path(), &["approximate", "--config", cfg, "--out", "o"]);
        assert_eq!(o.status.code(), Some(2), "{cfg}");
    }
    let o = uatlab(d.path(), &["inexpressivity", "cone", "--c", "-1", "--out", "o"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn nonconvergence_exits_3() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("id.json"), r#"{"layers":[{"w":[[1.0]],"b":[0.0]}]}"#).unwrap();
    let o = uatlab(d.path(), &["norm", "--net", "id.json", "--out", "o"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn probe_is_reproducible_from_its_report() {
    let d = tempfile::tempdir().unwrap();
    let a = uatlab(d.path(), &["inexpressivity", "probe", "--out", "a", "--no-timestamp"]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    let rep = json(d.path(), "a/probe_report.json");
    assert_eq!(rep["result"]["verdict"], "consistent_with_inexpressivity");
    assert!(rep.get("generated_unix").is_none());
    assert_eq!(rep["config"]["probe"]["seed"], 0);

    let b = uatlab(d.path(), &["inexpressivity", "probe", "--out", "b", "--no-timestamp"]);
    assert_eq!(b.status.code(), Some(0));
    let c = uatlab(d.path(), &["inexpressivity", "probe", "--config", "a/probe_report.json", "--out", "c", "--no-timestamp"]);
    assert_eq!(c.status.code(), Some(0));
    for f in ["probe_report.json", "outer_norms.csv"] {
        let first = read(d.path(), &format!("a/{f}"));
        assert_eq!(first, read(d.path(), &format!("b/{f}")), "{f}");
        assert_eq!(first, read(d.path(), &format!("c/{f}")), "{f}");
    }
    assert!(read(d.path(), "a/outer_norms.csv").starts_with("R,norm\n"));
}

#[test]
fn zero_target_vanishes() {
    let d = tempfile::tempdir().unwrap();
    std::fs::write(d.path().join("zero.json"), r#"{"target":"zero","probe":{"k":10},"quadrature":{"base_cells_per_axis":16}}"#).unwrap();
    let o = uatlab(d.path(), &["inexpressivity", "probe", "--config", "zero.json", "--out", "o"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(d.path(), "o/probe_report.json")["result"]["verdict"], "net_vanishes");
}

#[test]
fn cone_growth_norm_and_bump() {
    let d = tempfile::tempdir().unwrap();
    let o = uatlab(d.path(), &["inexpressivity", "cone", "--c", "1", "--out", "o"]);
    let v: f64 = String::from_utf8_lossy(&o.stdout).trim().parse().unwrap();
    assert!((v - 2.0).abs() < 1e-3);
    assert!(json(d.path(), "o/cone.json")["generated_unix"].is_u64());

    let o = uatlab(d.path(), &["inexpressivity", "growth", "--out", "o", "--no-timestamp"]);
    assert_eq!(o.status.code(), Some(0));
    let r = rows(&read(d.path(), "o/growth.csv"));
    let norms: Vec<f64> = r.iter().map(|row| row[1].parse().unwrap()).collect();
    assert_eq!(norms.len(), 5);
    assert!((norms[1] - 4.0).abs() < 1e-9);

    let o = uatlab(d.path(), &["bump", "--dim", "2", "--out", "o"]);
    assert_eq!(o.status.code(), Some(0));
    let f: uatlab::DeepReluNet = serde_json::from_str(&read(d.path(), "o/bump_F.json")).unwrap();
    assert_eq!(f.eval(&[1.0, 1.0]).unwrap(), 1.0);
    let o = uatlab(d.path(), &["norm", "--net", "o/bump_G.json", "--p", "1", "--out", "o"]);
    let v: f64 = String::from_utf8_lossy(&o.stdout).trim().parse().unwrap();
    assert!((v - 1.0).abs() < 1e-9, "{v}");
}

#[test]
fn help_lists_defaults() {
    let d = tempfile::tempdir().unwrap();
    let o = uatlab(d.path(), &["approximate", "--help"]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("Config defaults") && text.contains("\"method\": \"lifted\""), "{text}");
}
