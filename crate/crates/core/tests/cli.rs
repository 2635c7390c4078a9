use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn fairaudit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fairaudit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

/// Two groups of 40: `a` flags 10 of 20 negatives, `b` flags 2 of 20.
fn skewed_csv() -> String {
    let mut text = String::from("entity_id,score,label_value,group,site\n");
    for i in 0..40 {
        let (label, a_score, b_score) = if i < 20 {
            (1, 0.9, 0.9)
        } else {
            (
                0,
                if i < 30 { 0.8 } else { 0.1 },
                if i < 22 { 0.8 } else { 0.1 },
            )
        };
        text.push_str(&format!("a{i},{a_score},{label},a,north\n"));
        text.push_str(&format!("b{i},{b_score},{label},b,north\n"));
    }
    text
}

#[test]
fn audit_reports_disparity_with_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "data.csv", &skewed_csv());
    let out = fairaudit(&[
        "audit",
        "--input",
        &input,
        "--format",
        "json",
        "--reference",
        "group:b",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr(&out).contains("attribute `site`"),
        "{}",
        stderr(&out)
    );

    let out = fairaudit(&[
        "audit",
        "--input",
        &input,
        "--format",
        "json",
        "--reference",
        "group:b",
        "--attributes",
        "group",
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["overall_verdict"], "disparity");
    assert_eq!(report["provenance"]["dataset_size"], 80);
    let group = &report["attributes"][0];
    assert_eq!(group["attribute_name"], "group");
    let fpr_a = group["disparities"]
        .as_array()
        .unwrap()
        .iter()
        .find(|d| d["group_value"] == "a" && d["metric"] == "fpr")
        .unwrap();
    // 10/20 over 2/20
    assert_eq!(fpr_a["measure"]["value"], 5.0);
    assert_eq!(fpr_a["verdict"], "disparity");
}

#[test]
fn audit_single_attribute_parity_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "data.csv", &skewed_csv());
    let report_path = dir.path().join("report.md");
    let out = fairaudit(&[
        "audit",
        "--input",
        &input,
        "--attributes",
        "site",
        "--output",
        report_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).is_empty());
    let md = std::fs::read_to_string(report_path).unwrap();
    assert!(md.contains("## site (reference: north, group)"));
    assert!(md.contains("| north (ref) | 80 | fpr |"));
    assert!(!md.contains("## group"));
}

#[test]
fn audit_formats_and_tau() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "data.csv", &skewed_csv());
    let csv = fairaudit(&[
        "audit",
        "--input",
        &input,
        "--format",
        "csv",
        "--metrics",
        "fpr,fnr",
        "--tau",
        "1/10",
    ]);
    assert_eq!(csv.status.code(), Some(0), "{}", stderr(&csv));
    let text = stdout(&csv);
    assert!(text.starts_with("attribute,group,n,metric,"));
    // two attributes: group (a, b) and site (north); two metrics each
    assert_eq!(text.lines().count(), 1 + 2 * 2 + 2);
}

#[test]
fn pooled_and_external_references() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "data.csv", &skewed_csv());
    let out = fairaudit(&[
        "audit",
        "--input",
        &input,
        "--reference",
        "pooled",
        "--format",
        "json",
        "--metrics",
        "fpr",
    ]);
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["attributes"][0]["reference"]["kind"], "pooled");
    assert_eq!(report["attributes"][0]["reference"]["label"], "pooled");

    let bench = write(dir.path(), "bench.json", r#"{"fpr": 0.3, "fnr": 0}"#);
    let out = fairaudit(&[
        "audit",
        "--input",
        &input,
        "--reference",
        &format!("external:{bench}"),
        "--metrics",
        "fpr",
        "--format",
        "json",
    ]);
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let a = &report["attributes"][0]["disparities"][0];
    assert_eq!(a["reference_metric"]["value"], 0.3);
}

#[test]
fn malformed_row_is_reported_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(
        dir.path(),
        "bad.csv",
        "entity_id,score,label_value,g\n1,0.2,1,x\n2,0.4,maybe,y\n",
    );
    let out = fairaudit(&["audit", "--input", &input]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(
        err.contains("row 2") && err.contains("label_value"),
        "{err}"
    );
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "data.csv", &skewed_csv());
    for args in [
        vec!["audit"],
        vec!["audit", "--input", &input, "--tau", "0"],
        vec!["audit", "--input", &input, "--metrics", "fpr,accuracy"],
        vec!["audit", "--input", &input, "--reference", "group:zzz"],
        vec!["audit", "--input", &input, "--attributes", "nope"],
        vec!["audit", "--input", &input, "--threshold", "2"],
        vec!["audit", "--input", "/definitely/missing.csv"],
        vec!["simulate", "--scenario", "lung_ca_sg", "--mode", "sideways"],
    ] {
        let out = fairaudit(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}: {}", stderr(&out));
        assert!(!stderr(&out).is_empty());
    }
}

#[test]
fn simulate_cohort_then_audit_file() {
    let dir = tempfile::tempdir().unwrap();
    let cohort = dir.path().join("lung.csv");
    let out = fairaudit(&[
        "simulate",
        "--scenario",
        "lung_ca_sg",
        "--mode",
        "cohort",
        "--seed",
        "3",
        "--out",
        cohort.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = std::fs::read_to_string(&cohort).unwrap();
    assert!(text.starts_with("entity_id,score,label_value,ethnicity\n"));
    assert_eq!(text.lines().count(), 100_001);

    let out = fairaudit(&[
        "audit",
        "--input",
        cohort.to_str().unwrap(),
        "--reference",
        "group:Chinese",
        "--metrics",
        "fnr",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let malay = report["attributes"][0]["disparities"]
        .as_array()
        .unwrap()
        .iter()
        .find(|d| d["group_value"] == "Malay")
        .unwrap()
        .clone();
    assert_eq!(malay["verdict"], "disparity");
}

#[test]
fn simulate_expected_with_audit_writes_table_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("table.csv");
    let out = fairaudit(&[
        "simulate",
        "--scenario",
        "tb_visa_au",
        "--audit",
        "--reference",
        "group:China",
        "--metrics",
        "fpr",
        "--format",
        "csv",
        "--out",
        table.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
    assert!(std::fs::read_to_string(&table)
        .unwrap()
        .contains("India,110000,0.97,0.06,220,220,213,213.4,7,6.6,6587,6586.8"));
    let report = stdout(&out);
    assert!(
        report.contains("nationality,India,110000,fpr,0.06,0.04,1.5,disparity,false"),
        "{report}"
    );
}

#[test]
fn scenario_files_and_listing() {
    let out = fairaudit(&["scenarios"]);
    assert_eq!(out.status.code(), Some(0));
    let listing = stdout(&out);
    assert!(listing.starts_with("tb_visa_au\t") && listing.contains("\nlung_ca_sg\t"));

    let shown = fairaudit(&["scenarios", "--show", "lung_ca_sg"]);
    let dir = tempfile::tempdir().unwrap();
    let edited = stdout(&shown).replace("\"fnr_ratio\": \"1.6\"", "\"fnr_ratio\": \"1\"");
    let path = write(dir.path(), "flat.json", &edited);
    let out = fairaudit(&[
        "simulate",
        "--scenario",
        &path,
        "--audit",
        "--reference",
        "group:Chinese",
        "--metrics",
        "fnr",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("overall verdict: **parity**"));

    let broken = write(
        dir.path(),
        "broken.json",
        &stdout(&shown).replace("\"population\": 15000", "\"population\": -1"),
    );
    let out = fairaudit(&["simulate", "--scenario", &broken]);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr(&out).contains("groups[1].population"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn help_and_version() {
    let out = fairaudit(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("audit"));
    let out = fairaudit(&["--version"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains(env!("CARGO_PKG_VERSION")));
}
