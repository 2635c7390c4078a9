//! Rendering audit reports and expected-outcome tables.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::disparity::{AuditReport, OverallVerdict, ReferenceKind, Verdict, SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::scenario::ExpectedReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Markdown,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(ReportFormat::Json),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            "csv" | "csv-tables" => Ok(ReportFormat::Csv),
            other => Err(Error::InvalidConfig(format!(
                "unknown format `{other}` (expected json, markdown, or csv)"
            ))),
        }
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportFormat::Json => "json",
            ReportFormat::Markdown => "markdown",
            ReportFormat::Csv => "csv",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportDocument {
    pub format: ReportFormat,
    pub payload: String,
}

pub fn emit_report(report: &AuditReport, format: ReportFormat) -> ReportDocument {
    let payload = match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        ReportFormat::Markdown => markdown(report),
        ReportFormat::Csv => csv_tables(report),
    };
    ReportDocument { format, payload }
}

/// Parse a JSON report produced by [`emit_report`].
pub fn parse_report(json: &str) -> Result<AuditReport> {
    let report: AuditReport = serde_json::from_str(json).map_err(|e| {
        Error::parse(
            format!("line {} column {}", e.line(), e.column()),
            e.to_string(),
        )
    })?;
    if report.schema_version != SCHEMA_VERSION {
        return Err(Error::Schema(format!(
            "schema_version: expected \"{SCHEMA_VERSION}\", found \"{}\"",
            report.schema_version
        )));
    }
    Ok(report)
}

fn markdown(report: &AuditReport) -> String {
    let mut out = String::new();
    let config = &report.config;
    let verdict = match report.overall_verdict {
        OverallVerdict::Parity => "parity",
        OverallVerdict::Disparity => "disparity",
    };
    let upper = config
        .tau
        .value()
        .recip()
        .map(|r| r.to_string())
        .unwrap_or_default();
    let metrics: Vec<_> = config.metrics.iter().map(|m| m.name()).collect();

    writeln!(out, "# Fairness audit\n").unwrap();
    writeln!(out, "- overall verdict: **{verdict}**").unwrap();
    writeln!(
        out,
        "- tau: {} (parity band [{}, {upper}])",
        config.tau, config.tau
    )
    .unwrap();
    writeln!(out, "- metrics: {}", metrics.join(", ")).unwrap();
    writeln!(out, "- threshold: {}", config.threshold).unwrap();
    writeln!(
        out,
        "- records: {} (source: {})",
        report.provenance.dataset_size, report.provenance.source
    )
    .unwrap();
    writeln!(
        out,
        "- engine: fairaudit {} at {}",
        report.provenance.engine_version, report.provenance.timestamp
    )
    .unwrap();

    for attribute in &report.attributes {
        let kind = match attribute.reference.kind {
            ReferenceKind::Group => "group",
            ReferenceKind::Pooled => "pooled population",
            ReferenceKind::External => "external benchmark",
        };
        writeln!(
            out,
            "\n## {} (reference: {}, {kind})\n",
            attribute.attribute_name, attribute.reference.label
        )
        .unwrap();
        writeln!(out, "| group | n | metric | value | disparity | verdict |").unwrap();
        writeln!(out, "|---|---:|---|---:|---:|---|").unwrap();
        for d in &attribute.disparities {
            let n = attribute
                .groups
                .iter()
                .find(|g| g.group_value == d.group_value)
                .map_or(0, |g| g.n);
            let group = if d.verdict == Verdict::Reference {
                format!("{} (ref)", escape_md(&d.group_value))
            } else {
                escape_md(&d.group_value)
            };
            let verdict = if d.small_sample {
                format!("{}, small sample", d.verdict)
            } else {
                d.verdict.to_string()
            };
            writeln!(
                out,
                "| {group} | {n} | {} | {} | {} | {verdict} |",
                d.metric, d.group_metric, d.measure
            )
            .unwrap();
        }
    }

    if !report.notes.is_empty() {
        writeln!(out, "\n## Notes\n").unwrap();
        for note in &report.notes {
            writeln!(out, "- {note}").unwrap();
        }
    }
    out
}

fn escape_md(s: &str) -> String {
    s.replace('|', "\\|")
}

fn csv_string(rows: Vec<Vec<String>>) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.write_record(&row).expect("in-memory csv write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| crate::metrics::significant6(x).to_string())
        .unwrap_or_default()
}

fn csv_tables(report: &AuditReport) -> String {
    let mut rows = vec![[
        "attribute",
        "group",
        "n",
        "metric",
        "group_value",
        "reference_value",
        "disparity",
        "verdict",
        "small_sample",
    ]
    .map(String::from)
    .to_vec()];
    for attribute in &report.attributes {
        for d in &attribute.disparities {
            let n = attribute
                .groups
                .iter()
                .find(|g| g.group_value == d.group_value)
                .map_or(0, |g| g.n);
            rows.push(vec![
                d.attribute_name.clone(),
                d.group_value.clone(),
                n.to_string(),
                d.metric.to_string(),
                opt(d.group_metric.value()),
                opt(d.reference_metric.value()),
                opt(d.measure.value()),
                d.verdict.to_string(),
                d.small_sample.to_string(),
            ]);
        }
    }
    csv_string(rows)
}

/// Render an expected-outcome table. Rounded counts come first, exact values
/// alongside.
pub fn emit_expected(report: &ExpectedReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        ReportFormat::Markdown => expected_markdown(report),
        ReportFormat::Csv => expected_csv(report),
    }
}

fn expected_markdown(report: &ExpectedReport) -> String {
    let mut out = String::new();
    writeln!(out, "# Expected outcomes: {}\n", report.scenario).unwrap();
    writeln!(
        out,
        "Grouped by `{}`; base sensitivity {}, base specificity {}. Rounded counts, exact values in parentheses.\n",
        report.attribute_name, report.base_sensitivity, report.base_specificity
    )
    .unwrap();
    writeln!(
        out,
        "| group | population | sensitivity | FPR | cases | detected (TP) | missed (FN) | false positives (FP) | true negatives (TN) |"
    )
    .unwrap();
    writeln!(out, "|---|---:|---:|---:|---:|---:|---:|---:|---:|").unwrap();
    for o in &report.outcomes {
        let r = &o.rounded;
        writeln!(
            out,
            "| {} | {} | {} | {} | {} ({}) | {} ({}) | {} ({}) | {} ({}) | {} ({}) |",
            escape_md(&o.group),
            o.population,
            o.sensitivity,
            o.false_positive_rate,
            r.expected_cases,
            o.expected_cases,
            r.detected,
            o.detected,
            r.missed,
            o.missed,
            r.false_positives,
            o.false_positives,
            r.true_negatives,
            o.true_negatives,
        )
        .unwrap();
    }
    if !report.notes.is_empty() {
        writeln!(out, "\n## Notes\n").unwrap();
        for note in &report.notes {
            writeln!(out, "- {note}").unwrap();
        }
    }
    out
}

fn expected_csv(report: &ExpectedReport) -> String {
    let mut rows = vec![[
        "group",
        "population",
        "sensitivity",
        "false_positive_rate",
        "cases",
        "cases_exact",
        "tp",
        "tp_exact",
        "fn",
        "fn_exact",
        "fp",
        "fp_exact",
        "tn",
        "tn_exact",
    ]
    .map(String::from)
    .to_vec()];
    for o in &report.outcomes {
        let r = &o.rounded;
        rows.push(vec![
            o.group.clone(),
            o.population.to_string(),
            o.sensitivity.to_string(),
            o.false_positive_rate.to_string(),
            r.expected_cases.to_string(),
            o.expected_cases.to_string(),
            r.detected.to_string(),
            o.detected.to_string(),
            r.missed.to_string(),
            o.missed.to_string(),
            r.false_positives.to_string(),
            o.false_positives.to_string(),
            r.true_negatives.to_string(),
            o.true_negatives.to_string(),
        ]);
    }
    csv_string(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crosstab::{Dataset, Prediction, Record};
    use crate::disparity::{audit_at, AuditConfig, ReferenceStrategy};
    use crate::metrics::Metric;
    use crate::scenario::{audit_expected, expected_report, lung_ca_sg};

    fn single_group_report() -> AuditReport {
        let records = (0..40)
            .map(|i| {
                Record::new(
                    format!("e{i}"),
                    Prediction::Score((i % 10) as f64 / 10.0),
                    i % 3 == 0,
                    [("site", "north")],
                )
            })
            .collect();
        let ds = Dataset::new(vec!["site".into()], records).unwrap();
        audit_at(&ds, &AuditConfig::default(), "2026-01-01T00:00:00Z").unwrap()
    }

    #[test]
    fn markdown_single_group() {
        let doc = emit_report(&single_group_report(), ReportFormat::Markdown);
        assert_eq!(doc.payload.matches("\n## ").count(), 1);
        assert_eq!(doc.payload.matches("| group | n |").count(), 1);
        assert!(doc.payload.contains("| north (ref) | 40 |"));
        assert!(doc.payload.contains("parity band [0.8, 1.25]"));
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let config = AuditConfig {
            reference: ReferenceStrategy::Custom {
                group: "Chinese".into(),
            },
            metrics: Metric::ALL.to_vec(),
            ..Default::default()
        };
        for report in [
            single_group_report(),
            audit_expected(&lung_ca_sg(), &config, "t").unwrap(),
        ] {
            let json = emit_report(&report, ReportFormat::Json).payload;
            assert!(json.contains("\"schema_version\": \"1\""));
            let parsed = parse_report(&json).unwrap();
            assert_eq!(parsed, report);
            assert_eq!(emit_report(&parsed, ReportFormat::Json).payload, json);
        }
    }

    #[test]
    fn json_expected_lung_disparity() {
        let config = AuditConfig {
            reference: ReferenceStrategy::Custom {
                group: "Chinese".into(),
            },
            ..Default::default()
        };
        let report = audit_expected(&lung_ca_sg(), &config, "t").unwrap();
        let json: serde_json::Value =
            serde_json::from_str(&emit_report(&report, ReportFormat::Json).payload).unwrap();
        let ethnicity = &json["attributes"][0];
        let malay_fnr = ethnicity["disparities"]
            .as_array()
            .unwrap()
            .iter()
            .find(|d| d["group_value"] == "Malay" && d["metric"] == "fnr")
            .unwrap();
        assert_eq!(malay_fnr["measure"]["value"], 19.375);
        assert_eq!(malay_fnr["measure"]["numerator"], 155);
        assert_eq!(malay_fnr["measure"]["denominator"], 8);
        assert_eq!(malay_fnr["verdict"], "disparity");
    }

    #[test]
    fn csv_tables_are_flat() {
        let text = emit_report(&single_group_report(), ReportFormat::Csv).payload;
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(
            lines[0],
            "attribute,group,n,metric,group_value,reference_value,disparity,verdict,small_sample"
        );
        assert_eq!(lines.len(), 1 + 4);
        assert!(lines[1].starts_with("site,north,40,fpr,"));
    }

    #[test]
    fn expected_table_formats() {
        let report = expected_report(&lung_ca_sg()).unwrap();
        let md = emit_expected(&report, ReportFormat::Markdown);
        assert!(
            md.contains("| Malay | 15000 | 0.6125 | 0 | 300 (300) | 184 (183.75) | 116 (116.25) |"),
            "{md}"
        );
        let csv = emit_expected(&report, ReportFormat::Csv);
        assert!(
            csv.contains("Malay,15000,0.6125,0,300,300,184,183.75,116,116.25,0,0,14700,14700"),
            "{csv}"
        );
        let json: serde_json::Value =
            serde_json::from_str(&emit_expected(&report, ReportFormat::Json)).unwrap();
        assert_eq!(json["outcomes"][1]["rounded"]["missed"], 116);
        assert_eq!(json["outcomes"][1]["detected"], "183.75");
    }

    #[test]
    fn format_names() {
        assert_eq!("JSON".parse::<ReportFormat>().unwrap(), ReportFormat::Json);
        assert_eq!(
            "csv-tables".parse::<ReportFormat>().unwrap(),
            ReportFormat::Csv
        );
        assert!("pdf".parse::<ReportFormat>().is_err());
    }
}
