//! CSV datasets and JSON scenario / benchmark files.
//!
//! Dataset CSV: header row required, comma delimiter, RFC 4180 quoting,
//! UTF-8. Default columns are `entity_id`, `score`, `label_value`; every
//! other column is a demographic attribute unless the schema lists them.

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::crosstab::{Dataset, Prediction, Record};
use crate::disparity::SCHEMA_VERSION;
use crate::error::{Error, Result};
use crate::metrics::MetricSet;
use crate::scenario::ScenarioSpec;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AttributeColumns {
    /// Every column that is not the id, score, or label column.
    Remaining,
    Explicit(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSchema {
    pub id_column: String,
    pub score_column: String,
    pub label_column: String,
    pub attribute_columns: AttributeColumns,
}

impl Default for DatasetSchema {
    fn default() -> Self {
        Self {
            id_column: "entity_id".into(),
            score_column: "score".into(),
            label_column: "label_value".into(),
            attribute_columns: AttributeColumns::Remaining,
        }
    }
}

impl DatasetSchema {
    fn validate(&self) -> Result<()> {
        let mut named = vec![&self.id_column, &self.score_column, &self.label_column];
        if let AttributeColumns::Explicit(cols) = &self.attribute_columns {
            named.extend(cols);
        }
        for (i, col) in named.iter().enumerate() {
            if named[..i].contains(col) {
                return Err(Error::Schema(format!(
                    "column `{col}` is named twice in the schema"
                )));
            }
        }
        Ok(())
    }
}

fn io_error(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn load_dataset(path: impl AsRef<Path>, schema: &DatasetSchema) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(io_error(path))?;
    read_dataset(file, schema)
}

fn parse_label(text: &str) -> Option<bool> {
    match text.trim().to_ascii_lowercase().as_str() {
        "1" | "true" => Some(true),
        "0" | "false" => Some(false),
        _ => None,
    }
}

fn parse_score(text: &str) -> std::result::Result<f64, String> {
    let score: f64 = text
        .trim()
        .parse()
        .map_err(|_| format!("score `{text}` is not a number"))?;
    if !(0.0..=1.0).contains(&score) {
        return Err(format!("score `{text}` is outside [0, 1]"));
    }
    Ok(score)
}

fn csv_location(err: &csv::Error) -> String {
    match err.position() {
        Some(pos) => format!("line {}", pos.line()),
        None => "input".into(),
    }
}

pub fn read_dataset<R: Read>(reader: R, schema: &DatasetSchema) -> Result<Dataset> {
    schema.validate()?;
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);

    let headers = csv
        .headers()
        .map_err(|e| Error::parse(csv_location(&e), e.to_string()))?
        .clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::Schema("empty file: a header row is required".into()));
    }
    for (i, name) in headers.iter().enumerate() {
        if headers.iter().take(i).any(|h| h == name) {
            return Err(Error::Schema(format!(
                "duplicate column `{name}` in header"
            )));
        }
    }

    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("missing required column `{name}`")))
    };
    let id_idx = column(&schema.id_column)?;
    let score_idx = column(&schema.score_column)?;
    let label_idx = column(&schema.label_column)?;

    let attributes: Vec<(usize, String)> = match &schema.attribute_columns {
        AttributeColumns::Explicit(cols) => cols
            .iter()
            .map(|c| column(c).map(|i| (i, c.clone())))
            .collect::<Result<_>>()?,
        AttributeColumns::Remaining => headers
            .iter()
            .enumerate()
            .filter(|(i, _)| ![id_idx, score_idx, label_idx].contains(i))
            .map(|(i, h)| (i, h.to_owned()))
            .collect(),
    };

    let mut records = Vec::new();
    let mut first_row_of: HashMap<String, usize> = HashMap::new();
    for (index, row) in csv.records().enumerate() {
        let row_number = index + 1;
        let row = row.map_err(|e| {
            Error::parse(
                format!("row {row_number} ({})", csv_location(&e)),
                e.to_string(),
            )
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let at = |col: &str| format!("row {row_number} (line {line}), column `{col}`");

        let entity_id = row[id_idx].to_owned();
        if entity_id.is_empty() {
            return Err(Error::parse(at(&schema.id_column), "entity id is empty"));
        }
        if let Some(first) = first_row_of.insert(entity_id.clone(), row_number) {
            return Err(Error::parse(
                at(&schema.id_column),
                format!("duplicate entity id `{entity_id}` (first seen on row {first})"),
            ));
        }
        let score =
            parse_score(&row[score_idx]).map_err(|m| Error::parse(at(&schema.score_column), m))?;
        let label = parse_label(&row[label_idx]).ok_or_else(|| {
            Error::parse(
                at(&schema.label_column),
                format!(
                    "label `{}` is not one of 0, 1, true, false",
                    &row[label_idx]
                ),
            )
        })?;

        records.push(Record::new(
            entity_id,
            Prediction::Score(score),
            label,
            attributes
                .iter()
                .map(|(i, name)| (name.clone(), row[*i].to_owned())),
        ));
    }

    Dataset::new(attributes.into_iter().map(|(_, n)| n).collect(), records)
}

/// Write a dataset using the default column names. Flags are written as
/// scores `0` / `1`.
pub fn write_dataset<W: Write>(dataset: &Dataset, writer: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(writer);
    let defaults = DatasetSchema::default();
    let write_err = |e: csv::Error| Error::parse("output", e.to_string());
    let mut header = vec![
        defaults.id_column.as_str(),
        defaults.score_column.as_str(),
        defaults.label_column.as_str(),
    ];
    header.extend(dataset.attribute_names().iter().map(String::as_str));
    csv.write_record(&header).map_err(write_err)?;

    for record in dataset.records() {
        let score = match record.prediction {
            Prediction::Score(s) => s.to_string(),
            Prediction::Flag(true) => "1".into(),
            Prediction::Flag(false) => "0".into(),
        };
        let mut row = vec![
            record.entity_id.clone(),
            score,
            if record.label { "1" } else { "0" }.to_owned(),
        ];
        row.extend(
            dataset
                .attribute_names()
                .iter()
                .map(|a| record.attributes[a].clone()),
        );
        csv.write_record(&row).map_err(write_err)?;
    }
    csv.flush()
        .map_err(|e| Error::parse("output", e.to_string()))
}

pub fn dataset_to_csv(dataset: &Dataset) -> Result<String> {
    let mut buf = Vec::new();
    write_dataset(dataset, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::parse("output", e.to_string()))
}

pub fn save_dataset(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(io_error(path))?;
    write_dataset(dataset, std::io::BufWriter::new(file))
}

fn json_syntax_error(e: &serde_json::Error) -> Error {
    Error::parse(
        format!("line {} column {}", e.line(), e.column()),
        e.to_string(),
    )
}

fn deserialize_at<T: serde::de::DeserializeOwned>(value: serde_json::Value) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let path = if path == "." {
            "document".to_owned()
        } else {
            path
        };
        Error::Schema(format!("{path}: {}", e.inner()))
    })
}

/// Parse and validate a scenario document.
pub fn parse_scenario(json: &str) -> Result<ScenarioSpec> {
    let mut value: serde_json::Value =
        serde_json::from_str(json).map_err(|e| json_syntax_error(&e))?;
    let object = value
        .as_object_mut()
        .ok_or_else(|| Error::Schema("document: expected a JSON object".into()))?;
    match object.remove("schema_version") {
        Some(serde_json::Value::String(v)) if v == SCHEMA_VERSION => {}
        Some(other) => {
            return Err(Error::Schema(format!(
                "schema_version: expected \"{SCHEMA_VERSION}\", found {other}"
            )))
        }
        None => return Err(Error::Schema("schema_version: missing field".into())),
    }
    let scenario: ScenarioSpec = deserialize_at(value)?;
    scenario.validate()?;
    Ok(scenario)
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioSpec> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(io_error(path))?;
    parse_scenario(&text)
}

#[derive(Serialize)]
struct ScenarioDocument<'a> {
    schema_version: &'static str,
    #[serde(flatten)]
    scenario: &'a ScenarioSpec,
}

pub fn scenario_to_json(scenario: &ScenarioSpec) -> String {
    let doc = ScenarioDocument {
        schema_version: SCHEMA_VERSION,
        scenario,
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("scenario serializes");
    text.push('\n');
    text
}

/// Benchmark metrics for an external reference: a JSON object keyed by
/// metric name (`fpr`, `fnr`, `for`, ...), values as numbers or fractions.
pub fn parse_external_benchmark(json: &str) -> Result<MetricSet> {
    let value: serde_json::Value = serde_json::from_str(json).map_err(|e| json_syntax_error(&e))?;
    deserialize_at(value)
}

pub fn load_external_benchmark(path: impl AsRef<Path>) -> Result<MetricSet> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(io_error(path))?;
    parse_external_benchmark(&text)
}
