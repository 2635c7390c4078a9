//! Records, datasets, and per-group partitions of a dataset.

use std::collections::{BTreeMap, HashMap, HashSet};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{ConfusionCounts, MetricSet, MetricValue};
use crate::rational::Rational;

/// Group label given to records whose attribute value is empty.
pub const MISSING_GROUP: &str = "__missing__";

/// A model output for one entity: a raw score, or an already-binarized flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prediction {
    Score(f64),
    Flag(bool),
}

impl Prediction {
    pub fn flag(&self) -> Option<bool> {
        match *self {
            Prediction::Flag(b) => Some(b),
            Prediction::Score(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub entity_id: String,
    pub prediction: Prediction,
    pub label: bool,
    pub attributes: BTreeMap<String, String>,
}

impl Record {
    pub fn new<I, K, V>(
        entity_id: impl Into<String>,
        prediction: Prediction,
        label: bool,
        attributes: I,
    ) -> Self
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        Self {
            entity_id: entity_id.into(),
            prediction,
            label,
            attributes: attributes
                .into_iter()
                .map(|(k, v)| (k.into(), v.into()))
                .collect(),
        }
    }

    /// The group this record belongs to under `attribute`, with empty values
    /// mapped to [`MISSING_GROUP`].
    pub fn group(&self, attribute: &str) -> Option<&str> {
        self.attributes.get(attribute).map(|v| {
            if v.is_empty() {
                MISSING_GROUP
            } else {
                v.as_str()
            }
        })
    }
}

/// A validated collection of records sharing one attribute-name set.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    attribute_names: Vec<String>,
    records: Vec<Record>,
}

impl Dataset {
    pub fn new(attribute_names: Vec<String>, records: Vec<Record>) -> Result<Self> {
        let mut seen_names = HashSet::new();
        for name in &attribute_names {
            if name.is_empty() {
                return Err(Error::InvalidDataset(
                    "attribute names must be non-empty".into(),
                ));
            }
            if !seen_names.insert(name.as_str()) {
                return Err(Error::InvalidDataset(format!(
                    "duplicate attribute name `{name}`"
                )));
            }
        }

        let mut seen_ids = HashSet::with_capacity(records.len());
        for (i, record) in records.iter().enumerate() {
            if !seen_ids.insert(record.entity_id.as_str()) {
                return Err(Error::InvalidDataset(format!(
                    "record {}: duplicate entity_id `{}`",
                    i + 1,
                    record.entity_id
                )));
            }
            if record.attributes.len() != attribute_names.len()
                || !attribute_names
                    .iter()
                    .all(|n| record.attributes.contains_key(n))
            {
                return Err(Error::InvalidDataset(format!(
                    "record {} (`{}`): attribute set differs from dataset attributes {:?}",
                    i + 1,
                    record.entity_id,
                    attribute_names
                )));
            }
            if let Prediction::Score(s) = record.prediction {
                if !(0.0..=1.0).contains(&s) {
                    return Err(Error::InvalidDataset(format!(
                        "record {} (`{}`): score {s} is outside [0, 1]",
                        i + 1,
                        record.entity_id
                    )));
                }
            }
        }

        Ok(Self {
            attribute_names,
            records,
        })
    }

    pub fn attribute_names(&self) -> &[String] {
        &self.attribute_names
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn is_binarized(&self) -> bool {
        self.records.iter().all(|r| r.prediction.flag().is_some())
    }

    /// Confusion cells over the whole dataset. Requires binarized predictions.
    pub fn counts(&self) -> Result<ConfusionCounts> {
        let mut counts = ConfusionCounts::default();
        for r in &self.records {
            counts.record(r.prediction.flag().ok_or(Error::NotBinarized)?, r.label);
        }
        Ok(counts)
    }
}

/// Flag each scored record iff `score >= threshold`. Flags pass through.
pub fn binarize(dataset: &Dataset, threshold: f64) -> Result<Dataset> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidThreshold(threshold));
    }
    let records = dataset
        .records
        .iter()
        .map(|r| {
            let prediction = match r.prediction {
                Prediction::Score(s) => Prediction::Flag(s >= threshold),
                flag => flag,
            };
            Record {
                prediction,
                ..r.clone()
            }
        })
        .collect();
    Ok(Dataset {
        attribute_names: dataset.attribute_names.clone(),
        records,
    })
}

/// Counts and metrics for one value of one attribute.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupStats {
    pub attribute_name: String,
    pub group_value: String,
    pub n: u64,
    pub counts: ConfusionCounts,
    pub metrics: MetricSet,
    /// This group's PP over the PP of all groups of the attribute.
    pub group_share_of_predicted_positives: MetricValue,
    /// Non-integral cells when the group comes from expected values rather
    /// than records; `metrics` are then computed from these, not `counts`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact_cells: Option<ExactCells>,
}

/// Confusion cells as exact rationals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactCells {
    pub tp: Rational,
    pub fp: Rational,
    pub tn: Rational,
    #[serde(rename = "fn")]
    pub fn_: Rational,
}

impl ExactCells {
    pub fn predicted_positive(&self) -> Rational {
        &self.tp + &self.fp
    }

    pub fn metric_set(&self) -> MetricSet {
        MetricSet::from_cells(&self.tp, &self.fp, &self.tn, &self.fn_)
    }
}

impl From<&ConfusionCounts> for ExactCells {
    fn from(c: &ConfusionCounts) -> Self {
        Self {
            tp: c.tp.into(),
            fp: c.fp.into(),
            tn: c.tn.into(),
            fn_: c.fn_.into(),
        }
    }
}

impl std::ops::Add for &ExactCells {
    type Output = ExactCells;

    fn add(self, rhs: &ExactCells) -> ExactCells {
        ExactCells {
            tp: &self.tp + &rhs.tp,
            fp: &self.fp + &rhs.fp,
            tn: &self.tn + &rhs.tn,
            fn_: &self.fn_ + &rhs.fn_,
        }
    }
}

impl GroupStats {
    pub fn from_counts(
        attribute_name: impl Into<String>,
        group_value: impl Into<String>,
        counts: ConfusionCounts,
        total_predicted_positive: u64,
    ) -> Self {
        Self {
            attribute_name: attribute_name.into(),
            group_value: group_value.into(),
            n: counts.total(),
            metrics: counts.metric_set(),
            group_share_of_predicted_positives: MetricValue::ratio(
                counts.predicted_positive(),
                total_predicted_positive,
            ),
            counts,
            exact_cells: None,
        }
    }
}

/// Build ordered group tables from per-group counts: descending size, then
/// lexicographic group value.
pub fn group_stats_from_counts<I, S>(attribute: &str, groups: I) -> Vec<GroupStats>
where
    I: IntoIterator<Item = (S, ConfusionCounts)>,
    S: Into<String>,
{
    let groups: Vec<(String, ConfusionCounts)> =
        groups.into_iter().map(|(g, c)| (g.into(), c)).collect();
    let pp_total: u64 = groups.iter().map(|(_, c)| c.predicted_positive()).sum();
    let mut stats: Vec<GroupStats> = groups
        .into_iter()
        .map(|(g, c)| GroupStats::from_counts(attribute, g, c, pp_total))
        .collect();
    sort_groups(&mut stats);
    stats
}

/// Build ordered group tables from exact (possibly fractional) cells.
///
/// `counts` carries the rounded integer view of each group for display;
/// metrics and shares come from the exact cells.
pub fn group_stats_from_exact<I, S>(attribute: &str, groups: I) -> Vec<GroupStats>
where
    I: IntoIterator<Item = (S, ConfusionCounts, ExactCells)>,
    S: Into<String>,
{
    let groups: Vec<(String, ConfusionCounts, ExactCells)> = groups
        .into_iter()
        .map(|(g, c, e)| (g.into(), c, e))
        .collect();
    let pp_total = groups.iter().fold(Rational::zero(), |acc, (_, _, e)| {
        acc + e.predicted_positive()
    });
    let mut stats: Vec<GroupStats> = groups
        .into_iter()
        .map(|(group_value, counts, cells)| GroupStats {
            attribute_name: attribute.to_owned(),
            group_value,
            n: counts.total(),
            counts,
            metrics: cells.metric_set(),
            group_share_of_predicted_positives: MetricValue::from_rationals(
                &cells.predicted_positive(),
                &pp_total,
            ),
            exact_cells: Some(cells),
        })
        .collect();
    sort_groups(&mut stats);
    stats
}

pub(crate) fn sort_groups(stats: &mut [GroupStats]) {
    stats.sort_by(|a, b| {
        b.n.cmp(&a.n)
            .then_with(|| a.group_value.cmp(&b.group_value))
    });
}

/// Partition a binarized dataset by `attribute`.
pub fn crosstab(dataset: &Dataset, attribute: &str) -> Result<Vec<GroupStats>> {
    if !dataset.attribute_names.iter().any(|a| a == attribute) {
        return Err(Error::UnknownAttribute(attribute.to_owned()));
    }
    let mut cells: HashMap<&str, ConfusionCounts> = HashMap::new();
    for record in &dataset.records {
        let predicted = record.prediction.flag().ok_or(Error::NotBinarized)?;
        let group = record
            .group(attribute)
            .expect("dataset invariant: every record carries every attribute");
        cells
            .entry(group)
            .or_default()
            .record(predicted, record.label);
    }
    Ok(group_stats_from_counts(attribute, cells))
}

/// Crosstab several attributes at once, preserving the requested order.
/// Repeated attribute names produce a single table.
pub fn multi_crosstab<S: AsRef<str>>(
    dataset: &Dataset,
    attributes: &[S],
) -> Result<IndexMap<String, Vec<GroupStats>>> {
    if let Some(unknown) = attributes
        .iter()
        .map(AsRef::as_ref)
        .find(|a| !dataset.attribute_names.iter().any(|n| n == a))
    {
        return Err(Error::UnknownAttribute(unknown.to_owned()));
    }
    let mut tables = IndexMap::new();
    for attribute in attributes.iter().map(AsRef::as_ref) {
        if !tables.contains_key(attribute) {
            tables.insert(attribute.to_owned(), crosstab(dataset, attribute)?);
        }
    }
    Ok(tables)
}
