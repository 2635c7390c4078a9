//! Disparity measures against a reference group, parity verdicts, and the
//! end-to-end audit pipeline.
//!
//! A disparity measure is a group's metric divided by the reference's value
//! of the same metric. A group is in parity when the measure lies in the
//! closed band `[tau, 1/tau]`. All comparisons are exact.

use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::crosstab::{binarize, multi_crosstab, Dataset, ExactCells, GroupStats};
use crate::error::{Error, Result};
use crate::metrics::{
    deserialize_fraction, serialize_fraction, ConfusionCounts, Metric, MetricSet, MetricValue,
};
use crate::rational::Rational;

pub const SCHEMA_VERSION: &str = "1";
pub const DEFAULT_MIN_GROUP_SIZE: u64 = 30;

/// How the reference group of an attribute is chosen.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum ReferenceStrategy {
    /// The largest group.
    #[default]
    Predominant,
    /// Metrics of the whole population, pooled across groups.
    PooledPopulation,
    /// Benchmark metrics supplied from outside the dataset.
    ExternalBenchmark { metrics: MetricSet },
    /// A named group.
    Custom { group: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    Group,
    Pooled,
    External,
}

/// The resolved reference for one attribute.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub label: String,
    pub kind: ReferenceKind,
    pub metrics: MetricSet,
    /// Absent for external benchmarks.
    pub stats: Option<GroupStats>,
}

pub const POOLED_LABEL: &str = "pooled";
pub const EXTERNAL_LABEL: &str = "external";

pub fn select_reference(
    groups: &[GroupStats],
    strategy: &ReferenceStrategy,
    metrics: &[Metric],
) -> Result<Reference> {
    let first = groups.first().ok_or(Error::NoGroups)?;
    let from_group = |g: &GroupStats| Reference {
        label: g.group_value.clone(),
        kind: ReferenceKind::Group,
        metrics: g.metrics.clone(),
        stats: Some(g.clone()),
    };

    match strategy {
        ReferenceStrategy::Predominant => {
            let largest = groups
                .iter()
                .reduce(|best, g| {
                    if g.n > best.n || (g.n == best.n && g.group_value < best.group_value) {
                        g
                    } else {
                        best
                    }
                })
                .unwrap_or(first);
            Ok(from_group(largest))
        }
        ReferenceStrategy::Custom { group } => groups
            .iter()
            .find(|g| &g.group_value == group)
            .map(from_group)
            .ok_or_else(|| Error::ReferenceGroupNotFound {
                attribute: first.attribute_name.clone(),
                group: group.clone(),
            }),
        ReferenceStrategy::PooledPopulation => {
            let stats = pool(groups);
            Ok(Reference {
                label: POOLED_LABEL.to_owned(),
                kind: ReferenceKind::Pooled,
                metrics: stats.metrics.clone(),
                stats: Some(stats),
            })
        }
        ReferenceStrategy::ExternalBenchmark { metrics: external } => {
            for &metric in metrics {
                let defined = external.get(metric).is_some_and(MetricValue::is_defined);
                if !defined {
                    return Err(Error::MissingExternalMetric(metric.name().to_owned()));
                }
            }
            Ok(Reference {
                label: EXTERNAL_LABEL.to_owned(),
                kind: ReferenceKind::External,
                metrics: external.clone(),
                stats: None,
            })
        }
    }
}

/// The cell-wise sum of all groups as a single pseudo-group.
fn pool(groups: &[GroupStats]) -> GroupStats {
    let counts: ConfusionCounts = groups.iter().map(|g| g.counts).sum();
    let attribute = groups.first().map_or("", |g| g.attribute_name.as_str());
    let exact: Option<Vec<&ExactCells>> = groups.iter().map(|g| g.exact_cells.as_ref()).collect();
    match exact {
        Some(cells) if !cells.is_empty() => {
            let sum = cells
                .iter()
                .skip(1)
                .fold(cells[0].clone(), |acc, c| &acc + c);
            GroupStats {
                attribute_name: attribute.to_owned(),
                group_value: POOLED_LABEL.to_owned(),
                n: counts.total(),
                counts,
                metrics: sum.metric_set(),
                group_share_of_predicted_positives: MetricValue::from_rationals(
                    &sum.predicted_positive(),
                    &sum.predicted_positive(),
                ),
                exact_cells: Some(sum),
            }
        }
        _ => GroupStats::from_counts(attribute, POOLED_LABEL, counts, counts.predicted_positive()),
    }
}

/// A group metric over the reference metric, or undefined.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub enum DisparityMeasure {
    Defined(Rational),
    #[default]
    Undefined,
}

impl DisparityMeasure {
    pub fn rational(&self) -> Option<&Rational> {
        match self {
            DisparityMeasure::Defined(r) => Some(r),
            DisparityMeasure::Undefined => None,
        }
    }

    pub fn value(&self) -> Option<f64> {
        self.rational().map(Rational::to_f64)
    }
}

impl Serialize for DisparityMeasure {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serialize_fraction(self.rational(), serializer)
    }
}

impl<'de> Deserialize<'de> for DisparityMeasure {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        Ok(deserialize_fraction(deserializer)?
            .map_or(DisparityMeasure::Undefined, DisparityMeasure::Defined))
    }
}

impl fmt::Display for DisparityMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.value() {
            Some(v) => write!(f, "{}", crate::metrics::significant6(v)),
            None => f.write_str("undefined"),
        }
    }
}

/// `group / reference` when both are defined and the reference is positive.
///
/// A zero group metric over a positive reference is the defined measure 0.
pub fn disparity(group_metric: &MetricValue, reference_metric: &MetricValue) -> DisparityMeasure {
    match (group_metric.rational(), reference_metric.rational()) {
        (Some(g), Some(r)) if !r.is_zero() => DisparityMeasure::Defined(g / r),
        _ => DisparityMeasure::Undefined,
    }
}

/// Disparity intolerance, in `(0, 1]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Rational", into = "Rational")]
pub struct Tau(Rational);

impl Tau {
    pub fn new(value: Rational) -> Result<Self> {
        if value.is_negative() || value.is_zero() || value > Rational::one() {
            return Err(Error::InvalidTau(value.to_string()));
        }
        Ok(Tau(value))
    }

    pub fn value(&self) -> &Rational {
        &self.0
    }
}

impl Default for Tau {
    fn default() -> Self {
        Tau(Rational::new(4, 5).expect("nonzero denominator"))
    }
}

impl TryFrom<Rational> for Tau {
    type Error = Error;

    fn try_from(value: Rational) -> Result<Self> {
        Tau::new(value)
    }
}

impl From<Tau> for Rational {
    fn from(tau: Tau) -> Self {
        tau.0
    }
}

impl FromStr for Tau {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let r: Rational = s.parse().map_err(|_| Error::InvalidTau(s.to_owned()))?;
        Tau::new(r)
    }
}

impl fmt::Display for Tau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Parity,
    Disparity,
    InsufficientData,
    Reference,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Parity => "parity",
            Verdict::Disparity => "disparity",
            Verdict::InsufficientData => "insufficient_data",
            Verdict::Reference => "reference",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parity iff `tau <= measure <= 1/tau`, both bounds inclusive.
pub fn parity_check(measure: &DisparityMeasure, tau: &Tau) -> Verdict {
    let Some(m) = measure.rational() else {
        return Verdict::InsufficientData;
    };
    let tau = tau.value();
    // m <= 1/tau  <=>  m * tau <= 1, for tau > 0
    if m >= tau && m * tau <= Rational::one() {
        Verdict::Parity
    } else {
        Verdict::Disparity
    }
}

/// Predicted-positive count of `group` over that of `reference`.
///
/// Computed from each group's share of the attribute's predicted positives,
/// which keeps expected-value groups exact.
pub fn equal_parity_measure(group: &GroupStats, reference: &GroupStats) -> DisparityMeasure {
    disparity(
        &group.group_share_of_predicted_positives,
        &reference.group_share_of_predicted_positives,
    )
}

/// Flag rate of `group` over the flag rate of `reference`.
pub fn proportional_parity_measure(group: &GroupStats, reference: &GroupStats) -> DisparityMeasure {
    if group.n == 0 || reference.n == 0 {
        return DisparityMeasure::Undefined;
    }
    disparity(
        &group.metrics.predicted_positive_rate_within_group,
        &reference.metrics.predicted_positive_rate_within_group,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AuditConfig {
    pub tau: Tau,
    pub metrics: Vec<Metric>,
    pub reference: ReferenceStrategy,
    pub threshold: f64,
    /// Groups smaller than this are flagged `small_sample`, not excluded.
    pub min_group_size: u64,
    /// Attributes to audit; all dataset attributes when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attributes: Option<Vec<String>>,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            tau: Tau::default(),
            metrics: vec![Metric::Fpr, Metric::Fdr, Metric::Fnr, Metric::For],
            reference: ReferenceStrategy::Predominant,
            threshold: 0.5,
            min_group_size: DEFAULT_MIN_GROUP_SIZE,
            attributes: None,
        }
    }
}

impl AuditConfig {
    pub fn validate(&self) -> Result<()> {
        if self.metrics.is_empty() {
            return Err(Error::InvalidConfig("metric list is empty".into()));
        }
        for (i, m) in self.metrics.iter().enumerate() {
            if self.metrics[..i].contains(m) {
                return Err(Error::InvalidConfig(format!("metric `{m}` listed twice")));
            }
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::InvalidThreshold(self.threshold));
        }
        if matches!(self.reference, ReferenceStrategy::ExternalBenchmark { .. })
            && self.metrics.contains(&Metric::EqualParity)
        {
            return Err(Error::MissingExternalMetric(
                Metric::EqualParity.name().to_owned(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisparityRecord {
    pub metric: Metric,
    pub attribute_name: String,
    pub group_value: String,
    pub group_metric: MetricValue,
    pub reference_metric: MetricValue,
    pub measure: DisparityMeasure,
    pub verdict: Verdict,
    pub small_sample: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceInfo {
    pub label: String,
    pub kind: ReferenceKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeAudit {
    pub attribute_name: String,
    pub reference: ReferenceInfo,
    pub groups: Vec<GroupStats>,
    pub disparities: Vec<DisparityRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverallVerdict {
    Parity,
    Disparity,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub dataset_size: u64,
    /// `dataset`, or `expected:<scenario>` for expected-value audits.
    pub source: String,
    pub timestamp: String,
    pub engine_version: String,
}

impl Provenance {
    pub fn new(dataset_size: u64, source: impl Into<String>, timestamp: impl Into<String>) -> Self {
        Self {
            dataset_size,
            source: source.into(),
            timestamp: timestamp.into(),
            engine_version: crate::VERSION.to_owned(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub schema_version: String,
    pub config: AuditConfig,
    pub attributes: Vec<AttributeAudit>,
    pub overall_verdict: OverallVerdict,
    pub notes: Vec<String>,
    pub provenance: Provenance,
}

impl AuditReport {
    pub fn attribute(&self, name: &str) -> Option<&AttributeAudit> {
        self.attributes.iter().find(|a| a.attribute_name == name)
    }

    pub fn record(&self, attribute: &str, group: &str, metric: Metric) -> Option<&DisparityRecord> {
        self.attribute(attribute)?
            .disparities
            .iter()
            .find(|d| d.group_value == group && d.metric == metric)
    }

    pub fn records(&self) -> impl Iterator<Item = &DisparityRecord> {
        self.attributes.iter().flat_map(|a| a.disparities.iter())
    }
}

pub fn now_timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// Audit a dataset with the current time as the report timestamp.
pub fn audit(dataset: &Dataset, config: &AuditConfig) -> Result<AuditReport> {
    audit_at(dataset, config, &now_timestamp())
}

/// Audit a dataset, stamping the report with `timestamp`.
pub fn audit_at(dataset: &Dataset, config: &AuditConfig, timestamp: &str) -> Result<AuditReport> {
    config.validate()?;
    let binarized = binarize(dataset, config.threshold)?;
    let attributes = config
        .attributes
        .clone()
        .unwrap_or_else(|| dataset.attribute_names().to_vec());
    let tables = multi_crosstab(&binarized, &attributes)?;
    audit_tables(
        tables,
        config,
        Provenance::new(dataset.len() as u64, "dataset", timestamp),
    )
}

/// Compare every group of every attribute table against its reference.
pub fn audit_tables(
    tables: IndexMap<String, Vec<GroupStats>>,
    config: &AuditConfig,
    provenance: Provenance,
) -> Result<AuditReport> {
    config.validate()?;
    let mut attributes = Vec::with_capacity(tables.len());
    let mut notes = Vec::new();

    for (attribute, groups) in tables {
        let reference = select_reference(&groups, &config.reference, &config.metrics)
            .map_err(|e| e.in_attribute(&attribute))?;
        let mut disparities = Vec::with_capacity(groups.len() * config.metrics.len());
        for group in &groups {
            let is_reference =
                reference.kind == ReferenceKind::Group && reference.label == group.group_value;
            for &metric in &config.metrics {
                disparities.push(compare(group, &reference, metric, is_reference, config));
            }
        }

        let small: Vec<&str> = groups
            .iter()
            .filter(|g| g.n < config.min_group_size)
            .map(|g| g.group_value.as_str())
            .collect();
        if !small.is_empty() {
            notes.push(format!(
                "attribute `{attribute}`: groups below {} records: {}",
                config.min_group_size,
                small.join(", ")
            ));
        }

        attributes.push(AttributeAudit {
            attribute_name: attribute,
            reference: ReferenceInfo {
                label: reference.label,
                kind: reference.kind,
            },
            groups,
            disparities,
        });
    }

    let any_disparity = attributes
        .iter()
        .flat_map(|a| &a.disparities)
        .any(|d| d.verdict == Verdict::Disparity);

    Ok(AuditReport {
        schema_version: SCHEMA_VERSION.to_owned(),
        config: config.clone(),
        attributes,
        overall_verdict: if any_disparity {
            OverallVerdict::Disparity
        } else {
            OverallVerdict::Parity
        },
        notes,
        provenance,
    })
}

fn compare(
    group: &GroupStats,
    reference: &Reference,
    metric: Metric,
    is_reference: bool,
    config: &AuditConfig,
) -> DisparityRecord {
    let (group_metric, reference_metric, measure) = match (metric, &reference.stats) {
        (Metric::EqualParity, Some(ref_stats)) => (
            group.group_share_of_predicted_positives.clone(),
            ref_stats.group_share_of_predicted_positives.clone(),
            equal_parity_measure(group, ref_stats),
        ),
        (Metric::ProportionalParity, Some(ref_stats)) => (
            group.metrics.predicted_positive_rate_within_group.clone(),
            ref_stats
                .metrics
                .predicted_positive_rate_within_group
                .clone(),
            proportional_parity_measure(group, ref_stats),
        ),
        _ => {
            let g = group.metrics.get(metric).cloned().unwrap_or_default();
            let r = reference.metrics.get(metric).cloned().unwrap_or_default();
            let m = disparity(&g, &r);
            (g, r, m)
        }
    };

    let verdict = if is_reference {
        Verdict::Reference
    } else {
        parity_check(&measure, &config.tau)
    };

    DisparityRecord {
        metric,
        attribute_name: group.attribute_name.clone(),
        group_value: group.group_value.clone(),
        group_metric,
        reference_metric,
        measure,
        verdict,
        small_sample: group.n < config.min_group_size,
    }
}
