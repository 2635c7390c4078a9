//! Confusion-matrix cells and the rate metrics derived from them.
//!
//! Counts are exact integers and every rate is an exact fraction of them.
//! A rate whose denominator is zero is [`MetricValue::Undefined`], never 0.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign};
use std::str::FromStr;

use num_traits::ToPrimitive;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;
use crate::rational::Rational;

/// The four cells of a binary confusion matrix for one group.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn new(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        Self { tp, fp, tn, fn_ }
    }

    pub fn record(&mut self, predicted: bool, actual: bool) {
        match (predicted, actual) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, true) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// PP = TP + FP.
    pub fn predicted_positive(&self) -> u64 {
        self.tp + self.fp
    }

    /// PN = FN + TN.
    pub fn predicted_negative(&self) -> u64 {
        self.fn_ + self.tn
    }

    pub fn actual_positive(&self) -> u64 {
        self.tp + self.fn_
    }

    pub fn actual_negative(&self) -> u64 {
        self.fp + self.tn
    }

    pub fn metric_set(&self) -> MetricSet {
        MetricSet::from_counts(self)
    }
}

impl Add for ConfusionCounts {
    type Output = ConfusionCounts;

    fn add(self, rhs: Self) -> Self {
        Self {
            tp: self.tp + rhs.tp,
            fp: self.fp + rhs.fp,
            tn: self.tn + rhs.tn,
            fn_: self.fn_ + rhs.fn_,
        }
    }
}

impl AddAssign for ConfusionCounts {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl Sum for ConfusionCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), Add::add)
    }
}

impl<'a> Sum<&'a ConfusionCounts> for ConfusionCounts {
    fn sum<I: Iterator<Item = &'a ConfusionCounts>>(iter: I) -> Self {
        iter.copied().sum()
    }
}

/// Tally `(predicted, actual)` pairs into confusion cells.
pub fn accumulate_counts<I>(pairs: I) -> ConfusionCounts
where
    I: IntoIterator<Item = (bool, bool)>,
{
    let mut counts = ConfusionCounts::default();
    for (predicted, actual) in pairs {
        counts.record(predicted, actual);
    }
    counts
}

/// A rate, or the marker that its denominator was zero.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub enum MetricValue {
    Defined(Rational),
    #[default]
    Undefined,
}

impl MetricValue {
    /// `num / den`; undefined when `den` is zero.
    pub fn ratio(num: u64, den: u64) -> Self {
        Rational::from_counts(num, den).map_or(MetricValue::Undefined, MetricValue::Defined)
    }

    pub fn from_rationals(num: &Rational, den: &Rational) -> Self {
        num.checked_div(den)
            .map_or(MetricValue::Undefined, MetricValue::Defined)
    }

    pub fn is_defined(&self) -> bool {
        matches!(self, MetricValue::Defined(_))
    }

    pub fn rational(&self) -> Option<&Rational> {
        match self {
            MetricValue::Defined(r) => Some(r),
            MetricValue::Undefined => None,
        }
    }

    pub fn value(&self) -> Option<f64> {
        self.rational().map(Rational::to_f64)
    }
}

impl fmt::Display for MetricValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.value() {
            Some(v) => write!(f, "{}", significant6(v)),
            None => f.write_str("undefined"),
        }
    }
}

/// Round to 6 significant digits.
pub fn significant6(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.5e}").parse().unwrap_or(x)
}

/// Serialized shape shared by [`MetricValue`] and disparity measures:
/// `null` when undefined, otherwise a rounded decimal plus the exact fraction.
#[derive(Serialize, Deserialize)]
struct FractionRepr {
    value: f64,
    numerator: IntRepr,
    denominator: IntRepr,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum IntRepr {
    Small(i64),
    Big(String),
}

impl IntRepr {
    fn from_bigint(n: &num_bigint::BigInt) -> Self {
        n.to_i64()
            .map_or_else(|| IntRepr::Big(n.to_string()), IntRepr::Small)
    }

    fn to_rational(&self) -> Result<Rational, String> {
        match self {
            IntRepr::Small(n) => Ok(Rational::from_integer(*n)),
            IntRepr::Big(s) => s
                .parse::<num_bigint::BigInt>()
                .map(Rational::from)
                .map_err(|_| format!("`{s}` is not an integer")),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum FractionInput {
    Exact(FractionRepr),
    Plain(Rational),
}

pub(crate) fn serialize_fraction<S: Serializer>(
    value: Option<&Rational>,
    serializer: S,
) -> Result<S::Ok, S::Error> {
    match value {
        None => serializer.serialize_none(),
        Some(r) => FractionRepr {
            value: significant6(r.to_f64()),
            numerator: IntRepr::from_bigint(r.numer()),
            denominator: IntRepr::from_bigint(r.denom()),
        }
        .serialize(serializer),
    }
}

pub(crate) fn deserialize_fraction<'de, D: Deserializer<'de>>(
    deserializer: D,
) -> Result<Option<Rational>, D::Error> {
    use serde::de::Error as _;
    match Option::<FractionInput>::deserialize(deserializer)? {
        None => Ok(None),
        Some(FractionInput::Plain(r)) => Ok(Some(r)),
        Some(FractionInput::Exact(repr)) => {
            let num = repr.numerator.to_rational().map_err(D::Error::custom)?;
            let den = repr.denominator.to_rational().map_err(D::Error::custom)?;
            num.checked_div(&den)
                .map(Some)
                .ok_or_else(|| D::Error::custom("zero denominator"))
        }
    }
}

impl Serialize for MetricValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serialize_fraction(self.rational(), serializer)
    }
}

impl<'de> Deserialize<'de> for MetricValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        Ok(
            deserialize_fraction(deserializer)?
                .map_or(MetricValue::Undefined, MetricValue::Defined),
        )
    }
}

/// FP / (FP + TN)
pub fn false_positive_rate(c: &ConfusionCounts) -> MetricValue {
    MetricValue::ratio(c.fp, c.fp + c.tn)
}

/// FP / (FP + TP)
pub fn false_discovery_rate(c: &ConfusionCounts) -> MetricValue {
    MetricValue::ratio(c.fp, c.fp + c.tp)
}

/// FN / (FN + TP)
pub fn false_negative_rate(c: &ConfusionCounts) -> MetricValue {
    MetricValue::ratio(c.fn_, c.fn_ + c.tp)
}

/// FN / (FN + TN)
pub fn false_omission_rate(c: &ConfusionCounts) -> MetricValue {
    MetricValue::ratio(c.fn_, c.fn_ + c.tn)
}

/// Every rate metric for one group.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricSet {
    pub fpr: MetricValue,
    pub fdr: MetricValue,
    pub fnr: MetricValue,
    #[serde(rename = "for")]
    pub for_rate: MetricValue,
    pub tpr: MetricValue,
    pub tnr: MetricValue,
    pub ppv: MetricValue,
    pub npv: MetricValue,
    /// PP / group size.
    pub predicted_positive_rate_within_group: MetricValue,
    /// Actual positives / group size.
    pub prevalence: MetricValue,
}

impl MetricSet {
    pub fn from_counts(c: &ConfusionCounts) -> Self {
        Self::from_cells(
            &Rational::from(c.tp),
            &Rational::from(c.fp),
            &Rational::from(c.tn),
            &Rational::from(c.fn_),
        )
    }

    /// Metrics from non-integral cells, e.g. expected values of a scenario.
    pub fn from_cells(tp: &Rational, fp: &Rational, tn: &Rational, fn_: &Rational) -> Self {
        let rate = MetricValue::from_rationals;
        let actual_neg = fp + tn;
        let actual_pos = fn_ + tp;
        let pred_pos = fp + tp;
        let pred_neg = fn_ + tn;
        let total = &actual_pos + &actual_neg;
        Self {
            fpr: rate(fp, &actual_neg),
            fdr: rate(fp, &pred_pos),
            fnr: rate(fn_, &actual_pos),
            for_rate: rate(fn_, &pred_neg),
            tpr: rate(tp, &actual_pos),
            tnr: rate(tn, &actual_neg),
            ppv: rate(tp, &pred_pos),
            npv: rate(tn, &pred_neg),
            predicted_positive_rate_within_group: rate(&pred_pos, &total),
            prevalence: rate(&actual_pos, &total),
        }
    }

    /// The value a metric compares, for metrics that are a per-group rate.
    ///
    /// `EqualParity` has no per-group rate and yields `None`.
    pub fn get(&self, metric: Metric) -> Option<&MetricValue> {
        match metric {
            Metric::Fpr => Some(&self.fpr),
            Metric::Fdr => Some(&self.fdr),
            Metric::Fnr => Some(&self.fnr),
            Metric::For => Some(&self.for_rate),
            Metric::Tpr => Some(&self.tpr),
            Metric::Ppv => Some(&self.ppv),
            Metric::ProportionalParity => Some(&self.predicted_positive_rate_within_group),
            Metric::EqualParity => None,
        }
    }
}

/// Metrics an audit can compare across groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Fpr,
    Fdr,
    Fnr,
    For,
    Tpr,
    Ppv,
    EqualParity,
    ProportionalParity,
}

impl Metric {
    pub const ALL: [Metric; 8] = [
        Metric::Fpr,
        Metric::Fdr,
        Metric::Fnr,
        Metric::For,
        Metric::Tpr,
        Metric::Ppv,
        Metric::EqualParity,
        Metric::ProportionalParity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Fpr => "fpr",
            Metric::Fdr => "fdr",
            Metric::Fnr => "fnr",
            Metric::For => "for",
            Metric::Tpr => "tpr",
            Metric::Ppv => "ppv",
            Metric::EqualParity => "equal_parity",
            Metric::ProportionalParity => "proportional_parity",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let s = s.trim();
        Metric::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "unknown metric `{s}` (expected one of fpr, fdr, fnr, for, tpr, ppv, equal_parity, proportional_parity)"
                ))
            })
    }
}
