//! Test-only oracles. Nothing here calls into the crosstab or metric code
//! it is compared against.

#![allow(dead_code)]

use std::collections::BTreeMap;

use fairaudit::{Dataset, MetricValue, Prediction, Record};
use num_bigint::BigInt;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Counts per group, gathered one record at a time.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct NaiveCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

/// (numerator, denominator) pairs per metric, `None` when the denominator is 0.
pub type Fraction = Option<(u64, u64)>;

fn frac(num: u64, den: u64) -> Fraction {
    (den != 0).then_some((num, den))
}

impl NaiveCounts {
    pub fn fpr(&self) -> Fraction {
        frac(self.fp, self.fp + self.tn)
    }
    pub fn fdr(&self) -> Fraction {
        frac(self.fp, self.fp + self.tp)
    }
    pub fn fnr(&self) -> Fraction {
        frac(self.fn_, self.fn_ + self.tp)
    }
    pub fn for_rate(&self) -> Fraction {
        frac(self.fn_, self.fn_ + self.tn)
    }
    pub fn tpr(&self) -> Fraction {
        frac(self.tp, self.tp + self.fn_)
    }
    pub fn tnr(&self) -> Fraction {
        frac(self.tn, self.tn + self.fp)
    }
    pub fn ppv(&self) -> Fraction {
        frac(self.tp, self.tp + self.fp)
    }
    pub fn npv(&self) -> Fraction {
        frac(self.tn, self.tn + self.fn_)
    }
    pub fn pprev(&self) -> Fraction {
        let n = self.tp + self.fp + self.tn + self.fn_;
        frac(self.tp + self.fp, n)
    }
    pub fn prevalence(&self) -> Fraction {
        let n = self.tp + self.fp + self.tn + self.fn_;
        frac(self.tp + self.fn_, n)
    }
}

/// Walk every record of `dataset`, thresholding raw scores at `threshold`.
pub fn naive_crosstab(
    dataset: &Dataset,
    attribute: &str,
    threshold: f64,
) -> BTreeMap<String, NaiveCounts> {
    let mut groups: BTreeMap<String, NaiveCounts> = BTreeMap::new();
    for record in dataset.records() {
        let raw = record.attributes.get(attribute).expect("attribute present");
        let key = if raw.is_empty() {
            "__missing__".to_owned()
        } else {
            raw.clone()
        };
        let flagged = match record.prediction {
            Prediction::Score(s) => s >= threshold,
            Prediction::Flag(f) => f,
        };
        let c = groups.entry(key).or_default();
        match (flagged, record.label) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    groups
}

/// Exact comparison by cross-multiplication.
pub fn same_fraction(value: &MetricValue, expected: Fraction) -> bool {
    match (value.rational(), expected) {
        (None, None) => true,
        (Some(r), Some((num, den))) => {
            r.numer() * BigInt::from(den) == r.denom() * BigInt::from(num)
        }
        _ => false,
    }
}

const GROUP_POOL: [&str; 6] = ["alpha", "beta", "gamma", "delta", "", "x,y"];
const SCORE_POOL: [f64; 6] = [0.0, 0.25, 0.4999, 0.5, 0.75, 1.0];

/// A random scored dataset: 1..=max_n records, 1..=3 attributes, at most
/// 4 distinct values per attribute (the empty value counts as one).
pub fn random_dataset(rng: &mut ChaCha8Rng, max_n: usize) -> Dataset {
    let n = rng.random_range(1..=max_n);
    let attribute_count = rng.random_range(1..=3);
    let attributes: Vec<String> = (0..attribute_count).map(|i| format!("attr{i}")).collect();
    let pools: Vec<Vec<&str>> = attributes
        .iter()
        .map(|_| {
            let k = rng.random_range(1..=4);
            GROUP_POOL.choose_multiple(rng, k).copied().collect()
        })
        .collect();

    let records = (0..n)
        .map(|i| {
            let score = if rng.random_bool(0.5) {
                *SCORE_POOL.choose(rng).unwrap()
            } else {
                rng.random::<f64>()
            };
            let label = rng.random_bool(0.4);
            let values: Vec<(String, String)> = attributes
                .iter()
                .zip(&pools)
                .map(|(a, pool)| (a.clone(), pool.choose(rng).unwrap().to_string()))
                .collect();
            Record::new(format!("r{i}"), Prediction::Score(score), label, values)
        })
        .collect();
    Dataset::new(attributes, records).expect("generated dataset is valid")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
