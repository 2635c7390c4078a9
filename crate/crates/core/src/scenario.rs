//! Screening scenarios: groups with populations, prevalences, and
//! per-group error-rate disparities applied to a base sensitivity and
//! specificity.
//!
//! A group's `fnr_ratio` divides the base sensitivity and its `fpr_ratio`
//! multiplies the base false positive rate (`1 - specificity`).

use std::collections::HashSet;

use indexmap::IndexMap;
use num_traits::ToPrimitive;
use rand::distr::{Bernoulli, Distribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::crosstab::{
    group_stats_from_exact, Dataset, ExactCells, GroupStats, Prediction, Record,
};
use crate::disparity::{audit_tables, AuditConfig, AuditReport, Provenance};
use crate::error::{Error, Result};
use crate::metrics::ConfusionCounts;
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    pub name: String,
    pub population: u64,
    /// Cases per person.
    pub prevalence: Rational,
    /// Divisor applied to the base sensitivity.
    #[serde(default = "Rational::one")]
    pub fnr_ratio: Rational,
    /// Multiplier applied to the base false positive rate.
    #[serde(default = "Rational::one")]
    pub fpr_ratio: Rational,
}

impl GroupSpec {
    pub fn new(name: impl Into<String>, population: u64, prevalence: Rational) -> Self {
        Self {
            name: name.into(),
            population,
            prevalence,
            fnr_ratio: Rational::one(),
            fpr_ratio: Rational::one(),
        }
    }

    pub fn with_fnr_ratio(mut self, ratio: Rational) -> Self {
        self.fnr_ratio = ratio;
        self
    }

    pub fn with_fpr_ratio(mut self, ratio: Rational) -> Self {
        self.fpr_ratio = ratio;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    pub attribute_name: String,
    pub base_sensitivity: Rational,
    pub base_specificity: Rational,
    pub groups: Vec<GroupSpec>,
    /// Remarks carried into every expected-outcome report.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

fn in_unit_interval(r: &Rational) -> bool {
    !r.is_negative() && r <= &Rational::one()
}

impl ScenarioSpec {
    /// Check every invariant; error messages name the offending JSON path.
    pub fn validate(&self) -> Result<()> {
        let invalid =
            |path: String, msg: String| Err(Error::InvalidScenario(format!("{path}: {msg}")));
        if self.name.trim().is_empty() {
            return invalid("name".into(), "must be non-empty".into());
        }
        if self.attribute_name.trim().is_empty() {
            return invalid("attribute_name".into(), "must be non-empty".into());
        }
        for (field, value) in [
            ("base_sensitivity", &self.base_sensitivity),
            ("base_specificity", &self.base_specificity),
        ] {
            if !in_unit_interval(value) {
                return invalid(field.into(), format!("{value} is outside [0, 1]"));
            }
        }
        if self.groups.is_empty() {
            return invalid("groups".into(), "at least one group is required".into());
        }

        let mut names = HashSet::new();
        for (i, group) in self.groups.iter().enumerate() {
            let path = |field: &str| format!("groups[{i}].{field}");
            if group.name.is_empty() {
                return invalid(path("name"), "must be non-empty".into());
            }
            if !names.insert(group.name.as_str()) {
                return invalid(
                    path("name"),
                    format!("duplicate group name `{}`", group.name),
                );
            }
            if group.population == 0 {
                return invalid(path("population"), "must be at least 1".into());
            }
            if !in_unit_interval(&group.prevalence) {
                return invalid(
                    path("prevalence"),
                    format!("{} is outside [0, 1]", group.prevalence),
                );
            }
            for (field, ratio) in [
                ("fnr_ratio", &group.fnr_ratio),
                ("fpr_ratio", &group.fpr_ratio),
            ] {
                if ratio.is_negative() || ratio.is_zero() {
                    return invalid(path(field), format!("{ratio} must be positive"));
                }
            }
            effective_rates(self, group).map_err(|e| match e {
                Error::InvalidScenario(msg) => {
                    Error::InvalidScenario(format!("groups[{i}]: {msg}"))
                }
                other => other,
            })?;
            for (field, ratio) in [
                ("fnr_ratio", &group.fnr_ratio),
                ("fpr_ratio", &group.fpr_ratio),
            ] {
                if ratio < &Rational::one() {
                    return invalid(path(field), format!("{ratio} must be at least 1"));
                }
            }
        }
        Ok(())
    }

    pub fn total_population(&self) -> u64 {
        self.groups.iter().map(|g| g.population).sum()
    }

    pub fn group(&self, name: &str) -> Option<&GroupSpec> {
        self.groups.iter().find(|g| g.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EffectiveRates {
    pub sensitivity: Rational,
    pub false_positive_rate: Rational,
}

/// Sensitivity and false positive rate of one group after its disparity ratios.
pub fn effective_rates(scenario: &ScenarioSpec, group: &GroupSpec) -> Result<EffectiveRates> {
    let sensitivity = scenario
        .base_sensitivity
        .checked_div(&group.fnr_ratio)
        .ok_or_else(|| Error::InvalidScenario("fnr_ratio must be positive".into()))?;
    if !in_unit_interval(&sensitivity) {
        return Err(Error::InvalidScenario(format!(
            "effective sensitivity {}/{} = {} is outside [0, 1]",
            scenario.base_sensitivity,
            group.fnr_ratio,
            sensitivity.to_f64()
        )));
    }
    let base_fpr = Rational::one() - &scenario.base_specificity;
    let false_positive_rate = &base_fpr * &group.fpr_ratio;
    if !in_unit_interval(&false_positive_rate) {
        return Err(Error::InvalidScenario(format!(
            "effective false positive rate {base_fpr}*{} = {} is outside [0, 1]",
            group.fpr_ratio,
            false_positive_rate.to_f64()
        )));
    }
    Ok(EffectiveRates {
        sensitivity,
        false_positive_rate,
    })
}

/// Integer view of an expected outcome. Cells sum to the population.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundedOutcome {
    pub expected_cases: u64,
    pub detected: u64,
    pub missed: u64,
    pub false_positives: u64,
    pub true_negatives: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpectedOutcome {
    pub group: String,
    pub population: u64,
    pub sensitivity: Rational,
    pub false_positive_rate: Rational,
    pub expected_cases: Rational,
    /// True positives.
    pub detected: Rational,
    /// False negatives.
    pub missed: Rational,
    pub false_positives: Rational,
    pub true_negatives: Rational,
    pub rounded: RoundedOutcome,
}

impl ExpectedOutcome {
    pub fn exact_cells(&self) -> ExactCells {
        ExactCells {
            tp: self.detected.clone(),
            fp: self.false_positives.clone(),
            tn: self.true_negatives.clone(),
            fn_: self.missed.clone(),
        }
    }

    pub fn rounded_counts(&self) -> ConfusionCounts {
        let r = &self.rounded;
        ConfusionCounts::new(r.detected, r.false_positives, r.true_negatives, r.missed)
    }
}

fn round_to_u64(r: &Rational) -> u64 {
    r.round_half_away().to_u64().unwrap_or(0)
}

/// Expected cell values per group, exact and rounded.
///
/// Rounding is half away from zero on cases, detected cases, and false
/// positives; missed cases and true negatives are derived so each rounded
/// group still balances.
pub fn expected_outcomes(scenario: &ScenarioSpec) -> Result<Vec<ExpectedOutcome>> {
    scenario
        .groups
        .iter()
        .map(|group| {
            let rates = effective_rates(scenario, group)?;
            let population = Rational::from(group.population);
            let cases = &population * &group.prevalence;
            let detected = &cases * &rates.sensitivity;
            let missed = &cases - &detected;
            let healthy = &population - &cases;
            let false_positives = &healthy * &rates.false_positive_rate;
            let true_negatives = &healthy - &false_positives;

            let cases_r = round_to_u64(&cases).min(group.population);
            let detected_r = round_to_u64(&detected).min(cases_r);
            let healthy_r = group.population - cases_r;
            let fp_r = round_to_u64(&false_positives).min(healthy_r);

            Ok(ExpectedOutcome {
                group: group.name.clone(),
                population: group.population,
                sensitivity: rates.sensitivity,
                false_positive_rate: rates.false_positive_rate,
                expected_cases: cases,
                detected,
                missed,
                false_positives,
                true_negatives,
                rounded: RoundedOutcome {
                    expected_cases: cases_r,
                    detected: detected_r,
                    missed: cases_r - detected_r,
                    false_positives: fp_r,
                    true_negatives: healthy_r - fp_r,
                },
            })
        })
        .collect()
}

/// Per-group statistics from exact expected values, ready for auditing.
pub fn expected_group_stats(scenario: &ScenarioSpec) -> Result<Vec<GroupStats>> {
    let outcomes = expected_outcomes(scenario)?;
    Ok(group_stats_from_exact(
        &scenario.attribute_name,
        outcomes
            .iter()
            .map(|o| (o.group.clone(), o.rounded_counts(), o.exact_cells())),
    ))
}

/// Audit a scenario's exact expected outcomes.
pub fn audit_expected(
    scenario: &ScenarioSpec,
    config: &AuditConfig,
    timestamp: &str,
) -> Result<AuditReport> {
    scenario.validate()?;
    let tables: IndexMap<String, Vec<GroupStats>> = [(
        scenario.attribute_name.clone(),
        expected_group_stats(scenario)?,
    )]
    .into_iter()
    .collect();
    let mut report = audit_tables(
        tables,
        config,
        Provenance::new(
            scenario.total_population(),
            format!("expected:{}", scenario.name),
            timestamp,
        ),
    )?;
    report.notes.extend(scenario.notes.iter().cloned());
    Ok(report)
}

/// Expected outcomes of a scenario plus its notes, as emitted by `simulate`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpectedReport {
    pub schema_version: String,
    pub scenario: String,
    pub attribute_name: String,
    pub base_sensitivity: Rational,
    pub base_specificity: Rational,
    pub outcomes: Vec<ExpectedOutcome>,
    pub notes: Vec<String>,
}

pub fn expected_report(scenario: &ScenarioSpec) -> Result<ExpectedReport> {
    scenario.validate()?;
    Ok(ExpectedReport {
        schema_version: crate::disparity::SCHEMA_VERSION.to_owned(),
        scenario: scenario.name.clone(),
        attribute_name: scenario.attribute_name.clone(),
        base_sensitivity: scenario.base_sensitivity.clone(),
        base_specificity: scenario.base_specificity.clone(),
        outcomes: expected_outcomes(scenario)?,
        notes: scenario.notes.clone(),
    })
}

fn bernoulli(p: &Rational) -> Bernoulli {
    Bernoulli::new(p.to_f64().clamp(0.0, 1.0)).expect("probability clamped to [0, 1]")
}

/// One record per person, drawn independently: the label from the group's
/// prevalence, then the flag from the effective sensitivity (cases) or
/// effective false positive rate (non-cases).
///
/// Group `i` draws from ChaCha stream `i` of `seed`, so output depends only
/// on `(scenario, seed)`.
pub fn generate_cohort(scenario: &ScenarioSpec, seed: u64) -> Result<Dataset> {
    scenario.validate()?;
    let attribute = scenario.attribute_name.clone();
    let mut records = Vec::with_capacity(scenario.total_population() as usize);
    for (index, group) in scenario.groups.iter().enumerate() {
        let rates = effective_rates(scenario, group)?;
        let has_disease = bernoulli(&group.prevalence);
        let flag_case = bernoulli(&rates.sensitivity);
        let flag_healthy = bernoulli(&rates.false_positive_rate);

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index as u64);
        for person in 0..group.population {
            let label = has_disease.sample(&mut rng);
            let flagged = if label {
                flag_case.sample(&mut rng)
            } else {
                flag_healthy.sample(&mut rng)
            };
            records.push(Record::new(
                format!("g{index}-{person}"),
                Prediction::Flag(flagged),
                label,
                [(attribute.as_str(), group.name.as_str())],
            ));
        }
    }
    Dataset::new(vec![attribute], records)
}

fn dec(s: &str) -> Rational {
    s.parse().expect("builtin constant")
}

fn per_100k(n: i64) -> Rational {
    Rational::new(n, 100_000).expect("nonzero denominator")
}

/// Tuberculosis screening of student-visa applicants from five countries,
/// with a 1.5x false positive rate for India.
pub fn tb_visa_au() -> ScenarioSpec {
    ScenarioSpec {
        name: "tb_visa_au".into(),
        description: "TB chest X-ray screening of student visa applicants; India FPR x1.5".into(),
        attribute_name: "nationality".into(),
        base_sensitivity: dec("0.97"),
        base_specificity: dec("0.96"),
        groups: vec![
            GroupSpec::new("China", 130_000, per_100k(100)),
            GroupSpec::new("India", 110_000, per_100k(200)).with_fpr_ratio(dec("1.5")),
            GroupSpec::new("UK", 60_000, per_100k(10)),
            GroupSpec::new("US", 50_000, per_100k(9)),
            GroupSpec::new("Vietnam", 40_000, per_100k(100)),
        ],
        notes: vec![
            "Applicants from unlisted countries (110,000 of 500,000) are excluded: no prevalence is given for them.".into(),
            "India false positives: (110,000 - 220) x 0.04 x 1.5 = 6,586.8. The source narrative's figure of 16,500 is not derivable from the stated parameters and is not reproduced.".into(),
        ],
    }
}

/// Lung cancer screening with sensitivity divided by 1.6 for Malay patients.
pub fn lung_ca_sg() -> ScenarioSpec {
    ScenarioSpec {
        name: "lung_ca_sg".into(),
        description: "Lung cancer screening of 100,000 residents; Malay sensitivity /1.6".into(),
        attribute_name: "ethnicity".into(),
        base_sensitivity: dec("0.98"),
        base_specificity: Rational::one(),
        groups: vec![
            GroupSpec::new("Chinese", 75_900, dec("0.02")),
            GroupSpec::new("Malay", 15_000, dec("0.02")).with_fnr_ratio(dec("1.6")),
            GroupSpec::new("Other", 9_100, dec("0.02")),
        ],
        notes: vec![
            "The `Other` group (9,100) closes the screened population to 100,000 so that expected cases total 2,000.".into(),
            "False positives are not modeled: specificity is fixed at 1.".into(),
        ],
    }
}

pub fn builtin_scenarios() -> IndexMap<String, ScenarioSpec> {
    [tb_visa_au(), lung_ca_sg()]
        .into_iter()
        .map(|s| (s.name.clone(), s))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disparity::{ReferenceStrategy, Verdict};
    use crate::metrics::Metric;

    fn r(s: &str) -> Rational {
        s.parse().unwrap()
    }

    fn outcome<'a>(outcomes: &'a [ExpectedOutcome], group: &str) -> &'a ExpectedOutcome {
        outcomes.iter().find(|o| o.group == group).unwrap()
    }

    #[test]
    fn effective_rate_examples() {
        let lung = lung_ca_sg();
        let malay = lung.group("Malay").unwrap();
        assert_eq!(
            effective_rates(&lung, malay).unwrap().sensitivity,
            r("0.6125")
        );

        let tb = tb_visa_au();
        let india = tb.group("India").unwrap();
        assert_eq!(
            effective_rates(&tb, india).unwrap().false_positive_rate,
            r("0.06")
        );

        let china = tb.group("China").unwrap();
        let rates = effective_rates(&tb, china).unwrap();
        assert_eq!(rates.sensitivity, r("0.97"));
        assert_eq!(rates.false_positive_rate, r("0.04"));
    }

    #[test]
    fn effective_rate_bounds() {
        let mut s = lung_ca_sg();
        s.groups[1].fnr_ratio = r("0.5");
        let err = effective_rates(&s, &s.groups[1]).unwrap_err();
        assert!(err.to_string().contains("1.96"), "{err}");

        let mut s = tb_visa_au();
        s.groups[1].fpr_ratio = r("30");
        assert!(effective_rates(&s, &s.groups[1]).is_err());
    }

    #[test]
    fn expected_china_tb() {
        let outcomes = expected_outcomes(&tb_visa_au()).unwrap();
        let china = outcome(&outcomes, "China");
        assert_eq!(china.expected_cases, r("130"));
        assert_eq!(china.detected, r("126.1"));
        assert_eq!(china.false_positives, r("5194.8"));
        assert_eq!(china.rounded.detected, 126);
        assert_eq!(china.rounded.missed, 4);
        assert_eq!(china.rounded.false_positives, 5195);
    }

    #[test]
    fn expected_malay_lung() {
        let outcomes = expected_outcomes(&lung_ca_sg()).unwrap();
        let malay = outcome(&outcomes, "Malay");
        assert_eq!(malay.expected_cases, r("300"));
        assert_eq!(malay.detected, r("183.75"));
        assert_eq!(malay.missed, r("116.25"));
        assert_eq!((malay.rounded.detected, malay.rounded.missed), (184, 116));
    }

    #[test]
    fn expected_disease_free_population() {
        let s = ScenarioSpec {
            groups: vec![GroupSpec::new("clean", 1000, Rational::zero())],
            ..tb_visa_au()
        };
        let o = &expected_outcomes(&s).unwrap()[0];
        assert_eq!(o.expected_cases, Rational::zero());
        assert_eq!(o.detected, Rational::zero());
        assert_eq!(o.missed, Rational::zero());
        assert_eq!(o.false_positives, r("40"));
    }

    #[test]
    fn expected_outcomes_conserve_population() {
        for scenario in builtin_scenarios().values() {
            for o in expected_outcomes(scenario).unwrap() {
                let pop = Rational::from(o.population);
                assert_eq!(&o.detected + &o.missed, o.expected_cases);
                assert_eq!(
                    &o.false_positives + &o.true_negatives,
                    &pop - &o.expected_cases
                );
                let rd = o.rounded;
                assert_eq!(
                    rd.detected + rd.missed + rd.false_positives + rd.true_negatives,
                    o.population
                );
                for (exact, rounded) in [
                    (&o.expected_cases, rd.expected_cases),
                    (&o.detected, rd.detected),
                    (&o.missed, rd.missed),
                    (&o.false_positives, rd.false_positives),
                    (&o.true_negatives, rd.true_negatives),
                ] {
                    assert!(
                        (exact.to_f64() - rounded as f64).abs() <= 1.0,
                        "{} {exact} {rounded}",
                        o.group
                    );
                }
            }
        }
    }

    #[test]
    fn expected_fnr_ratio_recovery() {
        // (1 - 0.98/1.6) / (1 - 0.98) = 0.3875 / 0.02
        let stats = expected_group_stats(&lung_ca_sg()).unwrap();
        let fnr = |g: &str| {
            stats
                .iter()
                .find(|s| s.group_value == g)
                .unwrap()
                .metrics
                .fnr
                .clone()
        };
        let ratio = fnr("Malay").rational().unwrap() / fnr("Chinese").rational().unwrap();
        assert_eq!(ratio, r("19.375"));
    }

    #[test]
    fn audit_expected_lung() {
        let config = AuditConfig {
            reference: ReferenceStrategy::Custom {
                group: "Chinese".into(),
            },
            ..Default::default()
        };
        let report = audit_expected(&lung_ca_sg(), &config, "t").unwrap();
        let d = report.record("ethnicity", "Malay", Metric::Fnr).unwrap();
        assert_eq!(d.measure.rational(), Some(&r("19.375")));
        assert_eq!(d.verdict, Verdict::Disparity);
        assert!(report.notes.iter().any(|n| n.contains("Other")));

        let pooled = AuditConfig {
            reference: ReferenceStrategy::PooledPopulation,
            ..config
        };
        let report = audit_expected(&lung_ca_sg(), &pooled, "t").unwrap();
        // pooled FNR from exact cells: (30.36 + 116.25 + 3.64) / 2000
        let other = report.record("ethnicity", "Other", Metric::Fnr).unwrap();
        assert_eq!(other.reference_metric.rational(), Some(&r("0.075125")));
    }

    #[test]
    fn cohort_is_deterministic() {
        let s = lung_ca_sg();
        assert_eq!(
            generate_cohort(&s, 7).unwrap(),
            generate_cohort(&s, 7).unwrap()
        );
        assert_ne!(
            generate_cohort(&s, 7).unwrap(),
            generate_cohort(&s, 8).unwrap()
        );
    }

    #[test]
    fn cohort_degenerate_certainty() {
        let s = ScenarioSpec {
            name: "certain".into(),
            description: String::new(),
            attribute_name: "g".into(),
            base_sensitivity: Rational::one(),
            base_specificity: Rational::one(),
            groups: vec![GroupSpec::new("all", 500, Rational::one())],
            notes: vec![],
        };
        let ds = generate_cohort(&s, 3).unwrap();
        assert_eq!(ds.len(), 500);
        assert!(ds
            .records()
            .iter()
            .all(|r| r.label && r.prediction == Prediction::Flag(true)));
    }

    #[test]
    fn builtin_parameters() {
        let all = builtin_scenarios();
        assert_eq!(all.keys().collect::<Vec<_>>(), ["tb_visa_au", "lung_ca_sg"]);

        let tb = &all["tb_visa_au"];
        assert_eq!(tb.total_population(), 390_000);
        let shares: Vec<_> = tb
            .groups
            .iter()
            .map(|g| Rational::from_counts(g.population, 500_000).unwrap())
            .collect();
        assert_eq!(
            shares,
            [r("0.26"), r("0.22"), r("0.12"), r("0.10"), r("0.08")]
        );

        let lung = &all["lung_ca_sg"];
        assert_eq!(
            Rational::from_counts(
                lung.group("Chinese").unwrap().population,
                lung.total_population()
            ),
            Some(r("0.759"))
        );
        let cases = expected_outcomes(lung)
            .unwrap()
            .into_iter()
            .fold(Rational::zero(), |acc, o| acc + o.expected_cases);
        assert_eq!(cases, r("2000"));

        for s in all.values() {
            s.validate().unwrap();
        }
    }

    #[test]
    fn validation_names_paths() {
        let mut s = lung_ca_sg();
        s.groups.push(GroupSpec::new("Malay", 5, r("0.1")));
        assert!(s
            .validate()
            .unwrap_err()
            .to_string()
            .contains("groups[3].name"));

        let mut s = lung_ca_sg();
        s.groups[0].prevalence = r("1.2");
        assert!(s
            .validate()
            .unwrap_err()
            .to_string()
            .contains("groups[0].prevalence"));

        let mut s = lung_ca_sg();
        s.groups.clear();
        assert!(s.validate().unwrap_err().to_string().contains("groups"));

        let mut s = lung_ca_sg();
        s.groups[2].population = 0;
        assert!(s
            .validate()
            .unwrap_err()
            .to_string()
            .contains("groups[2].population"));

        let mut s = tb_visa_au();
        s.base_sensitivity = r("0.5");
        s.groups[0].fnr_ratio = r("0.8");
        assert!(s
            .validate()
            .unwrap_err()
            .to_string()
            .contains("groups[0].fnr_ratio"));
    }
}
