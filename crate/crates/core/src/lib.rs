//! Group fairness audits over binary classifier outputs, plus a
//! disease-screening scenario simulator.
//!
//! All rates and disparity measures are computed with exact rational
//! arithmetic; reports carry both a rounded decimal and the exact fraction.

pub mod cli;
pub mod crosstab;
pub mod disparity;
pub mod error;
pub mod ingest;
pub mod metrics;
pub mod rational;
pub mod report;
pub mod scenario;

pub use crosstab::{binarize, crosstab, multi_crosstab, Dataset, GroupStats, Prediction, Record};
pub use disparity::{
    audit, audit_at, disparity, parity_check, AuditConfig, AuditReport, DisparityMeasure,
    OverallVerdict, ReferenceStrategy, Tau, Verdict,
};
pub use error::{Error, Result};
pub use metrics::{ConfusionCounts, Metric, MetricSet, MetricValue};
pub use rational::Rational;
pub use report::{emit_report, ReportDocument, ReportFormat};
pub use scenario::{builtin_scenarios, generate_cohort, GroupSpec, ScenarioSpec};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
