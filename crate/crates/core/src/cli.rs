//! Command-line front end. Exit codes: 0 parity (or nothing audited),
//! 1 error, 2 at least one disparity.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::disparity::{
    audit_at, now_timestamp, AuditConfig, AuditReport, OverallVerdict, ReferenceStrategy, Tau,
};
use crate::error::{Error, Result};
use crate::ingest::{self, AttributeColumns, DatasetSchema};
use crate::metrics::Metric;
use crate::report::{emit_expected, emit_report, ReportFormat};
use crate::scenario::{self, builtin_scenarios, ScenarioSpec};

pub const EXIT_PARITY: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_DISPARITY: u8 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "fairaudit",
    version,
    about = "Group fairness audits and screening scenario simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Audit a scored, labeled CSV dataset.
    Audit(AuditArgs),
    /// Compute expected outcomes of a screening scenario, or sample a cohort.
    Simulate(SimulateArgs),
    /// List built-in scenarios.
    Scenarios {
        /// Print the named scenario as JSON instead of listing.
        #[arg(long)]
        show: Option<String>,
    },
    /// Print the engine version.
    Version,
}

#[derive(Debug, Args)]
struct AuditOptions {
    /// Disparity intolerance in (0, 1]; decimal or fraction.
    #[arg(long, default_value = "0.8")]
    tau: Tau,
    /// majority | pooled | group:<name> | external:<path.json>
    #[arg(long, default_value = "majority")]
    reference: String,
    /// Comma-separated metric names.
    #[arg(long, value_delimiter = ',', default_value = "fpr,fdr,fnr,for")]
    metrics: Vec<Metric>,
    /// Groups below this size are flagged as small samples.
    #[arg(long, default_value_t = crate::disparity::DEFAULT_MIN_GROUP_SIZE)]
    min_group_size: u64,
}

#[derive(Debug, Args)]
struct AuditArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    options: AuditOptions,
    /// Scores at or above the threshold are predicted positive.
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    /// Restrict the audit to these attribute columns.
    #[arg(long, value_delimiter = ',')]
    attributes: Option<Vec<String>>,
    /// json | markdown | csv
    #[arg(long, default_value = "markdown")]
    format: ReportFormat,
    /// Write the report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, default_value = "entity_id")]
    id_column: String,
    #[arg(long, default_value = "score")]
    score_column: String,
    #[arg(long, default_value = "label_value")]
    label_column: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Expected,
    Cohort,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Built-in scenario name or path to a scenario JSON file.
    #[arg(long)]
    scenario: String,
    #[arg(long, value_enum, default_value_t = Mode::Expected)]
    mode: Mode,
    /// Seed for cohort sampling.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the expected table or cohort CSV here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Audit the simulated outcomes and print the report.
    #[arg(long)]
    audit: bool,
    #[command(flatten)]
    options: AuditOptions,
    /// json | markdown | csv (expected table and audit report)
    #[arg(long, default_value = "markdown")]
    format: ReportFormat,
}

enum Outcome {
    Done,
    Audited(OverallVerdict),
}

pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_PARITY
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_ERROR
                }
            };
        }
    };

    match dispatch(cli.command, out) {
        Ok(Outcome::Done) | Ok(Outcome::Audited(OverallVerdict::Parity)) => EXIT_PARITY,
        Ok(Outcome::Audited(OverallVerdict::Disparity)) => EXIT_DISPARITY,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<Outcome> {
    match command {
        Command::Audit(args) => run_audit(args, out),
        Command::Simulate(args) => run_simulate(args, out),
        Command::Scenarios { show } => {
            let builtins = builtin_scenarios();
            match show {
                Some(name) => {
                    let s = builtins.get(&name).ok_or_else(|| unknown_scenario(&name))?;
                    emit(out, None, &ingest::scenario_to_json(s))?;
                }
                None => {
                    let mut text = String::new();
                    for (name, s) in &builtins {
                        text.push_str(&format!("{name}\t{}\n", s.description));
                    }
                    emit(out, None, &text)?;
                }
            }
            Ok(Outcome::Done)
        }
        Command::Version => {
            emit(out, None, &format!("fairaudit {}\n", crate::VERSION))?;
            Ok(Outcome::Done)
        }
    }
}

/// Parse a `--reference` value.
pub fn parse_reference(text: &str) -> Result<ReferenceStrategy> {
    match text {
        "majority" | "predominant" => Ok(ReferenceStrategy::Predominant),
        "pooled" => Ok(ReferenceStrategy::PooledPopulation),
        _ => {
            if let Some(group) = text.strip_prefix("group:") {
                Ok(ReferenceStrategy::Custom {
                    group: group.to_owned(),
                })
            } else if let Some(path) = text.strip_prefix("external:") {
                Ok(ReferenceStrategy::ExternalBenchmark {
                    metrics: ingest::load_external_benchmark(path)?,
                })
            } else {
                Err(Error::InvalidConfig(format!(
                    "unknown reference `{text}` (expected majority, pooled, group:<name>, or external:<path>)"
                )))
            }
        }
    }
}

fn config_from(options: AuditOptions) -> Result<AuditConfig> {
    let config = AuditConfig {
        tau: options.tau,
        metrics: options.metrics,
        reference: parse_reference(&options.reference)?,
        min_group_size: options.min_group_size,
        ..AuditConfig::default()
    };
    config.validate()?;
    Ok(config)
}

fn emit(out: &mut dyn Write, path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(path) => std::fs::write(path, text).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => out.write_all(text.as_bytes()).map_err(|source| Error::Io {
            path: PathBuf::from("<stdout>"),
            source,
        }),
    }
}

fn finish(
    report: &AuditReport,
    format: ReportFormat,
    out: &mut dyn Write,
    path: Option<&Path>,
) -> Result<Outcome> {
    emit(out, path, &emit_report(report, format).payload)?;
    Ok(Outcome::Audited(report.overall_verdict))
}

fn run_audit(args: AuditArgs, out: &mut dyn Write) -> Result<Outcome> {
    let mut config = config_from(args.options)?;
    config.threshold = args.threshold;
    config.attributes = args.attributes;
    config.validate()?;

    let schema = DatasetSchema {
        id_column: args.id_column,
        score_column: args.score_column,
        label_column: args.label_column,
        attribute_columns: AttributeColumns::Remaining,
    };
    let dataset = ingest::load_dataset(&args.input, &schema)?;
    let mut report = audit_at(&dataset, &config, &now_timestamp())?;
    report.provenance.source = args.input.display().to_string();
    finish(&report, args.format, out, args.output.as_deref())
}

fn unknown_scenario(name: &str) -> Error {
    let names: Vec<String> = builtin_scenarios().into_keys().collect();
    Error::InvalidConfig(format!(
        "unknown scenario `{name}`: not a built-in ({}) and no such file",
        names.join(", ")
    ))
}

fn resolve_scenario(text: &str) -> Result<ScenarioSpec> {
    if let Some(s) = builtin_scenarios().shift_remove(text) {
        return Ok(s);
    }
    if Path::new(text).exists() {
        return ingest::load_scenario(text);
    }
    Err(unknown_scenario(text))
}

fn run_simulate(args: SimulateArgs, out: &mut dyn Write) -> Result<Outcome> {
    let scenario = resolve_scenario(&args.scenario)?;
    let config = config_from(args.options)?;
    let timestamp = now_timestamp();

    let (payload, report) = match args.mode {
        Mode::Expected => {
            let table = emit_expected(&scenario::expected_report(&scenario)?, args.format);
            let report = if args.audit {
                Some(scenario::audit_expected(&scenario, &config, &timestamp)?)
            } else {
                None
            };
            (table, report)
        }
        Mode::Cohort => {
            let cohort = scenario::generate_cohort(&scenario, args.seed)?;
            let report = if args.audit {
                let mut r = audit_at(&cohort, &config, &timestamp)?;
                r.provenance.source = format!("cohort:{} seed {}", scenario.name, args.seed);
                r.notes.extend(scenario.notes.iter().cloned());
                Some(r)
            } else {
                None
            };
            (ingest::dataset_to_csv(&cohort)?, report)
        }
    };

    match report {
        None => {
            emit(out, args.out.as_deref(), &payload)?;
            Ok(Outcome::Done)
        }
        Some(report) => {
            if let Some(path) = args.out.as_deref() {
                emit(out, Some(path), &payload)?;
            }
            finish(&report, args.format, out, None)
        }
    }
}
