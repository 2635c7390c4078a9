//! C ABI over the fairaudit engine.
//!
//! Objects cross the boundary as opaque handles. Every fallible call returns
//! an [`FaStatus`]; on failure the message is available from
//! [`fa_last_error_message`] on the same thread. Strings returned through
//! `char **` out-parameters are owned by the caller and released with
//! [`fa_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fairaudit::disparity::{audit_at, now_timestamp, DisparityMeasure};
use fairaudit::report::emit_expected;
use fairaudit::scenario::{audit_expected, builtin_scenarios, expected_report};
use fairaudit::{
    ingest, AuditConfig, AuditReport, Dataset, Error, OverallVerdict, ReportFormat, ScenarioSpec,
    Tau, Verdict,
};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    InvalidData = 5,
    InvalidConfig = 6,
    InvalidScenario = 7,
    Internal = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaVerdict {
    Parity = 0,
    Disparity = 1,
    InsufficientData = 2,
    Reference = 3,
}

/// A loaded or generated dataset.
pub struct FaDataset(Dataset);

/// A validated screening scenario.
pub struct FaScenario(ScenarioSpec);

/// A finished audit report.
pub struct FaReport(AuditReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure {
    status: FaStatus,
    message: String,
}

impl Failure {
    fn new(status: FaStatus, message: impl Into<String>) -> Self {
        Failure {
            status,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e.root() {
            Error::Io { .. } => FaStatus::Io,
            Error::Parse { .. } | Error::Schema(_) => FaStatus::Parse,
            Error::InvalidDataset(_)
            | Error::NotBinarized
            | Error::NoGroups
            | Error::UnknownAttribute(_) => FaStatus::InvalidData,
            Error::InvalidScenario(_) => FaStatus::InvalidScenario,
            _ => FaStatus::InvalidConfig,
        };
        Failure::new(status, e.to_string())
    }
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).expect("interior NULs replaced");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> FaStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
            FaStatus::Ok
        }
        Ok(Err(f)) => {
            set_last_error(&f.message);
            f.status
        }
        Err(_) => {
            set_last_error("internal error: panic inside fairaudit");
            FaStatus::Internal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::new(
            FaStatus::NullArgument,
            format!("`{name}` is NULL"),
        ));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        Failure::new(
            FaStatus::InvalidUtf8,
            format!("`{name}` is not valid UTF-8"),
        )
    })
}

unsafe fn opt_str_arg<'a>(p: *const c_char, name: &str) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        Ok(None)
    } else {
        str_arg(p, name).map(Some)
    }
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure::new(FaStatus::NullArgument, format!("`{name}` is NULL")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::new(
            FaStatus::NullArgument,
            "output pointer is NULL",
        ));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, text: String) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::new(
            FaStatus::NullArgument,
            "output pointer is NULL",
        ));
    }
    let c = CString::new(text)
        .map_err(|_| Failure::new(FaStatus::Internal, "output contains a NUL byte"))?;
    *out = c.into_raw();
    Ok(())
}

fn parse_config(json: Option<&str>) -> Result<AuditConfig, Failure> {
    let config: AuditConfig = match json {
        None => AuditConfig::default(),
        Some(text) => serde_json::from_str(text)
            .map_err(|e| Failure::new(FaStatus::InvalidConfig, format!("audit config: {e}")))?,
    };
    config.validate()?;
    Ok(config)
}

fn parse_format(text: &str) -> Result<ReportFormat, Failure> {
    Ok(text.parse::<ReportFormat>()?)
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next fairaudit call on the same thread.
#[no_mangle]
pub extern "C" fn fa_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Engine version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fa_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// # Safety
/// `s` must be NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fa_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Load a CSV dataset with the default columns (`entity_id`, `score`,
/// `label_value`, attributes = the rest).
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fa_dataset_load_csv(
    path: *const c_char,
    out: *mut *mut FaDataset,
) -> FaStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let ds = ingest::load_dataset(path, &Default::default())?;
        put(out, FaDataset(ds))
    })
}

/// Parse CSV text with the default columns.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fa_dataset_from_csv(
    text: *const c_char,
    out: *mut *mut FaDataset,
) -> FaStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        let ds = ingest::read_dataset(text.as_bytes(), &Default::default())?;
        put(out, FaDataset(ds))
    })
}

/// # Safety
/// `dataset` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn fa_dataset_write_csv(
    dataset: *const FaDataset,
    path: *const c_char,
) -> FaStatus {
    guard(|| {
        let ds = handle(dataset, "dataset")?;
        let path = str_arg(path, "path")?;
        Ok(ingest::save_dataset(&ds.0, path)?)
    })
}

/// Number of records; 0 for NULL.
///
/// # Safety
/// `dataset` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fa_dataset_len(dataset: *const FaDataset) -> usize {
    dataset.as_ref().map_or(0, |d| d.0.len())
}

/// # Safety
/// `dataset` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fa_dataset_free(dataset: *mut FaDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fa_scenario_builtin(
    name: *const c_char,
    out: *mut *mut FaScenario,
) -> FaStatus {
    guard(|| {
        let name = str_arg(name, "name")?;
        let scenario = builtin_scenarios().shift_remove(name).ok_or_else(|| {
            Failure::new(
                FaStatus::InvalidScenario,
                format!("no built-in scenario `{name}`"),
            )
        })?;
        put(out, FaScenario(scenario))
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fa_scenario_load(
    path: *const c_char,
    out: *mut *mut FaScenario,
) -> FaStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        put(out, FaScenario(ingest::load_scenario(path)?))
    })
}

/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fa_scenario_from_json(
    json: *const c_char,
    out: *mut *mut FaScenario,
) -> FaStatus {
    guard(|| {
        let json = str_arg(json, "json")?;
        put(out, FaScenario(ingest::parse_scenario(json)?))
    })
}

/// # Safety
/// `scenario` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fa_scenario_to_json(
    scenario: *const FaScenario,
    out: *mut *mut c_char,
) -> FaStatus {
    guard(|| {
        let s = handle(scenario, "scenario")?;
        put_string(out, ingest::scenario_to_json(&s.0))
    })
}

/// Expected-outcome table rendered as `json`, `markdown`, or `csv`.
///
/// # Safety
/// `scenario` must be a live handle; `format` a NUL-terminated string;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fa_scenario_expected(
    scenario: *const FaScenario,
    format: *const c_char,
    out: *mut *mut c_char,
) -> FaStatus {
    guard(|| {
        let s = handle(scenario, "scenario")?;
        let format = parse_format(str_arg(format, "format")?)?;
        put_string(out, emit_expected(&expected_report(&s.0)?, format))
    })
}

/// # Safety
/// `scenario` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fa_scenario_generate_cohort(
    scenario: *const FaScenario,
    seed: u64,
    out: *mut *mut FaDataset,
) -> FaStatus {
    guard(|| {
        let s = handle(scenario, "scenario")?;
        put(out, FaDataset(fairaudit::generate_cohort(&s.0, seed)?))
    })
}

/// # Safety
/// `scenario` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fa_scenario_free(scenario: *mut FaScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Audit a dataset. `config_json` may be NULL for the defaults; otherwise a
/// JSON object with any of `tau`, `metrics`, `reference`, `threshold`,
/// `min_group_size`, `attributes`.
///
/// # Safety
/// `dataset` must be a live handle; `config_json` NULL or a NUL-terminated
/// string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fa_audit(
    dataset: *const FaDataset,
    config_json: *const c_char,
    out: *mut *mut FaReport,
) -> FaStatus {
    guard(|| {
        let ds = handle(dataset, "dataset")?;
        let config = parse_config(opt_str_arg(config_json, "config_json")?)?;
        put(out, FaReport(audit_at(&ds.0, &config, &now_timestamp())?))
    })
}

/// Audit a scenario's exact expected outcomes.
///
/// # Safety
/// As for [`fa_audit`].
#[no_mangle]
pub unsafe extern "C" fn fa_audit_expected(
    scenario: *const FaScenario,
    config_json: *const c_char,
    out: *mut *mut FaReport,
) -> FaStatus {
    guard(|| {
        let s = handle(scenario, "scenario")?;
        let config = parse_config(opt_str_arg(config_json, "config_json")?)?;
        put(
            out,
            FaReport(audit_expected(&s.0, &config, &now_timestamp())?),
        )
    })
}

/// Overall verdict: [`FaVerdict::Parity`] or [`FaVerdict::Disparity`].
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fa_report_verdict(
    report: *const FaReport,
    out: *mut FaVerdict,
) -> FaStatus {
    guard(|| {
        let r = handle(report, "report")?;
        if out.is_null() {
            return Err(Failure::new(
                FaStatus::NullArgument,
                "output pointer is NULL",
            ));
        }
        *out = match r.0.overall_verdict {
            OverallVerdict::Parity => FaVerdict::Parity,
            OverallVerdict::Disparity => FaVerdict::Disparity,
        };
        Ok(())
    })
}

/// Render a report as `json`, `markdown`, or `csv`.
///
/// # Safety
/// `report` must be a live handle; `format` a NUL-terminated string; `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn fa_report_emit(
    report: *const FaReport,
    format: *const c_char,
    out: *mut *mut c_char,
) -> FaStatus {
    guard(|| {
        let r = handle(report, "report")?;
        let format = parse_format(str_arg(format, "format")?)?;
        put_string(out, fairaudit::emit_report(&r.0, format).payload)
    })
}

/// # Safety
/// `report` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fa_report_free(report: *mut FaReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Classify a disparity measure against `tau`. Both are decimal or
/// fraction strings; a NULL or `"undefined"` measure yields
/// [`FaVerdict::InsufficientData`].
///
/// # Safety
/// `measure` NULL or a NUL-terminated string; `tau` a NUL-terminated string;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fa_parity_check(
    measure: *const c_char,
    tau: *const c_char,
    out: *mut FaVerdict,
) -> FaStatus {
    guard(|| {
        let tau: Tau = str_arg(tau, "tau")?.parse()?;
        let measure = match opt_str_arg(measure, "measure")? {
            None | Some("undefined") => DisparityMeasure::Undefined,
            Some(text) => {
                let value: fairaudit::Rational = text
                    .parse()
                    .map_err(|e| Failure::new(FaStatus::Parse, format!("measure: {e}")))?;
                if value.is_negative() {
                    return Err(Failure::new(
                        FaStatus::Parse,
                        "measure: must not be negative",
                    ));
                }
                DisparityMeasure::Defined(value)
            }
        };
        if out.is_null() {
            return Err(Failure::new(
                FaStatus::NullArgument,
                "output pointer is NULL",
            ));
        }
        *out = match fairaudit::parity_check(&measure, &tau) {
            Verdict::Parity => FaVerdict::Parity,
            Verdict::Disparity => FaVerdict::Disparity,
            Verdict::InsufficientData => FaVerdict::InsufficientData,
            Verdict::Reference => FaVerdict::Reference,
        };
        Ok(())
    })
}
