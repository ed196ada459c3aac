//! C ABI over the `subjeval` core.
//!
//! Every fallible function returns a [`SubjevalStatus`]; on failure the
//! message is available from [`subjeval_last_error`] on the same thread.
//! Objects are handed out as opaque pointers and must be released with the
//! matching `*_free` function. Strings returned by the library are released
//! with [`subjeval_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use subjeval::analysis::{analyze_counts, analyze_outcome, read_count_table, AnalysisConfig, AnalysisReport, ResponseCounts};
use subjeval::design::{StudyKind, StudyPlan};
use subjeval::ingest::{ingest, read_responses_ndjson};
use subjeval::stats::{self, CorrectionMethod, MwuMode};
use subjeval::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubjevalStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    SizeLimit = 3,
    DegenerateVariance = 4,
    Infeasible = 5,
    Schema = 6,
    Io = 7,
    OutOfRange = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubjevalCorrection {
    HolmBonferroni = 0,
    BhFdr = 1,
    None = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubjevalMwuMode {
    Auto = 0,
    Exact = 1,
    NormalApprox = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubjevalStudyKind {
    Humanlikeness = 0,
    SpeechApprop = 1,
    InterlocApprop = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SubjevalTestResult {
    pub statistic: f64,
    /// NaN when the test has no degrees of freedom.
    pub df: f64,
    pub p_value: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SubjevalInterval {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SubjevalMas {
    pub mas: f64,
    pub lower: f64,
    pub upper: f64,
    pub pref_matched: f64,
    pub n: u64,
}

/// Per-condition response counts of a preference study.
pub struct SubjevalCounts {
    rows: Vec<(String, ResponseCounts)>,
}

/// Result of an analysis run.
pub struct SubjevalAnalysis {
    report: AnalysisReport,
}

/// A study plan.
pub struct SubjevalPlan {
    plan: StudyPlan,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(e: &Error) -> SubjevalStatus {
    match e {
        Error::InvalidInput(_) => SubjevalStatus::InvalidInput,
        Error::SizeLimit { .. } => SubjevalStatus::SizeLimit,
        Error::DegenerateVariance => SubjevalStatus::DegenerateVariance,
        Error::Infeasible(_) => SubjevalStatus::Infeasible,
        Error::Schema { .. } | Error::Json(_) | Error::Csv(_) => SubjevalStatus::Schema,
        Error::Io(_) => SubjevalStatus::Io,
    }
}

struct Fail(SubjevalStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

type FfiResult<T = ()> = Result<T, Fail>;

fn guard(f: impl FnOnce() -> FfiResult) -> SubjevalStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            SubjevalStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SubjevalStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(SubjevalStatus::NullPointer, format!("{what} is null"))
}

unsafe fn slice<'a>(data: *const f64, len: usize, what: &str) -> FfiResult<&'a [f64]> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

unsafe fn string<'a>(s: *const c_char, what: &str) -> FfiResult<&'a str> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Fail(SubjevalStatus::InvalidInput, format!("{what} is not valid UTF-8")))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> FfiResult<&'a mut T> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> FfiResult<&'a T> {
    p.as_ref().ok_or_else(|| null(what))
}

fn into_c_string(s: String) -> FfiResult<*mut c_char> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Fail(SubjevalStatus::InvalidInput, "string contains NUL".into()))
}

fn correction(c: SubjevalCorrection) -> CorrectionMethod {
    match c {
        SubjevalCorrection::HolmBonferroni => CorrectionMethod::HolmBonferroni,
        SubjevalCorrection::BhFdr => CorrectionMethod::BhFdr,
        SubjevalCorrection::None => CorrectionMethod::None,
    }
}

fn study_kind(k: SubjevalStudyKind) -> StudyKind {
    match k {
        SubjevalStudyKind::Humanlikeness => StudyKind::Humanlikeness,
        SubjevalStudyKind::SpeechApprop => StudyKind::SpeechApprop,
        SubjevalStudyKind::InterlocApprop => StudyKind::InterlocApprop,
    }
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn subjeval_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn subjeval_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be NULL or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn subjeval_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Welch's unequal-variance t-test.
///
/// # Safety
/// `x` and `y` must point to `nx` and `ny` readable doubles; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn subjeval_welch_t(
    x: *const f64,
    nx: usize,
    y: *const f64,
    ny: usize,
    out: *mut SubjevalTestResult,
) -> SubjevalStatus {
    guard(|| {
        let r = stats::welch_t(slice(x, nx, "x")?, slice(y, ny, "y")?)?;
        *self::out(out, "out")? = SubjevalTestResult {
            statistic: r.statistic,
            df: r.df.unwrap_or(f64::NAN),
            p_value: r.p_value,
        };
        Ok(())
    })
}

/// Two-sided Mann-Whitney U test; the statistic is U of `x`.
///
/// # Safety
/// As for [`subjeval_welch_t`].
#[no_mangle]
pub unsafe extern "C" fn subjeval_mann_whitney_u(
    x: *const f64,
    nx: usize,
    y: *const f64,
    ny: usize,
    mode: SubjevalMwuMode,
    out: *mut SubjevalTestResult,
) -> SubjevalStatus {
    guard(|| {
        let mode = match mode {
            SubjevalMwuMode::Auto => MwuMode::Auto,
            SubjevalMwuMode::Exact => MwuMode::Exact,
            SubjevalMwuMode::NormalApprox => MwuMode::NormalApprox,
        };
        let r = stats::mann_whitney_u(slice(x, nx, "x")?, slice(y, ny, "y")?, mode)?;
        *self::out(out, "out")? = SubjevalTestResult {
            statistic: r.statistic,
            df: r.df.unwrap_or(f64::NAN),
            p_value: r.p_value,
        };
        Ok(())
    })
}

/// Sample median with its order-statistic confidence interval.
///
/// # Safety
/// `x` must point to `n` readable doubles; `median` and `interval` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn subjeval_median_ci(
    x: *const f64,
    n: usize,
    level: f64,
    median: *mut f64,
    interval: *mut SubjevalInterval,
) -> SubjevalStatus {
    guard(|| {
        let (m, ci) = stats::median_ci(slice(x, n, "x")?, level)?;
        *out(median, "median")? = m;
        *out(interval, "interval")? = SubjevalInterval {
            lower: ci.lower,
            upper: ci.upper,
            level: ci.level,
        };
        Ok(())
    })
}

/// Sample mean with a Student-t interval, widened outward to a multiple of
/// `round_to` when `round_to > 0`.
///
/// # Safety
/// As for [`subjeval_median_ci`].
#[no_mangle]
pub unsafe extern "C" fn subjeval_mean_ci(
    x: *const f64,
    n: usize,
    level: f64,
    round_to: f64,
    mean: *mut f64,
    interval: *mut SubjevalInterval,
) -> SubjevalStatus {
    guard(|| {
        let round = (round_to > 0.0).then_some(round_to);
        let (m, ci) = stats::mean_ci(slice(x, n, "x")?, level, round)?;
        *out(mean, "mean")? = m;
        *out(interval, "interval")? = SubjevalInterval {
            lower: ci.lower,
            upper: ci.upper,
            level: ci.level,
        };
        Ok(())
    })
}

/// Multiple-comparison decisions for `n` p-values; `rejected[i]` is set to
/// 1 for rejected hypotheses and 0 otherwise.
///
/// # Safety
/// `p_values` must point to `n` readable doubles and `rejected` to `n`
/// writable bytes.
#[no_mangle]
pub unsafe extern "C" fn subjeval_correct(
    p_values: *const f64,
    n: usize,
    alpha: f64,
    method: SubjevalCorrection,
    rejected: *mut u8,
) -> SubjevalStatus {
    guard(|| {
        let p = slice(p_values, n, "p_values")?;
        let set = stats::correct(p, alpha, correction(method))?;
        if n > 0 && rejected.is_null() {
            return Err(null("rejected"));
        }
        for (i, d) in set.decisions.iter().enumerate() {
            *rejected.add(i) = u8::from(*d);
        }
        Ok(())
    })
}

/// Creates an empty count table.
#[no_mangle]
pub extern "C" fn subjeval_counts_new() -> *mut SubjevalCounts {
    Box::into_raw(Box::new(SubjevalCounts { rows: Vec::new() }))
}

/// Appends one condition. `counts` holds the numbers of +2, +1, 0, -1 and -2
/// responses in that order.
///
/// # Safety
/// `table` must come from this library; `condition_id` must be a
/// NUL-terminated string and `counts` must point to 5 readable values.
#[no_mangle]
pub unsafe extern "C" fn subjeval_counts_push(
    table: *mut SubjevalCounts,
    condition_id: *const c_char,
    counts: *const u64,
) -> SubjevalStatus {
    guard(|| {
        let t = out(table, "table")?;
        let id = string(condition_id, "condition_id")?;
        if counts.is_null() {
            return Err(null("counts"));
        }
        let c = std::slice::from_raw_parts(counts, 5);
        t.rows.push((id.to_string(), ResponseCounts::new(c[0], c[1], c[2], c[3], c[4])));
        Ok(())
    })
}

/// Parses a count table in CSV form
/// (`condition,plus2,plus1,zero,minus1,minus2[,sum]`).
///
/// # Safety
/// `csv_text` must be a NUL-terminated string; `table` must be writable.
#[no_mangle]
pub unsafe extern "C" fn subjeval_counts_from_csv(
    csv_text: *const c_char,
    table: *mut *mut SubjevalCounts,
) -> SubjevalStatus {
    guard(|| {
        let text = string(csv_text, "csv_text")?;
        let slot = out(table, "table")?;
        let rows = read_count_table(text.as_bytes(), "count table")?;
        *slot = Box::into_raw(Box::new(SubjevalCounts { rows }));
        Ok(())
    })
}

/// # Safety
/// `table` must be NULL or a table from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn subjeval_counts_len(table: *const SubjevalCounts) -> usize {
    table.as_ref().map_or(0, |t| t.rows.len())
}

/// # Safety
/// `table` must be NULL or a table from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn subjeval_counts_free(table: *mut SubjevalCounts) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// Per-condition scores, chance tests and Welch pairwise comparisons of a
/// preference study.
///
/// # Safety
/// `table` must be a live count table; `analysis` must be writable.
#[no_mangle]
pub unsafe extern "C" fn subjeval_analyze_counts(
    table: *const SubjevalCounts,
    alpha: f64,
    method: SubjevalCorrection,
    analysis: *mut *mut SubjevalAnalysis,
) -> SubjevalStatus {
    guard(|| {
        let t = handle(table, "table")?;
        let slot = out(analysis, "analysis")?;
        let cfg = AnalysisConfig {
            alpha,
            correction: correction(method),
            ..AnalysisConfig::for_study(StudyKind::SpeechApprop)
        };
        let report = analyze_counts(&t.rows, &cfg)?;
        *slot = Box::into_raw(Box::new(SubjevalAnalysis { report }));
        Ok(())
    })
}

/// Ingests newline-JSON responses against `plan` and analyses the result with
/// the study's default configuration.
///
/// # Safety
/// `plan` must be a live plan; `responses_ndjson` a NUL-terminated string;
/// `analysis` writable.
#[no_mangle]
pub unsafe extern "C" fn subjeval_ingest_and_analyze(
    plan: *const SubjevalPlan,
    responses_ndjson: *const c_char,
    analysis: *mut *mut SubjevalAnalysis,
) -> SubjevalStatus {
    guard(|| {
        let p = handle(plan, "plan")?;
        let text = string(responses_ndjson, "responses_ndjson")?;
        let slot = out(analysis, "analysis")?;
        let records = read_responses_ndjson(text.as_bytes(), "responses")?;
        let outcome = ingest(records, &p.plan);
        let report = analyze_outcome(&outcome, &AnalysisConfig::for_study(p.plan.study_kind))?;
        *slot = Box::into_raw(Box::new(SubjevalAnalysis { report }));
        Ok(())
    })
}

/// # Safety
/// `analysis` must be NULL or a live analysis.
#[no_mangle]
pub unsafe extern "C" fn subjeval_analysis_condition_count(analysis: *const SubjevalAnalysis) -> usize {
    analysis.as_ref().map_or(0, |a| a.report.summaries.len())
}

/// Mean appropriateness score of the condition at `index` (input order).
///
/// # Safety
/// `analysis` must be a live analysis and `mas` writable.
#[no_mangle]
pub unsafe extern "C" fn subjeval_analysis_mas(
    analysis: *const SubjevalAnalysis,
    index: usize,
    mas: *mut SubjevalMas,
) -> SubjevalStatus {
    guard(|| {
        let a = handle(analysis, "analysis")?;
        let s = a
            .report
            .summaries
            .get(index)
            .ok_or_else(|| Fail(SubjevalStatus::OutOfRange, format!("condition index {index} out of range")))?;
        let m = s
            .mas
            .ok_or_else(|| Fail(SubjevalStatus::InvalidInput, format!("{} has no MAS", s.condition_id)))?;
        *out(mas, "mas")? = SubjevalMas {
            mas: m.value,
            lower: m.interval.lower,
            upper: m.interval.upper,
            pref_matched: s.pref_matched.unwrap_or(f64::NAN),
            n: s.n,
        };
        Ok(())
    })
}

/// Number of significant condition pairs, or 0 without a pairwise matrix.
///
/// # Safety
/// `analysis` must be NULL or a live analysis.
#[no_mangle]
pub unsafe extern "C" fn subjeval_analysis_significant_pairs(analysis: *const SubjevalAnalysis) -> usize {
    analysis
        .as_ref()
        .and_then(|a| a.report.matrix.as_ref())
        .map_or(0, |m| m.significant_pairs())
}

/// Serialises the analysis; free the result with [`subjeval_string_free`].
///
/// # Safety
/// `analysis` must be a live analysis and `json` writable.
#[no_mangle]
pub unsafe extern "C" fn subjeval_analysis_to_json(
    analysis: *const SubjevalAnalysis,
    json: *mut *mut c_char,
) -> SubjevalStatus {
    guard(|| {
        let a = handle(analysis, "analysis")?;
        let slot = out(json, "json")?;
        *slot = into_c_string(a.report.to_json()?)?;
        Ok(())
    })
}

/// # Safety
/// `analysis` must be NULL or a live analysis.
#[no_mangle]
pub unsafe extern "C" fn subjeval_analysis_free(analysis: *mut SubjevalAnalysis) {
    if !analysis.is_null() {
        drop(Box::from_raw(analysis));
    }
}

/// Parses a plan document.
///
/// # Safety
/// `json` must be a NUL-terminated string and `plan` writable.
#[no_mangle]
pub unsafe extern "C" fn subjeval_plan_from_json(json: *const c_char, plan: *mut *mut SubjevalPlan) -> SubjevalStatus {
    guard(|| {
        let text = string(json, "json")?;
        let slot = out(plan, "plan")?;
        *slot = Box::into_raw(Box::new(SubjevalPlan {
            plan: StudyPlan::from_json(text)?,
        }));
        Ok(())
    })
}

/// Designs a study from comma-separated condition ids and a JSON array of
/// segments.
///
/// # Safety
/// `conditions` and `segments_json` must be NUL-terminated strings and `plan`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn subjeval_design_study(
    kind: SubjevalStudyKind,
    conditions: *const c_char,
    segments_json: *const c_char,
    n_participants: usize,
    seed: u64,
    plan: *mut *mut SubjevalPlan,
) -> SubjevalStatus {
    guard(|| {
        let conds = string(conditions, "conditions")?
            .split(',')
            .map(|c| subjeval::design::Condition::from_id(c.trim()))
            .collect::<subjeval::Result<Vec<_>>>()?;
        let segments: Vec<subjeval::design::Segment> =
            serde_json::from_str(string(segments_json, "segments_json")?).map_err(Error::from)?;
        let slot = out(plan, "plan")?;
        let p = subjeval::design::design_study(study_kind(kind), &conds, &segments, n_participants, seed)?;
        *slot = Box::into_raw(Box::new(SubjevalPlan { plan: p }));
        Ok(())
    })
}

/// # Safety
/// `plan` must be NULL or a live plan.
#[no_mangle]
pub unsafe extern "C" fn subjeval_plan_participant_count(plan: *const SubjevalPlan) -> usize {
    plan.as_ref().map_or(0, |p| p.plan.participants.len())
}

/// Serialises the plan; free the result with [`subjeval_string_free`].
///
/// # Safety
/// `plan` must be a live plan and `json` writable.
#[no_mangle]
pub unsafe extern "C" fn subjeval_plan_to_json(plan: *const SubjevalPlan, json: *mut *mut c_char) -> SubjevalStatus {
    guard(|| {
        let p = handle(plan, "plan")?;
        let slot = out(json, "json")?;
        *slot = into_c_string(p.plan.to_json()?)?;
        Ok(())
    })
}

/// # Safety
/// `plan` must be NULL or a live plan.
#[no_mangle]
pub unsafe extern "C" fn subjeval_plan_free(plan: *mut SubjevalPlan) {
    if !plan.is_null() {
        drop(Box::from_raw(plan));
    }
}
