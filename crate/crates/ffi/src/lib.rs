//! C interface to emslice.
//!
//! Programs are parsed into an opaque [`EmsProgram`] handle. Results come
//! back as NUL-terminated JSON (or MIMPL source) strings owned by the
//! caller and released with [`ems_string_free`]. Every function returns an
//! [`EmsStatus`]; on failure [`ems_last_error`] describes the problem.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use emslice::analysis::ProgramAnalysis;
use emslice::cli::CandidateSummary;
use emslice::metrics::{self, CohesionMode};
use emslice::suggest::{self, SuggestConfig};
use emslice::{extract, interp, lang};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EmsStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    UnknownMethod = 4,
    OutOfRange = 5,
    /// A rule rejects the candidate and `force` was not set.
    Rejected = 6,
    /// The candidate could not be extracted.
    ExtractFailed = 7,
    InvalidArgument = 8,
    Panic = 99,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EmsCohesionMode {
    Output = 0,
    All = 1,
}

/// Candidate filtering options; see [`ems_suggest_options_default`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EmsSuggestOptions {
    pub max_overlap: f64,
    pub min_extract_size: usize,
    pub allow_duplication: f64,
}

/// A parsed and type-checked program.
pub struct EmsProgram {
    analysis: ProgramAnalysis,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(EmsStatus, String);

type Outcome<T> = Result<T, Failure>;

fn fail<T>(status: EmsStatus, msg: impl Into<String>) -> Outcome<T> {
    Err(Failure(status, msg.into()))
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

/// Runs `f`, records its error message and converts panics.
fn guard(f: impl FnOnce() -> Outcome<()>) -> EmsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            EmsStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            EmsStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Outcome<&'a str> {
    if p.is_null() {
        return fail(EmsStatus::NullArgument, format!("{what} is null"));
    }
    CStr::from_ptr(p)
        .to_str()
        .or_else(|_| fail(EmsStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn opt_str_arg<'a>(p: *const c_char, what: &str) -> Outcome<Option<&'a str>> {
    if p.is_null() {
        Ok(None)
    } else {
        str_arg(p, what).map(Some)
    }
}

unsafe fn analysis<'a>(p: *const EmsProgram) -> Outcome<&'a ProgramAnalysis> {
    match p.as_ref() {
        Some(p) => Ok(&p.analysis),
        None => fail(EmsStatus::NullArgument, "program is null"),
    }
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Outcome<()> {
    if out.is_null() {
        return fail(EmsStatus::NullArgument, "output pointer is null");
    }
    let c = CString::new(s).or_else(|_| fail(EmsStatus::InvalidArgument, "result contains NUL"))?;
    *out = c.into_raw();
    Ok(())
}

fn method_names(pa: &ProgramAnalysis, method: Option<&str>) -> Outcome<Vec<String>> {
    match method {
        Some(m) if pa.program.method(m).is_some() => Ok(vec![m.to_string()]),
        Some(m) => fail(EmsStatus::UnknownMethod, format!("unknown method '{m}'")),
        None => Ok(pa.program.methods.iter().map(|m| m.name.clone()).collect()),
    }
}

fn config(o: &EmsSuggestOptions) -> SuggestConfig {
    SuggestConfig {
        max_overlap: o.max_overlap,
        min_extract_size: o.min_extract_size,
        allow_duplication: o.allow_duplication,
        ..SuggestConfig::default()
    }
}

fn json(v: &impl serde::Serialize) -> String {
    serde_json::to_string(v).expect("serializable")
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn ems_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn ems_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn ems_suggest_options_default() -> EmsSuggestOptions {
    let d = SuggestConfig::default();
    EmsSuggestOptions {
        max_overlap: d.max_overlap,
        min_extract_size: d.min_extract_size,
        allow_duplication: d.allow_duplication,
    }
}

/// Parses and checks MIMPL `source`. On success `*out` owns a handle to be
/// released with [`ems_program_free`].
///
/// # Safety
/// `source` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ems_program_parse(source: *const c_char, out: *mut *mut EmsProgram) -> EmsStatus {
    guard(|| {
        let src = str_arg(source, "source")?;
        if out.is_null() {
            return fail(EmsStatus::NullArgument, "output pointer is null");
        }
        let analysis = ProgramAnalysis::parse(src).or_else(|e| fail(EmsStatus::ParseError, e.to_string()))?;
        *out = Box::into_raw(Box::new(EmsProgram { analysis }));
        Ok(())
    })
}

/// Releases a program. Null is ignored.
///
/// # Safety
/// `program` must come from [`ems_program_parse`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn ems_program_free(program: *mut EmsProgram) {
    if !program.is_null() {
        drop(Box::from_raw(program));
    }
}

/// Number of methods in the program.
///
/// # Safety
/// `program` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ems_program_method_count(program: *const EmsProgram, out: *mut usize) -> EmsStatus {
    guard(|| {
        let pa = analysis(program)?;
        if out.is_null() {
            return fail(EmsStatus::NullArgument, "output pointer is null");
        }
        *out = pa.program.methods.len();
        Ok(())
    })
}

/// Name of method `index` in declaration order.
///
/// # Safety
/// `program` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ems_program_method_name(
    program: *const EmsProgram,
    index: usize,
    out: *mut *mut c_char,
) -> EmsStatus {
    guard(|| {
        let pa = analysis(program)?;
        let Some(m) = pa.program.methods.get(index) else {
            return fail(EmsStatus::OutOfRange, format!("method index {index} out of range"));
        };
        put_string(out, m.name.clone())
    })
}

/// Candidates with rule verdicts as a JSON array of
/// `{"method", "candidates": [...]}`. `method` may be null for all methods;
/// `options` may be null for the defaults.
///
/// # Safety
/// Pointers must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ems_suggest_json(
    program: *const EmsProgram,
    method: *const c_char,
    options: *const EmsSuggestOptions,
    out: *mut *mut c_char,
) -> EmsStatus {
    guard(|| {
        let pa = analysis(program)?;
        let method = opt_str_arg(method, "method")?;
        let opts = options.as_ref().copied().unwrap_or_else(|| ems_suggest_options_default());
        let cfg = config(&opts);
        let mut docs = Vec::new();
        for name in method_names(pa, method)? {
            let ma = pa.method(&name).expect("method exists");
            let ms = suggest::suggest_method(&ma, &cfg);
            let cands: Vec<CandidateSummary> = ms.suggestions.iter().map(CandidateSummary::from).collect();
            docs.push(serde_json::json!({ "method": name, "candidates": cands }));
        }
        put_string(out, json(&docs))
    })
}

/// Applies candidate `index` of `method` (as numbered by
/// [`ems_suggest_json`] with the same options) and returns the rewritten
/// program source. Rejected candidates need `force`.
///
/// # Safety
/// Pointers must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ems_apply(
    program: *const EmsProgram,
    method: *const c_char,
    options: *const EmsSuggestOptions,
    index: usize,
    force: bool,
    out: *mut *mut c_char,
) -> EmsStatus {
    guard(|| {
        let pa = analysis(program)?;
        let name = str_arg(method, "method")?;
        method_names(pa, Some(name))?;
        let opts = options.as_ref().copied().unwrap_or_else(|| ems_suggest_options_default());
        let ma = pa.method(name).expect("method exists");
        let ms = suggest::suggest_method(&ma, &config(&opts));
        let n = ms.suggestions.len();
        let Some(s) = ms.suggestions.into_iter().nth(index) else {
            return fail(EmsStatus::OutOfRange, format!("candidate {index} out of range ({n} candidates)"));
        };
        if !s.accepted && !force {
            let failed: Vec<String> = s
                .verdicts
                .iter()
                .filter(|v| !v.passed)
                .map(|v| format!("Rule {}: {}", v.rule, v.reason.as_deref().unwrap_or("")))
                .collect();
            return fail(EmsStatus::Rejected, failed.join("; "));
        }
        let r = extract::apply(&ma, &s.candidate).or_else(|e| fail(EmsStatus::ExtractFailed, e.to_string()))?;
        put_string(out, lang::unparse(&r.program))
    })
}

/// Cohesion and complexity per method as JSON. `method` may be null.
///
/// # Safety
/// Pointers must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ems_metrics_json(
    program: *const EmsProgram,
    method: *const c_char,
    mode: EmsCohesionMode,
    out: *mut *mut c_char,
) -> EmsStatus {
    guard(|| {
        let pa = analysis(program)?;
        let method = opt_str_arg(method, "method")?;
        let mode = match mode {
            EmsCohesionMode::Output => CohesionMode::Output,
            EmsCohesionMode::All => CohesionMode::All,
        };
        let rows: Vec<_> = method_names(pa, method)?
            .iter()
            .map(|n| metrics::method_metrics(&pa.method(n).expect("method exists"), mode))
            .collect();
        put_string(out, json(&rows))
    })
}

/// Interprets `method` on `args_json`, a JSON array with one value per
/// parameter, and returns the trace as a JSON array of events.
///
/// # Safety
/// Pointers must be valid; strings NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn ems_run_json(
    program: *const EmsProgram,
    method: *const c_char,
    args_json: *const c_char,
    fuel: u64,
    out: *mut *mut c_char,
) -> EmsStatus {
    guard(|| {
        let pa = analysis(program)?;
        let name = str_arg(method, "method")?;
        let Some(m) = pa.program.method(name) else {
            return fail(EmsStatus::UnknownMethod, format!("unknown method '{name}'"));
        };
        let args: Vec<serde_json::Value> = serde_json::from_str(str_arg(args_json, "args")?)
            .or_else(|e| fail(EmsStatus::InvalidArgument, format!("args: {e}")))?;
        if args.len() != m.params.len() {
            return fail(
                EmsStatus::InvalidArgument,
                format!("'{name}' takes {} arguments, got {}", m.params.len(), args.len()),
            );
        }
        let inputs = m
            .params
            .iter()
            .zip(&args)
            .map(|(p, v)| match interp::input_from_json(&pa.program, &p.ty, v) {
                Some(i) => Ok(i),
                None => fail(EmsStatus::InvalidArgument, format!("argument {v} does not fit '{}'", p.name)),
            })
            .collect::<Outcome<Vec<_>>>()?;
        let trace =
            interp::run(&pa.program, name, &inputs, fuel).or_else(|e| fail(EmsStatus::InvalidArgument, e.to_string()))?;
        put_string(out, json(&trace.events))
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used again.
#[no_mangle]
pub unsafe extern "C" fn ems_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
