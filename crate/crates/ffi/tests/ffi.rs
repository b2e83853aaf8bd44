use std::ffi::{c_char, CStr, CString};
use std::ptr;

use emslice_ffi::*;

const SORT: &str = include_str!("../../core/fixtures/sort_and_normalize.mj");

fn parse(src: &str) -> *mut EmsProgram {
    let src = CString::new(src).unwrap();
    let mut p = ptr::null_mut();
    let st = unsafe { ems_program_parse(src.as_ptr(), &mut p) };
    assert_eq!(st, EmsStatus::Ok, "{}", last_error());
    p
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(ems_last_error()) }.to_str().unwrap().to_string()
}

fn take(s: *mut c_char) -> String {
    let out = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_string();
    unsafe { ems_string_free(s) };
    out
}

#[test]
fn suggest_and_apply() {
    let p = parse(SORT);
    let m = CString::new("SortAndNormalize").unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { ems_suggest_json(p, m.as_ptr(), ptr::null(), &mut out) }, EmsStatus::Ok);
    let docs: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
    assert_eq!(docs[0]["method"], "SortAndNormalize");
    assert!(!docs[0]["candidates"].as_array().unwrap().is_empty());

    let opts = ems_suggest_options_default();
    assert_eq!(unsafe { ems_apply(p, m.as_ptr(), &opts, 0, false, &mut out) }, EmsStatus::Ok);
    let golden = include_str!("../../core/fixtures/golden/sort_candidate0.mj");
    assert_eq!(take(out), golden);

    assert_eq!(unsafe { ems_apply(p, m.as_ptr(), &opts, 999, false, &mut out) }, EmsStatus::OutOfRange);
    assert!(last_error().contains("out of range"));
    unsafe { ems_program_free(p) };
}

#[test]
fn rejected_candidate_needs_force() {
    let p = parse(include_str!("../../core/fixtures/rule7_shift.mj"));
    let m = CString::new("shift").unwrap();
    let opts = EmsSuggestOptions {
        min_extract_size: 0,
        ..ems_suggest_options_default()
    };
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { ems_apply(p, m.as_ptr(), &opts, 1, false, &mut out) }, EmsStatus::Rejected);
    assert!(last_error().contains("Rule 7"));
    assert_eq!(unsafe { ems_apply(p, m.as_ptr(), &opts, 1, true, &mut out) }, EmsStatus::Ok);
    assert!(take(out).contains("extracted_y_5"));
    unsafe { ems_program_free(p) };
}

#[test]
fn methods_metrics_and_run() {
    let p = parse("int f(int a) { int b = a + 1; int c = b * 2; return c; }\nvoid g() { print(1); }");
    let mut n = 0;
    assert_eq!(unsafe { ems_program_method_count(p, &mut n) }, EmsStatus::Ok);
    assert_eq!(n, 2);
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { ems_program_method_name(p, 1, &mut out) }, EmsStatus::Ok);
    assert_eq!(take(out), "g");
    assert_eq!(unsafe { ems_program_method_name(p, 2, &mut out) }, EmsStatus::OutOfRange);

    assert_eq!(unsafe { ems_metrics_json(p, ptr::null(), EmsCohesionMode::Output, &mut out) }, EmsStatus::Ok);
    let rows: serde_json::Value = serde_json::from_str(&take(out)).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 2);

    let f = CString::new("f").unwrap();
    let args = CString::new("[4]").unwrap();
    assert_eq!(unsafe { ems_run_json(p, f.as_ptr(), args.as_ptr(), 10_000, &mut out) }, EmsStatus::Ok);
    assert!(take(out).contains("10"));
    let bad = CString::new("[1, 2]").unwrap();
    assert_eq!(unsafe { ems_run_json(p, f.as_ptr(), bad.as_ptr(), 10_000, &mut out) }, EmsStatus::InvalidArgument);
    let h = CString::new("h").unwrap();
    assert_eq!(unsafe { ems_run_json(p, h.as_ptr(), args.as_ptr(), 10_000, &mut out) }, EmsStatus::UnknownMethod);
    unsafe { ems_program_free(p) };
}

#[test]
fn errors_and_null_arguments() {
    let src = CString::new("void f( {").unwrap();
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { ems_program_parse(src.as_ptr(), &mut p) }, EmsStatus::ParseError);
    assert!(p.is_null());
    assert!(last_error().contains("1:9"), "{}", last_error());
    assert_eq!(unsafe { ems_program_parse(ptr::null(), &mut p) }, EmsStatus::NullArgument);
    let bytes = [0xffu8, 0];
    assert_eq!(unsafe { ems_program_parse(bytes.as_ptr().cast(), &mut p) }, EmsStatus::InvalidUtf8);
    let mut n = 0;
    assert_eq!(unsafe { ems_program_method_count(ptr::null(), &mut n) }, EmsStatus::NullArgument);
    unsafe {
        ems_program_free(ptr::null_mut());
        ems_string_free(ptr::null_mut());
    }
    let v = unsafe { CStr::from_ptr(ems_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_api_and_compiles() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let header = std::fs::read_to_string(dir.join("emslice.h")).unwrap();
    for f in ["ems_program_parse", "ems_suggest_json", "ems_apply", "ems_string_free", "EMS_STATUS_REJECTED = 6"] {
        assert!(header.contains(f), "{f} missing from header");
    }
    // Syntax check only when a C compiler is around.
    let tmp = tempfile::tempdir().unwrap();
    let c = tmp.path().join("use.c");
    std::fs::write(&c, "#include \"emslice.h\"\nint main(void) { EmsProgram *p = 0; return ems_program_parse(\"\", &p); }\n").unwrap();
    match std::process::Command::new("cc").arg("-fsyntax-only").arg("-I").arg(&dir).arg(&c).output() {
        Ok(o) => assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr)),
        Err(_) => eprintln!("cc not found; skipping compile check"),
    }
}
