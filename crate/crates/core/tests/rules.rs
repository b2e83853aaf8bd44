use std::collections::{BTreeMap, BTreeSet};

use emslice::analysis::ProgramAnalysis;
use emslice::extract::{self, ExtractError};
use emslice::interp;
use emslice::outputs::Origin;
use emslice::rules;
use emslice::slicer::ExtractCandidate;
use emslice::suggest::{self, SuggestConfig};

fn set(xs: impl IntoIterator<Item = u32>) -> BTreeSet<u32> {
    xs.into_iter().collect()
}

fn fixture(name: &str) -> ProgramAnalysis {
    let path = format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    ProgramAnalysis::parse(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn unfiltered() -> SuggestConfig {
    SuggestConfig {
        min_extract_size: 0,
        ..SuggestConfig::default()
    }
}

fn find(pa: &ProgramAnalysis, method: &str, extracted: &[u32], duplicated: &[u32]) -> ExtractCandidate {
    let ma = pa.method(method).unwrap();
    suggest::candidates(&ma, &unfiltered())
        .into_iter()
        .find(|c| c.extracted == set(extracted.iter().copied()) && c.duplicated == set(duplicated.iter().copied()))
        .expect("candidate exists")
}

fn failing(pa: &ProgramAnalysis, method: &str, c: &ExtractCandidate) -> Vec<u8> {
    let ma = pa.method(method).unwrap();
    rules::check_all(&ma, c).into_iter().filter(|v| !v.passed).map(|v| v.rule).collect()
}

/// Applies a candidate regardless of verdicts: true when the result is
/// ill-typed or behaves differently.
fn forced_breaks(pa: &ProgramAnalysis, method: &str, c: &ExtractCandidate) -> bool {
    let ma = pa.method(method).unwrap();
    match extract::apply(&ma, c) {
        Err(ExtractError::IllTyped(_)) => true,
        Err(e) => panic!("unexpected {e}"),
        Ok(r) => {
            let inputs = interp::random_inputs(&pa.program, method, 20, 11).unwrap();
            !interp::equivalent(&pa.program, &r.program, method, &inputs, 1_000_000)
                .unwrap()
                .equivalent
        }
    }
}

#[test]
fn rule1_outputs_travel_with_slices() {
    let pa = fixture("sort_and_normalize.mj");
    let ma = pa.method("SortAndNormalize").unwrap();
    // Sorting loop with its print: pass.
    let c = find(&pa, "SortAndNormalize", &[2, 3, 4, 5, 6, 7, 8], &[]);
    assert!(rules::check_rule1(&ma, &c).passed);
    // Return-seeded candidate keeps the return.
    let pa2 = fixture("delete_parent.mj");
    let ma2 = pa2.method("deleteParent").unwrap();
    let c = find(&pa2, "deleteParent", &[4, 5, 6], &[]);
    assert!(rules::check_rule1(&ma2, &c).passed);
    // Moving the return fails.
    let mut moved = c.clone();
    moved.extracted.insert(13);
    moved.stmts.insert(13);
    moved.remaining.remove(&13);
    let v = rules::check_rule1(&ma2, &moved);
    assert!(!v.passed && v.reason.unwrap().contains("return"));
}

#[test]
fn rule2_uninitialized_input() {
    let pa = fixture("rule2_sign.mj");
    let c = find(&pa, "sign", &[6], &[4]);
    assert_eq!(failing(&pa, "sign", &c), vec![2]);
    assert!(forced_breaks(&pa, "sign", &c));
    // Free variables that are all parameters are fine.
    let c = find(&pa, "sign", &[6], &[]);
    assert!(failing(&pa, "sign", &c).is_empty());
}

#[test]
fn rule3_conditional_final() {
    let pa = fixture("rule3_pick.mj");
    let c = find(&pa, "pick", &[1, 3], &[2]);
    assert_eq!(failing(&pa, "pick", &c), vec![3]);
    assert!(forced_breaks(&pa, "pick", &c));

    let ok = ProgramAnalysis::parse(
        "int f(int a) { final int k = a * 2; int m = k + 1; print(m); return k; }",
    )
    .unwrap();
    let ma = ok.method("f").unwrap();
    for c in suggest::candidates(&ma, &unfiltered()) {
        assert!(rules::check_rule3(&ma, &c).passed);
    }
}

#[test]
fn rule4_redeclaration_at_call_site() {
    let pa = fixture("rule4_calculate.mj");
    let outer = find(&pa, "calculate", &[2, 3, 4], &[1]);
    assert_eq!(failing(&pa, "calculate", &outer), vec![4]);
    assert!(forced_breaks(&pa, "calculate", &outer));
    let inner = find(&pa, "calculate", &[2, 3, 4], &[]);
    assert!(failing(&pa, "calculate", &inner).is_empty());
}

#[test]
fn rule5_remaining_must_do_something() {
    let pa = fixture("rule5_pan_range_axes.mj");
    let ma = pa.method("panRangeAxes").unwrap();
    let whole = find(&pa, "panRangeAxes", &[3, 4, 5, 6, 7, 8, 9], &[]);
    assert_eq!(failing(&pa, "panRangeAxes", &whole), vec![5]);
    // Forced application is still behavior preserving; the rule is about
    // usefulness.
    assert!(!forced_breaks(&pa, "panRangeAxes", &whole));
    let small = find(&pa, "panRangeAxes", &[8], &[]);
    assert!(rules::check_rule5(&ma, &small).passed);
}

#[test]
fn rule6_overlap_threshold() {
    let pa = fixture("rule6_shape.mj");
    let ma = pa.method("shape").unwrap();
    let slices = rules::output_slices(&ma);
    assert_eq!(slices[&20], set(5..=20));
    assert_eq!(slices[&25], set(5..=25));
    let reports = rules::slice_overlap(&slices);
    let r = reports.iter().find(|r| r.pair == (20, 25)).unwrap();
    assert_eq!(r.common.len(), 16);
    assert!((r.slice_overlap - 16.0 / 21.0).abs() < 1e-12);

    let surviving = |max_overlap: f64| -> Vec<u32> {
        let cfg = SuggestConfig {
            max_overlap,
            ..SuggestConfig::default()
        };
        suggest::suggest_method(&ma, &cfg)
            .accepted()
            .filter(|s| s.candidate.algorithm == Origin::OutputBased)
            .map(|s| s.candidate.output_stmt.unwrap())
            .collect()
    };
    assert_eq!(surviving(0.75), vec![20]);
    assert_eq!(surviving(0.80), vec![20, 25]);

    let report = suggest::suggest_method(&ma, &SuggestConfig::default());
    let lost = report
        .suggestions
        .iter()
        .find(|s| s.candidate.output_stmt == Some(25))
        .unwrap();
    let v6 = lost.verdicts.iter().find(|v| v.rule == 6).unwrap();
    assert!(!v6.passed);
    assert!(v6.reason.as_ref().unwrap().contains("tie"));
}

#[test]
fn rule6_trivial_overlaps() {
    let a = set([1, 2, 3]);
    let b = set([4, 5]);
    let reports = rules::slice_overlap(&BTreeMap::from([(3, a.clone()), (5, b)]));
    assert_eq!(reports[0].slice_overlap, 0.0);
    let reports = rules::slice_overlap(&BTreeMap::from([(3, a.clone()), (4, a)]));
    assert_eq!(reports[0].slice_overlap, 1.0);
}

#[test]
fn rule7_duplicated_field_store() {
    let pa = fixture("rule7_shift.mj");
    let c = find(&pa, "shift", &[4, 5], &[1, 2]);
    assert_eq!(failing(&pa, "shift", &c), vec![7]);
    assert!(forced_breaks(&pa, "shift", &c));
}

#[test]
fn rule8_duplicated_allocation() {
    let pa = fixture("rule8_make.mj");
    let c = find(&pa, "make", &[2, 3], &[1]);
    assert_eq!(failing(&pa, "make", &c), vec![8]);
    assert!(forced_breaks(&pa, "make", &c));
    // The same allocation extracted without duplication is fine.
    let ma = pa.method("make").unwrap();
    for c in suggest::candidates(&ma, &unfiltered()) {
        if c.duplicated.is_empty() {
            assert!(rules::check_rule8(&ma, &c).passed);
        }
    }
}

#[test]
fn rule9_reordering() {
    let pa = fixture("sort_and_normalize.mj");
    let mut e: Vec<u32> = (2..=7).collect();
    e.extend(9..=17);
    let c = find(&pa, "SortAndNormalize", &e, &[]);
    assert_eq!(failing(&pa, "SortAndNormalize", &c), vec![9]);
    assert!(forced_breaks(&pa, "SortAndNormalize", &c));

    // Straight-line candidate at the head of the method.
    let pa = ProgramAnalysis::parse("void f(int a) { int x = a + 1; int y = x * 2; print(y); int z = a - 1; print(z); }").unwrap();
    let c = find(&pa, "f", &[1, 2, 3], &[]);
    assert!(failing(&pa, "f", &c).is_empty());
}

/// Every reported candidate carries a verdict per rule, and rejected ones
/// name at least one failing rule with a reason.
#[test]
fn verdicts_are_complete() {
    for (file, method) in [
        ("sort_and_normalize.mj", "SortAndNormalize"),
        ("delete_parent.mj", "deleteParent"),
        ("rule6_shape.mj", "shape"),
    ] {
        let pa = fixture(file);
        let ma = pa.method(method).unwrap();
        for s in suggest::suggest_method(&ma, &unfiltered()).suggestions {
            let ids: Vec<u8> = s.verdicts.iter().map(|v| v.rule).collect();
            assert_eq!(ids, (1..=9).collect::<Vec<u8>>());
            for v in &s.verdicts {
                assert_eq!(v.passed, v.reason.is_none());
            }
            assert_eq!(s.accepted, s.verdicts.iter().all(|v| v.passed));
        }
    }
}
