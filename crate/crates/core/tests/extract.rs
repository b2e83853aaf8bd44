use std::collections::BTreeSet;

use emslice::analysis::ProgramAnalysis;
use emslice::extract::{self, ExtractError, Location};
use emslice::interp;
use emslice::lang::Type;
use emslice::rules;
use emslice::slicer::{self, ExtractCandidate};

fn set(xs: impl IntoIterator<Item = u32>) -> BTreeSet<u32> {
    xs.into_iter().collect()
}

fn fixture(name: &str) -> ProgramAnalysis {
    let path = format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    ProgramAnalysis::parse(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn all_candidates(pa: &ProgramAnalysis, method: &str) -> Vec<ExtractCandidate> {
    let ma = pa.method(method).unwrap();
    let outs = emslice::outputs::classify_outputs(&ma);
    let mut cands = slicer::output_based_slicing(&ma, &outs);
    cands.extend(slicer::complete_computation_slices(&ma));
    cands.extend(slicer::object_state_slices(&ma));
    cands
}

#[test]
fn sort_candidate_signature() {
    let pa = fixture("sort_and_normalize.mj");
    let ma = pa.method("SortAndNormalize").unwrap();
    let cands = all_candidates(&pa, "SortAndNormalize");
    let c = &cands[0];
    assert_eq!((c.extracted.clone(), c.duplicated.clone()), (set(2..=8), set([1])));
    let sig = extract::infer_signature(&ma, c).unwrap();
    let int_array = Type::Array(Box::new(Type::Int));
    assert_eq!(sig.params, vec![("ArrayIn".to_string(), int_array.clone())]);
    assert_eq!(sig.ret, Some(("ArrayIn".to_string(), int_array)));
}

#[test]
fn naming_and_mapping() {
    let pa = fixture("delete_parent.mj");
    let ma = pa.method("deleteParent").unwrap();
    let cands = all_candidates(&pa, "deleteParent");
    let c = cands
        .iter()
        .find(|c| c.variable == "iparent2" && c.output_stmt == Some(13) && c.duplicated == set(1..=3))
        .unwrap();
    assert_eq!(extract::name_method(&pa.program, c), "extracted_iparent2_13");
    let r = extract::apply(&ma, c).unwrap();
    assert_eq!(r.new_method, "extracted_iparent2_13");
    for s in 1..=13 {
        let want = match s {
            1..=3 => Location::Both,
            4..=6 => Location::Extracted,
            _ => Location::Remaining,
        };
        assert_eq!(r.mapping[&s], want, "statement {s}");
    }
    // The return stays and reads the value produced by the call.
    let text = emslice::lang::unparse(&r.program);
    assert!(text.contains("int iparent2 = extracted_iparent2_13(node, depth);"), "{text}");
    assert!(text.contains("return iparent2;"));
}

#[test]
fn name_collisions_get_suffixes() {
    let src = "void extracted_x_2(int a) { print(a); }\n\
               void f(int a) { int x = a + 1; print(x); int y = a; print(y); }";
    let pa = ProgramAnalysis::parse(src).unwrap();
    let cands = all_candidates(&pa, "f");
    let c = cands.iter().find(|c| c.output_stmt == Some(2)).unwrap();
    assert_eq!(extract::name_method(&pa.program, c), "extracted_x_2_2");
}

#[test]
fn multiple_live_outs_are_rejected() {
    let src = "void f(int a) { int x = a + 1; int y = x * 2; print(y); print(x + y); }";
    let pa = ProgramAnalysis::parse(src).unwrap();
    let ma = pa.method("f").unwrap();
    let c = ExtractCandidate {
        method: "f".into(),
        output_category: Some(emslice::outputs::OutputCategory::PrintStream),
        remaining: set([4]),
        algorithm: emslice::outputs::Origin::OutputBased,
        variable: "y".into(),
        output_stmt: Some(3),
        anchor: 1,
        criteria: vec![],
        stmts: set([1, 2, 3]),
        extracted: set([1, 2, 3]),
        duplicated: set([]),
    };
    assert!(matches!(extract::plan(&ma, &c), Err(ExtractError::MultipleLiveOuts(_))));
}

/// Every candidate that passes the per-candidate rules keeps behavior.
#[test]
fn rule_passing_candidates_are_equivalent() {
    let mut applied = 0;
    for (file, method) in [
        ("sort_and_normalize.mj", "SortAndNormalize"),
        ("delete_parent.mj", "deleteParent"),
    ] {
        let pa = fixture(file);
        let ma = pa.method(method).unwrap();
        let inputs = interp::random_inputs(&pa.program, method, 20, 7).unwrap();
        for c in all_candidates(&pa, method) {
            if !rules::check_all(&ma, &c).iter().all(|v| v.passed) {
                continue;
            }
            let r = extract::apply(&ma, &c).unwrap();
            let eq = interp::equivalent(&pa.program, &r.program, method, &inputs, 1_000_000).unwrap();
            assert!(eq.equivalent, "{:?} {:?}", c.extracted, eq.divergence);
            applied += 1;
        }
    }
    assert!(applied >= 30, "{applied}");
}

/// The whole-method candidates of `last` would move the sort past the first
/// print; Rule 9 rejects them and forcing them changes the output.
#[test]
fn rule9_rejects_reordering_past_output() {
    let pa = fixture("sort_and_normalize.mj");
    let ma = pa.method("SortAndNormalize").unwrap();
    let cands = all_candidates(&pa, "SortAndNormalize");
    let c = cands
        .iter()
        .find(|c| c.variable == "last" && c.extracted.contains(&2) && !c.extracted.contains(&1))
        .unwrap();
    let failed: Vec<u8> = rules::check_all(&ma, c).iter().filter(|v| !v.passed).map(|v| v.rule).collect();
    assert_eq!(failed, vec![9]);
    let r = extract::apply(&ma, c).unwrap();
    let inputs = interp::random_inputs(&pa.program, "SortAndNormalize", 20, 7).unwrap();
    let eq = interp::equivalent(&pa.program, &r.program, "SortAndNormalize", &inputs, 1_000_000).unwrap();
    assert!(!eq.equivalent);
}
