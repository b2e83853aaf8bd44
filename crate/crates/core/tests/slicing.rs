use std::collections::BTreeSet;

use emslice::analysis::ProgramAnalysis;
use emslice::outputs::{self, OutputCategory, Origin, SlicingCriterion};
use emslice::slicer;

fn set(xs: impl IntoIterator<Item = u32>) -> BTreeSet<u32> {
    xs.into_iter().collect()
}

fn fixture(name: &str) -> ProgramAnalysis {
    let path = format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    ProgramAnalysis::parse(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn crit(stmt: u32, var: &str) -> SlicingCriterion {
    SlicingCriterion {
        stmt,
        variable: var.to_string(),
        origin: Origin::CompleteComputation,
    }
}

#[test]
fn delete_parent_slices() {
    let pa = fixture("delete_parent.mj");
    let ma = pa.method("deleteParent").unwrap();
    let all = set(1..=13);
    let mut s = slicer::backward_slice(&ma, &crit(13, "iparent2"), &all).unwrap();
    s.remove(&13);
    assert_eq!(s, set(1..=6));
    let r5 = &ma.regions.region[&5];
    assert_eq!(slicer::backward_slice(&ma, &crit(6, "iparent2"), r5).unwrap(), set([6]));

    let slices = slicer::block_based_slices(&ma, &crit(6, "iparent2")).unwrap();
    let got: Vec<(usize, BTreeSet<u32>)> = slices.into_iter().map(|s| (s.anchor, s.stmts)).collect();
    assert_eq!(
        got,
        vec![
            (1, set(1..=6)),
            (2, set(2..=6)),
            (4, set([4, 5, 6])),
            (5, set([6]))
        ]
    );

    let (extracted, dup) = slicer::partition_duplicated(&ma, &set(1..=6), "iparent2");
    assert!(dup.is_superset(&set([1, 2, 3])), "{dup:?}");
    assert_eq!(extracted, set([4, 5, 6]));
}

#[test]
fn sort_and_normalize_output_based() {
    let pa = fixture("sort_and_normalize.mj");
    let ma = pa.method("SortAndNormalize").unwrap();
    let outs = outputs::classify_outputs(&ma);
    let ids: Vec<u32> = outs.iter().map(|o| o.stmt).collect();
    assert_eq!(ids, vec![8, 18]);
    assert!(outs.iter().all(|o| o.category == OutputCategory::PrintStream));
    let criteria: Vec<(u32, String)> = outputs::output_criteria(&outs)
        .into_iter()
        .map(|c| (c.stmt, c.variable))
        .collect();
    assert_eq!(criteria, vec![(8, "ArrayIn".into()), (18, "ArrayIn".into())]);

    let osc = outputs::node_criteria(&ma, "ArrayIn", &outs);
    assert_eq!(osc.node_criteria, vec![set([6, 7]), set([13, 14, 15, 16])]);
    let bi: Vec<BTreeSet<usize>> = vec![(1..=5).collect(), [1, 2, 6, 7, 8].into_iter().collect()];
    assert_eq!(osc.boundary_intersection, bi);

    let cands = slicer::output_based_slicing(&ma, &outs);
    let got: Vec<(Option<u32>, usize, BTreeSet<u32>)> = cands
        .iter()
        .map(|c| {
            let mut s = c.stmts.clone();
            s.remove(&c.output_stmt.unwrap());
            (c.output_stmt, c.anchor, s)
        })
        .collect();
    assert_eq!(
        got,
        vec![
            (Some(8), 1, set(1..=7)),
            (Some(8), 2, set(2..=7)),
            (Some(8), 3, set(3..=7)),
            (Some(8), 4, set(4..=7)),
            (Some(8), 5, set(5..=7)),
            (Some(18), 6, set(9..=17)),
            (Some(18), 7, set(10..=17)),
            (Some(18), 8, set(11..=16)),
        ]
    );
    assert_eq!(cands[0].duplicated, set([1]));
}

#[test]
fn sort_and_normalize_complete_computation() {
    let pa = fixture("sort_and_normalize.mj");
    let ma = pa.method("SortAndNormalize").unwrap();
    let all = set(1..=18);
    assert_eq!(
        slicer::backward_slice(&ma, &crit(2, "i"), &all).unwrap(),
        set([1, 2])
    );
    let os = slicer::object_state_slices(&ma);
    let b1 = os.iter().find(|c| c.variable == "ArrayIn" && c.anchor == 1).unwrap();
    let want: BTreeSet<u32> = (1..=7).chain(9..=17).collect();
    assert_eq!(b1.stmts, want);
}

#[test]
fn multi_variable_output_yields_one_criterion_each() {
    let src = "int f(int a) { int x = a + 1; int y = a * 2; print(x + y); return x; }";
    let pa = ProgramAnalysis::parse(src).unwrap();
    let ma = pa.method("f").unwrap();
    let outs = outputs::classify_outputs(&ma);
    let c: Vec<(u32, String)> = outputs::output_criteria(&outs)
        .into_iter()
        .map(|c| (c.stmt, c.variable))
        .collect();
    assert_eq!(c, vec![(3, "x".into()), (3, "y".into()), (4, "x".into())]);
}

#[test]
fn call_with_captured_result_is_not_an_output() {
    let src = "int g(int v) { return v; } void f(int x) { int y = g(x); g(y); }";
    let pa = ProgramAnalysis::parse(src).unwrap();
    let ma = pa.method("f").unwrap();
    let outs = outputs::classify_outputs(&ma);
    assert_eq!(outs.len(), 1);
    assert_eq!(outs[0].stmt, 2);
    assert_eq!(outs[0].category, OutputCategory::CallNoResult);
}
