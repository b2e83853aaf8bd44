use std::collections::BTreeSet;

use emslice::analysis::ProgramAnalysis;
use emslice::regions::{boundary_blocks, inter_output_restrict, reachable_blocks};

fn set<T: Ord + Copy>(xs: impl IntoIterator<Item = T>) -> BTreeSet<T> {
    xs.into_iter().collect()
}

fn fixture(name: &str) -> ProgramAnalysis {
    let path = format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    ProgramAnalysis::parse(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn delete_parent_blocks_and_tables() {
    let pa = fixture("delete_parent.mj");
    let ma = pa.method("deleteParent").unwrap();
    let blocks: Vec<Vec<u32>> = ma.graphs.cfg.blocks.iter().map(|b| b.stmts.clone()).collect();
    assert_eq!(
        blocks,
        vec![
            vec![1],
            vec![2],
            vec![3],
            vec![4, 5],
            vec![6],
            vec![7, 8],
            vec![9],
            vec![10, 11],
            vec![12],
            vec![13]
        ]
    );
    let loops: Vec<(usize, usize)> = ma
        .graphs
        .cfg
        .edges
        .iter()
        .filter(|e| e.loopback)
        .map(|e| (e.from, e.to))
        .collect();
    assert_eq!(loops, vec![(3, 2)]);
    let ra = &ma.regions;
    assert_eq!(ra.reach[&5], set(5..=10));
    assert_eq!(ra.dom[&5], set([5]));
    assert_eq!(ra.dom[&7], set([7, 8, 9]));
    assert_eq!(ra.boundary[&6], set([1, 2, 4, 5]));
    assert_eq!(
        boundary_blocks(&ma.graphs.cfg, &ma.graphs.cdg, 6).unwrap(),
        set([1, 2, 4, 5])
    );
    assert_eq!(ra.region[&1], set(1..=13));
    assert_eq!(ra.region[&2], set(2..=13));
    assert_eq!(ra.region[&4], set(4..=13));
    assert_eq!(ra.region[&5], set(6..=13));
    assert!(reachable_blocks(&ma.graphs.cfg, 99).is_err());
}

#[test]
fn sort_and_normalize_regions() {
    let pa = fixture("sort_and_normalize.mj");
    let ma = pa.method("SortAndNormalize").unwrap();
    let ra = &ma.regions;
    let expect: [(usize, BTreeSet<u32>); 8] = [
        (1, set(1..=18)),
        (2, set(2..=18)),
        (3, set(3..=7)),
        (4, set(4..=7)),
        (5, set(5..=7)),
        (6, set(8..=18)),
        (7, set(10..=18)),
        (8, set(11..=17)),
    ];
    for (b, s) in expect {
        assert_eq!(ra.region[&b], s, "R(B{b})");
    }
    let r6 = inter_output_restrict(&ra.region[&6], &[8, 18], 18).unwrap();
    assert_eq!(r6, set(9..=17));
    assert!(inter_output_restrict(&ra.region[&6], &[8, 18], 9).is_err());
}

#[test]
fn straight_line_is_one_block() {
    let pa = ProgramAnalysis::parse("void f() { int a = 1; int b = a; print(b); }").unwrap();
    let ma = pa.method("f").unwrap();
    assert_eq!(ma.graphs.cfg.blocks.len(), 1);
    assert_eq!(ma.regions.dom[&1], set([1]));
}

#[test]
fn while_loop_shape() {
    let pa = ProgramAnalysis::parse("void f(int n) { while (n > 0) { n = n - 1; } }").unwrap();
    let ma = pa.method("f").unwrap();
    let e: Vec<(usize, usize, bool)> =
        ma.graphs.cfg.edges.iter().map(|e| (e.from, e.to, e.loopback)).collect();
    assert_eq!(e, vec![(1, 2, false), (2, 1, true)]);
}
