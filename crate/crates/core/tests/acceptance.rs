//! One PASS/FAIL line per acceptance criterion.

mod common;

use std::collections::BTreeSet;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use emslice::analysis::ProgramAnalysis;
use emslice::eval::{self, EvalReport, MethodCounts};
use emslice::extract::{self, ExtractError};
use emslice::interp;
use emslice::metrics::{self, CohesionMode};
use emslice::outputs::{self, Origin, SlicingCriterion};
use emslice::rules;
use emslice::slicer::{self, ExtractCandidate};
use emslice::suggest::{self, SuggestConfig};

type Outcome = Result<String, String>;

const REGION_BUDGET: Duration = Duration::from_secs(1);
const ORACLE_BUDGET: Duration = Duration::from_secs(60);
const ORACLE_CASES: u64 = 500;
const MIN_APPLIED: usize = 30;
const INPUTS_PER_CASE: usize = 20;
const INPUT_SEED: u64 = 7;
const FUEL: u64 = 1_000_000;
const EXACT: f64 = 1e-12;

fn set<T: Ord + Copy>(xs: impl IntoIterator<Item = T>) -> BTreeSet<T> {
    xs.into_iter().collect()
}

fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn fixture(name: &str) -> ProgramAnalysis {
    ProgramAnalysis::parse(&std::fs::read_to_string(fixture_path(name)).unwrap()).unwrap()
}

fn check(cond: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what())
    }
}

fn eq<T: PartialEq + std::fmt::Debug>(label: &str, got: T, want: T) -> Result<(), String> {
    check(got == want, || format!("{label}: got {got:?}, want {want:?}"))
}

fn crit(stmt: u32, var: &str) -> SlicingCriterion {
    SlicingCriterion {
        stmt,
        variable: var.to_string(),
        origin: Origin::CompleteComputation,
    }
}

fn criterion1() -> Outcome {
    let t = Instant::now();
    let pa = fixture("delete_parent.mj");
    let ma = pa.method("deleteParent").unwrap();
    let ra = &ma.regions;
    eq("Reach(B5)", &ra.reach[&5], &set(5..=10))?;
    eq("Dom(B5)", &ra.dom[&5], &set([5]))?;
    eq("Dom(B7)", &ra.dom[&7], &set([7, 8, 9]))?;
    eq("boundary(6)", &ra.boundary[&6], &set([1, 2, 4, 5]))?;
    for (b, want) in [(1, set(1..=13)), (2, set(2..=13)), (3, set([3])), (4, set(4..=13)), (5, set(6..=13))] {
        eq(&format!("R(B{b})"), &ra.region[&b], &want)?;
    }
    let slices: Vec<(usize, BTreeSet<u32>)> = slicer::block_based_slices(&ma, &crit(6, "iparent2"))
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|s| (s.anchor, s.stmts))
        .collect();
    eq(
        "expanded slices",
        slices,
        vec![(1, set(1..=6)), (2, set(2..=6)), (4, set([4, 5, 6])), (5, set([6]))],
    )?;
    let elapsed = t.elapsed();
    check(elapsed < REGION_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!("tables and 4 slices exact, {elapsed:?}"))
}

fn criterion2() -> Outcome {
    let t = Instant::now();
    let pa = fixture("sort_and_normalize.mj");
    let ma = pa.method("SortAndNormalize").unwrap();
    let outs = outputs::classify_outputs(&ma);
    let osc = outputs::node_criteria(&ma, "ArrayIn", &outs);
    eq("nodeCriteria", &osc.node_criteria, &vec![set([6, 7]), set([13, 14, 15, 16])])?;
    eq(
        "boundary intersection",
        &osc.boundary_intersection,
        &vec![set(1..=5), set([1, 2, 6, 7, 8])],
    )?;
    let regions = [
        (1, set(1..=18)),
        (2, set(2..=18)),
        (3, set(3..=7)),
        (4, set(4..=7)),
        (5, set(5..=7)),
        (6, set(8..=18)),
        (7, set(10..=18)),
        (8, set(11..=17)),
    ];
    for (b, want) in regions {
        eq(&format!("R(B{b})"), &ma.regions.region[&b], &want)?;
    }
    let got: Vec<(Option<u32>, usize, BTreeSet<u32>)> = slicer::output_based_slicing(&ma, &outs)
        .into_iter()
        .map(|c| {
            let mut s = c.stmts.clone();
            s.remove(&c.output_stmt.unwrap());
            (c.output_stmt, c.anchor, s)
        })
        .collect();
    let want = vec![
        (Some(8), 1, set(1..=7)),
        (Some(8), 2, set(2..=7)),
        (Some(8), 3, set(3..=7)),
        (Some(8), 4, set(4..=7)),
        (Some(8), 5, set(5..=7)),
        (Some(18), 6, set(9..=17)),
        (Some(18), 7, set(10..=17)),
        (Some(18), 8, set(11..=16)),
    ];
    eq("candidates", got, want)?;
    let elapsed = t.elapsed();
    check(elapsed < REGION_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!("criteria, 8 regions, 8 candidates exact, {elapsed:?}"))
}

fn criterion3() -> Outcome {
    let t = Instant::now();
    let mut criteria = 0;
    let mut largest = 0;
    for seed in 0..ORACLE_CASES {
        let src = common::random_program(seed);
        let n = common::stmt_count(&src);
        check(n as usize <= common::MAX_STMTS, || format!("seed {seed}: {n} statements"))?;
        largest = largest.max(n);
        criteria += common::check_entry_slices(&src).map_err(|e| format!("seed {seed}: {e}"))?;
    }
    let elapsed = t.elapsed();
    check(elapsed < ORACLE_BUDGET, || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{ORACLE_CASES} methods (up to {largest} statements), {criteria} criteria equal to the oracle, {elapsed:?}"
    ))
}

/// One applied rule-passing refactoring of the corpus.
struct Applied {
    method: String,
    candidate: ExtractCandidate,
    before: ProgramAnalysis,
    after: ProgramAnalysis,
    new_method: String,
}

fn corpus_files() -> Vec<PathBuf> {
    let mut files = Vec::new();
    for dir in [fixture_path(""), fixture_path("corpus")] {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.extension().is_some_and(|x| x == "mj") {
                files.push(p);
            }
        }
    }
    files.sort();
    files
}

fn applied_corpus() -> Result<Vec<Applied>, String> {
    let mut out = Vec::new();
    for file in corpus_files() {
        let pa = ProgramAnalysis::parse(&std::fs::read_to_string(&file).unwrap()).unwrap();
        for rep in suggest::suggest(&pa, None, &SuggestConfig::default()).map_err(|e| e.to_string())? {
            let ma = pa.method(&rep.method).unwrap();
            for s in rep.accepted() {
                let r = extract::apply(&ma, &s.candidate)
                    .map_err(|e| format!("{}::{} {:?}: {e}", file.display(), rep.method, s.candidate.extracted))?;
                out.push(Applied {
                    method: rep.method.clone(),
                    candidate: s.candidate.clone(),
                    before: pa.clone(),
                    after: ProgramAnalysis::new(r.program),
                    new_method: r.new_method,
                });
            }
        }
    }
    Ok(out)
}

/// Applies a candidate regardless of verdicts: true when the result is
/// ill-typed or behaves differently.
fn forced_breaks(pa: &ProgramAnalysis, method: &str, c: &ExtractCandidate) -> Result<bool, String> {
    let ma = pa.method(method).unwrap();
    match extract::apply(&ma, c) {
        Err(ExtractError::IllTyped(_)) => Ok(true),
        Err(e) => Err(e.to_string()),
        Ok(r) => {
            let inputs = interp::random_inputs(&pa.program, method, INPUTS_PER_CASE, INPUT_SEED).unwrap();
            Ok(!interp::equivalent(&pa.program, &r.program, method, &inputs, FUEL)
                .map_err(|e| e.to_string())?
                .equivalent)
        }
    }
}

// (rule, fixture, method, extracted, duplicated)
type Probe = (u8, &'static str, &'static str, Vec<u32>, Vec<u32>);

fn criterion4(corpus: &[Applied]) -> Outcome {
    check(corpus.len() >= MIN_APPLIED, || format!("only {} applied", corpus.len()))?;
    for a in corpus {
        let inputs = interp::random_inputs(&a.before.program, &a.method, INPUTS_PER_CASE, INPUT_SEED).unwrap();
        let r = interp::equivalent(&a.before.program, &a.after.program, &a.method, &inputs, FUEL)
            .map_err(|e| e.to_string())?;
        check(r.equivalent, || {
            format!("{} {:?} diverges: {:?}", a.method, a.candidate.extracted, r.divergence)
        })?;
    }
    let probes: [Probe; 6] = [
        (2, "rule2_sign.mj", "sign", vec![6], vec![4]),
        (3, "rule3_pick.mj", "pick", vec![1, 3], vec![2]),
        (4, "rule4_calculate.mj", "calculate", vec![2, 3, 4], vec![1]),
        (7, "rule7_shift.mj", "shift", vec![4, 5], vec![1, 2]),
        (8, "rule8_make.mj", "make", vec![2, 3], vec![1]),
        (9, "sort_and_normalize.mj", "SortAndNormalize", (2..=7).chain(9..=17).collect(), vec![]),
    ];
    let unfiltered = SuggestConfig {
        min_extract_size: 0,
        ..SuggestConfig::default()
    };
    for (rule, file, method, e, d) in probes {
        let pa = fixture(file);
        let ma = pa.method(method).unwrap();
        let c = suggest::candidates(&ma, &unfiltered)
            .into_iter()
            .find(|c| c.extracted == set(e.iter().copied()) && c.duplicated == set(d.iter().copied()))
            .ok_or_else(|| format!("rule {rule}: candidate missing in {file}"))?;
        let failing: Vec<u8> = rules::check_all(&ma, &c).into_iter().filter(|v| !v.passed).map(|v| v.rule).collect();
        eq(&format!("rule {rule} verdicts"), failing, vec![rule])?;
        check(forced_breaks(&pa, method, &c)?, || format!("rule {rule}: forced application is harmless"))?;
    }
    Ok(format!(
        "{} applied, all traces identical on {INPUTS_PER_CASE} inputs; rules 2,3,4,7,8,9 each break when forced",
        corpus.len()
    ))
}

fn criterion5() -> Outcome {
    let pa = fixture("rule6_shape.mj");
    let ma = pa.method("shape").unwrap();
    let reports = rules::slice_overlap(&rules::output_slices(&ma));
    let r = reports
        .iter()
        .find(|r| r.pair == (20, 25))
        .ok_or("no overlap report for outputs 20 and 25")?;
    check((r.slice_overlap - 16.0 / 21.0).abs() < EXACT, || format!("overlap {}", r.slice_overlap))?;
    let surviving = |max_overlap: f64| -> Vec<u32> {
        let cfg = SuggestConfig {
            max_overlap,
            ..SuggestConfig::default()
        };
        suggest::suggest_method(&ma, &cfg)
            .accepted()
            .filter(|s| s.candidate.algorithm == Origin::OutputBased)
            .filter_map(|s| s.candidate.output_stmt)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    };
    eq("survivors at 0.75", surviving(0.75), vec![20])?;
    eq("survivors at 0.80", surviving(0.80), vec![20, 25])?;
    Ok(format!("overlap {:.3}; 0.75 keeps output 20 only, 0.80 keeps both", r.slice_overlap))
}

fn near(a: Option<f64>, b: f64) -> bool {
    a.is_some_and(|a| (a - b).abs() < EXACT)
}

fn criterion6(corpus: &[Applied]) -> Outcome {
    let trivial = ProgramAnalysis::parse("int f(int a) { int b = a + 1; int c = b * 2; return c; }").unwrap();
    let c = metrics::cohesion(&trivial.method("f").unwrap(), CohesionMode::Output);
    check(near(c.tightness, 1.0) && near(c.overlap, 1.0) && near(c.coverage, 1.0), || {
        format!("trivial method: {:?} {:?} {:?}", c.tightness, c.overlap, c.coverage)
    })?;
    // Two outputs with disjoint 4- and 6-statement slices, 10 statements.
    let disjoint = ProgramAnalysis::parse(
        "void g(int a, int b) {
            int x = a + 1; x = x * 2; x = x - 3; print(x);
            int y = b + 1; y = y * 2; y = y + 3; y = y * 5; y = y - 1; print(y);
        }",
    )
    .unwrap();
    let c = metrics::cohesion(&disjoint.method("g").unwrap(), CohesionMode::Output);
    eq("disjoint slice sizes", c.slices.values().map(BTreeSet::len).collect::<Vec<_>>(), vec![4, 6])?;
    check(near(c.tightness, 0.0) && near(c.overlap, 0.0) && near(c.coverage, 0.5), || {
        format!("disjoint: {:?} {:?} {:?}", c.tightness, c.overlap, c.coverage)
    })?;

    let mean = |a: Option<f64>, b: Option<f64>| match (a, b) {
        (Some(a), Some(b)) => Some((a + b) / 2.0),
        (x, None) | (None, x) => x,
    };
    let mut compared = 0;
    for a in corpus {
        let before = metrics::cohesion(&a.before.method(&a.method).unwrap(), CohesionMode::Output);
        let rem = metrics::cohesion(&a.after.method(&a.method).unwrap(), CohesionMode::Output);
        let ext = metrics::cohesion(&a.after.method(&a.new_method).unwrap(), CohesionMode::Output);
        let (Some(t0), Some(o0)) = (before.tightness, before.overlap) else {
            continue;
        };
        let t = mean(rem.tightness, ext.tightness).ok_or("both parts lost their outputs")?;
        let o = mean(rem.overlap, ext.overlap).ok_or("both parts lost their outputs")?;
        check(t >= t0 - EXACT && o >= o0 - EXACT, || {
            format!(
                "{} {:?}: tightness {t0:.3} -> {t:.3}, overlap {o0:.3} -> {o:.3}",
                a.method, a.candidate.extracted
            )
        })?;
        compared += 1;
    }
    Ok(format!("(1,1,1) and (0,0,0.5) exact; no decrease over {compared} applied refactorings"))
}

fn criterion7() -> Outcome {
    let reference = EvalReport::from_counts(vec![MethodCounts {
        method: "all".into(),
        tp: 152,
        fp: 110,
        fn_: 71,
    }]);
    eq("Pr", eval::percent(reference.overall.precision), "58.0".to_string())?;
    eq("Re", eval::percent(reference.overall.recall), "68.1".to_string())?;
    let rows: Vec<MethodCounts> =
        serde_json::from_str(&std::fs::read_to_string(fixture_path("eval/multi_output_counts.json")).unwrap())
            .map_err(|e| e.to_string())?;
    let r = EvalReport::from_counts(rows);
    eq("sums", (r.tp, r.fp, r.fn_), (74, 37, 24))?;
    eq("Pr", eval::percent(r.overall.precision), "66.6".to_string())?;
    eq("Re", eval::percent(r.overall.recall), "75.5".to_string())?;
    Ok(format!(
        "58.0/68.1 from 152/110/71; 66.6/75.5 from 74/37/24 (average {}/{})",
        eval::percent(r.average.precision),
        eval::percent(r.average.recall)
    ))
}

fn criterion8(corpus: &[Applied]) -> Outcome {
    let mut checked = 0;
    for a in corpus.iter().filter(|a| a.candidate.duplicated.is_empty()) {
        let c0 = metrics::complexity(a.before.program.method(&a.method).unwrap());
        let c1 = metrics::complexity(a.after.program.method(&a.method).unwrap());
        let c2 = metrics::complexity(a.after.program.method(&a.new_method).unwrap());
        check(c1.cyclomatic + c2.cyclomatic == c0.cyclomatic + 1, || {
            format!("{} {:?}: CC {} + {} vs {}", a.method, a.candidate.extracted, c1.cyclomatic, c2.cyclomatic, c0.cyclomatic)
        })?;
        check(c1.max_nesting <= c0.max_nesting && c2.max_nesting <= c0.max_nesting, || {
            format!("{} {:?}: nesting grew", a.method, a.candidate.extracted)
        })?;
        checked += 1;
    }
    check(checked > 0, || "no non-duplicating refactorings".to_string())?;
    Ok(format!("CC conserved and nesting not increased on {checked} non-duplicating refactorings"))
}

fn guarded<T>(f: impl FnOnce() -> Result<T, String>) -> Result<T, String> {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into()))
    })
}

#[test]
fn acceptance() {
    let corpus = guarded(applied_corpus);
    let with_corpus = |f: fn(&[Applied]) -> Outcome| -> Outcome {
        match &corpus {
            Ok(c) => guarded(|| f(c)),
            Err(e) => Err(format!("corpus failed: {e}")),
        }
    };
    let results = [
        (1, guarded(criterion1)),
        (2, guarded(criterion2)),
        (3, guarded(criterion3)),
        (4, with_corpus(criterion4)),
        (5, guarded(criterion5)),
        (6, with_corpus(criterion6)),
        (7, guarded(criterion7)),
        (8, with_corpus(criterion8)),
    ];
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out);
    for (n, r) in &results {
        let _ = match r {
            Ok(detail) => writeln!(out, "criterion {n}: PASS ({detail})"),
            Err(why) => writeln!(out, "criterion {n}: FAIL ({why})"),
        };
    }
    drop(out);
    let failed: Vec<u8> = results.iter().filter(|(_, r)| r.is_err()).map(|(n, _)| *n).collect();
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
