//! Preconditions that reject extract-method candidates.
//!
//! Rules 1-5 and 7-9 are predicates over a single candidate. Rule 6 picks
//! among candidates whose output slices overlap heavily and runs last.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::analysis::MethodAnalysis;
use crate::extract::{self, ExtractError, ExtractPlan};
use crate::facts::StmtFacts;
use crate::graphs::ENTRY;
use crate::lang::{Expr, Method, Stmt, StmtId, StmtKind};
use crate::outputs::{self, OutputCategory, Origin, SlicingCriterion};
use crate::slicer::{self, ExtractCandidate};

pub const DEFAULT_MAX_OVERLAP: f64 = 0.75;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RuleVerdict {
    pub rule: u8,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl RuleVerdict {
    pub fn pass(rule: u8) -> Self {
        RuleVerdict {
            rule,
            passed: true,
            reason: None,
        }
    }

    pub fn fail(rule: u8, reason: impl Into<String>) -> Self {
        RuleVerdict {
            rule,
            passed: false,
            reason: Some(reason.into()),
        }
    }

    fn from(rule: u8, failure: Option<String>) -> Self {
        match failure {
            None => Self::pass(rule),
            Some(r) => Self::fail(rule, r),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OverlapReport {
    pub pair: (StmtId, StmtId),
    pub common: BTreeSet<StmtId>,
    pub slice_overlap: f64,
}

fn ids(set: &BTreeSet<StmtId>) -> String {
    set.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(", ")
}

/// Full backward slice of an output instruction over all its variables,
/// including the instruction itself.
pub fn output_slice(ma: &MethodAnalysis<'_>, output: &outputs::OutputInstruction) -> BTreeSet<StmtId> {
    let all: BTreeSet<StmtId> = (1..=ma.method.stmt_count).collect();
    let mut out = BTreeSet::from([output.stmt]);
    for v in &output.variables {
        let c = SlicingCriterion {
            stmt: output.stmt,
            variable: v.clone(),
            origin: Origin::OutputBased,
        };
        out.extend(slicer::backward_slice(ma, &c, &all).expect("statement exists"));
    }
    out
}

/// Rule 1: non-return outputs travel with their slices; returns never move.
pub fn check_rule1(ma: &MethodAnalysis<'_>, cand: &ExtractCandidate) -> RuleVerdict {
    for &s in &cand.extracted {
        if matches!(ma.method.stmt(s).map(|s| &s.kind), Some(StmtKind::Return(_))) {
            return RuleVerdict::fail(1, format!("return statement {s} would move"));
        }
    }
    for o in outputs::classify_outputs(ma) {
        if o.category == OutputCategory::ReturnStmt || cand.extracted.contains(&o.stmt) {
            continue;
        }
        let mut slice = output_slice(ma, &o);
        slice.remove(&o.stmt);
        if slice.is_subset(&cand.stmts) && !slice.is_disjoint(&cand.extracted) {
            return RuleVerdict::fail(
                1,
                format!("output {} stays although its whole slice is extracted", o.stmt),
            );
        }
    }
    RuleVerdict::pass(1)
}

/// Rule 2: every input of the new method holds a value at the call site.
pub fn check_rule2(ma: &MethodAnalysis<'_>, plan: &ExtractPlan) -> RuleVerdict {
    let assigned = extract::assigned_before(ma, plan.call_at);
    let missing: Vec<&str> = plan
        .signature
        .params
        .iter()
        .map(|(n, _)| n.as_str())
        .filter(|n| *n != "this" && !assigned.contains(*n))
        .collect();
    RuleVerdict::from(
        2,
        (!missing.is_empty()).then(|| {
            format!(
                "{} not initialized before statement {}",
                missing.join(", "),
                plan.call_at
            )
        }),
    )
}

fn final_locals(m: &Method) -> BTreeSet<String> {
    let mut out: BTreeSet<String> = m.params.iter().filter(|p| p.is_final).map(|p| p.name.clone()).collect();
    for s in m.all_stmts() {
        if let StmtKind::VarDecl(d) = &s.kind {
            if d.is_final {
                out.insert(d.name.clone());
            }
        }
    }
    out
}

/// Rule 3: a node criterion may define a final variable only if that
/// variable is never assigned under a condition.
pub fn check_rule3(ma: &MethodAnalysis<'_>, cand: &ExtractCandidate) -> RuleVerdict {
    let finals = final_locals(ma.method);
    for c in &cand.criteria {
        for x in &ma.facts.get(c.stmt).strong_defs {
            if !finals.contains(x) {
                continue;
            }
            let conditional = outputs::defining_stmts(ma, x)
                .into_iter()
                .find(|&d| ma.graphs.cdg.parent(d) != ENTRY);
            if let Some(d) = conditional {
                return RuleVerdict::fail(
                    3,
                    format!("final '{x}' is a criterion at {} and is assigned under a condition at {d}", c.stmt),
                );
            }
        }
    }
    RuleVerdict::pass(3)
}

/// Ancestors of every statement, outermost first, with the index of the
/// child list (branch) each one is entered through.
fn branches(m: &Method) -> BTreeMap<StmtId, Vec<(StmtId, usize)>> {
    fn walk(list: &[Stmt], stack: &mut Vec<(StmtId, usize)>, out: &mut BTreeMap<StmtId, Vec<(StmtId, usize)>>) {
        for s in list {
            out.insert(s.id, stack.clone());
            for (i, child) in s.child_lists().into_iter().enumerate() {
                stack.push((s.id, i));
                walk(child, stack, out);
                stack.pop();
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(&m.body, &mut Vec::new(), &mut out);
    out
}

fn ancestors(m: &Method) -> BTreeMap<StmtId, Vec<StmtId>> {
    branches(m)
        .into_iter()
        .map(|(s, path)| (s, path.into_iter().map(|(a, _)| a).collect()))
        .collect()
}

fn declarations(m: &Method) -> BTreeMap<String, Vec<StmtId>> {
    let mut out: BTreeMap<String, Vec<StmtId>> = BTreeMap::new();
    for s in m.all_stmts() {
        match &s.kind {
            StmtKind::VarDecl(d)
            | StmtKind::For {
                init: Some(crate::lang::Simple::Decl(d)),
                ..
            } => out.entry(d.name.clone()).or_default().push(s.id),
            _ => {}
        }
    }
    out
}

/// Rule 4: for a name declared in several blocks, the extraction must sit
/// deeper than the innermost statement enclosing all of them. The level is
/// taken over the whole slice since the call replaces its outermost
/// statement. Only names the call site declares are checked (the returned
/// variable and declarations the remaining code still needs); without a
/// plan, every name declared by an extracted statement.
pub fn check_rule4(ma: &MethodAnalysis<'_>, cand: &ExtractCandidate, plan: Option<&ExtractPlan>) -> RuleVerdict {
    let anc = ancestors(ma.method);
    let level = |s: StmtId| anc[&s].len();
    let Some(min_level) = cand.stmts.iter().map(|&s| level(s)).min() else {
        return RuleVerdict::pass(4);
    };
    let all_decls = declarations(ma.method);
    let at_call: BTreeSet<String> = match plan {
        Some(p) => {
            let mut names: BTreeSet<String> = p.call_decls.iter().cloned().collect();
            if p.result_decl.is_some() {
                names.extend(p.signature.ret.iter().map(|(n, _)| n.clone()));
            }
            names
        }
        None => all_decls
            .iter()
            .filter(|(_, ds)| ds.iter().any(|d| cand.extracted.contains(d)))
            .map(|(n, _)| n.clone())
            .collect(),
    };
    for (name, decls) in all_decls {
        if decls.len() < 2 || !at_call.contains(&name) {
            continue;
        }
        let common: Vec<StmtId> = anc[&decls[0]]
            .iter()
            .copied()
            .filter(|a| decls.iter().all(|d| anc[d].contains(a)))
            .collect();
        let common_level = common.last().map_or(0, |&c| level(c));
        if min_level <= common_level {
            return RuleVerdict::fail(
                4,
                format!(
                    "'{name}' is declared at {} and the extraction reaches nesting level {min_level}",
                    decls.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(", ")
                ),
            );
        }
    }
    RuleVerdict::pass(4)
}

/// Rule 5: something besides the call still defines a variable.
pub fn check_rule5(ma: &MethodAnalysis<'_>, cand: &ExtractCandidate) -> RuleVerdict {
    let any = ma
        .method
        .all_stmts()
        .into_iter()
        .any(|s| !cand.extracted.contains(&s.id) && s.defines_value());
    RuleVerdict::from(
        5,
        (!any).then(|| "the remaining method would only call the extracted one".to_string()),
    )
}

fn impure_call(ma: &MethodAnalysis<'_>, f: &StmtFacts) -> bool {
    f.calls
        .iter()
        .any(|c| ma.summaries.get(c).is_some_and(|s| !s.is_pure()))
}

/// Rule 7: duplicated statements must not change state both copies would
/// see: field or element stores, globals, side-effecting calls.
pub fn check_rule7(ma: &MethodAnalysis<'_>, cand: &ExtractCandidate) -> RuleVerdict {
    let bad = cand.duplicated.iter().copied().find(|&s| {
        let f = ma.facts.get(s);
        f.heap_write || f.global_write || f.io || impure_call(ma, f)
    });
    RuleVerdict::from(7, bad.map(|s| format!("duplicated statement {s} changes shared state")))
}

fn allocates(s: &Stmt) -> bool {
    s.own_exprs().iter().any(|e| {
        let mut hit = false;
        e.walk(&mut |x| hit |= matches!(x, Expr::New(_) | Expr::NewArray(..) | Expr::ArrayLit(_)));
        hit
    })
}

/// Rule 8: duplicated statements must not create objects or arrays.
pub fn check_rule8(ma: &MethodAnalysis<'_>, cand: &ExtractCandidate) -> RuleVerdict {
    let bad = cand
        .duplicated
        .iter()
        .copied()
        .find(|&s| ma.method.stmt(s).is_some_and(allocates));
    RuleVerdict::from(8, bad.map(|s| format!("duplicated statement {s} allocates")))
}

fn touches_outside(ma: &MethodAnalysis<'_>, s: StmtId) -> bool {
    let f = ma.facts.get(s);
    f.io || f.may_fail
}

/// Rule 9: moving the slice to the call site must not reorder it with the
/// statements it used to interleave with.
pub fn check_rule9(ma: &MethodAnalysis<'_>, cand: &ExtractCandidate, plan: &ExtractPlan) -> RuleVerdict {
    RuleVerdict::from(9, ordering_hazard(ma, cand, plan))
}

fn ordering_hazard(ma: &MethodAnalysis<'_>, cand: &ExtractCandidate, plan: &ExtractPlan) -> Option<String> {
    let m = ma.method;
    let paths = branches(m);
    let anc = ancestors(m);
    let p = plan.call_at;
    // Statements on different branches of one `if` never both run, unless a
    // loop around the call repeats them.
    let exclusive = |a: StmtId, b: StmtId| {
        paths[&a]
            .iter()
            .any(|&(x, i)| paths[&b].iter().any(|&(y, j)| x == y && i != j))
    };
    let loops: Vec<StmtId> = m
        .all_stmts()
        .into_iter()
        .filter(|s| s.id >= p && matches!(s.kind, StmtKind::While { .. } | StmtKind::For { .. }))
        .map(|s| s.id)
        .collect();
    let inside = |s: StmtId, l: StmtId| s == l || anc[&s].contains(&l);
    let between = |a: StmtId, b: StmtId| {
        (p <= a && a < b && !exclusive(a, b)) || loops.iter().any(|&l| inside(a, l) && inside(b, l))
    };
    let params: BTreeSet<String> = plan.signature.params.iter().map(|(n, _)| n.clone()).collect();
    let ret: BTreeSet<String> = plan.signature.ret.iter().map(|(n, _)| n.clone()).collect();
    let is_return = |s: StmtId| matches!(m.stmt(s).map(|s| &s.kind), Some(StmtKind::Return(_)));
    let first = |set: BTreeSet<String>| set.into_iter().next();

    for &b in &cand.stmts {
        let fb = ma.facts.get(b);
        if b < p && !loops.iter().any(|&l| inside(b, l)) {
            // A duplicated statement before the call runs again at the call,
            // reading parameters whose values are taken at the call.
            for a in b..p {
                if plan.extracted.contains(&a) {
                    continue;
                }
                // Heap and global effects of duplicated statements are Rule 7's.
                let fa = ma.facts.get(a);
                let changed = &fa.defs() & &fb.uses;
                if let Some(x) = changed.iter().find(|x| {
                    !cand.stmts.contains(&a) && a > b || params.contains(*x) && fa.strong_defs.contains(*x)
                }) {
                    return Some(format!("{a} changes '{x}' between duplicated {b} and the call"));
                }
            }
            continue;
        }
        let moved = plan.extracted.contains(&b);
        // What the caller can observe of b's effects.
        let mut visible: BTreeSet<String> = fb.weak_defs.clone();
        visible.extend(
            fb.strong_defs
                .iter()
                .filter(|v| ret.contains(*v) || ma.facts.is_global(v))
                .cloned(),
        );
        let external = !fb.weak_defs.is_empty() || fb.global_write || fb.io;
        for a in 1..=m.stmt_count {
            if a == b || plan.extracted.contains(&a) || !between(a, b) {
                continue;
            }
            let fa = ma.facts.get(a);
            if !cand.stmts.contains(&a) {
                if let Some(x) = first(&fa.defs() & &fb.uses) {
                    return Some(format!("{a} changes '{x}' before {b} reads it"));
                }
                if touches_outside(ma, a) && touches_outside(ma, b) {
                    return Some(format!("{a} and {b} both have effects whose order would change"));
                }
                if is_return(a) && touches_outside(ma, b) {
                    return Some(format!("{b} could run although {a} returns first"));
                }
            }
            if moved {
                if let Some(x) = first(&fa.uses & &visible) {
                    return Some(format!("{a} reads '{x}' before {b} assigns it"));
                }
                if let Some(x) = first(&fa.defs() & &visible) {
                    return Some(format!("{a} and {b} both assign '{x}'"));
                }
                if is_return(a) && external {
                    return Some(format!("{b} has effects although {a} returns first"));
                }
            }
        }
    }
    None
}

/// Rules 1-5 and 7-9 in rule order. When the candidate cannot be laid out
/// as a method at all, the reason is reported under Rule 9 and Rule 2 is
/// not evaluated.
pub fn check_all(ma: &MethodAnalysis<'_>, cand: &ExtractCandidate) -> Vec<RuleVerdict> {
    let plan = extract::plan(ma, cand);
    let (r2, r9) = match &plan {
        Ok(p) => (check_rule2(ma, p), check_rule9(ma, cand, p)),
        Err(e) => (RuleVerdict::pass(2), RuleVerdict::fail(9, plan_failure(e))),
    };
    vec![
        check_rule1(ma, cand),
        r2,
        check_rule3(ma, cand),
        check_rule4(ma, cand, plan.as_ref().ok()),
        check_rule5(ma, cand),
        check_rule7(ma, cand),
        check_rule8(ma, cand),
        r9,
    ]
}

fn plan_failure(e: &ExtractError) -> String {
    match e {
        ExtractError::Structure(s) => s.clone(),
        other => other.to_string(),
    }
}

fn jaccard(a: &BTreeSet<StmtId>, b: &BTreeSet<StmtId>) -> (BTreeSet<StmtId>, f64) {
    let common: BTreeSet<StmtId> = a & b;
    let union = a.union(b).count();
    let ratio = if union == 0 {
        0.0
    } else {
        common.len() as f64 / union as f64
    };
    (common, ratio)
}

/// Pairwise overlap of full output slices, by ascending output ids.
pub fn slice_overlap(slices: &BTreeMap<StmtId, BTreeSet<StmtId>>) -> Vec<OverlapReport> {
    let keys: Vec<StmtId> = slices.keys().copied().collect();
    let mut out = Vec::new();
    for (i, &a) in keys.iter().enumerate() {
        for &b in &keys[i + 1..] {
            let (common, slice_overlap) = jaccard(&slices[&a], &slices[&b]);
            out.push(OverlapReport {
                pair: (a, b),
                common,
                slice_overlap,
            });
        }
    }
    out
}

/// Full slices of the non-return output instructions of a method.
pub fn output_slices(ma: &MethodAnalysis<'_>) -> BTreeMap<StmtId, BTreeSet<StmtId>> {
    outputs::classify_outputs(ma)
        .iter()
        .map(|o| (o.stmt, output_slice(ma, o)))
        .collect()
}

/// Rule 6: outputs whose slices overlap above `max_overlap` form groups;
/// in each group only candidates of the output sharing the most statements
/// with the others survive (ties go to the lower statement id). Returns one
/// verdict per candidate, in order.
pub fn check_rule6(
    reports: &[OverlapReport],
    candidates: &[&ExtractCandidate],
    max_overlap: f64,
) -> Vec<RuleVerdict> {
    let mut parent: BTreeMap<StmtId, StmtId> = BTreeMap::new();
    fn find(p: &mut BTreeMap<StmtId, StmtId>, x: StmtId) -> StmtId {
        let up = *p.entry(x).or_insert(x);
        if up == x {
            x
        } else {
            let r = find(p, up);
            p.insert(x, r);
            r
        }
    }
    let high: Vec<&OverlapReport> = reports.iter().filter(|r| r.slice_overlap > max_overlap).collect();
    for r in &high {
        let (a, b) = (find(&mut parent, r.pair.0), find(&mut parent, r.pair.1));
        if a != b {
            parent.insert(a.max(b), a.min(b));
        }
    }
    let members: Vec<StmtId> = parent.keys().copied().collect();
    let mut groups: BTreeMap<StmtId, Vec<StmtId>> = BTreeMap::new();
    for x in members {
        let root = find(&mut parent, x);
        groups.entry(root).or_default().push(x);
    }
    // Output -> (winner, tied).
    let mut winner: BTreeMap<StmtId, (StmtId, bool)> = BTreeMap::new();
    for outs in groups.values() {
        let score = |o: StmtId| -> usize {
            reports
                .iter()
                .filter(|r| r.pair.0 == o && outs.contains(&r.pair.1) || r.pair.1 == o && outs.contains(&r.pair.0))
                .map(|r| r.common.len())
                .sum()
        };
        let best = outs.iter().map(|&o| score(o)).max().unwrap_or(0);
        let tops: Vec<StmtId> = outs.iter().copied().filter(|&o| score(o) == best).collect();
        for &o in outs {
            winner.insert(o, (tops[0], tops.len() > 1));
        }
    }
    candidates
        .iter()
        .map(|c| {
            let Some(out) = c.output_stmt.filter(|_| c.algorithm == Origin::OutputBased) else {
                return RuleVerdict::pass(6);
            };
            match winner.get(&out) {
                Some(&(w, tied)) if w != out => {
                    let tie = if tied { " (tie broken by lower id)" } else { "" };
                    RuleVerdict::fail(
                        6,
                        format!("slice of output {out} overlaps output {w} above {max_overlap}{tie}"),
                    )
                }
                _ => RuleVerdict::pass(6),
            }
        })
        .collect()
}

/// Output ids named in the verdict set, for tests and reports.
pub fn common_ids(r: &OverlapReport) -> String {
    ids(&r.common)
}
