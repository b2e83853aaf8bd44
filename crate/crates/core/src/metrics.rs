//! Slice-based cohesion (tightness, overlap, coverage) and complexity.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::analysis::MethodAnalysis;
use crate::lang::{Method, Stmt, StmtId, StmtKind};
use crate::outputs::{Origin, SlicingCriterion};
use crate::slicer;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CohesionMode {
    /// Returned, printed or written values, modified globals and mutated
    /// reference parameters.
    Output,
    /// Every local declared in the body.
    All,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CohesionReport {
    pub mode: CohesionMode,
    pub out_set: Vec<String>,
    pub slices: BTreeMap<String, BTreeSet<StmtId>>,
    pub slices_intersect: BTreeSet<StmtId>,
    /// None when the out-set is empty.
    pub tightness: Option<f64>,
    pub overlap: Option<f64>,
    pub coverage: Option<f64>,
    pub length: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ComplexityReport {
    pub loc: usize,
    pub cyclomatic: usize,
    pub max_nesting: usize,
}

fn is_output_stmt(s: &Stmt) -> bool {
    matches!(s.kind, StmtKind::Return(Some(_)) | StmtKind::Print(_) | StmtKind::Write { .. })
}

fn exposes(ma: &MethodAnalysis<'_>, var: &str) -> bool {
    ma.facts.is_global(var) || ma.facts.params.iter().any(|p| p == var) && ma.facts.is_reference(var)
}

/// Statements through which `var` leaves the method: outputs mentioning it,
/// and definitions when it is a global or a reference parameter.
fn output_points(ma: &MethodAnalysis<'_>, var: &str) -> Vec<StmtId> {
    ma.method
        .all_stmts()
        .into_iter()
        .filter(|s| {
            is_output_stmt(s) && expr_vars(s).iter().any(|v| v == var)
                || exposes(ma, var) && ma.facts.get(s.id).defines(var)
        })
        .map(|s| s.id)
        .collect()
}

fn last_defining(ma: &MethodAnalysis<'_>, var: &str) -> Option<StmtId> {
    (1..=ma.method.stmt_count).rev().find(|&s| ma.facts.get(s).defines(var))
}

fn expr_vars(s: &Stmt) -> Vec<String> {
    let mut out = Vec::new();
    for e in s.own_exprs() {
        e.walk(&mut |x| {
            if let crate::lang::Expr::Var(v) = x {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
        });
    }
    out
}

/// The values a method hands back to its environment, in order of first
/// appearance.
pub fn out_set(ma: &MethodAnalysis<'_>, mode: CohesionMode) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let mut add = |v: &str| {
        if !out.iter().any(|o| o == v) {
            out.push(v.to_string());
        }
    };
    match mode {
        CohesionMode::Output => {
            for s in ma.method.all_stmts() {
                let f = ma.facts.get(s.id);
                if is_output_stmt(s) {
                    for v in expr_vars(s) {
                        add(&v);
                    }
                }
                for v in f.defs() {
                    let mutated_param = ma.facts.params.contains(&v)
                        && ma.facts.is_reference(&v)
                        && f.weak_defs.contains(&v);
                    if ma.facts.is_global(&v) || mutated_param {
                        add(&v);
                    }
                }
            }
        }
        CohesionMode::All => {
            for s in ma.method.all_stmts() {
                match &s.kind {
                    StmtKind::VarDecl(d)
                    | StmtKind::For {
                        init: Some(crate::lang::Simple::Decl(d)),
                        ..
                    } => add(&d.name),
                    _ => {}
                }
            }
        }
    }
    out
}

pub fn cohesion(ma: &MethodAnalysis<'_>, mode: CohesionMode) -> CohesionReport {
    let all: BTreeSet<StmtId> = (1..=ma.method.stmt_count).collect();
    let mut slices = BTreeMap::new();
    let mut out = Vec::new();
    for v in out_set(ma, mode) {
        let seeds = match mode {
            CohesionMode::Output => output_points(ma, &v),
            CohesionMode::All => last_defining(ma, &v).into_iter().collect(),
        };
        if seeds.is_empty() {
            continue;
        }
        let mut slice = BTreeSet::new();
        for stmt in seeds {
            let c = SlicingCriterion {
                stmt,
                variable: v.clone(),
                origin: Origin::CompleteComputation,
            };
            slice.extend(slicer::backward_slice(ma, &c, &all).expect("statement exists"));
        }
        slices.insert(v.clone(), slice);
        out.push(v);
    }
    let length = ma.method.stmt_count as usize;
    let mut iter = slices.values();
    let slices_intersect = match iter.next() {
        Some(first) => iter.fold(first.clone(), |acc, s| &acc & s),
        None => BTreeSet::new(),
    };
    let (tightness, overlap, coverage) = if slices.is_empty() || length == 0 {
        (None, None, None)
    } else {
        let k = slices.len() as f64;
        let common = slices_intersect.len() as f64;
        (
            Some(common / length as f64),
            Some(slices.values().map(|s| common / s.len() as f64).sum::<f64>() / k),
            Some(slices.values().map(|s| s.len() as f64 / length as f64).sum::<f64>() / k),
        )
    };
    CohesionReport {
        mode,
        out_set: out,
        slices,
        slices_intersect,
        tightness,
        overlap,
        coverage,
        length,
    }
}

pub fn complexity(m: &Method) -> ComplexityReport {
    fn depth(list: &[Stmt], level: usize) -> usize {
        list.iter()
            .map(|s| {
                s.child_lists()
                    .into_iter()
                    .map(|c| depth(c, level + 1))
                    .max()
                    .unwrap_or(level)
                    .max(level)
            })
            .max()
            .unwrap_or(0)
    }
    let stmts = m.all_stmts();
    ComplexityReport {
        loc: stmts.len(),
        cyclomatic: 1 + stmts.iter().filter(|s| s.is_decision()).count(),
        max_nesting: depth(&m.body, 0),
    }
}

/// Metric values of one method, as used in delta tables.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MethodMetrics {
    pub method: String,
    pub cohesion: CohesionReport,
    pub complexity: ComplexityReport,
}

pub fn method_metrics(ma: &MethodAnalysis<'_>, mode: CohesionMode) -> MethodMetrics {
    MethodMetrics {
        method: ma.method.name.clone(),
        cohesion: cohesion(ma, mode),
        complexity: complexity(ma.method),
    }
}

impl MethodMetrics {
    /// (name, value) pairs in table order.
    pub fn values(&self) -> Vec<(&'static str, Option<f64>)> {
        vec![
            ("tightness", self.cohesion.tightness),
            ("overlap", self.cohesion.overlap),
            ("coverage", self.cohesion.coverage),
            ("loc", Some(self.complexity.loc as f64)),
            ("cc", Some(self.complexity.cyclomatic as f64)),
            ("max_nesting", Some(self.complexity.max_nesting as f64)),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeltaRow {
    pub method: String,
    pub metric: &'static str,
    pub original: Option<f64>,
    pub remaining: Option<f64>,
    pub extracted: Option<f64>,
    /// Remaining minus original.
    pub remain_delta: Option<f64>,
    /// Mean of extracted and remaining, minus original.
    pub combined_delta: Option<f64>,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("cohesion modes differ: {0:?} vs {1:?}")]
pub struct ModeMismatch(pub CohesionMode, pub CohesionMode);

pub fn delta_report(
    before: &MethodMetrics,
    remaining: &MethodMetrics,
    extracted: &MethodMetrics,
) -> Result<Vec<DeltaRow>, ModeMismatch> {
    for other in [remaining, extracted] {
        if other.cohesion.mode != before.cohesion.mode {
            return Err(ModeMismatch(before.cohesion.mode, other.cohesion.mode));
        }
    }
    let r = remaining.values();
    let e = extracted.values();
    Ok(before
        .values()
        .into_iter()
        .enumerate()
        .map(|(i, (metric, original))| {
            let rem = r[i].1;
            let ext = e[i].1;
            DeltaRow {
                method: before.method.clone(),
                metric,
                original,
                remaining: rem,
                extracted: ext,
                remain_delta: rem.zip(original).map(|(r, o)| r - o),
                combined_delta: match (rem, ext, original) {
                    (Some(r), Some(x), Some(o)) => Some((r + x) / 2.0 - o),
                    _ => None,
                },
            }
        })
        .collect())
}

/// CSV with one row per (method, metric).
pub fn delta_csv(rows: &[DeltaRow]) -> String {
    let f = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| format!("{x:.3}"));
    let mut out = String::from("method,metric,original,remaining,extracted,remain_minus_original,combined_minus_original\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.method,
            r.metric,
            f(r.original),
            f(r.remaining),
            f(r.extracted),
            f(r.remain_delta),
            f(r.combined_delta)
        ));
    }
    out
}

/// CSV with one row per method: method, tightness, overlap, coverage, loc,
/// cc, max_nesting.
pub fn metrics_csv(rows: &[MethodMetrics]) -> String {
    let f = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| format!("{x:.3}"));
    let mut out = String::from("method,tightness,overlap,coverage,loc,cc,max_nesting\n");
    for m in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            m.method,
            f(m.cohesion.tightness),
            f(m.cohesion.overlap),
            f(m.cohesion.coverage),
            m.complexity.loc,
            m.complexity.cyclomatic,
            m.complexity.max_nesting
        ));
    }
    out
}
