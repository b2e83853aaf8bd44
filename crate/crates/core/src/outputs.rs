//! Output instructions and slicing criteria.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::analysis::MethodAnalysis;
use crate::graphs::BlockId;
use crate::lang::{Expr, StmtId, StmtKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputCategory {
    CallNoResult,
    GlobalOrFieldModify,
    PrintStream,
    FileOrDbWrite,
    ReturnStmt,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OutputInstruction {
    pub stmt: StmtId,
    pub category: OutputCategory,
    /// Variables read by the instruction, in first-occurrence order.
    pub variables: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Origin {
    OutputBased,
    CompleteComputation,
    ObjectState,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct SlicingCriterion {
    pub stmt: StmtId,
    pub variable: String,
    pub origin: Origin,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OutputSliceComputation {
    pub variable: String,
    /// Output statements reading the variable, ascending.
    pub outputs: Vec<StmtId>,
    /// One set per output: defining statements strictly after the previous
    /// output of the variable and before this one.
    pub node_criteria: Vec<BTreeSet<StmtId>>,
    /// Per output, the intersection of the boundary blocks of its node criteria.
    pub boundary_intersection: Vec<BTreeSet<BlockId>>,
}

fn vars_of<'e>(ma: &MethodAnalysis<'_>, exprs: impl IntoIterator<Item = &'e Expr>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for e in exprs {
        for v in e.var_names() {
            let known = ma.facts.is_local(v) || ma.facts.is_global(v);
            if known && !out.iter().any(|o| o == v) {
                out.push(v.to_string());
            }
        }
    }
    out
}

/// Every output instruction of the method in id order.
pub fn classify_outputs(ma: &MethodAnalysis<'_>) -> Vec<OutputInstruction> {
    let mut out = Vec::new();
    for s in ma.method.all_stmts() {
        let category = match &s.kind {
            StmtKind::Print(_) => OutputCategory::PrintStream,
            StmtKind::Write { .. } => OutputCategory::FileOrDbWrite,
            StmtKind::Return(Some(_)) => OutputCategory::ReturnStmt,
            StmtKind::Assign(a)
                if ma.facts.is_global(&a.target.root)
                    || (a.target.root == "this" && a.target.has_field()) =>
            {
                OutputCategory::GlobalOrFieldModify
            }
            StmtKind::Call(Expr::Call { receiver, name, .. }) => {
                let Some(summary) = ma.summaries.get(name) else {
                    continue;
                };
                if receiver.is_none() && name == "len" || !summary.mutates_params.is_empty() {
                    continue;
                }
                OutputCategory::CallNoResult
            }
            _ => continue,
        };
        out.push(OutputInstruction {
            stmt: s.id,
            category,
            variables: vars_of(ma, s.own_exprs()),
        });
    }
    out
}

/// One criterion per (output instruction, variable read) pair.
pub fn output_criteria(outputs: &[OutputInstruction]) -> Vec<SlicingCriterion> {
    outputs
        .iter()
        .flat_map(|o| {
            o.variables.iter().map(move |v| SlicingCriterion {
                stmt: o.stmt,
                variable: v.clone(),
                origin: Origin::OutputBased,
            })
        })
        .collect()
}

/// Output variables in order of first appearance.
pub fn output_variables(outputs: &[OutputInstruction]) -> Vec<String> {
    let mut vars: Vec<String> = Vec::new();
    for o in outputs {
        for v in &o.variables {
            if !vars.contains(v) {
                vars.push(v.clone());
            }
        }
    }
    vars
}

/// Statements assigning a value to `var` (declarations without an
/// initializer do not count).
pub fn defining_stmts(ma: &MethodAnalysis<'_>, var: &str) -> Vec<StmtId> {
    ma.method
        .all_stmts()
        .into_iter()
        .filter(|s| {
            let f = ma.facts.get(s.id);
            let bare_decl = matches!(&s.kind, StmtKind::VarDecl(d) if d.init.is_none());
            f.defines(var) && !bare_decl
        })
        .map(|s| s.id)
        .collect()
}

pub fn node_criteria(
    ma: &MethodAnalysis<'_>,
    variable: &str,
    outputs: &[OutputInstruction],
) -> OutputSliceComputation {
    let outs: Vec<StmtId> = outputs
        .iter()
        .filter(|o| o.variables.iter().any(|v| v == variable))
        .map(|o| o.stmt)
        .collect();
    let defs = defining_stmts(ma, variable);
    let mut node_criteria = Vec::new();
    let mut boundary_intersection = Vec::new();
    let mut prev = 0;
    for &o in &outs {
        let nc: BTreeSet<StmtId> = defs.iter().copied().filter(|&d| d > prev && d < o).collect();
        let mut inter: Option<BTreeSet<BlockId>> = None;
        for &d in &nc {
            let b = &ma.regions.boundary[&d];
            inter = Some(match inter {
                None => b.clone(),
                Some(acc) => &acc & b,
            });
        }
        node_criteria.push(nc);
        boundary_intersection.push(inter.unwrap_or_default());
        prev = o;
    }
    OutputSliceComputation {
        variable: variable.to_string(),
        outputs: outs,
        node_criteria,
        boundary_intersection,
    }
}

/// Complete-computation seeds (last definition of every local) and
/// object-state seeds (last state change of every mutated reference).
pub fn other_criteria(ma: &MethodAnalysis<'_>) -> Vec<SlicingCriterion> {
    let params: BTreeSet<&str> = ma.facts.params.iter().map(String::as_str).collect();
    let mut out = Vec::new();
    for var in ma.facts.types.keys() {
        if !params.contains(var.as_str()) {
            if let Some(&last) = defining_stmts(ma, var).last() {
                out.push(SlicingCriterion {
                    stmt: last,
                    variable: var.clone(),
                    origin: Origin::CompleteComputation,
                });
            }
        }
        if ma.facts.is_reference(var) {
            if let Some(&last) = state_changes(ma, var).last() {
                out.push(SlicingCriterion {
                    stmt: last,
                    variable: var.clone(),
                    origin: Origin::ObjectState,
                });
            }
        }
    }
    out.sort_by(|a, b| (a.origin, a.stmt, &a.variable).cmp(&(b.origin, b.stmt, &b.variable)));
    out
}

/// Statements that modify the referent of `var` without rebinding it.
pub fn state_changes(ma: &MethodAnalysis<'_>, var: &str) -> Vec<StmtId> {
    (1..=ma.method.stmt_count)
        .filter(|&s| ma.facts.get(s).weak_defs.contains(var))
        .collect()
}
