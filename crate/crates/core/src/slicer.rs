//! Backward, block-based, output-based, complete-computation and
//! object-state slicing, plus the duplicated/extracted partition.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::analysis::MethodAnalysis;
use crate::error::AnalysisError;
use crate::graphs::{BlockId, Pdg, ENTRY};
use crate::lang::{StmtId, StmtKind};
use crate::outputs::{
    self, OutputCategory, OutputInstruction, Origin, SlicingCriterion,
};
use crate::regions::inter_output_restrict;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Slice {
    pub criteria: Vec<SlicingCriterion>,
    pub anchor: BlockId,
    pub variable: String,
    pub stmts: BTreeSet<StmtId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExtractCandidate {
    pub method: String,
    pub algorithm: Origin,
    pub variable: String,
    /// Region anchor block.
    pub anchor: BlockId,
    pub criteria: Vec<SlicingCriterion>,
    pub output_stmt: Option<StmtId>,
    pub output_category: Option<OutputCategory>,
    /// Slice statements: `extracted ∪ duplicated`. Includes the output
    /// statement (with its controllers) for non-return outputs inside the
    /// anchor's region, and bare declarations of variables the slice assigns.
    pub stmts: BTreeSet<StmtId>,
    pub extracted: BTreeSet<StmtId>,
    pub duplicated: BTreeSet<StmtId>,
    /// Method statements not moved: everything except `extracted`.
    pub remaining: BTreeSet<StmtId>,
}

impl ExtractCandidate {
    /// |duplicated| / |slice|; zero for an empty slice.
    pub fn duplication_ratio(&self) -> f64 {
        if self.stmts.is_empty() {
            0.0
        } else {
            self.duplicated.len() as f64 / self.stmts.len() as f64
        }
    }

    pub fn is_return_seeded(&self) -> bool {
        self.output_category == Some(OutputCategory::ReturnStmt)
    }
}

/// Least fixpoint of the backward closure from `seeds` over data and control
/// edges, never leaving `region`. The synthetic entry is never included.
pub fn backward_closure(
    pdg: &Pdg,
    seeds: impl IntoIterator<Item = StmtId>,
    region: &BTreeSet<StmtId>,
) -> BTreeSet<StmtId> {
    let mut out = BTreeSet::new();
    let mut stack: Vec<StmtId> = Vec::new();
    for s in seeds {
        if region.contains(&s) && out.insert(s) {
            stack.push(s);
        }
    }
    while let Some(s) = stack.pop() {
        for &p in pdg.preds(s) {
            if p != ENTRY && region.contains(&p) && out.insert(p) {
                stack.push(p);
            }
        }
    }
    out
}

/// Statements affecting `criterion.variable` at `criterion.stmt`, including
/// the criterion statement. When the statement only reads the variable, only
/// the definitions of that variable (and the statement's controllers) seed
/// the closure.
pub fn backward_slice(
    ma: &MethodAnalysis<'_>,
    criterion: &SlicingCriterion,
    region: &BTreeSet<StmtId>,
) -> Result<BTreeSet<StmtId>, AnalysisError> {
    let x = criterion.stmt;
    if x == ENTRY || x > ma.method.stmt_count {
        return Err(AnalysisError::UnknownStmt(x));
    }
    if !region.contains(&x) {
        return Err(AnalysisError::CriterionOutsideRegion(x));
    }
    let pdg = &ma.graphs.pdg;
    if ma.facts.get(x).defines(&criterion.variable) {
        return Ok(backward_closure(pdg, [x], region));
    }
    let mut seeds: Vec<StmtId> = pdg
        .data_preds(x)
        .filter(|e| e.var == criterion.variable)
        .map(|e| e.def)
        .collect();
    seeds.push(ma.graphs.cdg.parent(x));
    let mut out = backward_closure(pdg, seeds, region);
    out.insert(x);
    Ok(out)
}

/// One slice per boundary block of the criterion statement, in ascending
/// anchor order.
pub fn block_based_slices(
    ma: &MethodAnalysis<'_>,
    criterion: &SlicingCriterion,
) -> Result<Vec<Slice>, AnalysisError> {
    let boundary = ma.regions.boundary_blocks(criterion.stmt)?;
    boundary
        .iter()
        .map(|&b| {
            let region = ma.regions.region_of(b)?;
            Ok(Slice {
                criteria: vec![criterion.clone()],
                anchor: b,
                variable: criterion.variable.clone(),
                stmts: backward_slice(ma, criterion, region)?,
            })
        })
        .collect()
}

/// Splits slice statements into those that can move and those that the
/// remaining method still needs. Remaining statements are traced backwards;
/// a data edge leaving the slice is not followed when its value is handed
/// back by the call: the seed variable (returned), a global, or an in-place
/// mutation of a referent the slice received from outside.
pub fn partition_duplicated(
    ma: &MethodAnalysis<'_>,
    stmts: &BTreeSet<StmtId>,
    seed: &str,
) -> (BTreeSet<StmtId>, BTreeSet<StmtId>) {
    let pdg = &ma.graphs.pdg;
    // A referent created or rebound inside the slice is not shared with the
    // caller unless returned, so its in-place updates must be recomputed.
    let rebound: BTreeSet<&String> = stmts
        .iter()
        .flat_map(|&s| ma.facts.get(s).strong_defs.iter())
        .collect();
    let mut dup = BTreeSet::new();
    let mut seen: BTreeSet<StmtId> = BTreeSet::new();
    let mut stack: Vec<StmtId> = (1..=ma.method.stmt_count).filter(|s| !stmts.contains(s)).collect();
    seen.extend(stack.iter().copied());
    while let Some(u) = stack.pop() {
        let u_in_slice = stmts.contains(&u);
        let mut push = |p: StmtId, stack: &mut Vec<StmtId>| {
            if p != ENTRY && seen.insert(p) {
                if stmts.contains(&p) {
                    dup.insert(p);
                }
                stack.push(p);
            }
        };
        for e in pdg.data_preds(u) {
            if !u_in_slice && stmts.contains(&e.def) {
                let weak = !ma.facts.get(e.def).strong_defs.contains(&e.var);
                let shared = weak && !rebound.contains(&e.var);
                if e.var == seed || ma.facts.is_global(&e.var) || shared {
                    continue;
                }
            }
            push(e.def, &mut stack);
        }
        push(ma.graphs.cdg.parent(u), &mut stack);
    }
    let extracted = stmts.difference(&dup).copied().collect();
    (extracted, dup)
}

/// Bare declarations (`T x;`) of locals the statements assign, when the
/// declaration lies in `region`.
fn bare_declarations(ma: &MethodAnalysis<'_>, stmts: &BTreeSet<StmtId>, region: &BTreeSet<StmtId>) -> Vec<StmtId> {
    let assigned: BTreeSet<&String> = stmts
        .iter()
        .flat_map(|&s| ma.facts.get(s).strong_defs.iter())
        .collect();
    ma.method
        .all_stmts()
        .into_iter()
        .filter(|s| region.contains(&s.id))
        .filter(|s| matches!(&s.kind, StmtKind::VarDecl(d) if d.init.is_none() && assigned.contains(&d.name)))
        .map(|s| s.id)
        .collect()
}

fn make_candidate(
    ma: &MethodAnalysis<'_>,
    algorithm: Origin,
    slice: Slice,
    output: Option<&OutputInstruction>,
    region: &BTreeSet<StmtId>,
) -> ExtractCandidate {
    let mut stmts = slice.stmts;
    let decls = bare_declarations(ma, &stmts, region);
    stmts.extend(decls);
    let category = output.map(|o| o.category);
    if let Some(o) = output {
        let reachable = ma.regions.region.get(&slice.anchor).is_some_and(|r| r.contains(&o.stmt));
        if o.category == OutputCategory::ReturnStmt {
            stmts.remove(&o.stmt);
        } else if reachable {
            // The output keeps its controllers.
            let region = &ma.regions.region[&slice.anchor];
            let parent = ma.graphs.cdg.parent(o.stmt);
            stmts.extend(backward_closure(&ma.graphs.pdg, [parent], region));
            stmts.insert(o.stmt);
        }
    }
    let (extracted, duplicated) = partition_duplicated(ma, &stmts, &slice.variable);
    let remaining = (1..=ma.method.stmt_count)
        .filter(|s| !extracted.contains(s))
        .collect();
    ExtractCandidate {
        method: ma.method.name.clone(),
        algorithm,
        variable: slice.variable,
        anchor: slice.anchor,
        criteria: slice.criteria,
        output_stmt: output.map(|o| o.stmt),
        output_category: category,
        stmts,
        extracted,
        duplicated,
        remaining,
    }
}

/// Output-based slicing: per output variable and per output instruction, the
/// union of the backward slices of the node criteria inside each region of
/// the boundary-block intersection, limited to the statements after the
/// previous output of the same variable.
pub fn output_based_slicing(
    ma: &MethodAnalysis<'_>,
    outputs: &[OutputInstruction],
) -> Vec<ExtractCandidate> {
    let mut found: BTreeMap<(StmtId, String, BTreeSet<StmtId>), ExtractCandidate> = BTreeMap::new();
    for var in outputs::output_variables(outputs) {
        let osc = outputs::node_criteria(ma, &var, outputs);
        for (k, &out_id) in osc.outputs.iter().enumerate() {
            let nc = &osc.node_criteria[k];
            if nc.is_empty() {
                continue;
            }
            let output = outputs.iter().find(|o| o.stmt == out_id).expect("output exists");
            for &b in &osc.boundary_intersection[k] {
                let region = inter_output_restrict(&ma.regions.region[&b], &osc.outputs, out_id)
                    .expect("target is an output of the variable");
                let stmts = backward_closure(&ma.graphs.pdg, nc.iter().copied(), &region);
                let criteria = nc
                    .iter()
                    .map(|&s| SlicingCriterion {
                        stmt: s,
                        variable: var.clone(),
                        origin: Origin::OutputBased,
                    })
                    .collect();
                let slice = Slice {
                    criteria,
                    anchor: b,
                    variable: var.clone(),
                    stmts: stmts.clone(),
                };
                // Identical slices from nested anchors collapse onto the innermost anchor.
                found.insert(
                    (out_id, var.clone(), stmts),
                    make_candidate(ma, Origin::OutputBased, slice, Some(output), &region),
                );
            }
        }
    }
    let mut out: Vec<ExtractCandidate> = found.into_values().collect();
    out.sort_by(|a, b| {
        (a.output_stmt, a.anchor, &a.variable).cmp(&(b.output_stmt, b.anchor, &b.variable))
    });
    out
}

fn seeded_candidates(
    ma: &MethodAnalysis<'_>,
    origin: Origin,
    extra_seeds: impl Fn(&SlicingCriterion) -> Vec<StmtId>,
) -> Vec<ExtractCandidate> {
    let mut out: Vec<ExtractCandidate> = Vec::new();
    for c in outputs::other_criteria(ma).into_iter().filter(|c| c.origin == origin) {
        let boundary = match ma.regions.boundary_blocks(c.stmt) {
            Ok(b) => b.clone(),
            Err(_) => continue,
        };
        let extra = extra_seeds(&c);
        for b in boundary {
            let region = &ma.regions.region[&b];
            let mut stmts = backward_closure(&ma.graphs.pdg, [c.stmt], region);
            stmts.extend(backward_closure(&ma.graphs.pdg, extra.iter().copied(), region));
            if out.iter().any(|o| o.stmts == stmts) {
                continue;
            }
            let slice = Slice {
                criteria: vec![c.clone()],
                anchor: b,
                variable: c.variable.clone(),
                stmts,
            };
            let cand = make_candidate(ma, origin, slice, None, region);
            if !cand.extracted.is_empty() {
                out.push(cand);
            }
        }
    }
    out
}

/// Block-based slices seeded at the last definition of each local.
pub fn complete_computation_slices(ma: &MethodAnalysis<'_>) -> Vec<ExtractCandidate> {
    seeded_candidates(ma, Origin::CompleteComputation, |_| Vec::new())
}

/// Block-based slices seeded at the last state change of each mutated
/// reference, pulling in every state change of that reference in the region.
pub fn object_state_slices(ma: &MethodAnalysis<'_>) -> Vec<ExtractCandidate> {
    seeded_candidates(ma, Origin::ObjectState, |c| {
        outputs::state_changes(ma, &c.variable)
    })
}
