//! Precision and recall of suggestions against annotated true occurrences.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::lang::{Method, StmtId, StmtKind};

/// The true occurrences (TOs) of one method.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub method: String,
    pub occurrences: Vec<BTreeSet<StmtId>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MatchConfig {
    /// Largest symmetric difference still counted as a match, declarations
    /// aside.
    pub max_diff: usize,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig { max_diff: 2 }
    }
}

/// Statement classes the relaxed matching looks at.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StmtClasses {
    pub var_decls: BTreeSet<StmtId>,
    pub decisions: BTreeSet<StmtId>,
}

impl StmtClasses {
    pub fn of(m: &Method) -> Self {
        let mut c = StmtClasses::default();
        for s in m.all_stmts() {
            if matches!(s.kind, StmtKind::VarDecl(_)) {
                c.var_decls.insert(s.id);
            }
            if s.is_decision() {
                c.decisions.insert(s.id);
            }
        }
        c
    }
}

/// Size of the relevant difference between a suggestion and a TO, or None
/// when they do not match.
pub fn match_distance(
    suggestion: &BTreeSet<StmtId>,
    occurrence: &BTreeSet<StmtId>,
    classes: &StmtClasses,
    cfg: MatchConfig,
) -> Option<usize> {
    let diff: Vec<StmtId> = suggestion
        .symmetric_difference(occurrence)
        .copied()
        .filter(|s| !classes.var_decls.contains(s))
        .collect();
    if diff.len() > cfg.max_diff || diff.iter().any(|s| classes.decisions.contains(s)) {
        return None;
    }
    Some(diff.len())
}

pub fn matches(
    suggestion: &BTreeSet<StmtId>,
    occurrence: &BTreeSet<StmtId>,
    classes: &StmtClasses,
    cfg: MatchConfig,
) -> bool {
    match_distance(suggestion, occurrence, classes, cfg).is_some()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodCounts {
    pub method: String,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl MethodCounts {
    /// Zero when nothing was suggested.
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    /// Zero when the method has no TOs.
    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        f1(self.precision(), self.recall())
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

pub fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub methods: Vec<MethodCounts>,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    /// From the summed counts.
    pub overall: Scores,
    /// Unweighted mean of per-method values.
    pub average: Scores,
}

impl EvalReport {
    pub fn from_counts(methods: Vec<MethodCounts>) -> Self {
        let tp = methods.iter().map(|m| m.tp).sum();
        let fp = methods.iter().map(|m| m.fp).sum();
        let fn_ = methods.iter().map(|m| m.fn_).sum();
        let (p, r) = (ratio(tp, tp + fp), ratio(tp, tp + fn_));
        let n = methods.len().max(1) as f64;
        let mean = |f: fn(&MethodCounts) -> f64| methods.iter().map(f).sum::<f64>() / n;
        let average = Scores {
            precision: mean(MethodCounts::precision),
            recall: mean(MethodCounts::recall),
            f1: mean(MethodCounts::f1),
        };
        EvalReport {
            overall: Scores {
                precision: p,
                recall: r,
                f1: f1(p, r),
            },
            average,
            tp,
            fp,
            fn_,
            methods,
        }
    }

    pub fn table(&self) -> String {
        let mut out = format!("{:<32} {:>4} {:>4} {:>4} {:>7} {:>7} {:>7}\n", "method", "TP", "FP", "FN", "Pr%", "Re%", "F1%");
        for m in &self.methods {
            out.push_str(&format!(
                "{:<32} {:>4} {:>4} {:>4} {:>7} {:>7} {:>7}\n",
                m.method,
                m.tp,
                m.fp,
                m.fn_,
                percent(m.precision()),
                percent(m.recall()),
                percent(m.f1())
            ));
        }
        for (label, s) in [("average", self.average), ("overall", self.overall)] {
            out.push_str(&format!(
                "{:<32} {:>4} {:>4} {:>4} {:>7} {:>7} {:>7}\n",
                label,
                if label == "overall" { self.tp.to_string() } else { String::new() },
                if label == "overall" { self.fp.to_string() } else { String::new() },
                if label == "overall" { self.fn_.to_string() } else { String::new() },
                percent(s.precision),
                percent(s.recall),
                percent(s.f1)
            ));
        }
        out
    }
}

/// Percentage with one decimal, truncated rather than rounded.
pub fn percent(x: f64) -> String {
    // The small epsilon keeps exact values such as 0.58 from dropping a digit.
    format!("{:.1}", ((x * 1000.0) + 1e-9).floor() / 10.0)
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("method '{0}' has suggestions but no ground truth")]
    MissingTruth(String),
    #[error("method '{0}' has more than one ground-truth entry")]
    DuplicateTruth(String),
}

/// TP/FP/FN for one method by greedy one-to-one matching, closest pairs first.
pub fn score_method(
    method: &str,
    suggestions: &[BTreeSet<StmtId>],
    occurrences: &[BTreeSet<StmtId>],
    classes: &StmtClasses,
    cfg: MatchConfig,
) -> MethodCounts {
    let mut pairs = Vec::new();
    for (i, s) in suggestions.iter().enumerate() {
        for (j, t) in occurrences.iter().enumerate() {
            if let Some(d) = match_distance(s, t, classes, cfg) {
                pairs.push((d, i, j));
            }
        }
    }
    pairs.sort();
    let mut used_s = BTreeSet::new();
    let mut used_t = BTreeSet::new();
    for (_, i, j) in pairs {
        if !used_s.contains(&i) && !used_t.contains(&j) {
            used_s.insert(i);
            used_t.insert(j);
        }
    }
    let tp = used_s.len();
    MethodCounts {
        method: method.to_string(),
        tp,
        fp: suggestions.len() - tp,
        fn_: occurrences.len() - tp,
    }
}

/// Scores every method that has ground truth. Methods without classes are
/// matched strictly on statement ids.
pub fn score(
    suggestions: &BTreeMap<String, Vec<BTreeSet<StmtId>>>,
    truths: &[GroundTruth],
    classes: &BTreeMap<String, StmtClasses>,
    cfg: MatchConfig,
) -> Result<EvalReport, EvalError> {
    let mut by_name: BTreeMap<&str, &GroundTruth> = BTreeMap::new();
    for t in truths {
        if by_name.insert(&t.method, t).is_some() {
            return Err(EvalError::DuplicateTruth(t.method.clone()));
        }
    }
    if let Some(m) = suggestions.keys().find(|m| !by_name.contains_key(m.as_str())) {
        return Err(EvalError::MissingTruth(m.clone()));
    }
    let none = StmtClasses::default();
    let methods = truths
        .iter()
        .map(|t| {
            score_method(
                &t.method,
                suggestions.get(&t.method).map_or(&[][..], |v| v),
                &t.occurrences,
                classes.get(&t.method).unwrap_or(&none),
                cfg,
            )
        })
        .collect();
    Ok(EvalReport::from_counts(methods))
}
