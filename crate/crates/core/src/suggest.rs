//! Candidate generation plus rule filtering for whole methods and programs.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::analysis::{MethodAnalysis, ProgramAnalysis};
use crate::error::AnalysisError;
use crate::extract::{self, Signature};
use crate::outputs::{self, Origin, OutputInstruction};
use crate::rules::{self, OverlapReport, RuleVerdict};
use crate::slicer::{self, ExtractCandidate};

#[derive(Clone, Debug)]
pub struct SuggestConfig {
    /// Rule 6 threshold on the Jaccard overlap of output slices.
    pub max_overlap: f64,
    /// Candidates moving fewer statements are not reported.
    pub min_extract_size: usize,
    /// Candidates whose duplicated share of the slice exceeds this are not
    /// reported.
    pub allow_duplication: f64,
    pub algorithms: BTreeSet<Origin>,
}

impl Default for SuggestConfig {
    fn default() -> Self {
        SuggestConfig {
            max_overlap: rules::DEFAULT_MAX_OVERLAP,
            min_extract_size: 3,
            allow_duplication: 1.0,
            algorithms: [Origin::OutputBased, Origin::CompleteComputation, Origin::ObjectState]
                .into_iter()
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Suggestion {
    pub index: usize,
    pub candidate: ExtractCandidate,
    pub verdicts: Vec<RuleVerdict>,
    pub accepted: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub signature: Option<Signature>,
    pub new_method: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct MethodSuggestions {
    pub method: String,
    pub outputs: Vec<OutputInstruction>,
    pub overlaps: Vec<OverlapReport>,
    pub suggestions: Vec<Suggestion>,
}

impl MethodSuggestions {
    pub fn accepted(&self) -> impl Iterator<Item = &Suggestion> {
        self.suggestions.iter().filter(|s| s.accepted)
    }
}

/// Candidates of the enabled algorithms that pass the size and duplication
/// filters. A statement set already proposed by an earlier algorithm is not
/// repeated.
pub fn candidates(ma: &MethodAnalysis<'_>, cfg: &SuggestConfig) -> Vec<ExtractCandidate> {
    let mut all = Vec::new();
    for alg in &cfg.algorithms {
        match alg {
            Origin::OutputBased => {
                let outs = outputs::classify_outputs(ma);
                all.extend(slicer::output_based_slicing(ma, &outs));
            }
            Origin::CompleteComputation => all.extend(slicer::complete_computation_slices(ma)),
            Origin::ObjectState => all.extend(slicer::object_state_slices(ma)),
        }
    }
    let mut seen: BTreeSet<(BTreeSet<u32>, BTreeSet<u32>)> = BTreeSet::new();
    all.into_iter()
        .filter(|c| c.extracted.len() >= cfg.min_extract_size)
        .filter(|c| c.duplication_ratio() <= cfg.allow_duplication)
        .filter(|c| seen.insert((c.extracted.clone(), c.duplicated.clone())))
        .collect()
}

pub fn suggest_method(ma: &MethodAnalysis<'_>, cfg: &SuggestConfig) -> MethodSuggestions {
    let cands = candidates(ma, cfg);
    let outs = outputs::classify_outputs(ma);
    let overlaps = if outs.len() >= 2 {
        rules::slice_overlap(&rules::output_slices(ma))
    } else {
        Vec::new()
    };
    let refs: Vec<&ExtractCandidate> = cands.iter().collect();
    let r6 = rules::check_rule6(&overlaps, &refs, cfg.max_overlap);
    let suggestions = cands
        .into_iter()
        .zip(r6)
        .enumerate()
        .map(|(index, (c, v6))| {
            let mut verdicts = rules::check_all(ma, &c);
            let at = verdicts.iter().position(|v| v.rule > 6).unwrap_or(verdicts.len());
            verdicts.insert(at, v6);
            Suggestion {
                index,
                accepted: verdicts.iter().all(|v| v.passed),
                signature: extract::infer_signature(ma, &c).ok(),
                new_method: extract::name_method(ma.program, &c),
                verdicts,
                candidate: c,
            }
        })
        .collect();
    MethodSuggestions {
        method: ma.method.name.clone(),
        outputs: outs,
        overlaps,
        suggestions,
    }
}

/// Suggestions for one method, or for every method of the program.
pub fn suggest(
    pa: &ProgramAnalysis,
    method: Option<&str>,
    cfg: &SuggestConfig,
) -> Result<Vec<MethodSuggestions>, AnalysisError> {
    let names: Vec<String> = match method {
        Some(m) => vec![m.to_string()],
        None => pa.program.methods.iter().map(|m| m.name.clone()).collect(),
    };
    names
        .iter()
        .map(|n| Ok(suggest_method(&pa.method(n)?, cfg)))
        .collect()
}
