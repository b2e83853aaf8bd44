//! Bundles the per-method artifacts every later stage consumes.

use std::collections::HashMap;

use crate::error::AnalysisError;
use crate::facts::{Facts, MethodFacts, MethodSummary};
use crate::graphs::DependenceGraphs;
use crate::lang::{Method, Program};
use crate::regions::RegionAnalysis;

#[derive(Clone, Debug)]
pub struct ProgramAnalysis {
    pub program: Program,
    pub facts: Facts,
}

impl ProgramAnalysis {
    pub fn new(program: Program) -> Self {
        let facts = Facts::new(&program);
        ProgramAnalysis { program, facts }
    }

    pub fn parse(source: &str) -> Result<Self, AnalysisError> {
        Ok(Self::new(crate::lang::parse(source)?))
    }

    pub fn method(&self, name: &str) -> Result<MethodAnalysis<'_>, AnalysisError> {
        let method = self
            .program
            .method(name)
            .ok_or_else(|| AnalysisError::UnknownMethod(name.to_string()))?;
        Ok(MethodAnalysis::new(&self.program, method, &self.facts))
    }
}

#[derive(Clone, Debug)]
pub struct MethodAnalysis<'a> {
    pub program: &'a Program,
    pub method: &'a Method,
    pub facts: &'a MethodFacts,
    pub summaries: &'a HashMap<String, MethodSummary>,
    pub graphs: DependenceGraphs,
    pub regions: RegionAnalysis,
}

impl<'a> MethodAnalysis<'a> {
    pub fn new(program: &'a Program, method: &'a Method, facts: &'a Facts) -> Self {
        let mf = facts.method(&method.name);
        let graphs = DependenceGraphs::build(method, mf);
        let regions = RegionAnalysis::compute(&graphs.cfg, &graphs.cdg);
        MethodAnalysis {
            program,
            method,
            facts: mf,
            summaries: &facts.summaries,
            graphs,
            regions,
        }
    }
}
