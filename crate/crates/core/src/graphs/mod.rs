//! Control flow, program dependence and control dependence graphs.

mod cfg;
mod pdg;

pub use cfg::{build_cfg, BasicBlock, BlockId, Cfg, CfgEdge};
pub use pdg::{build_cdg, build_pdg, Cdg, DataEdge, Pdg, ENTRY};

use std::fmt::Write;

use serde::Serialize;

use crate::facts::MethodFacts;
use crate::lang::Method;

#[derive(Clone, Debug, Serialize)]
pub struct DependenceGraphs {
    pub cfg: Cfg,
    pub pdg: Pdg,
    pub cdg: Cdg,
}

impl DependenceGraphs {
    pub fn build(m: &Method, facts: &MethodFacts) -> Self {
        let cfg = build_cfg(m);
        let pdg = build_pdg(m, &cfg, facts);
        let cdg = build_cdg(&pdg);
        DependenceGraphs { cfg, pdg, cdg }
    }

    /// DOT rendering of all three graphs as clusters of one digraph.
    pub fn to_dot(&self, method: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "digraph \"{method}\" {{");
        let _ = writeln!(s, "  subgraph cluster_cfg {{\n    label=\"CFG\";");
        for b in &self.cfg.blocks {
            let ids: Vec<String> = b.stmts.iter().map(u32::to_string).collect();
            let _ = writeln!(s, "    cfg_B{} [label=\"B{}: {}\"];", b.id, b.id, ids.join(","));
        }
        for e in &self.cfg.edges {
            let _ = writeln!(
                s,
                "    cfg_B{} -> cfg_B{} [kind=flow, loopback={}];",
                e.from, e.to, e.loopback
            );
        }
        s.push_str("  }\n");
        let _ = writeln!(s, "  subgraph cluster_pdg {{\n    label=\"PDG\";");
        for id in 0..=self.pdg.stmt_count {
            let _ = writeln!(s, "    pdg_{id} [label=\"{id}\"];");
        }
        for (c, t) in &self.pdg.control {
            let _ = writeln!(s, "    pdg_{c} -> pdg_{t} [kind=control];");
        }
        for e in &self.pdg.data {
            let _ = writeln!(
                s,
                "    pdg_{} -> pdg_{} [kind=data, label=\"{}\"];",
                e.def, e.use_, e.var
            );
        }
        s.push_str("  }\n");
        let _ = writeln!(s, "  subgraph cluster_cdg {{\n    label=\"CDG\";");
        for id in 0..=self.pdg.stmt_count {
            let _ = writeln!(s, "    cdg_{id} [label=\"{id}\"];");
        }
        for (c, t) in &self.cdg.edges {
            let _ = writeln!(s, "    cdg_{c} -> cdg_{t} [kind=control];");
        }
        s.push_str("  }\n}\n");
        s
    }
}
