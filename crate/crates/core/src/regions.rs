//! Reach, Dom, boundary blocks and block-based regions.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::error::AnalysisError;
use crate::graphs::{BlockId, Cdg, Cfg};
use crate::lang::StmtId;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RegionAnalysis {
    pub reach: BTreeMap<BlockId, BTreeSet<BlockId>>,
    pub dom: BTreeMap<BlockId, BTreeSet<BlockId>>,
    pub boundary: BTreeMap<StmtId, BTreeSet<BlockId>>,
    pub region: BTreeMap<BlockId, BTreeSet<StmtId>>,
}

impl RegionAnalysis {
    pub fn compute(cfg: &Cfg, cdg: &Cdg) -> Self {
        let ids: Vec<BlockId> = cfg.blocks.iter().map(|b| b.id).collect();
        let reach: BTreeMap<_, _> = ids
            .iter()
            .map(|&b| (b, reachable_blocks(cfg, b).expect("block exists")))
            .collect();
        let dom: BTreeMap<_, _> = ids
            .iter()
            .map(|&b| (b, dominated_blocks(cdg, cfg, b).expect("block exists")))
            .collect();
        let region = ids
            .iter()
            .map(|&b| (b, region(cfg, b).expect("block exists")))
            .collect();
        let mut ra = RegionAnalysis {
            reach,
            dom,
            boundary: BTreeMap::new(),
            region,
        };
        for b in &cfg.blocks {
            for &s in &b.stmts {
                let set = boundary_from_tables(&ra.reach, &ra.dom, b.id);
                ra.boundary.insert(s, set);
            }
        }
        ra
    }

    pub fn boundary_blocks(&self, x: StmtId) -> Result<&BTreeSet<BlockId>, AnalysisError> {
        self.boundary.get(&x).ok_or(AnalysisError::UnknownStmt(x))
    }

    pub fn region_of(&self, b: BlockId) -> Result<&BTreeSet<StmtId>, AnalysisError> {
        self.region.get(&b).ok_or(AnalysisError::UnknownBlock(b))
    }
}

fn boundary_from_tables(
    reach: &BTreeMap<BlockId, BTreeSet<BlockId>>,
    dom: &BTreeMap<BlockId, BTreeSet<BlockId>>,
    target: BlockId,
) -> BTreeSet<BlockId> {
    reach
        .keys()
        .copied()
        .filter(|b| reach[b].contains(&target) && dom[b].contains(&target))
        .collect()
}

fn check_block(cfg: &Cfg, b: BlockId) -> Result<(), AnalysisError> {
    cfg.block(b).map(|_| ()).ok_or(AnalysisError::UnknownBlock(b))
}

/// Forward closure from `b` that never follows a loopback edge.
pub fn reachable_blocks(cfg: &Cfg, b: BlockId) -> Result<BTreeSet<BlockId>, AnalysisError> {
    check_block(cfg, b)?;
    let mut seen = BTreeSet::from([b]);
    let mut stack = vec![b];
    while let Some(x) = stack.pop() {
        for y in cfg.forward_successors(x) {
            if seen.insert(y) {
                stack.push(y);
            }
        }
    }
    Ok(seen)
}

/// Blocks whose statements are control dependent (transitively) on the CDG
/// parent of `b`'s statements. For top-level blocks that parent is the entry,
/// so every block qualifies.
pub fn dominated_blocks(cdg: &Cdg, cfg: &Cfg, b: BlockId) -> Result<BTreeSet<BlockId>, AnalysisError> {
    let block = cfg.block(b).ok_or(AnalysisError::UnknownBlock(b))?;
    let parent = cdg.parent(block.stmts[0]);
    let under = cdg.descendants(parent);
    Ok(cfg
        .blocks
        .iter()
        .filter(|blk| under.contains(&blk.stmts[0]))
        .map(|blk| blk.id)
        .collect())
}

/// Blocks `B` such that the block of `x` lies in `Reach(B) ∩ Dom(B)`.
pub fn boundary_blocks(cfg: &Cfg, cdg: &Cdg, x: StmtId) -> Result<BTreeSet<BlockId>, AnalysisError> {
    let target = cfg.block_of(x).ok_or(AnalysisError::UnknownStmt(x))?;
    let mut out = BTreeSet::new();
    for blk in &cfg.blocks {
        if reachable_blocks(cfg, blk.id)?.contains(&target)
            && dominated_blocks(cdg, cfg, blk.id)?.contains(&target)
        {
            out.insert(blk.id);
        }
    }
    Ok(out)
}

/// Statements of every block in `Reach(b)`.
pub fn region(cfg: &Cfg, b: BlockId) -> Result<BTreeSet<StmtId>, AnalysisError> {
    Ok(reachable_blocks(cfg, b)?
        .into_iter()
        .flat_map(|r| cfg.blocks[r - 1].stmts.iter().copied())
        .collect())
}

/// Restricts a region to the statements strictly between the previous output
/// of the same variable and the target output. `outputs` lists the output
/// statements that use the variable.
pub fn inter_output_restrict(
    region: &BTreeSet<StmtId>,
    outputs: &[StmtId],
    target: StmtId,
) -> Result<BTreeSet<StmtId>, AnalysisError> {
    if !outputs.contains(&target) {
        return Err(AnalysisError::NotAnOutput(target));
    }
    let prev = outputs.iter().copied().filter(|&o| o < target).max().unwrap_or(0);
    Ok(region
        .iter()
        .copied()
        .filter(|&s| s > prev && s < target)
        .collect())
}
