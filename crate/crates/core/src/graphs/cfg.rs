use std::collections::BTreeSet;

use serde::Serialize;

use crate::lang::{Method, Stmt, StmtId, StmtKind};

/// 1-based block number: `B1` is block id 1.
pub type BlockId = usize;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BasicBlock {
    pub id: BlockId,
    pub stmts: Vec<StmtId>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct CfgEdge {
    pub from: BlockId,
    pub to: BlockId,
    pub loopback: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Cfg {
    pub blocks: Vec<BasicBlock>,
    pub edges: Vec<CfgEdge>,
    #[serde(skip)]
    block_of: Vec<BlockId>,
}

impl Cfg {
    pub fn entry(&self) -> Option<BlockId> {
        (!self.blocks.is_empty()).then_some(1)
    }

    pub fn block(&self, id: BlockId) -> Option<&BasicBlock> {
        id.checked_sub(1).and_then(|i| self.blocks.get(i))
    }

    /// Block containing a statement, or `None` for unknown ids.
    pub fn block_of(&self, stmt: StmtId) -> Option<BlockId> {
        self.block_of.get(stmt as usize).copied().filter(|&b| b != 0)
    }

    pub fn successors(&self, b: BlockId) -> impl Iterator<Item = BlockId> + '_ {
        self.edges.iter().filter(move |e| e.from == b).map(|e| e.to)
    }

    pub fn predecessors(&self, b: BlockId) -> impl Iterator<Item = BlockId> + '_ {
        self.edges.iter().filter(move |e| e.to == b).map(|e| e.from)
    }

    /// Successors along edges that are not loopbacks.
    pub fn forward_successors(&self, b: BlockId) -> impl Iterator<Item = BlockId> + '_ {
        self.edges
            .iter()
            .filter(move |e| e.from == b && !e.loopback)
            .map(|e| e.to)
    }

    /// Statement-level successors: the next statement in the block, or the
    /// first statements of successor blocks.
    pub fn stmt_successors(&self, stmt: StmtId) -> Vec<StmtId> {
        let Some(b) = self.block_of(stmt) else {
            return Vec::new();
        };
        let stmts = &self.blocks[b - 1].stmts;
        let pos = stmts.iter().position(|&s| s == stmt).expect("block membership");
        if pos + 1 < stmts.len() {
            return vec![stmts[pos + 1]];
        }
        self.successors(b).map(|s| self.blocks[s - 1].stmts[0]).collect()
    }

    /// First statement executed, if any.
    pub fn first_stmt(&self) -> Option<StmtId> {
        self.blocks.first().map(|b| b.stmts[0])
    }

    /// Block-level dominator sets (`dominators()[b-1]` dominates `b`).
    pub fn dominators(&self) -> Vec<BTreeSet<BlockId>> {
        let n = self.blocks.len();
        let all: BTreeSet<BlockId> = (1..=n).collect();
        let mut dom: Vec<BTreeSet<BlockId>> = vec![all; n];
        if n == 0 {
            return dom;
        }
        dom[0] = BTreeSet::from([1]);
        let mut changed = true;
        while changed {
            changed = false;
            for b in 2..=n {
                let mut new: Option<BTreeSet<BlockId>> = None;
                for p in self.predecessors(b) {
                    new = Some(match new {
                        None => dom[p - 1].clone(),
                        Some(acc) => &acc & &dom[p - 1],
                    });
                }
                let mut new = new.unwrap_or_default();
                new.insert(b);
                if new != dom[b - 1] {
                    dom[b - 1] = new;
                    changed = true;
                }
            }
        }
        dom
    }
}

struct Builder {
    blocks: Vec<Vec<StmtId>>,
    edges: BTreeSet<(BlockId, BlockId)>,
}

/// Fall-through state between statements: an open block that the next simple
/// statement may join, and the blocks whose control falls into the next leader.
#[derive(Clone, Default)]
struct Flow {
    open: Option<BlockId>,
    exits: Vec<BlockId>,
}

impl Builder {
    fn start_block(&mut self, flow: &Flow, first: StmtId) -> BlockId {
        self.blocks.push(vec![first]);
        let id = self.blocks.len();
        for &e in &flow.exits {
            self.edges.insert((e, id));
        }
        id
    }

    /// Adds a statement that may share a block with its predecessor.
    fn append(&mut self, flow: Flow, stmt: StmtId) -> BlockId {
        match flow.open {
            Some(b) => {
                self.blocks[b - 1].push(stmt);
                b
            }
            None => self.start_block(&flow, stmt),
        }
    }

    fn list(&mut self, list: &[Stmt], mut flow: Flow) -> Flow {
        for s in list {
            flow = self.stmt(s, flow);
        }
        flow
    }

    fn stmt(&mut self, s: &Stmt, flow: Flow) -> Flow {
        match &s.kind {
            StmtKind::If {
                then_body,
                else_body,
                ..
            } => {
                let b = self.append(flow, s.id);
                let branch = Flow {
                    open: None,
                    exits: vec![b],
                };
                let mut exits = self.list(then_body, branch.clone()).exits;
                match else_body {
                    Some(body) => exits.extend(self.list(body, branch).exits),
                    None => exits.push(b),
                }
                Flow { open: None, exits }
            }
            StmtKind::While { body, .. } | StmtKind::For { body, .. } => {
                let h = self.start_block(&flow, s.id);
                let body_flow = self.list(
                    body,
                    Flow {
                        open: None,
                        exits: vec![h],
                    },
                );
                for e in body_flow.exits {
                    self.edges.insert((e, h));
                }
                Flow {
                    open: None,
                    exits: vec![h],
                }
            }
            StmtKind::Block(body) => {
                let b = self.append(flow, s.id);
                self.list(
                    body,
                    Flow {
                        open: Some(b),
                        exits: vec![b],
                    },
                )
            }
            StmtKind::Return(_) => {
                self.append(flow, s.id);
                Flow::default()
            }
            _ => {
                let b = self.append(flow, s.id);
                Flow {
                    open: Some(b),
                    exits: vec![b],
                }
            }
        }
    }
}

/// Partitions a method into maximal basic blocks numbered in textual order.
pub fn build_cfg(m: &Method) -> Cfg {
    let mut b = Builder {
        blocks: Vec::new(),
        edges: BTreeSet::new(),
    };
    b.list(&m.body, Flow::default());
    let mut block_of = vec![0; m.stmt_count as usize + 1];
    let blocks: Vec<BasicBlock> = b
        .blocks
        .into_iter()
        .enumerate()
        .map(|(i, stmts)| {
            for &s in &stmts {
                block_of[s as usize] = i + 1;
            }
            BasicBlock { id: i + 1, stmts }
        })
        .collect();
    let mut cfg = Cfg {
        blocks,
        edges: b
            .edges
            .into_iter()
            .map(|(from, to)| CfgEdge {
                from,
                to,
                loopback: false,
            })
            .collect(),
        block_of,
    };
    let dom = cfg.dominators();
    for e in &mut cfg.edges {
        e.loopback = dom[e.from - 1].contains(&e.to);
    }
    cfg
}
