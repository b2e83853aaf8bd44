use std::collections::{BTreeSet, VecDeque};

use serde::Serialize;

use super::cfg::Cfg;
use crate::facts::MethodFacts;
use crate::lang::{Method, Stmt, StmtId, StmtKind};

/// Statement 0 is the synthetic method entry.
pub const ENTRY: StmtId = 0;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct DataEdge {
    pub def: StmtId,
    #[serde(rename = "use")]
    pub use_: StmtId,
    pub var: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Pdg {
    pub stmt_count: u32,
    pub data: BTreeSet<DataEdge>,
    /// (controller, controlled); the controller is `ENTRY` at top level.
    pub control: BTreeSet<(StmtId, StmtId)>,
    #[serde(skip)]
    preds: Vec<Vec<StmtId>>,
}

impl Pdg {
    fn from_edges(stmt_count: u32, data: BTreeSet<DataEdge>, control: BTreeSet<(StmtId, StmtId)>) -> Self {
        let mut preds: Vec<BTreeSet<StmtId>> = vec![BTreeSet::new(); stmt_count as usize + 1];
        for e in &data {
            preds[e.use_ as usize].insert(e.def);
        }
        for &(c, s) in &control {
            preds[s as usize].insert(c);
        }
        Pdg {
            stmt_count,
            data,
            control,
            preds: preds.into_iter().map(|p| p.into_iter().collect()).collect(),
        }
    }

    /// Data and control predecessors of a statement, possibly including `ENTRY`.
    pub fn preds(&self, s: StmtId) -> &[StmtId] {
        self.preds.get(s as usize).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn data_preds(&self, s: StmtId) -> impl Iterator<Item = &DataEdge> {
        self.data.iter().filter(move |e| e.use_ == s)
    }

    pub fn data_succs(&self, s: StmtId) -> impl Iterator<Item = &DataEdge> {
        self.data.iter().filter(move |e| e.def == s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Cdg {
    pub edges: BTreeSet<(StmtId, StmtId)>,
    #[serde(skip)]
    parent: Vec<StmtId>,
}

impl Cdg {
    pub fn parent(&self, s: StmtId) -> StmtId {
        self.parent.get(s as usize).copied().unwrap_or(ENTRY)
    }

    pub fn children(&self, p: StmtId) -> impl Iterator<Item = StmtId> + '_ {
        self.edges.iter().filter(move |e| e.0 == p).map(|e| e.1)
    }

    /// Statements transitively control dependent on `p` (excluding `p`).
    pub fn descendants(&self, p: StmtId) -> BTreeSet<StmtId> {
        let mut out = BTreeSet::new();
        let mut stack = vec![p];
        while let Some(x) = stack.pop() {
            for c in self.children(x) {
                if out.insert(c) {
                    stack.push(c);
                }
            }
        }
        out
    }
}

/// Reaching definitions over the statement-level CFG, plus control edges from
/// the nesting structure. Block statements `{ .. }` are transparent: their
/// children depend on the nearest enclosing `if`/`while`/`for`.
pub fn build_pdg(m: &Method, cfg: &Cfg, facts: &MethodFacts) -> Pdg {
    let n = m.stmt_count as usize;
    let succs: Vec<Vec<StmtId>> = (0..=n as StmtId)
        .map(|s| {
            if s == ENTRY {
                cfg.first_stmt().into_iter().collect()
            } else {
                cfg.stmt_successors(s)
            }
        })
        .collect();

    type Defs = BTreeSet<(String, StmtId)>;
    let mut out: Vec<Defs> = vec![Defs::new(); n + 1];
    let mut inn: Vec<Defs> = vec![Defs::new(); n + 1];
    let transfer = |s: usize, input: &Defs| -> Defs {
        let f = &facts.stmts[s];
        let mut o: Defs = input
            .iter()
            .filter(|(v, _)| !f.strong_defs.contains(v))
            .cloned()
            .collect();
        for v in f.strong_defs.iter().chain(&f.weak_defs) {
            o.insert((v.clone(), s as StmtId));
        }
        o
    };
    out[0] = transfer(0, &Defs::new());
    let mut work: VecDeque<usize> = (1..=n).collect();
    let mut queued = vec![true; n + 1];
    queued[0] = false;
    // Predecessor lists for the join.
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n + 1];
    for (s, ss) in succs.iter().enumerate() {
        for &t in ss {
            preds[t as usize].push(s);
        }
    }
    while let Some(s) = work.pop_front() {
        queued[s] = false;
        let mut i = Defs::new();
        for &p in &preds[s] {
            i.extend(out[p].iter().cloned());
        }
        let o = transfer(s, &i);
        inn[s] = i;
        if o != out[s] {
            out[s] = o;
            for &t in &succs[s] {
                if !queued[t as usize] {
                    queued[t as usize] = true;
                    work.push_back(t as usize);
                }
            }
        }
    }

    let mut data = BTreeSet::new();
    for (s, ins) in inn.iter().enumerate().take(n + 1).skip(1) {
        for v in &facts.stmts[s].uses {
            for (dv, d) in ins {
                if dv == v {
                    data.insert(DataEdge {
                        def: *d,
                        use_: s as StmtId,
                        var: v.clone(),
                    });
                }
            }
        }
    }

    let mut control = BTreeSet::new();
    control_edges(&m.body, ENTRY, &mut control);
    Pdg::from_edges(m.stmt_count, data, control)
}

fn control_edges(list: &[Stmt], parent: StmtId, out: &mut BTreeSet<(StmtId, StmtId)>) {
    for s in list {
        out.insert((parent, s.id));
        let inner = match s.kind {
            StmtKind::Block(_) => parent,
            _ => s.id,
        };
        for child in s.child_lists() {
            control_edges(child, inner, out);
        }
    }
}

pub fn build_cdg(pdg: &Pdg) -> Cdg {
    let mut parent = vec![ENTRY; pdg.stmt_count as usize + 1];
    for &(p, c) in &pdg.control {
        parent[c as usize] = p;
    }
    Cdg {
        edges: pdg.control.clone(),
        parent,
    }
}
