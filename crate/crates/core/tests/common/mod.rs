//! Random MIMPL methods and a brute-force slicing oracle, shared by the
//! property test and the acceptance target.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use emslice::analysis::{MethodAnalysis, ProgramAnalysis};
use emslice::lang::{Stmt, StmtId, StmtKind};
use emslice::outputs::{Origin, SlicingCriterion};
use emslice::slicer;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const MAX_STMTS: usize = 40;

struct Gen {
    rng: ChaCha8Rng,
    budget: usize,
    fresh: usize,
}

impl Gen {
    fn name(&mut self, prefix: &str) -> String {
        self.fresh += 1;
        format!("{prefix}{}", self.fresh)
    }

    fn atom(&mut self, vars: &[String]) -> String {
        match self.rng.gen_range(0..10) {
            0..=5 => vars.choose(&mut self.rng).unwrap().clone(),
            6 => "q.x".to_string(),
            7 => "len(arr)".to_string(),
            8 => format!("arr[{}]", vars.choose(&mut self.rng).unwrap()),
            _ => self.rng.gen_range(0..10).to_string(),
        }
    }

    fn expr(&mut self, vars: &[String]) -> String {
        let a = self.atom(vars);
        if self.rng.gen_bool(0.5) {
            let op = ["+", "-", "*"].choose(&mut self.rng).unwrap();
            format!("{a} {op} {}", self.atom(vars))
        } else {
            a
        }
    }

    fn cond(&mut self, vars: &[String]) -> String {
        let op = ["<", ">", "==", "!="].choose(&mut self.rng).unwrap();
        format!("{} {op} {}", self.atom(vars), self.atom(vars))
    }

    /// A statement list; `vars` are the int variables in scope.
    fn list(&mut self, vars: &[String], depth: usize, indent: usize, may_return: bool) -> String {
        let mut vars = vars.to_vec();
        let mut out = String::new();
        let pad = "    ".repeat(indent);
        let n = self.rng.gen_range(1..=4);
        for i in 0..n {
            if self.budget == 0 {
                break;
            }
            self.budget -= 1;
            let compound = depth < 3 && self.budget >= 2;
            let pick = self.rng.gen_range(0..if compound { 12 } else { 7 });
            let s = match pick {
                0 | 1 => {
                    let v = vars.choose(&mut self.rng).unwrap().clone();
                    format!("{v} = {};", self.expr(&vars))
                }
                2 => {
                    let v = self.name("t");
                    let s = format!("int {v} = {};", self.expr(&vars));
                    vars.push(v);
                    s
                }
                3 => format!("arr[{}] = {};", self.atom(&vars), self.expr(&vars)),
                4 => format!("r.x = {};", self.expr(&vars)),
                5 => format!("print({});", self.expr(&vars)),
                6 if may_return && i + 1 == n => format!("return {};", self.expr(&vars)),
                6 => format!("q.x = {};", self.expr(&vars)),
                7 | 8 => {
                    let c = self.cond(&vars);
                    let then = self.list(&vars, depth + 1, indent + 1, true);
                    if self.rng.gen_bool(0.5) && self.budget > 0 {
                        let els = self.list(&vars, depth + 1, indent + 1, false);
                        format!("if ({c}) {{\n{then}{pad}}} else {{\n{els}{pad}}}")
                    } else {
                        format!("if ({c}) {{\n{then}{pad}}}")
                    }
                }
                9 => {
                    let c = self.cond(&vars);
                    let body = self.list(&vars, depth + 1, indent + 1, false);
                    format!("while ({c}) {{\n{body}{pad}}}")
                }
                10 => {
                    let iv = self.name("i");
                    let bound = self.atom(&vars);
                    let mut inner = vars.clone();
                    inner.push(iv.clone());
                    let body = self.list(&inner, depth + 1, indent + 1, false);
                    format!("for (int {iv} = 0; {iv} < {bound}; {iv} = {iv} + 1) {{\n{body}{pad}}}")
                }
                _ => {
                    let body = self.list(&vars, depth + 1, indent + 1, false);
                    format!("{{\n{body}{pad}}}")
                }
            };
            out.push_str(&pad);
            out.push_str(&s);
            out.push('\n');
            if s.starts_with("return") {
                break;
            }
        }
        out
    }
}

/// Source of a program whose method `f` has at most `MAX_STMTS` statements.
pub fn random_program(seed: u64) -> String {
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed),
        // Two declarations and the final return are fixed.
        budget: MAX_STMTS - 3,
        fresh: 0,
    };
    let vars = vec!["a".to_string(), "b".to_string(), "v".to_string()];
    let body = g.list(&vars, 0, 1, false);
    format!(
        "class P {{ int x; }}\n\
         int f(int a, int b, int[] arr, P q) {{\n    int v = a;\n    P r = q;\n{body}    return v + b;\n}}\n"
    )
}

/// Statement-level successors from the syntax tree. Block statements are
/// transparent; `None` stands for the method exit.
fn successors(body: &[Stmt]) -> BTreeMap<StmtId, Vec<Option<StmtId>>> {
    fn entry(list: &[Stmt], k: Option<StmtId>) -> Option<StmtId> {
        match list.first() {
            None => k,
            Some(s) => match &s.kind {
                StmtKind::Block(inner) => entry(inner, entry(&list[1..], k)),
                _ => Some(s.id),
            },
        }
    }
    fn walk(list: &[Stmt], k: Option<StmtId>, out: &mut BTreeMap<StmtId, Vec<Option<StmtId>>>) {
        for (i, s) in list.iter().enumerate() {
            let cont = entry(&list[i + 1..], k);
            let succ = match &s.kind {
                StmtKind::Block(inner) => {
                    walk(inner, cont, out);
                    continue;
                }
                StmtKind::Return(_) => vec![],
                StmtKind::If {
                    then_body,
                    else_body,
                    ..
                } => {
                    walk(then_body, cont, out);
                    let e = match else_body {
                        Some(e) => {
                            walk(e, cont, out);
                            entry(e, cont)
                        }
                        None => cont,
                    };
                    vec![entry(then_body, cont), e]
                }
                StmtKind::While { body, .. } | StmtKind::For { body, .. } => {
                    walk(body, Some(s.id), out);
                    vec![entry(body, Some(s.id)), cont]
                }
                _ => vec![cont],
            };
            out.insert(s.id, succ);
        }
    }
    let mut out = BTreeMap::new();
    walk(body, None, &mut out);
    out
}

/// Nearest enclosing if/while/for of every statement, 0 at top level.
fn controllers(body: &[Stmt]) -> BTreeMap<StmtId, StmtId> {
    fn walk(list: &[Stmt], parent: StmtId, out: &mut BTreeMap<StmtId, StmtId>) {
        for s in list {
            out.insert(s.id, parent);
            let inner = if matches!(s.kind, StmtKind::Block(_)) { parent } else { s.id };
            for c in s.child_lists() {
                walk(c, inner, out);
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(body, 0, &mut out);
    out
}

pub struct Oracle {
    /// (def, use, var) for every definition that reaches a use along some
    /// path free of killing definitions.
    pub data: BTreeSet<(StmtId, StmtId, String)>,
    pub controller: BTreeMap<StmtId, StmtId>,
}

impl Oracle {
    pub fn new(ma: &MethodAnalysis<'_>) -> Self {
        let succ = successors(&ma.method.body);
        let mut data = BTreeSet::new();
        for &d in succ.keys() {
            for v in ma.facts.get(d).defs() {
                // Depth-first search from the successors of d.
                let mut seen = BTreeSet::new();
                let mut stack: Vec<StmtId> = succ[&d].iter().flatten().copied().collect();
                while let Some(s) = stack.pop() {
                    if !seen.insert(s) {
                        continue;
                    }
                    let f = ma.facts.get(s);
                    if f.uses.contains(&v) {
                        data.insert((d, s, v.clone()));
                    }
                    if !f.strong_defs.contains(&v) {
                        stack.extend(succ[&s].iter().flatten());
                    }
                }
            }
        }
        Oracle {
            data,
            controller: controllers(&ma.method.body),
        }
    }

    fn preds(&self, s: StmtId) -> Vec<StmtId> {
        let mut p: Vec<StmtId> = self.data.iter().filter(|e| e.1 == s).map(|e| e.0).collect();
        p.push(self.controller[&s]);
        p
    }

    fn closure(&self, seeds: Vec<StmtId>) -> BTreeSet<StmtId> {
        let mut out = BTreeSet::new();
        let mut stack = seeds;
        while let Some(s) = stack.pop() {
            if s != 0 && out.insert(s) {
                stack.extend(self.preds(s));
            }
        }
        out
    }

    /// Backward slice over the whole method.
    pub fn slice(&self, ma: &MethodAnalysis<'_>, x: StmtId, var: &str) -> BTreeSet<StmtId> {
        if ma.facts.get(x).defines(var) {
            return self.closure(vec![x]);
        }
        let mut seeds: Vec<StmtId> = self.data.iter().filter(|e| e.1 == x && e.2 == var).map(|e| e.0).collect();
        seeds.push(self.controller[&x]);
        let mut out = self.closure(seeds);
        out.insert(x);
        out
    }
}

/// Compares, for every (statement, variable) pair of `f`, the slice anchored
/// at the entry block with the oracle. Returns the number of criteria.
pub fn check_entry_slices(src: &str) -> Result<usize, String> {
    let pa = ProgramAnalysis::parse(src).map_err(|e| format!("generated program rejected: {e}\n{src}"))?;
    let ma = pa.method("f").unwrap();
    let oracle = Oracle::new(&ma);
    let pdg: BTreeSet<(StmtId, StmtId, String)> = ma
        .graphs
        .pdg
        .data
        .iter()
        .filter(|e| e.def != 0)
        .map(|e| (e.def, e.use_, e.var.clone()))
        .collect();
    if pdg != oracle.data {
        return Err(format!(
            "data dependences differ\nonly pdg: {:?}\nonly oracle: {:?}\n{src}",
            pdg.difference(&oracle.data).collect::<Vec<_>>(),
            oracle.data.difference(&pdg).collect::<Vec<_>>()
        ));
    }
    let entry = ma.graphs.cfg.entry().unwrap();
    let mut checked = 0;
    for s in ma.method.all_stmts() {
        if matches!(s.kind, StmtKind::Block(_)) {
            continue;
        }
        let f = ma.facts.get(s.id);
        for v in f.uses.iter().chain(&f.strong_defs).chain(&f.weak_defs) {
            let c = SlicingCriterion {
                stmt: s.id,
                variable: v.clone(),
                origin: Origin::CompleteComputation,
            };
            let slices = slicer::block_based_slices(&ma, &c).map_err(|e| e.to_string())?;
            let at_entry = slices
                .iter()
                .find(|sl| sl.anchor == entry)
                .ok_or_else(|| format!("no entry-anchored slice for <{}, {v}>\n{src}", s.id))?;
            let want = oracle.slice(&ma, s.id, v);
            if at_entry.stmts != want {
                return Err(format!(
                    "slice <{}, {v}>: got {:?}, oracle {:?}\n{src}",
                    s.id, at_entry.stmts, want
                ));
            }
            checked += 1;
        }
    }
    Ok(checked)
}

pub fn stmt_count(src: &str) -> u32 {
    ProgramAnalysis::parse(src).unwrap().program.method("f").unwrap().stmt_count
}
