//! Applies an extract-method candidate as a source-to-source rewrite.
//!
//! The new method receives the slice statements (extracted and duplicated)
//! in their original structure. The remaining method keeps everything except
//! the extracted statements and calls the new method just before the first
//! top-level slice statement that holds an extracted statement.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::analysis::MethodAnalysis;
use crate::graphs::ENTRY;
use crate::lang::*;
use crate::slicer::ExtractCandidate;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExtractError {
    #[error("candidate belongs to method '{0}'")]
    WrongMethod(String),
    #[error("candidate cannot be extracted: {0}")]
    Structure(String),
    #[error("more than one value flows back to the caller: {}", .0.join(", "))]
    MultipleLiveOuts(Vec<String>),
    #[error("rewritten program does not type-check: {0}")]
    IllTyped(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Location {
    Remaining,
    Extracted,
    Both,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Signature {
    /// Parameters in first-use order; `this` first when present.
    pub params: Vec<(String, Type)>,
    #[serde(rename = "return")]
    pub ret: Option<(String, Type)>,
}

impl Signature {
    pub fn has_receiver(&self) -> bool {
        self.params.first().is_some_and(|(n, _)| n == "this")
    }
}

/// Everything the rewrite and the ordering checks need to know about where
/// the candidate goes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtractPlan {
    /// Slice statements without a slice ancestor, in id order.
    pub pieces: Vec<StmtId>,
    /// The call is inserted right before this statement.
    pub call_at: StmtId,
    /// `candidate.extracted` plus block statements nested in it.
    pub extracted: BTreeSet<StmtId>,
    pub signature: Signature,
    pub live_outs: BTreeSet<String>,
    /// Body of the new method, without the final `return`.
    pub body: Vec<Stmt>,
    /// Locals whose declaration moves out while the remaining method still
    /// mentions them.
    pub call_decls: Vec<String>,
    /// `Some(is_final)` when the call statement declares the result.
    pub result_decl: Option<bool>,
}

#[derive(Clone, Debug)]
pub struct RefactoredProgram {
    pub program: Program,
    pub method: String,
    pub new_method: String,
    /// Id of the call statement in the rewritten method.
    pub call_site: StmtId,
    pub signature: Signature,
    pub mapping: BTreeMap<StmtId, Location>,
}

/// Parent/ancestor bookkeeping for one method body.
struct Tree {
    ancestors: BTreeMap<StmtId, Vec<StmtId>>,
    /// Nearest non-block enclosing statement and child-list index; blocks
    /// are transparent. `(0, 0)` is the method body.
    list_key: BTreeMap<StmtId, (StmtId, usize)>,
    blocks: BTreeSet<StmtId>,
}

impl Tree {
    fn new(m: &Method) -> Self {
        let mut t = Tree {
            ancestors: BTreeMap::new(),
            list_key: BTreeMap::new(),
            blocks: BTreeSet::new(),
        };
        t.walk(&m.body, &mut Vec::new(), (0, 0));
        t
    }

    fn walk(&mut self, list: &[Stmt], stack: &mut Vec<StmtId>, key: (StmtId, usize)) {
        for s in list {
            self.ancestors.insert(s.id, stack.clone());
            self.list_key.insert(s.id, key);
            let block = matches!(s.kind, StmtKind::Block(_));
            if block {
                self.blocks.insert(s.id);
            }
            stack.push(s.id);
            for (i, child) in s.child_lists().into_iter().enumerate() {
                let k = if block { key } else { (s.id, i) };
                self.walk(child, stack, k);
            }
            stack.pop();
        }
    }

    fn has_ancestor_in(&self, s: StmtId, set: &BTreeSet<StmtId>) -> bool {
        self.ancestors[&s].iter().any(|a| set.contains(a))
    }
}

/// Definite-assignment walker shared by the free-variable computation and
/// the "assigned before the call" check.
struct Da<'a> {
    is_tracked: &'a dyn Fn(&str) -> bool,
    da: BTreeSet<String>,
    free: Vec<String>,
    target: Option<StmtId>,
    at_target: Option<BTreeSet<String>>,
}

impl Da<'_> {
    fn read(&mut self, e: &Expr) {
        for v in e.var_names() {
            if (self.is_tracked)(v) && !self.da.contains(v) && !self.free.iter().any(|f| f == v) {
                self.free.push(v.to_string());
            }
        }
    }

    fn simple(&mut self, s: &Simple) {
        match s {
            Simple::Decl(d) => {
                if let Some(e) = &d.init {
                    self.read(e);
                    self.da.insert(d.name.clone());
                }
            }
            Simple::Assign(a) => self.assign(a),
            Simple::Call(e) => self.read(e),
        }
    }

    fn assign(&mut self, a: &Assign) {
        if !a.target.path.is_empty() {
            self.read(&Expr::Var(a.target.root.clone()));
        }
        for e in a.target.index_exprs() {
            self.read(e);
        }
        self.read(&a.value);
        if a.target.path.is_empty() {
            self.da.insert(a.target.root.clone());
        }
    }

    /// Returns false when the list cannot complete normally.
    fn list(&mut self, list: &[Stmt]) -> bool {
        for s in list {
            if !self.stmt(s) {
                return false;
            }
        }
        true
    }

    fn stmt(&mut self, s: &Stmt) -> bool {
        if self.target == Some(s.id) {
            self.at_target = Some(self.da.clone());
        }
        match &s.kind {
            StmtKind::VarDecl(d) => self.simple(&Simple::Decl(d.clone())),
            StmtKind::Assign(a) => self.assign(a),
            StmtKind::If {
                cond,
                then_body,
                else_body,
            } => {
                self.read(cond);
                let before = self.da.clone();
                let then_ok = self.list(then_body);
                let after_then = std::mem::replace(&mut self.da, before);
                let else_ok = match else_body {
                    Some(b) => self.list(b),
                    None => true,
                };
                match (then_ok, else_ok) {
                    (true, true) => self.da = &self.da & &after_then,
                    (true, false) => self.da = after_then,
                    (false, true) => {}
                    (false, false) => return false,
                }
            }
            StmtKind::While { cond, body } => {
                self.read(cond);
                let before = self.da.clone();
                self.list(body);
                self.da = before;
            }
            StmtKind::For {
                init,
                cond,
                update,
                body,
            } => {
                if let Some(i) = init {
                    self.simple(i);
                }
                self.read(cond);
                let before = self.da.clone();
                if self.list(body) {
                    if let Some(u) = update {
                        self.simple(u);
                    }
                }
                self.da = before;
            }
            StmtKind::Block(b) => return self.list(b),
            StmtKind::Return(e) => {
                if let Some(e) = e {
                    self.read(e);
                }
                return false;
            }
            StmtKind::Print(e) | StmtKind::Call(e) | StmtKind::Write { value: e, .. } => self.read(e),
        }
        true
    }
}

/// Locals and parameters definitely assigned right before `target` runs.
/// Parameters count as assigned; globals are not tracked.
pub fn assigned_before(ma: &MethodAnalysis<'_>, target: StmtId) -> BTreeSet<String> {
    let tracked = |v: &str| ma.facts.is_local(v);
    let mut w = Da {
        is_tracked: &tracked,
        da: ma.facts.params.iter().cloned().collect(),
        free: Vec::new(),
        target: Some(target),
        at_target: None,
    };
    w.list(&ma.method.body);
    w.at_target.unwrap_or_default()
}

/// Copy of `list` keeping only statements in `keep`; compound statements
/// keep only their kept children, and blocks survive as containers.
/// Statements enclosing the kept ones are dropped in favour of their bodies.
fn project(list: &[Stmt], keep: &BTreeSet<StmtId>) -> Vec<Stmt> {
    let mut out = Vec::new();
    for s in list {
        if keep.contains(&s.id) {
            let mut c = s.clone();
            for child in c.child_lists_mut() {
                *child = project(child, keep);
            }
            if let StmtKind::If { else_body, .. } = &mut c.kind {
                if else_body.as_ref().is_some_and(Vec::is_empty) {
                    *else_body = None;
                }
            }
            out.push(c);
        } else if let StmtKind::Block(body) = &s.kind {
            let inner = project(body, keep);
            if !inner.is_empty() {
                out.push(Stmt {
                    id: s.id,
                    kind: StmtKind::Block(inner),
                });
            }
        } else {
            // Only enclosing statements of the pieces get here.
            for child in s.child_lists() {
                out.extend(project(child, keep));
            }
        }
    }
    out
}

fn declared_names(list: &[Stmt]) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    visit_stmts(list, &mut |s| match &s.kind {
        StmtKind::VarDecl(d)
        | StmtKind::For {
            init: Some(Simple::Decl(d)),
            ..
        } => {
            out.insert(d.name.clone());
        }
        _ => {}
    });
    out
}

fn var_decl(m: &Method, id: StmtId) -> Option<&VarDecl> {
    match &m.stmt(id)?.kind {
        StmtKind::VarDecl(d) => Some(d),
        _ => None,
    }
}

/// Works out pieces, call position, signature and the declarations the
/// rewrite has to add.
pub fn plan(ma: &MethodAnalysis<'_>, cand: &ExtractCandidate) -> Result<ExtractPlan, ExtractError> {
    let m = ma.method;
    if cand.method != m.name {
        return Err(ExtractError::WrongMethod(cand.method.clone()));
    }
    if cand.extracted.is_empty() {
        return Err(ExtractError::Structure("nothing to extract".into()));
    }
    let tree = Tree::new(m);
    let slice = &cand.stmts;
    let mut extracted = cand.extracted.clone();
    extracted.extend(
        tree.blocks
            .iter()
            .copied()
            .filter(|&b| tree.has_ancestor_in(b, &cand.extracted)),
    );

    for s in 1..=m.stmt_count {
        if !extracted.contains(&s) && tree.has_ancestor_in(s, &extracted) {
            return Err(ExtractError::Structure(format!(
                "statement {s} stays but its enclosing statement moves"
            )));
        }
    }
    let pieces: Vec<StmtId> = slice
        .iter()
        .copied()
        .filter(|&s| !tree.has_ancestor_in(s, slice))
        .collect();
    let key = tree.list_key[&pieces[0]];
    if let Some(&p) = pieces.iter().find(|&&p| tree.list_key[&p] != key) {
        return Err(ExtractError::Structure(format!(
            "statements {} and {p} sit in different statement lists",
            pieces[0]
        )));
    }
    let call_at = *pieces
        .iter()
        .find(|&&p| extracted.contains(&p) || extracted.iter().any(|&e| tree.ancestors[&e].contains(&p)))
        .expect("some piece holds an extracted statement");

    // Values the remaining method reads from extracted definitions.
    let rebound: BTreeSet<&String> = slice
        .iter()
        .flat_map(|&s| ma.facts.get(s).strong_defs.iter())
        .collect();
    let mut live_outs = BTreeSet::new();
    for e in &ma.graphs.pdg.data {
        if !extracted.contains(&e.def) || extracted.contains(&e.use_) || e.use_ == ENTRY {
            continue;
        }
        if ma.facts.is_global(&e.var) {
            continue;
        }
        let weak = !ma.facts.get(e.def).strong_defs.contains(&e.var);
        if weak && !rebound.contains(&e.var) {
            continue;
        }
        live_outs.insert(e.var.clone());
    }
    if live_outs.len() > 1 {
        return Err(ExtractError::MultipleLiveOuts(live_outs.into_iter().collect()));
    }
    // The slice variable is handed back whenever the remaining method reads
    // it after an extracted definition, even if only its referent changed.
    let v = &cand.variable;
    let assignable = ma.facts.is_local(v)
        && v != "this"
        && !m.params.iter().any(|p| &p.name == v && p.is_final);
    let v_read_later = ma.graphs.pdg.data.iter().any(|e| {
        &e.var == v && extracted.contains(&e.def) && !extracted.contains(&e.use_) && e.use_ != ENTRY
    });
    let v_defined = slice.iter().any(|&s| ma.facts.get(s).strong_defs.contains(v));
    let ret_name = match live_outs.iter().next() {
        Some(x) => Some(x.clone()),
        None if assignable && (v_read_later || cand.is_return_seeded() && v_defined) => Some(v.clone()),
        None => None,
    };
    let ty = |n: &str| ma.facts.types[n].clone();

    // Where the returned variable is declared decides the call-site form.
    let mut projection = project(&m.body, slice);
    let mut result_decl = None;
    let mut hoisted = false;
    if let Some(r) = &ret_name {
        let decl = slice.iter().copied().find(|&s| declares(m, s, r));
        if let Some(d) = decl {
            if !matches!(m.stmt(d).map(|s| &s.kind), Some(StmtKind::VarDecl(_))) {
                return Err(ExtractError::Structure(format!("'{r}' is a loop variable")));
            }
            let is_piece = pieces.contains(&d);
            if extracted.contains(&d) {
                result_decl = var_decl(m, d).map(|x| x.is_final);
                if !is_piece {
                    undeclare(&mut projection, d);
                    hoisted = true;
                }
            } else if !is_piece {
                return Err(ExtractError::Structure(format!(
                    "'{r}' is declared inside another statement and stays there"
                )));
            }
        }
    }

    let tracked = |v: &str| ma.facts.is_local(v);
    let mut w = Da {
        is_tracked: &tracked,
        da: BTreeSet::new(),
        free: Vec::new(),
        target: None,
        at_target: None,
    };
    let completes = w.list(&projection);
    let mut free = w.free;
    let da_end = w.da;
    let mut prelude = Vec::new();
    if let Some(r) = &ret_name {
        let assigned = completes && da_end.contains(r);
        let decl_in_slice = slice.iter().any(|&s| declares(m, s, r));
        if decl_in_slice {
            let init = if assigned {
                None
            } else {
                Some(default_value(&ty(r)).ok_or_else(|| {
                    ExtractError::Structure(format!("'{r}' is not assigned on every path of the slice"))
                })?)
            };
            if hoisted {
                prelude.push(stmt(StmtKind::VarDecl(VarDecl {
                    is_final: false,
                    ty: ty(r),
                    name: r.clone(),
                    init,
                })));
            } else if init.is_some() {
                // Unassigned paths never reach a read in the original, so
                // any value will do there.
                for s in projection.iter_mut() {
                    if let StmtKind::VarDecl(d) = &mut s.kind {
                        if &d.name == r {
                            d.init = init.clone();
                            d.is_final = false;
                        }
                    }
                }
            }
        } else if !assigned && !free.contains(r) {
            free.push(r.clone());
        }
    }
    if let Some(i) = free.iter().position(|f| f == "this") {
        let this = free.remove(i);
        free.insert(0, this);
    }
    let params: Vec<(String, Type)> = free.iter().map(|n| (n.clone(), ty(n))).collect();

    let declared = declared_names(&projection);
    let assigned_in_slice: BTreeSet<String> = slice
        .iter()
        .flat_map(|&s| ma.facts.get(s).strong_defs.iter().cloned())
        .filter(|n| ma.facts.is_local(n))
        .collect();
    let mut body: Vec<Stmt> = assigned_in_slice
        .iter()
        .filter(|n| !declared.contains(*n) && !free.contains(n) && !(hoisted && ret_name.as_ref() == Some(n)))
        .map(|n| bare_decl(n, ty(n)))
        .collect();
    body.extend(prelude);
    body.extend(projection);

    // Declarations that leave the remaining method while it still mentions
    // the variable.
    let mut call_decls = Vec::new();
    for &d in &extracted {
        let Some(decl) = var_decl(m, d) else { continue };
        if ret_name.as_deref() == Some(&decl.name) {
            continue;
        }
        let mentioned = (1..=m.stmt_count)
            .filter(|s| !extracted.contains(s))
            .any(|s| {
                let f = ma.facts.get(s);
                f.uses.contains(&decl.name) || f.defines(&decl.name)
            });
        if !mentioned {
            continue;
        }
        if !pieces.contains(&d) {
            return Err(ExtractError::Structure(format!(
                "the declaration of '{}' moves out of a statement that still uses it",
                decl.name
            )));
        }
        call_decls.push(decl.name.clone());
    }

    Ok(ExtractPlan {
        pieces,
        call_at,
        extracted,
        signature: Signature {
            params,
            ret: ret_name.map(|n| {
                let t = ty(&n);
                (n, t)
            }),
        },
        live_outs,
        body,
        call_decls,
        result_decl,
    })
}

fn declares(m: &Method, id: StmtId, name: &str) -> bool {
    match m.stmt(id).map(|s| &s.kind) {
        Some(StmtKind::VarDecl(d))
        | Some(StmtKind::For {
            init: Some(Simple::Decl(d)),
            ..
        }) => d.name == name,
        _ => false,
    }
}

/// Turns the declaration `id` into a plain assignment (or drops it when it
/// has no initializer).
fn undeclare(list: &mut Vec<Stmt>, id: StmtId) {
    list.retain(|s| !(s.id == id && matches!(&s.kind, StmtKind::VarDecl(d) if d.init.is_none())));
    for s in list.iter_mut() {
        if s.id == id {
            if let StmtKind::VarDecl(d) = &s.kind {
                let value = d.init.clone().expect("initialized");
                s.kind = StmtKind::Assign(Assign {
                    target: LValue::var(d.name.clone()),
                    value,
                });
            }
        }
        for child in s.child_lists_mut() {
            undeclare(child, id);
        }
    }
}

fn default_value(t: &Type) -> Option<Expr> {
    match t {
        Type::Int => Some(Expr::Int(0)),
        Type::Bool => Some(Expr::Bool(false)),
        Type::Str => Some(Expr::Str(String::new())),
        _ => None,
    }
}

/// Parameters and return value of the method the candidate would become.
pub fn infer_signature(ma: &MethodAnalysis<'_>, cand: &ExtractCandidate) -> Result<Signature, ExtractError> {
    plan(ma, cand).map(|p| p.signature)
}

/// `extracted_<variable>_<stmt>`, suffixed `_2`, `_3`, ... until unused.
pub fn name_method(program: &Program, cand: &ExtractCandidate) -> String {
    let at = cand
        .output_stmt
        .or_else(|| cand.criteria.first().map(|c| c.stmt))
        .unwrap_or(0);
    let base = format!("extracted_{}_{at}", cand.variable);
    if program.method(&base).is_none() {
        return base;
    }
    (2..)
        .map(|i| format!("{base}_{i}"))
        .find(|n| program.method(n).is_none())
        .expect("unbounded suffixes")
}

fn rewrite(list: &[Stmt], extracted: &BTreeSet<StmtId>, call_at: StmtId, call: &[Stmt]) -> Vec<Stmt> {
    let mut out = Vec::new();
    for s in list {
        if s.id == call_at {
            out.extend(call.iter().cloned());
        }
        if extracted.contains(&s.id) {
            continue;
        }
        let mut c = s.clone();
        for child in c.child_lists_mut() {
            *child = rewrite(child, extracted, call_at, call);
        }
        out.push(c);
    }
    out
}

fn stmt(kind: StmtKind) -> Stmt {
    Stmt { id: 0, kind }
}

fn bare_decl(name: &str, ty: Type) -> Stmt {
    stmt(StmtKind::VarDecl(VarDecl {
        is_final: false,
        ty,
        name: name.to_string(),
        init: None,
    }))
}

fn calls_method(s: &Stmt, name: &str) -> bool {
    s.own_exprs().iter().any(|e| {
        let mut hit = false;
        e.walk(&mut |x| {
            if let Expr::Call { name: n, .. } = x {
                hit |= n == name;
            }
        });
        hit
    })
}

/// Rewrites the program: appends the new method and replaces the extracted
/// statements of the original with a call. The result is re-parsed and
/// re-checked before it is returned.
pub fn apply(ma: &MethodAnalysis<'_>, cand: &ExtractCandidate) -> Result<RefactoredProgram, ExtractError> {
    let plan = plan(ma, cand)?;
    let m = ma.method;
    let program = ma.program;
    let name = name_method(program, cand);
    let sig = &plan.signature;
    let ty = |n: &str| ma.facts.types[n].clone();

    let mut body = plan.body.clone();
    if let Some((r, _)) = &sig.ret {
        body.push(stmt(StmtKind::Return(Some(Expr::Var(r.clone())))));
    }
    let new_method = Method {
        name: name.clone(),
        params: sig
            .params
            .iter()
            .map(|(n, t)| Param {
                name: n.clone(),
                ty: t.clone(),
                is_final: false,
            })
            .collect(),
        ret: sig.ret.as_ref().map_or(Type::Void, |(_, t)| t.clone()),
        body,
        stmt_count: 0,
        lines: Vec::new(),
    };

    let args: Vec<Expr> = sig
        .params
        .iter()
        .filter(|(n, _)| n != "this")
        .map(|(n, _)| Expr::Var(n.clone()))
        .collect();
    let call = Expr::Call {
        receiver: sig.has_receiver().then(|| Box::new(Expr::Var("this".into()))),
        name: name.clone(),
        args,
    };
    let mut call_stmts: Vec<Stmt> = plan.call_decls.iter().map(|n| bare_decl(n, ty(n))).collect();
    call_stmts.push(match &sig.ret {
        Some((r, t)) if plan.result_decl.is_some() => stmt(StmtKind::VarDecl(VarDecl {
            is_final: plan.result_decl == Some(true),
            ty: t.clone(),
            name: r.clone(),
            init: Some(call),
        })),
        Some((r, _)) => stmt(StmtKind::Assign(Assign {
            target: LValue::var(r.clone()),
            value: call,
        })),
        None => stmt(StmtKind::Call(call)),
    });

    let mut remaining = m.clone();
    remaining.body = rewrite(&m.body, &plan.extracted, plan.call_at, &call_stmts);
    let mut out = program.clone();
    let idx = out.methods.iter().position(|x| x.name == m.name).expect("method in program");
    out.methods[idx] = remaining;
    out.methods.push(new_method);

    let text = unparse(&out);
    let reparsed = crate::lang::parse(&text).map_err(|e| ExtractError::IllTyped(e.to_string()))?;
    let rm = reparsed.method(&m.name).expect("method survives");
    let call_site = rm
        .all_stmts()
        .into_iter()
        .find(|s| calls_method(s, &name))
        .map(|s| s.id)
        .expect("call site present");

    let mapping = (1..=m.stmt_count)
        .map(|s| {
            let loc = if cand.duplicated.contains(&s) {
                Location::Both
            } else if plan.extracted.contains(&s) {
                Location::Extracted
            } else {
                Location::Remaining
            };
            (s, loc)
        })
        .collect();
    Ok(RefactoredProgram {
        program: reparsed,
        method: m.name.clone(),
        new_method: name,
        call_site,
        signature: plan.signature,
        mapping,
    })
}
