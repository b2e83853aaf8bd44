//! Per-statement definition/use facts and interprocedural effect summaries.
//!
//! Variables are keyed by name. The checker forbids shadowing and forbids
//! locals named like globals, so a name identifies one variable per method
//! (sibling blocks may reuse a name, but those variables never meet).

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::lang::*;

/// Pseudo-variable threaded through every statement with an externally
/// visible effect, so that reordering checks can see I/O ordering.
pub const IO_VAR: &str = "<io>";

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MethodSummary {
    /// Indices into the callee's parameter list whose referents may be mutated.
    pub mutates_params: BTreeSet<usize>,
    pub reads_globals: BTreeSet<String>,
    pub writes_globals: BTreeSet<String>,
    /// Prints or writes files, directly or through callees.
    pub io: bool,
}

impl MethodSummary {
    pub fn is_pure(&self) -> bool {
        self.mutates_params.is_empty() && self.writes_globals.is_empty() && !self.io
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StmtFacts {
    /// Killing definitions: declarations and whole-variable assignments.
    pub strong_defs: BTreeSet<String>,
    /// Partial updates (element, field or callee mutation); they do not kill.
    pub weak_defs: BTreeSet<String>,
    /// Variables read. Weak definitions are also counted as reads.
    pub uses: BTreeSet<String>,
    /// User methods called directly in this statement's own expressions.
    pub calls: Vec<String>,
    /// Prints, writes, or calls something that does.
    pub io: bool,
    pub allocates: bool,
    /// Element/field store or a call that mutates an argument or receiver.
    pub heap_write: bool,
    pub global_write: bool,
    /// May raise a runtime error or fail to terminate: division, element or
    /// field access, user calls, array allocation, loops.
    pub may_fail: bool,
}

impl StmtFacts {
    pub fn defs(&self) -> BTreeSet<String> {
        &self.strong_defs | &self.weak_defs
    }

    pub fn defines(&self, var: &str) -> bool {
        self.strong_defs.contains(var) || self.weak_defs.contains(var)
    }
}

/// Static facts for one method; `stmts[0]` is the synthetic entry node,
/// which defines every parameter and global.
#[derive(Clone, Debug)]
pub struct MethodFacts {
    pub params: Vec<String>,
    /// Declared type of every parameter and local.
    pub types: BTreeMap<String, Type>,
    pub globals: BTreeSet<String>,
    pub stmts: Vec<StmtFacts>,
    /// Reference variables that may share a referent, as a representative map.
    alias: BTreeMap<String, BTreeSet<String>>,
}

impl MethodFacts {
    pub fn is_local(&self, var: &str) -> bool {
        self.types.contains_key(var)
    }

    pub fn is_global(&self, var: &str) -> bool {
        self.globals.contains(var)
    }

    pub fn is_reference(&self, var: &str) -> bool {
        self.types.get(var).is_some_and(Type::is_reference)
    }

    /// Every variable that may share a referent with `var`, including itself.
    pub fn aliases(&self, var: &str) -> BTreeSet<String> {
        self.alias
            .get(var)
            .cloned()
            .unwrap_or_else(|| BTreeSet::from([var.to_string()]))
    }

    pub fn get(&self, id: StmtId) -> &StmtFacts {
        &self.stmts[id as usize]
    }
}

/// Analysis context shared by every per-method computation.
#[derive(Clone, Debug)]
pub struct Facts {
    pub summaries: HashMap<String, MethodSummary>,
    pub methods: HashMap<String, MethodFacts>,
}

impl Facts {
    pub fn new(program: &Program) -> Self {
        let summaries = summarize(program);
        let methods = program
            .methods
            .iter()
            .map(|m| (m.name.clone(), method_facts(program, &summaries, m)))
            .collect();
        Facts { summaries, methods }
    }

    pub fn method(&self, name: &str) -> &MethodFacts {
        &self.methods[name]
    }
}

/// Variables whose referent an expression of reference type may denote.
pub fn alias_roots(e: &Expr) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    collect_roots(e, &mut out);
    out
}

fn collect_roots(e: &Expr, out: &mut BTreeSet<String>) {
    match e {
        Expr::Var(n) => {
            out.insert(n.clone());
        }
        Expr::Field(base, _) | Expr::Index(base, _) => collect_roots(base, out),
        Expr::Call { receiver, args, .. } => {
            for a in receiver.iter().map(|r| &**r).chain(args) {
                collect_roots(a, out);
            }
        }
        Expr::ArrayLit(items) => {
            for i in items {
                collect_roots(i, out);
            }
        }
        _ => {}
    }
}

fn declared_types(m: &Method) -> BTreeMap<String, Type> {
    let mut types = BTreeMap::new();
    for p in &m.params {
        types.insert(p.name.clone(), p.ty.clone());
    }
    visit_stmts(&m.body, &mut |s| {
        let decl = match &s.kind {
            StmtKind::VarDecl(d) => Some(d),
            StmtKind::For {
                init: Some(Simple::Decl(d)),
                ..
            } => Some(d),
            _ => None,
        };
        if let Some(d) = decl {
            types.entry(d.name.clone()).or_insert_with(|| d.ty.clone());
        }
    });
    types
}

/// Simple statements of a statement, including `for` header pieces.
fn simple_parts(s: &Stmt) -> Vec<Simple> {
    match &s.kind {
        StmtKind::VarDecl(d) => vec![Simple::Decl(d.clone())],
        StmtKind::Assign(a) => vec![Simple::Assign(a.clone())],
        StmtKind::For { init, update, .. } => init.iter().chain(update).cloned().collect(),
        _ => Vec::new(),
    }
}

fn alias_classes(
    program: &Program,
    m: &Method,
    types: &BTreeMap<String, Type>,
) -> BTreeMap<String, BTreeSet<String>> {
    let globals = program.globals.iter().map(|g| (&g.name, &g.ty));
    let refs: Vec<&String> = types
        .iter()
        .chain(globals)
        .filter(|(_, t)| t.is_reference())
        .map(|(n, _)| n)
        .collect();
    let index: HashMap<&str, usize> = refs.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let mut parent: Vec<usize> = (0..refs.len()).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    let mut link = |a: &str, b: &str| {
        if let (Some(&x), Some(&y)) = (index.get(a), index.get(b)) {
            let (rx, ry) = (find(&mut parent, x), find(&mut parent, y));
            parent[rx] = ry;
        }
    };
    visit_stmts(&m.body, &mut |s| {
        for part in simple_parts(s) {
            let (target, value) = match &part {
                Simple::Decl(VarDecl {
                    name,
                    init: Some(v),
                    ..
                }) => (name.as_str(), v),
                Simple::Assign(Assign { target, value }) => (target.root.as_str(), value),
                _ => continue,
            };
            for r in alias_roots(value) {
                link(target, &r);
            }
        }
    });
    let mut classes: BTreeMap<usize, BTreeSet<String>> = BTreeMap::new();
    for (i, n) in refs.iter().enumerate() {
        let r = find(&mut parent, i);
        classes.entry(r).or_default().insert((*n).clone());
    }
    let mut out = BTreeMap::new();
    for set in classes.values() {
        for n in set {
            out.insert(n.clone(), set.clone());
        }
    }
    out
}

/// Computes effect summaries for every method as a fixpoint over the call graph.
pub fn summarize(program: &Program) -> HashMap<String, MethodSummary> {
    let mut summaries: HashMap<String, MethodSummary> = program
        .methods
        .iter()
        .map(|m| (m.name.clone(), MethodSummary::default()))
        .collect();
    loop {
        let mut changed = false;
        for m in &program.methods {
            let facts = method_facts(program, &summaries, m);
            let mut s = MethodSummary::default();
            let mut mutated: BTreeSet<String> = BTreeSet::new();
            for f in &facts.stmts[1..] {
                s.io |= f.io;
                for v in &f.weak_defs {
                    if facts.is_global(v) {
                        s.writes_globals.insert(v.clone());
                    } else {
                        mutated.extend(facts.aliases(v));
                    }
                }
                for v in &f.strong_defs {
                    if facts.is_global(v) {
                        s.writes_globals.insert(v.clone());
                    }
                }
                for v in &f.uses {
                    if facts.is_global(v) {
                        s.reads_globals.insert(v.clone());
                    }
                }
            }
            for (i, p) in m.params.iter().enumerate() {
                if p.ty.is_reference() && mutated.contains(&p.name) {
                    s.mutates_params.insert(i);
                }
            }
            if summaries[&m.name] != s {
                summaries.insert(m.name.clone(), s);
                changed = true;
            }
        }
        if !changed {
            return summaries;
        }
    }
}

pub fn method_facts(
    program: &Program,
    summaries: &HashMap<String, MethodSummary>,
    m: &Method,
) -> MethodFacts {
    let types = declared_types(m);
    let globals: BTreeSet<String> = program.globals.iter().map(|g| g.name.clone()).collect();
    let alias = alias_classes(program, m, &types);
    let mut facts = MethodFacts {
        params: m.params.iter().map(|p| p.name.clone()).collect(),
        types,
        globals,
        stmts: vec![StmtFacts::default(); m.stmt_count as usize + 1],
        alias,
    };
    let entry = &mut facts.stmts[0];
    entry.strong_defs.extend(m.params.iter().map(|p| p.name.clone()));
    entry.strong_defs.extend(program.globals.iter().map(|g| g.name.clone()));

    let mut computed = Vec::new();
    visit_stmts(&m.body, &mut |s| {
        computed.push((s.id, stmt_facts(program, summaries, &facts, s)));
    });
    for (id, f) in computed {
        facts.stmts[id as usize] = f;
    }
    facts
}

fn stmt_facts(
    program: &Program,
    summaries: &HashMap<String, MethodSummary>,
    mf: &MethodFacts,
    s: &Stmt,
) -> StmtFacts {
    let mut f = StmtFacts::default();
    for part in simple_parts(s) {
        match part {
            Simple::Decl(d) => {
                f.strong_defs.insert(d.name.clone());
            }
            Simple::Assign(a) => {
                if a.target.path.is_empty() {
                    f.strong_defs.insert(a.target.root.clone());
                } else {
                    f.heap_write = true;
                    for v in mf.aliases(&a.target.root) {
                        f.weak_defs.insert(v);
                    }
                }
            }
            Simple::Call(_) => {}
        }
    }
    for e in s.own_exprs() {
        e.walk(&mut |x| match x {
            Expr::Var(n) => {
                f.uses.insert(n.clone());
            }
            Expr::New(_) => f.allocates = true,
            Expr::Binary(BinOp::Div | BinOp::Rem, ..)
            | Expr::Index(..)
            | Expr::Field(..)
            | Expr::NewArray(..) => f.may_fail = true,
            Expr::Call {
                receiver,
                name,
                args,
            } => {
                f.may_fail = true;
                if receiver.is_none() && name == "len" {
                    return;
                }
                f.calls.push(name.clone());
                let Some(summary) = summaries.get(name) else {
                    return;
                };
                f.io |= summary.io;
                f.uses.extend(summary.reads_globals.iter().cloned());
                f.weak_defs.extend(summary.writes_globals.iter().cloned());
                let has_receiver = program.method(name).is_some_and(Method::has_receiver);
                let actuals: Vec<&Expr> = if has_receiver {
                    receiver.iter().map(|r| &**r).chain(args).collect()
                } else {
                    args.iter().collect()
                };
                for (i, a) in actuals.into_iter().enumerate() {
                    if summary.mutates_params.contains(&i) {
                        f.heap_write = true;
                        for r in alias_roots(a) {
                            f.weak_defs.extend(mf.aliases(&r));
                        }
                    }
                }
            }
            _ => {}
        })
    }
    if matches!(s.kind, StmtKind::Print(_) | StmtKind::Write { .. }) {
        f.io = true;
    }
    if matches!(s.kind, StmtKind::While { .. } | StmtKind::For { .. }) {
        f.may_fail = true;
    }
    if let StmtKind::Assign(a) = &s.kind {
        f.may_fail |= !a.target.path.is_empty();
    }
    f.global_write = f.defs().iter().any(|v| mf.is_global(v));
    let weak: Vec<String> = f.weak_defs.iter().cloned().collect();
    f.uses.extend(weak);
    f.uses.retain(|v| mf.is_local(v) || mf.is_global(v));
    f
}
