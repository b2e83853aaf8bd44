//! Name resolution, type checking, definite assignment and `final` rules.

use std::collections::{BTreeSet, HashMap, HashSet};

use super::ast::*;
use super::LangError;

pub fn check_program(program: &Program) -> Result<(), LangError> {
    let mut seen = HashSet::new();
    for m in &program.methods {
        if !seen.insert(m.name.as_str()) {
            return Err(LangError::DuplicateMethod(m.name.clone()));
        }
    }
    let top = |msg: String| LangError::Type {
        method: "<program>".into(),
        line: 0,
        msg,
    };
    let mut class_names = HashSet::new();
    for c in &program.classes {
        if !class_names.insert(c.name.as_str()) {
            return Err(top(format!("duplicate class '{}'", c.name)));
        }
        let mut fields = HashSet::new();
        for (f, t) in &c.fields {
            if !fields.insert(f.as_str()) {
                return Err(top(format!("duplicate field '{}.{f}'", c.name)));
            }
            valid_type(program, t, false).map_err(top)?;
        }
    }
    let mut globals: HashMap<&str, &Type> = HashMap::new();
    for g in &program.globals {
        if globals.contains_key(g.name.as_str()) {
            return Err(top(format!("duplicate global '{}'", g.name)));
        }
        valid_type(program, &g.ty, false).map_err(top)?;
        if let Some(init) = &g.init {
            if init.contains_call() {
                return Err(top(format!("global '{}' initializer may not call methods", g.name)));
            }
            let mut cx = Checker::new(program, "<globals>");
            cx.global_limit = Some(globals.len());
            let t = cx.expr_type(init, &Flow::default())?;
            if t != g.ty {
                return Err(top(format!(
                    "global '{}' declared {} but initialized with {t}",
                    g.name, g.ty
                )));
            }
        }
        globals.insert(&g.name, &g.ty);
    }
    for m in &program.methods {
        check_method(program, m)?;
    }
    Ok(())
}

fn valid_type(program: &Program, t: &Type, allow_void: bool) -> Result<(), String> {
    match t {
        Type::Void if !allow_void => Err("void is only valid as a return type".into()),
        Type::Array(inner) => valid_type(program, inner, false),
        Type::Class(name) if program.class(name).is_none() => Err(format!("unknown type '{name}'")),
        _ => Ok(()),
    }
}

#[derive(Clone, Debug)]
struct Local {
    index: usize,
    ty: Type,
    is_final: bool,
    loop_depth: usize,
}

/// Flow facts threaded through a statement list.
#[derive(Clone, Debug, Default)]
struct Flow {
    /// Definitely assigned locals.
    da: BTreeSet<usize>,
    /// Possibly assigned locals (for `final`).
    pa: BTreeSet<usize>,
    /// Control cannot reach this point.
    dead: bool,
}

impl Flow {
    fn join(a: Flow, b: Flow) -> Flow {
        match (a.dead, b.dead) {
            (true, true) => Flow {
                da: a.da,
                pa: &a.pa | &b.pa,
                dead: true,
            },
            // Assignments on a path that never completes do not count.
            (true, false) => b,
            (false, true) => a,
            (false, false) => Flow {
                da: &a.da & &b.da,
                pa: &a.pa | &b.pa,
                dead: false,
            },
        }
    }
}

struct Checker<'p> {
    program: &'p Program,
    method: String,
    line: u32,
    scopes: Vec<HashMap<String, Local>>,
    n_locals: usize,
    loop_depth: usize,
    ret: Type,
    /// While checking global initializers, only globals before this index are visible.
    global_limit: Option<usize>,
}

fn check_method(program: &Program, m: &Method) -> Result<(), LangError> {
    let mut cx = Checker::new(program, &m.name);
    cx.ret = m.ret.clone();
    if m.name == "len" {
        return Err(cx.name_err("'len' is a builtin and cannot be redefined"));
    }
    valid_type(program, &m.ret, true).map_err(|e| cx.type_err(e))?;
    let mut flow = Flow::default();
    cx.scopes.push(HashMap::new());
    for (i, p) in m.params.iter().enumerate() {
        valid_type(program, &p.ty, false).map_err(|e| cx.type_err(e))?;
        if p.name == "this" && (i != 0 || !matches!(p.ty, Type::Class(_))) {
            return Err(cx.type_err("'this' must be the first parameter and have a class type"));
        }
        let idx = cx.declare(&p.name, p.ty.clone(), p.is_final)?;
        flow.da.insert(idx);
        flow.pa.insert(idx);
    }
    let after = cx.check_list(&m.body, flow, m)?;
    if m.ret != Type::Void && !after.dead {
        return Err(cx.type_err("missing return statement"));
    }
    Ok(())
}

impl<'p> Checker<'p> {
    fn new(program: &'p Program, method: &str) -> Self {
        Checker {
            program,
            method: method.to_string(),
            line: 0,
            scopes: Vec::new(),
            n_locals: 0,
            loop_depth: 0,
            ret: Type::Void,
            global_limit: None,
        }
    }

    fn type_err(&self, msg: impl Into<String>) -> LangError {
        LangError::Type {
            method: self.method.clone(),
            line: self.line,
            msg: msg.into(),
        }
    }

    fn name_err(&self, msg: impl Into<String>) -> LangError {
        LangError::Name {
            method: self.method.clone(),
            line: self.line,
            msg: msg.into(),
        }
    }

    fn lookup(&self, name: &str) -> Option<&Local> {
        self.scopes.iter().rev().find_map(|s| s.get(name))
    }

    fn global(&self, name: &str) -> Option<&'p Type> {
        let limit = self.global_limit.unwrap_or(usize::MAX);
        self.program
            .globals
            .iter()
            .take(limit)
            .find(|g| g.name == name)
            .map(|g| &g.ty)
    }

    fn declare(&mut self, name: &str, ty: Type, is_final: bool) -> Result<usize, LangError> {
        if self.lookup(name).is_some() {
            return Err(self.name_err(format!(
                "variable '{name}' is already declared in an enclosing scope"
            )));
        }
        if self.global(name).is_some() {
            return Err(self.name_err(format!("variable '{name}' would hide a global")));
        }
        let index = self.n_locals;
        self.n_locals += 1;
        let local = Local {
            index,
            ty,
            is_final,
            loop_depth: self.loop_depth,
        };
        self.scopes
            .last_mut()
            .expect("scope stack is never empty inside a method")
            .insert(name.to_string(), local);
        Ok(index)
    }

    fn check_list(&mut self, list: &[Stmt], mut flow: Flow, m: &Method) -> Result<Flow, LangError> {
        for s in list {
            self.line = m.line_of(s.id);
            if flow.dead {
                return Err(self.type_err("unreachable statement"));
            }
            flow = self.check_stmt(s, flow, m)?;
        }
        Ok(flow)
    }

    fn scoped_list(&mut self, list: &[Stmt], flow: Flow, m: &Method) -> Result<Flow, LangError> {
        self.scopes.push(HashMap::new());
        let out = self.check_list(list, flow, m);
        self.scopes.pop();
        out
    }

    fn check_stmt(&mut self, s: &Stmt, mut flow: Flow, m: &Method) -> Result<Flow, LangError> {
        match &s.kind {
            StmtKind::VarDecl(d) => {
                self.var_decl(d, &mut flow)?;
                Ok(flow)
            }
            StmtKind::Assign(a) => {
                self.assign(a, &mut flow)?;
                Ok(flow)
            }
            StmtKind::If {
                cond,
                then_body,
                else_body,
            } => {
                self.expect_type(cond, &Type::Bool, &flow, "if condition")?;
                let t = self.scoped_list(then_body, flow.clone(), m)?;
                let e = match else_body {
                    Some(body) => self.scoped_list(body, flow, m)?,
                    None => flow,
                };
                Ok(Flow::join(t, e))
            }
            StmtKind::While { cond, body } => {
                self.expect_type(cond, &Type::Bool, &flow, "while condition")?;
                self.loop_depth += 1;
                let b = self.scoped_list(body, flow.clone(), m);
                self.loop_depth -= 1;
                let b = b?;
                flow.pa.extend(b.pa);
                Ok(flow)
            }
            StmtKind::For {
                init,
                cond,
                update,
                body,
            } => {
                self.scopes.push(HashMap::new());
                let result = (|| {
                    if let Some(init) = init {
                        self.simple(init, &mut flow)?;
                    }
                    self.expect_type(cond, &Type::Bool, &flow, "for condition")?;
                    self.loop_depth += 1;
                    let b = self.scoped_list(body, flow.clone(), m);
                    let b = match b {
                        Ok(b) => b,
                        Err(e) => {
                            self.loop_depth -= 1;
                            return Err(e);
                        }
                    };
                    let mut after_body = if b.dead { flow.clone() } else { b.clone() };
                    let upd = match update {
                        Some(u) => self.simple(u, &mut after_body),
                        None => Ok(()),
                    };
                    self.loop_depth -= 1;
                    upd?;
                    flow.pa.extend(b.pa);
                    flow.pa.extend(after_body.pa);
                    Ok(flow.clone())
                })();
                self.scopes.pop();
                result
            }
            StmtKind::Block(body) => self.scoped_list(body, flow, m),
            StmtKind::Return(value) => {
                match (value, &self.ret) {
                    (None, Type::Void) => {}
                    (None, t) => return Err(self.type_err(format!("missing return value of type {t}"))),
                    (Some(_), Type::Void) => {
                        return Err(self.type_err("void method cannot return a value"))
                    }
                    (Some(e), t) => {
                        let t = t.clone();
                        self.expect_type(e, &t, &flow, "return value")?;
                    }
                }
                flow.dead = true;
                Ok(flow)
            }
            StmtKind::Print(e) => {
                let t = self.expr_type(e, &flow)?;
                if t == Type::Void {
                    return Err(self.type_err("cannot print a void value"));
                }
                Ok(flow)
            }
            StmtKind::Write { value, .. } => {
                let t = self.expr_type(value, &flow)?;
                if t == Type::Void {
                    return Err(self.type_err("cannot write a void value"));
                }
                Ok(flow)
            }
            StmtKind::Call(e) => {
                self.call_type(e, &flow, true)?;
                Ok(flow)
            }
        }
    }

    fn simple(&mut self, s: &Simple, flow: &mut Flow) -> Result<(), LangError> {
        match s {
            Simple::Decl(d) => self.var_decl(d, flow),
            Simple::Assign(a) => self.assign(a, flow),
            Simple::Call(e) => self.call_type(e, flow, true).map(|_| ()),
        }
    }

    fn var_decl(&mut self, d: &VarDecl, flow: &mut Flow) -> Result<(), LangError> {
        valid_type(self.program, &d.ty, false).map_err(|e| self.type_err(e))?;
        if let Some(init) = &d.init {
            self.expect_type(init, &d.ty, flow, &format!("initializer of '{}'", d.name))?;
        }
        let idx = self.declare(&d.name, d.ty.clone(), d.is_final)?;
        if d.init.is_some() {
            flow.da.insert(idx);
            flow.pa.insert(idx);
        }
        Ok(())
    }

    fn assign(&mut self, a: &Assign, flow: &mut Flow) -> Result<(), LangError> {
        let target_ty = self.lvalue_type(&a.target, flow)?;
        self.expect_type(&a.value, &target_ty, flow, "assigned value")?;
        if a.target.path.is_empty() {
            if let Some(local) = self.lookup(&a.target.root).cloned() {
                if local.is_final {
                    if flow.pa.contains(&local.index) {
                        return Err(self.type_err(format!(
                            "final variable '{}' may already have been assigned",
                            a.target.root
                        )));
                    }
                    if self.loop_depth > local.loop_depth {
                        return Err(self.type_err(format!(
                            "final variable '{}' cannot be assigned in a loop",
                            a.target.root
                        )));
                    }
                }
                flow.da.insert(local.index);
                flow.pa.insert(local.index);
            }
        }
        Ok(())
    }

    fn lvalue_type(&self, lv: &LValue, flow: &Flow) -> Result<Type, LangError> {
        let mut ty = match self.lookup(&lv.root) {
            Some(local) => {
                if !lv.path.is_empty() && !flow.da.contains(&local.index) {
                    return Err(self.type_err(format!(
                        "variable '{}' might not have been initialized",
                        lv.root
                    )));
                }
                local.ty.clone()
            }
            None => self
                .global(&lv.root)
                .cloned()
                .ok_or_else(|| self.name_err(format!("undeclared identifier '{}'", lv.root)))?,
        };
        for access in &lv.path {
            ty = match access {
                Access::Field(f) => self.field_type(&ty, f)?,
                Access::Index(idx) => {
                    self.expect_type(idx, &Type::Int, flow, "array index")?;
                    match ty {
                        Type::Array(elem) => *elem,
                        other => return Err(self.type_err(format!("cannot index into {other}"))),
                    }
                }
            };
        }
        Ok(ty)
    }

    fn field_type(&self, ty: &Type, field: &str) -> Result<Type, LangError> {
        match ty {
            Type::Class(c) => self
                .program
                .class(c)
                .and_then(|cls| cls.field(field))
                .cloned()
                .ok_or_else(|| self.type_err(format!("type {c} has no field '{field}'"))),
            other => Err(self.type_err(format!("type {other} has no fields"))),
        }
    }

    fn expect_type(&self, e: &Expr, want: &Type, flow: &Flow, what: &str) -> Result<(), LangError> {
        let got = self.expr_type(e, flow)?;
        if &got != want {
            return Err(self.type_err(format!("{what}: expected {want}, found {got}")));
        }
        Ok(())
    }

    fn expr_type(&self, e: &Expr, flow: &Flow) -> Result<Type, LangError> {
        Ok(match e {
            Expr::Int(_) => Type::Int,
            Expr::Bool(_) => Type::Bool,
            Expr::Str(_) => Type::Str,
            Expr::Var(name) => match self.lookup(name) {
                Some(local) => {
                    if !flow.da.contains(&local.index) {
                        return Err(self.type_err(format!(
                            "variable '{name}' might not have been initialized"
                        )));
                    }
                    local.ty.clone()
                }
                None => self
                    .global(name)
                    .cloned()
                    .ok_or_else(|| self.name_err(format!("undeclared identifier '{name}'")))?,
            },
            Expr::Field(base, f) => {
                let bt = self.expr_type(base, flow)?;
                self.field_type(&bt, f)?
            }
            Expr::Index(base, idx) => {
                self.expect_type(idx, &Type::Int, flow, "array index")?;
                match self.expr_type(base, flow)? {
                    Type::Array(elem) => *elem,
                    other => return Err(self.type_err(format!("cannot index into {other}"))),
                }
            }
            Expr::Binary(op, l, r) => {
                let lt = self.expr_type(l, flow)?;
                let rt = self.expr_type(r, flow)?;
                self.binary_type(*op, lt, rt)?
            }
            Expr::Unary(UnOp::Neg, inner) => {
                self.expect_type(inner, &Type::Int, flow, "operand of unary '-'")?;
                Type::Int
            }
            Expr::Unary(UnOp::Not, inner) => {
                self.expect_type(inner, &Type::Bool, flow, "operand of '!'")?;
                Type::Bool
            }
            Expr::Call { .. } => {
                let t = self.call_type(e, flow, false)?;
                if t == Type::Void {
                    return Err(self.type_err("void call used as a value"));
                }
                t
            }
            Expr::New(c) => {
                if self.program.class(c).is_none() {
                    return Err(self.name_err(format!("unknown class '{c}'")));
                }
                Type::Class(c.clone())
            }
            Expr::NewArray(elem, len) => {
                valid_type(self.program, elem, false).map_err(|m| self.type_err(m))?;
                self.expect_type(len, &Type::Int, flow, "array length")?;
                Type::Array(Box::new(elem.clone()))
            }
            Expr::ArrayLit(items) => {
                let first = self.expr_type(&items[0], flow)?;
                for item in &items[1..] {
                    self.expect_type(item, &first, flow, "array literal element")?;
                }
                Type::Array(Box::new(first))
            }
        })
    }

    fn binary_type(&self, op: BinOp, lt: Type, rt: Type) -> Result<Type, LangError> {
        use BinOp::*;
        let scalar = |t: &Type| matches!(t, Type::Int | Type::Bool | Type::Str);
        let bad = || {
            self.type_err(format!(
                "operator '{}' cannot be applied to {lt} and {rt}",
                op.symbol()
            ))
        };
        match op {
            Add if (lt == Type::Str && scalar(&rt)) || (rt == Type::Str && scalar(&lt)) => {
                Ok(Type::Str)
            }
            Add | Sub | Mul | Div | Rem if lt == Type::Int && rt == Type::Int => Ok(Type::Int),
            Lt | Le | Gt | Ge if lt == Type::Int && rt == Type::Int => Ok(Type::Bool),
            Eq | Ne if lt == rt && lt != Type::Void => Ok(Type::Bool),
            And | Or if lt == Type::Bool && rt == Type::Bool => Ok(Type::Bool),
            _ => Err(bad()),
        }
    }

    fn call_type(&self, e: &Expr, flow: &Flow, as_stmt: bool) -> Result<Type, LangError> {
        let Expr::Call {
            receiver,
            name,
            args,
        } = e
        else {
            return Err(self.type_err("expression statement must be a call"));
        };
        if receiver.is_none() && name == "len" {
            if args.len() != 1 {
                return Err(self.type_err("len expects exactly one argument"));
            }
            return match self.expr_type(&args[0], flow)? {
                Type::Array(_) => Ok(Type::Int),
                other => Err(self.type_err(format!("len expects an array, found {other}"))),
            };
        }
        if self.global_limit.is_some() {
            return Err(self.type_err("calls are not allowed here"));
        }
        let callee = self
            .program
            .method(name)
            .ok_or_else(|| self.name_err(format!("undeclared method '{name}'")))?;
        let params: &[Param] = match receiver {
            Some(r) => {
                if !callee.has_receiver() {
                    return Err(self.type_err(format!("method '{name}' has no receiver")));
                }
                let rt = self.expr_type(r, flow)?;
                if rt != callee.params[0].ty {
                    return Err(self.type_err(format!(
                        "method '{name}' expects a receiver of type {}, found {rt}",
                        callee.params[0].ty
                    )));
                }
                &callee.params[1..]
            }
            None => {
                if callee.has_receiver() {
                    return Err(self.type_err(format!("method '{name}' requires a receiver")));
                }
                &callee.params
            }
        };
        if params.len() != args.len() {
            return Err(self.type_err(format!(
                "method '{name}' expects {} arguments, found {}",
                params.len(),
                args.len()
            )));
        }
        for (p, a) in params.iter().zip(args) {
            self.expect_type(a, &p.ty, flow, &format!("argument '{}' of {name}", p.name))?;
        }
        let _ = as_stmt;
        Ok(callee.ret.clone())
    }
}
