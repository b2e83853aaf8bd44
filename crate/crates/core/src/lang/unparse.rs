//! Pretty printer. `parse(unparse(p))` reproduces `p` up to source lines.

use std::fmt::Write;

use super::ast::*;

const INDENT: &str = "    ";

pub fn unparse(program: &Program) -> String {
    let mut out = String::new();
    for c in &program.classes {
        let _ = writeln!(out, "class {} {{", c.name);
        for (f, t) in &c.fields {
            let _ = writeln!(out, "{INDENT}{t} {f};");
        }
        out.push_str("}\n\n");
    }
    for g in &program.globals {
        match &g.init {
            Some(e) => {
                let _ = writeln!(out, "{} {} = {};", g.ty, g.name, expr(e));
            }
            None => {
                let _ = writeln!(out, "{} {};", g.ty, g.name);
            }
        }
    }
    if !program.globals.is_empty() {
        out.push('\n');
    }
    for (i, m) in program.methods.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&unparse_method(m));
    }
    out
}

pub fn unparse_method(m: &Method) -> String {
    let params: Vec<String> = m
        .params
        .iter()
        .map(|p| {
            if p.is_final {
                format!("final {} {}", p.ty, p.name)
            } else {
                format!("{} {}", p.ty, p.name)
            }
        })
        .collect();
    let mut out = format!("{} {}({}) {{\n", m.ret, m.name, params.join(", "));
    stmts(&mut out, &m.body, 1);
    out.push_str("}\n");
    out
}

fn stmts(out: &mut String, list: &[Stmt], depth: usize) {
    for s in list {
        stmt(out, s, depth);
    }
}

fn stmt(out: &mut String, s: &Stmt, depth: usize) {
    let pad = INDENT.repeat(depth);
    out.push_str(&pad);
    match &s.kind {
        StmtKind::If { .. } => if_chain(out, s, depth),
        StmtKind::While { cond, body } => {
            let _ = writeln!(out, "while ({}) {{", expr(cond));
            stmts(out, body, depth + 1);
            let _ = writeln!(out, "{pad}}}");
        }
        StmtKind::For {
            init,
            cond,
            update,
            body,
        } => {
            let init = init.as_ref().map(simple).unwrap_or_default();
            let update = update.as_ref().map(simple).unwrap_or_default();
            let _ = writeln!(out, "for ({init}; {}; {update}) {{", expr(cond));
            stmts(out, body, depth + 1);
            let _ = writeln!(out, "{pad}}}");
        }
        StmtKind::Block(body) => {
            out.push_str("{\n");
            stmts(out, body, depth + 1);
            let _ = writeln!(out, "{pad}}}");
        }
        StmtKind::VarDecl(d) => {
            let _ = writeln!(out, "{};", var_decl(d));
        }
        StmtKind::Assign(a) => {
            let _ = writeln!(out, "{};", assign(a));
        }
        StmtKind::Return(None) => out.push_str("return;\n"),
        StmtKind::Return(Some(e)) => {
            let _ = writeln!(out, "return {};", expr(e));
        }
        StmtKind::Print(e) => {
            let _ = writeln!(out, "print({});", expr(e));
        }
        StmtKind::Write { file, value } => {
            let _ = writeln!(out, "write({}, {});", string_lit(file), expr(value));
        }
        StmtKind::Call(e) => {
            let _ = writeln!(out, "{};", expr(e));
        }
    }
}

/// Prints an `if` whose padding is already emitted, folding `else { if .. }`
/// into `else if`.
fn if_chain(out: &mut String, s: &Stmt, depth: usize) {
    let pad = INDENT.repeat(depth);
    let StmtKind::If {
        cond,
        then_body,
        else_body,
    } = &s.kind
    else {
        unreachable!("if_chain called on a non-if statement");
    };
    let _ = writeln!(out, "if ({}) {{", expr(cond));
    stmts(out, then_body, depth + 1);
    match else_body {
        None => {
            let _ = writeln!(out, "{pad}}}");
        }
        Some(body) if body.len() == 1 && matches!(body[0].kind, StmtKind::If { .. }) => {
            let _ = write!(out, "{pad}}} else ");
            if_chain(out, &body[0], depth);
        }
        Some(body) => {
            let _ = writeln!(out, "{pad}}} else {{");
            stmts(out, body, depth + 1);
            let _ = writeln!(out, "{pad}}}");
        }
    }
}

fn simple(s: &Simple) -> String {
    match s {
        Simple::Decl(d) => var_decl(d),
        Simple::Assign(a) => assign(a),
        Simple::Call(e) => expr(e),
    }
}

fn var_decl(d: &VarDecl) -> String {
    let fin = if d.is_final { "final " } else { "" };
    match &d.init {
        Some(e) => format!("{fin}{} {} = {}", d.ty, d.name, expr(e)),
        None => format!("{fin}{} {}", d.ty, d.name),
    }
}

fn assign(a: &Assign) -> String {
    format!("{} = {}", lvalue(&a.target), expr(&a.value))
}

pub(crate) fn lvalue(lv: &LValue) -> String {
    let mut s = lv.root.clone();
    for access in &lv.path {
        match access {
            Access::Field(f) => {
                s.push('.');
                s.push_str(f);
            }
            Access::Index(e) => {
                let _ = write!(s, "[{}]", expr(e));
            }
        }
    }
    s
}

fn string_lit(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Binding strength used for parenthesization: binary operators use their
/// precedence, unary is 7 and postfix/primary 8.
fn strength(e: &Expr) -> u8 {
    match e {
        Expr::Binary(op, ..) => op.precedence(),
        Expr::Unary(..) => 7,
        Expr::Int(v) if *v < 0 => 7,
        _ => 8,
    }
}

fn wrap(e: &Expr, min: u8) -> String {
    if strength(e) < min {
        format!("({})", expr(e))
    } else {
        expr(e)
    }
}

pub fn expr(e: &Expr) -> String {
    match e {
        Expr::Int(v) => v.to_string(),
        Expr::Bool(b) => b.to_string(),
        Expr::Str(s) => string_lit(s),
        Expr::Var(n) => n.clone(),
        Expr::Field(base, f) => format!("{}.{f}", wrap(base, 8)),
        Expr::Index(base, idx) => format!("{}[{}]", wrap(base, 8), expr(idx)),
        Expr::Binary(op, l, r) => {
            let p = op.precedence();
            format!("{} {} {}", wrap(l, p), op.symbol(), wrap(r, p + 1))
        }
        Expr::Unary(op, inner) => {
            let sym = match op {
                UnOp::Neg => "-",
                UnOp::Not => "!",
            };
            format!("{sym}{}", wrap(inner, 7))
        }
        Expr::Call {
            receiver,
            name,
            args,
        } => {
            let args: Vec<String> = args.iter().map(expr).collect();
            match receiver {
                Some(r) => format!("{}.{name}({})", wrap(r, 8), args.join(", ")),
                None => format!("{name}({})", args.join(", ")),
            }
        }
        Expr::New(c) => format!("new {c}()"),
        Expr::NewArray(t, len) => format!("new {t}[{}]", expr(len)),
        Expr::ArrayLit(items) => {
            let items: Vec<String> = items.iter().map(expr).collect();
            format!("[{}]", items.join(", "))
        }
    }
}
