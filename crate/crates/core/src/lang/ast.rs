//! Syntax tree for MIMPL programs.
//!
//! Statements carry dense per-method ids assigned in textual (pre-order)
//! order. Compound statements own an id and their children own their own.

use std::fmt;

pub type StmtId = u32;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Type {
    Int,
    Bool,
    Str,
    Void,
    Array(Box<Type>),
    Class(String),
}

impl Type {
    /// Arrays and objects are shared by reference; everything else is copied.
    pub fn is_reference(&self) -> bool {
        matches!(self, Type::Array(_) | Type::Class(_))
    }
}

impl serde::Serialize for Type {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Int => f.write_str("int"),
            Type::Bool => f.write_str("bool"),
            Type::Str => f.write_str("string"),
            Type::Void => f.write_str("void"),
            Type::Array(elem) => write!(f, "{elem}[]"),
            Type::Class(name) => f.write_str(name),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassDecl {
    pub name: String,
    pub fields: Vec<(String, Type)>,
}

impl ClassDecl {
    pub fn field(&self, name: &str) -> Option<&Type> {
        self.fields.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GlobalDecl {
    pub name: String,
    pub ty: Type,
    pub init: Option<Expr>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub ty: Type,
    pub is_final: bool,
}

#[derive(Clone, Debug)]
pub struct Method {
    pub name: String,
    pub params: Vec<Param>,
    pub ret: Type,
    pub body: Vec<Stmt>,
    pub stmt_count: u32,
    /// Source line of each statement, indexed by `id - 1`. Not part of equality.
    pub lines: Vec<u32>,
}

impl PartialEq for Method {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.params == other.params
            && self.ret == other.ret
            && self.body == other.body
            && self.stmt_count == other.stmt_count
    }
}

impl Eq for Method {}

impl Method {
    /// Receiver-style methods take their object as a first parameter named `this`.
    pub fn has_receiver(&self) -> bool {
        self.params.first().is_some_and(|p| p.name == "this")
    }

    pub fn line_of(&self, id: StmtId) -> u32 {
        self.lines.get(id as usize - 1).copied().unwrap_or(0)
    }

    /// Finds a statement by id anywhere in the body.
    pub fn stmt(&self, id: StmtId) -> Option<&Stmt> {
        find_stmt(&self.body, id)
    }

    /// All statements in pre-order (which is id order).
    pub fn all_stmts(&self) -> Vec<&Stmt> {
        let mut out = Vec::with_capacity(self.stmt_count as usize);
        visit_stmts(&self.body, &mut |s| out.push(s));
        out
    }
}

fn find_stmt(list: &[Stmt], id: StmtId) -> Option<&Stmt> {
    for s in list {
        if s.id == id {
            return Some(s);
        }
        for child in s.child_lists() {
            if let Some(found) = find_stmt(child, id) {
                return Some(found);
            }
        }
    }
    None
}

/// Pre-order walk over a statement list and all nested lists.
pub fn visit_stmts<'a>(list: &'a [Stmt], f: &mut dyn FnMut(&'a Stmt)) {
    for s in list {
        f(s);
        for child in s.child_lists() {
            visit_stmts(child, f);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub classes: Vec<ClassDecl>,
    pub globals: Vec<GlobalDecl>,
    pub methods: Vec<Method>,
    pub entry: Option<String>,
}

impl Program {
    pub fn method(&self, name: &str) -> Option<&Method> {
        self.methods.iter().find(|m| m.name == name)
    }

    pub fn class(&self, name: &str) -> Option<&ClassDecl> {
        self.classes.iter().find(|c| c.name == name)
    }

    pub fn global_index(&self, name: &str) -> Option<usize> {
        self.globals.iter().position(|g| g.name == name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stmt {
    pub id: StmtId,
    pub kind: StmtKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StmtKind {
    VarDecl(VarDecl),
    Assign(Assign),
    If {
        cond: Expr,
        then_body: Vec<Stmt>,
        else_body: Option<Vec<Stmt>>,
    },
    While {
        cond: Expr,
        body: Vec<Stmt>,
    },
    For {
        init: Option<Simple>,
        cond: Expr,
        update: Option<Simple>,
        body: Vec<Stmt>,
    },
    Block(Vec<Stmt>),
    Return(Option<Expr>),
    Print(Expr),
    Write {
        file: String,
        value: Expr,
    },
    /// Expression statement; the expression is always a call.
    Call(Expr),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StmtCategory {
    VarDecl,
    Assign,
    FieldAssign,
    If,
    While,
    For,
    Block,
    Return,
    Print,
    FileWrite,
    CallStmt,
    MethodCallAssign,
}

impl Stmt {
    pub fn child_lists(&self) -> Vec<&[Stmt]> {
        match &self.kind {
            StmtKind::If {
                then_body,
                else_body,
                ..
            } => {
                let mut v: Vec<&[Stmt]> = vec![then_body];
                if let Some(e) = else_body {
                    v.push(e);
                }
                v
            }
            StmtKind::While { body, .. } | StmtKind::For { body, .. } | StmtKind::Block(body) => {
                vec![body]
            }
            _ => Vec::new(),
        }
    }

    pub fn child_lists_mut(&mut self) -> Vec<&mut Vec<Stmt>> {
        match &mut self.kind {
            StmtKind::If {
                then_body,
                else_body,
                ..
            } => {
                let mut v = vec![then_body];
                if let Some(e) = else_body {
                    v.push(e);
                }
                v
            }
            StmtKind::While { body, .. } | StmtKind::For { body, .. } | StmtKind::Block(body) => {
                vec![body]
            }
            _ => Vec::new(),
        }
    }

    pub fn is_compound(&self) -> bool {
        matches!(
            self.kind,
            StmtKind::If { .. } | StmtKind::While { .. } | StmtKind::For { .. } | StmtKind::Block(_)
        )
    }

    /// Decision statements: the ones cyclomatic complexity counts.
    pub fn is_decision(&self) -> bool {
        matches!(
            self.kind,
            StmtKind::If { .. } | StmtKind::While { .. } | StmtKind::For { .. }
        )
    }

    pub fn category(&self) -> StmtCategory {
        match &self.kind {
            StmtKind::VarDecl(_) => StmtCategory::VarDecl,
            StmtKind::Assign(a) if !a.target.path.is_empty() => StmtCategory::FieldAssign,
            StmtKind::Assign(a) if matches!(a.value, Expr::Call { .. }) => {
                StmtCategory::MethodCallAssign
            }
            StmtKind::Assign(_) => StmtCategory::Assign,
            StmtKind::If { .. } => StmtCategory::If,
            StmtKind::While { .. } => StmtCategory::While,
            StmtKind::For { .. } => StmtCategory::For,
            StmtKind::Block(_) => StmtCategory::Block,
            StmtKind::Return(_) => StmtCategory::Return,
            StmtKind::Print(_) => StmtCategory::Print,
            StmtKind::Write { .. } => StmtCategory::FileWrite,
            StmtKind::Call(_) => StmtCategory::CallStmt,
        }
    }

    /// Statements that assign a value to some variable (decl-with-init,
    /// assignments of every shape).
    pub fn defines_value(&self) -> bool {
        match &self.kind {
            StmtKind::VarDecl(d) => d.init.is_some(),
            StmtKind::Assign(_) => true,
            _ => false,
        }
    }

    /// Every expression appearing directly in this statement (not in children).
    pub fn own_exprs(&self) -> Vec<&Expr> {
        match &self.kind {
            StmtKind::VarDecl(d) => d.init.iter().collect(),
            StmtKind::Assign(a) => {
                let mut v = a.target.index_exprs();
                v.push(&a.value);
                v
            }
            StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => vec![cond],
            StmtKind::For {
                init, cond, update, ..
            } => {
                let mut v = Vec::new();
                if let Some(s) = init {
                    v.extend(s.exprs());
                }
                v.push(cond);
                if let Some(s) = update {
                    v.extend(s.exprs());
                }
                v
            }
            StmtKind::Block(_) => Vec::new(),
            StmtKind::Return(e) => e.iter().collect(),
            StmtKind::Print(e) | StmtKind::Call(e) => vec![e],
            StmtKind::Write { value, .. } => vec![value],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarDecl {
    pub is_final: bool,
    pub ty: Type,
    pub name: String,
    pub init: Option<Expr>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assign {
    pub target: LValue,
    pub value: Expr,
}

/// The simple statements allowed in a `for` header.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Simple {
    Decl(VarDecl),
    Assign(Assign),
    Call(Expr),
}

impl Simple {
    pub fn exprs(&self) -> Vec<&Expr> {
        match self {
            Simple::Decl(d) => d.init.iter().collect(),
            Simple::Assign(a) => {
                let mut v = a.target.index_exprs();
                v.push(&a.value);
                v
            }
            Simple::Call(e) => vec![e],
        }
    }
}

/// Assignment target: a root variable followed by field and index accesses.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LValue {
    pub root: String,
    pub path: Vec<Access>,
}

impl LValue {
    pub fn var(name: impl Into<String>) -> Self {
        LValue {
            root: name.into(),
            path: Vec::new(),
        }
    }

    pub fn index_exprs(&self) -> Vec<&Expr> {
        self.path
            .iter()
            .filter_map(|a| match a {
                Access::Index(e) => Some(e),
                Access::Field(_) => None,
            })
            .collect()
    }

    pub fn has_field(&self) -> bool {
        self.path.iter().any(|a| matches!(a, Access::Field(_)))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Access {
    Field(String),
    Index(Expr),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div | BinOp::Rem => 6,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Int(i64),
    Bool(bool),
    Str(String),
    Var(String),
    Field(Box<Expr>, String),
    Index(Box<Expr>, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Unary(UnOp, Box<Expr>),
    Call {
        receiver: Option<Box<Expr>>,
        name: String,
        args: Vec<Expr>,
    },
    New(String),
    NewArray(Type, Box<Expr>),
    ArrayLit(Vec<Expr>),
}

impl Expr {
    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Int(_) | Expr::Bool(_) | Expr::Str(_) | Expr::Var(_) | Expr::New(_) => Vec::new(),
            Expr::Field(e, _) | Expr::Unary(_, e) | Expr::NewArray(_, e) => vec![e],
            Expr::Index(a, b) | Expr::Binary(_, a, b) => vec![a, b],
            Expr::Call { receiver, args, .. } => {
                let mut v: Vec<&Expr> = receiver.iter().map(|r| &**r).collect();
                v.extend(args);
                v
            }
            Expr::ArrayLit(items) => items.iter().collect(),
        }
    }

    /// Pre-order walk.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    /// Variable names read by this expression, in first-occurrence order.
    pub fn var_names(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        self.walk(&mut |e| {
            if let Expr::Var(n) = e {
                if !out.contains(&n.as_str()) {
                    out.push(n);
                }
            }
        });
        out
    }

    pub fn contains_new(&self) -> bool {
        let mut found = false;
        self.walk(&mut |e| {
            if matches!(e, Expr::New(_)) {
                found = true;
            }
        });
        found
    }

    pub fn contains_call(&self) -> bool {
        let mut found = false;
        self.walk(&mut |e| {
            if matches!(e, Expr::Call { .. }) {
                found = true;
            }
        });
        found
    }
}
