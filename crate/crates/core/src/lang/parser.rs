//! Recursive-descent parser producing an unchecked [`Program`].

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::LangError;

const KEYWORDS: [&str; 16] = [
    "class", "final", "if", "else", "while", "for", "return", "print", "write", "new", "true",
    "false", "int", "bool", "string", "void",
];

pub fn parse_unchecked(src: &str) -> Result<Program, LangError> {
    let tokens = tokenize(src)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        next_id: 0,
        lines: Vec::new(),
    };
    p.program()
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    next_id: StmtId,
    lines: Vec<u32>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let idx = (self.pos + k).min(self.tokens.len() - 1);
        &self.tokens[idx].tok
    }

    fn here(&self) -> (u32, u32) {
        let t = &self.tokens[self.pos];
        (t.line, t.col)
    }

    fn error(&self, msg: impl Into<String>) -> LangError {
        Self::error_at(self.here(), msg)
    }

    fn error_at((l, c): (u32, u32), msg: impl Into<String>) -> LangError {
        LangError::syntax(l, c, msg)
    }

    fn advance(&mut self) -> Tok {
        let t = self.tokens[self.pos].tok.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(w) if w == kw)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> Result<(), LangError> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.error(format!("expected '{p}', found {}", describe(self.peek()))))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), LangError> {
        if self.is_kw(kw) {
            self.advance();
            Ok(())
        } else {
            Err(self.error(format!("expected '{kw}', found {}", describe(self.peek()))))
        }
    }

    fn ident(&mut self) -> Result<String, LangError> {
        match self.peek().clone() {
            Tok::Ident(w) if !KEYWORDS.contains(&w.as_str()) => {
                self.advance();
                Ok(w)
            }
            other => Err(self.error(format!("expected identifier, found {}", describe(&other)))),
        }
    }

    fn program(&mut self) -> Result<Program, LangError> {
        let mut prog = Program {
            classes: Vec::new(),
            globals: Vec::new(),
            methods: Vec::new(),
            entry: None,
        };
        while *self.peek() != Tok::Eof {
            if self.is_kw("class") {
                prog.classes.push(self.class_decl()?);
                continue;
            }
            let ty = self.ty()?;
            let name = self.ident()?;
            if self.is_punct("(") {
                prog.methods.push(self.method_rest(ty, name)?);
            } else {
                let init = if self.eat_punct("=") {
                    Some(self.expr()?)
                } else {
                    None
                };
                self.expect_punct(";")?;
                prog.globals.push(GlobalDecl { name, ty, init });
            }
        }
        if prog.methods.iter().any(|m| m.name == "main") {
            prog.entry = Some("main".to_string());
        }
        Ok(prog)
    }

    fn class_decl(&mut self) -> Result<ClassDecl, LangError> {
        self.expect_kw("class")?;
        let name = self.ident()?;
        self.expect_punct("{")?;
        let mut fields = Vec::new();
        while !self.eat_punct("}") {
            let ty = self.ty()?;
            let fname = self.ident()?;
            self.expect_punct(";")?;
            fields.push((fname, ty));
        }
        Ok(ClassDecl { name, fields })
    }

    fn method_rest(&mut self, ret: Type, name: String) -> Result<Method, LangError> {
        self.expect_punct("(")?;
        let mut params = Vec::new();
        if !self.is_punct(")") {
            loop {
                let is_final = if self.is_kw("final") {
                    self.advance();
                    true
                } else {
                    false
                };
                let ty = self.ty()?;
                // `this` is a keyword-like parameter name for receiver methods.
                let pname = match self.peek().clone() {
                    Tok::Ident(w) if w == "this" => {
                        self.advance();
                        w
                    }
                    _ => self.ident()?,
                };
                params.push(Param {
                    name: pname,
                    ty,
                    is_final,
                });
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        self.next_id = 0;
        self.lines.clear();
        let body = self.block()?;
        Ok(Method {
            name,
            params,
            ret,
            body,
            stmt_count: self.next_id,
            lines: std::mem::take(&mut self.lines),
        })
    }

    fn is_type_start(&self) -> bool {
        match self.peek() {
            Tok::Ident(w) if matches!(w.as_str(), "int" | "bool" | "string" | "void") => true,
            Tok::Ident(w) if !KEYWORDS.contains(&w.as_str()) => {
                // `Foo x` or `Foo[] x`
                matches!(self.peek_at(1), Tok::Ident(_))
                    || (matches!(self.peek_at(1), Tok::Punct("["))
                        && matches!(self.peek_at(2), Tok::Punct("]")))
            }
            _ => false,
        }
    }

    fn ty(&mut self) -> Result<Type, LangError> {
        let at = self.here();
        let base = match self.advance() {
            Tok::Ident(w) => match w.as_str() {
                "int" => Type::Int,
                "bool" => Type::Bool,
                "string" => Type::Str,
                "void" => Type::Void,
                other if !KEYWORDS.contains(&other) => Type::Class(w),
                _ => return Err(Self::error_at(at, format!("expected type, found '{w}'"))),
            },
            other => return Err(Self::error_at(at, format!("expected type, found {}", describe(&other)))),
        };
        let mut ty = base;
        while self.is_punct("[") && matches!(self.peek_at(1), Tok::Punct("]")) {
            self.advance();
            self.advance();
            ty = Type::Array(Box::new(ty));
        }
        Ok(ty)
    }

    fn block(&mut self) -> Result<Vec<Stmt>, LangError> {
        self.expect_punct("{")?;
        let mut stmts = Vec::new();
        while !self.eat_punct("}") {
            if *self.peek() == Tok::Eof {
                return Err(self.error("unexpected end of input, expected '}'"));
            }
            stmts.push(self.stmt()?);
        }
        Ok(stmts)
    }

    fn new_id(&mut self) -> StmtId {
        self.next_id += 1;
        let (line, _) = self.here();
        self.lines.push(line);
        self.next_id
    }

    fn stmt(&mut self) -> Result<Stmt, LangError> {
        let id = self.new_id();
        let kind = if self.is_kw("if") {
            self.advance();
            self.expect_punct("(")?;
            let cond = self.expr()?;
            self.expect_punct(")")?;
            let then_body = self.block()?;
            let else_body = if self.is_kw("else") {
                self.advance();
                if self.is_kw("if") {
                    Some(vec![self.stmt()?])
                } else {
                    Some(self.block()?)
                }
            } else {
                None
            };
            StmtKind::If {
                cond,
                then_body,
                else_body,
            }
        } else if self.is_kw("while") {
            self.advance();
            self.expect_punct("(")?;
            let cond = self.expr()?;
            self.expect_punct(")")?;
            StmtKind::While {
                cond,
                body: self.block()?,
            }
        } else if self.is_kw("for") {
            self.advance();
            self.expect_punct("(")?;
            let init = if self.is_punct(";") {
                None
            } else {
                Some(self.simple()?)
            };
            self.expect_punct(";")?;
            let cond = self.expr()?;
            self.expect_punct(";")?;
            let update = if self.is_punct(")") {
                None
            } else {
                Some(self.simple()?)
            };
            self.expect_punct(")")?;
            StmtKind::For {
                init,
                cond,
                update,
                body: self.block()?,
            }
        } else if self.is_kw("return") {
            self.advance();
            let value = if self.is_punct(";") {
                None
            } else {
                Some(self.expr()?)
            };
            self.expect_punct(";")?;
            StmtKind::Return(value)
        } else if self.is_kw("print") {
            self.advance();
            self.expect_punct("(")?;
            let e = self.expr()?;
            self.expect_punct(")")?;
            self.expect_punct(";")?;
            StmtKind::Print(e)
        } else if self.is_kw("write") {
            self.advance();
            self.expect_punct("(")?;
            let at = self.here();
            let file = match self.advance() {
                Tok::Str(s) => s,
                other => {
                    return Err(Self::error_at(at, format!(
                        "write expects a file name literal, found {}",
                        describe(&other)
                    )))
                }
            };
            self.expect_punct(",")?;
            let value = self.expr()?;
            self.expect_punct(")")?;
            self.expect_punct(";")?;
            StmtKind::Write { file, value }
        } else if self.is_punct("{") {
            StmtKind::Block(self.block()?)
        } else {
            let s = self.simple()?;
            self.expect_punct(";")?;
            match s {
                Simple::Decl(d) => StmtKind::VarDecl(d),
                Simple::Assign(a) => StmtKind::Assign(a),
                Simple::Call(e) => StmtKind::Call(e),
            }
        };
        Ok(Stmt { id, kind })
    }

    fn simple(&mut self) -> Result<Simple, LangError> {
        if self.is_kw("final") || self.is_type_start() {
            let is_final = if self.is_kw("final") {
                self.advance();
                true
            } else {
                false
            };
            let ty = self.ty()?;
            let name = self.ident()?;
            let init = if self.eat_punct("=") {
                Some(self.expr()?)
            } else {
                None
            };
            return Ok(Simple::Decl(VarDecl {
                is_final,
                ty,
                name,
                init,
            }));
        }
        let (line, col) = self.here();
        let target = self.postfix()?;
        if self.eat_punct("=") {
            let value = self.expr()?;
            let target = to_lvalue(target)
                .ok_or_else(|| LangError::syntax(line, col, "invalid assignment target"))?;
            return Ok(Simple::Assign(Assign { target, value }));
        }
        match target {
            e @ Expr::Call { .. } => Ok(Simple::Call(e)),
            _ => Err(LangError::syntax(line, col, "expression statement must be a call")),
        }
    }

    fn expr(&mut self) -> Result<Expr, LangError> {
        self.binary(1)
    }

    fn peek_binop(&self) -> Option<BinOp> {
        let Tok::Punct(p) = self.peek() else {
            return None;
        };
        Some(match *p {
            "+" => BinOp::Add,
            "-" => BinOp::Sub,
            "*" => BinOp::Mul,
            "/" => BinOp::Div,
            "%" => BinOp::Rem,
            "<" => BinOp::Lt,
            "<=" => BinOp::Le,
            ">" => BinOp::Gt,
            ">=" => BinOp::Ge,
            "==" => BinOp::Eq,
            "!=" => BinOp::Ne,
            "&&" => BinOp::And,
            "||" => BinOp::Or,
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> Result<Expr, LangError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.peek_binop() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.advance();
            let rhs = self.binary(prec + 1)?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, LangError> {
        if self.eat_punct("-") {
            return Ok(Expr::Unary(UnOp::Neg, Box::new(self.unary()?)));
        }
        if self.eat_punct("!") {
            return Ok(Expr::Unary(UnOp::Not, Box::new(self.unary()?)));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> Result<Expr, LangError> {
        let mut e = self.primary()?;
        loop {
            if self.eat_punct(".") {
                let name = self.ident()?;
                if self.is_punct("(") {
                    let args = self.args()?;
                    e = Expr::Call {
                        receiver: Some(Box::new(e)),
                        name,
                        args,
                    };
                } else {
                    e = Expr::Field(Box::new(e), name);
                }
            } else if self.is_punct("[") {
                self.advance();
                let idx = self.expr()?;
                self.expect_punct("]")?;
                e = Expr::Index(Box::new(e), Box::new(idx));
            } else {
                break;
            }
        }
        Ok(e)
    }

    fn args(&mut self) -> Result<Vec<Expr>, LangError> {
        self.expect_punct("(")?;
        let mut args = Vec::new();
        if !self.is_punct(")") {
            loop {
                args.push(self.expr()?);
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        Ok(args)
    }

    fn primary(&mut self) -> Result<Expr, LangError> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.advance();
                Ok(Expr::Int(v))
            }
            Tok::Str(s) => {
                self.advance();
                Ok(Expr::Str(s))
            }
            Tok::Punct("(") => {
                self.advance();
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            Tok::Punct("[") => {
                self.advance();
                let mut items = Vec::new();
                loop {
                    items.push(self.expr()?);
                    if !self.eat_punct(",") {
                        break;
                    }
                }
                self.expect_punct("]")?;
                Ok(Expr::ArrayLit(items))
            }
            Tok::Ident(w) if w == "true" || w == "false" => {
                self.advance();
                Ok(Expr::Bool(w == "true"))
            }
            Tok::Ident(w) if w == "new" => {
                self.advance();
                let base = self.ty_base()?;
                if self.eat_punct("[") {
                    let len = self.expr()?;
                    self.expect_punct("]")?;
                    Ok(Expr::NewArray(base, Box::new(len)))
                } else {
                    let Type::Class(name) = base else {
                        return Err(self.error("only class types can be instantiated with ()"));
                    };
                    self.expect_punct("(")?;
                    self.expect_punct(")")?;
                    Ok(Expr::New(name))
                }
            }
            Tok::Ident(w) if w == "this" => {
                self.advance();
                Ok(Expr::Var(w))
            }
            Tok::Ident(_) => {
                let name = self.ident()?;
                if self.is_punct("(") {
                    let args = self.args()?;
                    Ok(Expr::Call {
                        receiver: None,
                        name,
                        args,
                    })
                } else {
                    Ok(Expr::Var(name))
                }
            }
            other => Err(self.error(format!("expected expression, found {}", describe(&other)))),
        }
    }

    fn ty_base(&mut self) -> Result<Type, LangError> {
        let at = self.here();
        match self.advance() {
            Tok::Ident(w) => Ok(match w.as_str() {
                "int" => Type::Int,
                "bool" => Type::Bool,
                "string" => Type::Str,
                _ if !KEYWORDS.contains(&w.as_str()) => Type::Class(w),
                _ => return Err(Self::error_at(at, format!("expected type, found '{w}'"))),
            }),
            other => Err(Self::error_at(at, format!("expected type, found {}", describe(&other)))),
        }
    }
}

fn to_lvalue(e: Expr) -> Option<LValue> {
    match e {
        Expr::Var(name) => Some(LValue::var(name)),
        Expr::Field(base, field) => {
            let mut lv = to_lvalue(*base)?;
            lv.path.push(Access::Field(field));
            Some(lv)
        }
        Expr::Index(base, idx) => {
            let mut lv = to_lvalue(*base)?;
            lv.path.push(Access::Index(*idx));
            Some(lv)
        }
        _ => None,
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(w) => format!("'{w}'"),
        Tok::Int(v) => format!("integer {v}"),
        Tok::Str(_) => "string literal".to_string(),
        Tok::Punct(p) => format!("'{p}'"),
        Tok::Eof => "end of input".to_string(),
    }
}
