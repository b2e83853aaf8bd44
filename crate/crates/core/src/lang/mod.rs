//! MIMPL: the small imperative language every analysis runs on.

pub mod ast;
mod check;
mod lexer;
mod parser;
mod unparse;

pub use ast::*;
pub use check::check_program;
pub use unparse::{unparse, unparse_method};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LangError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: u32, col: u32, msg: String },
    #[error("name error in {method} (line {line}): {msg}")]
    Name { method: String, line: u32, msg: String },
    #[error("type error in {method} (line {line}): {msg}")]
    Type { method: String, line: u32, msg: String },
    #[error("duplicate method name '{0}'")]
    DuplicateMethod(String),
}

impl LangError {
    pub(crate) fn syntax(line: u32, col: u32, msg: impl Into<String>) -> Self {
        LangError::Syntax {
            line,
            col,
            msg: msg.into(),
        }
    }
}

/// Parses, name-resolves and type-checks a MIMPL source text.
pub fn parse(source: &str) -> Result<Program, LangError> {
    let program = parser::parse_unchecked(source)?;
    check_program(&program)?;
    Ok(program)
}
