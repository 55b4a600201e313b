//! Java-subset frontend: tokenizer, recursive-descent parser, and def/use
//! resolution. The accepted subset is documented in `docs/subset-grammar.md`.
//!
//! Every statement lands in a flat arena ([`Ast::stmts`]) in textual order of
//! its first token, so `StmtId` order doubles as source order.

pub mod ast;
pub mod lexer;
mod parser;
mod resolve;

use std::fmt;

pub use ast::*;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
    /// Set when the input is well-formed Java that falls outside the subset.
    pub unsupported: Option<String>,
}

impl ParseError {
    pub fn new(line: usize, col: usize, message: impl Into<String>) -> Self {
        Self { line, col, message: message.into(), unsupported: None }
    }

    pub fn unsupported(line: usize, col: usize, construct: &str) -> Self {
        Self {
            line,
            col,
            message: format!("unsupported construct: {construct}"),
            unsupported: Some(construct.to_string()),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

pub fn parse_program(source: &str, id: &str) -> Result<Ast, ParseError> {
    parser::parse(id, source)
}

/// Byte-level entry point; invalid UTF-8 is reported, never panics.
pub fn parse_bytes(bytes: &[u8], id: &str) -> Result<Ast, ParseError> {
    match std::str::from_utf8(bytes) {
        Ok(s) => parse_program(s, id),
        Err(e) => {
            let prefix = &bytes[..e.valid_up_to()];
            let line = 1 + prefix.iter().filter(|b| **b == b'\n').count();
            Err(ParseError::new(line, 1, "source is not valid UTF-8"))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("no statement at line {0}")]
pub struct NotFound(pub usize);

/// The statement anchored at or spanning `line`; two statements sharing a line
/// resolve to the earlier one. Blank, comment-only and brace-only lines have none.
pub fn statement_at(ast: &Ast, line: usize) -> Result<StmtId, NotFound> {
    statements_on(ast, line).into_iter().next().ok_or(NotFound(line))
}

/// All statements anchored at or spanning `line`, in textual order.
pub fn statements_on(ast: &Ast, line: usize) -> Vec<StmtId> {
    ast.stmts
        .iter()
        .filter(|s| !matches!(s.kind, StmtKind::Block(_) | StmtKind::Empty))
        .filter(|s| {
            (s.line..=s.end_line).contains(&line)
                || matches!(s.kind, StmtKind::DoWhile { cond_line, .. } if cond_line == line)
        })
        .map(|s| s.id)
        .collect()
}
