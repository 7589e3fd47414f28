//! Input-language parser, output-language AST, and printers for both.
//!
//! The concrete syntax is documented in `GRAMMAR.md` at the repository root.

mod lexer;
pub mod output;
mod parser;
mod printer;

use thiserror::Error;

pub use output::{parse_output, CmpOp, Compare, CompositeDef, CompositeFactor, Expr, GateUse, OutOp, OutQubit, OutputProgram, Stmt};
pub use parser::parse;
pub use printer::print_program;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ErrorKind {
    Syntax,
    Undeclared,
    NonLinear,
    Unsupported,
    Invalid,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {message}")]
pub struct FrontendError {
    pub kind: ErrorKind,
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl FrontendError {
    pub fn new(kind: ErrorKind, line: usize, col: usize, message: impl Into<String>) -> Self {
        FrontendError { kind, line, col, message: message.into() }
    }

    pub fn syntax(line: usize, col: usize, message: impl Into<String>) -> Self {
        FrontendError::new(ErrorKind::Syntax, line, col, message)
    }
}
