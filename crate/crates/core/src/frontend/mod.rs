//! Lexer, parser, subset validator and pretty-printer for the Python subset.
//!
//! The same tree type also carries Canonical Form Python and emitted MP-SPDZ
//! programs, so the parser accepts a little more than the subset (imports,
//! attributes, `with`) and [`validate_subset`] decides what is allowed.

pub mod ast;
mod lexer;
mod parser;
mod render;
mod validate;

pub use ast::*;
pub use lexer::{tokenize, Token, TokenKind};
pub use parser::{parse, parse_expression};
pub use render::{render, render_expr, render_stmts};
pub use validate::{
    canonical_callee, validate_subset, Profile, SubsetViolation, BASIS_CALLS, BUILTIN_CALLS,
    LIST_METHODS, MATH_CALLS, NUMPY_CALLS,
};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrontendError {
    #[error("lex error at {span}: {message}")]
    Lex { span: Span, message: String },
    #[error("parse error at {span}: expected {expected}, found {found}")]
    Parse {
        span: Span,
        expected: String,
        found: String,
    },
    #[error("{} subset violation(s): {}", .0.len(), join_violations(.0))]
    Subset(Vec<SubsetViolation>),
}

fn join_violations(v: &[SubsetViolation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

impl FrontendError {
    pub fn span(&self) -> Span {
        match self {
            FrontendError::Lex { span, .. } | FrontendError::Parse { span, .. } => *span,
            FrontendError::Subset(v) => v.first().map(|x| x.span).unwrap_or_default(),
        }
    }
}

/// Tokenizes and parses `source` without subset validation.
pub fn parse_source(source: &str) -> Result<Program, FrontendError> {
    parse(&tokenize(source)?)
}

/// Parses a standalone expression such as a mapping-table template.
pub fn parse_expr_source(source: &str) -> Result<Expr, FrontendError> {
    parse_expression(&tokenize(source)?)
}

/// Tokenizes, parses and validates `source` against the source profile.
pub fn load_program(source: &str) -> Result<Program, FrontendError> {
    validate_subset(parse_source(source)?, Profile::Source)
}
