//! Emission of MP-SPDZ programs from certified canonical-form Python.
//!
//! [`assign_secrecy_types`] decides which values are secret,
//! [`map_names`] rewrites every call and operator through the mapping table
//! (one output statement per input statement), [`rectify`] applies the fixed
//! self-reflection rules and [`emit_source`] renders the result.

mod mapper;
mod rectify;
pub mod table;
pub mod types;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontend::{parse_source, render, Expr, ExprKind, FrontendError, FunctionDef, Program, Span, UnaryOp};
use crate::rules::Cfp;

pub use mapper::{map_names, map_names_with, Mapped};
pub use rectify::rectify;
pub use table::{key_of, DEFAULT_DEMOS, DEFAULT_MAPPING_TABLE, MappingEntry, MappingTable, PatternKey, Qualifier, TableError};
pub use types::{Interface, Numeric, Secrecy, SecrecyType, Shape, TypeEnv, VarType};

/// Import block every emitted program starts with.
pub const CANONICAL_IMPORTS: &str = "\
import math
from Compiler import mpc_math
from Compiler.types import sint
from Compiler.types import sfix
from Compiler.types import cint
from Compiler.types import cfix
from Compiler.types import regint
from Compiler.types import Array
from Compiler.types import Matrix
from Compiler.types import MemValue
from Compiler.library import *
from Compiler.sorting import radix_sort
";

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("type error at {span}: {message}")]
pub struct TypeError {
    #[serde(skip)]
    pub span: Span,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("no mapping for {callee} at {span}")]
pub struct MappingError {
    pub callee: String,
    #[serde(skip)]
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EmitError {
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error(transparent)]
    Mapping(#[from] MappingError),
}

/// A program over the MP-SPDZ surface. It shares the Python syntax tree, so
/// any MP-SPDZ text in the supported syntax parses back into it.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdzProgram {
    pub ast: Program,
}

impl SpdzProgram {
    pub fn parse(text: &str) -> Result<Self, FrontendError> {
        Ok(Self { ast: parse_source(text)? })
    }

    pub fn function(&self) -> Option<&FunctionDef> {
        self.ast.function()
    }
}

/// Deterministic rendering; reparses to a structurally equal program.
pub fn emit_source(spdz: &SpdzProgram) -> String {
    render(&spdz.ast)
}

/// A certified program with its secrecy typing.
#[derive(Debug, Clone, PartialEq)]
pub struct TypedCfp {
    pub cfp: Cfp,
    pub env: TypeEnv,
    pub interface: Interface,
}

impl TypedCfp {
    pub fn type_of(&self, e: &Expr) -> SecrecyType {
        self.env.expr_type(e).secrecy_type()
    }
}

/// Types every variable of `cfp`; parameters are secret unless listed in
/// `clear_params`.
pub fn assign_secrecy_types(cfp: &Cfp, clear_params: &BTreeSet<String>) -> Result<TypedCfp, TypeError> {
    let mut interface = cfp.interface.clone();
    interface.clear.extend(clear_params.iter().cloned());
    let f = cfp.ast.function().cloned().unwrap_or(FunctionDef {
        name: String::new(),
        params: Vec::new(),
        docstring: None,
        body: Vec::new(),
    });
    let env = TypeEnv::infer(&f, &interface);
    let mut err = None;
    for s in &f.body {
        s.walk_exprs(&mut |e| {
            if err.is_some() {
                return;
            }
            match &e.kind {
                ExprKind::BinOp { op, left, right } if op.is_bitwise() && (env.is_secret(left) || env.is_secret(right)) => {
                    err = Some(TypeError {
                        span: e.span,
                        message: format!("bitwise {} on a secret operand", op.symbol()),
                    });
                }
                ExprKind::Unary { op: UnaryOp::Invert, operand } if env.is_secret(operand) => {
                    err = Some(TypeError {
                        span: e.span,
                        message: "bitwise ~ on a secret operand".into(),
                    });
                }
                ExprKind::BoolOp { left, right, .. } if env.is_secret(left) || env.is_secret(right) => {
                    for side in [left, right] {
                        if env.is_secret(side) && !types::is_boolean_expr(&env, side) {
                            err = Some(TypeError {
                                span: side.span,
                                message: "logical operation on a secret non-boolean".into(),
                            });
                        }
                    }
                }
                _ => {}
            }
        });
    }
    if let Some(e) = err {
        return Err(e);
    }
    Ok(TypedCfp {
        cfp: cfp.clone(),
        env,
        interface,
    })
}

/// Types, maps and rectifies `cfp`.
pub fn emit_cfp(cfp: &Cfp, clear_params: &BTreeSet<String>) -> Result<Mapped, EmitError> {
    let typed = assign_secrecy_types(cfp, clear_params)?;
    let mut mapped = map_names(&typed)?;
    mapped.program = rectify(&mapped.program);
    Ok(mapped)
}
