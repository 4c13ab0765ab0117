//! Pattern detection and the ten refactoring passes that turn a validated
//! source program into Canonical Form Python (CFP).
//!
//! [`refactor_to_cfp`] runs the passes in a fixed order. Each pass only runs
//! when [`detect_patterns`] reports its rule applicable on the current tree,
//! and detection is repeated after every pass. The result is certified by
//! [`certify`], which re-checks every canonical-form constraint with its own
//! tree queries.

mod branches;
mod certify;
mod containers;
mod detect;
mod jumps;
mod nonlinear;
mod sugar;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::emit::types::{is_boolean_expr, Interface, TypeEnv};
use crate::frontend::{
    BoolOp, CmpOp, Expr, ExprKind, FunctionDef, Program, Span, Stmt, StmtKind, UnaryOp,
};

pub use certify::{certify, Constraint};
pub use detect::{detect_patterns, detect_patterns_with, PatternReport, RuleSites};
pub use nonlinear::{NonlinearTable, TableError, DEFAULT_NONLINEAR_TABLE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RuleId {
    LinearNonLinear,
    DataStructure,
    SyntaxSugar,
    RewriteWhileLoop,
    EliminateAdvancedArrayOperations,
    EliminateBreak,
    EliminateContinue,
    NestedIfMultipleReturn,
    ChainedComparison,
    ObliviousForm,
}

impl RuleId {
    pub const ALL: [RuleId; 10] = [
        RuleId::LinearNonLinear,
        RuleId::DataStructure,
        RuleId::SyntaxSugar,
        RuleId::RewriteWhileLoop,
        RuleId::EliminateAdvancedArrayOperations,
        RuleId::EliminateBreak,
        RuleId::EliminateContinue,
        RuleId::NestedIfMultipleReturn,
        RuleId::ChainedComparison,
        RuleId::ObliviousForm,
    ];

    /// Order in which [`refactor_to_cfp`] considers the passes.
    pub const PASS_ORDER: [RuleId; 10] = [
        RuleId::SyntaxSugar,
        RuleId::ChainedComparison,
        RuleId::DataStructure,
        RuleId::RewriteWhileLoop,
        RuleId::EliminateAdvancedArrayOperations,
        RuleId::LinearNonLinear,
        RuleId::EliminateContinue,
        RuleId::EliminateBreak,
        RuleId::NestedIfMultipleReturn,
        RuleId::ObliviousForm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RuleId::LinearNonLinear => "LinearNonLinear",
            RuleId::DataStructure => "DataStructure",
            RuleId::SyntaxSugar => "SyntaxSugar",
            RuleId::RewriteWhileLoop => "RewriteWhileLoop",
            RuleId::EliminateAdvancedArrayOperations => "EliminateAdvancedArrayOperations",
            RuleId::EliminateBreak => "EliminateBreak",
            RuleId::EliminateContinue => "EliminateContinue",
            RuleId::NestedIfMultipleReturn => "NestedIfMultipleReturn",
            RuleId::ChainedComparison => "ChainedComparison",
            RuleId::ObliviousForm => "ObliviousForm",
        }
    }

    pub fn from_name(s: &str) -> Option<RuleId> {
        RuleId::ALL.into_iter().find(|r| r.name() == s)
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("{rule} at {span}: {message}")]
pub struct RuleError {
    pub rule: RuleId,
    #[serde(skip)]
    pub span: Span,
    pub message: String,
}

impl RuleError {
    pub fn new(rule: RuleId, span: Span, message: impl Into<String>) -> Self {
        Self {
            rule,
            span,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("canonical form not reached: {}", .failed.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(", "))]
pub struct CertificationError {
    pub failed: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RefactorError {
    #[error("{} rule error(s): {}", .0.len(), .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; "))]
    Rules(Vec<RuleError>),
    #[error(transparent)]
    Certification(#[from] CertificationError),
    #[error("program defines no function")]
    NoFunction,
}

/// A certified Canonical Form Python program.
#[derive(Debug, Clone, PartialEq)]
pub struct Cfp {
    pub ast: Program,
    pub certificate: Vec<Constraint>,
    /// Passes executed, in order (a pass may run once per sweep).
    pub applied: Vec<RuleId>,
    /// Rules never applicable during refactoring.
    pub skipped: Vec<RuleId>,
    /// Detection on the input program.
    pub initial: PatternReport,
    pub interface: Interface,
}

/// Upper bound on full pass sweeps before certification is final.
pub const MAX_SWEEPS: usize = 3;

/// Refactors `program` with every parameter secret.
pub fn refactor_to_cfp(program: &Program) -> Result<Cfp, RefactorError> {
    refactor_with(program, &Interface::default())
}

/// Refactors `program` under an explicit parameter interface.
pub fn refactor_with(program: &Program, iface: &Interface) -> Result<Cfp, RefactorError> {
    if program.function().is_none() {
        return Err(RefactorError::NoFunction);
    }
    let initial = detect_patterns_with(program, iface);
    let mut ast = program.clone();
    let mut applied = Vec::new();
    let mut errors: Vec<RuleError> = Vec::new();
    for _ in 0..MAX_SWEEPS {
        let mut changed = false;
        for rule in RuleId::PASS_ORDER {
            let report = detect_patterns_with(&ast, iface);
            if !report.applicable(rule) {
                continue;
            }
            match apply_rule(rule, &ast, iface) {
                Ok(next) => {
                    applied.push(rule);
                    changed |= next != ast;
                    ast = next;
                }
                Err(e) => {
                    if !errors.contains(&e) {
                        errors.push(e);
                    }
                }
            }
        }
        if !errors.is_empty() || !changed || certify(&ast, iface).is_ok() {
            break;
        }
    }
    if !errors.is_empty() {
        return Err(RefactorError::Rules(errors));
    }
    let certificate = certify(&ast, iface)?;
    let skipped = RuleId::ALL
        .into_iter()
        .filter(|r| !applied.contains(r))
        .collect();
    Ok(Cfp {
        ast,
        certificate,
        applied,
        skipped,
        initial,
        interface: iface.clone(),
    })
}

/// Runs the single pass for `rule` on `program`.
pub fn apply_rule(rule: RuleId, program: &Program, iface: &Interface) -> Result<Program, RuleError> {
    let mut out = program.clone();
    let Some(f) = out.function_mut() else {
        return Ok(out);
    };
    let mut cx = PassCx::new(f, iface, rule);
    let body = std::mem::take(&mut f.body);
    let body = match rule {
        RuleId::SyntaxSugar => sugar::desugar_syntax(body, &mut cx)?,
        RuleId::ChainedComparison => sugar::split_chained_comparisons(body, &mut cx)?,
        RuleId::DataStructure => containers::lower_data_structures(body, &mut cx)?,
        RuleId::RewriteWhileLoop => jumps::rewrite_while(body, &mut cx)?,
        RuleId::EliminateAdvancedArrayOperations => containers::lower_array_ops(body, &mut cx)?,
        RuleId::LinearNonLinear => nonlinear::decompose_nonlinear(body, &mut cx)?,
        RuleId::EliminateContinue => jumps::eliminate_continue(body, &mut cx)?,
        RuleId::EliminateBreak => jumps::eliminate_break(body, &mut cx)?,
        RuleId::NestedIfMultipleReturn => branches::flatten_branches(body, &mut cx)?,
        RuleId::ObliviousForm => branches::make_oblivious(body, &mut cx)?,
    };
    f.body = body;
    Ok(out)
}

macro_rules! pass_fn {
    ($($(#[$m:meta])* $name:ident => $rule:ident;)*) => {
        $(
            $(#[$m])*
            pub fn $name(program: &Program, iface: &Interface) -> Result<Program, RuleError> {
                apply_rule(RuleId::$rule, program, iface)
            }
        )*
    };
}

pass_fn! {
    /// Ternaries, comprehensions, tuple assignment, sequence iteration and
    /// augmented assignment rewritten into plain statements.
    desugar_syntax => SyntaxSugar;
    split_chained_comparisons => ChainedComparison;
    lower_data_structures => DataStructure;
    rewrite_while => RewriteWhileLoop;
    lower_array_ops => EliminateAdvancedArrayOperations;
    decompose_nonlinear => LinearNonLinear;
    eliminate_continue => EliminateContinue;
    eliminate_break => EliminateBreak;
    flatten_branches => NestedIfMultipleReturn;
    make_oblivious => ObliviousForm;
}

/// Per-pass state: typing of the function before the pass and a fresh-name
/// counter continuing after any names already present.
pub(crate) struct PassCx {
    pub env: TypeEnv,
    pub rule: RuleId,
    pub params: Vec<String>,
    sig: FunctionDef,
    iface: Interface,
    next: usize,
}

impl PassCx {
    fn new(f: &FunctionDef, iface: &Interface, rule: RuleId) -> Self {
        let env = TypeEnv::infer(f, iface);
        let mut next = 0;
        let mut bump = |n: &str| {
            for prefix in ["__flag_", "__t_"] {
                if let Some(k) = n.strip_prefix(prefix).and_then(|k| k.parse::<usize>().ok()) {
                    next = next.max(k + 1);
                }
            }
        };
        for s in &f.body {
            s.walk(&mut |s| {
                for n in s.assigned_names() {
                    bump(&n);
                }
            });
            s.walk_exprs(&mut |e| {
                if let Some(n) = e.as_name() {
                    bump(n);
                }
            });
        }
        let params = f.params.iter().map(|p| p.name.clone()).collect();
        let sig = FunctionDef {
            body: Vec::new(),
            ..f.clone()
        };
        Self {
            env,
            rule,
            params,
            sig,
            iface: iface.clone(),
            next,
        }
    }

    /// Re-infers types after a step introduced new variables.
    pub fn reinfer(&mut self, body: &[Stmt]) {
        let f = FunctionDef {
            body: body.to_vec(),
            ..self.sig.clone()
        };
        self.env = TypeEnv::infer(&f, &self.iface);
    }

    pub fn flag(&mut self) -> String {
        let k = self.next;
        self.next += 1;
        format!("__flag_{k}")
    }

    pub fn temp(&mut self) -> String {
        let k = self.next;
        self.next += 1;
        format!("__t_{k}")
    }

    pub fn error(&self, span: Span, message: impl Into<String>) -> RuleError {
        RuleError::new(self.rule, span, message)
    }

    pub fn is_secret(&self, e: &Expr) -> bool {
        self.env.is_secret(e)
    }

    /// `e` as a 0/1 valued condition.
    pub fn condition(&self, e: Expr) -> Expr {
        if is_boolean_expr(&self.env, &e) {
            e
        } else {
            let span = e.span;
            Expr::compare(e, CmpOp::NotEq, Expr::int(0, span))
        }
    }
}

/// Logical negation, flipping single comparisons and removing double `not`.
pub(crate) fn negate(e: Expr) -> Expr {
    match e.kind {
        ExprKind::Compare {
            left,
            ops,
            comparators,
        } if ops.len() == 1 => Expr::new(
            ExprKind::Compare {
                left,
                ops: vec![ops[0].negated()],
                comparators,
            },
            e.span,
        ),
        ExprKind::Unary {
            op: UnaryOp::Not,
            operand,
        } => *operand,
        kind => Expr::unary(UnaryOp::Not, Expr::new(kind, e.span)),
    }
}

pub(crate) fn and(a: Expr, b: Expr) -> Expr {
    Expr::boolop(BoolOp::And, a, b)
}

pub(crate) fn assign_name(n: &str, value: Expr) -> Stmt {
    let span = value.span;
    Stmt::assign(Expr::name(n, span), value)
}

/// `range(stop)` call.
pub(crate) fn range1(stop: Expr) -> Expr {
    let span = stop.span;
    Expr::call_named("range", vec![stop], span)
}

/// `len(e)` call.
pub(crate) fn len_of(e: Expr) -> Expr {
    let span = e.span;
    Expr::call_named("len", vec![e], span)
}

pub(crate) fn for_range(var: &str, iter: Expr, body: Vec<Stmt>) -> Stmt {
    let span = iter.span;
    Stmt::new(
        StmtKind::For {
            target: Expr::name(var, span),
            iter,
            body,
        },
        span,
    )
}

/// Expression rewrite that may hoist statements in front of the current one.
pub(crate) type Rewrite<'a> = dyn FnMut(Expr, &mut Vec<Stmt>, &mut PassCx) -> Result<Expr, RuleError> + 'a;

/// Rewrites every expression owned by a statement in `stmts` (recursively),
/// letting `f` emit prelude statements placed before the owning statement.
/// Expressions in `while` tests may not need a prelude.
pub(crate) fn hoist_block(
    stmts: Vec<Stmt>,
    cx: &mut PassCx,
    f: &mut Rewrite,
) -> Result<Vec<Stmt>, RuleError> {
    let mut out = Vec::with_capacity(stmts.len());
    for s in stmts {
        let span = s.span;
        let mut pre = Vec::new();
        let kind = match s.kind {
            StmtKind::Assign { target, value } => {
                let value = f(value, &mut pre, cx)?;
                let target = hoist_target(target, &mut pre, cx, f)?;
                StmtKind::Assign { target, value }
            }
            StmtKind::AugAssign { target, op, value } => {
                let value = f(value, &mut pre, cx)?;
                let target = hoist_target(target, &mut pre, cx, f)?;
                StmtKind::AugAssign { target, op, value }
            }
            StmtKind::Expr(e) => StmtKind::Expr(f(e, &mut pre, cx)?),
            StmtKind::Return(Some(e)) => StmtKind::Return(Some(f(e, &mut pre, cx)?)),
            StmtKind::If { test, body, orelse } => StmtKind::If {
                test: f(test, &mut pre, cx)?,
                body: hoist_block(body, cx, f)?,
                orelse: hoist_block(orelse, cx, f)?,
            },
            StmtKind::For { target, iter, body } => StmtKind::For {
                target,
                iter: f(iter, &mut pre, cx)?,
                body: hoist_block(body, cx, f)?,
            },
            StmtKind::While { test, body } => {
                let test = f(test, &mut pre, cx)?;
                if !pre.is_empty() {
                    return Err(cx.error(span, "rewrite needs statements inside a while condition"));
                }
                StmtKind::While {
                    test,
                    body: hoist_block(body, cx, f)?,
                }
            }
            k => k,
        };
        out.extend(pre);
        out.push(Stmt::new(kind, span));
    }
    Ok(out)
}

fn hoist_target(
    target: Expr,
    pre: &mut Vec<Stmt>,
    cx: &mut PassCx,
    f: &mut Rewrite,
) -> Result<Expr, RuleError> {
    let span = target.span;
    Ok(match target.kind {
        ExprKind::Index { value, index } => Expr::new(
            ExprKind::Index {
                value: Box::new(hoist_target(*value, pre, cx, f)?),
                index: Box::new(f(*index, pre, cx)?),
            },
            span,
        ),
        kind => Expr::new(kind, span),
    })
}

/// Bottom-up expression rewrite where `f` may fail or emit preludes.
pub(crate) fn try_map(
    e: Expr,
    pre: &mut Vec<Stmt>,
    cx: &mut PassCx,
    f: &mut Rewrite,
) -> Result<Expr, RuleError> {
    let mut err = None;
    let out = e.map(&mut |node| {
        if err.is_some() {
            return node;
        }
        let span = node.span;
        match f(node, pre, cx) {
            Ok(n) => n,
            Err(x) => {
                err = Some(x);
                Expr::int(0, span)
            }
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// Names assigned anywhere in `stmts`.
pub(crate) fn assigned_in(stmts: &[Stmt]) -> Vec<String> {
    stmts.iter().flat_map(|s| s.assigned_names()).collect()
}

/// True if any name read by `e` is assigned in `stmts`.
pub(crate) fn writes_any_read(stmts: &[Stmt], e: &Expr) -> bool {
    let written = assigned_in(stmts);
    e.names().iter().any(|n| written.contains(n))
}

/// Per-rule count of pass executions.
pub fn applied_counts(cfp: &Cfp) -> BTreeMap<RuleId, usize> {
    let mut m = BTreeMap::new();
    for r in &cfp.applied {
        *m.entry(*r).or_insert(0) += 1;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{load_program, parse_source, render};

    fn cfp_of(src: &str) -> Cfp {
        refactor_to_cfp(&load_program(src).unwrap()).unwrap()
    }

    #[test]
    fn rule_names_round_trip() {
        for r in RuleId::ALL {
            assert_eq!(RuleId::from_name(r.name()), Some(r));
        }
        let mut order = RuleId::PASS_ORDER.to_vec();
        order.sort();
        assert_eq!(order, RuleId::ALL.to_vec());
    }

    #[test]
    fn break_example_reaches_flag_form() {
        let cfp = cfp_of(
            "def f(a):\n    for i in range(len(a)):\n        if a[i] > 2:\n            break\n        a[i] += 1\n    return a\n",
        );
        let want = parse_source(
            "def f(a):\n    __flag_0 = False\n    for i in range(len(a)):\n        __flag_0 = __flag_0 or a[i] > 2\n        a[i] = __flag_0 * a[i] + (1 - __flag_0) * (a[i] + 1)\n    return a\n",
        )
        .unwrap();
        assert_eq!(cfp.ast, want, "{}", render(&cfp.ast));
        assert_eq!(cfp.applied, vec![RuleId::EliminateBreak, RuleId::ObliviousForm]);
    }

    #[test]
    fn sqrt_branch_reaches_arithmetic_form() {
        let cfp = cfp_of(
            "import math\ndef f(x):\n    if x > 0:\n        y = math.sqrt(x)\n    else:\n        y = math.sqrt(-x)\n    return y\n",
        );
        let want = parse_source(
            "import math\ndef f(x):\n    y = (x > 0) * sqrt(x) + (x <= 0) * sqrt(-x)\n    return y\n",
        )
        .unwrap();
        assert_eq!(cfp.ast, want, "{}", render(&cfp.ast));
    }

    #[test]
    fn canonical_input_is_untouched() {
        let src = "def f(x):\n    return x + 1\n";
        let cfp = cfp_of(src);
        assert!(cfp.applied.is_empty());
        assert_eq!(cfp.skipped.len(), 10);
        assert_eq!(cfp.certificate.len(), Constraint::ALL.len());
        assert_eq!(cfp.ast, load_program(src).unwrap());
    }

    #[test]
    fn secret_while_is_rejected() {
        let p = load_program("def f(x):\n    c = 0\n    while x > 1:\n        x = x / 2\n        c = c + 1\n    return c\n").unwrap();
        match refactor_to_cfp(&p) {
            Err(RefactorError::Rules(errs)) => assert_eq!(errs[0].rule, RuleId::RewriteWhileLoop),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn fresh_names_continue_after_existing() {
        let p = load_program("def f(a):\n    __t_4 = 0\n    return a\n").unwrap();
        let cx = PassCx::new(p.function().unwrap(), &Interface::default(), RuleId::SyntaxSugar);
        assert_eq!(cx.next, 5);
    }
}
