//! Independent re-check of the canonical-form constraints.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::detect::{is_array_op, is_container_method, is_nonlinear_pow};
use super::nonlinear::is_nonlinear_callee;
use super::CertificationError;
use crate::emit::types::{Interface, TypeEnv};
use crate::frontend::{canonical_callee, validate_subset, ExprKind, Profile, Program, Stmt, StmtKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Constraint {
    NoBreak,
    NoContinue,
    NoTernary,
    NoChainedComparison,
    NoSecretWhile,
    NoListComprehension,
    SingleFinalReturn,
    NoSecretBranch,
    BasisOnlyNonlinear,
    ClearLoopBounds,
    NoContainerMethods,
    NoTupleAssignment,
    WithinSubset,
}

impl Constraint {
    pub const ALL: [Constraint; 13] = [
        Constraint::NoBreak,
        Constraint::NoContinue,
        Constraint::NoTernary,
        Constraint::NoChainedComparison,
        Constraint::NoSecretWhile,
        Constraint::NoListComprehension,
        Constraint::SingleFinalReturn,
        Constraint::NoSecretBranch,
        Constraint::BasisOnlyNonlinear,
        Constraint::ClearLoopBounds,
        Constraint::NoContainerMethods,
        Constraint::NoTupleAssignment,
        Constraint::WithinSubset,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Constraint::NoBreak => "no-break",
            Constraint::NoContinue => "no-continue",
            Constraint::NoTernary => "no-ternary",
            Constraint::NoChainedComparison => "no-chained-comparison",
            Constraint::NoSecretWhile => "no-secret-while",
            Constraint::NoListComprehension => "no-list-comprehension",
            Constraint::SingleFinalReturn => "single-final-return",
            Constraint::NoSecretBranch => "no-secret-branch",
            Constraint::BasisOnlyNonlinear => "basis-only-nonlinear",
            Constraint::ClearLoopBounds => "clear-loop-bounds",
            Constraint::NoContainerMethods => "no-container-methods",
            Constraint::NoTupleAssignment => "no-tuple-assignment",
            Constraint::WithinSubset => "within-subset",
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Checks every constraint on `program`; the certificate lists them all on
/// success, the error lists the violated ones.
pub fn certify(program: &Program, iface: &Interface) -> Result<Vec<Constraint>, CertificationError> {
    let Some(f) = program.function() else {
        return Err(CertificationError {
            failed: Constraint::ALL.to_vec(),
        });
    };
    let env = TypeEnv::infer(f, iface);
    let mut failed = std::collections::BTreeSet::new();
    let mut fail = |c: Constraint| {
        failed.insert(c);
    };

    let returns: Vec<&Stmt> = {
        let mut v = Vec::new();
        for s in &f.body {
            s.walk(&mut |s| {
                if matches!(s.kind, StmtKind::Return(_)) {
                    v.push(s);
                }
            });
        }
        v
    };
    let last_is_return = matches!(f.body.last().map(|s| &s.kind), Some(StmtKind::Return(_)));
    if returns.len() != 1 || !last_is_return {
        fail(Constraint::SingleFinalReturn);
    }

    for s in &f.body {
        s.walk(&mut |s| match &s.kind {
            StmtKind::Break => fail(Constraint::NoBreak),
            StmtKind::Continue => fail(Constraint::NoContinue),
            StmtKind::While { test, .. } if env.is_secret(test) => fail(Constraint::NoSecretWhile),
            StmtKind::If { test, .. } if env.is_secret(test) => fail(Constraint::NoSecretBranch),
            StmtKind::For { iter, .. } => {
                let clear_range = iter.callee().as_deref() == Some("range")
                    && matches!(&iter.kind, ExprKind::Call { args, .. } if args.iter().all(|a| !env.is_secret(a)));
                if !clear_range {
                    fail(Constraint::ClearLoopBounds);
                }
            }
            StmtKind::Assign { target, .. } if matches!(target.kind, ExprKind::Tuple(_)) => {
                fail(Constraint::NoTupleAssignment)
            }
            _ => {}
        });
        s.walk_exprs(&mut |e| {
            match &e.kind {
                ExprKind::IfExp { .. } => fail(Constraint::NoTernary),
                ExprKind::ListComp { .. } => fail(Constraint::NoListComprehension),
                ExprKind::Compare { ops, .. } if ops.len() > 1 => fail(Constraint::NoChainedComparison),
                ExprKind::Slice { .. } => fail(Constraint::NoContainerMethods),
                ExprKind::Call { func, .. } => {
                    if is_container_method(e) || is_array_op(e) {
                        fail(Constraint::NoContainerMethods);
                    }
                    if canonical_callee(func).is_some_and(|p| is_nonlinear_callee(&p)) {
                        fail(Constraint::BasisOnlyNonlinear);
                    }
                }
                _ => {}
            }
            if is_nonlinear_pow(e) {
                fail(Constraint::BasisOnlyNonlinear);
            }
        });
    }
    if validate_subset(program.clone(), Profile::Cfp).is_err() {
        fail(Constraint::WithinSubset);
    }
    if failed.is_empty() {
        Ok(Constraint::ALL.to_vec())
    } else {
        Err(CertificationError {
            failed: failed.into_iter().collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::load_program;

    fn failed(src: &str) -> Vec<Constraint> {
        match certify(&load_program(src).unwrap(), &Interface::default()) {
            Ok(_) => vec![],
            Err(e) => e.failed,
        }
    }

    #[test]
    fn canonical_program_certifies() {
        assert!(failed("def f(a):\n    s = 0\n    for i in range(len(a)):\n        s = s + a[i]\n    return s\n").is_empty());
    }

    #[test]
    fn each_violation_is_reported() {
        assert_eq!(failed("def f(x):\n    if x > 0:\n        return 1\n    return 0\n"), vec![Constraint::SingleFinalReturn, Constraint::NoSecretBranch]);
        assert_eq!(failed("def f(x):\n    return 0 < x < 1\n"), vec![Constraint::NoChainedComparison]);
        assert_eq!(failed("import math\ndef f(x):\n    return math.log(x)\n"), vec![Constraint::BasisOnlyNonlinear]);
        assert_eq!(failed("def f(a):\n    a.append(1)\n    return a\n"), vec![Constraint::NoContainerMethods]);
    }

    #[test]
    fn names_round_trip_through_serde() {
        for c in Constraint::ALL {
            let s = serde_json::to_string(&c).unwrap();
            assert_eq!(s, format!("\"{c}\""));
        }
    }
}
