use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::nonlinear::is_nonlinear_callee;
use super::RuleId;
use crate::emit::types::{Interface, TypeEnv};
use crate::frontend::{canonical_callee, BinOp, Expr, ExprKind, Program, Span, Stmt, StmtKind};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleSites {
    pub applicable: bool,
    /// `line:col` of every matching site.
    pub sites: Vec<String>,
}

/// Which rules match a program, and where.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternReport {
    pub rules: BTreeMap<RuleId, RuleSites>,
}

impl PatternReport {
    pub fn applicable(&self, rule: RuleId) -> bool {
        self.rules.get(&rule).is_some_and(|r| r.applicable)
    }

    pub fn applicable_rules(&self) -> Vec<RuleId> {
        RuleId::ALL.into_iter().filter(|r| self.applicable(*r)).collect()
    }

    pub fn sites(&self, rule: RuleId) -> &[String] {
        self.rules.get(&rule).map(|r| r.sites.as_slice()).unwrap_or(&[])
    }

    fn add(&mut self, rule: RuleId, span: Span) {
        let e = self.rules.entry(rule).or_default();
        e.applicable = true;
        e.sites.push(span.to_string());
    }
}

/// Detection with every parameter secret.
pub fn detect_patterns(program: &Program) -> PatternReport {
    detect_patterns_with(program, &Interface::default())
}

pub fn detect_patterns_with(program: &Program, iface: &Interface) -> PatternReport {
    let mut report = PatternReport::default();
    for r in RuleId::ALL {
        report.rules.insert(r, RuleSites::default());
    }
    let Some(f) = program.function() else {
        return report;
    };
    let env = TypeEnv::infer(f, iface);
    let mut d = Detector {
        env: &env,
        report: &mut report,
    };
    d.returns(&f.body);
    d.block(&f.body, false);
    report
}

pub(crate) const ARRAY_OPS: &[&str] = &[
    "numpy.sum", "numpy.min", "numpy.max", "numpy.where", "numpy.clip", "numpy.dot", "numpy.sort",
    "numpy.abs",
];

/// True when `e` is a call the array-lowering pass rewrites.
pub(crate) fn is_array_op(e: &Expr) -> bool {
    let ExprKind::Call { func, args } = &e.kind else {
        return false;
    };
    match canonical_callee(func).as_deref() {
        Some(p) if ARRAY_OPS.contains(&p) => true,
        Some("sum") => true,
        Some("min" | "max") => args.len() == 1,
        _ => false,
    }
}

/// True when `e` is a list-method call.
pub(crate) fn is_container_method(e: &Expr) -> bool {
    match e.method_call() {
        Some((recv, m, _)) => {
            !recv.as_name().is_some_and(|n| matches!(n, "math" | "numpy" | "np"))
                && crate::frontend::LIST_METHODS.contains(&m)
        }
        None => false,
    }
}

/// `**` whose exponent is not a non-negative integer literal.
pub(crate) fn is_nonlinear_pow(e: &Expr) -> bool {
    match &e.kind {
        ExprKind::BinOp {
            op: BinOp::Pow,
            right,
            ..
        } => !matches!(right.kind, ExprKind::Int(k) if k >= 0),
        _ => false,
    }
}

struct Detector<'a> {
    env: &'a TypeEnv,
    report: &'a mut PatternReport,
}

impl Detector<'_> {
    fn returns(&mut self, body: &[Stmt]) {
        let mut spans = Vec::new();
        for s in body {
            s.walk(&mut |s| {
                if let StmtKind::Return(_) = s.kind {
                    spans.push(s.span);
                }
            });
        }
        let final_ok = matches!(body.last().map(|s| &s.kind), Some(StmtKind::Return(_)));
        if spans.len() > 1 || (spans.len() == 1 && !final_ok) {
            for sp in spans {
                self.report.add(RuleId::NestedIfMultipleReturn, sp);
            }
        }
    }

    fn block(&mut self, stmts: &[Stmt], under_secret: bool) {
        for s in stmts {
            self.stmt(s, under_secret);
        }
    }

    fn stmt(&mut self, s: &Stmt, under_secret: bool) {
        for e in s.exprs() {
            self.expr(e);
        }
        match &s.kind {
            StmtKind::Assign { target, .. } => {
                if matches!(target.kind, ExprKind::Tuple(_)) {
                    self.report.add(RuleId::SyntaxSugar, s.span);
                }
            }
            StmtKind::Break => self.report.add(RuleId::EliminateBreak, s.span),
            StmtKind::Continue => self.report.add(RuleId::EliminateContinue, s.span),
            StmtKind::If { test, body, orelse } => {
                if under_secret {
                    self.report.add(RuleId::NestedIfMultipleReturn, s.span);
                }
                let secret = self.env.is_secret(test);
                if secret {
                    self.report.add(RuleId::ObliviousForm, s.span);
                }
                self.block(body, under_secret || secret);
                self.block(orelse, under_secret || secret);
            }
            StmtKind::For { iter, body, .. } => {
                if under_secret {
                    self.report.add(RuleId::NestedIfMultipleReturn, s.span);
                }
                if iter.callee().as_deref() != Some("range") {
                    self.report.add(RuleId::SyntaxSugar, s.span);
                }
                self.block(body, false);
            }
            StmtKind::While { body, .. } => {
                self.report.add(RuleId::RewriteWhileLoop, s.span);
                self.block(body, false);
            }
            StmtKind::With { body, .. } => self.block(body, under_secret),
            _ => {}
        }
    }

    fn expr(&mut self, e: &Expr) {
        e.walk(&mut |x| match &x.kind {
            ExprKind::IfExp { .. } | ExprKind::ListComp { .. } => {
                self.report.add(RuleId::SyntaxSugar, x.span)
            }
            ExprKind::Compare { ops, .. } if ops.len() > 1 => {
                self.report.add(RuleId::ChainedComparison, x.span)
            }
            ExprKind::Slice { .. } => self.report.add(RuleId::EliminateAdvancedArrayOperations, x.span),
            ExprKind::Index { index, .. } if self.env.expr_type(index).shape.is_container() => {
                self.report.add(RuleId::EliminateAdvancedArrayOperations, x.span)
            }
            ExprKind::BinOp { .. } if is_nonlinear_pow(x) => {
                self.report.add(RuleId::LinearNonLinear, x.span)
            }
            ExprKind::Call { func, args } => {
                if args.len() > 2 && matches!(func.as_name(), Some("min" | "max")) {
                    self.report.add(RuleId::SyntaxSugar, x.span);
                } else if is_array_op(x) {
                    self.report.add(RuleId::EliminateAdvancedArrayOperations, x.span);
                } else if is_container_method(x) {
                    self.report.add(RuleId::DataStructure, x.span);
                } else if let Some(path) = canonical_callee(func) {
                    if is_nonlinear_callee(&path) {
                        self.report.add(RuleId::LinearNonLinear, x.span);
                    }
                }
            }
            _ => {}
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::load_program;

    fn report(src: &str) -> PatternReport {
        detect_patterns(&load_program(src).unwrap())
    }

    #[test]
    fn break_example_matches_two_rules() {
        let r = report(
            "def f(a):\n    for i in range(len(a)):\n        if a[i] > 2:\n            break\n        a[i] += 1\n    return a\n",
        );
        assert_eq!(r.applicable_rules(), vec![RuleId::EliminateBreak, RuleId::ObliviousForm]);
        assert_eq!(r.sites(RuleId::EliminateBreak), ["4:13"]);
    }

    #[test]
    fn trivial_function_matches_nothing() {
        assert!(report("def f(x):\n    return x + 1\n").applicable_rules().is_empty());
    }

    #[test]
    fn logaddexp2_is_nonlinear() {
        let r = report("import numpy\ndef f(x1, x2):\n    return numpy.logaddexp2(x1, x2)\n");
        assert_eq!(r.applicable_rules(), vec![RuleId::LinearNonLinear]);
    }

    #[test]
    fn applicable_iff_sites() {
        let r = report("def f(a, b):\n    if 0 < a < 5:\n        return b\n    return [x for x in b]\n");
        for (rule, s) in &r.rules {
            assert_eq!(s.applicable, !s.sites.is_empty(), "{rule}");
        }
        assert!(r.applicable(RuleId::ChainedComparison));
        assert!(r.applicable(RuleId::NestedIfMultipleReturn));
        assert!(r.applicable(RuleId::SyntaxSugar));
    }
}
