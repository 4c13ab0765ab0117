//! Branch flattening (single return, no nesting under secret conditions)
//! and the final rewrite of secret branches into arithmetic selection.

use std::collections::BTreeSet;

use super::jumps::{Jump, JumpEliminator};
use super::{and, assign_name, negate, writes_any_read, PassCx, RuleError};
use crate::emit::types::Numeric;
use crate::frontend::{BinOp, BoolOp, Expr, ExprKind, Stmt, StmtKind, UnaryOp};

fn count_returns(stmts: &[Stmt]) -> usize {
    let mut n = 0;
    for s in stmts {
        s.walk(&mut |x| {
            if matches!(x.kind, StmtKind::Return(_)) {
                n += 1;
            }
        });
    }
    n
}

fn always_returns(stmts: &[Stmt]) -> bool {
    match stmts.last().map(|s| &s.kind) {
        Some(StmtKind::Return(_)) => true,
        Some(StmtKind::If { body, orelse, .. }) => always_returns(body) && always_returns(orelse),
        _ => false,
    }
}

/// Moves the statements following `if c: ...return` into its else branch.
fn fold_tail(stmts: Vec<Stmt>) -> Vec<Stmt> {
    let mut out = Vec::new();
    let mut iter = stmts.into_iter();
    while let Some(s) = iter.next() {
        let span = s.span;
        match s.kind {
            StmtKind::If { test, body, orelse } => {
                let body = fold_tail(body);
                let mut orelse = fold_tail(orelse);
                let b = always_returns(&body);
                let o = always_returns(&orelse);
                if b && !o && count_returns(&orelse) == 0 {
                    orelse.extend(iter.by_ref());
                    let orelse = fold_tail(orelse);
                    out.push(Stmt::new(StmtKind::If { test, body, orelse }, span));
                    break;
                }
                out.push(Stmt::new(StmtKind::If { test, body, orelse }, span));
            }
            k => out.push(Stmt::new(k, span)),
        }
    }
    out
}

/// Returns appear only as the last statement of tail blocks.
fn tail_only(stmts: &[Stmt]) -> bool {
    let Some((last, init)) = stmts.split_last() else {
        return false;
    };
    if count_returns(init) > 0 {
        return false;
    }
    match &last.kind {
        StmtKind::Return(_) => true,
        StmtKind::If { body, orelse, .. } => tail_only(body) && tail_only(orelse),
        _ => false,
    }
}

fn tail_to_result(stmts: Vec<Stmt>, r: &str) -> Vec<Stmt> {
    stmts
        .into_iter()
        .map(|s| {
            let span = s.span;
            match s.kind {
                StmtKind::Return(Some(e)) => assign_name(r, e),
                StmtKind::If { test, body, orelse } => Stmt::new(
                    StmtKind::If {
                        test,
                        body: tail_to_result(body, r),
                        orelse: tail_to_result(orelse, r),
                    },
                    span,
                ),
                k => Stmt::new(k, span),
            }
        })
        .collect()
}

fn single_return(body: Vec<Stmt>, cx: &mut PassCx) -> Result<Vec<Stmt>, RuleError> {
    let n = count_returns(&body);
    let final_ok = matches!(body.last().map(|s| &s.kind), Some(StmtKind::Return(_)));
    if n == 0 || (n == 1 && final_ok) {
        return Ok(body);
    }
    let span = body.last().map(|s| s.span).unwrap_or_default();
    let body = fold_tail(body);
    let r = cx.temp();
    let mut out = if tail_only(&body) {
        tail_to_result(body, &r)
    } else {
        let flag = cx.flag();
        let mut el = JumpEliminator {
            kind: Jump::Return,
            flag: flag.clone(),
            result: Some(r.clone()),
            cx,
        };
        let mut out = vec![assign_name(&flag, Expr::boolean(false, span))];
        out.extend(el.block(body, false)?);
        out
    };
    out.push(Stmt::new(StmtKind::Return(Some(Expr::name(&r, span))), span));
    Ok(out)
}

fn has_compound(stmts: &[Stmt]) -> bool {
    stmts
        .iter()
        .any(|s| matches!(s.kind, StmtKind::If { .. } | StmtKind::For { .. } | StmtKind::While { .. }))
}

struct Flattener<'a> {
    cx: &'a mut PassCx,
}

impl Flattener<'_> {
    fn block(&mut self, stmts: Vec<Stmt>) -> Result<Vec<Stmt>, RuleError> {
        let mut out = Vec::new();
        for s in stmts {
            let span = s.span;
            match s.kind {
                StmtKind::If { test, body, orelse } if self.cx.is_secret(&test) && (has_compound(&body) || has_compound(&orelse)) => {
                    let mut all = body.clone();
                    all.extend(orelse.iter().cloned());
                    let g = self.hoisted(test, &all, &mut out);
                    self.guarded(g.clone(), body, &mut out)?;
                    self.guarded(negate(g), orelse, &mut out)?;
                }
                StmtKind::If { test, body, orelse } => out.push(Stmt::new(
                    StmtKind::If {
                        test,
                        body: self.block(body)?,
                        orelse: self.block(orelse)?,
                    },
                    span,
                )),
                StmtKind::For { target, iter, body } => out.push(Stmt::new(
                    StmtKind::For {
                        target,
                        iter,
                        body: self.block(body)?,
                    },
                    span,
                )),
                StmtKind::While { test, body } => out.push(Stmt::new(
                    StmtKind::While {
                        test,
                        body: self.block(body)?,
                    },
                    span,
                )),
                k => out.push(Stmt::new(k, span)),
            }
        }
        Ok(out)
    }

    /// `test` as a condition, saved to a temporary when `stmts` write a
    /// variable it reads.
    fn hoisted(&mut self, test: Expr, stmts: &[Stmt], out: &mut Vec<Stmt>) -> Expr {
        let c = self.cx.condition(test);
        if writes_any_read(stmts, &c) {
            let t = self.cx.temp();
            let span = c.span;
            out.push(assign_name(&t, c));
            Expr::name(t, span)
        } else {
            c
        }
    }

    fn guarded(&mut self, g: Expr, stmts: Vec<Stmt>, out: &mut Vec<Stmt>) -> Result<(), RuleError> {
        let mut run = Vec::new();
        let flush = |run: &mut Vec<Stmt>, out: &mut Vec<Stmt>| {
            if !run.is_empty() {
                out.push(Stmt::if_(g.clone(), std::mem::take(run), vec![]));
            }
        };
        for s in stmts {
            let span = s.span;
            match s.kind {
                StmtKind::If { test, body, orelse } => {
                    flush(&mut run, out);
                    let mut all = body.clone();
                    all.extend(orelse.iter().cloned());
                    let c = self.hoisted(test, &all, out);
                    self.guarded(and(g.clone(), c.clone()), body, out)?;
                    self.guarded(and(g.clone(), negate(c)), orelse, out)?;
                }
                StmtKind::For { target, iter, body } => {
                    flush(&mut run, out);
                    let mut inner = Vec::new();
                    self.guarded(g.clone(), body, &mut inner)?;
                    out.push(Stmt::new(StmtKind::For { target, iter, body: inner }, span));
                }
                StmtKind::While { .. } => {
                    return Err(self.cx.error(span, "while loop under a secret condition"));
                }
                StmtKind::Pass => {}
                k => run.push(Stmt::new(k, span)),
            }
        }
        flush(&mut run, out);
        Ok(())
    }
}

pub(crate) fn flatten_branches(body: Vec<Stmt>, cx: &mut PassCx) -> Result<Vec<Stmt>, RuleError> {
    let body = single_return(body, cx)?;
    cx.reinfer(&body);
    // guards of loops pushed out of a branch must not change inside the loop
    let mut f = Flattener { cx };
    let mut body = body;
    for _ in 0..8 {
        let next = f.block(body.clone())?;
        if next == body {
            break;
        }
        body = next;
    }
    Ok(body)
}

struct Oblivious<'a> {
    cx: &'a mut PassCx,
    assigned: BTreeSet<String>,
    inits: Vec<String>,
}

fn mul(a: Expr, b: Expr) -> Expr {
    Expr::binop(BinOp::Mul, a, b)
}

fn one_minus(c: Expr) -> Expr {
    let span = c.span;
    Expr::binop(BinOp::Sub, Expr::int(1, span), c)
}

fn select(c: Expr, a: Expr, b: Expr) -> Expr {
    let nc = match &c.kind {
        ExprKind::Compare { ops, .. } if ops.len() == 1 => negate(c.clone()),
        _ => one_minus(c.clone()),
    };
    Expr::binop(BinOp::Add, mul(c, a), mul(nc, b))
}

impl Oblivious<'_> {
    fn block(&mut self, stmts: Vec<Stmt>) -> Result<Vec<Stmt>, RuleError> {
        let mut out = Vec::new();
        for s in stmts {
            let span = s.span;
            match s.kind {
                StmtKind::If { test, body, orelse } if self.cx.is_secret(&test) => {
                    let body = self.plain(body)?;
                    let orelse = self.plain(orelse)?;
                    self.combine(test, body, orelse, &mut out);
                }
                StmtKind::If { test, body, orelse } => {
                    let body = self.block(body)?;
                    let orelse = self.block(orelse)?;
                    out.push(Stmt::new(StmtKind::If { test, body, orelse }, span));
                }
                StmtKind::For { target, iter, body } => {
                    if let Some(n) = target.as_name() {
                        self.assigned.insert(n.to_string());
                    }
                    let body = self.block(body)?;
                    out.push(Stmt::new(StmtKind::For { target, iter, body }, span));
                }
                StmtKind::While { test, body } => {
                    let body = self.block(body)?;
                    out.push(Stmt::new(StmtKind::While { test, body }, span));
                }
                k => {
                    let s = Stmt::new(k, span);
                    self.assigned.extend(s.assigned_names());
                    out.push(s);
                }
            }
        }
        Ok(out)
    }

    /// Branch bodies reduced to `(target, value)` assignments.
    fn plain(&mut self, stmts: Vec<Stmt>) -> Result<Vec<(Expr, Expr)>, RuleError> {
        let mut out = Vec::new();
        for s in stmts {
            match s.kind {
                StmtKind::Assign { target, value } => out.push((target, value)),
                StmtKind::AugAssign { target, op, value } => {
                    let v = Expr::binop(op, target.clone(), value);
                    out.push((target, v));
                }
                StmtKind::Pass => {}
                StmtKind::For { .. } | StmtKind::While { .. } => {
                    return Err(self.cx.error(s.span, "secret-dependent loop bound"));
                }
                _ => {
                    return Err(self.cx.error(s.span, "statement cannot be made oblivious"));
                }
            }
        }
        Ok(out)
    }

    fn combine(
        &mut self,
        test: Expr,
        body: Vec<(Expr, Expr)>,
        orelse: Vec<(Expr, Expr)>,
        out: &mut Vec<Stmt>,
    ) {
        if let ([(t1, a)], [(t2, b)]) = (body.as_slice(), orelse.as_slice()) {
            if t1 == t2 {
                let c = self.cx.condition(test);
                out.push(Stmt::assign(t1.clone(), select(c, a.clone(), b.clone())));
                self.note_assigned(t1);
                return;
            }
        }
        let c = self.cx.condition(test);
        let written: Vec<Stmt> = body
            .iter()
            .chain(&orelse)
            .map(|(t, v)| Stmt::assign(t.clone(), v.clone()))
            .collect();
        let g = if writes_any_read(&written, &c) {
            let t = self.cx.temp();
            let span = c.span;
            out.push(assign_name(&t, c));
            self.assigned.insert(t.clone());
            Expr::name(t, span)
        } else {
            c
        };
        for (t, v) in body {
            out.push(self.one_armed(g.clone(), t, v));
        }
        let ng = negate(g);
        for (t, v) in orelse {
            out.push(self.one_armed(ng.clone(), t, v));
        }
    }

    fn note_assigned(&mut self, t: &Expr) {
        if let Some(r) = crate::frontend::target_root(t) {
            self.assigned.insert(r.to_string());
        }
    }

    fn one_armed(&mut self, g: Expr, target: Expr, v: Expr) -> Stmt {
        if let Some(n) = target.as_name() {
            if !self.assigned.contains(n) && !self.inits.iter().any(|x| x == n) {
                self.inits.push(n.to_string());
            }
        }
        self.note_assigned(&target);
        let is_bool = self.cx.env.expr_type(&target).numeric == Numeric::Bool;
        if is_bool {
            // flags keep boolean form
            match &v.kind {
                ExprKind::Bool(true) => {
                    return Stmt::assign(target.clone(), Expr::boolop(BoolOp::Or, target, g));
                }
                ExprKind::BoolOp { op: BoolOp::Or, left, right } if **left == target => {
                    let rhs = and(g, (**right).clone());
                    return Stmt::assign(target.clone(), Expr::boolop(BoolOp::Or, target, rhs));
                }
                _ => {}
            }
        }
        let value = match g.kind {
            ExprKind::Unary {
                op: UnaryOp::Not,
                operand,
            } => {
                let d = *operand;
                Expr::binop(BinOp::Add, mul(d.clone(), target.clone()), mul(one_minus(d), v))
            }
            _ => Expr::binop(BinOp::Add, mul(g.clone(), v), mul(one_minus(g), target.clone())),
        };
        Stmt::assign(target, value)
    }
}

pub(crate) fn make_oblivious(body: Vec<Stmt>, cx: &mut PassCx) -> Result<Vec<Stmt>, RuleError> {
    let span = body.first().map(|s| s.span).unwrap_or_default();
    let mut ob = Oblivious {
        cx,
        assigned: BTreeSet::new(),
        inits: Vec::new(),
    };
    let params = ob.cx.params.clone();
    ob.assigned.extend(params);
    let body = ob.block(body)?;
    let mut out: Vec<Stmt> = ob
        .inits
        .iter()
        .map(|n| assign_name(n, Expr::int(0, span)))
        .collect();
    out.extend(body);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use crate::emit::types::Interface;
    use crate::frontend::{load_program, parse_source, render, Program};
    use crate::pyexec::{run, PyValue};
    use crate::rules::{apply_rule, refactor_to_cfp, RuleId};

    fn pass(rule: RuleId, src: &str) -> Program {
        apply_rule(rule, &load_program(src).unwrap(), &Interface::default()).unwrap()
    }

    fn agree(src: &str, grid: &[Vec<PyValue>]) {
        let p = load_program(src).unwrap();
        let cfp = refactor_to_cfp(&p).unwrap();
        for inputs in grid {
            assert_eq!(run(&p, inputs).unwrap(), run(&cfp.ast, inputs).unwrap(), "{}", render(&cfp.ast));
        }
    }

    #[test]
    fn early_returns_become_result_variable() {
        let src = "def f(x):\n    if x > 0:\n        return 1\n    if x < 0:\n        return -1\n    return 0\n";
        let p = pass(RuleId::NestedIfMultipleReturn, src);
        let text = render(&p);
        assert_eq!(text.matches("return").count(), 1, "{text}");
        let grid: Vec<Vec<PyValue>> = [-2, 0, 3].iter().map(|x| vec![PyValue::int(*x)]).collect();
        agree(src, &grid);
    }

    #[test]
    fn nested_if_guards_conjoin() {
        let src = "def f(a, b):\n    y = 0\n    if a > 10:\n        if b > 2:\n            y = 1\n        else:\n            y = 2\n    return y\n";
        let p = pass(RuleId::NestedIfMultipleReturn, src);
        let want = parse_source(
            "def f(a, b):\n    y = 0\n    if a > 10 and b > 2:\n        y = 1\n    if a > 10 and b <= 2:\n        y = 2\n    return y\n",
        )
        .unwrap();
        assert_eq!(p, want, "{}", render(&p));
    }

    #[test]
    fn return_inside_loop_uses_done_flag() {
        let src = "def f(a, x):\n    for i in range(len(a)):\n        if a[i] == x:\n            return i\n    return -1\n";
        let grid = vec![
            vec![PyValue::ints(&[4, 5, 6]), PyValue::int(5)],
            vec![PyValue::ints(&[4, 5, 5]), PyValue::int(5)],
            vec![PyValue::ints(&[4, 5, 6]), PyValue::int(9)],
        ];
        agree(src, &grid);
    }

    #[test]
    fn secret_array_write_is_selected() {
        let p = pass(RuleId::ObliviousForm, "def f(a, g, v):\n    if g > 0:\n        a[0] = v\n    return a\n");
        let want = parse_source("def f(a, g, v):\n    a[0] = (g > 0) * v + (1 - (g > 0)) * a[0]\n    return a\n").unwrap();
        assert_eq!(p, want, "{}", render(&p));
    }

    #[test]
    fn clear_branch_is_untouched() {
        let src = "def f(x, n):\n    if n > 0:\n        x = 1\n    return x\n";
        let p = apply_rule(RuleId::ObliviousForm, &load_program(src).unwrap(), &Interface::with_clear(["n".into()])).unwrap();
        assert_eq!(p, load_program(src).unwrap());
    }

    #[test]
    fn one_armed_initializes_unbound_target() {
        let src = "def f(x):\n    if x > 0:\n        y = 2\n    else:\n        z = 3\n    return x\n";
        let p = pass(RuleId::ObliviousForm, src);
        let text = render(&p);
        assert!(text.starts_with("def f(x):\n    y = 0\n    z = 0\n"), "{text}");
    }
}
