//! Loop-shape passes: while-to-for rewriting and flag-based elimination of
//! `break`, `continue` and early `return`.

use super::{assign_name, PassCx, RuleError};
use crate::frontend::{BinOp, BoolOp, CmpOp, Expr, ExprKind, Span, Stmt, StmtKind, UnaryOp};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Jump {
    Break,
    Continue,
    Return,
}

impl Jump {
    fn is(self, s: &Stmt) -> bool {
        matches!(
            (self, &s.kind),
            (Jump::Break, StmtKind::Break) | (Jump::Continue, StmtKind::Continue) | (Jump::Return, StmtKind::Return(_))
        )
    }

    fn word(self) -> &'static str {
        match self {
            Jump::Break => "break",
            Jump::Continue => "continue",
            Jump::Return => "return",
        }
    }
}

/// True if `s` contains a jump of `kind` that leaves `s`'s enclosing loop
/// (for break/continue, nested loops own their jumps).
pub(crate) fn contains_jump(s: &Stmt, kind: Jump) -> bool {
    if kind.is(s) {
        return true;
    }
    match &s.kind {
        StmtKind::For { body, .. } | StmtKind::While { body, .. } => {
            kind == Jump::Return && body.iter().any(|x| contains_jump(x, kind))
        }
        StmtKind::If { body, orelse, .. } => body.iter().chain(orelse).any(|x| contains_jump(x, kind)),
        StmtKind::With { body, .. } => body.iter().any(|x| contains_jump(x, kind)),
        _ => false,
    }
}

fn not(e: Expr) -> Expr {
    Expr::unary(UnaryOp::Not, e)
}

/// Rewrites a block so that every statement reached after a jump is guarded
/// by `not flag`. `may_be_set` says whether the flag can already be true on
/// entry (loop bodies after their first iteration).
pub(crate) struct JumpEliminator<'a> {
    pub kind: Jump,
    pub flag: String,
    pub result: Option<String>,
    pub cx: &'a mut PassCx,
}

impl JumpEliminator<'_> {
    fn flag_expr(&self, span: Span) -> Expr {
        Expr::name(&self.flag, span)
    }

    fn guard(&self, stmts: Vec<Stmt>, out: &mut Vec<Stmt>, set: bool) {
        if stmts.is_empty() {
            return;
        }
        if set {
            let span = stmts[0].span;
            out.push(Stmt::if_(not(self.flag_expr(span)), stmts, vec![]));
        } else {
            out.extend(stmts);
        }
    }

    pub fn block(&mut self, stmts: Vec<Stmt>, may_be_set: bool) -> Result<Vec<Stmt>, RuleError> {
        let mut out = Vec::new();
        let mut run = Vec::new();
        let mut set = may_be_set;
        let mut queue: std::collections::VecDeque<Stmt> = stmts.into();
        while let Some(s) = queue.pop_front() {
            if !contains_jump(&s, self.kind) {
                run.push(s);
                continue;
            }
            self.guard(std::mem::take(&mut run), &mut out, set);
            let span = s.span;
            match s.kind {
                StmtKind::Break | StmtKind::Continue => {
                    out.push(assign_name(&self.flag, Expr::boolean(true, span)));
                    return Ok(out);
                }
                StmtKind::Return(value) => {
                    let value = value.ok_or_else(|| self.cx.error(span, "bare return"))?;
                    let r = self.result.clone().unwrap_or_default();
                    let mut stmts = vec![assign_name(&r, value), assign_name(&self.flag, Expr::boolean(true, span))];
                    if set {
                        let mut g = Vec::new();
                        self.guard(std::mem::take(&mut stmts), &mut g, true);
                        stmts = g;
                    }
                    out.extend(stmts);
                    return Ok(out);
                }
                StmtKind::If { test, body, orelse }
                    if self.kind != Jump::Return && body.len() == 1 && self.kind.is(&body[0]) =>
                {
                    // `if c: break` folds into the flag itself
                    let c = self.cx.condition(test);
                    let f = self.flag_expr(span);
                    out.push(assign_name(&self.flag, Expr::boolop(BoolOp::Or, f, c)));
                    set = true;
                    for s in orelse.into_iter().rev() {
                        queue.push_front(s);
                    }
                }
                StmtKind::If { test, body, orelse } => {
                    let body = self.block(body, false)?;
                    let orelse = self.block(orelse, false)?;
                    let s = Stmt::new(StmtKind::If { test, body, orelse }, span);
                    self.guard(vec![s], &mut out, set);
                    set = true;
                }
                StmtKind::For { target, iter, body } => {
                    let body = self.block(body, true)?;
                    let s = Stmt::new(StmtKind::For { target, iter, body }, span);
                    self.guard(vec![s], &mut out, set);
                    set = true;
                }
                StmtKind::While { .. } => {
                    return Err(self.cx.error(span, format!("{} inside a while loop", self.kind.word())));
                }
                _ => return Err(self.cx.error(span, format!("unsupported {} placement", self.kind.word()))),
            }
        }
        self.guard(run, &mut out, set);
        Ok(out)
    }
}

/// True if `var` is read by `rest` before being rebound.
fn read_after(var: &str, rest: &[Stmt]) -> bool {
    for s in rest {
        match &s.kind {
            StmtKind::Assign { target, value } if target.as_name() == Some(var) => {
                return value.reads_name(var);
            }
            StmtKind::For { target, iter, .. } if target.as_name() == Some(var) => {
                return iter.reads_name(var);
            }
            _ => {
                let mut reads = false;
                s.walk_exprs(&mut |e| {
                    if e.as_name() == Some(var) {
                        reads = true;
                    }
                });
                if reads {
                    return true;
                }
            }
        }
    }
    false
}

fn loop_pass(
    stmts: Vec<Stmt>,
    cx: &mut PassCx,
    kind: Jump,
) -> Result<Vec<Stmt>, RuleError> {
    let mut out: Vec<Stmt> = Vec::with_capacity(stmts.len());
    let mut stmts = stmts;
    let mut i = 0;
    while i < stmts.len() {
        let s = std::mem::replace(&mut stmts[i], Stmt::new(StmtKind::Pass, Span::default()));
        let span = s.span;
        let kind_here = match s.kind {
            StmtKind::For { target, iter, body } => {
                let body = loop_pass(body, cx, kind)?;
                if body.iter().any(|x| contains_jump(x, kind)) {
                    let var = target.as_name().unwrap_or_default().to_string();
                    if kind == Jump::Break && read_after(&var, &stmts[i + 1..]) {
                        return Err(cx.error(span, "loop variable read after a loop with break"));
                    }
                    let flag = cx.flag();
                    let mut el = JumpEliminator {
                        kind,
                        flag: flag.clone(),
                        result: None,
                        cx,
                    };
                    let body = if kind == Jump::Continue {
                        let mut b = vec![assign_name(&flag, Expr::boolean(false, span))];
                        b.extend(el.block(body, false)?);
                        b
                    } else {
                        out.push(assign_name(&flag, Expr::boolean(false, span)));
                        el.block(body, true)?
                    };
                    StmtKind::For { target, iter, body }
                } else {
                    StmtKind::For { target, iter, body }
                }
            }
            StmtKind::While { test, body } => {
                let body = loop_pass(body, cx, kind)?;
                if body.iter().any(|x| contains_jump(x, kind)) {
                    return Err(cx.error(span, format!("{} inside a while loop", kind.word())));
                }
                StmtKind::While { test, body }
            }
            StmtKind::If { test, body, orelse } => StmtKind::If {
                test,
                body: loop_pass(body, cx, kind)?,
                orelse: loop_pass(orelse, cx, kind)?,
            },
            k => k,
        };
        out.push(Stmt::new(kind_here, span));
        i += 1;
    }
    Ok(out)
}

pub(crate) fn eliminate_break(body: Vec<Stmt>, cx: &mut PassCx) -> Result<Vec<Stmt>, RuleError> {
    loop_pass(body, cx, Jump::Break)
}

pub(crate) fn eliminate_continue(body: Vec<Stmt>, cx: &mut PassCx) -> Result<Vec<Stmt>, RuleError> {
    loop_pass(body, cx, Jump::Continue)
}

/// Counter loop recognized in a while statement.
struct Counter {
    var: String,
    stop: Expr,
    step: i64,
}

fn counter_of(test: &Expr, body: &[Stmt]) -> Option<Counter> {
    let ExprKind::Compare {
        left,
        ops,
        comparators,
    } = &test.kind
    else {
        return None;
    };
    if ops.len() != 1 {
        return None;
    }
    let var = left.as_name()?.to_string();
    let bound = comparators[0].clone();
    let last = body.last()?;
    let delta = match &last.kind {
        StmtKind::AugAssign {
            target,
            op,
            value: Expr { kind: ExprKind::Int(k), .. },
        } if target.as_name() == Some(&var) => match op {
            BinOp::Add => *k,
            BinOp::Sub => -*k,
            _ => return None,
        },
        StmtKind::Assign { target, value } if target.as_name() == Some(&var) => match &value.kind {
            ExprKind::BinOp { op, left, right } if left.as_name() == Some(&var) => match (op, &right.kind) {
                (BinOp::Add, ExprKind::Int(k)) => *k,
                (BinOp::Sub, ExprKind::Int(k)) => -*k,
                _ => return None,
            },
            _ => return None,
        },
        _ => return None,
    };
    let span = bound.span;
    let stop = match (ops[0], delta.signum()) {
        (CmpOp::Lt, 1) => bound,
        (CmpOp::LtE, 1) => Expr::binop(BinOp::Add, bound, Expr::int(1, span)),
        (CmpOp::Gt, -1) => bound,
        (CmpOp::GtE, -1) => Expr::binop(BinOp::Sub, bound, Expr::int(1, span)),
        _ => return None,
    };
    let rest = &body[..body.len() - 1];
    let mut touched = false;
    for s in rest {
        let names = s.assigned_names();
        if names.contains(&var) || stop.names().iter().any(|n| names.contains(n)) {
            touched = true;
        }
        s.walk(&mut |x| {
            if matches!(x.kind, StmtKind::Continue) {
                touched = true;
            }
        });
    }
    if touched {
        return None;
    }
    Some(Counter {
        var,
        stop,
        step: delta,
    })
}

pub(crate) fn rewrite_while(body: Vec<Stmt>, cx: &mut PassCx) -> Result<Vec<Stmt>, RuleError> {
    let mut out: Vec<Stmt> = Vec::with_capacity(body.len());
    let mut stmts = body;
    for i in 0..stmts.len() {
        let s = std::mem::replace(&mut stmts[i], Stmt::new(StmtKind::Pass, Span::default()));
        let span = s.span;
        let kind = match s.kind {
            StmtKind::While { test, body } => {
                let body = rewrite_while(body, cx)?;
                let counter = counter_of(&test, &body)
                    .filter(|c| !cx.is_secret(&Expr::name(&c.var, span)) && !cx.is_secret(&c.stop))
                    .filter(|c| !read_after(&c.var, &stmts[i + 1..]));
                match counter {
                    Some(c) => {
                        let mut start = Expr::name(&c.var, span);
                        if let Some(prev) = out.last() {
                            if let StmtKind::Assign { target, value } = &prev.kind {
                                if target.as_name() == Some(&c.var) && !value.reads_name(&c.var) {
                                    start = value.clone();
                                    out.pop();
                                }
                            }
                        }
                        let mut args = vec![];
                        let zero_start = matches!(start.kind, ExprKind::Int(0));
                        if !(zero_start && c.step == 1) {
                            args.push(start);
                        }
                        args.push(c.stop);
                        if c.step != 1 {
                            args.push(Expr::int(c.step, span));
                        }
                        let mut body = body;
                        body.pop();
                        StmtKind::For {
                            target: Expr::name(&c.var, span),
                            iter: Expr::call_named("range", args, span),
                            body,
                        }
                    }
                    None if cx.is_secret(&test) => {
                        return Err(cx.error(span, "secret-conditioned while with no static bound"));
                    }
                    None => StmtKind::While { test, body },
                }
            }
            StmtKind::For { target, iter, body } => StmtKind::For {
                target,
                iter,
                body: rewrite_while(body, cx)?,
            },
            StmtKind::If { test, body, orelse } => StmtKind::If {
                test,
                body: rewrite_while(body, cx)?,
                orelse: rewrite_while(orelse, cx)?,
            },
            k => k,
        };
        out.push(Stmt::new(kind, span));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use crate::emit::types::Interface;
    use crate::frontend::{load_program, parse_source, render, Program};
    use crate::pyexec::{run, PyValue};
    use crate::rules::{apply_rule, RuleId};

    fn pass(rule: RuleId, src: &str) -> Program {
        apply_rule(rule, &load_program(src).unwrap(), &Interface::with_clear(["n".to_string()])).unwrap()
    }

    #[test]
    fn counter_while_becomes_range() {
        let p = pass(
            RuleId::RewriteWhileLoop,
            "def f(a, n):\n    s = 0\n    i = 0\n    while i < n:\n        s += a[i]\n        i += 1\n    return s\n",
        );
        let want = parse_source("def f(a, n):\n    s = 0\n    for i in range(n):\n        s += a[i]\n    return s\n").unwrap();
        assert_eq!(p, want, "{}", render(&p));
    }

    #[test]
    fn counter_read_after_loop_keeps_while() {
        let src = "def f(n):\n    i = 0\n    while i < n:\n        i += 2\n    return i\n";
        assert_eq!(pass(RuleId::RewriteWhileLoop, src), load_program(src).unwrap());
    }

    #[test]
    fn unconditional_break_suppresses_body() {
        let src = "def f(a):\n    for i in range(len(a)):\n        break\n        a[i] = 5\n    return a\n";
        let p = pass(RuleId::EliminateBreak, src);
        let inputs = [PyValue::ints(&[0, 0, 0])];
        assert_eq!(run(&p, &inputs).unwrap(), run(&load_program(src).unwrap(), &inputs).unwrap());
        assert!(!render(&p).contains("break"));
    }

    #[test]
    fn continue_uses_reset_flag() {
        let src = "def f(a):\n    s = 0\n    for i in range(len(a)):\n        if a[i] < 0:\n            continue\n        s += a[i]\n    return s\n";
        let p = pass(RuleId::EliminateContinue, src);
        let want = parse_source(
            "def f(a):\n    s = 0\n    for i in range(len(a)):\n        __flag_0 = False\n        __flag_0 = __flag_0 or a[i] < 0\n        if not __flag_0:\n            s += a[i]\n    return s\n",
        )
        .unwrap();
        assert_eq!(p, want, "{}", render(&p));
        let inputs = [PyValue::ints(&[-1, 2, -3])];
        assert_eq!(run(&p, &inputs).unwrap(), PyValue::int(2));
    }

    #[test]
    fn loops_without_jumps_are_identity() {
        let src = "def f(a):\n    for i in range(len(a)):\n        a[i] = 1\n    return a\n";
        assert_eq!(pass(RuleId::EliminateBreak, src), load_program(src).unwrap());
        assert_eq!(pass(RuleId::EliminateContinue, src), load_program(src).unwrap());
    }
}
