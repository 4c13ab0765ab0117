//! Syntax-sugar removal and chained-comparison splitting.

use super::{and, assign_name, for_range, hoist_block, len_of, range1, try_map, PassCx, RuleError};
use crate::frontend::{BinOp, Expr, ExprKind, Span, Stmt, StmtKind};

pub(crate) fn desugar_syntax(body: Vec<Stmt>, cx: &mut PassCx) -> Result<Vec<Stmt>, RuleError> {
    let body = desugar_statements(body, cx)?;
    // Comprehensions first, so ternaries in their elements land inside the loop.
    let body = hoist_block(body, cx, &mut |e, pre, cx| {
        try_map(e, pre, cx, &mut |n, pre, cx| match n.kind {
            ExprKind::ListComp { .. } => desugar_expr(n, pre, cx),
            _ => Ok(n),
        })
    })?;
    hoist_block(body, cx, &mut |e, pre, cx| try_map(e, pre, cx, &mut desugar_expr))
}

/// Statement-level sugar: tuple assignment, sequence iteration, augmented
/// assignment and clear ternaries assigned directly.
fn desugar_statements(stmts: Vec<Stmt>, cx: &mut PassCx) -> Result<Vec<Stmt>, RuleError> {
    let mut out = Vec::with_capacity(stmts.len());
    for s in stmts {
        let span = s.span;
        match s.kind {
            StmtKind::Assign { target, value } => match (target.kind, value.kind) {
                (ExprKind::Tuple(ts), ExprKind::Tuple(vs)) => {
                    out.extend(tuple_assign(ts, vs, cx, span)?);
                }
                (ExprKind::Tuple(_), _) => {
                    return Err(cx.error(span, "tuple assignment from a non-tuple value"));
                }
                (tk, ExprKind::IfExp { test, body, orelse }) if !cx.is_secret(&test) => {
                    let target = Expr::new(tk, span);
                    out.push(Stmt::if_(
                        *test,
                        desugar_statements(vec![Stmt::assign(target.clone(), *body)], cx)?,
                        desugar_statements(vec![Stmt::assign(target, *orelse)], cx)?,
                    ));
                }
                (tk, vk) => out.push(Stmt::assign(Expr::new(tk, span), Expr::new(vk, span))),
            },
            StmtKind::AugAssign { target, op, value } => {
                let rhs = Expr::binop(op, target.clone(), value);
                out.push(Stmt::new(StmtKind::Assign { target, value: rhs }, span));
            }
            StmtKind::For { target, iter, body } => {
                let body = desugar_statements(body, cx)?;
                if iter.callee().as_deref() == Some("range") {
                    out.push(Stmt::new(StmtKind::For { target, iter, body }, span));
                    continue;
                }
                let seq = match iter.as_name() {
                    Some(_) => iter,
                    None => {
                        let t = cx.temp();
                        out.push(assign_name(&t, iter));
                        Expr::name(t, span)
                    }
                };
                let idx = cx.temp();
                let mut new_body = vec![Stmt::assign(target, Expr::index(seq.clone(), Expr::name(&idx, span)))];
                new_body.extend(body);
                out.push(for_range(&idx, range1(len_of(seq)), new_body));
            }
            StmtKind::If { test, body, orelse } => out.push(Stmt::new(
                StmtKind::If {
                    test,
                    body: desugar_statements(body, cx)?,
                    orelse: desugar_statements(orelse, cx)?,
                },
                span,
            )),
            StmtKind::While { test, body } => out.push(Stmt::new(
                StmtKind::While {
                    test,
                    body: desugar_statements(body, cx)?,
                },
                span,
            )),
            k => out.push(Stmt::new(k, span)),
        }
    }
    Ok(out)
}

/// `x1, ..., xn = e1, ..., en` as sequential assignments. Name targets save
/// an old value only when a later right-hand side still reads it; indexed
/// targets evaluate every right-hand side first.
fn tuple_assign(ts: Vec<Expr>, vs: Vec<Expr>, cx: &mut PassCx, span: Span) -> Result<Vec<Stmt>, RuleError> {
    if ts.len() != vs.len() {
        return Err(cx.error(span, "unbalanced tuple assignment"));
    }
    let mut out = Vec::new();
    if ts.iter().all(|t| t.as_name().is_some()) {
        let mut vs = vs;
        for i in 0..ts.len() {
            let x = ts[i].as_name().unwrap_or_default().to_string();
            if vs[i + 1..].iter().any(|v| v.reads_name(&x)) {
                let t = cx.temp();
                out.push(assign_name(&t, Expr::name(&x, span)));
                let saved = Expr::name(&t, span);
                for v in &mut vs[i + 1..] {
                    *v = std::mem::replace(v, Expr::int(0, span)).substitute(&x, &saved);
                }
            }
            out.push(Stmt::assign(ts[i].clone(), vs[i].clone()));
        }
    } else {
        let mut temps = Vec::new();
        for v in vs {
            let t = cx.temp();
            out.push(assign_name(&t, v));
            temps.push(t);
        }
        for (target, t) in ts.into_iter().zip(temps) {
            out.push(Stmt::assign(target, Expr::name(t, span)));
        }
    }
    Ok(out)
}

fn desugar_expr(e: Expr, pre: &mut Vec<Stmt>, cx: &mut PassCx) -> Result<Expr, RuleError> {
    let span = e.span;
    match e.kind {
        ExprKind::IfExp { test, body, orelse } => {
            if cx.is_secret(&test) {
                let c = cx.condition(*test);
                let one_minus = Expr::binop(BinOp::Sub, Expr::int(1, span), c.clone());
                Ok(Expr::binop(
                    BinOp::Add,
                    Expr::binop(BinOp::Mul, c, *body),
                    Expr::binop(BinOp::Mul, one_minus, *orelse),
                ))
            } else {
                let t = cx.temp();
                pre.push(Stmt::if_(
                    *test,
                    vec![assign_name(&t, *body)],
                    vec![assign_name(&t, *orelse)],
                ));
                Ok(Expr::name(t, span))
            }
        }
        ExprKind::ListComp { elt, target, iter } => {
            let out = cx.temp();
            let v = cx.temp();
            let var = Expr::name(&v, span);
            let range_args = match &iter.kind {
                ExprKind::Call { args, .. } if iter.callee().as_deref() == Some("range") => Some(args.clone()),
                _ => None,
            };
            match range_args.as_deref() {
                Some([n]) => {
                    pre.push(assign_name(&out, prealloc(n.clone())));
                    let elt = elt.substitute(&target, &var);
                    pre.push(for_range(
                        &v,
                        *iter,
                        vec![Stmt::assign(Expr::index(Expr::name(&out, span), var), elt)],
                    ));
                }
                Some([a, b]) => {
                    pre.push(assign_name(&out, prealloc(Expr::binop(BinOp::Sub, b.clone(), a.clone()))));
                    let slot = Expr::binop(BinOp::Sub, var.clone(), a.clone());
                    let elt = elt.substitute(&target, &var);
                    pre.push(for_range(
                        &v,
                        *iter,
                        vec![Stmt::assign(Expr::index(Expr::name(&out, span), slot), elt)],
                    ));
                }
                Some(_) => return Err(cx.error(span, "comprehension over a stepped range")),
                None => {
                    let seq = match iter.as_name() {
                        Some(_) => *iter,
                        None => {
                            let s = cx.temp();
                            pre.push(assign_name(&s, *iter));
                            Expr::name(s, span)
                        }
                    };
                    pre.push(assign_name(&out, prealloc(len_of(seq.clone()))));
                    let item = Expr::index(seq.clone(), var.clone());
                    let elt = elt.substitute(&target, &item);
                    pre.push(for_range(
                        &v,
                        range1(len_of(seq)),
                        vec![Stmt::assign(Expr::index(Expr::name(&out, span), var), elt)],
                    ));
                }
            }
            Ok(Expr::name(out, span))
        }
        ExprKind::Call { func, args } if args.len() > 2 && matches!(func.as_name(), Some("min" | "max")) => {
            let mut it = args.into_iter();
            let first = it.next().unwrap_or_else(|| Expr::int(0, span));
            Ok(it.fold(first, |acc, a| Expr::call((*func).clone(), vec![acc, a])))
        }
        kind => Ok(Expr::new(kind, span)),
    }
}

/// `[0] * n`
pub(crate) fn prealloc(n: Expr) -> Expr {
    let span = n.span;
    Expr::binop(BinOp::Mul, Expr::new(ExprKind::List(vec![Expr::int(0, span)]), span), n)
}

pub(crate) fn split_chained_comparisons(body: Vec<Stmt>, cx: &mut PassCx) -> Result<Vec<Stmt>, RuleError> {
    hoist_block(body, cx, &mut |e, pre, cx| {
        try_map(e, pre, cx, &mut |node, pre, cx| {
            let span = node.span;
            match node.kind {
                ExprKind::Compare {
                    left,
                    ops,
                    comparators,
                } if ops.len() > 1 => {
                    let n = comparators.len();
                    let mut operands = vec![*left];
                    for (i, c) in comparators.into_iter().enumerate() {
                        let has_call = c.contains(&|x| matches!(x.kind, ExprKind::Call { .. }));
                        if i + 1 < n && has_call {
                            let t = cx.temp();
                            pre.push(assign_name(&t, c));
                            operands.push(Expr::name(t, span));
                        } else {
                            operands.push(c);
                        }
                    }
                    let mut acc: Option<Expr> = None;
                    for (i, op) in ops.into_iter().enumerate() {
                        let cmp = Expr::compare(operands[i].clone(), op, operands[i + 1].clone());
                        acc = Some(match acc {
                            None => cmp,
                            Some(a) => and(a, cmp),
                        });
                    }
                    Ok(acc.unwrap_or_else(|| Expr::boolean(true, span)))
                }
                kind => Ok(Expr::new(kind, span)),
            }
        })
    })
}

#[cfg(test)]
mod tests {
    use crate::emit::types::Interface;
    use crate::frontend::{load_program, parse_source, render, Program};
    use crate::rules::{apply_rule, RuleId};

    fn pass(rule: RuleId, src: &str) -> Program {
        apply_rule(rule, &load_program(src).unwrap(), &Interface::with_clear(["n".to_string()])).unwrap()
    }

    fn same(got: &Program, want: &str) {
        assert_eq!(got, &parse_source(want).unwrap(), "{}", render(got));
    }

    #[test]
    fn swap_uses_one_temporary() {
        let p = pass(RuleId::SyntaxSugar, "def f(a, b):\n    a, b = b, a\n    return a - b\n");
        same(&p, "def f(a, b):\n    __t_0 = a\n    a = b\n    b = __t_0\n    return a - b\n");
    }

    #[test]
    fn secret_ternary_is_arithmetic() {
        let p = pass(RuleId::SyntaxSugar, "def f(a, b, c):\n    y = a if c > 0 else b\n    return y\n");
        same(&p, "def f(a, b, c):\n    y = (c > 0) * a + (1 - (c > 0)) * b\n    return y\n");
    }

    #[test]
    fn clear_ternary_is_branch() {
        let p = pass(RuleId::SyntaxSugar, "def f(a, n):\n    y = a if n > 0 else 0\n    return y\n");
        same(&p, "def f(a, n):\n    if n > 0:\n        y = a\n    else:\n        y = 0\n    return y\n");
    }

    #[test]
    fn comprehension_preallocates() {
        let p = pass(RuleId::SyntaxSugar, "def f(a):\n    return [x * x for x in a]\n");
        same(
            &p,
            "def f(a):\n    __t_0 = [0] * len(a)\n    for __t_1 in range(len(a)):\n        __t_0[__t_1] = a[__t_1] * a[__t_1]\n    return __t_0\n",
        );
    }

    #[test]
    fn ternary_inside_comprehension_stays_in_loop() {
        let p = pass(RuleId::SyntaxSugar, "def f(a):\n    return [2 * x if x > 0 else 0 for x in a]\n");
        let text = render(&p);
        assert!(!text.contains(" x"), "{text}");
        assert!(!text.contains("if "), "{text}");
    }

    #[test]
    fn variadic_max_nests() {
        let p = pass(RuleId::SyntaxSugar, "def f(a, b, c):\n    return max(a, b, c)\n");
        same(&p, "def f(a, b, c):\n    return max(max(a, b), c)\n");
    }

    #[test]
    fn sequence_loop_becomes_index_loop() {
        let p = pass(RuleId::SyntaxSugar, "def f(a):\n    s = 0\n    for x in a:\n        s += x\n    return s\n");
        same(
            &p,
            "def f(a):\n    s = 0\n    for __t_0 in range(len(a)):\n        x = a[__t_0]\n        s = s + x\n    return s\n",
        );
    }

    #[test]
    fn chain_splits_and_hoists_calls() {
        let p = pass(RuleId::ChainedComparison, "def f(x):\n    return 0 < x < 5\n");
        same(&p, "def f(x):\n    return 0 < x and x < 5\n");
        let p = pass(RuleId::ChainedComparison, "def f(a, b, x):\n    return a <= abs(x) <= b\n");
        same(&p, "def f(a, b, x):\n    __t_0 = abs(x)\n    return a <= __t_0 and __t_0 <= b\n");
    }
}
