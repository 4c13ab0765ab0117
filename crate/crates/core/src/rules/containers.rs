//! Lowering of list methods and numpy array operations to indexed loops.

use super::sugar::prealloc;
use super::{assign_name, for_range, hoist_block, len_of, range1, try_map, PassCx, RuleError};
use crate::emit::types::{Numeric, Secrecy, Shape, VarType};
use crate::frontend::{
    canonical_callee, BinOp, CmpOp, Expr, ExprKind, Span, Stmt, StmtKind, UnaryOp,
};

fn int(v: i64, span: Span) -> Expr {
    Expr::int(v, span)
}

fn add(a: Expr, b: Expr) -> Expr {
    Expr::binop(BinOp::Add, a, b)
}

fn sub(a: Expr, b: Expr) -> Expr {
    Expr::binop(BinOp::Sub, a, b)
}

fn list_type(cx: &PassCx, elem: &Expr) -> VarType {
    VarType {
        shape: Shape::Array1 { ndarray: false },
        ..cx.env.expr_type(elem)
    }
}

impl PassCx {
    fn declare(&mut self, name: &str, t: VarType) {
        self.env.vars.insert(name.to_string(), t);
    }

    /// Binds `e` to a name, introducing a temporary when it is not one.
    fn named(&mut self, e: Expr, pre: &mut Vec<Stmt>) -> Expr {
        if e.as_name().is_some() {
            return e;
        }
        let t = self.temp();
        let ty = self.env.expr_type(&e);
        self.declare(&t, ty);
        let span = e.span;
        pre.push(assign_name(&t, e));
        Expr::name(t, span)
    }
}

// ---------------------------------------------------------------- lists

pub(crate) fn lower_data_structures(body: Vec<Stmt>, cx: &mut PassCx) -> Result<Vec<Stmt>, RuleError> {
    let body = hoist_block(body, cx, &mut |e, pre, cx| try_map(e, pre, cx, &mut lower_query))?;
    lower_growth(body, cx)
}

/// `l.count(v)` and `l.index(v)` as counting loops.
fn lower_query(e: Expr, pre: &mut Vec<Stmt>, cx: &mut PassCx) -> Result<Expr, RuleError> {
    let span = e.span;
    let Some((recv, method, args)) = e.method_call() else {
        return Ok(e);
    };
    if !super::detect::is_container_method(&e) || !matches!(method, "count" | "index") {
        return Ok(e);
    }
    if args.len() != 1 {
        return Err(cx.error(span, format!("{method} takes one argument here")));
    }
    let (recv, arg) = (recv.clone(), args[0].clone());
    let method = method.to_string();
    let seq = cx.named(recv, pre);
    let v = cx.named(arg, pre);
    let t = cx.temp();
    let k = cx.temp();
    cx.declare(&t, VarType::scalar(cx.env.expr_type(&seq).secrecy, Numeric::Int));
    pre.push(assign_name(&t, int(0, span)));
    let item = Expr::index(seq.clone(), Expr::name(&k, span));
    let hit = Expr::compare(item, CmpOp::Eq, v);
    let body = if method == "count" {
        vec![assign_name(&t, add(Expr::name(&t, span), hit))]
    } else {
        vec![
            Stmt::if_(hit, vec![Stmt::new(StmtKind::Break, span)], vec![]),
            assign_name(&t, add(Expr::name(&t, span), int(1, span))),
        ]
    };
    pre.push(for_range(&k, range1(len_of(seq)), body));
    Ok(Expr::name(t, span))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Growth {
    Append,
    Extend,
    Prepend,
}

struct Site {
    kind: Growth,
    trips: Vec<Expr>,
    extend_len: Option<Expr>,
}

fn growth_of(s: &Stmt, list: &str) -> Option<(Growth, Vec<Expr>)> {
    let StmtKind::Expr(e) = &s.kind else {
        return None;
    };
    let (recv, m, args) = e.method_call()?;
    if recv.as_name() != Some(list) {
        return None;
    }
    let kind = match m {
        "append" => Growth::Append,
        "extend" => Growth::Extend,
        "insert" => Growth::Prepend,
        "pop" => Growth::Append,
        _ => return None,
    };
    Some((kind, args.to_vec()))
}

fn trip_count(iter: &Expr) -> Option<Expr> {
    if iter.callee().as_deref() != Some("range") {
        return None;
    }
    let ExprKind::Call { args, .. } = &iter.kind else {
        return None;
    };
    match args.as_slice() {
        [n] => Some(n.clone()),
        [a, b] => Some(match &a.kind {
            ExprKind::Int(0) => b.clone(),
            _ => sub(b.clone(), a.clone()),
        }),
        _ => None,
    }
}

fn uses_list(s: &Stmt, list: &str) -> bool {
    let mut found = false;
    s.walk_exprs(&mut |e| {
        if e.as_name() == Some(list) {
            found = true;
        }
    });
    found
}

fn collect_sites(
    stmts: &[Stmt],
    list: &str,
    trips: &mut Vec<Expr>,
    conditional: bool,
    out: &mut Vec<Site>,
    cx: &PassCx,
) -> Result<(), RuleError> {
    for s in stmts {
        if let StmtKind::Expr(e) = &s.kind {
            if e.method_call().is_some_and(|(r, m, _)| r.as_name() == Some(list) && m == "pop") {
                return Err(cx.error(s.span, "dynamic container growth not derivable: pop"));
            }
        }
        if let Some((kind, args)) = growth_of(s, list) {
            if conditional {
                return Err(cx.error(s.span, "dynamic container growth not derivable: conditional growth"));
            }
            let extend_len = match kind {
                Growth::Extend => {
                    let seq = args.first().cloned().unwrap_or_else(|| int(0, s.span));
                    Some(match &seq.kind {
                        ExprKind::List(items) => int(items.len() as i64, s.span),
                        ExprKind::Name(_) => len_of(seq),
                        _ => return Err(cx.error(s.span, "dynamic container growth not derivable: extend argument")),
                    })
                }
                Growth::Prepend => {
                    if !matches!(args.first().map(|a| &a.kind), Some(ExprKind::Int(0))) {
                        return Err(cx.error(s.span, "dynamic container growth not derivable: insert position"));
                    }
                    None
                }
                Growth::Append => None,
            };
            out.push(Site {
                kind,
                trips: trips.clone(),
                extend_len,
            });
            continue;
        }
        match &s.kind {
            StmtKind::For { iter, body, .. } => {
                let has = body.iter().any(|b| uses_list(b, list));
                if !has {
                    continue;
                }
                match trip_count(iter) {
                    Some(t) => {
                        trips.push(t);
                        collect_sites(body, list, trips, conditional, out, cx)?;
                        trips.pop();
                    }
                    None => {
                        let mut probe = Vec::new();
                        collect_sites(body, list, &mut Vec::new(), conditional, &mut probe, cx)?;
                        if !probe.is_empty() {
                            return Err(cx.error(s.span, "dynamic container growth not derivable: loop bound"));
                        }
                    }
                }
            }
            StmtKind::If { body, orelse, .. } => {
                collect_sites(body, list, trips, true, out, cx)?;
                collect_sites(orelse, list, trips, true, out, cx)?;
            }
            StmtKind::While { body, .. } => collect_sites(body, list, trips, true, out, cx)?,
            _ => {}
        }
    }
    Ok(())
}

fn product(mut factors: Vec<Expr>, last: Option<Expr>, span: Span) -> Expr {
    factors.extend(last);
    factors
        .into_iter()
        .reduce(|a, b| Expr::binop(BinOp::Mul, a, b))
        .unwrap_or_else(|| int(1, span))
}

fn rewrite_sites(stmts: Vec<Stmt>, list: &str, counter: &str, cx: &mut PassCx) -> Vec<Stmt> {
    let mut out = Vec::new();
    for s in stmts {
        let span = s.span;
        if let Some((kind, args)) = growth_of(&s, list) {
            let c = Expr::name(counter, span);
            let l = Expr::name(list, span);
            match kind {
                Growth::Append => {
                    let v = args.into_iter().next().unwrap_or_else(|| int(0, span));
                    out.push(Stmt::assign(Expr::index(l, c.clone()), v));
                    out.push(assign_name(counter, add(c, int(1, span))));
                }
                Growth::Prepend => {
                    let v = args.into_iter().nth(1).unwrap_or_else(|| int(0, span));
                    out.push(Stmt::assign(Expr::index(l, c.clone()), v));
                    out.push(assign_name(counter, sub(c, int(1, span))));
                }
                Growth::Extend => {
                    let seq = args.into_iter().next().unwrap_or_else(|| int(0, span));
                    let mut pre = Vec::new();
                    let seq = cx.named(seq, &mut pre);
                    out.extend(pre);
                    let k = cx.temp();
                    out.push(for_range(
                        &k,
                        range1(len_of(seq.clone())),
                        vec![
                            Stmt::assign(Expr::index(l, c.clone()), Expr::index(seq, Expr::name(&k, span))),
                            assign_name(counter, add(c, int(1, span))),
                        ],
                    ));
                }
            }
            continue;
        }
        let kind = match s.kind {
            StmtKind::For { target, iter, body } => StmtKind::For {
                target,
                iter,
                body: rewrite_sites(body, list, counter, cx),
            },
            k => k,
        };
        out.push(Stmt::new(kind, span));
    }
    out
}

fn lower_growth(stmts: Vec<Stmt>, cx: &mut PassCx) -> Result<Vec<Stmt>, RuleError> {
    // inner blocks first so lists local to a loop body are handled there
    let mut stmts: Vec<Stmt> = stmts
        .into_iter()
        .map(|s| {
            let span = s.span;
            Ok(Stmt::new(
                match s.kind {
                    StmtKind::For { target, iter, body } => StmtKind::For {
                        target,
                        iter,
                        body: lower_growth(body, cx)?,
                    },
                    StmtKind::If { test, body, orelse } => StmtKind::If {
                        test,
                        body: lower_growth(body, cx)?,
                        orelse: lower_growth(orelse, cx)?,
                    },
                    StmtKind::While { test, body } => StmtKind::While {
                        test,
                        body: lower_growth(body, cx)?,
                    },
                    k => k,
                },
                span,
            ))
        })
        .collect::<Result<_, RuleError>>()?;
    let mut j = 0;
    while j < stmts.len() {
        let list = match &stmts[j].kind {
            StmtKind::Assign { target, value } if matches!(&value.kind, ExprKind::List(v) if v.is_empty()) => {
                target.as_name().map(str::to_string)
            }
            _ => None,
        };
        let Some(list) = list else {
            j += 1;
            continue;
        };
        let span = stmts[j].span;
        let mut sites = Vec::new();
        collect_sites(&stmts[j + 1..], &list, &mut Vec::new(), false, &mut sites, cx)?;
        if sites.is_empty() {
            j += 1;
            continue;
        }
        let last = (j + 1..stmts.len())
            .filter(|&m| {
                let mut probe = Vec::new();
                let _ = collect_sites(&stmts[m..=m], &list, &mut Vec::new(), false, &mut probe, cx);
                !probe.is_empty()
            })
            .max()
            .unwrap_or(j);
        let region = &stmts[j + 1..=last];
        let written = super::assigned_in(region);
        let prepend = sites.iter().any(|s| s.kind == Growth::Prepend);
        if prepend && sites.iter().any(|s| s.kind != Growth::Prepend) {
            return Err(cx.error(span, "dynamic container growth not derivable: mixed insert and append"));
        }
        let terms: Vec<Expr> = sites
            .iter()
            .map(|s| product(s.trips.clone(), s.extend_len.clone(), span))
            .collect();
        let len = terms.into_iter().reduce(add).unwrap_or_else(|| int(0, span));
        if len.names().iter().any(|n| written.contains(n) || *n == list) {
            return Err(cx.error(span, "dynamic container growth not derivable: bound changes while growing"));
        }
        let mut bad_read = false;
        for s in region {
            s.walk_exprs(&mut |e| match &e.kind {
                ExprKind::Call { args, .. } if e.callee().as_deref() == Some("len") => {
                    if args.first().and_then(|a| a.as_name()) == Some(list.as_str()) {
                        bad_read = true;
                    }
                }
                ExprKind::Index { value, index } if value.as_name() == Some(list.as_str()) => {
                    if matches!(index.kind, ExprKind::Unary { op: UnaryOp::Neg, .. }) {
                        bad_read = true;
                    }
                }
                _ => {}
            });
        }
        if bad_read {
            return Err(cx.error(span, "dynamic container growth not derivable: length read while growing"));
        }
        let counter = cx.temp();
        cx.declare(&counter, VarType::CLEAR_INT);
        let init_counter = if prepend { sub(len.clone(), int(1, span)) } else { int(0, span) };
        let rewritten = rewrite_sites(stmts[j + 1..=last].to_vec(), &list, &counter, cx);
        let mut next = stmts[..j].to_vec();
        next.push(assign_name(&list, prealloc(len)));
        next.push(assign_name(&counter, init_counter));
        let resume = next.len() + rewritten.len();
        next.extend(rewritten);
        next.extend(stmts[last + 1..].iter().cloned());
        stmts = next;
        j = resume;
    }
    Ok(stmts)
}

// --------------------------------------------------------------- arrays

fn is_array(cx: &PassCx, e: &Expr) -> bool {
    cx.env.expr_type(e).shape.is_container()
}

/// Leaf array expression whose length gives the length of `e`.
fn length_source(cx: &PassCx, e: &Expr) -> Option<Expr> {
    match &e.kind {
        ExprKind::Name(_) | ExprKind::Index { .. } if is_array(cx, e) => Some(e.clone()),
        ExprKind::BinOp { left, right, .. } => length_source(cx, left).or_else(|| length_source(cx, right)),
        ExprKind::Compare { left, comparators, .. } => {
            length_source(cx, left).or_else(|| comparators.iter().find_map(|c| length_source(cx, c)))
        }
        ExprKind::Unary { operand, .. } => length_source(cx, operand),
        ExprKind::Call { args, .. } => args.iter().find_map(|a| length_source(cx, a)),
        _ => None,
    }
}

/// The `k`-th element of the array-valued expression `e` (scalars
/// broadcast).
fn element(cx: &PassCx, e: &Expr, k: &Expr) -> Result<Expr, RuleError> {
    if !is_array(cx, e) {
        return Ok(e.clone());
    }
    let span = e.span;
    Ok(match &e.kind {
        ExprKind::Name(_) | ExprKind::Index { .. } => Expr::index(e.clone(), k.clone()),
        ExprKind::BinOp { op, left, right } => Expr::binop(*op, element(cx, left, k)?, element(cx, right, k)?),
        ExprKind::Compare { left, ops, comparators } => Expr::new(
            ExprKind::Compare {
                left: Box::new(element(cx, left, k)?),
                ops: ops.clone(),
                comparators: comparators.iter().map(|c| element(cx, c, k)).collect::<Result<_, _>>()?,
            },
            span,
        ),
        ExprKind::Unary { op, operand } => Expr::unary(*op, element(cx, operand, k)?),
        ExprKind::Call { args, .. } => match canonical_callee(match &e.kind {
            ExprKind::Call { func, .. } => func,
            _ => unreachable!(),
        })
        .as_deref()
        {
            Some("numpy.array") if args.len() == 1 => element(cx, &args[0], k)?,
            Some("numpy.abs") | Some("abs") if args.len() == 1 => {
                Expr::call_named("abs", vec![element(cx, &args[0], k)?], span)
            }
            _ => return Err(cx.error(span, "unsupported array expression")),
        },
        _ => return Err(cx.error(span, "unsupported array expression")),
    })
}

fn array_len(cx: &PassCx, e: &Expr) -> Result<Expr, RuleError> {
    length_source(cx, e)
        .map(len_of)
        .ok_or_else(|| cx.error(e.span, "array length not derivable"))
}

fn lower_array_node(e: Expr, pre: &mut Vec<Stmt>, cx: &mut PassCx) -> Result<Expr, RuleError> {
    let span = e.span;
    match &e.kind {
        ExprKind::Index { index, .. } if is_array(cx, index) => {
            return Err(cx.error(span, "integer array indexing is not supported"));
        }
        ExprKind::Slice { .. } => return lower_slice(e, pre, cx),
        ExprKind::Call { .. } if super::detect::is_array_op(&e) => {}
        _ => return Ok(e),
    }
    let ExprKind::Call { func, args } = e.kind else {
        unreachable!()
    };
    let path = canonical_callee(&func).unwrap_or_default();
    let arg_ty = args.first().map(|a| cx.env.expr_type(a));
    if arg_ty.is_some_and(|t| matches!(t.shape, Shape::Array2 { .. })) && path != "numpy.dot" {
        return Err(cx.error(span, format!("{path} over a matrix")));
    }
    let k = cx.temp();
    let kv = Expr::name(&k, span);
    match (path.as_str(), args.as_slice()) {
        ("sum" | "numpy.sum", [x]) => {
            let t = cx.temp();
            cx.declare(&t, cx.env.expr_type(x).element());
            pre.push(assign_name(&t, int(0, span)));
            let item = element(cx, x, &kv)?;
            pre.push(for_range(&k, range1(array_len(cx, x)?), vec![assign_name(&t, add(Expr::name(&t, span), item))]));
            Ok(Expr::name(t, span))
        }
        ("min" | "max" | "numpy.min" | "numpy.max", [x]) => {
            let t = cx.temp();
            cx.declare(&t, cx.env.expr_type(x).element());
            let first = element(cx, x, &int(0, span))?;
            pre.push(assign_name(&t, first));
            let item = element(cx, x, &kv)?;
            let op = if path.ends_with("min") { CmpOp::Lt } else { CmpOp::Gt };
            let better = Expr::compare(item.clone(), op, Expr::name(&t, span));
            let range = Expr::call_named("range", vec![int(1, span), array_len(cx, x)?], span);
            pre.push(for_range(&k, range, vec![Stmt::if_(better, vec![assign_name(&t, item)], vec![])]));
            Ok(Expr::name(t, span))
        }
        ("numpy.where", [c, x, y]) => {
            let src = [c, x, y].into_iter().find(|a| is_array(cx, a)).cloned();
            let Some(src) = src else {
                // scalar where is a plain selection
                let c = cx.condition(c.clone());
                return Ok(add(
                    Expr::binop(BinOp::Mul, c.clone(), x.clone()),
                    Expr::binop(BinOp::Mul, sub(int(1, span), c), y.clone()),
                ));
            };
            let cond = cx.condition(element(cx, c, &kv)?);
            let xe = element(cx, x, &kv)?;
            let ye = element(cx, y, &kv)?;
            let value = add(
                Expr::binop(BinOp::Mul, cond.clone(), xe.clone()),
                Expr::binop(BinOp::Mul, sub(int(1, span), cond), ye),
            );
            Ok(elementwise(cx, pre, &src, &k, value, &xe))
        }
        ("numpy.clip", [x, lo, hi]) => {
            if !is_array(cx, x) {
                return Ok(clip(x.clone(), lo.clone(), hi.clone()));
            }
            let xe = element(cx, x, &kv)?;
            let value = clip(xe.clone(), lo.clone(), hi.clone());
            Ok(elementwise(cx, pre, x, &k, value, &xe))
        }
        ("numpy.abs", [x]) => {
            if !is_array(cx, x) {
                return Ok(Expr::call_named("abs", vec![x.clone()], span));
            }
            let xe = element(cx, x, &kv)?;
            let value = Expr::call_named("abs", vec![xe.clone()], span);
            Ok(elementwise(cx, pre, x, &k, value, &xe))
        }
        ("numpy.sort", [x]) => Ok(Expr::call_named("sorted", vec![x.clone()], span)),
        ("numpy.dot", [a, b]) => lower_dot(cx, pre, a.clone(), b.clone(), k, span),
        _ => Err(cx.error(span, format!("unsupported call form {path}"))),
    }
}

fn clip(x: Expr, lo: Expr, hi: Expr) -> Expr {
    let span = x.span;
    Expr::call_named("min", vec![Expr::call_named("max", vec![x, lo], span), hi], span)
}

/// `r = [0] * len(src); for k: r[k] = value`
fn elementwise(cx: &mut PassCx, pre: &mut Vec<Stmt>, src: &Expr, k: &str, value: Expr, elem_like: &Expr) -> Expr {
    let span = src.span;
    let r = cx.temp();
    let ty = list_type(cx, &value).join(list_type(cx, elem_like));
    cx.declare(&r, ty);
    let n = length_source(cx, src).map(len_of).unwrap_or_else(|| len_of(src.clone()));
    pre.push(assign_name(&r, prealloc(n.clone())));
    pre.push(for_range(
        k,
        range1(n),
        vec![Stmt::assign(Expr::index(Expr::name(&r, span), Expr::name(k, span)), value)],
    ));
    Expr::name(r, span)
}

fn lower_dot(cx: &mut PassCx, pre: &mut Vec<Stmt>, a: Expr, b: Expr, k: String, span: Span) -> Result<Expr, RuleError> {
    let a = cx.named(a, pre);
    let b = cx.named(b, pre);
    let ta = cx.env.expr_type(&a);
    let tb = cx.env.expr_type(&b);
    let kv = Expr::name(&k, span);
    let secrecy = ta.secrecy.max(tb.secrecy);
    let numeric = ta.numeric.max(tb.numeric).max(Numeric::Int);
    let t = cx.temp();
    let idx = |e: &Expr, i: &Expr| Expr::index(e.clone(), i.clone());
    match (ta.shape, tb.shape) {
        (Shape::Array1 { .. }, Shape::Array1 { .. }) => {
            cx.declare(&t, VarType::scalar(secrecy, numeric));
            pre.push(assign_name(&t, int(0, span)));
            let prod = Expr::binop(BinOp::Mul, idx(&a, &kv), idx(&b, &kv));
            pre.push(for_range(&k, range1(len_of(a)), vec![assign_name(&t, add(Expr::name(&t, span), prod))]));
        }
        (Shape::Array2 { .. }, Shape::Array1 { .. }) => {
            let i = cx.temp();
            let iv = Expr::name(&i, span);
            cx.declare(&t, VarType { secrecy, numeric, shape: Shape::Array1 { ndarray: false } });
            pre.push(assign_name(&t, prealloc(len_of(a.clone()))));
            let slot = idx(&Expr::name(&t, span), &iv);
            let prod = Expr::binop(BinOp::Mul, idx(&idx(&a, &iv), &kv), idx(&b, &kv));
            let inner = for_range(&k, range1(len_of(b)), vec![Stmt::assign(slot.clone(), add(slot, prod))]);
            pre.push(for_range(&i, range1(len_of(a)), vec![inner]));
        }
        (Shape::Array2 { .. }, Shape::Array2 { .. }) => {
            let i = cx.temp();
            let j = cx.temp();
            let iv = Expr::name(&i, span);
            let jv = Expr::name(&j, span);
            cx.declare(&t, VarType { secrecy: Secrecy::Secret.min(secrecy), numeric: Numeric::Real, shape: Shape::Array2 { ndarray: true } });
            let cols = len_of(idx(&b, &int(0, span)));
            let dims = Expr::new(ExprKind::List(vec![len_of(a.clone()), cols.clone()]), span);
            pre.push(assign_name(&t, Expr::call_named("numpy.zeros", vec![dims], span)));
            let slot = idx(&idx(&Expr::name(&t, span), &iv), &jv);
            let prod = Expr::binop(BinOp::Mul, idx(&idx(&a, &iv), &kv), idx(&idx(&b, &kv), &jv));
            let inner = for_range(&k, range1(len_of(b.clone())), vec![Stmt::assign(slot.clone(), add(slot, prod))]);
            let mid = for_range(&j, range1(cols), vec![inner]);
            pre.push(for_range(&i, range1(len_of(a)), vec![mid]));
        }
        _ => return Err(cx.error(span, "numpy.dot operand shapes not derivable")),
    }
    Ok(Expr::name(t, span))
}

fn negative_literal(e: &Expr) -> Option<i64> {
    match &e.kind {
        ExprKind::Unary { op: UnaryOp::Neg, operand } => match operand.kind {
            ExprKind::Int(k) => Some(k),
            _ => None,
        },
        ExprKind::Int(k) if *k < 0 => Some(-k),
        _ => None,
    }
}

fn lower_slice(e: Expr, pre: &mut Vec<Stmt>, cx: &mut PassCx) -> Result<Expr, RuleError> {
    let span = e.span;
    let ExprKind::Slice { value, lower, upper, step } = e.kind else {
        unreachable!()
    };
    let seq = cx.named(*value, pre);
    let n = len_of(seq.clone());
    let norm = |b: Option<Box<Expr>>, default: Expr| -> Expr {
        match b {
            None => default,
            Some(b) => match negative_literal(&b) {
                Some(k) => sub(n.clone(), int(k, span)),
                None => *b,
            },
        }
    };
    let step = match step.as_deref().map(|s| (&s.kind, negative_literal(s))) {
        None => 1,
        Some((ExprKind::Int(s), _)) if *s > 0 => *s,
        Some((_, Some(1))) => -1,
        _ => return Err(cx.error(span, "slice step must be a literal")),
    };
    let k = cx.temp();
    let kv = Expr::name(&k, span);
    let (len, item) = if step == -1 {
        if lower.is_some() || upper.is_some() {
            return Err(cx.error(span, "reversed slice with bounds"));
        }
        let at = sub(sub(n.clone(), int(1, span)), kv.clone());
        (n.clone(), Expr::index(seq.clone(), at))
    } else {
        let start = norm(lower, int(0, span));
        let stop = norm(upper, n.clone());
        let len = if step == 1 {
            match &start.kind {
                ExprKind::Int(0) => stop,
                _ => sub(stop, start.clone()),
            }
        } else {
            Expr::binop(
                BinOp::FloorDiv,
                add(sub(stop, start.clone()), int(step - 1, span)),
                int(step, span),
            )
        };
        let offset = if step == 1 { kv.clone() } else { Expr::binop(BinOp::Mul, int(step, span), kv.clone()) };
        let at = match &start.kind {
            ExprKind::Int(0) => offset,
            _ => add(start, offset),
        };
        (len, Expr::index(seq.clone(), at))
    };
    let r = cx.temp();
    let ty = cx.env.expr_type(&seq);
    cx.declare(&r, VarType { shape: if matches!(ty.shape, Shape::Array2 { .. }) { ty.shape } else { Shape::Array1 { ndarray: false } }, ..ty });
    pre.push(assign_name(&r, prealloc(len.clone())));
    pre.push(for_range(
        &k,
        range1(len),
        vec![Stmt::assign(Expr::index(Expr::name(&r, span), kv), item)],
    ));
    Ok(Expr::name(r, span))
}

pub(crate) fn lower_array_ops(body: Vec<Stmt>, cx: &mut PassCx) -> Result<Vec<Stmt>, RuleError> {
    hoist_block(body, cx, &mut |e, pre, cx| try_map(e, pre, cx, &mut lower_array_node))
}

#[cfg(test)]
mod tests {
    use crate::emit::types::Interface;
    use crate::frontend::{load_program, render, Program};
    use crate::pyexec::{run, PyValue};
    use crate::rules::{apply_rule, refactor_to_cfp, RefactorError, RuleId};

    fn pass(rule: RuleId, src: &str) -> Result<Program, crate::rules::RuleError> {
        apply_rule(rule, &load_program(src).unwrap(), &Interface::default())
    }

    fn agree(src: &str, inputs: &[PyValue]) {
        let p = load_program(src).unwrap();
        let cfp = refactor_to_cfp(&p).unwrap();
        assert_eq!(run(&p, inputs).unwrap().to_string(), run(&cfp.ast, inputs).unwrap().to_string(), "{}", render(&cfp.ast));
    }

    #[test]
    fn append_loop_is_preallocated() {
        let src = "def f(a):\n    r = []\n    for i in range(len(a)):\n        r.append(a[i] * 2)\n    return r\n";
        let p = pass(RuleId::DataStructure, src).unwrap();
        let text = render(&p);
        assert!(text.contains("r = [0] * len(a)"), "{text}");
        assert!(!text.contains("append"), "{text}");
        agree(src, &[PyValue::ints(&[1, 2, 3])]);
    }

    #[test]
    fn conditional_append_is_rejected() {
        let src = "def f(a):\n    r = []\n    for i in range(len(a)):\n        if a[i] > 0:\n            r.append(a[i])\n    return r\n";
        let err = pass(RuleId::DataStructure, src).unwrap_err();
        assert!(err.message.contains("dynamic container growth not derivable"));
    }

    #[test]
    fn nested_appends_and_prepend() {
        agree(
            "def f(a, b):\n    r = []\n    for i in range(len(a)):\n        for j in range(len(b)):\n            r.append(a[i] * b[j])\n        r.append(0)\n    return r\n",
            &[PyValue::ints(&[1, 2]), PyValue::ints(&[3, 4, 5])],
        );
        agree(
            "def f(a):\n    r = []\n    for i in range(len(a)):\n        r.insert(0, a[i])\n    return r\n",
            &[PyValue::ints(&[1, 2, 3])],
        );
    }

    #[test]
    fn count_and_index_queries() {
        agree("def f(a, x):\n    return a.count(x) * 10 + a.index(x)\n", &[PyValue::ints(&[4, 7, 7, 1]), PyValue::int(7)]);
    }

    #[test]
    fn sum_becomes_accumulator() {
        let p = pass(RuleId::EliminateAdvancedArrayOperations, "import numpy\ndef f(a):\n    return numpy.sum(a)\n").unwrap();
        assert_eq!(
            render(&p),
            "import numpy\ndef f(a):\n    __t_1 = 0\n    for __t_0 in range(len(a)):\n        __t_1 = __t_1 + a[__t_0]\n    return __t_1\n"
        );
    }

    #[test]
    fn where_clip_slice_dot_agree() {
        agree(
            "import numpy as np\ndef f(a, b):\n    w = np.where(np.array(a) > 2, a, b)\n    return np.sum(np.clip(w, 1, 5)) + np.dot(a, b) + sum(a[1:]) + max(b[::-1])\n",
            &[PyValue::ints(&[1, 2, 3, 4]), PyValue::ints(&[9, 0, 2, 6])],
        );
    }

    #[test]
    fn integer_array_indexing_is_rejected() {
        let p = load_program("import numpy\ndef f(a, b):\n    return a[numpy.array(b)]\n").unwrap();
        assert!(matches!(refactor_to_cfp(&p), Err(RefactorError::Rules(_))));
    }
}
