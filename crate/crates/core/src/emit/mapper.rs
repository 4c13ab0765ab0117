use std::collections::BTreeSet;

use super::table::{key_of, MappingTable, PatternKey, Qualifier};
use super::types::{Numeric, SecrecyType, Shape, TypeEnv, VarType};
use super::{MappingError, SpdzProgram, TypedCfp, CANONICAL_IMPORTS};
use crate::frontend::{
    canonical_callee, parse_source, BinOp, Expr, ExprKind, FunctionDef, Param, Program, Span, Stmt, StmtKind,
    UnaryOp, BASIS_CALLS,
};
use crate::pyexec::basis;

/// Output of [`map_names`]: the program and the table entries that fired.
#[derive(Debug, Clone, PartialEq)]
pub struct Mapped {
    pub program: SpdzProgram,
    /// Ids into the mapping table, ascending.
    pub fired: Vec<usize>,
}

impl Mapped {
    /// Demonstration tokens of the entries that fired, each counted once.
    pub fn demo_tokens(&self, table: &MappingTable) -> usize {
        let refs: BTreeSet<&str> = self.fired.iter().map(|&i| table.entry(i).demo_ref.as_str()).collect();
        refs.into_iter()
            .filter_map(|r| table.entries().iter().find(|e| e.demo_ref == r))
            .map(|e| e.token_cost)
            .sum()
    }
}

pub fn map_names(typed: &TypedCfp) -> Result<Mapped, MappingError> {
    map_names_with(typed, MappingTable::default_table())
}

pub fn map_names_with(typed: &TypedCfp, table: &MappingTable) -> Result<Mapped, MappingError> {
    let mut m = Mapper {
        env: &typed.env,
        table,
        fired: BTreeSet::new(),
    };
    let mut body = parse_source(CANONICAL_IMPORTS).expect("canonical imports parse").body;
    for s in &typed.cfp.ast.body {
        match &s.kind {
            StmtKind::Import(_) | StmtKind::FromImport { .. } => {}
            StmtKind::FunctionDef(f) => {
                let params = f
                    .params
                    .iter()
                    .map(|p| Param {
                        name: p.name.clone(),
                        annotation: Some(annotation(m.env.var(&p.name).unwrap_or(VarType::CLEAR_REAL), p.span)),
                        span: p.span,
                    })
                    .collect();
                let def = FunctionDef {
                    name: f.name.clone(),
                    params,
                    docstring: f.docstring.clone(),
                    body: m.block(&f.body)?,
                };
                body.push(Stmt::new(StmtKind::FunctionDef(def), s.span));
            }
            _ => body.push(m.stmt(s)?),
        }
    }
    Ok(Mapped {
        program: SpdzProgram { ast: Program::new(body) },
        fired: m.fired.into_iter().collect(),
    })
}

fn annotation(t: VarType, span: Span) -> Expr {
    let base = match t.basic() {
        SecrecyType::Sint => "sint",
        SecrecyType::Sfix => "sfix",
        SecrecyType::ClearInt if !t.shape.is_container() => "int",
        SecrecyType::ClearReal if !t.shape.is_container() => "float",
        _ => "list",
    };
    let base = Expr::name(base, span);
    if !t.is_secret() {
        return base;
    }
    match t.shape {
        Shape::Array1 { .. } => Expr::attribute(base, "Array"),
        Shape::Array2 { .. } => Expr::attribute(base, "Matrix"),
        _ => base,
    }
}

fn qualifier_of(t: VarType) -> Qualifier {
    match t.basic() {
        SecrecyType::Sint => Qualifier::Sint,
        SecrecyType::Sfix => Qualifier::Sfix,
        SecrecyType::ClearReal => Qualifier::Cfix,
        _ => Qualifier::Cint,
    }
}

/// `[0] * n` (or `[0.0] * n`) with its length.
fn prealloc_len(e: &Expr) -> Option<&Expr> {
    match &e.kind {
        ExprKind::BinOp { op: BinOp::Mul, left, right } => match &left.kind {
            ExprKind::List(items) if items.len() == 1 && matches!(items[0].kind, ExprKind::Int(0) | ExprKind::Float(_)) => {
                Some(right)
            }
            _ => None,
        },
        _ => None,
    }
}

fn literal_value(e: &Expr) -> Option<f64> {
    match &e.kind {
        ExprKind::Int(v) => Some(*v as f64),
        ExprKind::Float(v) => Some(*v),
        ExprKind::Unary { op: UnaryOp::Neg, operand } => literal_value(operand).map(|v| -v),
        ExprKind::Unary { op: UnaryOp::Pos, operand } => literal_value(operand),
        _ => None,
    }
}

struct Mapper<'a> {
    env: &'a TypeEnv,
    table: &'a MappingTable,
    fired: BTreeSet<usize>,
}

impl Mapper<'_> {
    fn apply(&mut self, key: PatternKey, quals: &[Qualifier], args: Vec<Expr>, span: Span) -> Result<Expr, MappingError> {
        let id = self.table.lookup(&key, quals).ok_or_else(|| MappingError {
            callee: key.to_string(),
            span,
        })?;
        self.fired.insert(id);
        let mut out = self.table.entry(id).instantiate(&args);
        out.span = span;
        Ok(out)
    }

    fn secrecy_quals(&self, secret: bool) -> [Qualifier; 2] {
        if secret {
            [Qualifier::Secret, Qualifier::Any]
        } else {
            [Qualifier::Clear, Qualifier::Any]
        }
    }

    fn block(&mut self, stmts: &[Stmt]) -> Result<Vec<Stmt>, MappingError> {
        stmts.iter().map(|s| self.stmt(s)).collect()
    }

    /// Right-hand side creating a variable of type `vt`.
    fn creation(&mut self, vt: VarType, value: &Expr) -> Result<Option<Expr>, MappingError> {
        let span = value.span;
        if vt.shape.is_container() {
            let q = qualifier_of(vt.element());
            if let Some(n) = prealloc_len(value) {
                if !vt.is_secret() {
                    return Ok(None);
                }
                let n = self.expr(n)?;
                return self.apply(PatternKey::Call("alloc".into(), 1), &[q], vec![n], span).map(Some);
            }
            let ExprKind::Call { func, args } = &value.kind else {
                return Ok(None);
            };
            match (canonical_callee(func).as_deref(), args.as_slice()) {
                (Some("numpy.zeros"), [dims]) => {
                    let q = if vt.is_secret() { q } else { qualifier_of(VarType { numeric: Numeric::Real, ..vt.element() }) };
                    let out = match &dims.kind {
                        ExprKind::List(d) | ExprKind::Tuple(d) if d.len() == 2 => {
                            let (r, c) = (self.expr(&d[0])?, self.expr(&d[1])?);
                            self.apply(PatternKey::Call("matrix".into(), 2), &[q], vec![r, c], span)?
                        }
                        _ => {
                            let n = self.expr(dims)?;
                            self.apply(PatternKey::Call("alloc".into(), 1), &[q], vec![n], span)?
                        }
                    };
                    Ok(Some(out))
                }
                (Some("numpy.array"), [x]) => {
                    let x = self.expr(x)?;
                    self.apply(PatternKey::Call("copy".into(), 1), &[q], vec![x], span).map(Some)
                }
                _ => Ok(None),
            }
        } else if vt.is_secret() && !self.env.is_secret(value) {
            let v = match &value.kind {
                ExprKind::Bool(b) => Expr::int(*b as i64, span),
                _ => self.expr(value)?,
            };
            self.apply(PatternKey::Call("const".into(), 1), &[qualifier_of(vt)], vec![v], span).map(Some)
        } else {
            Ok(None)
        }
    }

    fn stmt(&mut self, s: &Stmt) -> Result<Stmt, MappingError> {
        let span = s.span;
        let kind = match &s.kind {
            StmtKind::Assign { target, value } => {
                let created = match target.as_name().and_then(|n| self.env.var(n)) {
                    Some(vt) => self.creation(vt, value)?,
                    None => None,
                };
                let value = match created {
                    Some(v) => v,
                    None => self.expr(value)?,
                };
                StmtKind::Assign {
                    target: self.expr(target)?,
                    value,
                }
            }
            StmtKind::AugAssign { target, op, value } => {
                let secret = self.env.is_secret(target) || self.env.is_secret(value);
                if secret && matches!(op, BinOp::FloorDiv | BinOp::Mod | BinOp::Pow) {
                    let full = Expr::binop(*op, target.clone(), value.clone());
                    StmtKind::Assign {
                        target: self.expr(target)?,
                        value: self.expr(&full)?,
                    }
                } else {
                    StmtKind::AugAssign {
                        target: self.expr(target)?,
                        op: *op,
                        value: self.expr(value)?,
                    }
                }
            }
            StmtKind::Expr(e) => StmtKind::Expr(self.expr(e)?),
            StmtKind::Return(v) => StmtKind::Return(v.as_ref().map(|v| self.expr(v)).transpose()?),
            StmtKind::If { test, body, orelse } => StmtKind::If {
                test: self.expr(test)?,
                body: self.block(body)?,
                orelse: self.block(orelse)?,
            },
            StmtKind::For { target, iter, body } => StmtKind::For {
                target: target.clone(),
                iter: self.expr(iter)?,
                body: self.block(body)?,
            },
            StmtKind::While { test, body } => StmtKind::While {
                test: self.expr(test)?,
                body: self.block(body)?,
            },
            k @ (StmtKind::Break | StmtKind::Continue | StmtKind::Pass) => k.clone(),
            _ => {
                return Err(MappingError {
                    callee: "statement".into(),
                    span,
                })
            }
        };
        Ok(Stmt::new(kind, span))
    }

    fn expr(&mut self, e: &Expr) -> Result<Expr, MappingError> {
        let span = e.span;
        let kind = match &e.kind {
            ExprKind::Int(_) | ExprKind::Float(_) | ExprKind::Bool(_) | ExprKind::Str(_) | ExprKind::Name(_) => {
                return Ok(e.clone())
            }
            ExprKind::Attribute { value, attr } => ExprKind::Attribute {
                value: Box::new(self.expr(value)?),
                attr: attr.clone(),
            },
            ExprKind::Index { value, index } => ExprKind::Index {
                value: Box::new(self.expr(value)?),
                index: Box::new(self.expr(index)?),
            },
            ExprKind::BinOp { op, left, right } => {
                let secret = self.env.is_secret(left) || self.env.is_secret(right);
                let int_power = *op == BinOp::Pow && matches!(right.kind, ExprKind::Int(k) if k >= 0);
                let (l, r) = (self.expr(left)?, self.expr(right)?);
                if secret && !int_power && matches!(op, BinOp::FloorDiv | BinOp::Mod | BinOp::Pow) {
                    return self.apply(key_of(e).expect("operator key"), &[Qualifier::Secret], vec![l, r], span);
                }
                ExprKind::BinOp {
                    op: *op,
                    left: Box::new(l),
                    right: Box::new(r),
                }
            }
            ExprKind::BoolOp { left, right, .. } => {
                let (ls, rs) = (self.env.is_secret(left), self.env.is_secret(right));
                let (l, r) = (self.expr(left)?, self.expr(right)?);
                // the secret operand must be the receiver of bit_and/bit_or
                let args = if !ls && rs { vec![r, l] } else { vec![l, r] };
                let quals = self.secrecy_quals(ls || rs);
                return self.apply(key_of(e).expect("boolean key"), &quals, args, span);
            }
            ExprKind::Unary { op: UnaryOp::Not, operand } => {
                let quals = self.secrecy_quals(self.env.is_secret(operand));
                let x = self.expr(operand)?;
                return self.apply(PatternKey::Not, &quals, vec![x], span);
            }
            ExprKind::Unary { op, operand } => ExprKind::Unary {
                op: *op,
                operand: Box::new(self.expr(operand)?),
            },
            ExprKind::Compare { left, ops, comparators } => ExprKind::Compare {
                left: Box::new(self.expr(left)?),
                ops: ops.clone(),
                comparators: comparators.iter().map(|c| self.expr(c)).collect::<Result<_, _>>()?,
            },
            ExprKind::Call { func, args } => {
                let path = canonical_callee(func).ok_or_else(|| MappingError {
                    callee: crate::frontend::render_expr(func),
                    span,
                })?;
                if BASIS_CALLS.contains(&path.as_str()) && args.len() == 1 {
                    if let Some(v) = literal_value(&args[0]).and_then(|x| basis(&path, x)) {
                        return Ok(Expr::new(ExprKind::Float(v), span));
                    }
                }
                let secret = args.iter().any(|a| self.env.is_secret(a));
                let mapped = args.iter().map(|a| self.expr(a)).collect::<Result<Vec<_>, _>>()?;
                let quals = self.secrecy_quals(secret);
                return self.apply(PatternKey::Call(path, args.len()), &quals, mapped, span);
            }
            ExprKind::List(items) => ExprKind::List(items.iter().map(|i| self.expr(i)).collect::<Result<_, _>>()?),
            ExprKind::Tuple(items) => ExprKind::Tuple(items.iter().map(|i| self.expr(i)).collect::<Result<_, _>>()?),
            ExprKind::IfExp { .. } | ExprKind::ListComp { .. } | ExprKind::Slice { .. } => {
                return Err(MappingError {
                    callee: "non-canonical expression".into(),
                    span,
                })
            }
        };
        Ok(Expr::new(kind, span))
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::emit::{assign_secrecy_types, emit_source};
    use crate::frontend::{load_program, parse_expr_source, render_expr};
    use crate::rules::refactor_to_cfp;

    fn emit(src: &str) -> Mapped {
        let cfp = refactor_to_cfp(&load_program(src).unwrap()).unwrap();
        map_names(&assign_secrecy_types(&cfp, &BTreeSet::new()).unwrap()).unwrap()
    }

    fn body(m: &Mapped) -> String {
        let text = emit_source(&m.program);
        text[CANONICAL_IMPORTS.len()..].to_string()
    }

    #[test]
    fn sqrt_branch_matches_target_listing() {
        let m = emit("import math\ndef f(x):\n    if x > 0:\n        y = math.sqrt(x)\n    else:\n        y = math.sqrt(-x)\n    return y\n");
        assert_eq!(
            body(&m),
            "def f(x: sfix):\n    y = (x > 0) * mpc_math.sqrt(x) + (x <= 0) * mpc_math.sqrt(-x)\n    return y\n"
        );
    }

    #[test]
    fn secret_logic_uses_bit_methods() {
        let m = emit("def f(x):\n    ok = x > -3 and x <= 0\n    return ok\n");
        assert!(body(&m).contains("ok = (x > -3).bit_and(x <= 0)"), "{}", body(&m));
    }

    #[test]
    fn secret_flag_is_constructed() {
        let m = emit("def f(a):\n    for i in range(len(a)):\n        if a[i] > 2:\n            break\n        a[i] = a[i] + 1\n    return a\n");
        let text = body(&m);
        assert!(text.contains("__flag_0 = sint(0)"), "{text}");
        assert!(text.contains("__flag_0 = __flag_0.bit_or(a[i] > 2)"), "{text}");
        assert!(text.starts_with("def f(a: sfix.Array):"), "{text}");
    }

    #[test]
    fn preallocation_becomes_array() {
        let m = emit("def f(a):\n    r = []\n    for i in range(len(a)):\n        r.append(a[i] * 2)\n    return r\n");
        assert!(body(&m).contains("r = sfix.Array(len(a))"), "{}", body(&m));
    }

    #[test]
    fn power_and_sorting_entries() {
        let typed = TypedCfp {
            cfp: refactor_to_cfp(&load_program("def f(x, y):\n    return x\n").unwrap()).unwrap(),
            env: {
                let mut env = TypeEnv::default();
                for n in ["x", "y"] {
                    env.vars.insert(n.into(), VarType::scalar(crate::emit::Secrecy::Secret, Numeric::Real));
                }
                env
            },
            interface: Default::default(),
        };
        let mut m = Mapper {
            env: &typed.env,
            table: MappingTable::default_table(),
            fired: BTreeSet::new(),
        };
        let out = m.expr(&parse_expr_source("numpy.power(x, y)").unwrap()).unwrap();
        assert_eq!(render_expr(&out), "mpc_math.pow_fx(x, y)");
        let out = m.expr(&parse_expr_source("sorted(x)").unwrap()).unwrap();
        assert_eq!(render_expr(&out), "radix_sort(x)");
        let err = m.expr(&parse_expr_source("numpy.cbrt(x)").unwrap()).unwrap_err();
        assert_eq!(err.callee, "numpy.cbrt/1");
    }

    #[test]
    fn literal_basis_calls_fold() {
        let m = emit("import numpy\ndef f(a, b):\n    return numpy.logaddexp2(a, b)\n");
        let text = body(&m);
        assert!(text.contains("__t_0 = 0.6931471805599453"), "{text}");
        assert!(text.contains("mpc_math.log_fx(__t_5, math.e) / __t_0"), "{text}");
    }

    #[test]
    fn statement_count_is_preserved() {
        let src = "def f(a, x):\n    s = 0\n    for i in range(len(a)):\n        if a[i] > x:\n            s = s + a[i]\n    return s\n";
        let cfp = refactor_to_cfp(&load_program(src).unwrap()).unwrap();
        let m = map_names(&assign_secrecy_types(&cfp, &BTreeSet::new()).unwrap()).unwrap();
        let count = |p: &Program| {
            let mut n = 0;
            p.walk(&mut |_| n += 1);
            n
        };
        let imports = parse_source(CANONICAL_IMPORTS).unwrap().body.len();
        assert_eq!(count(&m.program.ast), count(&cfp.ast) + imports);
    }
}
