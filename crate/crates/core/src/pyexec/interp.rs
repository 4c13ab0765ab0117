//! Tree-walking evaluator for the subset.

use std::collections::HashMap;

use super::builtins::{self, iterate, list_method};
use super::ops::{binop, compare, negate};
use super::value::{Value, ListRef};
use super::{FaultKind, RuntimeFault};
use crate::frontend::{canonical_callee, BinOp, BoolOp, Expr, ExprKind, FunctionDef, Span, Stmt, StmtKind, UnaryOp};

enum Flow {
    Normal,
    Break,
    Continue,
    Return(Value),
}

pub(crate) struct Interp {
    steps: u64,
    limit: u64,
    env: HashMap<String, Value>,
}

type R<T> = Result<T, RuntimeFault>;

fn fault(kind: FaultKind, span: Span, message: impl Into<String>) -> RuntimeFault {
    RuntimeFault {
        kind,
        span,
        message: message.into(),
    }
}

fn lift<T>(span: Span, r: Result<T, (FaultKind, String)>) -> R<T> {
    r.map_err(|(k, m)| fault(k, span, m))
}

enum Place {
    Name(String),
    List(ListRef, usize),
    Array(super::value::Arr, usize),
}

impl Interp {
    pub fn new(limit: u64) -> Self {
        Self {
            steps: 0,
            limit,
            env: HashMap::new(),
        }
    }

    fn tick(&mut self, span: Span) -> R<()> {
        self.steps += 1;
        if self.steps > self.limit {
            return Err(fault(FaultKind::StepLimit, span, format!("step limit of {} exceeded", self.limit)));
        }
        Ok(())
    }

    pub fn call(&mut self, f: &FunctionDef, args: Vec<Value>) -> R<Value> {
        if args.len() != f.params.len() {
            return Err(fault(
                FaultKind::TypeError,
                Span::new(1, 1),
                format!("{}() takes {} arguments ({} given)", f.name, f.params.len(), args.len()),
            ));
        }
        for (p, a) in f.params.iter().zip(args) {
            self.env.insert(p.name.clone(), a);
        }
        match self.block(&f.body)? {
            Flow::Return(v) => Ok(v),
            _ => Ok(Value::None),
        }
    }

    fn block(&mut self, stmts: &[Stmt]) -> R<Flow> {
        for s in stmts {
            match self.stmt(s)? {
                Flow::Normal => {}
                other => return Ok(other),
            }
        }
        Ok(Flow::Normal)
    }

    fn truthy(&self, v: &Value, span: Span) -> R<bool> {
        v.truthy().map_err(|m| fault(FaultKind::TypeError, span, m))
    }

    fn stmt(&mut self, s: &Stmt) -> R<Flow> {
        self.tick(s.span)?;
        match &s.kind {
            StmtKind::Assign { target, value } => {
                if let (ExprKind::Tuple(ts), ExprKind::Tuple(vs)) = (&target.kind, &value.kind) {
                    let vals = vs.iter().map(|v| self.eval(v)).collect::<R<Vec<_>>>()?;
                    for (t, v) in ts.iter().zip(vals) {
                        self.assign(t, v)?;
                    }
                } else {
                    let v = self.eval(value)?;
                    self.assign(target, v)?;
                }
                Ok(Flow::Normal)
            }
            StmtKind::AugAssign { target, op, value } => {
                let place = self.place(target)?;
                let cur = self.read_place(&place, target.span)?;
                let rhs = self.eval(value)?;
                if let (Value::List(l), BinOp::Add) = (&cur, op) {
                    let items = lift(value.span, iterate(&rhs))?;
                    l.borrow_mut().extend(items);
                    return Ok(Flow::Normal);
                }
                let v = lift(s.span, binop(*op, &cur, &rhs))?;
                self.write_place(place, v, target.span)?;
                Ok(Flow::Normal)
            }
            StmtKind::Expr(e) => {
                self.eval(e)?;
                Ok(Flow::Normal)
            }
            StmtKind::Return(v) => {
                let v = match v {
                    Some(e) => self.eval(e)?,
                    None => Value::None,
                };
                Ok(Flow::Return(v))
            }
            StmtKind::If { test, body, orelse } => {
                let c = self.eval(test)?;
                if self.truthy(&c, test.span)? {
                    self.block(body)
                } else {
                    self.block(orelse)
                }
            }
            StmtKind::For { target, iter, body } => {
                let it = self.eval(iter)?;
                let items: Box<dyn Iterator<Item = Value>> = match it {
                    Value::Range(a, b, st) => Box::new(super::value::range_values(a, b, st).into_iter().map(Value::int)),
                    other => Box::new(lift(iter.span, iterate(&other))?.into_iter()),
                };
                for v in items {
                    self.tick(s.span)?;
                    self.assign(target, v)?;
                    match self.block(body)? {
                        Flow::Break => break,
                        Flow::Return(v) => return Ok(Flow::Return(v)),
                        Flow::Normal | Flow::Continue => {}
                    }
                }
                Ok(Flow::Normal)
            }
            StmtKind::While { test, body } => {
                loop {
                    let c = self.eval(test)?;
                    if !self.truthy(&c, test.span)? {
                        break;
                    }
                    match self.block(body)? {
                        Flow::Break => break,
                        Flow::Return(v) => return Ok(Flow::Return(v)),
                        Flow::Normal | Flow::Continue => {}
                    }
                }
                Ok(Flow::Normal)
            }
            StmtKind::Break => Ok(Flow::Break),
            StmtKind::Continue => Ok(Flow::Continue),
            StmtKind::Pass | StmtKind::Import(_) | StmtKind::FromImport { .. } => Ok(Flow::Normal),
            StmtKind::FunctionDef(_) | StmtKind::With { .. } => Err(fault(
                FaultKind::TypeError,
                s.span,
                "statement outside the subset",
            )),
        }
    }

    fn index_of(&self, len: usize, idx: &Value, span: Span) -> R<usize> {
        let i = match idx {
            Value::Int(_) | Value::Bool(_) => idx.as_i64().unwrap_or(i64::MAX),
            other => {
                return Err(fault(
                    FaultKind::TypeError,
                    span,
                    format!("indices must be integers, not {}", other.type_name()),
                ))
            }
        };
        let n = len as i64;
        let j = if i < 0 { i + n } else { i };
        if j < 0 || j >= n {
            return Err(fault(
                FaultKind::IndexOutOfBounds,
                span,
                format!("index {i} out of range for length {len}"),
            ));
        }
        Ok(j as usize)
    }

    fn place(&mut self, target: &Expr) -> R<Place> {
        match &target.kind {
            ExprKind::Name(n) => Ok(Place::Name(n.clone())),
            ExprKind::Index { value, index } => {
                let c = self.eval(value)?;
                let i = self.eval(index)?;
                match c {
                    Value::List(l) => {
                        let len = l.borrow().len();
                        let j = self.index_of(len, &i, index.span)?;
                        Ok(Place::List(l, j))
                    }
                    Value::Array(a) => {
                        if a.shape.len() != 1 {
                            return Err(fault(FaultKind::TypeError, target.span, "row assignment is outside the subset"));
                        }
                        let j = self.index_of(a.len(), &i, index.span)?;
                        Ok(Place::Array(a, j))
                    }
                    other => Err(fault(
                        FaultKind::TypeError,
                        target.span,
                        format!("'{}' object does not support item assignment", other.type_name()),
                    )),
                }
            }
            _ => Err(fault(FaultKind::TypeError, target.span, "unsupported assignment target")),
        }
    }

    fn read_place(&mut self, p: &Place, span: Span) -> R<Value> {
        match p {
            Place::Name(n) => self
                .env
                .get(n)
                .cloned()
                .ok_or_else(|| fault(FaultKind::NameError, span, format!("name '{n}' is not defined"))),
            Place::List(l, i) => Ok(l.borrow()[*i].clone()),
            Place::Array(a, i) => Ok(a.get(*i)),
        }
    }

    fn write_place(&mut self, p: Place, v: Value, span: Span) -> R<()> {
        match p {
            Place::Name(n) => {
                self.env.insert(n, v);
            }
            Place::List(l, i) => l.borrow_mut()[i] = v,
            Place::Array(a, i) => {
                let x = v.as_f64().ok_or_else(|| {
                    fault(FaultKind::TypeError, span, format!("cannot store {} in a numeric array", v.type_name()))
                })?;
                a.set_flat(i, x);
            }
        }
        Ok(())
    }

    fn assign(&mut self, target: &Expr, v: Value) -> R<()> {
        let p = self.place(target)?;
        self.write_place(p, v, target.span)
    }

    fn eval(&mut self, e: &Expr) -> R<Value> {
        self.tick(e.span)?;
        let span = e.span;
        match &e.kind {
            ExprKind::Int(v) => Ok(Value::int(*v)),
            ExprKind::Float(v) => Ok(Value::Real(*v)),
            ExprKind::Bool(b) => Ok(Value::Bool(*b)),
            ExprKind::Str(_) => Err(fault(FaultKind::TypeError, span, "strings are outside the subset")),
            ExprKind::Name(n) => {
                if n == "None" {
                    return Ok(Value::None);
                }
                self.env
                    .get(n)
                    .cloned()
                    .ok_or_else(|| fault(FaultKind::NameError, span, format!("name '{n}' is not defined")))
            }
            ExprKind::Attribute { .. } => {
                let path = canonical_callee(e).unwrap_or_default();
                match path.as_str() {
                    "math.pi" | "numpy.pi" => Ok(Value::Real(std::f64::consts::PI)),
                    "math.e" | "numpy.e" => Ok(Value::Real(std::f64::consts::E)),
                    _ => Err(fault(FaultKind::NameError, span, format!("unknown attribute `{path}`"))),
                }
            }
            ExprKind::Call { func, args } => self.call_expr(func, args, span),
            ExprKind::Index { value, index } => {
                let c = self.eval(value)?;
                let i = self.eval(index)?;
                match &c {
                    Value::List(l) => {
                        let len = l.borrow().len();
                        let j = self.index_of(len, &i, index.span)?;
                        let v = l.borrow()[j].clone();
                        Ok(v)
                    }
                    Value::Array(a) => {
                        if matches!(i, Value::List(_) | Value::Array(_)) {
                            return Err(fault(FaultKind::TypeError, index.span, "fancy indexing is outside the subset"));
                        }
                        let j = self.index_of(a.len(), &i, index.span)?;
                        Ok(a.get(j))
                    }
                    Value::Range(s, t, st) => {
                        let vals = super::value::range_values(*s, *t, *st);
                        let j = self.index_of(vals.len(), &i, index.span)?;
                        Ok(Value::int(vals[j]))
                    }
                    other => Err(fault(
                        FaultKind::TypeError,
                        span,
                        format!("'{}' object is not subscriptable", other.type_name()),
                    )),
                }
            }
            ExprKind::Slice {
                value,
                lower,
                upper,
                step,
            } => {
                let c = self.eval(value)?;
                let bound = |x: &Option<Box<Expr>>, me: &mut Self| -> R<Option<i64>> {
                    match x {
                        None => Ok(None),
                        Some(e) => {
                            let v = me.eval(e)?;
                            v.as_i64()
                                .map(Some)
                                .ok_or_else(|| fault(FaultKind::TypeError, e.span, "slice indices must be integers"))
                        }
                    }
                };
                let lo = bound(lower, self)?;
                let hi = bound(upper, self)?;
                let st = bound(step, self)?.unwrap_or(1);
                if st == 0 {
                    return Err(fault(FaultKind::DomainError, span, "slice step cannot be zero"));
                }
                let items = lift(span, iterate(&c))?;
                let idx = slice_indices(items.len() as i64, lo, hi, st);
                let picked: Vec<Value> = idx.into_iter().map(|i| items[i].clone()).collect();
                match c {
                    Value::Array(a) => {
                        let mut data = Vec::new();
                        let mut inner = a.shape[1..].to_vec();
                        for v in &picked {
                            match v {
                                Value::Array(row) => {
                                    inner = row.shape.clone();
                                    data.extend(row.values());
                                }
                                other => data.push(other.as_f64().unwrap_or(f64::NAN)),
                            }
                        }
                        let mut shape = vec![picked.len()];
                        shape.extend(inner);
                        Ok(Value::Array(super::value::Arr::new(a.dtype, shape, data)))
                    }
                    _ => Ok(Value::new_list(picked)),
                }
            }
            ExprKind::BinOp { op, left, right } => {
                let l = self.eval(left)?;
                let r = self.eval(right)?;
                lift(span, binop(*op, &l, &r))
            }
            ExprKind::Unary { op, operand } => {
                let v = self.eval(operand)?;
                match op {
                    UnaryOp::Not => Ok(Value::Bool(!self.truthy(&v, span)?)),
                    UnaryOp::Neg => lift(span, negate(&v)),
                    UnaryOp::Pos => {
                        if let Value::Bool(b) = v {
                            Ok(Value::int(b as i64))
                        } else {
                            Ok(v)
                        }
                    }
                    UnaryOp::Invert => Err(fault(FaultKind::TypeError, span, "bitwise operators are outside the subset")),
                }
            }
            ExprKind::BoolOp { op, left, right } => {
                let l = self.eval(left)?;
                let t = self.truthy(&l, left.span)?;
                match op {
                    BoolOp::And if !t => Ok(l),
                    BoolOp::Or if t => Ok(l),
                    _ => self.eval(right),
                }
            }
            ExprKind::Compare {
                left,
                ops,
                comparators,
            } => {
                let mut cur = self.eval(left)?;
                let mut result = Value::Bool(true);
                for (op, c) in ops.iter().zip(comparators) {
                    let next = self.eval(c)?;
                    result = lift(span, compare(*op, &cur, &next))?;
                    if ops.len() > 1 && !self.truthy(&result, span)? {
                        return Ok(Value::Bool(false));
                    }
                    cur = next;
                }
                Ok(result)
            }
            ExprKind::IfExp { test, body, orelse } => {
                let c = self.eval(test)?;
                if self.truthy(&c, test.span)? {
                    self.eval(body)
                } else {
                    self.eval(orelse)
                }
            }
            ExprKind::List(items) => {
                let vals = items.iter().map(|i| self.eval(i)).collect::<R<Vec<_>>>()?;
                Ok(Value::new_list(vals))
            }
            ExprKind::Tuple(_) => Err(fault(FaultKind::TypeError, span, "tuples are outside the subset")),
            ExprKind::ListComp { elt, target, iter } => {
                let it = self.eval(iter)?;
                let items = lift(iter.span, iterate(&it))?;
                // comprehension variables do not leak into the enclosing scope
                let saved = self.env.get(target).cloned();
                let mut out = Vec::with_capacity(items.len());
                for v in items {
                    self.env.insert(target.clone(), v);
                    out.push(self.eval(elt)?);
                }
                match saved {
                    Some(v) => self.env.insert(target.clone(), v),
                    None => self.env.remove(target),
                };
                Ok(Value::new_list(out))
            }
        }
    }

    fn call_expr(&mut self, func: &Expr, args: &[Expr], span: Span) -> R<Value> {
        // method calls on local values
        if let ExprKind::Attribute { value, attr } = &func.kind {
            let is_module = value
                .as_name()
                .is_some_and(|n| matches!(n, "math" | "numpy" | "np") && !self.env.contains_key(n));
            if !is_module {
                let recv = self.eval(value)?;
                let vals = args.iter().map(|a| self.eval(a)).collect::<R<Vec<_>>>()?;
                return lift(span, list_method(&recv, attr, &vals));
            }
        }
        let path = canonical_callee(func)
            .ok_or_else(|| fault(FaultKind::TypeError, span, "callee must be a name"))?;
        let vals = args.iter().map(|a| self.eval(a)).collect::<R<Vec<_>>>()?;
        match builtins::call(&path, &vals) {
            Some(r) => lift(span, r),
            None => Err(fault(FaultKind::NameError, span, format!("name '{path}' is not defined"))),
        }
    }
}

/// Python slice index selection.
pub(crate) fn slice_indices(len: i64, lo: Option<i64>, hi: Option<i64>, step: i64) -> Vec<usize> {
    let norm = |x: i64, lower: i64, upper: i64| {
        let x = if x < 0 { x + len } else { x };
        x.clamp(lower, upper)
    };
    let mut out = Vec::new();
    if step > 0 {
        let start = lo.map(|x| norm(x, 0, len)).unwrap_or(0);
        let stop = hi.map(|x| norm(x, 0, len)).unwrap_or(len);
        let mut i = start;
        while i < stop {
            out.push(i as usize);
            i += step;
        }
    } else {
        let start = lo.map(|x| norm(x, -1, len - 1)).unwrap_or(len - 1);
        let stop = hi.map(|x| norm(x, -1, len - 1)).unwrap_or(-1);
        let mut i = start;
        while i > stop {
            out.push(i as usize);
            i += step;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::slice_indices;

    #[test]
    fn slices_match_python() {
        assert_eq!(slice_indices(5, Some(1), None, 1), vec![1, 2, 3, 4]);
        assert_eq!(slice_indices(5, None, None, -1), vec![4, 3, 2, 1, 0]);
        assert_eq!(slice_indices(5, Some(-2), None, 1), vec![3, 4]);
        assert_eq!(slice_indices(5, None, Some(-1), 2), vec![0, 2]);
        assert_eq!(slice_indices(5, Some(10), None, 1), Vec::<usize>::new());
    }
}
