//! Tree-walking interpreter over the MP-SPDZ surface with fixed-point
//! secret types and an instruction/memory trace.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::HashMap;
use std::rc::Rc;

use num_integer::Integer;
use num_traits::ToPrimitive;

use super::lint::{CompileError, LintKind, METHODS};
use super::sfix::{sfix_from_real, SFixValue};
use super::trace::{EventKind, Trace};
use super::value::{ElemKind, SecretValue};
use super::{RuntimeError, RuntimeKind, SimConfig, SimFault};
use crate::frontend::{BinOp, BoolOp, CmpOp, Expr, ExprKind, FunctionDef, Program, Span, Stmt, StmtKind, UnaryOp};
use crate::pyexec::{basis, PyValue};

type R<T> = Result<T, SimFault>;
type Cell = Rc<RefCell<Container>>;
type Env = HashMap<String, Val>;

const MAX_DEPTH: usize = 200;

#[derive(Debug, Clone)]
enum Val {
    SInt(i128),
    SFix(SFixValue),
    CInt(i128),
    CReal(f64),
    CBool(bool),
    Seq(Cell),
    /// A module, type or function name.
    Path(String),
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Shape {
    Array(ElemKind),
    Matrix(ElemKind),
    List,
}

#[derive(Debug)]
struct Container {
    id: usize,
    shape: Shape,
    items: Vec<Val>,
}

#[derive(Debug, Clone, Copy)]
enum Num {
    SI(i128),
    SF(SFixValue),
    CI(i128),
    CR(f64),
}

impl Num {
    fn secret(self) -> bool {
        matches!(self, Num::SI(_) | Num::SF(_))
    }

    fn int(self) -> Option<i128> {
        match self {
            Num::SI(v) | Num::CI(v) => Some(v),
            _ => None,
        }
    }

    fn f64(self) -> f64 {
        match self {
            Num::SI(v) | Num::CI(v) => v as f64,
            Num::SF(x) => x.to_f64(),
            Num::CR(x) => x,
        }
    }

    fn val(self) -> Val {
        match self {
            Num::SI(v) => Val::SInt(v),
            Num::SF(x) => Val::SFix(x),
            Num::CI(v) => Val::CInt(v),
            Num::CR(x) => Val::CReal(x),
        }
    }
}

enum Flow {
    Next,
    Break,
    Continue,
    Return(Val),
}

fn kname(v: &Val) -> &'static str {
    match v {
        Val::SInt(_) => "sint",
        Val::SFix(_) => "sfix",
        Val::CInt(_) | Val::CBool(_) => "cint",
        Val::CReal(_) => "cfix",
        Val::Seq(c) => match c.borrow().shape {
            Shape::List => "list",
            _ => "array",
        },
        Val::Path(_) => "fn",
        Val::None => "none",
    }
}

fn op_name(op: BinOp) -> &'static str {
    match op {
        BinOp::Add => "add",
        BinOp::Sub => "sub",
        BinOp::Mul => "mul",
        BinOp::Div => "div",
        BinOp::FloorDiv => "floordiv",
        BinOp::Mod => "mod",
        BinOp::Pow => "pow",
        BinOp::BitAnd => "and",
        BinOp::BitOr => "or",
        BinOp::BitXor => "xor",
        BinOp::LShift => "shl",
        BinOp::RShift => "shr",
    }
}

fn cmp_name(op: CmpOp) -> &'static str {
    match op {
        CmpOp::Lt => "lt",
        CmpOp::LtE => "le",
        CmpOp::Gt => "gt",
        CmpOp::GtE => "ge",
        CmpOp::Eq => "eq",
        CmpOp::NotEq => "ne",
    }
}

fn rt(kind: RuntimeKind, span: Span, message: impl Into<String>) -> SimFault {
    SimFault::Runtime(RuntimeError {
        kind,
        line: span.line,
        col: span.col,
        message: message.into(),
    })
}

fn compile(kind: LintKind, span: Span, message: impl Into<String>) -> SimFault {
    SimFault::Compile(vec![CompileError::new(kind, span, message)])
}

fn type_err(span: Span, message: impl Into<String>) -> SimFault {
    rt(RuntimeKind::TypeError, span, message)
}

fn global(name: &str) -> bool {
    matches!(
        name,
        "sint" | "sfix" | "cint" | "cfix" | "regint" | "mpc_math" | "math" | "radix_sort" | "range" | "len" | "abs" | "min" | "max" | "sorted" | "int" | "float"
    )
}

pub(super) struct Machine<'p> {
    cfg: SimConfig,
    pub(super) trace: Trace,
    next_id: usize,
    steps: u64,
    depth: usize,
    funcs: HashMap<&'p str, &'p FunctionDef>,
}

impl<'p> Machine<'p> {
    pub(super) fn new(program: &'p Program, cfg: SimConfig) -> Self {
        let funcs = program
            .body
            .iter()
            .filter_map(|s| match &s.kind {
                StmtKind::FunctionDef(f) => Some((f.name.as_str(), f)),
                _ => None,
            })
            .collect();
        Self {
            cfg,
            trace: Trace::default(),
            next_id: 0,
            steps: 0,
            depth: 0,
            funcs,
        }
    }

    /// Runs `f` on inputs quantized per its parameter annotations.
    pub(super) fn run(&mut self, f: &'p FunctionDef, inputs: &[PyValue]) -> R<SecretValue> {
        let span = Span::new(1, 1);
        if inputs.len() != f.params.len() {
            return Err(type_err(span, format!("{} takes {} arguments, {} given", f.name, f.params.len(), inputs.len())));
        }
        let mut args = Vec::with_capacity(inputs.len());
        for (p, v) in f.params.iter().zip(inputs) {
            args.push(self.input(p.annotation.as_ref(), v, p.span)?);
        }
        let out = self.call_function(f, args, span)?;
        Ok(detach(&out))
    }

    fn emit(&mut self, kind: EventKind, detail: String) {
        self.trace.push(kind, detail);
    }

    fn tick(&mut self, span: Span) -> R<()> {
        self.steps += 1;
        if self.steps > self.cfg.step_limit {
            return Err(rt(RuntimeKind::StepLimit, span, format!("step limit of {} exceeded", self.cfg.step_limit)));
        }
        Ok(())
    }

    fn fresh(&mut self, shape: Shape, items: Vec<Val>) -> Cell {
        let id = self.next_id;
        self.next_id += 1;
        Rc::new(RefCell::new(Container { id, shape, items }))
    }

    fn alloc(&mut self, shape: Shape, items: Vec<Val>) -> Cell {
        let n = items.len();
        let cell = self.fresh(shape, items);
        let id = cell.borrow().id;
        let desc = match shape {
            Shape::Array(k) => format!("{k} {n}"),
            Shape::List => format!("list {n}"),
            Shape::Matrix(k) => {
                let cols = match cell.borrow().items.first() {
                    Some(Val::Seq(r)) => r.borrow().items.len(),
                    _ => 0,
                };
                format!("{k} {n}x{cols}")
            }
        };
        self.emit(EventKind::Alloc, format!("c{id} {desc}"));
        cell
    }

    fn matrix(&mut self, kind: ElemKind, rows: Vec<Vec<Val>>) -> Cell {
        let id = self.next_id;
        self.next_id += 1;
        let rows: Vec<Val> = rows.into_iter().map(|r| Val::Seq(self.fresh(Shape::Array(kind), r))).collect();
        let cols = match rows.first() {
            Some(Val::Seq(r)) => r.borrow().items.len(),
            _ => 0,
        };
        self.emit(EventKind::Alloc, format!("c{id} {kind} {}x{cols}", rows.len()));
        Rc::new(RefCell::new(Container {
            id,
            shape: Shape::Matrix(kind),
            items: rows,
        }))
    }

    fn fix(&self, x: f64, span: Span) -> R<SFixValue> {
        sfix_from_real(x, self.cfg.f, self.cfg.k).map_err(|e| rt(RuntimeKind::Overflow, span, e.to_string()))
    }

    fn fix_int(&self, v: i128, span: Span) -> R<SFixValue> {
        SFixValue::from_int(v, self.cfg.f, self.cfg.k).map_err(|e| rt(RuntimeKind::Overflow, span, e.to_string()))
    }

    fn sint(&self, v: Option<i128>, span: Span) -> R<Num> {
        let bound = 1i128 << (self.cfg.int_bits - 1);
        match v {
            Some(v) if -bound < v && v < bound => Ok(Num::SI(v)),
            _ => Err(rt(RuntimeKind::Overflow, span, format!("sint result exceeds {} bits", self.cfg.int_bits))),
        }
    }

    fn to_fix(&self, x: Num, span: Span) -> R<SFixValue> {
        match x {
            Num::SI(v) | Num::CI(v) => self.fix_int(v, span),
            Num::SF(x) => Ok(x),
            Num::CR(x) => self.fix(x, span),
        }
    }

    fn zero(&self, kind: ElemKind) -> Val {
        match kind {
            ElemKind::Sint => Val::SInt(0),
            ElemKind::Sfix => Val::SFix(SFixValue {
                raw: 0,
                f: self.cfg.f,
                k: self.cfg.k,
            }),
            ElemKind::Cint => Val::CInt(0),
            ElemKind::Cfix => Val::CReal(0.0),
        }
    }

    // ---- inputs and stores ----

    fn input(&mut self, ann: Option<&Expr>, v: &PyValue, span: Span) -> R<Val> {
        let path = ann.and_then(|a| a.dotted_name()).unwrap_or_default();
        let parts: Vec<&str> = path.split('.').collect();
        let kind = ElemKind::from_name(parts[0]);
        match (kind, &parts[1..]) {
            (Some(k), []) => self.scalar_input(k, v, span),
            (Some(k), ["Array"]) => {
                let items = py_items(v).ok_or_else(|| type_err(span, format!("{path} input must be a list")))?;
                let vals = items.iter().map(|x| self.scalar_input(k, x, span)).collect::<R<Vec<_>>>()?;
                Ok(Val::Seq(self.alloc(Shape::Array(k), vals)))
            }
            (Some(k), ["Matrix"]) => {
                let rows = py_items(v).ok_or_else(|| type_err(span, format!("{path} input must be a list of rows")))?;
                let mut out = Vec::new();
                for r in &rows {
                    let items = py_items(r).ok_or_else(|| type_err(span, "matrix rows must be lists"))?;
                    out.push(items.iter().map(|x| self.scalar_input(k, x, span)).collect::<R<Vec<_>>>()?);
                }
                if out.windows(2).any(|w| w[0].len() != w[1].len()) {
                    return Err(type_err(span, "matrix rows differ in length"));
                }
                Ok(Val::Seq(self.matrix(k, out)))
            }
            _ => self.clear_input(v, span),
        }
    }

    fn scalar_input(&mut self, kind: ElemKind, v: &PyValue, span: Span) -> R<Val> {
        let x = match v {
            PyValue::Int(i) => Val::CInt(i.to_i128().ok_or_else(|| rt(RuntimeKind::Overflow, span, "input integer too large"))?),
            PyValue::Bool(b) => Val::CInt(*b as i128),
            PyValue::Real(x) => Val::CReal(*x),
            _ => return Err(type_err(span, format!("{kind} input must be a number"))),
        };
        self.store(kind, x, span)
    }

    fn clear_input(&mut self, v: &PyValue, span: Span) -> R<Val> {
        Ok(match v {
            PyValue::Int(i) => Val::CInt(i.to_i128().ok_or_else(|| rt(RuntimeKind::Overflow, span, "input integer too large"))?),
            PyValue::Real(x) => Val::CReal(*x),
            PyValue::Bool(b) => Val::CBool(*b),
            PyValue::None => Val::None,
            PyValue::List(_) | PyValue::Array(_) => {
                let items = py_items(v).unwrap_or_default();
                let vals = items.iter().map(|x| self.clear_input(x, span)).collect::<R<Vec<_>>>()?;
                Val::Seq(self.alloc(Shape::List, vals))
            }
        })
    }

    /// Converts `v` for storage in a container (or variable) of `kind`.
    fn store(&self, kind: ElemKind, v: Val, span: Span) -> R<Val> {
        let bad = |what: &str| type_err(span, format!("cannot convert {what} to {kind}"));
        Ok(match (kind, v) {
            (ElemKind::Sint, Val::SInt(i) | Val::CInt(i)) => self.sint(Some(i), span)?.val(),
            (ElemKind::Sint, Val::CBool(b)) => Val::SInt(b as i128),
            (ElemKind::Sint, Val::CReal(x)) if x.fract() == 0.0 && x.abs() < 2f64.powi(self.cfg.int_bits as i32 - 1) => Val::SInt(x as i128),
            (ElemKind::Sfix, Val::SInt(i) | Val::CInt(i)) => Val::SFix(self.fix_int(i, span)?),
            (ElemKind::Sfix, Val::CBool(b)) => Val::SFix(self.fix_int(b as i128, span)?),
            (ElemKind::Sfix, Val::CReal(x)) => Val::SFix(self.fix(x, span)?),
            (ElemKind::Sfix, v @ Val::SFix(_)) => v,
            (ElemKind::Cint, Val::CInt(i)) => Val::CInt(i),
            (ElemKind::Cint, Val::CBool(b)) => Val::CInt(b as i128),
            (ElemKind::Cfix, Val::CInt(i)) => Val::CReal(i as f64),
            (ElemKind::Cfix, Val::CBool(b)) => Val::CReal(b as u8 as f64),
            (ElemKind::Cfix, Val::CReal(x)) => Val::CReal(x),
            (_, v) => return Err(bad(kname(&v))),
        })
    }

    // ---- statements ----

    fn call_function(&mut self, f: &'p FunctionDef, args: Vec<Val>, span: Span) -> R<Val> {
        if args.len() != f.params.len() {
            return Err(type_err(span, format!("{} takes {} arguments, {} given", f.name, f.params.len(), args.len())));
        }
        if self.depth >= MAX_DEPTH {
            return Err(rt(RuntimeKind::StepLimit, span, "maximum call depth exceeded"));
        }
        self.depth += 1;
        let mut env: Env = f.params.iter().map(|p| p.name.clone()).zip(args).collect();
        let flow = self.block(&mut env, &f.body);
        self.depth -= 1;
        match flow? {
            Flow::Return(v) => Ok(v),
            Flow::Next => Ok(Val::None),
            Flow::Break | Flow::Continue => Err(compile(LintKind::UnsupportedSyntax, span, "break or continue outside a loop")),
        }
    }

    fn block(&mut self, env: &mut Env, body: &'p [Stmt]) -> R<Flow> {
        for s in body {
            match self.stmt(env, s)? {
                Flow::Next => {}
                other => return Ok(other),
            }
        }
        Ok(Flow::Next)
    }

    fn stmt(&mut self, env: &mut Env, s: &'p Stmt) -> R<Flow> {
        self.tick(s.span)?;
        match &s.kind {
            StmtKind::Assign { target, value } => {
                let v = self.eval(env, value)?;
                self.assign(env, target, v)?;
            }
            StmtKind::AugAssign { target, op, value } => match &target.kind {
                ExprKind::Name(n) => {
                    let cur = self.load(env, n, target.span)?;
                    let rhs = self.eval(env, value)?;
                    let v = self.binop(*op, cur, rhs, s.span)?;
                    env.insert(n.clone(), v);
                }
                ExprKind::Index { value: c, index } => {
                    let cell = self.seq(env, c)?;
                    let iv = self.eval(env, index)?;
                    let j = self.resolve(&cell, &iv, EventKind::Read, index.span)?;
                    let cur = cell.borrow().items[j].clone();
                    let rhs = self.eval(env, value)?;
                    let v = self.binop(*op, cur, rhs, s.span)?;
                    self.write(&cell, j, v, s.span)?;
                }
                _ => return Err(compile(LintKind::UnsupportedSyntax, s.span, "unsupported augmented assignment target")),
            },
            StmtKind::Expr(e) => {
                self.eval(env, e)?;
            }
            StmtKind::Return(e) => {
                let v = match e {
                    Some(e) => self.eval(env, e)?,
                    None => Val::None,
                };
                return Ok(Flow::Return(v));
            }
            StmtKind::If { test, body, orelse } => {
                let v = self.eval(env, test)?;
                let t = self.test(&v, test.span)?;
                return self.block(env, if t { body } else { orelse });
            }
            StmtKind::While { test, body } => loop {
                let v = self.eval(env, test)?;
                if !self.test(&v, test.span)? {
                    break;
                }
                match self.block(env, body)? {
                    Flow::Break => break,
                    Flow::Return(v) => return Ok(Flow::Return(v)),
                    _ => {}
                }
            },
            StmtKind::For { target, iter, body } => return self.for_loop(env, target, iter, body, s.span),
            StmtKind::Break => return Ok(Flow::Break),
            StmtKind::Continue => return Ok(Flow::Continue),
            StmtKind::Pass => {}
            _ => return Err(compile(LintKind::UnsupportedSyntax, s.span, "statement not supported inside a function")),
        }
        Ok(Flow::Next)
    }

    fn for_loop(&mut self, env: &mut Env, target: &'p Expr, iter: &'p Expr, body: &'p [Stmt], span: Span) -> R<Flow> {
        let Some(name) = target.as_name() else {
            return Err(compile(LintKind::UnsupportedSyntax, span, "loop target must be a name"));
        };
        let step = |m: &mut Self, env: &mut Env, v: Val| -> R<Option<Flow>> {
            env.insert(name.to_string(), v);
            Ok(match m.block(env, body)? {
                Flow::Break => Some(Flow::Next),
                Flow::Return(v) => Some(Flow::Return(v)),
                _ => None,
            })
        };
        if let ExprKind::Call { func, args } = &iter.kind {
            if func.as_name() == Some("range") && !env.contains_key("range") {
                let (start, stop, stride) = self.range_args(env, args, iter.span)?;
                let mut i = start;
                while (stride > 0 && i < stop) || (stride < 0 && i > stop) {
                    if let Some(f) = step(self, env, Val::CInt(i))? {
                        return Ok(f);
                    }
                    i += stride;
                }
                return Ok(Flow::Next);
            }
        }
        let Val::Seq(cell) = self.eval(env, iter)? else {
            return Err(type_err(iter.span, "loop over a non-container"));
        };
        let mut i = 0;
        while i < cell.borrow().items.len() {
            let j = self.resolve(&cell, &Val::CInt(i as i128), EventKind::Read, iter.span)?;
            let v = cell.borrow().items[j].clone();
            if let Some(f) = step(self, env, v)? {
                return Ok(f);
            }
            i += 1;
        }
        Ok(Flow::Next)
    }

    fn range_args(&mut self, env: &mut Env, args: &'p [Expr], span: Span) -> R<(i128, i128, i128)> {
        let mut v = Vec::with_capacity(args.len());
        for a in args {
            let x = self.eval(env, a)?;
            v.push(self.clear_int(&x, a.span)?);
        }
        let r = match v.as_slice() {
            [n] => (0, *n, 1),
            [a, b] => (*a, *b, 1),
            [a, b, s] => (*a, *b, *s),
            _ => return Err(type_err(span, "range expects 1 to 3 arguments")),
        };
        if r.2 == 0 {
            return Err(type_err(span, "range step must not be zero"));
        }
        Ok(r)
    }

    fn assign(&mut self, env: &mut Env, target: &'p Expr, v: Val) -> R<()> {
        match &target.kind {
            ExprKind::Name(n) => {
                env.insert(n.clone(), v);
                Ok(())
            }
            ExprKind::Index { value, index } => {
                let cell = self.seq(env, value)?;
                let iv = self.eval(env, index)?;
                let j = self.resolve(&cell, &iv, EventKind::Write, index.span)?;
                self.put(&cell, j, v, target.span)
            }
            _ => Err(compile(LintKind::UnsupportedSyntax, target.span, "unsupported assignment target")),
        }
    }

    fn seq(&mut self, env: &mut Env, e: &'p Expr) -> R<Cell> {
        match self.eval(env, e)? {
            Val::Seq(c) => Ok(c),
            v => Err(type_err(e.span, format!("{} is not subscriptable", kname(&v)))),
        }
    }

    /// Bounds-checks a clear index and records the access.
    fn resolve(&mut self, cell: &Cell, idx: &Val, kind: EventKind, span: Span) -> R<usize> {
        let (id, len) = {
            let c = cell.borrow();
            (c.id, c.items.len())
        };
        let i = match idx {
            Val::CInt(i) => *i,
            Val::CBool(b) => *b as i128,
            Val::SInt(_) | Val::SFix(_) => {
                self.emit(kind, format!("c{id} ⊥"));
                return Err(rt(RuntimeKind::SecretIndex, span, "container index depends on secret data"));
            }
            v => return Err(type_err(span, format!("index must be an integer, not {}", kname(v)))),
        };
        let j = if i < 0 { i + len as i128 } else { i };
        if j < 0 || j >= len as i128 {
            return Err(rt(RuntimeKind::IndexOutOfBounds, span, format!("index {i} out of range for length {len}")));
        }
        self.emit(kind, format!("c{id} {j}"));
        Ok(j as usize)
    }

    fn write(&mut self, cell: &Cell, j: usize, v: Val, span: Span) -> R<()> {
        let id = cell.borrow().id;
        self.emit(EventKind::Write, format!("c{id} {j}"));
        self.put(cell, j, v, span)
    }

    fn put(&mut self, cell: &Cell, j: usize, v: Val, span: Span) -> R<()> {
        let shape = cell.borrow().shape;
        let v = match shape {
            Shape::Array(k) => self.store(k, v, span)?,
            Shape::Matrix(_) => return Err(type_err(span, "cannot assign a whole matrix row")),
            Shape::List => v,
        };
        cell.borrow_mut().items[j] = v;
        Ok(())
    }

    // ---- expressions ----

    fn load(&self, env: &Env, n: &str, span: Span) -> R<Val> {
        if let Some(v) = env.get(n) {
            return Ok(v.clone());
        }
        if global(n) || self.funcs.contains_key(n) {
            return Ok(Val::Path(n.to_string()));
        }
        Err(rt(RuntimeKind::NameError, span, format!("name `{n}` is not defined")))
    }

    fn eval(&mut self, env: &mut Env, e: &'p Expr) -> R<Val> {
        self.tick(e.span)?;
        match &e.kind {
            ExprKind::Int(i) => Ok(Val::CInt(*i as i128)),
            ExprKind::Float(x) => Ok(Val::CReal(*x)),
            ExprKind::Bool(b) => Ok(Val::CBool(*b)),
            ExprKind::Name(n) => self.load(env, n, e.span),
            ExprKind::Attribute { value, attr } => match self.eval(env, value)? {
                Val::Path(p) => Ok(match (p.as_str(), attr.as_str()) {
                    ("math", "e") => Val::CReal(std::f64::consts::E),
                    ("math", "pi") => Val::CReal(std::f64::consts::PI),
                    _ => Val::Path(format!("{p}.{attr}")),
                }),
                v => Err(type_err(e.span, format!("{} has no attribute `{attr}`", kname(&v)))),
            },
            ExprKind::Call { func, args } => self.call(env, e.span, func, args),
            ExprKind::Index { value, index } => {
                let cell = self.seq(env, value)?;
                let iv = self.eval(env, index)?;
                let j = self.resolve(&cell, &iv, EventKind::Read, index.span)?;
                let v = cell.borrow().items[j].clone();
                Ok(v)
            }
            ExprKind::BinOp { op, left, right } => {
                let a = self.eval(env, left)?;
                let b = self.eval(env, right)?;
                self.binop(*op, a, b, e.span)
            }
            ExprKind::Unary { op, operand } => {
                let v = self.eval(env, operand)?;
                self.unary(*op, v, e.span)
            }
            ExprKind::BoolOp { op, left, right } => {
                let l = self.eval(env, left)?;
                let t = self.test(&l, e.span)?;
                match (op, t) {
                    (BoolOp::And, false) | (BoolOp::Or, true) => Ok(l),
                    _ => self.eval(env, right),
                }
            }
            ExprKind::Compare { left, ops, comparators } => {
                let mut a = self.eval(env, left)?;
                let mut last = Val::CBool(true);
                for (i, (op, c)) in ops.iter().zip(comparators).enumerate() {
                    let b = self.eval(env, c)?;
                    let r = self.compare(*op, &a, &b, e.span)?;
                    if ops.len() == 1 {
                        return Ok(r);
                    }
                    if i + 1 < ops.len() && !self.test(&r, e.span)? {
                        return Ok(r);
                    }
                    last = r;
                    a = b;
                }
                Ok(last)
            }
            ExprKind::IfExp { test, body, orelse } => {
                let t = self.eval(env, test)?;
                if self.test(&t, test.span)? {
                    self.eval(env, body)
                } else {
                    self.eval(env, orelse)
                }
            }
            ExprKind::List(items) => {
                let mut vals = Vec::with_capacity(items.len());
                for it in items {
                    vals.push(self.eval(env, it)?);
                }
                Ok(Val::Seq(self.alloc(Shape::List, vals)))
            }
            ExprKind::Str(_) | ExprKind::Slice { .. } | ExprKind::Tuple(_) | ExprKind::ListComp { .. } => {
                Err(compile(LintKind::UnsupportedSyntax, e.span, "expression form not supported"))
            }
        }
    }

    fn num(&self, v: &Val, span: Span) -> R<Num> {
        Ok(match v {
            Val::SInt(i) => Num::SI(*i),
            Val::SFix(x) => Num::SF(*x),
            Val::CInt(i) => Num::CI(*i),
            Val::CBool(b) => Num::CI(*b as i128),
            Val::CReal(x) => Num::CR(*x),
            other => return Err(type_err(span, format!("expected a number, found {}", kname(other)))),
        })
    }

    /// Truth value for control flow; secret data only has one in leak mode.
    fn test(&mut self, v: &Val, span: Span) -> R<bool> {
        let (t, secret) = match v {
            Val::CBool(b) => (*b, false),
            Val::CInt(i) => (*i != 0, false),
            Val::CReal(x) => (*x != 0.0, false),
            Val::None => (false, false),
            Val::Seq(c) => (!c.borrow().items.is_empty(), false),
            Val::Path(_) => (true, false),
            Val::SInt(i) => (*i != 0, true),
            Val::SFix(x) => (x.raw != 0, true),
        };
        if secret && !self.cfg.leak {
            return Err(compile(LintKind::SecretControlFlow, span, "truth value of secret data is not known at compile time"));
        }
        let vis = if secret { "secret" } else { "clear" };
        self.emit(EventKind::Branch, format!("{vis} taken={}", t as u8));
        Ok(t)
    }

    /// A clear integer, revealing secret data in leak mode.
    fn clear_int(&mut self, v: &Val, span: Span) -> R<i128> {
        match v {
            Val::CInt(i) => Ok(*i),
            Val::CBool(b) => Ok(*b as i128),
            Val::SInt(i) if self.cfg.leak => {
                self.emit(EventKind::Branch, format!("secret reveal={i}"));
                Ok(*i)
            }
            Val::SInt(_) | Val::SFix(_) => Err(compile(LintKind::SecretControlFlow, span, "compile-time integer depends on secret data")),
            other => Err(type_err(span, format!("expected an integer, found {}", kname(other)))),
        }
    }

    fn binop(&mut self, op: BinOp, a: Val, b: Val, span: Span) -> R<Val> {
        self.emit(EventKind::Op, format!("{} {} {}", op_name(op), kname(&a), kname(&b)));
        if let (Val::Seq(_), _) | (_, Val::Seq(_)) = (&a, &b) {
            return self.seq_binop(op, a, b, span);
        }
        let x = self.num(&a, span)?;
        let y = self.num(&b, span)?;
        Ok(self.arith(op, x, y, span)?.val())
    }

    fn seq_binop(&mut self, op: BinOp, a: Val, b: Val, span: Span) -> R<Val> {
        let list_items = |v: &Val| match v {
            Val::Seq(c) if c.borrow().shape == Shape::List => Some(c.borrow().items.clone()),
            _ => None,
        };
        let items = match (op, &a, &b) {
            (BinOp::Add, _, _) => match (list_items(&a), list_items(&b)) {
                (Some(mut x), Some(y)) => {
                    x.extend(y);
                    x
                }
                _ => return Err(type_err(span, "`+` on containers needs two lists")),
            },
            (BinOp::Mul, Val::Seq(_), n) | (BinOp::Mul, n, Val::Seq(_)) => {
                let n = self.clear_int(n, span)?.max(0) as usize;
                let base = list_items(if matches!(a, Val::Seq(_)) { &a } else { &b })
                    .ok_or_else(|| type_err(span, "only lists can be repeated"))?;
                if base.len().saturating_mul(n) > 1 << 24 {
                    return Err(rt(RuntimeKind::Overflow, span, "list too large"));
                }
                base.iter().cloned().cycle().take(base.len() * n).collect()
            }
            _ => return Err(type_err(span, format!("unsupported operand `{}` for containers", op.symbol()))),
        };
        Ok(Val::Seq(self.alloc(Shape::List, items)))
    }

    fn arith(&self, op: BinOp, x: Num, y: Num, span: Span) -> R<Num> {
        if !x.secret() && !y.secret() {
            return self.clear_arith(op, x, y, span);
        }
        if op.is_bitwise() {
            return Err(compile(LintKind::BitwiseOnSecret, span, format!("`{}` on secret data", op.symbol())));
        }
        let zero = || rt(RuntimeKind::ZeroDivision, span, "division by zero");
        let over = |e: super::sfix::OverflowError| rt(RuntimeKind::Overflow, span, e.to_string());
        let ints = x.int().zip(y.int());
        Ok(match (op, ints) {
            (BinOp::Add, Some((a, b))) => self.sint(a.checked_add(b), span)?,
            (BinOp::Sub, Some((a, b))) => self.sint(a.checked_sub(b), span)?,
            (BinOp::Mul, Some((a, b))) => self.sint(a.checked_mul(b), span)?,
            (BinOp::FloorDiv, Some((a, b))) => {
                if b == 0 {
                    return Err(zero());
                }
                self.sint(Some(Integer::div_floor(&a, &b)), span)?
            }
            (BinOp::Mod, Some((a, b))) => {
                if b == 0 {
                    return Err(zero());
                }
                self.sint(Some(a.mod_floor(&b)), span)?
            }
            (BinOp::Add | BinOp::Sub | BinOp::Mul, None) => {
                let (a, b) = (self.to_fix(x, span)?, self.to_fix(y, span)?);
                Num::SF(match op {
                    BinOp::Add => a.add(b),
                    BinOp::Sub => a.sub(b),
                    _ => a.mul(b),
                }
                .map_err(over)?)
            }
            (BinOp::Div, _) => {
                let (a, b) = (self.to_fix(x, span)?, self.to_fix(y, span)?);
                Num::SF(a.div(b).ok_or_else(zero)?.map_err(over)?)
            }
            (BinOp::FloorDiv | BinOp::Mod, None) => {
                let (a, b) = (self.to_fix(x, span)?, self.to_fix(y, span)?);
                let q = floor_fix(a.div(b).ok_or_else(zero)?.map_err(over)?).map_err(over)?;
                if op == BinOp::FloorDiv {
                    Num::SF(q)
                } else {
                    Num::SF(a.sub(b.mul(q).map_err(over)?).map_err(over)?)
                }
            }
            (BinOp::Pow, _) => {
                let Num::CI(n) = y else {
                    return Err(type_err(span, "secret power needs a clear integer exponent"));
                };
                let one = match x {
                    Num::SI(_) => Num::SI(1),
                    _ => Num::SF(self.fix_int(1, span)?),
                };
                let mut r = one;
                for _ in 0..n.unsigned_abs() {
                    r = self.arith(BinOp::Mul, r, x, span)?;
                }
                if n < 0 {
                    r = self.arith(BinOp::Div, one, r, span)?;
                }
                r
            }
            _ => return Err(type_err(span, format!("unsupported operand `{}`", op.symbol()))),
        })
    }

    fn clear_arith(&self, op: BinOp, x: Num, y: Num, span: Span) -> R<Num> {
        let zero = || rt(RuntimeKind::ZeroDivision, span, "division by zero");
        let over = || rt(RuntimeKind::Overflow, span, "integer overflow");
        if let (Num::CI(a), Num::CI(b)) = (x, y) {
            return Ok(match op {
                BinOp::Add => Num::CI(a.checked_add(b).ok_or_else(over)?),
                BinOp::Sub => Num::CI(a.checked_sub(b).ok_or_else(over)?),
                BinOp::Mul => Num::CI(a.checked_mul(b).ok_or_else(over)?),
                BinOp::Div => {
                    if b == 0 {
                        return Err(zero());
                    }
                    Num::CR(a as f64 / b as f64)
                }
                BinOp::FloorDiv => {
                    if b == 0 {
                        return Err(zero());
                    }
                    Num::CI(Integer::div_floor(&a, &b))
                }
                BinOp::Mod => {
                    if b == 0 {
                        return Err(zero());
                    }
                    Num::CI(a.mod_floor(&b))
                }
                BinOp::Pow if b >= 0 => Num::CI(u32::try_from(b).ok().and_then(|e| a.checked_pow(e)).ok_or_else(over)?),
                BinOp::Pow => {
                    if a == 0 {
                        return Err(zero());
                    }
                    Num::CR((a as f64).powf(b as f64))
                }
                BinOp::BitAnd => Num::CI(a & b),
                BinOp::BitOr => Num::CI(a | b),
                BinOp::BitXor => Num::CI(a ^ b),
                BinOp::LShift => {
                    let r = u32::try_from(b).ok().and_then(|s| a.checked_shl(s)).filter(|r| (r >> b) == a);
                    Num::CI(r.ok_or_else(over)?)
                }
                BinOp::RShift => {
                    if b < 0 {
                        return Err(type_err(span, "negative shift count"));
                    }
                    Num::CI(a >> b.min(127))
                }
            });
        }
        let (a, b) = (x.f64(), y.f64());
        let r = match op {
            BinOp::Add => a + b,
            BinOp::Sub => a - b,
            BinOp::Mul => a * b,
            BinOp::Div | BinOp::FloorDiv | BinOp::Mod if b == 0.0 => return Err(zero()),
            BinOp::Div => a / b,
            BinOp::FloorDiv => (a / b).floor(),
            BinOp::Mod => a - b * (a / b).floor(),
            BinOp::Pow => {
                if a == 0.0 && b < 0.0 {
                    return Err(zero());
                }
                let r = a.powf(b);
                if r.is_nan() {
                    return Err(rt(RuntimeKind::Domain, span, "power of a negative number"));
                }
                r
            }
            _ => return Err(type_err(span, format!("unsupported operand `{}` for floats", op.symbol()))),
        };
        if r.is_infinite() && a.is_finite() && b.is_finite() {
            return Err(rt(RuntimeKind::Overflow, span, "float overflow"));
        }
        Ok(Num::CR(r))
    }

    fn compare(&mut self, op: CmpOp, a: &Val, b: &Val, span: Span) -> R<Val> {
        self.emit(EventKind::Cmp, format!("{} {} {}", cmp_name(op), kname(a), kname(b)));
        let x = self.num(a, span)?;
        let y = self.num(b, span)?;
        let secret = x.secret() || y.secret();
        let ord = match (x.int(), y.int()) {
            (Some(p), Some(q)) => Some(p.cmp(&q)),
            _ if secret => Some(self.to_fix(x, span)?.raw.cmp(&self.to_fix(y, span)?.raw)),
            _ => x.f64().partial_cmp(&y.f64()),
        };
        let r = match ord {
            None => op == CmpOp::NotEq,
            Some(o) => match op {
                CmpOp::Lt => o == Ordering::Less,
                CmpOp::LtE => o != Ordering::Greater,
                CmpOp::Gt => o == Ordering::Greater,
                CmpOp::GtE => o != Ordering::Less,
                CmpOp::Eq => o == Ordering::Equal,
                CmpOp::NotEq => o != Ordering::Equal,
            },
        };
        Ok(if secret { Val::SInt(r as i128) } else { Val::CBool(r) })
    }

    fn unary(&mut self, op: UnaryOp, v: Val, span: Span) -> R<Val> {
        match op {
            UnaryOp::Not => {
                let t = self.test(&v, span)?;
                Ok(Val::CBool(!t))
            }
            UnaryOp::Pos => {
                self.num(&v, span)?;
                Ok(v)
            }
            UnaryOp::Neg => {
                self.emit(EventKind::Op, format!("neg {}", kname(&v)));
                Ok(match self.num(&v, span)? {
                    Num::SI(i) => Val::SInt(-i),
                    Num::SF(x) => Val::SFix(x.neg()),
                    Num::CI(i) => Val::CInt(-i),
                    Num::CR(x) => Val::CReal(-x),
                })
            }
            UnaryOp::Invert => {
                self.emit(EventKind::Op, format!("invert {}", kname(&v)));
                match self.num(&v, span)? {
                    Num::CI(i) => Ok(Val::CInt(!i)),
                    Num::SI(_) | Num::SF(_) => Err(compile(LintKind::BitwiseOnSecret, span, "`~` on secret data")),
                    Num::CR(_) => Err(type_err(span, "`~` on a float")),
                }
            }
        }
    }

    // ---- calls ----

    fn call(&mut self, env: &mut Env, span: Span, func: &'p Expr, args: &'p [Expr]) -> R<Val> {
        if let ExprKind::Attribute { value, attr } = &func.kind {
            if METHODS.contains(&attr.as_str()) {
                let recv = self.eval(env, value)?;
                if !matches!(recv, Val::Path(_)) {
                    let argv = self.eval_args(env, args)?;
                    return self.method(&recv, attr, argv, span);
                }
            }
        }
        let Val::Path(path) = self.eval(env, func)? else {
            return Err(type_err(span, "object is not callable"));
        };
        let argv = self.eval_args(env, args)?;
        self.builtin(&path, argv, span)
    }

    fn eval_args(&mut self, env: &mut Env, args: &'p [Expr]) -> R<Vec<Val>> {
        args.iter().map(|a| self.eval(env, a)).collect()
    }

    fn method(&mut self, recv: &Val, name: &str, args: Vec<Val>, span: Span) -> R<Val> {
        let mut detail = format!("{name} {}", kname(recv));
        for a in &args {
            detail.push(' ');
            detail.push_str(kname(a));
        }
        self.emit(EventKind::Op, detail);
        let c = self.num(recv, span)?;
        let nums = args.iter().map(|a| self.num(a, span)).collect::<R<Vec<_>>>()?;
        let r = match (name, nums.as_slice()) {
            // c * a + (1 - c) * b, written as b + c * (a - b)
            ("if_else", [a, b]) => {
                let d = self.arith(BinOp::Sub, *a, *b, span)?;
                let m = self.arith(BinOp::Mul, c, d, span)?;
                self.arith(BinOp::Add, *b, m, span)?
            }
            ("bit_and", [b]) => self.arith(BinOp::Mul, c, *b, span)?,
            ("bit_or", [b]) => {
                let s = self.arith(BinOp::Add, c, *b, span)?;
                let p = self.arith(BinOp::Mul, c, *b, span)?;
                self.arith(BinOp::Sub, s, p, span)?
            }
            _ => return Err(type_err(span, format!("wrong number of arguments to `{name}`"))),
        };
        Ok(r.val())
    }

    fn arity(args: &[Val], n: usize, path: &str, span: Span) -> R<()> {
        if args.len() != n {
            return Err(type_err(span, format!("`{path}` takes {n} argument(s), {} given", args.len())));
        }
        Ok(())
    }

    /// Snapshot of a container's items, recording a read per element.
    fn read_all(&mut self, v: &Val, span: Span) -> R<Vec<Val>> {
        let Val::Seq(cell) = v else {
            return Err(type_err(span, format!("expected a container, found {}", kname(v))));
        };
        let n = cell.borrow().items.len();
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            self.resolve(cell, &Val::CInt(i as i128), EventKind::Read, span)?;
            out.push(cell.borrow().items[i].clone());
        }
        Ok(out)
    }

    fn builtin(&mut self, path: &str, args: Vec<Val>, span: Span) -> R<Val> {
        let mut detail = path.to_string();
        for a in &args {
            detail.push(' ');
            detail.push_str(kname(a));
        }
        self.emit(EventKind::Call, detail);
        let parts: Vec<&str> = path.split('.').collect();
        let kind = ElemKind::from_name(if parts[0] == "regint" { "cint" } else { parts[0] });
        match (kind, &parts[1..]) {
            (Some(k), []) => {
                Self::arity(&args, 1, path, span)?;
                return self.store(k, args[0].clone(), span);
            }
            (Some(k), ["Array"]) => {
                Self::arity(&args, 1, path, span)?;
                let n = self.clear_int(&args[0], span)?;
                let n = usize::try_from(n).map_err(|_| type_err(span, "negative array size"))?;
                let z = self.zero(k);
                return Ok(Val::Seq(self.alloc(Shape::Array(k), vec![z; n])));
            }
            (Some(k), ["Matrix"]) => {
                Self::arity(&args, 2, path, span)?;
                let r = self.clear_int(&args[0], span)?;
                let c = self.clear_int(&args[1], span)?;
                let (r, c) = (
                    usize::try_from(r).map_err(|_| type_err(span, "negative matrix size"))?,
                    usize::try_from(c).map_err(|_| type_err(span, "negative matrix size"))?,
                );
                let z = self.zero(k);
                return Ok(Val::Seq(self.matrix(k, vec![vec![z; c]; r])));
            }
            (Some(k), ["Array", "create_from"]) => {
                Self::arity(&args, 1, path, span)?;
                let items = self.read_all(&args[0], span)?;
                let vals = items.into_iter().map(|v| self.store(k, v, span)).collect::<R<Vec<_>>>()?;
                return Ok(Val::Seq(self.alloc(Shape::Array(k), vals)));
            }
            _ => {}
        }
        match parts.as_slice() {
            ["radix_sort"] => {
                Self::arity(&args, 1, path, span)?;
                self.radix_sort(&args[0], span)
            }
            ["len"] => {
                Self::arity(&args, 1, path, span)?;
                match &args[0] {
                    Val::Seq(c) => Ok(Val::CInt(c.borrow().items.len() as i128)),
                    v => Err(type_err(span, format!("{} has no len()", kname(v)))),
                }
            }
            ["range"] => {
                let mut ints = Vec::new();
                for a in &args {
                    ints.push(self.clear_int(a, span)?);
                }
                let (a, b, s) = match ints.as_slice() {
                    [n] => (0, *n, 1),
                    [a, b] => (*a, *b, 1),
                    [a, b, s] if *s != 0 => (*a, *b, *s),
                    _ => return Err(type_err(span, "bad range arguments")),
                };
                let mut items = Vec::new();
                let mut i = a;
                while (s > 0 && i < b) || (s < 0 && i > b) {
                    if items.len() >= 1 << 24 {
                        return Err(rt(RuntimeKind::Overflow, span, "range too large"));
                    }
                    items.push(Val::CInt(i));
                    i += s;
                }
                Ok(Val::Seq(self.alloc(Shape::List, items)))
            }
            ["abs"] => {
                Self::arity(&args, 1, path, span)?;
                let neg = self.compare(CmpOp::Lt, &args[0], &Val::CInt(0), span)?;
                if self.test(&neg, span)? {
                    self.unary(UnaryOp::Neg, args[0].clone(), span)
                } else {
                    Ok(args[0].clone())
                }
            }
            ["min" | "max"] => {
                let items = match args.as_slice() {
                    [one @ Val::Seq(_)] => self.read_all(one, span)?,
                    _ => args,
                };
                let mut it = items.into_iter();
                let mut best = it.next().ok_or_else(|| type_err(span, format!("{path}() of an empty sequence")))?;
                let op = if path == "min" { CmpOp::Lt } else { CmpOp::Gt };
                for v in it {
                    let c = self.compare(op, &v, &best, span)?;
                    if self.test(&c, span)? {
                        best = v;
                    }
                }
                Ok(best)
            }
            ["sorted"] => {
                Self::arity(&args, 1, path, span)?;
                let mut items = self.read_all(&args[0], span)?;
                for i in 1..items.len() {
                    let mut j = i;
                    while j > 0 {
                        let c = self.compare(CmpOp::Lt, &items[j], &items[j - 1], span)?;
                        if !self.test(&c, span)? {
                            break;
                        }
                        items.swap(j, j - 1);
                        j -= 1;
                    }
                }
                Ok(Val::Seq(self.alloc(Shape::List, items)))
            }
            ["int"] => {
                Self::arity(&args, 1, path, span)?;
                match self.num(&args[0], span)? {
                    Num::CI(i) => Ok(Val::CInt(i)),
                    Num::CR(x) if x.is_finite() && x.abs() < 1e30 => Ok(Val::CInt(x.trunc() as i128)),
                    Num::CR(_) => Err(rt(RuntimeKind::Overflow, span, "cannot convert float to integer")),
                    _ => Err(type_err(span, "int() of secret data")),
                }
            }
            ["float"] => {
                Self::arity(&args, 1, path, span)?;
                match self.num(&args[0], span)? {
                    n @ (Num::CI(_) | Num::CR(_)) => Ok(Val::CReal(n.f64())),
                    _ => Err(type_err(span, "float() of secret data")),
                }
            }
            ["math", f] => self.clear_math(f, &args, span),
            ["mpc_math", f] => self.mpc_math(f, &args, span),
            [name] if self.funcs.contains_key(name) => {
                let f = self.funcs[name];
                self.call_function(f, args, span)
            }
            _ => Err(compile(LintKind::UnknownCallee, span, format!("`{path}` does not exist"))),
        }
    }

    fn radix_sort(&mut self, v: &Val, span: Span) -> R<Val> {
        let shape = match v {
            Val::Seq(c) => c.borrow().shape,
            other => return Err(type_err(span, format!("cannot sort {}", kname(other)))),
        };
        let items = match v {
            Val::Seq(c) => c.borrow().items.clone(),
            _ => unreachable!(),
        };
        let kind = match shape {
            Shape::Array(k) => k,
            Shape::Matrix(_) => return Err(type_err(span, "cannot sort a matrix")),
            Shape::List if items.iter().any(|x| matches!(x, Val::SFix(_) | Val::CReal(_))) => ElemKind::Sfix,
            Shape::List => ElemKind::Sint,
        };
        let mut vals = items.into_iter().map(|x| self.store(kind, x, span)).collect::<R<Vec<_>>>()?;
        vals.sort_by(|a, b| match (a, b) {
            (Val::SInt(x), Val::SInt(y)) | (Val::CInt(x), Val::CInt(y)) => x.cmp(y),
            (Val::SFix(x), Val::SFix(y)) => x.raw.cmp(&y.raw),
            (Val::CReal(x), Val::CReal(y)) => x.total_cmp(y),
            _ => Ordering::Equal,
        });
        Ok(Val::Seq(self.alloc(Shape::Array(kind), vals)))
    }

    fn clear_math(&mut self, f: &str, args: &[Val], span: Span) -> R<Val> {
        let mut xs = Vec::with_capacity(args.len());
        for a in args {
            match self.num(a, span)? {
                n @ (Num::CI(_) | Num::CR(_)) => xs.push(n.f64()),
                _ => return Err(type_err(span, format!("math.{f} takes clear values only"))),
            }
        }
        let domain = || rt(RuntimeKind::Domain, span, format!("math domain error in {f}"));
        let r = match (f, xs.as_slice()) {
            ("exp", [x]) => x.exp(),
            ("log", [x]) | ("log", [x, _]) if *x <= 0.0 => return Err(domain()),
            ("log", [x]) => x.ln(),
            ("log", [x, b]) => {
                if *b <= 0.0 || *b == 1.0 {
                    return Err(domain());
                }
                x.ln() / b.ln()
            }
            ("log2" | "log10", [x]) if *x <= 0.0 => return Err(domain()),
            ("log2", [x]) => x.log2(),
            ("log10", [x]) => x.log10(),
            ("sqrt", [x]) if *x < 0.0 => return Err(domain()),
            ("sqrt", [x]) => x.sqrt(),
            ("sin" | "cos" | "tan", [x]) if x.is_infinite() => return Err(domain()),
            ("sin", [x]) => x.sin(),
            ("cos", [x]) => x.cos(),
            ("tan", [x]) => x.tan(),
            ("asin" | "acos", [x]) if !(-1.0..=1.0).contains(x) => return Err(domain()),
            ("asin", [x]) => x.asin(),
            ("acos", [x]) => x.acos(),
            ("atan", [x]) => x.atan(),
            ("fabs", [x]) => x.abs(),
            ("pow", [x, y]) => {
                let r = x.powf(*y);
                if r.is_nan() || (*x == 0.0 && *y < 0.0) {
                    return Err(domain());
                }
                r
            }
            ("floor" | "ceil", [x]) => {
                if !x.is_finite() || x.abs() >= 1e30 {
                    return Err(rt(RuntimeKind::Overflow, span, format!("cannot convert to integer in {f}")));
                }
                let r = if f == "floor" { x.floor() } else { x.ceil() };
                return Ok(Val::CInt(r as i128));
            }
            _ => return Err(compile(LintKind::UnknownCallee, span, format!("`math.{f}/{}` does not exist", xs.len()))),
        };
        if r.is_infinite() {
            return Err(rt(RuntimeKind::Overflow, span, format!("math range error in {f}")));
        }
        Ok(Val::CReal(r))
    }

    /// Library functions: evaluated in binary64, then quantized.
    fn mpc_math(&mut self, f: &str, args: &[Val], span: Span) -> R<Val> {
        let nums = args.iter().map(|a| self.num(a, span)).collect::<R<Vec<_>>>()?;
        if let ("floor_fx", [x]) = (f, nums.as_slice()) {
            let over = |e: super::sfix::OverflowError| rt(RuntimeKind::Overflow, span, e.to_string());
            return Ok(Val::SFix(floor_fix(self.to_fix(*x, span)?).map_err(over)?));
        }
        let xs: Vec<f64> = nums.iter().map(|n| n.f64()).collect();
        let b = |name: &str, x: f64| basis(name, x).unwrap_or(f64::NAN);
        let r = match (f, xs.as_slice()) {
            ("pow_fx", [base, y]) if *base == std::f64::consts::E => b("exp", *y),
            ("pow_fx", [base, y]) => {
                if *base == 0.0 && *y < 0.0 {
                    return Err(rt(RuntimeKind::ZeroDivision, span, "zero to a negative power"));
                }
                base.powf(*y)
            }
            ("log_fx", [x, base]) => {
                if *base <= 0.0 || *base == 1.0 {
                    return Err(rt(RuntimeKind::Domain, span, "invalid logarithm base"));
                }
                b("ln", *x) / base.ln()
            }
            ("exp2_fx", [x]) => x.exp2(),
            ("log2_fx", [x]) => b("ln", *x) / std::f64::consts::LN_2,
            ("sqrt", [x]) => b("sqrt", *x),
            ("InvertSqrt", [x]) => b("invertsqrt", *x),
            ("sin" | "cos" | "tan" | "asin" | "acos" | "atan", [x]) => b(f, *x),
            _ => return Err(compile(LintKind::UnknownCallee, span, format!("`mpc_math.{f}/{}` does not exist", xs.len()))),
        };
        if r.is_nan() {
            return Err(rt(RuntimeKind::Domain, span, format!("mpc_math.{f} is undefined here")));
        }
        Ok(Val::SFix(self.fix(r, span)?))
    }
}

/// Largest multiple of one not above `x`.
fn floor_fix(x: SFixValue) -> Result<SFixValue, super::sfix::OverflowError> {
    let raw = x.raw as i128;
    SFixValue::from_raw(raw - raw.mod_floor(&(1i128 << x.f)), x.f, x.k)
}

fn py_items(v: &PyValue) -> Option<Vec<PyValue>> {
    match v {
        PyValue::List(items) => Some(items.clone()),
        PyValue::Array(a) => {
            let scalar = |x: f64| match a.dtype {
                crate::pyexec::DType::Float => PyValue::Real(x),
                crate::pyexec::DType::Int => PyValue::int(x as i64),
                crate::pyexec::DType::Bool => PyValue::Bool(x != 0.0),
            };
            match a.shape.as_slice() {
                [_] => Some(a.data.iter().map(|x| scalar(*x)).collect()),
                [_, c] if *c > 0 => Some(a.data.chunks(*c).map(|r| PyValue::List(r.iter().map(|x| scalar(*x)).collect())).collect()),
                [r, _] => Some(vec![PyValue::List(vec![]); *r]),
                _ => None,
            }
        }
        _ => None,
    }
}

fn detach(v: &Val) -> SecretValue {
    match v {
        Val::SInt(i) => SecretValue::SInt(*i),
        Val::SFix(x) => SecretValue::SFix(*x),
        Val::CInt(i) => SecretValue::ClearInt(*i),
        Val::CReal(x) => SecretValue::ClearReal(*x),
        Val::CBool(b) => SecretValue::ClearBool(*b),
        Val::Path(_) | Val::None => SecretValue::None,
        Val::Seq(c) => {
            let c = c.borrow();
            match c.shape {
                Shape::Array(kind) => SecretValue::Array {
                    kind,
                    items: c.items.iter().map(detach).collect(),
                },
                Shape::Matrix(kind) => SecretValue::Matrix {
                    kind,
                    rows: c
                        .items
                        .iter()
                        .map(|r| match r {
                            Val::Seq(r) => r.borrow().items.iter().map(detach).collect(),
                            _ => Vec::new(),
                        })
                        .collect(),
                },
                Shape::List => SecretValue::List(c.items.iter().map(detach).collect()),
            }
        }
    }
}
