//! Secrecy and numeric typing shared by rule detection, emission and lint.
//!
//! Inference is flow-insensitive: every variable gets the join of all values
//! it is ever assigned, including implicit flows from the branch or loop
//! context (`pc`) it is assigned under.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::frontend::{
    canonical_callee, BinOp, BoolOp, Expr, ExprKind, FunctionDef, Stmt, StmtKind, UnaryOp,
};
use crate::pyexec::{DType, PyValue, TestCase};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Secrecy {
    Clear,
    Secret,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Numeric {
    Bool,
    Int,
    Real,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Scalar,
    /// 1-D container; `ndarray` distinguishes numpy arrays from lists.
    Array1 { ndarray: bool },
    Array2 { ndarray: bool },
    Unknown,
}

impl Shape {
    pub fn is_container(self) -> bool {
        matches!(self, Shape::Array1 { .. } | Shape::Array2 { .. })
    }

    pub fn is_ndarray(self) -> bool {
        matches!(self, Shape::Array1 { ndarray: true } | Shape::Array2 { ndarray: true })
    }

    pub fn element(self) -> Shape {
        match self {
            Shape::Array1 { .. } => Shape::Scalar,
            Shape::Array2 { ndarray } => Shape::Array1 { ndarray },
            s => s,
        }
    }

    fn join(self, other: Shape) -> Shape {
        match (self, other) {
            (a, b) if a == b => a,
            (Shape::Unknown, b) => b,
            (a, Shape::Unknown) => a,
            (Shape::Array1 { ndarray: x }, Shape::Array1 { ndarray: y }) => Shape::Array1 { ndarray: x || y },
            (Shape::Array2 { ndarray: x }, Shape::Array2 { ndarray: y }) => Shape::Array2 { ndarray: x || y },
            (Shape::Array2 { ndarray }, Shape::Array1 { .. }) | (Shape::Array1 { .. }, Shape::Array2 { ndarray }) => {
                Shape::Array2 { ndarray }
            }
            // a container always wins over a scalar placeholder such as `r = 0`
            (Shape::Scalar, b) => b,
            (a, Shape::Scalar) => a,
        }
    }
}

/// Type of a value: who may see it, what number it holds, and its shape
/// (for containers, `numeric`/`secrecy` describe the elements).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VarType {
    pub secrecy: Secrecy,
    pub numeric: Numeric,
    pub shape: Shape,
}

impl VarType {
    pub const CLEAR_INT: VarType = VarType {
        secrecy: Secrecy::Clear,
        numeric: Numeric::Int,
        shape: Shape::Scalar,
    };

    pub const CLEAR_BOOL: VarType = VarType {
        secrecy: Secrecy::Clear,
        numeric: Numeric::Bool,
        shape: Shape::Scalar,
    };

    pub const CLEAR_REAL: VarType = VarType {
        secrecy: Secrecy::Clear,
        numeric: Numeric::Real,
        shape: Shape::Scalar,
    };

    pub fn scalar(secrecy: Secrecy, numeric: Numeric) -> Self {
        Self {
            secrecy,
            numeric,
            shape: Shape::Scalar,
        }
    }

    pub fn is_secret(&self) -> bool {
        self.secrecy == Secrecy::Secret
    }

    pub fn join(self, other: VarType) -> VarType {
        VarType {
            secrecy: self.secrecy.max(other.secrecy),
            numeric: self.numeric.max(other.numeric),
            shape: self.shape.join(other.shape),
        }
    }

    pub fn with_secrecy(self, s: Secrecy) -> VarType {
        VarType {
            secrecy: self.secrecy.max(s),
            ..self
        }
    }

    pub fn element(self) -> VarType {
        VarType {
            shape: self.shape.element(),
            ..self
        }
    }

    /// MP-SPDZ basic type of the scalar (or container element).
    pub fn basic(&self) -> SecrecyType {
        match (self.secrecy, self.numeric) {
            (Secrecy::Secret, Numeric::Real) => SecrecyType::Sfix,
            (Secrecy::Secret, _) => SecrecyType::Sint,
            (Secrecy::Clear, Numeric::Real) => SecrecyType::ClearReal,
            (Secrecy::Clear, _) => SecrecyType::ClearInt,
        }
    }
}

/// MP-SPDZ-level classification used by the emitter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SecrecyType {
    Sint,
    Sfix,
    Cint,
    Cfix,
    SecretArray,
    SecretMatrix,
    ClearInt,
    ClearReal,
}

impl fmt::Display for SecrecyType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SecrecyType::Sint => "sint",
            SecrecyType::Sfix => "sfix",
            SecrecyType::Cint => "cint",
            SecrecyType::Cfix => "cfix",
            SecrecyType::SecretArray => "secret-array",
            SecrecyType::SecretMatrix => "secret-matrix",
            SecrecyType::ClearInt => "clear-int",
            SecrecyType::ClearReal => "clear-real",
        })
    }
}

impl VarType {
    /// Full classification including containers.
    pub fn secrecy_type(&self) -> SecrecyType {
        match (self.shape, self.secrecy) {
            (Shape::Array1 { .. }, Secrecy::Secret) => SecrecyType::SecretArray,
            (Shape::Array2 { .. }, Secrecy::Secret) => SecrecyType::SecretMatrix,
            _ => self.basic(),
        }
    }
}

/// Declared interface of the function: which parameters are clear and what
/// kind of value each one receives.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Interface {
    pub clear: BTreeSet<String>,
    pub hints: BTreeMap<String, (Numeric, Shape)>,
}

impl Interface {
    pub fn with_clear(clear: impl IntoIterator<Item = String>) -> Self {
        Self {
            clear: clear.into_iter().collect(),
            hints: BTreeMap::new(),
        }
    }

    /// Interface whose parameter kinds are taken from sample inputs.
    pub fn from_cases(f: &FunctionDef, clear: &BTreeSet<String>, cases: &[TestCase]) -> Self {
        let mut hints = BTreeMap::new();
        for (i, p) in f.params.iter().enumerate() {
            let mut acc: Option<(Numeric, Shape)> = None;
            for c in cases {
                if let Some(v) = c.inputs.get(i) {
                    let h = hint_of(v);
                    acc = Some(match acc {
                        None => h,
                        Some((n, s)) => (n.max(h.0), s.join(h.1)),
                    });
                }
            }
            if let Some(h) = acc {
                hints.insert(p.name.clone(), h);
            }
        }
        Self {
            clear: clear.clone(),
            hints,
        }
    }
}

fn hint_of(v: &PyValue) -> (Numeric, Shape) {
    match v {
        PyValue::Bool(_) => (Numeric::Bool, Shape::Scalar),
        PyValue::Int(_) => (Numeric::Int, Shape::Scalar),
        PyValue::Real(_) | PyValue::None => (Numeric::Real, Shape::Scalar),
        PyValue::Array(a) => {
            let n = match a.dtype {
                DType::Bool => Numeric::Bool,
                DType::Int => Numeric::Int,
                DType::Float => Numeric::Real,
            };
            let s = if a.shape.len() == 2 {
                Shape::Array2 { ndarray: true }
            } else {
                Shape::Array1 { ndarray: true }
            };
            (n, s)
        }
        PyValue::List(items) => {
            let mut n = Numeric::Bool;
            let mut nested = false;
            for it in items {
                let (m, s) = hint_of(it);
                n = n.max(m);
                nested |= s.is_container();
            }
            if items.is_empty() {
                n = Numeric::Real;
            }
            let s = if nested {
                Shape::Array2 { ndarray: false }
            } else {
                Shape::Array1 { ndarray: false }
            };
            (n, s)
        }
    }
}

/// Types of all variables of one function.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TypeEnv {
    pub vars: BTreeMap<String, VarType>,
    pub ret: Option<VarType>,
}

const NONLINEAR_RESULTS: &[&str] = &[
    "exp", "exp2", "expm1", "log", "log1p", "log2", "log10", "sqrt", "pow", "power", "sin", "cos",
    "tan", "asin", "acos", "atan", "sinh", "cosh", "tanh", "fabs", "logaddexp", "logaddexp2", "ln",
    "invertsqrt",
];

impl TypeEnv {
    /// Infers variable types for `f` under `iface`.
    pub fn infer(f: &FunctionDef, iface: &Interface) -> TypeEnv {
        let mut env = TypeEnv::default();
        for p in &f.params {
            let secrecy = if iface.clear.contains(&p.name) {
                Secrecy::Clear
            } else {
                Secrecy::Secret
            };
            let (numeric, shape) = iface
                .hints
                .get(&p.name)
                .copied()
                .unwrap_or_else(|| guess_param(f, &p.name));
            env.vars.insert(p.name.clone(), VarType { secrecy, numeric, shape });
        }
        // fixpoint over a finite-height lattice
        for _ in 0..64 {
            let before = env.clone();
            env.block(&f.body, Secrecy::Clear);
            if env == before {
                break;
            }
        }
        env
    }

    pub fn var(&self, name: &str) -> Option<VarType> {
        self.vars.get(name).copied()
    }

    pub fn is_secret(&self, e: &Expr) -> bool {
        self.expr_type(e).is_secret()
    }

    fn update(&mut self, name: &str, t: VarType) {
        let new = match self.vars.get(name) {
            Some(old) => old.join(t),
            None => t,
        };
        self.vars.insert(name.to_string(), new);
    }

    fn assign_target(&mut self, target: &Expr, t: VarType) {
        match &target.kind {
            ExprKind::Name(n) => self.update(n, t),
            ExprKind::Index { value, index } => {
                let idx = self.expr_type(index);
                let container = self.expr_type(value);
                // writing element type t into the container one level up
                let lifted = VarType {
                    shape: match container.shape {
                        Shape::Unknown | Shape::Scalar => Shape::Array1 { ndarray: false },
                        s => s,
                    },
                    ..t.with_secrecy(idx.secrecy)
                };
                if let Some(root) = crate::frontend::target_root(target) {
                    let cur = self.vars.get(root).copied();
                    let upd = match cur {
                        Some(c) => VarType {
                            shape: c.shape,
                            ..c.join(VarType { shape: c.shape, ..lifted })
                        },
                        None => lifted,
                    };
                    self.vars.insert(root.to_string(), upd);
                }
            }
            ExprKind::Tuple(items) => {
                for it in items {
                    self.assign_target(it, t);
                }
            }
            _ => {}
        }
    }

    fn block(&mut self, stmts: &[Stmt], pc: Secrecy) {
        for s in stmts {
            self.stmt(s, pc);
        }
    }

    fn stmt(&mut self, s: &Stmt, pc: Secrecy) {
        match &s.kind {
            StmtKind::Assign { target, value } => {
                if let (ExprKind::Tuple(ts), ExprKind::Tuple(vs)) = (&target.kind, &value.kind) {
                    for (t, v) in ts.iter().zip(vs) {
                        let vt = self.expr_type(v).with_secrecy(pc);
                        self.assign_target(t, vt);
                    }
                } else {
                    let vt = self.expr_type(value).with_secrecy(pc);
                    self.assign_target(target, vt);
                }
            }
            StmtKind::AugAssign { target, op, value } => {
                let cur = self.expr_type(target);
                let v = self.expr_type(value);
                let t = binop_type(*op, cur, v).with_secrecy(pc);
                self.assign_target(target, t);
            }
            StmtKind::Expr(e) => {
                if let Some((recv, method, args)) = e.method_call() {
                    if matches!(method, "append" | "insert" | "extend") {
                        if let Some(last) = args.last() {
                            let mut t = self.expr_type(last).with_secrecy(pc);
                            if method == "extend" {
                                t = t.element();
                            }
                            let lifted = VarType {
                                shape: Shape::Array1 { ndarray: false },
                                ..t
                            };
                            if let Some(root) = recv.as_name() {
                                let upd = match self.vars.get(root) {
                                    Some(c) => VarType {
                                        shape: c.shape.join(lifted.shape),
                                        ..c.join(lifted)
                                    },
                                    None => lifted,
                                };
                                self.vars.insert(root.to_string(), upd);
                            }
                        }
                    }
                }
            }
            StmtKind::Return(Some(e)) => {
                let t = self.expr_type(e).with_secrecy(pc);
                self.ret = Some(match self.ret {
                    Some(r) => r.join(t),
                    None => t,
                });
            }
            StmtKind::If { test, body, orelse } => {
                let inner = pc.max(self.expr_type(test).secrecy);
                self.block(body, inner);
                self.block(orelse, inner);
            }
            StmtKind::For { target, iter, body } => {
                let it = self.expr_type(iter);
                let is_range = iter.callee().as_deref() == Some("range");
                let (elem, inner) = if is_range {
                    (VarType::CLEAR_INT.with_secrecy(it.secrecy), pc.max(it.secrecy))
                } else {
                    (it.element(), pc)
                };
                self.assign_target(target, elem.with_secrecy(pc));
                self.block(body, inner);
            }
            StmtKind::While { test, body } => {
                let inner = pc.max(self.expr_type(test).secrecy);
                self.block(body, inner);
            }
            StmtKind::With { body, .. } => self.block(body, pc),
            _ => {}
        }
    }

    /// Type of an expression under the current variable assignment.
    pub fn expr_type(&self, e: &Expr) -> VarType {
        match &e.kind {
            ExprKind::Int(_) => VarType::CLEAR_INT,
            ExprKind::Float(_) => VarType::CLEAR_REAL,
            ExprKind::Bool(_) => VarType::CLEAR_BOOL,
            ExprKind::Str(_) => VarType::CLEAR_INT,
            ExprKind::Name(n) => self.vars.get(n).copied().unwrap_or(VarType::CLEAR_INT),
            ExprKind::Attribute { .. } => VarType::CLEAR_REAL,
            ExprKind::BinOp { op, left, right } => {
                binop_type(*op, self.expr_type(left), self.expr_type(right))
            }
            ExprKind::Unary { op, operand } => {
                let t = self.expr_type(operand);
                match op {
                    UnaryOp::Not => VarType {
                        numeric: Numeric::Bool,
                        shape: Shape::Scalar,
                        ..t
                    },
                    _ => VarType {
                        numeric: t.numeric.max(Numeric::Int),
                        ..t
                    },
                }
            }
            ExprKind::BoolOp { op: _, left, right } => {
                let l = self.expr_type(left);
                let r = self.expr_type(right);
                l.join(r)
            }
            ExprKind::Compare {
                left, comparators, ..
            } => {
                let mut t = self.expr_type(left);
                for c in comparators {
                    t = t.join(self.expr_type(c));
                }
                let shape = if t.shape.is_ndarray() { t.shape } else { Shape::Scalar };
                VarType {
                    secrecy: t.secrecy,
                    numeric: Numeric::Bool,
                    shape,
                }
            }
            ExprKind::IfExp { test, body, orelse } => {
                let c = self.expr_type(test);
                self.expr_type(body)
                    .join(self.expr_type(orelse))
                    .with_secrecy(c.secrecy)
            }
            ExprKind::List(items) => {
                let mut t: Option<VarType> = None;
                for it in items {
                    let it = self.expr_type(it);
                    t = Some(match t {
                        None => it,
                        Some(x) => x.join(it),
                    });
                }
                let inner = t.unwrap_or(VarType::CLEAR_INT);
                VarType {
                    shape: if inner.shape.is_container() {
                        Shape::Array2 { ndarray: false }
                    } else {
                        Shape::Array1 { ndarray: false }
                    },
                    ..inner
                }
            }
            ExprKind::Tuple(items) => items
                .iter()
                .map(|i| self.expr_type(i))
                .reduce(|a, b| a.join(b))
                .unwrap_or(VarType::CLEAR_INT),
            ExprKind::ListComp { elt, iter, target } => {
                let mut inner = self.clone();
                let it = self.expr_type(iter);
                let elem = if iter.callee().as_deref() == Some("range") {
                    VarType::CLEAR_INT.with_secrecy(it.secrecy)
                } else {
                    it.element()
                };
                inner.vars.insert(target.clone(), elem);
                let t = inner.expr_type(elt);
                VarType {
                    shape: Shape::Array1 { ndarray: false },
                    ..t
                }
            }
            ExprKind::Index { value, index } => {
                let c = self.expr_type(value);
                let i = self.expr_type(index);
                c.element().with_secrecy(i.secrecy)
            }
            ExprKind::Slice { value, .. } => self.expr_type(value),
            ExprKind::Call { func, args } => self.call_type(func, args),
        }
    }

    fn call_type(&self, func: &Expr, args: &[Expr]) -> VarType {
        let arg_types: Vec<VarType> = args.iter().map(|a| self.expr_type(a)).collect();
        let joined = arg_types
            .iter()
            .copied()
            .reduce(|a, b| a.join(b))
            .unwrap_or(VarType::CLEAR_INT);
        if let ExprKind::Attribute { value, attr } = &func.kind {
            let module = value.as_name().is_some_and(|n| matches!(n, "math" | "numpy" | "np"));
            if !module {
                let recv = self.expr_type(value);
                return match attr.as_str() {
                    "pop" => recv.element(),
                    "index" | "count" => VarType::CLEAR_INT.with_secrecy(recv.secrecy.max(joined.secrecy)),
                    _ => VarType::CLEAR_INT,
                };
            }
        }
        let path = canonical_callee(func).unwrap_or_default();
        let name = path.rsplit('.').next().unwrap_or("");
        match path.as_str() {
            "len" => VarType::CLEAR_INT,
            "range" => VarType {
                shape: Shape::Array1 { ndarray: false },
                ..VarType::CLEAR_INT.with_secrecy(joined.secrecy)
            },
            "abs" | "numpy.abs" => VarType {
                numeric: joined.numeric.max(Numeric::Int),
                ..joined
            },
            "min" | "max" => {
                if args.len() == 1 {
                    joined.element()
                } else {
                    joined
                }
            }
            "sum" | "numpy.sum" | "numpy.min" | "numpy.max" => {
                let e = joined.element();
                VarType {
                    numeric: e.numeric.max(Numeric::Int),
                    ..e
                }
            }
            "sorted" => VarType {
                shape: Shape::Array1 { ndarray: false },
                ..joined
            },
            "numpy.sort" => joined,
            "numpy.array" => VarType {
                shape: match joined.shape {
                    Shape::Array2 { .. } => Shape::Array2 { ndarray: true },
                    _ => Shape::Array1 { ndarray: true },
                },
                ..joined
            },
            "numpy.zeros" | "numpy.ones" => VarType {
                shape: match args.first().map(|a| &a.kind) {
                    Some(ExprKind::List(items)) if items.len() == 2 => Shape::Array2 { ndarray: true },
                    _ => Shape::Array1 { ndarray: true },
                },
                ..VarType::CLEAR_REAL.with_secrecy(joined.secrecy)
            },
            "numpy.arange" => VarType {
                shape: Shape::Array1 { ndarray: true },
                ..joined
            },
            "numpy.where" => {
                let c = arg_types.first().copied().unwrap_or(VarType::CLEAR_BOOL);
                let xy = arg_types[1..]
                    .iter()
                    .copied()
                    .reduce(|a, b| a.join(b))
                    .unwrap_or(VarType::CLEAR_INT);
                VarType {
                    secrecy: c.secrecy.max(xy.secrecy),
                    numeric: xy.numeric.max(Numeric::Int),
                    shape: c.shape.join(xy.shape),
                }
            }
            "numpy.clip" => joined,
            "numpy.dot" => {
                let a = arg_types.first().copied().unwrap_or(VarType::CLEAR_INT);
                let b = arg_types.get(1).copied().unwrap_or(VarType::CLEAR_INT);
                let shape = match (a.shape, b.shape) {
                    (Shape::Array1 { .. }, Shape::Array1 { .. }) => Shape::Scalar,
                    (Shape::Array2 { .. }, Shape::Array1 { .. }) => Shape::Array1 { ndarray: true },
                    (Shape::Array2 { .. }, Shape::Array2 { .. }) => Shape::Array2 { ndarray: true },
                    _ => Shape::Scalar,
                };
                VarType {
                    shape,
                    numeric: joined.numeric.max(Numeric::Int),
                    ..joined
                }
            }
            "math.floor" | "math.ceil" => VarType {
                numeric: Numeric::Int,
                ..joined
            },
            "numpy.power" => {
                let n = if joined.numeric == Numeric::Real { Numeric::Real } else { Numeric::Int };
                VarType { numeric: n, ..joined }
            }
            _ if NONLINEAR_RESULTS.contains(&name) => VarType {
                numeric: Numeric::Real,
                ..joined
            },
            // conversion helpers produced by emission
            "sint" | "cint" => VarType { numeric: Numeric::Int, ..joined },
            "sfix" | "cfix" => VarType { numeric: Numeric::Real, ..joined },
            _ => joined,
        }
    }
}

fn binop_type(op: BinOp, l: VarType, r: VarType) -> VarType {
    let secrecy = l.secrecy.max(r.secrecy);
    let numeric = match op {
        BinOp::Div => Numeric::Real,
        BinOp::Pow => {
            if l.numeric == Numeric::Real || r.numeric == Numeric::Real {
                Numeric::Real
            } else {
                Numeric::Int
            }
        }
        _ => l.numeric.max(r.numeric).max(Numeric::Int),
    };
    let shape = match (l.shape, r.shape) {
        // list repetition and concatenation keep the list shape
        (s @ (Shape::Array1 { .. } | Shape::Array2 { .. }), _) => s,
        (_, s @ (Shape::Array1 { .. } | Shape::Array2 { .. })) => s,
        _ => Shape::Scalar,
    };
    VarType {
        secrecy,
        numeric: if shape.is_container() && !l.shape.is_ndarray() && !r.shape.is_ndarray() {
            // `[0] * n`: element type is the list's, not the count's
            if l.shape.is_container() { l.numeric } else { r.numeric }
        } else {
            numeric
        },
        shape,
    }
}

/// Shape guess for a parameter with no sample input: indexed twice means a
/// matrix, indexed once or passed to `len` means an array.
fn guess_param(f: &FunctionDef, name: &str) -> (Numeric, Shape) {
    let mut depth = 0;
    for s in &f.body {
        s.walk_exprs(&mut |e| match &e.kind {
            ExprKind::Index { value, .. } => {
                if value.as_name() == Some(name) {
                    depth = depth.max(1);
                }
                if let ExprKind::Index { value: inner, .. } = &value.kind {
                    if inner.as_name() == Some(name) {
                        depth = depth.max(2);
                    }
                }
            }
            ExprKind::Call { func, args } => {
                let path = crate::frontend::canonical_callee(func).unwrap_or_default();
                let takes_array = matches!(
                    path.as_str(),
                    "len" | "sum" | "sorted" | "numpy.array" | "numpy.sum" | "numpy.min" | "numpy.max"
                        | "numpy.dot" | "numpy.sort" | "numpy.where" | "numpy.clip" | "numpy.abs"
                ) || (matches!(path.as_str(), "min" | "max") && args.len() == 1);
                if takes_array && args.iter().any(|a| a.as_name() == Some(name)) {
                    depth = depth.max(1);
                }
                if let Some((recv, _, _)) = e.method_call() {
                    if recv.as_name() == Some(name) {
                        depth = depth.max(1);
                    }
                }
            }
            ExprKind::Slice { value, .. } if value.as_name() == Some(name) => depth = depth.max(1),
            _ => {}
        });
        if let StmtKind::For { iter, .. } = &s.kind {
            if iter.as_name() == Some(name) {
                depth = depth.max(1);
            }
        }
    }
    let shape = match depth {
        0 => Shape::Scalar,
        1 => Shape::Array1 { ndarray: false },
        _ => Shape::Array2 { ndarray: false },
    };
    (Numeric::Real, shape)
}

/// True for expressions whose value is already a 0/1 boolean.
pub fn is_boolean_expr(env: &TypeEnv, e: &Expr) -> bool {
    match &e.kind {
        ExprKind::Compare { .. } | ExprKind::Bool(_) => true,
        ExprKind::Unary { op: UnaryOp::Not, .. } => true,
        ExprKind::BoolOp { op: BoolOp::And | BoolOp::Or, left, right } => {
            is_boolean_expr(env, left) && is_boolean_expr(env, right)
        }
        _ => env.expr_type(e).numeric == Numeric::Bool,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::load_program;

    fn env_of(src: &str, clear: &[&str]) -> TypeEnv {
        let p = load_program(src).unwrap();
        let f = p.function().unwrap();
        TypeEnv::infer(f, &Interface::with_clear(clear.iter().map(|s| s.to_string())))
    }

    #[test]
    fn params_secret_literals_clear() {
        let env = env_of("def f(x):\n    y = x + 2\n    z = 2\n    return y\n", &[]);
        assert_eq!(env.var("x").unwrap().basic(), SecrecyType::Sfix);
        assert_eq!(env.var("y").unwrap().basic(), SecrecyType::Sfix);
        assert_eq!(env.var("z").unwrap(), VarType::CLEAR_INT);
    }

    #[test]
    fn implicit_flow_taints() {
        let env = env_of("def f(x):\n    y = 0\n    if x > 0:\n        y = 1\n    return y\n", &[]);
        assert!(env.var("y").unwrap().is_secret());
        assert_eq!(env.var("y").unwrap().numeric, Numeric::Int);
    }

    #[test]
    fn clear_params_stay_clear() {
        let env = env_of("def f(a, n):\n    s = 0\n    for i in range(n):\n        s = s + a[i]\n    return s\n", &["n"]);
        assert!(!env.var("i").unwrap().is_secret());
        assert!(env.var("s").unwrap().is_secret());
        assert!(env.var("a").unwrap().shape.is_container());
    }

    #[test]
    fn flag_becomes_secret_bool() {
        let env = env_of(
            "def f(a):\n    flag = False\n    for i in range(len(a)):\n        flag = flag or a[i] > 2\n    return flag\n",
            &[],
        );
        let t = env.var("flag").unwrap();
        assert!(t.is_secret());
        assert_eq!(t.numeric, Numeric::Bool);
    }
}
