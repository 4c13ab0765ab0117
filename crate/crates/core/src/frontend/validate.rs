use std::fmt;

use super::ast::*;
use super::FrontendError;

/// Which dialect a tree is checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// User-written input programs.
    Source,
    /// Canonical Form Python: the source subset plus bare basis-function calls.
    Cfp,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetViolation {
    pub span: Span,
    pub construct: String,
}

impl fmt::Display for SubsetViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.span, self.construct)
    }
}

pub const BUILTIN_CALLS: &[&str] = &["range", "len", "abs", "min", "max", "sum", "sorted"];

pub const LIST_METHODS: &[&str] = &["append", "pop", "insert", "extend", "index", "count"];

pub const MATH_CALLS: &[&str] = &[
    "exp", "log", "log2", "log10", "sqrt", "pow", "sin", "cos", "tan", "asin", "acos", "atan",
    "sinh", "cosh", "tanh", "floor", "ceil", "fabs",
];

pub const NUMPY_CALLS: &[&str] = &[
    "array", "zeros", "ones", "arange", "exp", "exp2", "expm1", "log", "log1p", "log2", "log10",
    "sqrt", "power", "logaddexp", "logaddexp2", "abs", "sum", "min", "max", "dot", "sort",
    "where", "clip",
];

const MODULE_CONSTANTS: &[&str] = &["e", "pi"];

/// Nonlinear functions allowed as bare calls in Canonical Form Python.
pub const BASIS_CALLS: &[&str] = &[
    "exp", "ln", "sqrt", "invertsqrt", "sin", "cos", "tan", "asin", "acos", "atan",
];

const SUBSET_AUG_OPS: &[BinOp] = &[BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div];

/// Dotted callee path with the `np` alias normalized to `numpy`.
pub fn canonical_callee(func: &Expr) -> Option<String> {
    let path = func.dotted_name()?;
    Some(match path.strip_prefix("np.") {
        Some(rest) => format!("numpy.{rest}"),
        None => path,
    })
}

fn is_module(name: &str) -> bool {
    matches!(name, "math" | "numpy" | "np")
}

/// Checks that `program` is a single function written in the subset; all
/// violations are collected before rejecting.
pub fn validate_subset(program: Program, profile: Profile) -> Result<Program, FrontendError> {
    let mut v = Validator {
        profile,
        out: Vec::new(),
    };
    v.top_level(&program);
    if v.out.is_empty() {
        Ok(program)
    } else {
        Err(FrontendError::Subset(v.out))
    }
}

struct Validator {
    profile: Profile,
    out: Vec<SubsetViolation>,
}

impl Validator {
    fn flag(&mut self, span: Span, construct: impl Into<String>) {
        self.out.push(SubsetViolation {
            span,
            construct: construct.into(),
        });
    }

    fn top_level(&mut self, program: &Program) {
        let mut defs = 0;
        for s in &program.body {
            match &s.kind {
                StmtKind::FunctionDef(f) => {
                    defs += 1;
                    if defs > 1 {
                        self.flag(s.span, "multiple functions");
                    }
                    self.function(f);
                }
                StmtKind::Import(_) => self.import(s),
                StmtKind::FromImport { .. } => self.flag(s.span, "from-import"),
                _ => self.flag(s.span, "top-level statement"),
            }
        }
        if defs == 0 {
            self.flag(Span::new(1, 1), "missing function definition");
        }
    }

    fn import(&mut self, s: &Stmt) {
        if let StmtKind::Import(names) = &s.kind {
            for n in names {
                let ok = match n.name.as_str() {
                    "math" => n.alias.is_none(),
                    "numpy" => matches!(n.alias.as_deref(), None | Some("np")),
                    _ => false,
                };
                if !ok {
                    self.flag(s.span, format!("import of {}", n.name));
                }
            }
        }
    }

    fn function(&mut self, f: &FunctionDef) {
        for p in &f.params {
            if p.annotation.is_some() {
                self.flag(p.span, "parameter annotation");
            }
        }
        self.block(&f.body);
    }

    fn block(&mut self, stmts: &[Stmt]) {
        for s in stmts {
            self.stmt(s);
        }
    }

    fn stmt(&mut self, s: &Stmt) {
        match &s.kind {
            StmtKind::FunctionDef(_) => self.flag(s.span, "nested function"),
            StmtKind::With { .. } => self.flag(s.span, "with"),
            StmtKind::Import(_) => self.import(s),
            StmtKind::FromImport { .. } => self.flag(s.span, "from-import"),
            StmtKind::Assign { target, value } => {
                match (&target.kind, &value.kind) {
                    (ExprKind::Tuple(ts), ExprKind::Tuple(vs)) => {
                        if ts.len() != vs.len() {
                            self.flag(s.span, "unbalanced tuple assignment");
                        }
                        for t in ts {
                            self.target(t);
                        }
                        for v in vs {
                            self.expr(v);
                        }
                    }
                    _ => {
                        self.target(target);
                        self.expr(value);
                    }
                }
            }
            StmtKind::AugAssign { target, op, value } => {
                if !SUBSET_AUG_OPS.contains(op) {
                    self.flag(s.span, format!("augmented operator {}=", op.symbol()));
                }
                self.target(target);
                self.expr(value);
            }
            StmtKind::Expr(e) => self.expr(e),
            StmtKind::Return(v) => {
                if let Some(v) = v {
                    if matches!(v.kind, ExprKind::Tuple(_)) {
                        self.flag(v.span, "tuple return");
                    } else {
                        self.expr(v);
                    }
                } else {
                    self.flag(s.span, "bare return");
                }
            }
            StmtKind::If { test, body, orelse } => {
                self.expr(test);
                self.block(body);
                self.block(orelse);
            }
            StmtKind::For { target, iter, body } => {
                if target.as_name().is_none() {
                    self.flag(target.span, "for target");
                }
                self.expr(iter);
                self.block(body);
            }
            StmtKind::While { test, body } => {
                self.expr(test);
                self.block(body);
            }
            StmtKind::Break | StmtKind::Continue | StmtKind::Pass => {}
        }
    }

    fn target(&mut self, t: &Expr) {
        match &t.kind {
            ExprKind::Name(_) => {}
            ExprKind::Index { value, index } => {
                self.target(value);
                self.expr(index);
            }
            ExprKind::Slice { .. } => self.flag(t.span, "slice assignment"),
            ExprKind::Attribute { .. } => self.flag(t.span, "attribute assignment"),
            ExprKind::Tuple(_) => self.flag(t.span, "nested tuple assignment"),
            _ => self.flag(t.span, "assignment target"),
        }
    }

    fn callee_allowed(&self, func: &Expr) -> bool {
        match &func.kind {
            ExprKind::Name(n) => {
                BUILTIN_CALLS.contains(&n.as_str())
                    || (self.profile == Profile::Cfp && BASIS_CALLS.contains(&n.as_str()))
            }
            ExprKind::Attribute { value, attr } => {
                if let Some(path) = canonical_callee(func) {
                    if let Some(f) = path.strip_prefix("math.") {
                        return MATH_CALLS.contains(&f);
                    }
                    if let Some(f) = path.strip_prefix("numpy.") {
                        return NUMPY_CALLS.contains(&f);
                    }
                }
                let receiver_is_module = value.as_name().is_some_and(is_module);
                !receiver_is_module && LIST_METHODS.contains(&attr.as_str())
            }
            _ => false,
        }
    }

    fn expr(&mut self, e: &Expr) {
        match &e.kind {
            ExprKind::Int(_) | ExprKind::Float(_) | ExprKind::Bool(_) => {}
            ExprKind::Str(_) => self.flag(e.span, "string literal"),
            ExprKind::Name(n) => {
                if n == "None" {
                    self.flag(e.span, "None");
                }
            }
            ExprKind::Attribute { value, attr } => {
                let is_const = value.as_name().is_some_and(is_module)
                    && MODULE_CONSTANTS.contains(&attr.as_str());
                if !is_const {
                    self.flag(e.span, "attribute access");
                }
            }
            ExprKind::Call { func, args } => {
                if !self.callee_allowed(func) {
                    let name = func.dotted_name().unwrap_or_else(|| "<expression>".into());
                    self.flag(e.span, format!("non-whitelisted call {name}"));
                }
                if let ExprKind::Attribute { value, .. } = &func.kind {
                    if !value.as_name().is_some_and(is_module) {
                        self.expr(value);
                    }
                }
                for a in args {
                    self.expr(a);
                }
            }
            ExprKind::BinOp { op, left, right } => {
                if op.is_bitwise() {
                    self.flag(e.span, format!("bitwise operator {}", op.symbol()));
                }
                self.expr(left);
                self.expr(right);
            }
            ExprKind::Unary { op, operand } => {
                if *op == UnaryOp::Invert {
                    self.flag(e.span, "bitwise operator ~");
                }
                self.expr(operand);
            }
            ExprKind::Tuple(_) => self.flag(e.span, "tuple"),
            ExprKind::ListComp { elt, iter, .. } => {
                self.expr(elt);
                self.expr(iter);
            }
            _ => {
                for c in e.children() {
                    self.expr(c);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse_source;
    use super::*;

    fn check(src: &str) -> Result<Program, FrontendError> {
        validate_subset(parse_source(src).unwrap(), Profile::Source)
    }

    fn violations(src: &str) -> Vec<String> {
        match check(src) {
            Err(FrontendError::Subset(v)) => v.into_iter().map(|v| v.construct).collect(),
            other => panic!("expected violations, got {other:?}"),
        }
    }

    #[test]
    fn accepts_plain_function() {
        let src = "def f(a):\n    s = 0\n    for i in range(len(a)):\n        if a[i] > 0:\n            s += a[i]\n    return s\n";
        assert!(check(src).is_ok());
    }

    #[test]
    fn rejects_with() {
        let v = violations("def f(x):\n    with x:\n        pass\n    return x\n");
        assert_eq!(v, vec!["with"]);
    }

    #[test]
    fn rejects_open() {
        let v = violations("def f(x):\n    y = open(x)\n    return y\n");
        assert_eq!(v, vec!["non-whitelisted call open"]);
    }

    #[test]
    fn reports_all_violations() {
        let v = violations("def f(x):\n    y = x & 1\n    z = open(y)\n    return z\n");
        assert_eq!(v.len(), 2);
    }

    #[test]
    fn numpy_alias_and_math() {
        let src = "import numpy as np\nimport math\ndef f(x):\n    return np.exp(x) + math.sqrt(x) + math.pi\n";
        assert!(check(src).is_ok());
    }

    #[test]
    fn basis_calls_need_cfp_profile() {
        let p = parse_source("def f(x):\n    return ln(x)\n").unwrap();
        assert!(validate_subset(p.clone(), Profile::Source).is_err());
        assert!(validate_subset(p, Profile::Cfp).is_ok());
    }

    #[test]
    fn idempotent() {
        let src = "def f(a):\n    b = sorted(a)\n    return b\n";
        let once = check(src).unwrap();
        let twice = validate_subset(once.clone(), Profile::Source).unwrap();
        assert_eq!(once, twice);
    }
}
