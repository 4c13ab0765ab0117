//! Static checks standing in for the MP-SPDZ compiler front end.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::emit::SpdzProgram;
use crate::frontend::{canonical_callee, target_root, Expr, ExprKind, FunctionDef, Span, Stmt, StmtKind, UnaryOp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LintKind {
    UnknownCallee,
    MissingImport,
    SecretControlFlow,
    BitwiseOnSecret,
    UnsupportedSyntax,
}

impl LintKind {
    pub fn name(self) -> &'static str {
        match self {
            LintKind::UnknownCallee => "unknown-callee",
            LintKind::MissingImport => "missing-import",
            LintKind::SecretControlFlow => "secret-control-flow",
            LintKind::BitwiseOnSecret => "bitwise-on-secret",
            LintKind::UnsupportedSyntax => "unsupported-syntax",
        }
    }
}

impl fmt::Display for LintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("{kind} at {line}:{col}: {message}")]
pub struct CompileError {
    pub kind: LintKind,
    pub line: u32,
    pub col: u32,
    pub message: String,
}

impl CompileError {
    pub fn new(kind: LintKind, span: Span, message: impl Into<String>) -> Self {
        Self {
            kind,
            line: span.line,
            col: span.col,
            message: message.into(),
        }
    }

    pub fn span(&self) -> Span {
        Span::new(self.line, self.col)
    }
}

/// Functions available under `mpc_math`.
pub const MPC_MATH: &[&str] = &[
    "pow_fx", "log_fx", "exp2_fx", "log2_fx", "sqrt", "InvertSqrt", "sin", "cos", "tan", "asin", "acos", "atan", "floor_fx",
];

/// Functions available under `math` (clear arguments only).
pub const CLEAR_MATH: &[&str] = &[
    "exp", "log", "log2", "log10", "sqrt", "sin", "cos", "tan", "asin", "acos", "atan", "floor", "ceil", "pow", "fabs",
];

pub const BUILTINS: &[&str] = &["range", "len", "abs", "min", "max", "sorted", "int", "float"];

pub const METHODS: &[&str] = &["if_else", "bit_and", "bit_or"];

pub const TYPES: &[&str] = &["sint", "sfix", "cint", "cfix"];

/// Module each importable name must come from.
fn import_source(name: &str) -> Option<&'static str> {
    Some(match name {
        "math" => "",
        "mpc_math" => "Compiler",
        "sint" | "sfix" | "cint" | "cfix" | "regint" | "Array" => "Compiler.types",
        "radix_sort" => "Compiler.sorting",
        _ => return None,
    })
}

/// Whether an annotation names a secret type.
pub fn annotation_is_secret(ann: &Expr) -> bool {
    ann.dotted_name()
        .and_then(|p| p.split('.').next().map(|r| r == "sint" || r == "sfix"))
        .unwrap_or(false)
}

struct Secrecy<'a> {
    env: BTreeMap<&'a str, bool>,
    funcs: &'a BTreeSet<String>,
}

impl<'a> Secrecy<'a> {
    fn of(&self, e: &Expr) -> bool {
        match &e.kind {
            ExprKind::Name(n) => self.env.get(n.as_str()).copied().unwrap_or(false),
            ExprKind::Call { func, args } => {
                let any = args.iter().any(|a| self.of(a));
                if let ExprKind::Attribute { value, attr } = &func.kind {
                    if METHODS.contains(&attr.as_str()) && !self.is_path(value) {
                        return self.of(value) || any;
                    }
                }
                match canonical_callee(func).as_deref() {
                    Some("sint" | "sfix" | "radix_sort") => true,
                    Some("cint" | "cfix" | "len" | "range" | "int" | "float") => false,
                    Some(p) if p.starts_with("sint.") || p.starts_with("sfix.") => true,
                    Some(p) if p.starts_with("cint.") || p.starts_with("cfix.") || p.starts_with("math.") => false,
                    _ => any,
                }
            }
            ExprKind::Attribute { .. } => false,
            _ => {
                e.children().into_iter().any(|c| self.of(c))
            }
        }
    }

    /// A module or type path such as `sint.Array`, as opposed to a value.
    fn is_path(&self, e: &Expr) -> bool {
        match &e.kind {
            ExprKind::Name(n) => !self.env.contains_key(n.as_str()) && (import_source(n).is_some() || self.funcs.contains(n)),
            ExprKind::Attribute { value, .. } => self.is_path(value),
            _ => false,
        }
    }

    fn mark(&mut self, name: &'a str, secret: bool) -> bool {
        let slot = self.env.entry(name).or_insert(false);
        let changed = secret && !*slot;
        *slot |= secret;
        changed
    }

    fn infer_block(&mut self, body: &'a [Stmt]) -> bool {
        let mut changed = false;
        for s in body {
            match &s.kind {
                StmtKind::Assign { target, value } => {
                    let sec = self.of(value);
                    if let Some(r) = target_root(target) {
                        changed |= self.mark(r, sec);
                    }
                }
                StmtKind::AugAssign { target, value, .. } => {
                    let sec = self.of(value);
                    if let Some(r) = target_root(target) {
                        changed |= self.mark(r, sec);
                    }
                }
                StmtKind::For { target, iter, body } => {
                    let sec = match &iter.kind {
                        ExprKind::Call { func, .. } if func.as_name() == Some("range") => false,
                        _ => self.of(iter),
                    };
                    if let Some(r) = target_root(target) {
                        changed |= self.mark(r, sec);
                    }
                    changed |= self.infer_block(body);
                }
                StmtKind::If { body, orelse, .. } => {
                    changed |= self.infer_block(body);
                    changed |= self.infer_block(orelse);
                }
                StmtKind::While { body, .. } | StmtKind::With { body, .. } => changed |= self.infer_block(body),
                _ => {}
            }
        }
        changed
    }
}

struct Linter<'a> {
    bound: BTreeMap<String, String>,
    funcs: BTreeSet<String>,
    out: Vec<CompileError>,
    sec: Option<Secrecy<'a>>,
}

/// Compile-time diagnostics for `spdz`; an empty list means the program
/// would compile.
pub fn lint(spdz: &SpdzProgram) -> Vec<CompileError> {
    let funcs: BTreeSet<String> = spdz
        .ast
        .body
        .iter()
        .filter_map(|s| match &s.kind {
            StmtKind::FunctionDef(f) => Some(f.name.clone()),
            _ => None,
        })
        .collect();
    let mut l = Linter {
        bound: BTreeMap::new(),
        funcs: funcs.clone(),
        out: Vec::new(),
        sec: None,
    };
    for s in &spdz.ast.body {
        match &s.kind {
            StmtKind::Import(names) => {
                for n in names {
                    l.bound.insert(n.alias.clone().unwrap_or_else(|| n.name.clone()), String::new());
                }
            }
            StmtKind::FromImport { module, names } => {
                for n in names {
                    l.bound.insert(n.alias.clone().unwrap_or_else(|| n.name.clone()), module.clone());
                }
            }
            _ => {}
        }
    }
    if funcs.is_empty() {
        l.out.push(CompileError::new(LintKind::UnsupportedSyntax, Span::new(1, 1), "program defines no function"));
    }
    for s in &spdz.ast.body {
        match &s.kind {
            StmtKind::FunctionDef(f) => l.function(f, &funcs),
            StmtKind::Import(_) | StmtKind::FromImport { .. } => {}
            _ => l.out.push(CompileError::new(LintKind::UnsupportedSyntax, s.span, "top-level statement outside a function")),
        }
    }
    l.out.sort_by_key(|e| (e.line, e.col));
    l.out.dedup();
    l.out
}

impl<'a> Linter<'a> {
    fn function(&mut self, f: &'a FunctionDef, funcs: &'a BTreeSet<String>) {
        let mut sec = Secrecy {
            env: BTreeMap::new(),
            funcs,
        };
        for p in &f.params {
            sec.env.insert(p.name.as_str(), p.annotation.as_ref().is_some_and(annotation_is_secret));
            if let Some(a) = &p.annotation {
                self.annotation(a);
            }
        }
        while sec.infer_block(&f.body) {}
        self.sec = Some(sec);
        self.block(&f.body);
        self.sec = None;
    }

    fn secret(&self, e: &Expr) -> bool {
        self.sec.as_ref().is_some_and(|s| s.of(e))
    }

    fn is_local(&self, n: &str) -> bool {
        self.sec.as_ref().is_some_and(|s| s.env.contains_key(n))
    }

    fn push(&mut self, kind: LintKind, span: Span, message: String) {
        self.out.push(CompileError::new(kind, span, message));
    }

    fn annotation(&mut self, a: &Expr) {
        if let Some(root) = a.dotted_name().and_then(|p| p.split('.').next().map(str::to_string)) {
            if TYPES.contains(&root.as_str()) {
                self.need(&root, a.span);
            }
        }
    }

    fn need(&mut self, name: &str, span: Span) {
        let Some(src) = import_source(name) else { return };
        match self.bound.get(name) {
            Some(m) if m == src => {}
            Some(m) => self.push(LintKind::MissingImport, span, format!("{name} is not provided by {m}")),
            None => self.push(LintKind::MissingImport, span, format!("{name} is used but not imported")),
        }
    }

    fn block(&mut self, body: &[Stmt]) {
        for s in body {
            self.stmt(s);
        }
    }

    fn stmt(&mut self, s: &Stmt) {
        match &s.kind {
            StmtKind::Assign { target, value } => {
                if matches!(target.kind, ExprKind::Tuple(_)) {
                    self.push(LintKind::UnsupportedSyntax, s.span, "tuple assignment".into());
                }
                self.expr(target);
                self.expr(value);
            }
            StmtKind::AugAssign { target, op, value } => {
                self.expr(target);
                self.expr(value);
                if op.is_bitwise() && (self.secret(target) || self.secret(value)) {
                    self.push(LintKind::BitwiseOnSecret, s.span, format!("`{}=` on secret data", op.symbol()));
                }
            }
            StmtKind::Expr(e) => self.expr(e),
            StmtKind::Return(e) => {
                if let Some(e) = e {
                    self.expr(e);
                }
            }
            StmtKind::If { test, body, orelse } => {
                self.truth(test, "if");
                self.block(body);
                self.block(orelse);
            }
            StmtKind::While { test, body } => {
                self.truth(test, "while");
                self.block(body);
            }
            StmtKind::For { target, iter, body } => {
                if target.as_name().is_none() {
                    self.push(LintKind::UnsupportedSyntax, s.span, "loop target must be a name".into());
                }
                if let ExprKind::Call { func, args } = &iter.kind {
                    if func.as_name() == Some("range") && args.iter().any(|a| self.secret(a)) {
                        self.push(LintKind::SecretControlFlow, iter.span, "loop bound depends on secret data".into());
                    }
                }
                self.expr(iter);
                self.block(body);
            }
            StmtKind::Break | StmtKind::Continue | StmtKind::Pass => {}
            StmtKind::FunctionDef(_) | StmtKind::With { .. } | StmtKind::Import(_) | StmtKind::FromImport { .. } => {
                self.push(LintKind::UnsupportedSyntax, s.span, "statement not supported inside a function".into())
            }
        }
    }

    fn truth(&mut self, test: &Expr, what: &str) {
        if self.secret(test) {
            self.push(LintKind::SecretControlFlow, test.span, format!("{what} condition depends on secret data"));
        }
        self.expr(test);
    }

    fn expr(&mut self, e: &Expr) {
        match &e.kind {
            ExprKind::Name(n) => {
                if !self.is_local(n) && !self.funcs.contains(n) {
                    self.need(n, e.span);
                }
            }
            ExprKind::Call { func, args } => self.call(e, func, args),
            ExprKind::BinOp { op, left, right } if op.is_bitwise() && (self.secret(left) || self.secret(right)) => {
                self.push(LintKind::BitwiseOnSecret, e.span, format!("`{}` on secret data", op.symbol()))
            }
            ExprKind::Unary { op: UnaryOp::Invert, operand } if self.secret(operand) => {
                self.push(LintKind::BitwiseOnSecret, e.span, "`~` on secret data".into())
            }
            ExprKind::Unary { op: UnaryOp::Not, operand } if self.secret(operand) => {
                self.push(LintKind::SecretControlFlow, e.span, "`not` on secret data".into())
            }
            ExprKind::BoolOp { left, right, .. } if self.secret(left) || self.secret(right) => {
                self.push(LintKind::SecretControlFlow, e.span, "`and`/`or` on secret data".into())
            }
            ExprKind::IfExp { test, .. } if self.secret(test) => {
                self.push(LintKind::SecretControlFlow, e.span, "conditional expression on secret data".into())
            }
            ExprKind::Slice { .. } | ExprKind::ListComp { .. } | ExprKind::Tuple(_) | ExprKind::Str(_) => {
                self.push(LintKind::UnsupportedSyntax, e.span, "expression form not supported".into())
            }
            _ => {}
        }
        if !matches!(e.kind, ExprKind::Call { .. }) {
            for c in e.children() {
                self.expr(c);
            }
        }
    }

    fn call(&mut self, e: &Expr, func: &Expr, args: &[Expr]) {
        for a in args {
            self.expr(a);
        }
        // value.method(...)
        if let ExprKind::Attribute { value, attr } = &func.kind {
            let is_path = self.sec.as_ref().is_some_and(|s| s.is_path(value));
            if !is_path {
                self.expr(value);
                if !METHODS.contains(&attr.as_str()) {
                    self.push(LintKind::UnknownCallee, e.span, format!("no method `{attr}`"));
                }
                return;
            }
        }
        let Some(path) = canonical_callee(func) else {
            self.push(LintKind::UnknownCallee, e.span, "callee is not a name".into());
            return;
        };
        let parts: Vec<&str> = path.split('.').collect();
        let root = parts[0];
        if !self.funcs.contains(root) && !(self.is_local(root) && parts.len() == 1) {
            self.need(root, func.span);
        }
        let known = match parts.as_slice() {
            [n] => BUILTINS.contains(n) || TYPES.contains(n) || *n == "radix_sort" || self.funcs.contains(*n),
            ["mpc_math", f] => MPC_MATH.contains(f),
            ["math", f] => CLEAR_MATH.contains(f),
            [t, "Array" | "Matrix"] | [t, "Array", "create_from"] => TYPES.contains(t),
            _ => false,
        };
        if !known {
            self.push(LintKind::UnknownCallee, e.span, format!("`{path}` does not exist"));
            return;
        }
        let secret_arg = args.iter().any(|a| self.secret(a));
        match parts.as_slice() {
            ["abs" | "min" | "max" | "sorted"] if secret_arg => self.push(
                LintKind::SecretControlFlow,
                e.span,
                format!("`{path}` branches on secret data"),
            ),
            ["math", _] | ["int" | "float"] if secret_arg => {
                self.push(LintKind::UnsupportedSyntax, e.span, format!("`{path}` takes clear arguments only"))
            }
            _ => {}
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emit::CANONICAL_IMPORTS;

    fn lint_src(body: &str) -> Vec<CompileError> {
        lint(&SpdzProgram::parse(&format!("{CANONICAL_IMPORTS}{body}")).unwrap())
    }

    fn kinds(body: &str) -> Vec<LintKind> {
        lint_src(body).into_iter().map(|e| e.kind).collect()
    }

    #[test]
    fn clean_program_has_no_errors() {
        let src = "def f(x: sfix):\n    y = (x > 0) * mpc_math.sqrt(x) + (x <= 0) * mpc_math.sqrt(-x)\n    return y\n";
        assert_eq!(lint_src(src), vec![]);
    }

    #[test]
    fn nonexistent_mpc_math_function() {
        let src = "def f(x: sfix):\n    return mpc_math.exp(x)\n";
        assert_eq!(kinds(src), vec![LintKind::UnknownCallee]);
    }

    #[test]
    fn secret_if_is_rejected() {
        let src = "def f(x: sint):\n    y = sint(0)\n    if x > 0:\n        y = x\n    return y\n";
        assert_eq!(kinds(src), vec![LintKind::SecretControlFlow]);
    }

    #[test]
    fn secrecy_propagates_through_assignments() {
        let src = "def f(x: sint, n: int):\n    t = n\n    t = x + 1\n    while t > 0:\n        n = n - 1\n    return n\n";
        assert_eq!(kinds(src), vec![LintKind::SecretControlFlow]);
        let src = "def f(a: sint.Array, n: int):\n    for i in range(a[0]):\n        n = n + 1\n    return n\n";
        assert_eq!(kinds(src), vec![LintKind::SecretControlFlow]);
    }

    #[test]
    fn clear_control_flow_is_fine() {
        let src = "def f(a: sfix.Array, n: int):\n    s = sfix(0)\n    for i in range(n):\n        if i > 1:\n            s = s + a[i]\n    return s\n";
        assert_eq!(lint_src(src), vec![]);
    }

    #[test]
    fn bitwise_and_logic_on_secret() {
        assert_eq!(kinds("def f(a: sint, b: sint):\n    return a & b\n"), vec![LintKind::BitwiseOnSecret]);
        assert_eq!(kinds("def f(a: sint, b: sint):\n    return a > 0 and b > 0\n"), vec![LintKind::SecretControlFlow]);
        assert_eq!(lint_src("def f(a: sint, b: sint):\n    return (a > 0).bit_and(b > 0)\n"), vec![]);
        assert_eq!(kinds("def f(a: sint):\n    return max(a, 0)\n"), vec![LintKind::SecretControlFlow]);
    }

    #[test]
    fn imports_are_checked() {
        let p = SpdzProgram::parse("import math\ndef f(x: sfix):\n    return mpc_math.sqrt(x)\n").unwrap();
        let ks: Vec<_> = lint(&p).into_iter().map(|e| e.kind).collect();
        assert_eq!(ks, vec![LintKind::MissingImport, LintKind::MissingImport]);
        let p = SpdzProgram::parse("from Compiler.types import sint\nfrom Compiler.types import radix_sort\ndef f(a: sint.Array):\n    return radix_sort(a)\n").unwrap();
        let e = lint(&p);
        assert_eq!(e.len(), 1);
        assert!(e[0].message.contains("Compiler.types"), "{}", e[0]);
    }

    #[test]
    fn usage_code_and_unknown_methods() {
        assert_eq!(kinds("def f(x: sint):\n    return x\nf(3)\n"), vec![LintKind::UnsupportedSyntax]);
        assert_eq!(kinds("def f(x: sint):\n    return x.reveal()\n"), vec![LintKind::UnknownCallee]);
        assert_eq!(kinds("def f(x: sfix):\n    return math.sqrt(x)\n"), vec![LintKind::UnsupportedSyntax]);
    }
}
