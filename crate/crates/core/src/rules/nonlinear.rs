//! Data-driven rewriting of nonlinear functions over the basis set.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use thiserror::Error;

use super::{hoist_block, try_map, PassCx, RuleError};
use crate::frontend::{
    canonical_callee, parse_expr_source, BinOp, Expr, ExprKind, Stmt, BASIS_CALLS,
};

/// Table shipped with the crate.
pub const DEFAULT_NONLINEAR_TABLE: &str = include_str!("../../data/nonlinear.table");

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("nonlinear table line {line}: {message}")]
pub struct TableError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    pattern: Expr,
    bindings: Vec<(String, Expr)>,
    result: Expr,
}

/// Ordered pattern → template records.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NonlinearTable {
    entries: Vec<Entry>,
}

impl NonlinearTable {
    pub fn parse(text: &str) -> Result<Self, TableError> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| TableError { line: i + 1, message };
            let (lhs, rhs) = line
                .split_once("=>")
                .ok_or_else(|| err("missing `=>`".into()))?;
            let pattern = parse_expr_source(lhs.trim()).map_err(|e| err(e.to_string()))?;
            let mut parts: Vec<&str> = rhs.split(';').map(str::trim).collect();
            let last = parts.pop().unwrap_or_default();
            let mut bindings = Vec::new();
            for p in parts {
                let (n, v) = p
                    .split_once('=')
                    .ok_or_else(|| err(format!("binding `{p}` lacks `=`")))?;
                let n = n.trim();
                if !n.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') || n.is_empty() {
                    return Err(err(format!("bad binding name `{n}`")));
                }
                let v = parse_expr_source(v.trim()).map_err(|e| err(e.to_string()))?;
                bindings.push((n.to_string(), v));
            }
            let result = parse_expr_source(last).map_err(|e| err(e.to_string()))?;
            let entry = Entry {
                pattern,
                bindings,
                result,
            };
            check_closed(&entry).map_err(err)?;
            entries.push(entry);
        }
        Ok(Self { entries })
    }

    pub fn default_table() -> &'static NonlinearTable {
        static TABLE: OnceLock<NonlinearTable> = OnceLock::new();
        TABLE.get_or_init(|| NonlinearTable::parse(DEFAULT_NONLINEAR_TABLE).expect("shipped table parses"))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// True when some call-rooted pattern has callee `path`.
    pub fn contains(&self, path: &str) -> bool {
        self.entries.iter().any(|e| match &e.pattern.kind {
            ExprKind::Call { func, .. } => func.dotted_name().as_deref() == Some(path),
            _ => false,
        })
    }

    /// Rewrites the node `e` (not its children) if a record matches. Binding
    /// statements are appended to `pre`.
    fn rewrite(&self, e: &Expr, pre: &mut Vec<Stmt>, cx: &mut PassCx) -> Option<Expr> {
        for entry in &self.entries {
            let mut holes = BTreeMap::new();
            if !matches(&entry.pattern, e, &mut holes) {
                continue;
            }
            let span = e.span;
            let mut uses: BTreeMap<String, usize> = BTreeMap::new();
            for t in entry.bindings.iter().map(|(_, v)| v).chain([&entry.result]) {
                for n in t.names() {
                    *uses.entry(n).or_default() += 1;
                }
            }
            // a compound argument used twice is evaluated once into a temporary
            for (h, val) in holes.iter_mut() {
                let simple = matches!(
                    val.kind,
                    ExprKind::Name(_) | ExprKind::Int(_) | ExprKind::Float(_) | ExprKind::Bool(_)
                );
                if !simple && uses.get(h).copied().unwrap_or(0) > 1 {
                    let t = cx.temp();
                    pre.push(super::assign_name(&t, val.clone()));
                    *val = Expr::name(t, span);
                }
            }
            let mut subst = holes;
            for (n, v) in &entry.bindings {
                let v = instantiate(v, &subst, span);
                let t = cx.temp();
                pre.push(super::assign_name(&t, v));
                subst.insert(n.clone(), Expr::name(t, span));
            }
            return Some(instantiate(&entry.result, &subst, span));
        }
        None
    }
}

fn is_callee_position(pattern: &Expr, name: &str) -> bool {
    let mut found = false;
    pattern.walk(&mut |x| {
        if let ExprKind::Call { func, .. } = &x.kind {
            if func.dotted_name().as_deref() == Some(name) || func.as_name() == Some(name) {
                found = true;
            }
        }
    });
    found
}

fn hole_names(pattern: &Expr) -> Vec<String> {
    let mut out = Vec::new();
    collect_holes(pattern, &mut out);
    out
}

fn collect_holes(p: &Expr, out: &mut Vec<String>) {
    match &p.kind {
        ExprKind::Name(n) => {
            if !out.contains(n) {
                out.push(n.clone());
            }
        }
        ExprKind::Call { args, .. } => {
            for a in args {
                collect_holes(a, out);
            }
        }
        _ => {
            for c in p.children() {
                collect_holes(c, out);
            }
        }
    }
}

fn check_closed(e: &Entry) -> Result<(), String> {
    let holes = hole_names(&e.pattern);
    let mut known: Vec<String> = holes.clone();
    let check = |t: &Expr, known: &Vec<String>| -> Result<(), String> {
        let mut bad = None;
        t.walk(&mut |x| match &x.kind {
            ExprKind::Name(n) if !known.contains(n) && !is_callee_position(t, n) => {
                bad = Some(format!("unbound name `{n}`"));
            }
            ExprKind::Call { func, .. } => {
                let ok = func.as_name().is_some_and(|n| BASIS_CALLS.contains(&n) || n == "abs");
                if !ok {
                    bad = Some(format!("template calls non-basis `{}`", func.dotted_name().unwrap_or_default()));
                }
            }
            _ => {}
        });
        bad.map_or(Ok(()), Err)
    };
    for (n, v) in &e.bindings {
        check(v, &known)?;
        known.push(n.clone());
    }
    check(&e.result, &known)
}

/// Structural match where non-callee names in the pattern are holes.
fn matches(pattern: &Expr, e: &Expr, holes: &mut BTreeMap<String, Expr>) -> bool {
    match (&pattern.kind, &e.kind) {
        (ExprKind::Name(h), _) => match holes.get(h) {
            Some(bound) => bound == e,
            None => {
                holes.insert(h.clone(), e.clone());
                true
            }
        },
        (ExprKind::Call { func: pf, args: pa }, ExprKind::Call { func: ef, args: ea }) => {
            let pname = pf.dotted_name();
            pname.is_some()
                && pname == canonical_callee(ef)
                && pa.len() == ea.len()
                && pa.iter().zip(ea).all(|(p, x)| matches(p, x, holes))
        }
        (
            ExprKind::BinOp { op: po, left: pl, right: pr },
            ExprKind::BinOp { op: eo, left: el, right: er },
        ) => {
            if *po == BinOp::Pow && !super::detect::is_nonlinear_pow(e) {
                return false;
            }
            po == eo && matches(pl, el, holes) && matches(pr, er, holes)
        }
        (ExprKind::Unary { op: po, operand: p }, ExprKind::Unary { op: eo, operand: x }) => {
            po == eo && matches(p, x, holes)
        }
        (ExprKind::Int(a), ExprKind::Int(b)) => a == b,
        (ExprKind::Float(a), ExprKind::Float(b)) => a == b,
        _ => false,
    }
}

fn instantiate(t: &Expr, subst: &BTreeMap<String, Expr>, span: crate::frontend::Span) -> Expr {
    t.clone().map(&mut |mut x| {
        if let ExprKind::Name(n) = &x.kind {
            if let Some(v) = subst.get(n) {
                return v.clone();
            }
        }
        x.span = span;
        x
    })
}

/// True for `math.*`/`numpy.*` callees that are neither array operations
/// nor array creations, i.e. the calls this pass must remove.
pub(crate) fn is_nonlinear_callee(path: &str) -> bool {
    let Some((module, name)) = path.split_once('.') else {
        return false;
    };
    if !matches!(module, "math" | "numpy") {
        return false;
    }
    !matches!(name, "array" | "zeros" | "ones" | "arange")
        && !super::detect::ARRAY_OPS.contains(&path)
}

pub(crate) fn decompose_nonlinear(body: Vec<Stmt>, cx: &mut PassCx) -> Result<Vec<Stmt>, RuleError> {
    decompose_with(NonlinearTable::default_table(), body, cx)
}

pub(crate) fn decompose_with(
    table: &NonlinearTable,
    body: Vec<Stmt>,
    cx: &mut PassCx,
) -> Result<Vec<Stmt>, RuleError> {
    hoist_block(body, cx, &mut |e, pre, cx| {
        try_map(e, pre, cx, &mut |node, pre, cx| {
            if let Some(out) = table.rewrite(&node, pre, cx) {
                return Ok(out);
            }
            if let ExprKind::Call { func, .. } = &node.kind {
                if let Some(path) = canonical_callee(func) {
                    if is_nonlinear_callee(&path) {
                        return Err(cx.error(node.span, format!("no rewrite for {path}")));
                    }
                }
            }
            Ok(node)
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emit::types::Interface;
    use crate::frontend::{load_program, parse_source, render};
    use crate::rules::{apply_rule, RuleId};

    fn decompose(src: &str) -> String {
        let p = load_program(src).unwrap();
        render(&apply_rule(RuleId::LinearNonLinear, &p, &Interface::default()).unwrap())
    }

    #[test]
    fn shipped_table_parses() {
        let t = NonlinearTable::default_table();
        assert!(t.len() > 20);
        for f in ["exp2", "expm1", "log", "log1p", "log2", "log10", "power", "logaddexp", "logaddexp2"] {
            assert!(t.contains(&format!("numpy.{f}")), "{f}");
        }
        for f in ["sinh", "cosh", "tanh", "sqrt", "pow"] {
            assert!(t.contains(&format!("math.{f}")), "{f}");
        }
    }

    #[test]
    fn logaddexp2_uses_ln2_binding() {
        let out = decompose("import numpy\ndef f(x1, x2):\n    return numpy.logaddexp2(x1, x2)\n");
        let want = parse_source(
            "import numpy\ndef f(x1, x2):\n    __t_0 = ln(2)\n    __t_1 = x1 * __t_0\n    __t_2 = x2 * __t_0\n    __t_3 = exp(__t_1)\n    __t_4 = exp(__t_2)\n    __t_5 = __t_3 + __t_4\n    return ln(__t_5) / __t_0\n",
        )
        .unwrap();
        assert_eq!(parse_source(&out).unwrap(), want, "{out}");
    }

    #[test]
    fn tanh_and_inverse_sqrt() {
        let out = decompose("import math\ndef f(x):\n    return math.tanh(x) + 1 / math.sqrt(x)\n");
        assert!(out.contains("(exp(2 * x) - 1) / (exp(2 * x) + 1) + invertsqrt(x)"), "{out}");
    }

    #[test]
    fn compound_argument_evaluated_once() {
        let out = decompose("import math\ndef f(x, y):\n    return math.sinh(x * y)\n");
        assert!(out.contains("__t_0 = x * y"), "{out}");
        assert!(out.contains("(exp(__t_0) - exp(-__t_0)) / 2"), "{out}");
    }

    #[test]
    fn integer_power_is_kept() {
        let out = decompose("def f(x):\n    return x ** 2 + x ** 0.5\n");
        assert!(out.contains("x ** 2 + exp(0.5 * ln(x))"), "{out}");
    }

    #[test]
    fn rejects_open_templates() {
        assert!(NonlinearTable::parse("math.exp(x) => exp(z)").is_err());
        assert!(NonlinearTable::parse("math.exp(x) => math.exp(x)").is_err());
        assert!(NonlinearTable::parse("math.exp(x) exp(x)").is_err());
    }
}
