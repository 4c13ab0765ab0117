//! Rule-based repair of emitted programs, keyed by the kind of compile fault.

use std::collections::BTreeSet;

use crate::emit::{key_of, rectify, MappingTable, Qualifier, SpdzProgram};
use crate::frontend::{
    canonical_callee, map_block_exprs, BinOp, Expr, ExprKind, Span, StmtKind, UnaryOp,
};
use crate::spdzsim::{CompileError, LintKind, BUILTINS, CLEAR_MATH, METHODS, MPC_MATH, TYPES};

fn nearest(name: &str, names: &[&'static str]) -> &'static str {
    names
        .iter()
        .min_by_key(|m| strsim::levenshtein(name, m))
        .copied()
        .expect("name list is not empty")
}

/// Names a module exposes to programs.
fn module_names(module: &str) -> Option<&'static [&'static str]> {
    match module.rsplit('.').next().unwrap_or(module) {
        "mpc_math" => Some(MPC_MATH),
        "math" => Some(CLEAR_MATH),
        _ => None,
    }
}

fn operands(e: &Expr) -> Vec<Expr> {
    match &e.kind {
        ExprKind::Call { args, .. } => args.clone(),
        ExprKind::BinOp { left, right, .. } | ExprKind::BoolOp { left, right, .. } => {
            vec![(**left).clone(), (**right).clone()]
        }
        ExprKind::Unary { operand, .. } => vec![(**operand).clone()],
        _ => Vec::new(),
    }
}

fn one_minus(x: Expr) -> Expr {
    let span = x.span;
    Expr::binop(BinOp::Sub, Expr::int(1, span), x)
}

/// Oblivious replacement for an operator or builtin the linter rejected on
/// secret operands.
fn secret_form(e: Expr, table: &MappingTable) -> Expr {
    match &e.kind {
        ExprKind::BinOp { op, left, right } => {
            let (l, r) = ((**left).clone(), (**right).clone());
            match op {
                BinOp::BitAnd => Expr::call(Expr::attribute(l, "bit_and"), vec![r]),
                BinOp::BitOr => Expr::call(Expr::attribute(l, "bit_or"), vec![r]),
                BinOp::BitXor => {
                    let both = Expr::call(Expr::attribute(l.clone(), "bit_and"), vec![r.clone()]);
                    let span = e.span;
                    Expr::binop(
                        BinOp::Sub,
                        Expr::binop(BinOp::Add, l, r),
                        Expr::binop(BinOp::Mul, Expr::int(2, span), both),
                    )
                }
                _ => e,
            }
        }
        ExprKind::Unary {
            op: UnaryOp::Invert,
            operand,
        } => one_minus((**operand).clone()),
        ExprKind::IfExp { test, body, orelse } => {
            Expr::call(Expr::attribute((**test).clone(), "if_else"), vec![(**body).clone(), (**orelse).clone()])
        }
        _ => match key_of(&e).and_then(|k| table.lookup(&k, &[Qualifier::Secret])) {
            Some(id) => table.entry(id).instantiate(&operands(&e)),
            None => e,
        },
    }
}

fn unknown_callee_fix(e: Expr, table: &MappingTable) -> Expr {
    let ExprKind::Call { func, args } = &e.kind else {
        return e;
    };
    // a source-library call that leaked through keeps its table translation
    if let Some(id) = key_of(&e).and_then(|k| table.lookup(&k, &[Qualifier::Secret])) {
        return table.entry(id).instantiate(args);
    }
    let span = e.span;
    let path = canonical_callee(func);
    let module = path.as_deref().and_then(|p| p.rsplit_once('.')).map(|(m, _)| m);
    match (&func.kind, module.and_then(module_names)) {
        (ExprKind::Attribute { attr, .. }, Some(names)) => {
            Expr::call_named(&format!("{}.{}", module.unwrap_or_default(), nearest(attr, names)), args.clone(), span)
        }
        (ExprKind::Attribute { value, attr }, None) => {
            Expr::call(Expr::attribute((**value).clone(), nearest(attr, METHODS)), args.clone())
        }
        (ExprKind::Name(name), _) => {
            let names: Vec<&'static str> = BUILTINS.iter().chain(TYPES).copied().collect();
            Expr::call_named(nearest(name, &names), args.clone(), span)
        }
        _ => e,
    }
}

/// Applies the rectifier and then one targeted fix per reported fault:
/// unknown callees go to the nearest mapping-table template, missing imports
/// get the canonical import block, and operators or builtins rejected on
/// secret data get their oblivious form. Faults without a targeted fix,
/// including all runtime and logic faults, leave the program unchanged.
pub fn repair(spdz: &SpdzProgram, faults: &[CompileError]) -> SpdzProgram {
    let table = MappingTable::default_table();
    let at = |kinds: &[LintKind]| -> BTreeSet<Span> {
        faults.iter().filter(|f| kinds.contains(&f.kind)).map(|f| f.span()).collect()
    };
    let unknown = at(&[LintKind::UnknownCallee]);
    let secret = at(&[LintKind::BitwiseOnSecret, LintKind::SecretControlFlow]);
    let mut ast = spdz.ast.clone();
    if faults.iter().any(|f| f.kind == LintKind::MissingImport) {
        ast.body
            .retain(|s| !matches!(s.kind, StmtKind::Import(_) | StmtKind::FromImport { .. }));
    }
    let body = std::mem::take(&mut ast.body);
    ast.body = map_block_exprs(body, &mut |e| {
        if unknown.contains(&e.span) && matches!(e.kind, ExprKind::Call { .. }) {
            return unknown_callee_fix(e, table);
        }
        if secret.contains(&e.span)
            && matches!(
                e.kind,
                ExprKind::BinOp { .. } | ExprKind::BoolOp { .. } | ExprKind::Unary { .. } | ExprKind::Call { .. } | ExprKind::IfExp { .. }
            )
        {
            return secret_form(e, table);
        }
        e
    });
    rectify(&SpdzProgram { ast })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emit::emit_source;
    use crate::spdzsim::lint;

    fn fix(src: &str) -> String {
        let p = SpdzProgram::parse(src).unwrap();
        let out = repair(&p, &lint(&p));
        let text = emit_source(&out);
        let body = text.split_once("\ndef ").map(|(_, b)| format!("def {b}")).unwrap();
        assert_eq!(lint(&out), vec![], "{text}");
        body
    }

    const HEAD: &str = "from Compiler.types import sfix\nfrom Compiler import mpc_math\nimport math\n";

    #[test]
    fn misspelled_library_call_goes_to_nearest_name() {
        let body = fix(&format!("{HEAD}def f(x: sfix):\n    return mpc_math.sqrtt(x)\n"));
        assert_eq!(body, "def f(x: sfix):\n    return mpc_math.sqrt(x)\n");
        let body = fix(&format!("{HEAD}def f(x: sfix):\n    return mpc_math.powfx(math.e, x)\n"));
        assert_eq!(body, "def f(x: sfix):\n    return mpc_math.pow_fx(math.e, x)\n");
        let body = fix(&format!("{HEAD}def f(x: sfix):\n    return mpc_math.logfx(x, math.e)\n"));
        assert_eq!(body, "def f(x: sfix):\n    return mpc_math.log_fx(x, math.e)\n");
        let body = fix(&format!("{HEAD}def f(x: sfix):\n    return numpy.exp(x)\n"));
        assert_eq!(body, "def f(x: sfix):\n    return mpc_math.pow_fx(math.e, x)\n");
    }

    #[test]
    fn misspelled_method_goes_to_nearest_method() {
        let body = fix(&format!("{HEAD}def f(a: sfix, b: sfix):\n    return (a > 0).bitand(b > 0)\n"));
        assert_eq!(body, "def f(a: sfix, b: sfix):\n    return (a > 0).bit_and(b > 0)\n");
        let body = fix(&format!("{HEAD}def f(a: sfix, b: sfix):\n    t = a > 0\n    return t.bitand(b > 0)\n"));
        assert_eq!(body, "def f(a: sfix, b: sfix):\n    t = a > 0\n    return t.bit_and(b > 0)\n");
    }

    #[test]
    fn missing_imports_restored() {
        let p = SpdzProgram::parse("def f(x: sfix):\n    return mpc_math.sqrt(x)\n").unwrap();
        assert!(!lint(&p).is_empty());
        let out = repair(&p, &lint(&p));
        assert_eq!(lint(&out), vec![]);
    }

    #[test]
    fn secret_logic_and_builtins_made_oblivious() {
        let body = fix(&format!("{HEAD}def f(a: sfix, b: sfix):\n    return (a > 0 and not b > 0) | (a < b)\n"));
        assert_eq!(
            body,
            "def f(a: sfix, b: sfix):\n    return (a > 0).bit_and(1 - (b > 0)).bit_or(a < b)\n"
        );
        let body = fix(&format!("{HEAD}def f(a: sfix, b: sfix):\n    return max(a, b)\n"));
        assert_eq!(body, "def f(a: sfix, b: sfix):\n    return (a > b).if_else(a, b)\n");
    }

    #[test]
    fn secret_branch_statement_is_left_alone() {
        let src = format!("{HEAD}def f(a: sfix):\n    if a > 0:\n        a = a + 1\n    return a\n");
        let p = SpdzProgram::parse(&src).unwrap();
        let out = repair(&p, &lint(&p));
        assert_eq!(lint(&out).len(), 1);
    }

    #[test]
    fn no_faults_means_only_rectification() {
        let p = SpdzProgram::parse(&format!("{HEAD}def f(x: sfix):\n    return x + 1\n")).unwrap();
        let once = repair(&p, &[]);
        assert_eq!(repair(&once, &[]), once);
    }
}
