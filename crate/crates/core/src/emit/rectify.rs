use super::{SpdzProgram, CANONICAL_IMPORTS};
use crate::frontend::{canonical_callee, map_block_exprs, parse_source, Expr, ExprKind, Program, Stmt, StmtKind};

fn is_import(s: &Stmt) -> bool {
    matches!(s.kind, StmtKind::Import(_) | StmtKind::FromImport { .. })
}

fn is_path(e: &Expr, path: &str) -> bool {
    e.dotted_name().as_deref() == Some(path)
}

fn sfix_pi(e: &Expr) -> Expr {
    Expr::call_named("sfix", vec![Expr::dotted("math.pi", e.span)], e.span)
}

fn is_sfix_pi(e: &Expr) -> bool {
    match &e.kind {
        ExprKind::Call { func, args } => is_path(func, "sfix") && args.len() == 1 && is_path(&args[0], "math.pi"),
        _ => false,
    }
}

fn rewrite(e: Expr) -> Expr {
    let span = e.span;
    if is_path(&e, "math.pi") || is_path(&e, "mpc_math.pi") {
        return sfix_pi(&e);
    }
    let ExprKind::Call { func, args } = &e.kind else {
        if let ExprKind::IfExp { test, body, orelse } = e.kind {
            return Expr::call(Expr::attribute(*test, "if_else"), vec![*body, *orelse]);
        }
        return e;
    };
    let path = canonical_callee(func).unwrap_or_default();
    let e_const = || Expr::dotted("math.e", span);
    match (path.as_str(), args.as_slice()) {
        ("mpc_math.exp", [x]) => Expr::call_named("mpc_math.pow_fx", vec![e_const(), x.clone()], span),
        ("mpc_math.log", [x]) => Expr::call_named("mpc_math.log_fx", vec![x.clone(), e_const()], span),
        ("mpc_math.log_fx", [x, base]) if matches!(&base.kind, ExprKind::Call { func, args } if is_path(func, "cfix") && args.len() == 1 && is_path(&args[0], "math.e")) => {
            Expr::call_named("mpc_math.log_fx", vec![x.clone(), e_const()], span)
        }
        ("mpc_math.sqrt_fx", [x]) => Expr::call_named("mpc_math.sqrt", vec![x.clone()], span),
        ("mpc_math.pi_fx", []) => sfix_pi(&e),
        // `sfix(math.pi)` wrapped again by the constant rule above
        ("sfix", [inner]) if is_sfix_pi(inner) => inner.clone(),
        // clear math keeps the clear constant
        (p, _) if p.starts_with("math.") => {
            let args = args
                .iter()
                .cloned()
                .map(|a| a.map(&mut |n| if is_sfix_pi(&n) { Expr::dotted("math.pi", n.span) } else { n }))
                .collect();
            Expr::call((**func).clone(), args)
        }
        _ => e,
    }
}

/// Applies the fixed rectification rules: canonical imports first, renamed
/// mpc_math functions, fixed-point pi, ternaries as `if_else`, and no
/// top-level code besides imports and definitions. Idempotent.
pub fn rectify(spdz: &SpdzProgram) -> SpdzProgram {
    let canonical = parse_source(CANONICAL_IMPORTS).expect("canonical imports parse").body;
    let mut body = canonical.clone();
    for s in spdz.ast.body.iter().filter(|s| is_import(s)) {
        if !body.contains(s) {
            body.push(s.clone());
        }
    }
    for s in &spdz.ast.body {
        if let StmtKind::FunctionDef(f) = &s.kind {
            let mut f = f.clone();
            f.body = map_block_exprs(std::mem::take(&mut f.body), &mut rewrite);
            body.push(Stmt::new(StmtKind::FunctionDef(f), s.span));
        }
    }
    SpdzProgram { ast: Program::new(body) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emit::emit_source;

    fn fix(src: &str) -> String {
        let out = emit_source(&rectify(&SpdzProgram::parse(src).unwrap()));
        out[CANONICAL_IMPORTS.len()..].to_string()
    }

    #[test]
    fn pi_stays_clear_under_clear_math() {
        let want = "def f(x):\n    return x / math.sqrt(2 * math.pi) + sfix(math.pi)\n";
        assert_eq!(fix("def f(x):\n    return x / math.sqrt(2 * math.pi) + math.pi\n"), want);
        assert_eq!(fix(want), want);
    }

    #[test]
    fn renamed_functions_are_rectified() {
        assert_eq!(
            fix("def f(x):\n    return mpc_math.exp(x) + mpc_math.log(x) + mpc_math.sqrt_fx(x)\n"),
            "def f(x):\n    return mpc_math.pow_fx(math.e, x) + mpc_math.log_fx(x, math.e) + mpc_math.sqrt(x)\n"
        );
        assert_eq!(
            fix("def f(x):\n    return mpc_math.log_fx(x, cfix(math.e))\n"),
            "def f(x):\n    return mpc_math.log_fx(x, math.e)\n"
        );
    }

    #[test]
    fn pi_and_ternaries() {
        assert_eq!(
            fix("def f(x, c):\n    y = x if c else math.pi\n    return y * mpc_math.pi_fx()\n"),
            "def f(x, c):\n    y = c.if_else(x, sfix(math.pi))\n    return y * sfix(math.pi)\n"
        );
    }

    #[test]
    fn usage_examples_and_imports() {
        let src = "from Compiler.mpc_math import sqrt\ndef f(x):\n    return sqrt(x)\nx = sfix(4)\nprint_ln('%s', f(x).reveal())\n";
        let out = emit_source(&rectify(&SpdzProgram::parse(src).unwrap()));
        assert!(out.starts_with(CANONICAL_IMPORTS));
        assert!(out.ends_with("from Compiler.mpc_math import sqrt\ndef f(x):\n    return sqrt(x)\n"), "{out}");
    }

    #[test]
    fn rectify_is_idempotent() {
        for src in [
            "def f(x):\n    return sfix(math.pi) * x\n",
            "import math\ndef f(x, c):\n    return (c if x else math.pi) + mpc_math.exp(x)\n",
        ] {
            let once = rectify(&SpdzProgram::parse(src).unwrap());
            assert_eq!(rectify(&once), once);
        }
    }
}
