use super::ast::*;

const P_TERNARY: u8 = 1;
const P_OR: u8 = 2;
const P_AND: u8 = 3;
const P_NOT: u8 = 4;
const P_CMP: u8 = 5;
const P_UNARY: u8 = 12;
const P_POW: u8 = 13;
const P_POSTFIX: u8 = 14;
const P_ATOM: u8 = 15;

fn binop_prec(op: BinOp) -> u8 {
    match op {
        BinOp::BitOr => 6,
        BinOp::BitXor => 7,
        BinOp::BitAnd => 8,
        BinOp::LShift | BinOp::RShift => 9,
        BinOp::Add | BinOp::Sub => 10,
        BinOp::Mul | BinOp::Div | BinOp::FloorDiv | BinOp::Mod => 11,
        BinOp::Pow => P_POW,
    }
}

fn prec(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::IfExp { .. } => P_TERNARY,
        ExprKind::BoolOp { op: BoolOp::Or, .. } => P_OR,
        ExprKind::BoolOp { op: BoolOp::And, .. } => P_AND,
        ExprKind::Unary { op: UnaryOp::Not, .. } => P_NOT,
        ExprKind::Compare { .. } => P_CMP,
        ExprKind::BinOp { op, .. } => binop_prec(*op),
        ExprKind::Unary { .. } => P_UNARY,
        ExprKind::Int(v) if *v < 0 => P_UNARY,
        ExprKind::Float(v) if v.is_sign_negative() => P_UNARY,
        ExprKind::Call { .. }
        | ExprKind::Index { .. }
        | ExprKind::Slice { .. }
        | ExprKind::Attribute { .. } => P_POSTFIX,
        // an unparenthesized tuple binds looser than everything
        ExprKind::Tuple(_) => 0,
        _ => P_ATOM,
    }
}

/// Renders an expression, parenthesizing only where precedence requires.
pub fn render_expr(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(e, &mut out);
    out
}

fn child(e: &Expr, needs_paren: bool, out: &mut String) {
    if needs_paren {
        out.push('(');
        write_expr(e, out);
        out.push(')');
    } else {
        write_expr(e, out);
    }
}

fn write_float(v: f64, out: &mut String) {
    let s = format!("{v:?}");
    out.push_str(&s);
}

fn write_str(s: &str, out: &mut String) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
}

fn write_list(items: &[Expr], out: &mut String) {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        child(item, prec(item) == 0, out);
    }
}

fn write_expr(e: &Expr, out: &mut String) {
    match &e.kind {
        ExprKind::Int(v) => out.push_str(&v.to_string()),
        ExprKind::Float(v) => write_float(*v, out),
        ExprKind::Bool(b) => out.push_str(if *b { "True" } else { "False" }),
        ExprKind::Str(s) => write_str(s, out),
        ExprKind::Name(n) => out.push_str(n),
        ExprKind::Attribute { value, attr } => {
            child(value, prec(value) < P_POSTFIX || is_numeric_literal(value), out);
            out.push('.');
            out.push_str(attr);
        }
        ExprKind::Call { func, args } => {
            child(func, prec(func) < P_POSTFIX, out);
            out.push('(');
            write_list(args, out);
            out.push(')');
        }
        ExprKind::Index { value, index } => {
            child(value, prec(value) < P_POSTFIX, out);
            out.push('[');
            child(index, prec(index) == 0, out);
            out.push(']');
        }
        ExprKind::Slice {
            value,
            lower,
            upper,
            step,
        } => {
            child(value, prec(value) < P_POSTFIX, out);
            out.push('[');
            if let Some(l) = lower {
                write_expr(l, out);
            }
            out.push(':');
            if let Some(u) = upper {
                write_expr(u, out);
            }
            if let Some(s) = step {
                out.push(':');
                write_expr(s, out);
            }
            out.push(']');
        }
        ExprKind::BinOp { op, left, right } => {
            let p = binop_prec(*op);
            if *op == BinOp::Pow {
                // right-associative; the exponent may be a unary expression
                child(left, prec(left) <= p, out);
                out.push_str(" ** ");
                child(right, prec(right) < P_UNARY, out);
            } else {
                child(left, prec(left) < p, out);
                out.push(' ');
                out.push_str(op.symbol());
                out.push(' ');
                child(right, prec(right) <= p, out);
            }
        }
        ExprKind::Unary { op, operand } => {
            match op {
                UnaryOp::Not => {
                    out.push_str("not ");
                    child(operand, prec(operand) < P_NOT, out);
                    return;
                }
                UnaryOp::Neg => out.push('-'),
                UnaryOp::Pos => out.push('+'),
                UnaryOp::Invert => out.push('~'),
            }
            child(operand, prec(operand) < P_UNARY, out);
        }
        ExprKind::BoolOp { op, left, right } => {
            let (p, kw) = match op {
                BoolOp::And => (P_AND, " and "),
                BoolOp::Or => (P_OR, " or "),
            };
            child(left, prec(left) < p, out);
            out.push_str(kw);
            child(right, prec(right) <= p, out);
        }
        ExprKind::Compare {
            left,
            ops,
            comparators,
        } => {
            child(left, prec(left) <= P_CMP, out);
            for (op, c) in ops.iter().zip(comparators) {
                out.push(' ');
                out.push_str(op.symbol());
                out.push(' ');
                child(c, prec(c) <= P_CMP, out);
            }
        }
        ExprKind::IfExp { test, body, orelse } => {
            child(body, prec(body) <= P_TERNARY, out);
            out.push_str(" if ");
            child(test, prec(test) <= P_TERNARY, out);
            out.push_str(" else ");
            child(orelse, prec(orelse) < P_TERNARY, out);
        }
        ExprKind::List(items) => {
            out.push('[');
            write_list(items, out);
            out.push(']');
        }
        ExprKind::Tuple(items) => {
            out.push('(');
            write_list(items, out);
            if items.len() == 1 {
                out.push(',');
            }
            out.push(')');
        }
        ExprKind::ListComp { elt, target, iter } => {
            out.push('[');
            child(elt, prec(elt) <= P_TERNARY, out);
            out.push_str(" for ");
            out.push_str(target);
            out.push_str(" in ");
            child(iter, prec(iter) <= P_TERNARY, out);
            out.push(']');
        }
    }
}

fn is_numeric_literal(e: &Expr) -> bool {
    matches!(e.kind, ExprKind::Int(_) | ExprKind::Float(_))
}

/// Tuples in assignment position are written without parentheses.
fn write_bare(e: &Expr, out: &mut String) {
    match &e.kind {
        ExprKind::Tuple(items) if !items.is_empty() => {
            write_list(items, out);
            if items.len() == 1 {
                out.push(',');
            }
        }
        _ => write_expr(e, out),
    }
}

/// Renders a whole program with 4-space indentation and a trailing newline.
pub fn render(program: &Program) -> String {
    let mut out = String::new();
    write_block(&program.body, 0, &mut out);
    out
}

/// Renders statements at the given indentation depth.
pub fn render_stmts(stmts: &[Stmt], depth: usize) -> String {
    let mut out = String::new();
    write_block(stmts, depth, &mut out);
    out
}

fn indent(depth: usize, out: &mut String) {
    for _ in 0..depth {
        out.push_str("    ");
    }
}

fn write_block(stmts: &[Stmt], depth: usize, out: &mut String) {
    if stmts.is_empty() {
        indent(depth, out);
        out.push_str("pass\n");
        return;
    }
    for s in stmts {
        write_stmt(s, depth, out);
    }
}

fn write_stmt(s: &Stmt, depth: usize, out: &mut String) {
    indent(depth, out);
    match &s.kind {
        StmtKind::FunctionDef(f) => {
            out.push_str("def ");
            out.push_str(&f.name);
            out.push('(');
            for (i, p) in f.params.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                out.push_str(&p.name);
                if let Some(a) = &p.annotation {
                    out.push_str(": ");
                    write_expr(a, out);
                }
            }
            out.push_str("):\n");
            if let Some(doc) = &f.docstring {
                indent(depth + 1, out);
                out.push_str("\"\"\"");
                out.push_str(&doc.replace('\\', "\\\\").replace("\"\"\"", "\\\"\\\"\\\""));
                out.push_str("\"\"\"\n");
                if f.body.is_empty() {
                    return;
                }
            }
            write_block(&f.body, depth + 1, out);
        }
        StmtKind::Assign { target, value } => {
            write_bare(target, out);
            out.push_str(" = ");
            write_bare(value, out);
            out.push('\n');
        }
        StmtKind::AugAssign { target, op, value } => {
            write_expr(target, out);
            out.push(' ');
            out.push_str(op.symbol());
            out.push_str("= ");
            write_expr(value, out);
            out.push('\n');
        }
        StmtKind::Expr(e) => {
            write_bare(e, out);
            out.push('\n');
        }
        StmtKind::Return(v) => {
            out.push_str("return");
            if let Some(v) = v {
                out.push(' ');
                write_bare(v, out);
            }
            out.push('\n');
        }
        StmtKind::If { .. } => write_if(s, depth, "if", out),
        StmtKind::For { target, iter, body } => {
            out.push_str("for ");
            write_bare(target, out);
            out.push_str(" in ");
            write_expr(iter, out);
            out.push_str(":\n");
            write_block(body, depth + 1, out);
        }
        StmtKind::While { test, body } => {
            out.push_str("while ");
            write_expr(test, out);
            out.push_str(":\n");
            write_block(body, depth + 1, out);
        }
        StmtKind::Break => out.push_str("break\n"),
        StmtKind::Continue => out.push_str("continue\n"),
        StmtKind::Pass => out.push_str("pass\n"),
        StmtKind::Import(names) => {
            out.push_str("import ");
            write_import_names(names, out);
            out.push('\n');
        }
        StmtKind::FromImport { module, names } => {
            out.push_str("from ");
            out.push_str(module);
            out.push_str(" import ");
            write_import_names(names, out);
            out.push('\n');
        }
        StmtKind::With { items, body } => {
            out.push_str("with ");
            write_list(items, out);
            out.push_str(":\n");
            write_block(body, depth + 1, out);
        }
    }
}

fn write_if(s: &Stmt, depth: usize, kw: &str, out: &mut String) {
    let StmtKind::If { test, body, orelse } = &s.kind else {
        return;
    };
    out.push_str(kw);
    out.push(' ');
    write_expr(test, out);
    out.push_str(":\n");
    write_block(body, depth + 1, out);
    match orelse.as_slice() {
        [] => {}
        [inner] if matches!(inner.kind, StmtKind::If { .. }) => {
            indent(depth, out);
            write_if(inner, depth, "elif", out);
        }
        _ => {
            indent(depth, out);
            out.push_str("else:\n");
            write_block(orelse, depth + 1, out);
        }
    }
}

fn write_import_names(names: &[ImportName], out: &mut String) {
    for (i, n) in names.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&n.name);
        if let Some(a) = &n.alias {
            out.push_str(" as ");
            out.push_str(a);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{parse_expr_source, parse_source};
    use super::*;

    fn rt(src: &str) -> String {
        render(&parse_source(src).unwrap())
    }

    #[test]
    fn simple_assignment() {
        let s = Stmt::assign(Expr::name("x", Span::default()), Expr::int(1, Span::default()));
        assert_eq!(render_stmts(&[s], 0), "x = 1\n");
    }

    #[test]
    fn chain_is_not_parenthesized() {
        assert_eq!(rt("0<x<5\n"), "0 < x < 5\n");
    }

    #[test]
    fn elif_collapses() {
        let src = "if a:\n    x = 1\nelse:\n    if b:\n        x = 2\n    else:\n        x = 3\n";
        assert_eq!(rt(src), "if a:\n    x = 1\nelif b:\n    x = 2\nelse:\n    x = 3\n");
    }

    #[test]
    fn minimal_parentheses() {
        for (src, want) in [
            ("(a + b) * c", "(a + b) * c"),
            ("a - (b - c)", "a - (b - c)"),
            ("(a - b) - c", "a - b - c"),
            ("(-x) ** 2", "(-x) ** 2"),
            ("-x ** 2", "-x ** 2"),
            ("2 ** -1", "2 ** -1"),
            ("(a ** b) ** c", "(a ** b) ** c"),
            ("not (a and b)", "not (a and b)"),
            ("(a < b) < c", "(a < b) < c"),
            ("(x > 0) * y", "(x > 0) * y"),
            ("(a if c else b) + 1", "(a if c else b) + 1"),
        ] {
            assert_eq!(render_expr(&parse_expr_source(src).unwrap()), want, "{src}");
        }
    }

    #[test]
    fn swap_renders_bare_tuples() {
        assert_eq!(rt("a, b = b, a\n"), "a, b = b, a\n");
    }

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1e-7, 2.5e20, 3.0, 0.30000000000000004] {
            let e = Expr::new(ExprKind::Float(v), Span::default());
            let back = parse_expr_source(&render_expr(&e)).unwrap();
            assert_eq!(back, e);
        }
    }
}
