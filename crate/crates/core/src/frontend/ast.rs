//! Syntax tree shared by the Python-subset frontend, the refactoring passes,
//! the reference interpreter and the MP-SPDZ emitter.
//!
//! Nodes carry a [`Span`] but compare structurally: `PartialEq` on [`Expr`]
//! and [`Stmt`] ignores spans, so two trees parsed from differently laid out
//! text are equal when their shapes are.

use std::fmt;

/// 1-based line/column position of the first character of a node.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Span {
    pub line: u32,
    pub col: u32,
}

impl Span {
    pub const fn new(line: u32, col: u32) -> Self {
        Self { line, col }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    FloorDiv,
    Mod,
    Pow,
    BitAnd,
    BitOr,
    BitXor,
    LShift,
    RShift,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::FloorDiv => "//",
            BinOp::Mod => "%",
            BinOp::Pow => "**",
            BinOp::BitAnd => "&",
            BinOp::BitOr => "|",
            BinOp::BitXor => "^",
            BinOp::LShift => "<<",
            BinOp::RShift => ">>",
        }
    }

    pub fn is_bitwise(self) -> bool {
        matches!(
            self,
            BinOp::BitAnd | BinOp::BitOr | BinOp::BitXor | BinOp::LShift | BinOp::RShift
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Pos,
    Not,
    Invert,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoolOp {
    And,
    Or,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Lt,
    LtE,
    Gt,
    GtE,
    Eq,
    NotEq,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::LtE => "<=",
            CmpOp::Gt => ">",
            CmpOp::GtE => ">=",
            CmpOp::Eq => "==",
            CmpOp::NotEq => "!=",
        }
    }

    /// The operator whose result is the boolean complement of this one.
    pub fn negated(self) -> CmpOp {
        match self {
            CmpOp::Lt => CmpOp::GtE,
            CmpOp::LtE => CmpOp::Gt,
            CmpOp::Gt => CmpOp::LtE,
            CmpOp::GtE => CmpOp::Lt,
            CmpOp::Eq => CmpOp::NotEq,
            CmpOp::NotEq => CmpOp::Eq,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Int(i64),
    Float(f64),
    Bool(bool),
    Str(String),
    Name(String),
    Attribute {
        value: Box<Expr>,
        attr: String,
    },
    Call {
        func: Box<Expr>,
        args: Vec<Expr>,
    },
    Index {
        value: Box<Expr>,
        index: Box<Expr>,
    },
    Slice {
        value: Box<Expr>,
        lower: Option<Box<Expr>>,
        upper: Option<Box<Expr>>,
        step: Option<Box<Expr>>,
    },
    BinOp {
        op: BinOp,
        left: Box<Expr>,
        right: Box<Expr>,
    },
    Unary {
        op: UnaryOp,
        operand: Box<Expr>,
    },
    BoolOp {
        op: BoolOp,
        left: Box<Expr>,
        right: Box<Expr>,
    },
    /// `left ops[0] comparators[0] ops[1] comparators[1] ...`; a plain
    /// binary comparison has exactly one operator.
    Compare {
        left: Box<Expr>,
        ops: Vec<CmpOp>,
        comparators: Vec<Expr>,
    },
    IfExp {
        test: Box<Expr>,
        body: Box<Expr>,
        orelse: Box<Expr>,
    },
    List(Vec<Expr>),
    Tuple(Vec<Expr>),
    ListComp {
        elt: Box<Expr>,
        target: String,
        iter: Box<Expr>,
    },
}

impl Expr {
    pub fn new(kind: ExprKind, span: Span) -> Self {
        Self { kind, span }
    }

    pub fn name(name: impl Into<String>, span: Span) -> Self {
        Self::new(ExprKind::Name(name.into()), span)
    }

    pub fn int(v: i64, span: Span) -> Self {
        Self::new(ExprKind::Int(v), span)
    }

    pub fn boolean(v: bool, span: Span) -> Self {
        Self::new(ExprKind::Bool(v), span)
    }

    pub fn binop(op: BinOp, left: Expr, right: Expr) -> Self {
        let span = left.span;
        Self::new(
            ExprKind::BinOp {
                op,
                left: Box::new(left),
                right: Box::new(right),
            },
            span,
        )
    }

    pub fn boolop(op: BoolOp, left: Expr, right: Expr) -> Self {
        let span = left.span;
        Self::new(
            ExprKind::BoolOp {
                op,
                left: Box::new(left),
                right: Box::new(right),
            },
            span,
        )
    }

    pub fn unary(op: UnaryOp, operand: Expr) -> Self {
        let span = operand.span;
        Self::new(
            ExprKind::Unary {
                op,
                operand: Box::new(operand),
            },
            span,
        )
    }

    pub fn compare(left: Expr, op: CmpOp, right: Expr) -> Self {
        let span = left.span;
        Self::new(
            ExprKind::Compare {
                left: Box::new(left),
                ops: vec![op],
                comparators: vec![right],
            },
            span,
        )
    }

    pub fn index(value: Expr, index: Expr) -> Self {
        let span = value.span;
        Self::new(
            ExprKind::Index {
                value: Box::new(value),
                index: Box::new(index),
            },
            span,
        )
    }

    pub fn attribute(value: Expr, attr: impl Into<String>) -> Self {
        let span = value.span;
        Self::new(
            ExprKind::Attribute {
                value: Box::new(value),
                attr: attr.into(),
            },
            span,
        )
    }

    pub fn call(func: Expr, args: Vec<Expr>) -> Self {
        let span = func.span;
        Self::new(
            ExprKind::Call {
                func: Box::new(func),
                args,
            },
            span,
        )
    }

    /// Call of a (possibly dotted) name such as `len` or `mpc_math.sqrt`.
    pub fn call_named(path: &str, args: Vec<Expr>, span: Span) -> Self {
        Self::call(Self::dotted(path, span), args)
    }

    /// Builds `a.b.c` from `"a.b.c"`.
    pub fn dotted(path: &str, span: Span) -> Self {
        let mut parts = path.split('.');
        let first = parts.next().unwrap_or_default();
        let mut e = Self::name(first, span);
        for p in parts {
            e = Self::attribute(e, p);
        }
        e
    }

    pub fn as_name(&self) -> Option<&str> {
        match &self.kind {
            ExprKind::Name(n) => Some(n),
            _ => None,
        }
    }

    /// `a.b.c` as a dotted string when the expression is a pure name chain.
    pub fn dotted_name(&self) -> Option<String> {
        match &self.kind {
            ExprKind::Name(n) => Some(n.clone()),
            ExprKind::Attribute { value, attr } => {
                value.dotted_name().map(|base| format!("{base}.{attr}"))
            }
            _ => None,
        }
    }

    /// Callee path of a call whose target is a dotted name.
    pub fn callee(&self) -> Option<String> {
        match &self.kind {
            ExprKind::Call { func, .. } => func.dotted_name(),
            _ => None,
        }
    }

    /// Receiver and method name for `recv.method(...)` calls whose receiver
    /// is not a module-style dotted name.
    pub fn method_call(&self) -> Option<(&Expr, &str, &[Expr])> {
        match &self.kind {
            ExprKind::Call { func, args } => match &func.kind {
                ExprKind::Attribute { value, attr } => Some((value, attr.as_str(), args)),
                _ => None,
            },
            _ => None,
        }
    }

    /// Pre-order visit of this expression and all sub-expressions.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        f(self);
        for child in self.children() {
            child.walk(f);
        }
    }

    pub fn children(&self) -> Vec<&Expr> {
        match &self.kind {
            ExprKind::Int(_)
            | ExprKind::Float(_)
            | ExprKind::Bool(_)
            | ExprKind::Str(_)
            | ExprKind::Name(_) => vec![],
            ExprKind::Attribute { value, .. } => vec![value],
            ExprKind::Call { func, args } => {
                let mut v = vec![func.as_ref()];
                v.extend(args.iter());
                v
            }
            ExprKind::Index { value, index } => vec![value, index],
            ExprKind::Slice {
                value,
                lower,
                upper,
                step,
            } => {
                let mut v = vec![value.as_ref()];
                for part in [lower, upper, step].into_iter().flatten() {
                    v.push(part);
                }
                v
            }
            ExprKind::BinOp { left, right, .. } | ExprKind::BoolOp { left, right, .. } => {
                vec![left, right]
            }
            ExprKind::Unary { operand, .. } => vec![operand],
            ExprKind::Compare {
                left, comparators, ..
            } => {
                let mut v = vec![left.as_ref()];
                v.extend(comparators.iter());
                v
            }
            ExprKind::IfExp { test, body, orelse } => vec![test, body, orelse],
            ExprKind::List(items) | ExprKind::Tuple(items) => items.iter().collect(),
            ExprKind::ListComp { elt, iter, .. } => vec![elt, iter],
        }
    }

    /// Bottom-up rewrite: children first, then `f` on the rebuilt node.
    pub fn map(self, f: &mut dyn FnMut(Expr) -> Expr) -> Expr {
        let span = self.span;
        let kind = match self.kind {
            k @ (ExprKind::Int(_)
            | ExprKind::Float(_)
            | ExprKind::Bool(_)
            | ExprKind::Str(_)
            | ExprKind::Name(_)) => k,
            ExprKind::Attribute { value, attr } => ExprKind::Attribute {
                value: Box::new(value.map(f)),
                attr,
            },
            ExprKind::Call { func, args } => ExprKind::Call {
                func: Box::new(func.map(f)),
                args: args.into_iter().map(|a| a.map(f)).collect(),
            },
            ExprKind::Index { value, index } => ExprKind::Index {
                value: Box::new(value.map(f)),
                index: Box::new(index.map(f)),
            },
            ExprKind::Slice {
                value,
                lower,
                upper,
                step,
            } => ExprKind::Slice {
                value: Box::new(value.map(f)),
                lower: lower.map(|e| Box::new(e.map(f))),
                upper: upper.map(|e| Box::new(e.map(f))),
                step: step.map(|e| Box::new(e.map(f))),
            },
            ExprKind::BinOp { op, left, right } => ExprKind::BinOp {
                op,
                left: Box::new(left.map(f)),
                right: Box::new(right.map(f)),
            },
            ExprKind::BoolOp { op, left, right } => ExprKind::BoolOp {
                op,
                left: Box::new(left.map(f)),
                right: Box::new(right.map(f)),
            },
            ExprKind::Unary { op, operand } => ExprKind::Unary {
                op,
                operand: Box::new(operand.map(f)),
            },
            ExprKind::Compare {
                left,
                ops,
                comparators,
            } => ExprKind::Compare {
                left: Box::new(left.map(f)),
                ops,
                comparators: comparators.into_iter().map(|c| c.map(f)).collect(),
            },
            ExprKind::IfExp { test, body, orelse } => ExprKind::IfExp {
                test: Box::new(test.map(f)),
                body: Box::new(body.map(f)),
                orelse: Box::new(orelse.map(f)),
            },
            ExprKind::List(items) => ExprKind::List(items.into_iter().map(|e| e.map(f)).collect()),
            ExprKind::Tuple(items) => {
                ExprKind::Tuple(items.into_iter().map(|e| e.map(f)).collect())
            }
            ExprKind::ListComp { elt, target, iter } => ExprKind::ListComp {
                elt: Box::new(elt.map(f)),
                target,
                iter: Box::new(iter.map(f)),
            },
        };
        f(Expr { kind, span })
    }

    /// Names read anywhere inside this expression.
    pub fn names(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.walk(&mut |e| {
            if let ExprKind::Name(n) = &e.kind {
                out.push(n.clone());
            }
        });
        out
    }

    pub fn reads_name(&self, name: &str) -> bool {
        let mut found = false;
        self.walk(&mut |e| {
            if let ExprKind::Name(n) = &e.kind {
                if n == name {
                    found = true;
                }
            }
        });
        found
    }

    /// Replaces every occurrence of the name `from` by `to`.
    pub fn substitute(self, from: &str, to: &Expr) -> Expr {
        self.map(&mut |e| match &e.kind {
            ExprKind::Name(n) if n == from => to.clone(),
            _ => e,
        })
    }

    pub fn contains(&self, pred: &dyn Fn(&Expr) -> bool) -> bool {
        let mut found = false;
        self.walk(&mut |e| {
            if pred(e) {
                found = true;
            }
        });
        found
    }
}

#[derive(Debug, Clone)]
pub struct Param {
    pub name: String,
    pub annotation: Option<Expr>,
    pub span: Span,
}

impl PartialEq for Param {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.annotation == other.annotation
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionDef {
    pub name: String,
    pub params: Vec<Param>,
    pub docstring: Option<String>,
    pub body: Vec<Stmt>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImportName {
    pub name: String,
    pub alias: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

impl PartialEq for Stmt {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    FunctionDef(FunctionDef),
    Assign {
        target: Expr,
        value: Expr,
    },
    AugAssign {
        target: Expr,
        op: BinOp,
        value: Expr,
    },
    Expr(Expr),
    Return(Option<Expr>),
    If {
        test: Expr,
        body: Vec<Stmt>,
        orelse: Vec<Stmt>,
    },
    For {
        target: Expr,
        iter: Expr,
        body: Vec<Stmt>,
    },
    While {
        test: Expr,
        body: Vec<Stmt>,
    },
    Break,
    Continue,
    Pass,
    Import(Vec<ImportName>),
    FromImport {
        module: String,
        names: Vec<ImportName>,
    },
    With {
        items: Vec<Expr>,
        body: Vec<Stmt>,
    },
}

impl Stmt {
    pub fn new(kind: StmtKind, span: Span) -> Self {
        Self { kind, span }
    }

    pub fn assign(target: Expr, value: Expr) -> Self {
        let span = target.span;
        Self::new(StmtKind::Assign { target, value }, span)
    }

    pub fn if_(test: Expr, body: Vec<Stmt>, orelse: Vec<Stmt>) -> Self {
        let span = test.span;
        Self::new(StmtKind::If { test, body, orelse }, span)
    }

    /// Direct child blocks of a compound statement.
    pub fn blocks(&self) -> Vec<&Vec<Stmt>> {
        match &self.kind {
            StmtKind::FunctionDef(f) => vec![&f.body],
            StmtKind::If { body, orelse, .. } => vec![body, orelse],
            StmtKind::For { body, .. } | StmtKind::While { body, .. } => vec![body],
            StmtKind::With { body, .. } => vec![body],
            _ => vec![],
        }
    }

    /// Expressions owned directly by this statement (not by nested blocks).
    pub fn exprs(&self) -> Vec<&Expr> {
        match &self.kind {
            StmtKind::Assign { target, value } | StmtKind::AugAssign { target, value, .. } => {
                vec![target, value]
            }
            StmtKind::Expr(e) => vec![e],
            StmtKind::Return(Some(e)) => vec![e],
            StmtKind::If { test, .. } | StmtKind::While { test, .. } => vec![test],
            StmtKind::For { target, iter, .. } => vec![target, iter],
            StmtKind::With { items, .. } => items.iter().collect(),
            StmtKind::FunctionDef(f) => f.params.iter().filter_map(|p| p.annotation.as_ref()).collect(),
            _ => vec![],
        }
    }

    /// Pre-order visit of this statement and every nested statement.
    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Stmt)) {
        f(self);
        for block in self.blocks() {
            for s in block {
                s.walk(f);
            }
        }
    }

    /// Visits every expression in this statement and nested statements.
    pub fn walk_exprs<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        self.walk(&mut |s| {
            for e in s.exprs() {
                e.walk(f);
            }
        });
    }

    /// Names assigned by this statement or nested statements (assignment
    /// roots, loop targets).
    pub fn assigned_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.walk(&mut |s| match &s.kind {
            StmtKind::Assign { target, .. }
            | StmtKind::AugAssign { target, .. }
            | StmtKind::For { target, .. } => collect_target_roots(target, &mut out),
            StmtKind::Expr(e) => {
                // list methods mutate their receiver
                if let Some((recv, _, _)) = e.method_call() {
                    if let Some(root) = target_root(recv) {
                        out.push(root.to_string());
                    }
                }
            }
            _ => {}
        });
        out
    }
}

/// Root variable of an assignment target (`a` for `a[i][j]`).
pub fn target_root(target: &Expr) -> Option<&str> {
    match &target.kind {
        ExprKind::Name(n) => Some(n),
        ExprKind::Index { value, .. } | ExprKind::Slice { value, .. } => target_root(value),
        _ => None,
    }
}

fn collect_target_roots(target: &Expr, out: &mut Vec<String>) {
    match &target.kind {
        ExprKind::Tuple(items) | ExprKind::List(items) => {
            for t in items {
                collect_target_roots(t, out);
            }
        }
        _ => {
            if let Some(r) = target_root(target) {
                out.push(r.to_string());
            }
        }
    }
}

/// A parsed compilation unit: imports plus function definitions (and, for
/// unvalidated input, anything else that appeared at top level).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Program {
    pub body: Vec<Stmt>,
}

impl Program {
    pub fn new(body: Vec<Stmt>) -> Self {
        Self { body }
    }

    /// The first top-level function definition.
    pub fn function(&self) -> Option<&FunctionDef> {
        self.body.iter().find_map(|s| match &s.kind {
            StmtKind::FunctionDef(f) => Some(f),
            _ => None,
        })
    }

    pub fn function_mut(&mut self) -> Option<&mut FunctionDef> {
        self.body.iter_mut().find_map(|s| match &mut s.kind {
            StmtKind::FunctionDef(f) => Some(f),
            _ => None,
        })
    }

    pub fn walk<'a>(&'a self, f: &mut dyn FnMut(&'a Stmt)) {
        for s in &self.body {
            s.walk(f);
        }
    }

    pub fn walk_exprs<'a>(&'a self, f: &mut dyn FnMut(&'a Expr)) {
        for s in &self.body {
            s.walk_exprs(f);
        }
    }
}

/// Applies `f` to every expression owned by `stmts` (recursively through
/// nested blocks), bottom-up within each expression.
pub fn map_block_exprs(stmts: Vec<Stmt>, f: &mut dyn FnMut(Expr) -> Expr) -> Vec<Stmt> {
    stmts.into_iter().map(|s| map_stmt_exprs(s, f)).collect()
}

pub fn map_stmt_exprs(stmt: Stmt, f: &mut dyn FnMut(Expr) -> Expr) -> Stmt {
    let span = stmt.span;
    let kind = match stmt.kind {
        StmtKind::FunctionDef(mut def) => {
            def.body = map_block_exprs(def.body, f);
            StmtKind::FunctionDef(def)
        }
        StmtKind::Assign { target, value } => StmtKind::Assign {
            target: target.map(f),
            value: value.map(f),
        },
        StmtKind::AugAssign { target, op, value } => StmtKind::AugAssign {
            target: target.map(f),
            op,
            value: value.map(f),
        },
        StmtKind::Expr(e) => StmtKind::Expr(e.map(f)),
        StmtKind::Return(e) => StmtKind::Return(e.map(|e| e.map(f))),
        StmtKind::If { test, body, orelse } => StmtKind::If {
            test: test.map(f),
            body: map_block_exprs(body, f),
            orelse: map_block_exprs(orelse, f),
        },
        StmtKind::For { target, iter, body } => StmtKind::For {
            target: target.map(f),
            iter: iter.map(f),
            body: map_block_exprs(body, f),
        },
        StmtKind::While { test, body } => StmtKind::While {
            test: test.map(f),
            body: map_block_exprs(body, f),
        },
        StmtKind::With { items, body } => StmtKind::With {
            items: items.into_iter().map(|e| e.map(f)).collect(),
            body: map_block_exprs(body, f),
        },
        k => k,
    };
    Stmt { kind, span }
}
