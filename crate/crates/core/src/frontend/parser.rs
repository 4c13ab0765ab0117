use super::ast::*;
use super::lexer::{Token, TokenKind};
use super::FrontendError;

/// Parses a token stream produced by [`super::tokenize`] into a [`Program`].
pub fn parse(tokens: &[Token]) -> Result<Program, FrontendError> {
    let mut p = Parser { tokens, pos: 0 };
    let mut body = Vec::new();
    p.skip_newlines();
    while !p.at_end() {
        body.push(p.statement()?);
        p.skip_newlines();
    }
    Ok(Program::new(body))
}

/// Parses a single expression (used by the template engines).
pub fn parse_expression(tokens: &[Token]) -> Result<Expr, FrontendError> {
    let mut p = Parser { tokens, pos: 0 };
    let e = p.expression()?;
    p.skip_newlines();
    if !p.at_end() {
        return Err(p.unexpected("end of expression"));
    }
    Ok(e)
}

struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
}

impl<'t> Parser<'t> {
    fn peek(&self) -> &TokenKind {
        &self.tokens[self.pos.min(self.tokens.len() - 1)].kind
    }

    fn peek_at(&self, off: usize) -> &TokenKind {
        &self.tokens[(self.pos + off).min(self.tokens.len() - 1)].kind
    }

    fn span(&self) -> Span {
        self.tokens[self.pos.min(self.tokens.len() - 1)].span
    }

    fn at_end(&self) -> bool {
        matches!(self.peek(), TokenKind::End)
    }

    fn advance(&mut self) -> &Token {
        let t = &self.tokens[self.pos.min(self.tokens.len() - 1)];
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn skip_newlines(&mut self) {
        while matches!(self.peek(), TokenKind::Newline) {
            self.advance();
        }
    }

    fn unexpected(&self, expected: &str) -> FrontendError {
        FrontendError::Parse {
            span: self.span(),
            expected: expected.to_string(),
            found: self.peek().describe(),
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), TokenKind::Keyword(k) if *k == kw)
    }

    fn is_op(&self, op: &str) -> bool {
        matches!(self.peek(), TokenKind::Op(o) if *o == op)
    }

    fn is_delim(&self, d: &str) -> bool {
        matches!(self.peek(), TokenKind::Delim(x) if *x == d)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if self.is_op(op) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn eat_delim(&mut self, d: &str) -> bool {
        if self.is_delim(d) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), FrontendError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    fn expect_delim(&mut self, d: &str) -> Result<(), FrontendError> {
        if self.eat_delim(d) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{d}`")))
        }
    }

    fn expect_ident(&mut self) -> Result<String, FrontendError> {
        match self.peek().clone() {
            TokenKind::Ident(n) => {
                self.advance();
                Ok(n)
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    fn expect_newline(&mut self) -> Result<(), FrontendError> {
        match self.peek() {
            TokenKind::Newline => {
                self.advance();
                Ok(())
            }
            TokenKind::End | TokenKind::Dedent => Ok(()),
            _ => Err(self.unexpected("newline")),
        }
    }

    fn block(&mut self) -> Result<Vec<Stmt>, FrontendError> {
        self.expect_delim(":")?;
        if !matches!(self.peek(), TokenKind::Newline) {
            // single-line suite: `if x: y = 1`
            let s = self.simple_statement()?;
            self.expect_newline()?;
            return Ok(vec![s]);
        }
        self.advance();
        if !matches!(self.peek(), TokenKind::Indent) {
            return Err(self.unexpected("indented block"));
        }
        self.advance();
        let mut body = Vec::new();
        loop {
            self.skip_newlines();
            if matches!(self.peek(), TokenKind::Dedent) {
                self.advance();
                break;
            }
            if self.at_end() {
                break;
            }
            body.push(self.statement()?);
        }
        Ok(body)
    }

    fn statement(&mut self) -> Result<Stmt, FrontendError> {
        let span = self.span();
        match self.peek() {
            TokenKind::Keyword("def") => self.function_def(),
            TokenKind::Keyword("if") => {
                self.advance();
                self.if_tail(span)
            }
            TokenKind::Keyword("for") => {
                self.advance();
                let target = self.target_list()?;
                self.expect_kw("in")?;
                let iter = self.expression()?;
                let body = self.block()?;
                Ok(Stmt::new(StmtKind::For { target, iter, body }, span))
            }
            TokenKind::Keyword("while") => {
                self.advance();
                let test = self.expression()?;
                let body = self.block()?;
                Ok(Stmt::new(StmtKind::While { test, body }, span))
            }
            TokenKind::Keyword("with") => {
                self.advance();
                let mut items = vec![self.expression()?];
                if self.eat_kw("as") {
                    self.expect_ident()?;
                }
                while self.eat_delim(",") {
                    items.push(self.expression()?);
                    if self.eat_kw("as") {
                        self.expect_ident()?;
                    }
                }
                let body = self.block()?;
                Ok(Stmt::new(StmtKind::With { items, body }, span))
            }
            _ => {
                let s = self.simple_statement()?;
                self.expect_newline()?;
                Ok(s)
            }
        }
    }

    fn if_tail(&mut self, span: Span) -> Result<Stmt, FrontendError> {
        let test = self.expression()?;
        let body = self.block()?;
        self.skip_newlines_before_else();
        let orelse = if self.is_kw("elif") {
            let s = self.span();
            self.advance();
            vec![self.if_tail(s)?]
        } else if self.eat_kw("else") {
            self.block()?
        } else {
            vec![]
        };
        Ok(Stmt::new(StmtKind::If { test, body, orelse }, span))
    }

    fn skip_newlines_before_else(&mut self) {
        let mut off = 0;
        while matches!(self.peek_at(off), TokenKind::Newline) {
            off += 1;
        }
        if matches!(self.peek_at(off), TokenKind::Keyword("elif") | TokenKind::Keyword("else")) {
            self.pos += off;
        }
    }

    fn function_def(&mut self) -> Result<Stmt, FrontendError> {
        let span = self.span();
        self.expect_kw("def")?;
        let name = self.expect_ident()?;
        self.expect_delim("(")?;
        let mut params = Vec::new();
        while !self.is_delim(")") {
            let pspan = self.span();
            let pname = self.expect_ident()?;
            let annotation = if self.eat_delim(":") {
                Some(self.expression()?)
            } else {
                None
            };
            if self.is_op("=") {
                return Err(self.unexpected("`,` or `)` (default values are not supported)"));
            }
            params.push(Param {
                name: pname,
                annotation,
                span: pspan,
            });
            if !self.eat_delim(",") {
                break;
            }
        }
        self.expect_delim(")")?;
        if self.eat_op("->") {
            self.expression()?;
        }
        let mut body = self.block()?;
        let docstring = match body.first() {
            Some(Stmt {
                kind:
                    StmtKind::Expr(Expr {
                        kind: ExprKind::Str(s),
                        ..
                    }),
                ..
            }) => Some(s.clone()),
            _ => None,
        };
        if docstring.is_some() {
            body.remove(0);
        }
        Ok(Stmt::new(
            StmtKind::FunctionDef(FunctionDef {
                name,
                params,
                docstring,
                body,
            }),
            span,
        ))
    }

    fn simple_statement(&mut self) -> Result<Stmt, FrontendError> {
        let span = self.span();
        match self.peek() {
            TokenKind::Keyword("return") => {
                self.advance();
                let value = if matches!(self.peek(), TokenKind::Newline | TokenKind::End | TokenKind::Dedent) {
                    None
                } else {
                    Some(self.expression_list()?)
                };
                Ok(Stmt::new(StmtKind::Return(value), span))
            }
            TokenKind::Keyword("break") => {
                self.advance();
                Ok(Stmt::new(StmtKind::Break, span))
            }
            TokenKind::Keyword("continue") => {
                self.advance();
                Ok(Stmt::new(StmtKind::Continue, span))
            }
            TokenKind::Keyword("pass") => {
                self.advance();
                Ok(Stmt::new(StmtKind::Pass, span))
            }
            TokenKind::Keyword("import") => {
                self.advance();
                let mut names = vec![self.import_name()?];
                while self.eat_delim(",") {
                    names.push(self.import_name()?);
                }
                Ok(Stmt::new(StmtKind::Import(names), span))
            }
            TokenKind::Keyword("from") => {
                self.advance();
                let module = self.dotted_module()?;
                self.expect_kw("import")?;
                let mut names = Vec::new();
                if self.eat_op("*") {
                    names.push(ImportName {
                        name: "*".into(),
                        alias: None,
                    });
                } else {
                    let paren = self.eat_delim("(");
                    loop {
                        let name = self.expect_ident()?;
                        let alias = if self.eat_kw("as") {
                            Some(self.expect_ident()?)
                        } else {
                            None
                        };
                        names.push(ImportName { name, alias });
                        if !self.eat_delim(",") {
                            break;
                        }
                        if paren && self.is_delim(")") {
                            break;
                        }
                    }
                    if paren {
                        self.expect_delim(")")?;
                    }
                }
                Ok(Stmt::new(StmtKind::FromImport { module, names }, span))
            }
            _ => {
                let first = self.expression_list()?;
                if self.eat_op("=") {
                    let value = self.expression_list()?;
                    if self.is_op("=") {
                        return Err(self.unexpected("newline (chained assignment is not supported)"));
                    }
                    check_target(&first)?;
                    return Ok(Stmt::new(StmtKind::Assign { target: first, value }, span));
                }
                let aug = match self.peek() {
                    TokenKind::Op("+=") => Some(BinOp::Add),
                    TokenKind::Op("-=") => Some(BinOp::Sub),
                    TokenKind::Op("*=") => Some(BinOp::Mul),
                    TokenKind::Op("/=") => Some(BinOp::Div),
                    TokenKind::Op("//=") => Some(BinOp::FloorDiv),
                    TokenKind::Op("%=") => Some(BinOp::Mod),
                    TokenKind::Op("**=") => Some(BinOp::Pow),
                    TokenKind::Op("&=") => Some(BinOp::BitAnd),
                    TokenKind::Op("|=") => Some(BinOp::BitOr),
                    TokenKind::Op("^=") => Some(BinOp::BitXor),
                    TokenKind::Op("<<=") => Some(BinOp::LShift),
                    TokenKind::Op(">>=") => Some(BinOp::RShift),
                    _ => None,
                };
                if let Some(op) = aug {
                    self.advance();
                    let value = self.expression()?;
                    check_target(&first)?;
                    if matches!(first.kind, ExprKind::Tuple(_)) {
                        return Err(FrontendError::Parse {
                            span: first.span,
                            expected: "single assignment target".into(),
                            found: "tuple".into(),
                        });
                    }
                    return Ok(Stmt::new(
                        StmtKind::AugAssign {
                            target: first,
                            op,
                            value,
                        },
                        span,
                    ));
                }
                Ok(Stmt::new(StmtKind::Expr(first), span))
            }
        }
    }

    fn import_name(&mut self) -> Result<ImportName, FrontendError> {
        let name = self.dotted_module()?;
        let alias = if self.eat_kw("as") {
            Some(self.expect_ident()?)
        } else {
            None
        };
        Ok(ImportName { name, alias })
    }

    fn dotted_module(&mut self) -> Result<String, FrontendError> {
        let mut name = self.expect_ident()?;
        while self.eat_delim(".") {
            name.push('.');
            name.push_str(&self.expect_ident()?);
        }
        Ok(name)
    }

    fn target_list(&mut self) -> Result<Expr, FrontendError> {
        let span = self.span();
        let first = self.bitor_expr()?;
        if !self.is_delim(",") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_delim(",") {
            if self.is_kw("in") {
                break;
            }
            items.push(self.bitor_expr()?);
        }
        Ok(Expr::new(ExprKind::Tuple(items), span))
    }

    /// `expr (, expr)*` producing a tuple when a comma is present.
    fn expression_list(&mut self) -> Result<Expr, FrontendError> {
        let span = self.span();
        let first = self.expression()?;
        if !self.is_delim(",") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_delim(",") {
            if matches!(self.peek(), TokenKind::Newline | TokenKind::End) || self.is_op("=") {
                break;
            }
            items.push(self.expression()?);
        }
        Ok(Expr::new(ExprKind::Tuple(items), span))
    }

    pub fn expression(&mut self) -> Result<Expr, FrontendError> {
        let span = self.span();
        let body = self.or_expr()?;
        if self.eat_kw("if") {
            let test = self.or_expr()?;
            self.expect_kw("else")?;
            let orelse = self.expression()?;
            return Ok(Expr::new(
                ExprKind::IfExp {
                    test: Box::new(test),
                    body: Box::new(body),
                    orelse: Box::new(orelse),
                },
                span,
            ));
        }
        Ok(body)
    }

    fn or_expr(&mut self) -> Result<Expr, FrontendError> {
        let mut left = self.and_expr()?;
        while self.eat_kw("or") {
            let right = self.and_expr()?;
            left = Expr::boolop(BoolOp::Or, left, right);
        }
        Ok(left)
    }

    fn and_expr(&mut self) -> Result<Expr, FrontendError> {
        let mut left = self.not_expr()?;
        while self.eat_kw("and") {
            let right = self.not_expr()?;
            left = Expr::boolop(BoolOp::And, left, right);
        }
        Ok(left)
    }

    fn not_expr(&mut self) -> Result<Expr, FrontendError> {
        let span = self.span();
        if self.eat_kw("not") {
            let operand = self.not_expr()?;
            return Ok(Expr::new(
                ExprKind::Unary {
                    op: UnaryOp::Not,
                    operand: Box::new(operand),
                },
                span,
            ));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Result<Expr, FrontendError> {
        let span = self.span();
        let left = self.bitor_expr()?;
        let mut ops = Vec::new();
        let mut comparators = Vec::new();
        loop {
            let op = match self.peek() {
                TokenKind::Op("<") => CmpOp::Lt,
                TokenKind::Op("<=") => CmpOp::LtE,
                TokenKind::Op(">") => CmpOp::Gt,
                TokenKind::Op(">=") => CmpOp::GtE,
                TokenKind::Op("==") => CmpOp::Eq,
                TokenKind::Op("!=") => CmpOp::NotEq,
                _ => break,
            };
            self.advance();
            ops.push(op);
            comparators.push(self.bitor_expr()?);
        }
        if ops.is_empty() {
            return Ok(left);
        }
        Ok(Expr::new(
            ExprKind::Compare {
                left: Box::new(left),
                ops,
                comparators,
            },
            span,
        ))
    }

    fn binary_level(
        &mut self,
        ops: &[(&'static str, BinOp)],
        next: fn(&mut Self) -> Result<Expr, FrontendError>,
    ) -> Result<Expr, FrontendError> {
        let mut left = next(self)?;
        'outer: loop {
            for (sym, op) in ops {
                if self.is_op(sym) {
                    self.advance();
                    let right = next(self)?;
                    left = Expr::binop(*op, left, right);
                    continue 'outer;
                }
            }
            return Ok(left);
        }
    }

    fn bitor_expr(&mut self) -> Result<Expr, FrontendError> {
        self.binary_level(&[("|", BinOp::BitOr)], Self::bitxor_expr)
    }

    fn bitxor_expr(&mut self) -> Result<Expr, FrontendError> {
        self.binary_level(&[("^", BinOp::BitXor)], Self::bitand_expr)
    }

    fn bitand_expr(&mut self) -> Result<Expr, FrontendError> {
        self.binary_level(&[("&", BinOp::BitAnd)], Self::shift_expr)
    }

    fn shift_expr(&mut self) -> Result<Expr, FrontendError> {
        self.binary_level(&[("<<", BinOp::LShift), (">>", BinOp::RShift)], Self::arith_expr)
    }

    fn arith_expr(&mut self) -> Result<Expr, FrontendError> {
        self.binary_level(&[("+", BinOp::Add), ("-", BinOp::Sub)], Self::term)
    }

    fn term(&mut self) -> Result<Expr, FrontendError> {
        self.binary_level(
            &[
                ("*", BinOp::Mul),
                ("//", BinOp::FloorDiv),
                ("/", BinOp::Div),
                ("%", BinOp::Mod),
            ],
            Self::factor,
        )
    }

    fn factor(&mut self) -> Result<Expr, FrontendError> {
        let span = self.span();
        let op = match self.peek() {
            TokenKind::Op("-") => Some(UnaryOp::Neg),
            TokenKind::Op("+") => Some(UnaryOp::Pos),
            TokenKind::Op("~") => Some(UnaryOp::Invert),
            _ => None,
        };
        if let Some(op) = op {
            self.advance();
            let operand = self.factor()?;
            return Ok(Expr::new(
                ExprKind::Unary {
                    op,
                    operand: Box::new(operand),
                },
                span,
            ));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, FrontendError> {
        let base = self.postfix()?;
        if self.eat_op("**") {
            let exp = self.factor()?;
            return Ok(Expr::binop(BinOp::Pow, base, exp));
        }
        Ok(base)
    }

    fn postfix(&mut self) -> Result<Expr, FrontendError> {
        let mut e = self.atom()?;
        loop {
            if self.eat_delim("(") {
                let mut args = Vec::new();
                while !self.is_delim(")") {
                    if matches!(self.peek(), TokenKind::Ident(_)) && matches!(self.peek_at(1), TokenKind::Op("=")) {
                        return Err(self.unexpected("positional argument (keyword arguments are not supported)"));
                    }
                    args.push(self.expression()?);
                    if !self.eat_delim(",") {
                        break;
                    }
                }
                self.expect_delim(")")?;
                e = Expr::call(e, args);
            } else if self.eat_delim("[") {
                e = self.subscript(e)?;
                self.expect_delim("]")?;
            } else if self.eat_delim(".") {
                let attr = self.expect_ident()?;
                e = Expr::attribute(e, attr);
            } else {
                return Ok(e);
            }
        }
    }

    fn subscript(&mut self, value: Expr) -> Result<Expr, FrontendError> {
        let span = value.span;
        let lower = if self.is_delim(":") {
            None
        } else {
            let idx = self.expression()?;
            if !self.is_delim(":") {
                return Ok(Expr::index(value, idx));
            }
            Some(Box::new(idx))
        };
        self.expect_delim(":")?;
        let upper = if self.is_delim(":") || self.is_delim("]") {
            None
        } else {
            Some(Box::new(self.expression()?))
        };
        let step = if self.eat_delim(":") {
            if self.is_delim("]") {
                None
            } else {
                Some(Box::new(self.expression()?))
            }
        } else {
            None
        };
        Ok(Expr::new(
            ExprKind::Slice {
                value: Box::new(value),
                lower,
                upper,
                step,
            },
            span,
        ))
    }

    fn atom(&mut self) -> Result<Expr, FrontendError> {
        let span = self.span();
        match self.peek().clone() {
            TokenKind::Int(v) => {
                self.advance();
                Ok(Expr::new(ExprKind::Int(v), span))
            }
            TokenKind::Float(v) => {
                self.advance();
                Ok(Expr::new(ExprKind::Float(v), span))
            }
            TokenKind::Str(s) => {
                self.advance();
                let mut s = s;
                // implicit concatenation of adjacent literals
                while let TokenKind::Str(next) = self.peek().clone() {
                    self.advance();
                    s.push_str(&next);
                }
                Ok(Expr::new(ExprKind::Str(s), span))
            }
            TokenKind::Keyword("True") => {
                self.advance();
                Ok(Expr::new(ExprKind::Bool(true), span))
            }
            TokenKind::Keyword("False") => {
                self.advance();
                Ok(Expr::new(ExprKind::Bool(false), span))
            }
            TokenKind::Keyword("None") => {
                self.advance();
                Ok(Expr::name("None", span))
            }
            TokenKind::Ident(n) => {
                self.advance();
                Ok(Expr::name(n, span))
            }
            TokenKind::Delim("(") => {
                self.advance();
                if self.eat_delim(")") {
                    return Ok(Expr::new(ExprKind::Tuple(vec![]), span));
                }
                let first = self.expression()?;
                if self.eat_delim(")") {
                    return Ok(first);
                }
                let mut items = vec![first];
                while self.eat_delim(",") {
                    if self.is_delim(")") {
                        break;
                    }
                    items.push(self.expression()?);
                }
                self.expect_delim(")")?;
                Ok(Expr::new(ExprKind::Tuple(items), span))
            }
            TokenKind::Delim("[") => {
                self.advance();
                if self.eat_delim("]") {
                    return Ok(Expr::new(ExprKind::List(vec![]), span));
                }
                let first = self.expression()?;
                if self.eat_kw("for") {
                    let target = self.expect_ident()?;
                    self.expect_kw("in")?;
                    let iter = self.or_expr()?;
                    if self.is_kw("if") || self.is_kw("for") {
                        return Err(self.unexpected("`]` (only simple comprehensions are supported)"));
                    }
                    self.expect_delim("]")?;
                    return Ok(Expr::new(
                        ExprKind::ListComp {
                            elt: Box::new(first),
                            target,
                            iter: Box::new(iter),
                        },
                        span,
                    ));
                }
                let mut items = vec![first];
                while self.eat_delim(",") {
                    if self.is_delim("]") {
                        break;
                    }
                    items.push(self.expression()?);
                }
                self.expect_delim("]")?;
                Ok(Expr::new(ExprKind::List(items), span))
            }
            _ => Err(self.unexpected("expression")),
        }
    }
}

fn check_target(target: &Expr) -> Result<(), FrontendError> {
    match &target.kind {
        ExprKind::Name(_) | ExprKind::Index { .. } | ExprKind::Slice { .. } | ExprKind::Attribute { .. } => Ok(()),
        ExprKind::Tuple(items) | ExprKind::List(items) => items.iter().try_for_each(check_target),
        _ => Err(FrontendError::Parse {
            span: target.span,
            expected: "assignable target".into(),
            found: "expression".into(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::super::{parse_source, tokenize};
    use super::*;

    fn stmts(src: &str) -> Vec<Stmt> {
        parse_source(src).unwrap().body
    }

    #[test]
    fn chained_comparison_is_one_node() {
        let s = stmts("0 < x < 5\n");
        match &s[0].kind {
            StmtKind::Expr(Expr {
                kind: ExprKind::Compare { ops, comparators, .. },
                ..
            }) => {
                assert_eq!(ops, &vec![CmpOp::Lt, CmpOp::Lt]);
                assert_eq!(comparators.len(), 2);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ternary_assignment() {
        let s = stmts("y = a if c else b\n");
        match &s[0].kind {
            StmtKind::Assign { value, .. } => assert!(matches!(value.kind, ExprKind::IfExp { .. })),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_loop_body_is_error() {
        let err = parse_source("for i in range(len(a)):\n").unwrap_err();
        assert!(matches!(err, FrontendError::Parse { .. }));
    }

    #[test]
    fn precedence() {
        let s = stmts("y = -x ** 2 + a * b\n");
        let StmtKind::Assign { value, .. } = &s[0].kind else { panic!() };
        let ExprKind::BinOp { op: BinOp::Add, left, right } = &value.kind else { panic!("{value:?}") };
        assert!(matches!(left.kind, ExprKind::Unary { op: UnaryOp::Neg, .. }));
        assert!(matches!(right.kind, ExprKind::BinOp { op: BinOp::Mul, .. }));
    }

    #[test]
    fn not_binds_looser_than_comparison() {
        let s = stmts("y = not a < b and c\n");
        let StmtKind::Assign { value, .. } = &s[0].kind else { panic!() };
        let ExprKind::BoolOp { op: BoolOp::And, left, .. } = &value.kind else { panic!() };
        let ExprKind::Unary { op: UnaryOp::Not, operand } = &left.kind else { panic!() };
        assert!(matches!(operand.kind, ExprKind::Compare { .. }));
    }

    #[test]
    fn docstring_captured() {
        let p = parse_source("def f(x):\n    \"\"\"Doc.\"\"\"\n    return x\n").unwrap();
        let f = p.function().unwrap();
        assert_eq!(f.docstring.as_deref(), Some("Doc."));
        assert_eq!(f.body.len(), 1);
    }

    #[test]
    fn elif_chain() {
        let p = parse_source("if a:\n    x = 1\nelif b:\n    x = 2\nelse:\n    x = 3\n").unwrap();
        let StmtKind::If { orelse, .. } = &p.body[0].kind else { panic!() };
        assert!(matches!(orelse[0].kind, StmtKind::If { .. }));
    }

    #[test]
    fn slices() {
        let s = stmts("y = a[1:]\nz = a[::-1]\nw = a[:n:2]\n");
        for st in &s {
            let StmtKind::Assign { value, .. } = &st.kind else { panic!() };
            assert!(matches!(value.kind, ExprKind::Slice { .. }));
        }
    }

    #[test]
    fn parse_expression_rejects_trailing() {
        let toks = tokenize("a + b c").unwrap();
        assert!(parse_expression(&toks).is_err());
    }
}
