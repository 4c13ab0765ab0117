use super::ast::Span;
use super::FrontendError;

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Keyword(&'static str),
    Ident(String),
    Int(i64),
    Float(f64),
    Str(String),
    Op(&'static str),
    Delim(&'static str),
    Newline,
    Indent,
    Dedent,
    End,
}

impl TokenKind {
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Keyword(k) => format!("keyword `{k}`"),
            TokenKind::Ident(n) => format!("identifier `{n}`"),
            TokenKind::Int(v) => format!("number `{v}`"),
            TokenKind::Float(v) => format!("number `{v}`"),
            TokenKind::Str(_) => "string".to_string(),
            TokenKind::Op(o) => format!("`{o}`"),
            TokenKind::Delim(d) => format!("`{d}`"),
            TokenKind::Newline => "newline".to_string(),
            TokenKind::Indent => "indent".to_string(),
            TokenKind::Dedent => "dedent".to_string(),
            TokenKind::End => "end of input".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    pub span: Span,
}

const KEYWORDS: &[&str] = &[
    "def", "return", "if", "elif", "else", "for", "in", "while", "break", "continue", "pass",
    "and", "or", "not", "True", "False", "None", "import", "from", "as", "with", "lambda",
    "class", "try", "except", "finally", "raise", "global", "nonlocal", "yield", "del",
    "assert", "is",
];

// Longest first so that maximal munch works with a linear scan.
const OPERATORS: &[&str] = &[
    "**=", "//=", ">>=", "<<=", "**", "//", "<<", ">>", "<=", ">=", "==", "!=", "+=", "-=",
    "*=", "/=", "%=", "&=", "|=", "^=", "->", "+", "-", "*", "/", "%", "<", ">", "=", "&", "|",
    "^", "~",
];

const DELIMITERS: &[&str] = &["(", ")", "[", "]", ",", ":", "."];

/// Splits source text into tokens, converting leading whitespace into
/// indent/dedent tokens. Indentation must use spaces in steps of four.
pub fn tokenize(source: &str) -> Result<Vec<Token>, FrontendError> {
    Lexer::new(source).run()
}

struct Lexer<'a> {
    chars: Vec<char>,
    pos: usize,
    line: u32,
    col: u32,
    tokens: Vec<Token>,
    indents: Vec<u32>,
    depth: usize,
    _src: &'a str,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Self {
            chars: src.chars().collect(),
            pos: 0,
            line: 1,
            col: 1,
            tokens: Vec::new(),
            indents: vec![0],
            depth: 0,
            _src: src,
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn peek_at(&self, off: usize) -> Option<char> {
        self.chars.get(self.pos + off).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn here(&self) -> Span {
        Span::new(self.line, self.col)
    }

    fn err(&self, span: Span, msg: impl Into<String>) -> FrontendError {
        FrontendError::Lex {
            span,
            message: msg.into(),
        }
    }

    fn push(&mut self, kind: TokenKind, lexeme: impl Into<String>, span: Span) {
        self.tokens.push(Token {
            kind,
            lexeme: lexeme.into(),
            span,
        });
    }

    fn last_is_newline_or_start(&self) -> bool {
        matches!(
            self.tokens.last().map(|t| &t.kind),
            None | Some(TokenKind::Newline) | Some(TokenKind::Indent) | Some(TokenKind::Dedent)
        )
    }

    fn run(mut self) -> Result<Vec<Token>, FrontendError> {
        let mut at_line_start = true;
        while self.pos < self.chars.len() {
            if at_line_start && self.depth == 0 {
                at_line_start = false;
                if self.handle_indentation()? {
                    continue;
                }
            }
            let c = match self.peek() {
                Some(c) => c,
                None => break,
            };
            match c {
                ' ' => {
                    self.bump();
                }
                '\t' => return Err(self.err(self.here(), "tab characters are not allowed")),
                '\r' => {
                    self.bump();
                }
                '#' => {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                '\\' if self.peek_at(1) == Some('\n') => {
                    self.bump();
                    self.bump();
                }
                '\n' => {
                    let span = self.here();
                    self.bump();
                    if self.depth == 0 {
                        if !self.last_is_newline_or_start() {
                            self.push(TokenKind::Newline, "\n", span);
                        }
                        at_line_start = true;
                    }
                }
                c if c.is_ascii_digit() || (c == '.' && self.peek_at(1).is_some_and(|d| d.is_ascii_digit())) => {
                    self.number()?
                }
                c if c.is_alphabetic() || c == '_' => self.word(),
                '"' | '\'' => self.string()?,
                _ => self.punct()?,
            }
        }
        let span = self.here();
        if self.depth > 0 {
            return Err(self.err(span, "unclosed bracket at end of input"));
        }
        if !self.last_is_newline_or_start() {
            self.push(TokenKind::Newline, "", span);
        }
        while self.indents.len() > 1 {
            self.indents.pop();
            self.push(TokenKind::Dedent, "", span);
        }
        self.push(TokenKind::End, "", span);
        Ok(self.tokens)
    }

    /// Measures leading spaces; returns true when the line was blank or a
    /// comment (nothing emitted).
    fn handle_indentation(&mut self) -> Result<bool, FrontendError> {
        let mut width = 0u32;
        loop {
            match self.peek() {
                Some(' ') => {
                    self.bump();
                    width += 1;
                }
                Some('\t') => {
                    return Err(self.err(self.here(), "tab characters are not allowed in indentation"))
                }
                _ => break,
            }
        }
        match self.peek() {
            None => return Ok(true),
            Some('\n') => {
                self.bump();
                return Ok(true);
            }
            Some('\r') => {
                self.bump();
                if self.peek() == Some('\n') {
                    self.bump();
                }
                return Ok(true);
            }
            Some('#') => {
                while let Some(c) = self.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
                if self.peek() == Some('\n') {
                    self.bump();
                }
                return Ok(true);
            }
            _ => {}
        }
        let span = Span::new(self.line, 1);
        let current = *self.indents.last().unwrap_or(&0);
        if width > current {
            if width != current + 4 {
                return Err(self.err(span, format!("indentation must increase by 4 spaces, found {}", width - current)));
            }
            self.indents.push(width);
            self.push(TokenKind::Indent, "", span);
        } else if width < current {
            while *self.indents.last().unwrap_or(&0) > width {
                self.indents.pop();
                self.push(TokenKind::Dedent, "", span);
            }
            if *self.indents.last().unwrap_or(&0) != width {
                return Err(self.err(span, "inconsistent dedent"));
            }
        }
        Ok(false)
    }

    fn number(&mut self) -> Result<(), FrontendError> {
        let span = self.here();
        let mut text = String::new();
        let mut is_float = false;
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() || c == '_' {
                text.push(c);
                self.bump();
            } else if c == '.' && !is_float {
                is_float = true;
                text.push(c);
                self.bump();
            } else if (c == 'e' || c == 'E')
                && (self.peek_at(1).is_some_and(|d| d.is_ascii_digit())
                    || (matches!(self.peek_at(1), Some('+') | Some('-'))
                        && self.peek_at(2).is_some_and(|d| d.is_ascii_digit())))
            {
                is_float = true;
                text.push(c);
                self.bump();
                if let Some(sign @ ('+' | '-')) = self.peek() {
                    text.push(sign);
                    self.bump();
                }
            } else {
                break;
            }
        }
        if self.peek().is_some_and(|c| c.is_alphabetic() || c == '_') {
            return Err(self.err(self.here(), "invalid character in number literal"));
        }
        let clean: String = text.chars().filter(|&c| c != '_').collect();
        let kind = if is_float {
            TokenKind::Float(
                clean
                    .parse()
                    .map_err(|_| self.err(span, format!("invalid float literal `{text}`")))?,
            )
        } else {
            TokenKind::Int(
                clean
                    .parse()
                    .map_err(|_| self.err(span, format!("integer literal out of range `{text}`")))?,
            )
        };
        self.push(kind, text, span);
        Ok(())
    }

    fn word(&mut self) {
        let span = self.here();
        let mut text = String::new();
        while let Some(c) = self.peek() {
            if c.is_alphanumeric() || c == '_' {
                text.push(c);
                self.bump();
            } else {
                break;
            }
        }
        let kind = match KEYWORDS.iter().find(|k| **k == text) {
            Some(k) => TokenKind::Keyword(k),
            None => TokenKind::Ident(text.clone()),
        };
        self.push(kind, text, span);
    }

    fn string(&mut self) -> Result<(), FrontendError> {
        let span = self.here();
        let quote = self.bump().unwrap_or('"');
        let triple = self.peek() == Some(quote) && self.peek_at(1) == Some(quote);
        if triple {
            self.bump();
            self.bump();
        }
        let mut value = String::new();
        let mut raw = String::new();
        loop {
            let c = match self.peek() {
                Some(c) => c,
                None => return Err(self.err(span, "unterminated string literal")),
            };
            if c == quote {
                if !triple {
                    self.bump();
                    break;
                }
                if self.peek_at(1) == Some(quote) && self.peek_at(2) == Some(quote) {
                    self.bump();
                    self.bump();
                    self.bump();
                    break;
                }
            }
            if c == '\n' && !triple {
                return Err(self.err(span, "unterminated string literal"));
            }
            self.bump();
            raw.push(c);
            if c == '\\' {
                let esc = self
                    .bump()
                    .ok_or_else(|| self.err(span, "unterminated string literal"))?;
                raw.push(esc);
                match esc {
                    'n' => value.push('\n'),
                    't' => value.push('\t'),
                    '\\' => value.push('\\'),
                    '\'' => value.push('\''),
                    '"' => value.push('"'),
                    '\n' => {}
                    other => {
                        value.push('\\');
                        value.push(other);
                    }
                }
            } else {
                value.push(c);
            }
        }
        self.push(TokenKind::Str(value), raw, span);
        Ok(())
    }

    fn punct(&mut self) -> Result<(), FrontendError> {
        let span = self.here();
        for op in OPERATORS {
            if self.matches(op) {
                for _ in 0..op.chars().count() {
                    self.bump();
                }
                self.push(TokenKind::Op(op), *op, span);
                return Ok(());
            }
        }
        for d in DELIMITERS {
            if self.matches(d) {
                self.bump();
                match *d {
                    "(" | "[" => self.depth += 1,
                    ")" | "]" => {
                        if self.depth == 0 {
                            return Err(self.err(span, format!("unmatched `{d}`")));
                        }
                        self.depth -= 1;
                    }
                    _ => {}
                }
                self.push(TokenKind::Delim(d), *d, span);
                return Ok(());
            }
        }
        let c = self.peek().unwrap_or(' ');
        Err(self.err(span, format!("illegal character `{c}`")))
    }

    fn matches(&self, s: &str) -> bool {
        s.chars()
            .enumerate()
            .all(|(i, c)| self.peek_at(i) == Some(c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        tokenize(src).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn smallest_statement() {
        assert_eq!(
            kinds("x = 1\n"),
            vec![
                TokenKind::Ident("x".into()),
                TokenKind::Op("="),
                TokenKind::Int(1),
                TokenKind::Newline,
                TokenKind::End
            ]
        );
    }

    #[test]
    fn balanced_indent() {
        let k = kinds("if x>0:\n    y=1\n");
        assert_eq!(k.iter().filter(|k| **k == TokenKind::Indent).count(), 1);
        assert_eq!(k.iter().filter(|k| **k == TokenKind::Dedent).count(), 1);
    }

    #[test]
    fn illegal_character_column() {
        match tokenize("x = @1") {
            Err(FrontendError::Lex { span, .. }) => assert_eq!(span, Span::new(1, 5)),
            other => panic!("expected lex error, got {other:?}"),
        }
    }

    #[test]
    fn tabs_rejected() {
        assert!(tokenize("if x:\n\ty = 1\n").is_err());
    }

    #[test]
    fn two_space_indent_rejected() {
        assert!(tokenize("if x:\n  y = 1\n").is_err());
    }

    #[test]
    fn brackets_join_lines() {
        let k = kinds("x = [1,\n     2]\n");
        assert_eq!(k.iter().filter(|k| **k == TokenKind::Newline).count(), 1);
    }

    #[test]
    fn floats_and_exponents() {
        assert_eq!(kinds("1.5e-3")[0], TokenKind::Float(1.5e-3));
        assert_eq!(kinds(".5")[0], TokenKind::Float(0.5));
        assert_eq!(kinds("2.")[0], TokenKind::Float(2.0));
    }

    #[test]
    fn spans_are_monotone() {
        let toks = tokenize("def f(a):\n    for i in range(3):\n        a[i] += 1\n    return a\n").unwrap();
        for w in toks.windows(2) {
            assert!(w[0].span <= w[1].span, "{:?} > {:?}", w[0], w[1]);
        }
    }
}
