//! The low-level mapping table and its template engine.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use serde::Serialize;
use thiserror::Error;

use crate::frontend::{canonical_callee, parse_expr_source, BoolOp, Expr, ExprKind, UnaryOp};
use crate::pipeline::count_tokens;

pub const DEFAULT_MAPPING_TABLE: &str = include_str!("../../data/mapping.table");
pub const DEFAULT_DEMOS: &str = include_str!("../../data/demos.txt");

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("mapping table line {line}: {message}")]
pub struct TableError {
    pub line: usize,
    pub message: String,
}

/// Which operands an entry applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Qualifier {
    Secret,
    Clear,
    Any,
    Sint,
    Sfix,
    Cint,
    Cfix,
}

impl Qualifier {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "secret" => Qualifier::Secret,
            "clear" => Qualifier::Clear,
            "any" => Qualifier::Any,
            "sint" => Qualifier::Sint,
            "sfix" => Qualifier::Sfix,
            "cint" => Qualifier::Cint,
            "cfix" => Qualifier::Cfix,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Qualifier::Secret => "secret",
            Qualifier::Clear => "clear",
            Qualifier::Any => "any",
            Qualifier::Sint => "sint",
            Qualifier::Sfix => "sfix",
            Qualifier::Cint => "cint",
            Qualifier::Cfix => "cfix",
        }
    }
}

/// Shape of a pattern, used as the lookup key.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum PatternKey {
    Call(String, usize),
    Bin(String),
    And,
    Or,
    Not,
}

impl fmt::Display for PatternKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternKey::Call(p, n) => write!(f, "{p}/{n}"),
            PatternKey::Bin(op) => write!(f, "{op}"),
            PatternKey::And => f.write_str("and"),
            PatternKey::Or => f.write_str("or"),
            PatternKey::Not => f.write_str("not"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MappingEntry {
    pub qualifier: Qualifier,
    pub pattern: String,
    pub template: String,
    pub demo_ref: String,
    pub demo_text: String,
    pub token_cost: usize,
    #[serde(skip)]
    key: PatternKey,
    #[serde(skip)]
    holes: Vec<String>,
    #[serde(skip)]
    body: Expr,
}

impl MappingEntry {
    pub fn key(&self) -> &PatternKey {
        &self.key
    }

    /// Substitutes `args` for the holes of the template.
    pub fn instantiate(&self, args: &[Expr]) -> Expr {
        let mut out = self.body.clone();
        // two-phase substitution so argument text never meets another hole
        for (i, h) in self.holes.iter().enumerate() {
            let span = out.span;
            out = out.substitute(h, &Expr::name(format!("\u{0}{i}"), span));
        }
        for (i, a) in args.iter().enumerate() {
            out = out.substitute(&format!("\u{0}{i}"), a);
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct MappingTable {
    entries: Vec<MappingEntry>,
    index: BTreeMap<PatternKey, Vec<usize>>,
}

fn key_and_holes(p: &Expr) -> Option<(PatternKey, Vec<String>)> {
    let hole = |e: &Expr| e.as_name().map(str::to_string);
    match &p.kind {
        ExprKind::Call { func, args } => {
            let path = canonical_callee(func)?;
            let holes = args.iter().map(hole).collect::<Option<Vec<_>>>()?;
            Some((PatternKey::Call(path, args.len()), holes))
        }
        ExprKind::BinOp { op, left, right } => Some((PatternKey::Bin(op.symbol().to_string()), vec![hole(left)?, hole(right)?])),
        ExprKind::BoolOp { op, left, right } => Some((
            if *op == BoolOp::And { PatternKey::And } else { PatternKey::Or },
            vec![hole(left)?, hole(right)?],
        )),
        ExprKind::Unary { op: UnaryOp::Not, operand } => Some((PatternKey::Not, vec![hole(operand)?])),
        _ => None,
    }
}

/// Names a template may use besides its holes.
const TEMPLATE_GLOBALS: &[&str] = &["math", "mpc_math", "sint", "sfix", "cint", "cfix", "radix_sort", "abs", "min", "max", "sorted", "len", "range"];

fn parse_demos(text: &str) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    let mut current: Option<(String, String)> = None;
    for line in text.lines() {
        if let Some(name) = line.strip_prefix("=== ") {
            if let Some((n, body)) = current.take() {
                out.insert(n, body);
            }
            current = Some((name.trim().to_string(), String::new()));
        } else if let Some((_, body)) = &mut current {
            body.push_str(line);
            body.push('\n');
        }
    }
    if let Some((n, body)) = current {
        out.insert(n, body);
    }
    out
}

impl MappingTable {
    pub fn parse(table: &str, demos: &str) -> Result<Self, TableError> {
        let demos = parse_demos(demos);
        let mut entries = Vec::new();
        let mut index: BTreeMap<PatternKey, Vec<usize>> = BTreeMap::new();
        for (i, raw) in table.lines().enumerate() {
            let line = i + 1;
            let err = |message: String| TableError { line, message };
            let text = raw.trim();
            if text.is_empty() || text.starts_with('#') {
                continue;
            }
            let rest = text.strip_prefix('[').ok_or_else(|| err("expected [qualifier]".into()))?;
            let (qual, rest) = rest.split_once(']').ok_or_else(|| err("unclosed qualifier".into()))?;
            let qualifier = Qualifier::parse(qual.trim()).ok_or_else(|| err(format!("unknown qualifier {qual}")))?;
            let (pattern, rest) = rest.split_once("=>").ok_or_else(|| err("missing =>".into()))?;
            let (template, demo_ref) = rest.rsplit_once('#').ok_or_else(|| err("missing # demo-ref".into()))?;
            let (pattern, template, demo_ref) = (pattern.trim(), template.trim(), demo_ref.trim());
            let p = parse_expr_source(pattern).map_err(|e| err(format!("pattern: {e}")))?;
            let body = parse_expr_source(template).map_err(|e| err(format!("template: {e}")))?;
            let (key, holes) = key_and_holes(&p).ok_or_else(|| err("pattern must be a call or operator over holes".into()))?;
            for n in body.names() {
                if !holes.contains(&n) && !TEMPLATE_GLOBALS.contains(&n.as_str()) {
                    return Err(err(format!("template uses unbound name {n}")));
                }
            }
            let demo_text = demos
                .get(demo_ref)
                .cloned()
                .ok_or_else(|| err(format!("unknown demo {demo_ref}")))?;
            let token_cost = count_tokens(&demo_text);
            index.entry(key.clone()).or_default().push(entries.len());
            entries.push(MappingEntry {
                qualifier,
                pattern: pattern.to_string(),
                template: template.to_string(),
                demo_ref: demo_ref.to_string(),
                demo_text,
                token_cost,
                key,
                holes,
                body,
            });
        }
        Ok(Self { entries, index })
    }

    pub fn default_table() -> &'static MappingTable {
        static TABLE: OnceLock<MappingTable> = OnceLock::new();
        TABLE.get_or_init(|| MappingTable::parse(DEFAULT_MAPPING_TABLE, DEFAULT_DEMOS).expect("shipped mapping table parses"))
    }

    pub fn entries(&self) -> &[MappingEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entry(&self, id: usize) -> &MappingEntry {
        &self.entries[id]
    }

    /// First entry for `key` whose qualifier is in `quals`, tried in order.
    pub fn lookup(&self, key: &PatternKey, quals: &[Qualifier]) -> Option<usize> {
        let ids = self.index.get(key)?;
        quals
            .iter()
            .find_map(|q| ids.iter().copied().find(|&i| self.entries[i].qualifier == *q))
    }

    pub fn has_key(&self, key: &PatternKey) -> bool {
        self.index.contains_key(key)
    }
}

/// Lookup key of an expression node, if it is a call or operator.
pub fn key_of(e: &Expr) -> Option<PatternKey> {
    match &e.kind {
        ExprKind::Call { func, args } => Some(PatternKey::Call(canonical_callee(func)?, args.len())),
        ExprKind::BinOp { op, .. } => Some(PatternKey::Bin(op.symbol().to_string())),
        ExprKind::BoolOp { op: BoolOp::And, .. } => Some(PatternKey::And),
        ExprKind::BoolOp { op: BoolOp::Or, .. } => Some(PatternKey::Or),
        ExprKind::Unary { op: UnaryOp::Not, .. } => Some(PatternKey::Not),
        _ => None,
    }
}

#[cfg(test)]
fn render(e: &Expr) -> String {
    crate::frontend::render_expr(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_table_parses_with_costs() {
        let t = MappingTable::default_table();
        assert!(t.len() > 60);
        for e in t.entries() {
            assert_eq!(e.token_cost, e.demo_text.len().div_ceil(4));
            assert!(e.token_cost > 0);
        }
    }

    #[test]
    fn every_entry_round_trips_through_the_engine() {
        for e in MappingTable::default_table().entries() {
            let p = parse_expr_source(&e.pattern).unwrap();
            let (_, holes) = key_and_holes(&p).unwrap();
            let args: Vec<Expr> = holes.iter().map(|h| Expr::name(h.clone(), p.span)).collect();
            let out = e.instantiate(&args);
            assert_eq!(render(&out), render(&parse_expr_source(&e.template).unwrap()), "{}", e.pattern);
            assert_eq!(parse_expr_source(&render(&out)).unwrap(), out);
        }
    }

    #[test]
    fn substitution_does_not_capture() {
        let t = MappingTable::default_table();
        let id = t.lookup(&PatternKey::Call("min".into(), 2), &[Qualifier::Secret]).unwrap();
        let args = [parse_expr_source("y").unwrap(), parse_expr_source("x").unwrap()];
        assert_eq!(render(&t.entry(id).instantiate(&args)), "(y < x).if_else(y, x)");
    }

    #[test]
    fn rejects_unbound_template_names() {
        let err = MappingTable::parse("[any] f(x) => g(x) # d\n", "=== d\nx\n").unwrap_err();
        assert!(err.message.contains("unbound name g"), "{err}");
        let err = MappingTable::parse("[any] len(x) => len(x) # nope\n", "").unwrap_err();
        assert!(err.message.contains("unknown demo"));
    }
}
