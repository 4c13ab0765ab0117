use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::frontend::{load_program, FrontendError};
use crate::pyexec::TestCase;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Array,
    Loop,
    Branch,
    Math,
    Numpy,
    Syntax,
}

impl Split {
    pub const ALL: [Split; 6] = [Split::Array, Split::Loop, Split::Branch, Split::Math, Split::Numpy, Split::Syntax];

    pub fn name(self) -> &'static str {
        match self {
            Split::Array => "array",
            Split::Loop => "loop",
            Split::Branch => "branch",
            Split::Math => "math",
            Split::Numpy => "numpy",
            Split::Syntax => "syntax",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusEntry {
    pub id: String,
    pub split: Split,
    pub docstring: String,
    pub source: String,
    pub cases: Vec<TestCase>,
    /// Hand-written MP-SPDZ reference, when one exists.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
    /// Parameters that are public inputs.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub clear: Vec<String>,
}

impl CorpusEntry {
    pub fn clear_set(&self) -> BTreeSet<String> {
        self.clear.iter().cloned().collect()
    }
}

/// Minimum number of test cases per entry.
pub const MIN_CASES: usize = 3;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("corpus is empty")]
    Empty,
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("duplicate id {0}")]
    DuplicateId(String),
    #[error("entry {id}: source outside the subset: {error}")]
    NotSubset { id: String, error: FrontendError },
    #[error("entry {id}: {found} test case(s), need at least {MIN_CASES}")]
    TooFewCases { id: String, found: usize },
}

/// Parses JSONL text, one entry per non-blank line.
pub fn parse_corpus(text: &str) -> Result<Vec<CorpusEntry>, CorpusError> {
    let mut out = Vec::new();
    let mut ids = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let e: CorpusEntry = serde_json::from_str(line).map_err(|e| CorpusError::Malformed {
            line: i + 1,
            message: e.to_string(),
        })?;
        if !ids.insert(e.id.clone()) {
            return Err(CorpusError::DuplicateId(e.id));
        }
        if let Err(error) = load_program(&e.source) {
            return Err(CorpusError::NotSubset { id: e.id, error });
        }
        if e.cases.len() < MIN_CASES {
            return Err(CorpusError::TooFewCases {
                found: e.cases.len(),
                id: e.id,
            });
        }
        out.push(e);
    }
    if out.is_empty() {
        return Err(CorpusError::Empty);
    }
    Ok(out)
}

pub fn load_corpus(path: &Path) -> Result<Vec<CorpusEntry>, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_corpus(&text)
}

/// The corpus shipped with the crate.
pub fn bundled_corpus() -> Vec<CorpusEntry> {
    parse_corpus(include_str!("../../data/corpus/corpus.jsonl")).expect("bundled corpus is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    const CASES: &str = r#"[{"inputs":[1],"expected":1},{"inputs":[2],"expected":2},{"inputs":[3],"expected":3}]"#;

    fn line(id: &str, src: &str) -> String {
        format!(r#"{{"id":"{id}","split":"branch","docstring":"d","source":{},"cases":{CASES}}}"#, serde_json::to_string(src).unwrap())
    }

    #[test]
    fn parses_entries() {
        let text = format!("{}\n\n{}\n", line("a", "def f(x):\n    return x\n"), line("b", "def f(x):\n    return x\n"));
        let c = parse_corpus(&text).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c[1].split, Split::Branch);
        assert!(c[0].clear.is_empty());
    }

    #[test]
    fn rejects_bad_corpora() {
        assert!(matches!(parse_corpus("\n  \n"), Err(CorpusError::Empty)));
        let dup = format!("{}\n{}\n", line("a", "def f(x):\n    return x\n"), line("a", "def f(x):\n    return x\n"));
        assert!(matches!(parse_corpus(&dup), Err(CorpusError::DuplicateId(id)) if id == "a"));
        let bad = line("c", "def f(x):\n    return {x: 1}\n");
        assert!(matches!(parse_corpus(&bad), Err(CorpusError::NotSubset { .. })));
        let few = r#"{"id":"d","split":"math","docstring":"","source":"def f(x):\n    return x\n","cases":[]}"#;
        assert!(matches!(parse_corpus(few), Err(CorpusError::TooFewCases { found: 0, .. })));
        assert!(matches!(parse_corpus("{"), Err(CorpusError::Malformed { line: 1, .. })));
    }

    #[test]
    fn bundled_corpus_shape() {
        let c = bundled_corpus();
        assert!(c.len() >= 60);
        for s in Split::ALL {
            assert!(c.iter().filter(|e| e.split == s).count() >= 10, "{s}");
        }
    }
}
