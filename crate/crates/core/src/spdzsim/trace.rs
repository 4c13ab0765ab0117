use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    /// Arithmetic or logic instruction; detail is the operator and the
    /// operand kinds.
    Op,
    Cmp,
    Call,
    Alloc,
    Read,
    Write,
    Branch,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            EventKind::Op => "op",
            EventKind::Cmp => "cmp",
            EventKind::Call => "call",
            EventKind::Alloc => "alloc",
            EventKind::Read => "read",
            EventKind::Write => "write",
            EventKind::Branch => "branch",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "op" => EventKind::Op,
            "cmp" => EventKind::Cmp,
            "call" => EventKind::Call,
            "alloc" => EventKind::Alloc,
            "read" => EventKind::Read,
            "write" => EventKind::Write,
            "branch" => EventKind::Branch,
            _ => return None,
        })
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One observable step. Details never contain secret values; a memory
/// access at a secret index records `⊥` in place of the index.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Event {
    pub kind: EventKind,
    pub detail: String,
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.kind, self.detail)
    }
}

/// Append-only event log of one execution.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    events: Vec<Event>,
}

impl Trace {
    pub fn push(&mut self, kind: EventKind, detail: impl Into<String>) {
        self.events.push(Event {
            kind,
            detail: detail.into(),
        });
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// `seq kind detail`, one event per line, `seq` starting at 0.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (i, e) in self.events.iter().enumerate() {
            out.push_str(&format!("{i} {e}\n"));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Trace, String> {
        let mut t = Trace::default();
        for (n, line) in text.lines().enumerate() {
            let mut parts = line.splitn(3, ' ');
            let seq = parts.next().and_then(|s| s.parse::<usize>().ok());
            if seq != Some(n) {
                return Err(format!("line {}: bad sequence number", n + 1));
            }
            let kind = parts
                .next()
                .and_then(EventKind::from_name)
                .ok_or_else(|| format!("line {}: unknown event kind", n + 1))?;
            t.push(kind, parts.next().unwrap_or(""));
        }
        Ok(t)
    }

    /// Index of the first event where `self` and `other` differ.
    pub fn first_divergence(&self, other: &Trace) -> Option<usize> {
        let n = self.events.len().min(other.events.len());
        (0..n)
            .find(|&i| self.events[i] != other.events[i])
            .or((self.events.len() != other.events.len()).then_some(n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dump_round_trips() {
        let mut t = Trace::default();
        t.push(EventKind::Read, "c0 3");
        t.push(EventKind::Op, "mul sfix sfix");
        t.push(EventKind::Branch, "clear 1");
        assert_eq!(t.dump(), "0 read c0 3\n1 op mul sfix sfix\n2 branch clear 1\n");
        assert_eq!(Trace::parse(&t.dump()).unwrap(), t);
    }

    #[test]
    fn divergence_is_positional() {
        let mut a = Trace::default();
        a.push(EventKind::Op, "add sint sint");
        let mut b = a.clone();
        assert_eq!(a.first_divergence(&b), None);
        b.push(EventKind::Op, "mul sint sint");
        assert_eq!(a.first_divergence(&b), Some(1));
        a.push(EventKind::Op, "add sint sint");
        assert_eq!(a.first_divergence(&b), Some(1));
    }
}
