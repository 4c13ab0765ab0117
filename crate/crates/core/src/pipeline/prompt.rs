//! Prompt templates and their assembly into chat bundles.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::count_tokens;
use crate::rules::RuleId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TemplateId {
    RefactorRule(RuleId),
    Generation,
    SelfReflection,
    FixCompilationRuntimeError,
    FixFunctionalityError,
    ApiDocSummary,
    ApiDocBaseline,
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TemplateId::RefactorRule(r) => write!(f, "RefactorRule({r})"),
            TemplateId::Generation => f.write_str("Generation"),
            TemplateId::SelfReflection => f.write_str("SelfReflection"),
            TemplateId::FixCompilationRuntimeError => f.write_str("FixCompilationRuntimeError"),
            TemplateId::FixFunctionalityError => f.write_str("FixFunctionalityError"),
            TemplateId::ApiDocSummary => f.write_str("ApiDocSummary"),
            TemplateId::ApiDocBaseline => f.write_str("ApiDocBaseline"),
        }
    }
}

fn template_text(id: TemplateId) -> &'static str {
    macro_rules! t {
        ($name:literal) => {
            include_str!(concat!("../../data/templates/", $name, ".txt"))
        };
    }
    match id {
        TemplateId::RefactorRule(rule) => match rule {
            RuleId::LinearNonLinear => t!("LinearNonLinear"),
            RuleId::DataStructure => t!("DataStructure"),
            RuleId::SyntaxSugar => t!("SyntaxSugar"),
            RuleId::RewriteWhileLoop => t!("RewriteWhileLoop"),
            RuleId::EliminateAdvancedArrayOperations => t!("EliminateAdvancedArrayOperations"),
            RuleId::EliminateBreak => t!("EliminateBreak"),
            RuleId::EliminateContinue => t!("EliminateContinue"),
            RuleId::NestedIfMultipleReturn => t!("NestedIfMultipleReturn"),
            RuleId::ChainedComparison => t!("ChainedComparison"),
            RuleId::ObliviousForm => t!("ObliviousForm"),
        },
        TemplateId::Generation => t!("Generation"),
        TemplateId::SelfReflection => t!("SelfReflection"),
        TemplateId::FixCompilationRuntimeError => t!("FixCompilationRuntimeError"),
        TemplateId::FixFunctionalityError => t!("FixFunctionalityError"),
        TemplateId::ApiDocSummary => t!("ApiDocSummary"),
        TemplateId::ApiDocBaseline => t!("ApiDocBaseline"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl Role {
    pub fn name(self) -> &'static str {
        match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub text: String,
}

/// Template placeholders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Slot {
    Code,
    PythonCode,
    SpdzCode,
    CompilationRuntimeError,
    ApiDoc,
    Description,
}

impl Slot {
    pub const ALL: [Slot; 6] = [
        Slot::Code,
        Slot::PythonCode,
        Slot::SpdzCode,
        Slot::CompilationRuntimeError,
        Slot::ApiDoc,
        Slot::Description,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Slot::Code => "CODE",
            Slot::PythonCode => "PYTHON_CODE",
            Slot::SpdzCode => "SPDZ_CODE",
            Slot::CompilationRuntimeError => "COMPILATION_RUNTIME_ERROR",
            Slot::ApiDoc => "API_DOC",
            Slot::Description => "DESCRIPTION",
        }
    }

    fn from_placeholder(s: &str) -> Option<Slot> {
        if s == "DESCPRIPTION" {
            return Some(Slot::Description);
        }
        Slot::ALL.into_iter().find(|x| x.name() == s)
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemplateError {
    #[error("template {template} needs slot {slot}")]
    MissingSlot { template: TemplateId, slot: Slot },
    #[error("template {template} has no place for demonstrations")]
    NoDemoSection { template: TemplateId },
}

/// A worked Python to MP-SPDZ example, inserted as a prior chat exchange.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Demo {
    pub python: String,
    pub spdz: String,
}

impl Demo {
    /// Splits a demo block of the form `Python:` ... `MP-SPDZ:` ...
    pub fn from_block(text: &str) -> Demo {
        let (py, sp) = text.split_once("MP-SPDZ:\n").unwrap_or((text, ""));
        let py = py.strip_prefix("Python:\n").unwrap_or(py);
        Demo {
            python: dedent(py),
            spdz: dedent(sp),
        }
    }

    fn messages(&self) -> [Message; 2] {
        [
            Message {
                role: Role::User,
                text: format!("Translate the following Python code into MP-SPDZ code.\n```python\n{}```", self.python),
            },
            Message {
                role: Role::Assistant,
                text: format!("```MP-SPDZ\n{}```", self.spdz),
            },
        ]
    }
}

fn dedent(text: &str) -> String {
    let indent = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.len() - l.trim_start().len())
        .min()
        .unwrap_or(0);
    text.lines().map(|l| format!("{}\n", l.get(indent..).unwrap_or("").trim_end())).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub template: TemplateId,
    pub messages: Vec<Message>,
}

impl PromptBundle {
    pub fn token_count(&self) -> usize {
        self.messages.iter().map(|m| count_tokens(&m.text)).sum()
    }

    /// Plain-text transcript, one `role:` header per message.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for m in &self.messages {
            out.push_str(m.role.name());
            out.push_str(":\n");
            out.push_str(&m.text);
            out.push_str("\n\n");
        }
        out
    }

    /// Hex SHA-256 of the transcript with whitespace runs collapsed.
    pub fn fixture_key(&self) -> String {
        let collapsed = self.render().split_whitespace().collect::<Vec<_>>().join(" ");
        let digest = Sha256::digest(collapsed.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

enum Section {
    Turn(Role, String),
    Demos,
}

fn sections(text: &str) -> Vec<Section> {
    let mut out: Vec<Section> = Vec::new();
    for line in text.lines() {
        if let Some(head) = line.strip_prefix("@@ ") {
            out.push(match head.trim() {
                "system" => Section::Turn(Role::System, String::new()),
                "user" => Section::Turn(Role::User, String::new()),
                "assistant" => Section::Turn(Role::Assistant, String::new()),
                "demos" => Section::Demos,
                other => panic!("bad template section {other}"),
            });
        } else if let Some(Section::Turn(_, body)) = out.last_mut() {
            body.push_str(line);
            body.push('\n');
        }
    }
    for s in &mut out {
        if let Section::Turn(_, body) = s {
            body.truncate(body.trim_end_matches('\n').len());
        }
    }
    out
}

/// Replaces `{NAME}` placeholders in a single left-to-right pass so that slot
/// values are never rescanned.
fn fill(template: TemplateId, text: &str, slots: &BTreeMap<Slot, String>) -> Result<String, TemplateError> {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let slot = after.find('}').and_then(|close| Some((Slot::from_placeholder(&after[..close])?, close)));
        match slot {
            Some((slot, close)) => {
                let value = slots.get(&slot).ok_or(TemplateError::MissingSlot { template, slot })?;
                out.push_str(value);
                rest = &after[close + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    Ok(out)
}

/// Builds the chat bundle for `template`. Demonstrations are only accepted by
/// the generation template, where they follow the fixed chat history.
pub fn assemble_prompt(
    template: TemplateId,
    slots: &BTreeMap<Slot, String>,
    demos: &[Demo],
) -> Result<PromptBundle, TemplateError> {
    let parts = sections(template_text(template));
    if !demos.is_empty() && !parts.iter().any(|s| matches!(s, Section::Demos)) {
        return Err(TemplateError::NoDemoSection { template });
    }
    let mut messages = Vec::new();
    for part in parts {
        match part {
            Section::Turn(role, body) => messages.push(Message {
                role,
                text: fill(template, &body, slots)?,
            }),
            Section::Demos => messages.extend(demos.iter().flat_map(Demo::messages)),
        }
    }
    Ok(PromptBundle { template, messages })
}

/// Convenience for the single-slot templates.
pub fn assemble_with_code(template: TemplateId, code: &str) -> Result<PromptBundle, TemplateError> {
    assemble_prompt(template, &BTreeMap::from([(Slot::Code, code.to_string())]), &[])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eliminate_break_bundle() {
        let b = assemble_with_code(TemplateId::RefactorRule(RuleId::EliminateBreak), "x = 1").unwrap();
        assert_eq!(b.messages.len(), 2);
        assert_eq!(b.messages[0].role, Role::System);
        assert!(b.messages[0].text.starts_with("You are an expert to write python"));
        assert!(b.messages[1].text.contains("```\nx = 1\n```"));
        assert!(b.messages[1].text.contains("flag = False"));
        assert!(!b.messages[1].text.contains("{CODE}"));
    }

    #[test]
    fn every_rule_has_a_code_slot() {
        for r in RuleId::ALL {
            let b = assemble_with_code(TemplateId::RefactorRule(r), "MARKER_TEXT").unwrap();
            assert!(b.messages.iter().any(|m| m.text.contains("MARKER_TEXT")), "{r}");
            assert_eq!(b.messages[0].role, Role::System);
        }
    }

    #[test]
    fn functionality_fill_and_missing_slot() {
        let mut slots = BTreeMap::from([(Slot::PythonCode, "def f(x):\n    return x".to_string())]);
        let err = assemble_prompt(TemplateId::FixFunctionalityError, &slots, &[]).unwrap_err();
        assert_eq!(
            err,
            TemplateError::MissingSlot {
                template: TemplateId::FixFunctionalityError,
                slot: Slot::SpdzCode
            }
        );
        slots.insert(Slot::SpdzCode, "def f(x: sfix):\n    return x".into());
        let b = assemble_prompt(TemplateId::FixFunctionalityError, &slots, &[]).unwrap();
        let user = &b.messages[1].text;
        assert!(user.contains("```python\ndef f(x):\n    return x\n```"));
        assert!(user.contains("```MP-SPDZ\ndef f(x: sfix):\n    return x\n```"));
    }

    #[test]
    fn slot_values_are_not_rescanned() {
        let b = assemble_with_code(TemplateId::SelfReflection, "s = '{CODE}'").unwrap();
        assert!(b.messages[1].text.contains("s = '{CODE}'"));
    }

    #[test]
    fn misspelled_description_placeholder_maps_to_description() {
        let slots = BTreeMap::from([
            (Slot::ApiDoc, "doc".to_string()),
            (Slot::Code, "code".to_string()),
            (Slot::Description, "what it does".to_string()),
        ]);
        let b = assemble_prompt(TemplateId::ApiDocBaseline, &slots, &[]).unwrap();
        assert!(b.messages[1].text.contains("\"\nwhat it does\n\""));
    }

    #[test]
    fn demos_become_chat_turns_before_the_task() {
        let demo = Demo::from_block("Python:\n    q = x // 4\nMP-SPDZ:\n    q = mpc_math.floor_fx(x / 4)\n");
        assert_eq!(demo.python, "q = x // 4\n");
        let slots = BTreeMap::from([(Slot::Code, "CODE_HERE".to_string())]);
        let plain = assemble_prompt(TemplateId::Generation, &slots, &[]).unwrap();
        let with = assemble_prompt(TemplateId::Generation, &slots, &[demo]).unwrap();
        assert_eq!(with.messages.len(), plain.messages.len() + 2);
        assert!(with.token_count() > plain.token_count());
        let last = with.messages.last().unwrap();
        assert!(last.text.ends_with("CODE_HERE"));
        let i = with.messages.iter().position(|m| m.text.contains("floor_fx")).unwrap();
        assert_eq!(with.messages[i].role, Role::Assistant);
        assert!(i < with.messages.len() - 3);
    }

    #[test]
    fn demos_rejected_outside_generation() {
        let demo = Demo::from_block("Python:\nx\nMP-SPDZ:\ny\n");
        let err = assemble_prompt(TemplateId::SelfReflection, &BTreeMap::new(), &[demo]).unwrap_err();
        assert!(matches!(err, TemplateError::NoDemoSection { .. }));
    }

    #[test]
    fn fixture_key_ignores_whitespace_layout() {
        let a = assemble_with_code(TemplateId::SelfReflection, "x = 1\n\n").unwrap();
        let mut b = a.clone();
        b.messages[1].text = b.messages[1].text.replace('\n', "  \n ");
        assert_eq!(a.fixture_key(), b.fixture_key());
        let c = assemble_with_code(TemplateId::SelfReflection, "x = 2").unwrap();
        assert_ne!(a.fixture_key(), c.fixture_key());
        assert_eq!(a.fixture_key().len(), 64);
    }

    #[test]
    fn token_count_sums_messages() {
        let b = PromptBundle {
            template: TemplateId::Generation,
            messages: vec![
                Message { role: Role::System, text: "a".repeat(400) },
                Message { role: Role::User, text: "b".repeat(5) },
            ],
        };
        assert_eq!(b.token_count(), 100 + 2);
    }
}
