//! Translation pipeline: refactoring, mapping, rectification and the
//! execution-feedback repair loop.
//!
//! The deterministic provider runs every stage with the rule engine and
//! never consults a model. It still assembles the prompts a model-backed run
//! would send so that token budgets can be compared across configurations.
//! Mock and remote providers send those prompts and use the replies.

mod config;
mod prompt;
mod provider;
mod repair;

pub use config::{ConfigError, FixedPoint, PatternMatch, PipelineConfig};
pub use prompt::{assemble_prompt, assemble_with_code, Demo, Message, PromptBundle, Role, Slot, TemplateError, TemplateId};
pub use provider::{
    extract_code, load_fixtures, parse_chat_response, provider_call, Completion, FixtureRecord, Provider,
    ProviderError, ProviderKind, RateLimiter, Usage,
};
pub use repair::repair;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::emit::{
    assign_secrecy_types, emit_source, map_names_with, rectify, EmitError, Interface, Mapped, MappingTable, SpdzProgram,
};
use crate::frontend::{load_program, render, FrontendError, Program};
use crate::pyexec::{check_equivalence, check_programs, TestCase};
use crate::rules::{apply_rule, detect_patterns_with, refactor_with, Cfp, PatternReport, RefactorError, RuleId};
use crate::spdzsim::{
    classify_failure, default_tolerance, exec, lint, CompileError, FailureClass, SimConfig};

/// Token count used for all budget accounting: one token per four bytes,
/// rounded up.
pub fn count_tokens(text: &str) -> usize {
    text.len().div_ceil(4)
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("source: {0}")]
    Source(#[from] FrontendError),
    #[error("refactoring: {0}")]
    Refactor(#[from] RefactorError),
    #[error("refactored program is not equivalent to the source: {diff}")]
    Equivalence { diff: String },
    #[error("emission: {0}")]
    Emit(#[from] EmitError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("unusable {stage} reply: {message}")]
    Reply { stage: &'static str, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StageTokens {
    pub prompt: usize,
    pub completion: usize,
    pub calls: usize,
}

impl StageTokens {
    fn add(&mut self, prompt: usize, completion: usize) {
        self.prompt += prompt;
        self.completion += completion;
        self.calls += 1;
    }

    fn record(&mut self, bundle: &PromptBundle, reply: &Completion) {
        match reply.usage {
            Some(u) => self.add(u.prompt_tokens, u.completion_tokens),
            None => self.add(bundle.token_count(), count_tokens(&reply.text)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TokenUsage {
    pub refactor: StageTokens,
    pub generation: StageTokens,
    pub repair: StageTokens,
}

impl TokenUsage {
    pub fn prompt_total(&self) -> usize {
        self.refactor.prompt + self.generation.prompt + self.repair.prompt
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attempt {
    pub program: String,
    pub class: FailureClass,
    /// Per test case, in order; empty when the program did not compile.
    pub cases: Vec<FailureClass>,
    pub feedback: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationOutcome {
    pub patterns: PatternReport,
    pub cfp: String,
    /// Program before any repair.
    pub emitted: String,
    /// Last attempted program.
    pub program: String,
    pub attempts: Vec<Attempt>,
    pub verdict: Verdict,
    pub tokens: TokenUsage,
}

impl TranslationOutcome {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// Class of the last attempt.
    pub fn final_class(&self) -> FailureClass {
        self.attempts.last().map(|a| a.class).unwrap_or(FailureClass::CompileRuntimeError)
    }
}

/// Per-call knobs beyond the configuration.
#[derive(Default, Clone, Copy)]
pub struct TranslateOptions<'a> {
    /// Mapping table used instead of the shipped one.
    pub table: Option<&'a MappingTable>,
    /// Applied to the first emitted program before it is checked.
    pub inject: Option<&'a (dyn Fn(SpdzProgram) -> SpdzProgram + Sync)>,
}

/// A configured pipeline, shareable across threads.
pub struct Translator {
    pub config: PipelineConfig,
    provider: Provider,
}

impl Translator {
    pub fn new(config: PipelineConfig) -> Result<Self, PipelineError> {
        let provider = Provider::new(&config.provider)?;
        Ok(Self { config, provider })
    }

    fn llm(&self) -> bool {
        !self.config.provider.is_deterministic()
    }

    fn call(&self, bundle: &PromptBundle) -> Result<Completion, PipelineError> {
        Ok(provider_call(bundle, &self.provider, self.config.temperature)?)
    }

    pub fn translate(
        &self,
        source: &str,
        cases: &[TestCase],
        clear: &BTreeSet<String>,
        opts: TranslateOptions<'_>,
    ) -> Result<TranslationOutcome, PipelineError> {
        let program = load_program(source)?;
        let f = program.function().ok_or(RefactorError::NoFunction)?;
        let iface = Interface::from_cases(f, clear, cases);
        let table = opts.table.unwrap_or_else(|| MappingTable::default_table());
        let patterns = detect_patterns_with(&program, &iface);
        let mut tokens = TokenUsage::default();

        let (canonical, cfp) = self.refactor(&program, &iface, cases, &mut tokens)?;
        let cfp_text = render(&canonical);
        let spdz = self.generate(&canonical, cfp, &iface, clear, table, &mut tokens)?;
        let mut current = match opts.inject {
            Some(inject) => inject(spdz),
            None => spdz,
        };
        let emitted = emit_source(&current);

        let sim = self.config.sim_config();
        let mut attempts = Vec::new();
        loop {
            let (attempt, faults) = check_attempt(&current, cases, &sim);
            let class = attempt.class;
            let feedback = attempt.feedback.clone().unwrap_or_default();
            attempts.push(attempt);
            if class == FailureClass::Pass || attempts.len() > self.config.max_feedback as usize {
                break;
            }
            let next = self.repair_step(source, &current, class, &feedback, &faults, &mut tokens)?;
            if !self.llm() && next == current {
                break;
            }
            current = next;
        }
        let verdict = if attempts.last().is_some_and(|a| a.class == FailureClass::Pass) {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
        Ok(TranslationOutcome {
            patterns,
            cfp: cfp_text,
            emitted,
            program: emit_source(&current),
            attempts,
            verdict,
            tokens,
        })
    }

    /// Returns the refactored program and, when the rule engine produced it,
    /// its certificate-carrying form.
    fn refactor(
        &self,
        program: &Program,
        iface: &Interface,
        cases: &[TestCase],
        tokens: &mut TokenUsage,
    ) -> Result<(Program, Option<Cfp>), PipelineError> {
        let only_detected = self.config.pattern_match.is_on();
        if !self.llm() {
            tokens.refactor = refactor_accounting(program, iface, only_detected);
            let cfp = refactor_with(program, iface)?;
            let report = check_equivalence(program, &cfp, cases);
            if !report.all_passed() {
                return Err(PipelineError::Equivalence {
                    diff: report.first_failure().unwrap_or_default(),
                });
            }
            return Ok((cfp.ast.clone(), Some(cfp)));
        }
        let mut current = program.clone();
        for rule in RuleId::PASS_ORDER {
            if only_detected && !detect_patterns_with(&current, iface).applicable(rule) {
                continue;
            }
            let bundle = assemble_with_code(TemplateId::RefactorRule(rule), render(&current).trim_end())?;
            let reply = self.call(&bundle)?;
            tokens.refactor.record(&bundle, &reply);
            current = load_program(&extract_code(&reply.text)).map_err(|e| PipelineError::Reply {
                stage: "refactoring",
                message: e.to_string(),
            })?;
        }
        let report = check_programs(program, &current, cases, true);
        if !report.all_passed() {
            return Err(PipelineError::Equivalence {
                diff: report.first_failure().unwrap_or_default(),
            });
        }
        Ok((current, None))
    }

    /// Maps the canonical program with the table. A model-backed run falls
    /// back to the generation prompt when the rule engine cannot map it.
    fn generate(
        &self,
        program: &Program,
        cfp: Option<Cfp>,
        iface: &Interface,
        clear: &BTreeSet<String>,
        table: &MappingTable,
        tokens: &mut TokenUsage,
    ) -> Result<SpdzProgram, PipelineError> {
        let text = render(program);
        let mapped = (|| -> Result<Mapped, PipelineError> {
            let cfp = match cfp {
                Some(c) => c,
                None => refactor_with(program, iface)?,
            };
            let typed = assign_secrecy_types(&cfp, clear).map_err(EmitError::from)?;
            Ok(map_names_with(&typed, table).map_err(EmitError::from)?)
        })();
        let raw = match mapped {
            Ok(Mapped { program: raw, fired }) => {
                if !self.llm() {
                    let bundle = generation_bundle(&text, &self.demos(table, &fired))?;
                    tokens.generation.add(bundle.token_count(), count_tokens(&emit_source(&raw)));
                }
                raw
            }
            Err(_) if self.llm() => {
                let bundle = generation_bundle(&text, &self.demos(table, &fired_by_keys(program, table)))?;
                let reply = self.call(&bundle)?;
                tokens.generation.record(&bundle, &reply);
                SpdzProgram::parse(&extract_code(&reply.text)).map_err(|e| PipelineError::Reply {
                    stage: "generation",
                    message: e.to_string(),
                })?
            }
            Err(e) => return Err(e),
        };
        let out = rectify(&raw);
        if !self.llm() {
            let reflect = assemble_with_code(TemplateId::SelfReflection, emit_source(&raw).trim_end())?;
            tokens.generation.add(reflect.token_count(), count_tokens(&emit_source(&out)));
        }
        Ok(out)
    }

    /// Demonstrations for the generation prompt: those of the entries that
    /// fired, or every demonstration when pattern matching is off.
    fn demos(&self, table: &MappingTable, fired: &[usize]) -> Vec<Demo> {
        let ids: Vec<usize> = if self.config.pattern_match.is_on() {
            fired.to_vec()
        } else {
            (0..table.len()).collect()
        };
        let mut seen = BTreeSet::new();
        ids.into_iter()
            .map(|i| table.entry(i))
            .filter(|e| seen.insert(e.demo_ref.clone()))
            .map(|e| Demo::from_block(&e.demo_text))
            .collect()
    }

    fn repair_step(
        &self,
        source: &str,
        current: &SpdzProgram,
        class: FailureClass,
        feedback: &str,
        faults: &[CompileError],
        tokens: &mut TokenUsage,
    ) -> Result<SpdzProgram, PipelineError> {
        let mut slots = BTreeMap::from([
            (Slot::PythonCode, source.trim_end().to_string()),
            (Slot::SpdzCode, emit_source(current).trim_end().to_string()),
        ]);
        let template = if class == FailureClass::CompileRuntimeError {
            slots.insert(Slot::CompilationRuntimeError, feedback.to_string());
            TemplateId::FixCompilationRuntimeError
        } else {
            TemplateId::FixFunctionalityError
        };
        let bundle = assemble_prompt(template, &slots, &[])?;
        if !self.llm() {
            let next = if class == FailureClass::CompileRuntimeError {
                repair(current, faults)
            } else {
                current.clone()
            };
            tokens.repair.add(bundle.token_count(), count_tokens(&emit_source(&next)));
            return Ok(next);
        }
        let reply = self.call(&bundle)?;
        tokens.repair.record(&bundle, &reply);
        let text = extract_code(&reply.text);
        Ok(match SpdzProgram::parse(&text) {
            Ok(p) => rectify(&p),
            // keep the unparsable reply visible as the next attempt
            Err(_) => SpdzProgram {
                ast: Program::new(Vec::new()),
            },
        })
    }
}

fn generation_bundle(cfp_text: &str, demos: &[Demo]) -> Result<PromptBundle, TemplateError> {
    assemble_prompt(
        TemplateId::Generation,
        &BTreeMap::from([(Slot::Code, cfp_text.trim_end().to_string())]),
        demos,
    )
}

/// Table entries whose pattern key occurs anywhere in `program`.
fn fired_by_keys(program: &Program, table: &MappingTable) -> Vec<usize> {
    let mut keys = BTreeSet::new();
    program.walk_exprs(&mut |e| {
        if let Some(k) = crate::emit::key_of(e) {
            keys.insert(k);
        }
    });
    (0..table.len()).filter(|&i| keys.contains(table.entry(i).key())).collect()
}

/// Budget of the per-rule refactoring prompts. With pattern matching only
/// rules detected on the current program are prompted; without it every
/// rule is. The program advances through the applicable rules in pass order.
pub fn refactor_accounting(program: &Program, iface: &Interface, only_detected: bool) -> StageTokens {
    let mut out = StageTokens::default();
    let mut current = program.clone();
    for rule in RuleId::PASS_ORDER {
        let applicable = detect_patterns_with(&current, iface).applicable(rule);
        if only_detected && !applicable {
            continue;
        }
        let bundle = assemble_with_code(TemplateId::RefactorRule(rule), render(&current).trim_end())
            .expect("rule templates take only CODE");
        if applicable {
            if let Ok(next) = apply_rule(rule, &current, iface) {
                current = next;
            }
        }
        out.add(bundle.token_count(), count_tokens(&render(&current)));
    }
    out
}

/// Lints and runs `spdz` on every case. Returns the attempt record and the
/// compile faults, if any.
pub fn check_attempt(spdz: &SpdzProgram, cases: &[TestCase], sim: &SimConfig) -> (Attempt, Vec<CompileError>) {
    let program = emit_source(spdz);
    let faults = lint(spdz);
    if spdz.function().is_none() {
        let feedback = "no function definition in the program".to_string();
        return (
            Attempt {
                program,
                class: FailureClass::CompileRuntimeError,
                cases: Vec::new(),
                feedback: Some(feedback),
            },
            faults,
        );
    }
    if !faults.is_empty() {
        let feedback = faults.iter().map(|f| f.to_string()).collect::<Vec<_>>().join("\n");
        return (
            Attempt {
                program,
                class: FailureClass::CompileRuntimeError,
                cases: Vec::new(),
                feedback: Some(feedback),
            },
            faults,
        );
    }
    let tol = default_tolerance(sim.f);
    let mut classes = Vec::with_capacity(cases.len());
    let mut runtime = None;
    let mut logic = None;
    for (i, case) in cases.iter().enumerate() {
        let out = exec(spdz, &case.inputs, sim);
        let class = classify_failure(&out, case, tol);
        match (&out.result, class) {
            (Err(e), _) if runtime.is_none() => runtime = Some(format!("case {i}: {e}")),
            (Ok(v), FailureClass::LogicError) if logic.is_none() => {
                logic = Some(format!("case {i}: expected {}, got {}", case.expected, v.to_py()))
            }
            _ => {}
        }
        classes.push(class);
    }
    let (class, feedback) = match (runtime, logic) {
        (Some(r), _) => (FailureClass::CompileRuntimeError, Some(r)),
        (None, Some(l)) => (FailureClass::LogicError, Some(l)),
        (None, None) => (FailureClass::Pass, None),
    };
    (
        Attempt {
            program,
            class,
            cases: classes,
            feedback,
        },
        Vec::new(),
    )
}

/// Translates `source` with every parameter secret and the shipped table.
pub fn translate(source: &str, cases: &[TestCase], config: &PipelineConfig) -> Result<TranslationOutcome, PipelineError> {
    Translator::new(config.clone())?.translate(source, cases, &BTreeSet::new(), TranslateOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emit::{DEFAULT_DEMOS, DEFAULT_MAPPING_TABLE};
    use crate::frontend::{map_block_exprs, ExprKind, StmtKind};
    use crate::pyexec::{run, Comparison, PyValue};
    use std::io::Write;

    const BREAK_SRC: &str =
        "def f(a):\n    for i in range(len(a)):\n        if a[i] > 2:\n            break\n        a[i] += 1\n    return a\n";
    const SQRT_SRC: &str = "import math\ndef f(x):\n    if x > 0:\n        y = math.sqrt(x)\n    else:\n        y = math.sqrt(-x)\n    return y\n";

    fn cases(src: &str, inputs: &[Vec<PyValue>]) -> Vec<TestCase> {
        let p = load_program(src).unwrap();
        inputs
            .iter()
            .map(|i| TestCase {
                inputs: i.clone(),
                expected: run(&p, i).unwrap(),
                comparison: Comparison::Exact,
            })
            .collect()
    }

    fn break_cases() -> Vec<TestCase> {
        cases(BREAK_SRC, &[vec![PyValue::ints(&[1, 2, 3, 0])], vec![PyValue::ints(&[5, 1])], vec![PyValue::ints(&[0, 0, 0])]])
    }

    fn sqrt_cases() -> Vec<TestCase> {
        cases(SQRT_SRC, &[vec![PyValue::Real(4.0)], vec![PyValue::Real(-2.25)], vec![PyValue::Real(0.5)]])
    }

    fn translator(pm: PatternMatch) -> Translator {
        Translator::new(PipelineConfig {
            pattern_match: pm,
            ..PipelineConfig::default()
        })
        .unwrap()
    }

    fn run_with(src: &str, cases: &[TestCase], opts: TranslateOptions<'_>) -> TranslationOutcome {
        translator(PatternMatch::On).translate(src, cases, &BTreeSet::new(), opts).unwrap()
    }

    #[test]
    fn break_program_passes_first_time() {
        let out = translate(BREAK_SRC, &break_cases(), &PipelineConfig::default()).unwrap();
        assert!(out.passed(), "{:#?}", out.attempts);
        assert_eq!(out.attempts.len(), 1);
        assert_eq!(out.tokens.repair, StageTokens::default());
        assert!(out.patterns.applicable(RuleId::EliminateBreak));
        assert!(!out.cfp.contains("break"));
    }

    #[test]
    fn deterministic_mode_is_reproducible() {
        let a = serde_json::to_string(&translate(SQRT_SRC, &sqrt_cases(), &PipelineConfig::default()).unwrap()).unwrap();
        let b = serde_json::to_string(&translate(SQRT_SRC, &sqrt_cases(), &PipelineConfig::default()).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mutated_table_repaired_on_second_attempt() {
        let text = DEFAULT_MAPPING_TABLE.replace("=> mpc_math.sqrt(x)", "=> mpc_math.sqroot(x)");
        let table = MappingTable::parse(&text, DEFAULT_DEMOS).unwrap();
        let out = run_with(
            SQRT_SRC,
            &sqrt_cases(),
            TranslateOptions {
                table: Some(&table),
                inject: None,
            },
        );
        assert!(out.emitted.contains("sqroot"));
        assert_eq!(out.attempts[0].class, FailureClass::CompileRuntimeError);
        assert!(out.attempts[0].feedback.as_deref().unwrap().contains("sqroot"));
        assert!(out.passed());
        assert_eq!(out.attempts.len(), 2);
        assert!(out.tokens.repair.prompt > 0);
    }

    #[test]
    fn deleted_imports_repaired() {
        let strip = |mut p: SpdzProgram| {
            p.ast.body.retain(|s| !matches!(s.kind, StmtKind::Import(_) | StmtKind::FromImport { .. }));
            p
        };
        let out = run_with(
            SQRT_SRC,
            &sqrt_cases(),
            TranslateOptions {
                table: None,
                inject: Some(&strip),
            },
        );
        assert!(!out.emitted.contains("import"));
        assert!(out.passed());
        assert_eq!(out.attempts.len(), 2);
    }

    fn invert_first_comparison(p: SpdzProgram) -> SpdzProgram {
        let mut done = false;
        let mut ast = p.ast;
        let body = std::mem::take(&mut ast.body);
        ast.body = map_block_exprs(body, &mut |mut e| {
            if let ExprKind::Compare { ops, .. } = &mut e.kind {
                if !done {
                    ops[0] = ops[0].negated();
                    done = true;
                }
            }
            e
        });
        SpdzProgram { ast }
    }

    #[test]
    fn logic_error_left_unrepaired() {
        let out = run_with(
            BREAK_SRC,
            &break_cases(),
            TranslateOptions {
                table: None,
                inject: Some(&invert_first_comparison),
            },
        );
        assert!(!out.passed());
        assert_eq!(out.final_class(), FailureClass::LogicError);
        assert_eq!(out.attempts.len(), 1);
        assert_eq!(out.program, out.emitted);
    }

    #[test]
    fn attempts_bounded_by_feedback_budget() {
        for budget in 0..3 {
            let t = Translator::new(PipelineConfig {
                max_feedback: budget,
                ..PipelineConfig::default()
            })
            .unwrap();
            let text = DEFAULT_MAPPING_TABLE.replace("=> mpc_math.sqrt(x)", "=> mpc_math.sqroot(x)");
            let table = MappingTable::parse(&text, DEFAULT_DEMOS).unwrap();
            let out = t
                .translate(
                    SQRT_SRC,
                    &sqrt_cases(),
                    &BTreeSet::new(),
                    TranslateOptions {
                        table: Some(&table),
                        inject: None,
                    },
                )
                .unwrap();
            assert!(out.attempts.len() <= 1 + budget as usize);
            assert_eq!(out.passed(), budget >= 1);
        }
    }

    #[test]
    fn pattern_matching_never_costs_more_tokens() {
        for (src, cs) in [(BREAK_SRC, break_cases()), (SQRT_SRC, sqrt_cases())] {
            let on = translator(PatternMatch::On).translate(src, &cs, &BTreeSet::new(), TranslateOptions::default()).unwrap();
            let off = translator(PatternMatch::Off).translate(src, &cs, &BTreeSet::new(), TranslateOptions::default()).unwrap();
            assert!(on.tokens.refactor.prompt < off.tokens.refactor.prompt);
            assert!(on.tokens.generation.prompt < off.tokens.generation.prompt);
            assert_eq!(on.program, off.program);
            assert_eq!(off.tokens.refactor.calls, RuleId::ALL.len());
        }
    }

    #[test]
    fn refactor_accounting_counts_detected_rules_only() {
        let p = load_program(BREAK_SRC).unwrap();
        let iface = Interface::default();
        let on = refactor_accounting(&p, &iface, true);
        let off = refactor_accounting(&p, &iface, false);
        assert!(on.calls >= 1 && on.calls < off.calls);
        let one = assemble_with_code(TemplateId::RefactorRule(RuleId::EliminateBreak), render(&p).trim_end()).unwrap();
        assert!(on.prompt >= one.token_count());
    }

    #[test]
    fn non_subset_source_is_rejected() {
        let err = translate("def f(x):\n    return {x: 1}\n", &[], &PipelineConfig::default()).unwrap_err();
        assert!(matches!(err, PipelineError::Source(_)), "{err}");
    }

    #[test]
    fn mock_provider_repairs_a_logic_error() {
        let src = "def f(a, b):\n    if a < b:\n        return b - a\n    return a - b\n";
        let cs = cases(src, &[vec![PyValue::int(3), PyValue::int(5)], vec![PyValue::int(9), PyValue::int(-2)], vec![PyValue::int(1), PyValue::int(1)]]);
        let det = run_with(
            src,
            &cs,
            TranslateOptions {
                table: None,
                inject: Some(&invert_first_comparison),
            },
        );
        assert_eq!(det.final_class(), FailureClass::LogicError);
        let good = translate(src, &cs, &PipelineConfig::default()).unwrap().program;
        let slots = BTreeMap::from([
            (Slot::PythonCode, src.trim_end().to_string()),
            (Slot::SpdzCode, det.emitted.trim_end().to_string()),
        ]);
        let bundle = assemble_prompt(TemplateId::FixFunctionalityError, &slots, &[]).unwrap();
        let usage = Usage {
            prompt_tokens: 321,
            completion_tokens: 45,
        };
        let rec = FixtureRecord::for_bundle(&bundle, format!("Fixed:\n```python\n{good}```\n"), Some(usage));
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "{}", serde_json::to_string(&rec).unwrap()).unwrap();

        // the refactoring stage prompts too; answer it with the rule engine's output
        let program = load_program(src).unwrap();
        let iface = Interface::from_cases(program.function().unwrap(), &BTreeSet::new(), &cs);
        let mut current = program.clone();
        for rule in RuleId::PASS_ORDER {
            if !detect_patterns_with(&current, &iface).applicable(rule) {
                continue;
            }
            let b = assemble_with_code(TemplateId::RefactorRule(rule), render(&current).trim_end()).unwrap();
            current = apply_rule(rule, &current, &iface).unwrap();
            let r = FixtureRecord::for_bundle(&b, format!("```\n{}```", render(&current)), None);
            writeln!(file, "{}", serde_json::to_string(&r).unwrap()).unwrap();
        }
        file.flush().unwrap();
        let t = Translator::new(PipelineConfig {
            provider: ProviderKind::Mock {
                fixture: file.path().to_path_buf(),
            },
            ..PipelineConfig::default()
        })
        .unwrap();
        let out = t
            .translate(
                src,
                &cs,
                &BTreeSet::new(),
                TranslateOptions {
                    table: None,
                    inject: Some(&invert_first_comparison),
                },
            )
            .unwrap();
        assert!(out.passed(), "{:#?}", out.attempts);
        assert_eq!(out.attempts.len(), 2);
        assert_eq!(out.tokens.repair.prompt, 321);
        assert_eq!(out.tokens.repair.completion, 45);
        assert!(out.tokens.refactor.calls >= 1);
        assert_eq!(out.tokens.generation.calls, 0);
    }
}
