//! Corpus, pass@k, corpus evaluation and token reports.

mod corpus;
mod passk;

pub use corpus::{bundled_corpus, load_corpus, parse_corpus, CorpusEntry, CorpusError, Split, MIN_CASES};
pub use passk::{pass_at_k, DomainError};

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::pipeline::{PatternMatch, PipelineConfig, PipelineError, ProviderKind, StageTokens, TokenUsage, TranslateOptions, Translator};
use crate::spdzsim::FailureClass;

/// Failure taxonomy of one sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleClass {
    Pass,
    CompileRuntimeError,
    LogicError,
    /// Translation aborted before a program was produced.
    PipelineError,
}

impl From<FailureClass> for SampleClass {
    fn from(c: FailureClass) -> Self {
        match c {
            FailureClass::Pass => SampleClass::Pass,
            FailureClass::CompileRuntimeError => SampleClass::CompileRuntimeError,
            FailureClass::LogicError => SampleClass::LogicError,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub class: SampleClass,
    pub attempts: usize,
    pub tokens: TokenUsage,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryReport {
    pub id: String,
    pub split: Split,
    pub n: u64,
    pub c: u64,
    pub pass_at_1: f64,
    pub pass_at_2: Option<f64>,
    pub samples: Vec<Sample>,
    /// Final program of the first sample.
    pub program: Option<String>,
}

impl EntryReport {
    /// Token usage summed over samples.
    pub fn tokens(&self) -> TokenUsage {
        let mut t = TokenUsage::default();
        for s in &self.samples {
            add_usage(&mut t, &s.tokens);
        }
        t
    }
}

fn add_stage(a: &mut StageTokens, b: &StageTokens) {
    a.prompt += b.prompt;
    a.completion += b.completion;
    a.calls += b.calls;
}

fn add_usage(a: &mut TokenUsage, b: &TokenUsage) {
    add_stage(&mut a.refactor, &b.refactor);
    add_stage(&mut a.generation, &b.generation);
    add_stage(&mut a.repair, &b.repair);
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Taxonomy {
    pub pass: usize,
    pub compile_runtime_error: usize,
    pub logic_error: usize,
    pub pipeline_error: usize,
}

impl Taxonomy {
    fn count(&mut self, c: SampleClass) {
        match c {
            SampleClass::Pass => self.pass += 1,
            SampleClass::CompileRuntimeError => self.compile_runtime_error += 1,
            SampleClass::LogicError => self.logic_error += 1,
            SampleClass::PipelineError => self.pipeline_error += 1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub entries: usize,
    pub samples: usize,
    /// Number of entries per count of correct samples.
    pub c_distribution: BTreeMap<u64, usize>,
    pub pass_at_1: f64,
    pub pass_at_2: Option<f64>,
    pub taxonomy: Taxonomy,
    /// Samples that passed only after repair.
    pub repaired: usize,
    pub tokens: TokenUsage,
}

impl SplitReport {
    fn from_entries<'a>(entries: impl IntoIterator<Item = &'a EntryReport>) -> Self {
        let mut r = SplitReport::default();
        let (mut p1, mut p2, mut have_p2) = (0.0, 0.0, true);
        for e in entries {
            r.entries += 1;
            r.samples += e.samples.len();
            *r.c_distribution.entry(e.c).or_default() += 1;
            p1 += e.pass_at_1;
            match e.pass_at_2 {
                Some(v) => p2 += v,
                None => have_p2 = false,
            }
            for s in &e.samples {
                r.taxonomy.count(s.class);
                if s.class == SampleClass::Pass && s.attempts > 1 {
                    r.repaired += 1;
                }
                add_usage(&mut r.tokens, &s.tokens);
            }
        }
        if r.entries > 0 {
            r.pass_at_1 = p1 / r.entries as f64;
            r.pass_at_2 = have_p2.then(|| p2 / r.entries as f64);
        }
        r
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub repetition: u32,
    pub max_feedback: u32,
    pub temperature: f64,
    pub pattern_match: PatternMatch,
    pub provider: String,
    pub f: u32,
    pub k: u32,
}

impl Settings {
    fn of(c: &PipelineConfig) -> Self {
        Self {
            repetition: c.repetition,
            max_feedback: c.max_feedback,
            temperature: c.temperature,
            pattern_match: c.pattern_match,
            provider: match &c.provider {
                ProviderKind::Deterministic => "deterministic".into(),
                ProviderKind::Mock { .. } => "mock".into(),
                ProviderKind::Remote { model, .. } => format!("remote:{model}"),
            },
            f: c.fixed_point.f,
            k: c.fixed_point.k,
        }
    }
}

/// Evaluation results. Contains no timing, so deterministic runs serialize
/// identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub settings: Settings,
    pub overall: SplitReport,
    pub splits: BTreeMap<Split, SplitReport>,
    pub entries: Vec<EntryReport>,
}

pub struct EvalRun {
    pub report: EvalReport,
    pub wall_time: Duration,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "-".into())
}

impl EvalReport {
    pub fn failed_samples(&self) -> usize {
        self.overall.samples - self.overall.taxonomy.pass
    }

    /// Fixed-width summary, one row per split and one overall.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<8} {:>7} {:>7} {:>7} {:>6} {:>6} {:>6} {:>6} {:>8} {:>10}",
            "split", "entries", "pass@1", "pass@2", "pass", "c/r", "logic", "abort", "repaired", "prompt"
        );
        let row = |out: &mut String, name: &str, r: &SplitReport| {
            let _ = writeln!(
                out,
                "{:<8} {:>7} {:>7.3} {:>7} {:>6} {:>6} {:>6} {:>6} {:>8} {:>10}",
                name,
                r.entries,
                r.pass_at_1,
                fmt_opt(r.pass_at_2),
                r.taxonomy.pass,
                r.taxonomy.compile_runtime_error,
                r.taxonomy.logic_error,
                r.taxonomy.pipeline_error,
                r.repaired,
                r.tokens.prompt_total()
            );
        };
        for (s, r) in &self.splits {
            row(&mut out, s.name(), r);
        }
        row(&mut out, "overall", &self.overall);
        out
    }

    /// Writes `report.json` and `report.txt` into `dir`.
    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        let json = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        std::fs::write(dir.join("report.json"), json + "\n")?;
        std::fs::write(dir.join("report.txt"), self.table())
    }
}

fn evaluate_entry(t: &Translator, e: &CorpusEntry) -> EntryReport {
    let clear = e.clear_set();
    let n = t.config.repetition as u64;
    let mut samples = Vec::new();
    let mut program = None;
    for _ in 0..n {
        let sample = match t.translate(&e.source, &e.cases, &clear, TranslateOptions::default()) {
            Ok(out) => {
                program.get_or_insert_with(|| out.program.clone());
                Sample {
                    class: if out.passed() { SampleClass::Pass } else { out.final_class().into() },
                    attempts: out.attempts.len(),
                    tokens: out.tokens,
                    error: out.attempts.last().and_then(|a| a.feedback.clone()),
                }
            }
            Err(err) => Sample {
                class: SampleClass::PipelineError,
                attempts: 0,
                tokens: TokenUsage::default(),
                error: Some(err.to_string()),
            },
        };
        samples.push(sample);
    }
    let c = samples.iter().filter(|s| s.class == SampleClass::Pass).count() as u64;
    EntryReport {
        id: e.id.clone(),
        split: e.split,
        n,
        c,
        pass_at_1: pass_at_k(n, c, 1).expect("n >= 1"),
        pass_at_2: pass_at_k(n, c, 2).ok(),
        samples,
        program,
    }
}

/// Translates every entry `repetition` times, entries in parallel.
pub fn evaluate(corpus: &[CorpusEntry], config: &PipelineConfig) -> Result<EvalRun, PipelineError> {
    let start = Instant::now();
    let t = Translator::new(config.clone())?;
    let entries: Vec<EntryReport> = corpus.par_iter().map(|e| evaluate_entry(&t, e)).collect();
    let splits = Split::ALL
        .into_iter()
        .filter(|s| entries.iter().any(|e| e.split == *s))
        .map(|s| (s, SplitReport::from_entries(entries.iter().filter(|e| e.split == s))))
        .collect();
    let report = EvalReport {
        settings: Settings::of(config),
        overall: SplitReport::from_entries(&entries),
        splits,
        entries,
    };
    Ok(EvalRun {
        report,
        wall_time: start.elapsed(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRow {
    pub stage: String,
    pub with_pattern_match: usize,
    pub without_pattern_match: usize,
}

impl StageRow {
    pub fn reduction(&self) -> f64 {
        if self.without_pattern_match == 0 {
            return 0.0;
        }
        1.0 - self.with_pattern_match as f64 / self.without_pattern_match as f64
    }
}

/// Prompt tokens with and without pattern matching, per stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenReport {
    pub entries: usize,
    pub stages: Vec<StageRow>,
    /// Entries whose prompts grew with pattern matching, per stage.
    pub regressions: Vec<(String, String)>,
}

impl TokenReport {
    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<11} {:>12} {:>12} {:>10} {:>10}", "stage", "with", "without", "mean with", "reduction");
        for r in &self.stages {
            let _ = writeln!(
                out,
                "{:<11} {:>12} {:>12} {:>10.1} {:>9.1}%",
                r.stage,
                r.with_pattern_match,
                r.without_pattern_match,
                r.with_pattern_match as f64 / self.entries.max(1) as f64,
                100.0 * r.reduction()
            );
        }
        out
    }
}

/// Compares two reports over the same corpus, one run with pattern matching
/// and one without.
pub fn token_report(with: &EvalReport, without: &EvalReport) -> TokenReport {
    type Stage = (&'static str, fn(&TokenUsage) -> usize);
    let stages: [Stage; 3] = [
        ("refactor", |t| t.refactor.prompt),
        ("generation", |t| t.generation.prompt),
        ("repair", |t| t.repair.prompt),
    ];
    let by_id: BTreeMap<&str, &EntryReport> = without.entries.iter().map(|e| (e.id.as_str(), e)).collect();
    let mut regressions = Vec::new();
    for e in &with.entries {
        let Some(o) = by_id.get(e.id.as_str()) else { continue };
        let (a, b) = (e.tokens(), o.tokens());
        for (name, get) in &stages {
            if get(&a) > get(&b) {
                regressions.push((e.id.clone(), name.to_string()));
            }
        }
    }
    TokenReport {
        entries: with.entries.len(),
        stages: stages
            .iter()
            .map(|(name, get)| StageRow {
                stage: name.to_string(),
                with_pattern_match: get(&with.overall.tokens),
                without_pattern_match: get(&without.overall.tokens),
            })
            .collect(),
        regressions,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_corpus() -> Vec<CorpusEntry> {
        bundled_corpus().into_iter().filter(|e| e.id.starts_with("branch_")).take(3).collect()
    }

    #[test]
    fn evaluation_is_deterministic_and_aggregates() {
        let c = small_corpus();
        let a = evaluate(&c, &PipelineConfig::default()).unwrap().report;
        let b = evaluate(&c, &PipelineConfig::default()).unwrap().report;
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        assert_eq!(a.overall.entries, 3);
        assert_eq!(a.overall.samples, 6);
        assert_eq!(a.overall.c_distribution.values().sum::<usize>(), 3);
        assert_eq!(a.splits.len(), 1);
        let t = &a.overall.taxonomy;
        assert_eq!(t.pass + t.compile_runtime_error + t.logic_error + t.pipeline_error, 6);
        assert!(a.table().lines().count() == 3);
    }

    #[test]
    fn report_files_written() {
        let dir = tempfile::tempdir().unwrap();
        let r = evaluate(&small_corpus()[..1], &PipelineConfig::default()).unwrap().report;
        r.write(dir.path()).unwrap();
        let back: EvalReport = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
        assert_eq!(back, r);
        assert!(std::fs::read_to_string(dir.path().join("report.txt")).unwrap().contains("overall"));
    }

    #[test]
    fn single_repetition_has_no_pass_at_2() {
        let cfg = PipelineConfig {
            repetition: 1,
            ..PipelineConfig::default()
        };
        let r = evaluate(&small_corpus()[..1], &cfg).unwrap().report;
        assert_eq!(r.overall.pass_at_2, None);
        assert_eq!(r.entries[0].n, 1);
    }

    #[test]
    fn token_report_compares_stages() {
        let c = small_corpus();
        let on = evaluate(&c, &PipelineConfig::default()).unwrap().report;
        let off = evaluate(
            &c,
            &PipelineConfig {
                pattern_match: PatternMatch::Off,
                ..PipelineConfig::default()
            },
        )
        .unwrap()
        .report;
        let tr = token_report(&on, &off);
        assert!(tr.regressions.is_empty());
        assert_eq!(tr.stages.len(), 3);
        assert!(tr.stages[0].reduction() > 0.0 && tr.stages[1].reduction() > 0.0);
        assert!(tr.table().contains("generation"));
    }
}
