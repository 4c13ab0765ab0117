use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use pyspdz::emit::{emit_cfp, emit_source, Interface, SpdzProgram};
use pyspdz::frontend::{load_program, render};
use pyspdz::harness::{evaluate, load_corpus, token_report, CorpusError};
use pyspdz::pipeline::{PatternMatch, PipelineConfig, ProviderKind, TranslateOptions, Translator};
use pyspdz::pyexec::{PyValue, TestCase};
use pyspdz::rules::{detect_patterns_with, refactor_with};
use pyspdz::spdzsim::{check_trace_oblivious, exec, InputPair, SimConfig};

#[derive(Parser)]
#[command(name = "pyspdz", version, about = "Python subset to MP-SPDZ transpiler")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProviderArg {
    Deterministic,
    Mock,
    Remote,
}

#[derive(clap::Args)]
struct PipelineArgs {
    /// TOML pipeline configuration; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    provider: Option<ProviderArg>,
    /// Fixture file for the mock provider.
    #[arg(long)]
    fixture: Option<PathBuf>,
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    model: Option<String>,
    /// Environment variable holding the API key.
    #[arg(long, default_value = "OPENAI_API_KEY")]
    key_env: String,
    #[arg(long)]
    pattern_match: Option<PatternMatch>,
    #[arg(long)]
    repetition: Option<u32>,
    #[arg(long)]
    max_feedback: Option<u32>,
}

impl PipelineArgs {
    fn build(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        match self.provider {
            None => {}
            Some(ProviderArg::Deterministic) => cfg.provider = ProviderKind::Deterministic,
            Some(ProviderArg::Mock) => {
                let fixture = self.fixture.clone().context("--provider mock needs --fixture")?;
                cfg.provider = ProviderKind::Mock { fixture };
            }
            Some(ProviderArg::Remote) => {
                cfg.provider = ProviderKind::Remote {
                    endpoint: self.endpoint.clone().context("--provider remote needs --endpoint")?,
                    model: self.model.clone().context("--provider remote needs --model")?,
                    key_env: self.key_env.clone(),
                    min_interval_ms: 0,
                }
            }
        }
        if let Some(pm) = self.pattern_match {
            cfg.pattern_match = pm;
        }
        if let Some(r) = self.repetition {
            cfg.repetition = r;
        }
        if let Some(m) = self.max_feedback {
            cfg.max_feedback = m;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Refactor and emit MP-SPDZ for a Python file.
    Transpile {
        file: PathBuf,
        /// Print the canonical Python instead of MP-SPDZ.
        #[arg(long, conflicts_with = "emit_spdz")]
        emit_cfp: bool,
        #[arg(long)]
        emit_spdz: bool,
        /// Comma-separated public parameters.
        #[arg(long, value_delimiter = ',')]
        clear: Vec<String>,
    },
    /// Report which refactoring rules apply to a Python file.
    Detect {
        file: PathBuf,
        #[arg(long, value_delimiter = ',')]
        clear: Vec<String>,
    },
    /// Run an MP-SPDZ program in the simulator.
    RunSim {
        file: PathBuf,
        /// JSON array of argument values.
        #[arg(long)]
        inputs: PathBuf,
        /// Also print the execution trace.
        #[arg(long)]
        trace: bool,
        #[arg(long, default_value_t = 16)]
        f: u32,
        #[arg(long, default_value_t = 31)]
        k: u32,
    },
    /// Translate a Python file and check it against test cases.
    Check {
        file: PathBuf,
        /// JSON array of test cases.
        #[arg(long)]
        cases: PathBuf,
        #[arg(long, value_delimiter = ',')]
        clear: Vec<String>,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Check that input pairs produce identical simulator traces.
    TraceAudit {
        file: PathBuf,
        /// JSON array of [inputs, inputs] pairs.
        #[arg(long)]
        pairs: PathBuf,
    },
    /// Evaluate a JSONL corpus.
    Eval {
        corpus: PathBuf,
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// Directory for report.json and report.txt.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Compare prompt tokens with and without pattern matching.
    Tokens {
        corpus: PathBuf,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
}

/// Failures mapped to exit codes.
enum Failure {
    Usage(anyhow::Error),
    Corpus(CorpusError),
    Failed(String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Usage(e)
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read(path)?).with_context(|| format!("parsing {}", path.display()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Corpus(e)) => {
            eprintln!("corpus error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Failed(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(3)
        }
    }
}

fn run(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Transpile {
            file,
            emit_cfp: want_cfp,
            emit_spdz: _,
            clear,
        } => {
            let program = load_program(&read(&file)?).context("loading source")?;
            let clear: BTreeSet<String> = clear.into_iter().collect();
            let cfp = refactor_with(&program, &Interface::with_clear(clear.clone())).context("refactoring")?;
            if want_cfp {
                print!("{}", render(&cfp.ast));
            } else {
                let mapped = emit_cfp(&cfp, &clear).context("emitting")?;
                print!("{}", emit_source(&mapped.program));
            }
        }
        Command::Detect { file, clear } => {
            let program = load_program(&read(&file)?).context("loading source")?;
            let report = detect_patterns_with(&program, &Interface::with_clear(clear));
            println!("{}", serde_json::to_string_pretty(&report).context("serializing")?);
        }
        Command::RunSim {
            file,
            inputs,
            trace,
            f,
            k,
        } => {
            let spdz = SpdzProgram::parse(&read(&file)?).context("parsing program")?;
            let inputs: Vec<PyValue> = read_json(&inputs)?;
            let cfg = SimConfig {
                f,
                k,
                ..SimConfig::default()
            };
            let out = exec(&spdz, &inputs, &cfg);
            if trace {
                print!("{}", out.trace.dump());
            }
            match out.result {
                Ok(v) => println!("{}", v.to_py()),
                Err(e) => return Err(Failure::Failed(e.to_string())),
            }
        }
        Command::Check {
            file,
            cases,
            clear,
            pipeline,
        } => {
            let source = read(&file)?;
            let cases: Vec<TestCase> = read_json(&cases)?;
            let t = Translator::new(pipeline.build()?).map_err(anyhow::Error::from)?;
            let clear: BTreeSet<String> = clear.into_iter().collect();
            let out = t
                .translate(&source, &cases, &clear, TranslateOptions::default())
                .map_err(|e| Failure::Failed(e.to_string()))?;
            println!("{}", serde_json::to_string_pretty(&out).context("serializing")?);
            if !out.passed() {
                return Err(Failure::Failed(format!("failed after {} attempt(s)", out.attempts.len())));
            }
        }
        Command::TraceAudit { file, pairs } => {
            let spdz = SpdzProgram::parse(&read(&file)?).context("parsing program")?;
            let pairs: Vec<InputPair> = read_json(&pairs)?;
            let report = check_trace_oblivious(&spdz, &pairs, &SimConfig::default()).map_err(|e| Failure::Failed(e.to_string()))?;
            match &report.divergence {
                None => println!("oblivious over {} pair(s)", report.pairs),
                Some(d) => return Err(Failure::Failed(format!("trace divergence: {d}"))),
            }
        }
        Command::Eval {
            corpus,
            pipeline,
            report,
        } => {
            let cfg = pipeline.build()?;
            let corpus = load_corpus(&corpus).map_err(Failure::Corpus)?;
            let run = evaluate(&corpus, &cfg).map_err(anyhow::Error::from)?;
            print!("{}", run.report.table());
            eprintln!("wall time {:.2}s", run.wall_time.as_secs_f64());
            if let Some(dir) = report {
                run.report
                    .write(&dir)
                    .with_context(|| format!("writing report to {}", dir.display()))?;
            }
            let failed = run.report.failed_samples();
            if failed > 0 {
                return Err(Failure::Failed(format!("{failed} sample(s) failed")));
            }
        }
        Command::Tokens { corpus, pipeline } => {
            let cfg = pipeline.build()?;
            let corpus = load_corpus(&corpus).map_err(Failure::Corpus)?;
            let with = PipelineConfig {
                pattern_match: PatternMatch::On,
                ..cfg.clone()
            };
            let without = PipelineConfig {
                pattern_match: PatternMatch::Off,
                ..cfg
            };
            let a = evaluate(&corpus, &with).map_err(anyhow::Error::from)?.report;
            let b = evaluate(&corpus, &without).map_err(anyhow::Error::from)?.report;
            let tr = token_report(&a, &b);
            print!("{}", tr.table());
            if !tr.regressions.is_empty() {
                let n = tr.regressions.len();
                return Err(Failure::Failed(format!("{n} entry/stage pair(s) cost more with pattern matching")));
            }
        }
    }
    Ok(())
}
