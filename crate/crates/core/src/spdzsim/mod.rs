//! Cleartext simulator for MP-SPDZ high-level programs.
//!
//! `sint` is an integer bounded by `int_bits`, `sfix` is fixed point with
//! `f` fractional bits in `k` total bits, and `mpc_math` functions are
//! evaluated in binary64 and then quantized. Every instruction and container
//! access is appended to a [`Trace`]; two runs of a data-oblivious program
//! on same-shaped inputs produce identical traces. Nothing here models
//! secret sharing or the cost of the protocol.

mod exec;
mod lint;
mod sfix;
mod trace;
mod value;

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use lint::{annotation_is_secret, lint, CompileError, LintKind, BUILTINS, CLEAR_MATH, METHODS, MPC_MATH, TYPES};
pub use sfix::{sfix_from_real, OverflowError, SFixValue, DEFAULT_F, DEFAULT_K};
pub use trace::{Event, EventKind, Trace};
pub use value::{ElemKind, SecretValue};

use crate::emit::SpdzProgram;
use crate::frontend::Span;
use crate::pyexec::{values_match, Comparison, NdArray, PyValue, TestCase, DEFAULT_STEP_LIMIT};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub f: u32,
    pub k: u32,
    /// Bit length of `sint`.
    pub int_bits: u32,
    /// Lets secret data decide branches, recording the outcome in the
    /// trace. Used only to demonstrate what the auditor catches.
    pub leak: bool,
    pub step_limit: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            f: DEFAULT_F,
            k: DEFAULT_K,
            int_bits: 64,
            leak: false,
            step_limit: DEFAULT_STEP_LIMIT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuntimeKind {
    Overflow,
    ZeroDivision,
    Domain,
    SecretIndex,
    IndexOutOfBounds,
    TypeError,
    NameError,
    StepLimit,
}

impl fmt::Display for RuntimeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RuntimeKind::Overflow => "overflow",
            RuntimeKind::ZeroDivision => "zero-division",
            RuntimeKind::Domain => "domain",
            RuntimeKind::SecretIndex => "secret-index",
            RuntimeKind::IndexOutOfBounds => "index-out-of-bounds",
            RuntimeKind::TypeError => "type-error",
            RuntimeKind::NameError => "name-error",
            RuntimeKind::StepLimit => "step-limit",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("{kind} at {line}:{col}: {message}")]
pub struct RuntimeError {
    pub kind: RuntimeKind,
    pub line: u32,
    pub col: u32,
    pub message: String,
}

impl RuntimeError {
    pub fn span(&self) -> Span {
        Span::new(self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(tag = "class", content = "errors", rename_all = "kebab-case")]
pub enum SimFault {
    #[error("compile error: {}", join(.0))]
    Compile(Vec<CompileError>),
    #[error("runtime error: {0}")]
    Runtime(RuntimeError),
}

fn join(errs: &[CompileError]) -> String {
    errs.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecOutcome {
    pub result: Result<SecretValue, SimFault>,
    pub trace: Trace,
}

/// Lints `spdz` and, if it compiles, runs its first function on `inputs`.
/// Parameters annotated with a secret type are quantized on entry.
pub fn exec(spdz: &SpdzProgram, inputs: &[PyValue], cfg: &SimConfig) -> ExecOutcome {
    let errors: Vec<CompileError> = lint(spdz)
        .into_iter()
        .filter(|e| !(cfg.leak && e.kind == LintKind::SecretControlFlow))
        .collect();
    if !errors.is_empty() {
        return ExecOutcome {
            result: Err(SimFault::Compile(errors)),
            trace: Trace::default(),
        };
    }
    let Some(f) = spdz.function() else {
        return ExecOutcome {
            result: Err(SimFault::Compile(vec![CompileError::new(
                LintKind::UnsupportedSyntax,
                Span::new(1, 1),
                "program defines no function",
            )])),
            trace: Trace::default(),
        };
    };
    let mut m = exec::Machine::new(&spdz.ast, *cfg);
    let result = m.run(f, inputs);
    ExecOutcome { result, trace: m.trace }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureClass {
    Pass,
    CompileRuntimeError,
    LogicError,
}

/// Relative tolerance for comparing a simulated result with the reference.
pub fn default_tolerance(f: u32) -> f64 {
    (8.0 * 2f64.powi(-(f as i32))).max(1e-3)
}

/// Pass iff the run produced a value within `tol` (relative, floored at
/// magnitude one) of the expected one, elementwise.
pub fn classify_failure(outcome: &ExecOutcome, case: &TestCase, tol: f64) -> FailureClass {
    match &outcome.result {
        Err(_) => FailureClass::CompileRuntimeError,
        Ok(v) if values_match(&v.to_py(), &case.expected, Comparison::RelTol(tol)) => FailureClass::Pass,
        Ok(_) => FailureClass::LogicError,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Divergence {
    pub pair: usize,
    pub seq: usize,
    pub left: Option<Event>,
    pub right: Option<Event>,
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |e: &Option<Event>| e.as_ref().map_or("<end>".to_string(), |e| e.to_string());
        write!(f, "pair {} event {}: `{}` vs `{}`", self.pair, self.seq, show(&self.left), show(&self.right))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObliviousReport {
    pub oblivious: bool,
    pub pairs: usize,
    pub divergence: Option<Divergence>,
}

pub type InputPair = (Vec<PyValue>, Vec<PyValue>);

/// Runs both sides of every pair and compares their traces event for
/// event, stopping at the first divergence.
pub fn check_trace_oblivious(spdz: &SpdzProgram, pairs: &[InputPair], cfg: &SimConfig) -> Result<ObliviousReport, SimFault> {
    for (i, (a, b)) in pairs.iter().enumerate() {
        let ra = exec(spdz, a, cfg);
        let rb = exec(spdz, b, cfg);
        ra.result?;
        rb.result?;
        if let Some(seq) = ra.trace.first_divergence(&rb.trace) {
            return Ok(ObliviousReport {
                oblivious: false,
                pairs: pairs.len(),
                divergence: Some(Divergence {
                    pair: i,
                    seq,
                    left: ra.trace.events().get(seq).cloned(),
                    right: rb.trace.events().get(seq).cloned(),
                }),
            });
        }
    }
    Ok(ObliviousReport {
        oblivious: true,
        pairs: pairs.len(),
        divergence: None,
    })
}

/// Which parameters of the program's function carry secret types.
pub fn secret_params(spdz: &SpdzProgram) -> Vec<bool> {
    spdz.function()
        .map(|f| {
            f.params
                .iter()
                .map(|p| p.annotation.as_ref().is_some_and(annotation_is_secret))
                .collect()
        })
        .unwrap_or_default()
}

/// `n` pairs of inputs shaped like `base`. Clear parameters are copied;
/// every secret scalar is rescaled by an independent factor in [0.5, 1.5],
/// keeping its sign and whether it is zero.
pub fn random_pairs(spdz: &SpdzProgram, base: &[PyValue], n: usize, seed: u64) -> Vec<InputPair> {
    let secret = secret_params(spdz);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| -> Vec<PyValue> {
        base.iter()
            .enumerate()
            .map(|(i, v)| if secret.get(i).copied().unwrap_or(false) { perturb(v, rng) } else { v.clone() })
            .collect()
    };
    (0..n).map(|_| (draw(&mut rng), draw(&mut rng))).collect()
}

fn perturb(v: &PyValue, rng: &mut ChaCha8Rng) -> PyValue {
    let scale_int = |i: i64, rng: &mut ChaCha8Rng| -> i64 {
        if i == 0 {
            return 0;
        }
        let m = i.unsigned_abs().min(1 << 40) as f64;
        let r = ((m * rng.gen_range(0.5..1.5)).round() as i64).max(1);
        r * i.signum()
    };
    match v {
        PyValue::Int(i) => match i64::try_from(i) {
            Ok(i) => PyValue::int(scale_int(i, rng)),
            Err(_) => v.clone(),
        },
        PyValue::Real(x) => PyValue::Real(x * rng.gen_range(0.5..1.5)),
        PyValue::Bool(_) => PyValue::Bool(rng.gen()),
        PyValue::List(items) => PyValue::List(items.iter().map(|x| perturb(x, rng)).collect()),
        PyValue::Array(a) => {
            let data = a
                .data
                .iter()
                .map(|x| match a.dtype {
                    crate::pyexec::DType::Float => x * rng.gen_range(0.5..1.5),
                    crate::pyexec::DType::Int => scale_int(*x as i64, rng) as f64,
                    crate::pyexec::DType::Bool => rng.gen_bool(0.5) as u8 as f64,
                })
                .collect();
            PyValue::Array(NdArray { dtype: a.dtype, shape: a.shape.clone(), data })
        }
        PyValue::None => PyValue::None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emit::CANONICAL_IMPORTS;

    fn prog(body: &str) -> SpdzProgram {
        SpdzProgram::parse(&format!("{CANONICAL_IMPORTS}{body}")).unwrap()
    }

    const SQRT: &str = "def f(x: sfix):\n    y = (x > 0) * mpc_math.sqrt(x) + (x <= 0) * mpc_math.sqrt(-x)\n    return y\n";
    const LEAKY_SQRT: &str = "def f(x: sfix):\n    if x > 0:\n        y = mpc_math.sqrt(x)\n    else:\n        y = mpc_math.sqrt(-x)\n    return y\n";

    fn real(out: &ExecOutcome) -> f64 {
        match out.result.as_ref().unwrap() {
            SecretValue::SFix(x) => x.to_f64(),
            v => panic!("expected sfix, got {v:?}"),
        }
    }

    #[test]
    fn oblivious_sqrt_is_accurate_on_both_signs() {
        let p = prog(SQRT);
        let cfg = SimConfig::default();
        for x in [4.0, -4.0] {
            let out = exec(&p, &[PyValue::Real(x)], &cfg);
            assert!((real(&out) - 2.0).abs() <= 2f64.powi(-13), "{x}: {}", real(&out));
        }
    }

    #[test]
    fn oblivious_sqrt_traces_match() {
        let p = prog(SQRT);
        let pairs = vec![(vec![PyValue::Real(2.0)], vec![PyValue::Real(-2.0)])];
        let r = check_trace_oblivious(&p, &pairs, &SimConfig::default()).unwrap();
        assert!(r.oblivious);
        assert_eq!(r.divergence, None);
    }

    #[test]
    fn leak_mode_exposes_branching_version() {
        let p = prog(LEAKY_SQRT);
        let pairs = vec![(vec![PyValue::Real(2.0)], vec![PyValue::Real(-2.0)])];
        let strict = check_trace_oblivious(&p, &pairs, &SimConfig::default()).unwrap_err();
        assert!(matches!(&strict, SimFault::Compile(e) if e[0].kind == LintKind::SecretControlFlow));
        let cfg = SimConfig {
            leak: true,
            ..SimConfig::default()
        };
        let r = check_trace_oblivious(&p, &pairs, &cfg).unwrap();
        assert!(!r.oblivious);
        let d = r.divergence.unwrap();
        assert_eq!(d.left.unwrap().to_string(), "branch secret taken=1");
        assert_eq!(d.right.unwrap().to_string(), "branch secret taken=0");
    }

    #[test]
    fn constant_function_is_oblivious() {
        let p = prog("def f(x: sint):\n    return 7\n");
        let pairs = random_pairs(&p, &[PyValue::int(3)], 5, 1);
        assert!(check_trace_oblivious(&p, &pairs, &SimConfig::default()).unwrap().oblivious);
    }

    #[test]
    fn secret_index_faults_after_recording_bottom() {
        let p = prog("def f(a: sint.Array, i: sint):\n    return a[i]\n");
        let out = exec(&p, &[PyValue::ints(&[1, 2, 3]), PyValue::int(1)], &SimConfig::default());
        let Err(SimFault::Runtime(e)) = &out.result else { panic!("{:?}", out.result) };
        assert_eq!(e.kind, RuntimeKind::SecretIndex);
        assert_eq!(out.trace.events().last().unwrap().to_string(), "read c0 ⊥");
    }

    #[test]
    fn unknown_callee_is_a_compile_error() {
        let out = exec(&prog("def f(x: sfix):\n    return mpc_math.exp(x)\n"), &[PyValue::Real(1.0)], &SimConfig::default());
        assert!(matches!(&out.result, Err(SimFault::Compile(e)) if e[0].kind == LintKind::UnknownCallee));
    }

    #[test]
    fn trace_has_expected_shape() {
        let p = prog("def f(a: sfix.Array, n: int):\n    s = sfix(0)\n    for i in range(n):\n        s = s + a[i] * 2\n    return s\n");
        let out = exec(&p, &[PyValue::reals(&[1.5, 2.0]), PyValue::int(2)], &SimConfig::default());
        assert_eq!(real(&out), 7.0);
        let dump = out.trace.dump();
        assert_eq!(
            dump,
            "0 alloc c0 sfix 2\n1 call sfix cint\n2 read c0 0\n3 op mul sfix cint\n4 op add sfix sfix\n5 read c0 1\n6 op mul sfix cint\n7 op add sfix sfix\n"
        );
        assert!(!dump.contains("1.5"));
    }

    #[test]
    fn if_else_and_bit_logic() {
        let p = prog("def f(a: sint, b: sint):\n    c = (a > b).bit_or(a == 0)\n    return c.if_else(a, b) + (a < b).bit_and(b > 0)\n");
        let run = |a, b| match exec(&p, &[PyValue::int(a), PyValue::int(b)], &SimConfig::default()).result.unwrap() {
            SecretValue::SInt(v) => v,
            v => panic!("{v:?}"),
        };
        assert_eq!(run(5, 3), 5);
        assert_eq!(run(2, 3), 4);
        assert_eq!(run(0, 3), 1);
    }

    #[test]
    fn containers_and_matrices() {
        let p = prog(
            "def f(a: sfix.Array, n: int):\n    m = sfix.Matrix(n, n)\n    for i in range(n):\n        m[i][i] = a[i]\n    r = sfix.Array(n)\n    for i in range(n):\n        r[i] = m[i][i] * m[i][n - 1 - i]\n    return m\n",
        );
        let out = exec(&p, &[PyValue::reals(&[1.0, 2.0]), PyValue::int(2)], &SimConfig::default());
        let v = out.result.unwrap().to_py();
        assert_eq!(v, PyValue::List(vec![PyValue::reals(&[1.0, 0.0]), PyValue::reals(&[0.0, 2.0])]));
    }

    #[test]
    fn radix_sort_and_create_from() {
        let p = prog("def f(a: sint.Array):\n    b = sint.Array.create_from(a)\n    return radix_sort(b)\n");
        let out = exec(&p, &[PyValue::ints(&[3, -1, 2])], &SimConfig::default());
        assert_eq!(out.result.unwrap().to_py(), PyValue::ints(&[-1, 2, 3]));
    }

    #[test]
    fn division_truncates_and_faults_on_zero() {
        let p = prog("def f(a: sfix, b: sfix):\n    return a / b\n");
        let cfg = SimConfig::default();
        let out = exec(&p, &[PyValue::Real(1.0), PyValue::Real(3.0)], &cfg);
        let SecretValue::SFix(q) = out.result.unwrap() else { panic!() };
        assert_eq!(q.raw, 21845);
        let out = exec(&p, &[PyValue::Real(1.0), PyValue::Real(0.0)], &cfg);
        assert!(matches!(out.result, Err(SimFault::Runtime(RuntimeError { kind: RuntimeKind::ZeroDivision, .. }))));
    }

    #[test]
    fn out_of_range_input_overflows() {
        let p = prog("def f(x: sfix):\n    return x * x\n");
        let out = exec(&p, &[PyValue::Real(200.0)], &SimConfig::default());
        assert!(matches!(out.result, Err(SimFault::Runtime(RuntimeError { kind: RuntimeKind::Overflow, .. }))));
        let out = exec(&p, &[PyValue::Real(20000.0)], &SimConfig::default());
        assert!(matches!(out.result, Err(SimFault::Runtime(RuntimeError { kind: RuntimeKind::Overflow, .. }))));
    }

    #[test]
    fn floor_division_on_secrets() {
        let p = prog("def f(a: sint, b: sint):\n    q = mpc_math.floor_fx(a / b)\n    return a - b * q\n");
        for (a, b) in [(7, 2), (-7, 2), (7, -2), (6, 3)] {
            let out = exec(&p, &[PyValue::int(a), PyValue::int(b)], &SimConfig::default());
            let got = out.result.unwrap().to_py().as_f64().unwrap();
            let python_mod = a - b * (a as f64 / b as f64).floor() as i64;
            assert_eq!(got, python_mod as f64, "{a} % {b}");
        }
    }

    #[test]
    fn classification() {
        let p = prog("def f(a: sint.Array):\n    return radix_sort(a)\n");
        let cfg = SimConfig::default();
        let inputs = vec![PyValue::ints(&[3, 1, 2])];
        let out = exec(&p, &inputs, &cfg);
        let case = |e: &[i64]| TestCase {
            inputs: inputs.clone(),
            expected: PyValue::ints(e),
            comparison: Comparison::Exact,
        };
        let tol = default_tolerance(16);
        assert_eq!(classify_failure(&out, &case(&[1, 2, 3]), tol), FailureClass::Pass);
        assert_eq!(classify_failure(&out, &case(&[3, 2, 1]), tol), FailureClass::LogicError);
        let bad = exec(&prog("def f(a: sint.Array):\n    return mpc_math.exp(a)\n"), &inputs, &cfg);
        assert_eq!(classify_failure(&bad, &case(&[1, 2, 3]), tol), FailureClass::CompileRuntimeError);
    }

    #[test]
    fn tolerance_floor() {
        assert_eq!(default_tolerance(16), 1e-3);
        assert_eq!(default_tolerance(8), 8.0 / 256.0);
    }

    #[test]
    fn random_pairs_keep_clear_params_and_signs() {
        let p = prog("def f(a: sfix.Array, n: int, s: sint):\n    return n\n");
        let base = vec![PyValue::reals(&[1.0, -2.0, 0.0]), PyValue::int(3), PyValue::int(-5)];
        for (l, r) in random_pairs(&p, &base, 20, 7) {
            for side in [&l, &r] {
                assert_eq!(side[1], PyValue::int(3));
                let (_, d) = side[0].flatten().unwrap();
                assert!(d[0] > 0.0 && d[1] < 0.0 && d[2] == 0.0);
                assert!(side[2].as_f64().unwrap() < 0.0);
            }
        }
    }
}
