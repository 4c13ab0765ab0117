//! Reference interpreter for the Python subset.
//!
//! Integers are arbitrary precision, reals are binary64, `//` and `%` are
//! floored. Lists alias like Python objects; numpy arrays are 1-D or 2-D
//! with row views (slices copy). The interpreter is the oracle that decides
//! whether a refactored program still computes what its source computed.

mod builtins;
mod interp;
mod ops;
mod value;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use value::{DType, NdArray, PyValue};
pub(crate) use builtins::basis;

use crate::frontend::{Program, Span};
use crate::rules::{Cfp, RuleId};

/// Default bound on evaluated nodes per run.
pub const DEFAULT_STEP_LIMIT: u64 = 10_000_000;

/// Relative tolerance applied when nonlinear decomposition rewrote the
/// program (identity rewrites are not bit-stable).
pub const DECOMPOSE_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FaultKind {
    IndexOutOfBounds,
    ZeroDivision,
    DomainError,
    StepLimit,
    TypeError,
    NameError,
}

impl fmt::Display for FaultKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FaultKind::IndexOutOfBounds => "index-out-of-bounds",
            FaultKind::ZeroDivision => "zero-division",
            FaultKind::DomainError => "domain-error",
            FaultKind::StepLimit => "step-limit",
            FaultKind::TypeError => "type-error",
            FaultKind::NameError => "name-error",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
#[error("{kind} at {span}: {message}")]
pub struct RuntimeFault {
    pub kind: FaultKind,
    #[serde(with = "span_serde")]
    pub span: Span,
    pub message: String,
}

mod span_serde {
    use super::Span;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: &Span, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&s.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Span, D::Error> {
        let s = String::deserialize(d)?;
        let (l, c) = s.split_once(':').ok_or_else(|| serde::de::Error::custom("span must be line:col"))?;
        Ok(Span::new(
            l.parse().map_err(serde::de::Error::custom)?,
            c.parse().map_err(serde::de::Error::custom)?,
        ))
    }
}

/// How a produced value is compared against an expected one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    #[default]
    Exact,
    /// `|actual - expected| <= eps * max(1, |expected|)` elementwise.
    RelTol(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestCase {
    pub inputs: Vec<PyValue>,
    pub expected: PyValue,
    #[serde(default)]
    pub comparison: Comparison,
}

/// Scalar closeness under a relative tolerance floored at magnitude one.
pub fn close(actual: f64, expected: f64, tol: f64) -> bool {
    if actual.is_nan() || expected.is_nan() {
        return actual.is_nan() && expected.is_nan();
    }
    if actual == expected {
        return true;
    }
    (actual - expected).abs() <= tol * expected.abs().max(1.0)
}

/// Compares two values elementwise. Lists and arrays of the same shape are
/// interchangeable; numeric kinds compare by value.
pub fn values_match(actual: &PyValue, expected: &PyValue, cmp: Comparison) -> bool {
    if let (PyValue::None, PyValue::None) = (actual, expected) {
        return true;
    }
    let (Some((sa, da)), Some((se, de))) = (actual.flatten(), expected.flatten()) else {
        return false;
    };
    if sa != se || da.len() != de.len() {
        return false;
    }
    if let (PyValue::Int(a), PyValue::Int(b)) = (actual, expected) {
        return a == b;
    }
    da.iter().zip(&de).all(|(a, e)| match cmp {
        Comparison::Exact => a == e || (a.is_nan() && e.is_nan()),
        Comparison::RelTol(tol) => close(*a, *e, tol),
    })
}

/// Runs the single function in `program` on `inputs`.
pub fn run(program: &Program, inputs: &[PyValue]) -> Result<PyValue, RuntimeFault> {
    run_with_limit(program, inputs, DEFAULT_STEP_LIMIT)
}

pub fn run_with_limit(program: &Program, inputs: &[PyValue], limit: u64) -> Result<PyValue, RuntimeFault> {
    let f = program.function().ok_or_else(|| RuntimeFault {
        kind: FaultKind::NameError,
        span: Span::new(1, 1),
        message: "program defines no function".into(),
    })?;
    let args = inputs.iter().map(value::Value::from_py).collect();
    let mut it = interp::Interp::new(limit);
    it.call(f, args).map(|v| v.to_py())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseVerdict {
    pub source: Result<PyValue, RuntimeFault>,
    pub cfp: Result<PyValue, RuntimeFault>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub cases: Vec<CaseVerdict>,
    pub passed: usize,
}

impl EquivalenceReport {
    pub fn all_passed(&self) -> bool {
        self.passed == self.cases.len()
    }

    /// First failing case with both outcomes rendered.
    pub fn first_failure(&self) -> Option<String> {
        let (i, c) = self.cases.iter().enumerate().find(|(_, c)| !c.passed)?;
        let show = |r: &Result<PyValue, RuntimeFault>| match r {
            Ok(v) => v.to_string(),
            Err(f) => format!("fault {f}"),
        };
        Some(format!("case {i}: source -> {}, cfp -> {}", show(&c.source), show(&c.cfp)))
    }
}

/// Runs source and CFP on every case and compares their outputs under the
/// case's comparison (relaxed to [`DECOMPOSE_REL_TOL`] when nonlinear
/// decomposition fired).
pub fn check_equivalence(src: &Program, cfp: &Cfp, cases: &[TestCase]) -> EquivalenceReport {
    let relaxed = cfp.applied.contains(&RuleId::LinearNonLinear);
    check_programs(src, &cfp.ast, cases, relaxed)
}

pub fn check_programs(src: &Program, other: &Program, cases: &[TestCase], relaxed: bool) -> EquivalenceReport {
    let mut verdicts = Vec::with_capacity(cases.len());
    for case in cases {
        let a = run(src, &case.inputs);
        let b = run(other, &case.inputs);
        let cmp = match (case.comparison, relaxed) {
            (Comparison::Exact, true) => Comparison::RelTol(DECOMPOSE_REL_TOL),
            (Comparison::RelTol(t), true) => Comparison::RelTol(t.max(DECOMPOSE_REL_TOL)),
            (c, false) => c,
        };
        let passed = match (&a, &b) {
            (Ok(x), Ok(y)) => values_match(y, x, cmp),
            _ => false,
        };
        verdicts.push(CaseVerdict {
            source: a,
            cfp: b,
            passed,
        });
    }
    let passed = verdicts.iter().filter(|v| v.passed).count();
    EquivalenceReport {
        cases: verdicts,
        passed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::load_program;

    fn run_src(src: &str, inputs: &[PyValue]) -> Result<PyValue, RuntimeFault> {
        run(&load_program(src).unwrap(), inputs)
    }

    #[test]
    fn abs_diff() {
        let src = "def f(a, b):\n    if a > b:\n        return a - b\n    return b - a\n";
        assert_eq!(run_src(src, &[PyValue::int(3), PyValue::int(5)]).unwrap(), PyValue::int(2));
    }

    #[test]
    fn break_program() {
        let src = "def f(a):\n    for i in range(len(a)):\n        if a[i] > 2:\n            break\n        a[i] += 1\n    return a\n";
        assert_eq!(run_src(src, &[PyValue::ints(&[1, 2, 3])]).unwrap(), PyValue::ints(&[2, 3, 3]));
    }

    #[test]
    fn zero_division_fault() {
        let src = "def f(a, b):\n    return a / b\n";
        let err = run_src(src, &[PyValue::int(1), PyValue::int(0)]).unwrap_err();
        assert_eq!(err.kind, FaultKind::ZeroDivision);
    }

    #[test]
    fn step_limit() {
        let src = "def f(x):\n    while x > 0:\n        x = x + 1\n    return x\n";
        let err = run_with_limit(&load_program(src).unwrap(), &[PyValue::int(1)], 1000).unwrap_err();
        assert_eq!(err.kind, FaultKind::StepLimit);
    }

    #[test]
    fn list_aliasing() {
        let src = "def f(a):\n    b = a\n    b[0] = 9\n    return a\n";
        assert_eq!(run_src(src, &[PyValue::ints(&[1, 2])]).unwrap(), PyValue::ints(&[9, 2]));
    }

    #[test]
    fn numpy_where_and_sum() {
        let src = "import numpy as np\ndef f(a):\n    b = np.where(np.array(a) > 1, 1.0, 0.0)\n    return np.sum(b)\n";
        assert_eq!(run_src(src, &[PyValue::ints(&[1, 2, 3])]).unwrap(), PyValue::Real(2.0));
    }

    #[test]
    fn matrix_row_views_alias() {
        let src = "import numpy\ndef f(n):\n    m = numpy.zeros([n, n])\n    for i in range(n):\n        m[i][i] = 1.0\n    return m\n";
        let out = run_src(src, &[PyValue::int(2)]).unwrap();
        let PyValue::Array(a) = out else { panic!() };
        assert_eq!(a.data, vec![1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn loop_variable_survives_loop() {
        let src = "def f(n):\n    i = -1\n    for i in range(n):\n        pass\n    return i\n";
        assert_eq!(run_src(src, &[PyValue::int(3)]).unwrap(), PyValue::int(2));
        assert_eq!(run_src(src, &[PyValue::int(0)]).unwrap(), PyValue::int(-1));
    }

    #[test]
    fn comparison_tolerance_floor() {
        assert!(close(1e-12, 0.0, 1e-9));
        assert!(!close(1.1, 1.0, 1e-3));
        assert!(values_match(&PyValue::Real(2.0), &PyValue::int(2), Comparison::Exact));
        assert!(values_match(&PyValue::reals(&[1.0, 2.0]), &PyValue::ints(&[1, 2]), Comparison::Exact));
    }
}
