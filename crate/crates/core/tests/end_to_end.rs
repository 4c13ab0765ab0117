use std::collections::BTreeSet;

use pyspdz::emit::{emit_cfp, emit_source, Interface};
use pyspdz::frontend::load_program;
use pyspdz::pyexec::{run, Comparison, PyValue, TestCase};
use pyspdz::rules::refactor_with;
use pyspdz::spdzsim::{check_trace_oblivious, default_tolerance, exec, lint, random_pairs, SimConfig};

fn check(src: &str, clear: &[&str], cases: &[Vec<PyValue>]) {
    let program = load_program(src).unwrap();
    let clear: BTreeSet<String> = clear.iter().map(|s| s.to_string()).collect();
    let tests: Vec<TestCase> = cases
        .iter()
        .map(|inputs| TestCase {
            inputs: inputs.clone(),
            expected: run(&program, inputs).unwrap(),
            comparison: Comparison::Exact,
        })
        .collect();
    let iface = Interface::from_cases(program.function().unwrap(), &clear, &tests);
    let cfp = refactor_with(&program, &iface).unwrap();
    let spdz = emit_cfp(&cfp, &clear).unwrap().program;
    let text = emit_source(&spdz);
    assert_eq!(lint(&spdz), vec![], "{text}");
    let cfg = SimConfig::default();
    let tol = default_tolerance(cfg.f);
    for TestCase { inputs, expected, .. } in &tests {
        let out = exec(&spdz, inputs, &cfg);
        let got = out.result.unwrap_or_else(|e| panic!("{e}\n{text}")).to_py();
        assert!(
            pyspdz::pyexec::values_match(&got, expected, Comparison::RelTol(tol)),
            "{inputs:?}: got {got}, expected {expected}\n{text}"
        );
        let pairs = random_pairs(&spdz, inputs, 5, 11);
        let report = check_trace_oblivious(&spdz, &pairs, &cfg).unwrap();
        assert!(report.oblivious, "{:?}\n{text}", report.divergence);
    }
}

#[test]
fn absolute_difference() {
    check(
        "def f(a, b):\n    if a > b:\n        return a - b\n    return b - a\n",
        &[],
        &[vec![PyValue::int(3), PyValue::int(5)], vec![PyValue::int(9), PyValue::int(-2)]],
    );
}

#[test]
fn break_loop_over_array() {
    check(
        "def f(a):\n    for i in range(len(a)):\n        if a[i] > 2:\n            break\n        a[i] += 1\n    return a\n",
        &[],
        &[vec![PyValue::ints(&[1, 2, 3, 0])], vec![PyValue::ints(&[5, 1])]],
    );
}

#[test]
fn bubble_sort() {
    check(
        "def f(a):\n    n = len(a)\n    for i in range(n):\n        for j in range(n - i - 1):\n            if a[j] > a[j + 1]:\n                t = a[j]\n                a[j] = a[j + 1]\n                a[j + 1] = t\n    return a\n",
        &[],
        &[vec![PyValue::ints(&[4, 1, 3, 2])], vec![PyValue::reals(&[0.5, -1.25, 3.0])]],
    );
}

#[test]
fn sqrt_of_magnitude() {
    check(
        "import math\ndef f(x):\n    if x > 0:\n        y = math.sqrt(x)\n    else:\n        y = math.sqrt(-x)\n    return y\n",
        &[],
        &[vec![PyValue::Real(4.0)], vec![PyValue::Real(-4.0)], vec![PyValue::Real(0.3)]],
    );
}

#[test]
fn mean_and_variance_with_clear_length() {
    check(
        "def f(a, n):\n    s = 0.0\n    for i in range(n):\n        s += a[i]\n    m = s / n\n    v = 0.0\n    for i in range(n):\n        v += (a[i] - m) ** 2\n    return v / n\n",
        &["n"],
        &[vec![PyValue::reals(&[1.0, 2.0, 4.0]), PyValue::int(3)]],
    );
}

#[test]
fn count_and_max() {
    check(
        "def f(a, t):\n    c = 0\n    m = a[0]\n    for x in a:\n        if x > t:\n            c += 1\n        m = max(m, x)\n    return c + m\n",
        &[],
        &[vec![PyValue::ints(&[3, 9, 1, 7]), PyValue::int(4)]],
    );
}

#[test]
fn sigmoid_via_exp() {
    check(
        "import math\ndef f(x):\n    return 1 / (1 + math.exp(-x))\n",
        &[],
        &[vec![PyValue::Real(0.5)], vec![PyValue::Real(-2.0)]],
    );
}
