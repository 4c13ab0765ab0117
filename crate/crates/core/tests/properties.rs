use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pyspdz::emit::{emit_cfp, Interface, SpdzProgram};
use pyspdz::frontend::{load_program, parse_expr_source, parse_source, render, render_expr};
use pyspdz::harness::{bundled_corpus, pass_at_k, CorpusEntry};
use pyspdz::pipeline::{PipelineConfig, TranslateOptions, Translator};
use pyspdz::pyexec::{run, values_match, Comparison, NdArray, PyValue};
use pyspdz::rules::{refactor_with, Cfp};
use pyspdz::spdzsim::{check_trace_oblivious, exec, random_pairs, SimConfig};

fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

proptest! {
    #[test]
    fn pass_at_k_is_the_binomial_ratio(n in 1u64..=20, c_frac in 0.0f64..=1.0, k_frac in 0.0f64..=1.0) {
        let c = (c_frac * n as f64).round() as u64;
        let k = 1 + (k_frac * (n - 1) as f64).round() as u64;
        let want = 1.0 - binomial(n - c, k) as f64 / binomial(n, k) as f64;
        let got = pass_at_k(n, c, k).unwrap();
        prop_assert!((got - want).abs() < 1e-12, "({n},{c},{k}) {got} vs {want}");
    }

    #[test]
    fn pass_at_k_is_monotone(n in 1u64..=30, c in 0u64..=30, k in 1u64..=30) {
        let (c, k) = (c.min(n), k.min(n));
        let p = pass_at_k(n, c, k).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
        if c < n {
            prop_assert!(pass_at_k(n, c + 1, k).unwrap() >= p - 1e-15);
        }
        if k < n {
            prop_assert!(pass_at_k(n, c, k + 1).unwrap() >= p - 1e-15);
        }
    }
}

fn corpus() -> &'static [CorpusEntry] {
    use std::sync::OnceLock;
    static CORPUS: OnceLock<Vec<CorpusEntry>> = OnceLock::new();
    CORPUS.get_or_init(bundled_corpus)
}

fn refactored(e: &CorpusEntry) -> Cfp {
    let program = load_program(&e.source).unwrap();
    let iface = Interface::from_cases(program.function().unwrap(), &e.clear_set(), &e.cases);
    refactor_with(&program, &iface).unwrap()
}

/// Same shape and type as `v`, fresh values.
fn perturb(v: &PyValue, rng: &mut ChaCha8Rng) -> PyValue {
    let real = |rng: &mut ChaCha8Rng| (rng.gen_range(-500..=500) as f64) / 100.0;
    match v {
        PyValue::Int(_) => PyValue::int(rng.gen_range(-20..=20)),
        PyValue::Real(_) => PyValue::Real(real(rng)),
        PyValue::List(items) => PyValue::List(items.iter().map(|x| perturb(x, rng)).collect()),
        PyValue::Array(a) => {
            let data = a
                .data
                .iter()
                .map(|_| if a.dtype.name().starts_with("int") { rng.gen_range(-20..=20) as f64 } else { real(rng) })
                .collect();
            PyValue::Array(NdArray {
                dtype: a.dtype,
                shape: a.shape.clone(),
                data,
            })
        }
        other => other.clone(),
    }
}

fn random_inputs(e: &CorpusEntry, seed: u64) -> Vec<PyValue> {
    let program = load_program(&e.source).unwrap();
    let params = &program.function().unwrap().params;
    let clear = e.clear_set();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    params
        .iter()
        .zip(&e.cases[0].inputs)
        .map(|(p, v)| if clear.contains(&p.name) { v.clone() } else { perturb(v, &mut rng) })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn refactoring_preserves_semantics_on_fresh_inputs(idx in 0usize..1000, seed in any::<u64>()) {
        let e = &corpus()[idx % corpus().len()];
        let inputs = random_inputs(e, seed);
        let program = load_program(&e.source).unwrap();
        // outside the real domain the total basis functions may differ
        let want = match run(&program, &inputs) {
            Ok(v) if v.flatten().is_some_and(|(_, xs)| xs.iter().all(|x| x.is_finite())) => v,
            _ => return Ok(()),
        };
        let cfp = refactored(e);
        let got = run(&cfp.ast, &inputs);
        prop_assert!(got.is_ok(), "{}: {inputs:?}: {:?}\n{}", e.id, got, render(&cfp.ast));
        let got = got.unwrap();
        prop_assert!(values_match(&got, &want, Comparison::RelTol(1e-9)), "{}: {inputs:?}: {got} vs {want}", e.id);
    }

    #[test]
    fn emitted_programs_stay_oblivious(idx in 0usize..1000, seed in any::<u64>()) {
        let e = &corpus()[idx % corpus().len()];
        let spdz = emit_cfp(&refactored(e), &e.clear_set()).unwrap().program;
        let pairs = random_pairs(&spdz, &e.cases[0].inputs, 4, seed);
        let report = check_trace_oblivious(&spdz, &pairs, &SimConfig::default()).unwrap();
        prop_assert!(report.oblivious, "{}: {:?}", e.id, report.divergence);
    }

    #[test]
    fn simulation_is_deterministic(idx in 0usize..1000, seed in any::<u64>()) {
        let e = &corpus()[idx % corpus().len()];
        let spdz = emit_cfp(&refactored(e), &e.clear_set()).unwrap().program;
        let inputs = random_inputs(e, seed);
        let cfg = SimConfig::default();
        let (a, b) = (exec(&spdz, &inputs, &cfg), exec(&spdz, &inputs, &cfg));
        prop_assert_eq!(a.trace, b.trace);
        prop_assert_eq!(format!("{:?}", a.result), format!("{:?}", b.result));
    }
}

fn expr_text() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        (0i64..1000).prop_map(|v| v.to_string()),
        (0u32..100).prop_map(|v| format!("{}.5", v)),
        prop::sample::select(vec!["x", "y", "a[i]", "n", "True", "False", "math.pi"]).prop_map(String::from),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            (inner.clone(), prop::sample::select(vec!["+", "-", "*", "/", "//", "%", "**", "<", "<=", "==", "!=", "and", "or"]), inner.clone())
                .prop_map(|(l, op, r)| format!("({l} {op} {r})")),
            inner.clone().prop_map(|x| format!("(-{x})")),
            inner.clone().prop_map(|x| format!("(not {x})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("max({a}, {b})")),
            (inner.clone(), inner.clone(), inner).prop_map(|(a, b, c)| format!("({a} if {b} else {c})")),
        ]
    })
}

proptest! {
    #[test]
    fn expressions_round_trip(text in expr_text()) {
        let e = parse_expr_source(&text).unwrap();
        let again = parse_expr_source(&render_expr(&e)).unwrap();
        prop_assert_eq!(&again, &e, "{}", render_expr(&e));
    }
}

#[test]
fn corpus_and_outputs_round_trip() {
    for e in corpus() {
        let src = parse_source(&e.source).unwrap();
        assert_eq!(parse_source(&render(&src)).unwrap(), src, "{}", e.id);
        let cfp = refactored(e);
        assert_eq!(parse_source(&render(&cfp.ast)).unwrap(), cfp.ast, "{}", e.id);
        let spdz = emit_cfp(&cfp, &e.clear_set()).unwrap().program;
        assert_eq!(SpdzProgram::parse(&pyspdz::emit::emit_source(&spdz)).unwrap(), spdz, "{}", e.id);
    }
}

#[test]
fn translation_is_reproducible() {
    let t = Translator::new(PipelineConfig::default()).unwrap();
    for e in corpus().iter().step_by(5) {
        let go = || t.translate(&e.source, &e.cases, &e.clear_set(), TranslateOptions::default()).unwrap();
        assert_eq!(serde_json::to_string(&go()).unwrap(), serde_json::to_string(&go()).unwrap(), "{}", e.id);
    }
}
