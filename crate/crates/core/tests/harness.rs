mod common;

use common::{compile_str, load, program_path, random_program};
use num_bigint::BigUint;
use proptest::prelude::*;
use qdb::harness::{
    chernoff_shots, compare_distributions, compare_samples, cross_engine_verify, run_test_suite, run_test_suite_str,
    total_variation, validate_grover, validate_shor_factors, Verdict,
};
use qdb::sim::{EngineConfig, Method};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

#[test]
fn chernoff_reference_value() {
    assert_eq!(chernoff_shots(0.05, 0.01).unwrap().shots, 1060);
    let oracle = |e: f64, d: f64| ((2.0 / d).ln() / (2.0 * e * e)).ceil() as u64;
    for (e, d) in [(0.1, 0.05), (0.01, 0.001), (0.2, 0.5)] {
        assert_eq!(chernoff_shots(e, d).unwrap().shots, oracle(e, d));
    }
    for (e, d) in [(0.0, 0.1), (1.0, 0.1), (0.1, 0.0), (0.1, 1.5), (f64::NAN, 0.1)] {
        assert!(chernoff_shots(e, d).is_err(), "{e} {d}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn chernoff_is_monotone(e1 in 0.001f64..0.99, e2 in 0.001f64..0.99, d1 in 0.001f64..0.99, d2 in 0.001f64..0.99) {
        let n = |e, d| chernoff_shots(e, d).unwrap().shots;
        let (lo_e, hi_e) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let (lo_d, hi_d) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        prop_assert!(n(lo_e, d1) >= n(hi_e, d1));
        prop_assert!(n(e1, lo_d) >= n(e1, hi_d));
    }

    #[test]
    fn shor_validation_matches_product_rule(n in 2u64..5000, factors in prop::collection::vec(0u64..200, 0..5)) {
        let expected = !factors.is_empty()
            && factors.iter().all(|&f| f > 1 && f < n)
            && factors.iter().map(|&f| f as u128).product::<u128>() == n as u128;
        let big: Vec<BigUint> = factors.iter().map(|&f| BigUint::from(f)).collect();
        prop_assert_eq!(validate_shor_factors(&BigUint::from(n), &big).valid, expected);
    }
}

fn sample(dist: &BTreeMap<String, f64>, shots: u64, rng: &mut ChaCha8Rng) -> BTreeMap<String, u64> {
    let mut counts = BTreeMap::new();
    for _ in 0..shots {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = dist.keys().last().unwrap();
        for (k, p) in dist {
            acc += p;
            if u < acc {
                chosen = k;
                break;
            }
        }
        *counts.entry(chosen.clone()).or_insert(0) += 1;
    }
    counts
}

#[test]
fn self_comparison_passes_at_least_98_percent() {
    let shots = chernoff_shots(0.05, 0.01).unwrap().shots;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for trial in 0..5 {
        let k = rng.random_range(2..=8);
        let weights: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
        let total: f64 = weights.iter().sum();
        let dist: BTreeMap<String, f64> = weights
            .iter()
            .enumerate()
            .map(|(i, w)| (format!("{i:03b}"), w / total))
            .collect();
        let passes = (0..100)
            .filter(|seed| {
                let mut r = ChaCha8Rng::seed_from_u64(1000 * trial + seed);
                let counts = sample(&dist, shots, &mut r);
                compare_distributions(&counts, &dist, 0.01).unwrap().verdict == Verdict::Pass
            })
            .count();
        assert!(passes >= 98, "trial {trial}: {passes}/100");
    }
}

#[test]
fn distribution_checks_reject_wrong_distributions() {
    let expected: BTreeMap<String, f64> = [("00".to_string(), 0.5), ("11".to_string(), 0.5)].into();
    let skewed: BTreeMap<String, u64> = [("00".to_string(), 700), ("11".to_string(), 300)].into();
    assert_eq!(compare_distributions(&skewed, &expected, 0.01).unwrap().verdict, Verdict::Fail);
    let impossible: BTreeMap<String, u64> = [("00".to_string(), 500), ("01".to_string(), 1), ("11".to_string(), 499)].into();
    let v = compare_distributions(&impossible, &expected, 0.01).unwrap();
    assert_eq!((v.verdict, v.p_value), (Verdict::Fail, 0.0));
    assert!(compare_distributions(&BTreeMap::new(), &expected, 0.01).is_err());
    let a: BTreeMap<String, f64> = [("0".to_string(), 1.0)].into();
    let b: BTreeMap<String, f64> = [("1".to_string(), 1.0)].into();
    assert_eq!(total_variation(&a, &b), 1.0);
    let same = compare_samples(&skewed, &skewed, 0.01).unwrap();
    assert_eq!(same.verdict, Verdict::Pass);
}

#[test]
fn cross_engine_is_reflexive() {
    for i in 0..20u64 {
        let ir = compile_str(&random_program(1 + (i as usize % 5), 25, 40 + i, true));
        for method in [Method::DenseInplace, Method::NaiveMatrix] {
            let c = EngineConfig::new(method, i, 0);
            let report = cross_engine_verify(&ir, &[c.clone(), c], 500).unwrap();
            assert_eq!(report.verdict, Verdict::Pass);
            assert!(report.pairs.iter().all(|p| p.identical_counts));
        }
    }
}

#[test]
fn injected_fault_is_detected() {
    for name in ["fig6.qasm", "fig7.qasm"] {
        let ir = load(name);
        let good = EngineConfig::new(Method::DenseInplace, 1, 0);
        let mut bad = EngineConfig::new(Method::NaiveMatrix, 1, 0);
        bad.fault_flip_cx = true;
        let report = cross_engine_verify(&ir, &[good, bad], 2048).unwrap();
        assert_eq!(report.verdict, Verdict::Fail, "{name}");
        assert!(report.witness.is_some());
    }
    assert!(cross_engine_verify(&load("fig4.qasm"), &[EngineConfig::default()], 10).is_err());
}

#[test]
fn grover_validation_calls_predicate_once() {
    let items = ["a", "b", "c"];
    for index in 0..3 {
        let mut calls = 0;
        let outcome = validate_grover(&items, index, |s| {
            calls += 1;
            *s == "b"
        })
        .unwrap();
        assert_eq!(calls, 1);
        assert_eq!(outcome.valid, index == 1);
    }
    assert!(validate_grover(&items, 3, |_| true).is_err());
}

#[test]
fn figures_suite_passes() {
    let report = run_test_suite(&program_path("figures.toml")).unwrap();
    assert_eq!(report.verdict, Verdict::Pass);
    assert_eq!((report.passed, report.failed), (5, 0));
    assert_eq!(report.exit_code(), 0);
}

#[test]
fn suite_reports_failures_and_bad_input() {
    let dir = program_path("");
    let text = r#"
[[case]]
name = "wrong expectation"
program = "fig4.qasm"
shots = 2000
tolerance = 0.05
[case.expected]
"0" = 0.9
"1" = 0.1

[[case]]
name = "wrong factors"
[[case.validators]]
kind = "shor"
n = "21"
factors = ["3", "5"]
"#;
    let report = run_test_suite_str(text, &dir).unwrap();
    assert_eq!(report.failed, 2);
    assert_eq!(report.exit_code(), 1);
    assert!(run_test_suite_str("[[case]]\nname = \"x\"\nunknown = 1\n", &dir).is_err());
    assert!(run_test_suite_str("", &dir).is_err());
}
