mod common;

use common::{compile_str, load, random_program};
use qdb::debug::cloning::copy_fidelities;
use qdb::debug::{
    check_superposition_known_input, exact_clone_ops, regenerate, separability_report, tomography, universal_cloner,
    DebugError, DebugSession, Inspection, Location, Mode, SessionConfig, StopReason, TomographyShots,
};
use qdb::harness::Verdict;
use qdb::qasm::CircuitIR;
use qdb::sim::{execute, EngineConfig, Method};
use qdb::state::{gates, partial_trace, tensor, Complex64, QuantumState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn random_qubit(rng: &mut ChaCha8Rng) -> QuantumState {
    let theta: f64 = rng.random_range(0.0..PI);
    let phi: f64 = rng.random_range(0.0..2.0 * PI);
    QuantumState::from_amplitudes(vec![c((theta / 2.0).cos(), 0.0), Complex64::from_polar((theta / 2.0).sin(), phi)])
        .unwrap()
}

fn random_u(rng: &mut ChaCha8Rng) -> qdb::state::GateMatrix {
    gates::u(rng.random_range(0.0..PI), rng.random_range(-PI..PI), rng.random_range(-PI..PI))
}

fn session(ir: CircuitIR, mode: Mode) -> DebugSession {
    let config = SessionConfig {
        mode,
        seed: 17,
        ..SessionConfig::default()
    };
    DebugSession::new(ir, &config).unwrap()
}

#[test]
fn device_mode_never_reads_amplitudes() {
    let mut s = session(load("fig6_checked.qasm"), Mode::Device);
    s.set_breakpoint(Location::Line(15)).unwrap();
    let stop = s.resume().unwrap();
    assert_eq!(stop.reason, StopReason::Breakpoint);
    assert_eq!(stop.assertions.len(), 4);
    assert!(matches!(s.inspect_state().unwrap(), Inspection::Histogram { .. }));
    s.probability(2).unwrap();
    s.separability(false).unwrap();
    s.tomography(&[0, 1], TomographyShots::Finite(500)).unwrap();
    assert!(matches!(
        s.tomography(&[0], TomographyShots::Exact),
        Err(DebugError::DeviceMode(_))
    ));
    assert!(matches!(s.describe(&[]), Err(DebugError::DeviceMode(_))));
    let stop = s.resume().unwrap();
    assert_eq!(stop.reason, StopReason::Finished);
    assert_eq!(s.assertion_results().len(), 5);
    assert_eq!(s.state_reads(), 0);

    let mut s = session(compile_str("OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[3];\nh q[0];\n"), Mode::Device);
    s.resume().unwrap();
    let report = s.universal_clone(0, 1, 2).unwrap();
    assert!(report.fidelities.is_none());
    s.inspect_state().unwrap();
    assert_eq!(s.state_reads(), 0);
}

#[test]
fn device_assertions_pass_on_fig6() {
    let mut s = session(load("fig6_checked.qasm"), Mode::Device);
    s.set_shot_budget(4000).unwrap();
    s.resume().unwrap();
    for r in s.assertion_results() {
        assert_eq!(r.verdict, Verdict::Pass, "{}", r.directive);
    }
}

#[test]
fn small_budget_is_inconclusive() {
    let mut s = session(load("fig6_checked.qasm"), Mode::Device);
    s.set_shot_budget(50).unwrap();
    s.resume().unwrap();
    let first = &s.assertion_results()[0];
    assert_eq!(first.verdict, Verdict::Inconclusive, "{}", first.directive);
}

#[test]
fn failing_assertions_are_reported() {
    let src = "OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[2];\nh q[0];\n// @qdb assert-classical q -> 00\n// @qdb assert-entangled q[0],q[1]\ncx q[0],q[1];\n// @qdb assert-separable q[0]\n// @qdb assert-superposition q[1]\n";
    for mode in [Mode::Omniscient, Mode::Device] {
        let mut s = session(compile_str(src), mode);
        s.set_shot_budget(4000).unwrap();
        s.resume().unwrap();
        let verdicts: Vec<Verdict> = s.assertion_results().iter().map(|r| r.verdict).collect();
        assert_eq!(verdicts, [Verdict::Fail, Verdict::Fail, Verdict::Fail, Verdict::Pass], "{mode:?}");
    }
}

#[test]
fn breakpoints_and_stepping() {
    let mut s = session(load("fig6.qasm"), Mode::Omniscient);
    assert_eq!(s.set_breakpoint(Location::Line(9)).unwrap(), 2);
    assert!(matches!(s.set_breakpoint(Location::Line(3)), Err(DebugError::UnresolvableLocation(_))));
    let stop = s.resume().unwrap();
    assert_eq!((stop.reason, stop.position, stop.line), (StopReason::Breakpoint, 2, Some(9)));
    let stop = s.step().unwrap();
    assert_eq!((stop.reason, stop.position), (StopReason::Step, 3));
    assert!(s.clear_breakpoint(Location::Index(2)).unwrap());
    s.restart().unwrap();
    assert_eq!(s.resume().unwrap().reason, StopReason::Finished);
    assert_eq!(s.position(), s.len());
}

#[test]
fn regeneration_matches_naive_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for i in 0..100u64 {
        let n = rng.random_range(1..=5);
        let src = random_program(n, rng.random_range(1..25), 300 + i, false);
        let bits: String = (0..n).map(|_| if rng.random() { '1' } else { '0' }).collect();
        let report = check_superposition_known_input(&compile_str(&src), Some(&bits)).unwrap();
        let total: f64 = report.support.iter().map(|e| e.probability).sum();
        assert!((total - 1.0).abs() <= 1e-9, "circuit {i}");

        let mut oracle_src = src.replace("creg c", "creg unused");
        let creg = oracle_src.find("creg").unwrap();
        let header_end = creg + oracle_src[creg..].find(";\n").unwrap() + 2;
        let flips: String = bits
            .chars()
            .enumerate()
            .filter(|(_, b)| *b == '1')
            .map(|(q, _)| format!("x q[{q}];\n"))
            .collect();
        oracle_src.insert_str(header_end, &flips);
        let mut config = EngineConfig::new(Method::NaiveMatrix, 0, 1);
        config.record_statevector = true;
        let oracle = execute(&compile_str(&oracle_src), &config)
            .unwrap()
            .final_state
            .unwrap()
            .to_state()
            .unwrap();
        for e in &report.support {
            let idx = usize::from_str_radix(&e.bits, 2).unwrap();
            assert!((e.probability - oracle.amplitudes()[idx].norm_sqr()).abs() <= 1e-10, "circuit {i}");
        }
    }
    assert!(matches!(
        check_superposition_known_input(&compile_str("OPENQASM 2.0;\nqreg q[1];\n"), None),
        Err(DebugError::UnknownInput)
    ));
}

#[test]
fn product_states_are_separable() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..100 {
        let n = rng.random_range(1..=5);
        let mut s = random_qubit(&mut rng);
        for _ in 1..n {
            s = tensor(&s, &random_qubit(&mut rng)).unwrap();
        }
        let r = separability_report(&s, true).unwrap();
        assert!(r.qubits.iter().all(|q| !q.entangled && q.purity >= 1.0 - 1e-9));
        assert!(r.bipartitions.unwrap_or_default().iter().all(|b| !b.entangled));
    }
}

#[test]
fn locally_rotated_bell_pairs_are_entangled() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let h = 0.5f64.sqrt();
    let bell = QuantumState::from_amplitudes(vec![c(h, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(h, 0.0)]).unwrap();
    for _ in 0..100 {
        let extra = rng.random_range(0..=2);
        let mut s = bell.clone();
        for _ in 0..extra {
            s = tensor(&s, &random_qubit(&mut rng)).unwrap();
        }
        for q in 0..s.n_qubits() {
            s.apply_1q(&random_u(&mut rng), q).unwrap();
        }
        let r = separability_report(&s, false).unwrap();
        assert!(r.qubits[0].entangled && r.qubits[1].entangled);
        assert!((r.qubits[0].purity - 0.5).abs() <= 1e-9);
        assert!(r.qubits[2..].iter().all(|q| !q.entangled));
    }
}

fn hadamard_state(n: usize, j: usize) -> QuantumState {
    let amps = (0..1usize << n)
        .map(|x| {
            let sign = if (j & x).count_ones() & 1 == 0 { 1.0 } else { -1.0 };
            c(sign / ((1usize << n) as f64).sqrt(), 0.0)
        })
        .collect();
    QuantumState::from_amplitudes(amps).unwrap()
}

#[test]
fn exact_cloner_copies_every_family_member() {
    for n in 1..=4usize {
        let source: Vec<usize> = (0..n).collect();
        let blank: Vec<usize> = (n..2 * n).collect();
        let ir = CircuitIR::from_ops(2 * n, 0, exact_clone_ops(&source, &blank).unwrap());
        for j in 0..1usize << n {
            let psi = hadamard_state(n, j);
            let input = tensor(&psi, &QuantumState::zero(n).unwrap()).unwrap();
            let out = regenerate(&ir, &input).unwrap();
            let want = tensor(&psi, &psi).unwrap();
            let overlap: Complex64 = out.amplitudes().iter().zip(want.amplitudes()).map(|(a, b)| a.conj() * b).sum();
            assert!(overlap.norm_sqr() >= 1.0 - 1e-9, "n = {n}, j = {j}");
        }
    }
}

#[test]
fn exact_clone_in_a_session() {
    let src = "OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[4];\nx q[1];\nh q[0];\nh q[1];\n";
    let mut s = session(compile_str(src), Mode::Omniscient);
    s.resume().unwrap();
    assert!(matches!(s.exact_clone(&[0, 1], &[1, 2]), Err(DebugError::RegisterOverlap(1))));
    assert!(matches!(s.exact_clone(&[2], &[1]), Err(DebugError::BlankNotZero(1))));
    s.exact_clone(&[0, 1], &[2, 3]).unwrap();
    let r = s.separability(false).unwrap();
    assert!(r.qubits.iter().all(|q| !q.entangled));
    let p = s.probability(3).unwrap();
    assert!((p.p1 - 0.5).abs() < 1e-12);
}

#[test]
fn universal_cloner_gives_five_sixths() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let cloner = universal_cloner();
    for _ in 0..100 {
        let input = random_qubit(&mut rng);
        let mut s = tensor(&input, &QuantumState::zero(2).unwrap()).unwrap();
        s.apply_gate(&cloner, &[0, 1, 2]).unwrap();
        for f in copy_fidelities(&s, [0, 1], &input).unwrap() {
            assert!((f - 5.0 / 6.0).abs() <= 1e-9, "{f}");
        }
    }
    let src = "OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[3];\nu3(1.1,0.3,0) q[1];\n";
    let mut s = session(compile_str(src), Mode::Omniscient);
    s.resume().unwrap();
    let r = s.universal_clone(1, 2, 0).unwrap();
    for f in r.fidelities.unwrap() {
        assert!((f - 5.0 / 6.0).abs() <= 1e-9);
    }
}

#[test]
fn exact_tomography_matches_reduced_states() {
    for seed in 0..20u64 {
        let ir = compile_str(&random_program(4, 30, 900 + seed, false));
        let truth = regenerate(&ir, &QuantumState::zero(4).unwrap()).unwrap();
        for qubits in [vec![0], vec![3], vec![1, 2], vec![2, 0], vec![0, 1, 3], vec![3, 2, 1]] {
            let t = tomography(&ir, &qubits, TomographyShots::Exact, &EngineConfig::default(), None).unwrap();
            let rho = partial_trace(&truth, &qubits).unwrap();
            let err = t.estimate.max_abs_diff(&rho);
            assert!(err <= 1e-10, "seed {seed} qubits {qubits:?}: {err:e}");
        }
    }
}

#[test]
fn sampled_tomography_converges() {
    let ir = compile_str(&random_program(3, 20, 5, false));
    let truth = regenerate(&ir, &QuantumState::zero(3).unwrap()).unwrap();
    let rho = partial_trace(&truth, &[0, 2]).unwrap();
    let t = tomography(
        &ir,
        &[0, 2],
        TomographyShots::Finite(20_000),
        &EngineConfig::new(Method::DenseInplace, 1, 1),
        None,
    )
    .unwrap();
    assert!(t.estimate.max_abs_diff(&rho) < 0.05);
    assert_eq!(t.settings.len(), 15);
    assert!(matches!(
        tomography(&ir, &[0, 1, 0], TomographyShots::Exact, &EngineConfig::default(), None),
        Err(DebugError::InvalidOperand(_))
    ));
    assert!(matches!(
        tomography(&ir, &[], TomographyShots::Exact, &EngineConfig::default(), None),
        Err(DebugError::TooManyQubits { .. })
    ));
}

#[test]
fn tomography_refuses_measured_preparations() {
    assert!(matches!(
        tomography(&load("fig6.qasm"), &[0], TomographyShots::Exact, &EngineConfig::default(), None),
        Err(DebugError::NonUnitaryPreparation { .. })
    ));
}
