use super::replay::{Action, Replay};
use super::{analysis::regenerate, DebugError};
use crate::qasm::{CircuitIR, Op};
use crate::sim::{EngineConfig, SimError};
use crate::state::{
    fidelity, pauli_expectation, purity, Complex64, DensityMatrix, Pauli, PauliString, QuantumState,
};
use nalgebra::DMatrix;
use serde::Serialize;
use std::collections::BTreeMap;
use std::f64::consts::PI;

/// Settings grow as `4^k`, so reconstructions are limited to this many qubits.
pub const MAX_TOMOGRAPHY_QUBITS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TomographyShots {
    /// Expectations computed from the simulated state.
    Exact,
    Finite(u64),
}

#[derive(Debug, Clone, Serialize)]
pub struct TomographyResult {
    pub qubits: Vec<usize>,
    /// `None` in exact mode.
    pub shots_per_setting: Option<u64>,
    pub settings: Vec<String>,
    /// Estimated expectation of each setting.
    pub expectations: BTreeMap<String, f64>,
    /// Purity of the linear-inversion estimate before projection.
    pub raw_purity: f64,
    #[serde(serialize_with = "serialize_density")]
    pub estimate: DensityMatrix,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fidelity: Option<f64>,
}

fn serialize_density<S: serde::Serializer>(rho: &DensityMatrix, s: S) -> Result<S::Ok, S::Error> {
    rho.snapshot().serialize(s)
}

/// Basis changes taking each non-identity factor of `pauli` to Z, and the
/// qubits to measure.
fn setting_rotations(qubits: &[usize], pauli: &PauliString) -> (Vec<Op>, Vec<usize>) {
    let mut rotations = Vec::new();
    let mut measured = Vec::new();
    for (&q, p) in qubits.iter().zip(pauli.labels()) {
        if *p == Pauli::I {
            continue;
        }
        if *p == Pauli::Y {
            rotations.push(Op::U {
                qubit: q,
                theta: 0.0,
                phi: 0.0,
                lambda: -PI / 2.0,
            });
        }
        if matches!(p, Pauli::X | Pauli::Y) {
            rotations.push(Op::U {
                qubit: q,
                theta: PI / 2.0,
                phi: 0.0,
                lambda: PI,
            });
        }
        measured.push(q);
    }
    (rotations, measured)
}

/// Parity estimate of `pauli` from `shots` replays.
pub(crate) fn sampled_expectation(
    replay: &Replay<'_>,
    qubits: &[usize],
    pauli: &PauliString,
    shots: u64,
    seed: u64,
) -> Result<f64, DebugError> {
    let (rotations, measured) = setting_rotations(qubits, pauli);
    let counts = replay.sample(&rotations, &measured, &[], shots, seed)?;
    let total: i64 = counts
        .iter()
        .map(|(key, count)| {
            let ones = key.bytes().filter(|b| *b == b'1').count();
            if ones % 2 == 0 {
                *count as i64
            } else {
                -(*count as i64)
            }
        })
        .sum();
    Ok(total as f64 / shots as f64)
}

fn embed(n: usize, qubits: &[usize], pauli: &PauliString) -> PauliString {
    let mut labels = vec![Pauli::I; n];
    for (&q, &p) in qubits.iter().zip(pauli.labels()) {
        labels[q] = p;
    }
    PauliString::new(labels)
}

/// Where expectations come from.
pub(crate) enum Source<'a> {
    Exact(&'a QuantumState),
    Sampled { replay: Replay<'a>, shots: u64, seed: u64 },
}

pub(crate) fn check_qubits(qubits: &[usize], n_qubits: usize) -> Result<Vec<usize>, DebugError> {
    let mut qubits = qubits.to_vec();
    qubits.sort_unstable();
    if let Some(w) = qubits.windows(2).find(|w| w[0] == w[1]) {
        return Err(DebugError::InvalidOperand(format!("qubit {} listed twice", w[0])));
    }
    if qubits.is_empty() || qubits.len() > MAX_TOMOGRAPHY_QUBITS {
        return Err(DebugError::TooManyQubits {
            requested: qubits.len(),
            limit: MAX_TOMOGRAPHY_QUBITS,
        });
    }
    if let Some(&q) = qubits.iter().find(|&&q| q >= n_qubits) {
        return Err(DebugError::InvalidOperand(format!("qubit {q} out of range")));
    }
    Ok(qubits)
}

/// Reconstruction on sorted, validated `qubits`. Setting `i` (in
/// lexicographic order, identity excluded) is sampled with seed `seed + i`.
pub(crate) fn reconstruct(
    source: &Source<'_>,
    qubits: &[usize],
    n_qubits: usize,
    reference: Option<&QuantumState>,
) -> Result<TomographyResult, DebugError> {
    let k = qubits.len();
    let dim = 1usize << k;
    let mut raw = DMatrix::<Complex64>::identity(dim, dim);
    let mut settings = Vec::new();
    let mut expectations = BTreeMap::new();
    for (index, pauli) in PauliString::all(k).into_iter().enumerate().skip(1) {
        let value = match source {
            Source::Exact(state) => pauli_expectation(state, &embed(n_qubits, qubits, &pauli))?,
            Source::Sampled { replay, shots, seed } => {
                sampled_expectation(replay, qubits, &pauli, *shots, seed.wrapping_add(index as u64))?
            }
        };
        raw += pauli.matrix() * Complex64::from(value);
        settings.push(pauli.to_string());
        expectations.insert(pauli.to_string(), value);
    }
    raw /= Complex64::from(dim as f64);
    let raw = DensityMatrix::from_matrix_unchecked(raw);
    let raw_purity = purity(&raw);
    let estimate = raw.project_to_physical();
    let fidelity = reference.map(|r| fidelity(r, &estimate)).transpose()?;
    Ok(TomographyResult {
        qubits: qubits.to_vec(),
        shots_per_setting: match source {
            Source::Exact(_) => None,
            Source::Sampled { shots, .. } => Some(*shots),
        },
        settings,
        expectations,
        raw_purity,
        estimate,
        fidelity,
    })
}

/// Linear-inversion tomography of the reduced state on `qubits` after the
/// measurement-free preparation `ir` acting on `|0...0>`.
///
/// Each non-identity Pauli setting is sampled with its own seed,
/// `config.seed + setting index`. The estimate is projected onto the
/// physical states; `reference` adds the fidelity against a pure state of
/// the same qubits.
pub fn tomography(
    ir: &CircuitIR,
    qubits: &[usize],
    shots: TomographyShots,
    config: &EngineConfig,
    reference: Option<&QuantumState>,
) -> Result<TomographyResult, DebugError> {
    let qubits = check_qubits(qubits, ir.n_qubits)?;
    if let Some(i) = ir.first_non_unitary(ir.instructions.len()) {
        return Err(DebugError::NonUnitaryPreparation {
            instruction: i,
            kind: ir.instructions[i].op.name().to_string(),
        });
    }
    match shots {
        TomographyShots::Exact => {
            let state = regenerate(ir, &QuantumState::zero(ir.n_qubits)?)?;
            reconstruct(&Source::Exact(&state), &qubits, ir.n_qubits, reference)
        }
        TomographyShots::Finite(0) => Err(DebugError::Sim(SimError::InvalidConfig("shots must be positive".into()))),
        TomographyShots::Finite(n) => {
            let actions: Vec<Action> = ir.instructions.iter().map(|i| Action::Op(i.op.clone())).collect();
            let replay = Replay {
                ir,
                actions: &actions,
                config,
            };
            let source = Source::Sampled {
                replay,
                shots: n,
                seed: config.seed,
            };
            reconstruct(&source, &qubits, ir.n_qubits, reference)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qasm::{compile, CompileOptions};
    use crate::sim::Method;
    use crate::state::partial_trace;

    fn ir(body: &str) -> CircuitIR {
        compile(
            &format!("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n{body}"),
            &CompileOptions::default(),
        )
        .unwrap()
    }

    fn cfg(seed: u64) -> EngineConfig {
        EngineConfig::new(Method::DenseInplace, seed, 1)
    }

    #[test]
    fn exact_matches_partial_trace() {
        let p = ir("qreg q[3]; h q[0]; cx q[0],q[1]; ry(0.3) q[2]; s q[2];");
        let state = regenerate(&p, &QuantumState::zero(3).unwrap()).unwrap();
        for qs in [vec![0], vec![2], vec![0, 1], vec![1, 2], vec![0, 1, 2]] {
            let t = tomography(&p, &qs, TomographyShots::Exact, &cfg(0), None).unwrap();
            let truth = partial_trace(&state, &qs).unwrap();
            assert!(t.estimate.max_abs_diff(&truth) < 1e-10, "{qs:?}");
        }
    }

    #[test]
    fn plus_state_sampled() {
        let p = ir("qreg q[1]; h q[0];");
        let plus = QuantumState::normalized(vec![1.0.into(), 1.0.into()]).unwrap();
        let t = tomography(&p, &[0], TomographyShots::Finite(10_000), &cfg(5), Some(&plus)).unwrap();
        assert!(t.fidelity.unwrap() >= 0.99);
        assert_eq!(t.settings, vec!["X", "Y", "Z"]);
    }

    #[test]
    fn y_basis_sign() {
        let p = ir("qreg q[1]; h q[0]; s q[0];");
        let t = tomography(&p, &[0], TomographyShots::Finite(200), &cfg(1), None).unwrap();
        assert_eq!(t.expectations["Y"], 1.0);
    }

    #[test]
    fn bell_correlations() {
        let p = ir("qreg q[2]; h q[0]; cx q[0],q[1];");
        let t = tomography(&p, &[0, 1], TomographyShots::Finite(10_000), &cfg(2), None).unwrap();
        assert!(t.expectations["XX"] >= 0.9 && t.expectations["ZZ"] >= 0.9);
        assert!(t.expectations["XI"].abs() <= 0.05);
    }

    #[test]
    fn refusals() {
        let p = ir("qreg q[4]; creg c[1]; h q[0];");
        assert!(matches!(
            tomography(&p, &[0, 1, 2, 3], TomographyShots::Exact, &cfg(0), None),
            Err(DebugError::TooManyQubits { .. })
        ));
        let m = ir("qreg q[1]; creg c[1]; measure q[0] -> c[0];");
        assert!(matches!(
            tomography(&m, &[0], TomographyShots::Exact, &cfg(0), None),
            Err(DebugError::NonUnitaryPreparation { .. })
        ));
    }
}
