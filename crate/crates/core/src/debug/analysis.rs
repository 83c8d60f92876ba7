use super::DebugError;
use crate::qasm::{CircuitIR, Op};
use crate::state::{
    equal_up_to_global_phase, gates, index_to_bits, partial_trace, partial_trace_density, purity, DensityMatrix,
    QuantumState, STATE_TOL,
};
use serde::Serialize;

/// A state counts as superposed when its largest basis probability is
/// below `1 - SUPERPOSITION_TOL`.
pub const SUPERPOSITION_TOL: f64 = 1e-10;
/// Reductions with purity below `1 - ENTANGLEMENT_TOL` are entangled.
pub const ENTANGLEMENT_TOL: f64 = 1e-6;
/// Exhaustive bipartition reports are limited to this many qubits.
pub const MAX_BIPARTITION_QUBITS: usize = 10;

/// Applies the measurement-free program `ir` to `initial`.
pub fn regenerate(ir: &CircuitIR, initial: &QuantumState) -> Result<QuantumState, DebugError> {
    if initial.n_qubits() != ir.n_qubits {
        return Err(DebugError::SizeMismatch(format!(
            "initial state has {} qubits, program has {}",
            initial.n_qubits(),
            ir.n_qubits
        )));
    }
    let mut state = initial.clone();
    for (i, inst) in ir.instructions.iter().enumerate() {
        match &inst.op {
            Op::U {
                qubit,
                theta,
                phi,
                lambda,
            } => state.apply_1q(&gates::u(*theta, *phi, *lambda), *qubit)?,
            Op::Cx { control, target } => state.apply_cx(*control, *target)?,
            Op::Barrier { .. } => {}
            other => {
                return Err(DebugError::NonUnitaryPrefix {
                    instruction: i,
                    kind: other.name().to_string(),
                })
            }
        }
    }
    Ok(state)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupportEntry {
    pub bits: String,
    pub probability: f64,
    pub amplitude: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuperpositionReport {
    pub superposed: bool,
    pub max_probability: f64,
    /// Basis states with probability above the tolerance, most likely first.
    pub support: Vec<SupportEntry>,
}

pub fn superposition_of(state: &QuantumState) -> SuperpositionReport {
    let n = state.n_qubits();
    let mut support: Vec<SupportEntry> = state
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(_, a)| a.norm_sqr() > SUPERPOSITION_TOL)
        .map(|(i, a)| SupportEntry {
            bits: index_to_bits(i, n),
            probability: a.norm_sqr(),
            amplitude: [a.re, a.im],
        })
        .collect();
    support.sort_by(|a, b| b.probability.total_cmp(&a.probability).then(a.bits.cmp(&b.bits)));
    let max_probability = support.first().map_or(0.0, |s| s.probability);
    SuperpositionReport {
        superposed: max_probability < 1.0 - SUPERPOSITION_TOL,
        max_probability,
        support,
    }
}

/// Regenerates `prefix |initial>` and reports whether it is a superposition.
/// Without a known basis input there is no general procedure, so `None`
/// yields [`DebugError::UnknownInput`].
pub fn check_superposition_known_input(
    prefix: &CircuitIR,
    initial: Option<&str>,
) -> Result<SuperpositionReport, DebugError> {
    let bits = initial.ok_or(DebugError::UnknownInput)?;
    let state = regenerate(prefix, &QuantumState::from_bits(bits)?)?;
    Ok(superposition_of(&state))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QubitPurity {
    pub qubit: usize,
    pub purity: f64,
    pub entangled: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BipartitionPurity {
    pub partition: Vec<usize>,
    pub purity: f64,
    pub entangled: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparabilityReport {
    pub qubits: Vec<QubitPurity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bipartitions: Option<Vec<BipartitionPurity>>,
}

impl SeparabilityReport {
    pub fn purity(&self, qubit: usize) -> Option<f64> {
        self.qubits.iter().find(|q| q.qubit == qubit).map(|q| q.purity)
    }
}

fn is_entangled(p: f64) -> bool {
    p < 1.0 - ENTANGLEMENT_TOL
}

/// Every subset containing qubit 0 except the full set; each stands for the
/// cut between it and its complement.
fn bipartitions(n: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..(1usize << (n - 1)) - 1).map(move |mask| {
        std::iter::once(0)
            .chain((1..n).filter(|q| mask >> (q - 1) & 1 == 1))
            .collect()
    })
}

/// Purity of each single-qubit reduction of a pure global state, optionally
/// with every bipartition (up to [`MAX_BIPARTITION_QUBITS`] qubits).
pub fn separability_report(state: &QuantumState, with_bipartitions: bool) -> Result<SeparabilityReport, DebugError> {
    let n = state.n_qubits();
    let qubits = (0..n)
        .map(|q| {
            let p = purity(&partial_trace(state, &[q])?);
            Ok(QubitPurity {
                qubit: q,
                purity: p,
                entangled: is_entangled(p),
            })
        })
        .collect::<Result<Vec<_>, DebugError>>()?;
    let bipartitions = if with_bipartitions && (2..=MAX_BIPARTITION_QUBITS).contains(&n) {
        Some(
            bipartitions(n)
                .map(|part| {
                    let p = purity(&partial_trace(state, &part)?);
                    Ok(BipartitionPurity {
                        partition: part,
                        purity: p,
                        entangled: is_entangled(p),
                    })
                })
                .collect::<Result<Vec<_>, DebugError>>()?,
        )
    } else {
        None
    };
    Ok(SeparabilityReport { qubits, bipartitions })
}

/// As [`separability_report`] for a density matrix, which must be pure.
pub fn separability_report_density(rho: &DensityMatrix) -> Result<SeparabilityReport, DebugError> {
    let global = purity(rho);
    if is_entangled(global) {
        return Err(DebugError::MixedGlobalState(global));
    }
    let qubits = (0..rho.n_qubits())
        .map(|q| {
            let p = purity(&partial_trace_density(rho, &[q])?);
            Ok(QubitPurity {
                qubit: q,
                purity: p,
                entangled: is_entangled(p),
            })
        })
        .collect::<Result<Vec<_>, DebugError>>()?;
    Ok(SeparabilityReport {
        qubits,
        bipartitions: None,
    })
}

/// A named preparation: `ir` applied to the basis state `initial`.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub name: String,
    pub ir: CircuitIR,
    pub initial: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PreparationMatch {
    pub name: String,
    /// Input basis state after folding leading `x` gates into it.
    pub initial: String,
    pub operators: Vec<String>,
    /// Operator product in tensor notation, e.g. `(CNOT ⊗ H)(H ⊗ I_4)|001⟩`.
    pub formula: String,
}

/// A source-level gate application.
#[derive(Debug, Clone, PartialEq)]
struct SourceOp {
    gate: String,
    params: Vec<f64>,
    qubits: Vec<usize>,
    label: String,
}

fn source_ops(ir: &CircuitIR) -> Vec<SourceOp> {
    let mut out = Vec::new();
    let mut last = None;
    for inst in &ir.instructions {
        let key = (inst.origin.statement, inst.origin.element);
        if last == Some(key) {
            continue;
        }
        last = Some(key);
        if matches!(inst.op, Op::Barrier { .. }) {
            continue;
        }
        out.push(SourceOp {
            gate: inst.origin.gate.clone(),
            params: inst.origin.params.clone(),
            qubits: inst.origin.qubits.clone(),
            label: ir.describe_origin(&inst.origin),
        });
    }
    out
}

/// Folds `x` gates that act on a qubit before anything else touches it into
/// the initial bitstring.
fn absorb_leading_x(initial: &str, ops: Vec<SourceOp>) -> (String, Vec<SourceOp>) {
    let mut bits: Vec<u8> = initial.bytes().collect();
    let mut touched = vec![false; bits.len()];
    let mut rest = Vec::new();
    for op in ops {
        if op.gate == "x" && op.qubits.len() == 1 && !touched[op.qubits[0]] {
            let q = op.qubits[0];
            bits[q] = if bits[q] == b'0' { b'1' } else { b'0' };
            continue;
        }
        for &q in &op.qubits {
            touched[q] = true;
        }
        rest.push(op);
    }
    (String::from_utf8(bits).expect("ascii"), rest)
}

fn symbol(op: &SourceOp) -> String {
    let base = match op.gate.as_str() {
        "cx" | "CX" => "CNOT".to_string(),
        "U" => "U".to_string(),
        other => other.to_uppercase(),
    };
    if op.params.is_empty() {
        base
    } else {
        let ps: Vec<String> = op.params.iter().map(|p| format!("{}", (p * 1e4).round() / 1e4)).collect();
        format!("{base}({})", ps.join(","))
    }
}

fn identity_symbol(k: usize) -> String {
    format!("I_{}", 1u64 << k)
}

/// Renders ops as a product of layers, latest layer leftmost. Ops are
/// scheduled as late as possible so that each factor is a tensor product
/// across all qubits.
fn formula(n: usize, initial: &str, ops: &[SourceOp]) -> String {
    let mut level = vec![0usize; ops.len()];
    for i in (0..ops.len()).rev() {
        level[i] = (i + 1..ops.len())
            .filter(|&j| ops[j].qubits.iter().any(|q| ops[i].qubits.contains(q)))
            .map(|j| level[j] + 1)
            .max()
            .unwrap_or(0);
    }
    let depth = level.iter().max().map_or(0, |d| d + 1);
    let mut out = String::new();
    for l in 0..depth {
        let layer: Vec<&SourceOp> = ops.iter().zip(&level).filter(|(_, lv)| **lv == l).map(|(o, _)| o).collect();
        let contiguous = layer
            .iter()
            .all(|o| o.qubits.windows(2).all(|w| w[1] == w[0] + 1));
        let factors: Vec<String> = if contiguous {
            let mut factors = Vec::new();
            let mut q = 0;
            let mut idle = 0;
            while q < n {
                if let Some(op) = layer.iter().find(|o| o.qubits[0] == q) {
                    if idle > 0 {
                        factors.push(identity_symbol(idle));
                        idle = 0;
                    }
                    factors.push(symbol(op));
                    q += op.qubits.len();
                } else {
                    idle += 1;
                    q += 1;
                }
            }
            if idle > 0 {
                factors.push(identity_symbol(idle));
            }
            factors
        } else {
            layer
                .iter()
                .map(|o| {
                    let qs: Vec<String> = o.qubits.iter().map(|q| q.to_string()).collect();
                    format!("{}_{{{}}}", symbol(o), qs.join(","))
                })
                .collect()
        };
        let sep = if contiguous { " ⊗ " } else { " · " };
        out.push_str(&format!("({})", factors.join(sep)));
    }
    out.push_str(&format!("|{initial}⟩"));
    out
}

/// First candidate whose regenerated state equals `target` up to global
/// phase, described by its input bitstring and operator names.
pub fn describe_as_known_preparation(
    target: &QuantumState,
    candidates: &[Candidate],
) -> Result<Option<PreparationMatch>, DebugError> {
    for cand in candidates {
        if cand.ir.n_qubits != target.n_qubits() {
            continue;
        }
        let state = regenerate(&cand.ir, &QuantumState::from_bits(&cand.initial)?)?;
        if equal_up_to_global_phase(&state, target, STATE_TOL)? {
            let (initial, ops) = absorb_leading_x(&cand.initial, source_ops(&cand.ir));
            return Ok(Some(PreparationMatch {
                name: cand.name.clone(),
                formula: formula(cand.ir.n_qubits, &initial, &ops),
                operators: ops.into_iter().map(|o| o.label).collect(),
                initial,
            }));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qasm::{compile, CompileOptions};

    fn ir(body: &str) -> CircuitIR {
        compile(
            &format!("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n{body}"),
            &CompileOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn hadamards_on_111_have_hamming_signs() {
        let r = check_superposition_known_input(&ir("qreg q[3]; h q;"), Some("111")).unwrap();
        assert!(r.superposed);
        assert_eq!(r.support.len(), 8);
        for e in &r.support {
            assert!((e.probability - 0.125).abs() < 1e-12);
            let weight = e.bits.bytes().filter(|b| *b == b'1').count();
            let sign = if weight % 2 == 0 { 1.0 } else { -1.0 };
            assert!((e.amplitude[0] - sign / 8f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn x_gives_classical_state() {
        let r = check_superposition_known_input(&ir("qreg q[3]; x q[1];"), Some("000")).unwrap();
        assert!(!r.superposed);
        assert_eq!(r.support.len(), 1);
        assert_eq!(r.support[0].bits, "010");
    }

    #[test]
    fn unknown_input_and_measurement_are_refused() {
        let p = ir("qreg q[1]; h q[0];");
        assert!(matches!(check_superposition_known_input(&p, None), Err(DebugError::UnknownInput)));
        let m = ir("qreg q[1]; creg c[1]; measure q[0] -> c[0];");
        assert!(matches!(
            check_superposition_known_input(&m, Some("0")),
            Err(DebugError::NonUnitaryPrefix { .. })
        ));
    }

    #[test]
    fn ghz_all_entangled() {
        let s = regenerate(&ir("qreg q[3]; h q[0]; cx q[0],q[1]; cx q[1],q[2];"), &QuantumState::zero(3).unwrap()).unwrap();
        let r = separability_report(&s, true).unwrap();
        for q in &r.qubits {
            assert!(q.entangled && (q.purity - 0.5).abs() < 1e-12);
        }
        assert_eq!(r.bipartitions.unwrap().len(), 3);
    }

    #[test]
    fn mixed_global_state_is_refused() {
        assert!(matches!(
            separability_report_density(&DensityMatrix::maximally_mixed(2)),
            Err(DebugError::MixedGlobalState(_))
        ));
    }

    #[test]
    fn formula_layers_alap() {
        let prep = ir("qreg q[3]; x q[2]; h q[0]; cx q[0],q[1]; h q[2];");
        let target = regenerate(&prep, &QuantumState::zero(3).unwrap()).unwrap();
        let cand = Candidate {
            name: "fig6".into(),
            ir: prep,
            initial: "000".into(),
        };
        let m = describe_as_known_preparation(&target, &[cand]).unwrap().unwrap();
        assert_eq!(m.initial, "001");
        assert_eq!(m.formula, "(CNOT ⊗ H)(H ⊗ I_4)|001⟩");
        assert_eq!(m.operators, vec!["h q[0]", "cx q[0],q[1]", "h q[2]"]);
    }

    #[test]
    fn non_contiguous_layer_falls_back() {
        let ops = vec![SourceOp {
            gate: "cx".into(),
            params: vec![],
            qubits: vec![2, 0],
            label: "cx q[2],q[0]".into(),
        }];
        assert_eq!(formula(3, "000", &ops), "(CNOT_{2,0})|000⟩");
    }

    #[test]
    fn no_match() {
        let cand = Candidate {
            name: "h".into(),
            ir: ir("qreg q[1]; h q[0];"),
            initial: "0".into(),
        };
        assert!(describe_as_known_preparation(&QuantumState::zero(1).unwrap(), &[cand])
            .unwrap()
            .is_none());
    }
}
