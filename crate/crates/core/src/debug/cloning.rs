use super::DebugError;
use crate::qasm::Op;
use crate::state::{fidelity, partial_trace, Complex64, GateMatrix, QuantumState};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use std::f64::consts::PI;

/// Fidelity of each copy produced by the universal cloner.
pub const UNIVERSAL_CLONE_FIDELITY: f64 = 5.0 / 6.0;

fn h(q: usize) -> (String, Op) {
    (
        "h".into(),
        Op::U {
            qubit: q,
            theta: PI / 2.0,
            phi: 0.0,
            lambda: PI,
        },
    )
}

fn check_registers(source: &[usize], blank: &[usize]) -> Result<(), DebugError> {
    if source.len() != blank.len() || source.is_empty() {
        return Err(DebugError::SizeMismatch(format!(
            "source has {} qubits, blank has {}",
            source.len(),
            blank.len()
        )));
    }
    if let Some(q) = source.iter().find(|q| blank.contains(q)) {
        return Err(DebugError::RegisterOverlap(*q));
    }
    for (i, q) in source.iter().chain(blank).enumerate() {
        if source.iter().chain(blank).take(i).any(|p| p == q) {
            return Err(DebugError::RegisterOverlap(*q));
        }
    }
    Ok(())
}

/// Copies a state of the family `H^n |j>` from `source` into `blank`:
/// H on the source, CX fan-out source to blank, then H on both registers.
pub fn exact_clone_ops(source: &[usize], blank: &[usize]) -> Result<Vec<(String, Op)>, DebugError> {
    check_registers(source, blank)?;
    let mut ops: Vec<(String, Op)> = source.iter().map(|&q| h(q)).collect();
    ops.extend(source.iter().zip(blank).map(|(&c, &t)| {
        (
            "cx".to_string(),
            Op::Cx {
                control: c,
                target: t,
            },
        )
    }));
    ops.extend(source.iter().chain(blank).map(|&q| h(q)));
    Ok(ops)
}

/// The symmetric 1 -> 2 universal cloner on `(source, copy, ancilla)`:
///
/// ```text
/// |0>|00> -> sqrt(2/3)|00>|0> + sqrt(1/6)(|01> + |10>)|1>
/// |1>|00> -> sqrt(2/3)|11>|1> + sqrt(1/6)(|01> + |10>)|0>
/// ```
///
/// The two defining columns are completed to an 8x8 unitary by
/// Gram-Schmidt over the computational basis.
pub fn universal_cloner() -> GateMatrix {
    let a = (2.0f64 / 3.0).sqrt();
    let b = (1.0f64 / 6.0).sqrt();
    let mut col0 = DVector::<Complex64>::zeros(8);
    col0[0b000] = a.into();
    col0[0b011] = b.into();
    col0[0b101] = b.into();
    let mut col4 = DVector::<Complex64>::zeros(8);
    col4[0b111] = a.into();
    col4[0b010] = b.into();
    col4[0b100] = b.into();

    let mut basis: Vec<DVector<Complex64>> = vec![col0.clone(), col4.clone()];
    for e in 0..8 {
        if basis.len() == 8 {
            break;
        }
        let mut v = DVector::<Complex64>::zeros(8);
        v[e] = 1.0.into();
        for u in &basis {
            let proj = u.dotc(&v);
            v -= u * proj;
        }
        let norm = v.norm();
        if norm > 1e-8 {
            basis.push(v / Complex64::from(norm));
        }
    }
    let mut m = DMatrix::<Complex64>::zeros(8, 8);
    m.set_column(0, &col0);
    m.set_column(4, &col4);
    let mut rest = basis.into_iter().skip(2);
    for c in [1, 2, 3, 5, 6, 7] {
        m.set_column(c, &rest.next().expect("eight orthonormal vectors"));
    }
    GateMatrix::from_matrix(m)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CloneReport {
    pub source: usize,
    pub copies: [usize; 2],
    /// Fidelity of each copy's reduced state against the input, when the
    /// input was observable.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fidelities: Option<[f64; 2]>,
}

/// Input state of `source` when its reduction is pure.
pub fn pure_reduction(state: &QuantumState, q: usize) -> Result<QuantumState, DebugError> {
    let rho = partial_trace(state, &[q])?;
    let p = crate::state::purity(&rho);
    if p < 1.0 - super::analysis::ENTANGLEMENT_TOL {
        return Err(DebugError::MixedSource(p));
    }
    // Dominant eigenvector of a rank-one 2x2 density matrix.
    let m = rho.matrix();
    let (r0, r1) = (m[(0, 0)].re, m[(1, 1)].re);
    let amps = if r0 >= r1 {
        vec![Complex64::from(r0.sqrt()), m[(1, 0)] / r0.sqrt()]
    } else {
        vec![m[(0, 1)] / r1.sqrt(), Complex64::from(r1.sqrt())]
    };
    Ok(QuantumState::normalized(amps)?)
}

/// Fidelities of the reductions on `copies` against `input`.
pub fn copy_fidelities(state: &QuantumState, copies: [usize; 2], input: &QuantumState) -> Result<[f64; 2], DebugError> {
    Ok([
        fidelity(input, &partial_trace(state, &[copies[0]])?)?,
        fidelity(input, &partial_trace(state, &[copies[1]])?)?,
    ])
}
