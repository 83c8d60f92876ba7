use super::analysis::{ENTANGLEMENT_TOL, SUPERPOSITION_TOL};
use super::Mode;
use crate::harness::{chernoff_shots, compare_distributions, empirical, total_variation, Verdict, DEFAULT_ALPHA};
use crate::qasm::DirectiveKind;
use crate::state::{index_to_bits, partial_trace, purity, QuantumState, StateError};
use serde::Serialize;
use serde_json::{json, Value};
use std::collections::BTreeMap;

/// A classical assertion passes when the expected basis state carries at
/// least this much probability.
pub const CLASSICAL_TOL: f64 = 1e-9;
/// Per-outcome accuracy targeted by sampled assertions.
pub const SAMPLING_EPSILON: f64 = 0.05;
/// Failure probability targeted by sampled assertions.
pub const SAMPLING_DELTA: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssertionResult {
    /// Directive text as written after `@qdb`.
    pub directive: String,
    pub anchor: usize,
    pub line: usize,
    pub mode: Mode,
    pub verdict: Verdict,
    pub evidence: Value,
    pub shots: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_value: Option<f64>,
}

/// Shots a sampled check needs to be conclusive: the Hoeffding count for the
/// declared tolerance (distributions) or for `SAMPLING_EPSILON`.
pub fn required_shots(kind: &DirectiveKind) -> u64 {
    let eps = match kind {
        DirectiveKind::AssertDistribution { tolerance, .. } => tolerance.clamp(1e-3, 0.999),
        _ => SAMPLING_EPSILON,
    };
    chernoff_shots(eps, SAMPLING_DELTA).expect("valid parameters").shots
}

/// Worst-case deviation of the linear-inversion purity of a `k`-qubit
/// reduction when every Pauli expectation is within its Hoeffding radius
/// for `shots` samples at confidence `1 - SAMPLING_DELTA`.
pub fn purity_margin(k: usize, shots: u64) -> f64 {
    let e = 2.0 * ((2.0 / SAMPLING_DELTA).ln() / (2.0 * shots.max(1) as f64)).sqrt();
    let m = (4f64).powi(k as i32) - 1.0;
    let d = (2f64).powi(k as i32);
    (2.0 * e * (m * (d - 1.0)).sqrt() + m * e * e) / d
}

pub(crate) struct Check {
    pub verdict: Verdict,
    pub evidence: Value,
    pub p_value: Option<f64>,
}

impl Check {
    fn new(verdict: Verdict, evidence: Value) -> Self {
        Self {
            verdict,
            evidence,
            p_value: None,
        }
    }
}

fn dominant(probs: &[f64], k: usize) -> (String, f64) {
    let (i, p) = probs
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, p)| (i, *p))
        .unwrap_or((0, 0.0));
    (index_to_bits(i, k), p)
}

pub(crate) fn classical_exact(state: &QuantumState, qubits: &[usize], expected: &str) -> Result<Check, StateError> {
    let probs = state.marginal_probabilities(qubits)?;
    let (bits, p) = dominant(&probs, qubits.len());
    let pass = bits == expected && p >= 1.0 - CLASSICAL_TOL;
    Ok(Check::new(
        Verdict::from_bool(pass),
        json!({"dominant": bits, "probability": p, "expected": expected}),
    ))
}

pub(crate) fn classical_sampled(counts: &BTreeMap<String, u64>, expected: &str, shots: u64, required: u64) -> Check {
    let mismatched: u64 = counts.iter().filter(|(k, _)| *k != expected).map(|(_, c)| c).sum();
    let verdict = if mismatched > 0 {
        Verdict::Fail
    } else if shots >= required {
        Verdict::Pass
    } else {
        Verdict::Inconclusive
    };
    Check::new(
        verdict,
        json!({"counts": counts, "expected": expected, "mismatched": mismatched, "required_shots": required}),
    )
}

pub(crate) fn superposition_exact(state: &QuantumState, qubits: &[usize]) -> Result<Check, StateError> {
    let probs = state.marginal_probabilities(qubits)?;
    let (bits, p) = dominant(&probs, qubits.len());
    let support = probs.iter().filter(|p| **p > SUPERPOSITION_TOL).count();
    Ok(Check::new(
        Verdict::from_bool(p < 1.0 - SUPERPOSITION_TOL),
        json!({"dominant": bits, "max_probability": p, "support_size": support}),
    ))
}

pub(crate) fn superposition_sampled(counts: &BTreeMap<String, u64>, shots: u64, required: u64) -> Check {
    let verdict = if counts.len() >= 2 {
        Verdict::Pass
    } else if shots >= required {
        Verdict::Fail
    } else {
        Verdict::Inconclusive
    };
    Check::new(
        verdict,
        json!({"counts": counts, "distinct_outcomes": counts.len(), "required_shots": required}),
    )
}

pub(crate) fn separable_exact(state: &QuantumState, qubits: &[usize]) -> Result<Check, StateError> {
    let mut keep = qubits.to_vec();
    keep.sort_unstable();
    let p = purity(&partial_trace(state, &keep)?);
    Ok(Check::new(
        Verdict::from_bool(p >= 1.0 - ENTANGLEMENT_TOL),
        json!({"qubits": keep, "purity": p}),
    ))
}

pub(crate) fn entangled_exact(state: &QuantumState, qubits: &[usize]) -> Result<Check, StateError> {
    let mut per_qubit = Vec::new();
    let mut pass = true;
    for &q in qubits {
        let p = purity(&partial_trace(state, &[q])?);
        pass &= p < 1.0 - ENTANGLEMENT_TOL;
        per_qubit.push(json!({"qubit": q, "purity": p}));
    }
    Ok(Check::new(Verdict::from_bool(pass), json!({ "purities": per_qubit })))
}

/// Sampled purity check. `want_pure` selects the separable assertion.
/// Conclusive only when the estimate sits outside the margin band, and
/// inconclusive whenever the margin is too wide to tell a pure reduction
/// from a maximally entangled qubit.
pub(crate) fn purity_sampled(estimates: &[(Vec<usize>, f64)], want_pure: bool, shots: u64) -> Check {
    let mut verdict = Verdict::Pass;
    let mut items = Vec::new();
    for (qs, p) in estimates {
        let margin = purity_margin(qs.len(), shots);
        let v = if margin >= 0.5 {
            Verdict::Inconclusive
        } else {
            let looks_pure = *p >= 1.0 - margin;
            Verdict::from_bool(looks_pure == want_pure)
        };
        verdict = verdict.max(v);
        items.push(json!({"qubits": qs, "purity_estimate": p, "margin": margin, "verdict": v}));
    }
    Check::new(verdict, json!({ "estimates": items, "shots_per_setting": shots }))
}

pub(crate) fn distribution_sampled(
    counts: &BTreeMap<String, u64>,
    expected: &BTreeMap<String, f64>,
    tolerance: f64,
    shots: u64,
    required: u64,
) -> Check {
    let tvd = total_variation(&empirical(counts), expected);
    let (p_value, chi_pass) = match compare_distributions(counts, expected, DEFAULT_ALPHA) {
        Ok(d) => (Some(d.p_value), d.verdict == Verdict::Pass),
        Err(_) => (None, false),
    };
    let verdict = if shots < required {
        Verdict::Inconclusive
    } else {
        Verdict::from_bool(tvd <= tolerance && chi_pass)
    };
    Check {
        verdict,
        evidence: json!({
            "counts": counts,
            "expected": expected,
            "tvd": tvd,
            "tolerance": tolerance,
            "required_shots": required,
        }),
        p_value,
    }
}
