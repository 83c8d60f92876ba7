//! Full-matrix constructions used by the naive engine and as test oracles.
//!
//! Everything here materializes `2^n x 2^n` matrices through explicit
//! Kronecker products, so it is only usable for small registers. It shares no
//! code with the in-place kernels in `vector.rs`.

use super::{gates, GateMatrix};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

fn eye(dim: usize) -> DMatrix<Complex64> {
    DMatrix::identity(dim, dim)
}

/// Kronecker product of `factors`, leftmost factor acting on qubit 0.
pub fn kron_all(factors: &[DMatrix<Complex64>]) -> DMatrix<Complex64> {
    factors
        .iter()
        .fold(eye(1), |acc, f| acc.kronecker(f))
}

/// `I (x) ... (x) G (x) ... (x) I` with `G` on `target`.
pub fn expand_1q(n: usize, gate: &GateMatrix, target: usize) -> DMatrix<Complex64> {
    let factors: Vec<_> = (0..n)
        .map(|q| if q == target { gate.matrix().clone() } else { eye(2) })
        .collect();
    kron_all(&factors)
}

/// `|b><b|` on qubit `q`, identity elsewhere.
pub fn projector(n: usize, q: usize, bit: u8) -> DMatrix<Complex64> {
    let mut p = DMatrix::zeros(2, 2);
    p[(bit as usize, bit as usize)] = Complex64::new(1.0, 0.0);
    let factors: Vec<_> = (0..n).map(|k| if k == q { p.clone() } else { eye(2) }).collect();
    kron_all(&factors)
}

/// CNOT as `|0><0|_c (x) I + |1><1|_c (x) X_t`.
pub fn expand_cx(n: usize, control: usize, target: usize) -> DMatrix<Complex64> {
    let x = gates::pauli_x();
    let p1 = projector(n, control, 1);
    let flip = expand_1q(n, &x, target);
    projector(n, control, 0) + &p1 * flip
}

/// Full-space matrix of a `k`-qubit gate on `targets`, by entrywise
/// enumeration: `M[i][j] = G[loc(i)][loc(j)]` when `i` and `j` agree off the
/// targets, zero otherwise.
pub fn expand_gate(n: usize, gate: &GateMatrix, targets: &[usize]) -> DMatrix<Complex64> {
    let dim = 1usize << n;
    let k = targets.len();
    let bit = |i: usize, q: usize| (i >> (n - 1 - q)) & 1;
    let local = |i: usize| targets.iter().fold(0usize, |acc, &q| (acc << 1) | bit(i, q));
    let rest = |i: usize| {
        (0..n)
            .filter(|q| !targets.contains(q))
            .fold(0usize, |acc, q| (acc << 1) | bit(i, q))
    };
    debug_assert_eq!(gate.n_qubits(), k);
    DMatrix::from_fn(dim, dim, |i, j| {
        if rest(i) == rest(j) {
            gate.get(local(i), local(j))
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

pub fn apply_matrix(m: &DMatrix<Complex64>, v: &[Complex64]) -> Vec<Complex64> {
    let out = m * DVector::from_column_slice(v);
    out.iter().copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cx_expansion_matches_textbook() {
        let m = expand_cx(2, 0, 1);
        assert_eq!(&m, gates::cnot().matrix());
        let g = expand_gate(2, &gates::cnot(), &[0, 1]);
        assert_eq!(g, m);
        // Reversed operands = H (x) H . CNOT . H (x) H.
        let rev = expand_cx(2, 1, 0);
        let hh = gates::hadamard().kron(&gates::hadamard());
        let conj = hh.matrix() * gates::cnot().matrix() * hh.matrix();
        assert!((rev - conj).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn expand_gate_agrees_with_kron() {
        let h = gates::hadamard();
        assert_eq!(expand_gate(3, &h, &[1]), expand_1q(3, &h, 1));
    }
}
