//! Dense pure-state and density-matrix linear algebra.
//!
//! Basis convention: qubit 0 is the leftmost character of a ket and the most
//! significant bit of the amplitude index, so `|q0 q1 ... q(n-1)>` lives at
//! index `sum_i q_i * 2^(n-1-i)`. Every bitstring printed or serialized by
//! this crate follows the same order.

mod density;
pub mod gates;
pub mod naive;
mod pauli;
mod vector;

pub use density::{fidelity, overlap, partial_trace, partial_trace_density, purity, DensityMatrix};
pub use gates::GateMatrix;
pub use pauli::{Pauli, PauliString};
pub use vector::{
    equal_up_to_global_phase, inner_product, pauli_expectation, tensor, draw_bit, QuantumState,
    StateSnapshot, MAX_DENSE_QUBITS, ORDERING,
};

pub use num_complex::Complex64;

/// Tolerance for state equality checks.
pub const STATE_TOL: f64 = 1e-9;
/// Tolerance for algebraic identities such as unitarity.
pub const ALGEBRA_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StateError {
    #[error("qubit index {index} out of range for a {n_qubits}-qubit state")]
    IndexOutOfRange { index: usize, n_qubits: usize },
    #[error("control and target are the same qubit ({0})")]
    SameQubit(usize),
    #[error("measured branch has degenerate probability {0:e}")]
    DegenerateNorm(f64),
    #[error("{requested} qubits exceeds the engine limit of {limit}")]
    CapacityExceeded { requested: usize, limit: usize },
    #[error("partial trace needs at least one qubit to keep")]
    EmptyKeepSet,
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("invalid Pauli label {0:?}")]
    InvalidPauli(char),
    #[error("amplitude vector length {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("invalid bitstring {0:?}")]
    InvalidBitstring(String),
    #[error("state is not normalized (norm^2 = {0})")]
    NotNormalized(f64),
}

/// Bit mask selecting qubit `q` in an `n`-qubit index.
#[inline]
pub(crate) fn qubit_mask(n_qubits: usize, q: usize) -> usize {
    1usize << (n_qubits - 1 - q)
}

/// Formats `index` as an `n`-character bitstring, qubit 0 first.
pub fn index_to_bits(index: usize, n: usize) -> String {
    (0..n)
        .map(|q| if index & qubit_mask(n, q) != 0 { '1' } else { '0' })
        .collect()
}

/// Inverse of [`index_to_bits`]. Returns `None` on characters other than 0/1.
pub fn bits_to_index(bits: &str) -> Option<usize> {
    let n = bits.len();
    bits.chars().enumerate().try_fold(0usize, |acc, (q, c)| match c {
        '0' => Some(acc),
        '1' => Some(acc | qubit_mask(n, q)),
        _ => None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bit_order_is_q0_leftmost() {
        assert_eq!(index_to_bits(2, 3), "010");
        assert_eq!(bits_to_index("010"), Some(2));
        assert_eq!(bits_to_index("001"), Some(1));
        assert_eq!(bits_to_index("0x1"), None);
    }
}
