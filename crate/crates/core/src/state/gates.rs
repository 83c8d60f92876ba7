//! Gate matrices in the computational basis.
//!
//! Multi-qubit matrices index their operands the same way states do: the
//! first operand is the most significant bit, so `cnot()` is the textbook
//! 4x4 matrix with the control listed first.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// A square complex matrix acting on `k` qubits (dimension `2^k`).
#[derive(Debug, Clone, PartialEq)]
pub struct GateMatrix {
    n_qubits: usize,
    entries: DMatrix<Complex64>,
}

impl GateMatrix {
    /// Wraps a matrix. Panics if it is not square with a power-of-two side.
    pub fn from_matrix(entries: DMatrix<Complex64>) -> Self {
        let dim = entries.nrows();
        assert_eq!(dim, entries.ncols(), "gate matrix must be square");
        assert!(dim.is_power_of_two() && dim >= 2, "gate dimension must be 2^k");
        Self {
            n_qubits: dim.trailing_zeros() as usize,
            entries,
        }
    }

    /// Builds a matrix from row-major entries.
    pub fn from_rows(dim: usize, rows: &[Complex64]) -> Self {
        Self::from_matrix(DMatrix::from_row_slice(dim, dim, rows))
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.entries
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_matrix(self.entries.adjoint())
    }

    /// Largest entry of `|U*U - I|`.
    pub fn unitarity_error(&self) -> f64 {
        let prod = self.entries.adjoint() * &self.entries;
        let id = DMatrix::<Complex64>::identity(self.dim(), self.dim());
        (prod - id).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_error() <= tol
    }

    /// `self` applied after `first`.
    pub fn compose(&self, first: &GateMatrix) -> Self {
        Self::from_matrix(&self.entries * &first.entries)
    }

    pub fn kron(&self, other: &GateMatrix) -> Self {
        Self::from_matrix(self.entries.kronecker(&other.entries))
    }

    /// True if `self = e^{i theta} other` for some phase, within `tol` per entry.
    pub fn equal_up_to_global_phase(&self, other: &GateMatrix, tol: f64) -> bool {
        if self.dim() != other.dim() {
            return false;
        }
        // Pin the phase on the largest entry of `other`.
        let (idx, pivot) = other
            .entries
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .expect("non-empty matrix");
        if pivot.norm() < tol {
            return self.entries.iter().all(|z| z.norm() <= tol);
        }
        let ratio = self.entries.as_slice()[idx] / pivot;
        if (ratio.norm() - 1.0).abs() > tol {
            return false;
        }
        self.entries
            .iter()
            .zip(other.entries.iter())
            .all(|(a, b)| (a - ratio * b).norm() <= tol)
    }
}

pub fn identity() -> GateMatrix {
    GateMatrix::from_rows(2, &[ONE, ZERO, ZERO, ONE])
}

/// The NOT gate; identical to Pauli X.
pub fn not() -> GateMatrix {
    pauli_x()
}

pub fn pauli_x() -> GateMatrix {
    GateMatrix::from_rows(2, &[ZERO, ONE, ONE, ZERO])
}

pub fn pauli_y() -> GateMatrix {
    GateMatrix::from_rows(2, &[ZERO, -I, I, ZERO])
}

pub fn pauli_z() -> GateMatrix {
    GateMatrix::from_rows(2, &[ONE, ZERO, ZERO, -ONE])
}

/// Pauli operators indexed 0..=3 as I, X, Y, Z.
pub fn sigma(index: usize) -> GateMatrix {
    match index {
        0 => identity(),
        1 => pauli_x(),
        2 => pauli_y(),
        3 => pauli_z(),
        _ => panic!("Pauli index {index} out of range"),
    }
}

pub fn hadamard() -> GateMatrix {
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    GateMatrix::from_rows(2, &[h, h, h, -h])
}

/// `diag(1, e^{i lambda})`.
pub fn phase(lambda: f64) -> GateMatrix {
    GateMatrix::from_rows(2, &[ONE, ZERO, ZERO, Complex64::from_polar(1.0, lambda)])
}

pub fn s() -> GateMatrix {
    phase(std::f64::consts::FRAC_PI_2)
}

pub fn sdg() -> GateMatrix {
    phase(-std::f64::consts::FRAC_PI_2)
}

/// The pi/8 gate, `diag(1, e^{i pi/4})`.
pub fn t() -> GateMatrix {
    phase(FRAC_PI_4)
}

pub fn tdg() -> GateMatrix {
    phase(-FRAC_PI_4)
}

/// The OpenQASM 2.0 primitive `U(theta, phi, lambda)`.
pub fn u(theta: f64, phi: f64, lambda: f64) -> GateMatrix {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    GateMatrix::from_rows(
        2,
        &[
            Complex64::new(c, 0.0),
            -Complex64::from_polar(s, lambda),
            Complex64::from_polar(s, phi),
            Complex64::from_polar(c, phi + lambda),
        ],
    )
}

pub fn rx(theta: f64) -> GateMatrix {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    GateMatrix::from_rows(
        2,
        &[
            Complex64::new(c, 0.0),
            Complex64::new(0.0, -s),
            Complex64::new(0.0, -s),
            Complex64::new(c, 0.0),
        ],
    )
}

pub fn ry(theta: f64) -> GateMatrix {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    GateMatrix::from_rows(
        2,
        &[
            Complex64::new(c, 0.0),
            Complex64::new(-s, 0.0),
            Complex64::new(s, 0.0),
            Complex64::new(c, 0.0),
        ],
    )
}

pub fn rz(theta: f64) -> GateMatrix {
    GateMatrix::from_rows(
        2,
        &[
            Complex64::from_polar(1.0, -theta / 2.0),
            ZERO,
            ZERO,
            Complex64::from_polar(1.0, theta / 2.0),
        ],
    )
}

/// CNOT with the control as the first (most significant) operand.
pub fn cnot() -> GateMatrix {
    let mut m = DMatrix::from_element(4, 4, ZERO);
    m[(0, 0)] = ONE;
    m[(1, 1)] = ONE;
    m[(2, 3)] = ONE;
    m[(3, 2)] = ONE;
    GateMatrix::from_matrix(m)
}

pub fn swap() -> GateMatrix {
    let mut m = DMatrix::from_element(4, 4, ZERO);
    m[(0, 0)] = ONE;
    m[(1, 2)] = ONE;
    m[(2, 1)] = ONE;
    m[(3, 3)] = ONE;
    GateMatrix::from_matrix(m)
}

/// Controlled phase `diag(1, 1, 1, e^{i lambda})`.
pub fn cphase(lambda: f64) -> GateMatrix {
    let mut m = DMatrix::identity(4, 4);
    m[(3, 3)] = Complex64::from_polar(1.0, lambda);
    GateMatrix::from_matrix(m)
}

/// Every named gate of the library with a representative parameter choice,
/// used by unitarity checks.
pub fn library() -> Vec<(&'static str, GateMatrix)> {
    vec![
        ("id", identity()),
        ("x", pauli_x()),
        ("y", pauli_y()),
        ("z", pauli_z()),
        ("h", hadamard()),
        ("s", s()),
        ("sdg", sdg()),
        ("t", t()),
        ("tdg", tdg()),
        ("u", u(0.3, -1.1, 2.4)),
        ("p", phase(0.7)),
        ("rx", rx(1.3)),
        ("ry", ry(-0.4)),
        ("rz", rz(2.2)),
        ("cx", cnot()),
        ("swap", swap()),
        ("cp", cphase(FRAC_PI_4)),
    ]
}
