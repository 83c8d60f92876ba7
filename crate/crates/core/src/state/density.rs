use super::{qubit_mask, QuantumState, StateError};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Hermitian, unit-trace, positive semidefinite operator on `n_qubits`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    entries: DMatrix<Complex64>,
}

/// JSON form: row-major `[[re, im], ...]` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensitySnapshot {
    pub n_qubits: usize,
    pub entries: Vec<Vec<[f64; 2]>>,
}

impl DensityMatrix {
    /// `|psi><psi|`.
    pub fn from_pure(state: &QuantumState) -> Self {
        let v = nalgebra::DVector::from_column_slice(state.amplitudes());
        Self {
            n_qubits: state.n_qubits(),
            entries: &v * v.adjoint(),
        }
    }

    /// Validates Hermiticity, trace and spectrum within 1e-9.
    pub fn from_matrix(entries: DMatrix<Complex64>) -> Result<Self, StateError> {
        let dim = entries.nrows();
        if dim != entries.ncols() {
            return Err(StateError::DimensionMismatch {
                left: dim,
                right: entries.ncols(),
            });
        }
        if !dim.is_power_of_two() {
            return Err(StateError::NotPowerOfTwo(dim));
        }
        let rho = Self {
            n_qubits: dim.trailing_zeros() as usize,
            entries,
        };
        let tr = rho.trace();
        if rho.hermitian_error() > 1e-9 || (tr - 1.0).abs() > 1e-9 {
            return Err(StateError::NotNormalized(tr));
        }
        if rho.eigenvalues().iter().any(|&e| e < -1e-9) {
            return Err(StateError::NotNormalized(tr));
        }
        Ok(rho)
    }

    /// Wraps a matrix without validation. Intended for intermediate estimates.
    pub fn from_matrix_unchecked(entries: DMatrix<Complex64>) -> Self {
        let n = entries.nrows().trailing_zeros() as usize;
        Self { n_qubits: n, entries }
    }

    pub fn maximally_mixed(n: usize) -> Self {
        let dim = 1usize << n;
        Self {
            n_qubits: n,
            entries: DMatrix::identity(dim, dim) * Complex64::new(1.0 / dim as f64, 0.0),
        }
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

    pub fn trace(&self) -> f64 {
        self.entries.trace().re
    }

    pub fn hermitian_error(&self) -> f64 {
        (&self.entries - self.entries.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Ascending eigenvalues of the Hermitian part.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let herm = (&self.entries + self.entries.adjoint()) * Complex64::new(0.5, 0.0);
        let mut ev: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Nearest physical state by spectral clipping: negative eigenvalues are
    /// set to zero and the result is rescaled to unit trace.
    pub fn project_to_physical(&self) -> Self {
        let herm = (&self.entries + self.entries.adjoint()) * Complex64::new(0.5, 0.0);
        let eig = herm.symmetric_eigen();
        let clipped: Vec<f64> = eig.eigenvalues.iter().map(|&e| e.max(0.0)).collect();
        let total: f64 = clipped.iter().sum();
        let dim = self.dim();
        if total <= 0.0 {
            return Self::maximally_mixed(self.n_qubits);
        }
        let mut out = DMatrix::zeros(dim, dim);
        for (k, &lambda) in clipped.iter().enumerate() {
            if lambda == 0.0 {
                continue;
            }
            let v = eig.eigenvectors.column(k);
            out += (v * v.adjoint()) * Complex64::new(lambda / total, 0.0);
        }
        Self {
            n_qubits: self.n_qubits,
            entries: out,
        }
    }

    /// Largest absolute entry difference.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        (&self.entries - &other.entries)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn snapshot(&self) -> DensitySnapshot {
        DensitySnapshot {
            n_qubits: self.n_qubits,
            entries: self
                .entries
                .row_iter()
                .map(|row| row.iter().map(|z| [z.re, z.im]).collect())
                .collect(),
        }
    }
}

fn validate_keep(n: usize, keep: &[usize]) -> Result<Vec<usize>, StateError> {
    if keep.is_empty() {
        return Err(StateError::EmptyKeepSet);
    }
    let mut sorted = keep.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if let Some(&q) = sorted.iter().find(|&&q| q >= n) {
        return Err(StateError::IndexOutOfRange { index: q, n_qubits: n });
    }
    Ok(sorted)
}

/// Splits a full index into (kept-subsystem index, environment index). Kept
/// qubits are ordered ascending, qubit-0-first like everything else.
fn split_index(n: usize, keep: &[usize], i: usize) -> (usize, usize) {
    let mut kept = 0;
    let mut env = 0;
    for q in 0..n {
        let b = (i & qubit_mask(n, q) != 0) as usize;
        if keep.binary_search(&q).is_ok() {
            kept = (kept << 1) | b;
        } else {
            env = (env << 1) | b;
        }
    }
    (kept, env)
}

/// Reduced density matrix of a pure state over `keep`.
pub fn partial_trace(state: &QuantumState, keep: &[usize]) -> Result<DensityMatrix, StateError> {
    let n = state.n_qubits();
    let keep = validate_keep(n, keep)?;
    let k = keep.len();
    let env_dim = 1usize << (n - k);
    // psi as a (kept x env) matrix; rho = M M^dagger.
    let mut m = DMatrix::<Complex64>::zeros(1 << k, env_dim);
    for (i, a) in state.amplitudes().iter().enumerate() {
        let (r, c) = split_index(n, &keep, i);
        m[(r, c)] = *a;
    }
    Ok(DensityMatrix {
        n_qubits: k,
        entries: &m * m.adjoint(),
    })
}

/// Reduced density matrix of a mixed state over `keep`.
pub fn partial_trace_density(
    rho: &DensityMatrix,
    keep: &[usize],
) -> Result<DensityMatrix, StateError> {
    let n = rho.n_qubits;
    let keep = validate_keep(n, keep)?;
    let k = keep.len();
    let mut out = DMatrix::<Complex64>::zeros(1 << k, 1 << k);
    let dim = rho.dim();
    for i in 0..dim {
        let (ri, ei) = split_index(n, &keep, i);
        for j in 0..dim {
            let (rj, ej) = split_index(n, &keep, j);
            if ei == ej {
                out[(ri, rj)] += rho.entries[(i, j)];
            }
        }
    }
    Ok(DensityMatrix {
        n_qubits: k,
        entries: out,
    })
}

/// `Tr(rho^2)`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    // Tr(rho rho) = sum_ij rho_ij rho_ji = sum_ij |rho_ij|^2 for Hermitian rho.
    rho.entries.iter().map(|z| z.norm_sqr()).sum()
}

/// `Tr(a b)`; equals `<psi|b|psi>` when `a = |psi><psi|`.
pub fn overlap(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64, StateError> {
    if a.dim() != b.dim() {
        return Err(StateError::DimensionMismatch {
            left: a.n_qubits,
            right: b.n_qubits,
        });
    }
    Ok((&a.entries * &b.entries).trace().re)
}

/// `<psi|rho|psi>`.
pub fn fidelity(psi: &QuantumState, rho: &DensityMatrix) -> Result<f64, StateError> {
    if psi.dim() != rho.dim() {
        return Err(StateError::DimensionMismatch {
            left: psi.n_qubits(),
            right: rho.n_qubits,
        });
    }
    let v = nalgebra::DVector::from_column_slice(psi.amplitudes());
    Ok((v.adjoint() * &rho.entries * &v)[(0, 0)].re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn bell() -> QuantumState {
        QuantumState::from_amplitudes(vec![c(FRAC_1_SQRT_2), c(0.0), c(0.0), c(FRAC_1_SQRT_2)]).unwrap()
    }

    fn fig6_state() -> QuantumState {
        QuantumState::from_amplitudes(
            [0.5, -0.5, 0.0, 0.0, 0.0, 0.0, 0.5, -0.5].iter().map(|&x| c(x)).collect(),
        )
        .unwrap()
    }

    /// Brute-force reduction of the Bell state over q1.
    #[test]
    fn bell_trace_out_q1_is_maximally_mixed() {
        let psi = bell();
        let a = psi.amplitudes();
        let mut oracle = DMatrix::<Complex64>::zeros(2, 2);
        for i in 0..2 {
            for j in 0..2 {
                for e in 0..2 {
                    oracle[(i, j)] += a[2 * i + e] * a[2 * j + e].conj();
                }
            }
        }
        let rho = partial_trace(&psi, &[0]).unwrap();
        assert!((rho.matrix() - &oracle).iter().all(|z| z.norm() < 1e-15));
        assert!(rho.max_abs_diff(&DensityMatrix::maximally_mixed(1)) < 1e-12);
    }

    #[test]
    fn fig6_state_reduction_is_pure_bell() {
        let rho = partial_trace(&fig6_state(), &[0, 1]).unwrap();
        let bell_rho = DensityMatrix::from_pure(&bell());
        assert!(rho.max_abs_diff(&bell_rho) < 1e-12);
        assert!((purity(&rho) - 1.0).abs() < 1e-9);
        assert!((purity(&partial_trace(&fig6_state(), &[2]).unwrap()) - 1.0).abs() < 1e-9);
        assert!((purity(&partial_trace(&fig6_state(), &[0]).unwrap()) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn keep_all_gives_projector() {
        let psi = fig6_state();
        let rho = partial_trace(&psi, &[2, 0, 1]).unwrap();
        assert!(rho.max_abs_diff(&DensityMatrix::from_pure(&psi)) < 1e-15);
    }

    #[test]
    fn keep_set_errors() {
        assert_eq!(partial_trace(&bell(), &[]), Err(StateError::EmptyKeepSet));
        assert!(matches!(
            partial_trace(&bell(), &[4]),
            Err(StateError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn density_partial_trace_agrees_with_pure() {
        let psi = fig6_state();
        let full = DensityMatrix::from_pure(&psi);
        for keep in [vec![0], vec![1], vec![2], vec![0, 2], vec![1, 2]] {
            let a = partial_trace(&psi, &keep).unwrap();
            let b = partial_trace_density(&full, &keep).unwrap();
            assert!(a.max_abs_diff(&b) < 1e-14);
        }
    }

    #[test]
    fn purity_examples() {
        let zero = DensityMatrix::from_pure(&QuantumState::zero(1).unwrap());
        assert!((purity(&zero) - 1.0).abs() < 1e-15);
        assert!((purity(&DensityMatrix::maximally_mixed(1)) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn fidelity_examples() {
        let zero = QuantumState::zero(1).unwrap();
        let rho0 = DensityMatrix::from_pure(&zero);
        assert!((fidelity(&zero, &rho0).unwrap() - 1.0).abs() < 1e-15);
        assert!((fidelity(&zero, &DensityMatrix::maximally_mixed(1)).unwrap() - 0.5).abs() < 1e-15);
        assert!(fidelity(&zero, &DensityMatrix::maximally_mixed(2)).is_err());
    }

    #[test]
    fn projection_clips_negative_eigenvalues() {
        // diag(1.1, -0.1) -> diag(1, 0)
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.1), c(-0.1)]));
        let rho = DensityMatrix::from_matrix_unchecked(m).project_to_physical();
        assert!((rho.matrix()[(0, 0)] - c(1.0)).norm() < 1e-12);
        assert!(rho.matrix()[(1, 1)].norm() < 1e-12);
        assert!(DensityMatrix::from_matrix(rho.matrix().clone()).is_ok());
    }
}
