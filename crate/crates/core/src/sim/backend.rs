use super::SimError;
use crate::state::{draw_bit, gates, naive, GateMatrix, QuantumState, StateError};
use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;

/// A state-evolution engine. Both implementations hold a [`QuantumState`]
/// and consume randomness only through [`draw_bit`], one draw per measured
/// qubit, so equal seeds produce equal outcomes on either engine.
pub trait Backend: Send {
    fn apply_u(&mut self, qubit: usize, theta: f64, phi: f64, lambda: f64) -> Result<(), SimError>;
    fn apply_cx(&mut self, control: usize, target: usize) -> Result<(), SimError>;
    /// Applies an arbitrary `k`-qubit unitary; `targets[0]` is its most
    /// significant qubit.
    fn apply_gate(&mut self, gate: &GateMatrix, targets: &[usize]) -> Result<(), SimError>;
    fn measure(&mut self, qubit: usize, rng: &mut dyn RngDyn) -> Result<u8, SimError>;
    fn state(&self) -> &QuantumState;
    fn set_state(&mut self, state: QuantumState);
}

/// Object-safe view of an RNG.
pub trait RngDyn {
    fn next_bit(&mut self, p1: f64) -> u8;
}

impl<R: Rng> RngDyn for R {
    fn next_bit(&mut self, p1: f64) -> u8 {
        draw_bit(p1, self)
    }
}

/// In-place engine: pairwise amplitude updates, `O(2^n)` per gate.
pub struct Dense {
    state: QuantumState,
}

impl Dense {
    pub fn new(n_qubits: usize) -> Result<Self, SimError> {
        Ok(Self {
            state: QuantumState::zero(n_qubits)?,
        })
    }
}

impl Backend for Dense {
    fn apply_u(&mut self, qubit: usize, theta: f64, phi: f64, lambda: f64) -> Result<(), SimError> {
        Ok(self.state.apply_1q(&gates::u(theta, phi, lambda), qubit)?)
    }

    fn apply_cx(&mut self, control: usize, target: usize) -> Result<(), SimError> {
        Ok(self.state.apply_cx(control, target)?)
    }

    fn apply_gate(&mut self, gate: &GateMatrix, targets: &[usize]) -> Result<(), SimError> {
        Ok(self.state.apply_gate(gate, targets)?)
    }

    fn measure(&mut self, qubit: usize, rng: &mut dyn RngDyn) -> Result<u8, SimError> {
        let bit = rng.next_bit(self.state.prob_one(qubit)?);
        self.state.collapse(qubit, bit)?;
        Ok(bit)
    }

    fn state(&self) -> &QuantumState {
        &self.state
    }

    fn set_state(&mut self, state: QuantumState) {
        self.state = state;
    }
}

/// Reference engine: every gate is materialized as a full `2^n x 2^n`
/// matrix by Kronecker products and multiplied into the state; measurement
/// uses explicit projectors.
pub struct Naive {
    state: QuantumState,
    /// Test fixture: swaps control and target of every CX.
    flip_cx: bool,
}

impl Naive {
    pub fn new(n_qubits: usize, flip_cx: bool) -> Result<Self, SimError> {
        Ok(Self {
            state: QuantumState::zero(n_qubits)?,
            flip_cx,
        })
    }

    fn multiply(&mut self, m: &nalgebra::DMatrix<Complex64>) {
        let out = naive::apply_matrix(m, self.state.amplitudes());
        self.state.amplitudes_mut().copy_from_slice(&out);
    }
}

impl Backend for Naive {
    fn apply_u(&mut self, qubit: usize, theta: f64, phi: f64, lambda: f64) -> Result<(), SimError> {
        let n = self.state.n_qubits();
        if qubit >= n {
            return Err(StateError::IndexOutOfRange { index: qubit, n_qubits: n }.into());
        }
        let m = naive::expand_1q(n, &gates::u(theta, phi, lambda), qubit);
        self.multiply(&m);
        Ok(())
    }

    fn apply_cx(&mut self, control: usize, target: usize) -> Result<(), SimError> {
        let n = self.state.n_qubits();
        for q in [control, target] {
            if q >= n {
                return Err(StateError::IndexOutOfRange { index: q, n_qubits: n }.into());
            }
        }
        if control == target {
            return Err(StateError::SameQubit(control).into());
        }
        let m = if self.flip_cx {
            naive::expand_cx(n, target, control)
        } else {
            naive::expand_cx(n, control, target)
        };
        self.multiply(&m);
        Ok(())
    }

    fn apply_gate(&mut self, gate: &GateMatrix, targets: &[usize]) -> Result<(), SimError> {
        let n = self.state.n_qubits();
        for (i, &q) in targets.iter().enumerate() {
            if q >= n {
                return Err(StateError::IndexOutOfRange { index: q, n_qubits: n }.into());
            }
            if targets[..i].contains(&q) {
                return Err(StateError::SameQubit(q).into());
            }
        }
        let m = naive::expand_gate(n, gate, targets);
        self.multiply(&m);
        Ok(())
    }

    fn measure(&mut self, qubit: usize, rng: &mut dyn RngDyn) -> Result<u8, SimError> {
        let n = self.state.n_qubits();
        if qubit >= n {
            return Err(StateError::IndexOutOfRange { index: qubit, n_qubits: n }.into());
        }
        let psi = DVector::from_column_slice(self.state.amplitudes());
        let branch = |bit: u8| naive::projector(n, qubit, bit) * &psi;
        let one = branch(1);
        let bit = rng.next_bit(one.norm_squared());
        let projected = if bit == 1 { one } else { branch(0) };
        let p = projected.norm_squared();
        if p < 1e-12 {
            return Err(StateError::DegenerateNorm(p).into());
        }
        let scale = 1.0 / p.sqrt();
        for (a, b) in self.state.amplitudes_mut().iter_mut().zip(projected.iter()) {
            *a = b * scale;
        }
        Ok(bit)
    }

    fn state(&self) -> &QuantumState {
        &self.state
    }

    fn set_state(&mut self, state: QuantumState) {
        self.state = state;
    }
}
