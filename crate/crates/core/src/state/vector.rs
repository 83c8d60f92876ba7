use super::{qubit_mask, GateMatrix, PauliString, StateError};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Hard ceiling on dense state size, independent of engine configuration.
pub const MAX_DENSE_QUBITS: usize = 30;

/// Normalized pure state of `n_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

/// Serialized form of a state: `{"n_qubits", "amplitudes": [[re, im], ...], "ordering"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSnapshot {
    pub n_qubits: usize,
    pub amplitudes: Vec<[f64; 2]>,
    pub ordering: String,
}

pub const ORDERING: &str = "q0-leftmost";

impl StateSnapshot {
    pub fn to_state(&self) -> Result<QuantumState, StateError> {
        let amps = self
            .amplitudes
            .iter()
            .map(|[re, im]| Complex64::new(*re, *im))
            .collect();
        let state = QuantumState::from_amplitudes(amps)?;
        if state.n_qubits() != self.n_qubits {
            return Err(StateError::DimensionMismatch {
                left: self.n_qubits,
                right: state.n_qubits(),
            });
        }
        Ok(state)
    }
}

fn check_capacity(n: usize) -> Result<(), StateError> {
    if n > MAX_DENSE_QUBITS {
        return Err(StateError::CapacityExceeded {
            requested: n,
            limit: MAX_DENSE_QUBITS,
        });
    }
    Ok(())
}

impl QuantumState {
    /// `|0...0>` on `n` qubits.
    pub fn zero(n: usize) -> Result<Self, StateError> {
        Self::basis(n, 0)
    }

    pub fn basis(n: usize, index: usize) -> Result<Self, StateError> {
        check_capacity(n)?;
        let dim = 1usize << n;
        if index >= dim {
            return Err(StateError::IndexOutOfRange { index, n_qubits: n });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits: n, amps })
    }

    /// Basis state from a q0-leftmost bitstring such as `"010"`.
    pub fn from_bits(bits: &str) -> Result<Self, StateError> {
        let index = super::bits_to_index(bits)
            .ok_or_else(|| StateError::InvalidBitstring(bits.to_string()))?;
        Self::basis(bits.len(), index)
    }

    /// Takes ownership of an amplitude vector; it must have unit norm within 1e-9.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self, StateError> {
        let state = Self::from_raw(amps)?;
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(StateError::NotNormalized(norm));
        }
        Ok(state)
    }

    /// Like [`from_amplitudes`](Self::from_amplitudes) but rescales to unit norm.
    pub fn normalized(amps: Vec<Complex64>) -> Result<Self, StateError> {
        let mut state = Self::from_raw(amps)?;
        let norm = state.norm_sqr();
        if norm < 1e-300 {
            return Err(StateError::NotNormalized(norm));
        }
        let scale = 1.0 / norm.sqrt();
        state.amps.iter_mut().for_each(|a| *a *= scale);
        Ok(state)
    }

    fn from_raw(amps: Vec<Complex64>) -> Result<Self, StateError> {
        let len = amps.len();
        if !len.is_power_of_two() {
            return Err(StateError::NotPowerOfTwo(len));
        }
        let n = len.trailing_zeros() as usize;
        check_capacity(n)?;
        Ok(Self { n_qubits: n, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// Raw mutable access; callers are responsible for keeping the norm.
    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    fn check_qubit(&self, q: usize) -> Result<(), StateError> {
        if q >= self.n_qubits {
            return Err(StateError::IndexOutOfRange {
                index: q,
                n_qubits: self.n_qubits,
            });
        }
        Ok(())
    }

    /// Applies a 2x2 gate to `target` in place.
    pub fn apply_1q(&mut self, gate: &GateMatrix, target: usize) -> Result<(), StateError> {
        if gate.n_qubits() != 1 {
            return Err(StateError::DimensionMismatch {
                left: gate.dim(),
                right: 2,
            });
        }
        self.check_qubit(target)?;
        let (m00, m01, m10, m11) = (gate.get(0, 0), gate.get(0, 1), gate.get(1, 0), gate.get(1, 1));
        let stride = qubit_mask(self.n_qubits, target);
        // Blocks of 2*stride: the lower half has the target bit clear.
        for block in self.amps.chunks_exact_mut(stride << 1) {
            let (lo, hi) = block.split_at_mut(stride);
            for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x0, x1) = (*a0, *a1);
                *a0 = m00 * x0 + m01 * x1;
                *a1 = m10 * x0 + m11 * x1;
            }
        }
        Ok(())
    }

    pub fn apply_cx(&mut self, control: usize, target: usize) -> Result<(), StateError> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(StateError::SameQubit(control));
        }
        let cmask = qubit_mask(self.n_qubits, control);
        let tmask = qubit_mask(self.n_qubits, target);
        for i in 0..self.amps.len() {
            if i & cmask != 0 && i & tmask == 0 {
                self.amps.swap(i, i | tmask);
            }
        }
        Ok(())
    }

    /// Applies a `2^k x 2^k` gate to the listed qubits; `targets[0]` is the
    /// gate's most significant operand.
    pub fn apply_gate(&mut self, gate: &GateMatrix, targets: &[usize]) -> Result<(), StateError> {
        if gate.n_qubits() != targets.len() {
            return Err(StateError::DimensionMismatch {
                left: gate.n_qubits(),
                right: targets.len(),
            });
        }
        for (i, &q) in targets.iter().enumerate() {
            self.check_qubit(q)?;
            if targets[..i].contains(&q) {
                return Err(StateError::SameQubit(q));
            }
        }
        let k = targets.len();
        let dim = 1usize << k;
        // offsets[j] = index bits contributed by local basis state j.
        let offsets: Vec<usize> = (0..dim)
            .map(|j| {
                targets.iter().enumerate().fold(0, |acc, (pos, &q)| {
                    if j & (1 << (k - 1 - pos)) != 0 {
                        acc | qubit_mask(self.n_qubits, q)
                    } else {
                        acc
                    }
                })
            })
            .collect();
        let all_mask = offsets[dim - 1];
        let mut local = vec![Complex64::new(0.0, 0.0); dim];
        for base in 0..self.amps.len() {
            if base & all_mask != 0 {
                continue;
            }
            for (j, off) in offsets.iter().enumerate() {
                local[j] = self.amps[base | off];
            }
            for (row, off) in offsets.iter().enumerate() {
                self.amps[base | off] = (0..dim).map(|col| gate.get(row, col) * local[col]).sum();
            }
        }
        Ok(())
    }

    /// Probability that measuring `q` yields 1.
    pub fn prob_one(&self, q: usize) -> Result<f64, StateError> {
        self.check_qubit(q)?;
        let mask = qubit_mask(self.n_qubits, q);
        Ok(self
            .amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    /// Projects `q` onto `bit` and renormalizes. Returns the branch probability.
    pub fn collapse(&mut self, q: usize, bit: u8) -> Result<f64, StateError> {
        let p1 = self.prob_one(q)?;
        let p = if bit == 1 { p1 } else { 1.0 - p1 };
        if p < 1e-12 {
            return Err(StateError::DegenerateNorm(p));
        }
        let mask = qubit_mask(self.n_qubits, q);
        let scale = 1.0 / p.sqrt();
        for (i, a) in self.amps.iter_mut().enumerate() {
            if ((i & mask != 0) as u8) == bit {
                *a *= scale;
            } else {
                *a = Complex64::new(0.0, 0.0);
            }
        }
        Ok(p)
    }

    /// Samples a computational-basis measurement of `q`, collapsing in place.
    /// Returns the outcome bit and its probability.
    pub fn measure_qubit<R: Rng + ?Sized>(
        &mut self,
        q: usize,
        rng: &mut R,
    ) -> Result<(u8, f64), StateError> {
        let p1 = self.prob_one(q)?;
        let bit = draw_bit(p1, rng);
        let p = self.collapse(q, bit)?;
        Ok((bit, p))
    }

    /// Distribution of the listed qubits, indexed by the bitstring formed in
    /// list order (first listed qubit is the most significant bit).
    pub fn marginal_probabilities(&self, qubits: &[usize]) -> Result<Vec<f64>, StateError> {
        for &q in qubits {
            self.check_qubit(q)?;
        }
        let k = qubits.len();
        let mut out = vec![0.0; 1 << k];
        for (i, a) in self.amps.iter().enumerate() {
            let local = qubits.iter().enumerate().fold(0usize, |acc, (pos, &q)| {
                if i & qubit_mask(self.n_qubits, q) != 0 {
                    acc | (1 << (k - 1 - pos))
                } else {
                    acc
                }
            });
            out[local] += a.norm_sqr();
        }
        Ok(out)
    }

    pub fn snapshot(&self) -> StateSnapshot {
        StateSnapshot {
            n_qubits: self.n_qubits,
            amplitudes: self.amps.iter().map(|a| [a.re, a.im]).collect(),
            ordering: ORDERING.to_string(),
        }
    }
}

/// Outcome of a Bernoulli draw with `P(1) = p1`: one uniform `u` in [0, 1) is
/// consumed and the result is 1 iff `u >= 1 - p1`. Every engine uses this so
/// equal seeds give equal outcomes.
pub fn draw_bit<R: Rng + ?Sized>(p1: f64, rng: &mut R) -> u8 {
    let u: f64 = rng.random();
    (u >= 1.0 - p1) as u8
}

/// Kronecker product; `a`'s qubits come first.
pub fn tensor(a: &QuantumState, b: &QuantumState) -> Result<QuantumState, StateError> {
    let n = a.n_qubits + b.n_qubits;
    check_capacity(n)?;
    let amps = a
        .amps
        .iter()
        .flat_map(|x| b.amps.iter().map(move |y| x * y))
        .collect();
    Ok(QuantumState { n_qubits: n, amps })
}

/// `<a|b>`.
pub fn inner_product(a: &QuantumState, b: &QuantumState) -> Result<Complex64, StateError> {
    if a.dim() != b.dim() {
        return Err(StateError::DimensionMismatch {
            left: a.n_qubits,
            right: b.n_qubits,
        });
    }
    Ok(a.amps.iter().zip(&b.amps).map(|(x, y)| x.conj() * y).sum())
}

pub fn equal_up_to_global_phase(
    a: &QuantumState,
    b: &QuantumState,
    tol: f64,
) -> Result<bool, StateError> {
    Ok(inner_product(a, b)?.norm() >= 1.0 - tol)
}

/// `<psi|P|psi>` using the bit-mask form `P = i^{#Y} X^x Z^z`.
pub fn pauli_expectation(state: &QuantumState, pauli: &PauliString) -> Result<f64, StateError> {
    if pauli.len() != state.n_qubits {
        return Err(StateError::DimensionMismatch {
            left: pauli.len(),
            right: state.n_qubits,
        });
    }
    let (xmask, zmask, ny) = pauli.masks();
    let phase = match ny % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    };
    let total: Complex64 = state
        .amps
        .iter()
        .enumerate()
        .map(|(x, a)| {
            let sign = if (x & zmask).count_ones() % 2 == 1 { -1.0 } else { 1.0 };
            state.amps[x ^ xmask].conj() * a * sign
        })
        .sum();
    Ok((phase * total).re)
}
