use super::{gates, qubit_mask, naive, StateError};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn matrix(self) -> DMatrix<Complex64> {
        gates::sigma(self as usize).into_matrix()
    }

    pub fn label(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

impl TryFrom<char> for Pauli {
    type Error = StateError;

    fn try_from(c: char) -> Result<Self, Self::Error> {
        match c.to_ascii_uppercase() {
            'I' => Ok(Pauli::I),
            'X' => Ok(Pauli::X),
            'Y' => Ok(Pauli::Y),
            'Z' => Ok(Pauli::Z),
            _ => Err(StateError::InvalidPauli(c)),
        }
    }
}

/// Tensor product of single-qubit Paulis; label `i` acts on qubit `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString(Vec<Pauli>);

impl PauliString {
    pub fn new(labels: Vec<Pauli>) -> Self {
        Self(labels)
    }

    pub fn identity(n: usize) -> Self {
        Self(vec![Pauli::I; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn labels(&self) -> &[Pauli] {
        &self.0
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|p| *p == Pauli::I)
    }

    /// All `4^k` strings of length `k` in lexicographic I < X < Y < Z order.
    pub fn all(k: usize) -> Vec<PauliString> {
        (0..4usize.pow(k as u32))
            .map(|mut code| {
                let mut labels = vec![Pauli::I; k];
                for slot in labels.iter_mut().rev() {
                    *slot = Pauli::ALL[code % 4];
                    code /= 4;
                }
                PauliString(labels)
            })
            .collect()
    }

    /// `(x_mask, z_mask, number_of_Y)` such that `P = i^{#Y} X^x Z^z`.
    pub fn masks(&self) -> (usize, usize, usize) {
        let n = self.len();
        let mut x = 0;
        let mut z = 0;
        let mut ny = 0;
        for (q, p) in self.0.iter().enumerate() {
            let m = qubit_mask(n, q);
            match p {
                Pauli::I => {}
                Pauli::X => x |= m,
                Pauli::Z => z |= m,
                Pauli::Y => {
                    x |= m;
                    z |= m;
                    ny += 1;
                }
            }
        }
        (x, z, ny)
    }

    /// Dense `2^n x 2^n` matrix.
    pub fn matrix(&self) -> DMatrix<Complex64> {
        let factors: Vec<_> = self.0.iter().map(|p| p.matrix()).collect();
        naive::kron_all(&factors)
    }
}

impl FromStr for PauliString {
    type Err = StateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars().map(Pauli::try_from).collect::<Result<_, _>>().map(PauliString)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|p| write!(f, "{}", p.label()))
    }
}

impl Serialize for PauliString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}
