//! Pauli strings and their action on computational basis states.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PauliOp {
    I,
    X,
    Y,
    Z,
}

impl PauliOp {
    pub fn symbol(self) -> char {
        match self {
            PauliOp::I => 'I',
            PauliOp::X => 'X',
            PauliOp::Y => 'Y',
            PauliOp::Z => 'Z',
        }
    }

    pub fn from_symbol(c: char) -> Option<Self> {
        match c {
            'I' => Some(PauliOp::I),
            'X' => Some(PauliOp::X),
            'Y' => Some(PauliOp::Y),
            'Z' => Some(PauliOp::Z),
            _ => None,
        }
    }

    /// Index in `I, X, Y, Z` order.
    pub fn index(self) -> usize {
        self as usize
    }

    pub const ALL: [PauliOp; 4] = [PauliOp::I, PauliOp::X, PauliOp::Y, PauliOp::Z];
}

/// Tensor product of single-qubit Paulis, one entry per qubit, qubit 0 first.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct PauliString(Vec<PauliOp>);

impl PauliString {
    pub fn new(ops: Vec<PauliOp>) -> Self {
        Self(ops)
    }

    pub fn identity(width: usize) -> Self {
        Self(alloc::vec![PauliOp::I; width])
    }

    /// Identity everywhere except the listed `(qubit, op)` pairs.
    pub fn with_ops(width: usize, ops: &[(usize, PauliOp)]) -> Self {
        let mut s = Self::identity(width);
        for &(q, op) in ops {
            s.0[q] = op;
        }
        s
    }

    pub fn width(&self) -> usize {
        self.0.len()
    }

    pub fn ops(&self) -> &[PauliOp] {
        &self.0
    }

    pub fn get(&self, qubit: usize) -> PauliOp {
        self.0[qubit]
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|&op| op == PauliOp::I)
    }

    /// Number of non-identity factors.
    pub fn weight(&self) -> usize {
        self.0.iter().filter(|&&op| op != PauliOp::I).count()
    }

    fn bit(&self, qubit: usize) -> usize {
        1 << (self.0.len() - 1 - qubit)
    }

    /// Basis-index mask of the qubits acted on by X or Y.
    pub fn flip_mask(&self) -> usize {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, op)| matches!(op, PauliOp::X | PauliOp::Y))
            .fold(0, |m, (q, _)| m | self.bit(q))
    }

    /// Basis-index mask of the non-identity qubits.
    pub fn support_mask(&self) -> usize {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, op)| **op != PauliOp::I)
            .fold(0, |m, (q, _)| m | self.bit(q))
    }

    /// `P|j⟩ = phase · |target⟩`.
    pub fn apply(&self, basis: usize) -> (Complex64, usize) {
        let mut phase = Complex64::new(1.0, 0.0);
        for (q, op) in self.0.iter().enumerate() {
            let set = basis & self.bit(q) != 0;
            match op {
                PauliOp::I | PauliOp::X => {}
                PauliOp::Y => phase *= if set { Complex64::new(0.0, -1.0) } else { Complex64::new(0.0, 1.0) },
                PauliOp::Z => {
                    if set {
                        phase = -phase;
                    }
                }
            }
        }
        (phase, basis ^ self.flip_mask())
    }

    /// Real symmetric strings are exactly those with an even number of `Y`s.
    pub fn is_real(&self) -> bool {
        self.0.iter().filter(|&&op| op == PauliOp::Y).count() % 2 == 0
    }

    /// Enumerates all `4^width` strings in `I < X < Y < Z` lexicographic order.
    pub fn all(width: usize) -> impl Iterator<Item = PauliString> {
        (0..1usize << (2 * width)).map(move |mut k| {
            let mut ops = alloc::vec![PauliOp::I; width];
            for q in (0..width).rev() {
                ops[q] = PauliOp::ALL[k & 3];
                k >>= 2;
            }
            PauliString(ops)
        })
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for op in &self.0 {
            write!(f, "{}", op.symbol())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        if s.is_empty() {
            return Err(domain!("empty Pauli string"));
        }
        s.chars()
            .map(|c| PauliOp::from_symbol(c).ok_or_else(|| domain!("invalid Pauli symbol {c:?} in {s:?}")))
            .collect::<Result<Vec<_>, _>>()
            .map(PauliString)
    }
}

impl TryFrom<String> for PauliString {
    type Error = Error;
    fn try_from(s: String) -> Result<Self, Error> {
        s.parse()
    }
}

impl From<PauliString> for String {
    fn from(p: PauliString) -> String {
        alloc::format!("{p}")
    }
}
