//! Gate lists over a fixed register, their JSON form, and the lowering pass
//! to the neutral-atom native set {global `Rφ`, local `Rz`, `CZ`}.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Where an `Rφ` rotation acts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RotationTarget {
    Qubit(usize),
    /// Every qubit of the register at once.
    Global,
}

/// A single gate. Angles are in radians.
///
/// `Ry(θ) = exp(−iθY/2)`, `Rz(θ) = exp(−iθZ/2)` and
/// `Rφ(φ, θ) = exp(−iθ(cos φ X + sin φ Y)/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    Ry { qubit: usize, angle: f64 },
    Rz { qubit: usize, angle: f64 },
    RPhi { target: RotationTarget, phi: f64, angle: f64 },
    X { qubit: usize },
    Cz { a: usize, b: usize },
}

impl Gate {
    pub fn is_cz(&self) -> bool {
        matches!(self, Gate::Cz { .. })
    }

    fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::Ry { qubit, .. } | Gate::Rz { qubit, .. } | Gate::X { qubit } => alloc::vec![qubit],
            Gate::RPhi { target: RotationTarget::Qubit(q), .. } => alloc::vec![q],
            Gate::RPhi { target: RotationTarget::Global, .. } => Vec::new(),
            Gate::Cz { a, b } => alloc::vec![a, b],
        }
    }

    fn angles(&self) -> Vec<f64> {
        match *self {
            Gate::Ry { angle, .. } | Gate::Rz { angle, .. } => alloc::vec![angle],
            Gate::RPhi { phi, angle, .. } => alloc::vec![phi, angle],
            Gate::X { .. } | Gate::Cz { .. } => Vec::new(),
        }
    }
}

/// Ordered gate list on `width` qubits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CircuitRepr", into = "CircuitRepr")]
pub struct Circuit {
    width: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(width: usize) -> Self {
        Self { width, gates: Vec::new() }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn cz_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_cz()).count()
    }

    fn check(&self, gate: &Gate) -> Result<()> {
        let qubits = gate.qubits();
        if let Some(q) = qubits.iter().find(|&&q| q >= self.width) {
            return Err(domain!("qubit {q} out of range for width {}", self.width));
        }
        if let Gate::Cz { a, b } = gate {
            if a == b {
                return Err(domain!("CZ needs two distinct qubits, got ({a}, {b})"));
            }
        }
        if gate.angles().iter().any(|a| !a.is_finite()) {
            return Err(domain!("non-finite gate angle"));
        }
        Ok(())
    }

    pub fn push(&mut self, gate: Gate) -> Result<&mut Self> {
        self.check(&gate)?;
        self.gates.push(gate);
        Ok(self)
    }

    pub fn ry(&mut self, qubit: usize, angle: f64) -> Result<&mut Self> {
        self.push(Gate::Ry { qubit, angle })
    }

    pub fn rz(&mut self, qubit: usize, angle: f64) -> Result<&mut Self> {
        self.push(Gate::Rz { qubit, angle })
    }

    pub fn cz(&mut self, a: usize, b: usize) -> Result<&mut Self> {
        self.push(Gate::Cz { a, b })
    }

    pub fn x(&mut self, qubit: usize) -> Result<&mut Self> {
        self.push(Gate::X { qubit })
    }

    pub fn rphi(&mut self, target: RotationTarget, phi: f64, angle: f64) -> Result<&mut Self> {
        self.push(Gate::RPhi { target, phi, angle })
    }

    /// CNOT written as `Ry_t(−π/2) · CZ · Ry_t(π/2)` in time order.
    pub fn cnot(&mut self, control: usize, target: usize) -> Result<&mut Self> {
        self.ry(target, -PI / 2.0)?.cz(control, target)?.ry(target, PI / 2.0)
    }

    /// Appends all gates of `other`.
    pub fn append(&mut self, other: &Circuit) -> Result<&mut Self> {
        if other.width != self.width {
            return Err(domain!("cannot append a width-{} circuit to width {}", other.width, self.width));
        }
        self.gates.extend_from_slice(&other.gates);
        Ok(self)
    }

    /// Rebuilds the circuit from an arbitrary gate list, validating each gate.
    pub fn from_gates(width: usize, gates: impl IntoIterator<Item = Gate>) -> Result<Self> {
        let mut c = Self::new(width);
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    /// The inverse circuit: gates reversed, rotation angles negated.
    pub fn inverse(&self) -> Circuit {
        let gates = self
            .gates
            .iter()
            .rev()
            .map(|&g| match g {
                Gate::Ry { qubit, angle } => Gate::Ry { qubit, angle: -angle },
                Gate::Rz { qubit, angle } => Gate::Rz { qubit, angle: -angle },
                Gate::RPhi { target, phi, angle } => Gate::RPhi { target, phi, angle: -angle },
                other => other,
            })
            .collect();
        Circuit { width: self.width, gates }
    }

    /// Serializable gate records.
    pub fn records(&self) -> Vec<GateRecord> {
        self.gates.iter().map(GateRecord::from).collect()
    }
}

/// Rewrites every local `Ry`, local `Rφ` and `X` as
/// `Rz_q(−π), Rφ_all(φ, −θ/2), Rz_q(π), Rφ_all(φ, θ/2)`.
///
/// Conjugating by `Rz_q(π)` flips the sign of the rotation on `q` only, so
/// the two global pulses cancel on every other qubit. `X` is lowered as
/// `Rφ(0, π) = −iX`.
pub fn lower_to_native(circuit: &Circuit) -> Circuit {
    let local = |q: usize, phi: f64, angle: f64| {
        [
            Gate::Rz { qubit: q, angle: -PI },
            Gate::RPhi { target: RotationTarget::Global, phi, angle: -angle / 2.0 },
            Gate::Rz { qubit: q, angle: PI },
            Gate::RPhi { target: RotationTarget::Global, phi, angle: angle / 2.0 },
        ]
    };
    let mut gates = Vec::with_capacity(circuit.len() * 4);
    for &g in circuit.gates() {
        match g {
            Gate::Ry { qubit, angle } => gates.extend(local(qubit, PI / 2.0, angle)),
            Gate::RPhi { target: RotationTarget::Qubit(q), phi, angle } => gates.extend(local(q, phi, angle)),
            Gate::X { qubit } => gates.extend(local(qubit, 0.0, PI)),
            other => gates.push(other),
        }
    }
    Circuit { width: circuit.width, gates }
}

/// One gate as `{kind, qubits, angles}`; a global `Rφ` has no qubits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateRecord {
    pub kind: String,
    pub qubits: Vec<usize>,
    pub angles: Vec<f64>,
}

impl From<&Gate> for GateRecord {
    fn from(g: &Gate) -> Self {
        let kind = match g {
            Gate::Ry { .. } => "ry",
            Gate::Rz { .. } => "rz",
            Gate::RPhi { .. } => "rphi",
            Gate::X { .. } => "x",
            Gate::Cz { .. } => "cz",
        };
        GateRecord { kind: kind.into(), qubits: g.qubits(), angles: g.angles() }
    }
}

impl TryFrom<&GateRecord> for Gate {
    type Error = Error;
    fn try_from(r: &GateRecord) -> Result<Self> {
        let bad = || domain!("malformed {} gate record: qubits {:?}, angles {:?}", r.kind, r.qubits, r.angles);
        Ok(match (r.kind.as_str(), r.qubits.as_slice(), r.angles.as_slice()) {
            ("ry", &[qubit], &[angle]) => Gate::Ry { qubit, angle },
            ("rz", &[qubit], &[angle]) => Gate::Rz { qubit, angle },
            ("rphi", &[q], &[phi, angle]) => Gate::RPhi { target: RotationTarget::Qubit(q), phi, angle },
            ("rphi", &[], &[phi, angle]) => Gate::RPhi { target: RotationTarget::Global, phi, angle },
            ("x", &[qubit], &[]) => Gate::X { qubit },
            ("cz", &[a, b], &[]) => Gate::Cz { a, b },
            _ => return Err(bad()),
        })
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CircuitRepr {
    width: usize,
    gates: Vec<GateRecord>,
}

impl From<Circuit> for CircuitRepr {
    fn from(c: Circuit) -> Self {
        CircuitRepr { width: c.width, gates: c.records() }
    }
}

impl TryFrom<CircuitRepr> for Circuit {
    type Error = Error;
    fn try_from(r: CircuitRepr) -> Result<Self> {
        let gates = r.gates.iter().map(Gate::try_from).collect::<Result<Vec<_>>>()?;
        Circuit::from_gates(r.width, gates)
    }
}
