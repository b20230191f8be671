//! LMG Hamiltonians in the individual-spin and Gray-code encodings, Pauli
//! decomposition, measurement grouping and exact diagonalization.
//!
//! The individual-spin Hamiltonian is stored with weight `+V/2` on every
//! unordered pair `X_p X_q` and `−V/2` on every unordered pair `Y_p Y_q`,
//! next to `1/2` on each `Z_p`. Written as a sum over ordered pairs this is
//! `V/4 Σ_{p≠q}(X_p X_q − Y_p Y_q)`, i.e. `V/2 (J₊² + J₋²)`, and its
//! maximal-`J` block has the same spectrum as the Gray-code Hamiltonian.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_complex::Complex64;
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::graycode::{self, QuasiSpinLabel};
use crate::linalg::{symmetric_eigen, Matrix};
use crate::pauli::{PauliOp, PauliString};

/// Pauli weights at or below this magnitude are dropped.
pub const WEIGHT_THRESHOLD: f64 = 1e-12;

/// Qubit encoding of the LMG model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    /// One qubit per spin.
    Individual,
    /// The `⌊N/2⌋+1` maximal-`J` states on Gray-ordered codewords.
    Gray,
}

impl fmt::Display for Encoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Encoding::Individual => "individual",
            Encoding::Gray => "gray",
        })
    }
}

impl FromStr for Encoding {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "individual" => Ok(Encoding::Individual),
            "gray" => Ok(Encoding::Gray),
            other => Err(domain!("unknown encoding {other:?} (expected individual or gray)")),
        }
    }
}

/// Weighted sum of Pauli strings with real weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PauliHamiltonianRepr", into = "PauliHamiltonianRepr")]
pub struct PauliHamiltonian {
    width: usize,
    terms: BTreeMap<PauliString, f64>,
}

impl PauliHamiltonian {
    pub fn new(width: usize) -> Self {
        Self { width, terms: BTreeMap::new() }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Adds `weight` to the coefficient of `string`.
    pub fn add_term(&mut self, string: PauliString, weight: f64) -> Result<()> {
        if string.width() != self.width {
            return Err(domain!("Pauli string {string} has width {}, Hamiltonian has {}", string.width(), self.width));
        }
        if !weight.is_finite() {
            return Err(domain!("non-finite weight for {string}"));
        }
        *self.terms.entry(string).or_insert(0.0) += weight;
        Ok(())
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PauliString, f64)> {
        self.terms.iter().map(|(s, &w)| (s, w))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Weight of `string`, zero if absent.
    pub fn weight(&self, string: &str) -> f64 {
        string.parse::<PauliString>().ok().and_then(|s| self.terms.get(&s).copied()).unwrap_or(0.0)
    }

    /// Same strings with every weight multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self { width: self.width, terms: self.terms.iter().map(|(s, w)| (s.clone(), w * factor)).collect() }
    }

    fn require_real(&self) -> Result<()> {
        match self.terms.keys().find(|s| !s.is_real()) {
            Some(s) => Err(Error::Structure(alloc::format!("term {s} has an odd number of Y factors"))),
            None => Ok(()),
        }
    }

    /// Dense real matrix `Σ a_i P_i`.
    pub fn to_dense(&self) -> Result<DenseHamiltonian> {
        self.require_real()?;
        let dim = 1usize << self.width;
        let mut m = Matrix::zeros(dim, dim);
        for (string, &w) in &self.terms {
            for j in 0..dim {
                let (phase, target) = string.apply(j);
                m[(target, j)] += w * phase.re;
            }
        }
        Ok(DenseHamiltonian { matrix: m })
    }

    /// Sparse matrix-vector product `H v` for real vectors.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.require_real()?;
        let dim = 1usize << self.width;
        if v.len() != dim {
            return Err(domain!("vector length {} does not match dimension {dim}", v.len()));
        }
        let mut out = alloc::vec![0.0; dim];
        for (string, &w) in &self.terms {
            for (j, &x) in v.iter().enumerate() {
                if x != 0.0 {
                    let (phase, target) = string.apply(j);
                    out[target] += w * phase.re * x;
                }
            }
        }
        Ok(out)
    }
}

#[derive(Serialize, Deserialize)]
struct PauliTermRepr {
    string: PauliString,
    weight: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PauliHamiltonianRepr {
    width: usize,
    terms: Vec<PauliTermRepr>,
}

impl From<PauliHamiltonian> for PauliHamiltonianRepr {
    fn from(h: PauliHamiltonian) -> Self {
        Self {
            width: h.width,
            terms: h.terms.into_iter().map(|(string, weight)| PauliTermRepr { string, weight }).collect(),
        }
    }
}

impl TryFrom<PauliHamiltonianRepr> for PauliHamiltonian {
    type Error = Error;
    fn try_from(r: PauliHamiltonianRepr) -> Result<Self> {
        let mut h = PauliHamiltonian::new(r.width);
        for t in r.terms {
            h.add_term(t.string, t.weight)?;
        }
        Ok(h)
    }
}

/// Real symmetric Hamiltonian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseHamiltonian {
    matrix: Matrix,
}

impl DenseHamiltonian {
    pub fn new(matrix: Matrix) -> Result<Self> {
        if matrix.rows() != matrix.cols() {
            return Err(domain!("Hamiltonian matrix must be square"));
        }
        if matrix.asymmetry() > 1e-14 {
            return Err(domain!("Hamiltonian matrix must be symmetric"));
        }
        Ok(Self { matrix })
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(symmetric_eigen(&self.matrix)?.values)
    }
}

/// Gray-encoded LMG Hamiltonian with its quasi-spin bookkeeping.
#[derive(Debug, Clone)]
pub struct GrayHamiltonian {
    pub particles: usize,
    pub coupling: f64,
    pub width: usize,
    pub labels: Vec<QuasiSpinLabel>,
    pub dense: DenseHamiltonian,
}

impl GrayHamiltonian {
    /// Basis indices of `g_0 … g_{d−1}`.
    pub fn block_indices(&self) -> Vec<usize> {
        self.labels.iter().map(|l| l.codeword as usize).collect()
    }

    /// The `d × d` block in Gray order; padded states are excluded.
    pub fn block(&self) -> Matrix {
        self.dense.matrix().submatrix(&self.block_indices())
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let b = self.block();
        (0..b.rows()).map(|k| b[(k, k)]).collect()
    }

    pub fn off_diagonal(&self) -> Vec<f64> {
        let b = self.block();
        (1..b.rows()).map(|k| b[(k - 1, k)]).collect()
    }
}

fn check_particles(particles: usize) -> Result<()> {
    if particles < 2 {
        return Err(domain!("particle count must be at least 2, got {particles}"));
    }
    Ok(())
}

/// Individual-spin Hamiltonian on `N` qubits (see the module docs for the
/// stored normalization).
pub fn build_individual_hamiltonian(particles: usize, coupling: f64) -> Result<PauliHamiltonian> {
    check_particles(particles)?;
    let n = particles;
    let mut h = PauliHamiltonian::new(n);
    for p in 0..n {
        h.add_term(PauliString::with_ops(n, &[(p, PauliOp::Z)]), 0.5)?;
    }
    if coupling != 0.0 {
        for p in 0..n {
            for q in p + 1..n {
                h.add_term(PauliString::with_ops(n, &[(p, PauliOp::X), (q, PauliOp::X)]), coupling / 2.0)?;
                h.add_term(PauliString::with_ops(n, &[(p, PauliOp::Y), (q, PauliOp::Y)]), -coupling / 2.0)?;
            }
        }
    }
    Ok(h)
}

/// `F(M) = {[J(J+1) − M(M+1)][J(J+1) − (M+1)(M+2)]}^{1/2}`.
pub fn pair_flip_factor(j: f64, m: f64) -> f64 {
    let jj = j * (j + 1.0);
    ((jj - m * (m + 1.0)) * (jj - (m + 1.0) * (m + 2.0))).max(0.0).sqrt()
}

/// Gray-code Hamiltonian: diagonal `a_k = 2k − J`, couplings
/// `b_k = −(V/2) F(2k − J)` between `g_k` and `g_{k+1}`, zero padding
/// elsewhere.
pub fn build_gray_hamiltonian(particles: usize, coupling: f64) -> Result<GrayHamiltonian> {
    check_particles(particles)?;
    let width = graycode::qubit_count(particles)?;
    let labels = graycode::jm_labels(particles)?;
    let dim = 1usize << width;
    let j = particles as f64 / 2.0;
    let mut m = Matrix::zeros(dim, dim);
    for (k, label) in labels.iter().enumerate() {
        let idx = label.codeword as usize;
        let mk = 2.0 * k as f64 - j;
        m[(idx, idx)] = mk;
        if let Some(next) = labels.get(k + 1) {
            let b = -coupling / 2.0 * pair_flip_factor(j, mk);
            let nidx = next.codeword as usize;
            m[(idx, nidx)] = b;
            m[(nidx, idx)] = b;
        }
    }
    Ok(GrayHamiltonian { particles, coupling, width, labels, dense: DenseHamiltonian { matrix: m } })
}

/// Eigenvalues of the Gray block, ascending.
pub fn gray_spectrum(particles: usize, coupling: f64) -> Result<Vec<f64>> {
    let h = build_gray_hamiltonian(particles, coupling)?;
    Ok(symmetric_eigen(&h.block())?.values)
}

/// Lowest eigenvalue of the Gray block and its eigenvector (Gray order,
/// sign fixed so the first nonzero component is positive).
pub fn ground_state(particles: usize, coupling: f64) -> Result<(f64, Vec<f64>)> {
    let h = build_gray_hamiltonian(particles, coupling)?;
    let eig = symmetric_eigen(&h.block())?;
    let mut v = eig.vector(0);
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-12) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
    Ok((eig.values[0], v))
}

/// Lift a block vector (component `k` on `|J, −J+2k⟩`) into the `2^N`
/// individual-spin register as a sum of Dicke states. Component `k` lands
/// on basis states with `2k` qubits in `|0⟩`, with sign `(−1)^k` to match
/// the negative pair-flip couplings of the block.
pub fn dicke_embedding(particles: usize, block: &[f64]) -> Result<Vec<f64>> {
    check_particles(particles)?;
    let d = particles / 2 + 1;
    if block.len() != d {
        return Err(domain!("expected {d} block components, got {}", block.len()));
    }
    if particles > 24 {
        return Err(domain!("register of {particles} qubits is too large to embed"));
    }
    let dim = 1usize << particles;
    let mut out = alloc::vec![0.0; dim];
    for (i, amp) in out.iter_mut().enumerate() {
        let zeros = particles - i.count_ones() as usize;
        if zeros % 2 == 0 {
            let k = zeros / 2;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            *amp = sign * block[k] / binomial(particles, zeros).sqrt();
        }
    }
    Ok(out)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Exact ground-state energy of the LMG model.
pub fn exact_ground_energy(particles: usize, coupling: f64) -> Result<f64> {
    Ok(gray_spectrum(particles, coupling)?[0])
}

/// `a_i = Tr(H P_i)/dim(H)` for every string with `|a_i|` above
/// [`WEIGHT_THRESHOLD`].
pub fn pauli_decompose(h: &DenseHamiltonian) -> Result<PauliHamiltonian> {
    let dim = h.dim();
    if dim == 0 || !dim.is_power_of_two() {
        return Err(domain!("dimension {dim} is not a power of two"));
    }
    let width = dim.trailing_zeros() as usize;
    let mut out = PauliHamiltonian::new(width);
    for string in PauliString::all(width) {
        let mut trace = Complex64::new(0.0, 0.0);
        for j in 0..dim {
            let (phase, target) = string.apply(j);
            trace += phase * h.matrix[(j, target)];
        }
        let weight = trace.re / dim as f64;
        if weight.abs() > WEIGHT_THRESHOLD {
            out.terms.insert(string, weight);
        }
    }
    Ok(out)
}

/// Pauli strings measurable after one shared basis rotation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementGroup {
    /// Measurement basis per qubit, over `X`, `Y`, `Z`.
    pub basis: PauliString,
    pub members: Vec<(PauliString, f64)>,
}

impl MeasurementGroup {
    fn accepts(&self, string: &PauliString) -> bool {
        string.ops().iter().zip(self.basis.ops()).all(|(&op, &b)| op == PauliOp::I || op == b)
    }
}

/// Groups the terms of `h` into simultaneously measurable sets.
///
/// Individual encoding gives the all-`X`, all-`Y`, all-`Z` groups. Gray
/// encoding gives the all-`Z` group followed by one group per qubit holding
/// the single `X`. Groups may be empty.
pub fn measurement_groups(h: &PauliHamiltonian, encoding: Encoding) -> Result<Vec<MeasurementGroup>> {
    let n = h.width();
    let uniform = |op| PauliString::new(alloc::vec![op; n]);
    let mut groups: Vec<MeasurementGroup> = match encoding {
        Encoding::Individual => [PauliOp::X, PauliOp::Y, PauliOp::Z]
            .into_iter()
            .map(|op| MeasurementGroup { basis: uniform(op), members: Vec::new() })
            .collect(),
        Encoding::Gray => core::iter::once(uniform(PauliOp::Z))
            .chain((0..n).map(|q| {
                let mut ops = alloc::vec![PauliOp::Z; n];
                ops[q] = PauliOp::X;
                PauliString::new(ops)
            }))
            .map(|basis| MeasurementGroup { basis, members: Vec::new() })
            .collect(),
    };
    for (string, w) in h.terms() {
        let slot = match encoding {
            Encoding::Individual => {
                let letters: Vec<PauliOp> = string.ops().iter().copied().filter(|&op| op != PauliOp::I).collect();
                match letters.first() {
                    None => Some(2),
                    Some(&first) if letters.iter().all(|&op| op == first) => Some(first.index() - 1),
                    Some(_) => None,
                }
            }
            Encoding::Gray => {
                let xs: Vec<usize> =
                    string.ops().iter().enumerate().filter(|(_, &op)| op == PauliOp::X).map(|(q, _)| q).collect();
                let has_y = string.ops().contains(&PauliOp::Y);
                match (has_y, xs.as_slice()) {
                    (false, []) => Some(0),
                    (false, [q]) => Some(q + 1),
                    _ => None,
                }
            }
        };
        match slot {
            Some(i) if groups[i].accepts(string) => groups[i].members.push((string.clone(), w)),
            _ => {
                return Err(Error::Structure(alloc::format!(
                    "term {string} does not fit the {encoding} measurement pattern"
                )))
            }
        }
    }
    Ok(groups)
}

/// Renders a weight table grouped by measurement basis.
pub fn format_weight_table(groups: &[MeasurementGroup]) -> String {
    use core::fmt::Write;
    let mut out = String::new();
    for g in groups {
        let _ = writeln!(out, "[{} grouping]", g.basis);
        for (s, w) in &g.members {
            let _ = writeln!(out, "  {s:<8} {w:>+.12}");
        }
    }
    out
}
