//! Statevector execution, CZ depolarizing trajectories, readout-flip SPAM
//! and bitstring sampling.
//!
//! Randomness comes from [`ChaCha8Rng`]. [`RngStreams`] derives one
//! independent substream per circuit execution from a single seed, so a
//! run's output does not depend on how executions are scheduled.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate, RotationTarget};
use crate::error::{domain, Error, Result};
use crate::graycode::format_codeword;
use crate::hamiltonian::PauliHamiltonian;
use crate::linalg::{c64, Mat2, C64};
use crate::pauli::{PauliOp, PauliString};

/// Registers wider than this are rejected.
pub const MAX_QUBITS: usize = 20;

pub fn ry_matrix(theta: f64) -> Mat2 {
    let (s, c) = (theta / 2.0).sin_cos();
    [[c64(c, 0.0), c64(-s, 0.0)], [c64(s, 0.0), c64(c, 0.0)]]
}

pub fn rz_matrix(theta: f64) -> Mat2 {
    let (s, c) = (theta / 2.0).sin_cos();
    [[c64(c, -s), c64(0.0, 0.0)], [c64(0.0, 0.0), c64(c, s)]]
}

pub fn rphi_matrix(phi: f64, theta: f64) -> Mat2 {
    let (s, c) = (theta / 2.0).sin_cos();
    let (sp, cp) = phi.sin_cos();
    // −i e^{∓iφ} sin(θ/2)
    let upper = c64(-s * sp, -s * cp);
    let lower = c64(s * sp, -s * cp);
    [[c64(c, 0.0), upper], [lower, c64(c, 0.0)]]
}

pub fn x_matrix() -> Mat2 {
    [[c64(0.0, 0.0), c64(1.0, 0.0)], [c64(1.0, 0.0), c64(0.0, 0.0)]]
}

fn pauli_matrix(op: PauliOp) -> Mat2 {
    let (o, l, i) = (c64(0.0, 0.0), c64(1.0, 0.0), c64(0.0, 1.0));
    match op {
        PauliOp::I => [[l, o], [o, l]],
        PauliOp::X => [[o, l], [l, o]],
        PauliOp::Y => [[o, -i], [i, o]],
        PauliOp::Z => [[l, o], [o, -l]],
    }
}

/// Pure state of `width` qubits; qubit 0 is the most significant bit.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    width: usize,
    amps: Vec<C64>,
}

impl StateVector {
    /// `|0…0⟩`.
    pub fn zero(width: usize) -> Result<Self> {
        if width == 0 || width > MAX_QUBITS {
            return Err(domain!("register width must be in 1..={MAX_QUBITS}, got {width}"));
        }
        let mut amps = alloc::vec![c64(0.0, 0.0); 1 << width];
        amps[0] = c64(1.0, 0.0);
        Ok(Self { width, amps })
    }

    /// Checks length and unit norm (to 1e-9).
    pub fn from_amplitudes(width: usize, amps: Vec<C64>) -> Result<Self> {
        Self::zero(width)?;
        if amps.len() != 1 << width {
            return Err(domain!("expected {} amplitudes, got {}", 1usize << width, amps.len()));
        }
        let s = Self { width, amps };
        let norm = s.norm_sqr();
        if !norm.is_finite() || (norm - 1.0).abs() > 1e-9 {
            return Err(domain!("state is not normalized (norm² = {norm})"));
        }
        Ok(s)
    }

    pub fn from_real(width: usize, amps: &[f64]) -> Result<Self> {
        Self::from_amplitudes(width, amps.iter().map(|&a| c64(a, 0.0)).collect())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitude(&self, index: usize) -> C64 {
        self.amps[index]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    /// `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Real parts, if every imaginary part is within `tol` of zero.
    pub fn real_amplitudes(&self, tol: f64) -> Option<Vec<f64>> {
        self.amps.iter().all(|a| a.im.abs() <= tol).then(|| self.amps.iter().map(|a| a.re).collect())
    }

    fn bit(&self, qubit: usize) -> usize {
        1 << (self.width - 1 - qubit)
    }

    pub fn apply_single(&mut self, qubit: usize, u: &Mat2) {
        let bit = self.bit(qubit);
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let (a0, a1) = (self.amps[i], self.amps[i | bit]);
                self.amps[i] = u[0][0] * a0 + u[0][1] * a1;
                self.amps[i | bit] = u[1][0] * a0 + u[1][1] * a1;
            }
        }
    }

    pub fn apply_cz(&mut self, a: usize, b: usize) {
        let mask = self.bit(a) | self.bit(b);
        for (i, amp) in self.amps.iter_mut().enumerate() {
            if i & mask == mask {
                *amp = -*amp;
            }
        }
    }

    pub fn apply_gate(&mut self, gate: &Gate) {
        match *gate {
            Gate::Ry { qubit, angle } => self.apply_single(qubit, &ry_matrix(angle)),
            Gate::Rz { qubit, angle } => self.apply_single(qubit, &rz_matrix(angle)),
            Gate::RPhi { target: RotationTarget::Qubit(q), phi, angle } => {
                self.apply_single(q, &rphi_matrix(phi, angle))
            }
            Gate::RPhi { target: RotationTarget::Global, phi, angle } => {
                let u = rphi_matrix(phi, angle);
                for q in 0..self.width {
                    self.apply_single(q, &u);
                }
            }
            Gate::X { qubit } => self.apply_single(qubit, &x_matrix()),
            Gate::Cz { a, b } => self.apply_cz(a, b),
        }
    }

    pub fn apply_pauli_op(&mut self, qubit: usize, op: PauliOp) {
        if op != PauliOp::I {
            self.apply_single(qubit, &pauli_matrix(op));
        }
    }

    /// `⟨ψ|P|ψ⟩`, real for Hermitian `P`.
    pub fn pauli_expectation(&self, string: &PauliString) -> Result<f64> {
        if string.width() != self.width {
            return Err(domain!("Pauli string width {} does not match state width {}", string.width(), self.width));
        }
        let mut acc = c64(0.0, 0.0);
        for (j, a) in self.amps.iter().enumerate() {
            let (phase, target) = string.apply(j);
            acc += self.amps[target].conj() * phase * a;
        }
        Ok(acc.re)
    }

    /// `⟨ψ|H|ψ⟩`.
    pub fn expectation(&self, h: &PauliHamiltonian) -> Result<f64> {
        h.terms().map(|(s, w)| Ok(w * self.pauli_expectation(s)?)).sum()
    }
}

/// Applies `c` to `input`.
pub fn run_circuit(c: &Circuit, input: &StateVector) -> Result<StateVector> {
    if c.width() != input.width() {
        return Err(domain!("circuit width {} does not match state width {}", c.width(), input.width()));
    }
    let mut s = input.clone();
    for g in c.gates() {
        s.apply_gate(g);
    }
    Ok(s)
}

/// Applies `c` to `|0…0⟩`.
pub fn prepare(c: &Circuit) -> Result<StateVector> {
    run_circuit(c, &StateVector::zero(c.width())?)
}

/// `p = (4/3)(1 − F)`: the two-qubit depolarizing probability whose average
/// gate fidelity is `F`.
pub fn depolarizing_probability(cz_fidelity: f64) -> f64 {
    4.0 / 3.0 * (1.0 - cz_fidelity)
}

/// CZ depolarizing noise plus symmetric readout flips.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseModel {
    /// Average CZ gate fidelity, in `[0.25, 1]`.
    pub cz_fidelity: f64,
    /// Per-qubit readout flip probability, in `[0, 1]`.
    pub spam_error: f64,
    /// Replaces [`depolarizing_probability`] when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cz_error_override: Option<f64>,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::noiseless()
    }
}

impl NoiseModel {
    pub fn new(cz_fidelity: f64, spam_error: f64) -> Result<Self> {
        let m = Self { cz_fidelity, spam_error, cz_error_override: None };
        m.validate()?;
        Ok(m)
    }

    pub const fn noiseless() -> Self {
        Self { cz_fidelity: 1.0, spam_error: 0.0, cz_error_override: None }
    }

    /// `F = 0.971`, SPAM `0.025`.
    pub const fn paper_noise() -> Self {
        Self { cz_fidelity: 0.971, spam_error: 0.025, cz_error_override: None }
    }

    /// `F = 0.986`, SPAM `0.025`.
    pub const fn optimized_gate() -> Self {
        Self { cz_fidelity: 0.986, spam_error: 0.025, cz_error_override: None }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.25..=1.0).contains(&self.cz_fidelity) {
            return Err(domain!("cz_fidelity must lie in [0.25, 1], got {}", self.cz_fidelity));
        }
        if !(0.0..=1.0).contains(&self.spam_error) {
            return Err(domain!("spam_error must lie in [0, 1], got {}", self.spam_error));
        }
        if let Some(p) = self.cz_error_override {
            if !(0.0..=1.0).contains(&p) {
                return Err(domain!("cz_error_override must lie in [0, 1], got {p}"));
            }
        }
        Ok(())
    }

    /// Probability that a CZ is followed by a uniformly drawn two-qubit Pauli.
    pub fn cz_error_probability(&self) -> f64 {
        self.cz_error_override.unwrap_or_else(|| depolarizing_probability(self.cz_fidelity))
    }

    pub fn is_noiseless(&self) -> bool {
        self.cz_error_probability() == 0.0 && self.spam_error == 0.0
    }
}

/// Seed plus substream rule: execution `k` uses `ChaCha8(seed)` on stream
/// `k`. [`RngStreams::next_stream`] hands out `0, 1, 2, …` in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RngStreams {
    seed: u64,
    next: u64,
}

impl RngStreams {
    pub fn new(seed: u64) -> Self {
        Self { seed, next: 0 }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of substreams handed out so far.
    pub fn issued(&self) -> u64 {
        self.next
    }

    pub fn stream(&self, k: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(k);
        rng
    }

    pub fn next_stream(&mut self) -> ChaCha8Rng {
        let rng = self.stream(self.next);
        self.next += 1;
        rng
    }
}

/// Errors drawn for one trajectory: `(CZ ordinal, Pauli pair index 0..16)`.
/// The pair index is `4·op(a) + op(b)` in `I, X, Y, Z` order.
fn draw_cz_errors<R: Rng + ?Sized>(cz_count: usize, p: f64, rng: &mut R) -> Vec<(usize, u8)> {
    let mut errors = Vec::new();
    if p > 0.0 {
        for k in 0..cz_count {
            if rng.random::<f64>() < p {
                errors.push((k, rng.random_range(0..16u8)));
            }
        }
    }
    errors
}

fn run_with_errors(c: &Circuit, input: &StateVector, errors: &[(usize, u8)]) -> Result<StateVector> {
    if c.width() != input.width() {
        return Err(domain!("circuit width {} does not match state width {}", c.width(), input.width()));
    }
    let mut s = input.clone();
    let mut ordinal = 0;
    let mut pending = errors.iter().peekable();
    for g in c.gates() {
        s.apply_gate(g);
        if let Gate::Cz { a, b } = *g {
            while let Some(&&(k, pair)) = pending.peek() {
                if k != ordinal {
                    break;
                }
                s.apply_pauli_op(a, PauliOp::ALL[(pair >> 2) as usize]);
                s.apply_pauli_op(b, PauliOp::ALL[(pair & 3) as usize]);
                pending.next();
            }
            ordinal += 1;
        }
    }
    Ok(s)
}

/// One stochastic sample of the noisy circuit: after each CZ, with
/// probability `p` a Pauli pair drawn uniformly from all 16 (identity
/// included) acts on the CZ's qubits. The average over trajectories is the
/// depolarizing channel `ρ → (1−p)ρ + p·I/4` on the pair. No random numbers
/// are drawn when `p = 0`.
pub fn run_noisy_trajectory<R: Rng + ?Sized>(
    c: &Circuit,
    input: &StateVector,
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<StateVector> {
    noise.validate()?;
    let errors = draw_cz_errors(c.cz_count(), noise.cz_error_probability(), rng);
    run_with_errors(c, input, &errors)
}

/// Bitstring counts from repeated measurement in the computational basis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ShotRecordRepr", into = "ShotRecordRepr")]
pub struct ShotRecord {
    width: usize,
    shots: u64,
    counts: BTreeMap<usize, u64>,
}

impl ShotRecord {
    pub fn new(width: usize) -> Self {
        Self { width, shots: 0, counts: BTreeMap::new() }
    }

    /// Builds a record from `(basis index, count)` pairs.
    pub fn from_counts(width: usize, counts: impl IntoIterator<Item = (usize, u64)>) -> Result<Self> {
        let mut r = Self::new(width);
        for (index, n) in counts {
            if index >= 1 << width {
                return Err(domain!("basis index {index} out of range for width {width}"));
            }
            r.add(index, n);
        }
        Ok(r)
    }

    fn add(&mut self, index: usize, n: u64) {
        if n > 0 {
            *self.counts.entry(index).or_insert(0) += n;
            self.shots += n;
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn count(&self, index: usize) -> u64 {
        self.counts.get(&index).copied().unwrap_or(0)
    }

    /// `(basis index, count)` in ascending index order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.counts.iter().map(|(&i, &n)| (i, n))
    }

    /// `(bitstring, count)` with qubit 0 leftmost.
    pub fn bitstring_counts(&self) -> impl Iterator<Item = (String, u64)> + '_ {
        self.iter().map(|(i, n)| (format_codeword(i as u32, self.width), n))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ShotRecordRepr {
    width: usize,
    shots: u64,
    counts: BTreeMap<String, u64>,
}

impl From<ShotRecord> for ShotRecordRepr {
    fn from(r: ShotRecord) -> Self {
        ShotRecordRepr { width: r.width, shots: r.shots, counts: r.bitstring_counts().collect() }
    }
}

impl TryFrom<ShotRecordRepr> for ShotRecord {
    type Error = Error;
    fn try_from(r: ShotRecordRepr) -> Result<Self> {
        let mut counts = Vec::with_capacity(r.counts.len());
        for (bits, n) in &r.counts {
            if bits.len() != r.width || !bits.chars().all(|c| c == '0' || c == '1') {
                return Err(domain!("bitstring {bits:?} does not match width {}", r.width));
            }
            counts.push((usize::from_str_radix(bits, 2).map_err(|_| domain!("bad bitstring {bits:?}"))?, *n));
        }
        let rec = ShotRecord::from_counts(r.width, counts)?;
        if rec.shots != r.shots {
            return Err(domain!("counts sum to {} but shots is {}", rec.shots, r.shots));
        }
        Ok(rec)
    }
}

fn draw_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = i;
            if u < acc {
                return i;
            }
        }
    }
    last
}

fn apply_readout_flips<R: Rng + ?Sized>(index: usize, width: usize, spam: f64, rng: &mut R) -> usize {
    if spam <= 0.0 {
        return index;
    }
    (0..width).fold(index, |acc, q| if rng.random::<f64>() < spam { acc ^ (1 << (width - 1 - q)) } else { acc })
}

/// Multinomial sampling from `|amplitude|²`, then independent readout flips
/// with probability `noise.spam_error` on every bit.
pub fn sample_bitstrings<R: Rng + ?Sized>(
    state: &StateVector,
    shots: u64,
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<ShotRecord> {
    if shots == 0 {
        return Err(domain!("shots must be at least 1"));
    }
    noise.validate()?;
    let probs = state.probabilities();
    let mut rec = ShotRecord::new(state.width());
    for _ in 0..shots {
        let i = draw_index(&probs, rng);
        rec.add(apply_readout_flips(i, state.width(), noise.spam_error, rng), 1);
    }
    Ok(rec)
}

/// Runs `c` from `|0…0⟩` once per shot with a fresh noise trajectory and
/// records one bitstring per run. Trajectories without errors reuse the
/// ideal output distribution.
pub fn sample_circuit<R: Rng + ?Sized>(
    c: &Circuit,
    shots: u64,
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<ShotRecord> {
    noise.validate()?;
    let zero = StateVector::zero(c.width())?;
    let ideal = run_circuit(c, &zero)?;
    let p = noise.cz_error_probability();
    if p == 0.0 || c.cz_count() == 0 {
        return sample_bitstrings(&ideal, shots, noise, rng);
    }
    if shots == 0 {
        return Err(domain!("shots must be at least 1"));
    }
    let ideal_probs = ideal.probabilities();
    let mut rec = ShotRecord::new(c.width());
    for _ in 0..shots {
        let errors = draw_cz_errors(c.cz_count(), p, rng);
        let i = if errors.is_empty() {
            draw_index(&ideal_probs, rng)
        } else {
            draw_index(&run_with_errors(c, &zero, &errors)?.probabilities(), rng)
        };
        rec.add(apply_readout_flips(i, c.width(), noise.spam_error, rng), 1);
    }
    Ok(rec)
}

/// Mean over shots of `Π (−1)^bit` over the non-identity positions of
/// `string`; the string is assumed to be already rotated to the Z basis.
pub fn pauli_expectation(record: &ShotRecord, string: &PauliString) -> Result<f64> {
    if record.shots() == 0 {
        return Err(domain!("empty shot record"));
    }
    if string.width() != record.width() {
        return Err(domain!("Pauli string width {} does not match record width {}", string.width(), record.width()));
    }
    let mask = string.support_mask();
    let signed: i64 = record
        .iter()
        .map(|(i, n)| if (i & mask).count_ones() % 2 == 0 { n as i64 } else { -(n as i64) })
        .sum();
    Ok(signed as f64 / record.shots() as f64)
}
