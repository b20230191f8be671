//! Variational trial states for both encodings and their preparation
//! circuits.
//!
//! Gray-encoded states follow the hyperspherical form
//! `ψ_k = cos θ_{k+1} Π_{l≤k} sin θ_l` on codeword `g_k`, with the last
//! state taking the full product of sines. Every angle enters with a plus
//! sign; the minus sign some small-`N` forms carry is the relabelling
//! `θ → −θ`.
//!
//! Circuits for real targets on up to three qubits come from the Schmidt
//! decomposition: a single `Ry` prepares the Schmidt coefficients, a CNOT
//! copies them, and local orthogonal maps rotate onto the Schmidt vectors.
//! The two-qubit orthogonal map needed at width 3 goes through the magic
//! basis, where `SO(4)` becomes `SU(2) ⊗ SU(2)`, and costs two CZ gates.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, PI};

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, RotationTarget};
use crate::error::{domain, Error, Result};
use crate::graycode;
use crate::hamiltonian::{
    build_gray_hamiltonian, build_individual_hamiltonian, exact_ground_energy, measurement_groups, pauli_decompose,
    Encoding, MeasurementGroup, PauliHamiltonian,
};
use crate::linalg::{c64, complete_orthonormal, factor_kron, mat2_dagger, mat2_mul, mat4_dagger, mat4_mul};
use crate::linalg::{svd_two_rows, Mat2, Mat4, Matrix};
use crate::pauli::PauliOp;
use crate::simulator::{ry_matrix, StateVector};

/// Particle number, encoding and the rule for how many angles they take.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnsatzSpec {
    pub particles: usize,
    pub encoding: Encoding,
}

impl AnsatzSpec {
    pub fn new(particles: usize, encoding: Encoding) -> Result<Self> {
        let spec = Self { particles, encoding };
        spec.angle_count()?;
        Ok(spec)
    }

    pub fn gray(particles: usize) -> Result<Self> {
        Self::new(particles, Encoding::Gray)
    }

    /// `⌊N/2⌋` for Gray (one for `N = 4`); one for the three-spin individual ansatz.
    pub fn angle_count(&self) -> Result<usize> {
        if self.particles < 2 {
            return Err(domain!("particle count must be at least 2, got {}", self.particles));
        }
        match (self.encoding, self.particles) {
            (Encoding::Gray, 4) => Ok(1),
            (Encoding::Gray, n) => Ok(n / 2),
            (Encoding::Individual, 3) => Ok(1),
            (Encoding::Individual, n) => {
                Err(Error::Unsupported(alloc::format!("individual-spin ansatz is only defined for N = 3, got {n}")))
            }
        }
    }

    pub fn width(&self) -> Result<usize> {
        match self.encoding {
            Encoding::Gray => graycode::qubit_count(self.particles),
            Encoding::Individual => Ok(self.particles),
        }
    }

    fn check_angles(&self, angles: &[f64]) -> Result<()> {
        let expected = self.angle_count()?;
        if angles.len() != expected {
            return Err(domain!("N = {} takes {expected} angles, got {}", self.particles, angles.len()));
        }
        if angles.iter().any(|a| !a.is_finite()) {
            return Err(domain!("non-finite angle"));
        }
        Ok(())
    }

    pub fn state(&self, angles: &[f64]) -> Result<StateVector> {
        self.check_angles(angles)?;
        match self.encoding {
            Encoding::Gray => gray_ansatz(self.particles, angles),
            Encoding::Individual => individual_ansatz_n3(angles[0]),
        }
    }

    /// Preparation circuit from `|0…0⟩`.
    pub fn circuit(&self, angles: &[f64]) -> Result<Circuit> {
        self.check_angles(angles)?;
        match self.encoding {
            Encoding::Gray => synthesize_circuit(&gray_ansatz(self.particles, angles)?),
            Encoding::Individual => individual_n3_circuit(angles[0]),
        }
    }

    pub fn hamiltonian(&self, coupling: f64) -> Result<PauliHamiltonian> {
        match self.encoding {
            Encoding::Gray => pauli_decompose(&build_gray_hamiltonian(self.particles, coupling)?.dense),
            Encoding::Individual => build_individual_hamiltonian(self.particles, coupling),
        }
    }

    pub fn measurement_groups(&self, coupling: f64) -> Result<Vec<MeasurementGroup>> {
        measurement_groups(&self.hamiltonian(coupling)?, self.encoding)
    }

    pub fn exact_energy(&self, coupling: f64) -> Result<f64> {
        exact_ground_energy(self.particles, coupling)
    }
}

/// Amplitudes on `g_0 … g_{d−1}` in Gray order.
pub fn gray_amplitudes(particles: usize, angles: &[f64]) -> Result<Vec<f64>> {
    AnsatzSpec::gray(particles)?.check_angles(angles)?;
    if particles == 4 {
        let (s, c) = angles[0].sin_cos();
        return Ok(alloc::vec![c * c, -(2.0 * angles[0]).sin() * FRAC_1_SQRT_2, s * s]);
    }
    let mut amps = Vec::with_capacity(angles.len() + 1);
    let mut tail = 1.0;
    for &t in angles {
        let (s, c) = t.sin_cos();
        amps.push(tail * c);
        tail *= s;
    }
    amps.push(tail);
    Ok(amps)
}

/// Gray-encoded trial state; padded basis states stay empty.
pub fn gray_ansatz(particles: usize, angles: &[f64]) -> Result<StateVector> {
    let amps = gray_amplitudes(particles, angles)?;
    let width = graycode::qubit_count(particles)?;
    let mut full = alloc::vec![0.0; 1 << width];
    for (label, a) in graycode::jm_labels(particles)?.iter().zip(amps) {
        full[label.codeword as usize] = a;
    }
    StateVector::from_real(width, &full)
}

/// Angles whose Gray ansatz reproduces `amps` (Gray order, unit norm) up to
/// a global sign. For `N = 4` only the one-angle family is reachable; the
/// returned angle matches the magnitudes of the first and last amplitudes.
pub fn gray_angles_from_amplitudes(particles: usize, amps: &[f64]) -> Result<Vec<f64>> {
    let d = particles / 2 + 1;
    if amps.len() != d {
        return Err(domain!("N = {particles} has {d} Gray amplitudes, got {}", amps.len()));
    }
    if particles == 4 {
        let t = amps[2].abs().sqrt().atan2(amps[0].abs().sqrt());
        return Ok(alloc::vec![if amps[0] * amps[1] > 0.0 { -t } else { t }]);
    }
    let mut angles = Vec::with_capacity(d - 1);
    for k in 0..d - 1 {
        if k == d - 2 {
            angles.push(amps[k + 1].atan2(amps[k]));
        } else {
            let rest = amps[k + 1..].iter().map(|x| x * x).sum::<f64>().sqrt();
            angles.push(rest.atan2(amps[k]));
        }
    }
    Ok(angles)
}

/// `cos θ|111⟩ − (sin θ/√3)(|001⟩ + |010⟩ + |100⟩)`.
pub fn individual_ansatz_n3(theta: f64) -> Result<StateVector> {
    let (s, c) = theta.sin_cos();
    let w = -s / 3.0.sqrt();
    StateVector::from_real(3, &[0.0, w, w, 0.0, w, 0.0, 0.0, c])
}

/// `α = 2 arccos(−√(2/3) sin θ)` and `β = −π/4 − arctan(tan θ/√3)`.
pub fn individual_n3_angles(theta: f64) -> (f64, f64) {
    let alpha = 2.0 * (-(2.0f64 / 3.0).sqrt() * theta.sin()).acos();
    let beta = -PI / 4.0 - (theta.tan() / 3.0.sqrt()).atan();
    (alpha, beta)
}

/// The three-CZ circuit for [`individual_ansatz_n3`].
///
/// The closed-form angles are exact for `|θ| < π/2`. Since the target at
/// `θ + π` is the negated target at `θ`, θ is first wrapped into
/// `[−π/2, π/2)`; outside that window the circuit prepares the target up to
/// a global sign.
pub fn individual_n3_circuit(theta: f64) -> Result<Circuit> {
    let wrapped = num_traits::Euclid::rem_euclid(&(theta + PI / 2.0), &PI) - PI / 2.0;
    let (alpha, beta) = individual_n3_angles(wrapped);
    let mut c = Circuit::new(3);
    c.ry(0, alpha)?.ry(1, -beta)?.ry(2, PI / 2.0)?;
    c.cz(0, 1)?.ry(1, PI / 2.0 + beta)?;
    c.cz(1, 2)?.ry(1, -PI / 2.0)?.ry(2, PI / 2.0)?;
    c.cz(0, 1)?.ry(1, PI / 2.0)?;
    Ok(c)
}

/// Measurement-basis change for `group`: `Ry(−π/2)` where the basis is `X`,
/// `Rx(π/2)` (as `Rφ(0, π/2)`) where it is `Y`, nothing where it is `Z`.
pub fn basis_rotation_suffix(group: &MeasurementGroup) -> Result<Circuit> {
    let mut c = Circuit::new(group.basis.width());
    for (q, &op) in group.basis.ops().iter().enumerate() {
        match op {
            PauliOp::X => {
                c.ry(q, -PI / 2.0)?;
            }
            PauliOp::Y => {
                c.rphi(RotationTarget::Qubit(q), 0.0, PI / 2.0)?;
            }
            PauliOp::Z | PauliOp::I => {}
        }
    }
    Ok(c)
}

/// `Ry` angle of a 2×2 rotation `[[c, −s], [s, c]]`.
fn rotation_angle(m: &Matrix) -> f64 {
    2.0 * m[(1, 0)].atan2(m[(0, 0)])
}

/// Splits a real orthogonal 2×2 matrix into `Ry(φ)` and whether a trailing
/// `Z` (applied first) is needed, i.e. `m = Ry(φ)·Z^flip`.
fn orthogonal_2x2(m: &Matrix) -> (f64, bool) {
    if m.determinant() < 0.0 {
        // m·Z has unit determinant
        let mut mz = m.clone();
        mz[(0, 1)] = -mz[(0, 1)];
        mz[(1, 1)] = -mz[(1, 1)];
        (rotation_angle(&mz), true)
    } else {
        (rotation_angle(m), false)
    }
}

/// `[Rz(c), Ry(b), Rz(a)]` in time order with `u = e^{iγ} Rz(a) Ry(b) Rz(c)`.
fn zyz_angles(u: &Mat2) -> [f64; 3] {
    let det = u[0][0] * u[1][1] - u[0][1] * u[1][0];
    let phase = det.sqrt();
    let alpha = u[0][0] / phase;
    let beta = u[1][0] / phase;
    let b = 2.0 * beta.norm().atan2(alpha.norm());
    let arg_a = if alpha.norm() > 1e-14 { alpha.arg() } else { 0.0 };
    let arg_b = if beta.norm() > 1e-14 { beta.arg() } else { 0.0 };
    [-arg_a - arg_b, b, arg_b - arg_a]
}

pub(crate) fn push_unitary(c: &mut Circuit, qubit: usize, u: &Mat2) -> Result<()> {
    let [first, mid, last] = zyz_angles(u);
    c.rz(qubit, first)?.ry(qubit, mid)?.rz(qubit, last)?;
    Ok(())
}

fn magic_basis() -> Mat4 {
    let (h, z) = (FRAC_1_SQRT_2, 0.0);
    [
        [c64(h, z), c64(z, h), c64(z, z), c64(z, z)],
        [c64(z, z), c64(z, z), c64(z, h), c64(h, z)],
        [c64(z, z), c64(z, z), c64(z, h), c64(-h, z)],
        [c64(h, z), c64(z, -h), c64(z, z), c64(z, z)],
    ]
}

/// CNOT with control on the less significant qubit.
fn cnot_low_to_high() -> Mat4 {
    let mut m = [[c64(0.0, 0.0); 4]; 4];
    for (i, j) in [(0, 0), (1, 3), (2, 2), (3, 1)] {
        m[i][j] = c64(1.0, 0.0);
    }
    m
}

/// Appends a two-CZ circuit on `(hi, lo)` implementing the real special
/// orthogonal `w` (`hi` is the more significant qubit of the 4×4 matrix).
///
/// With the magic basis `Mg = CNOT_{lo→hi}·(P ⊗ Q)`, `Mg w Mg† = A ⊗ B`, so
/// `w = (P† ⊗ Q†)·CNOT·(A ⊗ B)·CNOT·(P ⊗ Q)`.
pub fn append_so4(c: &mut Circuit, hi: usize, lo: usize, w: &Matrix) -> Result<()> {
    if w.rows() != 4 || w.cols() != 4 || (w.determinant() - 1.0).abs() > 1e-9 {
        return Err(domain!("expected a 4x4 special orthogonal matrix"));
    }
    let mut wc = [[c64(0.0, 0.0); 4]; 4];
    for (i, row) in wc.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = c64(w[(i, j)], 0.0);
        }
    }
    let mg = magic_basis();
    let (p, q) = factor_kron(&mat4_mul(&cnot_low_to_high(), &mg), 1e-12)?;
    let (a, b) = factor_kron(&mat4_mul(&mg, &mat4_mul(&wc, &mat4_dagger(&mg))), 1e-9)?;
    // CNOT = Ry_hi(π/2)·CZ·Ry_hi(−π/2); the outer Ry's fold into the local layers
    let up = ry_matrix(PI / 2.0);
    let down = mat2_dagger(&up);
    let first_hi = mat2_mul(&down, &p);
    let mid_hi = mat2_mul(&down, &mat2_mul(&a, &up));
    let last_hi = mat2_mul(&mat2_dagger(&p), &up);
    push_unitary(c, hi, &first_hi)?;
    push_unitary(c, lo, &q)?;
    c.cz(lo, hi)?;
    push_unitary(c, hi, &mid_hi)?;
    push_unitary(c, lo, &b)?;
    c.cz(lo, hi)?;
    push_unitary(c, hi, &last_hi)?;
    push_unitary(c, lo, &mat2_dagger(&q))?;
    Ok(())
}

/// Circuit preparing the real state `target` from `|0…0⟩`, exact up to a
/// global phase. Widths 1, 2 and 3 use 0, 1 and 3 CZ gates.
pub fn synthesize_circuit(target: &StateVector) -> Result<Circuit> {
    let amps = target.real_amplitudes(1e-12).ok_or_else(|| domain!("synthesis needs a real target state"))?;
    match target.width() {
        1 => {
            let mut c = Circuit::new(1);
            c.ry(0, 2.0 * amps[1].atan2(amps[0]))?;
            Ok(c)
        }
        2 => synthesize_two(&amps),
        3 => synthesize_three(&amps),
        w => Err(Error::Unsupported(alloc::format!("state synthesis for width {w} (only 1 to 3)"))),
    }
}

/// `ψ = σ₀|u₀⟩|v₀⟩ + σ₁|u₁⟩|v₁⟩` with qubit 0 as the first factor.
fn synthesize_two(amps: &[f64]) -> Result<Circuit> {
    let m = Matrix::from_rows(2, 2, amps.to_vec())?;
    let svd = svd_two_rows(&m)?;
    let (phi_u, flip_u) = orthogonal_2x2(&svd.u);
    let v = Matrix::from_rows(2, 2, alloc::vec![svd.v[0][0], svd.v[1][0], svd.v[0][1], svd.v[1][1]])?;
    let (phi_v, flip_v) = orthogonal_2x2(&v);
    // a Z on either side of σ₀|00⟩ + σ₁|11⟩ negates σ₁
    let mut prep = 2.0 * svd.sigma[1].atan2(svd.sigma[0]);
    if flip_u != flip_v {
        prep = -prep;
    }
    let mut c = Circuit::new(2);
    c.ry(0, prep)?.ry(1, -PI / 2.0)?.cz(0, 1)?;
    c.ry(0, phi_u)?.ry(1, PI / 2.0 + phi_v)?;
    Ok(c)
}

/// Qubit 2 against the pair (0, 1): `ψ[2b + a] = Σ σ_k u_k[a] v_k[b]`.
fn synthesize_three(amps: &[f64]) -> Result<Circuit> {
    let mut rows = alloc::vec![0.0; 8];
    for b in 0..4 {
        for a in 0..2 {
            rows[4 * a + b] = amps[2 * b + a];
        }
    }
    let svd = svd_two_rows(&Matrix::from_rows(2, 4, rows)?)?;
    let cols = complete_orthonormal(&[svd.v[0].clone(), svd.v[1].clone()], 4);
    let mut w = Matrix::zeros(4, 4);
    for (j, col) in cols.iter().enumerate() {
        for i in 0..4 {
            w[(i, j)] = col[i];
        }
    }
    if w.determinant() < 0.0 {
        // columns 2 and 3 are never populated, so swapping them is free
        for i in 0..4 {
            let t = w[(i, 2)];
            w[(i, 2)] = w[(i, 3)];
            w[(i, 3)] = t;
        }
    }
    let (phi_u, flip_u) = orthogonal_2x2(&svd.u);
    let mut prep = 2.0 * svd.sigma[1].atan2(svd.sigma[0]);
    if flip_u {
        prep = -prep;
    }
    let mut c = Circuit::new(3);
    c.ry(2, prep)?;
    c.cnot(2, 1)?;
    c.ry(2, phi_u)?;
    append_so4(&mut c, 0, 1, &w)?;
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::symmetric_eigen;
    use crate::pauli::PauliString;
    use crate::simulator::{prepare, run_circuit};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.into_iter().map(|x| x / norm).collect()
    }

    fn energy(state: &StateVector, h: &PauliHamiltonian) -> f64 {
        state.expectation(h).unwrap()
    }

    #[test]
    fn angle_counts() {
        assert_eq!(AnsatzSpec::gray(3).unwrap().angle_count().unwrap(), 1);
        assert_eq!(AnsatzSpec::gray(4).unwrap().angle_count().unwrap(), 1);
        assert_eq!(AnsatzSpec::gray(9).unwrap().angle_count().unwrap(), 4);
        assert_eq!(AnsatzSpec::gray(15).unwrap().angle_count().unwrap(), 7);
        assert!(matches!(AnsatzSpec::new(5, Encoding::Individual), Err(Error::Unsupported(_))));
        assert!(gray_ansatz(5, &[0.1]).is_err());
    }

    #[test]
    fn three_particle_gray_energy_curve() {
        let h = AnsatzSpec::gray(3).unwrap().hamiltonian(1.0).unwrap();
        for i in 0..100 {
            let t = -PI + 2.0 * PI * i as f64 / 99.0;
            let e = energy(&gray_ansatz(3, &[t]).unwrap(), &h);
            let closed = -0.5 - (2.0 * t).cos() - 3.0.sqrt() * (2.0 * t).sin();
            assert!((e - closed).abs() < 1e-12);
        }
        let e = energy(&gray_ansatz(3, &[PI / 6.0]).unwrap(), &h);
        assert!((e + 2.5).abs() < 1e-12);
    }

    #[test]
    fn gray_trivial_points() {
        let s = gray_ansatz(5, &[0.0, 1.234]).unwrap();
        assert!((s.amplitude(0).re - 1.0).abs() < 1e-15);
        let h = AnsatzSpec::gray(5).unwrap().hamiltonian(1.0).unwrap();
        assert!((energy(&s, &h) + 2.5).abs() < 1e-12);
        let mut angles = alloc::vec![PI / 2.0; 7];
        angles[6] = PI / 2.0;
        let s = gray_ansatz(15, &angles).unwrap();
        assert!((s.amplitude(0b100).re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn four_particle_special_case_reaches_ground_state() {
        let h = AnsatzSpec::gray(4).unwrap().hamiltonian(1.0).unwrap();
        let best = (0..20_001)
            .map(|i| energy(&gray_ansatz(4, &[PI * i as f64 / 20_000.0]).unwrap(), &h))
            .fold(f64::INFINITY, f64::min);
        assert!((best - exact_ground_energy(4, 1.0).unwrap()).abs() < 1e-6);
    }

    #[test]
    fn angles_invert_the_parametrisation() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in [2usize, 3, 5, 7, 9, 15] {
            for _ in 0..50 {
                let amps = random_unit(&mut rng, n / 2 + 1);
                let back = gray_amplitudes(n, &gray_angles_from_amplitudes(n, &amps).unwrap()).unwrap();
                let overlap: f64 = back.iter().zip(&amps).map(|(a, b)| a * b).sum();
                assert!((overlap.abs() - 1.0).abs() < 1e-12, "N={n}");
            }
        }
        let amps = gray_amplitudes(4, &[0.4]).unwrap();
        let t = gray_angles_from_amplitudes(4, &amps).unwrap();
        assert!((t[0] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn ground_state_angles_reach_exact_energy() {
        for n in [3usize, 5, 7, 9, 15] {
            let h = build_gray_hamiltonian(n, 1.0).unwrap();
            let eig = symmetric_eigen(&h.block()).unwrap();
            let angles = gray_angles_from_amplitudes(n, &eig.vector(0)).unwrap();
            let ph = AnsatzSpec::gray(n).unwrap().hamiltonian(1.0).unwrap();
            let e = energy(&gray_ansatz(n, &angles).unwrap(), &ph);
            assert!((e - eig.values[0]).abs() < 1e-10, "N={n}");
        }
    }

    #[test]
    fn individual_three_spin_state() {
        let s = individual_ansatz_n3(0.0).unwrap();
        assert_eq!(s.amplitude(7).re, 1.0);
        // ground state at tan θ/√3 = V/(1 + √(1+3V²))
        let h = build_individual_hamiltonian(3, 1.0).unwrap();
        let theta = (3.0.sqrt() / 3.0).atan();
        assert!((energy(&individual_ansatz_n3(theta).unwrap(), &h) + 2.5).abs() < 1e-12);
        // the cotangent form √3 cot θ = V/(1 + √(1+3V²)) lands at −3/14 instead
        let cot_form = (3.0 * 3.0.sqrt()).atan();
        assert!((energy(&individual_ansatz_n3(cot_form).unwrap(), &h) + 3.0 / 14.0).abs() < 1e-12);
        // θ = π/2: direct dense matrix element
        let psi = individual_ansatz_n3(PI / 2.0).unwrap();
        let dense = h.to_dense().unwrap();
        let v: Vec<f64> = psi.amplitudes().iter().map(|a| a.re).collect();
        let hv = dense.matrix().matvec(&v);
        let direct: f64 = v.iter().zip(&hv).map(|(a, b)| a * b).sum();
        assert!((energy(&psi, &h) - direct).abs() < 1e-12);
    }

    #[test]
    fn individual_circuit_prepares_target_for_all_theta() {
        for i in 0..200 {
            let t = -2.0 * PI + 4.0 * PI * i as f64 / 199.0;
            let c = individual_n3_circuit(t).unwrap();
            assert_eq!(c.cz_count(), 3);
            let f = prepare(&c).unwrap().fidelity(&individual_ansatz_n3(t).unwrap());
            assert!((f - 1.0).abs() < 1e-12, "θ={t}: {f}");
        }
    }

    #[test]
    fn basis_suffixes() {
        let group = |b: &str| MeasurementGroup { basis: b.parse().unwrap(), members: Vec::new() };
        assert!(basis_rotation_suffix(&group("ZZZ")).unwrap().is_empty());
        let xxx = basis_rotation_suffix(&group("XXX")).unwrap();
        assert_eq!(xxx.len(), 3);
        let zxz = basis_rotation_suffix(&group("ZXZ")).unwrap();
        assert_eq!(zxz.gates(), &[crate::circuit::Gate::Ry { qubit: 1, angle: -PI / 2.0 }]);
        // rotated Z-parity equals the direct matrix element
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for basis in ["ZXZ", "XXX", "YYY", "XZY"] {
            let psi = StateVector::from_real(3, &random_unit(&mut rng, 8)).unwrap();
            let string: PauliString = basis.parse().unwrap();
            let rotated = run_circuit(&basis_rotation_suffix(&group(basis)).unwrap(), &psi).unwrap();
            let direct = psi.pauli_expectation(&string).unwrap();
            let via_z = rotated.pauli_expectation(&"ZZZ".parse().unwrap()).unwrap();
            assert!((direct - via_z).abs() < 1e-12, "{basis}");
        }
    }

    #[test]
    fn synthesis_round_trip_all_widths() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for width in 1..=3usize {
            for _ in 0..200 {
                let target = StateVector::from_real(width, &random_unit(&mut rng, 1 << width)).unwrap();
                let c = synthesize_circuit(&target).unwrap();
                assert!(c.cz_count() <= [0, 1, 3][width - 1]);
                let f = prepare(&c).unwrap().fidelity(&target);
                assert!(f >= 1.0 - 1e-12, "width {width}: {f}");
            }
        }
    }

    #[test]
    fn synthesis_of_degenerate_targets() {
        // product states, basis states and equal Schmidt coefficients
        let h = FRAC_1_SQRT_2;
        let cases: [&[f64]; 6] = [
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
            &[h, 0.0, 0.0, h],
            &[0.5, 0.5, 0.5, 0.5],
            &[0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
            &[0.5, 0.0, 0.0, 0.5, 0.0, 0.5, -0.5, 0.0],
        ];
        for amps in cases {
            let width = amps.len().trailing_zeros() as usize;
            let target = StateVector::from_real(width, amps).unwrap();
            let f = prepare(&synthesize_circuit(&target).unwrap()).unwrap().fidelity(&target);
            assert!(f >= 1.0 - 1e-12, "{amps:?}: {f}");
        }
    }

    #[test]
    fn synthesis_rejects_bad_targets() {
        let complex = StateVector::from_amplitudes(1, alloc::vec![c64(0.0, 1.0), c64(0.0, 0.0)]).unwrap();
        assert!(matches!(synthesize_circuit(&complex), Err(Error::Domain(_))));
        let wide = StateVector::zero(4).unwrap();
        assert!(matches!(synthesize_circuit(&wide), Err(Error::Unsupported(_))));
    }

    #[test]
    fn special_orthogonal_two_qubit_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..100 {
            let cols = complete_orthonormal(&[random_unit(&mut rng, 4), random_unit(&mut rng, 4)][..1], 4);
            let mut w = Matrix::zeros(4, 4);
            for (j, col) in cols.iter().enumerate() {
                for i in 0..4 {
                    w[(i, j)] = col[i];
                }
            }
            if w.determinant() < 0.0 {
                for i in 0..4 {
                    w[(i, 3)] = -w[(i, 3)];
                }
            }
            let mut c = Circuit::new(2);
            append_so4(&mut c, 0, 1, &w).unwrap();
            assert_eq!(c.cz_count(), 2);
            // one common phase across all columns
            let mut phase = None;
            for j in 0..4 {
                let mut basis = alloc::vec![0.0; 4];
                basis[j] = 1.0;
                let out = run_circuit(&c, &StateVector::from_real(2, &basis).unwrap()).unwrap();
                let expected = StateVector::from_real(2, &w.column(j)).unwrap();
                let overlap = expected.inner(&out);
                assert!((overlap.norm() - 1.0).abs() < 1e-12);
                let p = *phase.get_or_insert(overlap);
                assert!((overlap - p).norm() < 1e-12);
            }
        }
    }
}
