//! Hardware calculators used to calibrate the noise model: beam profiles and
//! Stark-shift dephasing, atom transport trajectories and motional heating,
//! and randomized-benchmarking decay fits.
//!
//! Units are μm, μs and rad/μs throughout.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::ansatz::push_unitary;
use crate::circuit::Circuit;
use crate::error::{domain, Error, Result};
use crate::linalg::{c64, inverse, mat2_mul, weighted_least_squares, Mat2, Matrix};
use crate::simulator::{run_noisy_trajectory, sample_bitstrings, NoiseModel, StateVector};

const HBAR: f64 = 1.054_571_817e-34;
const ATOMIC_MASS: f64 = 1.660_539_066_60e-27;
/// Mass of ¹³³Cs in atomic mass units.
pub const CESIUM_MASS_AMU: f64 = 132.905_451_96;

/// `I(x, y) = I0·exp(−2 r^p / w^p)` with `r` the distance from the centre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamProfile {
    pub peak_intensity: f64,
    pub center: (f64, f64),
    pub waist: f64,
    /// Flatness exponent; 2 is a Gaussian.
    pub flatness: f64,
}

impl BeamProfile {
    pub fn new(peak_intensity: f64, center: (f64, f64), waist: f64, flatness: f64) -> Result<Self> {
        if !(waist > 0.0) || !(flatness >= 1.0) || !peak_intensity.is_finite() {
            return Err(domain!("beam needs waist > 0 and p ≥ 1, got w={waist}, p={flatness}"));
        }
        Ok(Self { peak_intensity, center, waist, flatness })
    }

    pub fn gaussian(peak_intensity: f64, waist: f64) -> Result<Self> {
        Self::new(peak_intensity, (0.0, 0.0), waist, 2.0)
    }

    pub fn radial_intensity(&self, r: f64) -> f64 {
        self.peak_intensity * (-2.0 * (r.abs() / self.waist).powf(self.flatness)).exp()
    }

    pub fn intensity(&self, x: f64, y: f64) -> f64 {
        self.radial_intensity((x - self.center.0).hypot(y - self.center.1))
    }

    /// `dI/dr = −2p r^{p−1} / w^p · I(r)` for `r ≥ 0`.
    pub fn radial_derivative(&self, r: f64) -> f64 {
        let p = self.flatness;
        -2.0 * p * r.powf(p - 1.0) / self.waist.powf(p) * self.radial_intensity(r)
    }
}

/// Optical tweezer holding the atom, in the harmonic approximation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapSpec {
    pub waist: f64,
    /// Trap depth in μK.
    pub depth: f64,
    /// Atom temperature in μK.
    pub temperature: f64,
}

impl TrapSpec {
    /// Thermal position spread per transverse axis, `σ = (w/2)·√(T/U)`.
    pub fn position_spread(&self) -> f64 {
        0.5 * self.waist * (self.temperature / self.depth).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RamseyResult {
    /// Mean Stark shift, rad/μs.
    pub mean_shift: f64,
    /// Time at which the fringe contrast first falls to 1/e, μs.
    pub decay_time: f64,
    /// `f·τ` with `f = mean_shift/2π`.
    pub fringes: f64,
}

/// Monte-Carlo Ramsey experiment under a Stark-shifting beam.
///
/// Atom positions are thermal Gaussian draws around `atom` (μm, beam-plane
/// coordinates); each atom sees `peak_shift·I/I0`. The contrast is
/// `|⟨exp(iδt)⟩|` over the sampled atoms. `f·τ` does not depend on `peak_shift`.
pub fn ramsey_dephasing<R: Rng + ?Sized>(
    beam: &BeamProfile,
    trap: &TrapSpec,
    atom: (f64, f64),
    peak_shift: f64,
    samples: usize,
    rng: &mut R,
) -> Result<RamseyResult> {
    if samples < 2 || !(peak_shift > 0.0) || !(trap.depth > 0.0) || !(trap.temperature >= 0.0) {
        return Err(domain!("Ramsey simulation needs ≥ 2 samples, positive shift and trap depth"));
    }
    let sigma = trap.position_spread();
    let shifts: Vec<f64> = (0..samples)
        .map(|_| {
            let dx: f64 = StandardNormal.sample(rng);
            let dy: f64 = StandardNormal.sample(rng);
            peak_shift * beam.intensity(atom.0 + sigma * dx, atom.1 + sigma * dy) / beam.peak_intensity
        })
        .collect();
    let n = samples as f64;
    let mean = shifts.iter().sum::<f64>() / n;
    let spread = (shifts.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n).sqrt();
    if spread == 0.0 {
        return Err(domain!("no dephasing: every atom sees the same shift"));
    }
    let contrast = |t: f64| {
        let (c, s) = shifts.iter().fold((0.0, 0.0), |(c, s), d| (c + ((d - mean) * t).cos(), s + ((d - mean) * t).sin()));
        (c / n).hypot(s / n)
    };
    let target = (-1.0f64).exp();
    let step = 0.05 / spread;
    let mut hi = step;
    while contrast(hi) > target {
        hi += step;
        if hi > 1e4 / spread {
            return Err(Error::Fit("contrast never reached 1/e".into()));
        }
    }
    let mut lo = hi - step;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if contrast(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let decay_time = 0.5 * (lo + hi);
    Ok(RamseyResult { mean_shift: mean, decay_time, fringes: mean / (2.0 * PI) * decay_time })
}

/// Harmonic-oscillator length `√(ħ / 2mω)` in μm for mass in u and ω in rad/μs.
pub fn oscillator_length(mass_amu: f64, omega: f64) -> f64 {
    (HBAR / (2.0 * mass_amu * ATOMIC_MASS * omega * 1e6)).sqrt() * 1e6
}

/// A transport move of `distance` μm in `duration` μs inside a trap of
/// angular frequency `omega` (rad/μs) and oscillator length `x_ho` (μm).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransportSpec {
    pub distance: f64,
    pub duration: f64,
    pub omega: f64,
    pub x_ho: f64,
}

impl TransportSpec {
    pub fn new(distance: f64, duration: f64, omega: f64, x_ho: f64) -> Result<Self> {
        if [distance, duration, omega, x_ho].iter().all(|v| *v > 0.0 && v.is_finite()) {
            Ok(Self { distance, duration, omega, x_ho })
        } else {
            Err(domain!("transport parameters must be positive: d={distance}, t={duration}, ω={omega}, x_ho={x_ho}"))
        }
    }

    /// 13.5 μm in 300 μs in a 2π×51 kHz Cs trap.
    pub fn reference() -> Self {
        let omega = 2.0 * PI * 0.051;
        Self { distance: 13.5, duration: 300.0, omega, x_ho: oscillator_length(CESIUM_MASS_AMU, omega) }
    }
}

/// `x(t) = d(6s⁵ − 15s⁴ + 10s³)`, `s = t/t_d`, with velocity and acceleration.
pub fn quintic_trajectory(spec: &TransportSpec, t: f64) -> Result<(f64, f64, f64)> {
    if !(0.0..=spec.duration).contains(&t) {
        return Err(domain!("t = {t} outside [0, {}]", spec.duration));
    }
    let (d, td) = (spec.distance, spec.duration);
    let s = t / td;
    let x = d * s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
    let v = d / td * 30.0 * s * s * (1.0 - s) * (1.0 - s);
    let a = d / (td * td) * 60.0 * s * (1.0 - s) * (1.0 - 2.0 * s);
    Ok((x, v, a))
}

/// Peak acceleration of the quintic profile, `10d/(√3·t_d²)`, reached at
/// `s = 1/2 ∓ √3/6`.
pub fn max_acceleration(spec: &TransportSpec) -> f64 {
    10.0 * spec.distance / (3.0.sqrt() * spec.duration * spec.duration)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatingEstimates {
    /// Mean phonon gain of the constant-jerk profile.
    pub constant_jerk: f64,
    /// Mean phonon gain of the minimal-jerk profile.
    pub minimal_jerk: f64,
}

/// `δn_cj = 18 d²/(t⁴ x_ho² ω⁴)` and `δn_mj = 1800 d²/(t⁶ x_ho² ω⁶)`, the
/// inverses of [`constant_jerk_duration`] and [`minimal_jerk_duration`].
pub fn heating_estimates(spec: &TransportSpec) -> HeatingEstimates {
    let wt = spec.omega * spec.duration;
    let base = (spec.distance / spec.x_ho).powi(2);
    HeatingEstimates { constant_jerk: 18.0 * base / wt.powi(4), minimal_jerk: 1800.0 * base / wt.powi(6) }
}

/// `t_cj = 2^{1/4}·3^{1/2}·d^{1/2} / (δn^{1/4}·x_ho^{1/2}·ω)`.
pub fn constant_jerk_duration(distance: f64, x_ho: f64, omega: f64, dn: f64) -> Result<f64> {
    if !(dn > 0.0) {
        return Err(domain!("δn must be positive, got {dn}"));
    }
    Ok(2.0.powf(0.25) * 3.0.sqrt() * distance.sqrt() / (dn.powf(0.25) * x_ho.sqrt() * omega))
}

/// `t_mj = 2^{1/2}·15^{1/3}·d^{1/3} / (δn^{1/6}·x_ho^{1/3}·ω)`.
pub fn minimal_jerk_duration(distance: f64, x_ho: f64, omega: f64, dn: f64) -> Result<f64> {
    if !(dn > 0.0) {
        return Err(domain!("δn must be positive, got {dn}"));
    }
    Ok(2.0.sqrt() * 15.0.cbrt() * distance.cbrt() / (dn.powf(1.0 / 6.0) * x_ho.cbrt() * omega))
}

/// `P(m) = a0·p^m + b0` on a `dim`-dimensional system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RbDecay {
    pub a0: f64,
    pub b0: f64,
    pub p: f64,
    pub dim: usize,
}

impl RbDecay {
    pub fn population(&self, m: f64) -> f64 {
        self.a0 * self.p.powf(m) + self.b0
    }

    pub fn error_per_clifford(&self) -> f64 {
        error_per_clifford(self.p, self.dim)
    }
}

/// `r_c = (d − 1)(1 − p)/d`.
pub fn error_per_clifford(p: f64, dim: usize) -> f64 {
    let d = dim as f64;
    (d - 1.0) * (1.0 - p) / d
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RbFit {
    pub decay: RbDecay,
    /// Standard error of `p` from the residual scatter.
    pub p_std_error: f64,
    pub error_per_clifford: f64,
    /// `1 − r_c`.
    pub fidelity: f64,
    pub residual_sum_squares: f64,
}

/// Best `(a0, b0)` and residual for a fixed `p`. Falls back to a constant
/// when `p^m` cannot be told apart from 1.
fn profile(lengths: &[f64], pops: &[f64], p: f64) -> (f64, f64, f64) {
    let mut design = Matrix::zeros(lengths.len(), 2);
    for (i, &m) in lengths.iter().enumerate() {
        design[(i, 0)] = p.powf(m);
        design[(i, 1)] = 1.0;
    }
    let spread = lengths.iter().map(|&m| p.powf(m)).fold(f64::NEG_INFINITY, f64::max)
        - lengths.iter().map(|&m| p.powf(m)).fold(f64::INFINITY, f64::min);
    let (a, b) = match weighted_least_squares(&design, pops, &alloc::vec![1.0; pops.len()]) {
        Some((c, _)) if spread > 1e-9 => (c[0], c[1]),
        _ => (0.0, pops.iter().sum::<f64>() / pops.len() as f64),
    };
    let rss = lengths.iter().zip(pops).map(|(&m, &y)| (y - a * p.powf(m) - b).powi(2)).sum();
    (a, b, rss)
}

/// Least squares fit of `a0·p^m + b0` with `p ∈ [0, 1]`.
///
/// For fixed `p` the offsets are linear, so only `p` is searched: a coarse
/// grid, then golden-section refinement. The standard error of `p` comes
/// from the Jacobian at the optimum and the residual variance.
pub fn rb_fit(lengths: &[f64], populations: &[f64], dim: usize) -> Result<RbFit> {
    if lengths.len() != populations.len() {
        return Err(domain!("{} lengths for {} populations", lengths.len(), populations.len()));
    }
    let mut distinct: Vec<f64> = lengths.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(domain!("RB fit needs at least 3 distinct lengths, got {}", distinct.len()));
    }
    if dim < 2 || lengths.iter().chain(populations).any(|v| !v.is_finite()) || lengths.iter().any(|&m| m < 0.0) {
        return Err(domain!("RB data must be finite with non-negative lengths and dim ≥ 2"));
    }
    let rss = |p: f64| profile(lengths, populations, p).2;
    let grid = 2000;
    let (mut best, mut best_rss) = (1.0, rss(1.0));
    for k in 0..grid {
        let p = k as f64 / grid as f64;
        let r = rss(p);
        if r < best_rss {
            best = p;
            best_rss = r;
        }
    }
    let h = 1.0 / grid as f64;
    let (mut lo, mut hi) = ((best - h).max(0.0), (best + h).min(1.0));
    let g = (5.0.sqrt() - 1.0) / 2.0;
    for _ in 0..100 {
        let (x1, x2) = (hi - g * (hi - lo), lo + g * (hi - lo));
        if rss(x1) < rss(x2) {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    let mut p = 0.5 * (lo + hi);
    if rss(1.0) <= rss(p) {
        p = 1.0;
    }
    let (a0, b0, rss_p) = profile(lengths, populations, p);
    if p < 1e-6 {
        return Err(Error::Fit(alloc::format!(
            "decay parameter ran to 0 (a0={a0}, b0={b0}, rss={rss_p}); data show no exponential decay"
        )));
    }
    let n = lengths.len();
    let p_std_error = if a0 == 0.0 || n <= 3 {
        0.0
    } else {
        let mut jtj = Matrix::zeros(3, 3);
        for &m in lengths {
            let row = [p.powf(m), 1.0, if m == 0.0 { 0.0 } else { a0 * m * p.powf(m - 1.0) }];
            for i in 0..3 {
                for j in 0..3 {
                    jtj[(i, j)] += row[i] * row[j];
                }
            }
        }
        let cov = inverse(&jtj).ok_or_else(|| Error::Fit(alloc::format!("singular RB Jacobian at p={p}")))?;
        (rss_p / (n - 3) as f64 * cov[(2, 2)]).max(0.0).sqrt()
    };
    let decay = RbDecay { a0, b0, p, dim };
    let r_c = decay.error_per_clifford();
    Ok(RbFit { decay, p_std_error, error_per_clifford: r_c, fidelity: 1.0 - r_c, residual_sum_squares: rss_p })
}

/// The 24 single-qubit Cliffords, up to global phase.
pub fn single_qubit_cliffords() -> Vec<Mat2> {
    let s = 0.5.sqrt();
    let h: Mat2 = [[c64(s, 0.0), c64(s, 0.0)], [c64(s, 0.0), c64(-s, 0.0)]];
    let sg: Mat2 = [[c64(1.0, 0.0), c64(0.0, 0.0)], [c64(0.0, 0.0), c64(0.0, 1.0)]];
    let canonical = |u: &Mat2| -> Mat2 {
        let pivot = [u[0][0], u[0][1]].into_iter().find(|z| z.norm() > 1e-9).unwrap_or(c64(1.0, 0.0));
        let phase = pivot.conj() / pivot.norm();
        [[u[0][0] * phase, u[0][1] * phase], [u[1][0] * phase, u[1][1] * phase]]
    };
    let same = |a: &Mat2, b: &Mat2| (0..2).all(|i| (0..2).all(|j| (a[i][j] - b[i][j]).norm() < 1e-9));
    let mut group: Vec<Mat2> = alloc::vec![canonical(&[[c64(1.0, 0.0), c64(0.0, 0.0)], [c64(0.0, 0.0), c64(1.0, 0.0)]])];
    let mut frontier = 0;
    while frontier < group.len() {
        let u = group[frontier];
        frontier += 1;
        for gen in [&h, &sg] {
            let v = canonical(&mat2_mul(gen, &u));
            if !group.iter().any(|w| same(w, &v)) {
                group.push(v);
            }
        }
    }
    group
}

/// Symmetric interleaved CZ benchmarking on two qubits.
///
/// A sequence of `m` CZs (m even) is built from blocks
/// `C⊗C, CZ, X⊗X, CZ` with `C` a random single-qubit Clifford applied to
/// both qubits. Each shot runs a fresh noise trajectory of the sequence,
/// then the exact inverse of the ideal sequence, and measures with readout
/// flips. Returns the mean `|00⟩` population per length.
pub fn simulate_cz_rb<R: Rng + ?Sized>(
    noise: &NoiseModel,
    lengths: &[usize],
    sequences: usize,
    shots: u64,
    rng: &mut R,
) -> Result<Vec<(usize, f64)>> {
    noise.validate()?;
    if sequences == 0 || shots == 0 {
        return Err(domain!("need at least one sequence and one shot"));
    }
    if let Some(m) = lengths.iter().find(|&&m| m % 2 == 1) {
        return Err(domain!("CZ count {m} must be even: CZs come in pairs"));
    }
    let cliffords = single_qubit_cliffords();
    let zero = StateVector::zero(2)?;
    let readout_only = NoiseModel { cz_fidelity: 1.0, spam_error: noise.spam_error, cz_error_override: None };
    let mut out = Vec::with_capacity(lengths.len());
    for &m in lengths {
        let mut survived = 0u64;
        for _ in 0..sequences {
            let mut c = Circuit::new(2);
            for _ in 0..m / 2 {
                let u = &cliffords[rng.random_range(0..cliffords.len())];
                push_unitary(&mut c, 0, u)?;
                push_unitary(&mut c, 1, u)?;
                c.cz(0, 1)?.x(0)?.x(1)?.cz(0, 1)?;
            }
            let undo = c.inverse();
            for _ in 0..shots {
                let mut s = run_noisy_trajectory(&c, &zero, noise, rng)?;
                for g in undo.gates() {
                    s.apply_gate(g);
                }
                survived += sample_bitstrings(&s, 1, &readout_only, rng)?.count(0);
            }
        }
        out.push((m, survived as f64 / (sequences as u64 * shots) as f64));
    }
    Ok(out)
}
