//! Energy estimation from measurement groups and the classical optimizers
//! driving the variational loop.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use num_traits::Float;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ansatz::{basis_rotation_suffix, AnsatzSpec};
use crate::circuit::Circuit;
use crate::error::{domain, Error, Result};
use crate::hamiltonian::{MeasurementGroup, PauliHamiltonian};
use crate::linalg::{weighted_least_squares, Matrix};
use crate::pauli::{PauliOp, PauliString};
use crate::simulator::{pauli_expectation, prepare, sample_circuit, NoiseModel, RngStreams, StateVector};

/// Contribution of one measurement group to an energy estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupEstimate {
    pub basis: PauliString,
    /// `Σ w_i ⟨P_i⟩` over the group's members.
    pub energy: f64,
    pub variance: f64,
}

/// One sample of the VQE objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyEstimate {
    pub value: f64,
    pub std_error: f64,
    /// `None` in exact-expectation mode.
    pub shots_per_circuit: Option<u64>,
    pub per_group: Vec<GroupEstimate>,
}

impl EnergyEstimate {
    fn from_groups(per_group: Vec<GroupEstimate>, shots_per_circuit: Option<u64>) -> Self {
        let value = per_group.iter().map(|g| g.energy).sum();
        let std_error = per_group.iter().map(|g| g.variance).sum::<f64>().sqrt();
        Self { value, std_error, shots_per_circuit, per_group }
    }
}

/// Shot budget per circuit, or exact expectation values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampling {
    Exact,
    Shots(u64),
}

/// The Z-basis string read out after a group's basis rotation.
fn rotated_to_z(s: &PauliString) -> PauliString {
    PauliString::new(s.ops().iter().map(|&op| if op == PauliOp::I { PauliOp::I } else { PauliOp::Z }).collect())
}

/// Estimates `⟨H⟩` for an ansatz: one circuit per measurement group, each
/// the preparation circuit followed by the group's basis rotation.
///
/// Exact mode reads expectations off the statevector and applies readout
/// flips analytically, `⟨P⟩ → (1 − 2s)^{weight(P)} ⟨P⟩`; it has no
/// trajectory model for CZ noise and rejects it.
#[derive(Debug, Clone)]
pub struct EnergyEstimator {
    spec: AnsatzSpec,
    hamiltonian: PauliHamiltonian,
    groups: Vec<MeasurementGroup>,
    suffixes: Vec<Circuit>,
    noise: NoiseModel,
    sampling: Sampling,
}

impl EnergyEstimator {
    pub fn new(spec: AnsatzSpec, coupling: f64, noise: NoiseModel, sampling: Sampling) -> Result<Self> {
        let hamiltonian = spec.hamiltonian(coupling)?;
        Self::with_hamiltonian(spec, hamiltonian, noise, sampling)
    }

    /// Uses `hamiltonian` in place of the LMG Hamiltonian of `spec`.
    pub fn with_hamiltonian(
        spec: AnsatzSpec,
        hamiltonian: PauliHamiltonian,
        noise: NoiseModel,
        sampling: Sampling,
    ) -> Result<Self> {
        noise.validate()?;
        if let Sampling::Shots(0) = sampling {
            return Err(domain!("shots must be at least 1"));
        }
        if sampling == Sampling::Exact && noise.cz_error_probability() > 0.0 {
            return Err(Error::Unsupported("exact-expectation mode with CZ noise".into()));
        }
        if hamiltonian.width() != spec.width()? {
            return Err(domain!("Hamiltonian width {} does not match ansatz width {}", hamiltonian.width(), spec.width()?));
        }
        let groups = crate::hamiltonian::measurement_groups(&hamiltonian, spec.encoding)?;
        let suffixes = groups.iter().map(basis_rotation_suffix).collect::<Result<Vec<_>>>()?;
        Ok(Self { spec, hamiltonian, groups, suffixes, noise, sampling })
    }

    pub fn spec(&self) -> &AnsatzSpec {
        &self.spec
    }

    pub fn hamiltonian(&self) -> &PauliHamiltonian {
        &self.hamiltonian
    }

    pub fn groups(&self) -> &[MeasurementGroup] {
        &self.groups
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn sampling(&self) -> Sampling {
        self.sampling
    }

    /// Noiseless `⟨ψ(Θ)|H|ψ(Θ)⟩`.
    pub fn theory(&self, angles: &[f64]) -> Result<f64> {
        self.spec.state(angles)?.expectation(&self.hamiltonian)
    }

    /// Estimate at `angles`; sampled circuits draw from `streams`.
    pub fn estimate(&self, angles: &[f64], streams: &mut RngStreams) -> Result<EnergyEstimate> {
        match self.sampling {
            Sampling::Exact => self.exact_from_state(&self.spec.state(angles)?),
            Sampling::Shots(_) => self.estimate_circuit(&self.spec.circuit(angles)?, streams),
        }
    }

    fn exact_from_state(&self, state: &StateVector) -> Result<EnergyEstimate> {
        let contraction = 1.0 - 2.0 * self.noise.spam_error;
        let per_group = self
            .groups
            .iter()
            .map(|g| {
                let energy = g
                    .members
                    .iter()
                    .map(|(s, w)| Ok(w * contraction.powi(s.weight() as i32) * state.pauli_expectation(s)?))
                    .sum::<Result<f64>>()?;
                Ok(GroupEstimate { basis: g.basis.clone(), energy, variance: 0.0 })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(EnergyEstimate::from_groups(per_group, None))
    }

    /// Estimate for an arbitrary preparation circuit (e.g. a folded one).
    /// Each group circuit uses the next substream of `streams`.
    pub fn estimate_circuit(&self, prep: &Circuit, streams: &mut RngStreams) -> Result<EnergyEstimate> {
        let shots = match self.sampling {
            Sampling::Exact => return self.exact_from_state(&prepare(prep)?),
            Sampling::Shots(n) => n,
        };
        let mut per_group = Vec::with_capacity(self.groups.len());
        for (g, suffix) in self.groups.iter().zip(&self.suffixes) {
            let mut circuit = prep.clone();
            circuit.append(suffix)?;
            let mut rng = streams.next_stream();
            let record = sample_circuit(&circuit, shots, &self.noise, &mut rng)?;
            let mut energy = 0.0;
            let mut variance = 0.0;
            for (s, w) in &g.members {
                let e = pauli_expectation(&record, &rotated_to_z(s))?;
                energy += w * e;
                variance += w * w * (1.0 - e * e) / shots as f64;
            }
            per_group.push(GroupEstimate { basis: g.basis.clone(), energy, variance });
        }
        Ok(EnergyEstimate::from_groups(per_group, Some(shots)))
    }
}

/// Value returned by an objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub measured: f64,
    pub std_error: Option<f64>,
    /// Noiseless reference energy, when the objective knows it.
    pub theory: Option<f64>,
}

impl Evaluation {
    pub fn plain(measured: f64) -> Self {
        Self { measured, std_error: None, theory: None }
    }
}

/// Something the optimizers can minimize.
pub trait Objective {
    fn evaluate(&mut self, x: &[f64]) -> Result<Evaluation>;
}

impl<F: FnMut(&[f64]) -> f64> Objective for F {
    fn evaluate(&mut self, x: &[f64]) -> Result<Evaluation> {
        Ok(Evaluation::plain(self(x)))
    }
}

/// The VQE objective. Every call re-samples shot noise on fresh substreams.
#[derive(Debug, Clone)]
pub struct VqeObjective {
    pub estimator: EnergyEstimator,
    pub streams: RngStreams,
    /// Also report the noiseless energy of each evaluated point.
    pub with_theory: bool,
}

impl VqeObjective {
    pub fn new(estimator: EnergyEstimator, seed: u64) -> Self {
        Self { estimator, streams: RngStreams::new(seed), with_theory: true }
    }
}

impl Objective for VqeObjective {
    fn evaluate(&mut self, x: &[f64]) -> Result<Evaluation> {
        let est = self.estimator.estimate(x, &mut self.streams)?;
        let theory = if self.with_theory { Some(self.estimator.theory(x)?) } else { None };
        Ok(Evaluation { measured: est.value, std_error: Some(est.std_error), theory })
    }
}

/// Caches evaluations by the exact bit pattern of the point. Only
/// meaningful for deterministic objectives.
#[derive(Debug, Clone)]
pub struct Memoized<O> {
    inner: O,
    cache: BTreeMap<Vec<u64>, Evaluation>,
    hits: usize,
}

impl<O: Objective> Memoized<O> {
    pub fn new(inner: O) -> Self {
        Self { inner, cache: BTreeMap::new(), hits: 0 }
    }

    pub fn hits(&self) -> usize {
        self.hits
    }

    pub fn into_inner(self) -> O {
        self.inner
    }
}

impl<O: Objective> Objective for Memoized<O> {
    fn evaluate(&mut self, x: &[f64]) -> Result<Evaluation> {
        let key: Vec<u64> = x.iter().map(|v| v.to_bits()).collect();
        if let Some(e) = self.cache.get(&key) {
            self.hits += 1;
            return Ok(*e);
        }
        let e = self.inner.evaluate(x)?;
        self.cache.insert(key, e);
        Ok(e)
    }
}

/// One objective call recorded by an optimizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub theta: Vec<f64>,
    pub measured: f64,
    pub std_error: Option<f64>,
    pub theory: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerTrace {
    /// Every evaluation in call order.
    pub evaluations: Vec<TracePoint>,
    pub iterations: usize,
    pub converged: bool,
    pub best_theta: Vec<f64>,
    pub best_energy: f64,
}

impl OptimizerTrace {
    fn new() -> Self {
        Self { evaluations: Vec::new(), iterations: 0, converged: false, best_theta: Vec::new(), best_energy: f64::INFINITY }
    }

    fn record(&mut self, theta: &[f64], e: Evaluation) {
        if e.measured < self.best_energy {
            self.best_energy = e.measured;
            self.best_theta = theta.to_vec();
        }
        self.evaluations.push(TracePoint { theta: theta.to_vec(), measured: e.measured, std_error: e.std_error, theory: e.theory });
    }

    /// Noiseless energy at the best point, when recorded.
    pub fn best_theory(&self) -> Option<f64> {
        self.evaluations.iter().find(|p| p.theta == self.best_theta).and_then(|p| p.theory)
    }
}

fn eval_recorded<O: Objective + ?Sized>(obj: &mut O, trace: &mut OptimizerTrace, x: &[f64]) -> Result<f64> {
    let e = obj.evaluate(x)?;
    if e.measured.is_nan() {
        return Err(domain!("objective returned NaN at {x:?}"));
    }
    trace.record(x, e);
    Ok(e.measured)
}

/// Nelder-Mead coefficients and stopping rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    /// Reflection, `> 0`.
    pub alpha: f64,
    /// Expansion, `> 1`.
    pub gamma: f64,
    /// Contraction, in `(0, 0.5]`.
    pub rho: f64,
    /// Shrink, in `(0, 1)`.
    pub sigma: f64,
    /// Offset of the initial simplex vertices along each axis (radians).
    pub initial_step: f64,
    pub max_iterations: usize,
    /// Stop once `f_worst − f_best` across the simplex is at most this.
    pub tolerance: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { alpha: 1.0, gamma: 2.0, rho: 0.5, sigma: 0.5, initial_step: 1.0, max_iterations: 100, tolerance: 1e-10 }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.alpha > 0.0
            && self.gamma > 1.0
            && self.gamma > self.alpha
            && self.rho > 0.0
            && self.rho <= 0.5
            && self.sigma > 0.0
            && self.sigma < 1.0
            && self.initial_step.is_finite()
            && self.initial_step != 0.0
            && self.tolerance >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(domain!("inadmissible Nelder-Mead configuration {self:?}"))
        }
    }
}

/// Downhill simplex minimization from `x0`.
///
/// One iteration is one reflection step with its follow-up (expansion,
/// contraction or shrink). Stops after `max_iterations` or when the spread
/// of simplex values drops to `tolerance`.
pub fn nelder_mead<O: Objective + ?Sized>(obj: &mut O, x0: &[f64], cfg: &OptimizerConfig) -> Result<OptimizerTrace> {
    cfg.validate()?;
    if x0.is_empty() {
        return Err(domain!("Nelder-Mead needs at least one parameter"));
    }
    let n = x0.len();
    let mut trace = OptimizerTrace::new();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let f0 = eval_recorded(obj, &mut trace, x0)?;
    simplex.push((x0.to_vec(), f0));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += cfg.initial_step;
        let f = eval_recorded(obj, &mut trace, &x)?;
        simplex.push((x, f));
    }
    let lerp = |c: &[f64], x: &[f64], t: f64| -> Vec<f64> { c.iter().zip(x).map(|(ci, xi)| ci + t * (xi - ci)).collect() };
    while trace.iterations < cfg.max_iterations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if simplex[n].1 - simplex[0].1 <= cfg.tolerance {
            trace.converged = true;
            break;
        }
        trace.iterations += 1;
        let mut centroid = alloc::vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let xr = lerp(&centroid, &worst.0, -cfg.alpha);
        let fr = eval_recorded(obj, &mut trace, &xr)?;
        if fr < simplex[0].1 {
            let xe = lerp(&centroid, &worst.0, -cfg.alpha * cfg.gamma);
            let fe = eval_recorded(obj, &mut trace, &xe)?;
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc, accept) = if fr < worst.1 {
            let xc = lerp(&centroid, &xr, cfg.rho);
            let fc = eval_recorded(obj, &mut trace, &xc)?;
            (xc, fc, fc <= fr)
        } else {
            let xc = lerp(&centroid, &worst.0, cfg.rho);
            let fc = eval_recorded(obj, &mut trace, &xc)?;
            (xc, fc, fc < worst.1)
        };
        if accept {
            simplex[n] = (xc, fc);
            continue;
        }
        let best = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let x = lerp(&best, &vertex.0, cfg.sigma);
            let f = eval_recorded(obj, &mut trace, &x)?;
            *vertex = (x, f);
        }
    }
    if !trace.converged {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        trace.converged = simplex[n].1 - simplex[0].1 <= cfg.tolerance;
    }
    Ok(trace)
}

/// Starting point of an optimization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Init {
    Zeros,
    /// Uniform in `[0, π)` on every axis.
    Random,
    Explicit(Vec<f64>),
}

impl Init {
    pub fn point<R: Rng + ?Sized>(&self, dims: usize, rng: &mut R) -> Result<Vec<f64>> {
        match self {
            Init::Zeros => Ok(alloc::vec![0.0; dims]),
            Init::Random => Ok((0..dims).map(|_| rng.random_range(0.0..core::f64::consts::PI)).collect()),
            Init::Explicit(v) if v.len() == dims => Ok(v.clone()),
            Init::Explicit(v) => Err(domain!("explicit init has {} angles, expected {dims}", v.len())),
        }
    }
}

/// Runs Nelder-Mead from `starts` random points and returns all traces,
/// the best one first.
pub fn multi_start<O: Objective + ?Sized, R: Rng + ?Sized>(
    obj: &mut O,
    dims: usize,
    starts: usize,
    cfg: &OptimizerConfig,
    rng: &mut R,
) -> Result<Vec<OptimizerTrace>> {
    if starts == 0 {
        return Err(domain!("multi-start needs at least one start"));
    }
    let mut traces = Vec::with_capacity(starts);
    for _ in 0..starts {
        let x0 = Init::Random.point(dims, rng)?;
        traces.push(nelder_mead(obj, &x0, cfg)?);
    }
    traces.sort_by(|a, b| a.best_energy.total_cmp(&b.best_energy));
    Ok(traces)
}

/// Evenly spaced grid `start + k·(stop − start)/(points − 1 or points)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    /// Whether `stop` itself is a grid point.
    pub include_stop: bool,
}

impl GridAxis {
    /// `points` values in `[start, stop)`.
    pub fn half_open(start: f64, stop: f64, points: usize) -> Self {
        Self { start, stop, points, include_stop: false }
    }

    /// `points` values in `[start, stop]`.
    pub fn closed(start: f64, stop: f64, points: usize) -> Self {
        Self { start, stop, points, include_stop: true }
    }

    pub fn values(&self) -> Vec<f64> {
        let div = if self.include_stop { self.points.saturating_sub(1).max(1) } else { self.points };
        let step = (self.stop - self.start) / div as f64;
        (0..self.points).map(|k| self.start + step * k as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RasterResult {
    pub axis0: Vec<f64>,
    pub axis1: Vec<f64>,
    /// `surface[i][j]` is the evaluation at `(axis0[i], axis1[j])`.
    pub surface: Vec<Vec<Evaluation>>,
    pub argmin: (usize, usize),
    pub best_theta: [f64; 2],
    pub best_energy: f64,
}

/// Evaluates a full 2-D grid in row-major order. Ties keep the first grid
/// point reached.
pub fn raster_scan_2d<O: Objective + ?Sized>(obj: &mut O, axis0: &GridAxis, axis1: &GridAxis) -> Result<RasterResult> {
    let (a0, a1) = (axis0.values(), axis1.values());
    if a0.is_empty() || a1.is_empty() {
        return Err(domain!("raster grid is empty"));
    }
    let mut surface = Vec::with_capacity(a0.len());
    let mut argmin = (0, 0);
    let mut best = f64::INFINITY;
    for (i, &x) in a0.iter().enumerate() {
        let mut row = Vec::with_capacity(a1.len());
        for (j, &y) in a1.iter().enumerate() {
            let e = obj.evaluate(&[x, y])?;
            if e.measured < best {
                best = e.measured;
                argmin = (i, j);
            }
            row.push(e);
        }
        surface.push(row);
    }
    let best_theta = [a0[argmin.0], a1[argmin.1]];
    Ok(RasterResult { axis0: a0, axis1: a1, surface, argmin, best_theta, best_energy: best })
}

/// How a line scan picked its new coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineScanMove {
    /// Vertex of an upward parabola, clamped to the scanned interval.
    Vertex,
    /// The fit opened downward; moved to the lower sampled endpoint.
    Endpoint,
    /// The fit was singular; moved to the lowest sample.
    DiscreteMin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisScan {
    pub axis: usize,
    pub samples: Vec<(f64, f64)>,
    /// `(c0, c1, c2)` of `c0 + c1·t + c2·t²`, when the fit succeeded.
    pub parabola: Option<[f64; 3]>,
    pub chosen: f64,
    pub how: LineScanMove,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineScanResult {
    pub theta: Vec<f64>,
    pub scans: Vec<AxisScan>,
}

fn fit_parabola(samples: &[(f64, f64)]) -> Option<[f64; 3]> {
    let mut design = Matrix::zeros(samples.len(), 3);
    for (r, &(t, _)) in samples.iter().enumerate() {
        design[(r, 0)] = 1.0;
        design[(r, 1)] = t;
        design[(r, 2)] = t * t;
    }
    let y: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let (coef, _) = weighted_least_squares(&design, &y, &alloc::vec![1.0; samples.len()])?;
    Some([coef[0], coef[1], coef[2]])
}

/// One pass of 1-D scans, axis by axis, each over
/// `[θ_i − half_width_i, θ_i + half_width_i]` with `points` samples, moving
/// to the vertex of the least-squares parabola. A downward fit moves to the
/// endpoint with the lower sampled energy; a singular fit to the lowest
/// sample. The result never leaves the scanned interval.
pub fn line_scan_refine<O: Objective + ?Sized>(
    obj: &mut O,
    start: &[f64],
    half_widths: &[f64],
    points: usize,
) -> Result<LineScanResult> {
    if points < 3 {
        return Err(domain!("line scans need at least 3 points per axis, got {points}"));
    }
    if half_widths.len() != start.len() {
        return Err(domain!("{} scan ranges for {} angles", half_widths.len(), start.len()));
    }
    let mut theta = start.to_vec();
    let mut scans = Vec::with_capacity(start.len());
    for axis in 0..start.len() {
        let center = theta[axis];
        let (lo, hi) = (center - half_widths[axis], center + half_widths[axis]);
        let mut samples = Vec::with_capacity(points);
        for t in GridAxis::closed(lo, hi, points).values() {
            let mut x = theta.clone();
            x[axis] = t;
            samples.push((t, obj.evaluate(&x)?.measured));
        }
        // fit in the centred coordinate for conditioning
        let centred: Vec<(f64, f64)> = samples.iter().map(|&(t, e)| (t - center, e)).collect();
        let parabola = fit_parabola(&centred);
        let discrete = samples.iter().min_by(|a, b| a.1.total_cmp(&b.1)).map(|s| s.0).unwrap_or(center);
        let (chosen, how) = match parabola {
            Some([_, b, a]) if a > 0.0 => ((center - b / (2.0 * a)).clamp(lo, hi), LineScanMove::Vertex),
            Some(_) => {
                let (first, last) = (samples[0], samples[points - 1]);
                (if last.1 < first.1 { last.0 } else { first.0 }, LineScanMove::Endpoint)
            }
            None => (discrete, LineScanMove::DiscreteMin),
        };
        let parabola = parabola.map(|[c, b, a]| {
            // back to the absolute coordinate
            [c - b * center + a * center * center, b - 2.0 * a * center, a]
        });
        theta[axis] = chosen;
        scans.push(AxisScan { axis, samples, parabola, chosen, how });
    }
    Ok(LineScanResult { theta, scans })
}

/// `E(θ) = offset + amplitude·cos(2θ − phase)` with `amplitude ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CosineFit {
    pub offset: f64,
    pub amplitude: f64,
    pub phase: f64,
    /// `offset − amplitude`.
    pub min_energy: f64,
    /// A minimizing θ in `[0, π)`.
    pub argmin: f64,
}

/// Linear least squares on `offset + a cos 2θ + b sin 2θ`.
pub fn cosine_fit(samples: &[(f64, f64)]) -> Result<CosineFit> {
    if samples.len() < 4 {
        return Err(Error::Fit(alloc::format!("cosine fit needs at least 4 samples, got {}", samples.len())));
    }
    let lo = samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let hi = samples.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
    if hi - lo <= core::f64::consts::FRAC_PI_2 {
        return Err(Error::Fit("samples span no more than half a period".into()));
    }
    let mut design = Matrix::zeros(samples.len(), 3);
    for (r, &(t, _)) in samples.iter().enumerate() {
        design[(r, 0)] = 1.0;
        design[(r, 1)] = (2.0 * t).cos();
        design[(r, 2)] = (2.0 * t).sin();
    }
    let y: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let (coef, _) = weighted_least_squares(&design, &y, &alloc::vec![1.0; samples.len()])
        .ok_or_else(|| Error::Fit("singular cosine design".into()))?;
    let (offset, a, b) = (coef[0], coef[1], coef[2]);
    let amplitude = a.hypot(b);
    let phase = b.atan2(a);
    let argmin = num_traits::Euclid::rem_euclid(&((phase + core::f64::consts::PI) / 2.0), &core::f64::consts::PI);
    Ok(CosineFit { offset, amplitude, phase, min_energy: offset - amplitude, argmin })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{exact_ground_energy, Encoding};
    use core::f64::consts::PI;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn exact_objective(n: usize) -> VqeObjective {
        let est = EnergyEstimator::new(AnsatzSpec::gray(n).unwrap(), 1.0, NoiseModel::noiseless(), Sampling::Exact).unwrap();
        VqeObjective::new(est, 0)
    }

    #[test]
    fn quadratic_bowl() {
        let mut calls = 0;
        let mut f = |x: &[f64]| {
            calls += 1;
            (x[0] - 1.0).powi(2) + (x[1] + 2.0).powi(2)
        };
        let cfg = OptimizerConfig { max_iterations: 1000, tolerance: 1e-14, ..Default::default() };
        let trace = nelder_mead(&mut f, &[0.0, 0.0], &cfg).unwrap();
        assert!(trace.converged);
        assert!((trace.best_theta[0] - 1.0).abs() < 1e-6 && (trace.best_theta[1] + 2.0).abs() < 1e-6);
        assert!(trace.evaluations.len() < 200, "{}", trace.evaluations.len());
        assert_eq!(trace.evaluations.len(), calls);
    }

    #[test]
    fn best_point_is_trace_minimum() {
        let mut f = |x: &[f64]| (x[0] * 3.0).sin() + x[1] * x[1];
        let trace = nelder_mead(&mut f, &[0.3, 0.4], &OptimizerConfig::default()).unwrap();
        let min = trace.evaluations.iter().map(|p| p.measured).fold(f64::INFINITY, f64::min);
        assert_eq!(min, trace.best_energy);
    }

    #[test]
    fn config_validation() {
        let bad = OptimizerConfig { rho: 0.8, ..Default::default() };
        assert!(nelder_mead(&mut |x: &[f64]| x[0], &[0.0], &bad).is_err());
        assert!(OptimizerConfig::default().validate().is_ok());
    }

    #[test]
    fn exact_mode_equals_dense_element() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for n in [2usize, 3, 4, 5, 7, 9, 15] {
            let spec = AnsatzSpec::gray(n).unwrap();
            let est = EnergyEstimator::new(spec, 1.0, NoiseModel::noiseless(), Sampling::Exact).unwrap();
            let dense = crate::hamiltonian::build_gray_hamiltonian(n, 1.0).unwrap().dense;
            let ground = exact_ground_energy(n, 1.0).unwrap();
            let mut streams = RngStreams::new(0);
            for _ in 0..100 {
                let angles = Init::Random.point(spec.angle_count().unwrap(), &mut rng).unwrap();
                let v: Vec<f64> = spec.state(&angles).unwrap().amplitudes().iter().map(|a| a.re).collect();
                let hv = dense.matrix().matvec(&v);
                let direct: f64 = v.iter().zip(&hv).map(|(a, b)| a * b).sum();
                let e = est.estimate(&angles, &mut streams).unwrap();
                assert!((e.value - direct).abs() < 1e-10);
                assert!(e.value >= ground - 1e-9);
                assert_eq!(e.std_error, 0.0);
            }
        }
    }

    #[test]
    fn exact_mode_three_particles() {
        let est = EnergyEstimator::new(AnsatzSpec::gray(3).unwrap(), 1.0, NoiseModel::noiseless(), Sampling::Exact).unwrap();
        let e = est.estimate(&[PI / 6.0], &mut RngStreams::new(0)).unwrap();
        assert!((e.value + 2.5).abs() < 1e-12);
    }

    #[test]
    fn readout_flips_contract_expectations() {
        // the one-qubit circuit has no CZ, so only SPAM acts: ⟨Z⟩, ⟨X⟩ scale by 1 − 2s
        let noise = NoiseModel::new(0.971, 0.025).unwrap();
        let est = EnergyEstimator::new(AnsatzSpec::gray(3).unwrap(), 1.0, NoiseModel::new(1.0, 0.025).unwrap(), Sampling::Exact)
            .unwrap();
        let e = est.estimate(&[PI / 6.0], &mut RngStreams::new(0)).unwrap().value;
        let expected = -0.5 + 0.95 * (-(PI / 3.0).cos() - 3.0.sqrt() * (PI / 3.0).sin());
        assert!((e - expected).abs() < 1e-12);
        // sampled with CZ noise switched on: the circuit has no CZ, so the mean still matches
        let sampled = EnergyEstimator::new(AnsatzSpec::gray(3).unwrap(), 1.0, noise, Sampling::Shots(400)).unwrap();
        let mut streams = RngStreams::new(5);
        let runs = 300;
        let mean = (0..runs).map(|_| sampled.estimate(&[PI / 6.0], &mut streams).unwrap().value).sum::<f64>() / runs as f64;
        assert!((mean - expected).abs() < 0.02, "{mean} vs {expected}");
    }

    #[test]
    fn exact_mode_rejects_cz_noise() {
        let r = EnergyEstimator::new(AnsatzSpec::gray(5).unwrap(), 1.0, NoiseModel::paper_noise(), Sampling::Exact);
        assert!(matches!(r, Err(Error::Unsupported(_))));
    }

    #[test]
    fn zero_hamiltonian_gives_zero() {
        let spec = AnsatzSpec::gray(9).unwrap();
        let h = PauliHamiltonian::new(3);
        let est = EnergyEstimator::with_hamiltonian(spec, h, NoiseModel::paper_noise(), Sampling::Shots(50)).unwrap();
        let e = est.estimate(&[0.1, 0.2, 0.3, 0.4], &mut RngStreams::new(1)).unwrap();
        assert_eq!((e.value, e.std_error), (0.0, 0.0));
    }

    #[test]
    fn individual_encoding_uses_three_groups() {
        let spec = AnsatzSpec::new(3, Encoding::Individual).unwrap();
        let est = EnergyEstimator::new(spec, 1.0, NoiseModel::noiseless(), Sampling::Shots(200)).unwrap();
        let e = est.estimate(&[0.4], &mut RngStreams::new(3)).unwrap();
        assert_eq!(e.per_group.len(), 3);
        let sum: f64 = e.per_group.iter().map(|g| g.energy).sum();
        assert!((sum - e.value).abs() < 1e-12);
    }

    #[test]
    fn estimator_is_unbiased() {
        let spec = AnsatzSpec::gray(7).unwrap();
        let est = EnergyEstimator::new(spec, 1.0, NoiseModel::noiseless(), Sampling::Shots(400)).unwrap();
        let angles = [0.7, 1.1, 0.4];
        let exact = est.theory(&angles).unwrap();
        let mut streams = RngStreams::new(17);
        let runs: Vec<EnergyEstimate> = (0..100).map(|_| est.estimate(&angles, &mut streams).unwrap()).collect();
        let mean = runs.iter().map(|e| e.value).sum::<f64>() / 100.0;
        let combined = (runs.iter().map(|e| e.std_error * e.std_error).sum::<f64>()).sqrt() / 100.0;
        assert!((mean - exact).abs() < 3.0 * combined, "{mean} vs {exact} ± {combined}");
    }

    #[test]
    fn memoized_objective_hits_cache() {
        let mut m = Memoized::new(exact_objective(5));
        let a = m.evaluate(&[0.1, 0.2]).unwrap();
        let b = m.evaluate(&[0.1, 0.2]).unwrap();
        assert_eq!(a, b);
        assert_eq!(m.hits(), 1);
    }

    #[test]
    fn nelder_mead_is_deterministic_under_shot_noise() {
        let run = || {
            let est = EnergyEstimator::new(AnsatzSpec::gray(5).unwrap(), 1.0, NoiseModel::paper_noise(), Sampling::Shots(100))
                .unwrap();
            let mut obj = VqeObjective::new(est, 42);
            let cfg = OptimizerConfig { max_iterations: 15, ..Default::default() };
            nelder_mead(&mut obj, &[0.0, 0.0], &cfg).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn seven_particles_from_zero() {
        let mut obj = exact_objective(7);
        let trace = nelder_mead(&mut obj, &[0.0; 3], &OptimizerConfig::default()).unwrap();
        let exact = exact_ground_energy(7, 1.0).unwrap();
        assert!((trace.best_energy - exact).abs() < 1e-4, "{}", trace.best_energy);
    }

    #[test]
    fn fifteen_particles_from_zero_stalls() {
        let mut obj = exact_objective(15);
        let trace = nelder_mead(&mut obj, &[0.0; 7], &OptimizerConfig::default()).unwrap();
        assert_eq!(trace.iterations, 100);
        assert!(trace.best_energy > exact_ground_energy(15, 1.0).unwrap() + 1.0, "{}", trace.best_energy);
    }

    #[test]
    fn raster_constant_tiebreak() {
        let r = raster_scan_2d(&mut |_: &[f64]| 1.0, &GridAxis::half_open(0.0, 1.0, 3), &GridAxis::half_open(0.0, 1.0, 3))
            .unwrap();
        assert_eq!(r.argmin, (0, 0));
        assert_eq!(GridAxis::half_open(0.0, PI, 4).values()[3], 0.75 * PI);
        assert_eq!(GridAxis::closed(0.0, 1.0, 3).values(), [0.0, 0.5, 1.0]);
    }

    #[test]
    fn raster_five_particles() {
        let mut obj = exact_objective(5);
        let axis = GridAxis::half_open(0.0, PI, 41);
        let r = raster_scan_2d(&mut obj, &axis, &axis).unwrap();
        let exact = exact_ground_energy(5, 1.0).unwrap();
        assert!(crate::pfd(exact, r.best_energy) < 0.1);
    }

    #[test]
    fn line_scan_recovers_quadratic_vertex() {
        let mut f = |x: &[f64]| 2.0 * (x[0] - 0.3).powi(2) + (x[1] + 0.1).powi(2) + 5.0;
        let r = line_scan_refine(&mut f, &[0.0, 0.0], &[0.5, 0.5], 7).unwrap();
        assert!((r.theta[0] - 0.3).abs() < 1e-12 && (r.theta[1] + 0.1).abs() < 1e-12);
        assert!(r.scans.iter().all(|s| s.how == LineScanMove::Vertex));
    }

    #[test]
    fn line_scan_downward_fit_takes_lower_endpoint() {
        let mut f = |x: &[f64]| -(x[0] * x[0]) + 0.1 * x[0];
        let r = line_scan_refine(&mut f, &[0.0], &[1.0], 5).unwrap();
        assert_eq!(r.scans[0].how, LineScanMove::Endpoint);
        assert_eq!(r.theta[0], -1.0);
    }

    #[test]
    fn line_scan_nine_particles_from_perturbed_optimum() {
        let (_, v) = crate::hamiltonian::ground_state(9, 1.0).unwrap();
        let opt = crate::ansatz::gray_angles_from_amplitudes(9, &v).unwrap();
        let start: Vec<f64> = opt.iter().map(|t| t + 0.2).collect();
        let mut obj = exact_objective(9);
        let r = line_scan_refine(&mut obj, &start, &[0.4; 4], 9).unwrap();
        let e = obj.evaluate(&r.theta).unwrap().measured;
        assert!(crate::pfd(exact_ground_energy(9, 1.0).unwrap(), e) < 3.5, "{e}");
    }

    #[test]
    fn cosine_fit_three_particle_curve() {
        let samples: Vec<(f64, f64)> = (0..12)
            .map(|k| {
                let t = PI * k as f64 / 12.0;
                (t, -0.5 - (2.0 * t).cos() - 3.0.sqrt() * (2.0 * t).sin())
            })
            .collect();
        let fit = cosine_fit(&samples).unwrap();
        assert!((fit.offset + 0.5).abs() < 1e-12);
        assert!((fit.amplitude - 2.0).abs() < 1e-12);
        assert!((fit.min_energy + 2.5).abs() < 1e-12);
        assert!((fit.argmin - PI / 6.0).abs() < 1e-12);
        let flat: Vec<(f64, f64)> = samples.iter().map(|s| (s.0, 0.7)).collect();
        let fit = cosine_fit(&flat).unwrap();
        assert!(fit.amplitude < 1e-12 && (fit.min_energy - 0.7).abs() < 1e-12);
        assert!(cosine_fit(&samples[..3]).is_err());
        assert!(cosine_fit(&[(0.0, 1.0), (0.1, 1.0), (0.2, 1.0), (0.3, 1.0)]).is_err());
    }
}
