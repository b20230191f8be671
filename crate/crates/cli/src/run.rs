//! The full VQE pipeline behind `lmg vqe run`.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use lmg_core::ansatz::AnsatzSpec;
use lmg_core::circuit::Circuit;
use lmg_core::hamiltonian::exact_ground_energy;
use lmg_core::simulator::RngStreams;
use lmg_core::vqe::{
    cosine_fit, line_scan_refine, nelder_mead, raster_scan_2d, CosineFit, EnergyEstimator, GridAxis, Objective,
    OptimizerTrace, TracePoint, VqeObjective,
};
use lmg_core::zne::{extrapolate_linear, run_zne, LinearFit, ZneSeries};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{OptimizerKind, ValidConfig};

#[derive(Debug, Clone, Serialize)]
#[allow(non_snake_case)]
pub struct RunResult {
    pub best_theta: Vec<f64>,
    pub E_raw: f64,
    pub E_raw_std_error: f64,
    pub E_zne: Option<f64>,
    pub E_zne_std_error: Option<f64>,
    pub E_theory: f64,
    /// Against `E_zne` when ZNE ran, `E_raw` otherwise.
    pub PFD: f64,
    pub PFD_raw: f64,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub result: RunResult,
    pub trace: Vec<TracePoint>,
    pub zne: Option<(ZneSeries, LinearFit)>,
    pub cosine: Option<CosineFit>,
    pub circuit: Circuit,
}

/// Collects every evaluation an optimizer makes.
struct Recording<'a, O> {
    inner: &'a mut O,
    points: Vec<TracePoint>,
}

impl<O: Objective> Objective for Recording<'_, O> {
    fn evaluate(&mut self, x: &[f64]) -> lmg_core::Result<lmg_core::vqe::Evaluation> {
        let e = self.inner.evaluate(x)?;
        self.points.push(TracePoint { theta: x.to_vec(), measured: e.measured, std_error: e.std_error, theory: e.theory });
        Ok(e)
    }
}

pub fn execute(cfg: &ValidConfig) -> Result<RunOutput> {
    let raw = &cfg.raw;
    let spec = AnsatzSpec::new(raw.particles, raw.encoding)?;
    let dims = spec.angle_count()?;
    let estimator = EnergyEstimator::new(spec, raw.coupling, cfg.noise, cfg.sampling)?;
    let theory = exact_ground_energy(raw.particles, raw.coupling)?;
    // seed → optimizer substreams; seed+1 → init and final measurements
    let mut objective = VqeObjective::new(estimator.clone(), raw.seed);
    let mut aux = RngStreams::new(raw.seed.wrapping_add(1));
    let mut init_rng: ChaCha8Rng = ChaCha8Rng::seed_from_u64(raw.seed ^ 0x5eed);
    let x0 = cfg.init.point(dims, &mut init_rng)?;

    let mut cosine = None;
    let (best_theta, trace, converged) = match raw.optimizer {
        OptimizerKind::NelderMead => {
            let t: OptimizerTrace = nelder_mead(&mut objective, &x0, &cfg.optimizer)?;
            (t.best_theta, t.evaluations, t.converged)
        }
        OptimizerKind::Raster => {
            let axis = GridAxis::half_open(0.0, std::f64::consts::PI, raw.raster_points);
            let mut rec = Recording { inner: &mut objective, points: Vec::new() };
            let r = raster_scan_2d(&mut rec, &axis, &axis)?;
            (r.best_theta.to_vec(), rec.points, true)
        }
        OptimizerKind::LineRefine => {
            let mut rec = Recording { inner: &mut objective, points: Vec::new() };
            let r = line_scan_refine(&mut rec, &x0, &vec![raw.line_half_width; dims], raw.line_points)?;
            (r.theta, rec.points, true)
        }
        OptimizerKind::Cosine => {
            let axis = GridAxis::half_open(0.0, std::f64::consts::PI, raw.cosine_points);
            let mut rec = Recording { inner: &mut objective, points: Vec::new() };
            let mut samples = Vec::new();
            for t in axis.values() {
                samples.push((t, rec.evaluate(&[t])?.measured));
            }
            let fit = cosine_fit(&samples)?;
            cosine = Some(fit);
            (vec![fit.argmin], rec.points, true)
        }
    };

    let final_estimate = estimator.estimate(&best_theta, &mut aux)?;
    let circuit = spec.circuit(&best_theta)?;
    let zne = match raw.zne.method() {
        Some(method) => {
            let series = run_zne(&estimator, &circuit, method, &raw.insertions, &mut aux)?;
            let fit = extrapolate_linear(&series, raw.fit)?;
            Some((series, fit))
        }
        None => None,
    };
    let e_zne = zne.as_ref().map(|(_, f)| f.intercept);
    let reported = e_zne.unwrap_or(final_estimate.value);
    let result = RunResult {
        best_theta,
        E_raw: final_estimate.value,
        E_raw_std_error: final_estimate.std_error,
        E_zne: e_zne,
        E_zne_std_error: zne.as_ref().map(|(_, f)| f.intercept_std_error),
        E_theory: theory,
        PFD: lmg_core::pfd(theory, reported),
        PFD_raw: lmg_core::pfd(theory, final_estimate.value),
        evaluations: trace.len(),
        converged,
    };
    Ok(RunOutput { result, trace, zne, cosine, circuit })
}

#[derive(Serialize)]
struct ResultFile<'a> {
    #[serde(flatten)]
    result: &'a RunResult,
    zne_fit: Option<&'a LinearFit>,
    cosine_fit: Option<&'a CosineFit>,
    config: &'a crate::config::ExperimentConfig,
}

/// Writes `<label>.json`, `<label>_trace.csv`, and `<label>_zne.csv` when ZNE ran.
/// Returns the written paths.
pub fn write_outputs(out: &RunOutput, cfg: &ValidConfig, dir: &Path, emit_circuit: bool) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let label = &cfg.raw.label;
    let mut written = Vec::new();

    let json = dir.join(format!("{label}.json"));
    let file = ResultFile {
        result: &out.result,
        zne_fit: out.zne.as_ref().map(|(_, f)| f),
        cosine_fit: out.cosine.as_ref(),
        config: &cfg.raw,
    };
    fs::write(&json, serde_json::to_string_pretty(&file)? + "\n")?;
    written.push(json);

    let trace = dir.join(format!("{label}_trace.csv"));
    let mut w = csv::Writer::from_path(&trace)?;
    let dims = out.result.best_theta.len();
    let mut header = vec!["iteration".to_string()];
    header.extend((0..dims).map(|i| format!("theta_{i}")));
    header.extend(["E_measured", "E_std_error", "E_theory"].map(String::from));
    w.write_record(&header)?;
    for (i, p) in out.trace.iter().enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(p.theta.iter().map(|t| t.to_string()));
        row.push(p.measured.to_string());
        row.push(p.std_error.map(|s| s.to_string()).unwrap_or_default());
        row.push(p.theory.map(|s| s.to_string()).unwrap_or_default());
        w.write_record(&row)?;
    }
    w.flush()?;
    written.push(trace);

    if let Some((series, _)) = &out.zne {
        let path = dir.join(format!("{label}_zne.csv"));
        crate::output::write_zne_csv(&path, series)?;
        written.push(path);
    }
    if emit_circuit {
        let path = dir.join(format!("{label}_circuit.json"));
        fs::write(&path, serde_json::to_string_pretty(&out.circuit)? + "\n")?;
        written.push(path);
    }
    Ok(written)
}
