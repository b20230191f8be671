//! Experiment configuration: one flat JSON object, validated before any run.

use std::path::PathBuf;

use lmg_core::hamiltonian::Encoding;
use lmg_core::simulator::NoiseModel;
use lmg_core::vqe::{Init, OptimizerConfig, Sampling};
use lmg_core::zne::{FitWeighting, FoldMethod};
use serde::{Deserialize, Serialize};

/// Rejected configuration, with the source line when it can be located.
#[derive(Debug, thiserror::Error)]
#[error("{}{message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(source: Option<&str>, key: &str, message: impl Into<String>) -> Self {
        let needle = format!("\"{key}\"");
        let line = source.and_then(|s| s.lines().position(|l| l.contains(&needle)).map(|i| i + 1));
        ConfigError { line, message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// F = 0.971, SPAM 0.025, 400 shots.
    PaperNoise,
    /// F = 0.986, SPAM 0.025, 400 shots.
    OptimizedGate,
    Noiseless,
}

impl Preset {
    pub fn noise(self) -> NoiseModel {
        match self {
            Preset::PaperNoise => NoiseModel::paper_noise(),
            Preset::OptimizedGate => NoiseModel::optimized_gate(),
            Preset::Noiseless => NoiseModel::noiseless(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerKind {
    NelderMead,
    Raster,
    LineRefine,
    Cosine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZneChoice {
    None,
    Fiim,
    Siim,
}

impl ZneChoice {
    pub fn method(self) -> Option<FoldMethod> {
        match self {
            ZneChoice::None => None,
            ZneChoice::Fiim => Some(FoldMethod::Fiim),
            ZneChoice::Siim => Some(FoldMethod::Siim),
        }
    }
}

/// `"zeros"`, `"random"` or an explicit angle list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitSetting {
    Named(String),
    Explicit(Vec<f64>),
}

impl InitSetting {
    pub fn to_init(&self) -> Result<Init, String> {
        match self {
            InitSetting::Named(s) if s == "zeros" => Ok(Init::Zeros),
            InitSetting::Named(s) if s == "random" => Ok(Init::Random),
            InitSetting::Named(s) => Err(format!("init must be \"zeros\", \"random\" or a list of angles, got {s:?}")),
            InitSetting::Explicit(v) => Ok(Init::Explicit(v.clone())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub particles: usize,
    pub coupling: f64,
    pub encoding: Encoding,
    pub preset: Preset,
    /// Overrides the preset's CZ fidelity.
    pub cz_fidelity: Option<f64>,
    /// Overrides the preset's readout flip probability.
    pub spam_error: Option<f64>,
    /// Shots per circuit; overrides the preset.
    pub shots: Option<i64>,
    /// Read energies off the statevector instead of sampling.
    pub exact_expectation: bool,
    pub seed: u64,
    pub optimizer: OptimizerKind,
    pub max_iterations: usize,
    pub initial_step: f64,
    pub tolerance: f64,
    pub init: InitSetting,
    pub raster_points: usize,
    pub line_points: usize,
    pub line_half_width: f64,
    pub cosine_points: usize,
    pub zne: ZneChoice,
    pub insertions: Vec<usize>,
    pub fit: FitWeighting,
    pub output_dir: PathBuf,
    /// File stem for the outputs.
    pub label: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let nm = OptimizerConfig::default();
        Self {
            particles: 5,
            coupling: 1.0,
            encoding: Encoding::Gray,
            preset: Preset::PaperNoise,
            cz_fidelity: None,
            spam_error: None,
            shots: None,
            exact_expectation: false,
            seed: 0,
            optimizer: OptimizerKind::NelderMead,
            max_iterations: nm.max_iterations,
            initial_step: nm.initial_step,
            tolerance: nm.tolerance,
            init: InitSetting::Named("zeros".into()),
            raster_points: 41,
            line_points: 9,
            line_half_width: 0.4,
            cosine_points: 12,
            zne: ZneChoice::None,
            insertions: vec![0, 1, 2],
            fit: FitWeighting::Weighted,
            output_dir: PathBuf::from("lmg-out"),
            label: "run".into(),
        }
    }
}

/// A configuration that passed validation, with everything resolved.
#[derive(Debug, Clone)]
pub struct ValidConfig {
    pub raw: ExperimentConfig,
    pub noise: NoiseModel,
    pub sampling: Sampling,
    pub optimizer: OptimizerConfig,
    pub init: Init,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError { line: Some(e.line()), message: e.to_string() })
    }

    /// Checks every field. `source` is the JSON text, used to report lines.
    pub fn validate(&self, source: Option<&str>) -> Result<ValidConfig, ConfigError> {
        let err = |key: &str, msg: String| ConfigError::at(source, key, msg);
        if self.particles < 2 {
            return Err(err("particles", format!("particles must be at least 2, got {}", self.particles)));
        }
        if self.encoding == Encoding::Individual && self.particles != 3 {
            return Err(err("encoding", "the individual-spin ansatz exists only for 3 particles".into()));
        }
        if !self.coupling.is_finite() {
            return Err(err("coupling", "coupling must be finite".into()));
        }
        let mut noise = self.preset.noise();
        if let Some(f) = self.cz_fidelity {
            noise.cz_fidelity = f;
        }
        if let Some(s) = self.spam_error {
            noise.spam_error = s;
        }
        noise.validate().map_err(|e| {
            let key = if self.cz_fidelity.is_some() { "cz_fidelity" } else { "spam_error" };
            err(key, e.to_string())
        })?;
        let sampling = if self.exact_expectation {
            if noise.cz_error_probability() > 0.0 {
                return Err(err("exact_expectation", "exact expectations cannot model CZ noise; use shots".into()));
            }
            Sampling::Exact
        } else {
            let shots = self.shots.unwrap_or(400);
            if shots < 1 {
                return Err(err("shots", format!("shots must be positive, got {shots}")));
            }
            Sampling::Shots(shots as u64)
        };
        let optimizer = OptimizerConfig {
            max_iterations: self.max_iterations,
            initial_step: self.initial_step,
            tolerance: self.tolerance,
            ..OptimizerConfig::default()
        };
        optimizer.validate().map_err(|e| err("initial_step", e.to_string()))?;
        let init = self.init.to_init().map_err(|m| err("init", m))?;
        let angles = lmg_core::ansatz::AnsatzSpec::new(self.particles, self.encoding)
            .and_then(|s| s.angle_count())
            .map_err(|e| err("particles", e.to_string()))?;
        if let Init::Explicit(v) = &init {
            if v.len() != angles {
                return Err(err("init", format!("{} particles need {angles} angles, init has {}", self.particles, v.len())));
            }
        }
        match self.optimizer {
            OptimizerKind::Raster if angles != 2 => {
                return Err(err("optimizer", format!("raster scans need 2 angles, this ansatz has {angles}")))
            }
            OptimizerKind::Cosine if angles != 1 => {
                return Err(err("optimizer", format!("the cosine fit needs 1 angle, this ansatz has {angles}")))
            }
            _ => {}
        }
        if self.raster_points < 2 {
            return Err(err("raster_points", "raster_points must be at least 2".into()));
        }
        if self.line_points < 3 || !(self.line_half_width > 0.0) {
            return Err(err("line_points", "line scans need ≥ 3 points and a positive half width".into()));
        }
        if self.cosine_points < 4 {
            return Err(err("cosine_points", "the cosine fit needs at least 4 points".into()));
        }
        if self.zne != ZneChoice::None {
            let mut ins = self.insertions.clone();
            ins.sort_unstable();
            ins.dedup();
            if ins.len() < 2 || ins.len() != self.insertions.len() {
                return Err(err("insertions", "ZNE needs at least 2 distinct insertion counts".into()));
            }
        }
        if self.label.is_empty() || self.label.contains(['/', '\\']) {
            return Err(err("label", format!("label must be a plain file stem, got {:?}", self.label)));
        }
        Ok(ValidConfig { raw: self.clone(), noise, sampling, optimizer, init })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let v = ExperimentConfig::default().validate(None).unwrap();
        assert_eq!(v.sampling, Sampling::Shots(400));
        assert_eq!(v.noise, NoiseModel::paper_noise());
    }

    #[test]
    fn unknown_key_reports_line() {
        let e = ExperimentConfig::from_json("{\n  \"particles\": 5,\n  \"shotz\": 3\n}").unwrap_err();
        assert_eq!(e.line, Some(3));
        assert!(e.message.contains("shotz"));
    }

    #[test]
    fn negative_shots_located() {
        let src = "{\n  \"particles\": 5,\n  \"shots\": -4\n}";
        let e = ExperimentConfig::from_json(src).unwrap().validate(Some(src)).unwrap_err();
        assert_eq!(e.line, Some(3));
        assert!(e.to_string().starts_with("line 3: shots must be positive"));
    }

    #[test]
    fn optimizer_shape_checked() {
        let c = ExperimentConfig { particles: 7, optimizer: OptimizerKind::Raster, ..Default::default() };
        assert!(c.validate(None).is_err());
        let c = ExperimentConfig { particles: 3, optimizer: OptimizerKind::Cosine, ..Default::default() };
        assert!(c.validate(None).is_ok());
    }

    #[test]
    fn explicit_init() {
        let src = r#"{"particles": 7, "init": [0.1, 0.2, 0.3]}"#;
        let v = ExperimentConfig::from_json(src).unwrap().validate(Some(src)).unwrap();
        assert_eq!(v.init, Init::Explicit(vec![0.1, 0.2, 0.3]));
        let src = r#"{"particles": 7, "init": "ones"}"#;
        assert!(ExperimentConfig::from_json(src).unwrap().validate(Some(src)).is_err());
    }

    #[test]
    fn exact_mode_needs_clean_gates() {
        let c = ExperimentConfig { exact_expectation: true, ..Default::default() };
        assert!(c.validate(None).is_err());
        let c = ExperimentConfig { exact_expectation: true, preset: Preset::Noiseless, ..Default::default() };
        assert_eq!(c.validate(None).unwrap().sampling, Sampling::Exact);
    }
}
