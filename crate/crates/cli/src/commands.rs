use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use lmg_core::ansatz::{gray_angles_from_amplitudes, AnsatzSpec};
use lmg_core::graycode::{binary_reflected_gray, format_codeword};
use lmg_core::hamiltonian::{
    format_weight_table, gray_spectrum, ground_state, measurement_groups, Encoding,
};
use lmg_core::hardware::{
    heating_estimates, max_acceleration, oscillator_length, quintic_trajectory, ramsey_dephasing, rb_fit,
    simulate_cz_rb, BeamProfile, TrapSpec, TransportSpec, CESIUM_MASS_AMU,
};
use lmg_core::simulator::{NoiseModel, RngStreams};
use lmg_core::vqe::{EnergyEstimator, Sampling};
use lmg_core::zne::{extrapolate_linear, run_zne, FitWeighting, FoldMethod, LinearFit, ZneSeries};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{ConfigError, ExperimentConfig, InitSetting, OptimizerKind, Preset};
use crate::output::{resolve_output_dir, write_table, write_zne_csv};

#[derive(Debug, Parser)]
#[command(name = "lmg", version, about = "LMG-model VQE simulator and hardware calculators")]
pub struct Cli {
    /// Worker threads for independent circuit batches.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact ground energy and Gray-block spectrum.
    Exact {
        #[arg(short = 'n', long)]
        particles: usize,
        #[arg(short = 'v', long, default_value_t = 1.0)]
        coupling: f64,
        #[arg(long)]
        json: bool,
    },
    /// Pauli weights grouped by measurement basis.
    Weights {
        #[arg(short = 'n', long)]
        particles: usize,
        #[arg(short = 'v', long, default_value_t = 1.0)]
        coupling: f64,
        #[arg(long, default_value = "gray")]
        encoding: Encoding,
        /// Also write the table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Binary reflected Gray code of a given width.
    Graycode {
        #[arg(long)]
        width: usize,
    },
    #[command(subcommand)]
    /// Variational runs driven by a config file or flags.
    Vqe(VqeCommand),
    /// Identity-insertion ZNE at the optimal angles.
    Zne(ZneArgs),
    #[command(subcommand)]
    /// Beam, transport and benchmarking calculators.
    Hardware(HardwareCommand),
}

#[derive(Debug, Subcommand)]
pub enum VqeCommand {
    /// Full pipeline: optimize, re-measure, optionally extrapolate.
    Run(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Flat JSON experiment config; flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(short = 'n', long)]
    pub particles: Option<usize>,
    #[arg(long)]
    pub encoding: Option<Encoding>,
    #[arg(short = 'v', long)]
    pub coupling: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub shots: Option<i64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// paper-noise, optimized-gate or noiseless.
    #[arg(long)]
    pub noise: Option<String>,
    #[arg(long, value_enum)]
    pub optimizer: Option<OptimizerKind>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// zeros, random, or comma-separated angles.
    #[arg(long, allow_hyphen_values = true)]
    pub init: Option<String>,
    /// none, fiim or siim.
    #[arg(long)]
    pub zne: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub insertions: Option<Vec<usize>>,
    #[arg(long)]
    pub exact_expectation: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the prepared circuit as JSON.
    #[arg(long)]
    pub emit_circuit: bool,
}

#[derive(Debug, Args)]
pub struct ZneArgs {
    #[arg(short = 'n', long)]
    pub particles: usize,
    #[arg(short = 'v', long, default_value_t = 1.0)]
    pub coupling: f64,
    #[arg(long, default_value = "fiim")]
    pub method: FoldMethod,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
    pub insertions: Vec<usize>,
    #[arg(long, default_value_t = 400)]
    pub shots: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of consecutive seeds to run.
    #[arg(long, default_value_t = 1)]
    pub seeds: u64,
    #[arg(long, default_value = "paper-noise")]
    pub noise: String,
    #[arg(long, default_value = "weighted")]
    pub fit: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum HardwareCommand {
    /// Beam intensity and gradient profile, optionally with a Ramsey simulation.
    Beam {
        #[arg(long, default_value_t = 8.6)]
        waist: f64,
        #[arg(long, default_value_t = 2.6)]
        flatness: f64,
        #[arg(long, default_value_t = 10.0)]
        r_max: f64,
        #[arg(long, default_value_t = 201)]
        points: usize,
        /// Run the Stark-shift Ramsey Monte Carlo at this atom offset (μm).
        #[arg(long)]
        ramsey_offset: Option<f64>,
        #[arg(long, default_value_t = 20_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Quintic transport profile and heating estimates.
    Transport {
        /// μm.
        #[arg(long, default_value_t = 13.5)]
        distance: f64,
        /// μs.
        #[arg(long, default_value_t = 300.0)]
        duration: f64,
        /// Trap frequency in kHz.
        #[arg(long, default_value_t = 51.0)]
        trap_khz: f64,
        /// Atomic mass in u.
        #[arg(long, default_value_t = CESIUM_MASS_AMU)]
        mass: f64,
        #[arg(long, default_value_t = 301)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit `A·p^m + B` to RB data from a CSV (`m,population`) or the simulator.
    Rbfit {
        #[arg(long, conflicts_with = "simulate_fidelity")]
        input: Option<PathBuf>,
        /// Generate CZ benchmarking data at this fidelity instead.
        #[arg(long)]
        simulate_fidelity: Option<f64>,
        #[arg(long, default_value_t = 0.025)]
        spam: f64,
        #[arg(long, default_value_t = 40)]
        sequences: usize,
        #[arg(long, default_value_t = 200)]
        shots: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        dim: usize,
    },
}

fn preset(name: &str) -> std::result::Result<Preset, ConfigError> {
    serde_json::from_value(serde_json::Value::String(name.into()))
        .map_err(|_| ConfigError { line: None, message: format!("unknown noise preset {name:?}") })
}

/// Parses `args`, runs the command, and returns the process exit code.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    match dispatch(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            if e.downcast_ref::<ConfigError>().is_some() {
                2
            } else {
                1
            }
        }
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<()> {
    if cli.threads == 0 {
        return Err(ConfigError { line: None, message: "--threads must be at least 1".into() }.into());
    }
    match cli.command {
        Command::Exact { particles, coupling, json } => cmd_exact(particles, coupling, json, out),
        Command::Weights { particles, coupling, encoding, csv } => cmd_weights(particles, coupling, encoding, csv, out),
        Command::Graycode { width } => {
            let g = binary_reflected_gray(width).map_err(usage)?;
            for &c in g.codes() {
                writeln!(out, "{}", format_codeword(c, width))?;
            }
            Ok(())
        }
        Command::Vqe(VqeCommand::Run(args)) => cmd_run(args, out),
        Command::Zne(args) => cmd_zne(args, cli.threads, out),
        Command::Hardware(h) => cmd_hardware(h, out),
    }
}

fn usage(e: lmg_core::Error) -> ConfigError {
    ConfigError { line: None, message: e.to_string() }
}

#[derive(Serialize)]
struct ExactReport {
    particles: usize,
    coupling: f64,
    ground_energy: f64,
    spectrum: Vec<f64>,
}

pub fn cmd_exact(particles: usize, coupling: f64, json: bool, out: &mut dyn Write) -> Result<()> {
    let spectrum = gray_spectrum(particles, coupling).map_err(usage)?;
    let report = ExactReport { particles, coupling, ground_energy: spectrum[0], spectrum };
    if json {
        writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
    } else {
        writeln!(out, "N = {particles}, V = {coupling}")?;
        writeln!(out, "ground energy: {:.10}", report.ground_energy)?;
        let s: Vec<String> = report.spectrum.iter().map(|e| format!("{e:.10}")).collect();
        writeln!(out, "spectrum: {}", s.join(" "))?;
    }
    Ok(())
}

pub fn cmd_weights(
    particles: usize,
    coupling: f64,
    encoding: Encoding,
    csv: Option<PathBuf>,
    out: &mut dyn Write,
) -> Result<()> {
    let spec = AnsatzSpec::new(particles, encoding).map_err(usage)?;
    let h = spec.hamiltonian(coupling).map_err(usage)?;
    let groups = measurement_groups(&h, encoding)?;
    write!(out, "{}", format_weight_table(&groups))?;
    if let Some(path) = csv {
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
        w.write_record(["basis", "string", "weight"])?;
        for g in &groups {
            for (s, wt) in &g.members {
                w.write_record([g.basis.to_string(), s.to_string(), wt.to_string()])?;
            }
        }
        w.flush()?;
    }
    Ok(())
}

pub fn cmd_run(args: RunArgs, out: &mut dyn Write) -> Result<()> {
    let (mut cfg, source) = match &args.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            (ExperimentConfig::from_json(&text)?, Some(text))
        }
        None => (ExperimentConfig::default(), None),
    };
    if let Some(v) = args.particles {
        cfg.particles = v;
    }
    if let Some(v) = args.encoding {
        cfg.encoding = v;
    }
    if let Some(v) = args.coupling {
        cfg.coupling = v;
    }
    if let Some(v) = args.shots {
        cfg.shots = Some(v);
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = &args.noise {
        cfg.preset = preset(v)?;
    }
    if let Some(v) = args.optimizer {
        cfg.optimizer = v;
    }
    if let Some(v) = args.max_iters {
        cfg.max_iterations = v;
    }
    if let Some(v) = &args.init {
        cfg.init = match v.as_str() {
            "zeros" | "random" => InitSetting::Named(v.clone()),
            list => InitSetting::Explicit(
                list.split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| ConfigError { line: None, message: format!("bad --init list {list:?}: {e}") })?,
            ),
        };
    }
    if let Some(v) = &args.zne {
        cfg.zne = serde_json::from_value(serde_json::Value::String(v.clone()))
            .map_err(|_| ConfigError { line: None, message: format!("--zne must be none, fiim or siim, got {v:?}") })?;
    }
    if let Some(v) = &args.insertions {
        cfg.insertions = v.clone();
    }
    if args.exact_expectation {
        cfg.exact_expectation = true;
    }
    let valid = cfg.validate(source.as_deref())?;
    let dir = resolve_output_dir(args.out.as_deref(), &valid.raw.output_dir);
    let result = crate::run::execute(&valid)?;
    let files = crate::run::write_outputs(&result, &valid, &dir, args.emit_circuit)?;
    let r = &result.result;
    writeln!(out, "best theta: {:?}", r.best_theta)?;
    writeln!(out, "E_raw = {:.6} ± {:.6}", r.E_raw, r.E_raw_std_error)?;
    if let (Some(e), Some(s)) = (r.E_zne, r.E_zne_std_error) {
        writeln!(out, "E_zne = {e:.6} ± {s:.6}")?;
    }
    writeln!(out, "E_theory = {:.6}, PFD = {:.3}%", r.E_theory, r.PFD)?;
    for f in files {
        writeln!(out, "wrote {}", f.display())?;
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct ZneRecord {
    pub seed: u64,
    pub unmitigated: f64,
    pub fit: LinearFit,
    pub series: ZneSeries,
}

#[derive(Serialize)]
struct ZneReport<'a> {
    particles: usize,
    coupling: f64,
    method: FoldMethod,
    theory: f64,
    mean_intercept: f64,
    mean_unmitigated: f64,
    improved_fraction: f64,
    runs: &'a [ZneRecord],
}

/// ZNE at the exact optimal angles for `seeds` consecutive seeds. Seeds are
/// split across `threads` workers; results come back in seed order.
pub fn zne_study(
    particles: usize,
    coupling: f64,
    method: FoldMethod,
    insertions: &[usize],
    noise: NoiseModel,
    shots: u64,
    fit: FitWeighting,
    seeds: std::ops::Range<u64>,
    threads: usize,
) -> Result<Vec<ZneRecord>> {
    let spec = AnsatzSpec::gray(particles)?;
    let (_, v) = ground_state(particles, coupling)?;
    let angles = gray_angles_from_amplitudes(particles, &v)?;
    let circuit = spec.circuit(&angles)?;
    let estimator = EnergyEstimator::new(spec, coupling, noise, Sampling::Shots(shots))?;
    let one = |seed: u64| -> Result<ZneRecord> {
        let series = run_zne(&estimator, &circuit, method, insertions, &mut RngStreams::new(seed))?;
        let f = extrapolate_linear(&series, fit)?;
        let unmitigated = series.unmitigated().map(|p| p.energy).unwrap_or(f64::NAN);
        Ok(ZneRecord { seed, unmitigated, fit: f, series })
    };
    let seeds: Vec<u64> = seeds.collect();
    if threads <= 1 || seeds.len() <= 1 {
        return seeds.into_iter().map(one).collect();
    }
    let chunk = seeds.len().div_ceil(threads);
    std::thread::scope(|s| {
        let handles: Vec<_> =
            seeds.chunks(chunk).map(|c| s.spawn(move || c.iter().map(|&k| one(k)).collect::<Result<Vec<_>>>())).collect();
        let mut all = Vec::with_capacity(seeds.len());
        for h in handles {
            all.extend(h.join().expect("ZNE worker panicked")?);
        }
        Ok(all)
    })
}

fn cmd_zne(a: ZneArgs, threads: usize, out: &mut dyn Write) -> Result<()> {
    let noise = preset(&a.noise)?.noise();
    let fit = match a.fit.as_str() {
        "weighted" => FitWeighting::Weighted,
        "ordinary" => FitWeighting::Ordinary,
        other => return Err(ConfigError { line: None, message: format!("--fit must be weighted or ordinary, got {other:?}") }.into()),
    };
    if a.seeds == 0 || a.shots == 0 {
        return Err(ConfigError { line: None, message: "--seeds and --shots must be positive".into() }.into());
    }
    let theory = lmg_core::hamiltonian::exact_ground_energy(a.particles, a.coupling).map_err(usage)?;
    let runs = zne_study(a.particles, a.coupling, a.method, &a.insertions, noise, a.shots, fit, a.seed..a.seed + a.seeds, threads)?;
    let n = runs.len() as f64;
    let mean_intercept = runs.iter().map(|r| r.fit.intercept).sum::<f64>() / n;
    let mean_unmitigated = runs.iter().map(|r| r.unmitigated).sum::<f64>() / n;
    let improved = runs.iter().filter(|r| (r.fit.intercept - theory).abs() < (r.unmitigated - theory).abs()).count();
    let report = ZneReport {
        particles: a.particles,
        coupling: a.coupling,
        method: a.method,
        theory,
        mean_intercept,
        mean_unmitigated,
        improved_fraction: improved as f64 / n,
        runs: &runs,
    };
    writeln!(out, "theory {theory:.6}")?;
    writeln!(out, "mean unmitigated {mean_unmitigated:.6}, mean intercept {mean_intercept:.6} (PFD {:.2}%)", lmg_core::pfd(theory, mean_intercept))?;
    writeln!(out, "intercept closer to theory in {improved}/{} seeds", runs.len())?;
    let dir = a.out.clone().or_else(|| std::env::var_os(crate::output::OUTPUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from));
    if let Some(dir) = dir {
        fs::create_dir_all(&dir)?;
        let stem = format!("zne_n{}_{}", a.particles, a.method);
        fs::write(dir.join(format!("{stem}.json")), serde_json::to_string_pretty(&report)? + "\n")?;
        if let Some(first) = runs.first() {
            write_zne_csv(&dir.join(format!("{stem}.csv")), &first.series)?;
        }
        writeln!(out, "wrote {}", dir.join(format!("{stem}.json")).display())?;
    }
    Ok(())
}

fn cmd_hardware(h: HardwareCommand, out: &mut dyn Write) -> Result<()> {
    match h {
        HardwareCommand::Beam { waist, flatness, r_max, points, ramsey_offset, samples, seed, out: dir } => {
            let beam = BeamProfile::new(1.0, (0.0, 0.0), waist, flatness).map_err(usage)?;
            if points < 2 || !(r_max > 0.0) {
                bail!(ConfigError { line: None, message: "need ≥ 2 points and r_max > 0".into() });
            }
            let rows: Vec<Vec<f64>> = (0..points)
                .map(|k| {
                    let r = r_max * k as f64 / (points - 1) as f64;
                    vec![r, beam.radial_intensity(r), beam.radial_derivative(r)]
                })
                .collect();
            writeln!(out, "w = {waist} μm, p = {flatness}")?;
            if let Some(offset) = ramsey_offset {
                let trap = TrapSpec { waist: 1.2, depth: 600.0, temperature: 15.0 };
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let r = ramsey_dephasing(&beam, &trap, (offset, 0.0), 2.0 * std::f64::consts::PI, samples, &mut rng)?;
                writeln!(out, "dI/dr at {offset} μm: {:.6e} per μm", beam.radial_derivative(offset))?;
                writeln!(out, "Ramsey f·τ = {:.1} (τ = {:.2} μs)", r.fringes, r.decay_time)?;
            }
            if let Some(dir) = dir {
                fs::create_dir_all(&dir)?;
                let path = dir.join(format!("beam_w{waist}_p{flatness}.csv"));
                write_table(&path, &["r_um", "intensity", "d_intensity_dr"], &rows)?;
                writeln!(out, "wrote {}", path.display())?;
            }
            Ok(())
        }
        HardwareCommand::Transport { distance, duration, trap_khz, mass, points, out: dir } => {
            let omega = 2.0 * std::f64::consts::PI * trap_khz * 1e-3;
            let x_ho = oscillator_length(mass, omega);
            let spec = TransportSpec::new(distance, duration, omega, x_ho).map_err(usage)?;
            let heat = heating_estimates(&spec);
            writeln!(out, "x_ho = {:.2} nm", x_ho * 1e3)?;
            writeln!(out, "a_max = {:.3e} μm/μs²", max_acceleration(&spec))?;
            writeln!(out, "δn constant jerk = {:.4}", heat.constant_jerk)?;
            writeln!(out, "δn minimal jerk = {:.3e}", heat.minimal_jerk)?;
            if let Some(dir) = dir {
                if points < 2 {
                    bail!(ConfigError { line: None, message: "need ≥ 2 points".into() });
                }
                fs::create_dir_all(&dir)?;
                let rows = (0..points)
                    .map(|k| {
                        let t = duration * k as f64 / (points - 1) as f64;
                        let (x, v, a) = quintic_trajectory(&spec, t)?;
                        Ok(vec![t, x, v, a])
                    })
                    .collect::<Result<Vec<_>>>()?;
                let path = dir.join("transport.csv");
                write_table(&path, &["t_us", "x_um", "v_um_per_us", "a_um_per_us2"], &rows)?;
                writeln!(out, "wrote {}", path.display())?;
            }
            Ok(())
        }
        HardwareCommand::Rbfit { input, simulate_fidelity, spam, sequences, shots, seed, dim } => {
            let data: Vec<(f64, f64)> = match (input, simulate_fidelity) {
                (Some(path), _) => {
                    let mut r = csv::Reader::from_path(&path).with_context(|| format!("reading {}", path.display()))?;
                    r.deserialize::<(f64, f64)>().collect::<std::result::Result<_, _>>()?
                }
                (None, Some(f)) => {
                    let noise = NoiseModel::new(f, spam).map_err(usage)?;
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let lengths: Vec<usize> = (0..=12).step_by(2).collect();
                    simulate_cz_rb(&noise, &lengths, sequences, shots, &mut rng)?
                        .into_iter()
                        .map(|(m, p)| (m as f64, p))
                        .collect()
                }
                (None, None) => bail!(ConfigError { line: None, message: "give --input or --simulate-fidelity".into() }),
            };
            let (m, p): (Vec<f64>, Vec<f64>) = data.into_iter().unzip();
            let fit = rb_fit(&m, &p, dim)?;
            writeln!(out, "A0 = {:.4}, B0 = {:.4}, p = {:.5} ± {:.5}", fit.decay.a0, fit.decay.b0, fit.decay.p, fit.p_std_error)?;
            writeln!(out, "r_c = {:.5}, fidelity = {:.5}", fit.error_per_clifford, fit.fidelity)?;
            Ok(())
        }
    }
}
