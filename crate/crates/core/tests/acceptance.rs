//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when a criterion fails that is not listed in [`KNOWN_FAILURES`].
//!
//! Run with `cargo test -p lmg-core --test acceptance`.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use lmg_core::ansatz::{gray_angles_from_amplitudes, synthesize_circuit, AnsatzSpec};
use lmg_core::circuit::Circuit;
use lmg_core::hamiltonian::{
    build_gray_hamiltonian, build_individual_hamiltonian, dicke_embedding, exact_ground_energy, ground_state,
    pauli_decompose, Encoding,
};
use lmg_core::hardware::{heating_estimates, max_acceleration, rb_fit, simulate_cz_rb, TransportSpec};
use lmg_core::linalg::symmetric_eigen;
use lmg_core::pfd;
use lmg_core::simulator::{run_circuit, NoiseModel, RngStreams, StateVector};
use lmg_core::vqe::{
    cosine_fit, nelder_mead, raster_scan_2d, EnergyEstimator, GridAxis, OptimizerConfig, OptimizerTrace, Sampling,
    VqeObjective,
};
use lmg_core::zne::{extrapolate_linear, run_zne, FitWeighting, FoldMethod};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria that cannot be met as written; see the notes in the README.
/// 2: the printed weight tables have two wrong entries and omit two terms.
/// 6b: readout error alone puts the N = 9 energy more than 7% off.
const KNOWN_FAILURES: &[&str] = &["2", "6b"];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within_budget(o: Outcome, elapsed: Duration, budget: Duration) -> Outcome {
    if elapsed <= budget {
        o
    } else {
        Outcome { pass: false, detail: format!("{}; over time budget of {:?}", o.detail, budget) }
    }
}

// exact-solution parity

fn criterion_1() -> Outcome {
    // printed values are a mix of rounded (-5.89) and truncated (-11.26,
    // -18.7) figures, so agreement means within one unit of the last digit
    let printed = [(3usize, -2.5, 1), (5, -5.89, 2), (7, -11.26, 2), (9, -18.7, 1), (15, -53.47, 2)];
    let mut bad = Vec::new();
    let mut shown = Vec::new();
    for (n, value, decimals) in printed {
        let e = exact_ground_energy(n, 1.0).unwrap();
        shown.push(format!("N={n} {e:.6}"));
        if (e - value).abs() >= 10f64.powi(-decimals) {
            bad.push(format!("N={n}: {e} vs printed {value}"));
        }
    }
    if bad.is_empty() {
        outcome(true, shown.join(", "))
    } else {
        outcome(false, bad.join("; "))
    }
}

// weight tables

fn printed_weights() -> Vec<(usize, Vec<(&'static str, f64)>)> {
    let s = f64::sqrt;
    vec![
        (3, vec![("I", -0.5), ("Z", -1.0), ("X", -s(3.0))]),
        (
            5,
            vec![
                ("II", -3.0 / 8.0),
                ("IZ", -7.0 / 8.0),
                ("ZI", -9.0 / 8.0),
                ("XI", -3.0 / s(2.0)),
                ("XZ", 3.0 / s(2.0)),
                ("IX", -s(2.5)),
                ("ZX", -s(2.5)),
            ],
        ),
        (
            7,
            vec![
                ("II", -0.5),
                ("ZZ", -1.0),
                ("ZI", -2.0),
                ("XI", -s(15.0)),
                ("XZ", s(15.0)),
                ("IX", -(3.0 * s(5.0) + s(21.0)) / 2.0),
                ("ZX", (3.0 * s(5.0) - s(21.0)) / 2.0),
            ],
        ),
        (
            9,
            vec![
                ("III", -5.0 / 16.0),
                ("IIZ", 7.0 / 16.0),
                ("IZI", -23.0 / 16.0),
                ("IZZ", -5.0 / 16.0),
                ("ZII", -19.0 / 16.0),
                ("ZIZ", -7.0 / 16.0),
                ("ZZI", -9.0 / 16.0),
                ("ZZZ", -1.0 / 16.0),
                ("XZZ", s(21.0) / 2.0),
                ("XZI", s(21.0) / 2.0),
                ("XIZ", -s(21.0) / 2.0),
                ("XII", -s(21.0) / 2.0),
                ("ZXZ", 1.5 * s(3.5)),
                ("ZXI", -1.5 * s(3.5)),
                ("IXZ", 1.5 * s(3.5)),
                ("IXI", -1.5 * s(3.5)),
                ("ZZX", (5.0 * s(6.0) - 6.0) / 4.0),
                ("ZIX", -(5.0 * s(6.0) + 6.0) / 4.0),
                ("IZX", (5.0 * s(6.0) - 6.0) / 4.0),
                ("IIX", -(5.0 * s(6.0) + 6.0) / 4.0),
            ],
        ),
        (
            15,
            vec![
                ("III", -0.5),
                ("ZZI", -2.0),
                ("ZZZ", -1.0),
                ("XZZ", 3.0 * s(7.0)),
                ("XZI", 3.0 * s(7.0)),
                ("XIZ", -3.0 * s(7.0)),
                ("XII", -3.0 * s(7.0)),
                ("ZXZ", (3.0 * s(13.0) - s(165.0)) / 2.0),
                ("ZXI", (-3.0 * s(13.0) + s(165.0)) / 2.0),
                ("IXZ", (3.0 * s(13.0) + s(165.0)) / 2.0),
                ("IXI", -(3.0 * s(13.0) + s(165.0)) / 2.0),
                ("ZZX", (5.0 * s(33.0) - 4.0 * s(105.0) + s(273.0)) / 4.0),
                ("ZIX", (-5.0 * s(33.0) + 2.0 * s(105.0) + s(273.0)) / 4.0),
                ("IZX", (5.0 * s(33.0) + 2.0 * s(105.0) - s(273.0)) / 4.0),
                ("IIX", (5.0 * s(33.0) + 4.0 * s(105.0) + s(273.0)) / 4.0),
            ],
        ),
    ]
}

fn criterion_2() -> Outcome {
    let mut bad = Vec::new();
    let mut checked = 0;
    for (n, table) in printed_weights() {
        let h = pauli_decompose(&build_gray_hamiltonian(n, 1.0).unwrap().dense).unwrap();
        for &(string, printed) in &table {
            checked += 1;
            let w = h.weight(string);
            if (w - printed).abs() > 1e-12 {
                bad.push(format!("N={n} {string}: computed {w:.6}, printed {printed:.6}"));
            }
        }
        for (string, w) in h.terms() {
            let name = string.to_string();
            if !table.iter().any(|&(s, _)| s == name) {
                bad.push(format!("N={n} {name}: computed {w:.6}, not printed"));
            }
        }
    }
    if bad.is_empty() {
        outcome(true, format!("{checked} entries"))
    } else {
        outcome(false, format!("{} of {checked} entries differ: {}", bad.len(), bad.join("; ")))
    }
}

// N = 3 closed form

fn sampled_minimum(est: &EnergyEstimator) -> f64 {
    let mut streams = RngStreams::new(0);
    let samples: Vec<(f64, f64)> = (0..12)
        .map(|k| {
            let t = PI * k as f64 / 12.0;
            (t, est.estimate(&[t], &mut streams).unwrap().value)
        })
        .collect();
    cosine_fit(&samples).unwrap().min_energy
}

fn criterion_3() -> Outcome {
    let mut worst: f64 = 0.0;
    for v in [0.0f64, 0.5, 1.0, 2.0] {
        let closed = -0.5 - (1.0 + 3.0 * v * v).sqrt();
        for encoding in [Encoding::Gray, Encoding::Individual] {
            let spec = AnsatzSpec::new(3, encoding).unwrap();
            let est = EnergyEstimator::new(spec, v, NoiseModel::noiseless(), Sampling::Exact).unwrap();
            worst = worst.max((sampled_minimum(&est) - closed).abs());
        }
    }
    outcome(worst < 1e-6, format!("largest deviation {worst:.2e} over V in {{0, 0.5, 1, 2}}, both encodings"))
}

// noiseless convergence

fn exact_objective(n: usize) -> VqeObjective {
    let est = EnergyEstimator::new(AnsatzSpec::gray(n).unwrap(), 1.0, NoiseModel::noiseless(), Sampling::Exact).unwrap();
    VqeObjective::new(est, 0)
}

fn criterion_4a() -> Outcome {
    let mut obj = exact_objective(7);
    let trace = nelder_mead(&mut obj, &[0.0; 3], &OptimizerConfig::default()).unwrap();
    let d = pfd(exact_ground_energy(7, 1.0).unwrap(), trace.best_energy);
    outcome(d < 0.1, format!("Nelder-Mead N=7: {:.6} after {} iterations, PFD {d:.2e}%", trace.best_energy, trace.iterations))
}

fn criterion_4b() -> Outcome {
    let mut obj = exact_objective(5);
    let axis = GridAxis::half_open(0.0, PI, 41);
    let r = raster_scan_2d(&mut obj, &axis, &axis).unwrap();
    let d = pfd(exact_ground_energy(5, 1.0).unwrap(), r.best_energy);
    outcome(d < 0.1, format!("raster N=5 41x41: {:.6}, PFD {d:.3}%", r.best_energy))
}

// N = 15 stall

fn n15_run() -> OptimizerTrace {
    nelder_mead(&mut exact_objective(15), &[0.0; 7], &OptimizerConfig::default()).unwrap()
}

fn criterion_5() -> Outcome {
    let a = n15_run();
    let b = n15_run();
    let same = a.evaluations.len() == b.evaluations.len()
        && a.evaluations.iter().zip(&b.evaluations).all(|(x, y)| x.theta == y.theta && x.measured == y.measured);
    let gap = a.best_energy - (-53.47);
    outcome(
        gap >= 1.0 && same && a.iterations == 100,
        format!("stopped at {:.4} after {} iterations, {gap:.3} above -53.47, repeat identical: {same}", a.best_energy, a.iterations),
    )
}

// ZNE efficacy

struct ZneStudy {
    improved: usize,
    mean_intercept: f64,
    theory: f64,
}

fn zne_study(n: usize, method: FoldMethod) -> ZneStudy {
    let spec = AnsatzSpec::gray(n).unwrap();
    let (theory, v) = ground_state(n, 1.0).unwrap();
    let circuit = spec.circuit(&gray_angles_from_amplitudes(n, &v).unwrap()).unwrap();
    let est = EnergyEstimator::new(spec, 1.0, NoiseModel::paper_noise(), Sampling::Shots(400)).unwrap();
    let runs: Vec<(f64, f64)> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..30u64)
            .map(|seed| {
                let (est, circuit) = (&est, &circuit);
                s.spawn(move || {
                    let series = run_zne(est, circuit, method, &[0, 1, 2], &mut RngStreams::new(seed)).unwrap();
                    let fit = extrapolate_linear(&series, FitWeighting::Weighted).unwrap();
                    (series.unmitigated().unwrap().energy, fit.intercept)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let improved = runs.iter().filter(|(raw, zne)| (zne - theory).abs() < (raw - theory).abs()).count();
    let mean_intercept = runs.iter().map(|r| r.1).sum::<f64>() / runs.len() as f64;
    ZneStudy { improved, mean_intercept, theory }
}

fn criterion_6() -> (Outcome, Outcome) {
    let studies = [(5, FoldMethod::Fiim), (7, FoldMethod::Fiim), (9, FoldMethod::Siim)].map(|(n, m)| (n, m, zne_study(n, m)));
    let rates: Vec<String> = studies.iter().map(|(n, m, s)| format!("N={n} {m} {}/30", s.improved)).collect();
    let a = outcome(studies.iter().all(|(_, _, s)| s.improved >= 24), format!("intercept closer in {}", rates.join(", ")));
    let nine = &studies[2].2;
    let d = pfd(-18.7, nine.mean_intercept);
    let b = outcome(
        d <= 7.0,
        format!(
            "N=9 SIIM mean intercept {:.4}, PFD {d:.2}% vs -18.7 ({:.2}% vs exact {:.4})",
            nine.mean_intercept,
            pfd(nine.theory, nine.mean_intercept),
            nine.theory
        ),
    );
    (a, b)
}

// shot noise

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn criterion_7() -> Outcome {
    let shots = [100u64, 400, 1600, 6400];
    let reps = 400;
    let spec = AnsatzSpec::gray(5).unwrap();
    let theta = [0.4, 1.1];
    let mut spread = Vec::new();
    let mut reported = Vec::new();
    for &s in &shots {
        let est = EnergyEstimator::new(spec, 1.0, NoiseModel::paper_noise(), Sampling::Shots(s)).unwrap();
        let draws: Vec<(f64, f64)> = (0..reps)
            .map(|seed| {
                let e = est.estimate(&theta, &mut RngStreams::new(1000 + seed)).unwrap();
                (e.value, e.std_error)
            })
            .collect();
        let mean = draws.iter().map(|d| d.0).sum::<f64>() / reps as f64;
        let var = draws.iter().map(|d| (d.0 - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        spread.push(var.sqrt().ln());
        reported.push((draws.iter().map(|d| d.1).sum::<f64>() / reps as f64).ln());
    }
    let xs: Vec<f64> = shots.iter().map(|&s| (s as f64).ln()).collect();
    let (empirical, stated) = (slope(&xs, &spread), slope(&xs, &reported));
    outcome(
        (empirical + 0.5).abs() <= 0.05 && (stated + 0.5).abs() <= 0.05,
        format!("slope {empirical:.4} from the spread of {reps} repeats, {stated:.4} from reported errors"),
    )
}

// synthesis

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    let mut max_cz = [0usize; 3];
    for width in 1..=3 {
        for _ in 0..100 {
            let raw: Vec<f64> = (0..1 << width).map(|_| rng.random_range(-1.0..1.0)).collect();
            let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
            let target = StateVector::from_real(width, &raw.iter().map(|x| x / norm).collect::<Vec<_>>()).unwrap();
            let c: Circuit = synthesize_circuit(&target).unwrap();
            max_cz[width - 1] = max_cz[width - 1].max(c.cz_count());
            let got = run_circuit(&c, &StateVector::zero(width).unwrap()).unwrap();
            worst = worst.max(1.0 - got.fidelity(&target));
        }
    }
    outcome(
        worst <= 1e-12 && max_cz[0] == 0 && max_cz[1] <= 1 && max_cz[2] <= 3,
        format!("worst infidelity {worst:.1e}, max CZ counts {max_cz:?}"),
    )
}

// hardware

fn round_sig(x: f64, digits: i32) -> f64 {
    let scale = 10f64.powi(digits - 1 - x.abs().log10().floor() as i32);
    (x * scale).round() / scale
}

fn criterion_9() -> Outcome {
    let spec = TransportSpec::reference();
    let a = max_acceleration(&spec);
    let h = heating_estimates(&spec);
    let a_ok = (round_sig(a, 2) - 8.7e-4).abs() < 1e-12;
    let cj_ok = (h.constant_jerk / 0.053 - 1.0).abs() <= 0.05;
    let mj_ok = (h.minimal_jerk / 5.7e-4 - 1.0).abs() <= 0.05;

    let noise = NoiseModel::new(0.977, 0.025).unwrap();
    let injected = 1.0 - noise.cz_error_probability();
    let lengths: Vec<usize> = (0..=10).map(|k| 2 * k).collect();
    let data = simulate_cz_rb(&noise, &lengths, 50, 400, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
    let (m, pop): (Vec<f64>, Vec<f64>) = data.iter().map(|&(m, p)| (m as f64, p)).unzip();
    let fit = rb_fit(&m, &pop, 4).unwrap();
    let sigmas = (fit.decay.p - injected).abs() / fit.p_std_error;
    let rb_ok = sigmas <= 2.0;
    outcome(
        a_ok && cj_ok && mj_ok && rb_ok,
        format!(
            "a_max {a:.4e}, dn_cj {:.4}, dn_mj {:.3e}; RB p {:.5}({:.5}) vs injected {injected:.5}, {sigmas:.2} sigma",
            h.constant_jerk, h.minimal_jerk, fit.decay.p, fit.p_std_error
        ),
    )
}

// spectral consistency

fn criterion_10() -> Outcome {
    // a residual ‖Hψ − λψ‖ ≤ ε for unit ψ puts an eigenvalue of H within ε of λ
    let mut worst: f64 = 0.0;
    for n in 2..=12 {
        let eig = symmetric_eigen(&build_gray_hamiltonian(n, 1.0).unwrap().block()).unwrap();
        let h = build_individual_hamiltonian(n, 1.0).unwrap();
        for (k, &lambda) in eig.values.iter().enumerate() {
            let psi = dicke_embedding(n, &eig.vector(k)).unwrap();
            let hp = h.apply(&psi).unwrap();
            let r = hp.iter().zip(&psi).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt();
            worst = worst.max(r);
        }
    }
    // and directly against dense diagonalization where that is cheap
    let mut worst_dense: f64 = 0.0;
    for n in 2..=7 {
        let gray = symmetric_eigen(&build_gray_hamiltonian(n, 1.0).unwrap().block()).unwrap().values;
        let full = build_individual_hamiltonian(n, 1.0).unwrap().to_dense().unwrap().eigenvalues().unwrap();
        for g in gray {
            worst_dense = worst_dense.max(full.iter().map(|f| (f - g).abs()).fold(f64::INFINITY, f64::min));
        }
    }
    outcome(
        worst <= 1e-8 && worst_dense <= 1e-8,
        format!("largest residual {worst:.1e} for N=2..12, largest dense gap {worst_dense:.1e} for N=2..7"),
    )
}

fn run(results: &mut Vec<(&'static str, Outcome, Duration)>, id: &'static str, budget: u64, f: impl FnOnce() -> Outcome) {
    let start = Instant::now();
    let o = f();
    let elapsed = start.elapsed();
    results.push((id, within_budget(o, elapsed, Duration::from_secs(budget)), elapsed));
}

fn main() -> ExitCode {
    let mut results = Vec::new();
    run(&mut results, "1", 1, criterion_1);
    run(&mut results, "2", 1, criterion_2);
    run(&mut results, "3", 60, criterion_3);
    run(&mut results, "4a", 30, criterion_4a);
    run(&mut results, "4b", 30, criterion_4b);
    run(&mut results, "5", 30, criterion_5);
    let start = Instant::now();
    let (six_a, six_b) = criterion_6();
    let elapsed = start.elapsed();
    let budget = Duration::from_secs(300);
    results.push(("6a", within_budget(six_a, elapsed, budget), elapsed));
    results.push(("6b", within_budget(six_b, elapsed, budget), elapsed));
    run(&mut results, "7", 120, criterion_7);
    run(&mut results, "8", 10, criterion_8);
    run(&mut results, "9", 10, criterion_9);
    run(&mut results, "10", 60, criterion_10);

    let mut unexpected = Vec::new();
    for (id, o, elapsed) in &results {
        let known = KNOWN_FAILURES.contains(id);
        let tag = match (o.pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        println!("criterion {id:<3} {tag} [{:.2} s] {}", elapsed.as_secs_f64(), o.detail);
        if !o.pass && !known {
            unexpected.push(*id);
        }
    }
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected failures: {}", unexpected.join(", "));
        ExitCode::FAILURE
    }
}
