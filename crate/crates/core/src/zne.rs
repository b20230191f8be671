//! Zero-noise extrapolation by CZ identity insertion.
//!
//! Folding replaces a CZ by `2n+1` copies of itself, which is the identity
//! times the original gate but multiplies its noise. Energies measured at
//! several foldings are fitted by a straight line in the total CZ count and
//! read off at zero CZs.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate};
use crate::error::{domain, Error, Result};
use crate::linalg::{weighted_least_squares, Matrix};
use crate::simulator::RngStreams;
use crate::vqe::{EnergyEstimate, EnergyEstimator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FoldMethod {
    /// Fold every CZ at once.
    Fiim,
    /// Fold one CZ location per circuit and average over locations.
    Siim,
}

impl fmt::Display for FoldMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FoldMethod::Fiim => "fiim",
            FoldMethod::Siim => "siim",
        })
    }
}

impl FromStr for FoldMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fiim" => Ok(FoldMethod::Fiim),
            "siim" => Ok(FoldMethod::Siim),
            other => Err(domain!("unknown fold method {other:?}")),
        }
    }
}

/// Every CZ becomes `2n+1` consecutive CZs on the same pair.
pub fn fiim_fold(c: &Circuit, n: usize) -> Circuit {
    let mut gates = Vec::with_capacity(c.len() + 2 * n * c.cz_count());
    for &g in c.gates() {
        let copies = if g.is_cz() { 2 * n + 1 } else { 1 };
        gates.extend(core::iter::repeat_n(g, copies));
    }
    Circuit::from_gates(c.width(), gates).expect("folding keeps gates valid")
}

/// One circuit per CZ location; variant `k` adds `2n` copies of the `k`-th CZ.
pub fn siim_variants(c: &Circuit, n: usize) -> Result<Vec<Circuit>> {
    let locations: Vec<usize> = c.gates().iter().enumerate().filter(|(_, g)| g.is_cz()).map(|(i, _)| i).collect();
    if locations.is_empty() {
        return Err(domain!("identity insertion needs at least one CZ"));
    }
    Ok(locations
        .iter()
        .map(|&loc| {
            let mut gates: Vec<Gate> = Vec::with_capacity(c.len() + 2 * n);
            for (i, &g) in c.gates().iter().enumerate() {
                let copies = if i == loc { 2 * n + 1 } else { 1 };
                gates.extend(core::iter::repeat_n(g, copies));
            }
            Circuit::from_gates(c.width(), gates).expect("folding keeps gates valid")
        })
        .collect())
}

/// Averaged energy at one insertion count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZnePoint {
    pub insertions: usize,
    /// `2n+1`.
    pub r: usize,
    /// CZ count of each evaluated circuit; the regression abscissa.
    pub cz_count: usize,
    pub energy: f64,
    pub std_error: f64,
    /// One estimate per evaluated circuit (one for FIIM, one per CZ location for SIIM).
    pub samples: Vec<EnergyEstimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZneSeries {
    pub method: FoldMethod,
    pub points: Vec<ZnePoint>,
}

impl ZneSeries {
    /// The `n = 0` point, if measured.
    pub fn unmitigated(&self) -> Option<&ZnePoint> {
        self.points.iter().find(|p| p.insertions == 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitWeighting {
    /// Weights `1/σ²`; falls back to equal weights when any σ is zero.
    Weighted,
    Ordinary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    /// Energy at zero CZs.
    pub intercept: f64,
    pub intercept_std_error: f64,
    /// Energy change per CZ.
    pub slope: f64,
    /// `χ²/(points − 2)`; `None` for two points or without per-point errors.
    pub reduced_chi_square: Option<f64>,
}

/// Straight line through `(cz_count, energy)`, extrapolated to zero CZs.
///
/// The intercept error is propagated from the per-point standard errors for
/// a weighted fit, and from the residual scatter for an ordinary fit.
pub fn extrapolate_linear(series: &ZneSeries, weighting: FitWeighting) -> Result<LinearFit> {
    let pts = &series.points;
    if pts.len() < 2 {
        return Err(domain!("extrapolation needs at least 2 points, got {}", pts.len()));
    }
    for (i, a) in pts.iter().enumerate() {
        if pts[..i].iter().any(|b| b.cz_count == a.cz_count) {
            return Err(domain!("repeated CZ count {} in series", a.cz_count));
        }
    }
    let weighted = weighting == FitWeighting::Weighted && pts.iter().all(|p| p.std_error > 0.0);
    let weights: Vec<f64> =
        pts.iter().map(|p| if weighted { 1.0 / (p.std_error * p.std_error) } else { 1.0 }).collect();
    let mut design = Matrix::zeros(pts.len(), 2);
    for (i, p) in pts.iter().enumerate() {
        design[(i, 0)] = 1.0;
        design[(i, 1)] = p.cz_count as f64;
    }
    let y: Vec<f64> = pts.iter().map(|p| p.energy).collect();
    let (coef, c) = weighted_least_squares(&design, &y, &weights).ok_or_else(|| Error::Fit("singular ZNE design".into()))?;
    let residuals: Vec<f64> = pts.iter().zip(&y).map(|(p, e)| e - coef[0] - coef[1] * p.cz_count as f64).collect();
    let dof = pts.len() - 2;
    let chi2: f64 = residuals.iter().zip(&weights).map(|(r, w)| w * r * r).sum();
    let (intercept_std_error, reduced_chi_square) = if weighted {
        let var: f64 = (0..pts.len()).map(|i| c[(0, i)].powi(2) * pts[i].std_error.powi(2)).sum();
        (var.sqrt(), (dof > 0).then(|| chi2 / dof as f64))
    } else {
        let s2 = if dof > 0 { chi2 / dof as f64 } else { 0.0 };
        let var: f64 = (0..pts.len()).map(|i| c[(0, i)].powi(2) * s2).sum();
        (var.sqrt(), None)
    };
    Ok(LinearFit { intercept: coef[0], intercept_std_error, slope: coef[1], reduced_chi_square })
}

/// Measures `prep` folded by each entry of `insertions`. SIIM points average
/// the location variants before any fitting.
pub fn run_zne(
    estimator: &EnergyEstimator,
    prep: &Circuit,
    method: FoldMethod,
    insertions: &[usize],
    streams: &mut RngStreams,
) -> Result<ZneSeries> {
    if insertions.is_empty() {
        return Err(domain!("no insertion counts given"));
    }
    let mut points = Vec::with_capacity(insertions.len());
    for &n in insertions {
        let circuits = match method {
            FoldMethod::Fiim => alloc::vec![fiim_fold(prep, n)],
            FoldMethod::Siim => siim_variants(prep, n)?,
        };
        let samples = circuits.iter().map(|c| estimator.estimate_circuit(c, streams)).collect::<Result<Vec<_>>>()?;
        let k = samples.len() as f64;
        let energy = samples.iter().map(|s| s.value).sum::<f64>() / k;
        let std_error = samples.iter().map(|s| s.std_error * s.std_error).sum::<f64>().sqrt() / k;
        points.push(ZnePoint { insertions: n, r: 2 * n + 1, cz_count: circuits[0].cz_count(), energy, std_error, samples });
    }
    Ok(ZneSeries { method, points })
}
