//! Classical simulator and VQE workbench for the Lipkin-Meshkov-Glick model.
//!
//! The crate is `no_std` (it needs `alloc`) and covers the whole numerical
//! pipeline: Hamiltonians in the individual-spin and Gray-code encodings,
//! ansatz states and their circuits, a noisy statevector simulator, the VQE
//! driver with its classical optimizers, zero-noise extrapolation, and the
//! hardware calculators used to calibrate the noise model.
//!
//! Conventions shared by every module:
//!
//! * qubit 0 is the leftmost symbol of a Pauli string and the most
//!   significant bit of a basis index;
//! * energies are dimensionless (level spacing set to one);
//! * lengths are in μm, times in μs and angular frequencies in rad/μs.
//!
//! ```
//! use lmg_core::ansatz::AnsatzSpec;
//! use lmg_core::simulator::NoiseModel;
//! use lmg_core::vqe::{nelder_mead, EnergyEstimator, OptimizerConfig, Sampling, VqeObjective};
//!
//! # fn main() -> lmg_core::error::Result<()> {
//! let spec = AnsatzSpec::gray(7)?;
//! let est = EnergyEstimator::new(spec, 1.0, NoiseModel::paper_noise(), Sampling::Shots(400))?;
//! let mut obj = VqeObjective::new(est, 42);
//! let trace = nelder_mead(&mut obj, &[0.0; 3], &OptimizerConfig::default())?;
//! assert_eq!(trace.best_theta.len(), 3);
//! # Ok(())
//! # }
//! ```

#![no_std]
// `num_traits::Float` supplies the float methods; whenever std is linked into
// the build the inherent methods shadow it and the import looks unused.
#![allow(unused_imports)]
#![warn(missing_debug_implementations)]

extern crate alloc;

pub mod ansatz;
pub mod circuit;
pub mod error;
pub mod graycode;
pub mod hamiltonian;
pub mod hardware;
pub mod linalg;
pub mod pauli;
pub mod simulator;
pub mod vqe;
pub mod zne;

pub use error::{Error, Result};

/// Percentage fractional difference `|E_theory − E| / |E_theory| × 100`.
pub fn pfd(theory: f64, measured: f64) -> f64 {
    use num_traits::Float;
    (theory - measured).abs() / theory.abs() * 100.0
}
