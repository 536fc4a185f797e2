//! Stochastic operator dressing on dense matrices.
//!
//! An observable `A_s` is dressed by the unitary `K(τ) = e^{i∫H_s(t)dt}` of a
//! randomly sampled, non-conserved system Hamiltonian `H_s(t)`; averaging the
//! dressing over many trajectories dephases superpositions of `A_s`
//! eigenstates while leaving the outcome distribution `tr(P_i ρ)` intact.
//!
//! * [`linalg`]: complex matrices, spectral decompositions, exponentials,
//!   tensor products and partial traces.
//! * [`smi`]: trajectory ensembles, channel construction and averaging.
//! * [`lab`]: the stability protocol, decoherence metrics and decay curves.
//! * [`einselection`]: the envariance / coarse-graining baseline with exact
//!   rational probabilities.
//! * [`pw`]: conditional expectations on system ⊗ observer and the
//!   zero-interaction consistency check.
//! * [`experiment`]: configuration parsing, runs, sweeps, reports and the
//!   verification suite.

pub mod einselection;
pub mod error;
pub mod experiment;
pub mod lab;
pub mod linalg;
pub mod pw;
pub mod smi;

pub use error::{Error, Result};
