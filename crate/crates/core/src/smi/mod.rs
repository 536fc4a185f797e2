//! Stochastic trajectories of the system Hamiltonian, the per-trajectory
//! channel `K_l(τ) = e^{i∫H_s(t)dt}`, operator/state dressing and ensemble
//! averages.

pub mod average;
pub mod channel;
pub mod ensemble;
pub mod grid;
pub mod rng;
pub mod trajectory;

pub use average::{
    ensemble_average_operator, ensemble_average_state, ensemble_average_state_in_basis, fold_channels,
    EnsembleSummary,
};
pub use channel::{channel_from_trajectory, dress_operator, dress_state, ChannelOperator, Direction, Ordering};
pub use ensemble::{EnsembleKind, EnsembleSpec};
pub use grid::TimeGrid;
pub use trajectory::{complement_trajectory, sample_trajectory, HamiltonianTrajectory};
