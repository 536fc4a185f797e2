use std::fmt;
use std::str::FromStr;

use super::grid::TimeGrid;
use super::trajectory::HamiltonianTrajectory;
use crate::error::{Error, Result};
use crate::linalg::operators::check_same_dim;
use crate::linalg::{conjugate, matrix_exponential, DensityMatrix, HermitianOperator, UnitaryOperator};

/// How `e^{i∫H_s(t)dt}` is evaluated on a sliced trajectory.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Ordering {
    /// `e^{iH_M dt} ··· e^{iH_1 dt}`, later slices to the left.
    TimeOrdered,
    /// `e^{i Σ_m H_m dt}`.
    NaiveSum,
}

impl fmt::Display for Ordering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Ordering::TimeOrdered => "time-ordered",
            Ordering::NaiveSum => "naive-sum",
        })
    }
}

impl FromStr for Ordering {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "time-ordered" => Ok(Ordering::TimeOrdered),
            "naive-sum" => Ok(Ordering::NaiveSum),
            other => Err(Error::config(format!("unknown channel ordering {other:?}"))),
        }
    }
}

/// Which side of the channel acts on a state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// `K† ρ K`, the Schrödinger-picture adjoint of `A ↦ K A K†`.
    Forward,
    /// `K ρ K†`.
    Reverse,
}

/// The unitary `K_l(τ)` built from trajectory `l`.
#[derive(Clone, Debug)]
pub struct ChannelOperator {
    k: UnitaryOperator,
    index: u64,
    grid: TimeGrid,
    ordering: Ordering,
}

impl ChannelOperator {
    pub fn unitary(&self) -> &UnitaryOperator {
        &self.k
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn ordering(&self) -> Ordering {
        self.ordering
    }

    pub fn dim(&self) -> usize {
        self.k.dim()
    }

    /// Unitarity budget `1e-10 · √M_slices`.
    pub fn unitarity_tolerance(slices: usize) -> f64 {
        1e-10 * (slices as f64).sqrt()
    }
}

pub fn channel_from_trajectory(traj: &HamiltonianTrajectory, ordering: Ordering) -> Result<ChannelOperator> {
    let grid = *traj.grid();
    let dt = grid.dt();
    let k = match ordering {
        Ordering::TimeOrdered => {
            let mut slices = traj.slices().iter();
            let first = slices.next().expect("trajectory has at least one slice");
            let mut k = matrix_exponential(first, dt)?;
            for h in slices {
                k = matrix_exponential(h, dt)?.compose(&k)?;
            }
            k
        }
        Ordering::NaiveSum => {
            let mut sum = traj.slices()[0].matrix().clone();
            for h in &traj.slices()[1..] {
                sum.axpy(1.0, h.matrix());
            }
            matrix_exponential(&HermitianOperator::from_trusted(sum), dt)?
        }
    };
    let tol = ChannelOperator::unitarity_tolerance(grid.slices());
    let defect = k.defect();
    if defect > tol {
        return Err(Error::Numerical(format!(
            "channel for trajectory {} lost unitarity: {defect:e} > {tol:e}",
            traj.index()
        )));
    }
    Ok(ChannelOperator { k, index: traj.index(), grid, ordering })
}

/// `A_s(τ) = K A_s K†`.
pub fn dress_operator(a: &HermitianOperator, channel: &ChannelOperator) -> Result<HermitianOperator> {
    check_same_dim(a.dim(), channel.dim(), "dress_operator")?;
    Ok(HermitianOperator::from_trusted(conjugate(a.matrix(), &channel.k)?))
}

pub fn dress_state(rho: &DensityMatrix, channel: &ChannelOperator, direction: Direction) -> Result<DensityMatrix> {
    check_same_dim(rho.dim(), channel.dim(), "dress_state")?;
    let u = match direction {
        Direction::Forward => channel.k.adjoint(),
        Direction::Reverse => channel.k.clone(),
    };
    Ok(DensityMatrix::from_trusted(conjugate(rho.matrix(), &u)?))
}
