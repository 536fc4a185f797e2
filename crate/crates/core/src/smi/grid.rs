use crate::error::{Error, Result};

/// Uniform partition of `[0, τ]` into `slices` intervals of width `τ / slices`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    tau: f64,
    slices: usize,
}

impl TimeGrid {
    pub fn new(tau: f64, slices: usize) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::config(format!("grid.tau must be finite and > 0, got {tau}")));
        }
        if slices == 0 {
            return Err(Error::config("grid.slices must be >= 1"));
        }
        Ok(Self { tau, slices })
    }

    /// `round(tau · per_unit_time)` slices, at least one.
    pub fn with_density(tau: f64, per_unit_time: usize) -> Result<Self> {
        if per_unit_time == 0 {
            return Err(Error::config("slices per unit time must be >= 1"));
        }
        let slices = ((tau * per_unit_time as f64).round() as usize).max(1);
        Self::new(tau, slices)
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn slices(&self) -> usize {
        self.slices
    }

    pub fn dt(&self) -> f64 {
        self.tau / self.slices as f64
    }

    /// Left endpoint of slice `m`.
    pub fn time(&self, m: usize) -> f64 {
        self.dt() * m as f64
    }
}
