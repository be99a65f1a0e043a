use alloc::format;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{FrequencyStructure, ParameterRanges};

/// Uniform time grid `t_k = k Δt`, `k = 0..=num_steps`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub dt: f64,
    pub horizon: f64,
    pub num_steps: usize,
}

impl TimeGrid {
    pub fn new(dt: f64, horizon: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidConfig { key: "problem.dt".into(), reason: format!("must be positive, got {dt}") });
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidConfig { key: "problem.horizon".into(), reason: format!("must be positive, got {horizon}") });
        }
        let ratio = horizon / dt;
        let steps = libm::round(ratio);
        if steps < 1.0 || (ratio - steps).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::InvalidConfig {
                key: "problem.horizon".into(),
                reason: format!("horizon {horizon} is not an integer multiple of dt {dt}"),
            });
        }
        Ok(Self { dt, horizon, num_steps: steps as usize })
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemConfig {
    pub num_intervals: usize,
    pub dt: f64,
    pub horizon: f64,
    pub penalty: f64,
    /// Newton stops once `‖δ‖² ≤ newton_tol` (Euclidean norm of the coefficients).
    pub newton_tol: f64,
    pub newton_cap: usize,
    pub freq: FrequencyStructure,
    pub ranges: ParameterRanges,
    pub seed: u64,
}

pub const DEFAULT_PENALTY: f64 = 1e7;
pub const DEFAULT_NEWTON_TOL: f64 = 3e-16;
pub const DEFAULT_NEWTON_CAP: usize = 50;

impl ProblemConfig {
    pub fn new(num_intervals: usize, dt: f64, horizon: f64, freq: FrequencyStructure, ranges: ParameterRanges) -> Self {
        Self {
            num_intervals,
            dt,
            horizon,
            penalty: DEFAULT_PENALTY,
            newton_tol: DEFAULT_NEWTON_TOL,
            newton_cap: DEFAULT_NEWTON_CAP,
            freq,
            ranges,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_intervals < 2 {
            return Err(Error::InvalidMesh { num_intervals: self.num_intervals });
        }
        TimeGrid::new(self.dt, self.horizon)?;
        if !(self.penalty > 0.0) || !self.penalty.is_finite() {
            return Err(Error::InvalidConfig { key: "problem.penalty".into(), reason: format!("must be positive, got {}", self.penalty) });
        }
        if !(self.newton_tol > 0.0) {
            return Err(Error::InvalidConfig { key: "problem.newton_tol".into(), reason: "must be positive".into() });
        }
        if self.newton_cap == 0 {
            return Err(Error::InvalidConfig { key: "problem.newton_cap".into(), reason: "must be at least 1".into() });
        }
        self.freq.validate()?;
        self.ranges.validate(&self.freq)
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.dt, self.horizon)
    }

    pub fn num_steps(&self) -> usize {
        libm::round(self.horizon / self.dt) as usize
    }
}
