//! Projected gradient ascent over the product of simplices, rounding, and
//! the restart loop.

mod pga;
mod projection;
mod solve;

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdd::VariableOrder;

pub use pga::{auto_step_size, pga, PgaOutcome, TraceEntry};
pub use projection::{gradient_mapping, project_point, project_simplex};
pub use solve::{cls_solve, cls_solve_compiled, random_start, round, RestartSummary, SolveReport};

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum StepSize {
    /// `1 / (W * sqrt(N))` with `W` the total weight and `N` the number of
    /// probability entries.
    Auto,
    Fixed(f64),
    /// Backtracking line search on the quadratic lower model, starting each
    /// step from twice the previously accepted step.
    Backtracking,
}

impl std::str::FromStr for StepSize {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(StepSize::Auto);
        }
        if s.eq_ignore_ascii_case("backtracking") {
            return Ok(StepSize::Backtracking);
        }
        match s.parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(StepSize::Fixed(v)),
            _ => Err(Error::Config(format!(
                "step size must be `auto`, `backtracking` or a positive number, got `{s}`"
            ))),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RoundingMode {
    /// Sample `x_i = j` with probability `p[i][j]`.
    Randomized,
    /// Most probable value, lowest value on ties.
    Argmax,
}

impl std::str::FromStr for RoundingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "randomized" => Ok(RoundingMode::Randomized),
            "argmax" => Ok(RoundingMode::Argmax),
            _ => Err(Error::Config(format!(
                "rounding must be `randomized` or `argmax`, got `{s}`"
            ))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub step_size: StepSize,
    /// Gradient steps per restart.
    pub max_iter: usize,
    pub restarts: usize,
    /// Stop a restart once `||g(P)||^2 <= eps`.
    pub eps: f64,
    pub rounding: RoundingMode,
    /// Rounded assignments drawn per local optimum (randomized mode).
    pub samples: usize,
    pub seed: u64,
    pub time_budget: Duration,
    /// Omit wall-clock fields so reports are reproducible byte for byte.
    pub deterministic: bool,
    pub batch: bool,
    pub order: VariableOrder,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            step_size: StepSize::Auto,
            max_iter: 10_000,
            restarts: 32,
            eps: 1e-6,
            rounding: RoundingMode::Randomized,
            samples: 16,
            seed: 0,
            time_budget: Duration::from_secs(1000),
            deterministic: false,
            batch: false,
            order: VariableOrder::Instance,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if let StepSize::Fixed(v) = self.step_size {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("step size {v} must be positive")));
            }
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        if self.restarts == 0 {
            return Err(Error::Config("restarts must be at least 1".into()));
        }
        if self.eps.is_nan() || self.eps <= 0.0 {
            return Err(Error::Config(format!("eps {} must be positive", self.eps)));
        }
        if self.samples == 0 {
            return Err(Error::Config("samples must be at least 1".into()));
        }
        if self.time_budget.is_zero() {
            return Err(Error::Config("time budget must be positive".into()));
        }
        Ok(())
    }
}
