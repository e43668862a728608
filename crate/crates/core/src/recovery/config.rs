use serde::{Deserialize, Serialize};

use crate::decomposition::{Format, RankTuple};
use crate::error::{Error, Result};

/// Step size `α_n` in `y = uⁿ + α_n A*(b − Auⁿ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule", content = "alpha")]
pub enum StepRule {
    Fixed(f64),
    /// `α_n = ‖g‖² / ‖A g‖²` with `g = A*(b − Auⁿ)` for TIHT and its tangent
    /// projection `P_{T_{uⁿ}} g` for RGI.
    Steepest,
    /// `α_n = ‖P g‖² / ‖A P g‖²` with `P` the orthogonal projection onto the
    /// tangent space at `uⁿ`, for TIHT as well. Longer steps than `Steepest`:
    /// far fewer iterations, but it also succeeds below the usual phase
    /// transition more often.
    SteepestTangent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitRule {
    /// `u⁰ = H_r(A*b)`.
    Adjoint,
    /// Caller supplies `u⁰`.
    Given,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryConfig {
    pub format: Format,
    pub rank: RankTuple,
    pub max_iter: usize,
    /// Stop once `‖Aû − b‖ ≤ residual_tol·‖b‖`.
    pub residual_tol: f64,
    /// Abort as diverged once `‖Aû − b‖ > divergence_factor·‖b‖`.
    pub divergence_factor: f64,
    pub step_rule: StepRule,
    pub init_rule: InitRule,
    /// ALS stops when a sweep lowers `J` by less than this fraction.
    pub als_rel_decrease: f64,
    /// Drives the random perturbations used to repair singular points.
    pub seed: u64,
}

impl RecoveryConfig {
    pub fn new(rank: RankTuple) -> Self {
        RecoveryConfig {
            format: rank.format,
            rank,
            max_iter: 5000,
            residual_tol: 1e-6,
            divergence_factor: 1e3,
            step_rule: StepRule::Steepest,
            init_rule: InitRule::Adjoint,
            als_rel_decrease: 1e-12,
            seed: 0,
        }
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_step(mut self, step_rule: StepRule) -> Self {
        self.step_rule = step_rule;
        self
    }

    pub fn with_tol(mut self, residual_tol: f64) -> Self {
        self.residual_tol = residual_tol;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be >= 1".into()));
        }
        if !(self.residual_tol > 0.0) || !(self.divergence_factor > 0.0) || !(self.als_rel_decrease > 0.0) {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        if self.format != self.rank.format {
            return Err(Error::InvalidArgument(format!(
                "format {} does not match the {} rank tuple",
                self.format, self.rank.format
            )));
        }
        if let StepRule::Fixed(alpha) = self.step_rule {
            if !(alpha > 0.0) || !alpha.is_finite() {
                return Err(Error::InvalidArgument(format!("step size {alpha} must be positive")));
            }
        }
        Ok(())
    }
}
