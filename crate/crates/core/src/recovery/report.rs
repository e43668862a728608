use serde::{Deserialize, Serialize};

use super::config::RecoveryConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Residual tolerance reached.
    Converged,
    MaxIterations,
    Diverged,
    /// ALS: a sweep no longer decreased `J` noticeably.
    Stalled,
}

/// Monitoring of `‖uⁿ⁺¹ − yⁿ⁺¹‖ ≤ ‖u − yⁿ⁺¹‖` against the true `u`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CondAStats {
    pub checked: usize,
    pub violations: usize,
    pub first_violation: Option<usize>,
}

impl CondAStats {
    pub(crate) fn record(&mut self, iteration: usize, thresholded: f64, truth: f64) {
        self.checked += 1;
        // relative slack for round-off once the iterate has reached the truth
        if thresholded > truth * (1.0 + 1e-12) + 1e-300 {
            self.violations += 1;
            self.first_violation.get_or_insert(iteration);
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub algorithm: String,
    pub converged: bool,
    pub termination: Termination,
    /// Number of updates (TIHT/RGI iterations, ALS sweeps).
    pub iterations: usize,
    /// `‖Auⁿ − b‖` for `n = 0..=iterations`.
    pub residual_history: Vec<f64>,
    /// `‖uⁿ − u‖` when the true tensor was supplied.
    pub error_history: Option<Vec<f64>>,
    pub step_sizes: Vec<f64>,
    pub cond_a: Option<CondAStats>,
    /// Geometric rate fitted to the tail of the error history (residual
    /// history when no truth was supplied).
    pub rate_estimate: Option<f64>,
    /// ALS: `J` after every micro-step, starting with `J` at the initial point.
    pub micro_objective: Vec<f64>,
    /// RGI: number of singular-point repairs.
    pub repairs: usize,
    pub config: RecoveryConfig,
}

impl RecoveryReport {
    pub(crate) fn new(algorithm: &str, config: &RecoveryConfig, with_truth: bool) -> Self {
        RecoveryReport {
            algorithm: algorithm.into(),
            converged: false,
            termination: Termination::MaxIterations,
            iterations: 0,
            residual_history: Vec::new(),
            error_history: with_truth.then(Vec::new),
            step_sizes: Vec::new(),
            cond_a: with_truth.then(CondAStats::default),
            rate_estimate: None,
            micro_objective: Vec::new(),
            repairs: 0,
            config: config.clone(),
        }
    }

    pub(crate) fn finish(&mut self, termination: Termination) {
        self.termination = termination;
        self.converged = termination == Termination::Converged;
        self.rate_estimate = match &self.error_history {
            Some(e) => super::tail_rate(e),
            None => super::tail_rate(&self.residual_history),
        };
    }

    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(f64::NAN)
    }
}
