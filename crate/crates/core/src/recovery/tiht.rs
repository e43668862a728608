use std::sync::Arc;

use log::debug;

use super::config::{InitRule, RecoveryConfig, StepRule};
use super::report::{RecoveryReport, Termination};
use super::{hard_threshold, norm, residual, LowRank};
use crate::error::{Error, Result};
use crate::manifold::TangentSpace;
use crate::measurement::LinearMap;
use crate::tensor::DenseTensor;

/// Tensor iterative hard thresholding from `u⁰ = H_r(A*b)`.
pub fn tiht<A: LinearMap + ?Sized>(a: &A, b: &[f64], config: &RecoveryConfig) -> Result<(LowRank, RecoveryReport)> {
    tiht_with(a, b, config, None, None)
}

/// TIHT with an optional starting point (required for [`InitRule::Given`]) and
/// an optional true tensor used only for error and condition monitoring.
pub fn tiht_with<A: LinearMap + ?Sized>(
    a: &A,
    b: &[f64],
    config: &RecoveryConfig,
    init: Option<&DenseTensor>,
    truth: Option<&DenseTensor>,
) -> Result<(LowRank, RecoveryReport)> {
    config.validate()?;
    config.rank.validate(a.shape())?;
    let start = match (config.init_rule, init) {
        (InitRule::Given, Some(u0)) => u0.clone(),
        (InitRule::Given, None) => {
            return Err(Error::InvalidArgument("init rule 'given' needs a starting tensor".into()))
        }
        (InitRule::Adjoint, _) => a.adjoint(b)?,
    };
    let mut u = hard_threshold(&start, &config.rank)?;
    let mut dense = u.to_dense();
    let mut report = RecoveryReport::new("tiht", config, truth.is_some());
    let b_norm = norm(b);
    let mut res = residual(a, &dense, b)?;
    report.residual_history.push(norm(&res));
    if let (Some(e), Some(t)) = (report.error_history.as_mut(), truth) {
        e.push(dense.distance(t)?);
    }

    let termination = loop {
        let r_norm = *report.residual_history.last().expect("seeded above");
        if r_norm <= config.residual_tol * b_norm {
            break Termination::Converged;
        }
        if r_norm > config.divergence_factor * b_norm {
            break Termination::Diverged;
        }
        if report.iterations == config.max_iter {
            break Termination::MaxIterations;
        }
        let g = a.adjoint(&res)?;
        let alpha = step_size(a, config.step_rule, &u, &g)?;
        let mut y = dense.clone();
        y.axpy(alpha, &g)?;
        u = hard_threshold(&y, &config.rank)?;
        debug_assert!(u.ranks().values.iter().zip(&config.rank.values).all(|(x, r)| x <= r));
        dense = u.to_dense();
        report.iterations += 1;
        report.step_sizes.push(alpha);
        if let Some(t) = truth {
            let n = report.iterations;
            let (thr, tru) = (dense.distance(&y)?, t.distance(&y)?);
            report.cond_a.as_mut().expect("set with truth").record(n, thr, tru);
            report.error_history.as_mut().expect("set with truth").push(dense.distance(t)?);
        }
        res = residual(a, &dense, b)?;
        report.residual_history.push(norm(&res));
    };
    debug!(
        "tiht: {termination:?} after {} iterations, residual {:.3e}",
        report.iterations,
        report.final_residual()
    );
    report.finish(termination);
    Ok((u, report))
}

/// One TIHT update from `u`: returns `(y, H_r(y))` with
/// `y = u + α A*(b − Au)`.
pub fn tiht_step<A: LinearMap + ?Sized>(
    a: &A,
    b: &[f64],
    u: &LowRank,
    config: &RecoveryConfig,
) -> Result<(DenseTensor, LowRank)> {
    let dense = u.to_dense();
    let g = a.adjoint(&residual(a, &dense, b)?)?;
    let alpha = step_size(a, config.step_rule, u, &g)?;
    let mut y = dense;
    y.axpy(alpha, &g)?;
    let next = hard_threshold(&y, &config.rank)?;
    Ok((y, next))
}

/// `‖p‖² / ‖A p‖²` with `p = g` or its tangent projection at `u`; falls back
/// to `α = 1` when either norm vanishes.
pub(crate) fn step_size<A: LinearMap + ?Sized>(a: &A, rule: StepRule, u: &LowRank, g: &DenseTensor) -> Result<f64> {
    let p = match rule {
        StepRule::Fixed(alpha) => return Ok(alpha),
        StepRule::Steepest => g.clone(),
        StepRule::SteepestTangent => match u {
            LowRank::Tucker(t) => t.project_tangent(g)?,
            LowRank::Tt(t) => match TangentSpace::at(t) {
                Ok(space) => Arc::new(space).project(g)?.to_dense(),
                // rank-deficient iterate: no tangent space, use the full gradient
                Err(Error::SingularPoint { .. }) => g.clone(),
                Err(e) => return Err(e),
            },
        },
    };
    Ok(steepest(a, &p)?.unwrap_or(1.0))
}

pub(crate) fn steepest<A: LinearMap + ?Sized>(a: &A, p: &DenseTensor) -> Result<Option<f64>> {
    let num = p.norm_squared();
    let ap = a.apply(p)?;
    let den: f64 = ap.iter().map(|x| x * x).sum();
    Ok((num > 0.0 && den > 0.0 && (num / den).is_finite()).then(|| num / den))
}
