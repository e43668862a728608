use std::sync::Arc;

use log::debug;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{InitRule, RecoveryConfig, StepRule};
use super::report::{RecoveryReport, Termination};
use super::tiht::steepest;
use super::{norm, residual};
use crate::decomposition::{tt_svd, tt_truncate, Format, RankTuple, TtTarget, TtTensor};
use crate::error::{Error, Result};
use crate::manifold::{retract, TangentSpace};
use crate::measurement::LinearMap;
use crate::tensor::DenseTensor;

/// Riemannian gradient iteration on the manifold of TT tensors of rank `r`.
pub fn rgi<A: LinearMap + ?Sized>(a: &A, b: &[f64], config: &RecoveryConfig) -> Result<(TtTensor, RecoveryReport)> {
    rgi_with(a, b, config, None, None)
}

/// RGI with an optional starting point (used with [`InitRule::Given`]) and an
/// optional true tensor for monitoring.
///
/// Each step projects `g = A*(b − Auⁿ)` onto `T_{uⁿ}`, scales it by the step
/// rule and retracts. Iterates that lose rank are moved to a nearby full-rank
/// point; the number of such repairs is reported.
pub fn rgi_with<A: LinearMap + ?Sized>(
    a: &A,
    b: &[f64],
    config: &RecoveryConfig,
    init: Option<&TtTensor>,
    truth: Option<&DenseTensor>,
) -> Result<(TtTensor, RecoveryReport)> {
    config.validate()?;
    if config.format != Format::Tt {
        return Err(Error::InvalidArgument("RGI runs on the TT format only".into()));
    }
    let r = &config.rank;
    r.validate(a.shape())?;
    let start = match (config.init_rule, init) {
        (InitRule::Given, Some(u0)) => tt_truncate(u0, r)?,
        (InitRule::Given, None) => {
            return Err(Error::InvalidArgument("init rule 'given' needs a starting tensor".into()))
        }
        (InitRule::Adjoint, _) => tt_svd(&a.adjoint(b)?, &TtTarget::Ranks(r.clone()))?,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut report = RecoveryReport::new("rgi", config, truth.is_some());
    let (space, mut u) = enter(&start, r, &mut rng, &mut report.repairs)?;
    let mut space = Arc::new(space);
    let mut dense = u.to_dense();
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
        let mut xi = space.project(&g)?;
        let alpha = match config.step_rule {
            StepRule::Fixed(alpha) => alpha,
            StepRule::Steepest | StepRule::SteepestTangent => steepest(a, &xi.to_dense())?.unwrap_or(1.0),
        };
        xi.scale(alpha);
        let next = retract(&xi);
        report.iterations += 1;
        report.step_sizes.push(alpha);
        if let Some(t) = truth {
            let mut y = dense.clone();
            y.axpy(alpha, &g)?;
            let next_dense = next.to_dense();
            let (thr, tru) = (next_dense.distance(&y)?, t.distance(&y)?);
            report.cond_a.as_mut().expect("set with truth").record(report.iterations, thr, tru);
        }
        let (s, next) = enter(&next, r, &mut rng, &mut report.repairs)?;
        u = next;
        space = Arc::new(s);
        dense = u.to_dense();
        if let (Some(e), Some(t)) = (report.error_history.as_mut(), truth) {
            e.push(dense.distance(t)?);
        }
        res = residual(a, &dense, b)?;
        report.residual_history.push(norm(&res));
    };
    debug!(
        "rgi: {termination:?} after {} iterations, residual {:.3e}, {} repairs",
        report.iterations,
        report.final_residual(),
        report.repairs
    );
    report.finish(termination);
    Ok((u, report))
}

fn enter(u: &TtTensor, r: &RankTuple, rng: &mut ChaCha8Rng, repairs: &mut usize) -> Result<(TangentSpace, TtTensor)> {
    if u.ranks() == *r {
        if let Ok(space) = TangentSpace::at(u) {
            return Ok((space, u.clone()));
        }
    }
    *repairs += 1;
    TangentSpace::at_or_repair(u, r, rng)
}
