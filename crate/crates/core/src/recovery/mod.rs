//! Recovery of a low-rank tensor from `b = Au`: iterative hard thresholding
//! (TIHT), Riemannian gradient iteration on the TT manifold (RGI), and
//! alternating least squares (ALS).

mod als;
mod config;
mod report;
mod rgi;
mod tiht;

pub use als::{als, als_refine_step, monotonicity_violations};
pub use config::{InitRule, RecoveryConfig, StepRule};
pub use report::{CondAStats, RecoveryReport, Termination};
pub use rgi::{rgi, rgi_with};
pub use tiht::{tiht, tiht_step, tiht_with};

use serde::Serialize;

use crate::decomposition::io::DecompositionFile;
use crate::decomposition::{truncate_hosvd, tt_svd, Format, RankTuple, TtTarget, TtTensor, TuckerTensor};
use crate::error::{Error, Result};
use crate::measurement::LinearMap;
use crate::tensor::DenseTensor;

/// A recovered tensor in the format it was computed in.
#[derive(Debug, Clone)]
pub enum LowRank {
    Tucker(TuckerTensor),
    Tt(TtTensor),
}

impl LowRank {
    pub fn to_dense(&self) -> DenseTensor {
        match self {
            LowRank::Tucker(t) => t.to_dense(),
            LowRank::Tt(t) => t.to_dense(),
        }
    }

    pub fn ranks(&self) -> RankTuple {
        match self {
            LowRank::Tucker(t) => t.ranks(),
            LowRank::Tt(t) => t.ranks(),
        }
    }

    pub fn format(&self) -> Format {
        match self {
            LowRank::Tucker(_) => Format::Tucker,
            LowRank::Tt(_) => Format::Tt,
        }
    }

    pub fn to_file(&self) -> DecompositionFile {
        match self {
            LowRank::Tucker(t) => t.into(),
            LowRank::Tt(t) => t.into(),
        }
    }
}

impl Serialize for LowRank {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_file().serialize(s)
    }
}

/// The hard-thresholding operator `H_r` of the rank tuple's format.
pub fn hard_threshold(y: &DenseTensor, r: &RankTuple) -> Result<LowRank> {
    Ok(match r.format {
        Format::Tucker => LowRank::Tucker(truncate_hosvd(y, r)?),
        Format::Tt => LowRank::Tt(tt_svd(y, &TtTarget::Ranks(r.clone()))?),
    })
}

/// `J(v) = ½‖Av − b‖²`.
pub fn objective<A: LinearMap + ?Sized>(a: &A, v: &DenseTensor, b: &[f64]) -> Result<f64> {
    let r = residual(a, v, b)?;
    Ok(0.5 * r.iter().map(|x| x * x).sum::<f64>())
}

/// `b − Av`.
pub(crate) fn residual<A: LinearMap + ?Sized>(a: &A, v: &DenseTensor, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.num_measurements() {
        return Err(Error::shape(&[a.num_measurements()], &[b.len()]));
    }
    let av = a.apply(v)?;
    Ok(b.iter().zip(&av).map(|(x, y)| x - y).collect())
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Geometric rate `ρ̂` from a least-squares fit of `ln e_n` against `n` over the
/// indices in `range` (clipped to the history; non-positive entries skipped).
/// `None` with fewer than two usable points.
pub fn fit_rate(history: &[f64], range: std::ops::Range<usize>) -> Option<f64> {
    let end = range.end.min(history.len());
    let pts: Vec<(f64, f64)> = (range.start..end)
        .filter(|&n| history[n] > 0.0 && history[n].is_finite())
        .map(|n| (n as f64, history[n].ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some((sxy / sxx).exp())
}

/// Rate over the second half of a history, where the asymptotic regime is
/// most likely; values at round-off level (below `1e-13` of the start) are ignored.
pub(crate) fn tail_rate(history: &[f64]) -> Option<f64> {
    let floor = history.first().copied().unwrap_or(0.0) * 1e-13;
    let usable = history.iter().take_while(|&&e| e > floor).count();
    fit_rate(history, usable / 2..usable)
}
