use std::io::Write;

use serde::{Deserialize, Serialize};

use super::output::format_g6;
use super::splitmix64;
use crate::decomposition::RankTuple;
use crate::error::{Error, Result};
use crate::measurement::{estimate_tric, theorem2_m, MapKind};
use crate::tensor::Shape;

/// Empirical TRIC probe over several map draws for each `m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeRequest {
    pub shape: Shape,
    pub rank: RankTuple,
    pub map: MapKind,
    pub m_grid: Vec<usize>,
    /// Independent maps per `m`.
    pub draws: usize,
    /// Random unit rank-`r` tensors per map.
    pub samples: usize,
    /// Target isometry constant and failure probability for the calibration.
    pub delta: f64,
    pub eps: f64,
    pub seed: u64,
}

impl Default for ProbeRequest {
    fn default() -> Self {
        ProbeRequest {
            shape: Shape::new(vec![10, 10, 10]).expect("valid"),
            rank: RankTuple::tt(vec![1, 1]).expect("valid"),
            map: MapKind::Gaussian,
            m_grid: Vec::new(),
            draws: 20,
            samples: 1000,
            delta: 0.5,
            eps: 0.1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbePoint {
    pub m: usize,
    /// `δ̂` per map draw (lower bounds on the isometry constant).
    pub delta_hat: Vec<f64>,
    /// Fraction of draws with `δ̂ ≤ δ`.
    pub fraction_within: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbeReport {
    pub request: ProbeRequest,
    pub points: Vec<ProbePoint>,
    /// The theorem's bound with `C = 1` (`n`, `r` the largest mode size and rank).
    pub theorem_m_c1: usize,
    /// Smallest probed `m` whose draws satisfy `δ̂ ≤ δ` with frequency `≥ 1 − ε`.
    pub empirical_m: Option<usize>,
    /// `empirical_m / theorem_m_c1`, the constant that would make the bound tight here.
    pub implied_c: Option<f64>,
}

impl ProbeReport {
    /// `m,draw,delta_hat` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "m,draw,delta_hat")?;
        for p in &self.points {
            for (k, d) in p.delta_hat.iter().enumerate() {
                writeln!(out, "{},{},{}", p.m, k, format_g6(*d))?;
            }
        }
        Ok(())
    }
}

/// Map draw `k` at `m` uses seed `mix(seed, m, k)`; its samples use that seed
/// plus the sample index.
pub fn probe_map(req: &ProbeRequest) -> Result<ProbeReport> {
    req.rank.validate(&req.shape)?;
    if req.draws == 0 || req.samples == 0 {
        return Err(Error::InvalidArgument("draws and samples must be >= 1".into()));
    }
    let points = req
        .m_grid
        .iter()
        .map(|&m| {
            let delta_hat = (0..req.draws as u64)
                .map(|k| {
                    let seed = splitmix64(req.seed ^ splitmix64((m as u64) << 20 ^ k));
                    let a = req.map.spec(req.shape.clone(), m, seed).build()?;
                    Ok(estimate_tric(&a, &req.rank, req.samples, seed)?.delta_lower_bound)
                })
                .collect::<Result<Vec<_>>>()?;
            let within = delta_hat.iter().filter(|&&d| d <= req.delta).count();
            Ok(ProbePoint {
                m,
                fraction_within: within as f64 / req.draws as f64,
                delta_hat,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let n = *req.shape.dims().iter().max().expect("non-empty shape");
    let theorem_m_c1 = theorem2_m(req.rank.format, n, req.rank.max(), req.shape.order(), req.delta, req.eps, 1.0)?;
    let empirical_m = points
        .iter()
        .filter(|p| p.fraction_within >= 1.0 - req.eps)
        .map(|p| p.m)
        .min();
    Ok(ProbeReport {
        request: req.clone(),
        points,
        theorem_m_c1,
        empirical_m,
        implied_c: empirical_m.map(|m| m as f64 / theorem_m_c1 as f64),
    })
}
