//! Phase-transition experiments: random low-rank instances, fresh Gaussian
//! (or sampling) maps per trial, success rates over a grid of measurement
//! fractions, and TRIC probes.

mod output;
mod probe;

pub use output::{format_g6, write_sweep_csv, SweepSummary};
pub use probe::{probe_map, ProbePoint, ProbeReport, ProbeRequest};

use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decomposition::{Format, RankTuple};
use crate::error::{Error, Result};
use crate::generate;
use crate::measurement::{LinearMap, MapKind};
use crate::recovery::{als, rgi_with, tiht_with, RecoveryConfig, StepRule, Termination};
use crate::tensor::{DenseTensor, Shape};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Tiht,
    Rgi,
    Als,
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tiht" | "iht" => Ok(Algorithm::Tiht),
            "rgi" | "riemannian" => Ok(Algorithm::Rgi),
            "als" => Ok(Algorithm::Als),
            other => Err(Error::InvalidArgument(format!("unknown algorithm {other:?}"))),
        }
    }
}

/// One phase-transition experiment. `rank` is the rank of the generated
/// instances and its format selects the generator (Tucker: core `N(0,1)`,
/// factors from SVDs of Gaussian matrices; TT: Gaussian cores). The solver
/// runs in `format` at the smallest rank that contains every instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentSpec {
    pub shape: Shape,
    pub rank: RankTuple,
    pub format: Format,
    pub map: MapKind,
    /// Measurement percentages `n̄`; `m = ⌈N·n̄/100⌉`.
    pub grid: Vec<f64>,
    pub trials: usize,
    /// Absolute threshold on `‖u − û‖`.
    pub success_tol: f64,
    pub max_iter: usize,
    /// Solver stopping rule `‖Aû − b‖ ≤ residual_tol·‖b‖`.
    pub residual_tol: f64,
    pub step_rule: StepRule,
    pub algorithm: Algorithm,
    pub seed: u64,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            shape: Shape::new(vec![10, 10, 10]).expect("valid"),
            rank: RankTuple::tucker(vec![1, 1, 1]).expect("valid"),
            format: Format::Tucker,
            map: MapKind::Gaussian,
            grid: Vec::new(),
            trials: 50,
            success_tol: 1e-4,
            max_iter: 5000,
            residual_tol: 1e-6,
            step_rule: StepRule::Steepest,
            algorithm: Algorithm::Tiht,
            seed: 0,
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        self.rank.validate(&self.shape)?;
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be >= 1".into()));
        }
        if let Some(p) = self.grid.iter().find(|&&p| !(p > 0.0 && p <= 100.0)) {
            return Err(Error::InvalidArgument(format!("grid entry {p} is outside (0, 100]")));
        }
        if self.algorithm == Algorithm::Rgi && self.format != Format::Tt {
            return Err(Error::InvalidArgument("RGI needs --format tt".into()));
        }
        self.solver_rank().validate(&self.shape)?;
        self.recovery_config(0).validate()
    }

    /// Measurement count for a percentage: `⌈N·n̄/100⌉`.
    pub fn measurements(&self, n_bar: f64) -> usize {
        // round first so that e.g. 1000·9/100 is not pushed up by representation error
        let exact = self.shape.len() as f64 * n_bar / 100.0;
        let rounded = (exact * 1e9).round() / 1e9;
        (rounded.ceil() as usize).max(1)
    }

    /// Solver rank in `format` that contains every generated instance.
    pub fn solver_rank(&self) -> RankTuple {
        let dims = self.shape.dims();
        let d = dims.len();
        let r = &self.rank.values;
        let values = match (self.rank.format, self.format) {
            (a, b) if a == b => r.clone(),
            // Tucker rank → TT bond ranks: r_i ≤ min(Π_{j≤i} r_j, Π_{j>i} r_j)
            (Format::Tucker, Format::Tt) => (1..d)
                .map(|i| {
                    let left: usize = r[..i].iter().product();
                    let right: usize = r[i..].iter().product();
                    left.min(right)
                })
                .collect(),
            // TT bonds → Tucker: mode rank ≤ min(nᵢ, r_{i−1}·rᵢ)
            _ => (0..d)
                .map(|i| {
                    let left = if i == 0 { 1 } else { r[i - 1] };
                    let right = if i + 1 == d { 1 } else { r[i] };
                    dims[i].min(left * right)
                })
                .collect(),
        };
        RankTuple {
            format: self.format,
            values,
        }
    }

    fn recovery_config(&self, seed: u64) -> RecoveryConfig {
        let mut c = RecoveryConfig::new(self.solver_rank())
            .with_max_iter(self.max_iter)
            .with_tol(self.residual_tol)
            .with_step(self.step_rule)
            .with_seed(seed);
        c.format = self.format;
        c
    }
}

/// Seed of trial `trial_index`'s instance.
pub fn instance_seed(base_seed: u64, trial_index: u64) -> u64 {
    base_seed ^ trial_index
}

/// Seed of the map used for an instance at `m` measurements.
pub fn map_seed(instance_seed: u64, m: usize) -> u64 {
    splitmix64(instance_seed ^ splitmix64(m as u64 ^ 0x6d61_7073))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Random instance of `rank` (generator chosen by the rank's format).
pub fn gen_instance(shape: &Shape, rank: &RankTuple, seed: u64) -> Result<DenseTensor> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    generate::low_rank_instance(shape, rank, &mut rng)
}

/// The Tucker test tensor of the experiments together with its factors.
pub fn gen_random_tucker(
    shape: &Shape,
    rank: &RankTuple,
    seed: u64,
) -> Result<(DenseTensor, crate::decomposition::TuckerTensor)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = generate::tucker_instance(shape, rank, &mut rng)?;
    Ok((t.to_dense(), t))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub n_bar: f64,
    pub m: usize,
    pub trial: u64,
    pub instance_seed: u64,
    pub map_seed: u64,
    pub success: bool,
    pub termination: Termination,
    pub iterations: usize,
    pub true_error: f64,
    pub relative_error: f64,
    pub residual: f64,
}

/// Runs one trial: instance, fresh map, solver, and the true-error check.
/// Solver failures of any kind are recorded, never returned as errors.
pub fn run_trial(spec: &ExperimentSpec, n_bar: f64, trial_index: u64) -> Result<TrialRecord> {
    let seed = instance_seed(spec.seed, trial_index);
    let m = spec.measurements(n_bar);
    let mseed = map_seed(seed, m);
    let u = gen_instance(&spec.shape, &spec.rank, seed)?;
    let a = spec.map.spec(spec.shape.clone(), m.min(spec.shape.len()), mseed).build()?;
    let b = a.apply(&u)?;
    let config = spec.recovery_config(seed);
    let outcome = match spec.algorithm {
        Algorithm::Tiht => tiht_with(&a, &b, &config, None, None).map(|(v, r)| (v.to_dense(), r)),
        Algorithm::Rgi => rgi_with(&a, &b, &config, None, None).map(|(v, r)| (v.to_dense(), r)),
        Algorithm::Als => als(&a, &b, &config, None).map(|(v, r)| (v.to_dense(), r)),
    };
    let unorm = u.norm();
    Ok(match outcome {
        Ok((v, report)) => {
            let err = v.distance(&u)?;
            TrialRecord {
                n_bar,
                m,
                trial: trial_index,
                instance_seed: seed,
                map_seed: mseed,
                success: err < spec.success_tol,
                termination: report.termination,
                iterations: report.iterations,
                true_error: err,
                relative_error: if unorm > 0.0 { err / unorm } else { err },
                residual: report.final_residual(),
            }
        }
        Err(e) => {
            log::warn!("trial {trial_index} at n_bar={n_bar}: solver error: {e}");
            TrialRecord {
                n_bar,
                m,
                trial: trial_index,
                instance_seed: seed,
                map_seed: mseed,
                success: false,
                termination: Termination::Diverged,
                iterations: 0,
                true_error: f64::NAN,
                relative_error: f64::NAN,
                residual: f64::NAN,
            }
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub n_bar: f64,
    pub m: usize,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// `None` when no trial succeeded.
    pub mean_iters_success: Option<f64>,
    pub max_iters_success: Option<usize>,
    /// `success_rate ∓ 2σ` of the binomial proportion, clipped to `[0, 1]`.
    pub band_low: f64,
    pub band_high: f64,
}

impl PointResult {
    fn from_records(n_bar: f64, m: usize, records: &[TrialRecord]) -> Self {
        let trials = records.len();
        let wins: Vec<&TrialRecord> = records.iter().filter(|r| r.success).collect();
        let successes = wins.len();
        let p = successes as f64 / trials as f64;
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        PointResult {
            n_bar,
            m,
            trials,
            successes,
            success_rate: p,
            mean_iters_success: (!wins.is_empty())
                .then(|| wins.iter().map(|r| r.iterations as f64).sum::<f64>() / successes as f64),
            max_iters_success: wins.iter().map(|r| r.iterations).max(),
            band_low: (p - 2.0 * sigma).max(0.0),
            band_high: (p + 2.0 * sigma).min(1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub points: Vec<PointResult>,
    pub records: Vec<TrialRecord>,
}

impl SweepResult {
    /// Largest `n̄` without a single success.
    pub fn pct_max(&self) -> Option<f64> {
        self.points
            .iter()
            .filter(|p| p.successes == 0)
            .map(|p| p.n_bar)
            .fold(None, |acc, x| Some(acc.map_or(x, |a: f64| a.max(x))))
    }

    /// Smallest `n̄` where every trial succeeded.
    pub fn pct_min(&self) -> Option<f64> {
        self.points
            .iter()
            .filter(|p| p.successes == p.trials)
            .map(|p| p.n_bar)
            .fold(None, |acc, x| Some(acc.map_or(x, |a: f64| a.min(x))))
    }
}

/// All trials of all grid points. Jobs run on the current rayon pool and are
/// collected in (grid point, trial) order, so the result does not depend on
/// the number of threads.
pub fn run_sweep(spec: &ExperimentSpec) -> Result<SweepResult> {
    spec.validate()?;
    let jobs: Vec<(f64, u64)> = spec
        .grid
        .iter()
        .flat_map(|&p| (0..spec.trials as u64).map(move |t| (p, t)))
        .collect();
    let records = jobs
        .par_iter()
        .map(|&(p, t)| run_trial(spec, p, t))
        .collect::<Result<Vec<_>>>()?;
    let points = spec
        .grid
        .iter()
        .zip(records.chunks(spec.trials.max(1)))
        .map(|(&p, chunk)| PointResult::from_records(p, spec.measurements(p), chunk))
        .collect();
    Ok(SweepResult { points, records })
}
