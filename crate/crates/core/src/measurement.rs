//! Linear measurement maps `A: H_d → R^m` and their adjoints.

use std::io::Write;

use nalgebra::{DVector, DVectorView};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decomposition::RankTuple;
use crate::error::{Error, Result};
use crate::generate::low_rank_instance;
use crate::linalg;
use crate::tensor::{DenseTensor, Matrix, Shape};

pub trait LinearMap: Send + Sync {
    fn shape(&self) -> &Shape;

    fn num_measurements(&self) -> usize;

    fn apply(&self, u: &DenseTensor) -> Result<Vec<f64>>;

    fn adjoint(&self, y: &[f64]) -> Result<DenseTensor>;

    /// `A` applied to each column of an `N × p` matrix, giving `m × p`.
    fn apply_columns(&self, columns: &Matrix) -> Result<Matrix>;
}

fn check_tensor(shape: &Shape, u: &DenseTensor) -> Result<()> {
    if u.shape() != shape {
        return Err(Error::shape(shape.dims(), u.dims()));
    }
    Ok(())
}

fn check_len(m: usize, y: &[f64]) -> Result<()> {
    if y.len() != m {
        return Err(Error::shape(&[m], &[y.len()]));
    }
    Ok(())
}

fn check_columns(n: usize, columns: &Matrix) -> Result<()> {
    if columns.nrows() != n {
        return Err(Error::shape(&[n, columns.ncols()], &[columns.nrows(), columns.ncols()]));
    }
    Ok(())
}

/// Map given by an explicit `m × N` matrix acting on the flattened tensor.
#[derive(Debug, Clone)]
pub struct DenseMap {
    shape: Shape,
    matrix: Matrix,
}

impl DenseMap {
    pub fn new(shape: Shape, matrix: Matrix) -> Result<Self> {
        if matrix.ncols() != shape.len() {
            return Err(Error::shape(&[matrix.nrows(), shape.len()], &[matrix.nrows(), matrix.ncols()]));
        }
        Ok(DenseMap { shape, matrix })
    }

    /// I.i.d. `N(0, 1/m)` entries, drawn column by column from a ChaCha8 stream.
    pub fn gaussian(shape: Shape, m: usize, seed: u64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidArgument("a Gaussian map needs m >= 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = 1.0 / (m as f64).sqrt();
        let n = shape.len();
        let mut data = Vec::with_capacity(m * n);
        for _ in 0..m * n {
            let x: f64 = rng.sample(StandardNormal);
            data.push(x * scale);
        }
        DenseMap::new(shape, Matrix::from_vec(m, n, data))
    }

    /// `m ≤ N` orthonormal rows; an isometry when `m = N`.
    pub fn orthonormal(shape: Shape, m: usize, seed: u64) -> Result<Self> {
        let n = shape.len();
        if m == 0 || m > n {
            return Err(Error::InvalidArgument(format!("orthonormal map needs 1 <= m <= {n}, got {m}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = linalg::random_orthonormal(n, m, &mut rng);
        DenseMap::new(shape, q.transpose())
    }

    pub fn zero(shape: Shape, m: usize) -> Self {
        let n = shape.len();
        DenseMap {
            shape,
            matrix: Matrix::zeros(m, n),
        }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }
}

impl LinearMap for DenseMap {
    fn shape(&self) -> &Shape {
        &self.shape
    }

    fn num_measurements(&self) -> usize {
        self.matrix.nrows()
    }

    fn apply(&self, u: &DenseTensor) -> Result<Vec<f64>> {
        check_tensor(&self.shape, u)?;
        let v = DVectorView::from_slice(u.values(), u.len());
        Ok((&self.matrix * v).data.into())
    }

    fn adjoint(&self, y: &[f64]) -> Result<DenseTensor> {
        check_len(self.matrix.nrows(), y)?;
        let v = DVectorView::from_slice(y, y.len());
        let out: DVector<f64> = self.matrix.tr_mul(&v);
        DenseTensor::from_vec(self.shape.clone(), out.data.into())
    }

    fn apply_columns(&self, columns: &Matrix) -> Result<Matrix> {
        check_columns(self.shape.len(), columns)?;
        Ok(&self.matrix * columns)
    }
}

/// Entry sampling `(Au)_i = u(μᵢ)` on a set `Ω` of distinct positions.
#[derive(Debug, Clone)]
pub struct SamplingMap {
    shape: Shape,
    offsets: Vec<usize>,
}

impl SamplingMap {
    /// `m` distinct positions drawn uniformly without replacement.
    pub fn random(shape: Shape, m: usize, seed: u64) -> Result<Self> {
        let n = shape.len();
        if m == 0 || m > n {
            return Err(Error::InvalidArgument(format!("sampling map needs 1 <= m <= {n}, got {m}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let offsets = rand::seq::index::sample(&mut rng, n, m).into_vec();
        Ok(SamplingMap { shape, offsets })
    }

    /// Explicit `Ω` given as 0-based multi-indices.
    pub fn from_indices(shape: Shape, indices: &[Vec<usize>]) -> Result<Self> {
        let offsets = indices
            .iter()
            .map(|idx| shape.linearize(idx))
            .collect::<Result<Vec<_>>>()?;
        let mut sorted = offsets.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("sampling positions must be distinct".into()));
        }
        Ok(SamplingMap { shape, offsets })
    }

    /// Flat offsets of `Ω`, in measurement order.
    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn indices(&self) -> Vec<Vec<usize>> {
        self.offsets
            .iter()
            .map(|&k| self.shape.delinearize(k).expect("stored offsets are in range"))
            .collect()
    }
}

impl LinearMap for SamplingMap {
    fn shape(&self) -> &Shape {
        &self.shape
    }

    fn num_measurements(&self) -> usize {
        self.offsets.len()
    }

    fn apply(&self, u: &DenseTensor) -> Result<Vec<f64>> {
        check_tensor(&self.shape, u)?;
        let v = u.values();
        Ok(self.offsets.iter().map(|&k| v[k]).collect())
    }

    fn adjoint(&self, y: &[f64]) -> Result<DenseTensor> {
        check_len(self.offsets.len(), y)?;
        let mut out = DenseTensor::zeros(self.shape.clone());
        let v = out.values_mut();
        for (&k, &x) in self.offsets.iter().zip(y) {
            v[k] = x;
        }
        Ok(out)
    }

    fn apply_columns(&self, columns: &Matrix) -> Result<Matrix> {
        check_columns(self.shape.len(), columns)?;
        Ok(columns.select_rows(&self.offsets))
    }
}

/// Serializable description of a map: kind, shape, `m` and seed. The map
/// itself is regenerated on load.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MapSpec {
    Gaussian { shape: Shape, m: usize, seed: u64 },
    Orthonormal { shape: Shape, m: usize, seed: u64 },
    Sampling { shape: Shape, m: usize, seed: u64 },
}

impl MapSpec {
    pub fn build(&self) -> Result<MeasurementMap> {
        Ok(match self {
            MapSpec::Gaussian { shape, m, seed } => MeasurementMap::Dense(DenseMap::gaussian(shape.clone(), *m, *seed)?),
            MapSpec::Orthonormal { shape, m, seed } => {
                MeasurementMap::Dense(DenseMap::orthonormal(shape.clone(), *m, *seed)?)
            }
            MapSpec::Sampling { shape, m, seed } => {
                MeasurementMap::Sampling(SamplingMap::random(shape.clone(), *m, *seed)?)
            }
        })
    }

    pub fn m(&self) -> usize {
        match self {
            MapSpec::Gaussian { m, .. } | MapSpec::Orthonormal { m, .. } | MapSpec::Sampling { m, .. } => *m,
        }
    }
}

/// Kind of map selectable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapKind {
    Gaussian,
    Orthonormal,
    Sampling,
}

impl MapKind {
    pub fn spec(self, shape: Shape, m: usize, seed: u64) -> MapSpec {
        match self {
            MapKind::Gaussian => MapSpec::Gaussian { shape, m, seed },
            MapKind::Orthonormal => MapSpec::Orthonormal { shape, m, seed },
            MapKind::Sampling => MapSpec::Sampling { shape, m, seed },
        }
    }
}

impl std::str::FromStr for MapKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" => Ok(MapKind::Gaussian),
            "orthonormal" => Ok(MapKind::Orthonormal),
            "sampling" | "completion" => Ok(MapKind::Sampling),
            other => Err(Error::InvalidArgument(format!("unknown map kind {other:?}"))),
        }
    }
}

/// Either kind of map behind one type.
#[derive(Debug, Clone)]
pub enum MeasurementMap {
    Dense(DenseMap),
    Sampling(SamplingMap),
}

impl MeasurementMap {
    fn inner(&self) -> &dyn LinearMap {
        match self {
            MeasurementMap::Dense(a) => a,
            MeasurementMap::Sampling(a) => a,
        }
    }
}

impl LinearMap for MeasurementMap {
    fn shape(&self) -> &Shape {
        self.inner().shape()
    }

    fn num_measurements(&self) -> usize {
        self.inner().num_measurements()
    }

    fn apply(&self, u: &DenseTensor) -> Result<Vec<f64>> {
        self.inner().apply(u)
    }

    fn adjoint(&self, y: &[f64]) -> Result<DenseTensor> {
        self.inner().adjoint(y)
    }

    fn apply_columns(&self, columns: &Matrix) -> Result<Matrix> {
        self.inner().apply_columns(columns)
    }
}

/// One value per line, `{:e}` formatting.
pub fn write_measurements_csv<W: Write>(values: &[f64], mut out: W) -> std::io::Result<()> {
    writeln!(out, "index,value")?;
    for (i, v) in values.iter().enumerate() {
        writeln!(out, "{},{v:e}", i + 1)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` increasing edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn new(values: &[f64], bins: usize) -> Self {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (lo, hi) = if !lo.is_finite() {
            (0.0, 1.0)
        } else if hi > lo {
            (lo, hi)
        } else {
            (lo - 0.5, lo + 0.5)
        };
        let bins = bins.max(1);
        let width = (hi - lo) / bins as f64;
        let edges = (0..=bins).map(|k| lo + width * k as f64).collect();
        let mut counts = vec![0; bins];
        for &v in values {
            let k = (((v - lo) / width) as usize).min(bins - 1);
            counts[k] += 1;
        }
        Histogram { edges, counts }
    }
}

/// Empirical restricted-isometry probe.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TricEstimate {
    /// `max_k |‖A uₖ‖² − 1|` over the unit-norm samples: a lower bound on the
    /// restricted isometry constant, not the constant itself.
    pub delta_lower_bound: f64,
    /// `‖A uₖ‖²` per sample, in sample order.
    pub ratios: Vec<f64>,
    pub histogram: Histogram,
}

/// Probes `A` with `samples` random unit-norm rank-`r` tensors. Sample `k` uses
/// seed `seed + k`, so the result does not depend on the thread schedule.
pub fn estimate_tric<A: LinearMap + ?Sized>(a: &A, r: &RankTuple, samples: usize, seed: u64) -> Result<TricEstimate> {
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    r.validate(a.shape())?;
    let ratios = (0..samples as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(k));
            let mut u = low_rank_instance(a.shape(), r, &mut rng)?;
            let norm = u.norm();
            u.scale(1.0 / norm);
            let y = a.apply(&u)?;
            Ok(y.iter().map(|x| x * x).sum::<f64>())
        })
        .collect::<Result<Vec<f64>>>()?;
    let delta = ratios.iter().map(|q| (q - 1.0).abs()).fold(0.0, f64::max);
    Ok(TricEstimate {
        delta_lower_bound: delta,
        histogram: Histogram::new(&ratios, 20),
        ratios,
    })
}

/// Measurement count suggested by the TRIP theorem for Gaussian maps,
/// `⌈C δ⁻² max{f(d,n,r), ln ε⁻¹}⌉` with `f = d n r² ln(d r)` for TT and
/// `f = (r^d + d n r) ln d` for Tucker. `C` is the unspecified universal constant.
pub fn theorem2_m(format: crate::decomposition::Format, n: usize, r: usize, d: usize, delta: f64, eps: f64, c: f64) -> Result<usize> {
    if n == 0 || r == 0 || d == 0 || !(delta > 0.0) || !(eps > 0.0 && eps < 1.0) || !(c > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "theorem2_m needs positive n, r, d, delta, C and 0 < eps < 1 (got n={n}, r={r}, d={d}, delta={delta}, eps={eps}, C={c})"
        )));
    }
    let (n, r, d) = (n as f64, r as f64, d as f64);
    let first = match format {
        crate::decomposition::Format::Tt => d * n * r * r * (d * r).ln(),
        crate::decomposition::Format::Tucker => (r.powf(d) + d * n * r) * d.ln(),
    };
    let bound = c / (delta * delta) * first.max((1.0 / eps).ln());
    Ok(bound.ceil() as usize)
}
