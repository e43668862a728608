//! Tensor-train format `u(μ₁,…,μ_d) = B₁(μ₁)···B_d(μ_d)`.
//!
//! Core `i` is stored as an `(r_{i−1}, nᵢ, rᵢ)` array, column-major with the
//! left rank index fastest. With that layout the left unfolding
//! `(r_{i−1}nᵢ) × rᵢ` and the right unfolding `r_{i−1} × (nᵢrᵢ)` are both plain
//! reinterpretations of the same buffer.

use nalgebra::{DMatrixView, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{Format, RankTuple};
use crate::error::{Error, Result};
use crate::linalg;
use crate::tensor::{DenseTensor, Matrix, Shape};

/// Column-major reshape without copying.
pub(crate) fn reshape(m: Matrix, rows: usize, cols: usize) -> Matrix {
    debug_assert_eq!(m.len(), rows * cols);
    m.reshape_generic(Dyn(rows), Dyn(cols))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TtCore {
    left: usize,
    size: usize,
    right: usize,
    data: Vec<f64>,
}

impl TtCore {
    pub fn zeros(left: usize, size: usize, right: usize) -> Self {
        TtCore {
            left,
            size,
            right,
            data: vec![0.0; left * size * right],
        }
    }

    pub fn from_vec(left: usize, size: usize, right: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != left * size * right {
            return Err(Error::shape(&[left, size, right], &[data.len()]));
        }
        Ok(TtCore {
            left,
            size,
            right,
            data,
        })
    }

    pub fn random<R: Rng + ?Sized>(left: usize, size: usize, right: usize, rng: &mut R) -> Self {
        let data = (0..left * size * right).map(|_| rng.sample(StandardNormal)).collect();
        TtCore {
            left,
            size,
            right,
            data,
        }
    }

    /// `(r_{i−1}, nᵢ, rᵢ)`.
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.left, self.size, self.right)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    fn offset(&self, a: usize, mu: usize, b: usize) -> usize {
        a + self.left * (mu + self.size * b)
    }

    pub fn get(&self, a: usize, mu: usize, b: usize) -> f64 {
        self.data[self.offset(a, mu, b)]
    }

    pub fn set(&mut self, a: usize, mu: usize, b: usize, value: f64) {
        let k = self.offset(a, mu, b);
        self.data[k] = value;
    }

    /// Rows `(k_{i−1}, μᵢ)`, columns `kᵢ`.
    pub fn left_unfolding(&self) -> Matrix {
        Matrix::from_column_slice(self.left * self.size, self.right, &self.data)
    }

    /// Rows `k_{i−1}`, columns `(μᵢ, kᵢ)`.
    pub fn right_unfolding(&self) -> Matrix {
        Matrix::from_column_slice(self.left, self.size * self.right, &self.data)
    }

    pub fn from_left_unfolding(m: Matrix, size: usize) -> Self {
        let (rows, right) = m.shape();
        debug_assert_eq!(rows % size, 0);
        TtCore {
            left: rows / size,
            size,
            right,
            data: m.data.into(),
        }
    }

    pub fn from_right_unfolding(m: Matrix, size: usize) -> Self {
        let (left, cols) = m.shape();
        debug_assert_eq!(cols % size, 0);
        TtCore {
            left,
            size,
            right: cols / size,
            data: m.data.into(),
        }
    }

    /// The matrix `Bᵢ(μ)` of size `r_{i−1} × rᵢ`.
    pub fn slice(&self, mu: usize) -> Matrix {
        Matrix::from_fn(self.left, self.right, |a, b| self.get(a, mu, b))
    }

    pub fn norm_squared(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }
}

/// Which cores are known to be orthogonal. `Left(p)`: every core `j < p` has a
/// left unfolding with orthonormal columns. `Right(p)`: every core `j > p` has a
/// right unfolding with orthonormal rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "position")]
pub enum Orthogonality {
    None,
    Left(usize),
    Right(usize),
}

#[derive(Debug, Clone)]
pub struct TtTensor {
    shape: Shape,
    cores: Vec<TtCore>,
    ortho: Orthogonality,
    sigma: Option<Vec<Vec<f64>>>,
}

/// Target of [`tt_svd`]: the exact decomposition or a fixed rank tuple.
#[derive(Debug, Clone)]
pub enum TtTarget {
    Exact,
    Ranks(RankTuple),
}

impl TtTensor {
    pub fn new(cores: Vec<TtCore>) -> Result<Self> {
        if cores.is_empty() {
            return Err(Error::InvalidArgument("a TT tensor needs at least one core".into()));
        }
        let d = cores.len();
        if cores[0].left != 1 || cores[d - 1].right != 1 {
            return Err(Error::InvalidRank(format!(
                "boundary ranks must be 1, got {} and {}",
                cores[0].left,
                cores[d - 1].right
            )));
        }
        for i in 1..d {
            if cores[i - 1].right != cores[i].left {
                return Err(Error::InvalidRank(format!(
                    "core {} has right rank {} but core {} has left rank {}",
                    i - 1,
                    cores[i - 1].right,
                    i,
                    cores[i].left
                )));
            }
        }
        let shape = Shape::new(cores.iter().map(|c| c.size).collect::<Vec<_>>())?;
        Ok(TtTensor {
            shape,
            cores,
            ortho: Orthogonality::None,
            sigma: None,
        })
    }

    /// Gaussian cores with the given bond ranks.
    pub fn random<R: Rng + ?Sized>(shape: &Shape, ranks: &RankTuple, rng: &mut R) -> Result<Self> {
        if ranks.format != Format::Tt || ranks.values.len() + 1 != shape.order() {
            return Err(Error::InvalidRank(format!("{ranks} is not a TT rank for {shape}")));
        }
        let full = full_ranks(&ranks.values);
        let cores = shape
            .dims()
            .iter()
            .enumerate()
            .map(|(i, &n)| TtCore::random(full[i], n, full[i + 1], rng))
            .collect();
        TtTensor::new(cores)
    }

    /// All-zero tensor with ranks `(1,…,1)`.
    pub fn zeros(shape: &Shape) -> Self {
        let cores = shape.dims().iter().map(|&n| TtCore::zeros(1, n, 1)).collect();
        TtTensor::new(cores).expect("unit ranks are consistent")
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn order(&self) -> usize {
        self.cores.len()
    }

    pub fn cores(&self) -> &[TtCore] {
        &self.cores
    }

    pub fn core(&self, i: usize) -> &TtCore {
        &self.cores[i]
    }

    /// Replaces core `i`; the neighbouring ranks must still match.
    pub fn set_core(&mut self, i: usize, core: TtCore) -> Result<()> {
        let d = self.order();
        let left = if i == 0 { 1 } else { self.cores[i - 1].right };
        let right = if i + 1 == d { 1 } else { self.cores[i + 1].left };
        if core.left != left || core.right != right || core.size != self.cores[i].size {
            return Err(Error::shape(
                &[left, self.cores[i].size, right],
                &[core.left, core.size, core.right],
            ));
        }
        self.cores[i] = core;
        self.ortho = Orthogonality::None;
        self.sigma = None;
        Ok(())
    }

    pub fn into_cores(self) -> Vec<TtCore> {
        self.cores
    }

    pub fn orthogonality(&self) -> Orthogonality {
        self.ortho
    }

    pub(crate) fn set_orthogonality(&mut self, ortho: Orthogonality) {
        self.ortho = ortho;
    }

    /// Per-bond singular values (full lists, descending) when produced by TT-SVD or truncation.
    pub fn sigma(&self) -> Option<&[Vec<f64>]> {
        self.sigma.as_deref()
    }

    /// `(r₀, r₁, …, r_d)` including the unit boundary ranks.
    pub fn full_ranks(&self) -> Vec<usize> {
        let mut r = vec![1];
        r.extend(self.cores.iter().map(|c| c.right));
        r
    }

    /// Bond ranks `(r₁,…,r_{d−1})`.
    pub fn ranks(&self) -> RankTuple {
        RankTuple {
            format: Format::Tt,
            values: self.cores[..self.order() - 1].iter().map(|c| c.right).collect(),
        }
    }

    /// `εᵢ = √(Σ_{k>rᵢ} σ²)` per bond, from the stored singular values.
    pub fn discarded_norms(&self) -> Option<Vec<f64>> {
        let sigma = self.sigma.as_ref()?;
        Some(
            sigma
                .iter()
                .zip(&self.cores)
                .map(|(s, c)| linalg::tail_norm(s, c.right))
                .collect(),
        )
    }

    pub fn to_dense(&self) -> DenseTensor {
        let mut acc = self.cores[0].left_unfolding();
        for core in &self.cores[1..] {
            let rows = acc.nrows();
            let prod = acc * core.right_unfolding();
            acc = reshape(prod, rows * core.size, core.right);
        }
        DenseTensor::from_vec(self.shape.clone(), acc.data.into()).expect("sizes agree")
    }

    /// `B₁(μ₁)···B_d(μ_d)` for a 0-based multi-index.
    pub fn entry(&self, index: &[usize]) -> Result<f64> {
        if index.len() != self.order() || index.iter().zip(self.shape.dims()).any(|(&i, &n)| i >= n) {
            return Err(Error::IndexOutOfRange {
                index: index.to_vec(),
                dims: self.shape.dims().to_vec(),
            });
        }
        let mut row = vec![1.0];
        for (core, &mu) in self.cores.iter().zip(index) {
            let mut next = vec![0.0; core.right];
            for (b, out) in next.iter_mut().enumerate() {
                let base = core.left * (mu + core.size * b);
                *out = row
                    .iter()
                    .zip(&core.data[base..base + core.left])
                    .map(|(x, y)| x * y)
                    .sum();
            }
            row = next;
        }
        Ok(row[0])
    }

    /// `⟨self, other⟩` by transfer matrices, without densifying.
    pub fn inner(&self, other: &TtTensor) -> Result<f64> {
        if self.shape != other.shape {
            return Err(Error::shape(self.shape.dims(), other.shape.dims()));
        }
        let mut m = Matrix::from_element(1, 1, 1.0);
        for (a, b) in self.cores.iter().zip(&other.cores) {
            // M'(x, y) = Σ_{μ} A(μ)ᵀ M B(μ): contract M into B's left index first.
            let mb = &m * b.right_unfolding(); // r_a × (n r_b')
            let mb = reshape(mb, a.left * a.size, b.right);
            m = a.left_unfolding().transpose() * mb;
        }
        Ok(m[(0, 0)])
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).unwrap_or(0.0).max(0.0).sqrt()
    }

    pub fn scale(&mut self, alpha: f64) {
        let i = match self.ortho {
            Orthogonality::Left(p) => p.min(self.order() - 1),
            Orthogonality::Right(p) => p,
            Orthogonality::None => self.order() - 1,
        };
        self.cores[i].data.iter_mut().for_each(|x| *x *= alpha);
        if let Some(sigma) = &mut self.sigma {
            sigma.iter_mut().flatten().for_each(|s| *s *= alpha.abs());
        }
    }

    pub fn scaled(&self, alpha: f64) -> TtTensor {
        let mut t = self.clone();
        t.scale(alpha);
        t
    }

    /// Formal sum by block concatenation of cores; ranks add.
    pub fn add(&self, other: &TtTensor) -> Result<TtTensor> {
        if self.shape != other.shape {
            return Err(Error::shape(self.shape.dims(), other.shape.dims()));
        }
        let d = self.order();
        if d == 1 {
            let data = self.cores[0]
                .data
                .iter()
                .zip(&other.cores[0].data)
                .map(|(x, y)| x + y)
                .collect();
            return TtTensor::new(vec![TtCore::from_vec(1, self.shape.dims()[0], 1, data)?]);
        }
        let cores = (0..d)
            .map(|i| {
                let (a, b) = (&self.cores[i], &other.cores[i]);
                let left = if i == 0 { 1 } else { a.left + b.left };
                let right = if i == d - 1 { 1 } else { a.right + b.right };
                let mut c = TtCore::zeros(left, a.size, right);
                let (bl, br) = (if i == 0 { 0 } else { a.left }, if i == d - 1 { 0 } else { a.right });
                for mu in 0..a.size {
                    for y in 0..a.right {
                        for x in 0..a.left {
                            c.set(x, mu, y, a.get(x, mu, y));
                        }
                    }
                    for y in 0..b.right {
                        for x in 0..b.left {
                            c.set(x + bl, mu, y + br, b.get(x, mu, y));
                        }
                    }
                }
                c
            })
            .collect();
        TtTensor::new(cores)
    }

    /// QR sweep left to right; afterwards cores `0..d−1` are left-orthogonal.
    /// Ranks may shrink to `min(r_{i−1}nᵢ, rᵢ)`.
    pub fn left_orthogonalize(&mut self) {
        self.left_orthogonalize_upto(self.order() - 1);
    }

    /// Left-orthogonalizes cores `0..p`, pushing the norm into core `p`.
    pub fn left_orthogonalize_upto(&mut self, p: usize) {
        let start = match self.ortho {
            Orthogonality::Left(q) => q.min(p),
            _ => 0,
        };
        for i in start..p {
            let size = self.cores[i].size;
            let (q, r) = linalg::qr(&self.cores[i].left_unfolding());
            self.cores[i] = TtCore::from_left_unfolding(q, size);
            let next = &self.cores[i + 1];
            let merged = r * next.right_unfolding();
            self.cores[i + 1] = TtCore::from_right_unfolding(merged, next.size);
        }
        self.ortho = Orthogonality::Left(p);
        self.sigma = None;
    }

    /// QR sweep right to left; afterwards cores `1..d` are right-orthogonal.
    pub fn right_orthogonalize(&mut self) {
        self.right_orthogonalize_from(0);
    }

    /// Right-orthogonalizes cores `p+1..d`, pushing the norm into core `p`.
    pub fn right_orthogonalize_from(&mut self, p: usize) {
        let d = self.order();
        let start = match self.ortho {
            Orthogonality::Right(q) => q.max(p),
            _ => d - 1,
        };
        for i in (p + 1..=start).rev() {
            let size = self.cores[i].size;
            let (q, r) = linalg::qr(&self.cores[i].right_unfolding().transpose());
            self.cores[i] = TtCore::from_right_unfolding(q.transpose(), size);
            let prev = &self.cores[i - 1];
            let merged = prev.left_unfolding() * r.transpose();
            self.cores[i - 1] = TtCore::from_left_unfolding(merged, prev.size);
        }
        self.ortho = Orthogonality::Right(p);
        self.sigma = None;
    }

    /// `max_j ‖LⱼᵀLⱼ − I‖` over `j < p` (left) or `‖RⱼRⱼᵀ − I‖` over `j > p` (right).
    pub fn orthogonality_defect(&self) -> f64 {
        match self.ortho {
            Orthogonality::None => f64::INFINITY,
            Orthogonality::Left(p) => self.cores[..p]
                .iter()
                .map(|c| linalg::orthonormality_defect(&c.left_unfolding()))
                .fold(0.0, f64::max),
            Orthogonality::Right(p) => self.cores[p + 1..]
                .iter()
                .map(|c| linalg::orthonormality_defect(&c.right_unfolding().transpose()))
                .fold(0.0, f64::max),
        }
    }

    pub fn truncate(&self, r: &RankTuple) -> Result<TtTensor> {
        tt_truncate(self, r)
    }
}

fn full_ranks(bonds: &[usize]) -> Vec<usize> {
    let mut r = Vec::with_capacity(bonds.len() + 2);
    r.push(1);
    r.extend_from_slice(bonds);
    r.push(1);
    r
}

fn check_tt_rank(r: &RankTuple, d: usize) -> Result<()> {
    if r.format != Format::Tt {
        return Err(Error::InvalidRank(format!("expected a TT rank tuple, got {} {r}", r.format)));
    }
    if r.values.len() + 1 != d {
        return Err(Error::InvalidRank(format!("TT rank needs {} entries, got {r}", d - 1)));
    }
    if r.values.contains(&0) {
        return Err(Error::InvalidRank(format!("ranks {r} must all be >= 1")));
    }
    Ok(())
}

/// TT-SVD by successive SVDs of the reshaped remainder, left to right.
///
/// With [`TtTarget::Ranks`] this is the hard-thresholding operator `H_r`.
/// The result is left-orthogonal up to the last core, which carries the norm.
pub fn tt_svd(u: &DenseTensor, target: &TtTarget) -> Result<TtTensor> {
    let shape = u.shape();
    let d = shape.order();
    let dims = shape.dims();
    if let TtTarget::Ranks(r) = target {
        check_tt_rank(r, d)?;
        r.validate(shape)?;
    }
    let mut cores = Vec::with_capacity(d);
    let mut sigmas = Vec::with_capacity(d.saturating_sub(1));
    let mut rest = Matrix::from_column_slice(u.len(), 1, u.values());
    let mut r_prev = 1;
    for i in 0..d - 1 {
        let rows = r_prev * dims[i];
        let cols = rest.len() / rows;
        let v = reshape(rest, rows, cols);
        let linalg::Svd { u: uu, sigma, vt } = linalg::svd(&v);
        let keep = match target {
            TtTarget::Exact => linalg::numerical_rank(&sigma, rows, cols).max(1),
            TtTarget::Ranks(r) => r.values[i].min(sigma.len()),
        };
        cores.push(TtCore::from_left_unfolding(uu.columns(0, keep).into_owned(), dims[i]));
        let mut carry = vt.rows(0, keep).into_owned();
        for (k, mut row) in carry.row_iter_mut().enumerate() {
            row *= sigma[k];
        }
        rest = carry;
        sigmas.push(sigma);
        r_prev = keep;
    }
    let last = reshape(rest, r_prev * dims[d - 1], 1);
    cores.push(TtCore::from_left_unfolding(last, dims[d - 1]));
    let mut t = TtTensor::new(cores)?;
    t.ortho = Orthogonality::Left(d - 1);
    t.sigma = Some(sigmas);
    Ok(t)
}

/// TT rounding: right-orthogonalize, then a truncated-SVD sweep left to right.
/// Entries of `r` above the current ranks leave those bonds unchanged.
pub fn tt_truncate(t: &TtTensor, r: &RankTuple) -> Result<TtTensor> {
    let d = t.order();
    check_tt_rank(r, d)?;
    let mut t = t.clone();
    t.right_orthogonalize();
    let mut sigmas = Vec::with_capacity(d - 1);
    for i in 0..d - 1 {
        let core = &t.cores[i];
        let size = core.size;
        let linalg::Svd { u, sigma, vt } = linalg::svd(&core.left_unfolding());
        let keep = r.values[i].min(sigma.len());
        t.cores[i] = TtCore::from_left_unfolding(u.columns(0, keep).into_owned(), size);
        let mut carry = vt.rows(0, keep).into_owned();
        for (k, mut row) in carry.row_iter_mut().enumerate() {
            row *= sigma[k];
        }
        let next = &t.cores[i + 1];
        let merged = carry * next.right_unfolding();
        t.cores[i + 1] = TtCore::from_right_unfolding(merged, next.size);
        sigmas.push(sigma);
    }
    t.ortho = Orthogonality::Left(d - 1);
    t.sigma = Some(sigmas);
    Ok(t)
}

/// Interface matrices `F^{(i)}` of size `N_{<i} × r_{i−1}` for `i = 0..d`,
/// built from the first `i` cores (`F^{(0)}` is the 1×1 identity).
pub(crate) fn left_frames(cores: &[TtCore]) -> Vec<Matrix> {
    let mut frames = Vec::with_capacity(cores.len());
    let mut f = Matrix::from_element(1, 1, 1.0);
    for core in cores {
        let rows = f.nrows();
        let next = reshape(&f * core.right_unfolding(), rows * core.size, core.right);
        frames.push(f);
        f = next;
    }
    frames
}

/// Interface matrices `G^{(i)}` of size `rᵢ × N_{>i}` for `i = 0..d`, built from
/// the cores after `i` (`G^{(d−1)}` is the 1×1 identity).
pub(crate) fn right_frames(cores: &[TtCore]) -> Vec<Matrix> {
    let d = cores.len();
    let mut frames = vec![Matrix::zeros(0, 0); d];
    let mut g = Matrix::from_element(1, 1, 1.0);
    for i in (0..d).rev() {
        let core = &cores[i];
        let cols = g.ncols();
        let next = reshape(core.left_unfolding() * &g, core.left, core.size * cols);
        frames[i] = g;
        g = next;
    }
    frames
}

/// `Y(a, μ, b) = Σ F(x, a)·g(x, μ, y)·G(b, y)` returned as the
/// `(r_{i−1}nᵢ) × rᵢ` left unfolding.
pub(crate) fn contract_with_frames(g: &[f64], n: usize, left: &Matrix, right: &Matrix) -> Matrix {
    let before = left.nrows();
    let after = right.ncols();
    let view = DMatrixView::from_slice(g, before, n * after);
    let half = left.transpose() * view; // r_{i−1} × (n N_{>i})
    let half = reshape(half, left.ncols() * n, after);
    half * right.transpose()
}
