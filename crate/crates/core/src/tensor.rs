//! Dense order-d tensors over `f64`.
//!
//! Entries are stored co-lexicographically: the first index runs fastest, so
//! the offset of `(μ₁, …, μ_d)` is `μ₁ + n₁·(μ₂ + n₂·(μ₃ + …))`. Multi-indices
//! are 0-based in the API. With this layout every prefix unfolding
//! `U^{1..i}` is the column-major matrix sharing the tensor's buffer, which is
//! what the tensor-train routines rely on.

use std::io::Write;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column-major dense matrix used for unfoldings, factors and frames.
pub type Matrix = DMatrix<f64>;

/// Mode sizes `(n₁, …, n_d)` of a tensor.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Shape {
    dims: Vec<usize>,
}

impl TryFrom<Vec<usize>> for Shape {
    type Error = Error;

    fn try_from(dims: Vec<usize>) -> Result<Self> {
        Shape::new(dims)
    }
}

impl From<Shape> for Vec<usize> {
    fn from(shape: Shape) -> Self {
        shape.dims
    }
}

impl Shape {
    pub fn new(dims: impl Into<Vec<usize>>) -> Result<Self> {
        let dims = dims.into();
        if dims.is_empty() {
            return Err(Error::InvalidArgument("shape must have at least one mode".into()));
        }
        if dims.contains(&0) {
            return Err(Error::InvalidArgument(format!(
                "shape {dims:?} has a zero-sized mode"
            )));
        }
        Ok(Shape { dims })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    /// Total number of entries `N = n₁·…·n_d`.
    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Product of the mode sizes in `range`.
    pub fn span(&self, range: std::ops::Range<usize>) -> usize {
        self.dims[range].iter().product()
    }

    /// Co-lexicographic offset of a 0-based multi-index.
    pub fn linearize(&self, index: &[usize]) -> Result<usize> {
        if index.len() != self.dims.len() || index.iter().zip(&self.dims).any(|(&i, &n)| i >= n) {
            return Err(Error::IndexOutOfRange {
                index: index.to_vec(),
                dims: self.dims.clone(),
            });
        }
        let mut offset = 0;
        for (&i, &n) in index.iter().zip(&self.dims).rev() {
            offset = offset * n + i;
        }
        Ok(offset)
    }

    /// Inverse of [`Shape::linearize`].
    pub fn delinearize(&self, mut offset: usize) -> Result<Vec<usize>> {
        if offset >= self.len() {
            return Err(Error::InvalidArgument(format!(
                "offset {offset} out of range for shape {:?}",
                self.dims
            )));
        }
        Ok(self
            .dims
            .iter()
            .map(|&n| {
                let i = offset % n;
                offset /= n;
                i
            })
            .collect())
    }

    /// The same shape with mode `mode` resized to `size`.
    pub fn with_mode(&self, mode: usize, size: usize) -> Result<Shape> {
        let mut dims = self.dims.clone();
        dims[mode] = size;
        Shape::new(dims)
    }
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.dims.iter().map(|n| n.to_string()).collect();
        f.write_str(&parts.join("x"))
    }
}

/// Steps through every multi-index of `dims` in co-lexicographic order.
fn advance(index: &mut [usize], dims: &[usize]) {
    for (i, &n) in index.iter_mut().zip(dims) {
        *i += 1;
        if *i < n {
            return;
        }
        *i = 0;
    }
}

/// Dense tensor in `R^{n₁×…×n_d}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseTensor {
    shape: Shape,
    values: Vec<f64>,
}

impl DenseTensor {
    pub fn zeros(shape: Shape) -> Self {
        let values = vec![0.0; shape.len()];
        DenseTensor { shape, values }
    }

    pub fn from_vec(shape: Shape, values: Vec<f64>) -> Result<Self> {
        if values.len() != shape.len() {
            return Err(Error::InvalidArgument(format!(
                "{} values supplied for shape {shape} ({} entries)",
                values.len(),
                shape.len()
            )));
        }
        Ok(DenseTensor { shape, values })
    }

    /// Builds a tensor by evaluating `f` at every 0-based multi-index.
    pub fn from_fn(shape: Shape, mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let mut index = vec![0; shape.order()];
        let mut values = Vec::with_capacity(shape.len());
        for _ in 0..shape.len() {
            values.push(f(&index));
            advance(&mut index, shape.dims());
        }
        DenseTensor { shape, values }
    }

    /// Entries drawn i.i.d. from N(0, 1).
    pub fn random_normal<R: Rng + ?Sized>(shape: Shape, rng: &mut R) -> Self {
        let values = (0..shape.len()).map(|_| rng.sample(StandardNormal)).collect();
        DenseTensor { shape, values }
    }

    /// Outer product `a¹ ⊗ … ⊗ a^d`.
    pub fn outer(vectors: &[&[f64]]) -> Result<Self> {
        let shape = Shape::new(vectors.iter().map(|v| v.len()).collect::<Vec<_>>())?;
        Ok(DenseTensor::from_fn(shape, |idx| {
            idx.iter().zip(vectors).map(|(&i, v)| v[i]).product()
        }))
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn dims(&self) -> &[usize] {
        self.shape.dims()
    }

    pub fn order(&self) -> usize {
        self.shape.order()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, index: &[usize]) -> Result<f64> {
        Ok(self.values[self.shape.linearize(index)?])
    }

    pub fn set(&mut self, index: &[usize], value: f64) -> Result<()> {
        let offset = self.shape.linearize(index)?;
        self.values[offset] = value;
        Ok(())
    }

    fn check_same_shape(&self, other: &DenseTensor) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::shape(self.dims(), other.dims()));
        }
        Ok(())
    }

    /// Euclidean inner product `Σ_μ u(μ)·v(μ)`.
    pub fn inner(&self, other: &DenseTensor) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(dot(&self.values, &other.values))
    }

    pub fn norm(&self) -> f64 {
        dot(&self.values, &self.values).sqrt()
    }

    pub fn norm_squared(&self) -> f64 {
        dot(&self.values, &self.values)
    }

    /// `self += alpha · other`.
    pub fn axpy(&mut self, alpha: f64, other: &DenseTensor) -> Result<()> {
        self.check_same_shape(other)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += alpha * b;
        }
        Ok(())
    }

    pub fn scale(&mut self, alpha: f64) {
        self.values.iter_mut().for_each(|v| *v *= alpha);
    }

    pub fn scaled(&self, alpha: f64) -> DenseTensor {
        let mut out = self.clone();
        out.scale(alpha);
        out
    }

    pub fn add(&self, other: &DenseTensor) -> Result<DenseTensor> {
        let mut out = self.clone();
        out.axpy(1.0, other)?;
        Ok(out)
    }

    pub fn sub(&self, other: &DenseTensor) -> Result<DenseTensor> {
        let mut out = self.clone();
        out.axpy(-1.0, other)?;
        Ok(out)
    }

    /// `‖self − other‖`.
    pub fn distance(&self, other: &DenseTensor) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt())
    }

    /// Matricisation `U^α`: rows indexed by the modes of `row_modes` (in the
    /// given order, first listed mode fastest), columns by the remaining
    /// modes in increasing order. Both use co-lexicographic numbering.
    /// Passing every mode yields the vectorisation `U^D` as an `N × 1` matrix.
    pub fn unfold(&self, row_modes: &[usize]) -> Result<Matrix> {
        let d = self.order();
        validate_modes(row_modes, d)?;
        let dims = self.dims();
        let rows: usize = row_modes.iter().map(|&i| dims[i]).product();
        let cols = self.len() / rows;

        if row_modes.iter().enumerate().all(|(k, &i)| k == i) {
            return Ok(Matrix::from_column_slice(rows, cols, &self.values));
        }

        let (row_stride, col_stride) = unfolding_strides(dims, row_modes);
        let mut out = Matrix::zeros(rows, cols);
        let mut index = vec![0; d];
        let out_slice = out.as_mut_slice();
        for &v in &self.values {
            let r: usize = index.iter().zip(&row_stride).map(|(a, b)| a * b).sum();
            let c: usize = index.iter().zip(&col_stride).map(|(a, b)| a * b).sum();
            out_slice[r + rows * c] = v;
            advance(&mut index, dims);
        }
        Ok(out)
    }

    /// Inverse of [`DenseTensor::unfold`].
    pub fn fold(matrix: &Matrix, row_modes: &[usize], shape: &Shape) -> Result<DenseTensor> {
        let d = shape.order();
        validate_modes(row_modes, d)?;
        let dims = shape.dims();
        let rows: usize = row_modes.iter().map(|&i| dims[i]).product();
        let cols = shape.len() / rows;
        if matrix.nrows() != rows || matrix.ncols() != cols {
            return Err(Error::shape(&[rows, cols], &[matrix.nrows(), matrix.ncols()]));
        }
        if row_modes.iter().enumerate().all(|(k, &i)| k == i) {
            return DenseTensor::from_vec(shape.clone(), matrix.as_slice().to_vec());
        }
        let (row_stride, col_stride) = unfolding_strides(dims, row_modes);
        let src = matrix.as_slice();
        let mut index = vec![0; d];
        let mut values = Vec::with_capacity(shape.len());
        for _ in 0..shape.len() {
            let r: usize = index.iter().zip(&row_stride).map(|(a, b)| a * b).sum();
            let c: usize = index.iter().zip(&col_stride).map(|(a, b)| a * b).sum();
            values.push(src[r + rows * c]);
            advance(&mut index, dims);
        }
        DenseTensor::from_vec(shape.clone(), values)
    }

    /// Mode-`mode` product `u ×_mode M`: contracts mode `mode` with the
    /// columns of `matrix`, replacing `n_mode` by `matrix.nrows()`.
    pub fn mode_product(&self, matrix: &Matrix, mode: usize) -> Result<DenseTensor> {
        let dims = self.dims();
        if mode >= dims.len() {
            return Err(Error::InvalidArgument(format!(
                "mode {mode} out of range for order {}",
                dims.len()
            )));
        }
        if matrix.ncols() != dims[mode] {
            return Err(Error::shape(&[matrix.nrows(), dims[mode]], &[matrix.nrows(), matrix.ncols()]));
        }
        let left = self.shape.span(0..mode);
        let n = dims[mode];
        let right = self.shape.span(mode + 1..dims.len());
        let k = matrix.nrows();
        let out_shape = self.shape.with_mode(mode, k)?;
        let mut out = vec![0.0; left * k * right];
        let m = matrix.as_slice();
        for r in 0..right {
            let src = &self.values[r * left * n..(r + 1) * left * n];
            let dst = &mut out[r * left * k..(r + 1) * left * k];
            for j in 0..n {
                let col = &src[j * left..(j + 1) * left];
                for i in 0..k {
                    let a = m[i + k * j];
                    if a == 0.0 {
                        continue;
                    }
                    let row = &mut dst[i * left..(i + 1) * left];
                    for (o, &c) in row.iter_mut().zip(col) {
                        *o += a * c;
                    }
                }
            }
        }
        DenseTensor::from_vec(out_shape, out)
    }

    /// Writes one CSV line per entry, `μ₁,…,μ_d,value`, with 1-based indices
    /// in storage order.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut index = vec![0; self.order()];
        for &v in &self.values {
            for i in &index {
                write!(out, "{},", i + 1)?;
            }
            writeln!(out, "{v:e}")?;
            advance(&mut index, self.dims());
        }
        Ok(())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn validate_modes(modes: &[usize], order: usize) -> Result<()> {
    if modes.is_empty() {
        return Err(Error::InvalidArgument("row mode set must be nonempty".into()));
    }
    let mut seen = vec![false; order];
    for &m in modes {
        if m >= order || seen[m] {
            return Err(Error::InvalidArgument(format!(
                "row modes {modes:?} invalid for order {order}"
            )));
        }
        seen[m] = true;
    }
    Ok(())
}

/// Per-mode strides of the row and column index of `U^α`.
fn unfolding_strides(dims: &[usize], row_modes: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let d = dims.len();
    let mut row_stride = vec![0; d];
    let mut col_stride = vec![0; d];
    let mut s = 1;
    for &m in row_modes {
        row_stride[m] = s;
        s *= dims[m];
    }
    let mut s = 1;
    for m in 0..d {
        if !row_modes.contains(&m) {
            col_stride[m] = s;
            s *= dims[m];
        }
    }
    (row_stride, col_stride)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn shape(d: &[usize]) -> Shape {
        Shape::new(d.to_vec()).unwrap()
    }

    #[test]
    fn linearize_examples() {
        let s = shape(&[2, 2, 2]);
        assert_eq!(s.linearize(&[0, 0, 0]).unwrap(), 0);
        assert_eq!(s.linearize(&[1, 1, 1]).unwrap(), 7);
        // (2,1,1) in 1-based notation; located by enumerating all 24 indices.
        let s = shape(&[2, 3, 4]);
        let mut enumerated = Vec::new();
        for c in 0..4 {
            for b in 0..3 {
                for a in 0..2 {
                    enumerated.push([a, b, c]);
                }
            }
        }
        let pos = enumerated.iter().position(|i| i == &[1, 0, 0]).unwrap();
        assert_eq!(pos, 1);
        assert_eq!(s.linearize(&[1, 0, 0]).unwrap(), pos);
        for (k, idx) in enumerated.iter().enumerate() {
            assert_eq!(s.linearize(idx).unwrap(), k);
            assert_eq!(s.delinearize(k).unwrap(), idx.to_vec());
        }
    }

    #[test]
    fn linearize_rejects_out_of_range() {
        let s = shape(&[2, 3]);
        assert!(matches!(s.linearize(&[2, 0]), Err(Error::IndexOutOfRange { .. })));
        assert!(s.linearize(&[0]).is_err());
    }

    #[test]
    fn shape_rejects_zero_and_empty() {
        assert!(Shape::new(vec![]).is_err());
        assert!(Shape::new(vec![3, 0]).is_err());
    }

    #[test]
    fn unfold_mode_one_of_counting_tensor() {
        let s = shape(&[2, 2, 2]);
        let u = DenseTensor::from_fn(s.clone(), |i| s.linearize(i).unwrap() as f64 + 1.0);
        let m = u.unfold(&[0]).unwrap();
        assert_eq!((m.nrows(), m.ncols()), (2, 4));
        // Oracle: columns enumerate (μ₂, μ₃) co-lexicographically.
        let mut col = 0;
        for c in 0..2 {
            for b in 0..2 {
                for a in 0..2 {
                    assert_eq!(m[(a, col)], u.get(&[a, b, c]).unwrap());
                }
                col += 1;
            }
        }
        assert_eq!(m.row(0).iter().copied().collect::<Vec<_>>(), vec![1.0, 3.0, 5.0, 7.0]);
    }

    #[test]
    fn unfold_dimensions_and_rank_one() {
        let u = DenseTensor::outer(&[&[1.0, 2.0], &[1.0, -1.0, 3.0], &[0.5, 1.0, 2.0, 4.0]]).unwrap();
        let m = u.unfold(&[0, 1]).unwrap();
        assert_eq!((m.nrows(), m.ncols()), (6, 4));
        let m2 = u.unfold(&[1]).unwrap();
        assert_eq!(m2.rank(1e-12), 1);
    }

    #[test]
    fn fold_examples() {
        let s = shape(&[2, 3, 4]);
        let z = DenseTensor::fold(&Matrix::zeros(2, 12), &[0], &s).unwrap();
        assert_eq!(z, DenseTensor::zeros(s.clone()));
        let ones = DenseTensor::fold(&Matrix::from_element(6, 4, 1.0), &[0, 1], &s).unwrap();
        assert!(ones.values().iter().all(|&v| v == 1.0));
        assert!(DenseTensor::fold(&Matrix::zeros(3, 8), &[0], &s).is_err());
        assert!(DenseTensor::zeros(s).unfold(&[]).is_err());
    }

    #[test]
    fn inner_matches_direct_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = shape(&[2, 2, 2]);
        let u = DenseTensor::random_normal(s.clone(), &mut rng);
        let v = DenseTensor::random_normal(s, &mut rng);
        let mut direct = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    direct += u.get(&[a, b, c]).unwrap() * v.get(&[a, b, c]).unwrap();
                }
            }
        }
        assert!((u.inner(&v).unwrap() - direct).abs() < 1e-14);
        let e = [1.0, 0.0];
        let unit = DenseTensor::outer(&[&e, &e, &e]).unwrap();
        assert_eq!(unit.inner(&unit).unwrap(), 1.0);
        assert_eq!(DenseTensor::zeros(shape(&[3, 3])).norm(), 0.0);
        assert!(u.inner(&DenseTensor::zeros(shape(&[2, 4]))).is_err());
    }

    #[test]
    fn mode_product_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = shape(&[3, 4, 2]);
        let u = DenseTensor::random_normal(s.clone(), &mut rng);
        for mode in 0..3 {
            let id = Matrix::identity(s.dims()[mode], s.dims()[mode]);
            assert_eq!(u.mode_product(&id, mode).unwrap(), u);
        }
        let sums = u.mode_product(&Matrix::from_element(1, 3, 1.0), 0).unwrap();
        assert_eq!(sums.dims(), &[1, 4, 2]);
        for b in 0..4 {
            for c in 0..2 {
                let direct: f64 = (0..3).map(|a| u.get(&[a, b, c]).unwrap()).sum();
                assert!((sums.get(&[0, b, c]).unwrap() - direct).abs() < 1e-14);
            }
        }
        // Agrees with fold(M · U^{(i)}).
        let m = Matrix::from_fn(5, 4, |i, j| (i as f64) - 0.5 * j as f64);
        let direct = DenseTensor::fold(&(&m * u.unfold(&[1]).unwrap()), &[1], &s.with_mode(1, 5).unwrap()).unwrap();
        assert!(u.mode_product(&m, 1).unwrap().distance(&direct).unwrap() < 1e-12);
        assert!(u.mode_product(&m, 0).is_err());
    }

    #[test]
    fn orthogonal_mode_products_preserve_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = shape(&[4, 3, 5]);
        let u = DenseTensor::random_normal(s.clone(), &mut rng);
        let mut v = u.clone();
        for mode in 0..3 {
            let n = s.dims()[mode];
            let q = Matrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal)).qr().q();
            v = v.mode_product(&q, mode).unwrap();
        }
        assert!((v.norm() - u.norm()).abs() < 1e-12 * u.norm());
    }

    #[test]
    fn csv_dump_is_one_based() {
        let u = DenseTensor::from_vec(shape(&[2, 1]), vec![1.5, -2.0]).unwrap();
        let mut buf = Vec::new();
        u.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "1,1,1.5e0\n2,1,-2e0\n");
    }
}
