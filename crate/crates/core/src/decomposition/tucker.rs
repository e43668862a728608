use super::{Format, RankTuple};
use crate::error::{Error, Result};
use crate::linalg;
use crate::tensor::{DenseTensor, Matrix, Shape};

/// `u = c ×₁ B¹ ×₂ … ×_d B^d` with orthonormal factors `Bⁱ` (`nᵢ × rᵢ`).
#[derive(Debug, Clone)]
pub struct TuckerTensor {
    shape: Shape,
    core: DenseTensor,
    factors: Vec<Matrix>,
    sigma: Vec<Vec<f64>>,
}

impl TuckerTensor {
    /// Assembles a Tucker tensor; factor columns are not checked for orthonormality.
    pub fn new(core: DenseTensor, factors: Vec<Matrix>) -> Result<Self> {
        if factors.len() != core.order() {
            return Err(Error::InvalidArgument(format!(
                "{} factors for an order-{} core",
                factors.len(),
                core.order()
            )));
        }
        for (i, f) in factors.iter().enumerate() {
            if f.ncols() != core.dims()[i] {
                return Err(Error::shape(&[f.nrows(), core.dims()[i]], &[f.nrows(), f.ncols()]));
            }
        }
        let shape = Shape::new(factors.iter().map(|f| f.nrows()).collect::<Vec<_>>())?;
        Ok(TuckerTensor {
            shape,
            core,
            factors,
            sigma: Vec::new(),
        })
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn core(&self) -> &DenseTensor {
        &self.core
    }

    pub fn factors(&self) -> &[Matrix] {
        &self.factors
    }

    /// Mode singular values `σ^{(i)}` of the decomposed tensor (full lists);
    /// empty when the tensor was assembled by hand.
    pub fn sigma(&self) -> &[Vec<f64>] {
        &self.sigma
    }

    pub fn ranks(&self) -> RankTuple {
        RankTuple {
            format: Format::Tucker,
            values: self.core.dims().to_vec(),
        }
    }

    /// `√(Σ_{k>rᵢ} (σ^{(i)}_k)²)` per mode.
    pub fn discarded_norms(&self) -> Vec<f64> {
        self.sigma
            .iter()
            .zip(self.core.dims())
            .map(|(s, &r)| linalg::tail_norm(s, r))
            .collect()
    }

    pub fn to_dense(&self) -> DenseTensor {
        let mut t = self.core.clone();
        for (i, f) in self.factors.iter().enumerate() {
            t = t.mode_product(f, i).expect("factor matches core");
        }
        t
    }

    /// Orthogonal projection onto the tangent space of the fixed-multilinear-rank
    /// manifold at this point: `Σᵢ g ×ᵢ Qᵢ ×_{j≠i} Pⱼ + g ×ⱼ Pⱼ` with
    /// `Pⱼ = BʲBʲᵀ`, `Qᵢ = I − Pᵢ`, evaluated as `Σᵢ g ×_{j≠i} Pⱼ − (d−1)·g ×ⱼ Pⱼ`.
    pub fn project_tangent(&self, g: &DenseTensor) -> Result<DenseTensor> {
        if g.shape() != &self.shape {
            return Err(Error::shape(self.shape.dims(), g.dims()));
        }
        let d = self.factors.len();
        let proj: Vec<Matrix> = self.factors.iter().map(|b| b * b.transpose()).collect();
        let mut all = g.clone();
        for (j, p) in proj.iter().enumerate() {
            all = all.mode_product(p, j)?;
        }
        let mut out = all.scaled(1.0 - d as f64);
        for i in 0..d {
            let mut term = g.clone();
            for (j, p) in proj.iter().enumerate() {
                if j != i {
                    term = term.mode_product(p, j)?;
                }
            }
            out.axpy(1.0, &term)?;
        }
        Ok(out)
    }

    pub(crate) fn into_parts(self) -> (DenseTensor, Vec<Matrix>) {
        (self.core, self.factors)
    }

    pub(crate) fn with_sigma(mut self, sigma: Vec<Vec<f64>>) -> Self {
        self.sigma = sigma;
        self
    }
}

fn decompose(u: &DenseTensor, target: Option<&RankTuple>) -> TuckerTensor {
    let d = u.order();
    let mut factors = Vec::with_capacity(d);
    let mut sigmas = Vec::with_capacity(d);
    for i in 0..d {
        let m = u.unfold(&[i]).expect("single mode is a valid unfolding");
        let (left, sigma) = linalg::left_svd(&m);
        let keep = match target {
            None => linalg::numerical_rank(&sigma, m.nrows(), m.ncols()).max(1),
            Some(r) => r.values[i].min(left.ncols()),
        };
        factors.push(left.columns(0, keep).into_owned());
        sigmas.push(sigma);
    }
    let mut core = u.clone();
    for (i, f) in factors.iter().enumerate() {
        core = core.mode_product(&f.transpose(), i).expect("factor matches tensor");
    }
    TuckerTensor {
        shape: u.shape().clone(),
        core,
        factors,
        sigma: sigmas,
    }
}

/// Exact HOSVD; mode ranks are detected numerically. The zero tensor gives
/// ranks `(1,…,1)` and a zero core.
pub fn hosvd(u: &DenseTensor) -> TuckerTensor {
    decompose(u, None)
}

/// Truncated HOSVD, the Tucker instance of `H_r`.
pub fn truncate_hosvd(u: &DenseTensor, r: &RankTuple) -> Result<TuckerTensor> {
    if r.format != Format::Tucker {
        return Err(Error::InvalidRank(format!("expected a Tucker rank tuple, got {} {r}", r.format)));
    }
    r.validate(u.shape())?;
    Ok(decompose(u, Some(r)))
}
