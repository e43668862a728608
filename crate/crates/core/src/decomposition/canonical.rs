use super::tt::{TtCore, TtTensor};
use crate::error::{Error, Result};
use crate::tensor::{DenseTensor, Matrix, Shape};

/// `Σ_k u¹_k ⊗ … ⊗ u^d_k`, stored as one `nᵢ × R` matrix per mode whose
/// columns are the vectors `uⁱ_k`.
#[derive(Debug, Clone)]
pub struct CanonicalTensor {
    shape: Shape,
    factors: Vec<Matrix>,
}

impl CanonicalTensor {
    pub fn new(factors: Vec<Matrix>) -> Result<Self> {
        let terms = factors.first().map(|f| f.ncols()).unwrap_or(0);
        if terms == 0 {
            return Err(Error::InvalidArgument("a canonical tensor needs at least one term".into()));
        }
        if factors.iter().any(|f| f.ncols() != terms) {
            return Err(Error::InvalidArgument("factors disagree on the number of terms".into()));
        }
        let shape = Shape::new(factors.iter().map(|f| f.nrows()).collect::<Vec<_>>())?;
        Ok(CanonicalTensor { shape, factors })
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn terms(&self) -> usize {
        self.factors[0].ncols()
    }

    pub fn factors(&self) -> &[Matrix] {
        &self.factors
    }

    pub fn to_dense(&self) -> DenseTensor {
        let mut out = DenseTensor::zeros(self.shape.clone());
        for k in 0..self.terms() {
            let cols: Vec<Vec<f64>> = self.factors.iter().map(|f| f.column(k).iter().copied().collect()).collect();
            let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
            let term = DenseTensor::outer(&refs).expect("columns are non-empty");
            out.axpy(1.0, &term).expect("same shape");
        }
        out
    }

    pub fn to_tt(&self) -> TtTensor {
        canonical_to_tt(self)
    }
}

/// Diagonal construction: all bond ranks equal `R`, interior cores are
/// `b(k, μ, k) = uⁱ_k(μ)` and zero off the diagonal.
pub fn canonical_to_tt(c: &CanonicalTensor) -> TtTensor {
    let d = c.factors.len();
    let r = c.terms();
    if d == 1 {
        let f = &c.factors[0];
        let data = (0..f.nrows()).map(|mu| f.row(mu).sum()).collect();
        return TtTensor::new(vec![TtCore::from_vec(1, f.nrows(), 1, data).expect("sizes agree")])
            .expect("single core");
    }
    let cores = c
        .factors
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let n = f.nrows();
            let (left, right) = match i {
                0 => (1, r),
                _ if i == d - 1 => (r, 1),
                _ => (r, r),
            };
            let mut core = TtCore::zeros(left, n, right);
            for k in 0..r {
                let (a, b) = (if left == 1 { 0 } else { k }, if right == 1 { 0 } else { k });
                for mu in 0..n {
                    core.set(a, mu, b, f[(mu, k)]);
                }
            }
            core
        })
        .collect();
    TtTensor::new(cores).expect("ranks are consistent by construction")
}
