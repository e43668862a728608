//! Random low-rank test tensors.

use rand::Rng;

use crate::decomposition::{Format, RankTuple, TtTensor, TuckerTensor};
use crate::error::Result;
use crate::linalg;
use crate::tensor::{DenseTensor, Matrix, Shape};

/// Tucker tensor with an `N(0,1)` core and factors `Bʲ` equal to the first `rⱼ`
/// left singular vectors of an `nⱼ × nⱼ` matrix with `N(0,1)` entries.
pub fn tucker_instance<R: Rng + ?Sized>(shape: &Shape, ranks: &RankTuple, rng: &mut R) -> Result<TuckerTensor> {
    ranks.validate(shape)?;
    let core = DenseTensor::random_normal(Shape::new(ranks.values.clone())?, rng);
    let factors = shape
        .dims()
        .iter()
        .zip(&ranks.values)
        .map(|(&n, &r)| {
            let m = Matrix::from_fn(n, n, |_, _| rng.sample(rand_distr::StandardNormal));
            linalg::left_svd(&m).0.columns(0, r).into_owned()
        })
        .collect();
    TuckerTensor::new(core, factors)
}

/// TT tensor with independent `N(0,1)` core entries.
pub fn tt_instance<R: Rng + ?Sized>(shape: &Shape, ranks: &RankTuple, rng: &mut R) -> Result<TtTensor> {
    ranks.validate(shape)?;
    TtTensor::random(shape, ranks, rng)
}

/// Dense rank-`r` tensor from the generator matching `ranks.format`.
pub fn low_rank_instance<R: Rng + ?Sized>(shape: &Shape, ranks: &RankTuple, rng: &mut R) -> Result<DenseTensor> {
    Ok(match ranks.format {
        Format::Tucker => tucker_instance(shape, ranks, rng)?.to_dense(),
        Format::Tt => tt_instance(shape, ranks, rng)?.to_dense(),
    })
}
