//! Fixed-rank TT manifold: tangent spaces, orthogonal projection, embedding of
//! tangent vectors as rank-`2r` TT tensors, and the truncation retraction.
//!
//! A base point `u` is held in two gauges at once: left-orthogonal cores
//! `L₁,…,L_{d−1}` followed by a core `S` carrying the norm, and right-orthogonal
//! cores `R₂,…,R_d`. A tangent vector is
//! `δu = Σᵢ L₁···L_{i−1} δBᵢ R_{i+1}···R_d` with the gauge `Lᵢᵀ δBᵢ = 0` for
//! `i < d`, which makes the `d` summands pairwise orthogonal.

use std::sync::Arc;

use log::warn;
use rand::Rng;

use crate::decomposition::{
    contract_with_frames, left_frames, reshape, right_frames, tt_truncate, RankTuple, TtCore, TtTensor,
};
use crate::error::{Error, Result};
use crate::linalg;
use crate::tensor::{DenseTensor, Matrix};

/// Tangent space `T_u M_r` at a TT tensor of exact rank `r`.
#[derive(Debug, Clone)]
pub struct TangentSpace {
    base: TtTensor,
    right: Vec<TtCore>,
    lframes: Vec<Matrix>,
    rframes: Vec<Matrix>,
    bond_sigma: Vec<Vec<f64>>,
}

impl TangentSpace {
    /// Builds both gauges of `u`. Fails with [`Error::SingularPoint`] when a
    /// bond has numerical rank below its stored rank.
    pub fn at(u: &TtTensor) -> Result<Self> {
        let nominal = u.ranks();
        let d = u.order();
        let mut base = u.clone();
        base.left_orthogonalize();
        let mut right: Vec<TtCore> = base.cores().to_vec();
        let mut bond_sigma = vec![Vec::new(); d.saturating_sub(1)];
        for i in (1..d).rev() {
            let core = &right[i];
            let size = core.dims().1;
            let m = core.right_unfolding();
            let linalg::Svd { u: uu, sigma, vt } = linalg::svd(&m);
            let rank = linalg::numerical_rank(&sigma, m.nrows(), m.ncols());
            if rank < nominal.values[i - 1] {
                return Err(Error::SingularPoint {
                    bond: i,
                    actual: rank,
                    nominal: nominal.values[i - 1],
                });
            }
            let mut us = uu;
            for (k, mut col) in us.column_iter_mut().enumerate() {
                col *= sigma[k];
            }
            right[i] = TtCore::from_right_unfolding(vt, size);
            let prev = &right[i - 1];
            let merged = prev.left_unfolding() * us;
            right[i - 1] = TtCore::from_left_unfolding(merged, prev.dims().1);
            bond_sigma[i - 1] = sigma;
        }
        let lframes = left_frames(base.cores());
        let rframes = right_frames(&right);
        Ok(TangentSpace {
            base,
            right,
            lframes,
            rframes,
            bond_sigma,
        })
    }

    /// Like [`TangentSpace::at`], but a singular or under-ranked point is first
    /// moved to a nearby point of rank `r` (see [`repair_singular`]). Returns the
    /// point actually used.
    pub fn at_or_repair<R: Rng + ?Sized>(u: &TtTensor, r: &RankTuple, rng: &mut R) -> Result<(Self, TtTensor)> {
        if u.ranks() == *r {
            match TangentSpace::at(u) {
                Ok(space) => return Ok((space, u.clone())),
                Err(Error::SingularPoint { bond, actual, nominal }) => {
                    warn!("singular point (bond {bond}: rank {actual} < {nominal}); perturbing to full rank");
                }
                Err(e) => return Err(e),
            }
        } else {
            warn!("point has ranks {} below target {r}; perturbing to full rank", u.ranks());
        }
        let repaired = repair_singular(u, r, rng)?;
        let space = TangentSpace::at(&repaired)?;
        Ok((space, repaired))
    }

    /// The base point in left-orthogonal gauge.
    pub fn base(&self) -> &TtTensor {
        &self.base
    }

    pub fn order(&self) -> usize {
        self.base.order()
    }

    pub fn ranks(&self) -> RankTuple {
        self.base.ranks()
    }

    /// Singular values of every bond of the base point.
    pub fn bond_sigma(&self) -> &[Vec<f64>] {
        &self.bond_sigma
    }

    /// Right-orthogonal core `Rᵢ` (meaningful for `i ≥ 1`).
    pub fn right_core(&self, i: usize) -> &TtCore {
        &self.right[i]
    }

    fn is_last(&self, i: usize) -> bool {
        i + 1 == self.order()
    }

    /// `δ ↦ (I − LLᵀ)δ` on the left unfolding, for `i < d−1`.
    fn gauge(&self, i: usize, delta: Matrix) -> Matrix {
        if self.is_last(i) {
            return delta;
        }
        let l = self.base.core(i).left_unfolding();
        let coeff = l.transpose() * &delta;
        delta - l * coeff
    }

    /// Orthogonal projection of `g` onto the tangent space.
    pub fn project(self: &Arc<Self>, g: &DenseTensor) -> Result<TtTangent> {
        if g.shape() != self.base.shape() {
            return Err(Error::shape(self.base.shape().dims(), g.dims()));
        }
        let deltas = (0..self.order())
            .map(|i| {
                let n = self.base.core(i).dims().1;
                let y = contract_with_frames(g.values(), n, &self.lframes[i], &self.rframes[i]);
                TtCore::from_left_unfolding(self.gauge(i, y), n)
            })
            .collect();
        Ok(TtTangent {
            space: Arc::clone(self),
            deltas,
        })
    }

    /// A tangent vector from raw core variations; the gauge is enforced by
    /// projecting `δBᵢ` (`i < d`) onto the complement of `Lᵢ`.
    pub fn tangent(self: &Arc<Self>, deltas: Vec<TtCore>) -> Result<TtTangent> {
        if deltas.len() != self.order() {
            return Err(Error::InvalidArgument(format!(
                "{} core variations for an order-{} tensor",
                deltas.len(),
                self.order()
            )));
        }
        let deltas = deltas
            .into_iter()
            .enumerate()
            .map(|(i, delta)| {
                let want = self.base.core(i).dims();
                if delta.dims() != want {
                    return Err(Error::shape(&[want.0, want.1, want.2], &{
                        let (a, b, c) = delta.dims();
                        [a, b, c]
                    }));
                }
                Ok(TtCore::from_left_unfolding(self.gauge(i, delta.left_unfolding()), want.1))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TtTangent {
            space: Arc::clone(self),
            deltas,
        })
    }

    pub fn zero(self: &Arc<Self>) -> TtTangent {
        let deltas = self
            .base
            .cores()
            .iter()
            .map(|c| {
                let (a, n, b) = c.dims();
                TtCore::zeros(a, n, b)
            })
            .collect();
        TtTangent {
            space: Arc::clone(self),
            deltas,
        }
    }
}

/// Tangent vector in gauged core coordinates.
#[derive(Debug, Clone)]
pub struct TtTangent {
    space: Arc<TangentSpace>,
    deltas: Vec<TtCore>,
}

impl TtTangent {
    pub fn space(&self) -> &Arc<TangentSpace> {
        &self.space
    }

    pub fn deltas(&self) -> &[TtCore] {
        &self.deltas
    }

    /// Inner product in the ambient space; the summands are orthogonal and the
    /// frames orthonormal, so it reduces to core-wise inner products.
    pub fn inner(&self, other: &TtTangent) -> f64 {
        self.deltas
            .iter()
            .zip(&other.deltas)
            .map(|(a, b)| crate::tensor::dot(a.data(), b.data()))
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    pub fn scale(&mut self, alpha: f64) {
        for delta in &mut self.deltas {
            delta.data_mut().iter_mut().for_each(|x| *x *= alpha);
        }
    }

    pub fn scaled(&self, alpha: f64) -> TtTangent {
        let mut t = self.clone();
        t.scale(alpha);
        t
    }

    /// `max_{i<d} ‖Lᵢᵀ δBᵢ‖_max`.
    pub fn gauge_defect(&self) -> f64 {
        let d = self.deltas.len();
        self.deltas[..d - 1]
            .iter()
            .enumerate()
            .map(|(i, delta)| {
                let l = self.space.base.core(i).left_unfolding();
                (l.transpose() * delta.left_unfolding()).amax()
            })
            .fold(0.0, f64::max)
    }

    /// The `i`-th product-rule term `L₁···L_{i−1} δBᵢ R_{i+1}···R_d`.
    pub fn summand(&self, i: usize) -> DenseTensor {
        let f = &self.space.lframes[i];
        let g = &self.space.rframes[i];
        let delta = &self.deltas[i];
        let (_, n, r) = delta.dims();
        let half = reshape(f * delta.right_unfolding(), f.nrows() * n, r);
        let full = half * g;
        DenseTensor::from_vec(self.space.base.shape().clone(), full.data.into()).expect("sizes agree")
    }

    /// Block TT representation of rank at most `2r`.
    pub fn to_tt(&self) -> TtTensor {
        self.block_tt(false)
    }

    /// `u + ξ` as a TT tensor of rank at most `2r`.
    pub fn to_tt_with_base(&self) -> TtTensor {
        self.block_tt(true)
    }

    pub fn to_dense(&self) -> DenseTensor {
        self.to_tt().to_dense()
    }

    fn block_tt(&self, with_base: bool) -> TtTensor {
        let space = &self.space;
        let d = space.order();
        if d == 1 {
            let mut core = self.deltas[0].clone();
            if with_base {
                for (x, y) in core.data_mut().iter_mut().zip(space.base.core(0).data()) {
                    *x += y;
                }
            }
            return TtTensor::new(vec![core]).expect("single core");
        }
        let cores = (0..d)
            .map(|i| {
                let delta = &self.deltas[i];
                let (a, n, b) = delta.dims();
                if i == 0 {
                    let l = space.base.core(0);
                    let mut c = TtCore::zeros(1, n, 2 * b);
                    for mu in 0..n {
                        for y in 0..b {
                            c.set(0, mu, y, l.get(0, mu, y));
                            c.set(0, mu, b + y, delta.get(0, mu, y));
                        }
                    }
                    c
                } else if i == d - 1 {
                    let s = space.base.core(i);
                    let r = &space.right[i];
                    let mut c = TtCore::zeros(2 * a, n, 1);
                    for mu in 0..n {
                        for x in 0..a {
                            let top = delta.get(x, mu, 0) + if with_base { s.get(x, mu, 0) } else { 0.0 };
                            c.set(x, mu, 0, top);
                            c.set(a + x, mu, 0, r.get(x, mu, 0));
                        }
                    }
                    c
                } else {
                    let l = space.base.core(i);
                    let r = &space.right[i];
                    let mut c = TtCore::zeros(2 * a, n, 2 * b);
                    for y in 0..b {
                        for mu in 0..n {
                            for x in 0..a {
                                c.set(x, mu, y, l.get(x, mu, y));
                                c.set(x, mu, b + y, delta.get(x, mu, y));
                                c.set(a + x, mu, b + y, r.get(x, mu, y));
                            }
                        }
                    }
                    c
                }
            })
            .collect();
        TtTensor::new(cores).expect("block ranks are consistent")
    }
}

/// Orthogonal projection of `g` onto `T_u M_r`.
pub fn project_tangent(base: &TtTensor, g: &DenseTensor) -> Result<TtTangent> {
    Arc::new(TangentSpace::at(base)?).project(g)
}

/// Retraction `R(u, ξ) = H_r(u + ξ)`, computed by TT rounding of the rank-`2r`
/// block representation of `u + ξ`.
pub fn retract(xi: &TtTangent) -> TtTensor {
    let ranks = xi.space.ranks();
    tt_truncate(&xi.to_tt_with_base(), &ranks).expect("ranks come from the base point")
}

/// Moves `u` to `H_r(u + ε·w)` with `w` a random unit-norm TT tensor of rank `r`
/// and `ε = 1e-8·‖u‖` (`1e-8` if `u = 0`), which generically has exact rank `r`.
pub fn repair_singular<R: Rng + ?Sized>(u: &TtTensor, r: &RankTuple, rng: &mut R) -> Result<TtTensor> {
    r.validate(u.shape())?;
    let mut w = TtTensor::random(u.shape(), r, rng)?;
    let wn = w.norm();
    let un = u.norm();
    let eps = if un > 0.0 { 1e-8 * un } else { 1e-8 };
    w.scale(eps / wn);
    tt_truncate(&u.add(&w)?, r)
}
