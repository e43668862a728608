//! Alternating least squares over the components of a TT or Tucker tensor.
//!
//! With every other component orthogonalized, the tensor is linear in the
//! active component, `vec(u) = T_t x_t`, where the design matrix `T_t` has
//! orthonormal columns. A micro-step solves `min_x ‖A T_t x − b‖` exactly, so
//! `J` cannot increase from one micro-step to the next.

use log::debug;

use super::config::{InitRule, RecoveryConfig};
use super::report::{RecoveryReport, Termination};
use super::{hard_threshold, objective, LowRank};
use crate::decomposition::{left_frames, right_frames, TtCore, TtTensor, TuckerTensor};
use crate::error::{Error, Result};
use crate::linalg;
use crate::measurement::LinearMap;
use crate::tensor::{DenseTensor, Matrix, Shape};

trait AlsState {
    /// Components visited by one full sweep.
    fn sweep(&self) -> Vec<usize>;

    /// Components visited by a half-sweep.
    fn half_sweep(&self) -> Vec<usize>;

    /// Orthogonalizes everything except component `t` and returns `T_t`.
    fn design(&mut self, t: usize) -> Matrix;

    fn update(&mut self, t: usize, x: &[f64]);

    fn to_dense(&self) -> DenseTensor;

    fn into_low_rank(self: Box<Self>) -> LowRank;
}

struct TtState {
    shape: Shape,
    cores: Vec<TtCore>,
    root: usize,
}

impl TtState {
    fn new(t: &TtTensor) -> Self {
        let mut t = t.clone();
        t.right_orthogonalize();
        TtState {
            shape: t.shape().clone(),
            cores: t.into_cores(),
            root: 0,
        }
    }

    fn move_root(&mut self, target: usize) {
        while self.root < target {
            let i = self.root;
            let n = self.cores[i].dims().1;
            let (q, r) = linalg::qr(&self.cores[i].left_unfolding());
            self.cores[i] = TtCore::from_left_unfolding(q, n);
            let next = &self.cores[i + 1];
            self.cores[i + 1] = TtCore::from_right_unfolding(r * next.right_unfolding(), next.dims().1);
            self.root += 1;
        }
        while self.root > target {
            let i = self.root;
            let n = self.cores[i].dims().1;
            let (q, r) = linalg::qr(&self.cores[i].right_unfolding().transpose());
            self.cores[i] = TtCore::from_right_unfolding(q.transpose(), n);
            let prev = &self.cores[i - 1];
            self.cores[i - 1] = TtCore::from_left_unfolding(prev.left_unfolding() * r.transpose(), prev.dims().1);
            self.root -= 1;
        }
    }
}

impl AlsState for TtState {
    fn sweep(&self) -> Vec<usize> {
        let d = self.cores.len();
        (0..d).chain((0..d.saturating_sub(1)).rev()).collect()
    }

    fn half_sweep(&self) -> Vec<usize> {
        (0..self.cores.len()).collect()
    }

    fn design(&mut self, t: usize) -> Matrix {
        self.move_root(t);
        let f = left_frames(&self.cores[..=t]).pop().expect("non-empty");
        let g = right_frames(&self.cores[t..]).swap_remove(0);
        let (rl, n, rr) = self.cores[t].dims();
        let (before, after) = (f.nrows(), g.ncols());
        let mut design = Matrix::zeros(before * n * after, rl * n * rr);
        for y in 0..after {
            for mu in 0..n {
                for b in 0..rr {
                    let gb = g[(b, y)];
                    if gb == 0.0 {
                        continue;
                    }
                    for a in 0..rl {
                        let col = a + rl * (mu + n * b);
                        let row0 = before * (mu + n * y);
                        for x in 0..before {
                            design[(row0 + x, col)] = f[(x, a)] * gb;
                        }
                    }
                }
            }
        }
        design
    }

    fn update(&mut self, t: usize, x: &[f64]) {
        let (a, n, b) = self.cores[t].dims();
        self.cores[t] = TtCore::from_vec(a, n, b, x.to_vec()).expect("solution has the core's size");
    }

    fn to_dense(&self) -> DenseTensor {
        let t = TtTensor::new(self.cores.clone()).expect("ranks unchanged");
        debug_assert_eq!(t.shape(), &self.shape);
        t.to_dense()
    }

    fn into_low_rank(self: Box<Self>) -> LowRank {
        LowRank::Tt(TtTensor::new(self.cores).expect("ranks unchanged"))
    }
}

struct TuckerState {
    shape: Shape,
    core: DenseTensor,
    factors: Vec<Matrix>,
    /// Active factor step: `(mode, Qcᵀ)` from the QR of the core matricization.
    pending: Option<(usize, Matrix)>,
}

impl TuckerState {
    fn new(t: &TuckerTensor) -> Result<Self> {
        let ranks = t.core().dims().to_vec();
        let total: usize = ranks.iter().product();
        if let Some(i) = (0..ranks.len()).find(|&i| ranks[i] > total / ranks[i]) {
            return Err(Error::InvalidRank(format!(
                "r_{} = {} exceeds the product of the other ranks",
                i + 1,
                ranks[i]
            )));
        }
        // orthonormalize the factors, pushing the triangular parts into the core
        let (mut core, factors) = t.clone().into_parts();
        let factors = factors
            .into_iter()
            .enumerate()
            .map(|(i, f)| {
                let (q, r) = linalg::qr(&f);
                core = core.mode_product(&r, i).expect("r matches core");
                q
            })
            .collect();
        Ok(TuckerState {
            shape: t.shape().clone(),
            core,
            factors,
            pending: None,
        })
    }

    fn d(&self) -> usize {
        self.factors.len()
    }

    /// `offsets[(μ, col)]` = flat tensor offset of entry `(μ, col)` of the
    /// mode-`i` unfolding.
    fn unfolding_offsets(&self, i: usize) -> Matrix {
        let counting = DenseTensor::from_vec(self.shape.clone(), (0..self.shape.len()).map(|k| k as f64).collect())
            .expect("sizes agree");
        counting.unfold(&[i]).expect("valid mode")
    }
}

impl AlsState for TuckerState {
    fn sweep(&self) -> Vec<usize> {
        let d = self.d();
        (0..=d).chain((0..d).rev()).collect()
    }

    fn half_sweep(&self) -> Vec<usize> {
        (0..=self.d()).collect()
    }

    fn design(&mut self, t: usize) -> Matrix {
        let d = self.d();
        if t == d {
            self.pending = None;
            let mut k = Matrix::from_element(1, 1, 1.0);
            for f in &self.factors {
                k = f.kronecker(&k);
            }
            return k;
        }
        let ranks = self.core.dims().to_vec();
        let ct = self.core.unfold(&[t]).expect("valid mode").transpose();
        let (qc, _) = linalg::qr(&ct);
        let qct = qc.transpose(); // r_t × Π_{j≠t} r_j
        // W = Qcᵀ (⊗_{j≠t} Bʲ)ᵀ, formed by folding and expanding the other modes
        let mut w = DenseTensor::fold(&qct, &[t], &Shape::new(ranks).expect("valid ranks")).expect("sizes agree");
        for (j, f) in self.factors.iter().enumerate() {
            if j != t {
                w = w.mode_product(f, j).expect("factor matches");
            }
        }
        let w = w.unfold(&[t]).expect("valid mode");
        let n = self.shape.dims()[t];
        let r = w.nrows();
        let offsets = self.unfolding_offsets(t);
        let mut design = Matrix::zeros(self.shape.len(), n * r);
        for col in 0..w.ncols() {
            for mu in 0..n {
                let row = offsets[(mu, col)] as usize;
                for k in 0..r {
                    design[(row, mu + n * k)] = w[(k, col)];
                }
            }
        }
        self.pending = Some((t, qct));
        design
    }

    fn update(&mut self, t: usize, x: &[f64]) {
        if t == self.d() {
            self.core.values_mut().copy_from_slice(x);
            return;
        }
        let (mode, qct) = self.pending.take().expect("design precedes update");
        debug_assert_eq!(mode, t);
        let n = self.shape.dims()[t];
        let xm = Matrix::from_column_slice(n, qct.nrows(), x);
        let (q, r) = linalg::qr(&xm);
        self.factors[t] = q;
        let ct = r * qct;
        self.core = DenseTensor::fold(&ct, &[t], self.core.shape()).expect("core shape unchanged");
    }

    fn to_dense(&self) -> DenseTensor {
        let mut u = self.core.clone();
        for (i, f) in self.factors.iter().enumerate() {
            u = u.mode_product(f, i).expect("factor matches core");
        }
        u
    }

    fn into_low_rank(self: Box<Self>) -> LowRank {
        LowRank::Tucker(TuckerTensor::new(self.core, self.factors).expect("consistent parts"))
    }
}

fn state_for(init: &LowRank) -> Result<Box<dyn AlsState>> {
    Ok(match init {
        LowRank::Tt(t) => Box::new(TtState::new(t)),
        LowRank::Tucker(t) => Box::new(TuckerState::new(t)?),
    })
}

/// Least-squares solution by SVD; rank-deficient systems get the
/// minimum-norm minimizer.
fn least_squares(m: Matrix, b: &[f64]) -> Vec<f64> {
    let (rows, cols) = m.shape();
    let svd = m.svd(true, true);
    let top = svd.singular_values.max();
    let eps = top * rows.max(cols) as f64 * f64::EPSILON;
    let rank = svd.singular_values.iter().filter(|&&s| s > eps).count();
    if rank < cols {
        debug!("als: rank-deficient micro-step ({rank} of {cols} columns)");
    }
    let rhs = nalgebra::DVector::from_column_slice(b);
    match svd.solve(&rhs, eps) {
        Ok(x) => x.data.into(),
        Err(_) => vec![0.0; cols],
    }
}

/// ALS from `init` (or `H_r(A*b)`), keeping the ranks of the starting point.
///
/// A sweep visits the components left to right and then right to left (TT:
/// cores; Tucker: factors, core, factors in reverse). `iterations` counts
/// sweeps; `micro_objective` records `J` after every micro-step.
pub fn als<A: LinearMap + ?Sized>(
    a: &A,
    b: &[f64],
    config: &RecoveryConfig,
    init: Option<&LowRank>,
) -> Result<(LowRank, RecoveryReport)> {
    config.validate()?;
    config.rank.validate(a.shape())?;
    let start = match (config.init_rule, init) {
        (_, Some(u0)) => {
            let r0 = u0.ranks();
            if r0.format != config.format
                || r0.values.len() != config.rank.values.len()
                || r0.values.iter().zip(&config.rank.values).any(|(x, r)| x > r)
            {
                return Err(Error::InvalidRank(format!(
                    "starting ranks {r0} exceed the target {}",
                    config.rank
                )));
            }
            u0.clone()
        }
        (InitRule::Given, None) => {
            return Err(Error::InvalidArgument("init rule 'given' needs a starting tensor".into()))
        }
        (InitRule::Adjoint, None) => hard_threshold(&a.adjoint(b)?, &config.rank)?,
    };
    let mut state = state_for(&start)?;
    let mut report = RecoveryReport::new("als", config, false);
    let b_norm = super::norm(b);
    let mut j = objective(a, &state.to_dense(), b)?;
    report.micro_objective.push(j);
    report.residual_history.push((2.0 * j).sqrt());
    let schedule = state.sweep();
    let termination = loop {
        if (2.0 * j).sqrt() <= config.residual_tol * b_norm {
            break Termination::Converged;
        }
        if report.iterations == config.max_iter {
            break Termination::MaxIterations;
        }
        let j_start = j;
        for &t in &schedule {
            let design = state.design(t);
            let x = least_squares(a.apply_columns(&design)?, b);
            state.update(t, &x);
            j = objective(a, &state.to_dense(), b)?;
            report.micro_objective.push(j);
        }
        report.iterations += 1;
        report.residual_history.push((2.0 * j).sqrt());
        if j_start - j <= config.als_rel_decrease * j_start {
            break if (2.0 * j).sqrt() <= config.residual_tol * b_norm {
                Termination::Converged
            } else {
                Termination::Stalled
            };
        }
    };
    report.finish(termination);
    Ok((state.into_low_rank(), report))
}

/// One ALS half-sweep on `min ‖y − v‖` over rank-`r` tensors `v`, starting
/// from `current`. With orthonormal design matrices each micro-step is
/// `x = T_tᵀ vec(y)`.
pub fn als_refine_step(y: &DenseTensor, current: &LowRank) -> Result<LowRank> {
    let shape = match current {
        LowRank::Tt(t) => t.shape(),
        LowRank::Tucker(t) => t.shape(),
    };
    if y.shape() != shape {
        return Err(Error::shape(shape.dims(), y.dims()));
    }
    let mut state = state_for(current)?;
    let v = nalgebra::DVector::from_column_slice(y.values());
    for t in state.half_sweep() {
        let design = state.design(t);
        let x = design.tr_mul(&v);
        state.update(t, x.as_slice());
    }
    Ok(state.into_low_rank())
}

/// Number of micro-steps with `J_{k+1} > J_k + slack·J₀`.
pub fn monotonicity_violations(objective: &[f64], slack: f64) -> usize {
    let j0 = objective.first().copied().unwrap_or(0.0);
    objective.windows(2).filter(|w| w[1] > w[0] + slack * j0).count()
}
