//! Independent reference computations shared by the integration tests. They
//! index raw buffers directly instead of going through the library's
//! unfoldings.

#![allow(dead_code)]

use htrecover::DenseTensor;
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

/// Co-lex offset of `(i, j, k)` in an `n1 × n2 × n3` buffer.
pub fn at(dims: &[usize], i: usize, j: usize, k: usize) -> usize {
    i + dims[0] * (j + dims[1] * k)
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

fn top_left_vectors(m: DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let svd = m.svd(true, false);
    let u = svd.u.expect("requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    DMatrix::from_fn(u.nrows(), k, |r, c| u[(r, order[c])])
}

/// `‖u ×₁ U₁ᵀ ×₂ U₂ᵀ ×₃ U₃ᵀ‖²` for an order-3 `u`.
fn captured(u: &DenseTensor, f: &[DMatrix<f64>; 3]) -> f64 {
    let d = u.dims();
    let v = u.values();
    let mut total = 0.0;
    for a in 0..f[0].ncols() {
        for b in 0..f[1].ncols() {
            for c in 0..f[2].ncols() {
                let mut s = 0.0;
                for k in 0..d[2] {
                    for j in 0..d[1] {
                        for i in 0..d[0] {
                            s += f[0][(i, a)] * f[1][(j, b)] * f[2][(k, c)] * v[at(d, i, j, k)];
                        }
                    }
                }
                total += s * s;
            }
        }
    }
    total
}

/// Mode-`mode` unfolding of `u` with the other two modes compressed by their
/// factors: rows `μ_mode`, columns `(p, q)` over the two compressed ranks.
fn compressed_unfolding(u: &DenseTensor, f: &[DMatrix<f64>; 3], mode: usize) -> DMatrix<f64> {
    let d = u.dims();
    let v = u.values();
    let (o1, o2) = match mode {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    let (r1, r2) = (f[o1].ncols(), f[o2].ncols());
    DMatrix::from_fn(d[mode], r1 * r2, |row, col| {
        let (p, q) = (col % r1, col / r1);
        let mut s = 0.0;
        for x in 0..d[o1] {
            for y in 0..d[o2] {
                let mut idx = [0usize; 3];
                idx[mode] = row;
                idx[o1] = x;
                idx[o2] = y;
                s += v[at(d, idx[0], idx[1], idx[2])] * f[o1][(x, p)] * f[o2][(y, q)];
            }
        }
        s
    })
}

/// Alternating (HOOI) estimate of `min ‖u − v‖` over order-3 tensors of
/// multilinear rank `r`; best of `restarts` random starts. Every candidate is
/// realisable, so the estimate is an upper bound on the true minimum.
pub fn best_tucker3_error<R: Rng + ?Sized>(u: &DenseTensor, r: [usize; 3], restarts: usize, rng: &mut R) -> f64 {
    let d = u.dims().to_vec();
    assert_eq!(d.len(), 3);
    let total: f64 = u.values().iter().map(|x| x * x).sum();
    let mut best = 0.0f64;
    for _ in 0..restarts {
        let mut f = [0, 1, 2].map(|i| gaussian_matrix(d[i], r[i], rng).qr().q());
        let mut last = -1.0;
        for _ in 0..500 {
            for mode in 0..3 {
                f[mode] = top_left_vectors(compressed_unfolding(u, &f, mode), r[mode]);
            }
            let c = captured(u, &f);
            if (c - last).abs() <= 1e-15 * total {
                break;
            }
            last = c;
        }
        best = best.max(captured(u, &f));
    }
    (total - best).max(0.0).sqrt()
}

/// Same estimate for TT rank `(r1, r2)`. For `d = 3` that set is exactly
/// `{v : rank v_(1) ≤ r1, rank v_(3) ≤ r2}`, i.e. multilinear rank
/// `(r1, n₂, r2)`.
pub fn best_tt3_error<R: Rng + ?Sized>(u: &DenseTensor, r1: usize, r2: usize, restarts: usize, rng: &mut R) -> f64 {
    best_tucker3_error(u, [r1, u.dims()[1], r2], restarts, rng)
}

/// Plain matrix–vector reference for a dense map: `A` as an explicit `m × N`
/// matrix built column by column from `apply` on unit tensors.
pub fn explicit_matrix<F: Fn(&DenseTensor) -> Vec<f64>>(shape: &htrecover::Shape, m: usize, apply: F) -> DMatrix<f64> {
    let n = shape.len();
    let mut out = DMatrix::zeros(m, n);
    for col in 0..n {
        let mut e = DenseTensor::zeros(shape.clone());
        e.values_mut()[col] = 1.0;
        let y = apply(&e);
        for (row, x) in y.into_iter().enumerate() {
            out[(row, col)] = x;
        }
    }
    out
}
