//! Thin wrappers over nalgebra's SVD and QR with the conventions used by the
//! decompositions: singular values in descending order, thin factors, and a
//! single numerical-rank rule.

use nalgebra::SVD;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::tensor::Matrix;

/// Thin SVD `A = U·diag(σ)·Vᵀ` with `σ` descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Matrix,
    pub sigma: Vec<f64>,
    pub vt: Matrix,
}

pub fn svd(a: &Matrix) -> Svd {
    let SVD {
        u,
        v_t,
        singular_values,
    } = a.clone().svd(true, true);
    Svd {
        u: u.expect("left singular vectors requested"),
        sigma: singular_values.iter().copied().collect(),
        vt: v_t.expect("right singular vectors requested"),
    }
}

/// Left singular vectors and singular values only.
pub fn left_svd(a: &Matrix) -> (Matrix, Vec<f64>) {
    let SVD {
        u, singular_values, ..
    } = a.clone().svd(true, false);
    (
        u.expect("left singular vectors requested"),
        singular_values.iter().copied().collect(),
    )
}

pub fn singular_values(a: &Matrix) -> Vec<f64> {
    a.singular_values().iter().copied().collect()
}

/// Numerical rank: `σ_k` counts as zero when `σ_k ≤ max(rows, cols)·ε·σ₁`.
pub fn numerical_rank(sigma: &[f64], rows: usize, cols: usize) -> usize {
    let Some(&top) = sigma.first() else {
        return 0;
    };
    if top <= 0.0 {
        return 0;
    }
    let tol = rows.max(cols) as f64 * f64::EPSILON * top;
    sigma.iter().take_while(|&&s| s > tol).count()
}

/// `√(Σ_{k ≥ keep} σ_k²)`, the error of discarding the tail of `sigma`.
pub fn tail_norm(sigma: &[f64], keep: usize) -> f64 {
    sigma.iter().skip(keep).map(|s| s * s).sum::<f64>().sqrt()
}

/// Thin QR: `A = Q·R` with `Q` of size `rows × min(rows, cols)`.
pub fn qr(a: &Matrix) -> (Matrix, Matrix) {
    let qr = a.clone().qr();
    (qr.q(), qr.r())
}

/// Random matrix with orthonormal columns (QR of a Gaussian matrix).
pub fn random_orthonormal<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    let g = Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal));
    qr(&g).0
}

/// `‖QᵀQ − I‖_max`, used by the orthogonality checks.
pub fn orthonormality_defect(q: &Matrix) -> f64 {
    let g = q.transpose() * q;
    let mut worst: f64 = 0.0;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - target).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn svd_is_sorted_and_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = Matrix::from_fn(4, 7, |_, _| rng.sample(StandardNormal));
        let s = svd(&a);
        assert!(s.sigma.windows(2).all(|w| w[0] >= w[1]));
        let back = &s.u * Matrix::from_diagonal(&nalgebra::DVector::from_vec(s.sigma.clone())) * &s.vt;
        assert!((back - a).norm() < 1e-12);
    }

    #[test]
    fn rank_rule() {
        assert_eq!(numerical_rank(&[3.0, 2.0, 1e-17], 3, 3), 2);
        assert_eq!(numerical_rank(&[0.0, 0.0], 2, 2), 0);
        assert_eq!(numerical_rank(&[], 2, 2), 0);
        assert_eq!(tail_norm(&[3.0, 2.0, 1.0], 1), 5f64.sqrt());
    }

    #[test]
    fn random_orthonormal_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let q = random_orthonormal(6, 3, &mut rng);
        assert!(orthonormality_defect(&q) < 1e-12);
    }
}
