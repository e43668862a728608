//! Acceptance suite. Runs every criterion at its stated tolerance, prints one
//! PASS/FAIL line per criterion and exits non-zero if any failed.

mod common;

use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use htrecover::bench::{run_sweep, write_sweep_csv, ExperimentSpec};
use htrecover::decomposition::{
    hosvd, multilinear_rank, truncate_hosvd, tt_svd, tt_truncate, Format, RankTuple, TtTarget, TtTensor,
};
use htrecover::generate::{tt_instance, tucker_instance};
use htrecover::manifold::{retract, TangentSpace};
use htrecover::measurement::{estimate_tric, theorem2_m, DenseMap, LinearMap, SamplingMap};
use htrecover::recovery::{als, fit_rate, monotonicity_violations, rgi_with, InitRule, LowRank, RecoveryConfig};
use htrecover::{DenseTensor, Shape};

/// Constant for the measurement bound of criterion 9, calibrated once with
/// `htrecover probe` (C = 1 gives m = 132, where only ~75% of draws reach
/// δ̂ ≤ 0.5; C = 2 gives m = 264 and 20/20 draws on every seed tried).
const TRIP_C: f64 = 2.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn random_dense(shape: &[usize], rng: &mut ChaCha8Rng) -> DenseTensor {
    DenseTensor::random_normal(Shape::new(shape.to_vec()).unwrap(), rng)
}

fn random_shape(rng: &mut ChaCha8Rng) -> Vec<usize> {
    match rng.random_range(0..4) {
        0 => vec![rng.random_range(1..=12), rng.random_range(1..=12)],
        1 | 2 => vec![rng.random_range(1..=6), rng.random_range(1..=10), rng.random_range(1..=15)],
        _ => (0..4).map(|_| rng.random_range(1..=5)).collect(),
    }
}

fn exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let u = random_dense(&random_shape(&mut rng), &mut rng);
        let scale = u.norm();
        let t = tt_svd(&u, &TtTarget::Exact).unwrap().to_dense();
        let h = hosvd(&u).to_dense();
        worst = worst.max(t.distance(&u).unwrap() / scale).max(h.distance(&u).unwrap() / scale);
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-10 && secs < 5.0,
        format!("max relative error {worst:.2e}, {secs:.2} s for 100 tensors"),
    )
}

fn random_target(shape: &[usize], format: Format, rng: &mut ChaCha8Rng) -> RankTuple {
    let d = shape.len();
    let values = match format {
        Format::Tucker => shape.iter().map(|&n| rng.random_range(1..=n)).collect(),
        Format::Tt => (1..d)
            .map(|i| {
                let left: usize = shape[..i].iter().product();
                let right: usize = shape[i..].iter().product();
                rng.random_range(1..=left.min(right))
            })
            .collect(),
    };
    RankTuple::new(format, values).unwrap()
}

fn truncation_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut violations, mut sq_violations) = (0, 0);
    let mut tightest: f64 = 0.0;
    for case in 0..100 {
        let shape = random_shape(&mut rng);
        let u = random_dense(&shape, &mut rng);
        let (approx, eps) = if case % 2 == 0 {
            let r = random_target(&shape, Format::Tucker, &mut rng);
            let t = truncate_hosvd(&u, &r).unwrap();
            (t.to_dense(), t.discarded_norms())
        } else {
            let r = random_target(&shape, Format::Tt, &mut rng);
            let t = tt_svd(&u, &TtTarget::Ranks(r)).unwrap();
            (t.to_dense(), t.discarded_norms().unwrap())
        };
        let err = approx.distance(&u).unwrap();
        let sum: f64 = eps.iter().sum();
        let root = eps.iter().map(|e| e * e).sum::<f64>().sqrt();
        let slack = 1e-12 * u.norm();
        violations += usize::from(err > sum + slack);
        sq_violations += usize::from(err > root + slack);
        if root > 0.0 {
            tightest = tightest.max(err / root);
        }
    }
    outcome(
        violations == 0,
        format!(
            "{violations} violations of err ≤ Σεᵢ, {sq_violations} of err ≤ (Σεᵢ²)^½ (max ratio {tightest:.4})"
        ),
    )
}

fn quasi_optimality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let r = RankTuple::tt(vec![2, 2]).unwrap();
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..25 {
        let u = random_dense(&[4, 4, 4], &mut rng);
        let hr = tt_svd(&u, &TtTarget::Ranks(r.clone())).unwrap().to_dense().distance(&u).unwrap();
        let mut best = common::best_tt3_error(&u, 2, 2, 200, &mut rng).min(hr);
        if hr > 2f64.sqrt() * best {
            // the oracle may have missed the optimum: look harder before counting
            best = best.min(common::best_tt3_error(&u, 2, 2, 2000, &mut rng));
        }
        violations += usize::from(hr > 2f64.sqrt() * best * (1.0 + 1e-12));
        worst = worst.max(hr / best);
    }
    outcome(
        violations == 0,
        format!("{violations} violations; max ‖u − H_r u‖ / best = {worst:.4} (bound √2 = 1.4142)"),
    )
}

fn well_conditioned_tt(shape: &[usize], ranks: &[usize], rng: &mut ChaCha8Rng) -> TtTensor {
    let shape = Shape::new(shape.to_vec()).unwrap();
    let mut t = tt_instance(&shape, &RankTuple::tt(ranks.to_vec()).unwrap(), rng).unwrap();
    let n = t.norm();
    t.scale(1.0 / n);
    t
}

fn tangent_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut worst_idem, mut worst_adj) = (0.0f64, 0.0f64);
    let mut rank_violations = 0;
    for _ in 0..50 {
        let d = rng.random_range(3..=4);
        let shape: Vec<usize> = (0..d).map(|_| rng.random_range(3..=6)).collect();
        let ranks: Vec<usize> = (1..d)
            .map(|i| {
                let cap = shape[..i].iter().product::<usize>().min(shape[i..].iter().product());
                rng.random_range(1..=cap.min(3))
            })
            .collect();
        let u = well_conditioned_tt(&shape, &ranks, &mut rng);
        let space = Arc::new(TangentSpace::at(&u).unwrap());
        let g = random_dense(&shape, &mut rng);
        let h = random_dense(&shape, &mut rng);
        let pg = space.project(&g).unwrap();
        let ph = space.project(&h).unwrap();
        let ppg = space.project(&pg.to_dense()).unwrap();
        worst_idem = worst_idem.max(ppg.to_dense().distance(&pg.to_dense()).unwrap() / g.norm());
        let lhs = pg.to_dense().inner(&h).unwrap();
        let rhs = g.inner(&ph.to_dense()).unwrap();
        worst_adj = worst_adj.max((lhs - rhs).abs() / (g.norm() * h.norm()));
        let block = pg.to_tt().ranks();
        let actual = multilinear_rank(&pg.to_dense(), Format::Tt);
        let bound: Vec<usize> = ranks.iter().map(|r| 2 * r).collect();
        let ok = |v: &[usize]| v.iter().zip(&bound).all(|(x, b)| x <= b);
        rank_violations += usize::from(!ok(block.values()) || !ok(actual.values()));
    }

    // second-order accuracy of the retraction along a fixed tangent direction
    let u = well_conditioned_tt(&[6, 7, 8], &[2, 3], &mut rng);
    let space = Arc::new(TangentSpace::at(&u).unwrap());
    let mut xi = space.project(&random_dense(&[6, 7, 8], &mut rng)).unwrap();
    let n = xi.norm();
    xi.scale(1.0 / n);
    let ts = [1e-1, 1e-2, 1e-3];
    let pts: Vec<(f64, f64)> = ts
        .iter()
        .map(|&t| {
            let step = xi.scaled(t);
            let mut target = u.to_dense();
            target.axpy(1.0, &step.to_dense()).unwrap();
            let err = retract(&step).to_dense().distance(&target).unwrap();
            (t.ln(), err.ln())
        })
        .collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();

    outcome(
        worst_idem <= 1e-9 && worst_adj <= 1e-9 && rank_violations == 0 && slope >= 1.9,
        format!(
            "idempotence {worst_idem:.1e}, self-adjointness {worst_adj:.1e}, {rank_violations} rank > 2r, retraction slope {slope:.3}"
        ),
    )
}

fn table_row(shape: &[usize], rank: &[usize], fail_at: f64, succeed_at: f64) -> (bool, String) {
    let spec = ExperimentSpec {
        shape: Shape::new(shape.to_vec()).unwrap(),
        rank: RankTuple::tucker(rank.to_vec()).unwrap(),
        grid: vec![fail_at, succeed_at],
        trials: 20,
        seed: 1,
        ..ExperimentSpec::default()
    };
    let result = run_sweep(&spec).unwrap();
    let (lo, hi) = (&result.points[0], &result.points[1]);
    let pass = lo.successes == 0 && hi.successes >= 18;
    let iters = hi.mean_iters_success.map_or("-".into(), |x| format!("{x:.0}"));
    (
        pass,
        format!(
            "{:?} rank {:?}: {}/20 at n̄={fail_at}, {}/20 at n̄={succeed_at} (mean iters {iters})",
            shape, rank, lo.successes, hi.successes
        ),
    )
}

fn table1() -> Outcome {
    let start = Instant::now();
    let rows = [
        table_row(&[10, 10, 10], &[1, 1, 1], 3.0, 12.0),
        table_row(&[10, 10, 10], &[2, 2, 2], 6.0, 23.0),
        table_row(&[10, 10, 10], &[3, 3, 3], 10.0, 24.0),
    ];
    let pass = rows.iter().all(|r| r.0);
    let detail: Vec<&str> = rows.iter().map(|r| r.1.as_str()).collect();
    outcome(pass, format!("{}; {:.0} s", detail.join("; "), start.elapsed().as_secs_f64()))
}

fn spot_check() -> Outcome {
    let (pass, detail) = table_row(&[6, 10, 15], &[1, 1, 1], 3.0, 11.0);
    outcome(pass, detail)
}

fn local_convergence() -> Outcome {
    let shape = Shape::new(vec![10, 10, 10]).unwrap();
    let r = RankTuple::tt(vec![2, 2]).unwrap();
    let mut good = 0;
    let mut rates = Vec::new();
    for run in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(700 + run);
        let u = tt_instance(&shape, &r, &mut rng).unwrap();
        let truth = u.to_dense();
        let target = 1e-3 * u.norm();
        // perturb within the manifold's neighbourhood, then rescale once so
        // that the starting error is 1e-3‖u‖ up to a few percent
        let w = TtTensor::random(&shape, &r, &mut rng).unwrap();
        let w = w.scaled(1.0 / w.norm());
        let start = |eps: f64| tt_truncate(&u.add(&w.scaled(eps)).unwrap(), &r).unwrap();
        let first = start(target);
        let e1 = first.to_dense().distance(&truth).unwrap();
        let u0 = start(target * target / e1);
        let a = DenseMap::gaussian(shape.clone(), 400, 9000 + run).unwrap();
        let b = a.apply(&truth).unwrap();
        let mut config = RecoveryConfig::new(r.clone()).with_max_iter(30).with_tol(1e-15);
        config.init_rule = InitRule::Given;
        let (_, report) = rgi_with(&a, &b, &config, Some(&u0), Some(&truth)).unwrap();
        let errors = report.error_history.unwrap();
        let rho = fit_rate(&errors, 5..31).unwrap_or(f64::NAN);
        good += usize::from(rho <= 0.9);
        rates.push(rho);
    }
    let max = rates.iter().copied().fold(f64::NAN, f64::max);
    let min = rates.iter().copied().fold(f64::NAN, f64::min);
    outcome(good >= 18, format!("{good}/20 runs with ρ̂ ≤ 0.9 (ρ̂ in [{min:.3}, {max:.3}])"))
}

fn als_monotonicity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut runs = 0;
    let mut violations = 0;
    let mut steps = 0;
    for case in 0..24 {
        let (shape, format, rank): (Vec<usize>, Format, Vec<usize>) = match case % 3 {
            0 => (vec![6, 6, 6], Format::Tt, vec![2, 2]),
            1 => (vec![6, 6, 6], Format::Tucker, vec![2, 2, 2]),
            _ => (vec![4, 5, 4, 3], Format::Tt, vec![2, 3, 2]),
        };
        let s = Shape::new(shape.clone()).unwrap();
        let r = RankTuple::new(format, rank).unwrap();
        let truth = match format {
            Format::Tucker => tucker_instance(&s, &r, &mut rng).unwrap().to_dense(),
            Format::Tt => tt_instance(&s, &r, &mut rng).unwrap().to_dense(),
        };
        let m = s.len() / (2 + case / 8);
        let a = DenseMap::gaussian(s.clone(), m, 800 + case as u64).unwrap();
        let b = a.apply(&truth).unwrap();
        let config = RecoveryConfig::new(r).with_max_iter(50).with_tol(1e-12);
        let init = match case % 2 {
            0 => None,
            _ => Some(match format {
                Format::Tt => LowRank::Tt(TtTensor::random(&s, &config.rank, &mut rng).unwrap()),
                Format::Tucker => LowRank::Tucker(tucker_instance(&s, &config.rank, &mut rng).unwrap()),
            }),
        };
        let (_, report) = als(&a, &b, &config, init.as_ref()).unwrap();
        runs += 1;
        steps += report.micro_objective.len().saturating_sub(1);
        violations += monotonicity_violations(&report.micro_objective, 1e-12);
    }
    outcome(violations == 0, format!("{violations} violations over {runs} ALS runs, {steps} micro-steps"))
}

fn trip_probe() -> Outcome {
    let shape = Shape::new(vec![10, 10, 10]).unwrap();
    let r = RankTuple::tt(vec![1, 1]).unwrap();
    let m = theorem2_m(Format::Tt, 10, 1, 3, 0.5, 0.1, TRIP_C).unwrap();
    let deltas: Vec<f64> = (0..20u64)
        .map(|k| {
            let a = DenseMap::gaussian(shape.clone(), m, 5000 + k).unwrap();
            estimate_tric(&a, &r, 1000, 60_000 + 1000 * k).unwrap().delta_lower_bound
        })
        .collect();
    let within = deltas.iter().filter(|&&d| d <= 0.5).count();

    // an entry the sampling map never observes: a unit rank-1 tensor there is
    // annihilated, so ‖A e‖² = 0 and δ̂ = 1
    let s = SamplingMap::random(shape.clone(), 500, 11).unwrap();
    let mut seen = vec![false; shape.len()];
    for &k in s.offsets() {
        seen[k] = true;
    }
    let hole = seen.iter().position(|&x| !x).unwrap();
    let idx = shape.delinearize(hole).unwrap();
    let unit = |p: usize| -> Vec<f64> { (0..10).map(|i| f64::from(u8::from(i == p))).collect() };
    let (e0, e1, e2) = (unit(idx[0]), unit(idx[1]), unit(idx[2]));
    let e = DenseTensor::outer(&[&e0, &e1, &e2]).unwrap();
    let q: f64 = s.apply(&e).unwrap().iter().map(|x| x * x).sum();
    let sampling_delta = (q - 1.0).abs();

    outcome(
        within >= 18 && sampling_delta == 1.0,
        format!(
            "C = {TRIP_C}, m = {m}: {within}/20 draws with δ̂ ≤ 0.5 (max {:.3}); sampling map δ̂ = {sampling_delta}",
            deltas.iter().copied().fold(0.0, f64::max)
        ),
    )
}

fn properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut adjoint_worst: f64 = 0.0;
    let mut linear_worst: f64 = 0.0;
    let mut nondeterministic = 0;
    for case in 0..200u64 {
        let shape = random_shape(&mut rng);
        let s = Shape::new(shape.clone()).unwrap();
        let m = rng.random_range(1..=s.len());
        let build = |seed| -> Box<dyn LinearMap> {
            match case % 3 {
                0 => Box::new(DenseMap::gaussian(s.clone(), m, seed).unwrap()),
                1 => Box::new(DenseMap::orthonormal(s.clone(), m.min(s.len()), seed).unwrap()),
                _ => Box::new(SamplingMap::random(s.clone(), m, seed).unwrap()),
            }
        };
        let a = build(case);
        let again = build(case);
        let u = random_dense(&shape, &mut rng);
        let v = random_dense(&shape, &mut rng);
        let y: Vec<f64> = (0..a.num_measurements()).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
        let au = a.apply(&u).unwrap();
        let aty = a.adjoint(&y).unwrap();
        let lhs: f64 = au.iter().zip(&y).map(|(p, q)| p * q).sum();
        let rhs = u.inner(&aty).unwrap();
        let ynorm = y.iter().map(|x| x * x).sum::<f64>().sqrt();
        adjoint_worst = adjoint_worst.max((lhs - rhs).abs() / (1.0 + u.norm() * ynorm));
        let (alpha, beta) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let mut comb = u.scaled(alpha);
        comb.axpy(beta, &v).unwrap();
        let av = a.apply(&v).unwrap();
        let direct = a.apply(&comb).unwrap();
        let lin = direct
            .iter()
            .zip(au.iter().zip(&av))
            .map(|(d, (p, q))| (d - alpha * p - beta * q).abs())
            .fold(0.0, f64::max);
        linear_worst = linear_worst.max(lin / (1.0 + comb.norm()));
        nondeterministic += usize::from(again.apply(&u).unwrap() != au);
    }

    let spec = ExperimentSpec {
        shape: Shape::new(vec![6, 6, 6]).unwrap(),
        grid: vec![8.0, 20.0, 40.0],
        trials: 8,
        max_iter: 400,
        seed: 42,
        ..ExperimentSpec::default()
    };
    let csv_with = |threads: usize| -> Vec<u8> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let result = pool.install(|| run_sweep(&spec)).unwrap();
        let mut out = Vec::new();
        write_sweep_csv(&result.points, &mut out).unwrap();
        out
    };
    let identical = csv_with(1) == csv_with(8);

    outcome(
        adjoint_worst <= 1e-10 && linear_worst <= 1e-10 && nondeterministic == 0 && identical,
        format!(
            "adjoint {adjoint_worst:.1e}, linearity {linear_worst:.1e}, {nondeterministic} non-deterministic maps, CSV identical under 1 and 8 threads: {identical}"
        ),
    )
}

fn main() {
    // `cargo test` passes harness flags such as `--nocapture`; a name filter
    // selects criteria by number.
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("exactness", exactness),
        ("truncation bound", truncation_bound),
        ("quasi-optimality", quasi_optimality),
        ("tangent space and retraction", tangent_suite),
        ("phase transition 10x10x10", table1),
        ("phase transition 6x10x15", spot_check),
        ("local convergence", local_convergence),
        ("ALS monotonicity", als_monotonicity),
        ("TRIP probe", trip_probe),
        ("adjoint, linearity, determinism", properties),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let id = (k + 1).to_string();
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let result = run();
        let verdict = if result.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {verdict} {name}: {}", result.detail);
        failed += usize::from(!result.pass);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
