use htrecover::bench::{
    gen_random_tucker, instance_seed, probe_map, run_sweep, run_trial, write_sweep_csv, Algorithm, ExperimentSpec,
    ProbeRequest, SweepSummary,
};
use htrecover::decomposition::{multilinear_rank, Format, RankTuple};
use htrecover::linalg::orthonormality_defect;
use htrecover::measurement::{theorem2_m, MapKind};
use htrecover::recovery::StepRule;
use htrecover::Shape;

fn shape(dims: &[usize]) -> Shape {
    Shape::new(dims.to_vec()).unwrap()
}

fn small_spec(grid: Vec<f64>) -> ExperimentSpec {
    ExperimentSpec {
        shape: shape(&[6, 6, 6]),
        grid,
        trials: 10,
        max_iter: 400,
        seed: 3,
        ..ExperimentSpec::default()
    }
}

#[test]
fn generator_structure() {
    let s = shape(&[10, 10, 10]);
    let (u, t) = gen_random_tucker(&s, &RankTuple::tucker(vec![1, 1, 1]).unwrap(), 1).unwrap();
    let c = t.core().values()[0];
    assert!((u.norm() - c.abs()).abs() <= 1e-12 * u.norm());
    let f: Vec<Vec<f64>> = t.factors().iter().map(|m| m.column(0).iter().copied().collect()).collect();
    for v in &f {
        assert!((v.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
    }
    for (k, &x) in u.values().iter().enumerate().step_by(37) {
        let idx = s.delinearize(k).unwrap();
        assert!((x - c * f[0][idx[0]] * f[1][idx[1]] * f[2][idx[2]]).abs() <= 1e-12);
    }

    let r3 = RankTuple::tucker(vec![3, 3, 3]).unwrap();
    for seed in 0..100 {
        let (u, t) = gen_random_tucker(&s, &r3, seed).unwrap();
        assert_eq!(multilinear_rank(&u, Format::Tucker).values(), &[3, 3, 3], "seed {seed}");
        assert!((u.norm() - t.core().norm()).abs() <= 1e-10 * u.norm());
        assert!(t.factors().iter().all(|b| orthonormality_defect(b) <= 1e-10));
    }
    let (again, _) = gen_random_tucker(&s, &r3, 99).unwrap();
    assert_eq!(again.values(), gen_random_tucker(&s, &r3, 99).unwrap().0.values());
    assert!(gen_random_tucker(&s, &RankTuple::tucker(vec![11, 1, 1]).unwrap(), 0).is_err());
}

#[test]
fn trials_at_the_extremes() {
    let spec = ExperimentSpec {
        seed: 1,
        ..ExperimentSpec::default()
    };
    let full = run_trial(&spec, 100.0, 0).unwrap();
    assert!(full.success && full.m == 1000, "{full:?}");
    let few = run_trial(&spec, 3.0, 0).unwrap();
    assert!(!few.success);
    assert_eq!(few.m, 30);
    let enough = run_trial(&spec, 9.0, 0).unwrap();
    assert!(enough.success, "{enough:?}");
    assert_eq!(enough.instance_seed, instance_seed(1, 0));
}

#[test]
fn first_table_row_at_twenty_trials() {
    let spec = ExperimentSpec {
        grid: vec![3.0, 9.0],
        trials: 20,
        seed: 1,
        ..ExperimentSpec::default()
    };
    let result = run_sweep(&spec).unwrap();
    assert_eq!(result.points[0].success_rate, 0.0);
    assert!(result.points[1].success_rate >= 0.9, "{:?}", result.points[1]);
    assert_eq!(result.points[0].m, 30);
    assert_eq!(result.points[1].m, 90);
}

#[test]
fn success_rate_is_monotone_up_to_noise() {
    let spec = small_spec(vec![5.0, 10.0, 15.0, 25.0, 40.0]);
    let result = run_sweep(&spec).unwrap();
    let slack = 2.0 / (spec.trials as f64).sqrt();
    for w in result.points.windows(2) {
        assert!(w[1].success_rate + slack >= w[0].success_rate, "{:?}", result.points);
    }
    for p in &result.points {
        assert!(p.successes <= p.trials);
        assert!(p.band_low <= p.success_rate && p.success_rate <= p.band_high);
    }
    if let (Some(lo), Some(hi)) = (result.pct_max(), result.pct_min()) {
        assert!(lo < hi);
    }
}

#[test]
fn percentages_agree_with_a_scan_of_the_csv() {
    let spec = small_spec(vec![2.0, 5.0, 20.0, 50.0]);
    let result = run_sweep(&spec).unwrap();
    let mut out = Vec::new();
    write_sweep_csv(&result.points, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n_bar,m,trials,successes,success_rate,mean_iters_success"));
    let rows: Vec<(f64, usize, usize)> = lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            assert_eq!(f.len(), 6);
            (f[0].parse().unwrap(), f[2].parse().unwrap(), f[3].parse().unwrap())
        })
        .collect();
    let pct_max = rows.iter().filter(|r| r.2 == 0).map(|r| r.0).fold(None, |a: Option<f64>, x| Some(a.map_or(x, |a| a.max(x))));
    let pct_min = rows.iter().filter(|r| r.2 == r.1).map(|r| r.0).fold(None, |a: Option<f64>, x| Some(a.map_or(x, |a| a.min(x))));
    assert_eq!(pct_max, result.pct_max());
    assert_eq!(pct_min, result.pct_min());
    assert!(pct_max.is_some() && pct_min.is_some(), "{text}");

    let summary = SweepSummary::new(&spec, &result);
    assert_eq!(summary.pct_min, pct_min);
    assert!(summary.max_iters_at_pct_min.is_some());
}

#[test]
fn records_are_self_contained() {
    let spec = small_spec(vec![10.0, 30.0]);
    let result = run_sweep(&spec).unwrap();
    for rec in result.records.iter().step_by(3) {
        let again = run_trial(&spec, rec.n_bar, rec.trial).unwrap();
        assert_eq!(format!("{again:?}"), format!("{rec:?}"));
    }
}

#[test]
fn empty_grid_gives_header_only() {
    let result = run_sweep(&small_spec(Vec::new())).unwrap();
    let mut out = Vec::new();
    write_sweep_csv(&result.points, &mut out).unwrap();
    assert_eq!(String::from_utf8(out).unwrap(), "n_bar,m,trials,successes,success_rate,mean_iters_success\n");
}

#[test]
fn spec_validation_and_json() {
    let mut bad = small_spec(vec![0.0]);
    assert!(bad.validate().is_err());
    bad.grid = vec![101.0];
    assert!(bad.validate().is_err());
    bad.grid = vec![10.0];
    bad.trials = 0;
    assert!(bad.validate().is_err());
    let mut rgi = small_spec(vec![10.0]);
    rgi.algorithm = Algorithm::Rgi;
    assert!(rgi.validate().is_err());
    rgi.format = Format::Tt;
    rgi.validate().unwrap();
    assert_eq!(rgi.solver_rank().values(), &[1, 1]);

    let spec: ExperimentSpec = serde_json::from_str(r#"{"shape":[6,10,15],"rank":{"format":"tucker","values":[1,1,1]},"grid":[3,8]}"#).unwrap();
    assert_eq!(spec.trials, 50);
    assert_eq!(spec.step_rule, StepRule::Steepest);
    assert_eq!(spec.measurements(8.0), 72);
    assert_eq!(spec.measurements(9.0), 81);
    let text = serde_json::to_string(&spec).unwrap();
    assert_eq!(serde_json::from_str::<ExperimentSpec>(&text).unwrap(), spec);
}

#[test]
fn other_solvers_run_through_the_harness() {
    for (alg, format) in [(Algorithm::Rgi, Format::Tt), (Algorithm::Als, Format::Tucker), (Algorithm::Tiht, Format::Tt)] {
        let spec = ExperimentSpec {
            algorithm: alg,
            format,
            trials: 3,
            ..small_spec(vec![60.0])
        };
        let result = run_sweep(&spec).unwrap();
        assert_eq!(result.points[0].successes, 3, "{alg:?}/{format}: {:?}", result.records);
    }
}

#[test]
fn probe_reports() {
    let iso = ProbeRequest {
        shape: shape(&[4, 4, 4]),
        rank: RankTuple::tt(vec![2, 2]).unwrap(),
        map: MapKind::Orthonormal,
        m_grid: vec![64],
        draws: 2,
        samples: 100,
        ..ProbeRequest::default()
    };
    let report = probe_map(&iso).unwrap();
    assert!(report.points[0].delta_hat.iter().all(|&d| d <= 1e-10));
    assert_eq!(report.empirical_m, Some(64));

    let gauss = ProbeRequest {
        rank: RankTuple::tt(vec![2, 2]).unwrap(),
        m_grid: vec![50, 100, 200, 400],
        draws: 5,
        samples: 200,
        seed: 4,
        ..ProbeRequest::default()
    };
    let report = probe_map(&gauss).unwrap();
    let means: Vec<f64> = report.points.iter().map(|p| p.delta_hat.iter().sum::<f64>() / p.delta_hat.len() as f64).collect();
    assert!(means.windows(2).all(|w| w[1] < w[0]), "{means:?}");
    let bound = theorem2_m(Format::Tt, 10, 2, 3, 0.5, 0.1, 1.0).unwrap();
    assert_eq!(report.theorem_m_c1, bound);
    let mut csv = Vec::new();
    report.write_csv(&mut csv).unwrap();
    assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 1 + 4 * 5);
}
