use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{ExperimentSpec, PointResult, SweepResult};

/// `%.6g`-style formatting: six significant digits, trailing zeros removed,
/// exponent form outside `[1e-5, 1e6)`. Independent of locale.
pub fn format_g6(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let exp = format!("{:.5e}", x);
    let (mantissa, e) = exp.split_once('e').expect("exponent form");
    let e: i32 = e.parse().expect("integer exponent");
    if !(-5..6).contains(&e) {
        let mantissa = trim_zeros(mantissa);
        let sign = if e < 0 { '-' } else { '+' };
        return format!("{mantissa}e{sign}{:02}", e.abs());
    }
    let decimals = (5 - e).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// `n_bar,m,trials,successes,success_rate,mean_iters_success`, one row per grid point.
pub fn write_sweep_csv<W: Write>(points: &[PointResult], mut out: W) -> std::io::Result<()> {
    writeln!(out, "n_bar,m,trials,successes,success_rate,mean_iters_success")?;
    for p in points {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            format_g6(p.n_bar),
            p.m,
            p.trials,
            p.successes,
            format_g6(p.success_rate),
            format_g6(p.mean_iters_success.unwrap_or(f64::NAN)),
        )?;
    }
    Ok(())
}

/// JSON companion of the CSV: the spec, per-point statistics with `±2σ`
/// bands, and the `%max`/`%min` summary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSummary {
    pub spec: ExperimentSpec,
    pub points: Vec<PointResult>,
    pub pct_max: Option<f64>,
    pub pct_min: Option<f64>,
    pub mean_iters_at_pct_min: Option<f64>,
    pub max_iters_at_pct_min: Option<usize>,
}

impl SweepSummary {
    pub fn new(spec: &ExperimentSpec, result: &SweepResult) -> Self {
        let pct_min = result.pct_min();
        let at_min = pct_min.and_then(|p| result.points.iter().find(|q| q.n_bar == p));
        SweepSummary {
            spec: spec.clone(),
            points: result.points.clone(),
            pct_max: result.pct_max(),
            pct_min,
            mean_iters_at_pct_min: at_min.and_then(|q| q.mean_iters_success),
            max_iters_at_pct_min: at_min.and_then(|q| q.max_iters_success),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g6_matches_printf() {
        assert_eq!(format_g6(3.0), "3");
        assert_eq!(format_g6(0.95), "0.95");
        assert_eq!(format_g6(1.0 / 3.0), "0.333333");
        assert_eq!(format_g6(123456789.0), "1.23457e+08");
        assert_eq!(format_g6(1.5e-7), "1.5e-07");
        assert_eq!(format_g6(45.25), "45.25");
        assert_eq!(format_g6(-2.5), "-2.5");
        assert_eq!(format_g6(999999.5), "1e+06");
        assert_eq!(format_g6(0.0001), "0.0001");
    }
}
