//! Monte Carlo error-probability curves with common random numbers across
//! estimators, Wilson confidence intervals, and CSV export.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use elmsync_core::rng::{derive_seed, stream_rng};
use elmsync_core::Error;

use crate::estimators::Estimator;
use crate::trial::{is_timing_error, seed_domain, synthesize_trial, TrialContext};

/// 97.5th percentile of the standard normal: the 95% two-sided z.
const Z95: f64 = 1.959963984540054;

/// One SNR point of a curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub snr_db: f64,
    pub n_trials: usize,
    pub n_errors: usize,
    pub p_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl CurvePoint {
    fn from_errors(snr_db: f64, n_trials: usize, n_errors: usize) -> Self {
        let (ci_low, ci_high) = wilson_interval(n_errors, n_trials, Z95);
        Self {
            snr_db,
            n_trials,
            n_errors,
            p_error: n_errors as f64 / n_trials as f64,
            ci_low,
            ci_high,
        }
    }

    /// Whether two points' 95% intervals overlap.
    pub fn overlaps(&self, other: &CurvePoint) -> bool {
        self.ci_low <= other.ci_high && other.ci_low <= self.ci_high
    }
}

/// Identification attached to an exported curve.
#[derive(Debug, Clone)]
pub struct CurveMeta {
    pub scenario: String,
    pub estimator: String,
    pub label_scheme: String,
    pub l_train: usize,
    pub l_test: usize,
    pub eta_train: f64,
    pub eta_test: f64,
    pub master_seed: u64,
}

/// A labelled error-probability curve, rows sorted by SNR.
#[derive(Debug, Clone)]
pub struct ErrorProbabilityCurve {
    pub meta: CurveMeta,
    pub points: Vec<CurvePoint>,
}

impl ErrorProbabilityCurve {
    pub fn point_at(&self, snr_db: f64) -> Option<&CurvePoint> {
        self.points.iter().find(|p| p.snr_db == snr_db)
    }
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: usize, trials: usize, z: f64) -> (f64, f64) {
    assert!(trials > 0, "interval needs at least one trial");
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Evaluates every estimator on the same trials at each SNR of the grid.
///
/// Trial seeds are a pure function of `(master_seed, scenario_tag, SNR
/// index, trial index)`; error counts are integer sums, so results are
/// bit-identical across worker counts and estimator orderings.
pub fn evaluate_error_counts(
    ctx: &TrialContext,
    estimators: &[Estimator<'_>],
    snr_grid_db: &[f64],
    n_trials: usize,
    master_seed: u64,
    scenario_tag: u64,
) -> Result<Vec<Vec<CurvePoint>>, Error> {
    if estimators.is_empty() {
        return Err(Error::Domain("need at least one estimator".into()));
    }
    let mut per_estimator: Vec<Vec<CurvePoint>> = vec![Vec::new(); estimators.len()];
    for (si, &snr_db) in snr_grid_db.iter().enumerate() {
        let errors: Vec<usize> = (0..n_trials)
            .into_par_iter()
            .try_fold(
                || vec![0usize; estimators.len()],
                |mut acc, t| {
                    let seed = derive_seed(
                        master_seed,
                        &[seed_domain::EVAL, scenario_tag, si as u64, t as u64],
                    );
                    let mut rng = stream_rng(seed, &[]);
                    let signals = synthesize_trial(ctx, snr_db, &mut rng)?;
                    for (e, est) in estimators.iter().enumerate() {
                        let theta_hat = est.estimate(&signals)?;
                        if is_timing_error(signals.theta, theta_hat, ctx.params.ng, ctx.l) {
                            acc[e] += 1;
                        }
                    }
                    Ok::<_, Error>(acc)
                },
            )
            .try_reduce(
                || vec![0usize; estimators.len()],
                |mut a, b| {
                    for (x, y) in a.iter_mut().zip(b) {
                        *x += y;
                    }
                    Ok(a)
                },
            )?;
        for (e, &n_err) in errors.iter().enumerate() {
            per_estimator[e].push(CurvePoint::from_errors(snr_db, n_trials, n_err));
        }
    }
    Ok(per_estimator)
}

/// CSV column header, fixed by the export contract.
pub const CSV_HEADER: &str = "scenario,estimator,label_scheme,snr_db,L_train,L_test,eta_train,eta_test,n_trials,n_errors,p_error,ci_low,ci_high,master_seed";

/// Writes one curve as a CSV file (header + one row per SNR point).
pub fn write_curve_csv<P: AsRef<Path>>(path: P, curve: &ErrorProbabilityCurve) -> Result<(), Error> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "{CSV_HEADER}")?;
    let m = &curve.meta;
    for p in &curve.points {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            m.scenario,
            m.estimator,
            m.label_scheme,
            p.snr_db,
            m.l_train,
            m.l_test,
            m.eta_train,
            m.eta_test,
            p.n_trials,
            p.n_errors,
            p.p_error,
            p.ci_low,
            p.ci_high,
            m.master_seed
        )?;
    }
    w.flush()?;
    Ok(())
}
