//! Single-trial synthesis: draw impairments, push one frame through the
//! transmitter nonlinearity and channel, and precompute the views every
//! estimator consumes.
//!
//! All randomness comes from one seeded stream per trial with a fixed draw
//! order (offset, CFO, phase, frame, channel taps, noise), so trials are
//! reproducible in isolation and common random numbers across estimators
//! hold by construction.

use rand::Rng;

use elmsync_core::channel::{apply_channel_windowed, draw_channel, ImpairmentConfig, SnrReference};
use elmsync_core::frame::build_frame;
use elmsync_core::labels::isi_free_region;
use elmsync_core::metric::{normalize_metric, timing_metric, NormalizedMetric, TimingMetric};
use elmsync_core::rng::{stream_rng, TrialRng};
use elmsync_core::saleh::{saleh_distort, SalehParams};
use elmsync_core::{Error, Sample, SystemParams};

use crate::config::{AngleMode, ExperimentConfig};
use crate::estimators::Estimator;

/// Seed-domain tags keeping dataset, evaluation, calibration, and model
/// initialization streams disjoint.
pub mod seed_domain {
    pub const DATASET: u64 = 1;
    pub const EVAL: u64 = 2;
    pub const MODEL_INIT: u64 = 3;
    pub const CALIBRATION: u64 = 4;
}

/// Everything that varies between the training and testing sides of an
/// experiment.
#[derive(Debug, Clone, Copy)]
pub struct TrialContext {
    pub params: SystemParams,
    pub saleh: SalehParams,
    /// Channel memory actually applied.
    pub l: usize,
    /// Back-off into the nonlinearity.
    pub eta: f64,
    pub nu_mode: AngleMode,
    pub phi_mode: AngleMode,
    pub theta_max: usize,
    pub payload_symbols: usize,
    pub decay_db_per_tap: f64,
}

impl TrialContext {
    /// Training-side context (`l_train`, `eta_train`).
    pub fn train_side(cfg: &ExperimentConfig, eta: f64) -> Self {
        Self::of(cfg, cfg.l_train, eta)
    }

    /// Testing-side context (`l_test`, `eta_test`).
    pub fn test_side(cfg: &ExperimentConfig, eta: f64) -> Self {
        Self::of(cfg, cfg.l_test, eta)
    }

    fn of(cfg: &ExperimentConfig, l: usize, eta: f64) -> Self {
        Self {
            params: cfg.params,
            saleh: cfg.saleh,
            l,
            eta,
            nu_mode: cfg.nu_mode,
            phi_mode: cfg.phi_mode,
            theta_max: cfg.theta_max,
            payload_symbols: cfg.payload_symbols,
            decay_db_per_tap: cfg.decay_db_per_tap,
        }
    }

    pub fn with_l(mut self, l: usize) -> Self {
        self.l = l;
        self
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }
}

/// One synthesized trial plus the derived estimator inputs.
#[derive(Debug, Clone)]
pub struct TrialSignals {
    /// True timing offset.
    pub theta: usize,
    /// Received stream with full correlation support for every lag.
    pub stream: Vec<Sample>,
    pub metric: TimingMetric,
    pub gbar: NormalizedMetric,
}

/// Draws one trial at `snr_db` from a dedicated RNG stream.
pub fn synthesize_trial(
    ctx: &TrialContext,
    snr_db: f64,
    rng: &mut TrialRng,
) -> Result<TrialSignals, Error> {
    let params = &ctx.params;
    let theta = rng.random_range(0..=ctx.theta_max);
    let nu = ctx.nu_mode.resolve(rng, -0.5, 0.5);
    let phi = ctx.phi_mode.resolve(rng, 0.0, std::f64::consts::TAU);
    let frame = build_frame(rng, params, ctx.payload_symbols)?;
    let distorted = frame.with_samples(saleh_distort(&frame.samples, &ctx.saleh, ctx.eta));
    let channel = draw_channel(rng, ctx.l, ctx.decay_db_per_tap);
    let cfg = ImpairmentConfig {
        snr_db,
        snr_ref: SnrReference::MeasuredPreamble,
        nu,
        phi,
        theta,
        eta: ctx.eta,
    };
    let stream =
        apply_channel_windowed(&distorted, &channel, &cfg, params, rng, params.stream_len())?;
    let metric = timing_metric(&stream, params);
    let gbar = normalize_metric(&metric);
    Ok(TrialSignals { theta, stream, metric, gbar })
}

/// Outcome of one estimator on one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialOutcome {
    pub theta: usize,
    pub theta_hat: usize,
    pub is_error: bool,
}

/// Whether an estimate counts as a timing error: it does unless it lands
/// inside `[theta + l, theta + ng + 1]` (inclusive), with `l` the channel
/// memory actually applied in the trial.
pub fn is_timing_error(theta: usize, theta_hat: usize, ng: usize, l: usize) -> bool {
    !isi_free_region(theta, ng, l).contains(&theta_hat)
}

/// Runs one trial end to end for a single estimator.
///
/// `trial_seed` fully determines the trial; running several estimators with
/// the same seed reproduces identical impairments (common random numbers).
pub fn run_trial(
    ctx: &TrialContext,
    estimator: &Estimator<'_>,
    snr_db: f64,
    trial_seed: u64,
) -> Result<TrialOutcome, Error> {
    let mut rng = stream_rng(trial_seed, &[]);
    let signals = synthesize_trial(ctx, snr_db, &mut rng)?;
    let theta_hat = estimator.estimate(&signals)?;
    Ok(TrialOutcome {
        theta: signals.theta,
        theta_hat,
        is_error: is_timing_error(signals.theta, theta_hat, ctx.params.ng, ctx.l),
    })
}
