//! Receive-side impairments: multipath with an exponential power-delay
//! profile, carrier frequency offset and phase rotation, integer timing
//! offset, and AWGN at a configured SNR.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::frame::ComplexFrame;
use crate::params::SystemParams;
use crate::rng::complex_gaussian;
use crate::Sample;

/// One multipath realization: `taps[l]` is the gain of the `l`-sample echo.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub taps: Vec<Sample>,
}

impl ChannelRealization {
    pub fn memory(&self) -> usize {
        self.taps.len()
    }
}

/// Draws `l` independent CN(0, sigma_l^2) taps with an exponential
/// power-delay profile of `decay_db_per_tap`, normalized to unit total
/// expected power.
pub fn draw_channel<R: Rng + ?Sized>(rng: &mut R, l: usize, decay_db_per_tap: f64) -> ChannelRealization {
    assert!(l >= 1, "channel needs at least one tap");
    let profile: Vec<f64> = (0..l).map(|i| 10f64.powf(-(i as f64) * decay_db_per_tap / 10.0)).collect();
    let total: f64 = profile.iter().sum();
    let taps = profile
        .into_iter()
        .map(|p| complex_gaussian(rng, p / total))
        .collect();
    ChannelRealization { taps }
}

/// `sigma^2 = sigma_p2 * 10^(-snr_db / 10)`.
pub fn snr_to_noise_variance(snr_db: f64, sigma_p2: f64) -> f64 {
    sigma_p2 * 10f64.powf(-snr_db / 10.0)
}

/// Reference power used when converting an SNR into a noise variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SnrReference {
    /// Mean `|x|^2` over the (distorted) preamble segment of the frame
    /// being transmitted, so the stated SNR is the actual preamble-to-noise
    /// power ratio at the receiver regardless of amplifier compression.
    MeasuredPreamble,
    /// A fixed reference power.
    Fixed(f64),
}

/// Per-trial impairment values. Randomization policies live upstream; this
/// struct holds the concrete draws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpairmentConfig {
    /// Signal-to-noise ratio in dB (`f64::INFINITY` disables noise).
    pub snr_db: f64,
    /// Power the SNR refers to.
    pub snr_ref: SnrReference,
    /// Normalized carrier frequency offset in subcarrier spacings.
    pub nu: f64,
    /// Initial phase in radians.
    pub phi: f64,
    /// Integer symbol timing offset in samples.
    pub theta: usize,
    /// Back-off scale applied before the nonlinearity (carried for record;
    /// distortion itself is applied upstream of this module).
    pub eta: f64,
}

impl ImpairmentConfig {
    /// All impairments off: identity channel at infinite SNR.
    pub fn clean() -> Self {
        Self {
            snr_db: f64::INFINITY,
            snr_ref: SnrReference::MeasuredPreamble,
            nu: 0.0,
            phi: 0.0,
            theta: 0,
            eta: 1.0,
        }
    }
}

/// Propagates a (possibly distorted) frame through the channel and returns
/// the first `out_len` received samples:
///
/// `r(n) = [sum_l h(l) s(n - theta - l)] e^{j(2 pi n nu / N + phi)} + w(n)`
///
/// Samples outside the frame are silence. `out_len` is typically
/// [`SystemParams::stream_len`] so that every trial lag of the timing
/// metric has full correlation support.
pub fn apply_channel_windowed<R: Rng + ?Sized>(
    frame: &ComplexFrame,
    ch: &ChannelRealization,
    cfg: &ImpairmentConfig,
    params: &SystemParams,
    rng: &mut R,
    out_len: usize,
) -> Result<Vec<Sample>> {
    if cfg.theta > params.max_legal_theta() {
        return Err(Error::Domain(format!(
            "timing offset {} leaves no room for the target region (max {})",
            cfg.theta,
            params.max_legal_theta()
        )));
    }
    if cfg.eta <= 0.0 || cfg.eta.is_nan() {
        return Err(Error::Domain(format!("back-off must be positive, got {}", cfg.eta)));
    }
    let sigma2 = match cfg.snr_ref {
        SnrReference::MeasuredPreamble => {
            let p = frame.preamble_power();
            if p > 0.0 {
                snr_to_noise_variance(cfg.snr_db, p)
            } else {
                0.0
            }
        }
        SnrReference::Fixed(p) => snr_to_noise_variance(cfg.snr_db, p),
    };

    let s = &frame.samples;
    let mut out = Vec::with_capacity(out_len);
    for n in 0..out_len {
        let mut acc = Complex64::default();
        for (l, &h) in ch.taps.iter().enumerate() {
            let idx = n as isize - cfg.theta as isize - l as isize;
            if idx >= 0 && (idx as usize) < s.len() {
                acc += h * s[idx as usize];
            }
        }
        let angle = std::f64::consts::TAU * n as f64 * cfg.nu / params.n as f64 + cfg.phi;
        let mut r = acc * Complex64::cis(angle);
        if sigma2 > 0.0 {
            r += complex_gaussian(rng, sigma2);
        }
        out.push(r);
    }
    Ok(out)
}

/// [`apply_channel_windowed`] over exactly the `nd`-sample observation
/// window.
pub fn apply_channel<R: Rng + ?Sized>(
    frame: &ComplexFrame,
    ch: &ChannelRealization,
    cfg: &ImpairmentConfig,
    params: &SystemParams,
    rng: &mut R,
) -> Result<Vec<Sample>> {
    apply_channel_windowed(frame, ch, cfg, params, rng, params.nd)
}
