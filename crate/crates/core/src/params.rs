//! Core OFDM dimensioning shared by every stage of the pipeline.

use crate::error::{Error, Result};

/// OFDM geometry and power bookkeeping.
///
/// `nd` is the length of the timing-metric observation window (trial lags
/// 0..nd-1), which by default spans two full OFDM symbols.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Subcarrier count (also the FFT/symbol-body size in samples).
    pub n: usize,
    /// Cyclic-prefix length in samples.
    pub ng: usize,
    /// Observation-window length in samples (trial timing lags).
    pub nd: usize,
    /// Per-subcarrier symbol power, linear.
    pub sigma_d2: f64,
}

impl SystemParams {
    /// Default window geometry: `nd = 2 (n + ng)`.
    pub fn new(n: usize, ng: usize, sigma_d2: f64) -> Result<Self> {
        Self::with_window(n, ng, 2 * (n + ng), sigma_d2)
    }

    pub fn with_window(n: usize, ng: usize, nd: usize, sigma_d2: f64) -> Result<Self> {
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::Config(format!(
                "subcarrier count must be an even power of two, got {n}"
            )));
        }
        if ng >= n {
            return Err(Error::Config(format!(
                "cyclic prefix ({ng}) must be shorter than the symbol body ({n})"
            )));
        }
        if nd < n + ng + 2 {
            return Err(Error::Config(format!(
                "window length {nd} too short for symbol length {} plus target region",
                n + ng
            )));
        }
        if !(sigma_d2 > 0.0 && sigma_d2.is_finite()) {
            return Err(Error::Config(format!("symbol power must be positive, got {sigma_d2}")));
        }
        Ok(Self { n, ng, nd, sigma_d2 })
    }

    /// Length of one CP-prefixed OFDM symbol.
    pub fn symbol_len(&self) -> usize {
        self.n + self.ng
    }

    /// Mean time-domain power of a symbol (preamble or payload).
    ///
    /// The subcarrier sum carries no `1/n` factor, so each time sample has
    /// power `n * sigma_d2`. The preamble is power-matched to the payload,
    /// and this value is the reference power for SNR definitions.
    pub fn signal_power(&self) -> f64 {
        self.n as f64 * self.sigma_d2
    }

    /// Largest timing offset whose target region `[theta+l, theta+ng+1]`
    /// still fits inside the observation window.
    pub fn max_legal_theta(&self) -> usize {
        self.nd - self.ng - 2
    }

    /// Received-stream length needed so every trial lag of the metric has
    /// full correlation support: lag `nd-1` reads up to `nd - 1 + n - 1`.
    pub fn stream_len(&self) -> usize {
        self.nd + self.n
    }
}

impl Default for SystemParams {
    /// The dimensioning used throughout the experiments:
    /// 64 subcarriers, CP 16, window 160, unit subcarrier power.
    fn default() -> Self {
        Self { n: 64, ng: 16, nd: 160, sigma_d2: 1.0 }
    }
}
