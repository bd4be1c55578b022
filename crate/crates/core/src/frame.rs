//! Undistorted baseband frame synthesis: QPSK subcarrier loading, the
//! unnormalized subcarrier sum, cyclic prefixes, and a half-repeating
//! preamble for correlation-based timing.

use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::Sample;

/// Subcarrier modulation alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Modulation {
    /// Four points `(±1 ± j)/√2`, scaled to magnitude `√sigma_d2`.
    Qpsk,
}

impl FromStr for Modulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qpsk" => Ok(Modulation::Qpsk),
            other => Err(Error::Config(format!("unknown modulation scheme '{other}'"))),
        }
    }
}

/// Draws `n` i.i.d. frequency-domain symbols with `E|d(k)|^2 = sigma_d2`.
pub fn modulate_subcarriers<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    sigma_d2: f64,
    scheme: Modulation,
) -> Vec<Sample> {
    match scheme {
        Modulation::Qpsk => {
            let a = (sigma_d2 / 2.0).sqrt();
            (0..n)
                .map(|_| {
                    let re = if rng.random::<bool>() { a } else { -a };
                    let im = if rng.random::<bool>() { a } else { -a };
                    Complex64::new(re, im)
                })
                .collect()
        }
    }
}

/// Unnormalized inverse DFT: `s(n) = sum_k d(k) exp(j 2 pi n k / N)`.
///
/// No `1/N` factor is applied anywhere, so a symbol's time-domain power is
/// `N` times its total subcarrier power.
pub fn ofdm_modulate(d: &[Sample]) -> Vec<Sample> {
    let mut buf = d.to_vec();
    inverse_fft(d.len()).process(&mut buf);
    buf
}

fn inverse_fft(n: usize) -> Arc<dyn Fft<f64>> {
    FftPlanner::new().plan_fft_inverse(n)
}

/// Forward DFT divided by `N`; inverse of [`ofdm_modulate`].
pub fn ofdm_demodulate(s: &[Sample]) -> Vec<Sample> {
    let n = s.len();
    let mut buf = s.to_vec();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let inv = 1.0 / n as f64;
    for v in &mut buf {
        *v *= inv;
    }
    buf
}

/// Prepends the last `ng` samples of `symbol` to its front.
pub fn add_cyclic_prefix(symbol: &[Sample], ng: usize) -> Result<Vec<Sample>> {
    let n = symbol.len();
    if ng >= n {
        return Err(Error::Config(format!("cyclic prefix {ng} must be shorter than symbol {n}")));
    }
    let mut out = Vec::with_capacity(n + ng);
    out.extend_from_slice(&symbol[n - ng..]);
    out.extend_from_slice(symbol);
    Ok(out)
}

/// Builds one CP-prefixed preamble symbol whose body repeats after `n/2`
/// samples.
///
/// Even-indexed subcarriers carry a seeded PN QPSK sequence scaled by `√2`
/// (so the symbol is power-matched to a payload symbol loading all `n`
/// subcarriers); odd subcarriers are empty, which forces the half-period
/// repetition exactly.
pub fn build_schmidl_preamble<R: Rng + ?Sized>(
    rng: &mut R,
    params: &SystemParams,
) -> Result<Vec<Sample>> {
    if !params.n.is_multiple_of(2) {
        return Err(Error::Config(format!("preamble needs an even subcarrier count, got {}", params.n)));
    }
    let pn = modulate_subcarriers(rng, params.n / 2, params.sigma_d2, Modulation::Qpsk);
    let mut d = vec![Complex64::default(); params.n];
    let boost = 2.0_f64.sqrt();
    for (k, p) in pn.into_iter().enumerate() {
        d[2 * k] = boost * p;
    }
    add_cyclic_prefix(&ofdm_modulate(&d), params.ng)
}

/// Kind of a frame segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentKind {
    Preamble,
    /// Zero-based payload symbol index.
    Payload(usize),
}

/// Location of one CP-prefixed OFDM symbol inside a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub kind: SegmentKind,
    pub offset: usize,
    pub len: usize,
}

/// A time-domain frame: preamble followed by payload symbols, with segment
/// metadata retained for power measurement and debugging.
#[derive(Debug, Clone)]
pub struct ComplexFrame {
    pub samples: Vec<Sample>,
    pub layout: Vec<Segment>,
}

impl ComplexFrame {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Samples of the preamble segment (CP included).
    pub fn preamble(&self) -> &[Sample] {
        let seg = self.layout[0];
        &self.samples[seg.offset..seg.offset + seg.len]
    }

    /// Mean `|x|^2` over the preamble segment.
    pub fn preamble_power(&self) -> f64 {
        let p = self.preamble();
        p.iter().map(|s| s.norm_sqr()).sum::<f64>() / p.len() as f64
    }

    /// Returns a copy with `samples` replaced and layout preserved.
    /// Panics if the length changes.
    pub fn with_samples(&self, samples: Vec<Sample>) -> Self {
        assert_eq!(samples.len(), self.samples.len());
        Self { samples, layout: self.layout.clone() }
    }
}

/// Concatenates `preamble` with `payload_symbols` freshly drawn CP-prefixed
/// QPSK data symbols.
pub fn assemble_frame<R: Rng + ?Sized>(
    preamble: Vec<Sample>,
    payload_symbols: usize,
    rng: &mut R,
    params: &SystemParams,
) -> Result<ComplexFrame> {
    if payload_symbols == 0 {
        return Err(Error::Config("a frame needs at least one payload symbol".into()));
    }
    let mut samples = preamble;
    let mut layout = vec![Segment { kind: SegmentKind::Preamble, offset: 0, len: samples.len() }];
    for i in 0..payload_symbols {
        let d = modulate_subcarriers(rng, params.n, params.sigma_d2, Modulation::Qpsk);
        let sym = add_cyclic_prefix(&ofdm_modulate(&d), params.ng)?;
        layout.push(Segment { kind: SegmentKind::Payload(i), offset: samples.len(), len: sym.len() });
        samples.extend_from_slice(&sym);
    }
    Ok(ComplexFrame { samples, layout })
}

/// Convenience: seeded preamble + payload in one call.
pub fn build_frame<R: Rng + ?Sized>(
    rng: &mut R,
    params: &SystemParams,
    payload_symbols: usize,
) -> Result<ComplexFrame> {
    let preamble = build_schmidl_preamble(rng, params)?;
    assemble_frame(preamble, payload_symbols, rng, params)
}

/// Debug dump: interleaved little-endian f64 I/Q pairs.
pub fn dump_iq_f64<P: AsRef<Path>>(path: P, samples: &[Sample]) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    for s in samples {
        w.write_all(&s.re.to_le_bytes())?;
        w.write_all(&s.im.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}
