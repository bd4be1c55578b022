//! The classic half-symbol correlation timing metric and its unit-norm
//! form used as the network input.
//!
//! For a trial lag `d` over a received stream `r`:
//!
//! ```text
//! P(d) = sum_{m=0}^{N/2-1} conj(r(d+m)) r(d+m+N/2)
//! R(d) = sum_{m=0}^{N/2-1} |r(d+m+N/2)|^2
//! M(d) = |P(d)|^2 / R(d)^2
//! ```
//!
//! Samples beyond the provided stream are treated as silence, matching the
//! channel model's zero padding.

use num_complex::Complex64;

use crate::params::SystemParams;
use crate::Sample;

/// `M(d)` for `d = 0..nd-1`; entries are non-negative and finite.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingMetric {
    pub values: Vec<f64>,
}

/// Unit-L2-norm metric vector, or all zeros if the metric vanished.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedMetric {
    pub values: Vec<f64>,
}

#[inline]
fn sample(r: &[Sample], idx: usize) -> Complex64 {
    r.get(idx).copied().unwrap_or_default()
}

/// Half-symbol lag correlation `P(d)`.
pub fn autocorrelation(r: &[Sample], d: usize, n: usize) -> Complex64 {
    let half = n / 2;
    let mut acc = Complex64::default();
    for m in 0..half {
        acc += sample(r, d + m).conj() * sample(r, d + m + half);
    }
    acc
}

/// Second-half-window energy `R(d)`.
pub fn half_window_energy(r: &[Sample], d: usize, n: usize) -> f64 {
    let half = n / 2;
    (0..half).map(|m| sample(r, d + m + half).norm_sqr()).sum()
}

/// Computes `M(d)` over the full observation window.
///
/// Where `R(d)` is negligible relative to the mean window energy the ratio
/// is undefined; those lags get the neutral value 0.
pub fn timing_metric(r: &[Sample], params: &SystemParams) -> TimingMetric {
    let window = &r[..params.nd.min(r.len())];
    let mean_energy =
        window.iter().map(|v| v.norm_sqr()).sum::<f64>() / window.len().max(1) as f64;
    let eps = 1e-12 * mean_energy;
    let values = (0..params.nd)
        .map(|d| {
            let energy = half_window_energy(r, d, params.n);
            if energy <= eps {
                0.0
            } else {
                autocorrelation(r, d, params.n).norm_sqr() / (energy * energy)
            }
        })
        .collect();
    TimingMetric { values }
}

/// `g / ||g||_2`, with an all-zero sentinel for a vanished metric.
pub fn normalize_metric(g: &TimingMetric) -> NormalizedMetric {
    let norm = g.values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm < 1e-15 {
        return NormalizedMetric { values: vec![0.0; g.values.len()] };
    }
    NormalizedMetric { values: g.values.iter().map(|v| v / norm).collect() }
}

/// Index of the largest value, smallest index on ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (i, &v) in values.iter().enumerate() {
        if v > best_val {
            best_val = v;
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{apply_channel_windowed, ChannelRealization, ImpairmentConfig};
    use crate::frame::build_frame;
    use crate::rng::{complex_gaussian, stream_rng};
    use proptest::prelude::*;

    #[test]
    fn correlation_of_identical_halves_is_real_energy() {
        let mut rng = stream_rng(1, &[1]);
        let half: Vec<Complex64> = (0..4).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        let mut r = half.clone();
        r.extend_from_slice(&half);
        let p = autocorrelation(&r, 0, 8);
        let energy: f64 = half.iter().map(|v| v.norm_sqr()).sum();
        assert!((p - Complex64::new(energy, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn correlation_hand_value() {
        // N=4, r = [1, j, 1, j]: P(0) = 1*1 + (-j)*j = 2.
        let r = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
        ];
        let p = autocorrelation(&r, 0, 4);
        assert!((p - Complex64::new(2.0, 0.0)).norm() < 1e-15);
        assert!((half_window_energy(&r, 0, 4) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn zero_input_gives_zero_everything() {
        let params = SystemParams::default();
        let r = vec![Complex64::default(); params.stream_len()];
        assert_eq!(autocorrelation(&r, 0, params.n), Complex64::default());
        assert_eq!(half_window_energy(&r, 0, params.n), 0.0);
        let m = timing_metric(&r, &params);
        assert!(m.values.iter().all(|&v| v == 0.0));
        let g = normalize_metric(&m);
        assert!(g.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn unit_magnitude_energy() {
        let r = vec![Complex64::new(0.6, 0.8); 96];
        assert!((half_window_energy(&r, 0, 64) - 32.0).abs() < 1e-12);
    }

    #[test]
    fn noiseless_peak_is_unity() {
        // Near-linear drive: metric at the frame start is 1 to high accuracy.
        let params = SystemParams::default();
        let mut rng = stream_rng(2, &[2]);
        let frame = build_frame(&mut rng, &params, 2).unwrap();
        let ch = ChannelRealization { taps: vec![Complex64::new(1.0, 0.0)] };
        let theta = 20;
        let cfg = ImpairmentConfig { theta, ..ImpairmentConfig::clean() };
        let r = apply_channel_windowed(&frame, &ch, &cfg, &params, &mut rng, params.stream_len())
            .unwrap();
        let m = timing_metric(&r, &params);
        assert!((m.values[theta] - 1.0).abs() < 1e-6, "M(theta) = {}", m.values[theta]);
    }

    #[test]
    fn awgn_metric_stays_below_unity() {
        // Full-support noise lags: the correlation never reaches the energy.
        let params = SystemParams::default();
        let mut rng = stream_rng(3, &[3]);
        for _ in 0..1000 {
            let r: Vec<Complex64> =
                (0..params.stream_len()).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
            let m = timing_metric(&r, &params);
            let max = m.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert!(max < 1.0, "AWGN metric peaked at {max}");
        }
    }

    proptest! {
        // M is exactly invariant to global phase rotation and scaling.
        #[test]
        fn metric_scale_and_phase_invariance(seed in 0u64..200, scale in 0.05..20.0f64, alpha in 0.0..6.3f64) {
            let params = SystemParams::default();
            let mut rng = stream_rng(seed, &[4]);
            let r: Vec<Complex64> =
                (0..params.stream_len()).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
            let rot = Complex64::cis(alpha) * scale;
            let r2: Vec<Complex64> = r.iter().map(|v| v * rot).collect();
            let m1 = timing_metric(&r, &params);
            let m2 = timing_metric(&r2, &params);
            for (a, b) in m1.values.iter().zip(&m2.values) {
                prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1e-12));
            }
        }

        #[test]
        fn normalization_is_unit_norm_and_scale_invariant(seed in 0u64..200, c in 0.01..100.0f64) {
            let params = SystemParams::default();
            let mut rng = stream_rng(seed, &[5]);
            let r: Vec<Complex64> =
                (0..params.stream_len()).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
            let m = timing_metric(&r, &params);
            let g = normalize_metric(&m);
            let norm: f64 = g.values.iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!((norm - 1.0).abs() < 1e-9);

            let scaled = TimingMetric { values: m.values.iter().map(|v| v * c).collect() };
            let g2 = normalize_metric(&scaled);
            for (a, b) in g.values.iter().zip(&g2.values) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn normalize_hand_value() {
        let mut values = vec![0.0; 8];
        values[0] = 3.0;
        values[1] = 4.0;
        let g = normalize_metric(&TimingMetric { values });
        assert!((g.values[0] - 0.6).abs() < 1e-12);
        assert!((g.values[1] - 0.8).abs() < 1e-12);
        assert!(g.values[2..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn argmax_tie_break_is_smallest_index() {
        assert_eq!(argmax(&[0.0, 0.0, 5.0, 0.0]), 2);
        assert_eq!(argmax(&[1.0, 1.0]), 0);
        assert_eq!(argmax(&[]), 0);
    }
}
