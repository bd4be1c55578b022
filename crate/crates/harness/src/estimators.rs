//! The three timing estimators under comparison.

use elmsync_core::elm::{estimate_sto, ElmModel};
use elmsync_core::metric::argmax;
use elmsync_core::{Error, Sample};

use crate::trial::TrialSignals;

/// Runtime estimator, borrowing any trained model it needs.
#[derive(Debug, Clone, Copy)]
pub enum Estimator<'a> {
    /// Argmax of the raw correlation metric.
    ScCorr,
    /// Network refinement of the normalized metric.
    MetricElm(&'a ElmModel),
    /// Network fed the raw received window, bypassing the metric.
    RawElm(&'a ElmModel),
    /// Test instrumentation: answers `theta + offset` (clamped to the
    /// window), bypassing the signal entirely.
    #[doc(hidden)]
    OffsetProbe(isize),
}

impl Estimator<'_> {
    pub fn id(&self) -> &'static str {
        match self {
            Estimator::ScCorr => "sc_corr",
            Estimator::MetricElm(_) => "elm",
            Estimator::RawElm(_) => "ts_learn",
            Estimator::OffsetProbe(_) => "offset_probe",
        }
    }

    /// Timing estimate for one synthesized trial.
    pub fn estimate(&self, signals: &TrialSignals) -> Result<usize, Error> {
        match self {
            Estimator::ScCorr => Ok(argmax(&signals.metric.values)),
            Estimator::MetricElm(model) => {
                let refined = model.infer(&signals.gbar.values)?;
                Ok(estimate_sto(&refined))
            }
            Estimator::RawElm(model) => {
                let nd = model.input_dim() / 2;
                if signals.stream.len() < nd {
                    return Err(Error::Domain(format!(
                        "window of {} samples shorter than feature dim /2 = {nd}",
                        signals.stream.len()
                    )));
                }
                let feature = raw_window_feature(&signals.stream[..nd]);
                match feature {
                    // Degenerate all-zero window: no usable feature.
                    None => Ok(0),
                    Some(f) => {
                        let refined = model.infer(&f)?;
                        Ok(estimate_sto(&refined))
                    }
                }
            }
            Estimator::OffsetProbe(offset) => {
                let max = signals.metric.values.len().saturating_sub(1) as isize;
                Ok((signals.theta as isize + offset).clamp(0, max) as usize)
            }
        }
    }
}

/// Concatenated real and imaginary parts of the window, L2-normalized.
/// Returns `None` for an all-zero window (the zero sentinel).
pub fn raw_window_feature(window: &[Sample]) -> Option<Vec<f64>> {
    let mut feature: Vec<f64> = Vec::with_capacity(2 * window.len());
    feature.extend(window.iter().map(|s| s.re));
    feature.extend(window.iter().map(|s| s.im));
    let norm = feature.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm < 1e-15 {
        return None;
    }
    for v in &mut feature {
        *v /= norm;
    }
    Some(feature)
}
