//! Target-vector construction for the learned timing refinement.
//!
//! All indices are 0-based positions in the `nd`-sample observation
//! window. For a true offset `theta`, channel memory `l`, and CP length
//! `ng`, the interference-free FFT-window placements are
//! `theta + l ..= theta + ng + 1`; the three schemes mark, respectively,
//! the upper boundary of that region, its midpoint, and the whole region.

use crate::error::{Error, Result};
use crate::params::SystemParams;

/// Which target-vector design to train with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LabelScheme {
    /// Single 1 at `theta + ng + 1` (the region's upper boundary).
    OnehotEnd,
    /// Single 1 at `theta + floor((ng + l + 1) / 2)`.
    Midpoint,
    /// Ones across the whole region `theta + l ..= theta + ng + 1`.
    IsiFree,
}

impl LabelScheme {
    pub const ALL: [LabelScheme; 3] =
        [LabelScheme::OnehotEnd, LabelScheme::Midpoint, LabelScheme::IsiFree];

    /// Config-file identifier.
    pub fn id(&self) -> &'static str {
        match self {
            LabelScheme::OnehotEnd => "onehot_end",
            LabelScheme::Midpoint => "midpoint",
            LabelScheme::IsiFree => "isi_free",
        }
    }
}

impl std::str::FromStr for LabelScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "onehot_end" => Ok(LabelScheme::OnehotEnd),
            "midpoint" => Ok(LabelScheme::Midpoint),
            "isi_free" => Ok(LabelScheme::IsiFree),
            other => Err(Error::Config(format!("unknown label scheme '{other}'"))),
        }
    }
}

/// A binary target vector over the observation window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVector {
    pub values: Vec<u8>,
    pub scheme: LabelScheme,
}

impl LabelVector {
    /// Indices carrying a 1.
    pub fn support(&self) -> Vec<usize> {
        self.values.iter().enumerate().filter(|(_, &v)| v == 1).map(|(i, _)| i).collect()
    }

    /// Target column as floats for least-squares training.
    pub fn as_f64(&self) -> Vec<f64> {
        self.values.iter().map(|&v| v as f64).collect()
    }
}

/// The interference-free placement region `[theta + l, theta + ng + 1]`.
pub fn isi_free_region(theta: usize, ng: usize, l: usize) -> std::ops::RangeInclusive<usize> {
    theta + l..=theta + ng + 1
}

fn check_geometry(theta: usize, params: &SystemParams, l: usize) -> Result<()> {
    if l == 0 || l > params.ng {
        return Err(Error::Domain(format!(
            "channel memory {l} must satisfy 1 <= l <= ng ({})",
            params.ng
        )));
    }
    if theta + params.ng + 1 > params.nd - 1 {
        return Err(Error::Domain(format!(
            "offset {theta}: region end {} leaves the {}-sample window",
            theta + params.ng + 1,
            params.nd
        )));
    }
    Ok(())
}

fn onehot(index: usize, params: &SystemParams, scheme: LabelScheme) -> LabelVector {
    let mut values = vec![0u8; params.nd];
    values[index] = 1;
    LabelVector { values, scheme }
}

/// Single 1 at the region's upper boundary `theta + ng + 1`.
pub fn label_onehot_end(theta: usize, params: &SystemParams, l: usize) -> Result<LabelVector> {
    check_geometry(theta, params, l)?;
    Ok(onehot(theta + params.ng + 1, params, LabelScheme::OnehotEnd))
}

/// Single 1 at the region midpoint `theta + floor((ng + l + 1) / 2)`.
#[allow(clippy::manual_div_ceil)] // keep the midpoint formula in its stated floor form
pub fn label_midpoint(theta: usize, params: &SystemParams, l: usize) -> Result<LabelVector> {
    check_geometry(theta, params, l)?;
    Ok(onehot(theta + (params.ng + l + 1) / 2, params, LabelScheme::Midpoint))
}

/// Ones across the whole region; support size is `ng - l + 2`.
pub fn label_isi_free(theta: usize, params: &SystemParams, l: usize) -> Result<LabelVector> {
    check_geometry(theta, params, l)?;
    let mut values = vec![0u8; params.nd];
    for n in isi_free_region(theta, params.ng, l) {
        values[n] = 1;
    }
    Ok(LabelVector { values, scheme: LabelScheme::IsiFree })
}

/// Builds the label for the configured scheme.
pub fn build_label(
    scheme: LabelScheme,
    theta: usize,
    params: &SystemParams,
    l: usize,
) -> Result<LabelVector> {
    match scheme {
        LabelScheme::OnehotEnd => label_onehot_end(theta, params, l),
        LabelScheme::Midpoint => label_midpoint(theta, params, l),
        LabelScheme::IsiFree => label_isi_free(theta, params, l),
    }
}
