//! Experiment configuration: TOML-backed, strictly validated, with
//! unknown keys rejected.

use std::path::Path;
use std::str::FromStr;

use serde::Deserialize;

use elmsync_core::labels::LabelScheme;
use elmsync_core::saleh::SalehParams;
use elmsync_core::{Error, SystemParams};

/// Which timing estimator an `eval` run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    /// Correlation-metric argmax baseline.
    ScCorr,
    /// Network refinement of the normalized metric.
    Elm,
    /// Network fed the raw received window (no timing preprocessing).
    TsLearn,
}

impl EstimatorKind {
    pub fn id(&self) -> &'static str {
        match self {
            EstimatorKind::ScCorr => "sc_corr",
            EstimatorKind::Elm => "elm",
            EstimatorKind::TsLearn => "ts_learn",
        }
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "sc_corr" => Ok(EstimatorKind::ScCorr),
            "elm" => Ok(EstimatorKind::Elm),
            "ts_learn" => Ok(EstimatorKind::TsLearn),
            other => Err(Error::Config(format!("unknown estimator '{other}'"))),
        }
    }
}

/// Per-trial randomization policy for an impairment angle.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum AngleMode {
    Keyword(AngleKeyword),
    Fixed { fixed: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AngleKeyword {
    Random,
}

impl AngleMode {
    pub fn random() -> Self {
        AngleMode::Keyword(AngleKeyword::Random)
    }

    pub fn fixed(v: f64) -> Self {
        AngleMode::Fixed { fixed: v }
    }

    /// Resolves to a concrete value, drawing uniformly from
    /// `lo..hi` in the random case.
    pub fn resolve<R: rand::Rng + ?Sized>(&self, rng: &mut R, lo: f64, hi: f64) -> f64 {
        match self {
            AngleMode::Keyword(AngleKeyword::Random) => rng.random_range(lo..hi),
            AngleMode::Fixed { fixed } => *fixed,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsSection {
    #[serde(default = "default_n")]
    n: usize,
    #[serde(default = "default_ng")]
    ng: usize,
    /// Observation-window length; defaults to `2 (n + ng)`.
    nd: Option<usize>,
    #[serde(default = "default_sigma_d2")]
    sigma_d2: f64,
}

fn default_n() -> usize {
    64
}
fn default_ng() -> usize {
    16
}
fn default_sigma_d2() -> f64 {
    1.0
}

impl Default for ParamsSection {
    fn default() -> Self {
        Self { n: 64, ng: 16, nd: None, sigma_d2: 1.0 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct SalehSection {
    #[serde(default = "default_alpha_a")]
    alpha_a: f64,
    #[serde(default = "default_beta_a")]
    beta_a: f64,
    #[serde(default = "default_alpha_phi")]
    alpha_phi: f64,
    #[serde(default = "default_beta_phi")]
    beta_phi: f64,
}

fn default_alpha_a() -> f64 {
    1.96
}
fn default_beta_a() -> f64 {
    0.99
}
fn default_alpha_phi() -> f64 {
    2.53
}
fn default_beta_phi() -> f64 {
    2.82
}

impl Default for SalehSection {
    fn default() -> Self {
        Self { alpha_a: 1.96, beta_a: 0.99, alpha_phi: 2.53, beta_phi: 2.82 }
    }
}

/// Raw deserialized experiment file; see [`ExperimentConfig`] for the
/// validated form.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    master_seed: u64,
    #[serde(default = "default_label_scheme")]
    label_scheme: String,
    #[serde(default = "default_estimator")]
    estimator: String,
    #[serde(default = "default_snr_grid")]
    snr_grid_db: Vec<f64>,
    #[serde(default = "default_nt")]
    nt: usize,
    #[serde(default = "default_test_trials")]
    n_test_trials: usize,
    #[serde(default = "default_l")]
    l_train: usize,
    #[serde(default = "default_l")]
    l_test: usize,
    eta_train: Option<f64>,
    eta_test: Option<f64>,
    /// Target EVM in percent; calibrated to a back-off when eta is absent.
    target_evm: Option<f64>,
    #[serde(default = "default_angle_mode")]
    nu_mode: AngleMode,
    #[serde(default = "default_angle_mode")]
    phi_mode: AngleMode,
    /// Largest timing offset drawn in a trial; defaults to `n + ng`.
    theta_max: Option<usize>,
    #[serde(default = "default_payload_symbols")]
    payload_symbols: usize,
    /// Hidden width of the metric-input network; defaults to `8 (n + ng)`.
    n_hidden: Option<usize>,
    /// Hidden width of the raw-input network; defaults to `16 (n + ng)`.
    n_hidden_raw: Option<usize>,
    #[serde(default = "default_ridge_rel")]
    ridge_rel: f64,
    #[serde(default = "default_decay")]
    decay_db_per_tap: f64,
    #[serde(default = "default_evm_trials")]
    evm_trials: usize,
    #[serde(default = "default_l_grid")]
    l_train_grid: Vec<usize>,
    #[serde(default = "default_l_grid")]
    l_test_grid: Vec<usize>,
    #[serde(default = "default_eta_grid")]
    eta_train_grid: Vec<f64>,
    #[serde(default = "default_eta_grid")]
    eta_test_grid: Vec<f64>,
    #[serde(default)]
    params: ParamsSection,
    #[serde(default)]
    saleh: SalehSection,
}

fn default_label_scheme() -> String {
    "isi_free".into()
}
fn default_estimator() -> String {
    "elm".into()
}
fn default_snr_grid() -> Vec<f64> {
    vec![0.0, 4.0, 8.0, 12.0, 16.0, 20.0]
}
fn default_nt() -> usize {
    1 << 14
}
fn default_test_trials() -> usize {
    10_000
}
fn default_l() -> usize {
    8
}
fn default_angle_mode() -> AngleMode {
    AngleMode::random()
}
fn default_payload_symbols() -> usize {
    2
}
fn default_ridge_rel() -> f64 {
    1e-8
}
fn default_decay() -> f64 {
    3.0
}
fn default_evm_trials() -> usize {
    128
}
fn default_l_grid() -> Vec<usize> {
    vec![8, 10, 12]
}
fn default_eta_grid() -> Vec<f64> {
    vec![0.05, 0.2, 0.35]
}

/// Validated experiment description.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    pub label_scheme: LabelScheme,
    pub estimator: EstimatorKind,
    pub snr_grid_db: Vec<f64>,
    pub nt: usize,
    pub n_test_trials: usize,
    pub l_train: usize,
    pub l_test: usize,
    pub eta_train: Option<f64>,
    pub eta_test: Option<f64>,
    pub target_evm: Option<f64>,
    pub nu_mode: AngleMode,
    pub phi_mode: AngleMode,
    pub theta_max: usize,
    pub payload_symbols: usize,
    pub n_hidden: usize,
    pub n_hidden_raw: usize,
    pub ridge_rel: f64,
    pub decay_db_per_tap: f64,
    pub evm_trials: usize,
    pub l_train_grid: Vec<usize>,
    pub l_test_grid: Vec<usize>,
    pub eta_train_grid: Vec<f64>,
    pub eta_test_grid: Vec<f64>,
    pub params: SystemParams,
    pub saleh: SalehParams,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, Error> {
        let raw: RawConfig = toml::from_str(text)
            .map_err(|e| Error::Config(format!("config parse failure: {e}")))?;
        Self::from_raw(raw)
    }

    pub fn from_path<P: AsRef<Path>>(path: P) -> Result<Self, Error> {
        let text = std::fs::read_to_string(&path)?;
        Self::from_toml_str(&text)
    }

    fn from_raw(raw: RawConfig) -> Result<Self, Error> {
        let params = match raw.params.nd {
            Some(nd) => SystemParams::with_window(raw.params.n, raw.params.ng, nd, raw.params.sigma_d2)?,
            None => SystemParams::new(raw.params.n, raw.params.ng, raw.params.sigma_d2)?,
        };
        let saleh = SalehParams {
            alpha_a: raw.saleh.alpha_a,
            beta_a: raw.saleh.beta_a,
            alpha_phi: raw.saleh.alpha_phi,
            beta_phi: raw.saleh.beta_phi,
        };
        saleh.validate()?;

        let cfg = Self {
            master_seed: raw.master_seed,
            label_scheme: raw.label_scheme.parse()?,
            estimator: raw.estimator.parse()?,
            snr_grid_db: raw.snr_grid_db,
            nt: raw.nt,
            n_test_trials: raw.n_test_trials,
            l_train: raw.l_train,
            l_test: raw.l_test,
            eta_train: raw.eta_train,
            eta_test: raw.eta_test,
            target_evm: raw.target_evm,
            nu_mode: raw.nu_mode,
            phi_mode: raw.phi_mode,
            theta_max: raw.theta_max.unwrap_or(params.n + params.ng),
            payload_symbols: raw.payload_symbols,
            n_hidden: raw.n_hidden.unwrap_or(8 * (params.n + params.ng)),
            n_hidden_raw: raw.n_hidden_raw.unwrap_or(16 * (params.n + params.ng)),
            ridge_rel: raw.ridge_rel,
            decay_db_per_tap: raw.decay_db_per_tap,
            evm_trials: raw.evm_trials,
            l_train_grid: raw.l_train_grid,
            l_test_grid: raw.l_test_grid,
            eta_train_grid: raw.eta_train_grid,
            eta_test_grid: raw.eta_test_grid,
            params,
            saleh,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), Error> {
        let p = &self.params;
        let fail = |msg: String| Err(Error::Config(msg));

        if self.snr_grid_db.is_empty() {
            return fail("snr_grid_db must not be empty".into());
        }
        if self.nt == 0 || self.n_test_trials == 0 {
            return fail("nt and n_test_trials must be at least 1".into());
        }
        for (name, l) in [("l_train", self.l_train), ("l_test", self.l_test)] {
            if l == 0 || l >= p.ng {
                return fail(format!("{name} = {l} must satisfy 1 <= l < ng ({})", p.ng));
            }
        }
        for (name, grid) in [("l_train_grid", &self.l_train_grid), ("l_test_grid", &self.l_test_grid)] {
            if grid.is_empty() {
                return fail(format!("{name} must not be empty"));
            }
            if let Some(&bad) = grid.iter().find(|&&l| l == 0 || l >= p.ng) {
                return fail(format!("{name} entry {bad} must satisfy 1 <= l < ng ({})", p.ng));
            }
        }
        for (name, grid) in [("eta_train_grid", &self.eta_train_grid), ("eta_test_grid", &self.eta_test_grid)] {
            if grid.is_empty() {
                return fail(format!("{name} must not be empty"));
            }
            if let Some(&bad) = grid.iter().find(|&&e| !(e > 0.0 && e.is_finite())) {
                return fail(format!("{name} entry {bad} must be positive and finite"));
            }
        }
        for (name, eta) in [("eta_train", self.eta_train), ("eta_test", self.eta_test)] {
            if let Some(e) = eta {
                if !(e > 0.0 && e.is_finite()) {
                    return fail(format!("{name} = {e} must be positive and finite"));
                }
            }
        }
        if self.eta_train.is_none() && self.target_evm.is_none() {
            return fail("either eta_train or target_evm must be given".into());
        }
        if let Some(evm) = self.target_evm {
            if !(evm > 0.0 && evm < 100.0) {
                return fail(format!("target_evm = {evm} must lie in (0, 100)"));
            }
        }
        if self.theta_max > p.max_legal_theta() {
            return fail(format!(
                "theta_max = {} exceeds the largest offset with an in-window target region ({})",
                self.theta_max,
                p.max_legal_theta()
            ));
        }
        if self.payload_symbols == 0 {
            return fail("payload_symbols must be at least 1".into());
        }
        let frame_len = (1 + self.payload_symbols) * p.symbol_len();
        if frame_len < p.stream_len() {
            return fail(format!(
                "frame of {frame_len} samples does not cover the {}-sample correlation support; \
                 increase payload_symbols",
                p.stream_len()
            ));
        }
        if self.n_hidden == 0 || self.n_hidden_raw == 0 {
            return fail("hidden widths must be positive".into());
        }
        if self.ridge_rel < 0.0 {
            return fail(format!("ridge_rel = {} must be non-negative", self.ridge_rel));
        }
        if self.evm_trials == 0 {
            return fail("evm_trials must be at least 1".into());
        }
        Ok(())
    }

    /// Test-side back-off, falling back to the training value.
    pub fn eta_test_or_train(&self) -> Option<f64> {
        self.eta_test.or(self.eta_train)
    }
}
