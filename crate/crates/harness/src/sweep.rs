//! Scenario drivers: the five-curve baseline comparison and the channel-
//! memory / back-off generalization grids, with one CSV per curve and a
//! companion plot script.

use std::collections::BTreeMap;
use std::path::Path;

use elmsync_core::elm::{ElmModel, Solver, TrainingSet};
use elmsync_core::labels::LabelScheme;
use elmsync_core::rng::derive_seed;
use elmsync_core::saleh::calibrate_backoff;
use elmsync_core::Error;

use crate::config::ExperimentConfig;
use crate::curve::{evaluate_error_counts, write_curve_csv, CurveMeta, ErrorProbabilityCurve};
use crate::dataset::{synthesize_dataset, targets_for};
use crate::estimators::Estimator;
use crate::trial::{seed_domain, TrialContext};

/// Which experiment family to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// Baseline comparison: correlation, raw-signal network, and the three
    /// label designs at one channel/back-off operating point.
    Fig2,
    /// Generalization across training/testing channel memory.
    GenL,
    /// Generalization across training/testing back-off.
    GenEta,
}

impl Scenario {
    pub fn id(&self) -> &'static str {
        match self {
            Scenario::Fig2 => "fig2",
            Scenario::GenL => "genL",
            Scenario::GenEta => "genEta",
        }
    }

    /// Seed tag separating evaluation streams between scenario families.
    fn tag(&self) -> u64 {
        match self {
            Scenario::Fig2 => 0x46,
            Scenario::GenL => 0x4c,
            Scenario::GenEta => 0x45,
        }
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "fig2" => Ok(Scenario::Fig2),
            "genL" => Ok(Scenario::GenL),
            "genEta" => Ok(Scenario::GenEta),
            other => Err(Error::Config(format!(
                "unknown scenario '{other}' (expected fig2, genL, or genEta)"
            ))),
        }
    }
}

/// Resolves the training back-off: explicit value, or calibrated from the
/// target EVM.
pub fn resolve_eta_train(cfg: &ExperimentConfig) -> Result<f64, Error> {
    if let Some(eta) = cfg.eta_train {
        return Ok(eta);
    }
    let target = cfg.target_evm.expect("validated: eta_train or target_evm present");
    calibrate_backoff(
        target,
        &cfg.saleh,
        &cfg.params,
        derive_seed(cfg.master_seed, &[seed_domain::CALIBRATION]),
        cfg.evm_trials,
    )
}

/// Trains one metric-input model for a label scheme.
pub fn train_metric_model(
    cfg: &ExperimentConfig,
    ctx: &TrialContext,
    scheme: LabelScheme,
    model_tag: u64,
) -> Result<ElmModel, Error> {
    let data = synthesize_dataset(ctx, &cfg.snr_grid_db, cfg.nt, cfg.master_seed, false)?;
    let targets = targets_for(&data.thetas, scheme, &ctx.params, ctx.l)?;
    let set = TrainingSet::new(data.metric_inputs, targets)?;
    train_on(cfg, ctx, scheme, model_tag, cfg.params.nd, &set)
}

fn train_on(
    cfg: &ExperimentConfig,
    ctx: &TrialContext,
    scheme: LabelScheme,
    model_tag: u64,
    input_dim: usize,
    set: &TrainingSet,
) -> Result<ElmModel, Error> {
    let n_hidden = if input_dim == cfg.params.nd { cfg.n_hidden } else { cfg.n_hidden_raw };
    let init_seed = derive_seed(
        cfg.master_seed,
        &[seed_domain::MODEL_INIT, model_tag, scheme as u64, ctx.l as u64, ctx.eta.to_bits()],
    );
    let model = ElmModel::init(n_hidden, input_dim, cfg.params.nd, init_seed)?;
    model.train(set, &Solver::NormalEquations { ridge_rel: cfg.ridge_rel })
}

/// Models for the baseline comparison: one per label scheme plus the
/// raw-window network, all trained on the same synthesized trials.
pub struct Fig2Models {
    pub eta_train: f64,
    pub by_scheme: BTreeMap<&'static str, ElmModel>,
    pub raw: ElmModel,
}

pub fn train_fig2_models(cfg: &ExperimentConfig) -> Result<Fig2Models, Error> {
    let eta_train = resolve_eta_train(cfg)?;
    let ctx = TrialContext::train_side(cfg, eta_train);
    let data = synthesize_dataset(&ctx, &cfg.snr_grid_db, cfg.nt, cfg.master_seed, true)?;

    let mut by_scheme = BTreeMap::new();
    for scheme in LabelScheme::ALL {
        let targets = targets_for(&data.thetas, scheme, &ctx.params, ctx.l)?;
        let set = TrainingSet::new(data.metric_inputs.clone(), targets)?;
        by_scheme.insert(scheme.id(), train_on(cfg, &ctx, scheme, 0, cfg.params.nd, &set)?);
    }

    let raw_inputs = data.raw_inputs.expect("requested raw features");
    let raw_targets = targets_for(&data.thetas, cfg.label_scheme, &ctx.params, ctx.l)?;
    let raw_set = TrainingSet::new(raw_inputs, raw_targets)?;
    let raw = train_on(cfg, &ctx, cfg.label_scheme, 1, 2 * cfg.params.nd, &raw_set)?;

    Ok(Fig2Models { eta_train, by_scheme, raw })
}

#[allow(clippy::too_many_arguments)]
fn meta(
    cfg: &ExperimentConfig,
    scenario: Scenario,
    estimator: &str,
    label_scheme: &str,
    l_train: usize,
    l_test: usize,
    eta_train: f64,
    eta_test: f64,
) -> CurveMeta {
    CurveMeta {
        scenario: scenario.id().into(),
        estimator: estimator.into(),
        label_scheme: label_scheme.into(),
        l_train,
        l_test,
        eta_train,
        eta_test,
        master_seed: cfg.master_seed,
    }
}

/// Runs the five-curve baseline comparison and returns the curves in
/// legend order: sc_corr, ts_learn, then the three label schemes.
pub fn run_fig2(cfg: &ExperimentConfig) -> Result<Vec<ErrorProbabilityCurve>, Error> {
    let models = train_fig2_models(cfg)?;
    let eta_test = cfg.eta_test.unwrap_or(models.eta_train);
    let ctx = TrialContext::test_side(cfg, eta_test);

    let mut estimators = vec![Estimator::ScCorr, Estimator::RawElm(&models.raw)];
    let mut names: Vec<(&str, &str)> =
        vec![("sc_corr", "none"), ("ts_learn", cfg.label_scheme.id())];
    for scheme in LabelScheme::ALL {
        estimators.push(Estimator::MetricElm(&models.by_scheme[scheme.id()]));
        names.push(("elm", scheme.id()));
    }

    let points = evaluate_error_counts(
        &ctx,
        &estimators,
        &cfg.snr_grid_db,
        cfg.n_test_trials,
        cfg.master_seed,
        Scenario::Fig2.tag(),
    )?;

    Ok(points
        .into_iter()
        .zip(names)
        .map(|(pts, (est, scheme))| ErrorProbabilityCurve {
            meta: meta(cfg, Scenario::Fig2, est, scheme, cfg.l_train, cfg.l_test, models.eta_train, eta_test),
            points: pts,
        })
        .collect())
}

/// Proposed label schemes compared in the generalization studies.
const PROPOSED: [LabelScheme; 2] = [LabelScheme::Midpoint, LabelScheme::IsiFree];

/// Channel-memory generalization: models trained at each `l_train` of the
/// grid are evaluated against every `l_test`, alongside the correlation
/// baseline.
pub fn run_gen_l(cfg: &ExperimentConfig) -> Result<Vec<ErrorProbabilityCurve>, Error> {
    let eta_train = resolve_eta_train(cfg)?;
    let eta_test = cfg.eta_test.unwrap_or(eta_train);

    let mut models: Vec<(usize, LabelScheme, ElmModel)> = Vec::new();
    for &l_train in &cfg.l_train_grid {
        let ctx = TrialContext::train_side(cfg, eta_train).with_l(l_train);
        let data = synthesize_dataset(&ctx, &cfg.snr_grid_db, cfg.nt, cfg.master_seed, false)?;
        for scheme in PROPOSED {
            let targets = targets_for(&data.thetas, scheme, &ctx.params, ctx.l)?;
            let set = TrainingSet::new(data.metric_inputs.clone(), targets)?;
            models.push((l_train, scheme, train_on(cfg, &ctx, scheme, 2, cfg.params.nd, &set)?));
        }
    }

    let mut curves = Vec::new();
    for &l_test in &cfg.l_test_grid {
        let ctx = TrialContext::test_side(cfg, eta_test).with_l(l_test);
        let mut estimators = vec![Estimator::ScCorr];
        for (_, _, model) in &models {
            estimators.push(Estimator::MetricElm(model));
        }
        let points = evaluate_error_counts(
            &ctx,
            &estimators,
            &cfg.snr_grid_db,
            cfg.n_test_trials,
            cfg.master_seed,
            Scenario::GenL.tag(),
        )?;
        let mut it = points.into_iter();
        curves.push(ErrorProbabilityCurve {
            meta: meta(cfg, Scenario::GenL, "sc_corr", "none", 0, l_test, eta_train, eta_test),
            points: it.next().unwrap(),
        });
        for ((l_train, scheme, _), pts) in models.iter().zip(it) {
            curves.push(ErrorProbabilityCurve {
                meta: meta(cfg, Scenario::GenL, "elm", scheme.id(), *l_train, l_test, eta_train, eta_test),
                points: pts,
            });
        }
    }
    Ok(curves)
}

/// Back-off generalization: models trained at each `eta_train` of the grid
/// are evaluated against every `eta_test`.
pub fn run_gen_eta(cfg: &ExperimentConfig) -> Result<Vec<ErrorProbabilityCurve>, Error> {
    let mut models: Vec<(f64, LabelScheme, ElmModel)> = Vec::new();
    for &eta_train in &cfg.eta_train_grid {
        let ctx = TrialContext::train_side(cfg, eta_train);
        let data = synthesize_dataset(&ctx, &cfg.snr_grid_db, cfg.nt, cfg.master_seed, false)?;
        for scheme in PROPOSED {
            let targets = targets_for(&data.thetas, scheme, &ctx.params, ctx.l)?;
            let set = TrainingSet::new(data.metric_inputs.clone(), targets)?;
            models.push((eta_train, scheme, train_on(cfg, &ctx, scheme, 3, cfg.params.nd, &set)?));
        }
    }

    let mut curves = Vec::new();
    for &eta_test in &cfg.eta_test_grid {
        let ctx = TrialContext::test_side(cfg, eta_test);
        let mut estimators = vec![Estimator::ScCorr];
        for (_, _, model) in &models {
            estimators.push(Estimator::MetricElm(model));
        }
        let points = evaluate_error_counts(
            &ctx,
            &estimators,
            &cfg.snr_grid_db,
            cfg.n_test_trials,
            cfg.master_seed,
            Scenario::GenEta.tag(),
        )?;
        let mut it = points.into_iter();
        curves.push(ErrorProbabilityCurve {
            meta: meta(cfg, Scenario::GenEta, "sc_corr", "none", cfg.l_train, cfg.l_test, 0.0, eta_test),
            points: it.next().unwrap(),
        });
        for ((eta_train, scheme, _), pts) in models.iter().zip(it) {
            curves.push(ErrorProbabilityCurve {
                meta: meta(cfg, Scenario::GenEta, "elm", scheme.id(), cfg.l_train, cfg.l_test, *eta_train, eta_test),
                points: pts,
            });
        }
    }
    Ok(curves)
}

fn format_eta(eta: f64) -> String {
    format!("{eta}").replace('.', "p")
}

/// File stem identifying one curve within its scenario.
pub fn curve_stem(c: &ErrorProbabilityCurve) -> String {
    let m = &c.meta;
    match (m.scenario.as_str(), m.estimator.as_str()) {
        ("fig2", "elm") => format!("fig2__elm_{}", m.label_scheme),
        ("fig2", other) => format!("fig2__{other}"),
        ("genL", "sc_corr") => format!("genL__sc_corr__Lte{}", m.l_test),
        ("genL", _) => format!("genL__elm_{}__Ltr{}_Lte{}", m.label_scheme, m.l_train, m.l_test),
        ("genEta", "sc_corr") => format!("genEta__sc_corr__ete{}", format_eta(m.eta_test)),
        ("genEta", _) => format!(
            "genEta__elm_{}__etr{}_ete{}",
            m.label_scheme,
            format_eta(m.eta_train),
            format_eta(m.eta_test)
        ),
        _ => format!("{}__{}", m.scenario, m.estimator),
    }
}

/// Executes one scenario and writes one CSV per curve plus `plot.py` into
/// `outdir`. Returns the curves for inspection.
pub fn run_experiment_suite<P: AsRef<Path>>(
    cfg: &ExperimentConfig,
    scenario: Scenario,
    outdir: P,
) -> Result<Vec<ErrorProbabilityCurve>, Error> {
    let outdir = outdir.as_ref();
    std::fs::create_dir_all(outdir)?;
    let curves = match scenario {
        Scenario::Fig2 => run_fig2(cfg)?,
        Scenario::GenL => run_gen_l(cfg)?,
        Scenario::GenEta => run_gen_eta(cfg)?,
    };
    for curve in &curves {
        write_curve_csv(outdir.join(format!("{}.csv", curve_stem(curve))), curve)?;
    }
    std::fs::write(outdir.join("plot.py"), PLOT_SCRIPT)?;
    Ok(curves)
}

/// Companion plot script: semilog-y error probability vs SNR, one panel
/// per scenario found in the directory.
const PLOT_SCRIPT: &str = r#"#!/usr/bin/env python3
"""Plot error-probability curves from the CSV files in this directory.

Usage: python3 plot.py [outdir]
"""
import csv
import glob
import os
import sys
from collections import defaultdict

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = sys.argv[1] if len(sys.argv) > 1 else os.path.dirname(os.path.abspath(__file__))

panels = defaultdict(lambda: defaultdict(list))
for path in sorted(glob.glob(os.path.join(here, "*.csv"))):
    with open(path) as fh:
        for row in csv.DictReader(fh):
            key = (row["estimator"], row["label_scheme"], row["L_train"], row["L_test"],
                   row["eta_train"], row["eta_test"])
            panels[row["scenario"]][key].append(
                (float(row["snr_db"]), float(row["p_error"]),
                 float(row["ci_low"]), float(row["ci_high"])))

def legend_name(key, scenario):
    est, scheme, ltr, lte, etr, ete = key
    base = {
        ("sc_corr", "none"): "correlation baseline",
        ("ts_learn", scheme): "raw-signal network",
    }.get((est, scheme), {
        "onehot_end": "one-hot (boundary)",
        "midpoint": "midpoint",
        "isi_free": "ISI-free region",
    }.get(scheme, scheme))
    if scenario == "genL" and est != "sc_corr":
        base += f" (train L={ltr}, test L={lte})"
    elif scenario == "genL":
        base += f" (test L={lte})"
    elif scenario == "genEta" and est != "sc_corr":
        base += f" (train eta={etr}, test eta={ete})"
    elif scenario == "genEta":
        base += f" (test eta={ete})"
    return base

for scenario, curves in panels.items():
    fig, ax = plt.subplots(figsize=(7.5, 5.5))
    for key, pts in sorted(curves.items()):
        pts.sort()
        snr = [p[0] for p in pts]
        pe = [max(p[1], 1e-6) for p in pts]
        lo = [max(p[1] - p[2], 0.0) for p in pts]
        hi = [max(p[3] - p[1], 0.0) for p in pts]
        ax.errorbar(snr, pe, yerr=[lo, hi], marker="o", capsize=2,
                    label=legend_name(key, scenario))
    ax.set_yscale("log")
    ax.set_xlabel("SNR (dB)")
    ax.set_ylabel("timing error probability")
    ax.set_title(scenario)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=7)
    out = os.path.join(here, f"{scenario}.png")
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    print(f"wrote {out}")
"#;
