//! Command-line front end: calibrate, train, eval, sweep, selftest.

use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use elmsync_core::elm::{Solver, TrainingSet};
use elmsync_core::model_io::{load_model, save_model};
use elmsync_core::rng::derive_seed;
use elmsync_core::saleh::calibrate_backoff;

use elmsync_harness::config::{EstimatorKind, ExperimentConfig};
use elmsync_harness::curve::{evaluate_error_counts, write_curve_csv, CurveMeta, ErrorProbabilityCurve};
use elmsync_harness::dataset::{synthesize_dataset, targets_for};
use elmsync_harness::estimators::Estimator;
use elmsync_harness::selftest::run_selftest;
use elmsync_harness::sweep::{resolve_eta_train, run_experiment_suite, Scenario};
use elmsync_harness::trial::{seed_domain, TrialContext};

#[derive(Parser)]
#[command(
    name = "elmsync",
    about = "OFDM timing synchronization under PA distortion: correlation baseline vs closed-form network refinement"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Find the back-off that realizes a target EVM.
    Calibrate {
        #[arg(long)]
        config: PathBuf,
        /// Target EVM in percent; overrides the config's value.
        #[arg(long)]
        target_evm: Option<f64>,
    },
    /// Train one model per the config's estimator and label scheme.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Output model file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate one estimator over the SNR grid and write a CSV curve.
    Eval {
        #[arg(long)]
        config: PathBuf,
        /// Trained model file (required for elm / ts_learn).
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a full scenario and write one CSV per curve plus plot.py.
    Sweep {
        /// fig2, genL, or genEta.
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        outdir: PathBuf,
    },
    /// Run the property-check battery.
    Selftest,
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Calibrate { config, target_evm } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            let target = target_evm
                .or(cfg.target_evm)
                .context("no target EVM given (flag --target-evm or config key target_evm)")?;
            let eta = calibrate_backoff(
                target,
                &cfg.saleh,
                &cfg.params,
                derive_seed(cfg.master_seed, &[seed_domain::CALIBRATION]),
                cfg.evm_trials,
            )?;
            println!("eta = {eta}");
            println!("target_evm = {target}");
        }
        Command::Train { config, out } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            let eta_train = resolve_eta_train(&cfg)?;
            let ctx = TrialContext::train_side(&cfg, eta_train);
            let with_raw = cfg.estimator == EstimatorKind::TsLearn;
            let data =
                synthesize_dataset(&ctx, &cfg.snr_grid_db, cfg.nt, cfg.master_seed, with_raw)?;
            let targets = targets_for(&data.thetas, cfg.label_scheme, &cfg.params, cfg.l_train)?;
            let (inputs, n_hidden, input_dim) = match cfg.estimator {
                EstimatorKind::Elm => (data.metric_inputs, cfg.n_hidden, cfg.params.nd),
                EstimatorKind::TsLearn => (
                    data.raw_inputs.expect("raw features requested"),
                    cfg.n_hidden_raw,
                    2 * cfg.params.nd,
                ),
                EstimatorKind::ScCorr => bail!("sc_corr has no trainable parameters"),
            };
            let set = TrainingSet::new(inputs, targets)?;
            let init_seed = derive_seed(
                cfg.master_seed,
                &[
                    seed_domain::MODEL_INIT,
                    0,
                    cfg.label_scheme as u64,
                    cfg.l_train as u64,
                    eta_train.to_bits(),
                ],
            );
            let model =
                elmsync_core::elm::ElmModel::init(n_hidden, input_dim, cfg.params.nd, init_seed)?;
            let trained = model.train(&set, &Solver::NormalEquations { ridge_rel: cfg.ridge_rel })?;
            save_model(&trained, &out)?;
            println!(
                "trained {} ({} hidden, {} samples, eta_train {eta_train}) -> {}",
                cfg.estimator.id(),
                n_hidden,
                cfg.nt,
                out.display()
            );
        }
        Command::Eval { config, model, out } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            let eta_train = resolve_eta_train(&cfg)?;
            let eta_test = cfg.eta_test_or_train().unwrap_or(eta_train);
            let ctx = TrialContext::test_side(&cfg, eta_test);

            let loaded = match cfg.estimator {
                EstimatorKind::ScCorr => None,
                _ => {
                    let path = model.context("elm / ts_learn evaluation needs --model")?;
                    Some(load_model(&path)?)
                }
            };
            let estimator = match (cfg.estimator, &loaded) {
                (EstimatorKind::ScCorr, _) => Estimator::ScCorr,
                (EstimatorKind::Elm, Some(m)) => {
                    if m.input_dim() != cfg.params.nd {
                        bail!(
                            "model input dim {} does not match the {}-sample window",
                            m.input_dim(),
                            cfg.params.nd
                        );
                    }
                    Estimator::MetricElm(m)
                }
                (EstimatorKind::TsLearn, Some(m)) => {
                    if m.input_dim() != 2 * cfg.params.nd {
                        bail!(
                            "model input dim {} does not match the {}-value raw feature",
                            m.input_dim(),
                            2 * cfg.params.nd
                        );
                    }
                    Estimator::RawElm(m)
                }
                _ => unreachable!(),
            };

            let points = evaluate_error_counts(
                &ctx,
                &[estimator],
                &cfg.snr_grid_db,
                cfg.n_test_trials,
                cfg.master_seed,
                0,
            )?;
            let curve = ErrorProbabilityCurve {
                meta: CurveMeta {
                    scenario: "eval".into(),
                    estimator: cfg.estimator.id().into(),
                    label_scheme: match cfg.estimator {
                        EstimatorKind::ScCorr => "none".into(),
                        _ => cfg.label_scheme.id().into(),
                    },
                    l_train: cfg.l_train,
                    l_test: cfg.l_test,
                    eta_train,
                    eta_test,
                    master_seed: cfg.master_seed,
                },
                points: points.into_iter().next().unwrap(),
            };
            write_curve_csv(&out, &curve)?;
            for p in &curve.points {
                println!(
                    "snr {:>5.1} dB: p_error {:.5} [{:.5}, {:.5}] ({} / {})",
                    p.snr_db, p.p_error, p.ci_low, p.ci_high, p.n_errors, p.n_trials
                );
            }
            println!("wrote {}", out.display());
        }
        Command::Sweep { scenario, config, outdir } => {
            let scenario: Scenario = scenario.parse()?;
            let cfg = ExperimentConfig::from_path(&config)?;
            let started = std::time::Instant::now();
            let curves = run_experiment_suite(&cfg, scenario, &outdir)?;
            println!(
                "{}: wrote {} curves to {} in {:.1?}",
                scenario.id(),
                curves.len(),
                outdir.display(),
                started.elapsed()
            );
        }
        Command::Selftest => {
            let failures = run_selftest();
            if failures > 0 {
                std::process::exit(1);
            }
        }
    }
    Ok(())
}
