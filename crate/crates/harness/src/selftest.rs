//! Property battery behind the `selftest` subcommand: one line per check,
//! fast enough to run before any long sweep.

use nalgebra::DMatrix;
use rand::Rng;
use num_complex::Complex64;

use elmsync_core::channel::{apply_channel_windowed, ChannelRealization, ImpairmentConfig};
use elmsync_core::elm::{pinv, train_output_weights, Solver};
use elmsync_core::frame::{build_frame, build_schmidl_preamble, ofdm_demodulate, ofdm_modulate};
use elmsync_core::labels::{isi_free_region, label_isi_free, label_midpoint, label_onehot_end};
use elmsync_core::metric::{argmax, normalize_metric, timing_metric};
use elmsync_core::rng::stream_rng;
use elmsync_core::saleh::{calibrate_backoff, compute_evm, measure_evm, saleh_distort, SalehParams};
use elmsync_core::SystemParams;

use crate::config::ExperimentConfig;
use crate::curve::evaluate_error_counts;
use crate::estimators::Estimator;
use crate::trial::TrialContext;

struct Check {
    name: &'static str,
    run: fn() -> Result<(), String>,
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn check_parseval_and_round_trip() -> Result<(), String> {
    let mut rng = stream_rng(1, &[100]);
    let d = elmsync_core::frame::modulate_subcarriers(&mut rng, 64, 1.0, elmsync_core::frame::Modulation::Qpsk);
    let s = ofdm_modulate(&d);
    let lhs: f64 = s.iter().map(|v| v.norm_sqr()).sum();
    let rhs = 64.0 * d.iter().map(|v| v.norm_sqr()).sum::<f64>();
    ensure((lhs - rhs).abs() <= 1e-9 * rhs, format!("Parseval: {lhs} vs {rhs}"))?;
    let back = ofdm_demodulate(&s);
    let err: f64 = d.iter().zip(&back).map(|(a, b)| (a - b).norm()).sum();
    ensure(err < 1e-9 * 64.0, format!("round trip error {err}"))
}

fn check_preamble_half_symmetry() -> Result<(), String> {
    let params = SystemParams::default();
    let pre = build_schmidl_preamble(&mut stream_rng(2, &[101]), &params).map_err(|e| e.to_string())?;
    let body = &pre[params.ng..];
    let worst = (0..params.n / 2)
        .map(|m| (body[m] - body[m + params.n / 2]).norm())
        .fold(0.0_f64, f64::max);
    ensure(worst <= 1e-12, format!("half mismatch {worst}"))
}

fn check_saleh_spot_and_covariance() -> Result<(), String> {
    let p = SalehParams::default();
    let out = saleh_distort(&[Complex64::new(1.0, 0.0)], &p, 1.0)[0];
    ensure((out.norm() - 1.96 / 1.99).abs() < 1e-12, "AM/AM spot value")?;
    ensure((out.arg() - 2.53 / 3.82).abs() < 1e-12, "AM/PM spot value")?;
    let s = Complex64::new(0.8, -0.5);
    let rot = Complex64::cis(1.1);
    let a = saleh_distort(&[s * rot], &p, 0.7)[0];
    let b = saleh_distort(&[s], &p, 0.7)[0] * rot;
    ensure((a - b).norm() <= 1e-12, "phase covariance")?;
    let peak = p.peak_output();
    let worst = (0..100)
        .map(|i| saleh_distort(&[Complex64::new(i as f64 * 0.2, 0.0)], &p, 1.0)[0].norm())
        .fold(0.0_f64, f64::max);
    ensure(worst <= peak + 1e-12, "amplitude bound")
}

fn check_evm_identities() -> Result<(), String> {
    let r = vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 2.0)];
    ensure(compute_evm(&r, &r).unwrap().abs() < 1e-12, "EVM(x, x) = 0")?;
    let zeros = vec![Complex64::default(); 2];
    ensure((compute_evm(&zeros, &r).unwrap() - 100.0).abs() < 1e-12, "EVM(0, x) = 100")?;
    let d: Vec<_> = r.iter().map(|v| v * 1.1).collect();
    ensure((compute_evm(&d, &r).unwrap() - 10.0).abs() < 1e-9, "EVM(1.1 x, x) = 10")
}

fn check_calibration_closed_loop() -> Result<(), String> {
    let params = SystemParams::default();
    let saleh = SalehParams::default();
    let eta = calibrate_backoff(40.0, &saleh, &params, 5, 48).map_err(|e| e.to_string())?;
    let measured = measure_evm(&mut stream_rng(6, &[102]), &saleh, &params, eta, 48)
        .map_err(|e| e.to_string())?;
    ensure((measured - 40.0).abs() < 1.0, format!("re-measured EVM {measured}% at eta {eta}"))
}

fn check_metric_invariances_and_plateau() -> Result<(), String> {
    let params = SystemParams::default();
    let mut rng = stream_rng(7, &[103]);
    let frame = build_frame(&mut rng, &params, 2).map_err(|e| e.to_string())?;
    let ch = ChannelRealization { taps: vec![Complex64::new(1.0, 0.0)] };
    let theta = 23;
    let cfg = ImpairmentConfig { theta, ..ImpairmentConfig::clean() };
    let r = apply_channel_windowed(&frame, &ch, &cfg, &params, &mut rng, params.stream_len())
        .map_err(|e| e.to_string())?;
    let m = timing_metric(&r, &params);
    for d in theta..=theta + params.ng {
        ensure(m.values[d] >= 0.99, format!("plateau M({d}) = {}", m.values[d]))?;
    }
    let rot = Complex64::cis(0.9) * 3.0;
    let r2: Vec<Complex64> = r.iter().map(|v| v * rot).collect();
    let m2 = timing_metric(&r2, &params);
    for (a, b) in m.values.iter().zip(&m2.values) {
        ensure((a - b).abs() <= 1e-9 * a.abs().max(1e-12), "scale/phase invariance")?;
    }
    let g = normalize_metric(&m);
    let norm: f64 = g.values.iter().map(|v| v * v).sum::<f64>().sqrt();
    ensure((norm - 1.0).abs() < 1e-9, format!("unit norm {norm}"))
}

fn check_pseudoinverse_and_oracle() -> Result<(), String> {
    let mut rng = stream_rng(8, &[104]);
    let h = DMatrix::from_fn(3, 5, |_, _| rng.random_range(-1.0..=1.0_f64));
    let p = pinv(&h);
    ensure((&h * &p * &h - &h).norm() < 1e-8, "H H+ H = H")?;
    ensure((&p * &h * &p - &p).norm() < 1e-8, "H+ H H+ = H+")?;
    let t = DMatrix::from_fn(2, 5, |_, _| rng.random_range(-1.0..=1.0_f64));
    let u = train_output_weights(&h, &t, &Solver::NormalEquations { ridge_rel: 0.0 })
        .map_err(|e| e.to_string())?;
    let oracle = &t
        * h.transpose()
        * (&h * h.transpose()).try_inverse().ok_or("Gram matrix not invertible")?;
    ensure((&u - &oracle).norm() < 1e-8, "normal-equations oracle agreement")
}

fn check_label_geometry() -> Result<(), String> {
    let params = SystemParams::default();
    for l in 1..=params.ng {
        for theta in [0, 40, params.max_legal_theta()] {
            let one = label_onehot_end(theta, &params, l).map_err(|e| e.to_string())?;
            let mid = label_midpoint(theta, &params, l).map_err(|e| e.to_string())?;
            let isi = label_isi_free(theta, &params, l).map_err(|e| e.to_string())?;
            ensure(one.support() == vec![theta + params.ng + 1], "one-hot position")?;
            ensure(isi.support().len() == params.ng - l + 2, "region support size")?;
            let m = mid.support()[0];
            ensure(isi_free_region(theta, params.ng, l).contains(&m), "midpoint containment")?;
        }
    }
    Ok(())
}

fn check_error_region_boundaries() -> Result<(), String> {
    use crate::trial::is_timing_error;
    let (ng, l, theta) = (16, 8, 30);
    ensure(!is_timing_error(theta, theta + l, ng, l), "lower bound inclusive")?;
    ensure(is_timing_error(theta, theta + l - 1, ng, l), "below lower bound")?;
    ensure(!is_timing_error(theta, theta + ng + 1, ng, l), "upper bound inclusive")?;
    ensure(is_timing_error(theta, theta + ng + 2, ng, l), "above upper bound")
}

fn check_worker_count_invariance() -> Result<(), String> {
    let cfg = ExperimentConfig::from_toml_str("master_seed = 13\neta_train = 0.15\n")
        .map_err(|e| e.to_string())?;
    let ctx = TrialContext::test_side(&cfg, 0.15);
    let in_pool = |threads: usize, f: &(dyn Fn() -> Result<Vec<Vec<crate::curve::CurvePoint>>, String> + Sync)| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| e.to_string())?;
        pool.install(f)
    };
    let eval = || {
        evaluate_error_counts(&ctx, &[Estimator::ScCorr], &[8.0, 16.0], 400, 13, 99)
            .map_err(|e| e.to_string())
    };
    let a = in_pool(1, &eval)?;
    let b = in_pool(4, &eval)?;
    for (x, y) in a[0].iter().zip(&b[0]) {
        ensure(
            x.n_errors == y.n_errors && x.p_error == y.p_error,
            format!("worker-count mismatch: {} vs {}", x.n_errors, y.n_errors),
        )?;
    }

    // Training must also be bit-reproducible: the accumulation uses a
    // fixed chunk partition, not one derived from the worker count.
    let train = |threads: usize| -> Result<elmsync_core::elm::ElmModel, String> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| e.to_string())?;
        pool.install(|| {
            let tctx = TrialContext::train_side(&cfg, 0.15);
            let set = crate::dataset::generate_training_set(
                &tctx,
                &[0.0, 10.0, 20.0],
                600,
                13,
                elmsync_core::labels::LabelScheme::IsiFree,
            )
            .map_err(|e| e.to_string())?;
            let model = elmsync_core::elm::ElmModel::init(48, 160, 160, 7)
                .map_err(|e| e.to_string())?;
            model
                .train(&set, &elmsync_core::elm::Solver::default())
                .map_err(|e| e.to_string())
        })
    };
    let m1 = train(1)?;
    let m4 = train(4)?;
    ensure(m1 == m4, "trained weights differ across worker counts")
}

fn check_sc_corr_lands_on_plateau() -> Result<(), String> {
    let params = SystemParams::default();
    let mut rng = stream_rng(14, &[105]);
    let frame = build_frame(&mut rng, &params, 2).map_err(|e| e.to_string())?;
    let ch = ChannelRealization { taps: vec![Complex64::new(1.0, 0.0)] };
    let theta = 37;
    let cfg = ImpairmentConfig { theta, ..ImpairmentConfig::clean() };
    let r = apply_channel_windowed(&frame, &ch, &cfg, &params, &mut rng, params.stream_len())
        .map_err(|e| e.to_string())?;
    let d_hat = argmax(&timing_metric(&r, &params).values);
    ensure(
        (theta..=theta + params.ng + 1).contains(&d_hat),
        format!("noiseless peak {d_hat} outside plateau span"),
    )
}

const CHECKS: &[Check] = &[
    Check { name: "frame: Parseval + transform round trip", run: check_parseval_and_round_trip },
    Check { name: "frame: preamble half-symmetry", run: check_preamble_half_symmetry },
    Check { name: "saleh: spot values, covariance, bound", run: check_saleh_spot_and_covariance },
    Check { name: "saleh: EVM identities", run: check_evm_identities },
    Check { name: "saleh: back-off calibration closed loop", run: check_calibration_closed_loop },
    Check { name: "metric: invariances and CP plateau", run: check_metric_invariances_and_plateau },
    Check { name: "elm: pseudoinverse identities + oracle", run: check_pseudoinverse_and_oracle },
    Check { name: "labels: geometry over the legal grid", run: check_label_geometry },
    Check { name: "harness: error-region boundary inclusivity", run: check_error_region_boundaries },
    Check { name: "harness: noiseless peak on the plateau", run: check_sc_corr_lands_on_plateau },
    Check { name: "harness: worker-count bit reproducibility", run: check_worker_count_invariance },
];

/// Runs every check, printing one line each; returns the failure count.
pub fn run_selftest() -> usize {
    let mut failures = 0;
    for check in CHECKS {
        match (check.run)() {
            Ok(()) => println!("[PASS] {}", check.name),
            Err(msg) => {
                failures += 1;
                println!("[FAIL] {} — {msg}", check.name);
            }
        }
    }
    if failures == 0 {
        println!("selftest: all {} checks passed", CHECKS.len());
    } else {
        println!("selftest: {failures} of {} checks FAILED", CHECKS.len());
    }
    failures
}
