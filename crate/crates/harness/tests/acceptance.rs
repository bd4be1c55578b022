//! Acceptance suite: the experiment-level claims this artifact must
//! reproduce, each implemented at its stated scale and tolerance and
//! reported as one pass/fail line.
//!
//! Scales are desk-sized by design (minutes on one machine): training sets
//! of 2^14 samples (2^16 where stated), 10^4 test trials per SNR point,
//! 95% Wilson intervals on every proportion. Run with `--nocapture` to see
//! the per-criterion lines.

use std::sync::OnceLock;
use std::time::Instant;

use elmsync_harness::config::ExperimentConfig;
use elmsync_harness::curve::{evaluate_error_counts, CurvePoint};
use elmsync_harness::estimators::Estimator;
use elmsync_harness::selftest::run_selftest;
use elmsync_harness::sweep::{run_fig2, run_gen_eta, run_gen_l, train_metric_model, Scenario};
use elmsync_harness::trial::{run_trial, TrialContext};
use elmsync_core::labels::LabelScheme;

use elmsync_harness::curve::ErrorProbabilityCurve;

const MASTER_SEED: u64 = 20260810;

/// Baseline-comparison operating point: N=64, Ng=16, L=8, EVM=40%,
/// Nt=2^14, 10^4 trials per SNR over {0,4,...,20} dB.
fn fig2_config() -> ExperimentConfig {
    ExperimentConfig::from_toml_str(&format!(
        "master_seed = {MASTER_SEED}\n\
         target_evm = 40.0\n\
         nt = 16384\n\
         n_test_trials = 10000\n"
    ))
    .unwrap()
}

struct Fig2Fixture {
    curves: Vec<ErrorProbabilityCurve>,
}

impl Fig2Fixture {
    fn curve(&self, estimator: &str, scheme: &str) -> &ErrorProbabilityCurve {
        self.curves
            .iter()
            .find(|c| c.meta.estimator == estimator && c.meta.label_scheme == scheme)
            .unwrap_or_else(|| panic!("missing curve {estimator}/{scheme}"))
    }
}

fn fig2_fixture() -> &'static Fig2Fixture {
    static FIXTURE: OnceLock<Fig2Fixture> = OnceLock::new();
    FIXTURE.get_or_init(|| {
        let started = Instant::now();
        let curves = run_fig2(&fig2_config()).expect("baseline comparison run");
        eprintln!("[fixture] baseline comparison computed in {:.1?}", started.elapsed());
        Fig2Fixture { curves }
    })
}

/// "A <= B" with the reversal tolerated only inside overlapping intervals.
fn no_reversal(a: &CurvePoint, b: &CurvePoint) -> bool {
    a.p_error <= b.p_error || a.overlaps(b)
}

fn fmt_p(p: &CurvePoint) -> String {
    format!("{:.4} [{:.4},{:.4}]", p.p_error, p.ci_low, p.ci_high)
}

#[test]
fn criterion_1_ordering_reproduction() {
    let fix = fig2_fixture();
    let ts = fix.curve("ts_learn", "isi_free");
    let sc = fix.curve("sc_corr", "none");
    let one = fix.curve("elm", "onehot_end");
    let mid = fix.curve("elm", "midpoint");
    let isi = fix.curve("elm", "isi_free");

    let mut ok = true;
    let mut notes = Vec::new();

    // The raw-signal network loses to every scheme at every SNR.
    for p_ts in &ts.points {
        for other in [sc, one, mid, isi] {
            let p_other = other.point_at(p_ts.snr_db).unwrap();
            if !no_reversal(p_other, p_ts) {
                ok = false;
                notes.push(format!(
                    "ts_learn {} < {}/{} {} at {} dB",
                    fmt_p(p_ts),
                    other.meta.estimator,
                    other.meta.label_scheme,
                    fmt_p(p_other),
                    p_ts.snr_db
                ));
            }
        }
    }

    // From 8 dB up: region label <= midpoint label <= correlation baseline.
    for p_isi in isi.points.iter().filter(|p| p.snr_db >= 8.0) {
        let p_mid = mid.point_at(p_isi.snr_db).unwrap();
        let p_sc = sc.point_at(p_isi.snr_db).unwrap();
        if !no_reversal(p_isi, p_mid) {
            ok = false;
            notes.push(format!(
                "isi_free {} > midpoint {} at {} dB",
                fmt_p(p_isi),
                fmt_p(p_mid),
                p_isi.snr_db
            ));
        }
        if !no_reversal(p_mid, p_sc) {
            ok = false;
            notes.push(format!(
                "midpoint {} > sc_corr {} at {} dB",
                fmt_p(p_mid),
                fmt_p(p_sc),
                p_isi.snr_db
            ));
        }
    }

    for c in [ts, sc, one, mid, isi] {
        let row: Vec<String> =
            c.points.iter().map(|p| format!("{:.4}", p.p_error)).collect();
        println!(
            "           {:>8}/{:<10} p_error over SNR grid: {}",
            c.meta.estimator,
            c.meta.label_scheme,
            row.join(" ")
        );
    }
    println!(
        "[{}] criterion 1: ordering reproduction (raw-signal net worst everywhere; region <= midpoint <= correlation from 8 dB){}",
        if ok { "PASS" } else { "FAIL" },
        if notes.is_empty() { String::new() } else { format!(" — {}", notes.join("; ")) }
    );
    assert!(ok, "criterion 1 violations: {notes:?}");
}

#[test]
fn criterion_2_absolute_level() {
    // Larger training set (2^16), 2*10^4 trials at 12 dB: the region-label
    // scheme stays under 2e-2 (4x relaxation of the reference level 5e-3;
    // hitting the reference level itself is flagged as full reproduction).
    let cfg = ExperimentConfig::from_toml_str(&format!(
        "master_seed = {MASTER_SEED}\n\
         target_evm = 40.0\n\
         nt = 65536\n\
         n_test_trials = 20000\n"
    ))
    .unwrap();

    let started = Instant::now();
    let eta = elmsync_harness::sweep::resolve_eta_train(&cfg).unwrap();
    let train_ctx = TrialContext::train_side(&cfg, eta);
    let model = train_metric_model(&cfg, &train_ctx, LabelScheme::IsiFree, 0x32).unwrap();
    let test_ctx = TrialContext::test_side(&cfg, eta);
    let points = evaluate_error_counts(
        &test_ctx,
        &[Estimator::MetricElm(&model)],
        &[12.0],
        cfg.n_test_trials,
        cfg.master_seed,
        0x32,
    )
    .unwrap();
    let p = points[0][0];
    eprintln!("[criterion 2] trained and evaluated in {:.1?}", started.elapsed());

    let ok = p.p_error < 2e-2;
    let full = p.p_error < 0.5e-2;
    println!(
        "[{}] criterion 2: region label at 12 dB, Nt=2^16: p_error = {} (< 2e-2 required){}",
        if ok { "PASS" } else { "FAIL" },
        fmt_p(&p),
        if full { " — FULL REPRODUCTION (< 0.5e-2)" } else { "" }
    );
    assert!(ok, "p_error {} not below 2e-2", p.p_error);
}

#[test]
fn criterion_3_onehot_high_snr_floor() {
    let fix = fig2_fixture();
    let one = fix.curve("elm", "onehot_end");
    let isi = fix.curve("elm", "isi_free");

    let mut ok = true;
    let mut notes = Vec::new();
    for snr in [16.0, 20.0] {
        let p_one = one.point_at(snr).unwrap();
        let p_isi = isi.point_at(snr).unwrap();
        // Strictly outside the intervals: even the boundary-label's lower
        // edge sits above twice the region-label's upper edge.
        let pass = p_one.ci_low > 2.0 * p_isi.ci_high;
        if !pass {
            ok = false;
        }
        notes.push(format!(
            "{snr} dB: onehot {} vs 2x isi_free {}",
            fmt_p(p_one),
            fmt_p(p_isi)
        ));
    }
    println!(
        "[{}] criterion 3: one-hot floor exceeds 2x region label at 16-20 dB, outside CIs — {}",
        if ok { "PASS" } else { "FAIL" },
        notes.join("; ")
    );
    assert!(ok, "criterion 3 failed: {notes:?}");
}

fn gen_config() -> ExperimentConfig {
    ExperimentConfig::from_toml_str(&format!(
        "master_seed = {MASTER_SEED}\n\
         target_evm = 40.0\n\
         nt = 16384\n\
         n_test_trials = 10000\n\
         snr_grid_db = [8.0, 12.0, 16.0, 20.0]\n"
    ))
    .unwrap()
}

#[test]
fn criterion_4_l_generalization() {
    let cfg = gen_config();
    let started = Instant::now();
    let curves = run_gen_l(&cfg).expect("channel-memory generalization run");
    eprintln!("[criterion 4] grid computed in {:.1?}", started.elapsed());

    let baseline = |l_test: usize| -> &ErrorProbabilityCurve {
        curves
            .iter()
            .find(|c| c.meta.estimator == "sc_corr" && c.meta.l_test == l_test)
            .unwrap()
    };
    let model_curve = |scheme: &str, l_train: usize, l_test: usize| -> &ErrorProbabilityCurve {
        curves
            .iter()
            .find(|c| {
                c.meta.estimator == "elm"
                    && c.meta.label_scheme == scheme
                    && c.meta.l_train == l_train
                    && c.meta.l_test == l_test
            })
            .unwrap()
    };

    // Clause 1: both proposed labels beat the baseline at every grid SNR
    // (the whole grid is >= 8 dB) for all nine train/test combinations.
    let mut beats_ok = true;
    let mut notes = Vec::new();
    for &l_train in &cfg.l_train_grid {
        for &l_test in &cfg.l_test_grid {
            for scheme in ["midpoint", "isi_free"] {
                let c = model_curve(scheme, l_train, l_test);
                for p in &c.points {
                    let b = baseline(l_test).point_at(p.snr_db).unwrap();
                    if p.p_error >= b.p_error {
                        beats_ok = false;
                        notes.push(format!(
                            "{scheme} Ltr{l_train}/Lte{l_test} {} !< sc_corr {} at {} dB",
                            fmt_p(p),
                            fmt_p(b),
                            p.snr_db
                        ));
                    }
                }
            }
        }
    }

    // Clause 2: at 12 dB, for fixed L_train, p_error is non-decreasing in
    // |L_test - L_train|; a reversal is tolerated only inside overlapping
    // intervals.
    let mut mono_ok = true;
    for scheme in ["midpoint", "isi_free"] {
        for &l_train in &cfg.l_train_grid {
            let mut cells: Vec<(usize, CurvePoint)> = cfg
                .l_test_grid
                .iter()
                .map(|&l_test| {
                    let p = *model_curve(scheme, l_train, l_test).point_at(12.0).unwrap();
                    (l_test.abs_diff(l_train), p)
                })
                .collect();
            cells.sort_by_key(|(d, _)| *d);
            for i in 0..cells.len() {
                for j in i + 1..cells.len() {
                    let (d1, p1) = &cells[i];
                    let (d2, p2) = &cells[j];
                    if d1 < d2 && !no_reversal(p1, p2) {
                        mono_ok = false;
                        notes.push(format!(
                            "{scheme} Ltr{l_train}: p(|d|={d1}) = {} > p(|d|={d2}) = {} outside CI",
                            fmt_p(p1),
                            fmt_p(p2)
                        ));
                    }
                }
            }
        }
    }

    for scheme in ["midpoint", "isi_free"] {
        for &l_train in &cfg.l_train_grid {
            let row: Vec<String> = cfg
                .l_test_grid
                .iter()
                .map(|&l_test| {
                    format!(
                        "Lte{l_test}: {:.4}",
                        model_curve(scheme, l_train, l_test).point_at(12.0).unwrap().p_error
                    )
                })
                .collect();
            println!("           {scheme:>9} Ltr{l_train} @12dB  {}", row.join("  "));
        }
    }
    for &l_test in &cfg.l_test_grid {
        println!(
            "           {:>9} Lte{l_test} @12dB  {:.4}",
            "sc_corr",
            baseline(l_test).point_at(12.0).unwrap().p_error
        );
    }

    // Context for the monotonicity clause: the error region is defined by
    // the channel memory actually applied, so a smaller L_test widens the
    // correct region (ng - L_test + 2 lags) and is structurally easier
    // regardless of the training mismatch. Holding L_test fixed isolates
    // the mismatch effect; that direction is reported here for reference.
    for scheme in ["midpoint", "isi_free"] {
        for &l_test in &cfg.l_test_grid {
            let mut cells: Vec<(usize, CurvePoint)> = cfg
                .l_train_grid
                .iter()
                .map(|&l_train| {
                    (l_train.abs_diff(l_test), *model_curve(scheme, l_train, l_test).point_at(12.0).unwrap())
                })
                .collect();
            cells.sort_by_key(|(d, _)| *d);
            let mono = cells.windows(2).all(|w| no_reversal(&w[0].1, &w[1].1));
            let row: Vec<String> =
                cells.iter().map(|(d, p)| format!("|d|={d}: {:.4}", p.p_error)).collect();
            println!(
                "           fixed-Lte diagnostic {scheme:>9} Lte{l_test} @12dB  {}  (monotone within CI: {})",
                row.join("  "),
                if mono { "yes" } else { "no" }
            );
        }
    }

    let ok = beats_ok && mono_ok;
    println!(
        "[{}] criterion 4: L-generalization (beats baseline: {}; |L_test-L_train| monotone within CI at 12 dB: {}){}",
        if ok { "PASS" } else { "FAIL" },
        if beats_ok { "yes" } else { "no" },
        if mono_ok { "yes" } else { "no" },
        if notes.is_empty() { String::new() } else { format!(" — {}", notes.join("; ")) }
    );
    assert!(ok, "criterion 4 violations: {notes:?}");
}

#[test]
fn criterion_5_eta_generalization() {
    let cfg = gen_config();
    let started = Instant::now();
    let curves = run_gen_eta(&cfg).expect("back-off generalization run");
    eprintln!("[criterion 5] grid computed in {:.1?}", started.elapsed());

    let mut ok = true;
    let mut notes = Vec::new();
    for &eta_test in &cfg.eta_test_grid {
        let baseline = curves
            .iter()
            .find(|c| c.meta.estimator == "sc_corr" && c.meta.eta_test == eta_test)
            .unwrap();
        for &eta_train in &cfg.eta_train_grid {
            for scheme in ["midpoint", "isi_free"] {
                let c = curves
                    .iter()
                    .find(|c| {
                        c.meta.estimator == "elm"
                            && c.meta.label_scheme == scheme
                            && c.meta.eta_train == eta_train
                            && c.meta.eta_test == eta_test
                    })
                    .unwrap();
                for p in &c.points {
                    let b = baseline.point_at(p.snr_db).unwrap();
                    if p.p_error >= b.p_error {
                        ok = false;
                        notes.push(format!(
                            "{scheme} etr{eta_train}/ete{eta_test} {} !< sc_corr {} at {} dB",
                            fmt_p(p),
                            fmt_p(b),
                            p.snr_db
                        ));
                    }
                }
            }
        }
    }
    println!(
        "[{}] criterion 5: eta-generalization — both proposed labels beat the baseline for all nine back-off combinations at every grid SNR{}",
        if ok { "PASS" } else { "FAIL" },
        if notes.is_empty() { String::new() } else { format!(" — {}", notes.join("; ")) }
    );
    assert!(ok, "criterion 5 violations: {notes:?}");
}

#[test]
fn criterion_6_property_suites() {
    // The deterministic property battery (transform identities, nonlinearity
    // spot values and covariance, EVM identities, calibration closed loop,
    // metric invariances and plateau, pseudoinverse identities and oracle,
    // label geometry, boundary inclusivity, worker-count reproducibility).
    let failures = run_selftest();

    // Region-boundary inclusivity exercised through the full single-trial
    // path with probe estimators.
    let cfg = fig2_config();
    let ctx = TrialContext::test_side(&cfg, 0.05);
    let l = ctx.l as isize;
    let ng = ctx.params.ng as isize;
    let mut boundary_ok = true;
    for (offset, expect_error) in
        [(l, false), (l - 1, true), (ng + 1, false), (ng + 2, true)]
    {
        for trial in 0..50u64 {
            let out = run_trial(&ctx, &Estimator::OffsetProbe(offset), 12.0, 1000 + trial).unwrap();
            if out.is_error != expect_error {
                boundary_ok = false;
            }
        }
    }

    let ok = failures == 0 && boundary_ok;
    println!(
        "[{}] criterion 6: property suites ({} selftest failures; run_trial boundary inclusivity {})",
        if ok { "PASS" } else { "FAIL" },
        failures,
        if boundary_ok { "ok" } else { "violated" }
    );
    assert!(ok);
}

#[test]
fn scenario_tags_are_distinct() {
    // The three sweep families must not share evaluation seed streams.
    let ids: Vec<&str> =
        [Scenario::Fig2, Scenario::GenL, Scenario::GenEta].iter().map(|s| s.id()).collect();
    assert_eq!(ids, vec!["fig2", "genL", "genEta"]);
}

#[test]
fn calibrated_operating_point_is_stable() {
    // The 40% EVM target resolves to a back-off deep in the bracket; this
    // anchors the operating point every criterion runs at.
    let cfg = fig2_config();
    let eta = elmsync_harness::sweep::resolve_eta_train(&cfg).unwrap();
    assert!((eta - 0.0477).abs() < 0.02, "calibrated eta {eta}");
}
