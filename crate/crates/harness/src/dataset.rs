//! Training-set generation: one impaired trial per sample, with the SNR
//! drawn uniformly from the evaluation grid so a single model serves the
//! whole sweep.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;

use elmsync_core::elm::TrainingSet;
use elmsync_core::labels::{build_label, LabelScheme};
use elmsync_core::rng::stream_rng;
use elmsync_core::{Error, SystemParams};

use crate::estimators::raw_window_feature;
use crate::trial::{seed_domain, synthesize_trial, TrialContext};

/// Synthesized training inputs before label attachment. The same trials
/// serve every label scheme (and both input encodings), so models differ
/// only in what they are taught, not in what they saw.
pub struct DatasetInputs {
    /// Normalized-metric inputs, one column per sample (`nd x nt`).
    pub metric_inputs: DMatrix<f64>,
    /// Raw-window features (`2 nd x nt`), when requested.
    pub raw_inputs: Option<DMatrix<f64>>,
    /// True offset of each sample.
    pub thetas: Vec<usize>,
}

/// Generates `nt` training samples. Per-sample seeds are a pure function
/// of `(master_seed, sample index)`, so the set is reproducible and
/// independent of worker count.
pub fn synthesize_dataset(
    ctx: &TrialContext,
    snr_grid_db: &[f64],
    nt: usize,
    master_seed: u64,
    with_raw: bool,
) -> Result<DatasetInputs, Error> {
    if nt == 0 {
        return Err(Error::Domain("training set must have at least one sample".into()));
    }
    if snr_grid_db.is_empty() {
        return Err(Error::Domain("training SNR grid must not be empty".into()));
    }
    let nd = ctx.params.nd;

    let columns: Vec<(Vec<f64>, Option<Vec<f64>>, usize)> = (0..nt)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(master_seed, &[seed_domain::DATASET, i as u64]);
            let snr_db = snr_grid_db[rng.random_range(0..snr_grid_db.len())];
            let signals = synthesize_trial(ctx, snr_db, &mut rng)?;
            let raw = if with_raw {
                Some(
                    raw_window_feature(&signals.stream[..nd])
                        .unwrap_or_else(|| vec![0.0; 2 * nd]),
                )
            } else {
                None
            };
            Ok((signals.gbar.values, raw, signals.theta))
        })
        .collect::<Result<_, Error>>()?;

    let metric_inputs = DMatrix::from_fn(nd, nt, |i, j| columns[j].0[i]);
    let raw_inputs = with_raw
        .then(|| DMatrix::from_fn(2 * nd, nt, |i, j| columns[j].1.as_ref().unwrap()[i]));
    let thetas = columns.iter().map(|c| c.2).collect();
    Ok(DatasetInputs { metric_inputs, raw_inputs, thetas })
}

/// Builds the target matrix for one label scheme from the drawn offsets,
/// using the training-side channel memory.
pub fn targets_for(
    thetas: &[usize],
    scheme: LabelScheme,
    params: &SystemParams,
    l_train: usize,
) -> Result<DMatrix<f64>, Error> {
    let mut targets = DMatrix::zeros(params.nd, thetas.len());
    for (j, &theta) in thetas.iter().enumerate() {
        let label = build_label(scheme, theta, params, l_train)?;
        for (i, &v) in label.values.iter().enumerate() {
            targets[(i, j)] = v as f64;
        }
    }
    Ok(targets)
}

/// End-to-end training-set build for one scheme over the metric inputs.
pub fn generate_training_set(
    ctx: &TrialContext,
    snr_grid_db: &[f64],
    nt: usize,
    master_seed: u64,
    scheme: LabelScheme,
) -> Result<TrainingSet, Error> {
    let data = synthesize_dataset(ctx, snr_grid_db, nt, master_seed, false)?;
    let targets = targets_for(&data.thetas, scheme, &ctx.params, ctx.l)?;
    TrainingSet::new(data.metric_inputs, targets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;

    fn ctx() -> TrialContext {
        let cfg = ExperimentConfig::from_toml_str("master_seed = 5\neta_train = 0.15\n").unwrap();
        TrialContext::train_side(&cfg, 0.15)
    }

    #[test]
    fn small_set_has_unit_norm_inputs_and_valid_labels() {
        let ctx = ctx();
        let set = generate_training_set(&ctx, &[0.0, 10.0], 4, 9, LabelScheme::IsiFree).unwrap();
        assert_eq!(set.len(), 4);
        assert_eq!(set.inputs.nrows(), 160);
        for j in 0..4 {
            let norm: f64 = set.inputs.column(j).iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-9, "column {j} norm {norm}");
            let ones = set.targets.column(j).iter().filter(|&&v| v == 1.0).count();
            assert_eq!(ones, ctx.params.ng - ctx.l + 2);
        }
    }

    #[test]
    fn same_master_seed_reproduces_the_set() {
        let ctx = ctx();
        let a = generate_training_set(&ctx, &[0.0, 20.0], 8, 33, LabelScheme::Midpoint).unwrap();
        let b = generate_training_set(&ctx, &[0.0, 20.0], 8, 33, LabelScheme::Midpoint).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn schemes_share_inputs() {
        let ctx = ctx();
        let data = synthesize_dataset(&ctx, &[8.0], 6, 21, true).unwrap();
        let onehot = targets_for(&data.thetas, LabelScheme::OnehotEnd, &ctx.params, ctx.l).unwrap();
        let isi = targets_for(&data.thetas, LabelScheme::IsiFree, &ctx.params, ctx.l).unwrap();
        for (j, &theta) in data.thetas.iter().enumerate() {
            assert_eq!(onehot[(theta + ctx.params.ng + 1, j)], 1.0);
            assert_eq!(isi[(theta + ctx.l, j)], 1.0);
        }
        let raw = data.raw_inputs.unwrap();
        assert_eq!(raw.nrows(), 320);
        for j in 0..6 {
            let norm: f64 = raw.column(j).iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() < 1e-9);
        }
    }
}
