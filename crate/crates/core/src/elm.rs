//! Single-hidden-layer random-feature network trained in closed form.
//!
//! The hidden layer is fixed at initialization (uniform random weights and
//! biases, tanh activation); training solves one least-squares problem for
//! the output weights:
//!
//! ```text
//! H_i = tanh(W g_i + b)            (hidden features, one column per sample)
//! Upsilon = T H+                   (minimum-norm least squares)
//! O = Upsilon tanh(W g + b)        (inference: refined metric)
//! ```
//!
//! Two solver routes are provided: normal equations with a small relative
//! ridge (the production path, `O(n_hidden^2)` memory independent of the
//! sample count) and an exact SVD pseudoinverse for small or rank-deficient
//! systems.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metric::argmax;
use crate::rng::stream_rng;

/// Column block size for feature computation.
const BLOCK: usize = 512;
/// Fixed partial-sum count for the parallel accumulation. Using a constant
/// (rather than the worker count) keeps the floating-point reduction order,
/// and therefore the trained weights, bit-identical across thread pools.
const CHUNKS: usize = 16;

/// How the output-weight least-squares problem is solved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Solver {
    /// `Upsilon = T H' (H H' + lambda I)^{-1}` via Cholesky, with
    /// `lambda = ridge_rel * trace(H H') / n_hidden`. With `ridge_rel = 0`
    /// a singular system falls back to the pseudoinverse of the Gram
    /// matrix, which still yields the minimum-norm solution.
    NormalEquations { ridge_rel: f64 },
    /// `Upsilon = T pinv(H)` with an exact SVD pseudoinverse; materializes
    /// the full feature matrix, so intended for small training sets.
    SvdPinv,
}

impl Default for Solver {
    fn default() -> Self {
        Solver::NormalEquations { ridge_rel: 1e-8 }
    }
}

/// Hidden layer plus (after training) output weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ElmModel {
    w: DMatrix<f64>,
    b: DVector<f64>,
    upsilon: Option<DMatrix<f64>>,
    output_dim: usize,
    init_seed: u64,
}

impl ElmModel {
    /// Draws `W` (`n_hidden x input_dim`) and `b` i.i.d. uniform on
    /// `[-1, 1]`, deterministically under `seed`. Output weights are unset.
    pub fn init(n_hidden: usize, input_dim: usize, output_dim: usize, seed: u64) -> Result<Self> {
        if n_hidden == 0 || input_dim == 0 || output_dim == 0 {
            return Err(Error::Config(format!(
                "model dimensions must be positive: hidden {n_hidden}, in {input_dim}, out {output_dim}"
            )));
        }
        let mut rng = stream_rng(seed, &[0x454c4d]); // "ELM" stream
        // Row-major draw order is part of the model's definition.
        let w_data: Vec<f64> =
            (0..n_hidden * input_dim).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let b_data: Vec<f64> = (0..n_hidden).map(|_| rng.random_range(-1.0..=1.0)).collect();
        Ok(Self {
            w: DMatrix::from_row_slice(n_hidden, input_dim, &w_data),
            b: DVector::from_vec(b_data),
            upsilon: None,
            output_dim,
            init_seed: seed,
        })
    }

    /// Rebuilds a model from stored parts (used by the file format).
    pub(crate) fn from_parts(
        w: DMatrix<f64>,
        b: DVector<f64>,
        upsilon: Option<DMatrix<f64>>,
        output_dim: usize,
        init_seed: u64,
    ) -> Self {
        Self { w, b, upsilon, output_dim, init_seed }
    }

    pub fn n_hidden(&self) -> usize {
        self.w.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.w.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn init_seed(&self) -> u64 {
        self.init_seed
    }

    pub fn is_trained(&self) -> bool {
        self.upsilon.is_some()
    }

    pub(crate) fn weights(&self) -> (&DMatrix<f64>, &DVector<f64>, Option<&DMatrix<f64>>) {
        (&self.w, &self.b, self.upsilon.as_ref())
    }

    /// `tanh(W x + b)` for one input vector.
    pub fn hidden_output(&self, x: &[f64]) -> Result<DVector<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::Domain(format!(
                "input length {} does not match model input dim {}",
                x.len(),
                self.input_dim()
            )));
        }
        let mut h = &self.w * DVector::from_column_slice(x) + &self.b;
        h.apply(|v| *v = v.tanh());
        Ok(h)
    }

    /// Hidden features for a block of inputs (one column per sample).
    fn hidden_block(&self, x: nalgebra::DMatrixView<'_, f64>) -> DMatrix<f64> {
        let mut h = &self.w * x;
        for mut col in h.column_iter_mut() {
            col += &self.b;
        }
        h.apply(|v| *v = v.tanh());
        h
    }

    /// Solves for the output weights on `set`; returns the trained model.
    /// Training is one closed-form pass and is idempotent.
    pub fn train(&self, set: &TrainingSet, solver: &Solver) -> Result<ElmModel> {
        set.check_dims(self.input_dim(), self.output_dim)?;
        let upsilon = match solver {
            Solver::NormalEquations { ridge_rel } => {
                let (gram, cross) = self.accumulate_normal_equations(set)?;
                solve_normal_equations(gram, cross, *ridge_rel)?
            }
            Solver::SvdPinv => {
                let h = self.hidden_block(set.inputs.as_view());
                train_output_weights(&h, &set.targets, &Solver::SvdPinv)?
            }
        };
        let mut trained = self.clone();
        trained.upsilon = Some(upsilon);
        Ok(trained)
    }

    /// Accumulates `H H'` and `T H'` over fixed column chunks. The chunk
    /// partition and summation order are independent of the worker count.
    fn accumulate_normal_equations(
        &self,
        set: &TrainingSet,
    ) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let nt = set.len();
        let nh = self.n_hidden();
        let chunk_cols = nt.div_ceil(CHUNKS);
        let partials: Vec<(DMatrix<f64>, DMatrix<f64>)> = (0..nt.div_ceil(chunk_cols))
            .into_par_iter()
            .map(|ci| {
                let start = ci * chunk_cols;
                let cols = chunk_cols.min(nt - start);
                let mut gram = DMatrix::zeros(nh, nh);
                let mut cross = DMatrix::zeros(self.output_dim, nh);
                let mut off = start;
                while off < start + cols {
                    let b = BLOCK.min(start + cols - off);
                    let x = set.inputs.columns(off, b);
                    let t = set.targets.columns(off, b);
                    let h = self.hidden_block(x);
                    gram += &h * h.transpose();
                    cross += t * h.transpose();
                    off += b;
                }
                (gram, cross)
            })
            .collect();

        let mut gram = DMatrix::zeros(nh, nh);
        let mut cross = DMatrix::zeros(self.output_dim, nh);
        for (g, c) in partials {
            gram += g;
            cross += c;
        }
        if gram.iter().any(|v| !v.is_finite()) || cross.iter().any(|v| !v.is_finite()) {
            return Err(Error::Training("non-finite hidden features or targets".into()));
        }
        Ok((gram, cross))
    }

    /// `O = Upsilon tanh(W x + b)`: the refined metric.
    pub fn infer(&self, x: &[f64]) -> Result<Vec<f64>> {
        let upsilon = self
            .upsilon
            .as_ref()
            .ok_or_else(|| Error::State("inference requires a trained model".into()))?;
        let h = self.hidden_output(x)?;
        Ok((upsilon * h).data.into())
    }

    #[cfg(test)]
    pub(crate) fn scale_output_weights(&mut self, c: f64) {
        if let Some(u) = self.upsilon.as_mut() {
            *u *= c;
        }
    }
}

/// Paired training inputs and targets, one column per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub inputs: DMatrix<f64>,
    pub targets: DMatrix<f64>,
}

impl TrainingSet {
    pub fn new(inputs: DMatrix<f64>, targets: DMatrix<f64>) -> Result<Self> {
        if inputs.ncols() == 0 {
            return Err(Error::Domain("training set must not be empty".into()));
        }
        if inputs.ncols() != targets.ncols() {
            return Err(Error::Domain(format!(
                "sample count mismatch: {} inputs vs {} targets",
                inputs.ncols(),
                targets.ncols()
            )));
        }
        Ok(Self { inputs, targets })
    }

    pub fn from_columns(inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<Self> {
        if inputs.is_empty() || inputs.len() != targets.len() {
            return Err(Error::Domain(format!(
                "training set needs matching non-empty columns: {} inputs, {} targets",
                inputs.len(),
                targets.len()
            )));
        }
        let make = |cols: &[Vec<f64>]| {
            let rows = cols[0].len();
            DMatrix::from_fn(rows, cols.len(), |i, j| cols[j][i])
        };
        Self::new(make(inputs), make(targets))
    }

    pub fn len(&self) -> usize {
        self.inputs.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn check_dims(&self, input_dim: usize, output_dim: usize) -> Result<()> {
        if self.inputs.nrows() != input_dim || self.targets.nrows() != output_dim {
            return Err(Error::Domain(format!(
                "training set dims {}x{} do not match model dims {input_dim}x{output_dim}",
                self.inputs.nrows(),
                self.targets.nrows()
            )));
        }
        Ok(())
    }
}

/// Solves `Upsilon = T H+` from an explicit feature matrix `h`
/// (`n_hidden x n_samples`) and target matrix `t` (`output x n_samples`).
pub fn train_output_weights(
    h: &DMatrix<f64>,
    t: &DMatrix<f64>,
    solver: &Solver,
) -> Result<DMatrix<f64>> {
    if h.iter().any(|v| !v.is_finite()) {
        return Err(Error::Training("non-finite entries in the feature matrix".into()));
    }
    if h.ncols() != t.ncols() {
        return Err(Error::Domain(format!(
            "sample count mismatch: {} features vs {} targets",
            h.ncols(),
            t.ncols()
        )));
    }
    match solver {
        Solver::NormalEquations { ridge_rel } => {
            let gram = h * h.transpose();
            let cross = t * h.transpose();
            solve_normal_equations(gram, cross, *ridge_rel)
        }
        Solver::SvdPinv => Ok(t * pinv(h)),
    }
}

fn solve_normal_equations(
    mut gram: DMatrix<f64>,
    cross: DMatrix<f64>,
    ridge_rel: f64,
) -> Result<DMatrix<f64>> {
    if ridge_rel < 0.0 {
        return Err(Error::Training(format!("ridge must be non-negative, got {ridge_rel}")));
    }
    let nh = gram.nrows();
    let lambda = ridge_rel * gram.trace() / nh as f64;
    if lambda > 0.0 {
        for i in 0..nh {
            gram[(i, i)] += lambda;
        }
        return match nalgebra::linalg::Cholesky::new(gram) {
            Some(chol) => Ok(chol.solve(&cross.transpose()).transpose()),
            None => Err(Error::Training(
                "ridged Gram matrix is not positive definite (non-finite features?)".into(),
            )),
        };
    }
    // lambda = 0: solve through the Gram pseudoinverse, which handles
    // rank-deficient systems and still gives T H' (H H')+ = T H+. The Gram
    // spectrum is the squared feature spectrum, so the rank cutoff is
    // sqrt(eps) relative rather than eps.
    Ok(&cross * pinv_with_cutoff(&gram, f64::EPSILON.sqrt()))
}

/// Moore-Penrose pseudoinverse via SVD with the standard relative rank
/// cutoff `sigma_max * max(nrows, ncols) * eps`.
pub fn pinv(m: &DMatrix<f64>) -> DMatrix<f64> {
    pinv_with_cutoff(m, m.nrows().max(m.ncols()) as f64 * f64::EPSILON)
}

fn pinv_with_cutoff(m: &DMatrix<f64>, rel_cutoff: f64) -> DMatrix<f64> {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("svd with u");
    let v_t = svd.v_t.expect("svd with v_t");
    let max_sv = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let tol = max_sv * rel_cutoff;
    let inv_sv: Vec<f64> = svd
        .singular_values
        .iter()
        .map(|&s| if s > tol { 1.0 / s } else { 0.0 })
        .collect();
    let mut vt_scaled = v_t;
    for (i, inv) in inv_sv.iter().enumerate() {
        vt_scaled.row_mut(i).scale_mut(*inv);
    }
    vt_scaled.transpose() * u.transpose()
}

/// Timing estimate: `argmax_d |O_d|^2`, smallest index on ties.
pub fn estimate_sto(o: &[f64]) -> usize {
    let power: Vec<f64> = o.iter().map(|v| v * v).collect();
    argmax(&power)
}
