//! Sparse inference kernel.
//!
//! Each layer computes `Z = Y * W`, adds the layer bias to the stored
//! entries of `Z` only, drops everything that is not positive and clamps at
//! `ymax`. Rows of `Y` are independent, so every execution mode splits work
//! by rows (or by layers, for the pipeline) and never reduces across
//! threads. Every output entry accumulates its products in ascending inner
//! index order, which makes the result independent of the mode and the
//! worker count.

use std::sync::mpsc;
use std::thread;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::challenge::categorize;
use crate::error::{Error, Result};
use crate::model::{CategorySet, CsrParts, FeatureBatch, NetworkModel, SparseMatrix};

/// Activation ceiling applied after the bias.
pub const DEFAULT_YMAX: f64 = 32.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Serial,
    /// Contiguous row blocks of the batch run through all layers on a
    /// thread pool, weights shared.
    #[value(name = "data_parallel")]
    DataParallel,
    /// Contiguous layer ranges run on dedicated threads; row tiles flow
    /// from stage to stage.
    Pipeline,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Serial => "serial",
            Mode::DataParallel => "data_parallel",
            Mode::Pipeline => "pipeline",
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InferenceConfig {
    pub ymax: f64,
    pub mode: Mode,
    pub workers: usize,
    /// Number of layer ranges in pipeline mode; `None` uses `workers`.
    pub pipeline_stages: Option<usize>,
    /// Rows per work unit; `None` picks a size from the batch and workers.
    pub batch_tile: Option<usize>,
}

impl Default for InferenceConfig {
    fn default() -> Self {
        InferenceConfig {
            ymax: DEFAULT_YMAX,
            mode: Mode::Serial,
            workers: 1,
            pipeline_stages: None,
            batch_tile: None,
        }
    }
}

impl InferenceConfig {
    pub fn serial() -> Self {
        Self::default()
    }

    pub fn data_parallel(workers: usize) -> Self {
        InferenceConfig {
            mode: Mode::DataParallel,
            workers,
            ..Self::default()
        }
    }

    pub fn pipeline(stages: usize) -> Self {
        InferenceConfig {
            mode: Mode::Pipeline,
            workers: stages,
            pipeline_stages: Some(stages),
            ..Self::default()
        }
    }

    pub fn check(&self) -> Result<()> {
        if !(self.ymax.is_finite() && self.ymax > 0.0) {
            return Err(Error::Parameter(format!(
                "ymax {} must be positive",
                self.ymax
            )));
        }
        if self.workers == 0 {
            return Err(Error::Parameter("workers must be at least 1".into()));
        }
        if self.pipeline_stages == Some(0) {
            return Err(Error::Parameter("pipeline needs at least one stage".into()));
        }
        if self.batch_tile == Some(0) {
            return Err(Error::Parameter("batch tile must be at least 1 row".into()));
        }
        Ok(())
    }

    fn tile_rows(&self, n_rows: usize) -> usize {
        self.batch_tile
            .unwrap_or_else(|| n_rows.div_ceil(self.workers * 4).max(1))
    }
}

/// Sparse accumulator for one output row.
struct RowAccumulator {
    sums: Vec<f64>,
    seen: Vec<bool>,
    touched: Vec<u32>,
}

impl RowAccumulator {
    fn new(width: usize) -> Self {
        RowAccumulator {
            sums: vec![0.0; width],
            seen: vec![false; width],
            touched: Vec::new(),
        }
    }

    /// Accumulates `row * w`. Inputs arrive in ascending column order, so
    /// each sum receives its terms in ascending inner index order.
    #[inline]
    fn accumulate(&mut self, cols: &[u32], vals: &[f64], w: &SparseMatrix) {
        for (&k, &y) in cols.iter().zip(vals) {
            let (w_cols, w_vals) = w.row(k as usize);
            for (&j, &wv) in w_cols.iter().zip(w_vals) {
                let j = j as usize;
                let p = y * wv;
                if self.seen[j] {
                    self.sums[j] += p;
                } else {
                    self.seen[j] = true;
                    self.sums[j] = p;
                    self.touched.push(j as u32);
                }
            }
        }
    }

    /// Emits accumulated entries in ascending column order through `f`,
    /// skipping exact zeros, and resets the accumulator.
    #[inline]
    fn drain(&mut self, mut f: impl FnMut(u32, f64)) {
        let width = self.sums.len();
        if self.touched.len() * 8 > width {
            for j in 0..width {
                if self.seen[j] {
                    self.seen[j] = false;
                    let z = self.sums[j];
                    if z != 0.0 {
                        f(j as u32, z);
                    }
                }
            }
        } else {
            self.touched.sort_unstable();
            for &j in &self.touched {
                self.seen[j as usize] = false;
                let z = self.sums[j as usize];
                if z != 0.0 {
                    f(j, z);
                }
            }
        }
        self.touched.clear();
    }
}

fn check_product_shape(y: &SparseMatrix, w: &SparseMatrix) -> Result<()> {
    if y.n_cols() != w.n_rows() {
        return Err(Error::Shape(format!(
            "cannot multiply {}x{} by {}x{}",
            y.n_rows(),
            y.n_cols(),
            w.n_rows(),
            w.n_cols()
        )));
    }
    Ok(())
}

/// Sparse product `y * w`. Exact zero sums are not stored.
pub fn spmm(y: &SparseMatrix, w: &SparseMatrix) -> Result<SparseMatrix> {
    check_product_shape(y, w)?;
    Ok(row_kernel(y, w, Some))
}

/// Adds `bias` to each stored entry, removes entries that end up `<= 0`
/// and clamps the rest at `ymax`. Unstored entries stay zero.
pub fn apply_bias_relu_clamp(z: &SparseMatrix, bias: f64, ymax: f64) -> SparseMatrix {
    let mut parts = CsrParts {
        n_rows: z.n_rows(),
        n_cols: z.n_cols(),
        row_offsets: Vec::with_capacity(z.n_rows() + 1),
        col_indices: Vec::with_capacity(z.nnz()),
        values: Vec::with_capacity(z.nnz()),
    };
    parts.row_offsets.push(0);
    for r in 0..z.n_rows() {
        let (cols, vals) = z.row(r);
        for (&c, &v) in cols.iter().zip(vals) {
            if let Some(a) = activate(v, bias, ymax) {
                parts.col_indices.push(c);
                parts.values.push(a);
            }
        }
        parts.row_offsets.push(parts.col_indices.len());
    }
    SparseMatrix::from_parts_unchecked(parts)
}

#[inline]
fn activate(z: f64, bias: f64, ymax: f64) -> Option<f64> {
    let v = z + bias;
    if v <= 0.0 {
        None
    } else if v > ymax {
        Some(ymax)
    } else {
        Some(v)
    }
}

/// One full layer: product, masked bias, ReLU and clamp in a single pass.
pub fn layer_forward(
    y: &SparseMatrix,
    w: &SparseMatrix,
    bias: f64,
    ymax: f64,
) -> Result<SparseMatrix> {
    check_product_shape(y, w)?;
    Ok(row_kernel(y, w, |z| activate(z, bias, ymax)))
}

fn row_kernel(
    y: &SparseMatrix,
    w: &SparseMatrix,
    mut emit: impl FnMut(f64) -> Option<f64>,
) -> SparseMatrix {
    let mut acc = RowAccumulator::new(w.n_cols());
    let mut parts = CsrParts {
        n_rows: y.n_rows(),
        n_cols: w.n_cols(),
        row_offsets: Vec::with_capacity(y.n_rows() + 1),
        col_indices: Vec::with_capacity(y.nnz()),
        values: Vec::with_capacity(y.nnz()),
    };
    parts.row_offsets.push(0);
    for r in 0..y.n_rows() {
        let (cols, vals) = y.row(r);
        acc.accumulate(cols, vals, w);
        acc.drain(|j, z| {
            if let Some(v) = emit(z) {
                parts.col_indices.push(j);
                parts.values.push(v);
            }
        });
        parts.row_offsets.push(parts.col_indices.len());
    }
    SparseMatrix::from_parts_unchecked(parts)
}

fn run_layers(
    model: &NetworkModel,
    layers: std::ops::Range<usize>,
    mut y: SparseMatrix,
    ymax: f64,
) -> SparseMatrix {
    for layer in &model.layers()[layers] {
        y = row_kernel(&y, &layer.weights, |z| activate(z, layer.bias, ymax));
    }
    y
}

/// Runs every layer of `model` on `y0`.
pub fn infer(
    model: &NetworkModel,
    y0: &FeatureBatch,
    cfg: &InferenceConfig,
) -> Result<FeatureBatch> {
    cfg.check()?;
    if y0.n_features() != model.neurons() {
        return Err(Error::Shape(format!(
            "input has {} features but the model has {} neurons",
            y0.n_features(),
            model.neurons()
        )));
    }
    let y = y0.matrix();
    let out = match cfg.mode {
        Mode::Serial => run_layers(model, 0..model.depth(), y.clone(), cfg.ymax),
        Mode::DataParallel => data_parallel(model, y, cfg)?,
        Mode::Pipeline => pipeline(model, y, cfg)?,
    };
    Ok(FeatureBatch::new(out))
}

fn row_blocks(n_rows: usize, tile: usize) -> Vec<(usize, usize)> {
    (0..n_rows)
        .step_by(tile.max(1))
        .map(|s| (s, (s + tile).min(n_rows)))
        .collect()
}

fn data_parallel(
    model: &NetworkModel,
    y: &SparseMatrix,
    cfg: &InferenceConfig,
) -> Result<SparseMatrix> {
    use rayon::prelude::*;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Parameter(format!("cannot start {} workers: {e}", cfg.workers)))?;
    let blocks = row_blocks(y.n_rows(), cfg.tile_rows(y.n_rows()));
    let outputs: Vec<SparseMatrix> = pool.install(|| {
        blocks
            .par_iter()
            .map(|&(s, e)| run_layers(model, 0..model.depth(), y.row_block(s, e), cfg.ymax))
            .collect()
    });
    stack(outputs, y.n_rows(), model.neurons())
}

fn stack(blocks: Vec<SparseMatrix>, n_rows: usize, n_cols: usize) -> Result<SparseMatrix> {
    if blocks.is_empty() {
        return Ok(SparseMatrix::empty(n_rows, n_cols));
    }
    SparseMatrix::vstack(&blocks)
}

/// Balanced contiguous split of `depth` layers into `stages` ranges.
pub fn layer_ranges(depth: usize, stages: usize) -> Vec<std::ops::Range<usize>> {
    let stages = stages.clamp(1, depth.max(1));
    let (q, r) = (depth / stages, depth % stages);
    let mut start = 0;
    (0..stages)
        .map(|i| {
            let len = q + usize::from(i < r);
            let range = start..start + len;
            start += len;
            range
        })
        .collect()
}

fn pipeline(model: &NetworkModel, y: &SparseMatrix, cfg: &InferenceConfig) -> Result<SparseMatrix> {
    let stages = cfg.pipeline_stages.unwrap_or(cfg.workers);
    if stages > model.depth() {
        return Err(Error::Parameter(format!(
            "{} pipeline stages exceed the {} layers of the model",
            stages,
            model.depth()
        )));
    }
    let ranges = layer_ranges(model.depth(), stages);
    let tiles = row_blocks(y.n_rows(), cfg.tile_rows(y.n_rows()));
    let ymax = cfg.ymax;

    let outputs = thread::scope(|scope| {
        let (feed_tx, mut rx) = mpsc::sync_channel::<SparseMatrix>(2);
        scope.spawn(move || {
            for &(s, e) in &tiles {
                if feed_tx.send(y.row_block(s, e)).is_err() {
                    break;
                }
            }
        });
        for range in ranges {
            let (tx, next_rx) = mpsc::sync_channel::<SparseMatrix>(2);
            let input = std::mem::replace(&mut rx, next_rx);
            scope.spawn(move || {
                for tile in input {
                    if tx
                        .send(run_layers(model, range.clone(), tile, ymax))
                        .is_err()
                    {
                        break;
                    }
                }
            });
        }
        rx.into_iter().collect::<Vec<_>>()
    });
    stack(outputs, y.n_rows(), model.neurons())
}

/// Output of a timed run.
#[derive(Clone, Debug)]
pub struct TimedRun {
    pub output: FeatureBatch,
    pub categories: CategorySet,
    pub seconds: f64,
}

/// [`infer`] followed by categorization, timed together with a monotonic
/// clock. Loading and bias setup happen before the call and are not timed.
pub fn infer_timed(
    model: &NetworkModel,
    y0: &FeatureBatch,
    cfg: &InferenceConfig,
) -> Result<TimedRun> {
    let start = Instant::now();
    let output = infer(model, y0, cfg)?;
    let categories = categorize(&output);
    let seconds = start.elapsed().as_secs_f64();
    Ok(TimedRun {
        output,
        categories,
        seconds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LayerWeights, Triple};

    fn mat(rows: usize, cols: usize, t: &[(usize, usize, f64)]) -> SparseMatrix {
        let t: Vec<_> = t.iter().map(|&(r, c, v)| Triple::new(r, c, v)).collect();
        SparseMatrix::from_triples(&t, rows, cols).unwrap()
    }

    #[test]
    fn identity_product() {
        let y = mat(1, 2, &[(1, 1, 1.0)]);
        let w = mat(2, 2, &[(1, 1, 1.0), (2, 2, 1.0)]);
        assert_eq!(spmm(&y, &w).unwrap(), y);
    }

    #[test]
    fn hand_sum() {
        let y = mat(1, 2, &[(1, 1, 1.0), (1, 2, 1.0)]);
        let w = mat(2, 2, &[(1, 1, 0.5), (1, 2, 0.5), (2, 1, 0.5), (2, 2, 0.5)]);
        assert_eq!(spmm(&y, &w).unwrap().to_dense(), vec![1.0, 1.0]);
    }

    #[test]
    fn empty_product_has_shape() {
        let z = spmm(&SparseMatrix::empty(3, 4), &mat(4, 5, &[(1, 1, 1.0)])).unwrap();
        assert_eq!((z.n_rows(), z.n_cols(), z.nnz()), (3, 5, 0));
    }

    #[test]
    fn shape_mismatch() {
        let err = spmm(&SparseMatrix::empty(1, 3), &SparseMatrix::empty(2, 2)).unwrap_err();
        assert!(matches!(err, Error::Shape(_)));
    }

    #[test]
    fn cancelling_sum_is_dropped() {
        let y = mat(1, 2, &[(1, 1, 1.0), (1, 2, 1.0)]);
        let w = mat(2, 2, &[(1, 1, 0.5), (2, 1, -0.5), (2, 2, 1.0)]);
        let z = spmm(&y, &w).unwrap();
        assert_eq!(z.nnz(), 1);
        assert_eq!(z.get(0, 1), Some(1.0));
        // the dropped position gets no bias
        let a = apply_bias_relu_clamp(&z, 0.5, 32.0);
        assert_eq!(a.get(0, 0), None);
        assert_eq!(a.get(0, 1), Some(1.5));
    }

    #[test]
    fn bias_relu_clamp_cases() {
        let z = mat(1, 3, &[(1, 1, 0.5), (1, 2, 0.2), (1, 3, 40.0)]);
        let out = apply_bias_relu_clamp(&z, -0.3, 32.0);
        assert_eq!(out.get(0, 0), Some(0.5 - 0.3));
        assert_eq!(out.get(0, 1), None);
        let out = apply_bias_relu_clamp(&z, 0.0, 32.0);
        assert_eq!(out.get(0, 2), Some(32.0));
        // exactly zero after bias is removed
        let out = apply_bias_relu_clamp(&mat(1, 1, &[(1, 1, 0.25)]), -0.25, 32.0);
        assert_eq!(out.nnz(), 0);
    }

    #[test]
    fn two_neuron_example() {
        let w = mat(2, 2, &[(1, 1, 0.5), (1, 2, 0.5), (2, 2, 1.0)]);
        let model = NetworkModel::new(
            2,
            vec![LayerWeights {
                weights: w,
                bias: -0.3,
            }],
        )
        .unwrap();
        let y0 = FeatureBatch::new(mat(1, 2, &[(1, 1, 1.0)]));
        let out = infer(&model, &y0, &InferenceConfig::serial()).unwrap();
        assert_eq!(out.matrix().to_dense(), vec![0.5 - 0.3, 0.5 - 0.3]);
    }

    #[test]
    fn fused_matches_composition() {
        let y = mat(2, 3, &[(1, 1, 1.0), (1, 3, 2.0), (2, 2, 0.75)]);
        let w = mat(
            3,
            3,
            &[
                (1, 2, 0.4),
                (2, 1, -1.0),
                (2, 3, 20.0),
                (3, 2, 0.1),
                (3, 3, 1.0),
            ],
        );
        let fused = layer_forward(&y, &w, -0.2, 10.0).unwrap();
        let split = apply_bias_relu_clamp(&spmm(&y, &w).unwrap(), -0.2, 10.0);
        assert_eq!(fused, split);
    }

    #[test]
    fn layer_partition() {
        assert_eq!(layer_ranges(10, 3), vec![0..4, 4..7, 7..10]);
        assert_eq!(layer_ranges(2, 2), vec![0..1, 1..2]);
    }

    #[test]
    fn config_validation() {
        let mut cfg = InferenceConfig::serial();
        cfg.ymax = 0.0;
        assert!(cfg.check().is_err());
        assert!(InferenceConfig::data_parallel(0).check().is_err());
        let mut cfg = InferenceConfig::pipeline(2);
        cfg.batch_tile = Some(0);
        assert!(cfg.check().is_err());
    }

    #[test]
    fn too_many_pipeline_stages() {
        let model = NetworkModel::new(
            2,
            vec![LayerWeights {
                weights: mat(2, 2, &[(1, 1, 1.0)]),
                bias: 0.0,
            }],
        )
        .unwrap();
        let y0 = FeatureBatch::new(mat(1, 2, &[(1, 1, 1.0)]));
        assert!(infer(&model, &y0, &InferenceConfig::pipeline(2)).is_err());
    }
}
