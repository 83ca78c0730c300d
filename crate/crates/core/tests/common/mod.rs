#![allow(dead_code)]

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sdnn::model::{CsrParts, LayerWeights, NetworkModel, SparseMatrix};
use sdnn::FeatureBatch;

pub fn mnist_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/mnist-10k-images-idx3-ubyte.gz")
}

/// Random canonical matrix; each entry present with probability `density`,
/// values drawn by `value`.
pub fn random_matrix(
    rng: &mut ChaCha8Rng,
    rows: usize,
    cols: usize,
    density: f64,
    mut value: impl FnMut(&mut ChaCha8Rng) -> f64,
) -> SparseMatrix {
    let mut parts = CsrParts {
        n_rows: rows,
        n_cols: cols,
        row_offsets: vec![0],
        ..Default::default()
    };
    for _ in 0..rows {
        for c in 0..cols {
            if rng.gen_bool(density) {
                let v = value(rng);
                if v != 0.0 {
                    parts.col_indices.push(c as u32);
                    parts.values.push(v);
                }
            }
        }
        parts.row_offsets.push(parts.col_indices.len());
    }
    SparseMatrix::from_parts(parts).unwrap()
}

/// A small network with heterogeneous weights and biases, plus an input
/// batch that mixes binary and real-valued rows and leaves some rows empty.
pub fn random_instance(seed: u64) -> (NetworkModel, FeatureBatch) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=64);
    let depth = rng.gen_range(1..=8);
    let batch = rng.gen_range(1..=100);
    let density = rng.gen_range(0.05..0.5);
    let layers = (0..depth)
        .map(|_| LayerWeights {
            weights: random_matrix(&mut rng, n, n, density, |r| {
                // occasional values that make pre-activations exceed the clamp
                if r.gen_bool(0.05) {
                    r.gen_range(10.0..40.0)
                } else {
                    r.gen_range(-1.0..1.5)
                }
            }),
            bias: rng.gen_range(-0.6..0.3),
        })
        .collect();
    let binary = rng.gen_bool(0.5);
    let density = rng.gen_range(0.0..0.6);
    let y0 = random_matrix(&mut rng, batch, n, density, |r| {
        if binary {
            1.0
        } else {
            r.gen_range(0.01..4.0)
        }
    });
    (NetworkModel::new(n, layers).unwrap(), FeatureBatch::new(y0))
}

/// Dense integer product of 0/1 stage matrices, entry by entry.
pub fn path_counts(stages: &[SparseMatrix]) -> Vec<u64> {
    let n = stages[0].n_rows();
    let mut acc: Vec<u64> = (0..n * n).map(|i| u64::from(i / n == i % n)).collect();
    for s in stages {
        let mut next = vec![0u64; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = acc[i * n + k];
                if a == 0 {
                    continue;
                }
                let (cols, vals) = s.row(k);
                for (&j, &v) in cols.iter().zip(vals) {
                    next[i * n + j as usize] += a * v as u64;
                }
            }
        }
        acc = next;
    }
    acc
}
