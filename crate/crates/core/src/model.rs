//! Sparse matrix and network data model.
//!
//! Everything in memory uses 0-based indices. Triples carry the 1-based
//! coordinates used by every on-disk format; the conversion happens in
//! [`SparseMatrix::from_triples`] and [`SparseMatrix::to_triples`] only.

use std::fmt;

use crate::error::{Error, Result};

/// A single non-zero entry in 1-based coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Triple {
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

impl Triple {
    pub fn new(row: usize, col: usize, value: f64) -> Self {
        Triple { row, col, value }
    }
}

/// Raw compressed-sparse-row arrays, not yet checked.
///
/// This is the form binary readers and other low-level producers hand over
/// before [`SparseMatrix::from_parts`] validates it.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CsrParts {
    pub n_rows: usize,
    pub n_cols: usize,
    pub row_offsets: Vec<usize>,
    pub col_indices: Vec<u32>,
    pub values: Vec<f64>,
}

/// First invariant violation found by [`validate`].
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    OffsetsLength {
        expected: usize,
        found: usize,
    },
    FirstOffset(usize),
    NonMonotone {
        row: usize,
    },
    NnzMismatch {
        offsets: usize,
        indices: usize,
        values: usize,
    },
    ColumnOutOfRange {
        row: usize,
        col: usize,
    },
    ColumnOrder {
        row: usize,
        col: usize,
    },
    NonFinite {
        row: usize,
        col: usize,
    },
    ExplicitZero {
        row: usize,
        col: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::OffsetsLength { expected, found } => {
                write!(f, "row_offsets has length {found}, expected {expected}")
            }
            Violation::FirstOffset(v) => write!(f, "row_offsets[0] is {v}, expected 0"),
            Violation::NonMonotone { row } => write!(f, "row_offsets non-monotone at row {row}"),
            Violation::NnzMismatch {
                offsets,
                indices,
                values,
            } => write!(
                f,
                "nnz mismatch: row_offsets ends at {offsets}, {indices} column indices, {values} values"
            ),
            Violation::ColumnOutOfRange { row, col } => {
                write!(f, "column index out of range at ({row},{col})")
            }
            Violation::ColumnOrder { row, col } => {
                write!(f, "columns not strictly increasing at ({row},{col})")
            }
            Violation::NonFinite { row, col } => write!(f, "non-finite value at ({row},{col})"),
            Violation::ExplicitZero { row, col } => write!(f, "explicit zero at ({row},{col})"),
        }
    }
}

/// Checks every canonical-form invariant and reports the first violation.
/// Locations are 0-based.
pub fn validate(parts: &CsrParts) -> Result<(), Violation> {
    let expected = parts.n_rows + 1;
    if parts.row_offsets.len() != expected {
        return Err(Violation::OffsetsLength {
            expected,
            found: parts.row_offsets.len(),
        });
    }
    if parts.row_offsets[0] != 0 {
        return Err(Violation::FirstOffset(parts.row_offsets[0]));
    }
    for row in 0..parts.n_rows {
        if parts.row_offsets[row + 1] < parts.row_offsets[row] {
            return Err(Violation::NonMonotone { row });
        }
    }
    let nnz = parts.row_offsets[parts.n_rows];
    if parts.col_indices.len() != nnz || parts.values.len() != nnz {
        return Err(Violation::NnzMismatch {
            offsets: nnz,
            indices: parts.col_indices.len(),
            values: parts.values.len(),
        });
    }
    for row in 0..parts.n_rows {
        let range = parts.row_offsets[row]..parts.row_offsets[row + 1];
        let mut prev: Option<u32> = None;
        for (&c, &v) in parts.col_indices[range.clone()]
            .iter()
            .zip(&parts.values[range])
        {
            let col = c as usize;
            if col >= parts.n_cols {
                return Err(Violation::ColumnOutOfRange { row, col });
            }
            if prev.is_some_and(|p| p >= c) {
                return Err(Violation::ColumnOrder { row, col });
            }
            if !v.is_finite() {
                return Err(Violation::NonFinite { row, col });
            }
            if v == 0.0 {
                return Err(Violation::ExplicitZero { row, col });
            }
            prev = Some(c);
        }
    }
    Ok(())
}

/// Canonical compressed-sparse-row matrix of `f64`.
///
/// Columns within a row are strictly increasing, every value is finite and
/// non-zero. Instances are immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<u32>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// An `n_rows` x `n_cols` matrix with no stored entries.
    pub fn empty(n_rows: usize, n_cols: usize) -> Self {
        SparseMatrix {
            n_rows,
            n_cols,
            row_offsets: vec![0; n_rows + 1],
            col_indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn from_parts(parts: CsrParts) -> Result<Self> {
        check_dims(parts.n_rows, parts.n_cols)?;
        validate(&parts).map_err(|v| Error::Invalid(v.to_string()))?;
        Ok(Self::from_parts_unchecked(parts))
    }

    /// Callers guarantee `parts` satisfies [`validate`].
    pub(crate) fn from_parts_unchecked(parts: CsrParts) -> Self {
        debug_assert_eq!(validate(&parts), Ok(()));
        SparseMatrix {
            n_rows: parts.n_rows,
            n_cols: parts.n_cols,
            row_offsets: parts.row_offsets,
            col_indices: parts.col_indices,
            values: parts.values,
        }
    }

    pub fn into_parts(self) -> CsrParts {
        CsrParts {
            n_rows: self.n_rows,
            n_cols: self.n_cols,
            row_offsets: self.row_offsets,
            col_indices: self.col_indices,
            values: self.values,
        }
    }

    /// Builds a canonical matrix from 1-based triples in any order.
    pub fn from_triples(triples: &[Triple], n_rows: usize, n_cols: usize) -> Result<Self> {
        check_dims(n_rows, n_cols)?;
        for t in triples {
            if t.row == 0 || t.col == 0 || t.row > n_rows || t.col > n_cols {
                return Err(Error::Bounds {
                    row: t.row,
                    col: t.col,
                    n_rows,
                    n_cols,
                });
            }
            if !t.value.is_finite() || t.value == 0.0 {
                return Err(Error::Value {
                    row: t.row,
                    col: t.col,
                    value: t.value,
                });
            }
        }
        let coords = triples.iter().map(|t| (t.row - 1, (t.col - 1) as u32));
        let values = triples.iter().map(|t| t.value);
        Self::from_coo(coords, values, triples.len(), n_rows, n_cols).map_err(|(r, c)| {
            Error::Duplicate {
                row: r + 1,
                col: c + 1,
            }
        })
    }

    /// Counting-sort assembly from 0-based coordinates known to be in bounds
    /// with valid values. Returns the 0-based duplicate coordinate on failure.
    pub(crate) fn from_coo(
        coords: impl Iterator<Item = (usize, u32)> + Clone,
        values: impl Iterator<Item = f64>,
        nnz: usize,
        n_rows: usize,
        n_cols: usize,
    ) -> Result<Self, (usize, usize)> {
        let mut row_offsets = vec![0usize; n_rows + 1];
        for (r, _) in coords.clone() {
            row_offsets[r + 1] += 1;
        }
        for i in 0..n_rows {
            row_offsets[i + 1] += row_offsets[i];
        }
        let mut cursor = row_offsets.clone();
        let mut col_indices = vec![0u32; nnz];
        let mut vals = vec![0f64; nnz];
        for ((r, c), v) in coords.zip(values) {
            let slot = cursor[r];
            col_indices[slot] = c;
            vals[slot] = v;
            cursor[r] += 1;
        }
        let mut scratch: Vec<(u32, f64)> = Vec::new();
        for r in 0..n_rows {
            let range = row_offsets[r]..row_offsets[r + 1];
            let cols = &mut col_indices[range.clone()];
            if cols.windows(2).all(|w| w[0] < w[1]) {
                continue;
            }
            scratch.clear();
            scratch.extend(
                cols.iter()
                    .copied()
                    .zip(vals[range.clone()].iter().copied()),
            );
            scratch.sort_unstable_by_key(|&(c, _)| c);
            if let Some(w) = scratch.windows(2).find(|w| w[0].0 == w[1].0) {
                return Err((r, w[0].0 as usize));
            }
            for (i, &(c, v)) in scratch.iter().enumerate() {
                col_indices[range.start + i] = c;
                vals[range.start + i] = v;
            }
        }
        Ok(Self::from_parts_unchecked(CsrParts {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values: vals,
        }))
    }

    /// 1-based triples in row-major, column-ascending order.
    pub fn to_triples(&self) -> Vec<Triple> {
        self.iter()
            .map(|(r, c, v)| Triple::new(r + 1, c + 1, v))
            .collect()
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[u32] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of one row.
    #[inline]
    pub fn row(&self, r: usize) -> (&[u32], &[f64]) {
        let range = self.row_offsets[r]..self.row_offsets[r + 1];
        (&self.col_indices[range.clone()], &self.values[range])
    }

    pub fn row_nnz(&self, r: usize) -> usize {
        self.row_offsets[r + 1] - self.row_offsets[r]
    }

    /// Column counts of stored entries.
    pub fn col_nnz(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_cols];
        for &c in &self.col_indices {
            counts[c as usize] += 1;
        }
        counts
    }

    /// 0-based `(row, col, value)` in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + Clone + '_ {
        (0..self.n_rows).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter()
                .zip(vals)
                .map(move |(&c, &v)| (r, c as usize, v))
        })
    }

    pub fn get(&self, r: usize, c: usize) -> Option<f64> {
        let (cols, vals) = self.row(r);
        cols.binary_search(&(c as u32)).ok().map(|i| vals[i])
    }

    /// Copy of rows `start..end`.
    pub fn row_block(&self, start: usize, end: usize) -> SparseMatrix {
        assert!(start <= end && end <= self.n_rows, "row block out of range");
        let lo = self.row_offsets[start];
        let hi = self.row_offsets[end];
        SparseMatrix {
            n_rows: end - start,
            n_cols: self.n_cols,
            row_offsets: self.row_offsets[start..=end]
                .iter()
                .map(|o| o - lo)
                .collect(),
            col_indices: self.col_indices[lo..hi].to_vec(),
            values: self.values[lo..hi].to_vec(),
        }
    }

    /// Stacks row blocks that share a column count.
    pub fn vstack(blocks: &[SparseMatrix]) -> Result<SparseMatrix> {
        let n_cols = match blocks.first() {
            Some(b) => b.n_cols,
            None => return Ok(SparseMatrix::empty(0, 0)),
        };
        if let Some(b) = blocks.iter().find(|b| b.n_cols != n_cols) {
            return Err(Error::Shape(format!(
                "cannot stack blocks with {} and {} columns",
                n_cols, b.n_cols
            )));
        }
        let n_rows = blocks.iter().map(|b| b.n_rows).sum();
        let nnz = blocks.iter().map(|b| b.nnz()).sum();
        let mut row_offsets = Vec::with_capacity(n_rows + 1);
        let mut col_indices = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        row_offsets.push(0);
        for b in blocks {
            let base = col_indices.len();
            row_offsets.extend(b.row_offsets[1..].iter().map(|o| o + base));
            col_indices.extend_from_slice(&b.col_indices);
            values.extend_from_slice(&b.values);
        }
        Ok(SparseMatrix {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.n_rows * self.n_cols];
        for (r, c, v) in self.iter() {
            dense[r * self.n_cols + c] = v;
        }
        dense
    }

    /// Builds from a row-major dense array, dropping zeros.
    pub fn from_dense(dense: &[f64], n_rows: usize, n_cols: usize) -> Result<Self> {
        check_dims(n_rows, n_cols)?;
        if dense.len() != n_rows * n_cols {
            return Err(Error::Shape(format!(
                "dense buffer has {} entries, expected {}x{}",
                dense.len(),
                n_rows,
                n_cols
            )));
        }
        let mut parts = CsrParts {
            n_rows,
            n_cols,
            row_offsets: Vec::with_capacity(n_rows + 1),
            ..CsrParts::default()
        };
        parts.row_offsets.push(0);
        for r in 0..n_rows {
            for (c, &v) in dense[r * n_cols..(r + 1) * n_cols].iter().enumerate() {
                if v != 0.0 {
                    parts.col_indices.push(c as u32);
                    parts.values.push(v);
                }
            }
            parts.row_offsets.push(parts.col_indices.len());
        }
        Self::from_parts(parts)
    }
}

fn check_dims(n_rows: usize, n_cols: usize) -> Result<()> {
    if n_cols > u32::MAX as usize {
        return Err(Error::Capacity(format!(
            "{n_rows}x{n_cols} exceeds the 32-bit column index range"
        )));
    }
    Ok(())
}

/// One network layer: an N x N weight matrix and a scalar bias.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerWeights {
    pub weights: SparseMatrix,
    pub bias: f64,
}

/// An ordered stack of square sparse layers.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkModel {
    neurons: usize,
    layers: Vec<LayerWeights>,
}

impl NetworkModel {
    pub fn new(neurons: usize, layers: Vec<LayerWeights>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Parameter(
                "a network needs at least one layer".into(),
            ));
        }
        for (i, layer) in layers.iter().enumerate() {
            let w = &layer.weights;
            if w.n_rows() != neurons || w.n_cols() != neurons {
                return Err(Error::Shape(format!(
                    "layer {} is {}x{}, expected {}x{}",
                    i + 1,
                    w.n_rows(),
                    w.n_cols(),
                    neurons,
                    neurons
                )));
            }
            if !layer.bias.is_finite() {
                return Err(Error::Parameter(format!(
                    "layer {} bias {} is not finite",
                    i + 1,
                    layer.bias
                )));
            }
        }
        Ok(NetworkModel { neurons, layers })
    }

    pub fn neurons(&self) -> usize {
        self.neurons
    }

    pub fn layers(&self) -> &[LayerWeights] {
        &self.layers
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// Total stored weights over all layers.
    pub fn connections(&self) -> u64 {
        self.layers.iter().map(|l| l.weights.nnz() as u64).sum()
    }

    /// Replaces every layer bias.
    pub fn with_bias(mut self, bias: f64) -> Self {
        for layer in &mut self.layers {
            layer.bias = bias;
        }
        self
    }

    /// The first `depth` layers.
    pub fn truncated(&self, depth: usize) -> Result<NetworkModel> {
        if depth == 0 || depth > self.layers.len() {
            return Err(Error::Parameter(format!(
                "cannot take {} layers of a {}-layer model",
                depth,
                self.layers.len()
            )));
        }
        NetworkModel::new(self.neurons, self.layers[..depth].to_vec())
    }
}

/// Sparse batch of feature vectors, one image per row.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureBatch(pub SparseMatrix);

impl FeatureBatch {
    pub fn new(data: SparseMatrix) -> Self {
        FeatureBatch(data)
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> SparseMatrix {
        self.0
    }

    pub fn n_images(&self) -> usize {
        self.0.n_rows()
    }

    pub fn n_features(&self) -> usize {
        self.0.n_cols()
    }

    /// True when every stored value is exactly 1.
    pub fn is_binary(&self) -> bool {
        self.0.values().iter().all(|&v| v == 1.0)
    }

    /// The first `n` images.
    pub fn head(&self, n: usize) -> FeatureBatch {
        FeatureBatch(self.0.row_block(0, n.min(self.n_images())))
    }
}

/// Sorted, duplicate-free set of 1-based image indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct CategorySet(Vec<usize>);

impl CategorySet {
    /// Accepts indices that are already strictly ascending and 1-based.
    pub fn from_sorted(indices: Vec<usize>) -> Result<Self> {
        if let Some(&0) = indices.first() {
            return Err(Error::Format(
                "category indices are 1-based; found 0".into(),
            ));
        }
        if let Some(w) = indices.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::Format(if w[0] == w[1] {
                format!("duplicate category {}", w[0])
            } else {
                format!("categories not ascending: {} before {}", w[0], w[1])
            }));
        }
        Ok(CategorySet(indices))
    }

    /// Sorts and deduplicates.
    pub fn from_unsorted(mut indices: Vec<usize>) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        Self::from_sorted(indices)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.0.binary_search(&index).is_ok()
    }

    /// Elements of `self` not in `other`.
    pub fn difference(&self, other: &CategorySet) -> CategorySet {
        CategorySet(
            self.0
                .iter()
                .copied()
                .filter(|&i| !other.contains(i))
                .collect(),
        )
    }
}
