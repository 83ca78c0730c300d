//! On-disk model layout: `neuron<N>/n<N>-l<layer>.{tsv,bin}`, one file per
//! layer, so generated models and downloaded challenge models load the
//! same way.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::{read_binary, read_tsv, read_tsv_triples, write_binary, write_tsv};
use crate::error::{Error, Result};
use crate::model::{LayerWeights, NetworkModel, SparseMatrix};
use crate::radixnet::challenge_bias;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MatrixFormat {
    #[default]
    Tsv,
    Binary,
}

impl MatrixFormat {
    pub fn extension(self) -> &'static str {
        match self {
            MatrixFormat::Tsv => "tsv",
            MatrixFormat::Binary => "bin",
        }
    }

    pub fn from_path(path: &Path) -> MatrixFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("bin") => MatrixFormat::Binary,
            _ => MatrixFormat::Tsv,
        }
    }
}

pub fn model_dir(root: &Path, neurons: usize) -> PathBuf {
    root.join(format!("neuron{neurons}"))
}

pub fn layer_file_name(neurons: usize, layer: usize, format: MatrixFormat) -> String {
    format!("n{neurons}-l{layer}.{}", format.extension())
}

/// Splits `n<N>-l<layer>.<ext>` into its parts.
pub fn parse_layer_file_name(name: &str) -> Option<(usize, usize, MatrixFormat)> {
    let (stem, ext) = name.rsplit_once('.')?;
    let format = match ext {
        "tsv" => MatrixFormat::Tsv,
        "bin" => MatrixFormat::Binary,
        _ => return None,
    };
    let (n, l) = stem.strip_prefix('n')?.split_once("-l")?;
    let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
    if !digits(n) || !digits(l) {
        return None;
    }
    Some((n.parse().ok()?, l.parse().ok()?, format))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerFile {
    pub neurons: usize,
    pub layer: usize,
    pub format: MatrixFormat,
    pub path: PathBuf,
}

/// Finds layer files in `dir`, or in its single `neuron<N>` subdirectory.
/// When both encodings of a layer exist the binary one is used. Layers
/// must be numbered 1..=L without gaps.
pub fn discover_layers(dir: &Path) -> Result<Vec<LayerFile>> {
    let mut found = scan(dir)?;
    if found.is_empty() {
        let subdirs: Vec<PathBuf> = fs::read_dir(dir)?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| {
                p.is_dir()
                    && p.file_name()
                        .and_then(|n| n.to_str())
                        .is_some_and(|n| n.starts_with("neuron"))
            })
            .collect();
        if let [only] = &subdirs[..] {
            found = scan(only)?;
        }
    }
    if found.is_empty() {
        return Err(Error::Format(format!(
            "no n<N>-l<layer> files in {}",
            dir.display()
        )));
    }
    found.sort_by_key(|f| (f.layer, f.format != MatrixFormat::Binary));
    found.dedup_by_key(|f| f.layer);
    let neurons = found[0].neurons;
    if let Some(f) = found.iter().find(|f| f.neurons != neurons) {
        return Err(Error::Format(format!(
            "{} mixes {}- and {}-neuron layers",
            dir.display(),
            neurons,
            f.neurons
        )));
    }
    for (i, f) in found.iter().enumerate() {
        if f.layer != i + 1 {
            return Err(Error::Format(format!(
                "layer {} missing from {}",
                i + 1,
                dir.display()
            )));
        }
    }
    Ok(found)
}

fn scan(dir: &Path) -> Result<Vec<LayerFile>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        if let Some((neurons, layer, format)) = parse_layer_file_name(name) {
            out.push(LayerFile {
                neurons,
                layer,
                format,
                path,
            });
        }
    }
    Ok(out)
}

/// Reads a matrix file, choosing the decoder by extension. A TSV file
/// without `dims` is sized by its largest indices.
pub fn read_matrix_file(path: &Path, dims: Option<(usize, usize)>) -> Result<SparseMatrix> {
    let ctx = |e: Error| e.context(path.display().to_string());
    let reader = BufReader::with_capacity(1 << 20, File::open(path).map_err(|e| ctx(e.into()))?);
    let m = match MatrixFormat::from_path(path) {
        MatrixFormat::Binary => read_binary(reader).map_err(ctx)?,
        MatrixFormat::Tsv => match dims {
            Some((r, c)) => read_tsv(reader, r, c).map_err(ctx)?,
            None => {
                let triples = read_tsv_triples(reader).map_err(ctx)?;
                let rows = triples.iter().map(|t| t.row).max().unwrap_or(0);
                let cols = triples.iter().map(|t| t.col).max().unwrap_or(0);
                SparseMatrix::from_triples(&triples, rows, cols).map_err(ctx)?
            }
        },
    };
    if let Some((r, c)) = dims {
        if (m.n_rows(), m.n_cols()) != (r, c) {
            return Err(ctx(Error::Shape(format!(
                "matrix is {}x{}, expected {r}x{c}",
                m.n_rows(),
                m.n_cols()
            ))));
        }
    }
    Ok(m)
}

pub fn write_matrix_file(m: &SparseMatrix, path: &Path, format: MatrixFormat) -> Result<()> {
    let ctx = |e: Error| e.context(path.display().to_string());
    let file = BufWriter::with_capacity(1 << 20, File::create(path).map_err(|e| ctx(e.into()))?);
    match format {
        MatrixFormat::Tsv => write_tsv(m, file),
        MatrixFormat::Binary => write_binary(m, file),
    }
    .map_err(ctx)
}

/// Loads the first `max_layers` layers (all when `None`) of the model in
/// `dir`. Every layer gets `bias`, or the tabulated bias for its width.
pub fn load_model(
    dir: &Path,
    max_layers: Option<usize>,
    bias: Option<f64>,
) -> Result<NetworkModel> {
    let mut files = discover_layers(dir)?;
    if let Some(l) = max_layers {
        if l == 0 || l > files.len() {
            return Err(Error::Parameter(format!(
                "{} has {} layers; cannot use {}",
                dir.display(),
                files.len(),
                l
            )));
        }
        files.truncate(l);
    }
    let neurons = files[0].neurons;
    let bias = bias.or_else(|| challenge_bias(neurons)).ok_or_else(|| {
        Error::Parameter(format!(
            "no tabulated bias for {neurons} neurons; pass one explicitly"
        ))
    })?;
    let layers = files
        .par_iter()
        .map(|f| {
            read_matrix_file(&f.path, Some((neurons, neurons)))
                .map(|weights| LayerWeights { weights, bias })
        })
        .collect::<Result<Vec<_>>>()?;
    NetworkModel::new(neurons, layers)
}

/// Writes each layer of `model` under `model_dir(root, N)`.
pub fn write_model(
    model: &NetworkModel,
    root: &Path,
    format: MatrixFormat,
) -> Result<Vec<PathBuf>> {
    let dir = model_dir(root, model.neurons());
    fs::create_dir_all(&dir)?;
    model
        .layers()
        .par_iter()
        .enumerate()
        .map(|(i, layer)| {
            let path = dir.join(layer_file_name(model.neurons(), i + 1, format));
            write_matrix_file(&layer.weights, &path, format).map(|_| path)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_names() {
        assert_eq!(layer_file_name(1024, 7, MatrixFormat::Tsv), "n1024-l7.tsv");
        assert_eq!(
            parse_layer_file_name("n1024-l120.tsv"),
            Some((1024, 120, MatrixFormat::Tsv))
        );
        assert_eq!(
            parse_layer_file_name("n64-l1.bin"),
            Some((64, 1, MatrixFormat::Binary))
        );
        for bad in [
            "n1024-l.tsv",
            "x1024-l1.tsv",
            "n1024-l1.txt",
            "n-l1.tsv",
            "n10a-l1.tsv",
        ] {
            assert_eq!(parse_layer_file_name(bad), None, "{bad}");
        }
    }
}
