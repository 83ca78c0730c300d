use std::fs::File;
use std::io::{self, BufReader, Read};
use std::path::Path;

use flate2::read::MultiGzDecoder;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{CsrParts, FeatureBatch, SparseMatrix};

const IDX3_MAGIC: u32 = 0x0000_0803;

/// Target edge lengths with a matching challenge network width.
pub const SUPPORTED_SIDES: [usize; 4] = [32, 64, 128, 256];

/// Square greyscale images stored back to back, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImageSet {
    pub count: usize,
    pub side: usize,
    pub pixels: Vec<u8>,
}

impl ImageSet {
    pub fn new(count: usize, side: usize, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != count * side * side {
            return Err(Error::Length(format!(
                "{} pixels for {count} images of {side}x{side}",
                pixels.len()
            )));
        }
        Ok(ImageSet {
            count,
            side,
            pixels,
        })
    }

    pub fn image(&self, i: usize) -> &[u8] {
        let len = self.side * self.side;
        &self.pixels[i * len..(i + 1) * len]
    }

    /// The first `n` images.
    pub fn take(&self, n: usize) -> ImageSet {
        let n = n.min(self.count);
        ImageSet {
            count: n,
            side: self.side,
            pixels: self.pixels[..n * self.side * self.side].to_vec(),
        }
    }
}

/// Opens a file for reading, transparently decompressing gzip.
pub fn open_input(path: &Path) -> Result<Box<dyn Read + Send>> {
    let mut file = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 2];
    let gz = {
        use io::BufRead;
        let head = file.fill_buf()?;
        if head.len() >= 2 {
            magic.copy_from_slice(&head[..2]);
        }
        magic == [0x1f, 0x8b]
    };
    if gz {
        Ok(Box::new(BufReader::new(MultiGzDecoder::new(file))))
    } else {
        Ok(Box::new(file))
    }
}

/// Parses an IDX3 unsigned-byte image file.
pub fn read_idx(mut source: impl Read) -> Result<ImageSet> {
    let mut header = [0u8; 16];
    read_exact_or(&mut source, &mut header, "IDX header")?;
    let word = |i: usize| u32::from_be_bytes(header[i * 4..i * 4 + 4].try_into().unwrap());
    let magic = word(0);
    if magic != IDX3_MAGIC {
        return Err(Error::Format(format!(
            "bad IDX magic {magic:#010x}, expected {IDX3_MAGIC:#010x}"
        )));
    }
    let (count, rows, cols) = (word(1) as usize, word(2) as usize, word(3) as usize);
    if rows != cols || rows == 0 {
        return Err(Error::Format(format!(
            "images are {rows}x{cols}, expected square"
        )));
    }
    let len = count
        .checked_mul(rows * cols)
        .ok_or_else(|| Error::Format("IDX dimensions overflow".into()))?;
    let mut pixels = Vec::new();
    source.take(len as u64).read_to_end(&mut pixels)?;
    if pixels.len() != len {
        return Err(Error::Length(format!(
            "IDX payload has {} of {} bytes",
            pixels.len(),
            len
        )));
    }
    ImageSet::new(count, rows, pixels)
}

fn read_exact_or(source: &mut impl Read, buf: &mut [u8], what: &str) -> Result<()> {
    source.read_exact(buf).map_err(|e| {
        if e.kind() == io::ErrorKind::UnexpectedEof {
            Error::Length(format!("{what} truncated"))
        } else {
            Error::Io(e)
        }
    })
}

/// Bilinear resize of one image with normalized intensities in `[0, 1]`.
/// Pixel centres are aligned (half-pixel convention) and samples beyond
/// the border repeat the edge pixel.
pub fn resize_bilinear(pixels: &[u8], side: usize, target: usize) -> Vec<f64> {
    let scale = side as f64 / target as f64;
    let taps: Vec<(usize, usize, f64)> = (0..target)
        .map(|d| {
            let src = ((d as f64 + 0.5) * scale - 0.5).clamp(0.0, (side - 1) as f64);
            let lo = src.floor() as usize;
            let hi = (lo + 1).min(side - 1);
            (lo, hi, src - lo as f64)
        })
        .collect();
    let px = |r: usize, c: usize| pixels[r * side + c] as f64 / 255.0;
    let mut out = Vec::with_capacity(target * target);
    for &(r0, r1, fr) in &taps {
        for &(c0, c1, fc) in &taps {
            let top = px(r0, c0) * (1.0 - fc) + px(r0, c1) * fc;
            let bottom = px(r1, c0) * (1.0 - fc) + px(r1, c1) * fc;
            out.push(top * (1.0 - fr) + bottom * fr);
        }
    }
    out
}

/// Resizes every image to `target_side` squared pixels, thresholds at 0.5
/// and flattens row-major, one image per row with value 1 on set pixels.
pub fn resize_threshold_flatten(images: &ImageSet, target_side: usize) -> Result<FeatureBatch> {
    if !SUPPORTED_SIDES.contains(&target_side) {
        return Err(Error::Parameter(format!(
            "target side {target_side} is not one of {SUPPORTED_SIDES:?}"
        )));
    }
    let rows: Vec<Vec<u32>> = (0..images.count)
        .into_par_iter()
        .map(|i| {
            resize_bilinear(images.image(i), images.side, target_side)
                .iter()
                .enumerate()
                .filter(|(_, &v)| v >= 0.5)
                .map(|(c, _)| c as u32)
                .collect()
        })
        .collect();
    let mut parts = CsrParts {
        n_rows: images.count,
        n_cols: target_side * target_side,
        row_offsets: Vec::with_capacity(images.count + 1),
        ..CsrParts::default()
    };
    parts.row_offsets.push(0);
    for row in rows {
        parts.col_indices.extend_from_slice(&row);
        parts.row_offsets.push(parts.col_indices.len());
    }
    parts.values = vec![1.0; parts.col_indices.len()];
    Ok(FeatureBatch::new(SparseMatrix::from_parts_unchecked(parts)))
}
