use std::io::{BufWriter, Read, Write};

use crate::error::{Error, Result};
use crate::model::{SparseMatrix, Triple};

/// Writes one `row\tcol\tvalue` line per stored entry, 1-based, in
/// canonical order. Values use the shortest text that parses back to the
/// same `f64`; integral values have no decimal point.
pub fn write_tsv(m: &SparseMatrix, sink: impl Write) -> Result<()> {
    let mut out = BufWriter::with_capacity(1 << 16, sink);
    for (r, c, v) in m.iter() {
        writeln!(out, "{}\t{}\t{}", r + 1, c + 1, v)?;
    }
    out.flush()?;
    Ok(())
}

/// Parses triples in any order.
pub fn read_tsv_triples(mut source: impl Read) -> Result<Vec<Triple>> {
    let mut buf = Vec::new();
    source.read_to_end(&mut buf)?;
    let body = buf.strip_suffix(b"\n").unwrap_or(&buf);
    if body.is_empty() {
        return Ok(Vec::new());
    }
    body.split(|&b| b == b'\n')
        .enumerate()
        .map(|(i, line)| parse_line(line, i + 1))
        .collect()
}

fn parse_line(line: &[u8], number: usize) -> Result<Triple> {
    let err = |msg: String| Error::Parse { line: number, msg };
    let line = line.strip_suffix(b"\r").unwrap_or(line);
    let text = std::str::from_utf8(line).map_err(|_| err("not valid UTF-8".into()))?;
    let mut fields = text.split('\t');
    let (Some(r), Some(c), Some(v), None) =
        (fields.next(), fields.next(), fields.next(), fields.next())
    else {
        return Err(err(format!("expected 3 tab-separated fields in {text:?}")));
    };
    let row = r
        .trim()
        .parse::<usize>()
        .map_err(|_| err(format!("bad row index {r:?}")))?;
    let col = c
        .trim()
        .parse::<usize>()
        .map_err(|_| err(format!("bad column index {c:?}")))?;
    let value = v
        .trim()
        .parse::<f64>()
        .map_err(|_| err(format!("bad value {v:?}")))?;
    Ok(Triple::new(row, col, value))
}

/// Reads a TSV triple file into an `n_rows` x `n_cols` matrix.
pub fn read_tsv(source: impl Read, n_rows: usize, n_cols: usize) -> Result<SparseMatrix> {
    let triples = read_tsv_triples(source)?;
    SparseMatrix::from_triples(&triples, n_rows, n_cols)
}
