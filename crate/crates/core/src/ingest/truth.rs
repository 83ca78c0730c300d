use std::io::{BufRead, BufReader, BufWriter, Read, Write};

use crate::error::{Error, Result};
use crate::model::CategorySet;

/// One ascending 1-based image index per line.
pub fn write_truth(categories: &CategorySet, sink: impl Write) -> Result<()> {
    let mut out = BufWriter::new(sink);
    for i in categories.as_slice() {
        writeln!(out, "{i}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_truth(source: impl Read) -> Result<CategorySet> {
    let mut indices: Vec<usize> = Vec::new();
    for (n, line) in BufReader::new(source).lines().enumerate() {
        let line = line?;
        let number = n + 1;
        let text = line.trim_end_matches('\r').trim();
        let index = text.parse::<usize>().map_err(|_| Error::Parse {
            line: number,
            msg: format!("expected an image index, found {text:?}"),
        })?;
        let problem = match indices.last() {
            _ if index == 0 => Some("index 0 (indices are 1-based)".to_string()),
            Some(&prev) if prev == index => Some(format!("duplicate index {index}")),
            Some(&prev) if prev > index => {
                Some(format!("index {index} after {prev} is not ascending"))
            }
            _ => None,
        };
        if let Some(msg) = problem {
            return Err(Error::Parse { line: number, msg });
        }
        indices.push(index);
    }
    CategorySet::from_sorted(indices)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_one_per_line() {
        let mut out = Vec::new();
        write_truth(&CategorySet::from_sorted(vec![1, 5, 9]).unwrap(), &mut out).unwrap();
        assert_eq!(out, b"1\n5\n9\n");
        assert_eq!(read_truth(&out[..]).unwrap().as_slice(), &[1, 5, 9]);
    }

    #[test]
    fn empty_set() {
        let mut out = Vec::new();
        write_truth(&CategorySet::default(), &mut out).unwrap();
        assert!(out.is_empty());
        assert!(read_truth(&b""[..]).unwrap().is_empty());
    }

    #[test]
    fn rejects_bad_lines() {
        let err = read_truth(&b"3\n3\n"[..]).unwrap_err();
        assert!(
            matches!(&err, Error::Parse { line: 2, msg } if msg.contains("duplicate")),
            "{err}"
        );
        let err = read_truth(&b"4\n2\n"[..]).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = read_truth(&b"1\nx\n"[..]).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(read_truth(&b"0\n"[..]).is_err());
    }
}
