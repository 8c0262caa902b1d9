//! alist parity-check matrix files.
//!
//! Layout (whitespace-separated integers, 1-based indices):
//!
//! ```text
//! n_cols n_rows
//! max_col_weight max_row_weight
//! <n_cols column weights>
//! <n_rows row weights>
//! <n_cols lines: row indices of each column>
//! <n_rows lines: column indices of each row>
//! ```
//!
//! Readers accept both the padded variant (every index line carries
//! `max_weight` entries, zeros as filler) and the unpadded one; the writer
//! emits unpadded lines.

use super::SparseBinaryMatrix;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AlistError {
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("inconsistent alist: {0}")]
    Inconsistent(String),
}

pub fn write_alist<W: Write>(m: &SparseBinaryMatrix, mut w: W) -> io::Result<()> {
    let cols = m.col_view();
    writeln!(w, "{} {}", m.n_cols(), m.n_rows())?;
    writeln!(w, "{} {}", m.max_col_weight(), m.max_row_weight())?;
    writeln!(w, "{}", join(cols.iter().map(Vec::len)))?;
    writeln!(w, "{}", join((0..m.n_rows()).map(|r| m.row(r).len())))?;
    for col in &cols {
        writeln!(w, "{}", join(col.iter().map(|&r| r as usize + 1)))?;
    }
    for r in 0..m.n_rows() {
        writeln!(w, "{}", join(m.row(r).iter().map(|&c| c as usize + 1)))?;
    }
    Ok(())
}

pub fn write_alist_path<P: AsRef<Path>>(m: &SparseBinaryMatrix, path: P) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_alist(m, &mut w)?;
    w.flush()
}

pub fn read_alist<R: BufRead>(r: R) -> Result<SparseBinaryMatrix, AlistError> {
    let mut lines = Lines::new(r);
    let header = lines.ints(2)?;
    let (n_cols, n_rows) = (header[0], header[1]);
    let maxima = lines.ints(2)?;
    let (max_cw, max_rw) = (maxima[0], maxima[1]);
    let col_weights = lines.ints(n_cols)?;
    let row_weights = lines.ints(n_rows)?;
    if col_weights.iter().any(|&w| w > max_cw) {
        return Err(AlistError::Inconsistent(
            "column weight exceeds declared maximum".into(),
        ));
    }
    if row_weights.iter().any(|&w| w > max_rw) {
        return Err(AlistError::Inconsistent(
            "row weight exceeds declared maximum".into(),
        ));
    }

    // Column index lists define the matrix; row lists are verified against it.
    let mut triples = Vec::new();
    for (c, &w) in col_weights.iter().enumerate() {
        let idx = lines.index_line(w, max_cw, n_rows)?;
        triples.extend(idx.into_iter().map(|r| (r, c)));
    }
    let m = SparseBinaryMatrix::from_triples(n_rows, n_cols, triples)
        .map_err(|e| AlistError::Inconsistent(e.to_string()))?;
    for (r, &w) in row_weights.iter().enumerate() {
        let idx = lines.index_line(w, max_rw, n_cols)?;
        let expect: Vec<usize> = m.row(r).iter().map(|&c| c as usize).collect();
        let mut got = idx;
        got.sort_unstable();
        if got != expect {
            return Err(AlistError::Inconsistent(format!(
                "row {} index list does not match the column lists",
                r + 1
            )));
        }
    }
    Ok(m)
}

pub fn read_alist_path<P: AsRef<Path>>(path: P) -> Result<SparseBinaryMatrix, AlistError> {
    read_alist(BufReader::new(File::open(path)?))
}

fn join<I: Iterator<Item = usize>>(it: I) -> String {
    let parts: Vec<String> = it.map(|v| v.to_string()).collect();
    parts.join(" ")
}

/// Line-oriented integer reader. Index lines need line boundaries to tell
/// padded from unpadded data, so tokens are never pulled across lines there;
/// the scalar header reads are line-based too for simplicity.
struct Lines<R: BufRead> {
    inner: R,
    line_no: usize,
    buf: String,
}

impl<R: BufRead> Lines<R> {
    fn new(inner: R) -> Self {
        Self {
            inner,
            line_no: 0,
            buf: String::new(),
        }
    }

    /// Next line as integers; skips lines that are entirely blank only when
    /// `expect > 0` would otherwise be unsatisfiable (weight-0 lines are
    /// legitimately empty, so emptiness is returned as-is).
    fn raw_line(&mut self) -> Result<Vec<usize>, AlistError> {
        self.buf.clear();
        let n = self.inner.read_line(&mut self.buf)?;
        if n == 0 {
            return Err(AlistError::Parse {
                line: self.line_no + 1,
                msg: "unexpected end of file".into(),
            });
        }
        self.line_no += 1;
        self.buf
            .split_whitespace()
            .map(|tok| {
                tok.parse::<usize>().map_err(|_| AlistError::Parse {
                    line: self.line_no,
                    msg: format!("invalid integer {tok:?}"),
                })
            })
            .collect()
    }

    /// Exactly `expect` integers on one line (skipping leading blank lines).
    fn ints(&mut self, expect: usize) -> Result<Vec<usize>, AlistError> {
        loop {
            let vals = self.raw_line()?;
            if vals.is_empty() && expect > 0 {
                continue; // tolerate stray blank lines between sections
            }
            if vals.len() != expect {
                return Err(AlistError::Parse {
                    line: self.line_no,
                    msg: format!("expected {expect} integers, found {}", vals.len()),
                });
            }
            return Ok(vals);
        }
    }

    /// One index line holding `weight` 1-based indices, either exactly
    /// (unpadded) or padded with zeros to `max_weight`. Returns 0-based
    /// indices, each `< bound`.
    fn index_line(
        &mut self,
        weight: usize,
        max_weight: usize,
        bound: usize,
    ) -> Result<Vec<usize>, AlistError> {
        let vals = if weight == 0 {
            // May be an empty line (unpadded) or all zeros (padded).
            self.raw_line()?
        } else {
            let mut vals = self.raw_line()?;
            while vals.is_empty() {
                vals = self.raw_line()?; // skip blank separator lines
            }
            vals
        };
        let nonzero: Vec<usize> = vals.iter().copied().filter(|&v| v != 0).collect();
        let padded_ok = vals.len() == max_weight && nonzero.len() == weight;
        let unpadded_ok = vals.len() == weight && nonzero.len() == weight;
        if !(padded_ok || unpadded_ok) {
            return Err(AlistError::Parse {
                line: self.line_no,
                msg: format!(
                    "index line has {} entries ({} nonzero), expected weight {} (padded to {} allowed)",
                    vals.len(),
                    nonzero.len(),
                    weight,
                    max_weight
                ),
            });
        }
        nonzero
            .into_iter()
            .map(|v| {
                if v > bound {
                    Err(AlistError::Parse {
                        line: self.line_no,
                        msg: format!("index {v} out of range 1..={bound}"),
                    })
                } else {
                    Ok(v - 1)
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn sample() -> SparseBinaryMatrix {
        SparseBinaryMatrix::from_triples(
            3,
            4,
            vec![(0, 0), (0, 2), (1, 1), (1, 3), (2, 0), (2, 1), (2, 2)],
        )
        .unwrap()
    }

    #[test]
    fn round_trip_unpadded() {
        let m = sample();
        let mut buf = Vec::new();
        write_alist(&m, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        // Header is "n_cols n_rows"; this matrix is 3x4 so the file leads 4 3.
        assert!(text.starts_with("4 3\n2 3\n"));
        let back = read_alist(Cursor::new(buf)).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn reads_padded_variant() {
        // Same matrix, every index line zero-padded to the maximum weight.
        let text = "4 3\n2 3\n2 2 2 1\n2 2 3\n\
                    1 3\n2 3\n1 3\n2 0\n\
                    1 3 0\n2 4 0\n1 2 3\n";
        let m = read_alist(Cursor::new(text)).unwrap();
        assert_eq!(m, sample());
    }

    #[test]
    fn rejects_row_column_mismatch() {
        // Row list for row 1 disagrees with the column lists.
        let text = "4 3\n2 3\n2 2 2 1\n2 2 3\n\
                    1 3\n2 3\n1 3\n2\n\
                    1 3\n2 3\n1 2 3\n";
        let err = read_alist(Cursor::new(text)).unwrap_err();
        assert!(matches!(err, AlistError::Inconsistent(_)), "{err}");
    }

    #[test]
    fn rejects_out_of_range_index() {
        let text = "2 2\n1 1\n1 1\n1 1\n1\n3\n1\n2\n";
        let err = read_alist(Cursor::new(text)).unwrap_err();
        assert!(matches!(err, AlistError::Parse { .. }), "{err}");
    }

    #[test]
    fn zero_weight_lines_round_trip() {
        // Middle column and last row are empty.
        let m = SparseBinaryMatrix::from_triples(2, 3, vec![(0, 0), (0, 2)]).unwrap();
        let mut buf = Vec::new();
        write_alist(&m, &mut buf).unwrap();
        let back = read_alist(Cursor::new(buf)).unwrap();
        assert_eq!(back, m);
    }
}
