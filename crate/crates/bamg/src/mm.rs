//! Matrix Market coordinate-format reader and writer.
//!
//! Supports `real general` and `real symmetric` coordinate files with
//! 1-based indices. Symmetric files store one triangle and are expanded to
//! the full pattern on read. Values are written with 17 significant digits,
//! so a write/read round trip reproduces every f64 exactly.

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

pub fn read_matrix_market(path: &Path) -> Result<SparseMatrix> {
    let file = File::open(path)?;
    read_matrix_market_from(BufReader::new(file))
}

pub fn read_matrix_market_from<R: BufRead>(reader: R) -> Result<SparseMatrix> {
    let mut lines = reader.lines().enumerate();

    let (line_no, header) = match lines.next() {
        Some((n, l)) => (n + 1, l?),
        None => {
            return Err(Error::Parse {
                line: 1,
                msg: "empty file".into(),
            })
        }
    };
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() < 5 || fields[0] != "%%MatrixMarket" {
        return Err(Error::Parse {
            line: line_no,
            msg: "expected %%MatrixMarket header".into(),
        });
    }
    if fields[1] != "matrix" || fields[2] != "coordinate" {
        return Err(Error::Parse {
            line: line_no,
            msg: format!("unsupported object/format '{} {}'", fields[1], fields[2]),
        });
    }
    if fields[3] != "real" {
        return Err(Error::Parse {
            line: line_no,
            msg: format!("unsupported field type '{}'", fields[3]),
        });
    }
    let symmetric = match fields[4] {
        "general" => false,
        "symmetric" => true,
        other => {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("unsupported symmetry '{other}'"),
            })
        }
    };

    // skip comments, read the size line
    let (mut n_rows, mut n_cols, mut nnz) = (0usize, 0usize, 0usize);
    let mut size_line = 0usize;
    for (n, l) in &mut lines {
        let line = l?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let parts: Vec<&str> = trimmed.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(Error::Parse {
                line: n + 1,
                msg: "size line must be 'rows cols nnz'".into(),
            });
        }
        n_rows = parts[0].parse().map_err(|_| Error::Parse {
            line: n + 1,
            msg: "cannot parse row count".into(),
        })?;
        n_cols = parts[1].parse().map_err(|_| Error::Parse {
            line: n + 1,
            msg: "cannot parse column count".into(),
        })?;
        nnz = parts[2].parse().map_err(|_| Error::Parse {
            line: n + 1,
            msg: "cannot parse nonzero count".into(),
        })?;
        size_line = n + 1;
        break;
    }
    if size_line == 0 {
        return Err(Error::Parse {
            line: line_no + 1,
            msg: "missing size line".into(),
        });
    }

    let mut triplets = Vec::with_capacity(if symmetric { 2 * nnz } else { nnz });
    let mut seen = 0usize;
    for (n, l) in &mut lines {
        let line = l?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let parts: Vec<&str> = trimmed.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(Error::Parse {
                line: n + 1,
                msg: "entry line must be 'i j value'".into(),
            });
        }
        let i: usize = parts[0].parse().map_err(|_| Error::Parse {
            line: n + 1,
            msg: "cannot parse row index".into(),
        })?;
        let j: usize = parts[1].parse().map_err(|_| Error::Parse {
            line: n + 1,
            msg: "cannot parse column index".into(),
        })?;
        let v: f64 = parts[2].parse().map_err(|_| Error::Parse {
            line: n + 1,
            msg: "cannot parse value".into(),
        })?;
        if i < 1 || i > n_rows || j < 1 || j > n_cols {
            return Err(Error::Parse {
                line: n + 1,
                msg: format!("index ({i},{j}) outside 1-based range {n_rows}x{n_cols}"),
            });
        }
        triplets.push((i - 1, j - 1, v));
        if symmetric && i != j {
            triplets.push((j - 1, i - 1, v));
        }
        seen += 1;
        if seen == nnz {
            break;
        }
    }
    if seen != nnz {
        return Err(Error::Parse {
            line: size_line,
            msg: format!("expected {nnz} entries, found {seen}"),
        });
    }
    SparseMatrix::from_triplets(n_rows, n_cols, &triplets, symmetric)
}

pub fn write_matrix_market(path: &Path, a: &SparseMatrix) -> Result<()> {
    let file = File::create(path)?;
    write_matrix_market_to(BufWriter::new(file), a)
}

pub fn write_matrix_market_to<W: Write>(mut w: W, a: &SparseMatrix) -> Result<()> {
    let symmetric = a.symmetric_hint();
    let kind = if symmetric { "symmetric" } else { "general" };
    writeln!(w, "%%MatrixMarket matrix coordinate real {kind}")?;
    let mut entries: Vec<(usize, usize, f64)> = Vec::new();
    for i in 0..a.n_rows() {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            if symmetric && j > i {
                continue; // store the lower triangle only
            }
            entries.push((i, j, v));
        }
    }
    writeln!(w, "{} {} {}", a.n_rows(), a.n_cols(), entries.len())?;
    for (i, j, v) in entries {
        writeln!(w, "{} {} {:.16e}", i + 1, j + 1, v)?;
    }
    Ok(())
}
