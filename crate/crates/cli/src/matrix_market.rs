//! MatrixMarket reading and writing for real matrices.
//!
//! Reads `array` and `coordinate` files with `general`, `symmetric` or
//! `skew-symmetric` symmetry (`integer` values are accepted as real). Writes
//! dense matrices in `array` format and sparse ones in `coordinate` format,
//! always `general`, with one-based indices and round-trip exact values.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layout {
    Array,
    Coordinate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    Skew,
}

pub fn read_matrix(path: impl AsRef<Path>) -> CliResult<DMatrix<f64>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    parse(BufReader::new(file), path)
}

/// Parses from any reader; `path` only labels error messages.
pub fn parse(reader: impl Read, path: &Path) -> CliResult<DMatrix<f64>> {
    let err = |line: usize, message: String| CliError::Parse { path: path.to_path_buf(), line, message };
    let mut lines = BufReader::new(reader).lines().enumerate().map(|(k, l)| (k + 1, l));

    let (first_no, header) = match lines.next() {
        Some((k, Ok(l))) => (k, l),
        Some((k, Err(e))) => return Err(err(k, e.to_string())),
        None => return Err(err(1, "empty file".into())),
    };
    let words: Vec<String> = header.split_whitespace().map(|w| w.to_ascii_lowercase()).collect();
    if words.len() != 5 || words[0] != "%%matrixmarket" || words[1] != "matrix" {
        return Err(err(first_no, "expected a `%%MatrixMarket matrix ...` header".into()));
    }
    let layout = match words[2].as_str() {
        "array" => Layout::Array,
        "coordinate" => Layout::Coordinate,
        other => return Err(err(first_no, format!("unsupported format `{other}`"))),
    };
    if !matches!(words[3].as_str(), "real" | "integer" | "double") {
        return Err(err(first_no, format!("unsupported field `{}`", words[3])));
    }
    let symmetry = match words[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::Skew,
        other => return Err(err(first_no, format!("unsupported symmetry `{other}`"))),
    };

    let mut data = Vec::new();
    for (k, line) in lines {
        let line = line.map_err(|e| err(k, e.to_string()))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        data.push((k, trimmed.to_string()));
    }
    let mut rows_iter = data.into_iter();
    let (size_no, size_line) = rows_iter.next().ok_or_else(|| err(first_no, "missing size line".into()))?;
    let sizes: Vec<usize> = size_line
        .split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|_| err(size_no, format!("bad size entry `{t}`"))))
        .collect::<CliResult<_>>()?;
    let number = |k: usize, t: &str| t.parse::<f64>().map_err(|_| err(k, format!("bad value `{t}`")));

    let m = match layout {
        Layout::Array => {
            let [rows, cols] = sizes[..] else {
                return Err(err(size_no, "array size line needs `rows cols`".into()));
            };
            if symmetry != Symmetry::General && rows != cols {
                return Err(err(size_no, "symmetric storage needs a square matrix".into()));
            }
            let mut values = Vec::new();
            for (k, l) in rows_iter {
                for t in l.split_whitespace() {
                    values.push((k, number(k, t)?));
                }
            }
            let mut m = DMatrix::zeros(rows, cols);
            match symmetry {
                Symmetry::General => {
                    if values.len() != rows * cols {
                        return Err(err(size_no, format!("expected {} values, found {}", rows * cols, values.len())));
                    }
                    for (idx, (_, v)) in values.into_iter().enumerate() {
                        m[(idx % rows, idx / rows)] = v;
                    }
                }
                Symmetry::Symmetric | Symmetry::Skew => {
                    // lower triangle column by column, diagonal omitted when skew
                    let skew = symmetry == Symmetry::Skew;
                    let mut slots = Vec::new();
                    for j in 0..cols {
                        for i in j + usize::from(skew)..rows {
                            slots.push((i, j));
                        }
                    }
                    if values.len() != slots.len() {
                        return Err(err(size_no, format!("expected {} values, found {}", slots.len(), values.len())));
                    }
                    for ((i, j), (_, v)) in slots.into_iter().zip(values) {
                        m[(i, j)] = v;
                        m[(j, i)] = if skew { -v } else { v };
                    }
                }
            }
            m
        }
        Layout::Coordinate => {
            let [rows, cols, nnz] = sizes[..] else {
                return Err(err(size_no, "coordinate size line needs `rows cols entries`".into()));
            };
            let mut m = DMatrix::zeros(rows, cols);
            let mut count = 0;
            for (k, l) in rows_iter {
                let t: Vec<&str> = l.split_whitespace().collect();
                if t.len() != 3 {
                    return Err(err(k, "expected `row col value`".into()));
                }
                let index = |s: &str, bound: usize| -> CliResult<usize> {
                    match s.parse::<usize>() {
                        Ok(x) if x >= 1 && x <= bound => Ok(x - 1),
                        _ => Err(err(k, format!("index `{s}` out of range 1..={bound}"))),
                    }
                };
                let (i, j, v) = (index(t[0], rows)?, index(t[1], cols)?, number(k, t[2])?);
                m[(i, j)] += v;
                match symmetry {
                    Symmetry::General => {}
                    Symmetry::Symmetric if i != j => m[(j, i)] += v,
                    Symmetry::Skew if i != j => m[(j, i)] -= v,
                    Symmetry::Skew => return Err(err(k, "skew-symmetric file stores a diagonal entry".into())),
                    Symmetry::Symmetric => {}
                }
                count += 1;
            }
            if count != nnz {
                return Err(err(size_no, format!("expected {nnz} entries, found {count}")));
            }
            m
        }
    };
    Ok(m)
}

/// Dense `array` format, column-major.
pub fn write_array(out: &mut impl Write, m: &DMatrix<f64>) -> std::io::Result<()> {
    writeln!(out, "%%MatrixMarket matrix array real general")?;
    writeln!(out, "{} {}", m.nrows(), m.ncols())?;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            writeln!(out, "{:e}", m[(i, j)])?;
        }
    }
    Ok(())
}

/// Sparse `coordinate` format listing the nonzero entries row-major.
pub fn write_coordinate(out: &mut impl Write, m: &DMatrix<f64>) -> std::io::Result<()> {
    let entries: Vec<(usize, usize, f64)> = (0..m.nrows())
        .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
        .filter(|&(i, j)| m[(i, j)] != 0.0)
        .map(|(i, j)| (i, j, m[(i, j)]))
        .collect();
    writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(out, "{} {} {}", m.nrows(), m.ncols(), entries.len())?;
    for (i, j, v) in entries {
        writeln!(out, "{} {} {:e}", i + 1, j + 1, v)?;
    }
    Ok(())
}

pub fn save(path: impl AsRef<Path>, m: &DMatrix<f64>, sparse: bool) -> CliResult<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    if sparse {
        write_coordinate(&mut buf, m)
    } else {
        write_array(&mut buf, m)
    }
    .map_err(|e| CliError::io(path, e))?;
    fs::write(path, buf).map_err(|e| CliError::io(path, e))
}
