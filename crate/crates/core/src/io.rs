//! MatrixMarket matrices and one-value-per-line vectors.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layout {
    Coordinate,
    Array,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
}

fn parse_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Parse(format!("line {line}: {msg}"))
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    tok.parse::<f64>().map_err(|_| parse_err(line, format!("bad number {tok:?}")))
}

fn parse_usize(tok: &str, line: usize) -> Result<usize> {
    tok.parse::<usize>().map_err(|_| parse_err(line, format!("bad integer {tok:?}")))
}

/// Parses a real or integer MatrixMarket matrix (coordinate or array, general or symmetric).
pub fn parse_matrix_market(text: &str) -> Result<DenseMatrix> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| Error::Parse("empty MatrixMarket input".into()))?;
    let fields: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if fields.len() != 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(parse_err(1, "expected '%%MatrixMarket matrix <format> <field> <symmetry>'"));
    }
    let layout = match fields[2].as_str() {
        "coordinate" => Layout::Coordinate,
        "array" => Layout::Array,
        other => return Err(parse_err(1, format!("unsupported format {other}"))),
    };
    if !matches!(fields[3].as_str(), "real" | "integer" | "double") {
        return Err(parse_err(1, format!("unsupported field {}", fields[3])));
    }
    let symmetry = match fields[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        other => return Err(parse_err(1, format!("unsupported symmetry {other}"))),
    };

    let mut body = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (size_line, size) = body.next().ok_or_else(|| Error::Parse("missing size line".into()))?;
    let dims: Vec<usize> = size.split_whitespace().map(|t| parse_usize(t, size_line)).collect::<Result<_>>()?;
    let (rows, cols) = match (layout, dims.as_slice()) {
        (Layout::Coordinate, [r, c, _]) | (Layout::Array, [r, c]) => (*r, *c),
        _ => return Err(parse_err(size_line, "malformed size line")),
    };
    if symmetry == Symmetry::Symmetric && rows != cols {
        return Err(parse_err(size_line, "symmetric matrix must be square"));
    }
    if rows == 0 || cols == 0 {
        return Err(Error::BadDimensions(format!("{rows}x{cols}")));
    }
    let mut data = vec![0.0; rows * cols];

    match layout {
        Layout::Coordinate => {
            let nnz = dims[2];
            let mut seen = 0;
            for (ln, line) in body {
                let toks: Vec<&str> = line.split_whitespace().collect();
                if toks.len() != 3 {
                    return Err(parse_err(ln, "expected 'row col value'"));
                }
                let (i, j) = (parse_usize(toks[0], ln)?, parse_usize(toks[1], ln)?);
                if i == 0 || j == 0 || i > rows || j > cols {
                    return Err(parse_err(ln, format!("entry ({i}, {j}) outside {rows}x{cols}")));
                }
                let v = parse_f64(toks[2], ln)?;
                data[(i - 1) * cols + (j - 1)] += v;
                if symmetry == Symmetry::Symmetric && i != j {
                    data[(j - 1) * cols + (i - 1)] += v;
                }
                seen += 1;
            }
            if seen != nnz {
                return Err(Error::Parse(format!("expected {nnz} entries, found {seen}")));
            }
        }
        Layout::Array => {
            // column-major; symmetric stores the lower triangle only
            let positions: Vec<(usize, usize)> = match symmetry {
                Symmetry::General => (0..cols).flat_map(|j| (0..rows).map(move |i| (i, j))).collect(),
                Symmetry::Symmetric => (0..cols).flat_map(|j| (j..rows).map(move |i| (i, j))).collect(),
            };
            let mut values = Vec::with_capacity(positions.len());
            for (ln, line) in body {
                for tok in line.split_whitespace() {
                    values.push(parse_f64(tok, ln)?);
                }
            }
            if values.len() != positions.len() {
                return Err(Error::Parse(format!("expected {} values, found {}", positions.len(), values.len())));
            }
            for ((i, j), v) in positions.into_iter().zip(values) {
                data[i * cols + j] = v;
                if symmetry == Symmetry::Symmetric {
                    data[j * cols + i] = v;
                }
            }
        }
    }
    DenseMatrix::new(rows, cols, data)
}

/// Array-format, column-major, shortest round-trip decimal values.
pub fn format_matrix_market(a: &DenseMatrix) -> String {
    let mut out = String::from("%%MatrixMarket matrix array real general\n");
    writeln!(out, "{} {}", a.rows(), a.cols()).unwrap();
    for j in 0..a.cols() {
        for i in 0..a.rows() {
            writeln!(out, "{:e}", a.get(i, j)).unwrap();
        }
    }
    out
}

pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    parse_matrix_market(&fs::read_to_string(path)?)
}

pub fn write_matrix_market(path: impl AsRef<Path>, a: &DenseMatrix) -> Result<()> {
    Ok(fs::write(path, format_matrix_market(a))?)
}

/// One value per line; blank lines and `#`/`%` comments are ignored.
pub fn parse_vector(text: &str) -> Result<Vec<f64>> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#') && !l.starts_with('%'))
        .map(|(ln, l)| {
            let v = parse_f64(l, ln)?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(parse_err(ln, "non-finite value"))
            }
        })
        .collect()
}

pub fn format_vector(v: &[f64]) -> String {
    let mut out = String::new();
    for x in v {
        writeln!(out, "{x:e}").unwrap();
    }
    out
}

pub fn read_vector(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    parse_vector(&fs::read_to_string(path)?)
}

pub fn write_vector(path: impl AsRef<Path>, v: &[f64]) -> Result<()> {
    Ok(fs::write(path, format_vector(v))?)
}
