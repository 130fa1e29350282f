//! MatrixMarket (`array` and `coordinate`, real) and plain CSV matrix files.
//!
//! Writers emit the shortest decimal representation that round-trips, so a
//! write followed by a read reproduces every entry bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::RealMatrix;
use crate::error::{Error, Result};

pub fn read_matrix_market(path: &Path) -> Result<RealMatrix> {
    let text = fs::read_to_string(path)?;
    parse_matrix_market(&text, path)
}

/// Parses MatrixMarket text; `origin` is only used in error messages.
pub fn parse_matrix_market(text: &str, origin: &Path) -> Result<RealMatrix> {
    let err = |line: usize, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };

    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let (_, header) = lines
        .next()
        .ok_or_else(|| err(1, "empty file".into()))?;
    let fields: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if fields.len() != 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(err(1, format!("bad MatrixMarket banner: {header:?}")));
    }
    let coordinate = match fields[2].as_str() {
        "coordinate" => true,
        "array" => false,
        other => return Err(err(1, format!("unsupported storage {other:?}"))),
    };
    if fields[3] != "real" && fields[3] != "integer" && fields[3] != "double" {
        return Err(err(1, format!("unsupported field {:?}", fields[3])));
    }
    let symmetric = match fields[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(err(1, format!("unsupported symmetry {other:?}"))),
    };

    let mut data = lines.filter(|(_, l)| !l.is_empty() && !l.starts_with('%'));
    let (size_line, size) = data
        .next()
        .ok_or_else(|| err(2, "missing size line".into()))?;
    let dims = parse_numbers::<usize>(size)
        .map_err(|m| err(size_line, m))?;

    let mut out;
    if coordinate {
        let [rows, cols, nnz] = dims[..] else {
            return Err(err(size_line, "coordinate size line needs rows cols nnz".into()));
        };
        out = RealMatrix::zeros(rows, cols);
        let mut seen = 0;
        for (ln, l) in data {
            let mut it = l.split_whitespace();
            let (Some(i), Some(j), Some(v), None) = (it.next(), it.next(), it.next(), it.next())
            else {
                return Err(err(ln, format!("expected `row col value`, got {l:?}")));
            };
            let i: usize = i.parse().map_err(|_| err(ln, format!("bad row index {i:?}")))?;
            let j: usize = j.parse().map_err(|_| err(ln, format!("bad column index {j:?}")))?;
            let v = parse_value(v).map_err(|m| err(ln, m))?;
            if i == 0 || j == 0 || i > rows || j > cols {
                return Err(err(ln, format!("index ({i}, {j}) outside {rows}x{cols}")));
            }
            out[(i - 1, j - 1)] += v;
            if symmetric && i != j {
                out[(j - 1, i - 1)] += v;
            }
            seen += 1;
        }
        if seen != nnz {
            return Err(err(size_line, format!("declared {nnz} entries, found {seen}")));
        }
    } else {
        let [rows, cols] = dims[..] else {
            return Err(err(size_line, "array size line needs rows cols".into()));
        };
        out = RealMatrix::zeros(rows, cols);
        // Column-major; symmetric arrays store the lower triangle only.
        let slots: Vec<(usize, usize)> = (0..cols)
            .flat_map(|j| {
                let start = if symmetric { j } else { 0 };
                (start..rows).map(move |i| (i, j))
            })
            .collect();
        let mut k = 0;
        for (ln, l) in data {
            for tok in l.split_whitespace() {
                let Some(&(i, j)) = slots.get(k) else {
                    return Err(err(ln, "more values than the declared size".into()));
                };
                let v = parse_value(tok).map_err(|m| err(ln, m))?;
                out[(i, j)] = v;
                if symmetric {
                    out[(j, i)] = v;
                }
                k += 1;
            }
        }
        if k != slots.len() {
            return Err(err(size_line, format!("declared {} values, found {k}", slots.len())));
        }
    }
    Ok(out)
}

/// Writes a dense `array real general` MatrixMarket file.
pub fn write_matrix_market(path: &Path, m: &RealMatrix) -> Result<()> {
    fs::write(path, format_matrix_market(m))?;
    Ok(())
}

pub fn format_matrix_market(m: &RealMatrix) -> String {
    let mut s = String::with_capacity(24 * m.len() + 64);
    s.push_str("%%MatrixMarket matrix array real general\n");
    let _ = writeln!(s, "{} {}", m.nrows(), m.ncols());
    for v in m.iter() {
        let _ = writeln!(s, "{v:?}");
    }
    s
}

pub fn read_csv(path: &Path) -> Result<RealMatrix> {
    let text = fs::read_to_string(path)?;
    parse_csv(&text, path)
}

/// Rows of comma-separated decimals; blank lines are skipped.
pub fn parse_csv(text: &str, origin: &Path) -> Result<RealMatrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|t| parse_value(t.trim()))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|message| Error::Parse {
                path: origin.to_path_buf(),
                line: i + 1,
                message,
            })?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse {
                    path: origin.to_path_buf(),
                    line: i + 1,
                    message: format!("row has {} fields, expected {}", row.len(), first.len()),
                });
            }
        }
        rows.push(row);
    }
    let ncols = rows.first().map_or(0, Vec::len);
    Ok(RealMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

pub fn write_csv(path: &Path, m: &RealMatrix) -> Result<()> {
    let mut s = String::new();
    for row in m.row_iter() {
        let fields: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        s.push_str(&fields.join(","));
        s.push('\n');
    }
    fs::write(path, s)?;
    Ok(())
}

fn parse_value(tok: &str) -> std::result::Result<f64, String> {
    let v: f64 = tok
        .parse()
        .map_err(|_| format!("cannot parse {tok:?} as a real number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("non-finite value {tok:?}"))
    }
}

fn parse_numbers<T: std::str::FromStr>(line: &str) -> std::result::Result<Vec<T>, String> {
    line.split_whitespace()
        .map(|t| t.parse().map_err(|_| format!("cannot parse {t:?} in size line")))
        .collect()
}
