//! Matrix Market import/export for [`DenseMatrix`] and [`Vector`].
//!
//! The writer emits the `array real general` format (column-major entry
//! order, as the format prescribes). The reader additionally accepts
//! `coordinate real general` and `coordinate real symmetric` files, densified
//! on load. Pattern, integer, and complex fields are rejected with a clear
//! error instead of being guessed at.

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, Vector};
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

pub fn write_matrix(path: &Path, a: &DenseMatrix) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    write_matrix_to(&mut f, a)
}

pub fn write_matrix_to<W: Write>(w: &mut W, a: &DenseMatrix) -> Result<()> {
    writeln!(w, "%%MatrixMarket matrix array real general")?;
    writeln!(w, "{} {}", a.nrows(), a.ncols())?;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            writeln!(w, "{:e}", a.get(i, j))?;
        }
    }
    Ok(())
}

/// A vector is stored as an n-by-1 array.
pub fn write_vector(path: &Path, v: &Vector) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "%%MatrixMarket matrix array real general")?;
    writeln!(f, "{} 1", v.len())?;
    for x in v.iter() {
        writeln!(f, "{x:e}")?;
    }
    Ok(())
}

pub fn read_matrix(path: &Path) -> Result<DenseMatrix> {
    let f = std::fs::File::open(path)?;
    read_matrix_from(BufReader::new(f))
}

pub fn read_vector(path: &Path) -> Result<Vector> {
    let a = read_matrix(path)?;
    if a.ncols() != 1 {
        return Err(Error::MtxParse {
            line: 0,
            reason: format!("expected a single-column vector, found {} columns", a.ncols()),
        });
    }
    Vector::new(a.column(0))
}

struct Header {
    coordinate: bool,
    symmetric: bool,
}

fn parse_header(line: &str) -> Result<Header> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    let err = |reason: String| Error::MtxParse { line: 1, reason };
    if fields.len() < 4 || !fields[0].eq_ignore_ascii_case("%%MatrixMarket") {
        return Err(err("missing %%MatrixMarket header".into()));
    }
    if !fields[1].eq_ignore_ascii_case("matrix") {
        return Err(err(format!("unsupported object '{}'", fields[1])));
    }
    let coordinate = match fields[2].to_ascii_lowercase().as_str() {
        "coordinate" => true,
        "array" => false,
        other => return Err(err(format!("unsupported format '{other}'"))),
    };
    let field = fields.get(3).copied().unwrap_or("");
    if !field.eq_ignore_ascii_case("real") {
        return Err(err(format!("unsupported field '{field}' (only real is supported)")));
    }
    let symmetry = fields.get(4).copied().unwrap_or("general");
    let symmetric = match symmetry.to_ascii_lowercase().as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(err(format!("unsupported symmetry '{other}'"))),
    };
    Ok(Header { coordinate, symmetric })
}

pub fn read_matrix_from<R: Read>(r: BufReader<R>) -> Result<DenseMatrix> {
    let mut lines = r.lines().enumerate();
    let (_, first) = lines
        .next()
        .ok_or(Error::MtxParse { line: 1, reason: "empty file".into() })?;
    let header = parse_header(&first?)?;

    let mut size_line = None;
    let mut size_lineno = 0;
    for (idx, line) in &mut lines {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        size_line = Some(trimmed.to_string());
        size_lineno = idx + 1;
        break;
    }
    let size_line = size_line.ok_or(Error::MtxParse {
        line: size_lineno,
        reason: "missing size line".into(),
    })?;
    let dims: Vec<usize> = size_line
        .split_whitespace()
        .map(|t| {
            t.parse::<usize>().map_err(|_| Error::MtxParse {
                line: size_lineno,
                reason: format!("bad size token '{t}'"),
            })
        })
        .collect::<Result<_>>()?;

    let parse_f64 = |tok: &str, lineno: usize| -> Result<f64> {
        tok.parse::<f64>().map_err(|_| Error::MtxParse {
            line: lineno,
            reason: format!("bad numeric token '{tok}'"),
        })
    };

    if header.coordinate {
        if dims.len() != 3 {
            return Err(Error::MtxParse {
                line: size_lineno,
                reason: "coordinate size line must be 'rows cols nnz'".into(),
            });
        }
        let (m, n, nnz) = (dims[0], dims[1], dims[2]);
        let mut a = DenseMatrix::zeros(m, n);
        let mut seen = 0usize;
        for (idx, line) in &mut lines {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('%') {
                continue;
            }
            let lineno = idx + 1;
            let toks: Vec<&str> = trimmed.split_whitespace().collect();
            if toks.len() != 3 {
                return Err(Error::MtxParse {
                    line: lineno,
                    reason: format!("expected 'i j value', got {} tokens", toks.len()),
                });
            }
            let i: usize = toks[0].parse().map_err(|_| Error::MtxParse {
                line: lineno,
                reason: format!("bad row index '{}'", toks[0]),
            })?;
            let j: usize = toks[1].parse().map_err(|_| Error::MtxParse {
                line: lineno,
                reason: format!("bad column index '{}'", toks[1]),
            })?;
            if i == 0 || j == 0 || i > m || j > n {
                return Err(Error::MtxParse {
                    line: lineno,
                    reason: format!("index ({i}, {j}) outside {m} x {n} (indices are 1-based)"),
                });
            }
            let v = parse_f64(toks[2], lineno)?;
            a.set(i - 1, j - 1, v);
            if header.symmetric && i != j {
                a.set(j - 1, i - 1, v);
            }
            seen += 1;
        }
        if seen != nnz {
            return Err(Error::MtxParse {
                line: size_lineno,
                reason: format!("size line promises {nnz} entries, file has {seen}"),
            });
        }
        Ok(a)
    } else {
        if dims.len() != 2 {
            return Err(Error::MtxParse {
                line: size_lineno,
                reason: "array size line must be 'rows cols'".into(),
            });
        }
        let (m, n) = (dims[0], dims[1]);
        let mut entries = Vec::with_capacity(m * n);
        for (idx, line) in &mut lines {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('%') {
                continue;
            }
            for tok in trimmed.split_whitespace() {
                entries.push(parse_f64(tok, idx + 1)?);
            }
        }
        let expected = if header.symmetric {
            // Lower triangle, column by column.
            n * (n + 1) / 2
        } else {
            m * n
        };
        if entries.len() != expected {
            return Err(Error::MtxParse {
                line: size_lineno,
                reason: format!("expected {expected} entries for {m} x {n}, found {}", entries.len()),
            });
        }
        let mut a = DenseMatrix::zeros(m, n);
        if header.symmetric {
            let mut it = entries.into_iter();
            for j in 0..n {
                for i in j..m {
                    let v = it.next().unwrap();
                    a.set(i, j, v);
                    a.set(j, i, v);
                }
            }
        } else {
            // Array format is column-major.
            for (pos, v) in entries.into_iter().enumerate() {
                let j = pos / m;
                let i = pos % m;
                a.set(i, j, v);
            }
        }
        Ok(a)
    }
}
