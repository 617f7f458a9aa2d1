//! Matrix Market (`.mtx`) reading and writing.
//!
//! Supported: `matrix coordinate` and `matrix array` with `real` or
//! `integer` fields and `general`, `symmetric` or `skew-symmetric` storage.
//! Symmetric storage is expanded on read. Complex, pattern and Hermitian
//! files are rejected.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use morozov_core::linop::{CsrMatrix, LinearOperator, Matrix};
use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layout {
    Coordinate,
    Array,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    Skew,
}

struct Header {
    layout: Layout,
    symmetry: Symmetry,
}

fn parse_header(line: &str) -> std::result::Result<Header, String> {
    let words: Vec<String> = line
        .split_whitespace()
        .map(str::to_ascii_lowercase)
        .collect();
    if words.len() != 5 || words[0] != "%%matrixmarket" {
        return Err("expected `%%MatrixMarket matrix <layout> <field> <symmetry>`".into());
    }
    if words[1] != "matrix" {
        return Err(format!("object `{}` is not a matrix", words[1]));
    }
    let layout = match words[2].as_str() {
        "coordinate" => Layout::Coordinate,
        "array" => Layout::Array,
        other => return Err(format!("unknown layout `{other}`")),
    };
    match words[3].as_str() {
        "real" | "integer" | "double" => {}
        other => return Err(format!("unsupported field `{other}`")),
    }
    let symmetry = match words[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::Skew,
        other => return Err(format!("unsupported symmetry `{other}`")),
    };
    Ok(Header { layout, symmetry })
}

pub fn read_matrix_market(path: &Path) -> Result<Matrix> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_from(BufReader::new(file), path)
}

/// Reads from any buffered source; `origin` is used in error messages.
pub fn read_from<R: BufRead>(reader: R, origin: &Path) -> Result<Matrix> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));
    let err = |line, msg: String| Error::parse(origin, line, msg);

    let (_, first) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let first = first.map_err(|e| Error::io(origin, e))?;
    let header = parse_header(&first).map_err(|m| {
        if m.starts_with("unsupported") {
            Error::Unsupported(m)
        } else {
            err(1, m)
        }
    })?;

    // Data lines, skipping comments and blanks.
    let mut data = lines.filter_map(|(n, l)| match l {
        Ok(s) if s.trim().is_empty() || s.trim_start().starts_with('%') => None,
        Ok(s) => Some(Ok((n, s))),
        Err(e) => Some(Err(e)),
    });
    let mut last = 1;
    let mut next_line = |what: &str| -> Result<(usize, String)> {
        match data.next() {
            Some(Ok((n, s))) => {
                last = n;
                Ok((n, s))
            }
            Some(Err(e)) => Err(Error::io(origin, e)),
            None => Err(Error::parse(
                origin,
                last + 1,
                format!("unexpected end of file, expected {what}"),
            )),
        }
    };

    let (size_line, sizes) = next_line("size line")?;
    let sizes: Vec<usize> = sizes
        .split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| err(size_line, format!("invalid size `{t}`")))
        })
        .collect::<Result<_>>()?;
    let expected_sizes = if header.layout == Layout::Coordinate {
        3
    } else {
        2
    };
    if sizes.len() != expected_sizes {
        return Err(err(
            size_line,
            format!("expected {expected_sizes} sizes, found {}", sizes.len()),
        ));
    }
    let (nrows, ncols) = (sizes[0], sizes[1]);
    if header.symmetry != Symmetry::General && nrows != ncols {
        return Err(err(
            size_line,
            "symmetric storage requires a square matrix".into(),
        ));
    }
    let mirror = |i: usize, j: usize, v: f64, out: &mut Vec<(usize, usize, f64)>| {
        out.push((i, j, v));
        if i != j {
            match header.symmetry {
                Symmetry::General => {}
                Symmetry::Symmetric => out.push((j, i, v)),
                Symmetry::Skew => out.push((j, i, -v)),
            }
        }
    };

    match header.layout {
        Layout::Coordinate => {
            let nnz = sizes[2];
            let mut triplets = Vec::with_capacity(nnz * 2);
            for _ in 0..nnz {
                let (n, line) = next_line("matrix entry")?;
                let mut tok = line.split_whitespace();
                let mut index = |name: &str, bound: usize| -> Result<usize> {
                    let t = tok
                        .next()
                        .ok_or_else(|| err(n, format!("missing {name} index")))?;
                    let k: usize = t
                        .parse()
                        .map_err(|_| err(n, format!("invalid {name} index `{t}`")))?;
                    if k == 0 || k > bound {
                        return Err(err(n, format!("{name} index {k} outside 1..={bound}")));
                    }
                    Ok(k - 1)
                };
                let i = index("row", nrows)?;
                let j = index("column", ncols)?;
                let t = tok.next().ok_or_else(|| err(n, "missing value".into()))?;
                let v: f64 = t
                    .parse()
                    .map_err(|_| err(n, format!("invalid value `{t}`")))?;
                if tok.next().is_some() {
                    return Err(err(n, "trailing tokens after entry".into()));
                }
                mirror(i, j, v, &mut triplets);
            }
            let csr = CsrMatrix::from_triplets(nrows, ncols, &triplets)?;
            Ok(Matrix::Sparse(csr))
        }
        Layout::Array => {
            // Column-major; symmetric variants store the lower triangle only.
            let mut a = DMatrix::zeros(nrows, ncols);
            for j in 0..ncols {
                let start = match header.symmetry {
                    Symmetry::General => 0,
                    Symmetry::Symmetric => j,
                    Symmetry::Skew => j + 1,
                };
                for i in start..nrows {
                    let (n, line) = next_line("array value")?;
                    let t = line.trim();
                    let v: f64 = t
                        .parse()
                        .map_err(|_| err(n, format!("invalid value `{t}`")))?;
                    let mut tmp = Vec::with_capacity(2);
                    mirror(i, j, v, &mut tmp);
                    for (r, c, v) in tmp {
                        a[(r, c)] = v;
                    }
                }
            }
            Ok(Matrix::Dense(a))
        }
    }
}

/// Writes sparse matrices in coordinate and dense matrices in array
/// layout, both `real general`.
pub fn write_matrix_market(path: &Path, a: &Matrix) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_to(&mut w, a)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn write_to<W: Write>(w: &mut W, a: &Matrix) -> std::io::Result<()> {
    match a {
        Matrix::Sparse(csr) => {
            writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
            writeln!(w, "{} {} {}", csr.nrows(), csr.ncols(), csr.nnz())?;
            for (i, j, v) in csr.iter() {
                writeln!(w, "{} {} {:e}", i + 1, j + 1, v)?;
            }
        }
        Matrix::Dense(d) => {
            writeln!(w, "%%MatrixMarket matrix array real general")?;
            writeln!(w, "{} {}", d.nrows(), d.ncols())?;
            for v in d.iter() {
                writeln!(w, "{v:e}")?;
            }
        }
    }
    Ok(())
}
