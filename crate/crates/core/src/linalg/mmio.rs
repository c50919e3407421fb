//! Matrix Market coordinate (matrices) and array (vectors) formats.

use std::io::{BufRead, Write};

use super::csr::CsrMatrix;
use crate::{Error, Result};

pub fn write_matrix<W: Write>(a: &CsrMatrix, mut w: W) -> Result<()> {
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", a.nrows(), a.ncols(), a.nnz())?;
    for (i, j, v) in a.triplets() {
        writeln!(w, "{} {} {:.17e}", i + 1, j + 1, v)?;
    }
    Ok(())
}

pub fn write_vector<W: Write>(v: &[f64], mut w: W) -> Result<()> {
    writeln!(w, "%%MatrixMarket matrix array real general")?;
    writeln!(w, "{} 1", v.len())?;
    for x in v {
        writeln!(w, "{x:.17e}")?;
    }
    Ok(())
}

fn data_lines<R: BufRead>(r: R) -> Result<(String, Vec<String>)> {
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| Error::MatrixMarket("empty input".into()))??;
    if !header.starts_with("%%MatrixMarket") {
        return Err(Error::MatrixMarket(format!("missing banner, found {header:?}")));
    }
    let mut body = Vec::new();
    for l in lines {
        let l = l?;
        let t = l.trim();
        if !t.is_empty() && !t.starts_with('%') {
            body.push(t.to_string());
        }
    }
    Ok((header.to_lowercase(), body))
}

fn parse<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.parse().map_err(|_| Error::MatrixMarket(format!("cannot parse {s:?}")))
}

/// Reads a real coordinate matrix; `symmetric` storage is expanded.
pub fn read_matrix<R: BufRead>(r: R) -> Result<CsrMatrix> {
    let (header, body) = data_lines(r)?;
    if !header.contains("coordinate") || !header.contains("real") {
        return Err(Error::MatrixMarket(format!("unsupported format {header:?}")));
    }
    let symmetric = header.contains("symmetric");
    let mut it = body.iter();
    let size: Vec<usize> = it
        .next()
        .ok_or_else(|| Error::MatrixMarket("missing size line".into()))?
        .split_whitespace()
        .map(parse)
        .collect::<Result<_>>()?;
    let [nrows, ncols, nnz] = size[..] else {
        return Err(Error::MatrixMarket("size line needs three entries".into()));
    };
    let mut t = Vec::with_capacity(nnz);
    for line in it {
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 3 {
            return Err(Error::MatrixMarket(format!("bad entry line {line:?}")));
        }
        let (i, j, v): (usize, usize, f64) = (parse(f[0])?, parse(f[1])?, parse(f[2])?);
        if i == 0 || j == 0 || i > nrows || j > ncols {
            return Err(Error::MatrixMarket(format!("index ({i}, {j}) out of range")));
        }
        t.push((i - 1, j - 1, v));
        if symmetric && i != j {
            t.push((j - 1, i - 1, v));
        }
    }
    if t.len() < nnz {
        return Err(Error::MatrixMarket(format!("expected {nnz} entries, found {}", t.len())));
    }
    Ok(CsrMatrix::from_triplets(nrows, ncols, t))
}

pub fn read_vector<R: BufRead>(r: R) -> Result<Vec<f64>> {
    let (header, body) = data_lines(r)?;
    if !header.contains("array") {
        return Err(Error::MatrixMarket(format!("unsupported format {header:?}")));
    }
    let mut it = body.iter();
    let size: Vec<usize> = it
        .next()
        .ok_or_else(|| Error::MatrixMarket("missing size line".into()))?
        .split_whitespace()
        .map(parse)
        .collect::<Result<_>>()?;
    if size.len() != 2 || size[1] != 1 {
        return Err(Error::MatrixMarket("vector must be a single column".into()));
    }
    let v: Vec<f64> = it.map(|s| parse(s)).collect::<Result<_>>()?;
    if v.len() != size[0] {
        return Err(Error::MatrixMarket(format!("expected {} values, found {}", size[0], v.len())));
    }
    Ok(v)
}
