//! Text formats: dense vector streams, point streams, MatrixMarket
//! coordinate matrices, walk traces and sign files.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::geometry::quantile::validate_points;
use crate::komlos::SparseColumnMatrix;
use crate::vector::Sign;
use crate::walk::WalkTrace;

/// Non-blank lines, numbered from 1, skipping `#` comments.
fn content_lines<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, String)>> {
    reader
        .lines()
        .enumerate()
        .map(|(i, line)| line.map(|l| (i + 1, l)).map_err(Error::from))
        .filter(|r| match r {
            Ok((_, l)) => {
                let l = l.trim();
                !l.is_empty() && !l.starts_with('#')
            }
            Err(_) => true,
        })
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    let x: f64 = tok
        .parse()
        .map_err(|_| Error::parse(line, format!("not a number: {tok:?}")))?;
    if !x.is_finite() {
        return Err(Error::parse(line, format!("non-finite value {tok:?}")));
    }
    Ok(x)
}

fn parse_usize(tok: &str, line: usize) -> Result<usize> {
    tok.parse()
        .map_err(|_| Error::parse(line, format!("not a nonnegative integer: {tok:?}")))
}

fn parse_header(line: usize, text: &str, names: &str) -> Result<(usize, usize)> {
    let toks: Vec<&str> = text.split_whitespace().collect();
    if toks.len() != 2 {
        return Err(Error::parse(line, format!("expected header \"{names}\", got {text:?}")));
    }
    Ok((parse_usize(toks[0], line)?, parse_usize(toks[1], line)?))
}

/// Header `a b` followed by exactly `b` rows of `a` whitespace-separated numbers.
fn read_rows<R: BufRead>(reader: R, names: &str) -> Result<(usize, Vec<Vec<f64>>)> {
    let mut lines = content_lines(reader);
    let (hl, header) = lines
        .next()
        .transpose()?
        .ok_or_else(|| Error::parse(1, "empty input"))?;
    let (width, count) = parse_header(hl, &header, names)?;
    let mut rows = Vec::with_capacity(count);
    for item in lines {
        let (line, text) = item?;
        if rows.len() == count {
            return Err(Error::parse(line, format!("more than the declared {count} rows")));
        }
        let row: Vec<f64> = text
            .split_whitespace()
            .map(|tok| parse_f64(tok, line))
            .collect::<Result<_>>()?;
        if row.len() != width {
            return Err(Error::parse(line, format!("expected {width} values, found {}", row.len())));
        }
        rows.push(row);
    }
    if rows.len() != count {
        return Err(Error::parse(0, format!("declared {count} rows, found {}", rows.len())));
    }
    Ok((width, rows))
}

/// Dense stream: first line `n t`, then `t` lines of `n` numbers.
pub fn read_vector_stream<R: BufRead>(reader: R) -> Result<(usize, Vec<Vec<f64>>)> {
    read_rows(reader, "n t")
}

pub fn write_vector_stream<W: Write>(mut out: W, n: usize, vectors: &[Vec<f64>]) -> Result<()> {
    writeln!(out, "{n} {}", vectors.len())?;
    for v in vectors {
        let row: Vec<String> = v.iter().map(f64::to_string).collect();
        writeln!(out, "{}", row.join(" "))?;
    }
    Ok(())
}

/// Point stream: first line `d t`, then `t` points in `[0,1]^d`.
pub fn read_point_stream<R: BufRead>(reader: R) -> Result<(usize, Vec<Vec<f64>>)> {
    let (d, points) = read_rows(reader, "d t")?;
    if d == 0 {
        return Err(Error::parse(1, "dimension d must be positive"));
    }
    validate_points(&points, d)?;
    Ok((d, points))
}

pub fn write_point_stream<W: Write>(out: W, d: usize, points: &[Vec<f64>]) -> Result<()> {
    write_vector_stream(out, d, points)
}

/// MatrixMarket `coordinate real general` (or `integer`), 1-based indices.
/// Each column must have `ℓ₂` norm at most 1.
pub fn read_matrix_market<R: BufRead>(reader: R) -> Result<SparseColumnMatrix> {
    let mut lines = reader.lines().enumerate();
    let (_, banner) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "empty input"))?;
    let banner = banner?;
    let fields: Vec<String> = banner.split_whitespace().map(str::to_ascii_lowercase).collect();
    if fields.len() != 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(Error::parse(1, format!("not a MatrixMarket banner: {banner:?}")));
    }
    if fields[2] != "coordinate" {
        return Err(Error::parse(1, format!("only coordinate format is supported, got {}", fields[2])));
    }
    if fields[3] != "real" && fields[3] != "integer" {
        return Err(Error::parse(1, format!("only real or integer entries are supported, got {}", fields[3])));
    }
    if fields[4] != "general" {
        return Err(Error::parse(1, format!("only general symmetry is supported, got {}", fields[4])));
    }

    let mut body = lines
        .map(|(i, l)| l.map(|l| (i + 1, l)).map_err(Error::from))
        .filter(|r| r.as_ref().map_or(true, |(_, l)| !l.trim().is_empty() && !l.starts_with('%')));
    let (sl, size) = body
        .next()
        .transpose()?
        .ok_or_else(|| Error::parse(2, "missing size line"))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|tok| parse_usize(tok, sl))
        .collect::<Result<_>>()?;
    let [n, t, nnz] = dims[..] else {
        return Err(Error::parse(sl, format!("expected \"rows cols entries\", got {size:?}")));
    };

    let mut triplets = Vec::with_capacity(nnz);
    let mut entries = 0;
    for item in body {
        let (line, text) = item?;
        let toks: Vec<&str> = text.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(Error::parse(line, format!("expected \"row col value\", got {text:?}")));
        }
        let (i, j) = (parse_usize(toks[0], line)?, parse_usize(toks[1], line)?);
        if i == 0 || i > n || j == 0 || j > t {
            return Err(Error::parse(line, format!("entry ({i}, {j}) outside the {n} x {t} matrix")));
        }
        entries += 1;
        if entries > nnz {
            return Err(Error::parse(line, format!("more than the declared {nnz} entries")));
        }
        let x = parse_f64(toks[2], line)?;
        if x != 0.0 {
            triplets.push((i - 1, j - 1, x));
        }
    }
    if entries != nnz {
        return Err(Error::parse(0, format!("declared {nnz} entries, found {entries}")));
    }
    SparseColumnMatrix::from_triplets(n, t, &triplets)
}

pub fn write_matrix_market<W: Write>(mut out: W, a: &SparseColumnMatrix) -> Result<()> {
    writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(out, "{} {} {}", a.rows(), a.cols(), a.nnz())?;
    for j in 0..a.cols() {
        for (i, x) in a.column(j).iter() {
            writeln!(out, "{} {} {x}", i + 1, j + 1)?;
        }
    }
    Ok(())
}

/// CSV `step,sign,sup_norm,inner_product`, one row per completed step.
pub fn write_trace_csv<W: Write>(mut out: W, trace: &WalkTrace) -> Result<()> {
    writeln!(out, "step,sign,sup_norm,inner_product")?;
    for (i, ((s, sup), inner)) in trace
        .signs
        .iter()
        .zip(&trace.sup_norms)
        .zip(&trace.inner_products)
        .enumerate()
    {
        writeln!(out, "{},{},{sup},{inner}", i + 1, s.as_i64())?;
    }
    Ok(())
}

/// One `1` or `-1` per line.
pub fn write_signs<W: Write>(mut out: W, signs: &[Sign]) -> Result<()> {
    for s in signs {
        writeln!(out, "{}", s.as_i64())?;
    }
    Ok(())
}

pub fn read_signs<R: BufRead>(reader: R) -> Result<Vec<Sign>> {
    content_lines(reader)
        .map(|item| {
            let (line, text) = item?;
            match text.trim() {
                "1" | "+1" => Ok(Sign::Plus),
                "-1" => Ok(Sign::Minus),
                other => Err(Error::parse(line, format!("expected 1 or -1, got {other:?}"))),
            }
        })
        .collect()
}
