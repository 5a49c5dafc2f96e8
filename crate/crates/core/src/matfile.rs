//! Plain-text complex matrix files for cross-language regression.
//!
//! ```text
//! # rows cols
//! 2 3
//! 1.0 0.0
//! 0.5 -0.25
//! ...
//! ```
//!
//! The first non-comment line holds the dimensions; every following line is
//! one `real imag` pair, row-major. Floats use the shortest representation
//! that parses back to the same `f64`.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use crate::{ComplexMatrix, Error, Result};

pub fn to_string(m: &ComplexMatrix) -> String {
    let mut out = String::with_capacity(32 * m.len() + 32);
    out.push_str("# rows cols\n");
    let _ = writeln!(out, "{} {}", m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            let _ = writeln!(out, "{:?} {:?}", z.re, z.im);
        }
    }
    out
}

pub fn from_str(text: &str) -> Result<ComplexMatrix> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("missing dimension header".into()))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| Error::Parse(format!("bad dimension {t:?}")))
        })
        .collect::<Result<_>>()?;
    let [rows, cols] = dims[..] else {
        return Err(Error::Parse(format!(
            "expected `rows cols`, got {header:?}"
        )));
    };
    let mut data = Vec::with_capacity(rows * cols);
    for line in lines {
        let mut parts = line.split_whitespace();
        let mut next = || {
            parts
                .next()
                .ok_or_else(|| Error::Parse(format!("expected `re im`, got {line:?}")))?
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("{line:?}: {e}")))
        };
        let re = next()?;
        let im = next()?;
        data.push(Complex64::new(re, im));
    }
    if data.len() != rows * cols {
        return Err(Error::Parse(format!(
            "header says {rows}x{cols} but found {} entries",
            data.len()
        )));
    }
    Ok(ComplexMatrix::from_row_slice(rows, cols, &data))
}

pub fn write(path: impl AsRef<Path>, m: &ComplexMatrix) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_string(m)).map_err(|e| Error::io(path, e))
}

pub fn read(path: impl AsRef<Path>) -> Result<ComplexMatrix> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_str(&text)
}
