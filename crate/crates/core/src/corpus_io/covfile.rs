//! Covariance file layout:
//!
//! ```text
//! n=100 correlation
//! Y X1 X2
//! 1 0.4 0.6
//! 0.4 1 0.6
//! 0.6 0.6 1
//! ```
//!
//! The `correlation` flag is optional. Values are written with the shortest
//! representation that parses back to the same `f64`.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use super::matrix::CovMatrix;
use crate::error::{Error, Result};

pub fn read_cov(text: &str) -> Result<CovMatrix> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    let (hl, header) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "empty covariance file"))?;
    let mut n: Option<usize> = None;
    let mut is_correlation = false;
    for tok in header.split_whitespace() {
        if let Some(v) = tok.strip_prefix("n=") {
            n = Some(
                v.parse()
                    .map_err(|_| Error::parse(hl, format!("invalid sample size {v:?}")))?,
            );
        } else if tok == "correlation" {
            is_correlation = true;
        } else {
            return Err(Error::parse(hl, format!("unexpected header token {tok:?}")));
        }
    }
    let n = n.ok_or_else(|| Error::parse(hl, "header must start with n=<sample size>"))?;
    if n < 2 {
        return Err(Error::parse(hl, format!("sample size n={n} must be at least 2")));
    }

    let (nl, names_line) = lines
        .next()
        .ok_or_else(|| Error::parse(hl + 1, "missing variable-name line"))?;
    let names: Vec<String> = names_line.split_whitespace().map(str::to_string).collect();
    if names.is_empty() {
        return Err(Error::parse(nl, "no variable names"));
    }
    let p = names.len();
    let mut values = DMatrix::zeros(p, p);
    for i in 0..p {
        let (ln, row) = lines
            .next()
            .ok_or_else(|| Error::parse(0, format!("expected {p} matrix rows, found {i}")))?;
        let cells: Vec<&str> = row.split_whitespace().collect();
        if cells.len() != p {
            return Err(Error::parse(ln, format!("expected {p} values, found {}", cells.len())));
        }
        for (j, c) in cells.iter().enumerate() {
            let v: f64 = c
                .parse()
                .map_err(|_| Error::parse(ln, format!("invalid number {c:?}")))?;
            if !v.is_finite() {
                return Err(Error::parse(ln, "matrix entry is not finite"));
            }
            values[(i, j)] = v;
        }
    }
    if let Some((ln, _)) = lines.next() {
        return Err(Error::parse(ln, "trailing content after matrix"));
    }
    CovMatrix::new(names, values, n, is_correlation)
}

pub fn write_cov(c: &CovMatrix) -> String {
    let mut out = String::new();
    let _ = write!(out, "n={}", c.n);
    if c.is_correlation {
        out.push_str(" correlation");
    }
    out.push('\n');
    out.push_str(&c.names.join(" "));
    out.push('\n');
    for i in 0..c.dim() {
        let row: Vec<String> = (0..c.dim()).map(|j| c.values[(i, j)].to_string()).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_round_trips() {
        let c = CovMatrix::new(
            vec!["a".into(), "b".into()],
            DMatrix::identity(2, 2),
            100,
            false,
        )
        .unwrap();
        assert_eq!(read_cov(&write_cov(&c)).unwrap(), c);
    }

    #[test]
    fn asymmetric_rejected() {
        assert!(read_cov("n=10\na b\n1 0.5\n0.501 1\n").is_err());
    }

    #[test]
    fn small_n_rejected() {
        assert!(read_cov("n=1\na\n1\n").is_err());
    }

    #[test]
    fn correlation_flag_parsed() {
        let c = read_cov("n=50 correlation\na b\n1 0.3\n0.3 1\n").unwrap();
        assert!(c.is_correlation);
        assert_eq!(c.n, 50);
    }

    #[test]
    fn row_arity_checked() {
        let err = read_cov("n=10\na b\n1 0.5\n0.5\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }));
    }
}
