use std::collections::HashSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Named numeric columns of equal length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableMatrix {
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl VariableMatrix {
    pub fn new(names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::Data(format!(
                "{} names for {} columns",
                names.len(),
                columns.len()
            )));
        }
        let mut seen = HashSet::new();
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(Error::Data(format!("duplicate variable name {name:?}")));
            }
        }
        let n = columns.first().map_or(0, Vec::len);
        if n == 0 {
            return Err(Error::Data("a variable matrix needs at least one row".into()));
        }
        if let Some((name, col)) = names.iter().zip(&columns).find(|(_, c)| c.len() != n) {
            return Err(Error::Data(format!(
                "column {name:?} has {} rows, expected {n}",
                col.len()
            )));
        }
        Ok(VariableMatrix { names, columns })
    }

    pub fn from_pairs<S: Into<String>>(pairs: Vec<(S, Vec<f64>)>) -> Result<Self> {
        let (names, columns) = pairs.into_iter().map(|(n, c)| (n.into(), c)).unzip();
        Self::new(names, columns)
    }

    pub fn n(&self) -> usize {
        self.columns[0].len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.index_of(name).map(|i| self.columns[i].as_slice())
    }

    pub fn column_mut(&mut self, name: &str) -> Option<&mut Vec<f64>> {
        let i = self.index_of(name)?;
        Some(&mut self.columns[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.names
            .iter()
            .map(String::as_str)
            .zip(self.columns.iter().map(Vec::as_slice))
    }

    /// Keeps the named columns, in the order given.
    pub fn select(&self, names: &[&str]) -> Result<Self> {
        let mut out_names = Vec::with_capacity(names.len());
        let mut out_cols = Vec::with_capacity(names.len());
        for &name in names {
            let col = self
                .column(name)
                .ok_or_else(|| Error::Data(format!("unknown variable {name:?}")))?;
            out_names.push(name.to_string());
            out_cols.push(col.to_vec());
        }
        Self::new(out_names, out_cols)
    }

    pub fn without(&self, drop: &[&str]) -> Self {
        let (names, columns) = self
            .names
            .iter()
            .zip(&self.columns)
            .filter(|(n, _)| !drop.contains(&n.as_str()))
            .map(|(n, c)| (n.clone(), c.clone()))
            .unzip();
        VariableMatrix { names, columns }
    }

    /// Keeps the rows whose index satisfies `keep`.
    pub fn filter_rows(&self, keep: impl Fn(usize) -> bool) -> Result<Self> {
        let columns = self
            .columns
            .iter()
            .map(|c| c.iter().enumerate().filter(|(i, _)| keep(*i)).map(|(_, &v)| v).collect())
            .collect();
        Self::new(self.names.clone(), columns)
    }

    pub fn push_column(&mut self, name: impl Into<String>, values: Vec<f64>) -> Result<()> {
        let name = name.into();
        if self.index_of(&name).is_some() {
            return Err(Error::Data(format!("duplicate variable name {name:?}")));
        }
        if values.len() != self.n() {
            return Err(Error::Data(format!(
                "column {name:?} has {} rows, expected {}",
                values.len(),
                self.n()
            )));
        }
        self.names.push(name);
        self.columns.push(values);
        Ok(())
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance with divisor n−1.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovKind {
    Covariance,
    Correlation,
}

/// A symmetric covariance (or correlation) matrix over named variables with
/// the sample size it was computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct CovMatrix {
    pub names: Vec<String>,
    pub values: DMatrix<f64>,
    pub n: usize,
    pub is_correlation: bool,
}

impl CovMatrix {
    pub fn new(
        names: Vec<String>,
        values: DMatrix<f64>,
        n: usize,
        is_correlation: bool,
    ) -> Result<Self> {
        let p = names.len();
        if values.nrows() != p || values.ncols() != p {
            return Err(Error::Data(format!(
                "matrix is {}x{} but {p} names were given",
                values.nrows(),
                values.ncols()
            )));
        }
        if n < 2 {
            return Err(Error::Data(format!("sample size n={n} must be at least 2")));
        }
        let mut seen = HashSet::new();
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(Error::Data(format!("duplicate variable name {name:?}")));
            }
        }
        for i in 0..p {
            if !(values[(i, i)] > 0.0) {
                return Err(Error::Data(format!(
                    "variance of {:?} is not positive ({})",
                    names[i],
                    values[(i, i)]
                )));
            }
            for j in 0..i {
                if (values[(i, j)] - values[(j, i)]).abs() > 1e-9 {
                    return Err(Error::Data(format!(
                        "matrix is not symmetric at ({}, {})",
                        names[i], names[j]
                    )));
                }
            }
        }
        let mut values = values;
        for i in 0..p {
            for j in 0..i {
                let avg = 0.5 * (values[(i, j)] + values[(j, i)]);
                values[(i, j)] = avg;
                values[(j, i)] = avg;
            }
        }
        Ok(CovMatrix {
            names,
            values,
            n,
            is_correlation,
        })
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        Some(self.values[(self.index_of(a)?, self.index_of(b)?)])
    }

    /// Restricts to the named variables, in the given order.
    pub fn select(&self, names: &[&str]) -> Result<Self> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| {
                self.index_of(n)
                    .ok_or_else(|| Error::Data(format!("unknown variable {n:?}")))
            })
            .collect::<Result<_>>()?;
        let values = DMatrix::from_fn(idx.len(), idx.len(), |i, j| self.values[(idx[i], idx[j])]);
        Ok(CovMatrix {
            names: names.iter().map(|s| s.to_string()).collect(),
            values,
            n: self.n,
            is_correlation: self.is_correlation,
        })
    }

    /// Rescales to unit diagonal.
    pub fn to_correlation(&self) -> CovMatrix {
        let p = self.dim();
        let sd: Vec<f64> = (0..p).map(|i| self.values[(i, i)].sqrt()).collect();
        let mut values = DMatrix::from_fn(p, p, |i, j| self.values[(i, j)] / (sd[i] * sd[j]));
        for i in 0..p {
            values[(i, i)] = 1.0;
        }
        CovMatrix {
            names: self.names.clone(),
            values,
            n: self.n,
            is_correlation: true,
        }
    }
}

/// Input to estimation: raw data or a precomputed covariance matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum CovInput {
    Raw(VariableMatrix),
    Summary(CovMatrix),
}

impl CovInput {
    pub fn to_cov_matrix(&self) -> Result<CovMatrix> {
        match self {
            CovInput::Raw(m) => covariance(m, CovKind::Covariance),
            CovInput::Summary(c) => Ok(c.clone()),
        }
    }

    pub fn names(&self) -> &[String] {
        match self {
            CovInput::Raw(m) => m.names(),
            CovInput::Summary(c) => &c.names,
        }
    }
}

pub fn covariance(m: &VariableMatrix, kind: CovKind) -> Result<CovMatrix> {
    let n = m.n();
    if n < 2 {
        return Err(Error::Data(format!("covariance needs n >= 2 rows, got {n}")));
    }
    let p = m.names().len();
    let centered: Vec<Vec<f64>> = m
        .columns()
        .iter()
        .map(|c| {
            let mu = mean(c);
            c.iter().map(|x| x - mu).collect()
        })
        .collect();
    let mut values = DMatrix::zeros(p, p);
    for i in 0..p {
        for j in 0..=i {
            let s: f64 = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum();
            let v = s / (n - 1) as f64;
            values[(i, j)] = v;
            values[(j, i)] = v;
        }
    }
    let is_correlation = kind == CovKind::Correlation;
    if is_correlation {
        let sd: Vec<f64> = (0..p).map(|i| values[(i, i)].sqrt()).collect();
        if let Some(i) = sd.iter().position(|&s| s == 0.0) {
            return Err(Error::Data(format!(
                "column {:?} has zero variance; correlation undefined",
                m.names()[i]
            )));
        }
        for i in 0..p {
            for j in 0..p {
                values[(i, j)] = if i == j {
                    1.0
                } else {
                    (values[(i, j)] / (sd[i] * sd[j])).clamp(-1.0, 1.0)
                };
            }
        }
    } else if let Some(i) = (0..p).find(|&i| values[(i, i)] <= 0.0) {
        return Err(Error::Data(format!(
            "column {:?} has zero variance",
            m.names()[i]
        )));
    }
    CovMatrix::new(m.names().to_vec(), values, n, is_correlation)
}
