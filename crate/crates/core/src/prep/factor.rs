//! Principal components and principal-axis factor analysis on the
//! correlation matrix.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::corpus_io::CovMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FactorKind {
    Pca,
    Efa,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorSolution {
    pub kind: FactorKind,
    pub variables: Vec<String>,
    /// One row per variable, one column per factor.
    pub loadings: Vec<Vec<f64>>,
    /// PCA: all eigenvalues of the correlation matrix, nonincreasing.
    /// EFA: sum of squared loadings per extracted factor.
    pub eigenvalues: Vec<f64>,
    /// Per retained factor.
    pub proportion: Vec<f64>,
    pub cumulative: Vec<f64>,
    /// PCA only: loadings discretised to −1/0/+1.
    pub signs: Option<Vec<Vec<i8>>>,
    pub sign_threshold: Option<f64>,
    /// EFA only: loadings with small magnitudes blanked out.
    pub display: Option<Vec<Vec<Option<f64>>>>,
    pub communalities: Option<Vec<f64>>,
    /// EFA only: variables whose communality exceeded 1 and was clipped.
    pub heywood: Vec<String>,
    pub iterations: usize,
}

/// Eigenpairs sorted by descending eigenvalue, each vector oriented so its
/// largest-magnitude entry is positive.
fn sorted_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m.clone());
    let p = m.nrows();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(p, p);
    for (k, &i) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(i).into_owned();
        let lead = v
            .iter()
            .enumerate()
            .fold(0, |best, (j, x)| if x.abs() > v[best].abs() + 1e-12 { j } else { best });
        if v[lead] < 0.0 {
            v.neg_mut();
        }
        vectors.set_column(k, &v);
    }
    (values, vectors)
}

fn sign_of(l: f64, threshold: f64) -> i8 {
    if l != 0.0 && l.abs() >= threshold {
        if l > 0.0 {
            1
        } else {
            -1
        }
    } else {
        0
    }
}

fn cumulative(props: &[f64]) -> Vec<f64> {
    props
        .iter()
        .scan(0.0, |acc, &p| {
            *acc += p;
            Some(*acc)
        })
        .collect()
}

pub fn pca(c: &CovMatrix, n_components: usize, sign_threshold: f64) -> Result<FactorSolution> {
    let p = c.dim();
    if n_components == 0 || n_components > p {
        return Err(Error::Prep(format!(
            "n_components must be in 1..={p}, got {n_components}"
        )));
    }
    let r = c.to_correlation();
    let (values, vectors) = sorted_eigen(&r.values);
    if let Some(&min) = values.last() {
        if min < -1e-8 {
            return Err(Error::Prep(format!(
                "correlation matrix is not positive semidefinite (eigenvalue {min})"
            )));
        }
    }
    let loadings: Vec<Vec<f64>> = (0..p)
        .map(|i| {
            (0..n_components)
                .map(|k| vectors[(i, k)] * values[k].max(0.0).sqrt())
                .collect()
        })
        .collect();
    let proportion: Vec<f64> = values[..n_components].iter().map(|v| v / p as f64).collect();
    let signs = loadings
        .iter()
        .map(|row| row.iter().map(|&l| sign_of(l, sign_threshold)).collect())
        .collect();
    Ok(FactorSolution {
        kind: FactorKind::Pca,
        variables: c.names.clone(),
        loadings,
        cumulative: cumulative(&proportion),
        proportion,
        eigenvalues: values,
        signs: Some(signs),
        sign_threshold: Some(sign_threshold),
        display: None,
        communalities: None,
        heywood: Vec::new(),
        iterations: 0,
    })
}

/// Principal-axis factoring: communalities start at the squared multiple
/// correlations and are iterated until the largest change is below 1e-6 or
/// 200 rounds have run.
pub fn efa(c: &CovMatrix, n_factors: usize, suppress_below: f64) -> Result<FactorSolution> {
    const TOL: f64 = 1e-6;
    const MAX_ITER: usize = 200;
    let p = c.dim();
    if n_factors == 0 || n_factors >= p {
        return Err(Error::Prep(format!(
            "n_factors must be in 1..{p}, got {n_factors}"
        )));
    }
    let r = c.to_correlation().values;
    let mut h2: Vec<f64> = match r.clone().try_inverse() {
        Some(inv) => (0..p).map(|i| (1.0 - 1.0 / inv[(i, i)]).clamp(0.0, 1.0)).collect(),
        None => (0..p)
            .map(|i| (0..p).filter(|&j| j != i).map(|j| r[(i, j)].abs()).fold(0.0, f64::max))
            .collect(),
    };

    let mut heywood = vec![false; p];
    let mut loadings = DMatrix::zeros(p, n_factors);
    let mut iterations = 0;
    for it in 1..=MAX_ITER {
        iterations = it;
        let mut reduced = r.clone();
        for i in 0..p {
            reduced[(i, i)] = h2[i];
        }
        let (values, vectors) = sorted_eigen(&reduced);
        for k in 0..n_factors {
            let s = values[k].max(0.0).sqrt();
            for i in 0..p {
                loadings[(i, k)] = vectors[(i, k)] * s;
            }
        }
        let mut max_change: f64 = 0.0;
        for i in 0..p {
            let mut next: f64 = (0..n_factors).map(|k| loadings[(i, k)].powi(2)).sum();
            if next > 1.0 {
                heywood[i] = true;
                next = 1.0;
            }
            max_change = max_change.max((next - h2[i]).abs());
            h2[i] = next;
        }
        if max_change < TOL {
            break;
        }
    }

    let ss: Vec<f64> = (0..n_factors)
        .map(|k| loadings.column(k).iter().map(|l| l * l).sum())
        .collect();
    let proportion: Vec<f64> = ss.iter().map(|s| s / p as f64).collect();
    let rows: Vec<Vec<f64>> = (0..p)
        .map(|i| loadings.row(i).iter().copied().collect())
        .collect();
    let display = rows
        .iter()
        .map(|row| {
            row.iter()
                .map(|&l| (l.abs() >= suppress_below).then_some(l))
                .collect()
        })
        .collect();
    Ok(FactorSolution {
        kind: FactorKind::Efa,
        variables: c.names.clone(),
        loadings: rows,
        cumulative: cumulative(&proportion),
        proportion,
        eigenvalues: ss,
        signs: None,
        sign_threshold: None,
        display: Some(display),
        communalities: Some(h2),
        heywood: c
            .names
            .iter()
            .zip(&heywood)
            .filter(|(_, &h)| h)
            .map(|(n, _)| n.clone())
            .collect(),
        iterations,
    })
}
