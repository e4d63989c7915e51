use std::collections::BTreeSet;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model_dsl::{scale_markers, validate, Param, SemModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Matrix {
    A,
    S,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamKind {
    Regression,
    Loading,
    Variance,
    Covariance,
}

/// One cell of A or S. For S the cell stands for both `(row, col)` and
/// `(col, row)`. For A, `row` is the outcome and `col` the source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub id: String,
    pub kind: ParamKind,
    pub matrix: Matrix,
    pub row: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedCell {
    pub cell: Cell,
    pub value: f64,
}

/// The reticular action model for a `SemModel`. Variables are ordered with
/// manifests first (in data order) followed by latents.
#[derive(Debug, Clone, PartialEq)]
pub struct RamSystem {
    pub names: Vec<String>,
    pub n_manifest: usize,
    /// Fixed values; free cells hold 0.
    pub a: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub free: Vec<Cell>,
    /// Explicitly fixed nonzero cells, including scale markers.
    pub fixed: Vec<FixedCell>,
    pub start: Vec<f64>,
    pub endogenous: Vec<bool>,
}

pub fn path_id(from: &str, to: &str, measurement: bool) -> String {
    if measurement {
        format!("{from} -> {to}")
    } else {
        format!("{to} <- {from}")
    }
}

impl RamSystem {
    pub fn n_vars(&self) -> usize {
        self.names.len()
    }

    pub fn manifests(&self) -> &[String] {
        &self.names[..self.n_manifest]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn n_free(&self) -> usize {
        self.free.len()
    }

    /// Observed moments minus free parameters.
    pub fn df(&self) -> i64 {
        let p = self.n_manifest as i64;
        p * (p + 1) / 2 - self.free.len() as i64
    }

    /// A and S with `theta` written into the free cells.
    pub fn matrices(&self, theta: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
        let mut a = self.a.clone();
        let mut s = self.s.clone();
        for (cell, &v) in self.free.iter().zip(theta) {
            match cell.matrix {
                Matrix::A => a[(cell.row, cell.col)] = v,
                Matrix::S => {
                    s[(cell.row, cell.col)] = v;
                    s[(cell.col, cell.row)] = v;
                }
            }
        }
        (a, s)
    }

    /// `(I - A)^-1`. Acyclicity makes `I - A` unit triangular under a
    /// topological permutation, so the inverse always exists.
    pub fn b_matrix(a: &DMatrix<f64>) -> DMatrix<f64> {
        let m = a.nrows();
        (DMatrix::identity(m, m) - a)
            .try_inverse()
            .expect("I - A is invertible for an acyclic model")
    }

    /// Model-implied covariance over all variables, `B S B'`.
    pub fn implied_full(&self, theta: &[f64]) -> DMatrix<f64> {
        let (a, s) = self.matrices(theta);
        let b = Self::b_matrix(&a);
        let mut out = &b * s * b.transpose();
        symmetrize(&mut out);
        out
    }

    /// Data-informed start values. `sample` is the manifest covariance in
    /// this system's manifest order.
    pub fn data_starts(&self, sample: &DMatrix<f64>) -> Vec<f64> {
        let nm = self.n_manifest;
        let manifest = |i: usize| i < nm;
        let fixed_a = |r: usize, c: usize| -> Option<f64> {
            self.fixed
                .iter()
                .find(|f| f.cell.matrix == Matrix::A && f.cell.row == r && f.cell.col == c)
                .map(|f| f.value)
        };

        // latent variance guess from the first manifest indicator:
        // var(marker) = c²φ + ψ with half assigned to each part
        let mut latent_var = vec![1.0; self.n_vars()];
        for l in nm..self.n_vars() {
            let fixed_var = self.s[(l, l)];
            if fixed_var > 0.0 && !self.is_free_s(l, l) {
                latent_var[l] = fixed_var;
                continue;
            }
            let marker = (0..nm).find_map(|i| {
                let c = fixed_a(i, l)?;
                (c != 0.0).then_some((i, c))
            });
            if let Some((i, c)) = marker {
                latent_var[l] = 0.5 * sample[(i, i)] / (c * c);
            }
        }

        self.free
            .iter()
            .zip(&self.start)
            .map(|(cell, &generic)| {
                let (r, c) = (cell.row, cell.col);
                match cell.kind {
                    ParamKind::Variance if manifest(r) => {
                        if self.endogenous[r] {
                            0.5 * sample[(r, r)]
                        } else {
                            sample[(r, r)]
                        }
                    }
                    ParamKind::Variance => latent_var[r],
                    ParamKind::Covariance if manifest(r) && manifest(c) => sample[(r, c)],
                    ParamKind::Covariance => 0.0,
                    ParamKind::Loading if manifest(r) => {
                        let marker = (0..nm).find(|&i| fixed_a(i, c).is_some_and(|v| v != 0.0));
                        match marker {
                            Some(m) => {
                                let cm = fixed_a(m, c).unwrap();
                                sample[(r, m)] / (cm * latent_var[c])
                            }
                            None => (0.5 * sample[(r, r)] / latent_var[c]).sqrt(),
                        }
                    }
                    ParamKind::Regression if manifest(r) && manifest(c) => {
                        self.ols_start(sample, r, c).unwrap_or(generic)
                    }
                    _ => generic,
                }
            })
            .collect()
    }

    fn is_free_s(&self, r: usize, c: usize) -> bool {
        self.free.iter().any(|f| {
            f.matrix == Matrix::S && ((f.row, f.col) == (r, c) || (f.row, f.col) == (c, r))
        })
    }

    /// Least-squares coefficient of `pred` when `outcome` is regressed on all
    /// its manifest predictors, if they are all manifest.
    fn ols_start(&self, sample: &DMatrix<f64>, outcome: usize, pred: usize) -> Option<f64> {
        let nm = self.n_manifest;
        let preds: Vec<usize> = (0..self.n_vars())
            .filter(|&j| {
                self.a[(outcome, j)] != 0.0
                    || self
                        .free
                        .iter()
                        .any(|f| f.matrix == Matrix::A && f.row == outcome && f.col == j)
            })
            .collect();
        if preds.iter().any(|&j| j >= nm) {
            return None;
        }
        let k = preds.len();
        let sxx = DMatrix::from_fn(k, k, |i, j| sample[(preds[i], preds[j])]);
        let sxy = nalgebra::DVector::from_fn(k, |i, _| sample[(preds[i], outcome)]);
        let b = sxx.cholesky()?.solve(&sxy);
        preds.iter().position(|&j| j == pred).map(|i| b[i])
    }
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Builds the RAM matrices for `model` over the data columns `data_names`
/// (manifests keep the data's column order).
///
/// Defaults: every variable has a free variance, manifest exogenous
/// variables covary freely, declared `<->` pairs are free, and every other
/// covariance is 0. The first indicator of a latent is fixed to 1 unless the
/// model sets the latent's scale itself.
pub fn build_ram(model: &SemModel, data_names: &[String]) -> Result<RamSystem> {
    let data_set: BTreeSet<String> = data_names.iter().cloned().collect();
    let diags = validate(model, &data_set);
    if !diags.is_empty() {
        let lines: Vec<String> = diags.iter().map(|d| d.to_string()).collect();
        return Err(Error::Model(lines.join("\n")));
    }
    let used: BTreeSet<&str> = model.manifests().into_iter().collect();
    let mut names: Vec<String> = data_names
        .iter()
        .filter(|n| used.contains(n.as_str()))
        .cloned()
        .collect();
    let n_manifest = names.len();
    names.extend(model.latents().into_iter().map(str::to_string));
    let idx = |n: &str| names.iter().position(|x| x == n).expect("known variable");
    let m = names.len();

    let endo_set = model.endogenous();
    let endogenous: Vec<bool> = names.iter().map(|n| endo_set.contains(n.as_str())).collect();

    let mut a = DMatrix::zeros(m, m);
    let mut s = DMatrix::zeros(m, m);
    let mut free = Vec::new();
    let mut start = Vec::new();
    let mut fixed = Vec::new();

    let mut place = |cell: Cell,
                     value: Param,
                     generic: f64,
                     a: &mut DMatrix<f64>,
                     s: &mut DMatrix<f64>| match value {
        Param::Free => {
            free.push(cell);
            start.push(generic);
        }
        Param::Fixed(v) => {
            match cell.matrix {
                Matrix::A => a[(cell.row, cell.col)] = v,
                Matrix::S => {
                    s[(cell.row, cell.col)] = v;
                    s[(cell.col, cell.row)] = v;
                }
            }
            if v != 0.0 || cell.matrix == Matrix::S {
                fixed.push(FixedCell { cell, value: v });
            }
        }
    };

    let markers = scale_markers(model);
    for meas in &model.measurements {
        let l = idx(&meas.latent);
        let marker = markers.get(&meas.latent).cloned().flatten();
        for t in &meas.indicators {
            let value = match (&marker, t.value) {
                (Some(mk), Param::Free) if *mk == t.name => Param::Fixed(1.0),
                (_, v) => v,
            };
            let cell = Cell {
                id: path_id(&meas.latent, &t.name, true),
                kind: ParamKind::Loading,
                matrix: Matrix::A,
                row: idx(&t.name),
                col: l,
            };
            place(cell, value, 0.5, &mut a, &mut s);
        }
    }
    for r in &model.regressions {
        let o = idx(&r.outcome);
        for t in &r.predictors {
            let cell = Cell {
                id: path_id(&t.name, &r.outcome, false),
                kind: ParamKind::Regression,
                matrix: Matrix::A,
                row: o,
                col: idx(&t.name),
            };
            place(cell, t.value, 0.5, &mut a, &mut s);
        }
    }
    for (i, name) in names.iter().enumerate() {
        let value = model
            .variance_fixes
            .iter()
            .find(|v| &v.name == name)
            .map_or(Param::Free, |v| Param::Fixed(v.value));
        let cell = Cell {
            id: format!("var({name})"),
            kind: ParamKind::Variance,
            matrix: Matrix::S,
            row: i,
            col: i,
        };
        place(cell, value, 1.0, &mut a, &mut s);
    }
    let declared = |x: &str, y: &str| {
        model
            .covariances
            .iter()
            .find(|c| (c.left == x && c.right == y) || (c.left == y && c.right == x))
            .map(|c| c.value)
    };
    for i in 0..m {
        for j in 0..i {
            let default_free = i < n_manifest && j < n_manifest && !endogenous[i] && !endogenous[j];
            let value = match declared(&names[i], &names[j]) {
                Some(v) => v,
                None if default_free => Param::Free,
                None => continue,
            };
            let (l, r) = if names[j] < names[i] { (j, i) } else { (i, j) };
            let cell = Cell {
                id: format!("{} <-> {}", names[l], names[r]),
                kind: ParamKind::Covariance,
                matrix: Matrix::S,
                row: i,
                col: j,
            };
            place(cell, value, 0.0, &mut a, &mut s);
        }
    }

    Ok(RamSystem {
        names,
        n_manifest,
        a,
        s,
        free,
        fixed,
        start,
        endogenous,
    })
}
