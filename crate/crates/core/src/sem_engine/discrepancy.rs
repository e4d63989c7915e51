use nalgebra::{DMatrix, DVector};

use super::ram::{symmetrize, Matrix, RamSystem};

/// ML discrepancy `ln|Σ| - ln|S| + tr(S Σ^-1) - p`. `None` when either
/// matrix is not positive definite.
pub fn ml_fit_value(s: &DMatrix<f64>, sigma: &DMatrix<f64>) -> Option<f64> {
    let ln_det_s = ln_det(s)?;
    let chol = sigma.clone().cholesky()?;
    let f = raw_value(s, ln_det_s, &chol);
    Some(f.max(0.0))
}

fn ln_det(m: &DMatrix<f64>) -> Option<f64> {
    let chol = m.clone().cholesky()?;
    Some(chol_ln_det(&chol))
}

fn chol_ln_det(chol: &nalgebra::Cholesky<f64, nalgebra::Dyn>) -> f64 {
    2.0 * chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>()
}

fn raw_value(s: &DMatrix<f64>, ln_det_s: f64, chol: &nalgebra::Cholesky<f64, nalgebra::Dyn>) -> f64 {
    let inv = chol.inverse();
    let tr = s.component_mul(&inv).sum();
    chol_ln_det(chol) - ln_det_s + tr - s.nrows() as f64
}

/// Manifest-block implied covariance `F B S B' F'`.
pub fn implied_cov(ram: &RamSystem, theta: &[f64]) -> DMatrix<f64> {
    let p = ram.n_manifest;
    ram.implied_full(theta).view((0, 0), (p, p)).into_owned()
}

/// ML discrepancy of a RAM system against a fixed sample covariance.
pub struct Discrepancy<'a> {
    pub ram: &'a RamSystem,
    pub sample: DMatrix<f64>,
    ln_det_s: f64,
}

/// Value, gradient and the pieces reused by the information matrix.
struct Parts {
    sigma_inv: DMatrix<f64>,
    b: DMatrix<f64>,
    s_full: DMatrix<f64>,
}

impl<'a> Discrepancy<'a> {
    /// `None` when the sample covariance is not positive definite.
    pub fn new(ram: &'a RamSystem, sample: DMatrix<f64>) -> Option<Self> {
        let ln_det_s = ln_det(&sample)?;
        Some(Discrepancy {
            ram,
            sample,
            ln_det_s,
        })
    }

    fn parts(&self, theta: &[f64]) -> Option<(f64, Parts)> {
        let p = self.ram.n_manifest;
        let (a, s_full) = self.ram.matrices(theta);
        let b = RamSystem::b_matrix(&a);
        let mut full = &b * &s_full * b.transpose();
        symmetrize(&mut full);
        let sigma = full.view((0, 0), (p, p)).into_owned();
        let chol = sigma.cholesky()?;
        let f = raw_value(&self.sample, self.ln_det_s, &chol);
        if !f.is_finite() {
            return None;
        }
        Some((
            f,
            Parts {
                sigma_inv: chol.inverse(),
                b,
                s_full,
            },
        ))
    }

    pub fn value(&self, theta: &[f64]) -> Option<f64> {
        self.parts(theta).map(|(f, _)| f)
    }

    /// Analytic gradient. With `W = Σ^-1 (Σ - S) Σ^-1` padded to all
    /// variables as `C`, `dF/dA = 2 B'CB S B'` and `dF/dS = B'CB`.
    pub fn value_grad(&self, theta: &[f64]) -> Option<(f64, DVector<f64>)> {
        let (f, parts) = self.parts(theta)?;
        let p = self.ram.n_manifest;
        let m = self.ram.n_vars();
        let si = &parts.sigma_inv;
        let w = si - si * &self.sample * si;
        let mut c = DMatrix::zeros(m, m);
        c.view_mut((0, 0), (p, p)).copy_from(&w);
        let btcb = parts.b.transpose() * c * &parts.b;
        let grad_a = 2.0 * &btcb * &parts.s_full * parts.b.transpose();
        let g = DVector::from_iterator(
            self.ram.free.len(),
            self.ram.free.iter().map(|cell| match cell.matrix {
                Matrix::A => grad_a[(cell.row, cell.col)],
                Matrix::S if cell.row == cell.col => btcb[(cell.row, cell.row)],
                Matrix::S => btcb[(cell.row, cell.col)] + btcb[(cell.col, cell.row)],
            }),
        );
        Some((f, g))
    }

    /// Derivatives of Σ with respect to each free parameter.
    fn sigma_derivatives(&self, parts: &Parts) -> Vec<DMatrix<f64>> {
        let p = self.ram.n_manifest;
        let fb = parts.b.rows(0, p).into_owned();
        let g = (&parts.b * &parts.s_full * parts.b.transpose())
            .columns(0, p)
            .into_owned();
        self.ram
            .free
            .iter()
            .map(|cell| {
                let (r, c) = (cell.row, cell.col);
                match cell.matrix {
                    Matrix::A => {
                        let u = fb.column(r);
                        let v = g.row(c);
                        let d = u * v;
                        &d + d.transpose()
                    }
                    Matrix::S if r == c => fb.column(r) * fb.column(r).transpose(),
                    Matrix::S => {
                        let d = fb.column(r) * fb.column(c).transpose();
                        &d + d.transpose()
                    }
                }
            })
            .collect()
    }

    /// Expected second derivatives of F, `tr(Σ^-1 Σ_i Σ^-1 Σ_j)`.
    pub fn information(&self, theta: &[f64]) -> Option<DMatrix<f64>> {
        let (_, parts) = self.parts(theta)?;
        let k: Vec<DMatrix<f64>> = self
            .sigma_derivatives(&parts)
            .iter()
            .map(|d| &parts.sigma_inv * d)
            .collect();
        let t = k.len();
        let mut info = DMatrix::zeros(t, t);
        for i in 0..t {
            for j in 0..=i {
                let v = k[i].component_mul(&k[j].transpose()).sum();
                info[(i, j)] = v;
                info[(j, i)] = v;
            }
        }
        Some(info)
    }

    /// Hessian of F by central differences of the analytic gradient.
    pub fn numerical_hessian(&self, theta: &[f64]) -> Option<DMatrix<f64>> {
        let t = theta.len();
        let mut h = DMatrix::zeros(t, t);
        let mut x = theta.to_vec();
        for i in 0..t {
            let step = 1e-5 * theta[i].abs().max(1.0);
            x[i] = theta[i] + step;
            let (_, gp) = self.value_grad(&x)?;
            x[i] = theta[i] - step;
            let (_, gm) = self.value_grad(&x)?;
            x[i] = theta[i];
            let col = (gp - gm) / (2.0 * step);
            h.set_column(i, &col);
        }
        symmetrize(&mut h);
        Some(h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model_dsl::parse_model;
    use crate::sem_engine::ram::build_ram;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exact_fit_is_zero() {
        let s = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        assert!(ml_fit_value(&s, &s).unwrap().abs() < 1e-15);
    }

    #[test]
    fn closed_form_value() {
        let s = DMatrix::identity(2, 2);
        let sigma = DMatrix::from_diagonal_element(2, 2, 2.0);
        let expected = 2.0 * 2f64.ln() + 1.0 - 2.0;
        assert!((ml_fit_value(&s, &sigma).unwrap() - expected).abs() < 1e-14);
        assert!((expected - 0.3863).abs() < 1e-4);
    }

    #[test]
    fn unit_change_invariance() {
        let s = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.1, 0.3, 1.0, 0.2, 0.1, 0.2, 1.5]);
        let sigma = DMatrix::from_row_slice(3, 3, &[1.8, 0.2, 0.0, 0.2, 1.1, 0.25, 0.0, 0.25, 1.4]);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![10.0, 0.01, 3.0]));
        let f0 = ml_fit_value(&s, &sigma).unwrap();
        let f1 = ml_fit_value(&(&d * &s * &d), &(&d * &sigma * &d)).unwrap();
        assert!((f0 - f1).abs() < 1e-12);
    }

    #[test]
    fn non_pd_is_none() {
        let s = DMatrix::identity(2, 2);
        let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(ml_fit_value(&s, &sigma).is_none());
    }

    #[test]
    fn empty_a_gives_s_block() {
        let m = parse_model("x1 <-> x2\nvar(x3) = 2\nx1 <-> x3").unwrap();
        let r = build_ram(&m, &["x1", "x2", "x3"].map(String::from)).unwrap();
        let theta: Vec<f64> = (0..r.n_free()).map(|i| 0.1 * (i + 1) as f64 + 1.0).collect();
        let sigma = implied_cov(&r, &theta);
        let (_, s) = r.matrices(&theta);
        assert_eq!(sigma, s);
    }

    fn random_pd(rng: &mut ChaCha8Rng, p: usize) -> DMatrix<f64> {
        let x = DMatrix::from_fn(p, p + 3, |_, _| rng.random_range(-1.0..1.0));
        &x * x.transpose() + DMatrix::identity(p, p) * 0.5
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let models = [
            ("L -> x1 + x2 + x3 + x4", vec!["x1", "x2", "x3", "x4"]),
            ("y <- x1 + x2\nz <- y + x1", vec!["x1", "x2", "y", "z"]),
            ("A -> a1 + a2 + a3\nB -> b1 + b2 + b3\nA <-> B", vec!["a1", "a2", "a3", "b1", "b2", "b3"]),
            ("E <- q\nE -> t1 + t2", vec!["q", "t1", "t2"]),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (text, cols) in models {
            let m = parse_model(text).unwrap();
            let cols: Vec<String> = cols.into_iter().map(String::from).collect();
            let r = build_ram(&m, &cols).unwrap();
            let d = Discrepancy::new(&r, random_pd(&mut rng, cols.len())).unwrap();
            let theta: Vec<f64> = r.data_starts(&d.sample);
            let (_, g) = d.value_grad(&theta).unwrap();
            for i in 0..theta.len() {
                let h = 1e-6 * theta[i].abs().max(1.0);
                let mut tp = theta.clone();
                tp[i] += h;
                let mut tm = theta.clone();
                tm[i] -= h;
                let fd = (d.value(&tp).unwrap() - d.value(&tm).unwrap()) / (2.0 * h);
                let rel = (fd - g[i]).abs() / g[i].abs().max(1e-3);
                assert!(rel < 1e-4, "{text}: param {} fd {fd} analytic {}", r.free[i].id, g[i]);
            }
        }
    }

    #[test]
    fn information_matches_hessian_at_exact_fit() {
        // at Σ = S the Hessian of F equals the information
        let m = parse_model("L -> x1 + x2 + x3 + x4").unwrap();
        let cols: Vec<String> = ["x1", "x2", "x3", "x4"].map(String::from).to_vec();
        let r = build_ram(&m, &cols).unwrap();
        let theta = vec![0.9, 0.7, 0.5, 0.4, 0.3, 0.6, 0.5, 1.2];
        let sigma = implied_cov(&r, &theta);
        let d = Discrepancy::new(&r, sigma).unwrap();
        let info = d.information(&theta).unwrap();
        let hess = d.numerical_hessian(&theta).unwrap();
        assert!((info - hess).abs().max() < 1e-6);
    }
}
