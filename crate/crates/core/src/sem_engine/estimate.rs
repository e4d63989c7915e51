use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::discrepancy::{implied_cov, Discrepancy};
use super::indices::{fit_indices, FitIndices};
use super::optimizer::minimize;
use super::ram::{Cell, Matrix, ParamKind, RamSystem};
use crate::corpus_io::CovInput;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateOptions {
    pub max_iter: usize,
    pub grad_tol: f64,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        EstimateOptions {
            max_iter: 500,
            grad_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterEstimate {
    pub id: String,
    pub kind: ParamKind,
    pub lhs: String,
    pub op: String,
    pub rhs: String,
    pub free: bool,
    /// Raw-scale value (B for paths).
    pub estimate: f64,
    pub se: Option<f64>,
    pub z: Option<f64>,
    pub p: Option<f64>,
    /// Standardized by model-implied standard deviations (β for paths).
    pub std: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RSquared {
    pub variable: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub converged: bool,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub f_min: f64,
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub manifests: Vec<String>,
    pub latents: Vec<String>,
    pub n: usize,
    pub is_correlation: bool,
    pub parameters: Vec<ParameterEstimate>,
    pub r_squared: Vec<RSquared>,
    /// Absent when estimation did not converge.
    pub indices: Option<FitIndices>,
    pub convergence: Convergence,
    /// Model-implied covariance of the manifests, row-major.
    pub implied: Vec<Vec<f64>>,
    pub warnings: Vec<String>,
}

impl FitResult {
    pub fn parameter(&self, id: &str) -> Option<&ParameterEstimate> {
        self.parameters.iter().find(|p| p.id == id)
    }

    pub fn free_ids(&self) -> impl Iterator<Item = &str> {
        self.parameters.iter().filter(|p| p.free).map(|p| p.id.as_str())
    }

    pub fn n_free(&self) -> usize {
        self.parameters.iter().filter(|p| p.free).count()
    }
}

fn describe(ram: &RamSystem, cell: &Cell) -> (String, String, String) {
    let name = |i: usize| ram.names[i].clone();
    match cell.kind {
        ParamKind::Loading => (name(cell.col), "->".into(), name(cell.row)),
        ParamKind::Regression => (name(cell.row), "<-".into(), name(cell.col)),
        ParamKind::Variance => (name(cell.row), "~~".into(), name(cell.row)),
        ParamKind::Covariance => {
            let (a, b) = (name(cell.row), name(cell.col));
            if a < b {
                (a, "<->".into(), b)
            } else {
                (b, "<->".into(), a)
            }
        }
    }
}

fn standardized(cell: &Cell, value: f64, sd: &[f64]) -> Option<f64> {
    let (r, c) = (cell.row, cell.col);
    let v = match cell.matrix {
        Matrix::A => value * sd[c] / sd[r],
        Matrix::S => value / (sd[r] * sd[c]),
    };
    v.is_finite().then_some(v)
}

fn two_sided_p(z: f64) -> f64 {
    erfc(z.abs() / std::f64::consts::SQRT_2).clamp(0.0, 1.0)
}

/// Maximum-likelihood estimation of `ram` on `data`.
pub fn estimate(ram: &RamSystem, data: &CovInput, options: &EstimateOptions) -> Result<FitResult> {
    let cov = data.to_cov_matrix()?;
    let manifest_refs: Vec<&str> = ram.manifests().iter().map(String::as_str).collect();
    let cov = cov
        .select(&manifest_refs)
        .map_err(|e| Error::Model(format!("model variable missing from data: {e}")))?;
    let n = cov.n;
    let p = ram.n_manifest;
    let t = ram.n_free();
    let moments = p * (p + 1) / 2;
    if t > moments {
        return Err(Error::Model(format!(
            "model has {t} free parameters but only {moments} observed moments; it is not identified"
        )));
    }
    let df = moments - t;

    let mut warnings = Vec::new();
    if cov.is_correlation {
        warnings.push(
            "input is a correlation matrix treated as covariances of standardized variables; standard errors are approximate"
                .to_string(),
        );
    }
    if n <= t {
        warnings.push(format!("sample size n={n} does not exceed the {t} free parameters"));
    }

    let obj = Discrepancy::new(ram, cov.values.clone()).ok_or_else(|| {
        Error::Estimation(
            "sample covariance matrix is not positive definite; remove collinear variables (see the collinearity stage of prep)"
                .into(),
        )
    })?;

    let mut start = ram.data_starts(&obj.sample);
    if obj.value(&start).is_none() {
        // fall back to a diagonal start, which is always feasible
        start = ram
            .free
            .iter()
            .map(|c| match c.kind {
                ParamKind::Variance if c.row < p => obj.sample[(c.row, c.row)],
                ParamKind::Variance => 1.0,
                _ => 0.0,
            })
            .collect();
    }
    let out = minimize(&obj, &start, options.max_iter, options.grad_tol);
    let theta = out.theta;

    let ses: Vec<Option<f64>> = match obj.numerical_hessian(&theta).and_then(|h| h.try_inverse()) {
        Some(inv) => (0..t)
            .map(|i| {
                let v = 2.0 / (n as f64 - 1.0) * inv[(i, i)];
                (v > 0.0 && v.is_finite()).then(|| v.sqrt())
            })
            .collect(),
        None => vec![None; t],
    };
    if ses.iter().any(Option::is_none) {
        warnings.push(
            "the Hessian is singular or indefinite at the solution; some parameters may not be identified"
                .into(),
        );
    }

    let full = ram.implied_full(&theta);
    let sd: Vec<f64> = (0..ram.n_vars()).map(|i| full[(i, i)].max(0.0).sqrt()).collect();
    let (_, s_mat) = ram.matrices(&theta);

    let mut parameters = Vec::with_capacity(t + ram.fixed.len());
    for (i, cell) in ram.free.iter().enumerate() {
        let (lhs, op, rhs) = describe(ram, cell);
        let est = theta[i];
        let se = ses[i];
        let z = se.map(|s| est / s);
        parameters.push(ParameterEstimate {
            id: cell.id.clone(),
            kind: cell.kind,
            lhs,
            op,
            rhs,
            free: true,
            estimate: est,
            se,
            z,
            p: z.map(two_sided_p),
            std: standardized(cell, est, &sd),
        });
    }
    for f in &ram.fixed {
        let (lhs, op, rhs) = describe(ram, &f.cell);
        parameters.push(ParameterEstimate {
            id: f.cell.id.clone(),
            kind: f.cell.kind,
            lhs,
            op,
            rhs,
            free: false,
            estimate: f.value,
            se: None,
            z: None,
            p: None,
            std: standardized(&f.cell, f.value, &sd),
        });
    }

    let r_squared = (0..ram.n_vars())
        .filter(|&i| ram.endogenous[i])
        .map(|i| RSquared {
            variable: ram.names[i].clone(),
            value: 1.0 - s_mat[(i, i)] / full[(i, i)],
        })
        .collect();

    let sigma: DMatrix<f64> = implied_cov(ram, &theta);
    let f_min = out.f.max(0.0);
    let indices = if out.converged {
        let chisq = (n as f64 - 1.0) * f_min;
        Some(fit_indices(chisq, df, n, t, &obj.sample, &sigma)?)
    } else {
        None
    };

    Ok(FitResult {
        manifests: ram.manifests().to_vec(),
        latents: ram.names[p..].to_vec(),
        n,
        is_correlation: cov.is_correlation,
        parameters,
        r_squared,
        indices,
        convergence: Convergence {
            converged: out.converged,
            iterations: out.iterations,
            gradient_norm: out.gradient_norm,
            f_min,
            message: out.message,
        },
        implied: (0..p).map(|i| (0..p).map(|j| sigma[(i, j)]).collect()).collect(),
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus_io::{CovMatrix, VariableMatrix};
    use crate::model_dsl::parse_model;
    use crate::sem_engine::ram::build_ram;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn corr3() -> CovInput {
        CovInput::Summary(
            CovMatrix::new(
                vec!["X1".into(), "X2".into(), "Y".into()],
                DMatrix::from_row_slice(3, 3, &[1.0, 0.6, 0.4, 0.6, 1.0, 0.6, 0.4, 0.6, 1.0]),
                1000,
                true,
            )
            .unwrap(),
        )
    }

    #[test]
    fn beta_arithmetic() {
        let data = corr3();
        let ram = build_ram(&parse_model("Y <- X1 + X2").unwrap(), data.names()).unwrap();
        let fit = estimate(&ram, &data, &EstimateOptions::default()).unwrap();
        // β = R_xx^-1 r_xy with r12 = 0.6: ((0.4 - 0.36), (0.6 - 0.24)) / 0.64
        let b1 = fit.parameter("Y <- X1").unwrap();
        let b2 = fit.parameter("Y <- X2").unwrap();
        assert!((b1.std.unwrap() - 0.0625).abs() < 1e-9, "{}", b1.std.unwrap());
        assert!((b2.std.unwrap() - 0.5625).abs() < 1e-9);
        assert!((b1.estimate - 0.0625).abs() < 1e-9);
        let r2 = fit.r_squared[0].value;
        assert!((r2 - (0.0625 * 0.4 + 0.5625 * 0.6)).abs() < 1e-9);
        let ix = fit.indices.unwrap();
        assert!(ix.saturated);
        assert_eq!(ix.df, 0);
        assert!(fit.warnings.iter().any(|w| w.contains("correlation")));
    }

    fn simulate_factor(seed: u64, n: usize, loadings: &[f64], resid: f64) -> VariableMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cols = vec![Vec::with_capacity(n); loadings.len()];
        for _ in 0..n {
            let eta: f64 = StandardNormal.sample(&mut rng);
            for (k, l) in loadings.iter().enumerate() {
                let e: f64 = StandardNormal.sample(&mut rng);
                cols[k].push(l * eta + resid.sqrt() * e);
            }
        }
        let names = (1..=loadings.len()).map(|i| format!("X{i}")).collect();
        VariableMatrix::new(names, cols).unwrap()
    }

    #[test]
    fn factor_recovery() {
        let data = CovInput::Raw(simulate_factor(3, 10_000, &[1.0, 0.8, 0.6], 0.5));
        let ram = build_ram(&parse_model("L -> X1 + X2 + X3").unwrap(), data.names()).unwrap();
        let fit = estimate(&ram, &data, &EstimateOptions::default()).unwrap();
        assert!(fit.convergence.converged);
        assert!((fit.parameter("L -> X2").unwrap().estimate - 0.8).abs() < 0.05);
        assert!((fit.parameter("L -> X3").unwrap().estimate - 0.6).abs() < 0.05);
        assert!((fit.parameter("var(L)").unwrap().estimate - 1.0).abs() < 0.1);
        assert_eq!(fit.parameter("L -> X1").unwrap().estimate, 1.0);
        assert!(!fit.parameter("L -> X1").unwrap().free);
    }

    #[test]
    fn overidentified_factor_fits_true_model() {
        let data = CovInput::Raw(simulate_factor(5, 5_000, &[1.0, 0.8, 0.6, 0.7], 0.5));
        let ram = build_ram(&parse_model("L -> X1 + X2 + X3 + X4").unwrap(), data.names()).unwrap();
        let fit = estimate(&ram, &data, &EstimateOptions::default()).unwrap();
        let ix = fit.indices.clone().unwrap();
        assert_eq!(ix.df, 2);
        assert!(ix.rmsea.lo90 <= ix.rmsea.point && ix.rmsea.point <= ix.rmsea.hi90);
        assert!(ix.cfi > 0.99);
        // standard error of a loading is roughly sqrt(1/n) scale
        let se = fit.parameter("L -> X2").unwrap().se.unwrap();
        assert!(se > 0.005 && se < 0.05, "{se}");
    }

    #[test]
    fn non_pd_sample_is_reported() {
        let x: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let z: Vec<f64> = x.iter().map(|v| (v * 0.7).sin()).collect();
        let data = CovInput::Raw(
            VariableMatrix::new(vec!["x".into(), "y".into(), "z".into()], vec![x, y, z]).unwrap(),
        );
        let ram = build_ram(&parse_model("z <- x + y").unwrap(), data.names()).unwrap();
        let err = estimate(&ram, &data, &EstimateOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Estimation(ref m) if m.contains("collinear")));
    }

    #[test]
    fn too_many_parameters() {
        let data = corr3();
        let text = "X1 <-> X2\nX1 <-> Y\nX2 <-> Y\nY <- X1 + X2";
        let ram = build_ram(&parse_model(text).unwrap(), data.names()).unwrap();
        assert!(matches!(
            estimate(&ram, &data, &EstimateOptions::default()),
            Err(Error::Model(_))
        ));
    }

    #[test]
    fn non_convergence_suppresses_indices() {
        let data = CovInput::Raw(simulate_factor(9, 500, &[1.0, 0.8, 0.6, 0.7], 0.5));
        let ram = build_ram(&parse_model("L -> X1 + X2 + X3 + X4").unwrap(), data.names()).unwrap();
        let opts = EstimateOptions {
            max_iter: 1,
            grad_tol: 1e-30,
        };
        let fit = estimate(&ram, &data, &opts).unwrap();
        assert!(!fit.convergence.converged);
        assert!(fit.indices.is_none());
        assert!(fit.convergence.message.is_some());
    }

    #[test]
    fn fixed_cells_are_reported_with_standardized_values() {
        let data = CovInput::Raw(simulate_factor(2, 2_000, &[1.0, 0.8, 0.6], 0.5));
        let ram = build_ram(&parse_model("L -> X1 + X2 + X3").unwrap(), data.names()).unwrap();
        let fit = estimate(&ram, &data, &EstimateOptions::default()).unwrap();
        assert!(fit.parameters.iter().all(|p| p.std.is_some()));
        let marker = fit.parameter("L -> X1").unwrap();
        assert!(marker.se.is_none());
        // one factor: squared standardized loading equals the indicator R²
        let r2 = fit.r_squared.iter().find(|r| r.variable == "X1").unwrap().value;
        assert!((marker.std.unwrap().powi(2) - r2).abs() < 1e-9);
    }
}
