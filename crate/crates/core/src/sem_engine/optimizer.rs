use nalgebra::{DMatrix, DVector};

use super::discrepancy::Discrepancy;

#[derive(Debug, Clone)]
pub struct OptimOutcome {
    pub theta: Vec<f64>,
    pub f: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub message: Option<String>,
}

const MAX_HALVINGS: usize = 30;
const ARMIJO: f64 = 1e-4;
const POLISH_STEPS: usize = 10;
/// Rise in F a polish step may cause, relative to |F|.
const POLISH_SLACK: f64 = 1e-12;

fn inf_norm(g: &DVector<f64>) -> f64 {
    g.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Inverse of the information matrix, or a scaled identity when it is
/// singular.
fn initial_inverse(obj: &Discrepancy, theta: &[f64]) -> DMatrix<f64> {
    let t = theta.len();
    obj.information(theta)
        .and_then(|info| info.cholesky())
        .map(|c| c.inverse())
        .unwrap_or_else(|| DMatrix::identity(t, t))
}

/// BFGS on the inverse Hessian, seeded with the inverse information matrix.
/// Steps that leave the positive-definite region or fail the sufficient
/// decrease test are halved. The loop stops early once `F` no longer moves
/// beyond rounding; a few Newton steps on the numerical Hessian (Fisher
/// scoring where it is not positive definite) then tighten the gradient.
pub fn minimize(obj: &Discrepancy, theta0: &[f64], max_iter: usize, grad_tol: f64) -> OptimOutcome {
    let Some((mut f, mut g)) = obj.value_grad(theta0) else {
        return OptimOutcome {
            theta: theta0.to_vec(),
            f: f64::NAN,
            gradient_norm: f64::NAN,
            iterations: 0,
            converged: false,
            message: Some("start values give a non-positive-definite implied covariance".into()),
        };
    };
    let mut theta = DVector::from_column_slice(theta0);
    let mut h = initial_inverse(obj, theta0);
    let mut fresh = true;
    let mut iterations = 0;
    let mut message = None;

    while iterations < max_iter && inf_norm(&g) >= grad_tol {
        let mut d = -(&h * &g);
        let mut slope = g.dot(&d);
        if !(slope < 0.0) {
            h = initial_inverse(obj, theta.as_slice());
            fresh = true;
            d = -(&h * &g);
            slope = g.dot(&d);
            if !(slope < 0.0) {
                d = -g.clone();
                slope = g.dot(&d);
            }
        }
        let tolerance = 4.0 * f64::EPSILON * f.abs().max(1.0);
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let cand = &theta + alpha * &d;
            if let Some((fc, gc)) = obj.value_grad(cand.as_slice()) {
                if fc <= f + ARMIJO * alpha * slope + tolerance {
                    accepted = Some((cand, fc, gc));
                    break;
                }
            }
            alpha *= 0.5;
        }
        iterations += 1;
        let Some((cand, fc, gc)) = accepted else {
            if fresh {
                message = Some("line search failed after step halving".into());
                break;
            }
            h = initial_inverse(obj, theta.as_slice());
            fresh = true;
            continue;
        };
        // F has reached its rounding floor; the gradient is left to the polish
        let flat = f - fc <= tolerance;
        let s = &cand - &theta;
        let y = &gc - &g;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            let rho = 1.0 / sy;
            let t = theta.len();
            let left = DMatrix::identity(t, t) - rho * &s * y.transpose();
            h = &left * &h * left.transpose() + rho * &s * s.transpose();
        }
        fresh = false;
        theta = cand;
        f = fc;
        g = gc;
        if flat {
            break;
        }
    }

    for _ in 0..POLISH_STEPS {
        let norm = inf_norm(&g);
        if norm < grad_tol * 1e-4 || iterations >= max_iter {
            break;
        }
        iterations += 1;
        let Some(step) = obj
            .numerical_hessian(theta.as_slice())
            .and_then(|h| h.cholesky())
            .or_else(|| obj.information(theta.as_slice()).and_then(|i| i.cholesky()))
            .map(|c| c.solve(&g))
        else {
            break;
        };
        let mut alpha = 1.0;
        let mut improved = false;
        for _ in 0..MAX_HALVINGS {
            let cand = &theta - alpha * &step;
            if let Some((fc, gc)) = obj.value_grad(cand.as_slice()) {
                if inf_norm(&gc) < norm && fc <= f + POLISH_SLACK * f.abs().max(1.0) {
                    theta = cand;
                    f = fc;
                    g = gc;
                    improved = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !improved {
            break;
        }
    }

    let gradient_norm = inf_norm(&g);
    let converged = gradient_norm < grad_tol;
    if !converged && message.is_none() {
        message = Some(format!(
            "no convergence after {iterations} iterations (gradient norm {gradient_norm:.3e})"
        ));
    }
    OptimOutcome {
        theta: theta.as_slice().to_vec(),
        f,
        gradient_norm,
        iterations,
        converged,
        message: if converged { None } else { message },
    }
}
