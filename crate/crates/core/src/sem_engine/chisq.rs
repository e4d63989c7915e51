use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

/// Central χ² CDF.
pub fn chisq_cdf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    gamma_lr(df / 2.0, x / 2.0)
}

/// Central χ² upper tail, computed directly so small p-values keep precision.
pub fn chisq_sf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    gamma_ur(df / 2.0, x / 2.0)
}

/// Noncentral χ² CDF as a Poisson mixture of central CDFs,
/// `sum_j Pois(j; λ/2) · P(χ²_{df+2j} ≤ x)`, summed outward from the Poisson
/// mode until the weights are negligible.
pub fn noncentral_chisq_cdf(x: f64, df: f64, lambda: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if lambda <= 0.0 {
        return chisq_cdf(x, df);
    }
    let mu = lambda / 2.0;
    let (k, half_x) = (df / 2.0, x / 2.0);
    let weight = |j: f64| (-mu + j * mu.ln() - ln_gamma(j + 1.0)).exp();
    const NEGLIGIBLE: f64 = 1e-17;

    let mode = mu.floor();
    let mut total = 0.0;
    let mut j = mode;
    loop {
        let w = weight(j);
        total += w * gamma_lr(k + j, half_x);
        if w < NEGLIGIBLE && j > mu {
            break;
        }
        j += 1.0;
    }
    let mut j = mode - 1.0;
    while j >= 0.0 {
        let w = weight(j);
        total += w * gamma_lr(k + j, half_x);
        if w < NEGLIGIBLE {
            break;
        }
        j -= 1.0;
    }
    total.clamp(0.0, 1.0)
}

/// The noncentrality λ ≥ 0 at which `P(X ≤ x) = target` for
/// X ~ χ²(df, λ); 0 when the central CDF is already below `target`.
pub fn noncentrality_for(x: f64, df: f64, target: f64) -> f64 {
    let g = |lambda: f64| noncentral_chisq_cdf(x, df, lambda) - target;
    if g(0.0) <= 0.0 {
        return 0.0;
    }
    let mut hi = x.max(1.0);
    while g(hi) > 0.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi.max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}
