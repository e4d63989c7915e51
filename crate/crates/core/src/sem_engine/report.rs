use std::fmt::Write;

use super::estimate::FitResult;

fn opt(v: Option<f64>, width: usize, prec: usize) -> String {
    match v {
        Some(x) => format!("{x:>width$.prec$}"),
        None => format!("{:>width$}", "-"),
    }
}

/// Plain-text rendering: parameter table (B, β, se, z, p), R², then the fit
/// block.
pub fn render_text(fit: &FitResult) -> String {
    let mut out = String::new();
    for w in &fit.warnings {
        let _ = writeln!(out, "NOTE: {w}");
    }
    if !fit.convergence.converged {
        let _ = writeln!(
            out,
            "NOT CONVERGED: {}",
            fit.convergence.message.as_deref().unwrap_or("unknown reason")
        );
    }
    let width = fit
        .parameters
        .iter()
        .map(|p| p.id.chars().count())
        .max()
        .unwrap_or(9)
        .max(9);
    let _ = writeln!(
        out,
        "{:<width$}  {:>10}  {:>8}  {:>9}  {:>8}  {:>7}",
        "parameter", "B", "beta", "se", "z", "p"
    );
    for p in &fit.parameters {
        let fixed = if p.free { "" } else { " (fixed)" };
        let _ = writeln!(
            out,
            "{:<width$}  {:>10.4}  {}  {}  {}  {}{fixed}",
            p.id,
            p.estimate,
            opt(p.std, 8, 4),
            opt(p.se, 9, 4),
            opt(p.z, 8, 3),
            opt(p.p, 7, 4),
        );
    }
    if !fit.r_squared.is_empty() {
        let _ = writeln!(out, "\nR-squared");
        for r in &fit.r_squared {
            let _ = writeln!(out, "  {:<width$}  {:.4}", r.variable, r.value);
        }
    }
    let _ = writeln!(
        out,
        "\nn = {}, iterations = {}, gradient = {:.2e}",
        fit.n, fit.convergence.iterations, fit.convergence.gradient_norm
    );
    if let Some(ix) = &fit.indices {
        let _ = writeln!(out, "chi-square = {:.4}, df = {}, p = {:.4}", ix.chisq, ix.df, ix.p_exact);
        if ix.saturated {
            let _ = writeln!(out, "saturated model: exact-fit test and RMSEA are not informative");
        }
        let _ = writeln!(
            out,
            "RMSEA = {:.4} (90% CI {:.4}, {:.4}), p-close = {:.4}",
            ix.rmsea.point, ix.rmsea.lo90, ix.rmsea.hi90, ix.rmsea.p_close
        );
        let tli = ix.tli.map_or("-".to_string(), |t| format!("{t:.4}"));
        let _ = writeln!(out, "CFI = {:.4}, TLI = {tli}, SRMR = {:.4}", ix.cfi, ix.srmr);
        let _ = writeln!(out, "AIC = {:.4}, BIC = {:.4}", ix.aic, ix.bic);
        let _ = writeln!(
            out,
            "baseline chi-square = {:.4}, df = {}",
            ix.baseline.chisq, ix.baseline.df
        );
        for f in ix.flags.iter().filter(|f| *f != "saturated") {
            let _ = writeln!(out, "flag: {f}");
        }
    }
    out
}
