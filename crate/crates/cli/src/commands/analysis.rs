use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde_json::json;

use irsem::corpus_io::{covariance, read_cov, read_csv, CovKind, CovMatrix};
use irsem::prep::{efa, pca, FactorSolution};
use irsem::sem_engine::{compare_information, compare_nested, FitResult};

use crate::args::{name_of, CompareArgs, EfaArgs, Global, MatrixSource, PcaArgs};
use crate::error::{exit, in_file, CliError, CliResult};
use crate::report::{config_echo, to_value, write_output, Inputs, Report};

fn load_matrix(src: &MatrixSource, inputs: &mut Inputs) -> CliResult<CovMatrix> {
    let c = match (&src.data, &src.cov) {
        (Some(p), _) => {
            let text = inputs.read("data", p)?;
            let labels: Vec<&str> = src.label_columns.iter().map(String::as_str).collect();
            let t = read_csv(&text, &labels).map_err(in_file(p))?;
            covariance(&t.matrix, CovKind::Covariance)?
        }
        (None, Some(p)) => read_cov(&inputs.read("cov", p)?).map_err(in_file(p))?,
        (None, None) => return Err(CliError::input("either --data or --cov is required")),
    };
    match &src.variables {
        Some(v) => Ok(c.select(&v.iter().map(String::as_str).collect::<Vec<_>>())?),
        None => Ok(c),
    }
}

fn factor_table(s: &FactorSolution) -> String {
    let k = s.loadings.first().map_or(0, Vec::len);
    let mut out = String::new();
    let _ = write!(out, "{:<16}", "variable");
    for j in 0..k {
        let _ = write!(out, " {:>8}", format!("F{}", j + 1));
    }
    if s.communalities.is_some() {
        let _ = write!(out, " {:>8}", "h2");
    }
    out.push('\n');
    for (i, v) in s.variables.iter().enumerate() {
        let _ = write!(out, "{v:<16}");
        for j in 0..k {
            let cell = match &s.display {
                Some(d) => d[i][j].map_or(String::new(), |x| format!("{x:.3}")),
                None => format!("{:.3}", s.loadings[i][j]),
            };
            let _ = write!(out, " {cell:>8}");
        }
        if let Some(h) = &s.communalities {
            let _ = write!(out, " {:>8.3}", h[i]);
        }
        out.push('\n');
    }
    if let Some(signs) = &s.signs {
        let _ = writeln!(out, "\nsigns (|loading| < {} -> 0)", s.sign_threshold.unwrap_or(0.0));
        for (i, v) in s.variables.iter().enumerate() {
            let row: Vec<String> = signs[i].iter().map(|x| x.to_string()).collect();
            let _ = writeln!(out, "{v:<16} {}", row.join(" "));
        }
    }
    let _ = writeln!(out, "\n{:<10} {:>10} {:>10} {:>10}", "factor", "eigenvalue", "prop", "cum");
    for j in 0..k {
        let _ = writeln!(
            out,
            "{:<10} {:>10.4} {:>10.4} {:>10.4}",
            format!("F{}", j + 1),
            s.eigenvalues[j],
            s.proportion[j],
            s.cumulative[j]
        );
    }
    for v in &s.heywood {
        let _ = writeln!(out, "NOTE: Heywood case for {v}: communality clipped to 1");
    }
    out
}

pub fn run_pca(g: &Global, a: &PcaArgs) -> CliResult<i32> {
    let mut inputs = Inputs::default();
    let c = load_matrix(&a.source, &mut inputs)?;
    let s = pca(&c, a.components, a.sign_threshold)?;
    let body = factor_table(&s);
    let report = Report::new(
        "pca",
        config_echo(g, a),
        inputs,
        &[("loading", "eigenvector of the correlation matrix times sqrt(eigenvalue)")],
        to_value(&s),
    );
    write_output(g.out.as_deref(), &report.render(g.format, &body))?;
    Ok(exit::OK)
}

pub fn run_efa(g: &Global, a: &EfaArgs) -> CliResult<i32> {
    let mut inputs = Inputs::default();
    let c = load_matrix(&a.source, &mut inputs)?;
    let s = efa(&c, a.factors, a.suppress)?;
    let body = factor_table(&s);
    let report = Report::new(
        "efa",
        config_echo(g, a),
        inputs,
        &[("extraction", "principal axis, communalities start at squared multiple correlations")],
        to_value(&s),
    );
    write_output(g.out.as_deref(), &report.render(g.format, &body))?;
    if !s.heywood.is_empty() && !g.quiet {
        eprintln!("irsem: Heywood case for {}", s.heywood.join(", "));
    }
    Ok(exit::OK)
}

fn load_fit(path: &std::path::Path, text: &str) -> CliResult<(Report, FitResult)> {
    let r: Report = serde_json::from_str(text).map_err(|e| {
        CliError::input(format!("{}: not a machine-format report: {e}", path.display()))
    })?;
    if r.command != "fit" {
        return Err(CliError::input(format!(
            "{}: a `{}` report, not a fit report",
            path.display(),
            r.command
        )));
    }
    let fit = r
        .result
        .get("fit")
        .cloned()
        .ok_or_else(|| {
            CliError::input(format!("{}: per-query reports cannot be compared", path.display()))
        })
        .and_then(|v| {
            serde_json::from_value(v).map_err(|e| {
                CliError::input(format!("{}: malformed fit result: {e}", path.display()))
            })
        })?;
    Ok((r, fit))
}

fn data_digest(r: &Report) -> Option<&str> {
    r.input("data").or_else(|| r.input("cov")).map(|d| d.sha256.as_str())
}

pub fn compare(g: &Global, a: &CompareArgs) -> CliResult<i32> {
    let mut inputs = Inputs::default();
    let (ra, fa) = load_fit(&a.first, &inputs.read("first", &a.first)?)?;
    let (rb, fb) = load_fit(&a.second, &inputs.read("second", &a.second)?)?;
    let (da, db) = (data_digest(&ra), data_digest(&rb));
    if da.is_none() || da != db {
        return Err(CliError::new(
            exit::MODEL,
            format!(
                "the reports were fitted on different data (sha256 {} vs {})",
                da.unwrap_or("-"),
                db.unwrap_or("-")
            ),
        ));
    }
    let ids = |f: &FitResult| f.free_ids().map(str::to_string).collect::<BTreeSet<_>>();
    let (ia, ib) = (ids(&fa), ids(&fb));
    let (na, nb) = (name_of(&a.first), name_of(&a.second));
    let nested = if ib.is_subset(&ia) {
        Some((&fa, &fb, &na, &nb))
    } else if ia.is_subset(&ib) {
        Some((&fb, &fa, &nb, &na))
    } else {
        None
    };
    let (result, body) = match nested {
        Some((full, restricted, nf, nr)) => {
            let c = compare_nested(full, restricted)?;
            let mut body = format!(
                "nested comparison: {nr} restricts {nf}\ndelta chi-square = {:.4}, delta df = {}, p = {:.4}\n",
                c.delta_chisq, c.delta_df, c.p
            );
            for w in &c.warnings {
                let _ = writeln!(body, "NOTE: {w}");
            }
            let mut v = to_value(&c);
            v["kind"] = json!("nested");
            v["full"] = json!(nf);
            v["restricted"] = json!(nr);
            (v, body)
        }
        None => {
            let c = compare_information(&fa, &fb)?;
            let names = [&na, &nb];
            let body = format!(
                "models are not nested; information criteria\n{:<24} {:>12} {:>12}\n{:<24} {:>12.4} {:>12.4}\n{:<24} {:>12.4} {:>12.4}\npreferred by AIC: {}\npreferred by BIC: {}\n",
                "model", "AIC", "BIC", na, c.aic[0], c.bic[0], nb, c.aic[1], c.bic[1],
                names[c.preferred_aic], names[c.preferred_bic]
            );
            let mut v = to_value(&c);
            v["kind"] = json!("information");
            v["models"] = json!([na, nb]);
            (v, body)
        }
    };
    let report = Report::new(
        "compare",
        config_echo(g, a),
        inputs,
        &[
            ("nested", "delta chisq = chisq(restricted) - chisq(full), p = P(chisq_ddf > delta)"),
            ("information", "AIC = chisq + 2t, BIC = chisq + t ln n"),
        ],
        result,
    );
    write_output(g.out.as_deref(), &report.render(g.format, &body))?;
    Ok(exit::OK)
}
