use std::fmt::Write as _;

use serde_json::json;

use irsem::corpus_io::{
    covariance, join as join_records, parse_features, parse_qrels, parse_run, parse_schema,
    read_cov, read_csv, variance, write_cov, write_csv, CovKind, FeatureFormat, LabeledMatrix,
    VariableMatrix,
};
use irsem::ir_metrics::{doc_precision, DOC_PRECISION_FORMULA};
use irsem::prep::{
    collinearity, log_shift, moments, outliers_to_mean, parse_keep_list, rescale_variances,
    MomentsReport, LOG_SHIFT_FORMULA,
};

use crate::args::{CovExportArgs, CovImportArgs, Global, JoinArgs, PrepArgs};
use crate::error::{exit, in_file, CliError, CliResult};
use crate::report::{
    config_echo, to_value, write_output, Inputs, Report, OUTLIER_FORMULA, RESCALE_FORMULA,
};

fn labels_of(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

pub fn join(g: &Global, a: &JoinArgs) -> CliResult<i32> {
    let mut inputs = Inputs::default();
    let schema_text = inputs.read("schema", &a.schema)?;
    let run_text = inputs.read("run", &a.run)?;
    let qrels_text = a.qrels.as_ref().map(|p| inputs.read("qrels", p)).transpose()?;
    let feat_text = inputs.read("features", &a.features)?;

    let schema = parse_schema(&schema_text).map_err(in_file(&a.schema))?;
    let run = parse_run(&run_text).map_err(in_file(&a.run))?;
    let qrels = match (&a.qrels, &qrels_text) {
        (Some(p), Some(t)) => parse_qrels(t).map_err(in_file(p))?,
        _ => Vec::new(),
    };
    let format = FeatureFormat {
        comment: a.comment_char,
        docid_key: a.docid_key.clone(),
    };
    let feats = parse_features(&feat_text, &schema, &format).map_err(in_file(&a.features))?;

    let (table, diag) = join_records(&run, &qrels, &feats);
    let mut labeled = table.to_labeled()?;
    let ranks = labeled.matrix.column("rank").unwrap_or_default().to_vec();
    let rels = labeled.matrix.column("qrel").unwrap_or_default().to_vec();
    let y = ranks
        .iter()
        .zip(&rels)
        .map(|(&r, &q)| doc_precision(q as u32, r as u32))
        .collect();
    labeled.matrix.push_column("docprec", y)?;
    write_output(g.out.as_deref(), &write_csv(&labeled)?)?;

    let line = format!(
        "joined={} dropped={} unjudged_defaulted={}",
        diag.joined, diag.dropped, diag.unjudged_defaulted
    );
    if !g.quiet {
        eprintln!("{line}");
    }
    if let Some(path) = &a.report {
        let report = Report::new(
            "join",
            config_echo(g, a),
            inputs,
            &[("docprec", DOC_PRECISION_FORMULA)],
            to_value(&diag),
        );
        write_output(Some(path), &report.render(g.format, &format!("{line}\n")))?;
    }
    Ok(exit::OK)
}

/// Any failure inside the prep stages exits with the prep status.
fn stage(e: irsem::Error) -> CliError {
    CliError::new(exit::PREP, e.to_string())
}

fn variance_ratio(m: &VariableMatrix) -> Option<f64> {
    let vars: Vec<f64> = m.columns().iter().map(|c| variance(c)).collect();
    let lo = vars.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = vars.iter().copied().fold(0.0, f64::max);
    (lo > 0.0 && !vars.is_empty()).then(|| hi / lo)
}

fn moments_table(out: &mut String, title: &str, m: &MomentsReport) {
    let _ = writeln!(out, "{title}");
    let _ = writeln!(
        out,
        "  {:<16} {:>12} {:>12} {:>9} {:>9}",
        "variable", "mean", "variance", "skew", "kurt"
    );
    let f = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.3}"));
    for v in &m.variables {
        let _ = writeln!(
            out,
            "  {:<16} {:>12.5} {:>12.5e} {:>9} {:>9}",
            v.variable,
            v.mean,
            v.variance,
            f(v.skewness),
            f(v.excess_kurtosis)
        );
    }
}

pub fn prep(g: &Global, a: &PrepArgs) -> CliResult<i32> {
    if !(a.collinearity_threshold > 0.0 && a.collinearity_threshold <= 1.0) {
        return Err(CliError::input("--collinearity-threshold must be in (0, 1]"));
    }
    if !(a.outlier_z > 0.0) {
        return Err(CliError::input("--outlier-z must be positive"));
    }
    if !(a.max_ratio >= 1.0) {
        return Err(CliError::input("--max-ratio must be at least 1"));
    }
    let mut inputs = Inputs::default();
    let text = inputs.read("input", &a.input)?;
    let keep = match &a.keep_list {
        Some(p) => parse_keep_list(&inputs.read("keep_list", p)?),
        None => Vec::new(),
    };
    let table = read_csv(&text, &labels_of(&a.label_columns)).map_err(in_file(&a.input))?;
    let all = table.matrix.names().to_vec();
    let prepared: Vec<&str> = all
        .iter()
        .filter(|n| !a.passthrough.contains(n))
        .map(String::as_str)
        .collect();
    if prepared.is_empty() {
        return Err(CliError::input("no numeric columns left to prepare"));
    }
    let mut work = table.matrix.select(&prepared)?;
    let before = moments(&work).map_err(stage)?;

    let coll = if a.no_collinearity {
        None
    } else {
        let cov = covariance(&work, CovKind::Covariance).map_err(stage)?;
        let rep = collinearity(&cov, a.collinearity_threshold, &keep).map_err(stage)?;
        work = work.without(&rep.ignored());
        Some(rep)
    };
    let outliers = if a.no_outliers {
        None
    } else {
        let (w, counts) = outliers_to_mean(&work, a.outlier_z).map_err(stage)?;
        work = w;
        Some(counts)
    };
    let logged = if a.no_log_shift {
        None
    } else {
        work = log_shift(&work, &labels_of(&a.log_targets)).map_err(stage)?;
        Some(a.log_targets.clone())
    };
    // passthrough columns rejoin the table before rescaling
    let mut names = Vec::new();
    let mut cols = Vec::new();
    let mut dropped = Vec::new();
    for name in &all {
        let col = if a.passthrough.contains(name) {
            table.matrix.column(name)
        } else {
            work.column(name)
        };
        match col {
            Some(c) => {
                names.push(name.clone());
                cols.push(c.to_vec());
            }
            None => dropped.push(name.clone()),
        }
    }
    let mut combined = VariableMatrix::new(names, cols)?;
    let rescale = if a.no_rescale {
        None
    } else {
        let (w, r) = rescale_variances(&combined, a.max_ratio).map_err(stage)?;
        combined = w;
        Some(r)
    };
    let prepared_now: Vec<&str> = work.names().iter().map(String::as_str).collect();
    let after = moments(&combined.select(&prepared_now)?).map_err(stage)?;
    let final_ratio = variance_ratio(&combined);

    let out = LabeledMatrix::new(table.labels.clone(), combined)?;
    write_output(g.out.as_deref(), &write_csv(&out)?)?;

    let summary = format!(
        "prepared={} dropped={} final_ratio={}",
        work.names().len(),
        dropped.len(),
        final_ratio.map_or("-".to_string(), |r| format!("{r:.4}"))
    );
    if !g.quiet {
        eprintln!("{summary}");
    }
    if let Some(path) = &a.report {
        let passthrough: Vec<&String> = all.iter().filter(|n| a.passthrough.contains(n)).collect();
        let result = json!({
            "columns": {
                "passthrough": passthrough,
                "prepared": work.names(),
                "dropped": dropped,
            },
            "collinearity": coll,
            "outliers": outliers,
            "log_shift": logged.as_ref().map(|t| json!({ "targets": t })),
            "rescale": rescale,
            "moments_before": before,
            "moments_after": after,
            "final_variance_ratio": final_ratio,
        });
        let mut body = format!("{summary}\n\n");
        if let Some(c) = &coll {
            let _ = writeln!(body, "collinearity (|r| >= {})", c.threshold);
            for comp in &c.components {
                let _ = writeln!(
                    body,
                    "  {{{}}} kept {}{}",
                    comp.members.join(", "),
                    comp.kept,
                    if comp.complete { "" } else { " (not a clique)" }
                );
            }
            if c.components.is_empty() {
                let _ = writeln!(body, "  none");
            }
        }
        if let Some(counts) = &outliers {
            let _ = writeln!(body, "outliers replaced by the mean (z > {})", a.outlier_z);
            for o in counts.iter().filter(|o| o.replaced > 0) {
                let _ = writeln!(body, "  {:<16} {}", o.variable, o.replaced);
            }
        }
        if let Some(t) = &logged {
            let _ = writeln!(body, "log shift: {}", if t.is_empty() { "no targets".to_string() } else { t.join(", ") });
        }
        if let Some(r) = &rescale {
            let _ = writeln!(
                body,
                "rescale: {} doublings, ratio {:.4} -> {:.4} (max {})",
                r.doublings, r.initial_ratio, r.final_ratio, r.max_ratio
            );
            for (v, m) in r.multipliers.iter().filter(|(_, m)| *m != 1.0) {
                let _ = writeln!(body, "  {v:<16} x{m}");
            }
        }
        body.push('\n');
        moments_table(&mut body, "moments before", &before);
        moments_table(&mut body, "moments after", &after);
        let report = Report::new(
            "prep",
            config_echo(g, a),
            inputs,
            &[
                ("log_shift", LOG_SHIFT_FORMULA),
                ("outliers", OUTLIER_FORMULA),
                ("rescale", RESCALE_FORMULA),
            ],
            result,
        );
        write_output(Some(path), &report.render(g.format, &body))?;
    }
    Ok(exit::OK)
}

pub fn cov_export(g: &Global, a: &CovExportArgs) -> CliResult<i32> {
    let mut inputs = Inputs::default();
    let text = inputs.read("data", &a.data)?;
    let table = read_csv(&text, &labels_of(&a.label_columns)).map_err(in_file(&a.data))?;
    let m = match &a.variables {
        Some(v) => table.matrix.select(&labels_of(v))?,
        None => table.matrix,
    };
    let kind = if a.correlation {
        CovKind::Correlation
    } else {
        CovKind::Covariance
    };
    write_output(g.out.as_deref(), &write_cov(&covariance(&m, kind)?))?;
    Ok(exit::OK)
}

pub fn cov_import(g: &Global, a: &CovImportArgs) -> CliResult<i32> {
    let mut inputs = Inputs::default();
    let text = inputs.read("cov", &a.cov)?;
    let c = read_cov(&text).map_err(in_file(&a.cov))?;
    let rows: Vec<Vec<f64>> = (0..c.dim())
        .map(|i| c.values.row(i).iter().copied().collect())
        .collect();
    let result = json!({
        "names": c.names,
        "n": c.n,
        "is_correlation": c.is_correlation,
        "values": rows,
    });
    let body = write_cov(&c);
    let report = Report::new("cov import", config_echo(g, a), inputs, &[], result);
    write_output(g.out.as_deref(), &report.render(g.format, &body))?;
    Ok(exit::OK)
}
