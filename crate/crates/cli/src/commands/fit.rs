use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use irsem::corpus_io::{read_cov, read_csv, CovInput};
use irsem::model_dsl::{parse_model, validate, SemModel};
use irsem::sem_engine::{build_ram, estimate, render_text, EstimateOptions, FitResult};

use crate::args::{FitArgs, Global};
use crate::error::{code_of, exit, in_file, CliError, CliResult};
use crate::report::{
    config_echo, to_value, write_output, Inputs, Report, CHISQ_FORMULA, DISCREPANCY_FORMULA,
    IMPLIED_FORMULA, RMSEA_FORMULA,
};

pub const FIT_FORMULAS: [(&str, &str); 4] = [
    ("implied_covariance", IMPLIED_FORMULA),
    ("discrepancy", DISCREPANCY_FORMULA),
    ("chisq", CHISQ_FORMULA),
    ("rmsea", RMSEA_FORMULA),
];

#[derive(Debug, Serialize)]
pub struct GroupOutcome {
    pub group: String,
    pub status: &'static str,
    #[serde(skip)]
    pub code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitResult>,
}

fn status_of(fit: &FitResult) -> (&'static str, i32) {
    if fit.convergence.converged {
        ("converged", exit::OK)
    } else {
        ("not_converged", exit::ESTIMATION)
    }
}

fn fit_group(group: &str, model: &SemModel, input: CovInput, opts: &EstimateOptions) -> GroupOutcome {
    let res = build_ram(model, input.names()).and_then(|ram| estimate(&ram, &input, opts));
    match res {
        Ok(fit) => {
            let (status, code) = status_of(&fit);
            GroupOutcome {
                group: group.to_string(),
                status,
                code,
                error: None,
                fit: Some(fit),
            }
        }
        Err(e) => GroupOutcome {
            group: group.to_string(),
            status: "error",
            code: code_of(&e),
            error: Some(e.to_string()),
            fit: None,
        },
    }
}

/// Parses the model and checks it against the data columns.
pub fn load_model(path: &Path, text: &str, columns: &[String]) -> CliResult<SemModel> {
    let model = parse_model(text)
        .map_err(|e| CliError::model(format!("{}: {e}", path.display())))?;
    let names: BTreeSet<String> = columns.iter().cloned().collect();
    let diags = validate(&model, &names);
    if !diags.is_empty() {
        let list: Vec<String> = diags.iter().map(|d| format!("  {d}")).collect();
        return Err(CliError::model(format!(
            "{}: model does not match the data:\n{}",
            path.display(),
            list.join("\n")
        )));
    }
    Ok(model)
}

pub fn fit(g: &Global, a: &FitArgs) -> CliResult<i32> {
    if a.max_iter == 0 || !(a.grad_tol > 0.0) {
        return Err(CliError::input("--max-iter must be positive and --grad-tol > 0"));
    }
    let mut inputs = Inputs::default();
    let model_text = inputs.read("model", &a.model)?;
    let labels: Vec<&str> = a.label_columns.iter().map(String::as_str).collect();
    let (table, summary) = match (&a.data, &a.cov) {
        (Some(p), _) => {
            let t = inputs.read("data", p)?;
            (Some(read_csv(&t, &labels).map_err(in_file(p))?), None)
        }
        (None, Some(p)) => {
            let t = inputs.read("cov", p)?;
            (None, Some(read_cov(&t).map_err(in_file(p))?))
        }
        (None, None) => return Err(CliError::input("either --data or --cov is required")),
    };
    let columns = match (&table, &summary) {
        (Some(t), _) => t.matrix.names().to_vec(),
        (_, Some(c)) => c.names.clone(),
        _ => unreachable!(),
    };
    let model = load_model(&a.model, &model_text, &columns)?;
    let opts = EstimateOptions {
        max_iter: a.max_iter,
        grad_tol: a.grad_tol,
    };

    let (result, body, code) = if a.by_query {
        let table = table.expect("--by-query requires --data");
        let groups = table.group_by(&a.group_column)?;
        let run = |(q, t): &(String, irsem::corpus_io::LabeledMatrix)| {
            fit_group(q, &model, CovInput::Raw(t.matrix.clone()), &opts)
        };
        let outcomes: Vec<GroupOutcome> = if a.parallel {
            groups.par_iter().map(run).collect()
        } else {
            groups.iter().map(run).collect()
        };
        let code = outcomes.iter().map(|o| o.code).find(|&c| c != 0).unwrap_or(exit::OK);
        let mut body = String::new();
        for o in &outcomes {
            let _ = writeln!(body, "== {} = {} ({}) ==", a.group_column, o.group, o.status);
            match (&o.fit, &o.error) {
                (Some(f), _) => body.push_str(&render_text(f)),
                (_, Some(e)) => {
                    let _ = writeln!(body, "error: {e}");
                }
                _ => {}
            }
            body.push('\n');
        }
        (json!({ "groups": outcomes }), body, code)
    } else {
        let input = match (table, summary) {
            (Some(t), _) => CovInput::Raw(t.matrix),
            (_, Some(c)) => CovInput::Summary(c),
            _ => unreachable!(),
        };
        let ram = build_ram(&model, input.names())?;
        let fit = estimate(&ram, &input, &opts)?;
        let (status, code) = status_of(&fit);
        let body = render_text(&fit);
        (json!({ "status": status, "fit": to_value(&fit) }), body, code)
    };

    let report = Report::new("fit", config_echo(g, a), inputs, &FIT_FORMULAS, result);
    write_output(g.out.as_deref(), &report.render(g.format, &body))?;
    if code == exit::ESTIMATION && !g.quiet {
        eprintln!("irsem: estimation did not converge; the report is partial");
    }
    Ok(code)
}
