use std::collections::BTreeMap;

use super::validate::{check_structure, Diagnostic};
use super::{ClauseKey, Covariance, Measurement, Param, Regression, SemModel, Term, VarianceFix};
use crate::error::{Error, Result};

#[derive(Clone, Copy, PartialEq)]
enum Op {
    Regression,
    Measurement,
    Covariance,
}

fn valid_name(s: &str) -> bool {
    !s.is_empty()
        && s.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '.')
        && !s.chars().next().is_some_and(|c| c.is_ascii_digit() || c == '.')
}

/// Splits on `+` but not on the sign of an exponent (`1e+3*X`).
fn split_terms(rhs: &str) -> Vec<&str> {
    let bytes = rhs.as_bytes();
    let mut out = Vec::new();
    let mut start = 0;
    for (i, &b) in bytes.iter().enumerate() {
        if b != b'+' {
            continue;
        }
        let exponent = i >= 2
            && matches!(bytes[i - 1], b'e' | b'E')
            && bytes[i - 2].is_ascii_digit()
            && rhs[start..i].trim().chars().all(|c| c.is_ascii_digit() || ".eE-".contains(c));
        if !exponent {
            out.push(&rhs[start..i]);
            start = i + 1;
        }
    }
    out.push(&rhs[start..]);
    out
}

fn parse_term(raw: &str, line: usize) -> Result<Term> {
    let raw = raw.trim();
    if raw.is_empty() {
        return Err(Error::parse(line, "empty term"));
    }
    let (value, name) = match raw.split_once('*') {
        Some((v, n)) => {
            let v = v.trim();
            let value: f64 = v
                .parse()
                .map_err(|_| Error::parse(line, format!("invalid fixed value {v:?}")))?;
            if !value.is_finite() {
                return Err(Error::parse(line, format!("fixed value {v:?} is not finite")));
            }
            (Param::Fixed(value), n.trim())
        }
        None => (Param::Free, raw),
    };
    if !valid_name(name) {
        return Err(Error::parse(line, format!("invalid variable name {name:?}")));
    }
    Ok(Term {
        name: name.to_string(),
        value,
    })
}

fn split_operator(stmt: &str) -> Option<(&str, Op, &str)> {
    if let Some((l, r)) = stmt.split_once("<->") {
        return Some((l, Op::Covariance, r));
    }
    if let Some((l, r)) = stmt.split_once("<-") {
        return Some((l, Op::Regression, r));
    }
    if let Some((l, r)) = stmt.split_once("->") {
        return Some((l, Op::Measurement, r));
    }
    None
}

fn parse_variance_fix(stmt: &str, line: usize) -> Result<Option<VarianceFix>> {
    let Some(rest) = stmt.strip_prefix("var(") else {
        return Ok(None);
    };
    let (name, tail) = rest
        .split_once(')')
        .ok_or_else(|| Error::parse(line, "unclosed `var(`"))?;
    let name = name.trim();
    if !valid_name(name) {
        return Err(Error::parse(line, format!("invalid variable name {name:?}")));
    }
    let value = tail
        .trim()
        .strip_prefix('=')
        .ok_or_else(|| Error::parse(line, "expected `var(<name>) = <value>`"))?
        .trim();
    let value: f64 = value
        .parse()
        .map_err(|_| Error::parse(line, format!("invalid variance value {value:?}")))?;
    if !value.is_finite() {
        return Err(Error::parse(line, "variance value is not finite"));
    }
    Ok(Some(VarianceFix {
        name: name.to_string(),
        value,
    }))
}

/// Adds `term` to `terms`, keeping the first occurrence. A repeat with a
/// different value is a conflict.
fn merge_term(terms: &mut Vec<Term>, term: Term, line: usize, clause: &str) -> Result<()> {
    match terms.iter().find(|t| t.name == term.name) {
        Some(existing) if existing.value == term.value => Ok(()),
        Some(existing) => Err(Error::parse(
            line,
            format!(
                "conflicting values for {} in `{clause}`: {:?} vs {:?}",
                term.name, existing.value, term.value
            ),
        )),
        None => {
            terms.push(term);
            Ok(())
        }
    }
}

/// Parses model text without the structural checks (cycles, empty latents).
pub fn parse_model_unchecked(text: &str) -> Result<SemModel> {
    let mut regressions: Vec<Regression> = Vec::new();
    let mut measurements: Vec<Measurement> = Vec::new();
    let mut covariances: Vec<Covariance> = Vec::new();
    let mut variance_fixes: Vec<VarianceFix> = Vec::new();
    let mut lines: BTreeMap<ClauseKey, usize> = BTreeMap::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let stmt = raw.split('#').next().unwrap_or("").trim();
        if stmt.is_empty() {
            continue;
        }
        if let Some(fix) = parse_variance_fix(stmt, line)? {
            let key = ClauseKey::Variance(fix.name.clone());
            match variance_fixes.iter().find(|v| v.name == fix.name) {
                Some(v) if v.value != fix.value => {
                    return Err(Error::parse(
                        line,
                        format!(
                            "conflicting fixed variances for {}: {} vs {}",
                            fix.name, v.value, fix.value
                        ),
                    ))
                }
                Some(_) => {}
                None => {
                    lines.entry(key).or_insert(line);
                    variance_fixes.push(fix);
                }
            }
            continue;
        }
        let (lhs, op, rhs) = split_operator(stmt).ok_or_else(|| {
            Error::parse(line, format!("unknown operator in {stmt:?}; expected <-, -> or <->"))
        })?;
        let lhs = lhs.trim();
        if !valid_name(lhs) {
            return Err(Error::parse(line, format!("invalid left-hand side {lhs:?}")));
        }
        let rhs = rhs.trim();
        if rhs.is_empty() {
            let msg = match op {
                Op::Measurement => format!("latent {lhs} has no indicators"),
                _ => format!("`{lhs}` has an empty right-hand side"),
            };
            return Err(Error::parse(line, msg));
        }
        let terms: Vec<Term> = split_terms(rhs)
            .into_iter()
            .map(|t| parse_term(t, line))
            .collect::<Result<_>>()?;

        match op {
            Op::Regression => {
                let key = ClauseKey::Regression(lhs.to_string());
                lines.entry(key).or_insert(line);
                let pos = match regressions.iter().position(|r| r.outcome == lhs) {
                    Some(p) => p,
                    None => {
                        regressions.push(Regression {
                            outcome: lhs.to_string(),
                            predictors: Vec::new(),
                        });
                        regressions.len() - 1
                    }
                };
                for t in terms {
                    if t.name == lhs {
                        return Err(Error::parse(line, format!("{lhs} cannot predict itself")));
                    }
                    merge_term(&mut regressions[pos].predictors, t, line, stmt)?;
                }
            }
            Op::Measurement => {
                let key = ClauseKey::Measurement(lhs.to_string());
                lines.entry(key).or_insert(line);
                let pos = match measurements.iter().position(|m| m.latent == lhs) {
                    Some(p) => p,
                    None => {
                        measurements.push(Measurement {
                            latent: lhs.to_string(),
                            indicators: Vec::new(),
                        });
                        measurements.len() - 1
                    }
                };
                for t in terms {
                    if t.name == lhs {
                        return Err(Error::parse(line, format!("{lhs} cannot indicate itself")));
                    }
                    merge_term(&mut measurements[pos].indicators, t, line, stmt)?;
                }
            }
            Op::Covariance => {
                for t in terms {
                    if t.name == lhs {
                        return Err(Error::parse(
                            line,
                            format!("use `var({lhs}) = <value>` to fix a variance"),
                        ));
                    }
                    let (left, right) = if lhs < t.name.as_str() {
                        (lhs.to_string(), t.name.clone())
                    } else {
                        (t.name.clone(), lhs.to_string())
                    };
                    match covariances
                        .iter()
                        .find(|c| c.left == left && c.right == right)
                    {
                        Some(c) if c.value != t.value => {
                            return Err(Error::parse(
                                line,
                                format!("conflicting values for covariance {left} <-> {right}"),
                            ))
                        }
                        Some(_) => {}
                        None => {
                            lines
                                .entry(ClauseKey::Covariance(left.clone(), right.clone()))
                                .or_insert(line);
                            covariances.push(Covariance {
                                left,
                                right,
                                value: t.value,
                            });
                        }
                    }
                }
            }
        }
    }

    let mut model = SemModel {
        measurements,
        regressions,
        covariances,
        variance_fixes,
        lines,
    };
    model.canonicalize();
    Ok(model)
}

fn first_error(diags: Vec<Diagnostic>) -> Result<()> {
    match diags.into_iter().next() {
        None => Ok(()),
        Some(d) => Err(Error::Model(if d.line > 0 {
            format!("line {}: {}", d.line, d.message)
        } else {
            d.message
        })),
    }
}

/// Parses and checks a model: the structural graph must be acyclic and every
/// latent must have a settable scale.
pub fn parse_model(text: &str) -> Result<SemModel> {
    let model = parse_model_unchecked(text)?;
    first_error(check_structure(&model))?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regression_and_measurement() {
        let m = parse_model("Y <- X1 + X2\nA -> X4 + X6").unwrap();
        assert_eq!(m.regressions.len(), 1);
        assert_eq!(m.regressions[0].outcome, "Y");
        assert_eq!(
            m.regressions[0].predictors,
            vec![Term::free("X1"), Term::free("X2")]
        );
        assert_eq!(m.measurements[0].latent, "A");
        assert_eq!(
            m.measurements[0].indicators,
            vec![Term::free("X4"), Term::free("X6")]
        );
    }

    #[test]
    fn fixed_loading_syntax() {
        let m = parse_model("A -> 1*X1 + X2\nB -> X1\nA <-> B").unwrap();
        assert_eq!(m.measurements[0].indicators[0], Term::fixed("X1", 1.0));
        assert_eq!(m.covariances.len(), 1);
        assert_eq!(m.covariances[0].left, "A");
        assert_eq!(m.covariances[0].value, Param::Free);
    }

    #[test]
    fn lines_merge_in_order() {
        let m = parse_model("Y <- a\n# comment\nY <- b + a  # trailing\n").unwrap();
        assert_eq!(
            m.regressions[0].predictors,
            vec![Term::free("a"), Term::free("b")]
        );
        assert_eq!(m.line_of(&ClauseKey::Regression("Y".into())), 1);
    }

    #[test]
    fn unknown_operator_has_line() {
        let err = parse_model("Y <- X\nY ~ X").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn conflicting_fixed_values() {
        assert!(parse_model("A -> 1*X + Y\nA -> 2*X").is_err());
        assert!(parse_model("A -> X + Y\nA -> 1*X").is_err());
        assert!(parse_model("var(X) = 1\nvar(X) = 2\nY <- X").is_err());
        assert!(parse_model("A -> 1*X + Y\nA -> 1*X").is_ok());
    }

    #[test]
    fn empty_latent_rejected() {
        let err = parse_model("A ->").unwrap_err();
        assert!(err.to_string().contains("no indicators"));
    }

    #[test]
    fn cycle_rejected_with_path() {
        let err = parse_model("A -> B\nB -> A").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("cycle"), "{msg}");
        assert!(msg.contains("A -> B -> A") || msg.contains("B -> A -> B"), "{msg}");
    }

    #[test]
    fn variance_fix_and_negative_values() {
        let m = parse_model("Y <- -0.5*X + 1e+3*Z\nvar(Y) = 0.25").unwrap();
        assert_eq!(m.regressions[0].predictors[0], Term::fixed("X", -0.5));
        assert_eq!(m.regressions[0].predictors[1], Term::fixed("Z", 1000.0));
        assert_eq!(m.variance_fixes[0].value, 0.25);
    }

    #[test]
    fn covariance_pairs_are_canonical() {
        let m = parse_model("b <-> a + c\nY <- a + b + c").unwrap();
        let pairs: Vec<_> = m
            .covariances
            .iter()
            .map(|c| (c.left.as_str(), c.right.as_str()))
            .collect();
        assert_eq!(pairs, vec![("a", "b"), ("b", "c")]);
        assert!(parse_model("a <-> a").is_err());
    }

    #[test]
    fn latent_as_regression_outcome() {
        let m = parse_model("eliteness <- qrel\neliteness -> logtfsum").unwrap();
        assert!(m.is_latent("eliteness"));
        assert_eq!(m.manifests(), vec!["logtfsum", "qrel"]);
    }

    #[test]
    fn bad_names() {
        assert!(parse_model("1abc <- x").is_err());
        assert!(parse_model("y <- x y").is_err());
        assert!(parse_model("y <- x + ").is_err());
    }
}
