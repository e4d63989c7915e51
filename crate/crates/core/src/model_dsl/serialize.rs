use std::fmt::Write;

use super::{Param, SemModel, Term};

fn term(t: &Term) -> String {
    match t.value {
        Param::Free => t.name.clone(),
        Param::Fixed(v) => format!("{v}*{}", t.name),
    }
}

fn terms(ts: &[Term]) -> String {
    ts.iter().map(term).collect::<Vec<_>>().join(" + ")
}

/// Canonical text: measurements, regressions, covariances, variance fixes,
/// each sorted by left-hand name.
pub fn serialize(m: &SemModel) -> String {
    let mut m = m.clone();
    m.canonicalize();
    let mut out = String::new();
    for meas in &m.measurements {
        let _ = writeln!(out, "{} -> {}", meas.latent, terms(&meas.indicators));
    }
    for r in &m.regressions {
        let _ = writeln!(out, "{} <- {}", r.outcome, terms(&r.predictors));
    }
    for c in &m.covariances {
        let rhs = term(&Term {
            name: c.right.clone(),
            value: c.value,
        });
        let _ = writeln!(out, "{} <-> {rhs}", c.left);
    }
    for v in &m.variance_fixes {
        let _ = writeln!(out, "var({}) = {}", v.name, v.value);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::{parse_model, parse_model_unchecked, Covariance, Measurement, Regression, VarianceFix};
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_model() {
        assert_eq!(serialize(&SemModel::default()), "");
    }

    #[test]
    fn fixed_loading_token() {
        let m = parse_model("A -> 1*X4 + X6").unwrap();
        assert!(serialize(&m).contains("1*X4"));
    }

    #[test]
    fn hypothesis_model_round_trip() {
        let m = parse_model("Y <- X1 + X2 + X3 + X4 + X5 + X6\nA -> X4 + X6").unwrap();
        let text = serialize(&m);
        assert_eq!(text, "A -> X4 + X6\nY <- X1 + X2 + X3 + X4 + X5 + X6\n");
        assert_eq!(parse_model(&text).unwrap(), m);
    }

    #[test]
    fn mslr_model_round_trip() {
        let text = "qrel <- content + link + graph + page + user\n\
                    content -> bm25_body + tfidf_body + lmir_body\n\
                    link -> inlinks + outlinks\n\
                    graph -> pagerank + siterank\n\
                    page -> urllen + urlslash\n\
                    user -> clicks + dwell\n";
        let m = parse_model(text).unwrap();
        assert_eq!(m.latents().len(), 5);
        assert_eq!(parse_model(&serialize(&m)).unwrap(), m);
    }

    #[test]
    fn covariance_and_variance_round_trip() {
        let text = "auth -> a1 + a2\nabout -> b1 + b2\nqrel <- auth + about\nauth <-> about\nvar(a1) = 0.25\nb1 <-> b2 + 0*a1";
        let m = parse_model(text).unwrap();
        let out = serialize(&m);
        assert!(out.contains("about <-> auth\n"));
        assert!(out.contains("a1 <-> 0*b1\n"), "{out}");
        assert!(out.ends_with("var(a1) = 0.25\n"));
        assert_eq!(parse_model(&out).unwrap(), m);
    }

    fn name() -> impl Strategy<Value = String> {
        prop::sample::select(vec!["a", "b", "c", "d", "e", "f", "x.1", "y_2"]).prop_map(String::from)
    }

    fn param() -> impl Strategy<Value = Param> {
        prop_oneof![
            3 => Just(Param::Free),
            1 => (-1e3f64..1e3).prop_map(Param::Fixed),
            1 => prop::sample::select(vec![0.0, 1.0, -2.5, 1e-7, 3e12]).prop_map(Param::Fixed),
        ]
    }

    fn term_list() -> impl Strategy<Value = Vec<Term>> {
        prop::collection::vec((name(), param()), 1..4).prop_map(|v| {
            let mut seen = std::collections::BTreeSet::new();
            v.into_iter()
                .filter(|(n, _)| seen.insert(n.clone()))
                .map(|(name, value)| Term { name, value })
                .collect()
        })
    }

    prop_compose! {
        fn model()(
            meas in prop::collection::btree_map(prop::sample::select(vec!["L1", "L2"]).prop_map(String::from), term_list(), 0..3),
            regs in prop::collection::btree_map(name(), term_list(), 0..3),
            covs in prop::collection::btree_map((name(), name()), param(), 0..3),
            vars in prop::collection::btree_map(name(), -5f64..5.0, 0..3),
        ) -> SemModel {
            let mut m = SemModel {
                measurements: meas.into_iter().map(|(latent, indicators)| Measurement { latent, indicators }).collect(),
                regressions: regs
                    .into_iter()
                    .map(|(outcome, ps)| {
                        let predictors = ps.into_iter().filter(|t| t.name != outcome).collect();
                        Regression { outcome, predictors }
                    })
                    .filter(|r: &Regression| !r.predictors.is_empty())
                    .collect(),
                covariances: covs
                    .into_iter()
                    .filter(|((l, r), _)| l < r)
                    .map(|((left, right), value)| Covariance { left, right, value })
                    .collect(),
                variance_fixes: vars.into_iter().map(|(name, value)| VarianceFix { name, value }).collect(),
                lines: Default::default(),
            };
            m.canonicalize();
            m
        }
    }

    proptest! {
        #[test]
        fn parse_inverts_serialize(m in model()) {
            let text = serialize(&m);
            let back = parse_model_unchecked(&text).unwrap();
            prop_assert_eq!(&back, &m);
            prop_assert_eq!(serialize(&back), text);
        }
    }
}
