use std::fmt::Write as _;

use serde::Serialize;
use serde_json::json;

use irsem::corpus_io::{parse_qrels, parse_run};
use irsem::ir_metrics::{
    average_precision, bm25_components, doc_precision, ndcg, precision_at, ranked_lists,
    retrievability_all, total_relevant, vsm_components, RetrievabilityConfig, TermStats,
    Utility, DOC_PRECISION_FORMULA, TFIDF_FORMULA,
};

use crate::args::{Global, MetricsArgs, RetrievabilityArgs, TermweightsArgs, UtilityKind};
use crate::error::{exit, in_file, CliError, CliResult};
use crate::report::{config_echo, to_value, write_output, Inputs, Report};

const AP_FORMULA: &str = "AP = sum over relevant positions k of P@k / total relevant";
const NDCG_FORMULA: &str = "NDCG@r = DCG@r / ideal DCG@r, gain 2^qrel - 1, discount log2(i + 1)";
const RETRIEVABILITY_FORMULA: &str = "r(d) = sum_q L(q) f(rank(d, q), r*)";
const BM25_FORMULA: &str =
    "w = idf tf / (K + tf), K = k1 (1 - b + b dl / avdl), idf = ln((N - df + 0.5) / (df + 0.5))";

#[derive(Debug, Serialize)]
struct QueryMetrics {
    query_id: String,
    retrieved: usize,
    relevant: usize,
    ap: f64,
    precision: f64,
    ndcg: f64,
}

#[derive(Debug, Serialize)]
struct DocRow {
    query_id: String,
    doc_id: String,
    rank: u32,
    qrel: u32,
    docprec: f64,
}

pub fn metrics(g: &Global, a: &MetricsArgs) -> CliResult<i32> {
    if a.cutoff == 0 {
        return Err(CliError::input("--cutoff must be at least 1"));
    }
    let mut inputs = Inputs::default();
    let run_text = inputs.read("run", &a.run)?;
    let qrels_text = inputs.read("qrels", &a.qrels)?;
    let run = parse_run(&run_text).map_err(in_file(&a.run))?;
    let qrels = parse_qrels(&qrels_text).map_err(in_file(&a.qrels))?;
    let lists = ranked_lists(&run, &qrels).map_err(in_file(&a.run))?;
    let totals = total_relevant(&qrels, a.binarize_at);

    let mut queries = Vec::with_capacity(lists.len());
    let mut docs = Vec::new();
    for l in &lists {
        let relevant = totals.get(&l.query_id).copied().unwrap_or(0);
        queries.push(QueryMetrics {
            query_id: l.query_id.clone(),
            retrieved: l.len(),
            relevant,
            ap: average_precision(l, relevant, a.binarize_at),
            precision: precision_at(l, a.cutoff, a.binarize_at),
            ndcg: ndcg(l, a.cutoff),
        });
        for e in l.entries() {
            docs.push(DocRow {
                query_id: l.query_id.clone(),
                doc_id: e.doc_id.clone(),
                rank: e.rank,
                qrel: e.qrel,
                docprec: doc_precision(e.qrel, e.rank),
            });
        }
    }
    let k = queries.len().max(1) as f64;
    let mean = json!({
        "ap": queries.iter().map(|q| q.ap).sum::<f64>() / k,
        "precision": queries.iter().map(|q| q.precision).sum::<f64>() / k,
        "ndcg": queries.iter().map(|q| q.ndcg).sum::<f64>() / k,
    });

    let mut body = String::new();
    let _ = writeln!(
        body,
        "{:<10} {:>9} {:>8} {:>8} {:>8} {:>8}",
        "query",
        "retrieved",
        "relevant",
        "AP",
        format!("P@{}", a.cutoff),
        format!("NDCG@{}", a.cutoff)
    );
    for q in &queries {
        let _ = writeln!(
            body,
            "{:<10} {:>9} {:>8} {:>8.4} {:>8.4} {:>8.4}",
            q.query_id, q.retrieved, q.relevant, q.ap, q.precision, q.ndcg
        );
    }
    let _ = writeln!(
        body,
        "{:<10} {:>9} {:>8} {:>8.4} {:>8.4} {:>8.4}",
        "mean", "", "", mean["ap"].as_f64().unwrap_or(0.0),
        mean["precision"].as_f64().unwrap_or(0.0),
        mean["ndcg"].as_f64().unwrap_or(0.0)
    );
    let _ = writeln!(body, "\n{:<10} {:<20} {:>6} {:>5} {:>10}", "query", "doc", "rank", "qrel", "Y");
    for d in &docs {
        let _ = writeln!(
            body,
            "{:<10} {:<20} {:>6} {:>5} {:>10.6}",
            d.query_id, d.doc_id, d.rank, d.qrel, d.docprec
        );
    }

    let result = json!({
        "cutoff": a.cutoff,
        "binarize_at": a.binarize_at,
        "queries": queries,
        "mean": mean,
        "documents": docs,
    });
    let report = Report::new(
        "metrics",
        config_echo(g, a),
        inputs,
        &[("ap", AP_FORMULA), ("ndcg", NDCG_FORMULA), ("docprec", DOC_PRECISION_FORMULA)],
        result,
    );
    write_output(g.out.as_deref(), &report.render(g.format, &body))?;
    Ok(exit::OK)
}

fn parse_likelihoods(text: &str) -> irsem::Result<Vec<(String, f64)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let bad = || irsem::Error::Parse {
            line: i + 1,
            message: "expected `query_id weight`".into(),
        };
        if parts.len() != 2 {
            return Err(bad());
        }
        let w: f64 = parts[1].parse().map_err(|_| bad())?;
        out.push((parts[0].to_string(), w));
    }
    Ok(out)
}

pub fn retrievability(g: &Global, a: &RetrievabilityArgs) -> CliResult<i32> {
    let mut inputs = Inputs::default();
    let run_text = inputs.read("run", &a.run)?;
    let run = parse_run(&run_text).map_err(in_file(&a.run))?;
    let utility = match a.utility {
        UtilityKind::Indicator => Utility::Indicator,
        UtilityKind::Gravity => Utility::Gravity { gamma: a.gamma },
    };
    let cfg = match &a.likelihoods {
        Some(p) => RetrievabilityConfig {
            likelihoods: parse_likelihoods(&inputs.read("likelihoods", p)?).map_err(in_file(p))?,
            cutoff: a.cutoff,
            utility,
        },
        None => RetrievabilityConfig::uniform(&run, a.cutoff, utility),
    };
    let scores = retrievability_all(&cfg, &run)?;

    let mut body = format!("{:<24} {:>12}\n", "doc", "r(d)");
    for (d, v) in &scores {
        let _ = writeln!(body, "{d:<24} {v:>12.6}");
    }
    let docs: Vec<_> = scores
        .iter()
        .map(|(d, v)| json!({ "doc_id": d, "retrievability": v }))
        .collect();
    let result = json!({
        "queries": cfg.likelihoods.len(),
        "utility": to_value(&cfg.utility),
        "cutoff": cfg.cutoff,
        "documents": docs,
    });
    let report = Report::new(
        "retrievability",
        config_echo(g, a),
        inputs,
        &[("retrievability", RETRIEVABILITY_FORMULA)],
        result,
    );
    write_output(g.out.as_deref(), &report.render(g.format, &body))?;
    Ok(exit::OK)
}

pub fn termweights(g: &Global, a: &TermweightsArgs) -> CliResult<i32> {
    let mut inputs = Inputs::default();
    let text = inputs.read("termstats", &a.termstats)?;
    let stats = TermStats::parse(&text).map_err(in_file(&a.termstats))?;
    let terms = stats.query_terms(&a.query);
    if terms.is_empty() {
        return Err(CliError::input(format!("query {} has no terms", a.query)));
    }
    let mut bm25 = Vec::with_capacity(terms.len());
    let mut body = format!(
        "BM25 (k1 = {}, b = {})\n{:<16} {:>8} {:>10} {:>10} {:>10} {:>10}\n",
        a.k1, a.b, "term", "tf", "idf", "K", "sat", "weight"
    );
    for (t, _) in &terms {
        let c = bm25_components(&stats, t, &a.doc, a.k1, a.b)?;
        let _ = writeln!(
            body,
            "{t:<16} {:>8} {:>10.4} {:>10.4} {:>10.4} {:>10.4}",
            c.tf, c.idf, c.k, c.sat, c.weight
        );
        let mut v = to_value(&c);
        v["term"] = json!(t);
        bm25.push(v);
    }
    let vsm = vsm_components(&stats, &a.query, &a.doc)?;
    let _ = writeln!(body, "\nVSM (coord = {:.4}, score = {:.6})", vsm.coord, vsm.score);
    for t in &vsm.terms {
        let _ = writeln!(body, "{:<16} dtw {:>10.4} qtw {:>10.4}", t.term, t.dtw, t.qtw);
    }
    let result = json!({ "bm25": bm25, "vsm": vsm });
    let report = Report::new(
        "termweights",
        config_echo(g, a),
        inputs,
        &[("bm25", BM25_FORMULA), ("tfidf", TFIDF_FORMULA)],
        result,
    );
    write_output(g.out.as_deref(), &report.render(g.format, &body))?;
    Ok(exit::OK)
}
