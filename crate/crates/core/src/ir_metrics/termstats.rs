//! Term statistics and the components of the BM25 and vector-space weights.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const BM25_K1: f64 = 1.2;
pub const BM25_B: f64 = 0.75;
pub const TFIDF_FORMULA: &str = "tfidf = tf * ln(N / df)";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TermStats {
    pub n_docs: u64,
    pub avdoclen: f64,
    pub doclen: BTreeMap<String, f64>,
    pub df: BTreeMap<String, u64>,
    /// `(term, doc) -> tf`
    pub tf: BTreeMap<(String, String), f64>,
    /// `(term, query) -> tf`
    pub qtf: BTreeMap<(String, String), f64>,
}

fn field<'a>(parts: &[&'a str], i: usize, line: usize) -> Result<&'a str> {
    parts
        .get(i)
        .copied()
        .ok_or_else(|| Error::parse(line, "missing field"))
}

fn number<T: std::str::FromStr>(s: &str, line: usize) -> Result<T> {
    s.parse()
        .map_err(|_| Error::parse(line, format!("invalid number {s:?}")))
}

fn insert_once<K: Ord + std::fmt::Debug, V>(
    map: &mut BTreeMap<K, V>,
    key: K,
    value: V,
    line: usize,
) -> Result<()> {
    if map.contains_key(&key) {
        return Err(Error::parse(line, format!("duplicate entry {key:?}")));
    }
    map.insert(key, value);
    Ok(())
}

impl TermStats {
    /// Parses the line format
    ///
    /// ```text
    /// N <int>
    /// avdoclen <real>
    /// doc <id> <doclen>
    /// df <term> <int>
    /// tf <term> <doc> <int>
    /// qtf <term> <query> <int>
    /// ```
    pub fn parse(text: &str) -> Result<TermStats> {
        let mut s = TermStats::default();
        let (mut have_n, mut have_avg) = (false, false);
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let parts: Vec<&str> = body.split_whitespace().collect();
            let arity = match parts[0] {
                "N" | "avdoclen" => 2,
                "doc" | "df" => 3,
                "tf" | "qtf" => 4,
                other => return Err(Error::parse(line, format!("unknown directive {other:?}"))),
            };
            if parts.len() != arity {
                return Err(Error::parse(
                    line,
                    format!("`{}` takes {} fields, got {}", parts[0], arity - 1, parts.len() - 1),
                ));
            }
            match parts[0] {
                "N" => {
                    s.n_docs = number(parts[1], line)?;
                    have_n = true;
                }
                "avdoclen" => {
                    s.avdoclen = number(parts[1], line)?;
                    have_avg = true;
                }
                "doc" => {
                    let len: f64 = number(field(&parts, 2, line)?, line)?;
                    if !(len > 0.0) {
                        return Err(Error::parse(line, "doclen must be positive"));
                    }
                    insert_once(&mut s.doclen, parts[1].to_string(), len, line)?;
                }
                "df" => {
                    let df: u64 = number(parts[2], line)?;
                    if df < 1 {
                        return Err(Error::parse(line, "df must be at least 1"));
                    }
                    insert_once(&mut s.df, parts[1].to_string(), df, line)?;
                }
                "tf" | "qtf" => {
                    let v: u64 = number(parts[3], line)?;
                    let key = (parts[1].to_string(), parts[2].to_string());
                    let map = if parts[0] == "tf" { &mut s.tf } else { &mut s.qtf };
                    insert_once(map, key, v as f64, line)?;
                }
                _ => unreachable!(),
            }
        }
        if !have_n || s.n_docs < 1 {
            return Err(Error::parse(0, "missing or zero `N`"));
        }
        if !have_avg || !(s.avdoclen > 0.0) {
            return Err(Error::parse(0, "missing or non-positive `avdoclen`"));
        }
        s.check()?;
        Ok(s)
    }

    fn check(&self) -> Result<()> {
        for (t, &df) in &self.df {
            if df > self.n_docs {
                return Err(Error::Data(format!("df of {t} ({df}) exceeds N ({})", self.n_docs)));
            }
        }
        for ((t, d), &tf) in &self.tf {
            let len = self
                .doclen
                .get(d)
                .ok_or_else(|| Error::Data(format!("tf for undeclared document {d}")))?;
            if tf > *len {
                return Err(Error::Data(format!("tf of {t} in {d} exceeds its doclen")));
            }
            if !self.df.contains_key(t) {
                return Err(Error::Data(format!("term {t} has tf but no df")));
            }
        }
        Ok(())
    }

    fn df_of(&self, term: &str) -> Result<u64> {
        let df = *self
            .df
            .get(term)
            .ok_or_else(|| Error::Data(format!("no df for term {term}")))?;
        if df > self.n_docs {
            return Err(Error::Data(format!("df of {term} ({df}) exceeds N ({})", self.n_docs)));
        }
        Ok(df)
    }

    pub fn tf(&self, term: &str, doc: &str) -> f64 {
        self.tf
            .get(&(term.to_string(), doc.to_string()))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn query_terms(&self, query: &str) -> Vec<(&str, f64)> {
        self.qtf
            .iter()
            .filter(|((_, q), v)| q == query && **v > 0.0)
            .map(|((t, _), v)| (t.as_str(), *v))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bm25Components {
    pub tf: f64,
    pub idf: f64,
    pub k: f64,
    pub sat: f64,
    pub weight: f64,
}

/// `idf = ln((N - df + 0.5)/(df + 0.5))`, `K = k1 (1 - b + b doclen/avdoclen)`,
/// `sat = tf/(K + tf)`, `weight = idf · sat`.
pub fn bm25_components(s: &TermStats, term: &str, doc: &str, k1: f64, b: f64) -> Result<Bm25Components> {
    if !(k1 > 0.0) || !(0.0..=1.0).contains(&b) {
        return Err(Error::Data(format!("need k1 > 0 and b in [0, 1], got k1={k1}, b={b}")));
    }
    let df = s.df_of(term)? as f64;
    let n = s.n_docs as f64;
    let doclen = *s
        .doclen
        .get(doc)
        .ok_or_else(|| Error::Data(format!("unknown document {doc}")))?;
    let tf = s.tf(term, doc);
    let idf = ((n - df + 0.5) / (df + 0.5)).ln();
    let k = k1 * (1.0 - b + b * doclen / s.avdoclen);
    let sat = tf / (k + tf);
    Ok(Bm25Components {
        tf,
        idf,
        k,
        sat,
        weight: idf * sat,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VsmTerm {
    pub term: String,
    pub dtw: f64,
    pub qtw: f64,
    pub coord: f64,
    pub boost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VsmScore {
    pub terms: Vec<VsmTerm>,
    pub coord: f64,
    pub score: f64,
}

fn tfidf(tf: f64, n: f64, df: f64) -> f64 {
    tf * (n / df).ln()
}

/// Vector-space components for every query term. Lengths are Euclidean
/// norms of the tf·idf vectors of the document and of the query.
pub fn vsm_components(s: &TermStats, query: &str, doc: &str) -> Result<VsmScore> {
    let qterms = s.query_terms(query);
    if qterms.is_empty() {
        return Err(Error::Data(format!("query {query} has no terms")));
    }
    if !s.doclen.contains_key(doc) {
        return Err(Error::Data(format!("unknown document {doc}")));
    }
    let n = s.n_docs as f64;
    let doc_len = s
        .tf
        .iter()
        .filter(|((_, d), _)| d == doc)
        .map(|((t, _), &tf)| Ok(tfidf(tf, n, s.df_of(t)? as f64).powi(2)))
        .sum::<Result<f64>>()?
        .sqrt();
    let q_len = qterms
        .iter()
        .map(|&(t, qtf)| Ok(tfidf(qtf, n, s.df_of(t)? as f64).powi(2)))
        .sum::<Result<f64>>()?
        .sqrt();
    if !(q_len > 0.0) {
        return Err(Error::Data(format!("query {query} has zero tf-idf length")));
    }
    let matched = qterms.iter().filter(|(t, _)| s.tf(t, doc) > 0.0).count();
    let coord = matched as f64 / qterms.len() as f64;
    let mut terms = Vec::with_capacity(qterms.len());
    let mut score = 0.0;
    for &(t, qtf) in &qterms {
        let df = s.df_of(t)? as f64;
        let tf = s.tf(t, doc);
        let dtw = if tf > 0.0 { tfidf(tf, n, df) / doc_len } else { 0.0 };
        let qtw = tfidf(qtf, n, df) / q_len;
        score += dtw * qtw * coord;
        terms.push(VsmTerm {
            term: t.to_string(),
            dtw,
            qtw,
            coord,
            boost: 1.0,
        });
    }
    Ok(VsmScore { terms, coord, score })
}
