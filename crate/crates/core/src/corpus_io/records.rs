//! Line-oriented parsers for runs, qrels and LETOR-style feature files.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One line of a six-column run file: `qid Q0 docid rank score tag`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub query_id: String,
    pub doc_id: String,
    pub rank: u32,
    pub score: f64,
    pub run_tag: String,
}

/// One line of a qrels file: `qid iter docid rel`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QrelRecord {
    pub query_id: String,
    pub doc_id: String,
    pub qrel: u32,
}

/// One line of a feature file. Features are kept in ascending feature-id
/// order so every record of a file lists the same names in the same order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRecord {
    pub query_id: String,
    pub doc_id: String,
    pub label: u32,
    pub features: Vec<(String, f64)>,
}

impl FeatureRecord {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.features
            .iter()
            .find(|(n, _)| n == name)
            .map(|&(_, v)| v)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.features.iter().map(|(n, _)| n.as_str())
    }
}

/// Feature id → short name, e.g. `21 → bodybm25`.
pub type FeatureSchema = BTreeMap<u32, String>;

/// Layout knobs of the trailing comment of a feature line.
#[derive(Debug, Clone)]
pub struct FeatureFormat {
    pub comment: char,
    pub docid_key: String,
}

impl Default for FeatureFormat {
    fn default() -> Self {
        FeatureFormat {
            comment: '#',
            docid_key: "docid".to_string(),
        }
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

pub fn parse_run(text: &str) -> Result<Vec<RunRecord>> {
    let mut out = Vec::new();
    let mut seen: HashSet<(String, String, u32)> = HashSet::new();
    for (line_no, line) in content_lines(text) {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(Error::parse(
                line_no,
                format!("expected 6 fields in run line, found {}", fields.len()),
            ));
        }
        let rank: u32 = fields[3]
            .parse()
            .map_err(|_| Error::parse(line_no, format!("non-numeric rank {:?}", fields[3])))?;
        if rank == 0 {
            return Err(Error::parse(line_no, "rank must be >= 1"));
        }
        let score: f64 = fields[4]
            .parse()
            .map_err(|_| Error::parse(line_no, format!("non-numeric score {:?}", fields[4])))?;
        if !score.is_finite() {
            return Err(Error::parse(line_no, "score is not finite"));
        }
        let rec = RunRecord {
            query_id: fields[0].to_string(),
            doc_id: fields[2].to_string(),
            rank,
            score,
            run_tag: fields[5].to_string(),
        };
        if !seen.insert((rec.run_tag.clone(), rec.query_id.clone(), rank)) {
            return Err(Error::parse(
                line_no,
                format!(
                    "duplicate rank {} for query {} in run {}",
                    rank, rec.query_id, rec.run_tag
                ),
            ));
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn parse_qrels(text: &str) -> Result<Vec<QrelRecord>> {
    let mut out = Vec::new();
    let mut seen: HashSet<(String, String)> = HashSet::new();
    for (line_no, line) in content_lines(text) {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::parse(
                line_no,
                format!("expected 4 fields in qrels line, found {}", fields.len()),
            ));
        }
        let raw: i64 = fields[3]
            .parse()
            .map_err(|_| Error::parse(line_no, format!("non-integer qrel {:?}", fields[3])))?;
        if raw < 0 {
            return Err(Error::parse(line_no, format!("negative qrel {raw}")));
        }
        let qrel = u32::try_from(raw)
            .map_err(|_| Error::parse(line_no, format!("qrel {raw} out of range")))?;
        let key = (fields[0].to_string(), fields[2].to_string());
        if !seen.insert(key.clone()) {
            return Err(Error::parse(
                line_no,
                format!("duplicate judgment for query {} document {}", key.0, key.1),
            ));
        }
        out.push(QrelRecord {
            query_id: key.0,
            doc_id: key.1,
            qrel,
        });
    }
    Ok(out)
}

/// Parses a two-column `id name` schema file.
pub fn parse_schema(text: &str) -> Result<FeatureSchema> {
    let mut schema = FeatureSchema::new();
    for (line_no, line) in content_lines(text) {
        if line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::parse(line_no, "expected `id name` in schema line"));
        }
        let id: u32 = fields[0]
            .parse()
            .map_err(|_| Error::parse(line_no, format!("non-integer feature id {:?}", fields[0])))?;
        if schema.insert(id, fields[1].to_string()).is_some() {
            return Err(Error::parse(line_no, format!("duplicate feature id {id}")));
        }
    }
    Ok(schema)
}

fn parse_docid(comment: &str, key: &str) -> Option<String> {
    let tokens: Vec<&str> = comment.split_whitespace().collect();
    let mut i = 0;
    while i < tokens.len() {
        let tok = tokens[i];
        if tok == key {
            // `docid = D` or `docid D`
            return match tokens.get(i + 1) {
                Some(&"=") => tokens.get(i + 2).map(|s| s.to_string()),
                Some(v) => Some(v.trim_start_matches('=').to_string()),
                None => None,
            };
        }
        if let Some(rest) = tok.strip_prefix(key) {
            if let Some(v) = rest.strip_prefix('=') {
                return if v.is_empty() {
                    tokens.get(i + 1).map(|s| s.to_string())
                } else {
                    Some(v.to_string())
                };
            }
        }
        i += 1;
    }
    None
}

pub fn parse_features(
    text: &str,
    schema: &FeatureSchema,
    format: &FeatureFormat,
) -> Result<Vec<FeatureRecord>> {
    let mut out: Vec<FeatureRecord> = Vec::new();
    let mut expected: Option<Vec<u32>> = None;
    for (line_no, line) in content_lines(text) {
        let (body, comment) = match line.find(format.comment) {
            Some(pos) => (&line[..pos], Some(&line[pos + format.comment.len_utf8()..])),
            None => (line, None),
        };
        let mut tokens = body.split_whitespace();
        let label_tok = tokens
            .next()
            .ok_or_else(|| Error::parse(line_no, "missing label"))?;
        let label: u32 = label_tok
            .parse()
            .map_err(|_| Error::parse(line_no, format!("invalid label {label_tok:?}")))?;
        let query_id = tokens
            .next()
            .and_then(|t| t.strip_prefix("qid:"))
            .filter(|q| !q.is_empty())
            .ok_or_else(|| Error::parse(line_no, "missing `qid:` token after label"))?
            .to_string();

        let mut pairs: Vec<(u32, f64)> = Vec::new();
        for tok in tokens {
            let (id, val) = tok
                .split_once(':')
                .ok_or_else(|| Error::parse(line_no, format!("expected id:value, got {tok:?}")))?;
            let id: u32 = id
                .parse()
                .map_err(|_| Error::parse(line_no, format!("invalid feature id {id:?}")))?;
            let val: f64 = val
                .parse()
                .map_err(|_| Error::parse(line_no, format!("unparseable value {val:?}")))?;
            if !val.is_finite() {
                return Err(Error::parse(line_no, format!("feature {id} is not finite")));
            }
            pairs.push((id, val));
        }
        pairs.sort_by_key(|&(id, _)| id);
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::parse(line_no, "repeated feature id"));
        }
        let ids: Vec<u32> = pairs.iter().map(|&(id, _)| id).collect();
        match &expected {
            None => expected = Some(ids),
            Some(e) if *e != ids => {
                return Err(Error::parse(
                    line_no,
                    "feature ids differ from the first record of the file",
                ))
            }
            _ => {}
        }

        let doc_id = comment
            .and_then(|c| parse_docid(c, &format.docid_key))
            .ok_or_else(|| {
                Error::parse(line_no, format!("missing `{}` in trailing comment", format.docid_key))
            })?;

        let features = pairs
            .into_iter()
            .map(|(id, v)| {
                let name = schema.get(&id).cloned().unwrap_or_else(|| id.to_string());
                (name, v)
            })
            .collect();
        out.push(FeatureRecord {
            query_id,
            doc_id,
            label,
            features,
        });
    }
    Ok(out)
}

/// Builds a lookup from `(query_id, doc_id)` to qrel.
pub(crate) fn qrel_index(qrels: &[QrelRecord]) -> HashMap<(&str, &str), u32> {
    qrels
        .iter()
        .map(|q| ((q.query_id.as_str(), q.doc_id.as_str()), q.qrel))
        .collect()
}
