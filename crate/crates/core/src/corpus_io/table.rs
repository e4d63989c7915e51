//! Comma-separated tables with a header row.

use serde::{Deserialize, Serialize};

use super::matrix::VariableMatrix;
use crate::error::{Error, Result};

/// A numeric matrix plus string-valued identifier columns (e.g. `query_id`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledMatrix {
    pub labels: Vec<(String, Vec<String>)>,
    pub matrix: VariableMatrix,
}

impl LabeledMatrix {
    pub fn new(labels: Vec<(String, Vec<String>)>, matrix: VariableMatrix) -> Result<Self> {
        for (name, col) in &labels {
            if col.len() != matrix.n() {
                return Err(Error::Data(format!(
                    "label column {name:?} has {} rows, expected {}",
                    col.len(),
                    matrix.n()
                )));
            }
            if matrix.index_of(name).is_some() {
                return Err(Error::Data(format!("{name:?} is both a label and a variable")));
            }
        }
        Ok(LabeledMatrix { labels, matrix })
    }

    pub fn label(&self, name: &str) -> Option<&[String]> {
        self.labels
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, c)| c.as_slice())
    }

    /// Splits rows by the value of a label column. Groups come back in
    /// ascending label order.
    pub fn group_by(&self, label: &str) -> Result<Vec<(String, LabeledMatrix)>> {
        let col = self
            .label(label)
            .ok_or_else(|| Error::Data(format!("no label column {label:?}")))?;
        let mut keys: Vec<&String> = col.iter().collect();
        keys.sort();
        keys.dedup();
        keys.into_iter()
            .map(|key| {
                let keep = |i: usize| &col[i] == key;
                let matrix = self.matrix.filter_rows(keep)?;
                let labels = self
                    .labels
                    .iter()
                    .map(|(n, c)| {
                        let vals = c
                            .iter()
                            .enumerate()
                            .filter(|(i, _)| keep(*i))
                            .map(|(_, v)| v.clone())
                            .collect();
                        (n.clone(), vals)
                    })
                    .collect();
                Ok((key.clone(), LabeledMatrix { labels, matrix }))
            })
            .collect()
    }
}

/// Reads a CSV table. Columns listed in `label_columns` (when present) are
/// kept as strings; all others must parse as finite numbers.
pub fn read_csv(text: &str, label_columns: &[&str]) -> Result<LabeledMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::parse(1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if headers.is_empty() {
        return Err(Error::parse(1, "empty header"));
    }
    let is_label: Vec<bool> = headers
        .iter()
        .map(|h| label_columns.contains(&h.as_str()))
        .collect();
    let mut labels: Vec<Vec<String>> = vec![Vec::new(); headers.len()];
    let mut numeric: Vec<Vec<f64>> = vec![Vec::new(); headers.len()];
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::parse(line, e.to_string()))?;
        if rec.len() != headers.len() {
            return Err(Error::parse(
                line,
                format!("expected {} fields, found {}", headers.len(), rec.len()),
            ));
        }
        for (j, field) in rec.iter().enumerate() {
            if is_label[j] {
                labels[j].push(field.to_string());
            } else {
                let v: f64 = field.parse().map_err(|_| {
                    Error::parse(line, format!("column {:?}: non-numeric {field:?}", headers[j]))
                })?;
                if !v.is_finite() {
                    return Err(Error::parse(line, format!("column {:?}: not finite", headers[j])));
                }
                numeric[j].push(v);
            }
        }
    }
    let mut label_cols = Vec::new();
    let mut names = Vec::new();
    let mut cols = Vec::new();
    for (j, h) in headers.into_iter().enumerate() {
        if is_label[j] {
            label_cols.push((h, std::mem::take(&mut labels[j])));
        } else {
            names.push(h);
            cols.push(std::mem::take(&mut numeric[j]));
        }
    }
    LabeledMatrix::new(label_cols, VariableMatrix::new(names, cols)?)
}

pub fn write_csv(table: &LabeledMatrix) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let header: Vec<&str> = table
        .labels
        .iter()
        .map(|(n, _)| n.as_str())
        .chain(table.matrix.names().iter().map(String::as_str))
        .collect();
    writer
        .write_record(&header)
        .map_err(|e| Error::Io(e.to_string()))?;
    for i in 0..table.matrix.n() {
        let row: Vec<String> = table
            .labels
            .iter()
            .map(|(_, c)| c[i].clone())
            .chain(table.matrix.columns().iter().map(|c| c[i].to_string()))
            .collect();
        writer
            .write_record(&row)
            .map_err(|e| Error::Io(e.to_string()))?;
    }
    let bytes = writer.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}
