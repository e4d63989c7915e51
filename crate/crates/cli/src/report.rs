use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::args::{name_of, Format};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigest {
    pub role: String,
    pub name: String,
    pub sha256: String,
}

/// Input files read by a command, with their digests.
#[derive(Debug, Default)]
pub struct Inputs(pub Vec<InputDigest>);

impl Inputs {
    pub fn read(&mut self, role: &str, path: &Path) -> CliResult<String> {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::input(format!("cannot read {} file {}: {e}", role, path.display())))?;
        let text = String::from_utf8(bytes)
            .map_err(|_| CliError::input(format!("{}: not valid UTF-8", path.display())))?;
        self.0.push(InputDigest {
            role: role.to_string(),
            name: name_of(path),
            sha256: hex::encode(Sha256::digest(text.as_bytes())),
        });
        Ok(text)
    }
}

/// Common envelope of every report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub version: String,
    pub config: Value,
    pub inputs: Vec<InputDigest>,
    pub formulas: BTreeMap<String, String>,
    pub result: Value,
}

impl Report {
    pub fn new(
        command: &str,
        config: Value,
        inputs: Inputs,
        formulas: &[(&str, &str)],
        result: Value,
    ) -> Self {
        Report {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            inputs: inputs.0,
            formulas: formulas
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
            result,
        }
    }

    pub fn input(&self, role: &str) -> Option<&InputDigest> {
        self.inputs.iter().find(|i| i.role == role)
    }

    pub fn to_machine(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Header lines followed by the command's own text body.
    pub fn to_text(&self, body: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# irsem {} {}", self.command, self.version);
        if let Value::Object(map) = &self.config {
            for (k, v) in map {
                let v = match v {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                let _ = writeln!(out, "# config {k} = {v}");
            }
        }
        for i in &self.inputs {
            let _ = writeln!(out, "# input {} {} sha256={}", i.role, i.name, i.sha256);
        }
        for (k, v) in &self.formulas {
            let _ = writeln!(out, "# formula {k}: {v}");
        }
        out.push('\n');
        out.push_str(body);
        out
    }

    pub fn render(&self, format: Format, body: &str) -> String {
        match format {
            Format::Machine => self.to_machine(),
            Format::Text => self.to_text(body),
        }
    }
}

/// Merges the serialized global and command options into one object.
pub fn config_echo<G: Serialize, A: Serialize>(global: &G, args: &A) -> Value {
    let mut map = serde_json::Map::new();
    for v in [serde_json::to_value(global), serde_json::to_value(args)] {
        if let Ok(Value::Object(m)) = v {
            map.extend(m);
        }
    }
    Value::Object(map)
}

pub fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("result serializes")
}

pub fn write_output(path: Option<&Path>, content: &str) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, content)
            .map_err(|e| CliError::input(format!("cannot write {}: {e}", p.display()))),
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(content.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::input(format!("cannot write to stdout: {e}")))
        }
    }
}

pub const DISCREPANCY_FORMULA: &str = "F = ln|Sigma| - ln|S| + tr(S Sigma^-1) - p";
pub const IMPLIED_FORMULA: &str = "Sigma = F (I - A)^-1 S (I - A)^-T F'";
pub const CHISQ_FORMULA: &str = "chisq = (n - 1) F_min";
pub const RMSEA_FORMULA: &str = "RMSEA = sqrt(max(chisq - df, 0) / (df (n - 1)))";
pub const OUTLIER_FORMULA: &str = "|x - mean| > z sd  =>  x' = mean";
pub const RESCALE_FORMULA: &str = "double the smallest variance until max/min <= ratio";
