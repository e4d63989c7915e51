//! Config files: one `key = value` per line, `#` comments. Keys are flag
//! names with `_` or `-`; `true`/`false` switch boolean flags; lists are
//! comma-separated. The pairs are spliced into the argument list right after
//! the subcommand so flags given on the command line override them.

use std::path::Path;

use clap::Command;

use crate::error::{CliError, CliResult};

const GLOBAL_VALUED: [&str; 4] = ["--out", "--format", "--seed", "--config"];

pub fn parse_config(text: &str) -> CliResult<Vec<(usize, String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::input(format!("line {}: expected `key = value`", i + 1)))?;
        let key = k.trim().replace('_', "-");
        if key.is_empty() {
            return Err(CliError::input(format!("line {}: empty key", i + 1)));
        }
        out.push((i + 1, key, v.trim().to_string()));
    }
    Ok(out)
}

fn config_path(args: &[String]) -> Option<String> {
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(v.to_string());
        }
    }
    None
}

/// Index of the innermost subcommand token and the matching command.
fn locate<'a>(root: &'a Command, args: &[String]) -> Option<(usize, &'a Command)> {
    let mut cmd = root;
    let mut found = None;
    let mut i = 1;
    while i < args.len() {
        let a = args[i].as_str();
        if GLOBAL_VALUED.contains(&a) {
            i += 2;
            continue;
        }
        if let Some(sub) = cmd.find_subcommand(a) {
            cmd = sub;
            found = Some((i, cmd));
        } else if found.is_some() && !cmd.has_subcommands() {
            break;
        }
        i += 1;
    }
    found
}

fn any_command_has(cmd: &Command, long: &str) -> bool {
    cmd.get_arguments().any(|a| a.get_long() == Some(long))
        || cmd.get_subcommands().any(|s| any_command_has(s, long))
}

/// Expands `--config` into explicit flags. Returns `args` unchanged when no
/// config file is given.
pub fn expand(root: &Command, args: Vec<String>) -> CliResult<Vec<String>> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::input(format!("cannot read config {path}: {e}")))?;
    let pairs = parse_config(&text)
        .map_err(|e| CliError::input(format!("{}: {}", Path::new(&path).display(), e.message)))?;
    let Some((at, leaf)) = locate(root, &args) else {
        return Ok(args);
    };
    let mut tokens = Vec::new();
    for (line, key, value) in pairs {
        if key == "config" {
            return Err(CliError::input(format!("{path}:{line}: config files cannot nest")));
        }
        let arg = leaf
            .get_arguments()
            .chain(root.get_arguments())
            .find(|a| a.get_long() == Some(key.as_str()));
        match arg {
            Some(a) if a.get_action().takes_values() => {
                tokens.push(format!("--{key}"));
                tokens.push(value);
            }
            Some(_) => match value.as_str() {
                "true" => tokens.push(format!("--{key}")),
                "false" => {}
                _ => {
                    return Err(CliError::input(format!(
                        "{path}:{line}: `{key}` is a switch; use true or false"
                    )))
                }
            },
            None if any_command_has(root, &key) => {}
            None => return Err(CliError::input(format!("{path}:{line}: unknown key `{key}`"))),
        }
    }
    let mut out = args;
    out.splice(at + 1..at + 1, tokens);
    Ok(out)
}
