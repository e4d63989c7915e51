//! The `irsem` command line: join → prep → fit, plus metrics, factor
//! analysis, model comparison and covariance files.
//!
//! Exit statuses: 0 success, 2 input or parse error, 3 prep failure,
//! 4 model specification or validation error, 5 estimation failure.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod report;

use clap::{CommandFactory, FromArgMatches};

use args::{Cli, Command, CovCommand};
use error::{CliError, CliResult};

fn override_self(cmd: clap::Command) -> clap::Command {
    let subs: Vec<String> = cmd.get_subcommands().map(|s| s.get_name().to_string()).collect();
    let mut cmd = cmd.args_override_self(true);
    for name in subs {
        cmd = cmd.mut_subcommand(name, override_self);
    }
    cmd
}

pub fn command() -> clap::Command {
    override_self(Cli::command())
}

/// Parses `args` (including the program name), applying any config file.
pub fn parse(args: Vec<String>) -> Result<Cli, Box<dyn std::error::Error>> {
    let cmd = command();
    let args = config::expand(&cmd, args)?;
    let matches = cmd.try_get_matches_from(args)?;
    Ok(Cli::from_arg_matches(&matches)?)
}

pub fn execute(cli: &Cli) -> CliResult<i32> {
    let g = &cli.global;
    match &cli.command {
        Command::Join(a) => commands::join(g, a),
        Command::Prep(a) => commands::prep(g, a),
        Command::Fit(a) => commands::fit(g, a),
        Command::Metrics(a) => commands::metrics(g, a),
        Command::Retrievability(a) => commands::retrievability(g, a),
        Command::Pca(a) => commands::run_pca(g, a),
        Command::Efa(a) => commands::run_efa(g, a),
        Command::Compare(a) => commands::compare(g, a),
        Command::Cov(CovCommand::Export(a)) => commands::cov_export(g, a),
        Command::Cov(CovCommand::Import(a)) => commands::cov_import(g, a),
        Command::Termweights(a) => commands::termweights(g, a),
    }
}

/// Runs one invocation and returns the exit status; messages go to stderr.
pub fn run(args: Vec<String>) -> i32 {
    let cli = match parse(args) {
        Ok(c) => c,
        Err(e) => {
            if let Some(ce) = e.downcast_ref::<clap::Error>() {
                let _ = ce.print();
                return ce.exit_code();
            }
            let code = e.downcast_ref::<CliError>().map_or(error::exit::INPUT, |c| c.code);
            eprintln!("irsem: error: {e}");
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("irsem: error: {e}");
            e.code
        }
    }
}
