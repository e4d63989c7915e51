use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use serde::{Serialize, Serializer};

fn basename<S: Serializer>(p: &Path, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&name_of(p))
}

fn opt_basename<S: Serializer>(p: &Option<PathBuf>, s: S) -> Result<S::Ok, S::Error> {
    match p {
        Some(p) => s.serialize_some(&name_of(p)),
        None => s.serialize_none(),
    }
}

/// Final path component; reports never carry directories.
pub fn name_of(p: &Path) -> String {
    p.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| p.display().to_string())
}

#[derive(Debug, Parser)]
#[command(name = "irsem", version, about = "Structural equation modeling for IR evaluation data")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Machine,
}

#[derive(Debug, Args, Serialize)]
pub struct Global {
    /// Output file (stdout when absent)
    #[arg(long, global = true)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Recorded in reports; only test oracles draw random numbers
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    #[serde(skip)]
    pub quiet: bool,
    /// `key = value` file mirroring the flags; explicit flags win
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Join a run, qrels and a feature file into a CSV table
    Join(JoinArgs),
    /// Collinearity, outliers, log shift and variance rescaling
    Prep(PrepArgs),
    /// Fit a model by maximum likelihood
    Fit(FitArgs),
    /// Per-query AP, P@r, NDCG and per-document precision
    Metrics(MetricsArgs),
    /// Document retrievability over a run
    Retrievability(RetrievabilityArgs),
    /// Principal component analysis
    Pca(PcaArgs),
    /// Exploratory factor analysis (principal axis)
    Efa(EfaArgs),
    /// Compare two fit reports computed on the same data
    Compare(CompareArgs),
    /// Covariance file export and import
    #[command(subcommand)]
    Cov(CovCommand),
    /// BM25 and VSM components of one document for one query
    Termweights(TermweightsArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Join(_) => "join",
            Command::Prep(_) => "prep",
            Command::Fit(_) => "fit",
            Command::Metrics(_) => "metrics",
            Command::Retrievability(_) => "retrievability",
            Command::Pca(_) => "pca",
            Command::Efa(_) => "efa",
            Command::Compare(_) => "compare",
            Command::Cov(CovCommand::Export(_)) => "cov export",
            Command::Cov(CovCommand::Import(_)) => "cov import",
            Command::Termweights(_) => "termweights",
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct JoinArgs {
    #[arg(long)]
    #[serde(serialize_with = "basename")]
    pub run: PathBuf,
    #[arg(long)]
    #[serde(serialize_with = "opt_basename")]
    pub qrels: Option<PathBuf>,
    #[arg(long)]
    #[serde(serialize_with = "basename")]
    pub features: PathBuf,
    #[arg(long)]
    #[serde(serialize_with = "basename")]
    pub schema: PathBuf,
    /// Start of the trailing comment in feature lines
    #[arg(long, default_value_t = '#')]
    pub comment_char: char,
    /// Key naming the document id inside the comment
    #[arg(long, default_value = "docid")]
    pub docid_key: String,
    /// Also write a join report here
    #[arg(long)]
    #[serde(skip)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct PrepArgs {
    /// CSV table, e.g. the output of `join`
    #[arg(long)]
    #[serde(serialize_with = "basename")]
    pub input: PathBuf,
    #[arg(long, action = ArgAction::Set, value_delimiter = ',', default_value = "query_id,doc_id")]
    pub label_columns: Vec<String>,
    /// Numeric columns that skip collinearity, outliers and log shift
    #[arg(long, action = ArgAction::Set, value_delimiter = ',', default_value = "rank,score,qrel,docprec")]
    pub passthrough: Vec<String>,
    #[arg(long)]
    pub no_collinearity: bool,
    #[arg(long, default_value_t = 0.975)]
    pub collinearity_threshold: f64,
    /// Preferred representatives of collinear clusters, one per line
    #[arg(long)]
    #[serde(serialize_with = "opt_basename")]
    pub keep_list: Option<PathBuf>,
    #[arg(long)]
    pub no_outliers: bool,
    #[arg(long, default_value_t = 3.0)]
    pub outlier_z: f64,
    #[arg(long)]
    pub no_log_shift: bool,
    /// Columns to log-shift
    #[arg(long, action = ArgAction::Set, value_delimiter = ',')]
    pub log_targets: Vec<String>,
    #[arg(long)]
    pub no_rescale: bool,
    #[arg(long, default_value_t = 10.0)]
    pub max_ratio: f64,
    /// Also write the prep report here
    #[arg(long)]
    #[serde(skip)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["data", "cov"])))]
pub struct FitArgs {
    #[arg(long)]
    #[serde(serialize_with = "basename")]
    pub model: PathBuf,
    /// CSV table with one column per variable
    #[arg(long)]
    #[serde(serialize_with = "opt_basename")]
    pub data: Option<PathBuf>,
    /// Covariance file carrying n
    #[arg(long)]
    #[serde(serialize_with = "opt_basename")]
    pub cov: Option<PathBuf>,
    #[arg(long, action = ArgAction::Set, value_delimiter = ',', default_value = "query_id,doc_id")]
    pub label_columns: Vec<String>,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub grad_tol: f64,
    /// Fit the model separately for every query
    #[arg(long, requires = "data")]
    pub by_query: bool,
    #[arg(long, default_value = "query_id")]
    pub group_column: String,
    /// Run the per-query fits concurrently
    #[arg(long, requires = "by_query")]
    #[serde(skip)]
    pub parallel: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct MetricsArgs {
    #[arg(long)]
    #[serde(serialize_with = "basename")]
    pub run: PathBuf,
    #[arg(long)]
    #[serde(serialize_with = "basename")]
    pub qrels: PathBuf,
    /// Cutoff r for P@r and NDCG@r
    #[arg(long, default_value_t = 10)]
    pub cutoff: usize,
    /// Smallest qrel counted as relevant
    #[arg(long, default_value_t = 1)]
    pub binarize_at: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum UtilityKind {
    Indicator,
    Gravity,
}

#[derive(Debug, Args, Serialize)]
pub struct RetrievabilityArgs {
    #[arg(long)]
    #[serde(serialize_with = "basename")]
    pub run: PathBuf,
    /// Rank cutoff r*
    #[arg(long, default_value_t = 100)]
    pub cutoff: u32,
    #[arg(long, value_enum, default_value_t = UtilityKind::Indicator)]
    pub utility: UtilityKind,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// `query_id weight` per line; every query weighs 1 when absent
    #[arg(long)]
    #[serde(serialize_with = "opt_basename")]
    pub likelihoods: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["data", "cov"])))]
pub struct MatrixSource {
    #[arg(long)]
    #[serde(serialize_with = "opt_basename")]
    pub data: Option<PathBuf>,
    #[arg(long)]
    #[serde(serialize_with = "opt_basename")]
    pub cov: Option<PathBuf>,
    #[arg(long, action = ArgAction::Set, value_delimiter = ',', default_value = "query_id,doc_id")]
    pub label_columns: Vec<String>,
    /// Restrict to these variables
    #[arg(long, action = ArgAction::Set, value_delimiter = ',')]
    pub variables: Option<Vec<String>>,
}

#[derive(Debug, Args, Serialize)]
pub struct PcaArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: MatrixSource,
    #[arg(long, default_value_t = 2)]
    pub components: usize,
    /// Loadings below this magnitude get sign 0
    #[arg(long, default_value_t = 0.1)]
    pub sign_threshold: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct EfaArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: MatrixSource,
    #[arg(long, default_value_t = 2)]
    pub factors: usize,
    /// Loadings below this magnitude are blanked in the display
    #[arg(long, default_value_t = 0.3)]
    pub suppress: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct CompareArgs {
    /// Machine-format fit report
    #[serde(serialize_with = "basename")]
    pub first: PathBuf,
    #[serde(serialize_with = "basename")]
    pub second: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum CovCommand {
    /// Write the covariance file of a CSV table
    Export(CovExportArgs),
    /// Check a covariance file and print it
    Import(CovImportArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct CovExportArgs {
    #[arg(long)]
    #[serde(serialize_with = "basename")]
    pub data: PathBuf,
    #[arg(long, action = ArgAction::Set, value_delimiter = ',', default_value = "query_id,doc_id")]
    pub label_columns: Vec<String>,
    #[arg(long, action = ArgAction::Set, value_delimiter = ',')]
    pub variables: Option<Vec<String>>,
    /// Export correlations instead of covariances
    #[arg(long)]
    pub correlation: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct CovImportArgs {
    #[arg(long)]
    #[serde(serialize_with = "basename")]
    pub cov: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct TermweightsArgs {
    #[arg(long)]
    #[serde(serialize_with = "basename")]
    pub termstats: PathBuf,
    #[arg(long)]
    pub query: String,
    #[arg(long)]
    pub doc: String,
    #[arg(long, default_value_t = irsem::ir_metrics::BM25_K1)]
    pub k1: f64,
    #[arg(long, default_value_t = irsem::ir_metrics::BM25_B)]
    pub b: f64,
}
