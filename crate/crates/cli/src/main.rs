mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "fragnet", version, about = "Hierarchical blockmodels with Gibbs fragmentation tree priors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a structure, link probabilities and networks from a model.
    Simulate(SimulateArgs),
    /// Run MCMC over structures for a graph.
    Fit(FitArgs),
    /// Posterior predictive link probabilities for chosen pairs.
    Predict(PredictArgs),
    /// Score a target network with posterior samples.
    Evaluate(EvaluateArgs),
    /// Acceptance rates and between-chain trace summaries.
    Diagnose(DiagnoseArgs),
    /// Train each model on each generator and score replicate networks.
    Grid(GridArgs),
    /// Posterior co-ancestry matrix of vertex pairs.
    Coancestry(CoancestryArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Pooled,
    Unpooled,
    Irm,
}

impl From<Model> for fragnet::ModelKind {
    fn from(m: Model) -> Self {
        match m {
            Model::Pooled => fragnet::ModelKind::Pooled,
            Model::Unpooled => fragnet::ModelKind::Unpooled,
            Model::Irm => fragnet::ModelKind::Irm,
        }
    }
}

#[derive(Args, Clone, Debug, Serialize)]
pub struct PriorArgs {
    /// Discount of the fragmentation tree / CRP prior.
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    /// Concentration of the fragmentation tree / CRP prior.
    #[arg(long, default_value_t = 0.5)]
    pub beta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub rho_plus: f64,
    #[arg(long, default_value_t = 1.0)]
    pub rho_minus: f64,
}

#[derive(Args, Clone, Debug, Serialize)]
pub struct SimulateArgs {
    /// Number of vertices (taken from --tree-file when given).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, value_enum, default_value_t = Model::Unpooled)]
    pub model: Model,
    /// Fixed structure instead of a prior draw: a tree (nested list or
    /// Newick), or a partition for the blockmodel.
    #[arg(long)]
    pub tree_file: Option<PathBuf>,
    #[command(flatten)]
    pub prior: PriorArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Extra networks from the same link probabilities.
    #[arg(long, default_value_t = 0)]
    pub replicates: usize,
    #[arg(long)]
    pub out_prefix: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InitKind {
    Prior,
    Flat,
}

#[derive(Args, Clone, Debug, Serialize)]
pub struct FitArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// Pairs to treat as unobserved, in edge-list format.
    #[arg(long)]
    pub mask: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Model::Unpooled)]
    pub model: Model,
    #[arg(long, default_value_t = 400_000)]
    pub iters: usize,
    #[arg(long, default_value_t = 200_000)]
    pub burnin: usize,
    #[arg(long, default_value_t = 1000)]
    pub thin: usize,
    #[arg(long, default_value_t = 1)]
    pub chains: usize,
    /// Probability of drawing the insertion point from the local ball.
    #[arg(long, default_value_t = 0.5)]
    pub local_prob: f64,
    #[arg(long, default_value_t = 2)]
    pub radius: usize,
    /// Probability of a type-1 (add child) move at internal nodes.
    #[arg(long, default_value_t = 0.5)]
    pub type1_prob: f64,
    #[command(flatten)]
    pub prior: PriorArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = InitKind::Prior)]
    pub init: InitKind,
    /// Starting structure; overrides --init.
    #[arg(long)]
    pub init_file: Option<PathBuf>,
    /// Recheck all caches every this many iterations.
    #[arg(long)]
    pub verify_every: Option<usize>,
    #[arg(long)]
    pub out_prefix: PathBuf,
}

#[derive(Args, Clone, Debug, Serialize)]
pub struct PredictArgs {
    #[arg(long)]
    pub samples: PathBuf,
    #[arg(long)]
    pub train_graph: PathBuf,
    #[arg(long)]
    pub mask: Option<PathBuf>,
    /// Pairs to predict, in edge-list format. Defaults to the masked pairs.
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    pub rho_plus: f64,
    #[arg(long, default_value_t = 1.0)]
    pub rho_minus: f64,
    #[arg(long)]
    pub out_prefix: PathBuf,
}

#[derive(Args, Clone, Debug, Serialize)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub samples: PathBuf,
    #[arg(long)]
    pub train_graph: PathBuf,
    /// Mask applied to the training graph.
    #[arg(long)]
    pub mask: Option<PathBuf>,
    #[arg(long)]
    pub target_graph: PathBuf,
    /// Pairs of the target left unscored.
    #[arg(long)]
    pub target_mask: Option<PathBuf>,
    /// Only score these pairs (edge-list format).
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    pub rho_plus: f64,
    #[arg(long, default_value_t = 1.0)]
    pub rho_minus: f64,
    /// Average probabilities over samples before scoring.
    #[arg(long)]
    pub pooled_probability: bool,
    /// Also write per-pair probabilities and labels.
    #[arg(long)]
    pub dump_pairs: bool,
    #[arg(long)]
    pub out_prefix: PathBuf,
}

#[derive(Args, Clone, Debug, Serialize)]
pub struct DiagnoseArgs {
    /// Diagnostics files written by `fit`.
    #[arg(required = true)]
    pub diagnostics: Vec<PathBuf>,
    #[arg(long)]
    pub out_prefix: PathBuf,
}

#[derive(Args, Clone, Debug, Serialize)]
pub struct GridArgs {
    /// `name=path` of a generator file written by `simulate`.
    #[arg(long = "generator", required = true)]
    pub generators: Vec<String>,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Model::Irm, Model::Unpooled, Model::Pooled])]
    pub fits: Vec<Model>,
    #[arg(long, default_value_t = 10)]
    pub replicates: usize,
    #[arg(long, default_value_t = 100_000)]
    pub iters: usize,
    /// Defaults to half of --iters.
    #[arg(long)]
    pub burnin: Option<usize>,
    /// Defaults to retaining 200 samples.
    #[arg(long)]
    pub thin: Option<usize>,
    #[arg(long, default_value_t = 0.5)]
    pub local_prob: f64,
    #[arg(long, default_value_t = 2)]
    pub radius: usize,
    #[command(flatten)]
    pub prior: PriorArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_prefix: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Field {
    MeanDepth,
    BelowRoot,
}

#[derive(Args, Clone, Debug, Serialize)]
pub struct CoancestryArgs {
    #[arg(long)]
    pub samples: PathBuf,
    /// `id<TAB>name` file for row and column labels.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Field::MeanDepth)]
    pub field: Field,
    #[arg(long)]
    pub out_prefix: PathBuf,
}

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or flag combinations.
    Usage(String),
    /// Unreadable or malformed input.
    Input(String),
    /// Internal consistency check failed; a state dump may have been written.
    Invariant { msg: String, dump: Option<PathBuf> },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Input(_) => 2,
            CliError::Invariant { .. } => 3,
        }
    }
}

impl From<fragnet::Error> for CliError {
    fn from(e: fragnet::Error) -> Self {
        match e {
            fragnet::Error::Invariant(_) => CliError::Invariant { msg: e.to_string(), dump: None },
            fragnet::Error::InvalidArgument(_) => CliError::Usage(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Input(m) => f.write_str(m),
            CliError::Invariant { msg, dump: Some(p) } => write!(f, "{msg} (state written to {})", p.display()),
            CliError::Invariant { msg, dump: None } => f.write_str(msg),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(&a),
        Command::Fit(a) => commands::fit(&a),
        Command::Predict(a) => commands::predict(&a),
        Command::Evaluate(a) => commands::evaluate(&a),
        Command::Diagnose(a) => commands::diagnose(&a),
        Command::Grid(a) => commands::grid(&a),
        Command::Coancestry(a) => commands::coancestry(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fragnet: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
