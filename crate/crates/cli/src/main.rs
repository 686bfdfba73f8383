use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use stable_consensus::fluctuation::DEFAULT_TOL;

mod commands;
mod input;

/// Steady-state fluctuation analysis of consensus networks driven by
/// α-stable noise.
#[derive(Debug, Parser)]
#[command(name = "stable-consensus", version)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "STABLE_CONSENSUS_THREADS")]
    threads: Option<usize>,

    /// Emit JSON instead of CSV.
    #[arg(long, global = true)]
    json: bool,

    /// Write the main output here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Per-node steady-state laws and the cumulative scale Σ_α.
    Sigma(SigmaArgs),
    /// Exact Σ_α next to the spectral upper bounds, per α.
    Bounds(BoundsArgs),
    /// Monte Carlo trajectories and empirical scale estimates.
    Simulate(SimulateArgs),
    /// Edge addition, removal or budget reweighting minimizing Σ_α.
    #[command(subcommand)]
    Design(DesignCommand),
    /// Long-format curves for plotting.
    #[command(subcommand)]
    Plotdata(PlotCommand),
    /// Print a generated or bundled graph as an edge list.
    Graph(GraphArgs),
}

#[derive(Debug, Args)]
struct NoiseArgs {
    #[arg(long)]
    alpha: f64,
    /// Uniform skewness of every node.
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    /// One skewness value per node.
    #[arg(long)]
    beta_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AlphaArgs {
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    /// start:stop:step (inclusive) or a comma list.
    #[arg(long)]
    alpha_grid: Option<String>,
}

impl AlphaArgs {
    fn values(&self) -> Result<Vec<f64>, CliError> {
        input::alphas(self.alpha, self.alpha_grid.as_deref())
    }
}

#[derive(Debug, Args)]
struct SigmaArgs {
    #[arg(long)]
    graph: PathBuf,
    #[command(flatten)]
    noise: NoiseArgs,
    /// Relative tolerance of the scale integrals.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
}

#[derive(Debug, Args)]
struct BoundsArgs {
    #[arg(long)]
    graph: PathBuf,
    #[command(flatten)]
    alpha: AlphaArgs,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SchemeArg {
    Euler,
    SemiExact,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    graph: PathBuf,
    #[command(flatten)]
    noise: NoiseArgs,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    /// Simulated time (default 40/λ₂).
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    paths: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Start of the estimation window (default 10/λ₂).
    #[arg(long)]
    burn_in: Option<f64>,
    #[arg(long, value_enum, default_value_t = SchemeArg::Euler)]
    scheme: SchemeArg,
    /// Record every this many steps (default: terminal state only).
    #[arg(long)]
    stride: Option<usize>,
    /// Write the trajectory dump (time,path,node,y) here.
    #[arg(long)]
    trajectories: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
}

#[derive(Debug, Subcommand)]
enum DesignCommand {
    /// Add one unit-weight edge.
    Add(EdgeDesignArgs),
    /// Remove one edge, keeping the graph connected.
    Remove(EdgeDesignArgs),
    /// Move weight b from one edge to another at a fixed budget.
    Reweight(ReweightArgs),
}

#[derive(Debug, Args)]
struct EdgeDesignArgs {
    #[arg(long)]
    graph: PathBuf,
    #[command(flatten)]
    alpha: AlphaArgs,
    /// `all`, or a file with one `i-j` pair per line.
    #[arg(long, default_value = "all")]
    candidates: String,
    /// Also bisect the α values where the argmin changes.
    #[arg(long)]
    crossovers: bool,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
}

#[derive(Debug, Args)]
struct ReweightArgs {
    #[command(flatten)]
    template: ReweightTemplate,
    #[command(flatten)]
    alpha: AlphaArgs,
    #[arg(long, default_value = "0.01:1.99:0.01")]
    b_grid: String,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
}

#[derive(Debug, Args)]
struct ReweightTemplate {
    /// Edge list containing both split edges (default: the bundled
    /// five-node budget graph).
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Edge receiving weight budget − b.
    #[arg(long, default_value = "2-3")]
    edge_a: String,
    /// Edge receiving weight b.
    #[arg(long, default_value = "2-5")]
    edge_b: String,
    #[arg(long, default_value_t = 2.0)]
    budget: f64,
}

#[derive(Debug, Subcommand)]
enum PlotCommand {
    /// Σ_α(b) curves: alpha,b,sigma_alpha.
    Reweight(ReweightArgs),
    /// Σ_α over α for one or more graphs: graph,alpha,sigma_alpha,method.
    AlphaCurve(CurveArgs),
    /// Exact scale and bounds over α for one or more graphs.
    Tightness(CurveArgs),
}

#[derive(Debug, Args)]
struct CurveArgs {
    /// Edge-list files; repeat for several graphs.
    #[arg(long, required = true)]
    graph: Vec<PathBuf>,
    #[command(flatten)]
    alpha: AlphaArgs,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GraphKind {
    Complete,
    Path,
    Cycle,
    Star,
    Random,
    G1,
    G2,
    G3,
}

#[derive(Debug, Args)]
struct GraphArgs {
    #[arg(value_enum)]
    kind: GraphKind,
    /// Node count (leaf count for a star).
    #[arg(long)]
    n: Option<usize>,
    /// Uniform weight of a complete graph.
    #[arg(long, default_value_t = 1.0)]
    weight: f64,
    /// Edge probability of a random graph.
    #[arg(long, default_value_t = 0.3)]
    p: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Budget split of the g3 graph.
    #[arg(long, default_value_t = 1.0)]
    b: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Core(#[from] stable_consensus::Error),
    #[error("{context}: {source}")]
    CoreIn {
        context: String,
        source: stable_consensus::Error,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn context(self, path: &Path) -> Self {
        match self {
            CliError::Core(source) => CliError::CoreIn {
                context: path.display().to_string(),
                source,
            },
            other => other,
        }
    }

    fn exit_code(&self) -> u8 {
        use stable_consensus::Error as E;
        match self {
            CliError::Input(_) | CliError::Io(_) => 2,
            CliError::Core(e) | CliError::CoreIn { source: e, .. } => match e {
                E::Disconnected { .. } => 3,
                E::Numerical(_) => 4,
                E::InvalidGraph(_) | E::Parse { .. } | E::InvalidParameter(_) => 2,
            },
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: cannot set up the thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
