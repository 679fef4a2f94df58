//! Command-line grammar.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::io::DropPolicy;

#[derive(Debug, Parser)]
#[command(
    name = "spectral-dp",
    version,
    about = "Private symmetric-matrix approximation and Dyson Brownian motion experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Release M + c (G + G^T).
    Perturb(PerturbArgs),
    /// Release the perturbed matrix with its spectrum replaced by a target.
    Approx(ApproxArgs),
    /// Release the rank-k truncation of the perturbed matrix.
    RankK(RankArgs),
    /// Release the top-k eigenspace projector of the perturbed matrix.
    Subspace(RankArgs),
    /// Check the eigenvalue-gap condition for every cutoff k.
    CheckGaps(CheckGapsArgs),
    /// Closed-form utility bounds and prior-work comparators.
    Bound(BoundArgs),
    /// Monte Carlo estimate of the spectrum-replacement utility.
    McUtility(McUtilityArgs),
    /// Monte Carlo estimate of the rank-k approximation error.
    McRankK(McRankArgs),
    /// Monte Carlo estimate of the subspace recovery error.
    McSubspace(McRankArgs),
    /// Eigenvalue trajectories of M + B(t), or of the eigenvalue / vector SDE.
    SimulateDbm(SimulateArgs),
    /// Tail of the minimum eigenvalue gap along a matrix path.
    ValidateGapLemma(GapLemmaArgs),
    /// Tail of sup ||B(t)||_2 along a matrix path.
    ValidateSpectralLemma(SpectralLemmaArgs),
    /// Both sides of the Frobenius-distance integral identity.
    ValidateIntegralLemma(IntegralLemmaArgs),
    /// Weak comparison of the eigenvalue SDE against matrix paths.
    SdeVsMatrix(SdeArgs),
    /// Minimum eigenvalue gap of Wishart matrices for several m.
    WishartGaps(WishartArgs),
    /// Preprocess a dataset CSV and report its covariance gaps.
    DatasetGaps(DatasetArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Perturb(_) => "perturb",
            Command::Approx(_) => "approx",
            Command::RankK(_) => "rank-k",
            Command::Subspace(_) => "subspace",
            Command::CheckGaps(_) => "check-gaps",
            Command::Bound(_) => "bound",
            Command::McUtility(_) => "mc-utility",
            Command::McRankK(_) => "mc-rank-k",
            Command::McSubspace(_) => "mc-subspace",
            Command::SimulateDbm(_) => "simulate-dbm",
            Command::ValidateGapLemma(_) => "validate-gap-lemma",
            Command::ValidateSpectralLemma(_) => "validate-spectral-lemma",
            Command::ValidateIntegralLemma(_) => "validate-integral-lemma",
            Command::SdeVsMatrix(_) => "sde-vs-matrix",
            Command::WishartGaps(_) => "wishart-gaps",
            Command::DatasetGaps(_) => "dataset-gaps",
        }
    }

    pub fn common(&self) -> &Common {
        match self {
            Command::Perturb(a) => &a.common,
            Command::Approx(a) => &a.common,
            Command::RankK(a) | Command::Subspace(a) => &a.common,
            Command::CheckGaps(a) => &a.common,
            Command::Bound(a) => &a.common,
            Command::McUtility(a) => &a.common,
            Command::McRankK(a) | Command::McSubspace(a) => &a.common,
            Command::SimulateDbm(a) => &a.common,
            Command::ValidateGapLemma(a) => &a.common,
            Command::ValidateSpectralLemma(a) => &a.common,
            Command::ValidateIntegralLemma(a) => &a.common,
            Command::SdeVsMatrix(a) => &a.common,
            Command::WishartGaps(a) => &a.common,
            Command::DatasetGaps(a) => &a.common,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Flags shared by every subcommand. `--threads` and `--out` do not change
/// results and are left out of the embedded configuration.
#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// Base seed for every random stream.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for trial loops (default: all cores).
    #[arg(long)]
    #[serde(skip)]
    pub threads: Option<usize>,
    /// Output format (each subcommand has its own default).
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file (default: stdout).
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

/// Where the input matrix comes from.
#[derive(Debug, Clone, Args, Serialize)]
pub struct MatrixSource {
    /// Symmetric matrix as headerless CSV.
    #[arg(long = "in", value_name = "CSV", conflicts_with_all = ["sigma", "synthetic"])]
    pub input: Option<PathBuf>,
    /// Diagonal matrix with these entries, e.g. `40,20,0`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "synthetic")]
    pub sigma: Option<Vec<f64>>,
    /// Random-basis matrix: `uniform:GAP`, `geometric:TOP:RATIO` or `custom:S1,S2,...`.
    #[arg(long)]
    pub synthetic: Option<String>,
    /// Dimension for `--synthetic`.
    #[arg(long = "d")]
    pub dim: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PrivacyArgs {
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long)]
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TargetKind {
    /// `k` ones followed by zeros.
    Projector,
    /// The top `k` eigenvalues of the input, zeros afterwards.
    Truncated,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TargetArgs {
    /// Target eigenvalues, one per line.
    #[arg(long, value_name = "FILE", conflicts_with = "target")]
    pub lambda: Option<PathBuf>,
    /// Built-in target family (default: projector).
    #[arg(long, value_enum)]
    pub target: Option<TargetKind>,
    /// Rank cutoff.
    #[arg(long)]
    pub k: Option<usize>,
}

/// Diffusion horizon: `--horizon`, or the `T` implied by `--epsilon`/`--delta`.
#[derive(Debug, Clone, Args, Serialize)]
pub struct HorizonArgs {
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PerturbArgs {
    #[command(flatten)]
    pub source: MatrixSource,
    #[command(flatten)]
    pub privacy: PrivacyArgs,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ApproxArgs {
    #[command(flatten)]
    pub source: MatrixSource,
    #[command(flatten)]
    pub privacy: PrivacyArgs,
    /// Target eigenvalues, one per line.
    #[arg(long, value_name = "FILE")]
    pub lambda: PathBuf,
    /// Rank cutoff (default: last nonzero target eigenvalue).
    #[arg(long)]
    pub k: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RankArgs {
    #[command(flatten)]
    pub source: MatrixSource,
    #[command(flatten)]
    pub privacy: PrivacyArgs,
    #[arg(long)]
    pub k: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CheckGapsArgs {
    #[command(flatten)]
    pub source: MatrixSource,
    #[command(flatten)]
    pub privacy: PrivacyArgs,
    #[arg(long)]
    pub k: usize,
    /// Largest target eigenvalue (default: sigma_1 of the input).
    #[arg(long)]
    pub lambda1: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BoundArgs {
    #[command(flatten)]
    pub source: MatrixSource,
    #[command(flatten)]
    pub privacy: PrivacyArgs,
    #[command(flatten)]
    pub target: TargetArgs,
    /// Constant multiplying the double sum.
    #[arg(long, default_value_t = 128.0)]
    pub constant: f64,
    /// Also report the Markov tail P(error^2 >= s).
    #[arg(long)]
    pub markov_s: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct McUtilityArgs {
    #[command(flatten)]
    pub source: MatrixSource,
    #[command(flatten)]
    pub privacy: PrivacyArgs,
    #[command(flatten)]
    pub target: TargetArgs,
    #[arg(long, default_value_t = 2000)]
    pub trials: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct McRankArgs {
    #[command(flatten)]
    pub source: MatrixSource,
    #[command(flatten)]
    pub privacy: PrivacyArgs,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 2000)]
    pub trials: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Eigenvalues of M + B(t) along a sampled path.
    Matrix,
    /// Euler-Maruyama on the eigenvalue SDE.
    Sde,
    /// Euler-Maruyama on the joint eigenvalue / eigenvector flow.
    Flow,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub source: MatrixSource,
    #[command(flatten)]
    pub horizon: HorizonArgs,
    #[arg(long, default_value_t = 200)]
    pub steps: usize,
    #[arg(long, value_enum, default_value_t = Method::Matrix)]
    pub method: Method,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GapLemmaArgs {
    #[command(flatten)]
    pub source: MatrixSource,
    #[command(flatten)]
    pub horizon: HorizonArgs,
    /// 1-based gap indices (default: all).
    #[arg(long, value_delimiter = ',')]
    pub pairs: Option<Vec<usize>>,
    #[arg(long, default_value_t = 200)]
    pub steps: usize,
    #[arg(long, default_value_t = 2000)]
    pub trials: usize,
    #[arg(long, value_delimiter = ',', default_value = "4,8,12")]
    pub alpha: Vec<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SpectralLemmaArgs {
    #[arg(long = "d")]
    pub dim: usize,
    #[command(flatten)]
    pub horizon: HorizonArgs,
    #[arg(long, default_value_t = 200)]
    pub steps: usize,
    #[arg(long, default_value_t = 2000)]
    pub trials: usize,
    #[arg(long, value_delimiter = ',', default_value = "6,10")]
    pub alpha: Vec<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct IntegralLemmaArgs {
    #[command(flatten)]
    pub source: MatrixSource,
    #[command(flatten)]
    pub horizon: HorizonArgs,
    #[command(flatten)]
    pub target: TargetArgs,
    #[arg(long, default_value_t = 200)]
    pub steps: usize,
    #[arg(long, default_value_t = 2000)]
    pub trials: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SdeArgs {
    #[command(flatten)]
    pub source: MatrixSource,
    #[command(flatten)]
    pub horizon: HorizonArgs,
    #[arg(long, default_value_t = 400)]
    pub steps: usize,
    #[arg(long, default_value_t = 2000)]
    pub trials: usize,
    /// Eigenvalue repulsion coefficient.
    #[arg(long, default_value_t = spectral_dp_core::dbm::REPULSION)]
    pub repulsion: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct WishartArgs {
    #[arg(long = "d")]
    pub dim: usize,
    /// Comma-separated row counts.
    #[arg(long, value_delimiter = ',', required = true)]
    pub m: Vec<usize>,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DatasetArgs {
    /// Dataset CSV.
    #[arg(long = "in", value_name = "CSV")]
    pub input: PathBuf,
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
    /// The first line holds data, not column names.
    #[arg(long)]
    pub no_header: bool,
    #[arg(long, value_enum, default_value_t = DropPolicy::Strict)]
    pub drop: DropPolicy,
    /// Columns to drop by name or 1-based index.
    #[arg(long, value_delimiter = ',')]
    pub drop_columns: Vec<String>,
    #[command(flatten)]
    pub privacy: PrivacyArgs,
    #[command(flatten)]
    pub common: Common,
}
