use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "expmoment",
    version,
    about = "Exponential moments: optimum strategies, certificates and exponents"
)]
pub struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write the result table here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    pub output: Option<PathBuf>,
    /// Show rates and exponents in bits instead of nats.
    #[arg(long, global = true)]
    pub bits: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tilted measure Q ∝ P e^{α cost}.
    Tilt(TiltArgs),
    /// ln E exp{α ℓ(X,s)} for one or all strategies.
    Moment(MomentArgs),
    /// Check the tilted-measure optimality certificate.
    Certify(CertifyArgs),
    /// Min-max vs max-min of the Gibbs functional on a simplex grid.
    Saddle(SaddleArgs),
    /// Alternating minimization for max_s E exp{−α ℓ(X,s)}.
    Altmin(AltminArgs),
    /// Optimal code distribution s ∝ P^{1/(1+α)}.
    CodeDist(CodeDistArgs),
    /// Linear Bayesian estimator fixed point.
    BayesFixpoint(BayesArgs),
    /// Squared-error moment of the Gaussian sample mean.
    GaussianMoment(GaussianArgs),
    /// Cramér–Rao based lower bound on the squared-error moment.
    CrbBound(CrbArgs),
    /// Asymptotic exponent max_Q [α λ(Q) − D(Q‖P)].
    Exponent(ExponentArgs),
    /// Closed-form guessing exponent over an (α, R) sweep.
    Guessing(GuessingArgs),
    /// Rate-distortion point by Blahut–Arimoto.
    Rd(RdArgs),
    /// Exact finite-n moment of the two-part code.
    TwoPart(TwoPartArgs),
    /// Lossy-compression exponent of the random energy model.
    Rem(RemArgs),
    /// Curie–Weiss exponent, fixed points and phase at one (μ, α).
    CwExponent(CwArgs),
    /// Curie–Weiss phase diagram over a (μ, α) grid.
    CwPhaseDiagram(PhaseDiagramArgs),
    /// Monte Carlo estimate of E exp{α ℓ(X,s)}.
    Mc(McArgs),
    /// Run experiments from a config file.
    Config(ConfigArgs),
}

#[derive(Debug, Args)]
pub struct DistArgs {
    /// Distribution as a comma-separated list.
    #[arg(long, value_name = "LIST", conflicts_with = "p_file")]
    pub p: Option<String>,
    /// Distribution file ('-' for stdin).
    #[arg(long, value_name = "PATH")]
    pub p_file: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    /// Cost table CSV: one row per symbol, one column per strategy.
    #[arg(long, value_name = "PATH", conflicts_with = "code_grid")]
    pub table: Option<PathBuf>,
    /// Use code lengths −ln s(x) over the interior simplex lattice of this resolution.
    #[arg(long, value_name = "N")]
    pub code_grid: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TiltArgs {
    #[command(flatten)]
    pub dist: DistArgs,
    #[arg(long, value_name = "LIST", allow_hyphen_values = true)]
    pub cost: String,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: f64,
}

#[derive(Debug, Args)]
pub struct MomentArgs {
    #[command(flatten)]
    pub dist: DistArgs,
    #[command(flatten)]
    pub table: TableArgs,
    /// Strategy index (all strategies when omitted).
    #[arg(long)]
    pub s: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: f64,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub dist: DistArgs,
    #[command(flatten)]
    pub table: TableArgs,
    /// Strategy to certify (the brute-force optimum when omitted).
    #[arg(long)]
    pub s: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: f64,
    /// Allowed first-moment gap under Q [default: 1e-9, or m/N with --code-grid].
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SaddleArgs {
    #[command(flatten)]
    pub dist: DistArgs,
    #[command(flatten)]
    pub table: TableArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: f64,
    /// Simplex grid resolution.
    #[arg(long, default_value_t = 200)]
    pub res: usize,
}

#[derive(Debug, Args)]
pub struct AltminArgs {
    #[command(flatten)]
    pub dist: DistArgs,
    #[command(flatten)]
    pub table: TableArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: f64,
    /// Starting strategy [default: argmin_s E_P ℓ(X,s)].
    #[arg(long)]
    pub s0: Option<usize>,
    /// Start from every strategy and keep the best limit.
    #[arg(long)]
    pub multi_start: bool,
    #[arg(long, default_value_t = 1000)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct CodeDistArgs {
    #[command(flatten)]
    pub dist: DistArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: f64,
}

#[derive(Debug, Args)]
pub struct BayesArgs {
    /// Prior CSV with rows y,weight,phi.
    #[arg(long, value_name = "PATH", conflicts_with_all = ["phi_plus", "phi_minus"])]
    pub prior: Option<PathBuf>,
    /// φ(+1) of the symmetric two-point prior.
    #[arg(long, allow_hyphen_values = true, requires = "phi_minus")]
    pub phi_plus: Option<f64>,
    /// φ(−1) of the symmetric two-point prior.
    #[arg(long, allow_hyphen_values = true, requires = "phi_plus")]
    pub phi_minus: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub s0: f64,
    /// Comma-separated starting points; reports every distinct root.
    #[arg(long, value_name = "LIST", allow_hyphen_values = true)]
    pub starts: Option<String>,
    #[arg(long, default_value_t = 10_000)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long, default_value_t = 0.5)]
    pub damping: f64,
}

#[derive(Debug, Args)]
pub struct GaussianArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub sigma2: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub theta: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: f64,
    /// Also run a seeded Monte Carlo check with this many samples.
    #[arg(long)]
    pub mc_samples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct CrbArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub sigma2: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub theta: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1001)]
    pub grid: usize,
    /// Lower end of the θ' search [default: θ − 10·√(σ²/n)].
    #[arg(long, allow_hyphen_values = true)]
    pub lo: Option<f64>,
    /// Upper end of the θ' search [default: θ + 10·√(σ²/n)].
    #[arg(long, allow_hyphen_values = true)]
    pub hi: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LambdaKind {
    Shannon,
    Guessing,
    Rd,
    Dr,
}

#[derive(Debug, Args)]
pub struct ExponentArgs {
    #[command(flatten)]
    pub dist: DistArgs,
    #[arg(long, value_enum, default_value_t = LambdaKind::Shannon)]
    pub lambda: LambdaKind,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: f64,
    /// Rate for --lambda guessing or dr.
    #[arg(long = "R")]
    pub rate: Option<f64>,
    /// Distortion level for --lambda rd.
    #[arg(long = "D")]
    pub distortion_level: Option<f64>,
    /// Distortion matrix CSV [default: Hamming].
    #[arg(long, value_name = "PATH")]
    pub distortion: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-13)]
    pub tol: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iter: usize,
    /// Grid oracle: auto, off, or a resolution.
    #[arg(long, default_value = "auto")]
    pub oracle: String,
}

#[derive(Debug, Args)]
pub struct GuessingArgs {
    #[command(flatten)]
    pub dist: DistArgs,
    /// One or more rates.
    #[arg(long = "R", value_name = "LIST")]
    pub rate: String,
    /// One or more values of α.
    #[arg(long, value_name = "LIST")]
    pub alpha: String,
    /// Compare each point with the variational optimum.
    #[arg(long)]
    pub oracle: bool,
}

#[derive(Debug, Args)]
pub struct RdArgs {
    #[command(flatten)]
    pub dist: DistArgs,
    /// Distortion matrix CSV [default: Hamming].
    #[arg(long, value_name = "PATH")]
    pub distortion: Option<PathBuf>,
    /// Target distortion.
    #[arg(long = "D", conflicts_with_all = ["rate", "slope"])]
    pub distortion_level: Option<f64>,
    /// Target rate.
    #[arg(long = "R", conflicts_with = "slope")]
    pub rate: Option<f64>,
    /// Slope |dD/dR| of the curve point.
    #[arg(long)]
    pub slope: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct TwoPartArgs {
    #[command(flatten)]
    pub dist: DistArgs,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: f64,
    /// Block lengths.
    #[arg(long, value_name = "LIST", default_value = "20,40,60")]
    pub n: String,
}

#[derive(Debug, Args)]
pub struct RemArgs {
    #[arg(long = "R", allow_hyphen_values = true)]
    pub rate: f64,
    /// One or more values of α.
    #[arg(long, value_name = "LIST")]
    pub alpha: String,
}

#[derive(Debug, Args)]
pub struct CwArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub mu: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: f64,
    /// Also compute the exact finite-n value.
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Args)]
pub struct PhaseDiagramArgs {
    #[arg(long, value_name = "LO:HI:STEPS", allow_hyphen_values = true)]
    pub mu_range: String,
    #[arg(long, value_name = "LO:HI:STEPS", allow_hyphen_values = true)]
    pub alpha_range: String,
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[command(flatten)]
    pub dist: DistArgs,
    #[command(flatten)]
    pub table: TableArgs,
    #[arg(long)]
    pub s: usize,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: f64,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ConfigArgs {
    pub path: PathBuf,
}
