use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use talc_core::model::{FitOptions, GibbsOptions, InitPolicy};
use talc_core::pipeline::{Inference, ModelHyper};

#[derive(Debug, Parser)]
#[command(
    name = "talc",
    version,
    about = "Test-time label aggregation over explanation-conditioned teachers"
)]
pub struct Cli {
    /// TOML file of `key = value` defaults for the subcommand's flags.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the aggregator on the adaptation split and label every example.
    Adapt(AdaptArgs),
    /// Generate a synthetic task from teacher profiles.
    Simulate(SimulateArgs),
    /// Run an explanation-set ablation.
    Ablate(AblateArgs),
    /// Score predictions against gold labels.
    Eval(EvalArgs),
    /// Run a baseline aggregator.
    Baseline(BaselineArgs),
    /// Label a stream with majority vote until enough rows arrive to fit.
    Warmup(WarmupArgs),
    /// Build a labeling matrix by prompting a completion endpoint (network).
    Label(LabelArgs),
    /// Re-run a recorded command and check its outputs byte for byte.
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Adapt(_) => "adapt",
            Command::Simulate(_) => "simulate",
            Command::Ablate(_) => "ablate",
            Command::Eval(_) => "eval",
            Command::Baseline(_) => "baseline",
            Command::Warmup(_) => "warmup",
            Command::Label(_) => "label",
            Command::Replay(_) => "replay",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitArg {
    MajorityVote,
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InferenceArg {
    Exact,
    Gibbs,
}

#[derive(Debug, Clone, Args)]
pub struct HyperArgs {
    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 1.0)]
    pub step_size: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub l2_lambda: f64,
    #[arg(long, value_enum, default_value_t = InitArg::MajorityVote)]
    pub init: InitArg,
    /// Smoothing of the majority-vote posteriors used to start EM.
    #[arg(long, default_value_t = 0.01)]
    pub init_epsilon: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub init_accuracy: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub init_propensity: f64,
    /// Fixed class log-prior, one value per class; uniform when omitted.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub class_log_prior: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value_t = InferenceArg::Exact)]
    pub inference: InferenceArg,
    #[arg(long, default_value_t = 100)]
    pub gibbs_burn_in: usize,
    #[arg(long, default_value_t = 500)]
    pub gibbs_samples: usize,
}

impl HyperArgs {
    pub fn to_hyper(&self, seed: u64) -> ModelHyper {
        let init = match self.init {
            InitArg::MajorityVote => InitPolicy::MajorityVote {
                epsilon: self.init_epsilon,
            },
            InitArg::Constant => InitPolicy::Constant {
                accuracy: self.init_accuracy,
                propensity: self.init_propensity,
            },
        };
        ModelHyper {
            fit: FitOptions {
                init,
                max_iters: self.max_iters,
                tol: self.tol,
                step_size: self.step_size,
                l2_lambda: self.l2_lambda,
                class_log_prior: self.class_log_prior.clone(),
            },
            inference: match self.inference {
                InferenceArg::Exact => Inference::Exact,
                InferenceArg::Gibbs => Inference::Gibbs(GibbsOptions {
                    burn_in: self.gibbs_burn_in,
                    samples: self.gibbs_samples,
                    seed,
                }),
            },
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct AdaptArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    /// JSON `{"class_names": [...]}`.
    #[arg(long)]
    pub classes: PathBuf,
    /// Fraction of the rows used to fit the aggregator.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Shuffle rows (seeded) before taking the adaptation prefix.
    #[arg(long)]
    pub shuffle: bool,
    #[arg(long)]
    pub weights_out: Option<PathBuf>,
    #[arg(long)]
    pub gold: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub hyper: HyperArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k: usize,
    /// JSON list of `{accuracy, abstain_rate, malicious, id}` objects.
    #[arg(long)]
    pub profiles: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Class frequencies; uniform when omitted.
    #[arg(long, value_delimiter = ',')]
    pub class_weights: Option<Vec<f64>>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AblateMode {
    TopPercent,
    DropBest,
    AddWorst,
    Malicious,
    ExplanationRatio,
    AdaptationSweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RankBy {
    Accuracy,
    Perplexity,
    Empirical,
}

#[derive(Debug, Clone, Args)]
pub struct AblateArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    /// Task descriptor with explanation metadata; also supplies the classes.
    #[arg(long)]
    pub task: Option<PathBuf>,
    #[arg(long)]
    pub classes: Option<PathBuf>,
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long, value_enum)]
    pub mode: AblateMode,
    /// Percentages for top-percent.
    #[arg(long, value_delimiter = ',')]
    pub x: Option<Vec<f64>>,
    /// Ratios for explanation-ratio, or alphas for adaptation-sweep.
    #[arg(long, value_delimiter = ',')]
    pub ratio: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value_t = RankBy::Accuracy)]
    pub rank_by: RankBy,
    /// Rank worst first (e.g. to keep the bottom X percent).
    #[arg(long)]
    pub worst_first: bool,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub hyper: HyperArgs,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub classes: PathBuf,
    /// Also score every explanation column of `--matrix` on its own.
    #[arg(long, requires = "matrix")]
    pub per_explanation: bool,
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BaselineKind {
    MajorityVote,
    MeanPool,
    Single,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FallbackArg {
    Class0,
    GlobalMode,
}

#[derive(Debug, Clone, Args)]
pub struct BaselineArgs {
    #[arg(long, value_enum)]
    pub method: BaselineKind,
    /// Hard matrix CSV (majority-vote, single).
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    /// Soft matrix JSON (mean-pool).
    #[arg(long)]
    pub soft_matrix: Option<PathBuf>,
    #[arg(long)]
    pub classes: Option<PathBuf>,
    /// Explanation id for `single`.
    #[arg(long)]
    pub column: Option<String>,
    #[arg(long, value_enum, default_value_t = FallbackArg::Class0)]
    pub fallback: FallbackArg,
    /// Seed for `random`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub gold: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct WarmupArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long)]
    pub classes: PathBuf,
    /// Rows labeled by majority vote before the aggregator is fitted.
    #[arg(long)]
    pub warmup_n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub gold: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub hyper: HyperArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LabelModeArg {
    PerExplanation,
    Concat,
}

#[derive(Debug, Clone, Args)]
pub struct LabelArgs {
    /// Task descriptor with example records.
    #[arg(long)]
    pub task: PathBuf,
    #[arg(long)]
    pub template: PathBuf,
    /// Endpoint configuration JSON.
    #[arg(long)]
    pub endpoint: PathBuf,
    #[arg(long, value_enum, default_value_t = LabelModeArg::PerExplanation)]
    pub mode: LabelModeArg,
    /// Use cached completions only.
    #[arg(long)]
    pub offline: bool,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Write the replayed outputs here instead of over the originals.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}
