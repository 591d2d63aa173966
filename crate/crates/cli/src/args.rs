use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "belief",
    version,
    about = "Binary expansion linear effect models for a binary response"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Expand predictor columns into sign bits and write them as CSV.
    Expand(ExpandArgs),
    /// Fit a model from a CSV file and write it as JSON.
    Fit(FitArgs),
    /// Score new rows with a fitted model.
    Predict(PredictArgs),
    /// Test slopes and derive the conditional-independence statement.
    Infer(InferArgs),
    /// Translate GLM coefficients into slopes of the bit expansion.
    GlmCompare(GlmCompareArgs),
    /// Run a simulated comparison against logistic regression.
    Simulate(SimulateArgs),
}

/// How the predictors are expanded.
#[derive(Debug, Clone, Args)]
pub struct ExpansionArgs {
    /// Predictor expansion as NAME=DEPTH (empirical CDF), NAME=DEPTH@LO:HI
    /// (known range) or NAME=binary:LEVEL. Repeat or separate with commas.
    #[arg(long = "depth", value_name = "SPEC", value_delimiter = ',')]
    pub depth: Vec<String>,

    /// JSON file with an expansion configuration, instead of --depth.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExpandArgs {
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,

    /// Output CSV; stdout when omitted.
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,

    /// Also emit the response coded as -1/+1.
    #[arg(long, value_name = "COLUMN")]
    pub response: Option<String>,

    /// Response value coded as +1.
    #[arg(long, value_name = "LEVEL")]
    pub positive_level: Option<String>,

    #[command(flatten)]
    pub expansion: ExpansionArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorArg {
    Lse,
    Mp,
    Ridge,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,

    /// Model JSON destination.
    #[arg(long, value_name = "PATH")]
    pub output: PathBuf,

    /// Report destination; stdout when omitted.
    #[arg(long, value_name = "PATH")]
    pub report: Option<PathBuf>,

    #[arg(long, value_name = "COLUMN")]
    pub response: String,

    /// Response value coded as +1. Without it the response must be coded
    /// -1/+1 or 0/1.
    #[arg(long, value_name = "LEVEL")]
    pub positive_level: Option<String>,

    #[command(flatten)]
    pub expansion: ExpansionArgs,

    #[arg(long, value_enum, default_value = "lse")]
    pub estimator: EstimatorArg,

    /// Ridge penalty; required with --estimator ridge.
    #[arg(long)]
    pub lambda: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long, value_name = "PATH")]
    pub model: PathBuf,

    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,

    /// Output CSV; stdout when omitted.
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CorrectionArg {
    Bonferroni,
    None,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    #[arg(long, value_name = "PATH")]
    pub model: PathBuf,

    /// JSON report destination; the text report goes to stdout.
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,

    /// Familywise significance level.
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,

    #[arg(long, value_enum, default_value = "bonferroni")]
    pub correction: CorrectionArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LinkArg {
    Logit,
    Probit,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WeightsArg {
    Dyadic,
    Unit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Truncated,
    Conditional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScaleArg {
    Expectation,
    Probability,
}

#[derive(Debug, Args)]
pub struct GlmCompareArgs {
    #[arg(long, value_enum, default_value = "logit")]
    pub link: LinkArg,

    /// Intercept of the continuous model.
    #[arg(long, allow_hyphen_values = true)]
    pub intercept: Option<f64>,

    /// Coefficients of the continuous covariates, one per variable.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub coef: Vec<f64>,

    /// Bits per covariate for --coef.
    #[arg(long, default_value_t = 1)]
    pub depth: usize,

    #[arg(long, value_enum, default_value = "dyadic")]
    pub weights: WeightsArg,

    #[arg(long, value_enum, default_value = "truncated")]
    pub mode: ModeArg,

    /// GLM coefficients on the bit interactions, indexed by mask (length 2^P).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub gamma: Vec<f64>,

    /// Slopes indexed by mask, translated back into GLM coefficients.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub beta: Vec<f64>,

    #[arg(long, value_enum, default_value = "expectation")]
    pub scale: ScaleArg,

    /// JSON destination; stdout when omitted.
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario id: 1 linear, 2 quadratic, 3 circular.
    #[arg(long)]
    pub scenario: u8,

    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    /// Expansion depths of the fitted models.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    pub depths: Vec<usize>,

    #[arg(long, default_value_t = 8192)]
    pub n_train: usize,

    #[arg(long, default_value_t = 4096)]
    pub n_test: usize,

    /// JSON summary destination; stdout when omitted.
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,

    /// Optional CSV with every ROC curve.
    #[arg(long, value_name = "PATH")]
    pub roc: Option<PathBuf>,
}
