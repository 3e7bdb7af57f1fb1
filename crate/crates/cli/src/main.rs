//! `mask-advisor`: pick the masking configuration that best preserves
//! attribute-label dependence, from raw data or from masked joints alone.
//!
//! Exit status is 0 on success, 1 on runtime errors and 2 on usage errors.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

use mask_advisor::evaluation::Method;
use mask_advisor::{Case, IpfSettings, Measure};

#[derive(Debug, Parser)]
#[command(name = "mask-advisor", version, about, propagate_version = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the 1D histogram of every column of a CSV file.
    Summarize(SummarizeArgs),
    /// Rank masking configurations by predictive-utility deviation.
    Advise(AdviseArgs),
    /// Apply one masking configuration to a CSV file, row by row.
    Mask(MaskArgs),
    /// Draw random masking configurations for a dataset.
    GenConfigs(GenConfigsArgs),
    /// Generate a synthetic labelled dataset.
    GenSynth(GenSynthArgs),
    /// Score reconstructions against the true joints of a dataset.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Input CSV file with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Name of the label column.
    #[arg(long)]
    label: String,
    /// Discretize all-numeric feature columns into this many equal-width bins.
    #[arg(long)]
    bins: Option<usize>,
}

#[derive(Debug, Args)]
struct IpfArgs {
    /// Master seed for randomized rounding.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Convergence threshold on the max constraint residual, relative to N.
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
    /// Maximum number of fitting sweeps.
    #[arg(long = "max-iters", default_value_t = 1000)]
    max_iters: usize,
}

impl IpfArgs {
    fn settings(&self) -> IpfSettings {
        IpfSettings {
            tolerance: self.tolerance,
            max_iterations: self.max_iters,
            rounding_seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MeasureArg {
    Mi,
    Chi2,
    G3,
}

impl From<MeasureArg> for Measure {
    fn from(m: MeasureArg) -> Self {
        match m {
            MeasureArg::Mi => Measure::MutualInformation,
            MeasureArg::Chi2 => Measure::ChiSquare,
            MeasureArg::G3 => Measure::G3,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CaseArg {
    #[value(name = "with-1d")]
    With1d,
    #[value(name = "no-1d")]
    No1d,
}

impl From<CaseArg> for Case {
    fn from(c: CaseArg) -> Self {
        match c {
            CaseArg::With1d => Case::WithMarginals,
            CaseArg::No1d => Case::NoMarginals,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    #[value(name = "ipf-with-1d")]
    IpfWith1d,
    #[value(name = "ipf-no-1d")]
    IpfNo1d,
    Sampling,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::IpfWith1d => Method::IpfWithMarginals,
            MethodArg::IpfNo1d => Method::IpfNoMarginals,
            MethodArg::Sampling => Method::Sampling,
        }
    }
}

#[derive(Debug, Args)]
struct SummarizeArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Summary JSON to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("source").required(true).args(["data", "masked_joints"])))]
struct AdviseArgs {
    /// Configuration-set JSON file.
    #[arg(long)]
    configs: PathBuf,
    #[arg(long, value_enum)]
    measure: MeasureArg,
    #[arg(long, value_enum, default_value = "with-1d")]
    case: CaseArg,

    /// Provider mode: raw CSV data.
    #[arg(long, requires = "label")]
    data: Option<PathBuf>,
    /// Label column (provider mode).
    #[arg(long)]
    label: Option<String>,
    /// Equal-width bins for numeric features (provider mode).
    #[arg(long, requires = "data")]
    bins: Option<usize>,
    /// Also write the masked joints that middleware mode consumes (provider mode).
    #[arg(long, requires = "data")]
    emit_masked_joints: Option<PathBuf>,

    /// Middleware mode: masked joints per configuration and attribute.
    #[arg(long, conflicts_with_all = ["label", "bins"])]
    masked_joints: Option<PathBuf>,
    /// Middleware mode: histograms as written by `summarize`.
    #[arg(long, requires = "masked_joints")]
    summaries: Option<PathBuf>,
    /// Middleware mode: original domain per attribute, `{"attr": [values]}`.
    #[arg(long, requires = "masked_joints")]
    domains: Option<PathBuf>,

    #[command(flatten)]
    ipf: IpfArgs,
    /// Worker threads (0 uses every core). Results do not depend on it.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Advisory report JSON to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct MaskArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Configuration-set JSON file.
    #[arg(long)]
    configs: PathBuf,
    /// Which configuration to apply when the file holds several.
    #[arg(long)]
    config_id: Option<String>,
    /// Masked CSV to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct GenConfigsArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Number of configurations.
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Generator policy JSON; defaults to every kind with default ranges.
    #[arg(long)]
    policy: Option<PathBuf>,
    /// Configuration-set JSON to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct GenSynthArgs {
    #[arg(long)]
    rows: usize,
    #[arg(long)]
    attrs: usize,
    /// Values per attribute.
    #[arg(long, default_value_t = 10)]
    domain_size: usize,
    /// Label classes.
    #[arg(long, default_value_t = 4)]
    classes: usize,
    /// Attribute-label coupling in [0, 1].
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// CSV file to write.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Configuration-set JSON file.
    #[arg(long)]
    configs: PathBuf,
    /// Reconstruction methods to compare.
    #[arg(long, value_enum, value_delimiter = ',', default_values = ["ipf-with-1d", "ipf-no-1d", "sampling"])]
    methods: Vec<MethodArg>,
    /// Measures whose deviation is recorded.
    #[arg(long = "measure", value_enum, value_delimiter = ',', default_values = ["mi", "chi2", "g3"])]
    measures: Vec<MeasureArg>,
    #[command(flatten)]
    ipf: IpfArgs,
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Newline-delimited JSON records; the summary goes to `<out>.summary.json`.
    #[arg(long)]
    out: PathBuf,
    /// Also write the records as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Also write per-phase wall times as JSON (not reproducible across runs).
    #[arg(long)]
    timings: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Summarize(a) => commands::summarize(a),
        Command::Advise(a) => commands::advise(a),
        Command::Mask(a) => commands::mask(a),
        Command::GenConfigs(a) => commands::gen_configs(a),
        Command::GenSynth(a) => commands::gen_synth(a),
        Command::Evaluate(a) => commands::evaluate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<commands::UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
