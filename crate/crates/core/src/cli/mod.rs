//! The `mwboot` command line: `analyze`, `simulate` and `weights`.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 data error,
//! 4 numeric degeneracy.

mod analyze;
pub mod io;
pub mod manifest;
mod simulate;
mod weights;

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::error::Error;
use crate::inference::{Method, Sidedness};
use crate::model::{BootstrapConfig, DenominatorFactor, KappaRule, LambdaMode, ScaleRule, WeightScheme};
use crate::simulation::DgpSpec;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Schema { line: usize, msg: String },
    Lib(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) | CliError::Schema { .. } => 3,
            CliError::Lib(e) => match e {
                Error::InvalidConfig(_)
                | Error::InvalidMoment { .. }
                | Error::SampleTooSmall(_)
                | Error::TooFewReplicates { .. }
                | Error::UnknownDesign(_) => 2,
                Error::NonFinite(_) | Error::DuplicateMaskEntry(..) | Error::EmptyMask(_) | Error::IndexOutOfRange(_) => 3,
                Error::DimensionTooSmall(_)
                | Error::DegenerateDesign(_)
                | Error::SingularJacobian(_)
                | Error::MomentEvaluationFailure(_) => 4,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Schema { line, msg } => write!(f, "schema error at line {line}: {msg}"),
            CliError::Lib(e @ (Error::DegenerateDesign(_) | Error::DimensionTooSmall(_))) => write!(
                f,
                "{e}\nhint: each clustering dimension needs at least two levels and the residual variance needs \
                 at least three rows and columns; check the index columns or pick a pipeline with --mode"
            ),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "mwboot", version, about = "Multi-way clustered bootstrap for means of arrays")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Bootstrap the mean of a long-format CSV file.
    Analyze(analyze::AnalyzeArgs),
    /// Monte Carlo rejection rates for a named design or a config file.
    Simulate(simulate::SimulateArgs),
    /// Two-point wild weights for given moments.
    Weights(weights::WeightsArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LambdaArg {
    Hat,
    Tilde,
    Conservative,
    Thresholded,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum WeightsArg {
    Mammen,
    Corrected,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScaleArg {
    Full,
    Selection,
    Floored,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KappaArg {
    Log,
    SqrtHalfLog,
}

/// Bootstrap settings shared by `analyze` and `simulate`.
#[derive(Args, Debug, Clone)]
struct BootFlags {
    /// TOML file with `[bootstrap]` and command-specific tables; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Bootstrap replicates.
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long, value_enum)]
    lambda: Option<LambdaArg>,
    #[arg(long, value_enum)]
    weights: Option<WeightsArg>,
    #[arg(long, value_enum)]
    kappa: Option<KappaArg>,
    /// Studentization scale of PIV and SYM.
    #[arg(long, value_enum)]
    scale: Option<ScaleArg>,
    #[arg(long, value_parser = ["1", "2"])]
    denominator_factor: Option<String>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "mwboot-out")]
    out: PathBuf,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct InferenceFile {
    level: Option<f64>,
    methods: Option<Vec<Method>>,
    null: Option<f64>,
    side: Option<Sidedness>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SimulationFile {
    design: Option<String>,
    sims: Option<usize>,
    n: Option<usize>,
    t: Option<usize>,
    sizes: Option<Vec<usize>>,
    grid: Option<usize>,
    level: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    bootstrap: Option<BootstrapConfig>,
    inference: InferenceFile,
    simulation: SimulationFile,
    dgp: Option<DgpSpec>,
}

fn read_file(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn load_config(path: Option<&Path>) -> CliResult<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = String::from_utf8(read_file(path)?).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

impl BootFlags {
    /// File values, then flags.
    fn resolve(&self, file: &FileConfig) -> CliResult<BootstrapConfig> {
        let mut cfg = file.bootstrap.clone().unwrap_or_default();
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(b) = self.reps {
            cfg.replicates = b;
        }
        if let Some(l) = self.lambda {
            cfg.lambda_mode = match l {
                LambdaArg::Hat => LambdaMode::Hat,
                LambdaArg::Tilde => LambdaMode::Tilde,
                LambdaArg::Conservative => LambdaMode::Conservative,
                LambdaArg::Thresholded => LambdaMode::Thresholded,
            };
        }
        if let Some(w) = self.weights {
            cfg.weight_scheme = match w {
                WeightsArg::Mammen => WeightScheme::Mammen,
                WeightsArg::Corrected => WeightScheme::MomentCorrected,
            };
        }
        if let Some(k) = self.kappa {
            cfg.kappa_rule = match k {
                KappaArg::Log => KappaRule::Log,
                KappaArg::SqrtHalfLog => KappaRule::SqrtHalfLog,
            };
        }
        if let Some(s) = self.scale {
            cfg.scale_rule = match s {
                ScaleArg::Full => ScaleRule::Full,
                ScaleArg::Selection => ScaleRule::Selection,
                ScaleArg::Floored => ScaleRule::Floored,
            };
        }
        if let Some(f) = &self.denominator_factor {
            cfg.denominator_factor = if f == "2" { DenominatorFactor::Two } else { DenominatorFactor::One };
        }
        if self.threads.is_some() {
            cfg.threads = self.threads;
        }
        cfg.check()?;
        Ok(cfg)
    }
}

/// Settings that determine the outputs: everything except the thread count.
fn output_config(cfg: &BootstrapConfig) -> serde_json::Value {
    let mut v = serde_json::to_value(cfg).expect("config serializes");
    if let Some(map) = v.as_object_mut() {
        map.remove("threads");
    }
    v
}

fn write_out(dir: &Path, name: &str, contents: &[u8]) -> CliResult<String> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(name.to_string())
}

fn to_json<T: serde::Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("output serializes");
    s.push('\n');
    s.into_bytes()
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match cli.command {
        Command::Analyze(a) => analyze::run(&a),
        Command::Simulate(a) => simulate::run(&a),
        Command::Weights(a) => weights::run(&a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("mwboot: {e}");
            e.exit_code()
        }
    }
}

/// Entry point of the `mwboot` binary.
pub fn main() -> i32 {
    run(std::env::args_os())
}
