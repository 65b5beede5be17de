//! `progmeas` subcommands. Each one builds a [`Dataset`] and writes it as CSV,
//! with a `.meta.toml` sidecar when `--out` is given.

use clap::{Args, Parser, Subcommand};
use progmeas_core::dataset::Metadata;
use progmeas_core::discriminator::{self, DEFAULT_EPSILONS};
use progmeas_core::experiment::run_full_experiment;
use progmeas_core::multimeter::{self, check_program_copies};
use progmeas_core::stats::Estimate;
use progmeas_core::{Dataset, Error, ExperimentConfig, Result, Task};
use std::io::Write;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

#[derive(Debug, Parser)]
#[command(name = "progmeas", version, about = "Programmable two-photon measurement simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Unambiguous discrimination sweep over (ε, ϑ).
    Discriminate(DiscriminateArgs),
    /// Phase-covariant multimeter sweep over (φ, η).
    Multimeter(MultimeterArgs),
    /// Coincidence rates against mirror position.
    HomScan(HomScanArgs),
    /// Recompute estimators from a file of raw counts.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Args)]
pub struct SimArgs {
    /// TOML experiment configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Lossless, noiseless setup with perfect mode overlap.
    #[arg(long, conflicts_with = "config")]
    pub ideal: bool,
    /// Overrides the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DiscriminateArgs {
    /// Ellipticities in degrees, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub epsilon: Vec<f64>,
    /// Orientation grid `start:stop:step` in degrees, inclusive.
    #[arg(long, default_value = "0:90:4", allow_hyphen_values = true)]
    pub theta_range: String,
    /// Mean generated pairs per input setting.
    #[arg(long)]
    pub pairs: Option<f64>,
    #[command(flatten)]
    pub sim: SimArgs,
}

#[derive(Debug, Args)]
pub struct MultimeterArgs {
    /// Phase grid `start:stop:step` in degrees, inclusive.
    #[arg(long, default_value = "-90:90:8", allow_hyphen_values = true)]
    pub phi_range: String,
    /// Inconclusive weights in [0, 1], comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub eta: Vec<f64>,
    /// Number of program qubits.
    #[arg(long, default_value_t = 1)]
    pub program_copies: u32,
    #[arg(long)]
    pub pairs: Option<f64>,
    #[command(flatten)]
    pub sim: SimArgs,
}

#[derive(Debug, Args)]
pub struct HomScanArgs {
    /// Mirror positions in μm, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "range")]
    pub positions: Vec<f64>,
    /// Position grid `start:stop:step` in μm, inclusive.
    #[arg(long, default_value = "-200:200:10", allow_hyphen_values = true)]
    pub range: String,
    #[command(flatten)]
    pub sim: SimArgs,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// CSV with the eight raw count columns.
    #[arg(long)]
    pub input: PathBuf,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(clap::Error),
    Run(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Run(e)
    }
}

/// Inclusive arithmetic grid from `start:stop:step`.
pub fn parse_range(text: &str) -> Result<Vec<f64>> {
    let bad = |reason: &str| Error::InvalidParameter {
        name: "range",
        reason: format!("`{text}`: {reason}"),
    };
    let parts: Vec<f64> = text
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| bad("expected start:stop:step"))?;
    let [start, stop, step] = parts[..] else {
        return Err(bad("expected start:stop:step"));
    };
    if !(step > 0.0) || !step.is_finite() {
        return Err(bad("step must be positive"));
    }
    if !(stop >= start) {
        return Err(bad("stop is below start"));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|k| start + step * k as f64).collect())
}

fn load_config(sim: &SimArgs) -> Result<ExperimentConfig> {
    let mut cfg = match (&sim.config, sim.ideal) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, true) => ExperimentConfig::ideal(),
        (None, false) => ExperimentConfig::default(),
    };
    if let Some(seed) = sim.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn emit<W: Write>(mut ds: Dataset, argv: &[String], out: &Option<PathBuf>, stdout: W) -> Result<Dataset> {
    ds.metadata.args = argv.iter().skip(1).cloned().collect();
    ds.metadata.timestamp = unix_now();
    match out {
        Some(path) => ds.save(path)?,
        None => ds.write_csv(stdout)?,
    }
    Ok(ds)
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// dataset it wrote.
pub fn run<W: Write>(argv: &[String], stdout: W) -> std::result::Result<Dataset, CliError> {
    let cli = Cli::try_parse_from(argv).map_err(CliError::Usage)?;
    let (ds, out) = match &cli.command {
        Command::Discriminate(a) => (discriminate(a)?, &a.sim.out),
        Command::Multimeter(a) => (multimeter(a)?, &a.sim.out),
        Command::HomScan(a) => (hom_scan(a)?, &a.sim.out),
        Command::Analyze(a) => (analyze(&Dataset::load(&a.input)?)?, &a.out),
    };
    Ok(emit(ds, argv, out, stdout)?)
}

pub fn discriminate(args: &DiscriminateArgs) -> Result<Dataset> {
    let mut cfg = load_config(&args.sim)?;
    if let Some(pairs) = args.pairs {
        cfg = cfg.with_pairs_per_setting(pairs);
    }
    let epsilons = if args.epsilon.is_empty() {
        DEFAULT_EPSILONS.to_vec()
    } else {
        args.epsilon.clone()
    };
    let thetas = parse_range(&args.theta_range)?;
    run_full_experiment(&Task::Discriminator { epsilons, thetas }, &cfg)
}

pub fn multimeter(args: &MultimeterArgs) -> Result<Dataset> {
    check_program_copies(args.program_copies)?;
    let mut cfg = load_config(&args.sim)?;
    if let Some(pairs) = args.pairs {
        cfg = cfg.with_pairs_per_setting(pairs);
    }
    let phis = parse_range(&args.phi_range)?;
    run_full_experiment(&Task::Multimeter { phis, etas: args.eta.clone() }, &cfg)
}

pub fn hom_scan(args: &HomScanArgs) -> Result<Dataset> {
    let cfg = load_config(&args.sim)?;
    let positions = if args.positions.is_empty() {
        parse_range(&args.range)?
    } else {
        args.positions.clone()
    };
    run_full_experiment(&Task::HomScan { positions }, &cfg)
}

pub const ANALYSIS_COLUMNS: [&str; 8] = [
    "p_succ",
    "p_succ_stderr",
    "p_inconclusive",
    "p_inconclusive_stderr",
    "error_rate",
    "error_rate_stderr",
    "fidelity",
    "fidelity_stderr",
];

const COORDINATES: [&str; 5] = ["epsilon", "theta", "phi", "eta", "position"];

/// Applies every count estimator to each row of `input`. Sweep coordinates
/// present in the input are carried over.
pub fn analyze(input: &Dataset) -> Result<Dataset> {
    let records = input.count_records()?;
    let coords: Vec<(String, Vec<f64>)> = COORDINATES
        .iter()
        .filter_map(|c| input.column(c).ok().map(|v| (c.to_string(), v)))
        .collect();

    let mut meta = Metadata::new("analyze", &input.metadata.config, input.metadata.seed);
    let mut columns: Vec<String> = coords.iter().map(|(c, _)| c.clone()).collect();
    columns.extend(ANALYSIS_COLUMNS.iter().map(|s| s.to_string()));
    let mut rows = Vec::with_capacity(records.len());
    for (i, rec) in records.iter().enumerate() {
        let mut row: Vec<f64> = coords.iter().map(|(_, v)| v[i]).collect();
        let estimates = [
            ("p_succ", discriminator::estimate_success_with_error(rec)),
            ("p_inconclusive", multimeter::estimate_PI_with_error(rec)),
            ("error_rate", discriminator::error_rate_with_error(rec)),
            ("fidelity", multimeter::estimate_fidelity(rec)),
        ];
        for (name, est) in estimates {
            match est {
                Ok(Estimate { value, stderr }) => row.extend([value, stderr]),
                Err(e) => {
                    row.extend([f64::NAN, f64::NAN]);
                    meta.errors.push(format!("row {}: {name}: {e}", i + 1));
                }
            }
        }
        rows.push(row);
    }
    Ok(Dataset {
        metadata: meta,
        columns,
        rows,
    })
}
