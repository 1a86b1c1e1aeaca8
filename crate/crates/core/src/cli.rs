//! Command-line front end: `fit`, `simulate` and `summary`.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, Parser, Subcommand};

use crate::data::{load_csv, write_csv, NaPolicy, ResponseType};
use crate::error::{Error, Result};
use crate::estimation::{fit, FitConfig, FitResult, Solver};
use crate::formula::parse_formula;
use crate::report::render_summary;
use crate::simulate::{
    simulate, toy_params, toy_spec, CovariateLaw, SimConfig, SimConfigFile, TOY_UNITS,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "ordnorm",
    version,
    about = "Pairwise likelihood fits for mixed ordinal and Gaussian responses"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a model to a CSV file.
    Fit(FitArgs),
    /// Simulate a dataset and write it as CSV.
    Simulate(SimulateArgs),
    /// Re-render the report of a saved fit.
    Summary(SummaryArgs),
}

#[derive(Debug, Args)]
struct FitArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Model formula, e.g. "y1 + y2 + z1 ~ 0 + X1 + X2".
    #[arg(long)]
    formula: String,
    /// Comma-separated response types (ordinal|gaussian), one per response.
    #[arg(long)]
    types: String,
    /// Missing-response policy.
    #[arg(long, default_value = "fail")]
    na: NaPolicy,
    #[arg(long, default_value = "bfgs")]
    solver: Solver,
    /// Compute Godambe standard errors.
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    se: bool,
    /// Standardize covariates before fitting.
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    standardize: bool,
    /// Write the fit as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the text report here instead of stdout.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
    /// Relative gradient tolerance.
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// JSON with `spec`, `params` and optional `n`, `seed`, `missing_rate`.
    #[arg(long, conflicts_with = "toy", required_unless_present = "toy")]
    params: Option<PathBuf>,
    /// Use the built-in toy design.
    #[arg(long)]
    toy: bool,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// One rate for all responses, or a comma-separated rate per response.
    #[arg(long)]
    missing_rate: Option<String>,
    /// Output CSV (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SummaryArgs {
    /// Fit JSON written by `fit --out`.
    #[arg(long = "in")]
    input: PathBuf,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command, returning the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Simulate(a) => cmd_simulate(a).map(|()| EXIT_OK),
        Command::Summary(a) => cmd_summary(a).map(|()| EXIT_OK),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    }
}

fn write_text(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

fn parse_types(text: &str) -> Result<Vec<ResponseType>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<ResponseType>()
                .map_err(Error::InvalidConfig)
        })
        .collect()
}

fn cmd_fit(a: FitArgs) -> Result<i32> {
    let formula = parse_formula(&a.formula)?;
    let types = parse_types(&a.types)?;
    let loaded = load_csv(&a.data, &formula, &types, a.na)?;
    let mut spec = loaded.spec;
    spec.standardize = a.standardize && spec.p() > 0;
    let config = FitConfig {
        solver: a.solver,
        max_iterations: a.max_iter,
        gradient_tolerance: a.tol,
        compute_se: a.se,
        seed: a.seed,
    };
    config.validate()?;
    if a.threads == Some(0) {
        return Err(Error::InvalidConfig("--threads must be positive".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start thread pool: {e}")))?;
    let mut result = pool.install(|| fit(&spec, &loaded.data, &config))?;
    result.formula = Some(formula);
    let mut warnings = loaded.warnings;
    warnings.append(&mut result.warnings);
    result.warnings = warnings;

    if let Some(out) = &a.out {
        let json = serde_json::to_string_pretty(&result)?;
        std::fs::write(out, json + "\n").map_err(|e| Error::io(out, e))?;
    }
    write_text(a.report.as_deref(), &render_summary(&result))?;
    if result.converged {
        Ok(EXIT_OK)
    } else {
        eprintln!("error: the optimizer did not converge");
        Ok(EXIT_NOT_CONVERGED)
    }
}

fn parse_rates(text: &str, q: usize) -> Result<Vec<f64>> {
    let rates: Vec<f64> = text
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidConfig(format!("invalid missing rate `{t}`")))
        })
        .collect::<Result<_>>()?;
    Ok(if rates.len() == 1 {
        vec![rates[0]; q]
    } else {
        rates
    })
}

fn cmd_simulate(a: SimulateArgs) -> Result<()> {
    let file = match &a.params {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            serde_json::from_str::<SimConfigFile>(&text)?
        }
        None => SimConfigFile {
            spec: toy_spec(),
            params: toy_params(),
            n: Some(TOY_UNITS),
            seed: None,
            missing_rate: None,
        },
    };
    let q = file.spec.q();
    let missing_rate = match &a.missing_rate {
        Some(text) => parse_rates(text, q)?,
        None => file.missing_rate.clone().unwrap_or_default(),
    };
    let config = SimConfig {
        n: a.n.or(file.n).unwrap_or(TOY_UNITS),
        seed: a.seed.or(file.seed).unwrap_or(0),
        spec: file.spec,
        params: file.params,
        covariate_law: CovariateLaw::StandardNormalIid,
        missing_rate,
    };
    let data = simulate(&config)?;
    match &a.out {
        Some(path) => {
            let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
            write_csv(&data, &config.spec, std::io::BufWriter::new(f))
        }
        None => write_csv(&data, &config.spec, std::io::stdout().lock()),
    }
}

fn cmd_summary(a: SummaryArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.input).map_err(|e| Error::io(&a.input, e))?;
    let result: FitResult = serde_json::from_str(&text)?;
    write_text(a.out.as_deref(), &render_summary(&result))
}
