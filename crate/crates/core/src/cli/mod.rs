//! The `stepbayes` command-line front end.
//!
//! Every subcommand takes `--seed`, `--out`, `--config` and repeated
//! `-p key=value` overrides. Outputs start with a comment header (CSV) or a
//! `config` block (JSON) echoing the resolved settings. Failures print one
//! line `error: kind=<kind> message="..."` on stderr and exit nonzero.

mod commands;
mod config;
mod spec;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};

pub use config::{read_config_file, RunConfig, VERSION};
pub use spec::{parse_function, parse_prefixes};

#[derive(Parser, Debug)]
#[command(name = "stepbayes", version, about = "Bayesian binary regression with step-function priors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Seed for every random stream.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// `key = value` file; `-p` flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Parameter override, `key=value`.
    #[arg(short = 'p', long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate a dataset from a regression function (keys: f, n).
    Simulate(Common),
    /// Posterior mean on a grid by reversible-jump sampling
    /// (keys: data, prior, grid, n_iters, burn_in, thin, move_width, truth).
    Fit(Common),
    /// Exact ln Z_m for small datasets (keys: data, m, n_max).
    ExactZ(Common),
    /// Posterior over the number of split points (keys: data, prior, m_max, source, mc_samples).
    ModelPosterior(Common),
    /// Middle- or beginning-zone rates (keys: zone, f, n, m, mc_samples, k, replicates).
    ZoneScan(Common),
    /// Poissonized rate estimates (keys: f, alpha, n, replicates, method, inner_samples, piecewise).
    Psi(Common),
    /// End-zone rates against the entropy bound (keys: f, alpha, n, replicates, method, inner_samples).
    EndZone(Common),
    /// Measure of the bad set (keys: data, f, n, epsilon, kappa).
    Badset(Common),
    /// Relative-entropy terms of the rechargeable urn (keys: p, r, k, replicates).
    UrnTerms(Common),
    /// Total-variation mixing of the urn draws (keys: r, m, prefixes).
    UrnMixing(Common),
    /// Entropy functional of a regression function (keys: f).
    Entropy(Common),
}

type Runner = fn(&RunConfig, &mut dyn Write) -> Result<()>;

impl Command {
    fn parts(self) -> (&'static str, commands::Defaults, Runner, Common) {
        use commands as c;
        match self {
            Command::Simulate(a) => ("simulate", c::SIMULATE, c::simulate, a),
            Command::Fit(a) => ("fit", c::FIT, c::fit, a),
            Command::ExactZ(a) => ("exact-z", c::EXACT_Z, c::exact_z, a),
            Command::ModelPosterior(a) => ("model-posterior", c::MODEL_POSTERIOR, c::model_posterior_cmd, a),
            Command::ZoneScan(a) => ("zone-scan", c::ZONE_SCAN, c::zone_scan, a),
            Command::Psi(a) => ("psi", c::PSI, c::psi, a),
            Command::EndZone(a) => ("end-zone", c::END_ZONE, c::end_zone, a),
            Command::Badset(a) => ("badset", c::BADSET, c::badset, a),
            Command::UrnTerms(a) => ("urn-terms", c::URN_TERMS, c::urn_terms, a),
            Command::UrnMixing(a) => ("urn-mixing", c::URN_MIXING, c::urn_mixing, a),
            Command::Entropy(a) => ("entropy", c::ENTROPY, c::entropy, a),
        }
    }
}

/// Runs one invocation. The output is buffered so a failed run leaves no
/// partial file behind.
pub fn run<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return Ok(());
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("").trim_start_matches("error: ");
            return Err(Error::Config(first.to_string()));
        }
    };
    let (name, defaults, runner, common) = cli.command.parts();
    let file = match &common.config {
        Some(path) => read_config_file(path)?,
        None => Vec::new(),
    };
    let cfg = RunConfig::resolve(name, defaults, file, &common.params, common.seed, common.out)?;
    let mut buf = Vec::new();
    runner(&cfg, &mut buf)?;
    match &cfg.out {
        Some(path) => fs::write(path, buf)?,
        None => std::io::stdout().lock().write_all(&buf)?,
    }
    Ok(())
}

/// One-line machine-readable form of an error.
pub fn error_line(err: &Error) -> String {
    let message = err.to_string();
    format!("error: kind={} message={:?}", err.kind(), message.lines().next().unwrap_or(""))
}

pub fn main() -> ExitCode {
    match run(std::env::args_os()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_line(&e));
            ExitCode::FAILURE
        }
    }
}
