//! `semilocal`: experiment runner for divisibility probabilities of lattice
//! random walks.
//!
//! Exit codes: 0 success, 1 invalid input, 2 numeric integrity failure,
//! 3 disagreement between independent routes.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use output::{Format, OUT_DIR_ENV};

#[derive(Debug, Parser)]
#[command(name = "semilocal", version, about = "Divisibility probabilities of lattice random walks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Law file (TOML: v0, span, probs = [[index, "p/q"], ...]).
    #[arg(long, global = true)]
    pub law: Option<PathBuf>,
    /// Bernoulli mass of the default coupling, as "p/q" or a decimal.
    #[arg(long, global = true)]
    pub theta: Option<String>,
    /// Explicit mu as "index=p/q,index=p/q,...".
    #[arg(long, global = true)]
    pub mu: Option<String>,
    /// Sums lengths, e.g. "64,128,256" or "100..120".
    #[arg(long = "n-set", global = true)]
    pub n_set: Option<String>,
    /// Largest modulus; moduli run over [2, d-max].
    #[arg(long = "d-max", global = true)]
    pub d_max: Option<u64>,
    /// Drifts, e.g. "0,1,7,1000000".
    #[arg(long = "u-set", global = true)]
    pub u_set: Option<String>,
    /// Section heights for averaged discrepancies.
    #[arg(long = "phi-set", global = true)]
    pub phi_set: Option<String>,
    /// Agreement tolerance between routes (exact) or truncation tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; 0 uses every core, 1 runs sequentially.
    #[arg(long, global = true, default_value_t = 0)]
    pub workers: usize,
    /// Output table path.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Default output directory.
    #[arg(long = "out-dir", global = true, env = OUT_DIR_ENV, hide = true)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// P{d | S_n + u} by every available route.
    Exact {
        /// Batch file: queries = [[n, d, u], ...].
        #[arg(long)]
        queries: Option<PathBuf>,
        /// Explicit moduli instead of [2, d-max].
        #[arg(long = "d-set")]
        d_set: Option<String>,
    },
    /// Fair Bernoulli sums against theta sums: decay of the sup error in n.
    Theorem11,
    /// Lattice law approximant: discrepancy scan and averaged series.
    Theorem21 {
        #[arg(long, default_value_t = 0.9)]
        rho: f64,
        /// Divisor test set file (kind = list|primes|range); default [2, d-max].
        #[arg(long = "test-set")]
        test_set: Option<PathBuf>,
    },
    /// Bernoulli discrepancy against the local-limit and theta envelopes.
    CompareLlt,
    /// Small-modulus regimes for Bernoulli sums.
    Regimes {
        #[arg(long, default_value_t = 2.0)]
        alpha: f64,
        #[arg(long = "alpha-p", default_value_t = 1.8)]
        alpha_p: f64,
        #[arg(long, default_value_t = 0.5)]
        rho: f64,
        #[arg(long, default_value_t = 0.5)]
        eps: f64,
    },
    /// Scaling of the double Gaussian sum over moduli.
    Remark52 {
        #[arg(long = "m-set", default_value = "4,16,64,256,1024")]
        m_set: String,
    },
    /// Monte Carlo paths of the coupled representation.
    Sample {
        #[arg(long, default_value_t = 100_000)]
        count: u64,
    },
}

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numeric(String),
    Mismatch(String),
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) | CliError::Io(_) => 1,
            CliError::Numeric(_) => 2,
            CliError::Mismatch(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Numeric(m) => write!(f, "numeric integrity: {m}"),
            CliError::Mismatch(m) => write!(f, "oracle mismatch: {m}"),
            CliError::Io(m) => write!(f, "i/o: {m}"),
        }
    }
}

impl From<semilocal_core::Error> for CliError {
    fn from(e: semilocal_core::Error) -> Self {
        if e.is_numeric() {
            CliError::Numeric(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let c = &cli.common;
    match cli.command {
        Command::Exact { queries, d_set } => commands::exact(c, queries.as_deref(), d_set.as_deref()),
        Command::Theorem11 => commands::theorem11(c),
        Command::Theorem21 { rho, test_set } => commands::theorem21(c, rho, test_set.as_deref()),
        Command::CompareLlt => commands::compare_llt(c),
        Command::Regimes { alpha, alpha_p, rho, eps } => commands::regimes(c, alpha, alpha_p, rho, eps),
        Command::Remark52 { m_set } => commands::remark52(c, &m_set),
        Command::Sample { count } => commands::sample(c, count),
    }
}

#[cfg(feature = "parallel")]
fn run_with_workers(cli: Cli) -> Result<(), CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.common.workers)
        .build()
        .map_err(|e| CliError::Validation(format!("cannot start {} workers: {e}", cli.common.workers)))?;
    pool.install(|| run(cli))
}

#[cfg(not(feature = "parallel"))]
fn run_with_workers(cli: Cli) -> Result<(), CliError> {
    run(cli)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run_with_workers(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
