//! `xi-jensen`: builds coefficient caches, runs verification suites and
//! scans Turán thresholds.
//!
//! Exit codes: 0 all checks pass, 1 a check failed, 2 usage or configuration
//! error, 3 precision exhausted.

mod config;
mod output;
mod suites;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use xi_jensen::PrecCtx;

use config::{parse_list, CommonArgs, FileConfig, RunConfig};
use output::Report;
use suites::{Suite, SuiteReport, VerifyParams};

#[derive(Parser, Debug)]
#[command(name = "xi-jensen", version, about = "Taylor coefficients of xi, Jensen polynomials and their hyperbolicity")]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Compute gamma(0..=M_max) into the cache and audit the table
    GammaTable {
        /// Largest index to compute [default: 50]
        #[arg(long)]
        m_max: Option<u64>,
    },
    /// Run one verification suite
    Verify {
        #[arg(value_enum)]
        suite: Suite,
        /// Degrees, e.g. "3:10" or "3,5,8"
        #[arg(long)]
        d_range: Option<String>,
        /// Shifts n, same syntax as --d-range
        #[arg(long)]
        n_range: Option<String>,
        /// Indices M for the thm21 suite
        #[arg(long)]
        m_values: Option<String>,
        /// Number of fitted G_m
        #[arg(long)]
        fit_order: Option<usize>,
    },
    /// Per-degree Turán thresholds and the slope of log N against d
    ThresholdScan {
        /// Degrees to scan [default: 3:10]
        #[arg(long)]
        d_range: Option<String>,
        /// Largest shift searched per degree [default: 200]
        #[arg(long)]
        n_max: Option<u64>,
    },
}

enum Failure {
    Usage(String),
    Compute(xi_jensen::Error),
    Io(std::io::Error),
}

impl From<xi_jensen::Error> for Failure {
    fn from(e: xi_jensen::Error) -> Self {
        match e {
            xi_jensen::Error::Domain(m) | xi_jensen::Error::InvalidContext(m) => Failure::Usage(m),
            // an unreadable or malformed cache file is a configuration problem
            e @ (xi_jensen::Error::Cache(_) | xi_jensen::Error::Io(_) | xi_jensen::Error::Csv(_)) => {
                Failure::Usage(e.to_string())
            }
            e => Failure::Compute(e),
        }
    }
}

fn emit<T: Serialize>(rep: &Report<T>, cfg: &RunConfig) -> Result<bool, Failure> {
    rep.write(cfg.format, cfg.out.as_deref()).map_err(Failure::Io)?;
    if let Some(first) = rep.failures.first() {
        eprintln!("verification failed: {first}");
    }
    Ok(rep.passed())
}

fn run(cli: Cli) -> Result<bool, Failure> {
    let file = match &cli.common.config {
        Some(p) => FileConfig::load(p).map_err(Failure::Usage)?,
        None => FileConfig::default(),
    };
    let cfg = RunConfig::resolve(&cli.common, &file).map_err(Failure::Usage)?;
    if let Some(w) = cfg.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    let ctx = PrecCtx::new(cfg.bits, cfg.max_bits)?;
    let list = |flag: &Option<String>, from_file: &Option<String>, default: &str| -> Result<Vec<u64>, Failure> {
        parse_list(flag.as_deref().or(from_file.as_deref()).unwrap_or(default)).map_err(Failure::Usage)
    };
    match &cli.cmd {
        Command::GammaTable { m_max } => {
            let m_max = m_max.or(file.m_max).unwrap_or(50);
            let rep = suites::gamma_table(&cfg.cache, m_max, &ctx)?;
            eprintln!("{}", audit_line(&rep));
            emit(&rep, &cfg)
        }
        Command::Verify {
            suite,
            d_range,
            n_range,
            m_values,
            fit_order,
        } => {
            let (d_def, n_def) = match suite {
                Suite::Lemma23 => ("1:10", "0:20"),
                Suite::Thm22 => ("3:4", "100,400"),
                Suite::Turan => ("3:10", "0:100"),
                _ => ("1:12", "0:50"),
            };
            let params = VerifyParams {
                d: list(d_range, &file.d_range, d_def)?,
                n: list(n_range, &file.n_range, n_def)?,
                m_values: list(m_values, &file.m_values, "500,1000,2000")?,
                fit_order: fit_order.or(file.fit_order).unwrap_or(8),
            };
            match suites::verify(*suite, &params, &cfg.cache, &ctx)? {
                SuiteReport::Lemma23(r) => emit(&r, &cfg),
                SuiteReport::Exact(r) => emit(&r, &cfg),
                SuiteReport::Asym(r) => emit(&r, &cfg),
                SuiteReport::Cells(r) => emit(&r, &cfg),
            }
        }
        Command::ThresholdScan { d_range, n_max } => {
            let d = list(d_range, &file.d_range, "3:10")?;
            let n_max = n_max.or(file.n_max).unwrap_or(200);
            let rep = suites::threshold_scan(&d, n_max, &cfg.cache, &ctx)?;
            emit(&rep, &cfg)
        }
    }
}

fn audit_line(rep: &Report<suites::AuditRow>) -> String {
    let a = &rep.records[0];
    format!(
        "{} entries; positivity {}; log-concavity {}",
        a.entries,
        if a.not_positive.is_empty() { "ok" } else { "FAILED" },
        if a.not_log_concave.is_empty() { "ok" } else { "FAILED" }
    )
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Compute(e)) => {
            eprintln!("error: {e}");
            if e.is_precision_limited() {
                ExitCode::from(3)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
