//! Command-line driver for the fqdyn experiments.
//!
//! Every subcommand reads a flat `key = value` config (file, then `--set`
//! overrides, then explicit flags), runs on a pool of `--workers` threads and
//! writes `report.csv`, `summary.json` and `plots/*.dat` to `--out`. Exit
//! codes: 0 all checks pass, 1 a check failed, 2 cap or precision limits,
//! 64 usage errors.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;
pub mod sample;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::{parse_config_text, split_assignment, RunConfig};
use error::{CliError, EXIT_CHECK_FAILED, EXIT_OK, EXIT_USAGE};
use report::Report;

#[derive(Debug, Parser)]
#[command(name = "fqdyn", version, about = "Experiments on diagonal flows over F_q((1/T))")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact Haar measure identities and exponent bounds
    VerifyMeasure(RunArgs),
    /// Hodge dual, Jacobi identity and factorization checks
    VerifyHodge(RunArgs),
    /// Contraction integrals, weight fitting and restricted integrals
    Contraction(RunArgs),
    /// Heights along a single orbit g_{lt} u_s x
    Trajectory(RunArgs),
    /// Dirichlet-improvability scan of s
    DaniScan(RunArgs),
    /// Exact cylinder counts of the escaping set
    Covering(RunArgs),
    /// Box-counting slopes over several escape fractions
    DimEstimate(RunArgs),
}

impl Command {
    fn split(self) -> (&'static str, RunArgs) {
        match self {
            Command::VerifyMeasure(a) => ("verify-measure", a),
            Command::VerifyHodge(a) => ("verify-hodge", a),
            Command::Contraction(a) => ("contraction", a),
            Command::Trajectory(a) => ("trajectory", a),
            Command::DaniScan(a) => ("dani-scan", a),
            Command::Covering(a) => ("covering", a),
            Command::DimEstimate(a) => ("dim-estimate", a),
        }
    }
}

macro_rules! config_flags {
    ($($field:ident),* $(,)?) => {
        #[derive(Debug, Args)]
        struct RunArgs {
            /// Config file of `key = value` lines
            #[arg(long, short)]
            config: Option<PathBuf>,
            /// Override a config key (repeatable)
            #[arg(long = "set", value_name = "KEY=VALUE")]
            set: Vec<String>,
            /// Output directory
            #[arg(long, short, default_value = "fqdyn-out")]
            out: PathBuf,
            /// Worker threads (results do not depend on this)
            #[arg(long)]
            workers: Option<usize>,
            $(
                #[arg(long)]
                $field: Option<String>,
            )*
        }

        impl RunArgs {
            fn flag_values(&self) -> Vec<(&'static str, &Option<String>)> {
                vec![$((stringify!($field), &self.$field)),*]
            }
        }
    };
}

config_flags!(
    q, modulus, m, n, t, t_max, i, d_max, ell_max, steps, big_m, m_div, delta, deltas, eps_exp, precision, seed, trials,
    jacobi_trials, cap, s, lattice, target, profile_max, tail_depth, beta, kappa_max, expect, v, cusp, slack, max_k,
);

fn load_config(args: &RunArgs) -> Result<RunConfig, CliError> {
    let mut values = match &args.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", p.display())))?;
            parse_config_text(&text)?
        }
        None => BTreeMap::new(),
    };
    for s in &args.set {
        let (k, v) = split_assignment(s).ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got `{s}`")))?;
        values.insert(k, v);
    }
    for (k, v) in args.flag_values() {
        if let Some(v) = v {
            values.insert(k.to_string(), v.clone());
        }
    }
    RunConfig::from_map(values)
}

/// Outcome of one run, for callers that want the report in memory.
pub struct Outcome {
    pub code: i32,
    pub report: Report,
}

/// Runs `command` with an already parsed config and writes the report to
/// `out`. The report is written even when the run stops early.
pub fn execute(command: &str, cfg: &RunConfig, out: &std::path::Path, workers: Option<usize>) -> Outcome {
    let mut report = Report::new(command);
    let result = match workers {
        Some(0) => Err(CliError::Usage("workers must be positive".into())),
        Some(w) => match rayon::ThreadPoolBuilder::new().num_threads(w).build() {
            Ok(pool) => pool.install(|| commands::dispatch(command, cfg, &mut report)),
            Err(e) => Err(CliError::Infeasible(e.to_string())),
        },
        None => commands::dispatch(command, cfg, &mut report),
    };
    report.config_echo = cfg.echo();
    let mut code = match &result {
        Ok(()) if report.all_pass() => EXIT_OK,
        Ok(()) => EXIT_CHECK_FAILED,
        Err(e) => e.exit_code(),
    };
    if let Err(e) = &result {
        report.error = Some(e.to_string());
    }
    if let Err(e) = report.write(out) {
        eprintln!("fqdyn: cannot write report: {e}");
        if code == EXIT_OK {
            code = e.exit_code();
        }
    }
    Outcome { code, report }
}

/// Entry point shared by the binary and the tests; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let (command, args) = cli.command.split();
    let cfg = match load_config(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("fqdyn: {e}");
            return e.exit_code();
        }
    };
    let outcome = execute(command, &cfg, &args.out, args.workers);
    for line in outcome.report.check_lines() {
        println!("{line}");
    }
    for note in &outcome.report.notes {
        println!("note: {note}");
    }
    if let Some(e) = &outcome.report.error {
        eprintln!("fqdyn: {e}");
    }
    outcome.code
}
