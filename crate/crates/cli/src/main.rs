//! `subbasis`: command-line front end for the subbasis toolkit.

mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};
use subbasis_core::{Budget, Error};

use commands::{
    CountArgs, DiagnoseArgs, ExpsumArgs, Outcome, SampleArgs, SieveArgs, SingularArgs, VerifyCmd,
};

#[derive(Debug, Parser)]
#[command(name = "subbasis", version, about = "Waring and Waring–Goldbach subbases: computation and verification")]
pub struct Cli {
    /// Worker threads; 0 uses one per core. Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// key=value config file with [section] headers, or a report JSON; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the resolved parameters, defaults included, to this file.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Memory cap in bytes for any single table or transform.
    #[arg(long, global = true, default_value_t = Budget::default().memory_bytes)]
    memory_cap: u64,
    /// Largest number of base-set elements a sieve may hold.
    #[arg(long, global = true, default_value_t = Budget::default().element_cap)]
    element_cap: u64,
    /// Cap on inner-loop iterations of direct summations.
    #[arg(long, global = true, default_value_t = Budget::default().work_cap)]
    work_cap: u64,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Sieve a base set (k-th powers of naturals or primes).
    Sieve(SieveArgs),
    /// Truncated singular series as CSV.
    Singular(SingularArgs),
    /// Exponential sums g, T, u as CSV.
    Expsum(ExpsumArgs),
    /// Sample a random subbasis with prescribed density.
    Sample(SampleArgs),
    /// Representation tables, counting functions and decompositions.
    Count(CountArgs),
    /// Verification experiments producing JSON reports.
    #[command(subcommand)]
    Verify(VerifyCmd),
    /// Regular variation, additive energy and weighted-count diagnostics.
    Diagnose(DiagnoseArgs),
}

pub struct Context {
    pub budget: Budget,
    pub section: String,
    pub embedded: Vec<(String, String)>,
}

fn exit_code_for(err: &anyhow::Error) -> (u8, &'static str) {
    match err.downcast_ref::<Error>() {
        Some(Error::Resource { .. }) | Some(Error::Size(_)) => (3, "resource"),
        Some(Error::Precondition(_)) => (2, "precondition"),
        Some(Error::Config(_)) => (2, "config"),
        Some(Error::Format(_)) => (2, "format"),
        Some(Error::Io(_)) => (2, "io"),
        None => (2, "usage"),
    }
}

fn run(argv: Vec<OsString>) -> Result<Outcome> {
    let root = Cli::command();
    // Required flags may come from the config file, so the first pass only
    // locates the subcommand and the config path.
    let first = root.clone().ignore_errors(true).try_get_matches_from(&argv)?;
    let mut argv = argv;
    let leaf = config::leaf_path(&first).join(".");
    if let Some(path) = first.get_one::<PathBuf>("config") {
        let sections = config::load(path)?;
        argv.extend(config::file_args(&root, &first, &sections)?);
    }
    let matches = root.clone().try_get_matches_from(&argv)?;
    let cli = Cli::from_arg_matches(&matches)?;
    let resolved = config::resolved(&root, &matches);
    if let Some(path) = &cli.manifest {
        std::fs::write(path, config::manifest_text(&resolved))?;
    }
    if cli.threads > 0 {
        // Fails only if a pool already exists, which never happens here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global();
    }
    let ctx = Context {
        budget: Budget { memory_bytes: cli.memory_cap, element_cap: cli.element_cap, work_cap: cli.work_cap },
        embedded: config::embedded(&resolved, &leaf),
        section: leaf,
    };
    match cli.command {
        Cmd::Sieve(a) => commands::sieve(&ctx, a),
        Cmd::Singular(a) => commands::singular(&ctx, a),
        Cmd::Expsum(a) => commands::expsum(&ctx, a),
        Cmd::Sample(a) => commands::sample(&ctx, a),
        Cmd::Count(a) => commands::count(&ctx, a),
        Cmd::Verify(v) => commands::verify(&ctx, v),
        Cmd::Diagnose(a) => commands::diagnose(&ctx, a),
    }
}

fn main() -> ExitCode {
    match run(std::env::args_os().collect()) {
        Ok(outcome) => {
            eprintln!("{}", outcome.summary);
            ExitCode::from(if outcome.pass { 0 } else { 1 })
        }
        Err(err) => {
            if let Some(clap_err) = err.downcast_ref::<clap::Error>() {
                use clap::error::ErrorKind;
                let _ = clap_err.print();
                return match clap_err.kind() {
                    ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                    _ => ExitCode::from(2),
                };
            }
            let (code, kind) = exit_code_for(&err);
            let reason = format!("{err:#}").replace('\n', " ");
            eprintln!("error[{kind}]: {reason}");
            ExitCode::from(code)
        }
    }
}
