//! `nb`: exact newform coefficients and verified additive decompositions.

mod commands;
mod tables;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "nb", version, about = "Exact newform coefficients and additive decompositions")]
pub struct Cli {
    /// Directory for cached coefficient tables.
    #[arg(long, global = true, value_name = "DIR")]
    pub cache_dir: Option<PathBuf>,

    /// Worker threads for the parallel kernels.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,

    /// Machine-readable JSON output.
    #[arg(long, global = true)]
    pub json: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute or ingest a coefficient table.
    Coeffs(CoeffsArgs),
    /// First negative coefficient and large-coefficient density.
    Signs(SignsArgs),
    /// Admissible prime sets.
    Admissible(AdmissibleArgs),
    /// Waring-Goldbach counts, solutions and singular series.
    Wg {
        #[command(subcommand)]
        op: WgOp,
    },
    /// Write Z as a sum of coefficients and verify it.
    Decompose(DecomposeArgs),
}

#[derive(Debug, Args)]
pub struct CoeffsArgs {
    /// `delta`, `11a` or a newform descriptor file.
    #[arg(long)]
    pub form: String,
    #[arg(long)]
    pub nmax: u64,
    /// Write the table in the descriptor format instead of printing it.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Run the identity and bound checks.
    #[arg(long)]
    pub check: bool,
}

#[derive(Debug, Args)]
pub struct SignsArgs {
    #[arg(long)]
    pub form: String,
    #[arg(long, default_value_t = 10_000)]
    pub nmax: u64,
    /// Estimate the density of large coefficients among primes up to T.
    #[arg(long, value_name = "T")]
    pub density_at: Option<u64>,
}

#[derive(Debug, Args)]
pub struct AdmissibleArgs {
    #[arg(long)]
    pub form: String,
    /// Subset size; the form's `k` when omitted.
    #[arg(long)]
    pub k: Option<usize>,
    /// Upper end of the candidate primes.
    #[arg(long = "M", default_value_t = 1000)]
    pub m: u64,
    /// Table size; `M` when omitted.
    #[arg(long)]
    pub nmax: Option<u64>,
    /// Use the dyadic construction instead of the greedy one.
    #[arg(long, requires = "l0")]
    pub dyadic: bool,
    #[arg(long)]
    pub l0: Option<u32>,
    /// Produce the collision witness for a prime outside the set.
    #[arg(long, value_name = "P")]
    pub repair: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum WgOp {
    /// Number of ordered representations.
    Count(WgArgs),
    /// One representation, if the search finds it.
    Solve(WgArgs),
    /// Truncated singular series and the main term.
    Series(WgArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Predicate {
    All,
    P0,
    P0MinusPprime,
}

#[derive(Debug, Args)]
pub struct WgArgs {
    #[arg(long = "Z")]
    pub z: u128,
    #[arg(long)]
    pub s: u32,
    #[arg(long)]
    pub e: u32,
    #[arg(long, value_enum, default_value_t = Predicate::All)]
    pub predicate: Predicate,
    /// Form defining the restricted prime sets.
    #[arg(long)]
    pub form: Option<String>,
    /// Table size for the restricted prime sets; `max(1000, Z^(1/e))` when omitted.
    #[arg(long)]
    pub nmax: Option<u64>,
    #[arg(long, default_value_t = nb_core::waring::DEFAULT_Q_MAX)]
    pub qmax: u64,
    /// Node budget for `solve`.
    #[arg(long, default_value_t = nb_core::waring::DEFAULT_NODE_BUDGET)]
    pub budget: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum RouteArg {
    Constructive,
    Search,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    #[arg(long)]
    pub form: String,
    #[arg(long = "Z", allow_hyphen_values = true)]
    pub z: i128,
    #[arg(long, value_enum, default_value_t = RouteArg::Constructive)]
    pub route: RouteArg,
    /// Number of prime powers in the constructive route.
    #[arg(long)]
    pub s: Option<u32>,
    /// Table size. Defaults: 1000 for search, `max(2000, |Z|^(1/e)/2 + 100)`
    /// for the constructive route.
    #[arg(long)]
    pub nmax: Option<u64>,
    /// Largest accepted term count for search; `C(f)` when omitted.
    #[arg(long)]
    pub lmax: Option<u64>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let mut stdout = std::io::stdout().lock();
    match commands::run(&cli, &mut stdout) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let usage = err
                .downcast_ref::<nb_core::Error>()
                .is_some_and(nb_core::Error::is_usage);
            eprintln!("error: {err:#}");
            if usage {
                eprintln!("\n{}", Cli::command().render_usage());
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
