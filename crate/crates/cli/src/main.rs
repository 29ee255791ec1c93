use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod error;
mod output;
mod scenario;

use scenario::{CriterionChoice, OutputFormat, Recursion};

/// Outer ellipsoids of Firey p-sums and reach tubes of linear systems.
#[derive(Debug, Parser)]
#[command(name = "ellipsum", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    options: Options,
}

/// Flags shared by all subcommands. Values given here override the scenario
/// file, which overrides the built-in defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct Options {
    /// Scenario file, or a bundled name (table1, table2).
    #[arg(long, global = true, value_name = "PATH")]
    pub scenario: Option<String>,

    /// Which outer bounds to report [default: both].
    #[arg(long, global = true, value_enum)]
    pub criterion: Option<CriterionChoice>,

    /// Fixed-point stopping tolerance on |Δβ| [default: 1e-5].
    #[arg(long, global = true)]
    pub tol: Option<f64>,

    /// Fixed-point iteration cap [default: 200].
    #[arg(long, global = true)]
    pub max_iter: Option<usize>,

    /// Fixed-point map exponent [default: p-plus-one].
    #[arg(long, global = true, value_enum)]
    pub recursion: Option<Recursion>,

    /// Sampled directions for containment and Hausdorff estimates
    /// [default: 3600 in the plane, 10000 otherwise].
    #[arg(long, global = true)]
    pub samples: Option<usize>,

    /// Sampler seed [default: 0].
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Directory for output files. Created if missing.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Output files to write [default: both].
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,

    /// Vertices per polyline [default: 720].
    #[arg(long, global = true)]
    pub boundary_points: Option<usize>,

    /// Overrides the scenario horizon.
    #[arg(long, global = true)]
    pub horizon: Option<usize>,

    /// Boundary directions for the minimum-volume reference in `verify`;
    /// 0 skips it [default: 90].
    #[arg(long, global = true)]
    pub reference_dirs: Option<usize>,

    /// Scales every outer shape before `verify` checks it.
    #[arg(long, global = true, hide = true)]
    pub scale_outer: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Table {
    Table1,
    Table2,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Outer ellipsoid of a single p-sum, from flags or the scenario's initial set.
    PsumOuter {
        /// Exponent, a number ≥ 1 or "inf".
        #[arg(long)]
        p: Option<String>,
        /// Shape matrix, rows separated by ';' and entries by ','. Repeatable.
        #[arg(long = "shape", value_name = "ROWS")]
        shapes: Vec<String>,
        /// Comma-separated translation.
        #[arg(long)]
        center: Option<String>,
    },
    /// Reach tube with per-step records and polylines.
    Reach,
    /// Compares a bundled benchmark against its published volumes.
    Repro {
        #[arg(value_enum)]
        name: Table,
    },
    /// Containment and reference checks for every step of a tube.
    Verify,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::PsumOuter { p, shapes, center } => {
            commands::psum_outer(&cli.options, p.as_deref(), &shapes, center.as_deref())
        }
        Command::Reach => commands::reach(&cli.options),
        Command::Repro { name } => commands::repro(&cli.options, name),
        Command::Verify => commands::verify(&cli.options),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ellipsum: {e}");
            e.exit_code()
        }
    }
}
