//! `sympb`: batch front end for the symplectic billiard toolkit. Builds
//! domains from JSON descriptions, solves orbits, tabulates the area
//! spectrum, evaluates chord-length transforms and the truncated operator,
//! drives deformation families, and runs the acceptance battery.
//!
//! Output is deterministic: the same invocation produces byte-identical
//! artifacts regardless of thread count (cap threads with SYMPB_THREADS).

use std::io::Write as _;
use std::path::PathBuf;
use std::process::exit;

use clap::{Parser, Subcommand};

mod commands;
mod export;

use commands::{Ctx, Failure, Format};

#[derive(Parser)]
#[command(name = "sympb", version, about = "symplectic billiard toolkit", max_term_width = 100)]
struct Cli {
    /// domain or family description (JSON file)
    #[arg(long, global = true)]
    spec: Option<PathBuf>,

    /// smallest period in the q range
    #[arg(long, global = true, default_value_t = 3)]
    q_min: usize,

    /// largest period in the q range (also the operator truncation)
    #[arg(long, global = true, default_value_t = 64)]
    q_max: usize,

    /// sequence-space weight exponent
    #[arg(long, global = true, default_value_t = 3.5)]
    gamma: f64,

    /// override the sampling grid of the spec
    #[arg(long, global = true)]
    grid: Option<usize>,

    /// write the artifact here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// artifact format
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// build the boundary curve and report its frame invariants
    Domain,
    /// solve maximal-area orbits over the q range
    Orbit,
    /// tabulate the area spectrum and fit its expansion
    Spectrum,
    /// chord-length transform profiles of cosine modes
    Xray {
        /// comma-separated mode indices
        #[arg(long, default_value = "0,1,2,3")]
        modes: String,
    },
    /// assemble the truncated operator and analyze its kernel
    Operator {
        /// also split off the finite-rank part at this index
        #[arg(long)]
        q0: Option<usize>,
    },
    /// evaluate a deformation family at one parameter value
    Deform {
        /// family parameter
        #[arg(long, default_value_t = 0.0)]
        tau: f64,
        /// finite-difference step
        #[arg(long, default_value_t = 1e-4)]
        h: f64,
    },
    /// run the acceptance battery
    Verify {
        /// comma-separated criterion ids or names (default: all)
        #[arg(long)]
        only: Option<String>,
    },
}

fn configure_threads() -> Result<(), Failure> {
    match std::env::var("SYMPB_THREADS") {
        Err(_) => Ok(()),
        Ok(v) => {
            let n: usize = v
                .parse()
                .ok()
                .filter(|&n| n >= 1)
                .ok_or_else(|| {
                    Failure::invalid(format!("SYMPB_THREADS = {v:?} is not a positive integer"))
                })?;
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| Failure::invalid(format!("thread pool: {e}")))
        }
    }
}

fn run(cli: Cli) -> Result<i32, Failure> {
    configure_threads()?;
    if cli.q_min < 2 || cli.q_max < cli.q_min {
        return Err(Failure::invalid(format!(
            "invalid q range [{}, {}]: need q_max >= q_min >= 2",
            cli.q_min, cli.q_max
        )));
    }
    if let Some(g) = cli.grid {
        if g < 16 {
            return Err(Failure::invalid(format!("grid of {g} points is too small")));
        }
    }
    let ctx = Ctx {
        spec: cli.spec,
        q_min: cli.q_min,
        q_max: cli.q_max,
        gamma: cli.gamma,
        grid: cli.grid,
        out: cli.out,
        format: cli.format,
    };
    match cli.command {
        Command::Domain => commands::domain(&ctx).map(|()| 0),
        Command::Orbit => commands::orbit(&ctx).map(|()| 0),
        Command::Spectrum => commands::spectrum(&ctx).map(|()| 0),
        Command::Xray { modes } => commands::xray(&ctx, &modes).map(|()| 0),
        Command::Operator { q0 } => commands::operator(&ctx, q0).map(|()| 0),
        Command::Deform { tau, h } => commands::deform(&ctx, tau, h).map(|()| 0),
        Command::Verify { only } => commands::run_verify(&ctx, only.as_deref()),
    }
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            f.code
        }
    };
    let _ = std::io::stdout().flush();
    let _ = std::io::stderr().flush();
    exit(code);
}
