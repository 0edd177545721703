//! Batch front-end for claims problems and the coalition formation games
//! they induce. Subcommands read a JSON problem file (claims or ideal
//! points), run exact-arithmetic algorithms, and emit machine-readable
//! reports: JSON on stdout, CSV for sweeps.

mod actions;
mod problem;
mod report;
mod sweep;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use claimstable::SearchLimits;

#[derive(Parser)]
#[command(name = "claimstable", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a partition algorithm and report the result.
    Solve {
        /// Problem file path, or "-" for stdin.
        #[arg(long)]
        input: String,
        #[arg(long, value_enum)]
        algorithm: actions::Algorithm,
        /// Scan for a blocking coalition against the constructed partition.
        #[arg(long)]
        verify: bool,
        /// Also enumerate every stable partition exhaustively.
        #[arg(long)]
        exhaustive: bool,
    },
    /// Check a given partition for blocking coalitions.
    Verify {
        /// Problem file path, or "-" for stdin.
        #[arg(long)]
        input: String,
        /// Inline JSON like [[1,3],[2]], or a path to a file holding it.
        #[arg(long)]
        partition: String,
    },
    /// List every stable partition of the problem.
    Enumerate {
        /// Problem file path, or "-" for stdin.
        #[arg(long)]
        input: String,
        /// Lift the size guard for this run.
        #[arg(long)]
        force: bool,
    },
    /// Sample resource monotonicity and consistency for a division rule.
    Axioms {
        /// Optional problem file; its claims vector is audited when given.
        #[arg(long)]
        input: Option<String>,
        #[arg(long, value_enum)]
        rule: actions::RuleArg,
        /// Number of random instances on top of the fixed probes.
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Tabulate pair-algorithm outcomes over a grid of endowment ratios.
    Sweep {
        /// Problem file path, or "-" for stdin; must have theta = 2.
        #[arg(long)]
        input: String,
        /// Grid start, exact rational.
        #[arg(long)]
        alpha_from: String,
        /// Grid end, exact rational.
        #[arg(long)]
        alpha_to: String,
        /// Number of grid intervals; the grid has steps + 1 points.
        #[arg(long)]
        steps: usize,
        /// CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<String>,
    },
}

/// Default scan guards, raised when CLAIMSTABLE_MAX_N asks for more.
fn effective_limits() -> Result<SearchLimits> {
    let mut limits = SearchLimits::new();
    if let Ok(text) = std::env::var("CLAIMSTABLE_MAX_N") {
        let n: usize = text
            .trim()
            .parse()
            .with_context(|| format!("CLAIMSTABLE_MAX_N must be an integer, got {text:?}"))?;
        limits = limits.raised_to(n);
    }
    Ok(limits)
}

fn run() -> Result<i32> {
    let cli = Cli::parse();
    let limits = effective_limits()?;
    match cli.command {
        Command::Solve {
            input,
            algorithm,
            verify,
            exhaustive,
        } => actions::solve(problem::load(&input)?, algorithm, verify, exhaustive, &limits),
        Command::Verify { input, partition } => {
            actions::verify(problem::load(&input)?, &partition, &limits)
        }
        Command::Enumerate { input, force } => {
            actions::enumerate(problem::load(&input)?, force, &limits)
        }
        Command::Axioms {
            input,
            rule,
            samples,
            seed,
        } => {
            let parsed = input.as_deref().map(problem::load).transpose()?;
            actions::axioms(parsed, rule, samples, seed)
        }
        Command::Sweep {
            input,
            alpha_from,
            alpha_to,
            steps,
            out,
        } => sweep::sweep(
            problem::load(&input)?,
            &alpha_from,
            &alpha_to,
            steps,
            out.as_deref(),
        ),
    }
}

fn main() {
    match run() {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(2);
        }
    }
}
