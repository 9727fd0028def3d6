use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bellforge_cli::commands;

/// Local filtering, LOCC protocols, and local-polytope certificates for
/// bipartite Bell scenarios.
#[derive(Parser)]
#[command(name = "bellforge", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Apply local filters to a state and report the success probability.
    Filter {
        #[arg(long)]
        state: PathBuf,
        /// A-side filter file.
        #[arg(long)]
        ma: PathBuf,
        /// B-side filter file.
        #[arg(long)]
        nb: PathBuf,
        /// Emit machine-readable JSON.
        #[arg(long)]
        json: bool,
        /// Write the filtered state to a file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the deterministic reveal protocol (two one-bit rounds, or one with
    /// --one-bit) and report the output state and bit counts.
    Reveal {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        ma: PathBuf,
        /// B-side filter file (unused with --one-bit).
        #[arg(long)]
        nb: Option<PathBuf>,
        /// Send a single A→B bit using only the A-side filter.
        #[arg(long = "one-bit")]
        one_bit: bool,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decide local-polytope membership of a behavior; print weights or a
    /// separating Bell inequality.
    Membership {
        #[arg(long)]
        behavior: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Evaluate ⟨A₁(B₁+B₂) + A₂(B₁−B₂)⟩ on a state.
    Chsh {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        settings: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Reproduce the worked two-qutrit example end to end at one mixing
    /// parameter (or on a grid).
    Paper {
        #[arg(long)]
        p: f64,
        /// Evaluate on an n-point grid over (0, 1/18] instead.
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        json: bool,
    },
    /// Check that tracing the records off the composed one-way realization of
    /// a protocol reproduces its direct action.
    DecomposeCheck {
        #[arg(long)]
        protocol: PathBuf,
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Filter {
            state,
            ma,
            nb,
            json,
            out,
        } => commands::cmd_filter(state, ma, nb, *json, out.as_ref()),
        Command::Reveal {
            state,
            ma,
            nb,
            one_bit,
            json,
            out,
        } => commands::cmd_reveal(state, ma, nb.as_ref(), *one_bit, *json, out.as_ref()),
        Command::Membership { behavior, json } => commands::cmd_membership(behavior, *json),
        Command::Chsh {
            state,
            settings,
            json,
        } => commands::cmd_chsh(state, settings, *json),
        Command::Paper { p, grid, json } => commands::cmd_paper(*p, *grid, *json),
        Command::DecomposeCheck {
            protocol,
            state,
            json,
        } => commands::cmd_decompose_check(protocol, state, *json),
    };
    match outcome {
        Ok(text) => {
            println!("{text}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
