//! Command-line front end for the thermoto library: transition feasibility,
//! majorization curves, damping bounds, finite-bath simulation, the trace-product
//! oracle, the three-level cycle, and channel files.
//!
//! Conventions shared by every subcommand:
//! - numerical output goes to stdout, diagnostics and errors to stderr;
//! - the same invocation on the same inputs prints byte-identical output
//!   (fixed JSON key order, shortest round-trip float formatting);
//! - every JSON document written here parses back under this binary's readers.
//!
//! Exit codes: 0 success or feasible, 1 infeasible, 2 invalid input, 3 undecided.

mod cmd;
mod io;

use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Mode {
    /// Thermal operations.
    To,
    /// Enhanced thermal operations.
    Eto,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Parser)]
#[command(
    name = "thermoto",
    version,
    about = "Thermal channel feasibility, damping bounds, and finite-bath simulation",
    after_help = "Exit codes: 0 success or feasible, 1 infeasible, 2 invalid input, 3 undecided."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Decide whether a state can reach a target under thermal channels.
    ///
    /// Two-level systems get the exact verdict (diagonal classifier plus the
    /// optimal damping factor). Larger systems get necessary conditions only:
    /// a failed check exits 1, a clean pass exits 3 (undecided).
    CheckTransition {
        /// Source state file.
        #[arg(long)]
        state: PathBuf,
        /// Target state file over the same energies and temperature.
        #[arg(long)]
        target: PathBuf,
        /// Channel class the verdict refers to.
        #[arg(long, value_enum, default_value_t = Mode::Eto)]
        mode: Mode,
    },
    /// Print the thermal majorization curve of a state.
    Curve {
        /// State file.
        #[arg(long)]
        state: PathBuf,
        /// csv prints "x,y" breakpoints; json adds the partition sum.
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Optimal qubit damping factor for the diagonal transition p -> q.
    Kappa {
        /// Source ground population.
        #[arg(long)]
        p: f64,
        /// Target ground population.
        #[arg(long)]
        q: f64,
        /// Inverse temperature.
        #[arg(long)]
        beta: f64,
        /// Two comma-separated level energies, ascending.
        #[arg(long, value_delimiter = ',')]
        energies: Vec<f64>,
    },
    /// Run the finite-bath staircase for a diagonal qubit transition and report
    /// measured against analytic values.
    SimulateBath {
        /// Source ground population.
        #[arg(long)]
        p: f64,
        /// Target ground population.
        #[arg(long)]
        q: f64,
        /// Inverse temperature.
        #[arg(long)]
        beta: f64,
        /// Two comma-separated level energies, ascending.
        #[arg(long, value_delimiter = ',')]
        energies: Vec<f64>,
        /// Number of bath rungs.
        #[arg(long)]
        rungs: usize,
        /// Degeneracy of the lowest rung; e^(beta * spacing) must round to an
        /// integer ratio for the exact geometric ladder.
        #[arg(long, default_value_t = 1)]
        base: u64,
        /// json prints the summary report; csv prints per-rung convergence.
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Check the singular-value bound on |tr(W X V Y)| over unitary W, V against
    /// random sampling and the alternating polar ascent, on seeded Gaussian X, Y.
    SearchOracle {
        /// Matrix dimension.
        #[arg(long)]
        dim: usize,
        /// Polar ascent iterations.
        #[arg(long, default_value_t = 300)]
        iterations: usize,
        /// Random unitary pairs to sample below the bound.
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        /// Random seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Three-level cycle probabilities, the perturbed family, and optionally the
    /// damping saturation search on a finite bath.
    Quasicycle {
        /// Gap between the top two levels.
        #[arg(long)]
        e21: f64,
        /// Gap between the top and bottom levels.
        #[arg(long)]
        e20: f64,
        /// Inverse temperature.
        #[arg(long)]
        beta: f64,
        /// Perturbation away from the exact cycle, within [0, epsilon_max].
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
        /// Search evaluation budget; 0 skips the search.
        #[arg(long, default_value_t = 0)]
        budget: u64,
        /// Random seed for the search.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Bath rungs for the search; the smallest window covering every level
        /// pair of the cycle needs at least 7.
        #[arg(long, default_value_t = 8)]
        rungs: usize,
        /// json prints the report; csv prints the best-so-far search trace.
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Build, apply, or compose channel files.
    Channel {
        #[command(subcommand)]
        op: ChannelOp,
    },
}

#[derive(Subcommand)]
enum ChannelOp {
    /// Validate a channel file and reprint it in canonical form.
    Build {
        /// Channel file.
        #[arg(long)]
        channel: PathBuf,
    },
    /// Apply a channel to a state and print the resulting state file.
    Apply {
        /// Channel file.
        #[arg(long)]
        channel: PathBuf,
        /// State file over the same energies and temperature.
        #[arg(long)]
        state: PathBuf,
    },
    /// Compose two channels (first, then second) and print the channel file.
    Compose {
        /// Channel applied first.
        #[arg(long)]
        first: PathBuf,
        /// Channel applied second.
        #[arg(long)]
        second: PathBuf,
    },
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    match cli.cmd {
        Cmd::CheckTransition { state, target, mode } => cmd::check_transition(&state, &target, mode),
        Cmd::Curve { state, format } => cmd::curve(&state, format),
        Cmd::Kappa { p, q, beta, energies } => cmd::kappa(p, q, beta, &energies),
        Cmd::SimulateBath {
            p,
            q,
            beta,
            energies,
            rungs,
            base,
            format,
        } => cmd::simulate_bath(p, q, beta, &energies, rungs, base, format),
        Cmd::SearchOracle {
            dim,
            iterations,
            samples,
            seed,
        } => cmd::search_oracle(dim, iterations, samples, seed),
        Cmd::Quasicycle {
            e21,
            e20,
            beta,
            epsilon,
            budget,
            seed,
            rungs,
            format,
        } => cmd::quasicycle(e21, e20, beta, epsilon, budget, seed, rungs, format),
        Cmd::Channel { op } => match op {
            ChannelOp::Build { channel } => cmd::channel_build(&channel),
            ChannelOp::Apply { channel, state } => cmd::channel_apply(&channel, &state),
            ChannelOp::Compose { first, second } => cmd::channel_compose(&first, &second),
        },
    }
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            let pipe_closed = e.chain().any(|cause| {
                cause
                    .downcast_ref::<std::io::Error>()
                    .is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
            });
            if pipe_closed {
                std::process::exit(0);
            }
            eprintln!("error: {e:#}");
            std::process::exit(2);
        }
    }
}
