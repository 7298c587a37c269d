//! `modekit`: coherent-mode reconstruction of thermal light and its
//! reference simulators, wired together as subcommands.
//!
//! All derived scalars go to stdout as JSON lines; diagnostics go to stderr.
//! Exit code 0 on success, 1 with a single-line diagnostic otherwise.

mod commands;
mod jsonlog;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "modekit", version, about = "2D coherent-mode reconstruction of thermal light")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reconstruct coherent modes from a frame-stack container.
    Reconstruct(commands::reconstruct::Args),
    /// Evaluate the down-conversion far-field correlation and its modes.
    SimulatePdc(commands::simulate_pdc::Args),
    /// Generate the LP mode set of a step-index fiber.
    SimulateFiber(commands::simulate_fiber::Args),
    /// Sample pseudo-thermal frames from a mode-set bundle.
    Synth(commands::synth::Args),
    /// Match two mode bundles and print the fidelity table.
    Fidelity(commands::fidelity::Args),
    /// Export heatmaps (PGM + text matrices) of modes, means, or G1 cuts.
    Render(commands::render::Args),
    /// Summarize a mode bundle: mode number, weight decay, residuals.
    Report(commands::report::Args),
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Reconstruct(args) => commands::reconstruct::run(args),
        Command::SimulatePdc(args) => commands::simulate_pdc::run(args),
        Command::SimulateFiber(args) => commands::simulate_fiber::run(args),
        Command::Synth(args) => commands::synth::run(args),
        Command::Fidelity(args) => commands::fidelity::run(args),
        Command::Render(args) => commands::render::run(args),
        Command::Report(args) => commands::report::run(args),
    };
    if let Err(err) = result {
        eprintln!("error: {err}");
        std::process::exit(1);
    }
}
