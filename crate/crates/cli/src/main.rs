mod commands;
mod fail;
mod fsutil;
mod manifest;

use clap::{Parser, Subcommand};

use commands::{AnalyzeArgs, CostArgs, GenerateArgs, OptimizeArgs, TruncateArgs, VerifyArgs};

/// Entanglement analysis and site-ordering optimization for 1D chains.
#[derive(Parser)]
#[command(name = "entorder", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a state file for one of the built-in families
    Generate(GenerateArgs),
    /// Entropies, mutual information and truncation profiles of a state
    Analyze(AnalyzeArgs),
    /// Evaluate ordering costs from mutual-information and entropy files
    Cost(CostArgs),
    /// Search site orderings minimizing a cost
    Optimize(OptimizeArgs),
    /// Run the inequality verification suites
    Verify(VerifyArgs),
    /// Truncate a state to a bond dimension and report the error budget
    Truncate(TruncateArgs),
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(args) => commands::generate(args),
        Command::Analyze(args) => commands::analyze(args),
        Command::Cost(args) => commands::cost(args),
        Command::Optimize(args) => commands::optimize(args),
        Command::Verify(args) => commands::verify(args),
        Command::Truncate(args) => commands::truncate(args),
    };
    if let Err(err) = result {
        eprintln!("entorder: {}", err.message());
        std::process::exit(err.exit_code());
    }
}
