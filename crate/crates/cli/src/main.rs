use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mctsbn_cli::{
    cmd_gold, cmd_learn_base, cmd_mcts, cmd_sample, cmd_score, init_threads, GoldArgs,
    LearnBaseArgs, MctsArgs, SampleArgs, ScoreArgs,
};

#[derive(Parser)]
#[command(
    name = "mctsbn",
    version,
    about = "Bayesian network structure learning by MCTS over variable orders"
)]
struct Cli {
    /// Worker threads for dataset generation; 1 forces sequential execution,
    /// 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw datasets from a BIF network.
    Sample(SampleArgs),
    /// Learn a base network with unconstrained hill climbing.
    LearnBase(LearnBaseArgs),
    /// Search variable orders with MCTS.
    Mcts(MctsArgs),
    /// Score a DAG, or the constrained network learned from an order.
    Score(ScoreArgs),
    /// Export a reference network's structure and a topological order.
    Gold(GoldArgs),
}

fn run(cli: Cli) -> anyhow::Result<()> {
    init_threads(cli.threads)?;
    match cli.command {
        Command::Sample(args) => {
            for p in cmd_sample(&args)? {
                println!("{}", p.display());
            }
        }
        Command::LearnBase(args) => println!("{}", cmd_learn_base(&args)?),
        Command::Mcts(args) => println!("{}", cmd_mcts(&args)?),
        Command::Score(args) => println!("{}", cmd_score(&args)?),
        Command::Gold(args) => println!("{}", cmd_gold(&args)?.join(",")),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
