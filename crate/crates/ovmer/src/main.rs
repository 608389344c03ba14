use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ovmer::commands;

#[derive(Parser)]
#[command(
    name = "ovmer",
    version,
    about = "Emotion-wheel rewards and GRPO training for a toy policy"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a policy from a TOML run config.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `train.seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score predictions against references.
    Eval {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        references: PathBuf,
        /// Wheel JSON; the bundled wheel when omitted.
        #[arg(long)]
        wheel: Option<PathBuf>,
        /// Where to write the JSON report.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Turn description rows into template-shaped cold-start targets.
    MakeColdstart {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        wheel: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a runnable example (config, wheel, data) into a directory.
    Demo {
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> ovmer::Result<()> {
    match cli.command {
        Command::Train { config, seed, out } => {
            let s = commands::run_train(&config, seed, out.as_deref())?;
            println!("RESULT: iterations {}", s.iterations);
            println!("RESULT: final_mean_reward {:.4}", s.final_mean_reward);
            println!("RESULT: final_format_rate {:.4}", s.final_format_rate);
            println!("RESULT: greedy_accuracy {:.4}", s.greedy_accuracy);
            println!("RESULT: greedy_format_rate {:.4}", s.greedy_format_rate);
            for a in &s.answers {
                println!("RESULT: answer {} {}", a.id, a.labels.join(","));
            }
        }
        Command::Eval {
            predictions,
            references,
            wheel,
            out,
            workers,
        } => {
            let r = commands::run_eval(&predictions, &references, wheel.as_deref(), out.as_deref(), workers)?;
            println!("RESULT: samples {}", r.per_sample.len());
            println!("RESULT: aggregate_score {:.4}", r.aggregate.score);
            println!("RESULT: precision {:.4}", r.aggregate.precision);
            println!("RESULT: recall {:.4}", r.aggregate.recall);
        }
        Command::MakeColdstart { input, wheel, out } => {
            let c = commands::run_make_coldstart(&input, wheel.as_deref(), &out)?;
            println!("RESULT: rows {}", c.rows.len());
            if !c.uncovered_labels.is_empty() {
                eprintln!("warning: labels outside the wheel: {}", c.uncovered_labels.join(", "));
            }
        }
        Command::Demo { out } => {
            let f = commands::run_demo(&out)?;
            println!("RESULT: config {}", f.config.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let message = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {}", e.category(), message);
            ExitCode::FAILURE
        }
    }
}
