//! `strc`: expansion coefficients, trace identities and iterated integral
//! simulation from the command line.
//!
//! Exit status is 0 when the experiment converged or passed, 2 when it ran
//! but did not converge, and 1 on any error.

mod config;
mod run;
mod weights;

use std::process::ExitCode;

use clap::{CommandFactory, Parser};

use config::{Experiment, ExperimentConfig};

#[derive(Debug, Parser)]
#[command(name = "strc", version, about = "Orthogonal expansions of Volterra kernels and iterated Stratonovich integrals")]
struct Cli {
    /// Experiment to run; may instead be set in the config file.
    #[arg(value_enum)]
    experiment: Option<Experiment>,

    #[command(flatten)]
    config: ExperimentConfig,

    /// Print the JSON report to stdout instead of the CSV.
    #[arg(long)]
    json: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let mut flags = cli.config;
    flags.experiment = cli.experiment;
    let outcome = ExperimentConfig::resolve(flags).and_then(|cfg| run::run(&cfg));
    match outcome {
        Ok(done) => {
            if cli.json {
                print!("{}", strc_core::report::to_json_text(&done.json));
            } else {
                print!("{}", done.csv);
            }
            eprintln!("{}", done.summary);
            ExitCode::from(if done.converged { 0 } else { 2 })
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            eprintln!("\n{}", Cli::command().render_usage());
            eprintln!("For more information, try '--help'.");
            ExitCode::from(1)
        }
    }
}
