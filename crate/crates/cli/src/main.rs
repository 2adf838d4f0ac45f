use std::path::PathBuf;
use std::process::ExitCode;

use cartan_lab::registry::MODEL_NAMES;
use cartan_lab::{run, ExperimentConfig, Format, LabResult, EXPERIMENTS};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cartan-lab", version, about = "Run Cartan connection verification experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment described by a JSON config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for the report file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// List models and experiments.
    List,
}

fn execute(cli: Cli) -> LabResult<bool> {
    match cli.command {
        Command::List => {
            println!("models:");
            for name in MODEL_NAMES {
                println!("  {name}");
            }
            println!("experiments:");
            for e in EXPERIMENTS {
                println!("  {:<18} {}", e.name, e.summary);
            }
            Ok(true)
        }
        Command::Run { config, seed, out, format } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Some(format) = format {
                cfg.format = format;
            }
            if out.is_some() {
                cfg.output = out;
            }
            let report = run(&cfg)?;
            let text = report.render(cfg.format)?;
            match &cfg.output {
                Some(dir) => {
                    std::fs::create_dir_all(dir)?;
                    let path = dir.join(report.file_name(cfg.format));
                    std::fs::write(&path, text)?;
                    let verdict = if report.passed() { "pass" } else { "fail" };
                    eprintln!("{}: {verdict} -> {}", report.experiment, path.display());
                }
                None => print!("{text}"),
            }
            Ok(report.passed())
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
