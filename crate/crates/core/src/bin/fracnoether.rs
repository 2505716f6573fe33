use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use fracnoether::cli::{self, examples, load_config, RunConfig, EXIT_CONFIG, EXIT_NUMERIC, EXIT_PASS};

#[derive(Parser)]
#[command(name = "fracnoether", version, about = "Fractional Pontryagin extremals and Noether conservation checks")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one configuration and write trajectory.csv, residuals.csv and report.txt.
    Run {
        /// Config file or built-in example name.
        config: String,
        #[arg(long = "grid-n")]
        grid_n: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Refinement study over several grid sizes; writes study.csv.
    Study {
        config: String,
        #[arg(long = "grid-n", value_delimiter = ',', required = true)]
        grid_n: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List or print the built-in example configurations.
    Examples {
        #[command(subcommand)]
        action: ExamplesAction,
    },
}

#[derive(Subcommand)]
enum ExamplesAction {
    List,
    Show { name: String },
}

fn out_dir(cfg: &RunConfig, flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(&cfg.name))
}

fn load(path: &str) -> Result<RunConfig, u8> {
    load_config(path).map_err(|e| {
        eprintln!("error: {e}");
        EXIT_CONFIG as u8
    })
}

fn run(config: &str, grid_n: Option<usize>, out: Option<PathBuf>) -> anyhow::Result<u8> {
    let mut cfg = match load(config) {
        Ok(c) => c,
        Err(code) => return Ok(code),
    };
    if let Some(n) = grid_n {
        if n < 2 {
            eprintln!("error: --grid-n must be at least 2");
            return Ok(EXIT_CONFIG as u8);
        }
        cfg.grid_n = n;
    }
    let dir = out_dir(&cfg, out);
    let artifacts = cli::execute(&cfg);
    artifacts
        .write_to(&dir)
        .with_context(|| format!("writing artifacts to {}", dir.display()))?;
    print!("{}", artifacts.report);
    Ok(artifacts.exit_code() as u8)
}

fn study(config: &str, grid_n: &[usize], out: Option<PathBuf>) -> anyhow::Result<u8> {
    let cfg = match load(config) {
        Ok(c) => c,
        Err(code) => return Ok(code),
    };
    let s = match cli::study(&cfg, grid_n) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(EXIT_CONFIG as u8);
        }
    };
    let dir = out_dir(&cfg, out);
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    std::fs::write(dir.join(cli::STUDY_FILE), &s.csv).context("writing study.csv")?;
    print!("{}", s.table);
    Ok(if s.all_rows_ok { EXIT_PASS } else { EXIT_NUMERIC } as u8)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = match args.command {
        Command::Run { config, grid_n, out } => run(&config, grid_n, out),
        Command::Study { config, grid_n, out } => study(&config, &grid_n, out),
        Command::Examples { action } => match action {
            ExamplesAction::List => {
                examples::names().for_each(|n| println!("{n}"));
                Ok(EXIT_PASS as u8)
            }
            ExamplesAction::Show { name } => match examples::source(&name) {
                Some(text) => {
                    print!("{text}");
                    Ok(EXIT_PASS as u8)
                }
                None => {
                    eprintln!("error: no built-in example `{name}`");
                    Ok(EXIT_CONFIG as u8)
                }
            },
        },
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_NUMERIC as u8)
        }
    }
}
