use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bandit_lab::{execute, graph_info, load_config, CliError, Mode, OUTPUT_DIR_ENV};
use clap::{Parser, Subcommand};
use coop_bandits::graph::{load_edge_list, sample_connected_subgraph};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Cooperative heavy-tailed bandit experiments.
#[derive(Parser)]
#[command(name = "bandit-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Regret curves for every configured policy.
    Run { config: PathBuf },
    /// Final regret across communication radii.
    SweepGamma { config: PathBuf },
    /// Final regret across stable tail indices.
    SweepAlpha { config: PathBuf },
    /// Structure of an edge-list graph.
    GraphInfo {
        edgelist: PathBuf,
        /// Keep only a BFS-sampled connected subgraph of this many vertices.
        #[arg(long)]
        subgraph: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn output_dir(cfg_output: &Path, config_dir: Option<&Path>, env: Option<OsString>) -> PathBuf {
    match env {
        Some(dir) => PathBuf::from(dir),
        None => match config_dir {
            Some(dir) if cfg_output.is_relative() => dir.join(cfg_output),
            _ => cfg_output.to_path_buf(),
        },
    }
}

fn experiment(path: &Path, mode: Mode) -> Result<Vec<PathBuf>, CliError> {
    let cfg = load_config(path)?;
    let config_dir = path.parent();
    let out = output_dir(&cfg.output, config_dir, std::env::var_os(OUTPUT_DIR_ENV));
    execute(&cfg, mode, config_dir, &out)
}

fn inspect(path: &Path, subgraph: Option<usize>, seed: u64) -> Result<String, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut g = load_edge_list(&text)?;
    if let Some(n) = subgraph {
        g = sample_connected_subgraph(&g, n, &mut ChaCha8Rng::seed_from_u64(seed))?;
    }
    Ok(graph_info(&g))
}

fn dispatch(command: Command) -> Result<(), CliError> {
    let mode = match command {
        Command::Run { config } => Some((config, Mode::Run)),
        Command::SweepGamma { config } => Some((config, Mode::SweepGamma)),
        Command::SweepAlpha { config } => Some((config, Mode::SweepAlpha)),
        Command::GraphInfo {
            edgelist,
            subgraph,
            seed,
        } => {
            print!("{}", inspect(&edgelist, subgraph, seed)?);
            None
        }
    };
    if let Some((config, mode)) = mode {
        for file in experiment(&config, mode)? {
            println!("{}", file.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
