//! Experiment harness: JSON-configured runs, gamma and alpha sweeps, graph
//! inspection, and CSV output.

use std::path::{Path, PathBuf};

use coop_bandits::graph::{
    bfs_distances, greedy_clique_cover, greedy_mwis, power_graph_from_distances, Graph, GraphError,
};
use coop_bandits::rewards::RewardError;
use coop_bandits::simulator::SimError;
use thiserror::Error;

pub mod config;
pub mod experiment;
pub mod output;

pub use config::{ExperimentConfig, GammaRule, GammaSpec, GraphSpec, InstanceSpec};
pub use experiment::{alpha_plan, gamma_plan, run_plan, run_points, Point, PointResult};

/// Overrides the config's output directory when set.
pub const OUTPUT_DIR_ENV: &str = "BANDIT_LAB_OUTPUT_DIR";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Reward(#[from] RewardError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Run,
    SweepGamma,
    SweepAlpha,
}

impl Mode {
    fn summary_name(self) -> &'static str {
        match self {
            Mode::Run => "summary.csv",
            Mode::SweepGamma => "summary_gamma.csv",
            Mode::SweepAlpha => "summary_alpha.csv",
        }
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    ExperimentConfig::from_json(&text)
}

/// Runs an experiment and writes its CSVs into `out_dir`. Relative paths in
/// the config resolve against `config_dir`.
pub fn execute(
    cfg: &ExperimentConfig,
    mode: Mode,
    config_dir: Option<&Path>,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    let points = match mode {
        Mode::Run => run_plan(cfg),
        Mode::SweepGamma => gamma_plan(cfg, config_dir)?,
        Mode::SweepAlpha => alpha_plan(cfg)?,
    };
    let results = run_points(cfg, &points, config_dir)?;
    output::write_results(out_dir, &results, mode.summary_name())
}

/// Size, diameter and per-gamma cover/leader counts of a graph.
pub fn graph_info(g: &Graph) -> String {
    let dist = bfs_distances(g);
    let mut out = format!(
        "vertices {}\nedges {}\nconnected {}\nmax_degree {}\n",
        g.num_vertices(),
        g.num_edges(),
        g.is_connected(),
        g.max_degree()
    );
    let Some(diam) = dist.diameter() else {
        return out;
    };
    out.push_str(&format!("diameter {diam}\n"));
    out.push_str("gamma,power_graph_edges,clique_cover_number,independence_number\n");
    for gamma in 0..=diam {
        let gg = power_graph_from_distances(&dist, gamma);
        let w: Vec<f64> = (0..gg.num_vertices())
            .map(|v| gg.degree(v) as f64)
            .collect();
        out.push_str(&format!(
            "{gamma},{},{},{}\n",
            gg.num_edges(),
            greedy_clique_cover(&gg).num_blocks(),
            greedy_mwis(&gg, &w).len()
        ));
    }
    out
}
