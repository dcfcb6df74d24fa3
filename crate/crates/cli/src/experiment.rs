use std::path::Path;

use coop_bandits::graph::{
    bfs_distances, greedy_clique_cover, greedy_mwis, power_graph_from_distances, Graph,
};
use coop_bandits::rewards::lower_bound_reference;
use coop_bandits::{run, PolicyKind, SimConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{ExperimentConfig, GammaSpec, InstanceSpec};
use crate::CliError;

/// One (policy, gamma, instance) combination, run for every repetition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub policy: PolicyKind,
    pub gamma: GammaSpec,
    pub instance: InstanceSpec,
}

/// Outcome of one repetition of one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Repetition {
    pub seed: u64,
    pub gamma: usize,
    pub cumulative: Vec<f64>,
    /// Greedy clique-cover size of the power graph.
    pub cover_blocks: usize,
    /// Size of the greedy leader set of the power graph.
    pub leaders: usize,
    pub lower_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub point: Point,
    pub reps: Vec<Repetition>,
}

impl PointResult {
    pub fn final_regrets(&self) -> Vec<f64> {
        self.reps
            .iter()
            .map(|r| r.cumulative.last().copied().unwrap_or(0.0))
            .collect()
    }

    pub fn mean_final(&self) -> f64 {
        mean(&self.final_regrets())
    }

    /// Per-round mean and sample standard deviation across repetitions.
    pub fn curve(&self) -> Vec<(f64, f64)> {
        let horizon = self.reps.first().map_or(0, |r| r.cumulative.len());
        (0..horizon)
            .map(|t| {
                let xs: Vec<f64> = self.reps.iter().map(|r| r.cumulative[t]).collect();
                (mean(&xs), sample_std(&xs))
            })
            .collect()
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Bessel-corrected; zero for fewer than two values.
pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

/// Runs every point for every repetition. Repetition `r` uses seed
/// `base_seed + r` for the graph, the instance and the rewards, so points
/// are compared on paired draws.
pub fn run_points(
    cfg: &ExperimentConfig,
    points: &[Point],
    config_dir: Option<&Path>,
) -> Result<Vec<PointResult>, CliError> {
    cfg.validate()?;
    let loaded = cfg.graph.load(config_dir)?;
    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..cfg.repetitions).map(move |r| (p, r)))
        .collect();
    let outcomes: Vec<Result<Repetition, CliError>> = jobs
        .par_iter()
        .map(|&(p, r)| run_one(cfg, &points[p], cfg.seed(r), loaded.as_ref()))
        .collect();
    let mut results: Vec<PointResult> = points
        .iter()
        .map(|&point| PointResult {
            point,
            reps: Vec::with_capacity(cfg.repetitions),
        })
        .collect();
    for (&(p, _), outcome) in jobs.iter().zip(outcomes) {
        results[p].reps.push(outcome?);
    }
    Ok(results)
}

/// The graph and instance drawn for a seed.
pub fn draw_world(
    cfg: &ExperimentConfig,
    instance: &InstanceSpec,
    seed: u64,
    loaded: Option<&Graph>,
) -> Result<(Graph, coop_bandits::BanditInstance), CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let graph = cfg.graph.build(loaded, &mut rng)?;
    let inst = instance.build(&mut rng)?;
    Ok((graph, inst))
}

fn run_one(
    cfg: &ExperimentConfig,
    point: &Point,
    seed: u64,
    loaded: Option<&Graph>,
) -> Result<Repetition, CliError> {
    let (graph, instance) = draw_world(cfg, &point.instance, seed, loaded)?;
    let dist = bfs_distances(&graph);
    let gamma = point.gamma.resolve(dist.diameter().unwrap_or(0));
    let g_gamma = power_graph_from_distances(&dist, gamma);
    let degrees: Vec<f64> = (0..graph.num_vertices())
        .map(|v| g_gamma.degree(v) as f64)
        .collect();
    let sim = SimConfig {
        horizon: cfg.horizon,
        gamma,
        seed,
        policy: point.policy,
        estimator: cfg.estimator,
        kappa: cfg.kappa,
        c: cfg.c,
        instrument: false,
    };
    let trace = run(&instance, &graph, &sim)?;
    Ok(Repetition {
        seed,
        gamma,
        cumulative: trace.cumulative,
        cover_blocks: greedy_clique_cover(&g_gamma).num_blocks(),
        leaders: greedy_mwis(&g_gamma, &degrees).len(),
        lower_bound: lower_bound_reference(&instance, instance.eps, cfg.horizon as f64),
    })
}

/// Points of `run`: every policy at the configured gamma and instance.
pub fn run_plan(cfg: &ExperimentConfig) -> Vec<Point> {
    cfg.policies
        .iter()
        .map(|&policy| Point {
            policy,
            gamma: cfg.gamma,
            instance: cfg.instance,
        })
        .collect()
}

/// Points of `sweep-gamma`. Without an explicit list the sweep covers
/// `0..=D`, with `D` the largest diameter among the repetitions' graphs.
pub fn gamma_plan(
    cfg: &ExperimentConfig,
    config_dir: Option<&Path>,
) -> Result<Vec<Point>, CliError> {
    let gammas = match &cfg.gamma_sweep {
        Some(list) => list.clone(),
        None => {
            let loaded = cfg.graph.load(config_dir)?;
            let mut max_diam = 0;
            for r in 0..cfg.repetitions {
                let (g, _) = draw_world(cfg, &cfg.instance, cfg.seed(r), loaded.as_ref())?;
                max_diam = max_diam.max(bfs_distances(&g).diameter().unwrap_or(0));
            }
            (0..=max_diam).map(GammaSpec::Hops).collect()
        }
    };
    Ok(cfg
        .policies
        .iter()
        .flat_map(|&policy| {
            gammas.iter().map(move |&gamma| Point {
                policy,
                gamma,
                instance: cfg.instance,
            })
        })
        .collect())
}

/// Points of `sweep-alpha`: every policy at each tail index.
pub fn alpha_plan(cfg: &ExperimentConfig) -> Result<Vec<Point>, CliError> {
    let mut points = Vec::new();
    for &policy in &cfg.policies {
        for &alpha in &cfg.alpha_sweep {
            points.push(Point {
                policy,
                gamma: cfg.gamma,
                instance: cfg.instance.with_alpha(alpha)?,
            });
        }
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::GraphSpec;

    fn tiny() -> ExperimentConfig {
        ExperimentConfig {
            graph: GraphSpec::ErdosRenyi { agents: 8, p: 0.5 },
            horizon: 60,
            repetitions: 3,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn stats_helpers() {
        assert_eq!(mean(&[1.0, 2.0, 3.0]), 2.0);
        assert_eq!(sample_std(&[1.0, 2.0, 3.0]), 1.0);
        assert_eq!(sample_std(&[4.0]), 0.0);
    }

    #[test]
    fn paired_draws_share_graph_and_instance() {
        let cfg = tiny();
        let res = run_points(&cfg, &run_plan(&cfg), None).unwrap();
        assert_eq!(res.len(), 5);
        for r in 0..3 {
            let seeds: Vec<u64> = res.iter().map(|p| p.reps[r].seed).collect();
            assert!(seeds.iter().all(|&s| s == r as u64));
            let lbs: Vec<f64> = res.iter().map(|p| p.reps[r].lower_bound).collect();
            assert!(lbs.windows(2).all(|w| w[0] == w[1]));
        }
    }

    #[test]
    fn gamma_plan_covers_zero_to_diameter() {
        let mut cfg = tiny();
        cfg.graph = GraphSpec::Path { agents: 5 };
        cfg.policies = vec![PolicyKind::DecentralizedMpUcb];
        let plan = gamma_plan(&cfg, None).unwrap();
        let gammas: Vec<GammaSpec> = plan.iter().map(|p| p.gamma).collect();
        assert_eq!(gammas, (0..=4).map(GammaSpec::Hops).collect::<Vec<_>>());
    }

    #[test]
    fn alpha_plan_needs_stable_arms() {
        let mut cfg = tiny();
        assert_eq!(alpha_plan(&cfg).unwrap().len(), 25);
        cfg.instance = InstanceSpec::Hard {
            arms: 2,
            gap: 0.1,
            eps: 1.0,
        };
        assert!(alpha_plan(&cfg).is_err());
    }
}
