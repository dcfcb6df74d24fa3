//! Browser bindings: regret curves on a small network, stable-law sample
//! histograms, and power-graph structure. Each export returns a JSON string;
//! the plain-Rust versions underneath are what the tests exercise.

use coop_bandits::graph::{
    assign_leaders, bfs_distances, generate_ba, generate_er, greedy_clique_cover,
    power_graph_from_distances, Graph,
};
use coop_bandits::rewards::{make_stable_instance, standard_symmetric_stable};
use coop_bandits::{run, PolicyKind, SimConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

const MAX_AGENTS: usize = 200;
const MAX_HORIZON: usize = 20_000;
const MAX_SAMPLES: usize = 1_000_000;

/// `param` is the edge probability for `er` and the attachment count for `ba`;
/// the fixed shapes ignore it.
pub fn build_graph(
    kind: &str,
    agents: usize,
    param: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Graph, String> {
    if agents == 0 || agents > MAX_AGENTS {
        return Err(format!("agents must be between 1 and {MAX_AGENTS}"));
    }
    let g = match kind {
        "er" => generate_er(agents, param, rng).map_err(|e| e.to_string())?,
        "ba" => generate_ba(agents, param as usize, rng).map_err(|e| e.to_string())?,
        "complete" => Graph::complete(agents),
        "path" => Graph::path(agents),
        "cycle" => Graph::cycle(agents),
        "star" => Graph::star(agents.saturating_sub(1)),
        other => return Err(format!("unknown graph kind {other:?}")),
    };
    if !g.is_connected() {
        return Err("graph is disconnected; try a denser graph or another seed".into());
    }
    Ok(g)
}

#[derive(Debug, Serialize)]
pub struct Curve {
    pub policy: &'static str,
    pub cumulative: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct Curves {
    pub diameter: usize,
    pub gamma: usize,
    pub curves: Vec<Curve>,
}

/// Group regret of every policy on one graph and one stable instance, both
/// drawn from `seed`. `gamma` is clamped to the diameter.
#[allow(clippy::too_many_arguments)]
pub fn regret_curves(
    kind: &str,
    agents: usize,
    param: f64,
    arms: usize,
    alpha: f64,
    horizon: usize,
    gamma: usize,
    seed: u32,
) -> Result<Curves, String> {
    if horizon == 0 || horizon > MAX_HORIZON {
        return Err(format!("horizon must be between 1 and {MAX_HORIZON}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed.into());
    let g = build_graph(kind, agents, param, &mut rng)?;
    let inst = make_stable_instance(arms, alpha, &mut rng).map_err(|e| e.to_string())?;
    let diameter = bfs_distances(&g).diameter().unwrap_or(0);
    let gamma = gamma.min(diameter);
    let curves = PolicyKind::ALL
        .iter()
        .map(|&policy| {
            let cfg = SimConfig::new(policy, horizon, gamma, seed.into());
            run(&inst, &g, &cfg)
                .map(|trace| Curve {
                    policy: policy.name(),
                    cumulative: trace.cumulative,
                })
                .map_err(|e| e.to_string())
        })
        .collect::<Result<_, _>>()?;
    Ok(Curves {
        diameter,
        gamma,
        curves,
    })
}

#[derive(Debug, Serialize)]
pub struct Histogram {
    /// Bin boundaries, one more than `counts`.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub below: usize,
    pub above: usize,
    pub largest_magnitude: f64,
}

/// Histogram over `[-half_width, half_width]` of standard symmetric stable
/// draws; draws outside the window are tallied separately.
pub fn stable_histogram(
    alpha: f64,
    samples: usize,
    bins: usize,
    half_width: f64,
    seed: u32,
) -> Result<Histogram, String> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(format!("alpha must lie in (0, 2], got {alpha}"));
    }
    if samples == 0 || samples > MAX_SAMPLES || bins == 0 || !(half_width > 0.0) {
        return Err("need 1..=1e6 samples, at least one bin and a positive window".into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed.into());
    let width = 2.0 * half_width / bins as f64;
    let mut h = Histogram {
        edges: (0..=bins).map(|i| -half_width + i as f64 * width).collect(),
        counts: vec![0; bins],
        below: 0,
        above: 0,
        largest_magnitude: 0.0,
    };
    for _ in 0..samples {
        let x = standard_symmetric_stable(alpha, &mut rng);
        h.largest_magnitude = h.largest_magnitude.max(x.abs());
        if x < -half_width {
            h.below += 1;
        } else if x >= half_width {
            h.above += 1;
        } else {
            let i = ((x + half_width) / width) as usize;
            h.counts[i.min(bins - 1)] += 1;
        }
    }
    Ok(h)
}

#[derive(Debug, Serialize)]
pub struct GammaRow {
    pub gamma: usize,
    pub power_edges: usize,
    pub cover_blocks: usize,
    pub leaders: usize,
}

#[derive(Debug, Serialize)]
pub struct GraphView {
    pub vertices: usize,
    pub edges: Vec<(usize, usize)>,
    pub diameter: usize,
    pub gamma: usize,
    /// Clique cover of the power graph at `gamma`.
    pub cover: Vec<Vec<usize>>,
    pub leaders: Vec<usize>,
    pub leader_of: Vec<usize>,
    pub table: Vec<GammaRow>,
}

pub fn graph_view(
    kind: &str,
    agents: usize,
    param: f64,
    gamma: usize,
    seed: u32,
) -> Result<GraphView, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.into());
    let g = build_graph(kind, agents, param, &mut rng)?;
    let dist = bfs_distances(&g);
    let diameter = dist.diameter().unwrap_or(0);
    let table = (0..=diameter)
        .map(|gm| {
            let gg = power_graph_from_distances(&dist, gm);
            GammaRow {
                gamma: gm,
                power_edges: gg.num_edges(),
                cover_blocks: greedy_clique_cover(&gg).num_blocks(),
                leaders: assign_leaders(&gg, &dist).leaders.len(),
            }
        })
        .collect();
    let gamma = gamma.min(diameter);
    let gg = power_graph_from_distances(&dist, gamma);
    let assignment = assign_leaders(&gg, &dist);
    Ok(GraphView {
        vertices: g.num_vertices(),
        edges: g.edges().collect(),
        diameter,
        gamma,
        cover: greedy_clique_cover(&gg).blocks,
        leaders: assignment.leaders,
        leader_of: assignment.leader_of,
        table,
    })
}

fn to_json<T: Serialize>(value: Result<T, String>) -> Result<String, JsError> {
    let value = value.map_err(|e| JsError::new(&e))?;
    serde_json::to_string(&value).map_err(|e| JsError::new(&e.to_string()))
}

#[allow(clippy::too_many_arguments)]
#[wasm_bindgen(js_name = regretCurves)]
pub fn regret_curves_json(
    kind: &str,
    agents: usize,
    param: f64,
    arms: usize,
    alpha: f64,
    horizon: usize,
    gamma: usize,
    seed: u32,
) -> Result<String, JsError> {
    to_json(regret_curves(
        kind, agents, param, arms, alpha, horizon, gamma, seed,
    ))
}

#[wasm_bindgen(js_name = stableHistogram)]
pub fn stable_histogram_json(
    alpha: f64,
    samples: usize,
    bins: usize,
    half_width: f64,
    seed: u32,
) -> Result<String, JsError> {
    to_json(stable_histogram(alpha, samples, bins, half_width, seed))
}

#[wasm_bindgen(js_name = graphView)]
pub fn graph_view_json(
    kind: &str,
    agents: usize,
    param: f64,
    gamma: usize,
    seed: u32,
) -> Result<String, JsError> {
    to_json(graph_view(kind, agents, param, gamma, seed))
}
