//! Synchronous-round engine. Each round every agent acts and draws a reward,
//! then every agent sends its own message plus anything it is relaying, and
//! finally every agent absorbs what its neighbors sent.
//!
//! A reward drawn at round `t` by agent `w` is absorbed by an agent at
//! distance `d <= gamma` at the end of round `t + d - 1`, so it first
//! influences a decision at round `t + d`.

use std::io::{self, Write};
use std::rc::Rc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimators::{ArmSamples, EstimatorError, EstimatorKind, RateParams, TrimSchedule};
use crate::graph::{
    assign_leaders, bfs_distances, consensus_spectrum, greedy_clique_cover,
    power_graph_from_distances, DistanceMatrix, Graph, GraphError,
};
use crate::policies::{
    centralized_act, consensus_act, decentralized_act, kmp_act, robust_estimates, KmpPayload,
    PolicyKind, Role,
};
use crate::rewards::{reward_rng, BanditInstance};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("run was not instrumented")]
    NotInstrumented,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub horizon: usize,
    pub gamma: usize,
    pub seed: u64,
    pub policy: PolicyKind,
    #[serde(default)]
    pub estimator: EstimatorKind,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default = "default_c")]
    pub c: f64,
    /// Record per-round actions, store sizes and sample tags.
    #[serde(default)]
    pub instrument: bool,
}

fn default_kappa() -> f64 {
    0.5
}

fn default_c() -> f64 {
    1.0
}

impl SimConfig {
    pub fn new(policy: PolicyKind, horizon: usize, gamma: usize, seed: u64) -> Self {
        Self {
            horizon,
            gamma,
            seed,
            policy,
            estimator: EstimatorKind::TrimmedMean,
            kappa: default_kappa(),
            c: default_c(),
            instrument: false,
        }
    }

    pub fn instrumented(mut self) -> Self {
        self.instrument = true;
        self
    }

    /// Hop budget actually used for message passing.
    pub fn effective_gamma(&self) -> usize {
        match self.policy {
            PolicyKind::IndependentRobustUcb | PolicyKind::ConsensusUcb => 0,
            _ => self.gamma,
        }
    }
}

/// One reward sample as held in an agent's store.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleTag {
    pub origin: usize,
    /// Round in which `origin` drew the reward.
    pub birth: usize,
    /// Round at whose end the sample entered the store.
    pub received: usize,
    pub arm: usize,
    pub reward: f64,
}

/// Per-round records of an instrumented run. Outer index is `round - 1`.
#[derive(Debug, Clone, Default)]
pub struct Instrumentation {
    pub actions: Vec<Vec<usize>>,
    pub rewards: Vec<Vec<f64>>,
    /// `[round][agent][arm]` store size after the round; empty for consensus.
    pub store_sizes: Vec<Vec<Vec<usize>>>,
    /// `[agent][arm]` final store contents; empty for consensus.
    pub samples: Vec<Vec<Vec<SampleTag>>>,
    /// `[round][agent][arm]` consensus count estimate after the round.
    pub n_hat: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone)]
pub struct RegretTrace {
    /// Group pseudo-regret after rounds `1..=T`.
    pub cumulative: Vec<f64>,
    /// `[agent][arm]` pull counts at the horizon.
    pub pull_counts: Vec<Vec<usize>>,
    pub instrumentation: Option<Instrumentation>,
}

impl RegretTrace {
    pub fn final_regret(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    /// Regret after round `t`, with `regret(0) = 0`.
    pub fn at(&self, t: usize) -> f64 {
        if t == 0 {
            0.0
        } else {
            self.cumulative[t - 1]
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "round,cumulative_group_regret")?;
        for (i, r) in self.cumulative.iter().enumerate() {
            writeln!(w, "{},{}", i + 1, format_float(*r))?;
        }
        Ok(())
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug)]
struct Message {
    origin: usize,
    birth: usize,
    arm: usize,
    reward: f64,
    kmp: Option<Rc<KmpPayload>>,
}

#[derive(Debug, Clone)]
struct Relay {
    msg: Rc<Message>,
    life: usize,
}

struct AgentState {
    stores: Vec<ArmSamples>,
    /// Birth round of the newest message seen from each origin; 0 if none.
    last_seen: Vec<usize>,
    relay: Vec<Relay>,
    leader_action: Option<usize>,
    kmp_table: Vec<Option<Rc<KmpPayload>>>,
    tags: Vec<Vec<SampleTag>>,
}

pub fn run(
    instance: &BanditInstance,
    graph: &Graph,
    config: &SimConfig,
) -> Result<RegretTrace, SimError> {
    graph.ensure_connected()?;
    if config.horizon == 0 {
        return Err(SimError::Config("horizon must be at least 1".into()));
    }
    let dist = bfs_distances(graph);
    let diameter = dist.diameter().unwrap_or(0);
    if config.gamma > diameter {
        return Err(SimError::Config(format!(
            "gamma {} exceeds the graph diameter {diameter}",
            config.gamma
        )));
    }
    match config.policy {
        PolicyKind::ConsensusUcb => run_consensus(instance, graph, config),
        _ => run_message_passing(instance, graph, &dist, config),
    }
}

fn run_message_passing(
    instance: &BanditInstance,
    graph: &Graph,
    dist: &DistanceMatrix,
    config: &SimConfig,
) -> Result<RegretTrace, SimError> {
    let m = graph.num_vertices();
    let k = instance.num_arms();
    let horizon = config.horizon;
    let gamma = config.effective_gamma();
    let params = RateParams::new(config.c, instance.v, instance.eps)?;
    let schedule = TrimSchedule::new(horizon, instance.u, instance.eps)?;

    let g_gamma = power_graph_from_distances(dist, gamma);
    let cover = greedy_clique_cover(&g_gamma);
    let leaders = assign_leaders(&g_gamma, dist);

    let mut agents: Vec<AgentState> = (0..m)
        .map(|_| AgentState {
            stores: (0..k)
                .map(|_| ArmSamples::new(config.estimator, &schedule))
                .collect(),
            last_seen: vec![0; m],
            relay: Vec::new(),
            leader_action: None,
            kmp_table: vec![None; m],
            tags: vec![Vec::new(); k],
        })
        .collect();

    let mut cumulative = Vec::with_capacity(horizon);
    let mut pull_counts = vec![vec![0usize; k]; m];
    let mut inst = config.instrument.then(Instrumentation::default);
    let mut regret = 0.0;
    let mut actions = vec![0usize; m];
    let mut rewards = vec![0.0f64; m];
    let mut payloads: Vec<Option<Rc<KmpPayload>>> = vec![None; m];

    for t in 1..=horizon {
        // act and pull
        for (v, agent) in agents.iter_mut().enumerate() {
            let arm = match config.policy {
                PolicyKind::DecentralizedMpUcb | PolicyKind::IndependentRobustUcb => {
                    decentralized_act(&mut agent.stores, t, &params)?
                }
                PolicyKind::CentralizedMpUcb => {
                    let role = if leaders.is_leader(v) {
                        Role::Leader
                    } else {
                        Role::Follower {
                            distance: leaders.distance_to_leader[v],
                            leader_action: agent.leader_action,
                        }
                    };
                    centralized_act(role, &mut agent.stores, t, &params)?
                }
                PolicyKind::KmpUcb => {
                    let own = robust_estimates(&mut agent.stores, t, params.v)?;
                    let table = agent
                        .kmp_table
                        .iter()
                        .enumerate()
                        .filter_map(|(w, p)| p.as_deref().map(|p| (w, p)));
                    let arm = kmp_act(&own, table, t, &params);
                    payloads[v] = Some(Rc::new(KmpPayload {
                        means: own.iter().map(|e| e.mean).collect(),
                        counts: own.iter().map(|e| e.count).collect(),
                    }));
                    arm
                }
                PolicyKind::ConsensusUcb => unreachable!("handled by the consensus engine"),
            };
            let reward = instance.arms[arm].sample(&mut reward_rng(config.seed, v, t, arm));
            agent.stores[arm].push(reward, t)?;
            if inst.is_some() {
                agent.tags[arm].push(SampleTag {
                    origin: v,
                    birth: t,
                    received: t,
                    arm,
                    reward,
                });
            }
            actions[v] = arm;
            rewards[v] = reward;
            pull_counts[v][arm] += 1;
            regret += instance.gaps[arm];
        }
        cumulative.push(regret);

        // send: own message first, then relays
        let outgoing: Vec<Vec<Relay>> = agents
            .iter_mut()
            .enumerate()
            .map(|(v, agent)| {
                let mut out = Vec::new();
                if gamma > 0 {
                    out.push(Relay {
                        msg: Rc::new(Message {
                            origin: v,
                            birth: t,
                            arm: actions[v],
                            reward: rewards[v],
                            kmp: payloads[v].take(),
                        }),
                        life: gamma,
                    });
                }
                out.append(&mut agent.relay);
                out
            })
            .collect();

        // receive
        if gamma > 0 {
            for (v, agent) in agents.iter_mut().enumerate() {
                for &w in graph.neighbors(v) {
                    for relay in &outgoing[w] {
                        let msg = &relay.msg;
                        if msg.origin == v || agent.last_seen[msg.origin] >= msg.birth {
                            continue;
                        }
                        agent.last_seen[msg.origin] = msg.birth;
                        let keep = match config.policy {
                            PolicyKind::DecentralizedMpUcb => cover.same_clique(v, msg.origin),
                            _ => true,
                        };
                        if keep {
                            agent.stores[msg.arm].push(msg.reward, t)?;
                            if inst.is_some() {
                                agent.tags[msg.arm].push(SampleTag {
                                    origin: msg.origin,
                                    birth: msg.birth,
                                    received: t,
                                    arm: msg.arm,
                                    reward: msg.reward,
                                });
                            }
                        }
                        if leaders.leader_of[v] == msg.origin && !leaders.is_leader(v) {
                            agent.leader_action = Some(msg.arm);
                        }
                        if let Some(payload) = &msg.kmp {
                            agent.kmp_table[msg.origin] = Some(Rc::clone(payload));
                        }
                        if relay.life > 1 {
                            agent.relay.push(Relay {
                                msg: Rc::clone(msg),
                                life: relay.life - 1,
                            });
                        }
                    }
                }
            }
        }

        if let Some(rec) = inst.as_mut() {
            rec.actions.push(actions.clone());
            rec.rewards.push(rewards.clone());
            rec.store_sizes.push(
                agents
                    .iter()
                    .map(|a| a.stores.iter().map(ArmSamples::len).collect())
                    .collect(),
            );
        }
    }

    if let Some(rec) = inst.as_mut() {
        rec.samples = agents.into_iter().map(|a| a.tags).collect();
    }
    Ok(RegretTrace {
        cumulative,
        pull_counts,
        instrumentation: inst,
    })
}

/// One consensus update for a single arm: `s' = P (s + r)`, `n' = P (n + zeta)`,
/// where `r` is already zero wherever `zeta` is.
pub fn consensus_step(
    p: &DMatrix<f64>,
    s_hat: &[f64],
    n_hat: &[f64],
    zeta: &[f64],
    r: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let s = DVector::from_iterator(s_hat.len(), s_hat.iter().zip(r).map(|(a, b)| a + b));
    let n = DVector::from_iterator(n_hat.len(), n_hat.iter().zip(zeta).map(|(a, b)| a + b));
    ((p * s).as_slice().to_vec(), (p * n).as_slice().to_vec())
}

fn run_consensus(
    instance: &BanditInstance,
    graph: &Graph,
    config: &SimConfig,
) -> Result<RegretTrace, SimError> {
    let m = graph.num_vertices();
    let k = instance.num_arms();
    let spectrum = consensus_spectrum(graph, config.kappa)?;

    // [arm][agent]
    let mut s_hat = vec![vec![0.0; m]; k];
    let mut n_hat = vec![vec![0.0; m]; k];
    let mut cumulative = Vec::with_capacity(config.horizon);
    let mut pull_counts = vec![vec![0usize; k]; m];
    let mut inst = config.instrument.then(Instrumentation::default);
    let mut regret = 0.0;
    let mut s_row = vec![0.0; k];
    let mut n_row = vec![0.0; k];

    for t in 1..=config.horizon {
        let mut zeta = vec![vec![0.0; m]; k];
        let mut r = vec![vec![0.0; m]; k];
        let mut actions = vec![0usize; m];
        let mut rewards = vec![0.0; m];
        for v in 0..m {
            for arm in 0..k {
                s_row[arm] = s_hat[arm][v];
                n_row[arm] = n_hat[arm][v];
            }
            let arm = consensus_act(&s_row, &n_row, spectrum.epsilon_k[v], instance.v, m, t);
            let reward = instance.arms[arm].sample(&mut reward_rng(config.seed, v, t, arm));
            zeta[arm][v] = 1.0;
            r[arm][v] = reward;
            actions[v] = arm;
            rewards[v] = reward;
            pull_counts[v][arm] += 1;
            regret += instance.gaps[arm];
        }
        cumulative.push(regret);
        for arm in 0..k {
            let (s, n) = consensus_step(&spectrum.p, &s_hat[arm], &n_hat[arm], &zeta[arm], &r[arm]);
            s_hat[arm] = s;
            n_hat[arm] = n;
        }
        if let Some(rec) = inst.as_mut() {
            rec.actions.push(actions);
            rec.rewards.push(rewards);
            rec.n_hat.push(
                (0..m)
                    .map(|v| (0..k).map(|a| n_hat[a][v]).collect())
                    .collect(),
            );
        }
    }

    Ok(RegretTrace {
        cumulative,
        pull_counts,
        instrumentation: inst,
    })
}

/// A store size outside `[lower, upper]` for some agent, arm and round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountViolation {
    pub agent: usize,
    pub arm: usize,
    pub round: usize,
    pub store: usize,
    pub lower: usize,
    pub upper: usize,
}

/// Agents whose samples may enter `agent`'s store under the run's policy.
pub fn information_sources(dist: &DistanceMatrix, config: &SimConfig, agent: usize) -> Vec<usize> {
    let gamma = config.effective_gamma();
    let mut sources = match config.policy {
        PolicyKind::DecentralizedMpUcb => {
            let g_gamma = power_graph_from_distances(dist, gamma);
            greedy_clique_cover(&g_gamma).block_of(agent).to_vec()
        }
        _ => dist.ball(agent, gamma),
    };
    if !sources.contains(&agent) {
        sources.push(agent);
    }
    sources.sort_unstable();
    sources
}

/// Checks `N(t) >= |S_k^m(t)| >= N(t) - sum_{m' != m} (d(m, m') - 1)` at every
/// agent, arm and round, where `N(t)` counts pulls of arm `k` by the agent's
/// information sources through round `t`.
pub fn check_sample_count_bounds(
    graph: &Graph,
    config: &SimConfig,
    trace: &RegretTrace,
) -> Result<Vec<CountViolation>, SimError> {
    let rec = trace
        .instrumentation
        .as_ref()
        .filter(|r| !r.store_sizes.is_empty())
        .ok_or(SimError::NotInstrumented)?;
    let dist = bfs_distances(graph);
    let m = graph.num_vertices();
    let k = trace.pull_counts.first().map_or(0, Vec::len);
    let mut violations = Vec::new();
    for agent in 0..m {
        let sources = information_sources(&dist, config, agent);
        let slack: usize = sources
            .iter()
            .filter(|&&w| w != agent)
            .map(|&w| dist.hops(agent, w) - 1)
            .sum();
        let mut joint = vec![0usize; k];
        for (i, actions) in rec.actions.iter().enumerate() {
            for &w in &sources {
                joint[actions[w]] += 1;
            }
            for arm in 0..k {
                let store = rec.store_sizes[i][agent][arm];
                let upper = joint[arm];
                let lower = upper.saturating_sub(slack);
                if store > upper || store < lower {
                    violations.push(CountViolation {
                        agent,
                        arm,
                        round: i + 1,
                        store,
                        lower,
                        upper,
                    });
                }
            }
        }
    }
    Ok(violations)
}

/// Every stored sample must match exactly one recorded pull, with no
/// duplicates. Returns a description of each problem found.
pub fn check_sample_tags(trace: &RegretTrace) -> Result<Vec<String>, SimError> {
    let rec = trace
        .instrumentation
        .as_ref()
        .filter(|r| !r.samples.is_empty())
        .ok_or(SimError::NotInstrumented)?;
    let mut problems = Vec::new();
    for (agent, arms) in rec.samples.iter().enumerate() {
        for (arm, tags) in arms.iter().enumerate() {
            let mut ids: Vec<(usize, usize)> = tags.iter().map(|s| (s.origin, s.birth)).collect();
            ids.sort_unstable();
            if ids.windows(2).any(|w| w[0] == w[1]) {
                problems.push(format!("agent {agent} arm {arm}: duplicated sample"));
            }
            for tag in tags {
                let pulled = rec
                    .actions
                    .get(tag.birth.wrapping_sub(1))
                    .and_then(|a| a.get(tag.origin));
                let drawn = rec
                    .rewards
                    .get(tag.birth.wrapping_sub(1))
                    .and_then(|r| r.get(tag.origin));
                if pulled != Some(&arm) || tag.arm != arm || drawn != Some(&tag.reward) {
                    problems.push(format!(
                        "agent {agent} arm {arm}: sample ({}, {}) matches no pull",
                        tag.origin, tag.birth
                    ));
                }
            }
        }
    }
    Ok(problems)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandViolation {
    pub agent: usize,
    pub arm: usize,
    pub round: usize,
    pub deviation: f64,
}

/// Consensus count estimates must stay within `epsilon` of the network
/// average `N_k(t) / M` at every agent, arm and round.
pub fn check_consensus_band(
    trace: &RegretTrace,
    epsilon: f64,
) -> Result<Vec<BandViolation>, SimError> {
    let rec = trace
        .instrumentation
        .as_ref()
        .filter(|r| !r.n_hat.is_empty())
        .ok_or(SimError::NotInstrumented)?;
    let m = trace.pull_counts.len();
    let k = trace.pull_counts.first().map_or(0, Vec::len);
    let mut totals = vec![0usize; k];
    let mut violations = Vec::new();
    for (i, (actions, n_hat)) in rec.actions.iter().zip(&rec.n_hat).enumerate() {
        for &a in actions {
            totals[a] += 1;
        }
        for (agent, row) in n_hat.iter().enumerate() {
            for arm in 0..k {
                let deviation = (row[arm] - totals[arm] as f64 / m as f64).abs();
                if deviation > epsilon {
                    violations.push(BandViolation {
                        agent,
                        arm,
                        round: i + 1,
                        deviation,
                    });
                }
            }
        }
    }
    Ok(violations)
}
