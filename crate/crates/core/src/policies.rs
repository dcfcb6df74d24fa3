//! Arm-selection rules. Every rule is a pure function of the agent's
//! current statistics and the round; mutation lives in the simulator.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::estimators::{confidence_radius, ArmSamples, EstimatorError, RateParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    /// Message passing; each agent keeps only samples from its clique in the power graph.
    DecentralizedMpUcb,
    /// Message passing; leaders run UCB and followers replay their leader.
    CentralizedMpUcb,
    /// Message passing with per-arm estimate/count vectors attached to each message.
    KmpUcb,
    /// Running-consensus averaging of reward sums and pull counts.
    ConsensusUcb,
    /// No communication; each agent runs robust UCB alone.
    IndependentRobustUcb,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] = [
        PolicyKind::DecentralizedMpUcb,
        PolicyKind::CentralizedMpUcb,
        PolicyKind::KmpUcb,
        PolicyKind::ConsensusUcb,
        PolicyKind::IndependentRobustUcb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::DecentralizedMpUcb => "decentralized_mp_ucb",
            Self::CentralizedMpUcb => "centralized_mp_ucb",
            Self::KmpUcb => "kmp_ucb",
            Self::ConsensusUcb => "consensus_ucb",
            Self::IndependentRobustUcb => "independent_robust_ucb",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == name)
    }

    pub fn uses_message_passing(self) -> bool {
        matches!(
            self,
            Self::DecentralizedMpUcb | Self::CentralizedMpUcb | Self::KmpUcb
        )
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Round-robin initialization: rounds `1..=K` pull arms `0..K` in order.
pub fn init_arm(t: usize, num_arms: usize) -> Option<usize> {
    (t >= 1 && t <= num_arms).then(|| t - 1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmEstimate {
    pub mean: f64,
    pub count: usize,
}

/// Arm maximizing `mean + radius(count, t)`; unsampled arms win outright,
/// ties go to the lowest arm id.
pub fn ucb_argmax(estimates: &[ArmEstimate], t: usize, params: &RateParams) -> usize {
    let mut best = 0;
    let mut best_index = f64::NEG_INFINITY;
    for (k, e) in estimates.iter().enumerate() {
        let index = if e.count == 0 {
            f64::INFINITY
        } else {
            e.mean + confidence_radius(params, e.count, t)
        };
        if index > best_index {
            best = k;
            best_index = index;
        }
    }
    best
}

/// Robust mean and sample count of every arm at round `t >= 2`.
pub fn robust_estimates(
    stores: &mut [ArmSamples],
    t: usize,
    v: f64,
) -> Result<Vec<ArmEstimate>, EstimatorError> {
    stores
        .iter_mut()
        .map(|s| {
            let count = s.len();
            let mean = if count == 0 { 0.0 } else { s.estimate(t, v)? };
            Ok(ArmEstimate { mean, count })
        })
        .collect()
}

/// Robust UCB over the agent's own store. Used by decentralized agents,
/// leaders, warming-up followers and isolated agents.
pub fn decentralized_act(
    stores: &mut [ArmSamples],
    t: usize,
    params: &RateParams,
) -> Result<usize, EstimatorError> {
    if let Some(arm) = init_arm(t, stores.len()) {
        return Ok(arm);
    }
    let est = robust_estimates(stores, t, params.v)?;
    Ok(ucb_argmax(&est, t, params))
}

/// What a centralized agent knows about its place in the leader structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Leader,
    Follower {
        /// Hop distance to the assigned leader.
        distance: usize,
        /// Arm carried by the freshest message received from the leader.
        leader_action: Option<usize>,
    },
}

pub fn centralized_act(
    role: Role,
    stores: &mut [ArmSamples],
    t: usize,
    params: &RateParams,
) -> Result<usize, EstimatorError> {
    match role {
        Role::Follower {
            distance,
            leader_action: Some(arm),
        } if t > stores.len() && t > distance => Ok(arm),
        _ => decentralized_act(stores, t, params),
    }
}

/// Latest `(estimate, count)` vectors announced by one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct KmpPayload {
    pub means: Vec<f64>,
    pub counts: Vec<usize>,
}

/// For every arm, the entry with the most samples among the agent's own
/// estimates and the announced `(agent id, payload)` entries. Ties keep the
/// agent's own entry, then the lowest agent id.
pub fn kmp_select<'a, I>(own: &[ArmEstimate], table: I) -> Vec<ArmEstimate>
where
    I: IntoIterator<Item = (usize, &'a KmpPayload)>,
{
    let mut chosen: Vec<(ArmEstimate, Option<usize>)> = own.iter().map(|&e| (e, None)).collect();
    for (agent, payload) in table {
        for (k, slot) in chosen.iter_mut().enumerate() {
            let count = payload.counts[k];
            let better = match slot.1 {
                _ if count > slot.0.count => true,
                Some(holder) if count == slot.0.count => agent < holder,
                _ => false,
            };
            if better {
                *slot = (
                    ArmEstimate {
                        mean: payload.means[k],
                        count,
                    },
                    Some(agent),
                );
            }
        }
    }
    chosen.into_iter().map(|(e, _)| e).collect()
}

pub fn kmp_act<'a, I>(own: &[ArmEstimate], table: I, t: usize, params: &RateParams) -> usize
where
    I: IntoIterator<Item = (usize, &'a KmpPayload)>,
{
    if let Some(arm) = init_arm(t, own.len()) {
        return arm;
    }
    ucb_argmax(&kmp_select(own, table), t, params)
}

/// `sqrt(6 v t^{2/3} / M * (n + eps_k) / n^2)`, infinite until `n > 0`.
pub fn consensus_radius(v: f64, t: usize, num_agents: usize, n_hat: f64, eps_k: f64) -> f64 {
    if !(n_hat > 0.0) {
        return f64::INFINITY;
    }
    let t = t as f64;
    (6.0 * v * t.powf(2.0 / 3.0) / num_agents as f64 * (n_hat + eps_k) / (n_hat * n_hat)).sqrt()
}

/// Consensus-UCB choice of one agent given its reward-sum and count opinions.
pub fn consensus_act(
    s_hat: &[f64],
    n_hat: &[f64],
    eps_k: f64,
    v: f64,
    num_agents: usize,
    t: usize,
) -> usize {
    if let Some(arm) = init_arm(t, s_hat.len()) {
        return arm;
    }
    let mut best = 0;
    let mut best_index = f64::NEG_INFINITY;
    for (k, (&s, &n)) in s_hat.iter().zip(n_hat).enumerate() {
        let radius = consensus_radius(v, t, num_agents, n, eps_k);
        let index = if radius.is_infinite() {
            f64::INFINITY
        } else {
            s / n + radius
        };
        if index > best_index {
            best = k;
            best_index = index;
        }
    }
    best
}
