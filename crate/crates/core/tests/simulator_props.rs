use std::collections::BTreeSet;

use coop_bandits::graph::{
    assign_leaders, bfs_distances, consensus_spectrum, diameter, generate_ba, generate_er,
    power_graph, Graph,
};
use coop_bandits::policies::consensus_act;
use coop_bandits::rewards::{make_hard_instance, make_stable_instance, RewardDistribution};
use coop_bandits::simulator::{
    check_consensus_band, check_sample_count_bounds, check_sample_tags, information_sources,
    Instrumentation,
};
use coop_bandits::{run, BanditInstance, PolicyKind, SimConfig};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const MESSAGE_PASSING: [PolicyKind; 4] = [
    PolicyKind::DecentralizedMpUcb,
    PolicyKind::CentralizedMpUcb,
    PolicyKind::KmpUcb,
    PolicyKind::IndependentRobustUcb,
];

fn rec(trace: &coop_bandits::RegretTrace) -> &Instrumentation {
    trace.instrumentation.as_ref().unwrap()
}

fn gaussian_instance(means: &[f64], std: f64) -> BanditInstance {
    let arms = means
        .iter()
        .map(|&mean| RewardDistribution::Gaussian { mean, std })
        .collect();
    BanditInstance::new(arms, 1.0, 4.0, std * std + 1e-9).unwrap()
}

#[test]
fn messages_arrive_after_one_round_per_hop() {
    let inst = make_hard_instance(2, 0.1, 1.0).unwrap();
    let g = Graph::path(3);
    let cfg = SimConfig::new(PolicyKind::KmpUcb, 10, 2, 4).instrumented();
    let trace = run(&inst, &g, &cfg).unwrap();
    let tags: Vec<_> = rec(&trace).samples[2].iter().flatten().collect();
    let from_zero = tags.iter().find(|s| s.origin == 0 && s.birth == 5).unwrap();
    // absorbed at the end of round 6, so usable when acting at round 7
    assert_eq!(from_zero.received, 6);
    for s in &tags {
        let d = if s.origin == 2 {
            1
        } else {
            (s.origin as isize - 2).unsigned_abs()
        };
        assert_eq!(s.received, s.birth + d - 1);
    }

    let cfg = SimConfig::new(PolicyKind::KmpUcb, 10, 1, 4).instrumented();
    let trace = run(&inst, &g, &cfg).unwrap();
    assert!(rec(&trace).samples[2]
        .iter()
        .flatten()
        .all(|s| s.origin != 0));
}

#[test]
fn gamma_zero_keeps_only_own_pulls() {
    let inst = make_hard_instance(3, 0.1, 1.0).unwrap();
    let g = Graph::cycle(5);
    for policy in MESSAGE_PASSING {
        let trace = run(&inst, &g, &SimConfig::new(policy, 60, 0, 1).instrumented()).unwrap();
        let r = rec(&trace);
        for v in 0..5 {
            assert!(r.samples[v].iter().flatten().all(|s| s.origin == v));
            assert_eq!(r.store_sizes[59][v], trace.pull_counts[v]);
        }
    }
}

#[test]
fn two_adjacent_agents_share_everything() {
    let inst = make_hard_instance(2, 0.1, 1.0).unwrap();
    let g = Graph::complete(2);
    let trace = run(
        &inst,
        &g,
        &SimConfig::new(PolicyKind::DecentralizedMpUcb, 200, 1, 2).instrumented(),
    )
    .unwrap();
    let r = rec(&trace);
    let mut joint = [0usize; 2];
    for (i, acts) in r.actions.iter().enumerate() {
        for &a in acts {
            joint[a] += 1;
        }
        assert_eq!(r.store_sizes[i][0], joint.to_vec());
        assert_eq!(r.store_sizes[i][1], joint.to_vec());
    }
}

/// Store size after round `t` equals the pulls of each source `w` made no
/// later than round `t - d(v, w) + 1`.
fn exact_store_oracle(g: &Graph, cfg: &SimConfig, r: &Instrumentation) {
    let dist = bfs_distances(g);
    let k = r.store_sizes[0][0].len();
    for v in 0..g.num_vertices() {
        let sources = information_sources(&dist, cfg, v);
        for t in 1..=r.actions.len() {
            let mut expect = vec![0usize; k];
            for &w in &sources {
                let lag = if w == v { 0 } else { dist.hops(v, w) - 1 };
                for acts in r.actions.iter().take(t.saturating_sub(lag)) {
                    expect[acts[w]] += 1;
                }
            }
            assert_eq!(r.store_sizes[t - 1][v], expect, "agent {v} round {t}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sample_counts_respect_bounds(
        seed in any::<u64>(),
        m in 2usize..12,
        use_ba in any::<bool>(),
        gamma_frac in 0.0f64..=1.0,
        policy_idx in 0usize..4,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = if use_ba && m > 2 {
            generate_ba(m, 2, &mut rng).unwrap()
        } else {
            generate_er(m, 0.4, &mut rng).unwrap()
        };
        let gamma = (gamma_frac * diameter(&g).unwrap() as f64).round() as usize;
        let inst = make_stable_instance(3, 1.7, &mut rng).unwrap();
        let cfg = SimConfig::new(MESSAGE_PASSING[policy_idx], 120, gamma, seed).instrumented();
        let trace = run(&inst, &g, &cfg).unwrap();
        prop_assert!(check_sample_count_bounds(&g, &cfg, &trace).unwrap().is_empty());
        prop_assert!(check_sample_tags(&trace).unwrap().is_empty());
        exact_store_oracle(&g, &cfg, rec(&trace));

        let c = &trace.cumulative;
        prop_assert!(c.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(c[0] >= 0.0);
        prop_assert!(*c.last().unwrap() <= (m * 120) as f64 * inst.max_gap() + 1e-9);
        for counts in &trace.pull_counts {
            prop_assert_eq!(counts.iter().sum::<usize>(), 120);
            prop_assert!(counts.iter().all(|&n| n >= 1));
        }
    }

    #[test]
    fn scaling_rewards_keeps_decisions(seed in any::<u64>(), policy_idx in 0usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = generate_er(6, 0.5, &mut rng).unwrap();
        let base = gaussian_instance(&[0.1, 0.5, 0.3], 1.0);
        // a power of two scales every intermediate value exactly
        let s = 4.0;
        let scaled = BanditInstance::new(
            base.arms
                .iter()
                .map(|a| match *a {
                    RewardDistribution::Gaussian { mean, std } => RewardDistribution::Gaussian {
                        mean: mean * s,
                        std: std * s,
                    },
                    _ => unreachable!(),
                })
                .collect(),
            1.0,
            base.u * s * s,
            base.v * s * s,
        )
        .unwrap();
        let cfg = SimConfig::new(MESSAGE_PASSING[policy_idx], 150, 1, seed).instrumented();
        let a = run(&base, &g, &cfg).unwrap();
        let b = run(&scaled, &g, &cfg).unwrap();
        prop_assert_eq!(&rec(&a).actions, &rec(&b).actions);
    }
}

#[test]
fn full_gamma_stores_agree_outside_the_delay_window() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let g = generate_ba(9, 2, &mut rng).unwrap();
    let diam = diameter(&g).unwrap();
    let inst = make_stable_instance(4, 1.8, &mut rng).unwrap();
    let horizon = 80;
    let cfg = SimConfig::new(PolicyKind::DecentralizedMpUcb, horizon, diam, 0).instrumented();
    let trace = run(&inst, &g, &cfg).unwrap();
    let sets: Vec<BTreeSet<(usize, usize)>> = rec(&trace)
        .samples
        .iter()
        .map(|arms| arms.iter().flatten().map(|s| (s.origin, s.birth)).collect())
        .collect();
    for a in &sets {
        for b in &sets {
            for &(_, birth) in a.symmetric_difference(b) {
                assert!(birth > horizon - diam);
            }
        }
    }
}

#[test]
fn followers_replay_their_leader_with_lag() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let g = generate_ba(12, 1, &mut rng).unwrap();
    let gamma = 2.min(diameter(&g).unwrap());
    let inst = make_stable_instance(4, 1.9, &mut rng).unwrap();
    let k = inst.num_arms();
    let trace = run(
        &inst,
        &g,
        &SimConfig::new(PolicyKind::CentralizedMpUcb, 300, gamma, 5).instrumented(),
    )
    .unwrap();
    let acts = &rec(&trace).actions;
    let la = assign_leaders(&power_graph(&g, gamma), &bfs_distances(&g));
    assert!(la.leaders.len() < 12);
    for f in 0..12 {
        if la.is_leader(f) {
            continue;
        }
        let (l, d) = (la.leader_of[f], la.distance_to_leader[f]);
        for t in (k + d + 1)..=300 {
            assert_eq!(acts[t - 1][f], acts[t - 1 - d][l], "follower {f} round {t}");
        }
    }
}

#[test]
fn complete_graph_has_one_leader_and_lag_one() {
    let inst = make_stable_instance(3, 1.9, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let trace = run(
        &inst,
        &Graph::complete(5),
        &SimConfig::new(PolicyKind::CentralizedMpUcb, 100, 1, 2).instrumented(),
    )
    .unwrap();
    let acts = &rec(&trace).actions;
    for t in 5..=100 {
        for f in 1..5 {
            assert_eq!(acts[t - 1][f], acts[t - 2][0]);
        }
    }
}

#[test]
fn kmp_with_gamma_zero_is_independent() {
    let inst = make_stable_instance(4, 1.6, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
    let g = Graph::cycle(6);
    let a = run(&inst, &g, &SimConfig::new(PolicyKind::KmpUcb, 200, 0, 7)).unwrap();
    let b = run(
        &inst,
        &g,
        &SimConfig::new(PolicyKind::IndependentRobustUcb, 200, 0, 7),
    )
    .unwrap();
    assert_eq!(a.cumulative, b.cumulative);
    assert_eq!(a.pull_counts, b.pull_counts);
}

#[test]
fn consensus_two_agents_follow_matrix_arithmetic() {
    let inst = gaussian_instance(&[0.0, 0.3, 0.6], 1.0);
    let g = Graph::complete(2);
    let trace = run(
        &inst,
        &g,
        &SimConfig::new(PolicyKind::ConsensusUcb, 6, 1, 3).instrumented(),
    )
    .unwrap();
    let r = rec(&trace);
    // P = [[.5,.5],[.5,.5]] averages in one step, so both agents hold the
    // same opinions: n_hat = pulls / 2 and s_hat = reward sum / 2.
    let mut s = [0.0; 3];
    let mut n = [0.0; 3];
    let spectrum = consensus_spectrum(&g, 0.5).unwrap();
    for t in 1..=6 {
        let expect: Vec<usize> = (0..2)
            .map(|v| consensus_act(&s, &n, spectrum.epsilon_k[v], inst.v, 2, t))
            .collect();
        assert_eq!(r.actions[t - 1], expect, "round {t}");
        for v in 0..2 {
            let a = r.actions[t - 1][v];
            s[a] += 0.5 * r.rewards[t - 1][v];
            n[a] += 0.5;
        }
        for v in 0..2 {
            for a in 0..3 {
                assert!((r.n_hat[t - 1][v][a] - n[a]).abs() < 1e-12);
            }
        }
    }
    assert!(spectrum.epsilon.abs() < 1e-12);
}

#[test]
fn consensus_counts_stay_in_band() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let g = generate_er(8, 0.4, &mut rng).unwrap();
    let inst = make_stable_instance(3, 1.9, &mut rng).unwrap();
    let trace = run(
        &inst,
        &g,
        &SimConfig::new(PolicyKind::ConsensusUcb, 300, 0, 1).instrumented(),
    )
    .unwrap();
    let eps = consensus_spectrum(&g, 0.5).unwrap().epsilon;
    assert!(check_consensus_band(&trace, eps).unwrap().is_empty());
    // the total count is conserved by a doubly stochastic P
    let r = rec(&trace);
    for (t, rows) in r.n_hat.iter().enumerate() {
        let total: f64 = rows.iter().flatten().sum();
        assert!((total - 8.0 * (t + 1) as f64).abs() < 1e-8);
    }
}

#[test]
fn estimator_choice_is_respected() {
    use coop_bandits::EstimatorKind;
    let inst = make_stable_instance(3, 1.8, &mut ChaCha8Rng::seed_from_u64(6)).unwrap();
    let g = Graph::path(4);
    let mut finals = Vec::new();
    for est in [
        EstimatorKind::TrimmedMean,
        EstimatorKind::MedianOfMeans,
        EstimatorKind::Catoni,
        EstimatorKind::EmpiricalMean,
    ] {
        let mut cfg = SimConfig::new(PolicyKind::DecentralizedMpUcb, 150, 1, 9);
        cfg.estimator = est;
        let a = run(&inst, &g, &cfg).unwrap();
        let b = run(&inst, &g, &cfg).unwrap();
        assert_eq!(a.cumulative, b.cumulative);
        finals.push(a.final_regret());
    }
    assert!(finals.iter().all(|r| r.is_finite()));
}
