//! Seeded training loop with periodic greedy evaluation.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::agent::AgentTables;
use crate::config::{RunConfig, TerminalBootstrap};
use crate::error::Result;
use crate::glie::GlieTrace;
use crate::mdp::MonMdp;
use crate::policy::{self, PolicyKind};
use crate::space::ProxyReward;

/// One row of `metrics.csv`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricRow {
    pub test_idx: usize,
    pub train_step: usize,
    pub greedy_return_mean: f64,
    /// `ln t / min N`; infinite while some pair is unvisited.
    pub beta: f64,
    pub observed_rewards_cum: u64,
}

#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub config: RunConfig,
    pub metrics: Vec<MetricRow>,
    pub tables: AgentTables,
    pub glie: Option<GlieTrace>,
    pub observed_rewards: u64,
    pub episodes: u64,
    pub wall_clock: Duration,
}

impl RunArtifacts {
    pub fn final_return(&self) -> f64 {
        self.metrics.last().map_or(f64::NAN, |m| m.greedy_return_mean)
    }

    /// β at the metric row closest to the given fraction of training.
    pub fn beta_at_fraction(&self, fraction: f64) -> f64 {
        let idx = ((fraction * self.metrics.len() as f64).round() as usize).clamp(1, self.metrics.len());
        self.metrics[idx - 1].beta
    }
}

/// The generator for evaluation at test point `k`, independent of training draws.
pub fn eval_rng(seed: u64, test_idx: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1 + test_idx as u64);
    rng
}

/// Mean undiscounted `rᵉ + rᵐ` over `episodes` greedy episodes, first-index
/// tie-breaking, each episode capped at the environment's step limit.
pub fn evaluate_greedy<R: Rng + ?Sized>(tables: &AgentTables, mdp: &MonMdp, episodes: usize, rng: &mut R) -> f64 {
    assert!(episodes >= 1);
    let cap = mdp.env.max_episode_steps();
    let mut total = 0.0;
    for _ in 0..episodes {
        let mut s = mdp.reset(rng);
        for _ in 0..cap {
            let a = policy::argmax_first(tables.q_row(s.flat));
            let rec = mdp.joint_step(s, mdp.space.action_from_flat(a), rng);
            total += rec.env_reward + rec.mon_reward;
            if rec.terminated {
                break;
            }
            s = rec.next;
        }
    }
    total / episodes as f64
}

pub fn fresh_tables<R: Rng + ?Sized>(config: &RunConfig, mdp: &MonMdp, rng: &mut R) -> AgentTables {
    let tables = AgentTables::new(mdp.space, config.q_init, rng);
    match config.policy {
        PolicyKind::Directed => tables.with_successor(config.s_init),
        PolicyKind::QCounts => tables.with_count_values(),
        _ => tables,
    }
}

pub fn run_training(config: &RunConfig) -> Result<RunArtifacts> {
    config.validate()?;
    let mdp = config.build_mdp()?;
    Ok(train(config, &mdp))
}

/// Trains on an already built problem.
pub fn train(config: &RunConfig, mdp: &MonMdp) -> RunArtifacts {
    let clock = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut tables = fresh_tables(config, mdp, &mut rng);
    let total = config.total_steps;
    let max_steps = mdp.env.max_episode_steps();
    let mut glie = config
        .record_glie
        .then(|| GlieTrace::new(mdp.space.n_pairs(), config.beta_bar));
    let mut metrics = Vec::with_capacity(config.eval_points);
    let mut next_test = 1;
    let mut observed = 0u64;
    let mut episodes = 1u64;
    let mut episode_steps = 0;
    let mut state = mdp.reset(&mut rng);

    for step in 0..total {
        let t = step as u64 + 1;
        let epsilon = config.epsilon.at(step, total);
        let alpha = config.alpha.at(step, total);
        let s = state.flat;
        let (a, decision) = match config.policy {
            PolicyKind::Directed => {
                let (a, d) = policy::directed_action(&tables, t, s, config.beta_bar, epsilon, &mut rng);
                (a, Some(d))
            }
            PolicyKind::Optimistic => (policy::optimistic_action(tables.q_row(s), &mut rng), None),
            PolicyKind::Naive | PolicyKind::Intrinsic => (policy::naive_action(tables.q_row(s), epsilon, &mut rng), None),
            PolicyKind::Ucb => (policy::ucb_action(tables.q_row(s), tables.visit_row(s), epsilon, &mut rng), None),
            PolicyKind::QCounts => {
                let counts = tables.count_value_row(s).expect("count values present");
                (policy::qcounts_action(tables.q_row(s), counts, epsilon, &mut rng), None)
            }
        };
        let pair = tables.pair(s, a);
        if let (Some(trace), Some(d)) = (glie.as_mut(), decision) {
            let goal = d.goal.state * mdp.space.n_actions() + d.goal.action;
            trace.record(t, d.exploring, goal, pair, tables.visits[goal]);
        }
        tables.record_visit(s, a);

        let action = mdp.space.action_from_flat(a);
        let mut rec = mdp.joint_step(state, action, &mut rng);
        episode_steps += 1;
        rec.truncated = !rec.terminated && episode_steps >= max_steps;
        tables.reward_model_update(state.env.0, action.env.0, rec.proxy);
        if let ProxyReward::Observed(_) = rec.proxy {
            observed += 1;
        }
        let restart = (rec.terminated || rec.truncated).then(|| mdp.reset(&mut rng));

        let bonus = if config.policy == PolicyKind::Intrinsic {
            policy::intrinsic_bonus(tables.visits[pair])
        } else {
            0.0
        };
        let linked_next = match restart {
            Some(r) if rec.terminated => r.flat,
            _ => rec.next.flat,
        };
        let q_next = match (rec.terminated, config.terminal_bootstrap) {
            (false, _) => Some(rec.next.flat),
            (true, TerminalBootstrap::Zero) => None,
            (true, TerminalBootstrap::StartState) => Some(linked_next),
        };
        tables.q_update(s, a, rec.mon_reward, bonus, q_next, alpha, config.gamma);
        tables.s_update(s, a, linked_next, alpha, config.gamma);
        tables.q_count_update(s, a, linked_next, alpha, config.gamma);

        state = match restart {
            Some(r) => {
                episodes += 1;
                episode_steps = 0;
                r
            }
            None => rec.next,
        };

        while next_test <= config.eval_points && config.test_step(next_test) == step + 1 {
            let mut erng = eval_rng(config.seed, next_test);
            metrics.push(MetricRow {
                test_idx: next_test,
                train_step: step + 1,
                greedy_return_mean: evaluate_greedy(&tables, mdp, config.eval_episodes, &mut erng),
                beta: policy::beta(t, tables.min_visits()),
                observed_rewards_cum: observed,
            });
            next_test += 1;
        }
    }

    RunArtifacts {
        config: config.clone(),
        metrics,
        tables,
        glie,
        observed_rewards: observed,
        episodes,
        wall_clock: clock.elapsed(),
    }
}
