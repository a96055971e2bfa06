//! Behaviour policies: directed exploration through successor functions and
//! the count/optimism baselines.
//!
//! All greedy choices during training break ties uniformly at random;
//! [`argmax_first`] is the deterministic variant used for evaluation.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::agent::AgentTables;
use crate::error::{Error, Result};

pub const DEFAULT_BETA_BAR: f64 = 0.01;
pub const INTRINSIC_SCALE: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PolicyKind {
    Directed,
    Optimistic,
    Naive,
    Ucb,
    QCounts,
    Intrinsic,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 6] = [
        PolicyKind::Directed,
        PolicyKind::Optimistic,
        PolicyKind::Naive,
        PolicyKind::Ucb,
        PolicyKind::QCounts,
        PolicyKind::Intrinsic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Directed => "directed",
            PolicyKind::Optimistic => "optimistic",
            PolicyKind::Naive => "naive",
            PolicyKind::Ucb => "ucb",
            PolicyKind::QCounts => "qcounts",
            PolicyKind::Intrinsic => "intrinsic",
        }
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace(['-', '_', ' '], "");
        Ok(match norm.as_str() {
            "directed" | "ours" => PolicyKind::Directed,
            "optimistic" | "optimism" => PolicyKind::Optimistic,
            "naive" => PolicyKind::Naive,
            "ucb" => PolicyKind::Ucb,
            "qcounts" => PolicyKind::QCounts,
            "intrinsic" => PolicyKind::Intrinsic,
            _ => return Err(Error::UnknownPolicy(s.to_string())),
        })
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A target joint state-action pair, as flat indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Goal {
    pub state: usize,
    pub action: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExploreDecision {
    /// `ln t / N(goal)`; infinite while the goal is unvisited.
    pub beta: f64,
    pub exploring: bool,
    pub goal: Goal,
}

/// First index of the maximum; NaN never wins.
pub fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Index of the maximum, ties broken uniformly at random.
pub fn argmax_random<R: Rng + ?Sized>(values: &[f64], rng: &mut R) -> usize {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ties = values.iter().filter(|&&v| v == max).count();
    if ties <= 1 {
        return argmax_first(values);
    }
    let pick = rng.gen_range(0..ties);
    values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v == max)
        .nth(pick)
        .map(|(i, _)| i)
        .expect("pick is below the tie count")
}

/// With probability `epsilon` a uniform action, otherwise a random-tie argmax.
pub fn epsilon_greedy<R: Rng + ?Sized>(values: &[f64], epsilon: f64, rng: &mut R) -> usize {
    if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
        rng.gen_range(0..values.len())
    } else {
        argmax_random(values, rng)
    }
}

/// Least-visited pair; ties go to the smallest (state, action) flat order.
pub fn select_goal(visits: &[u64], n_actions: usize) -> Goal {
    let mut best = 0;
    for (i, &n) in visits.iter().enumerate().skip(1) {
        if n < visits[best] {
            best = i;
        }
    }
    Goal {
        state: best / n_actions,
        action: best % n_actions,
    }
}

/// `ln t / count` with `t` one-based; infinite for an unvisited goal.
pub fn beta(t: u64, count: u64) -> f64 {
    if count == 0 {
        f64::INFINITY
    } else {
        (t as f64).ln() / count as f64
    }
}

/// Directed exploration-exploitation step at one-based time `t`.
pub fn directed_action<R: Rng + ?Sized>(
    tables: &AgentTables,
    t: u64,
    state: usize,
    beta_bar: f64,
    epsilon: f64,
    rng: &mut R,
) -> (usize, ExploreDecision) {
    assert!(t >= 1, "time is one-based");
    let n_actions = tables.space.n_actions();
    let goal = select_goal(&tables.visits, n_actions);
    let beta = beta(t, tables.visits[goal.state * n_actions + goal.action]);
    let exploring = beta > beta_bar;
    let action = if exploring {
        let successor = tables
            .successor
            .as_ref()
            .expect("directed exploration needs successor tables");
        let goal_pair = goal.state * n_actions + goal.action;
        let values: Vec<f64> = (0..n_actions).map(|a| successor.get(goal_pair, state, a)).collect();
        epsilon_greedy(&values, epsilon, rng)
    } else {
        argmax_random(tables.q_row(state), rng)
    };
    (action, ExploreDecision { beta, exploring, goal })
}

pub fn optimistic_action<R: Rng + ?Sized>(q_row: &[f64], rng: &mut R) -> usize {
    argmax_random(q_row, rng)
}

pub fn naive_action<R: Rng + ?Sized>(q_row: &[f64], epsilon: f64, rng: &mut R) -> usize {
    epsilon_greedy(q_row, epsilon, rng)
}

/// `sqrt(2 ln total / count)`, infinite for non-positive counts. A total
/// below one would make the logarithm negative; it is clamped to zero.
pub fn ucb_bonus(total: f64, count: f64) -> f64 {
    if count <= 0.0 || total <= 0.0 {
        f64::INFINITY
    } else {
        (2.0 * total.ln().max(0.0) / count).sqrt()
    }
}

fn with_bonus(q_row: &[f64], counts: impl Iterator<Item = f64> + Clone) -> Vec<f64> {
    let total: f64 = counts.clone().sum();
    q_row.iter().zip(counts).map(|(&q, n)| q + ucb_bonus(total, n)).collect()
}

pub fn ucb_action<R: Rng + ?Sized>(q_row: &[f64], visit_row: &[u64], epsilon: f64, rng: &mut R) -> usize {
    let values = with_bonus(q_row, visit_row.iter().map(|&n| n as f64));
    epsilon_greedy(&values, epsilon, rng)
}

pub fn qcounts_action<R: Rng + ?Sized>(q_row: &[f64], count_row: &[f64], epsilon: f64, rng: &mut R) -> usize {
    let values = with_bonus(q_row, count_row.iter().copied());
    epsilon_greedy(&values, epsilon, rng)
}

/// Intrinsic reward added to the Q target. A zero count is treated as one.
pub fn intrinsic_bonus(count: u64) -> f64 {
    INTRINSIC_SCALE / (count.max(1) as f64).sqrt()
}
