//! Learned tables and their update rules.

use std::str::FromStr;

use rand::Rng;

use crate::env::EnvKind;
use crate::error::{Error, Result};
use crate::monitor::MonitorKind;
use crate::space::{JointSpace, ProxyReward};

pub const DEFAULT_GAMMA: f64 = 0.99;

/// A scalar schedule over training steps `t` in `[0, total]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Schedule {
    Constant(f64),
    Linear { start: f64, end: f64 },
    /// `first` until the fraction `switch` of training has elapsed, then `second`.
    Step { first: f64, second: f64, switch: f64 },
}

impl Schedule {
    pub fn at(&self, t: usize, total: usize) -> f64 {
        match *self {
            Schedule::Constant(v) => v,
            Schedule::Linear { start, end } => {
                if total == 0 {
                    return end;
                }
                let frac = (t.min(total) as f64) / total as f64;
                (1.0 - frac) * start + frac * end
            }
            Schedule::Step { first, second, switch } => {
                if (t as f64) < switch * total as f64 {
                    first
                } else {
                    second
                }
            }
        }
    }
}

/// Parses `0.5`, `const:0.5`, `linear:1.0:0.0`, `step:0.1:0.01` or
/// `step:0.1:0.01:0.25` (the last field is the switch fraction, default 0.5).
impl FromStr for Schedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("bad schedule `{s}`"));
        let num = |x: &str| x.trim().parse::<f64>().map_err(|_| bad());
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            [v] => Ok(Schedule::Constant(num(v)?)),
            ["const", v] => Ok(Schedule::Constant(num(v)?)),
            ["linear", a, b] => Ok(Schedule::Linear {
                start: num(a)?,
                end: num(b)?,
            }),
            ["step", a, b] => Ok(Schedule::Step {
                first: num(a)?,
                second: num(b)?,
                switch: 0.5,
            }),
            ["step", a, b, f] => Ok(Schedule::Step {
                first: num(a)?,
                second: num(b)?,
                switch: num(f)?,
            }),
            _ => Err(bad()),
        }
    }
}

impl std::fmt::Display for Schedule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Schedule::Constant(v) => write!(f, "const:{v}"),
            Schedule::Linear { start, end } => write!(f, "linear:{start}:{end}"),
            Schedule::Step { first, second, switch } => write!(f, "step:{first}:{second}:{switch}"),
        }
    }
}

/// Exploration rate: 1 at the first step, 0 at the last.
pub fn epsilon_at(t: usize, total: usize) -> f64 {
    Schedule::Linear { start: 1.0, end: 0.0 }.at(t, total)
}

/// Learning-rate rule for an environment/monitor combination.
pub fn alpha_schedule(env: EnvKind, monitor: MonitorKind) -> Schedule {
    let base = match env {
        EnvKind::Hazard | EnvKind::TwoRoom3x5 => Schedule::Constant(0.5),
        EnvKind::RiverSwim => Schedule::Linear { start: 0.5, end: 0.05 },
        _ => Schedule::Constant(1.0),
    };
    if monitor != MonitorKind::Experts {
        return base;
    }
    let start = match base {
        Schedule::Constant(v) => v,
        Schedule::Linear { start, .. } => start,
        Schedule::Step { first, .. } => first,
    };
    let end = if env == EnvKind::RiverSwim { 0.05 } else { 0.1 };
    Schedule::Linear { start, end }
}

pub fn alpha_at(t: usize, env: EnvKind, monitor: MonitorKind, total: usize) -> f64 {
    alpha_schedule(env, monitor).at(t, total)
}

/// Successor tables for every goal pair, stored pair-major: the goal entries
/// of one state-action pair are contiguous.
///
/// Entry `(s, a)` of goal `g` lives at `((s * n_actions) + a) * n_goals + g`.
#[derive(Clone, Debug, PartialEq)]
pub struct SuccessorTables {
    n_actions: usize,
    n_goals: usize,
    values: Vec<f64>,
    scratch: Vec<f64>,
}

impl SuccessorTables {
    pub fn new(space: &JointSpace, init: f64) -> Self {
        let n_goals = space.n_pairs();
        SuccessorTables {
            n_actions: space.n_actions(),
            n_goals,
            values: vec![init; n_goals * n_goals],
            scratch: vec![0.0; n_goals],
        }
    }

    pub fn n_goals(&self) -> usize {
        self.n_goals
    }

    #[inline]
    pub fn get(&self, goal: usize, state: usize, action: usize) -> f64 {
        self.values[(state * self.n_actions + action) * self.n_goals + goal]
    }

    #[inline]
    pub fn set(&mut self, goal: usize, state: usize, action: usize, value: f64) {
        self.values[(state * self.n_actions + action) * self.n_goals + goal] = value;
    }

    /// The whole table of one goal, in (state, action) order.
    pub fn goal_table(&self, goal: usize) -> Vec<f64> {
        self.values.iter().skip(goal).step_by(self.n_goals).copied().collect()
    }

    /// Updates a single goal's table for one transition.
    pub fn update_goal(&mut self, goal: usize, state: usize, action: usize, next: usize, alpha: f64, gamma: f64) {
        let pair = state * self.n_actions + action;
        let best = (0..self.n_actions)
            .map(|a| self.get(goal, next, a))
            .fold(f64::NEG_INFINITY, f64::max);
        let indicator = f64::from(u8::from(pair == goal));
        let old = self.get(goal, state, action);
        self.set(goal, state, action, (1.0 - alpha) * old + alpha * (indicator + gamma * best));
    }

    /// Updates every goal's table for one transition.
    pub fn update_all(&mut self, state: usize, action: usize, next: usize, alpha: f64, gamma: f64) {
        let g = self.n_goals;
        let pair = state * self.n_actions + action;
        let next_base = next * self.n_actions * g;
        self.scratch.copy_from_slice(&self.values[next_base..next_base + g]);
        for a in 1..self.n_actions {
            let row = &self.values[next_base + a * g..next_base + (a + 1) * g];
            for (best, &v) in self.scratch.iter_mut().zip(row) {
                *best = best.max(v);
            }
        }
        let entry = &mut self.values[pair * g..(pair + 1) * g];
        for (v, &best) in entry.iter_mut().zip(&self.scratch) {
            *v = (1.0 - alpha) * *v + alpha * gamma * best;
        }
        entry[pair] += alpha;
    }
}

/// Everything the agent learns during one run.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentTables {
    pub space: JointSpace,
    /// N(s, a) over joint pairs.
    pub visits: Vec<u64>,
    /// Nʳ(sᵉ, aᵉ): observed rewards per environment pair.
    pub reward_counts: Vec<u64>,
    /// R̂(sᵉ, aᵉ): running mean of observed rewards.
    pub reward_model: Vec<f64>,
    pub q: Vec<f64>,
    pub successor: Option<SuccessorTables>,
    /// Q̂_c for the Q-Counts baseline.
    pub count_values: Option<Vec<f64>>,
}

impl AgentTables {
    /// Fresh tables. The reward model is drawn uniformly from [-0.1, 0.1].
    pub fn new<R: Rng + ?Sized>(space: JointSpace, q_init: f64, rng: &mut R) -> Self {
        let env_pairs = space.env_states * space.env_actions;
        AgentTables {
            space,
            visits: vec![0; space.n_pairs()],
            reward_counts: vec![0; env_pairs],
            reward_model: (0..env_pairs).map(|_| rng.gen_range(-0.1..=0.1)).collect(),
            q: vec![q_init; space.n_pairs()],
            successor: None,
            count_values: None,
        }
    }

    pub fn with_successor(mut self, init: f64) -> Self {
        self.successor = Some(SuccessorTables::new(&self.space, init));
        self
    }

    pub fn with_count_values(mut self) -> Self {
        self.count_values = Some(vec![0.0; self.space.n_pairs()]);
        self
    }

    #[inline]
    pub fn pair(&self, state: usize, action: usize) -> usize {
        self.space.pair(state, action)
    }

    #[inline]
    pub fn q_row(&self, state: usize) -> &[f64] {
        let n = self.space.n_actions();
        &self.q[state * n..(state + 1) * n]
    }

    #[inline]
    pub fn visit_row(&self, state: usize) -> &[u64] {
        let n = self.space.n_actions();
        &self.visits[state * n..(state + 1) * n]
    }

    pub fn count_value_row(&self, state: usize) -> Option<&[f64]> {
        let n = self.space.n_actions();
        self.count_values.as_deref().map(|c| &c[state * n..(state + 1) * n])
    }

    pub fn record_visit(&mut self, state: usize, action: usize) {
        let p = self.pair(state, action);
        self.visits[p] += 1;
    }

    pub fn min_visits(&self) -> u64 {
        self.visits.iter().copied().min().unwrap_or(0)
    }

    pub fn total_visits(&self) -> u64 {
        self.visits.iter().sum()
    }

    /// Running mean of observed rewards; unobservable rewards change nothing.
    pub fn reward_model_update(&mut self, env_state: usize, env_action: usize, proxy: ProxyReward) {
        let ProxyReward::Observed(r) = proxy else {
            return;
        };
        let i = env_state * self.space.env_actions + env_action;
        self.reward_counts[i] += 1;
        let n = self.reward_counts[i];
        // Incremental form of ((n - 1) R + r) / n; exact when every sample is equal.
        self.reward_model[i] = if n == 1 {
            r
        } else {
            self.reward_model[i] + (r - self.reward_model[i]) / n as f64
        };
    }

    pub fn reward_estimate(&self, env_state: usize, env_action: usize) -> f64 {
        self.reward_model[env_state * self.space.env_actions + env_action]
    }

    /// Q-learning step with target `R̂(sᵉ, aᵉ) + rᵐ + bonus + γ max Q̂(next, ·)`.
    /// `next = None` means no bootstrap (episode terminated).
    pub fn q_update(
        &mut self,
        state: usize,
        action: usize,
        mon_reward: f64,
        bonus: f64,
        next: Option<usize>,
        alpha: f64,
        gamma: f64,
    ) {
        let js = self.space.state_from_flat(state);
        let ja = self.space.action_from_flat(action);
        let reward = self.reward_estimate(js.env.0, ja.env.0) + mon_reward + bonus;
        let future = next.map_or(0.0, |n| {
            self.q_row(n).iter().copied().fold(f64::NEG_INFINITY, f64::max)
        });
        let p = self.pair(state, action);
        self.q[p] = (1.0 - alpha) * self.q[p] + alpha * (reward + gamma * future);
    }

    /// Successor update for all goals. `next` is the post-reset start state
    /// when the transition terminated.
    pub fn s_update(&mut self, state: usize, action: usize, next: usize, alpha: f64, gamma: f64) {
        if let Some(s) = self.successor.as_mut() {
            s.update_all(state, action, next, alpha, gamma);
        }
    }

    /// Q-Counts step: target `N(s, a) + γ min Q̂_c(next, ·)`.
    pub fn q_count_update(&mut self, state: usize, action: usize, next: usize, alpha: f64, gamma: f64) {
        let n_actions = self.space.n_actions();
        let p = self.pair(state, action);
        let count = self.visits[p] as f64;
        let Some(c) = self.count_values.as_mut() else {
            return;
        };
        let best = c[next * n_actions..(next + 1) * n_actions]
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        c[p] = (1.0 - alpha) * c[p] + alpha * (count + gamma * best);
    }
}
