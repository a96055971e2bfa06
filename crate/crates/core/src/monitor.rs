//! Monitor processes that mediate what the agent sees of the environment reward.
//!
//! All monitors here are truthful: the proxy reward is either the
//! environment reward or [`ProxyReward::Unobservable`].

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::env::Environment;
use crate::error::{Error, Result};
use crate::space::ProxyReward;

pub const DEFAULT_COST: f64 = 0.2;
pub const DEFAULT_TERMINAL_COST: f64 = 2.0;
pub const DEFAULT_EXPERT_BONUS: f64 = 0.001;
pub const DEFAULT_EXPERTS: usize = 4;
pub const DEFAULT_LEVELS: usize = 3;

/// Button monitor states.
pub const ON: usize = 0;
pub const OFF: usize = 1;
/// Ask monitor actions.
pub const ASK: usize = 0;
pub const NO_OP: usize = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MonitorKind {
    Full,
    Random,
    Ask,
    Button,
    Experts,
    LevelUp,
}

impl MonitorKind {
    pub const ALL: [MonitorKind; 6] = [
        MonitorKind::Full,
        MonitorKind::Random,
        MonitorKind::Ask,
        MonitorKind::Button,
        MonitorKind::Experts,
        MonitorKind::LevelUp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MonitorKind::Full => "full",
            MonitorKind::Random => "random",
            MonitorKind::Ask => "ask",
            MonitorKind::Button => "button",
            MonitorKind::Experts => "experts",
            MonitorKind::LevelUp => "level_up",
        }
    }

    /// Training budget multiplier relative to the environment default.
    pub fn step_multiplier(self) -> usize {
        match self {
            MonitorKind::Full | MonitorKind::Random => 1,
            MonitorKind::Ask => 3,
            MonitorKind::Button => 2,
            MonitorKind::Experts => 10,
            MonitorKind::LevelUp => 20,
        }
    }

    /// Stochastic monitor transition or initial state.
    pub fn is_stochastic(self) -> bool {
        matches!(self, MonitorKind::Button | MonitorKind::Experts | MonitorKind::LevelUp)
    }
}

impl FromStr for MonitorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        Ok(match norm.as_str() {
            "full" | "full_observ" | "full_observability" => MonitorKind::Full,
            "random" => MonitorKind::Random,
            "ask" => MonitorKind::Ask,
            "button" => MonitorKind::Button,
            "experts" | "random_experts" => MonitorKind::Experts,
            "level_up" | "levelup" => MonitorKind::LevelUp,
            _ => return Err(Error::UnknownMonitor(s.to_string())),
        })
    }
}

impl fmt::Display for MonitorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Tunable monitor parameters; unused fields are ignored by a given kind.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonitorParams {
    /// Number of experts or levels.
    pub n: Option<usize>,
    pub cost: f64,
    pub terminal_cost: f64,
    pub expert_bonus: f64,
    pub unobserved_prob: f64,
}

impl Default for MonitorParams {
    fn default() -> Self {
        MonitorParams {
            n: None,
            cost: DEFAULT_COST,
            terminal_cost: DEFAULT_TERMINAL_COST,
            expert_bonus: DEFAULT_EXPERT_BONUS,
            unobserved_prob: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Monitor {
    Full,
    Random { unobserved_prob: f64 },
    Ask { cost: f64 },
    Button {
        cost: f64,
        terminal_cost: f64,
        button_state: usize,
        button_action: usize,
    },
    Experts { n: usize, cost: f64, bonus: f64 },
    LevelUp { n: usize, cost: f64 },
}

/// Everything a monitor may condition on within one step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonitorInput {
    pub state: usize,
    pub action: usize,
    pub env_state: usize,
    pub env_action: usize,
    pub env_reward: f64,
    /// The environment transition of this step ended the episode.
    pub env_terminated: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonStep {
    pub next: usize,
    pub reward: f64,
    pub proxy: ProxyReward,
}

/// One branch of a monitor transition. `observe_prob` is the chance that the
/// environment reward is revealed on this branch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonOutcome {
    pub prob: f64,
    pub next: usize,
    pub reward: f64,
    pub observe_prob: f64,
}

impl Monitor {
    pub fn new(kind: MonitorKind, params: &MonitorParams, env: &Environment) -> Self {
        match kind {
            MonitorKind::Full => Monitor::Full,
            MonitorKind::Random => Monitor::Random {
                unobserved_prob: params.unobserved_prob,
            },
            MonitorKind::Ask => Monitor::Ask { cost: params.cost },
            MonitorKind::Button => Monitor::Button {
                cost: params.cost,
                terminal_cost: params.terminal_cost,
                button_state: env.button_state(),
                button_action: env.button_action(),
            },
            MonitorKind::Experts => Monitor::Experts {
                n: params.n.unwrap_or(DEFAULT_EXPERTS),
                cost: params.cost,
                bonus: params.expert_bonus,
            },
            MonitorKind::LevelUp => Monitor::LevelUp {
                n: params.n.unwrap_or(DEFAULT_LEVELS),
                cost: params.cost,
            },
        }
    }

    pub fn kind(&self) -> MonitorKind {
        match self {
            Monitor::Full => MonitorKind::Full,
            Monitor::Random { .. } => MonitorKind::Random,
            Monitor::Ask { .. } => MonitorKind::Ask,
            Monitor::Button { .. } => MonitorKind::Button,
            Monitor::Experts { .. } => MonitorKind::Experts,
            Monitor::LevelUp { .. } => MonitorKind::LevelUp,
        }
    }

    pub fn n_states(&self) -> usize {
        match *self {
            Monitor::Full | Monitor::Random { .. } | Monitor::Ask { .. } => 1,
            Monitor::Button { .. } => 2,
            Monitor::Experts { n, .. } | Monitor::LevelUp { n, .. } => n,
        }
    }

    pub fn n_actions(&self) -> usize {
        match *self {
            Monitor::Full | Monitor::Random { .. } | Monitor::Button { .. } => 1,
            Monitor::Ask { .. } => 2,
            Monitor::Experts { n, .. } => n,
            Monitor::LevelUp { n, .. } => n + 1,
        }
    }

    pub fn state_name(&self, state: usize) -> String {
        match self {
            Monitor::Full | Monitor::Random { .. } => "-".into(),
            Monitor::Ask { .. } => "OFF".into(),
            Monitor::Button { .. } => if state == ON { "ON" } else { "OFF" }.into(),
            Monitor::Experts { .. } | Monitor::LevelUp { .. } => (state + 1).to_string(),
        }
    }

    pub fn action_name(&self, action: usize) -> String {
        match *self {
            Monitor::Ask { .. } => if action == ASK { "ASK" } else { "NO-OP" }.into(),
            Monitor::Experts { .. } => (action + 1).to_string(),
            Monitor::LevelUp { n, .. } if action < n => (action + 1).to_string(),
            _ => "NO-OP".into(),
        }
    }

    pub fn initial_distribution(&self) -> Vec<(usize, f64)> {
        match *self {
            Monitor::Full | Monitor::Random { .. } | Monitor::Ask { .. } => vec![(0, 1.0)],
            Monitor::Button { .. } => vec![(ON, 0.5), (OFF, 0.5)],
            Monitor::Experts { n, .. } | Monitor::LevelUp { n, .. } => {
                (0..n).map(|s| (s, 1.0 / n as f64)).collect()
            }
        }
    }

    pub fn sample_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match self.n_states() {
            1 => 0,
            n => rng.gen_range(0..n),
        }
    }

    /// Probability that the environment reward is revealed in monitor state
    /// `state` under monitor action `action`, for a zero or nonzero reward.
    pub fn observe_prob(&self, state: usize, action: usize, nonzero_reward: bool) -> f64 {
        match *self {
            Monitor::Full => 1.0,
            Monitor::Random { unobserved_prob } => {
                if nonzero_reward {
                    1.0 - unobserved_prob
                } else {
                    1.0
                }
            }
            Monitor::Ask { .. } => f64::from(u8::from(action == ASK)),
            Monitor::Button { .. } => f64::from(u8::from(state == ON)),
            Monitor::Experts { .. } => f64::from(u8::from(action == state)),
            Monitor::LevelUp { n, .. } => f64::from(u8::from(state == n - 1)),
        }
    }

    fn reward(&self, input: &MonitorInput) -> f64 {
        match *self {
            Monitor::Full | Monitor::Random { .. } => 0.0,
            Monitor::Ask { cost } => {
                if input.action == ASK {
                    -cost
                } else {
                    0.0
                }
            }
            // The terminal charge replaces the per-step charge.
            Monitor::Button { cost, terminal_cost, .. } => match (input.state == ON, input.env_terminated) {
                (true, true) => -terminal_cost,
                (true, false) => -cost,
                (false, _) => 0.0,
            },
            Monitor::Experts { cost, bonus, .. } => {
                if input.action == input.state {
                    -cost
                } else {
                    bonus
                }
            }
            Monitor::LevelUp { n, cost } => {
                if input.action == n {
                    0.0
                } else {
                    -cost
                }
            }
        }
    }

    /// Next monitor state for the deterministic monitors.
    fn deterministic_next(&self, input: &MonitorInput) -> Option<usize> {
        match *self {
            Monitor::Full | Monitor::Random { .. } | Monitor::Ask { .. } => Some(0),
            Monitor::Button {
                button_state,
                button_action,
                ..
            } => {
                let pressed = input.env_state == button_state && input.env_action == button_action;
                Some(match (pressed, input.state) {
                    (true, ON) => OFF,
                    (true, _) => ON,
                    (false, s) => s,
                })
            }
            Monitor::LevelUp { n, .. } => Some(if input.action == n {
                input.state
            } else if input.action == input.state {
                (input.state + 1).min(n - 1)
            } else {
                0
            }),
            Monitor::Experts { .. } => None,
        }
    }

    pub fn step<R: Rng + ?Sized>(&self, input: &MonitorInput, rng: &mut R) -> MonStep {
        assert!(input.state < self.n_states(), "monitor state out of range");
        assert!(input.action < self.n_actions(), "monitor action out of range");
        let next = match self.deterministic_next(input) {
            Some(s) => s,
            None => rng.gen_range(0..self.n_states()),
        };
        let observed = match *self {
            Monitor::Random { unobserved_prob } => {
                input.env_reward == 0.0 || rng.gen::<f64>() >= unobserved_prob
            }
            _ => self.observe_prob(input.state, input.action, input.env_reward != 0.0) == 1.0,
        };
        MonStep {
            next,
            reward: self.reward(input),
            proxy: if observed {
                ProxyReward::Observed(input.env_reward)
            } else {
                ProxyReward::Unobservable
            },
        }
    }

    /// Exact distribution of [`Monitor::step`].
    pub fn outcomes(&self, input: &MonitorInput) -> Vec<MonOutcome> {
        let reward = self.reward(input);
        let observe_prob = self.observe_prob(input.state, input.action, input.env_reward != 0.0);
        match self.deterministic_next(input) {
            Some(next) => vec![MonOutcome {
                prob: 1.0,
                next,
                reward,
                observe_prob,
            }],
            None => {
                let n = self.n_states();
                (0..n)
                    .map(|next| MonOutcome {
                        prob: 1.0 / n as f64,
                        next,
                        reward,
                        observe_prob,
                    })
                    .collect()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{EnvKind, Environment};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn monitor(kind: MonitorKind) -> Monitor {
        Monitor::new(kind, &MonitorParams::default(), &Environment::shipped(EnvKind::Empty))
    }

    fn input(state: usize, action: usize, env_reward: f64) -> MonitorInput {
        MonitorInput {
            state,
            action,
            env_state: 7,
            env_action: 1,
            env_reward,
            env_terminated: false,
        }
    }

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(11)
    }

    #[test]
    fn full_is_identity() {
        let m = monitor(MonitorKind::Full);
        for r in [1.0, -10.0, 0.0] {
            let out = m.step(&input(0, 0, r), &mut rng());
            assert_eq!(out, MonStep { next: 0, reward: 0.0, proxy: ProxyReward::Observed(r) });
        }
    }

    #[test]
    fn random_hides_half_of_nonzero_rewards() {
        let m = monitor(MonitorKind::Random);
        let mut rng = rng();
        for _ in 0..1000 {
            assert_eq!(m.step(&input(0, 0, 0.0), &mut rng).proxy, ProxyReward::Observed(0.0));
        }
        let draws = 100_000;
        let seen = (0..draws)
            .filter(|_| m.step(&input(0, 0, 1.0), &mut rng).proxy.is_observed())
            .count();
        let rate = seen as f64 / draws as f64;
        assert!((rate - 0.5).abs() <= 0.005, "observation rate {rate}");
    }

    #[test]
    fn ask_formulas() {
        let m = monitor(MonitorKind::Ask);
        let mut rng = rng();
        let ask = m.step(&input(0, ASK, 0.1), &mut rng);
        assert_eq!((ask.next, ask.reward, ask.proxy), (0, -0.2, ProxyReward::Observed(0.1)));
        let noop = m.step(&input(0, NO_OP, 1.0), &mut rng);
        assert_eq!((noop.reward, noop.proxy), (0.0, ProxyReward::Unobservable));
        let zero = m.step(&input(0, ASK, 0.0), &mut rng);
        assert_eq!((zero.reward, zero.proxy), (-0.2, ProxyReward::Observed(0.0)));
    }

    #[test]
    fn button_toggles_and_charges() {
        let m = monitor(MonitorKind::Button);
        let mut rng = rng();
        let press = |state| MonitorInput {
            state,
            action: 0,
            env_state: 0,
            env_action: 0,
            env_reward: 0.0,
            env_terminated: false,
        };
        assert_eq!(m.step(&press(OFF), &mut rng).next, ON);
        assert_eq!(m.step(&press(ON), &mut rng).next, OFF);
        // pressing charges according to the pre-press state
        assert_eq!(m.step(&press(ON), &mut rng).reward, -0.2);
        assert_eq!(m.step(&press(OFF), &mut rng).reward, 0.0);

        let off = m.step(&input(OFF, 0, 1.0), &mut rng);
        assert_eq!((off.next, off.reward, off.proxy), (OFF, 0.0, ProxyReward::Unobservable));
        let on = m.step(&input(ON, 0, 1.0), &mut rng);
        assert_eq!((on.next, on.reward, on.proxy), (ON, -0.2, ProxyReward::Observed(1.0)));
        let terminal = MonitorInput { env_terminated: true, ..input(ON, 0, 1.0) };
        assert_eq!(m.step(&terminal, &mut rng).reward, -2.0);
        assert_eq!(m.initial_distribution(), vec![(ON, 0.5), (OFF, 0.5)]);
    }

    #[test]
    fn experts_match_or_collect_bonus() {
        let m = monitor(MonitorKind::Experts);
        let mut rng = rng();
        // indices are zero-based: expert 2 is index 1
        let hit = m.step(&input(1, 1, 0.1), &mut rng);
        assert_eq!((hit.reward, hit.proxy), (-0.2, ProxyReward::Observed(0.1)));
        let miss = m.step(&input(1, 2, 0.1), &mut rng);
        assert_eq!((miss.reward, miss.proxy), (0.001, ProxyReward::Unobservable));
    }

    #[test]
    fn experts_next_state_is_uniform() {
        let m = monitor(MonitorKind::Experts);
        let mut rng = rng();
        let draws = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..draws {
            counts[m.step(&input(0, 0, 0.0), &mut rng).next] += 1;
        }
        let expected = draws as f64 / 4.0;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // chi-square critical value, 3 degrees of freedom, alpha = 0.01
        assert!(chi2 < 11.345, "chi2 = {chi2}, counts {counts:?}");
    }

    #[test]
    fn level_up_transitions() {
        let m = monitor(MonitorKind::LevelUp);
        let mut rng = rng();
        let noop = 3;
        assert_eq!(m.n_actions(), 4);
        // level 1, action 1 -> level 2
        assert_eq!(m.step(&input(0, 0, 0.0), &mut rng).next, 1);
        // level 2, action 1 -> reset to level 1
        assert_eq!(m.step(&input(1, 0, 0.0), &mut rng).next, 0);
        // level n stays at n when levelled again
        assert_eq!(m.step(&input(2, 2, 0.0), &mut rng).next, 2);
        let top = m.step(&input(2, noop, 0.5), &mut rng);
        assert_eq!((top.next, top.reward, top.proxy), (2, 0.0, ProxyReward::Observed(0.5)));
        let low = m.step(&input(1, noop, 0.5), &mut rng);
        assert_eq!((low.next, low.reward, low.proxy), (1, 0.0, ProxyReward::Unobservable));
        assert_eq!(m.step(&input(1, 1, 0.0), &mut rng).reward, -0.2);
    }

    #[test]
    fn truthful_on_exhaustive_sweeps() {
        let mut rng = rng();
        for kind in MonitorKind::ALL {
            let m = monitor(kind);
            for state in 0..m.n_states() {
                for action in 0..m.n_actions() {
                    for r in [0.0, 0.1, 1.0, -0.1, -10.0] {
                        for terminated in [false, true] {
                            let inp = MonitorInput { env_terminated: terminated, ..input(state, action, r) };
                            for _ in 0..20 {
                                let out = m.step(&inp, &mut rng);
                                assert!(matches!(out.proxy, ProxyReward::Unobservable)
                                    || out.proxy == ProxyReward::Observed(r), "{kind}");
                                assert!(out.next < m.n_states());
                            }
                            let total: f64 = m.outcomes(&inp).iter().map(|o| o.prob).sum();
                            assert!((total - 1.0).abs() < 1e-12);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn every_monitor_reveals_every_reward_class_somewhere() {
        for kind in MonitorKind::ALL {
            let m = monitor(kind);
            let pairs = (0..m.n_states()).flat_map(|s| (0..m.n_actions()).map(move |a| (s, a)));
            let ok = pairs.into_iter().any(|(s, a)| {
                [false, true].iter().all(|&nz| {
                    let p = m.observe_prob(s, a, nz);
                    // the random monitor only guarantees positive probability
                    if kind == MonitorKind::Random { p > 0.0 } else { p == 1.0 }
                })
            });
            assert!(ok, "{kind} never reveals some reward class");
        }
    }

    #[test]
    fn observability_depends_only_on_reward_class() {
        for kind in MonitorKind::ALL {
            let m = monitor(kind);
            for s in 0..m.n_states() {
                for a in 0..m.n_actions() {
                    let a1 = m.outcomes(&input(s, a, 0.1));
                    let a2 = m.outcomes(&input(s, a, -10.0));
                    assert_eq!(a1[0].observe_prob, a2[0].observe_prob);
                }
            }
        }
    }

    #[test]
    fn names_round_trip() {
        for kind in MonitorKind::ALL {
            assert_eq!(kind.name().parse::<MonitorKind>().unwrap(), kind);
        }
        assert_eq!("Random Experts".parse::<MonitorKind>().unwrap(), MonitorKind::Experts);
    }
}
