//! Benchmark environments.

pub mod grid;
pub mod river;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
pub use grid::{parse_layout, CellKind, GridLayout};
pub use river::{parse_river_config, RiverSwimModel};

/// One branch of an environment transition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnvOutcome {
    pub prob: f64,
    pub next: usize,
    pub reward: f64,
    pub terminated: bool,
}

/// The shipped benchmarks. `Custom` is any other layout file.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EnvKind {
    Empty,
    Loop,
    Hazard,
    OneWay,
    Corridor,
    TwoRoom2x11,
    TwoRoom3x5,
    RiverSwim,
    Custom,
}

impl EnvKind {
    pub const SHIPPED: [EnvKind; 8] = [
        EnvKind::Empty,
        EnvKind::Loop,
        EnvKind::Hazard,
        EnvKind::OneWay,
        EnvKind::Corridor,
        EnvKind::TwoRoom2x11,
        EnvKind::TwoRoom3x5,
        EnvKind::RiverSwim,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EnvKind::Empty => "empty",
            EnvKind::Loop => "loop",
            EnvKind::Hazard => "hazard",
            EnvKind::OneWay => "one_way",
            EnvKind::Corridor => "corridor",
            EnvKind::TwoRoom2x11 => "two_room_2x11",
            EnvKind::TwoRoom3x5 => "two_room_3x5",
            EnvKind::RiverSwim => "river_swim",
            EnvKind::Custom => "custom",
        }
    }

    /// Shipped layout text, if any.
    pub fn layout_text(self) -> Option<&'static str> {
        Some(match self {
            EnvKind::Empty => include_str!("../../layouts/empty.txt"),
            EnvKind::Loop => include_str!("../../layouts/loop.txt"),
            EnvKind::Hazard => include_str!("../../layouts/hazard.txt"),
            EnvKind::OneWay => include_str!("../../layouts/one_way.txt"),
            EnvKind::Corridor => include_str!("../../layouts/corridor.txt"),
            EnvKind::TwoRoom2x11 => include_str!("../../layouts/two_room_2x11.txt"),
            EnvKind::TwoRoom3x5 => include_str!("../../layouts/two_room_3x5.txt"),
            EnvKind::RiverSwim => include_str!("../../layouts/river_swim.txt"),
            EnvKind::Custom => return None,
        })
    }

    /// Default training budget before the monitor multiplier.
    pub fn default_steps(self) -> usize {
        match self {
            EnvKind::Empty | EnvKind::Loop | EnvKind::TwoRoom2x11 => 5_000,
            EnvKind::Hazard | EnvKind::OneWay | EnvKind::TwoRoom3x5 => 10_000,
            EnvKind::Corridor => 30_000,
            EnvKind::RiverSwim => 20_000,
            EnvKind::Custom => 10_000,
        }
    }

    /// Stochastic transitions or start state.
    pub fn is_stochastic(self) -> bool {
        matches!(self, EnvKind::Hazard | EnvKind::TwoRoom3x5 | EnvKind::RiverSwim)
    }
}

impl FromStr for EnvKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        Ok(match norm.as_str() {
            "empty" => EnvKind::Empty,
            "loop" => EnvKind::Loop,
            "hazard" => EnvKind::Hazard,
            "one_way" | "oneway" => EnvKind::OneWay,
            "corridor" => EnvKind::Corridor,
            "two_room_2x11" => EnvKind::TwoRoom2x11,
            "two_room_3x5" => EnvKind::TwoRoom3x5,
            "river_swim" | "riverswim" | "river" => EnvKind::RiverSwim,
            "custom" => EnvKind::Custom,
            _ => return Err(Error::UnknownEnvironment(s.to_string())),
        })
    }
}

impl fmt::Display for EnvKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Dynamics {
    Grid(GridLayout),
    River(RiverSwimModel),
}

/// Exact transition tensor, expected reward matrix and termination mask.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactTensors {
    pub n_states: usize,
    pub n_actions: usize,
    /// `P[(s * n_actions + a) * n_states + s']`.
    pub transition: Vec<f64>,
    /// `R[s * n_actions + a]`, expected over outcomes.
    pub reward: Vec<f64>,
    /// Probability that acting ends the episode.
    pub terminal: Vec<f64>,
}

impl ExactTensors {
    pub fn p(&self, s: usize, a: usize, next: usize) -> f64 {
        self.transition[(s * self.n_actions + a) * self.n_states + next]
    }

    pub fn row(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.n_actions + a) * self.n_states;
        &self.transition[start..start + self.n_states]
    }
}

/// An environment model shared, immutably, by every run that uses it.
#[derive(Clone, Debug, PartialEq)]
pub struct Environment {
    pub kind: EnvKind,
    pub dynamics: Dynamics,
}

impl Environment {
    pub fn shipped(kind: EnvKind) -> Self {
        let text = kind
            .layout_text()
            .expect("custom environments need an explicit layout");
        Self::from_text(kind, text).expect("shipped layouts are valid")
    }

    pub fn from_text(kind: EnvKind, text: &str) -> Result<Self> {
        let dynamics = if river::is_river_config(text) {
            Dynamics::River(parse_river_config(text)?)
        } else {
            Dynamics::Grid(parse_layout(text)?)
        };
        Ok(Environment { kind, dynamics })
    }

    pub fn from_path(kind: EnvKind, path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(kind, &text)
    }

    pub fn n_states(&self) -> usize {
        match &self.dynamics {
            Dynamics::Grid(g) => g.n_states(),
            Dynamics::River(r) => r.n_states,
        }
    }

    pub fn n_actions(&self) -> usize {
        match &self.dynamics {
            Dynamics::Grid(_) => grid::N_ACTIONS,
            Dynamics::River(_) => river::N_ACTIONS,
        }
    }

    pub fn action_names(&self) -> &'static [&'static str] {
        match &self.dynamics {
            Dynamics::Grid(_) => &grid::ACTION_NAMES,
            Dynamics::River(_) => &river::ACTION_NAMES,
        }
    }

    /// The action that presses the monitor button.
    pub fn button_action(&self) -> usize {
        match &self.dynamics {
            Dynamics::Grid(_) => grid::LEFT,
            Dynamics::River(_) => river::LEFT,
        }
    }

    pub fn button_state(&self) -> usize {
        match &self.dynamics {
            Dynamics::Grid(g) => g.button(),
            Dynamics::River(_) => 0,
        }
    }

    pub fn max_episode_steps(&self) -> usize {
        match &self.dynamics {
            Dynamics::Grid(g) => g.max_episode_steps,
            Dynamics::River(r) => r.max_episode_steps,
        }
    }

    pub fn start_distribution(&self) -> Vec<(usize, f64)> {
        match &self.dynamics {
            Dynamics::Grid(g) => vec![(g.start(), 1.0)],
            Dynamics::River(r) => {
                let p = 1.0 / r.start.len() as f64;
                r.start.iter().map(|&s| (s, p)).collect()
            }
        }
    }

    pub fn sample_start<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match &self.dynamics {
            Dynamics::Grid(g) => g.start(),
            Dynamics::River(r) => r.start[rng.gen_range(0..r.start.len())],
        }
    }

    /// Samples `(next, reward, terminated)`. Never looks at step limits.
    pub fn step<R: Rng + ?Sized>(&self, state: usize, action: usize, rng: &mut R) -> (usize, f64, bool) {
        match &self.dynamics {
            Dynamics::Grid(g) => g.step(state, action, rng),
            Dynamics::River(r) => r.step(state, action, rng),
        }
    }

    pub fn outcomes(&self, state: usize, action: usize) -> Vec<EnvOutcome> {
        match &self.dynamics {
            Dynamics::Grid(g) => g.outcomes(state, action),
            Dynamics::River(r) => r.outcomes(state, action),
        }
    }

    /// Every reward value the environment can emit.
    pub fn reward_support(&self) -> Vec<f64> {
        let mut rewards: Vec<f64> = (0..self.n_states())
            .flat_map(|s| (0..self.n_actions()).map(move |a| (s, a)))
            .flat_map(|(s, a)| self.outcomes(s, a))
            .map(|o| o.reward)
            .collect();
        rewards.sort_by(f64::total_cmp);
        rewards.dedup();
        rewards
    }

    /// True when every (s, a) pays a single reward value.
    pub fn has_deterministic_rewards(&self) -> bool {
        (0..self.n_states()).all(|s| {
            (0..self.n_actions()).all(|a| {
                let out = self.outcomes(s, a);
                out.iter().all(|o| o.reward == out[0].reward)
            })
        })
    }

    pub fn exact_tensors(&self) -> ExactTensors {
        let (ns, na) = (self.n_states(), self.n_actions());
        let mut transition = vec![0.0; ns * na * ns];
        let mut reward = vec![0.0; ns * na];
        let mut terminal = vec![0.0; ns * na];
        for s in 0..ns {
            for a in 0..na {
                let sa = s * na + a;
                for o in self.outcomes(s, a) {
                    transition[sa * ns + o.next] += o.prob;
                    reward[sa] += o.prob * o.reward;
                    if o.terminated {
                        terminal[sa] += o.prob;
                    }
                }
            }
        }
        ExactTensors {
            n_states: ns,
            n_actions: na,
            transition,
            reward,
            terminal,
        }
    }

    pub fn state_label(&self, state: usize) -> String {
        match &self.dynamics {
            Dynamics::Grid(g) => {
                let (r, c) = g.coords(state);
                format!("({r},{c})")
            }
            Dynamics::River(_) => state.to_string(),
        }
    }
}
