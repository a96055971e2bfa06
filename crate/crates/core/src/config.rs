//! Run configuration: a flat TOML key/value file resolved against defaults.
//!
//! ```toml
//! env = "empty"
//! monitor = "button"
//! policy = "directed"
//! seed = 3
//! ```
//!
//! Unset keys take their defaults; unknown keys are rejected.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::agent::{alpha_schedule, Schedule, DEFAULT_GAMMA};
use crate::env::{EnvKind, Environment};
use crate::error::{Error, Result};
use crate::mdp::MonMdp;
use crate::monitor::{Monitor, MonitorKind, MonitorParams};
use crate::policy::{PolicyKind, DEFAULT_BETA_BAR};

pub const DEFAULT_EVAL_POINTS: usize = 1000;

/// What the Q-target bootstraps from after a terminating transition.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TerminalBootstrap {
    #[default]
    Zero,
    StartState,
}

impl FromStr for TerminalBootstrap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "zero" => Ok(TerminalBootstrap::Zero),
            "start_state" => Ok(TerminalBootstrap::StartState),
            other => Err(Error::Config(format!("terminal_bootstrap must be zero or start_state, got `{other}`"))),
        }
    }
}

impl fmt::Display for TerminalBootstrap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TerminalBootstrap::Zero => "zero",
            TerminalBootstrap::StartState => "start_state",
        })
    }
}

/// The file format: every key optional.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub env: Option<String>,
    pub layout: Option<PathBuf>,
    pub monitor: Option<String>,
    pub monitor_n: Option<usize>,
    pub monitor_cost: Option<f64>,
    pub monitor_terminal_cost: Option<f64>,
    pub monitor_expert_bonus: Option<f64>,
    pub monitor_unobserved_prob: Option<f64>,
    pub policy: Option<String>,
    pub beta_bar: Option<f64>,
    pub gamma: Option<f64>,
    pub q_init: Option<f64>,
    pub s_init: Option<f64>,
    pub epsilon: Option<String>,
    pub alpha: Option<String>,
    pub total_steps: Option<usize>,
    pub eval_points: Option<usize>,
    pub eval_episodes: Option<usize>,
    pub terminal_bootstrap: Option<String>,
    pub seed: Option<u64>,
    pub dump_successor: Option<bool>,
    pub record_glie: Option<bool>,
}

/// A fully resolved run configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub env: EnvKind,
    pub layout: Option<PathBuf>,
    pub monitor: MonitorKind,
    pub monitor_params: MonitorParams,
    pub policy: PolicyKind,
    pub beta_bar: f64,
    pub gamma: f64,
    pub q_init: f64,
    pub s_init: f64,
    pub epsilon: Schedule,
    pub alpha: Schedule,
    pub total_steps: usize,
    pub eval_points: usize,
    pub eval_episodes: usize,
    pub terminal_bootstrap: TerminalBootstrap,
    pub seed: u64,
    pub dump_successor: bool,
    pub record_glie: bool,
}

pub fn default_q_init(env: EnvKind, policy: PolicyKind) -> f64 {
    match (policy, env) {
        (PolicyKind::Directed, _) => -10.0,
        (_, EnvKind::RiverSwim) => 50.0,
        _ => 1.0,
    }
}

pub fn default_total_steps(env: EnvKind, monitor: MonitorKind) -> usize {
    env.default_steps() * monitor.step_multiplier()
}

pub fn default_eval_episodes(env: EnvKind, monitor: MonitorKind) -> usize {
    let noisy_env = matches!(env, EnvKind::Hazard | EnvKind::TwoRoom3x5 | EnvKind::RiverSwim);
    let noisy_monitor = matches!(monitor, MonitorKind::Button | MonitorKind::Experts | MonitorKind::LevelUp);
    if noisy_env || noisy_monitor {
        100
    } else {
        1
    }
}

impl RunConfig {
    /// Defaults for an environment, monitor and policy.
    pub fn new(env: EnvKind, monitor: MonitorKind, policy: PolicyKind) -> Self {
        RunConfig {
            env,
            layout: None,
            monitor,
            monitor_params: MonitorParams::default(),
            policy,
            beta_bar: DEFAULT_BETA_BAR,
            gamma: DEFAULT_GAMMA,
            q_init: default_q_init(env, policy),
            s_init: 1.0,
            epsilon: Schedule::Linear { start: 1.0, end: 0.0 },
            alpha: alpha_schedule(env, monitor),
            total_steps: default_total_steps(env, monitor),
            eval_points: DEFAULT_EVAL_POINTS,
            eval_episodes: default_eval_episodes(env, monitor),
            terminal_bootstrap: TerminalBootstrap::Zero,
            seed: 0,
            dump_successor: false,
            record_glie: policy == PolicyKind::Directed,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Resolves a parsed file. Relative layout paths are taken relative to `base`.
    pub fn from_file(file: &ConfigFile, base: Option<&Path>) -> Result<Self> {
        let env: EnvKind = file.env.as_deref().unwrap_or("empty").parse()?;
        let monitor: MonitorKind = file.monitor.as_deref().unwrap_or("full").parse()?;
        let policy: PolicyKind = file.policy.as_deref().unwrap_or("directed").parse()?;
        let mut c = RunConfig::new(env, monitor, policy);
        c.layout = file.layout.as_ref().map(|p| match base {
            Some(b) if p.is_relative() => b.join(p),
            _ => p.clone(),
        });
        let mp = &mut c.monitor_params;
        mp.n = file.monitor_n.or(mp.n);
        mp.cost = file.monitor_cost.unwrap_or(mp.cost);
        mp.terminal_cost = file.monitor_terminal_cost.unwrap_or(mp.terminal_cost);
        mp.expert_bonus = file.monitor_expert_bonus.unwrap_or(mp.expert_bonus);
        mp.unobserved_prob = file.monitor_unobserved_prob.unwrap_or(mp.unobserved_prob);
        c.beta_bar = file.beta_bar.unwrap_or(c.beta_bar);
        c.gamma = file.gamma.unwrap_or(c.gamma);
        c.q_init = file.q_init.unwrap_or(c.q_init);
        c.s_init = file.s_init.unwrap_or(c.s_init);
        if let Some(e) = &file.epsilon {
            c.epsilon = e.parse()?;
        }
        if let Some(a) = &file.alpha {
            c.alpha = a.parse()?;
        }
        c.total_steps = file.total_steps.unwrap_or(c.total_steps);
        c.eval_points = file.eval_points.unwrap_or(c.eval_points);
        c.eval_episodes = file.eval_episodes.unwrap_or(c.eval_episodes);
        if let Some(t) = &file.terminal_bootstrap {
            c.terminal_bootstrap = t.parse()?;
        }
        c.seed = file.seed.unwrap_or(c.seed);
        c.dump_successor = file.dump_successor.unwrap_or(c.dump_successor);
        c.record_glie = file.record_glie.unwrap_or(c.record_glie);
        c.validate()?;
        Ok(c)
    }

    pub fn parse(text: &str, base: Option<&Path>) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_file(&file, base)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path.parent())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.env == EnvKind::Custom && self.layout.is_none() {
            return bad("env = \"custom\" needs a layout path".into());
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return bad(format!("gamma must lie in [0, 1), got {}", self.gamma));
        }
        if !(self.beta_bar >= 0.0) {
            return bad(format!("beta_bar must be non-negative, got {}", self.beta_bar));
        }
        if self.total_steps == 0 || self.eval_points == 0 || self.eval_episodes == 0 {
            return bad("total_steps, eval_points and eval_episodes must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.monitor_params.unobserved_prob) {
            return bad("monitor_unobserved_prob must lie in [0, 1]".into());
        }
        if self.monitor_params.n == Some(0) {
            return bad("monitor_n must be positive".into());
        }
        for (name, v) in [("q_init", self.q_init), ("s_init", self.s_init)] {
            if !v.is_finite() {
                return bad(format!("{name} must be finite"));
            }
        }
        for (name, s) in [("epsilon", self.epsilon), ("alpha", self.alpha)] {
            let (lo, hi) = match s {
                Schedule::Constant(v) => (v, v),
                Schedule::Linear { start, end } => (start.min(end), start.max(end)),
                Schedule::Step { first, second, .. } => (first.min(second), first.max(second)),
            };
            if !(lo >= 0.0 && hi <= 1.0) {
                return bad(format!("{name} schedule must stay within [0, 1]"));
            }
        }
        Ok(())
    }

    pub fn environment(&self) -> Result<Environment> {
        match &self.layout {
            Some(p) => Environment::from_path(self.env, p),
            None => Ok(Environment::shipped(self.env)),
        }
    }

    pub fn build_mdp(&self) -> Result<MonMdp> {
        let env = self.environment()?;
        let monitor = Monitor::new(self.monitor, &self.monitor_params, &env);
        Ok(MonMdp::new(env, monitor))
    }

    /// Training steps of test point `k` (one-based): `⌈k T / P⌉`.
    pub fn test_step(&self, k: usize) -> usize {
        (k * self.total_steps).div_ceil(self.eval_points)
    }

    /// The resolved configuration in file form.
    pub fn to_file(&self) -> ConfigFile {
        let mp = &self.monitor_params;
        ConfigFile {
            env: Some(self.env.name().into()),
            layout: self.layout.clone(),
            monitor: Some(self.monitor.name().into()),
            monitor_n: mp.n,
            monitor_cost: Some(mp.cost),
            monitor_terminal_cost: Some(mp.terminal_cost),
            monitor_expert_bonus: Some(mp.expert_bonus),
            monitor_unobserved_prob: Some(mp.unobserved_prob),
            policy: Some(self.policy.name().into()),
            beta_bar: Some(self.beta_bar),
            gamma: Some(self.gamma),
            q_init: Some(self.q_init),
            s_init: Some(self.s_init),
            epsilon: Some(self.epsilon.to_string()),
            alpha: Some(self.alpha.to_string()),
            total_steps: Some(self.total_steps),
            eval_points: Some(self.eval_points),
            eval_episodes: Some(self.eval_episodes),
            terminal_bootstrap: Some(self.terminal_bootstrap.to_string()),
            seed: Some(self.seed),
            dump_successor: Some(self.dump_successor),
            record_glie: Some(self.record_glie),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_file()).expect("config serializes")
    }
}
