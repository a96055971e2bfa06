//! The composed environment + monitor process.

use rand::Rng;

use crate::env::Environment;
use crate::monitor::{Monitor, MonitorInput};
use crate::space::{EnvState, JointAction, JointSpace, JointState, MonState, TransitionRecord};

/// An environment paired with a monitor. Immutable once built.
#[derive(Clone, Debug)]
pub struct MonMdp {
    pub env: Environment,
    pub monitor: Monitor,
    pub space: JointSpace,
}

/// One branch of a joint transition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JointOutcome {
    pub prob: f64,
    pub next: usize,
    pub env_reward: f64,
    pub mon_reward: f64,
    pub terminated: bool,
    /// Chance the environment reward is revealed on this branch.
    pub observe_prob: f64,
}

impl MonMdp {
    pub fn new(env: Environment, monitor: Monitor) -> Self {
        let space = JointSpace::new(env.n_states(), env.n_actions(), monitor.n_states(), monitor.n_actions());
        MonMdp { env, monitor, space }
    }

    pub fn enumerate_joint_space(&self) -> (Vec<JointState>, Vec<JointAction>) {
        (self.space.states(), self.space.actions())
    }

    /// Starts an episode: environment start state, then the monitor's initial state.
    pub fn reset<R: Rng + ?Sized>(&self, rng: &mut R) -> JointState {
        let env = self.env.sample_start(rng);
        let mon = self.monitor.sample_initial(rng);
        self.space.state(EnvState(env), MonState(mon))
    }

    pub fn start_distribution(&self) -> Vec<(usize, f64)> {
        let mons = self.monitor.initial_distribution();
        self.env
            .start_distribution()
            .into_iter()
            .flat_map(|(e, pe)| mons.iter().map(move |&(m, pm)| (e * self.space.mon_states + m, pe * pm)))
            .collect()
    }

    /// One joint step: the environment moves first, then the monitor reacts
    /// to the pre-transition environment state, action and reward.
    /// `truncated` is always false here; step limits belong to the caller.
    pub fn joint_step<R: Rng + ?Sized>(&self, state: JointState, action: JointAction, rng: &mut R) -> TransitionRecord {
        let (env_next, env_reward, terminated) = self.env.step(state.env.0, action.env.0, rng);
        let mon = self.monitor.step(
            &MonitorInput {
                state: state.mon.0,
                action: action.mon.0,
                env_state: state.env.0,
                env_action: action.env.0,
                env_reward,
                env_terminated: terminated,
            },
            rng,
        );
        TransitionRecord {
            state,
            action,
            env_reward,
            mon_reward: mon.reward,
            proxy: mon.proxy,
            next: self.space.state(EnvState(env_next), MonState(mon.next)),
            terminated,
            truncated: false,
        }
    }

    /// Exact outcome list for a flat (state, action) pair. Branches with the
    /// same next state, rewards and termination are merged.
    pub fn joint_outcomes(&self, state: usize, action: usize) -> Vec<JointOutcome> {
        let s = self.space.state_from_flat(state);
        let a = self.space.action_from_flat(action);
        let mut out: Vec<JointOutcome> = Vec::new();
        for e in self.env.outcomes(s.env.0, a.env.0) {
            let input = MonitorInput {
                state: s.mon.0,
                action: a.mon.0,
                env_state: s.env.0,
                env_action: a.env.0,
                env_reward: e.reward,
                env_terminated: e.terminated,
            };
            for m in self.monitor.outcomes(&input) {
                let o = JointOutcome {
                    prob: e.prob * m.prob,
                    next: e.next * self.space.mon_states + m.next,
                    env_reward: e.reward,
                    mon_reward: m.reward,
                    terminated: e.terminated,
                    observe_prob: m.observe_prob,
                };
                match out.iter_mut().find(|x| {
                    x.next == o.next
                        && x.env_reward == o.env_reward
                        && x.mon_reward == o.mon_reward
                        && x.terminated == o.terminated
                        && x.observe_prob == o.observe_prob
                }) {
                    Some(x) => x.prob += o.prob,
                    None => out.push(o),
                }
            }
        }
        out
    }
}
