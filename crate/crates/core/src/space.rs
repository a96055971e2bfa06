//! Joint state and action spaces of a monitored MDP.
//!
//! Every table the agent keeps is indexed by *flat* joint indices. A joint
//! state `(env, mon)` maps to `env * |S_mon| + mon`, and joint actions use the
//! same layout over `(|A_env|, |A_mon|)`.

use std::fmt;

macro_rules! index_newtype {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub usize);

        impl $name {
            #[inline]
            pub fn index(self) -> usize {
                self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                self.0.fmt(f)
            }
        }
    };
}

index_newtype!(
    /// Dense index into the environment's state set.
    EnvState
);
index_newtype!(
    /// Dense index into the environment's action set.
    EnvAction
);
index_newtype!(
    /// Dense index into the monitor's state set.
    MonState
);
index_newtype!(
    /// Dense index into the monitor's action set.
    MonAction
);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct JointState {
    pub env: EnvState,
    pub mon: MonState,
    pub flat: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct JointAction {
    pub env: EnvAction,
    pub mon: MonAction,
    pub flat: usize,
}

/// Sizes of the four factor spaces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct JointSpace {
    pub env_states: usize,
    pub env_actions: usize,
    pub mon_states: usize,
    pub mon_actions: usize,
}

impl JointSpace {
    pub fn new(env_states: usize, env_actions: usize, mon_states: usize, mon_actions: usize) -> Self {
        assert!(
            env_states > 0 && env_actions > 0 && mon_states > 0 && mon_actions > 0,
            "every factor space needs at least one element"
        );
        JointSpace {
            env_states,
            env_actions,
            mon_states,
            mon_actions,
        }
    }

    #[inline]
    pub fn n_states(&self) -> usize {
        self.env_states * self.mon_states
    }

    #[inline]
    pub fn n_actions(&self) -> usize {
        self.env_actions * self.mon_actions
    }

    /// Number of joint state-action pairs.
    #[inline]
    pub fn n_pairs(&self) -> usize {
        self.n_states() * self.n_actions()
    }

    #[inline]
    pub fn state(&self, env: EnvState, mon: MonState) -> JointState {
        assert!(env.0 < self.env_states, "env state {env} out of range");
        assert!(mon.0 < self.mon_states, "monitor state {mon} out of range");
        JointState {
            env,
            mon,
            flat: env.0 * self.mon_states + mon.0,
        }
    }

    #[inline]
    pub fn state_from_flat(&self, flat: usize) -> JointState {
        assert!(flat < self.n_states(), "joint state {flat} out of range");
        JointState {
            env: EnvState(flat / self.mon_states),
            mon: MonState(flat % self.mon_states),
            flat,
        }
    }

    #[inline]
    pub fn action(&self, env: EnvAction, mon: MonAction) -> JointAction {
        assert!(env.0 < self.env_actions, "env action {env} out of range");
        assert!(mon.0 < self.mon_actions, "monitor action {mon} out of range");
        JointAction {
            env,
            mon,
            flat: env.0 * self.mon_actions + mon.0,
        }
    }

    #[inline]
    pub fn action_from_flat(&self, flat: usize) -> JointAction {
        assert!(flat < self.n_actions(), "joint action {flat} out of range");
        JointAction {
            env: EnvAction(flat / self.mon_actions),
            mon: MonAction(flat % self.mon_actions),
            flat,
        }
    }

    /// Flat index of a state-action pair, ordered by (state, action).
    #[inline]
    pub fn pair(&self, state: usize, action: usize) -> usize {
        state * self.n_actions() + action
    }

    pub fn states(&self) -> Vec<JointState> {
        (0..self.n_states()).map(|i| self.state_from_flat(i)).collect()
    }

    pub fn actions(&self) -> Vec<JointAction> {
        (0..self.n_actions()).map(|i| self.action_from_flat(i)).collect()
    }
}

/// What the agent receives in place of the environment reward.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ProxyReward {
    Observed(f64),
    Unobservable,
}

impl ProxyReward {
    pub fn is_observed(&self) -> bool {
        matches!(self, ProxyReward::Observed(_))
    }

    pub fn value(&self) -> Option<f64> {
        match *self {
            ProxyReward::Observed(r) => Some(r),
            ProxyReward::Unobservable => None,
        }
    }
}

impl fmt::Display for ProxyReward {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProxyReward::Observed(r) => write!(f, "{r}"),
            ProxyReward::Unobservable => f.write_str("⊥"),
        }
    }
}

/// One step of interaction, including the hidden environment reward.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransitionRecord {
    pub state: JointState,
    pub action: JointAction,
    /// Hidden from learning code; kept for evaluation and the oracle.
    pub env_reward: f64,
    pub mon_reward: f64,
    pub proxy: ProxyReward,
    pub next: JointState,
    pub terminated: bool,
    pub truncated: bool,
}

/// The part of a [`TransitionRecord`] the agent is allowed to learn from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Observation {
    pub state: JointState,
    pub action: JointAction,
    pub proxy: ProxyReward,
    pub mon_reward: f64,
    pub next: JointState,
    pub terminated: bool,
    pub truncated: bool,
}

impl TransitionRecord {
    pub fn observation(&self) -> Observation {
        Observation {
            state: self.state,
            action: self.action,
            proxy: self.proxy,
            mon_reward: self.mon_reward,
            next: self.next,
            terminated: self.terminated,
            truncated: self.truncated,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn flat_index_round_trip(
            dims in (1usize..40, 1usize..6, 1usize..5, 1usize..6),
            picks in (0usize..1000, 0usize..1000, 0usize..1000, 0usize..1000),
        ) {
            let space = JointSpace::new(dims.0, dims.1, dims.2, dims.3);
            let e = EnvState(picks.0 % dims.0);
            let m = MonState(picks.2 % dims.2);
            let s = space.state(e, m);
            prop_assert!(s.flat < space.n_states());
            let back = space.state_from_flat(s.flat);
            prop_assert_eq!((back.env, back.mon), (e, m));

            let ea = EnvAction(picks.1 % dims.1);
            let ma = MonAction(picks.3 % dims.3);
            let a = space.action(ea, ma);
            prop_assert!(a.flat < space.n_actions());
            let back = space.action_from_flat(a.flat);
            prop_assert_eq!((back.env, back.mon), (ea, ma));
        }
    }

    #[test]
    fn enumeration_is_a_bijection() {
        let space = JointSpace::new(6, 2, 2, 2);
        let states = space.states();
        assert_eq!(states.len(), 12);
        for (i, s) in states.iter().enumerate() {
            assert_eq!(s.flat, i);
            assert_eq!(space.state(s.env, s.mon), *s);
        }
        let actions = space.actions();
        assert_eq!(actions.len(), 4);
        assert_eq!(actions[1].env, EnvAction(0));
        assert_eq!(actions[1].mon, MonAction(1));
    }

    #[test]
    #[should_panic(expected = "out of range")]
    fn invalid_index_is_a_contract_violation() {
        JointSpace::new(3, 2, 1, 1).state(EnvState(3), MonState(0));
    }
}
