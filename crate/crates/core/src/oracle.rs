//! Exact joint model and dynamic-programming ground truth.

use rand::Rng;

use crate::mdp::{JointOutcome, MonMdp};

/// What a terminating transition bootstraps from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TerminalLinkage {
    /// Episodic: no future after termination.
    Zero,
    /// The episode restarts from the start distribution.
    Reset,
}

/// Exact transition structure of a monitored MDP over joint states and actions.
#[derive(Clone, Debug)]
pub struct MonMdpModel {
    pub n_states: usize,
    pub n_actions: usize,
    /// Outcome branches per flat pair `s * n_actions + a`.
    pub outcomes: Vec<Vec<JointOutcome>>,
    /// `E[r_env + r_mon]` per pair.
    pub expected_reward: Vec<f64>,
    /// Probability that acting ends the episode, per pair.
    pub terminal: Vec<f64>,
    pub start: Vec<(usize, f64)>,
    pub max_episode_steps: usize,
}

impl MonMdpModel {
    pub fn from_mdp(mdp: &MonMdp) -> Self {
        let n_states = mdp.space.n_states();
        let n_actions = mdp.space.n_actions();
        let mut outcomes = Vec::with_capacity(n_states * n_actions);
        for s in 0..n_states {
            for a in 0..n_actions {
                outcomes.push(mdp.joint_outcomes(s, a));
            }
        }
        let expected_reward = outcomes
            .iter()
            .map(|os| os.iter().map(|o| o.prob * (o.env_reward + o.mon_reward)).sum())
            .collect();
        let terminal = outcomes
            .iter()
            .map(|os| os.iter().filter(|o| o.terminated).map(|o| o.prob).sum())
            .collect();
        MonMdpModel {
            n_states,
            n_actions,
            outcomes,
            expected_reward,
            terminal,
            start: mdp.start_distribution(),
            max_episode_steps: mdp.env.max_episode_steps(),
        }
    }

    #[inline]
    pub fn pair(&self, s: usize, a: usize) -> usize {
        s * self.n_actions + a
    }

    fn pick<R: Rng + ?Sized>(probs: impl Iterator<Item = f64>, rng: &mut R) -> usize {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut last = 0;
        for (i, p) in probs.enumerate() {
            acc += p;
            last = i;
            if u < acc {
                return i;
            }
        }
        last
    }

    pub fn sample_start<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.start[Self::pick(self.start.iter().map(|x| x.1), rng)].0
    }

    /// Draws one outcome branch of the flat pair `sa`.
    pub fn sample<R: Rng + ?Sized>(&self, sa: usize, rng: &mut R) -> &JointOutcome {
        let os = &self.outcomes[sa];
        &os[Self::pick(os.iter().map(|o| o.prob), rng)]
    }

    /// Dense `P[(s * n_actions + a) * n_states + s']`, terminating branches included.
    pub fn transition_tensor(&self) -> Vec<f64> {
        let mut p = vec![0.0; self.n_states * self.n_actions * self.n_states];
        for (sa, os) in self.outcomes.iter().enumerate() {
            for o in os {
                p[sa * self.n_states + o.next] += o.prob;
            }
        }
        p
    }

    fn state_values(&self, q: &[f64], out: &mut [f64]) {
        for (s, v) in out.iter_mut().enumerate() {
            *v = q[s * self.n_actions..(s + 1) * self.n_actions]
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max);
        }
    }

    /// Bellman optimality iteration with an arbitrary per-pair reward,
    /// until the sup-norm change drops below `tol`.
    pub fn solve<F>(&self, reward: F, linkage: TerminalLinkage, gamma: f64, tol: f64) -> Vec<f64>
    where
        F: Fn(usize) -> f64,
    {
        assert!(tol > 0.0 && (0.0..1.0).contains(&gamma));
        let pairs = self.n_states * self.n_actions;
        let rewards: Vec<f64> = (0..pairs).map(reward).collect();
        let mut q = vec![0.0; pairs];
        let mut v = vec![0.0; self.n_states];
        loop {
            self.state_values(&q, &mut v);
            let v_start: f64 = self.start.iter().map(|&(s, p)| p * v[s]).sum();
            let mut delta: f64 = 0.0;
            for (sa, os) in self.outcomes.iter().enumerate() {
                let mut future = 0.0;
                for o in os {
                    if !o.terminated {
                        future += o.prob * v[o.next];
                    } else if linkage == TerminalLinkage::Reset {
                        future += o.prob * v_start;
                    }
                }
                let updated = rewards[sa] + gamma * future;
                delta = delta.max((updated - q[sa]).abs());
                q[sa] = updated;
            }
            if delta < tol {
                return q;
            }
        }
    }

    /// Optimal action values for the sum of environment and monitor rewards.
    pub fn value_iteration(&self, gamma: f64, tol: f64) -> Vec<f64> {
        self.solve(|sa| self.expected_reward[sa], TerminalLinkage::Zero, gamma, tol)
    }

    /// Optimal successor values for `goal` (a flat pair index): the discounted
    /// number of future executions of the goal pair, restarting episodes on
    /// termination the same way the learner does.
    pub fn indicator_oracle(&self, goal: usize, gamma: f64, tol: f64) -> Vec<f64> {
        self.solve(|sa| f64::from(u8::from(sa == goal)), TerminalLinkage::Reset, gamma, tol)
    }

    /// Expected undiscounted return of a deterministic policy over one
    /// episode capped at `horizon` steps, starting from the start distribution.
    pub fn evaluate_finite(&self, policy: &[usize], horizon: usize) -> f64 {
        assert_eq!(policy.len(), self.n_states);
        let mut v = vec![0.0; self.n_states];
        let mut next = vec![0.0; self.n_states];
        for _ in 0..horizon {
            for (s, out) in next.iter_mut().enumerate() {
                *out = self.outcomes[self.pair(s, policy[s])]
                    .iter()
                    .map(|o| o.prob * (o.env_reward + o.mon_reward + if o.terminated { 0.0 } else { v[o.next] }))
                    .sum();
            }
            std::mem::swap(&mut v, &mut next);
        }
        self.start.iter().map(|&(s, p)| p * v[s]).sum()
    }

    /// Episode return of the greedy policy of the optimal action values.
    pub fn optimal_return(&self, gamma: f64, tol: f64) -> f64 {
        let q = self.value_iteration(gamma, tol);
        self.evaluate_finite(&greedy_policy(&q, self.n_actions), self.max_episode_steps)
    }
}

/// Greedy policy with first-index tie-breaking.
pub fn greedy_policy(q: &[f64], n_actions: usize) -> Vec<usize> {
    q.chunks(n_actions).map(crate::policy::argmax_first).collect()
}
