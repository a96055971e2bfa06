//! River Swim: a chain where swimming RIGHT fights the current.
//!
//! Config block format (one `key values...` per line, `#` comments):
//!
//! ```text
//! river_swim
//! n_states 6
//! max_steps 200
//! left_reward 0.01
//! right_reward 1.0
//! first_right 0.4 0.6        # stay, right
//! middle_right 0.1 0.3 0.6   # left, stay, right
//! last_right 0.0 0.4 0.6     # left, stay (no reward), success (stay, right_reward)
//! start 1 2
//! ```

use rand::Rng;

use super::EnvOutcome;
use crate::error::{Error, Result};

pub const LEFT: usize = 0;
pub const RIGHT: usize = 1;
pub const N_ACTIONS: usize = 2;
pub const ACTION_NAMES: [&str; N_ACTIONS] = ["LEFT", "RIGHT"];

#[derive(Clone, Debug, PartialEq)]
pub struct RiverSwimModel {
    pub n_states: usize,
    pub max_episode_steps: usize,
    pub left_reward: f64,
    pub right_reward: f64,
    /// RIGHT in state 0: (stay, right).
    pub first_right: [f64; 2],
    /// RIGHT in interior states: (left, stay, right).
    pub middle_right: [f64; 3],
    /// RIGHT in the last state: (left, stay, success).
    pub last_right: [f64; 3],
    /// Start states, drawn uniformly.
    pub start: Vec<usize>,
}

impl Default for RiverSwimModel {
    fn default() -> Self {
        RiverSwimModel {
            n_states: 6,
            max_episode_steps: 200,
            left_reward: 0.01,
            right_reward: 1.0,
            first_right: [0.4, 0.6],
            middle_right: [0.1, 0.3, 0.6],
            last_right: [0.0, 0.4, 0.6],
            start: vec![1, 2],
        }
    }
}

impl RiverSwimModel {
    pub fn step<R: Rng + ?Sized>(&self, state: usize, action: usize, rng: &mut R) -> (usize, f64, bool) {
        assert!(state < self.n_states && action < N_ACTIONS);
        let last = self.n_states - 1;
        if action == LEFT {
            return if state == 0 {
                (0, self.left_reward, false)
            } else {
                (state - 1, 0.0, false)
            };
        }
        let u: f64 = rng.gen();
        if state == 0 {
            let next = if u < self.first_right[0] { 0 } else { 1 };
            (next, 0.0, false)
        } else if state < last {
            let [left, stay, _] = self.middle_right;
            let next = if u < left {
                state - 1
            } else if u < left + stay {
                state
            } else {
                state + 1
            };
            (next, 0.0, false)
        } else {
            let [left, stay, _] = self.last_right;
            if u < left {
                (state - 1, 0.0, false)
            } else if u < left + stay {
                (state, 0.0, false)
            } else {
                (state, self.right_reward, false)
            }
        }
    }

    /// Exact outcome distribution of [`RiverSwimModel::step`]; zero-probability branches are dropped.
    pub fn outcomes(&self, state: usize, action: usize) -> Vec<EnvOutcome> {
        let last = self.n_states - 1;
        let o = |prob, next, reward| EnvOutcome {
            prob,
            next,
            reward,
            terminated: false,
        };
        let out = if action == LEFT {
            if state == 0 {
                vec![o(1.0, 0, self.left_reward)]
            } else {
                vec![o(1.0, state - 1, 0.0)]
            }
        } else if state == 0 {
            vec![o(self.first_right[0], 0, 0.0), o(self.first_right[1], 1, 0.0)]
        } else if state < last {
            let [l, s, r] = self.middle_right;
            vec![o(l, state - 1, 0.0), o(s, state, 0.0), o(r, state + 1, 0.0)]
        } else {
            let [l, s, r] = self.last_right;
            vec![o(l, state - 1, 0.0), o(s, state, 0.0), o(r, state, self.right_reward)]
        };
        out.into_iter().filter(|o| o.prob > 0.0).collect()
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.n_states < 3 {
            return Err("n_states must be at least 3".into());
        }
        let ok = |p: &[f64]| p.iter().all(|&x| (0.0..=1.0).contains(&x)) && (p.iter().sum::<f64>() - 1.0).abs() < 1e-9;
        if !ok(&self.first_right) || !ok(&self.middle_right) || !ok(&self.last_right) {
            return Err("RIGHT probabilities must be in [0, 1] and sum to 1".into());
        }
        if self.start.is_empty() || self.start.iter().any(|&s| s >= self.n_states) {
            return Err("start states must be non-empty and in range".into());
        }
        if self.max_episode_steps == 0 {
            return Err("max_steps must be positive".into());
        }
        Ok(())
    }
}

pub fn is_river_config(text: &str) -> bool {
    content_lines(text).next().map(|(_, l)| l) == Some("river_swim")
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

pub fn parse_river_config(text: &str) -> Result<RiverSwimModel> {
    let mut lines = content_lines(text);
    match lines.next() {
        Some((_, "river_swim")) => {}
        Some((line, _)) => return Err(Error::layout(line, 1, "expected `river_swim` header")),
        None => return Err(Error::layout(1, 1, "empty river swim config")),
    }
    let mut model = RiverSwimModel::default();
    let mut last_line = 1;
    for (line, content) in lines {
        last_line = line;
        let mut parts = content.split_whitespace();
        let key = parts.next().unwrap_or_default();
        let values: Vec<&str> = parts.collect();
        let floats = |n: usize| -> Result<Vec<f64>> {
            if values.len() != n {
                return Err(Error::layout(line, 1, format!("`{key}` takes {n} value(s)")));
            }
            values
                .iter()
                .map(|v| v.parse::<f64>().map_err(|_| Error::layout(line, 1, format!("bad number `{v}`"))))
                .collect()
        };
        let uints = || -> Result<Vec<usize>> {
            values
                .iter()
                .map(|v| v.parse::<usize>().map_err(|_| Error::layout(line, 1, format!("bad integer `{v}`"))))
                .collect()
        };
        match key {
            "n_states" => model.n_states = single(uints()?, line, key)?,
            "max_steps" => model.max_episode_steps = single(uints()?, line, key)?,
            "left_reward" => model.left_reward = floats(1)?[0],
            "right_reward" => model.right_reward = floats(1)?[0],
            "first_right" => model.first_right.copy_from_slice(&floats(2)?),
            "middle_right" => model.middle_right.copy_from_slice(&floats(3)?),
            "last_right" => model.last_right.copy_from_slice(&floats(3)?),
            "start" => model.start = uints()?,
            _ => return Err(Error::layout(line, 1, format!("unknown key `{key}`"))),
        }
    }
    model.validate().map_err(|m| Error::layout(last_line, 1, m))?;
    Ok(model)
}

fn single(v: Vec<usize>, line: usize, key: &str) -> Result<usize> {
    match v.as_slice() {
        [x] => Ok(*x),
        _ => Err(Error::layout(line, 1, format!("`{key}` takes one value"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn left_is_deterministic() {
        let m = RiverSwimModel::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(m.step(3, LEFT, &mut rng), (2, 0.0, false));
        assert_eq!(m.step(0, LEFT, &mut rng), (0, 0.01, false));
        assert_eq!(m.outcomes(3, LEFT), vec![EnvOutcome { prob: 1.0, next: 2, reward: 0.0, terminated: false }]);
    }

    #[test]
    fn right_from_the_first_state() {
        let m = RiverSwimModel::default();
        let out = m.outcomes(0, RIGHT);
        assert_eq!(out.len(), 2);
        assert_eq!((out[0].next, out[0].prob, out[0].reward), (0, 0.4, 0.0));
        assert_eq!((out[1].next, out[1].prob, out[1].reward), (1, 0.6, 0.0));
    }

    #[test]
    fn right_success_in_the_last_state_pays() {
        let m = RiverSwimModel::default();
        let out = m.outcomes(5, RIGHT);
        let paying: f64 = out.iter().filter(|o| o.reward == 1.0).map(|o| o.prob).sum();
        assert_eq!(paying, 0.6);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rewards: Vec<f64> = (0..1000).map(|_| m.step(5, RIGHT, &mut rng).1).collect();
        assert!(rewards.iter().all(|&r| r == 0.0 || r == 1.0));
        assert!(rewards.iter().any(|&r| r == 1.0));
    }

    #[test]
    fn parses_config_block() {
        let text = "river_swim\n# comment\nn_states 6\nleft_reward 0.005\nmiddle_right 0.2 0.2 0.6\nstart 1 2\n";
        let m = parse_river_config(text).unwrap();
        assert_eq!(m.left_reward, 0.005);
        assert_eq!(m.middle_right, [0.2, 0.2, 0.6]);
        assert!(parse_river_config("river_swim\nfirst_right 0.5 0.6\n").is_err());
        assert!(parse_river_config("river_swim\nbogus 1\n").is_err());
        assert!(parse_river_config("").is_err());
    }
}
