//! Empirical checks of the exploration-fraction argument: per-goal bout
//! counting, the exploration fraction `X_t`, and goal-relative diameters.

use std::fmt;

use rand::Rng;

use crate::oracle::MonMdpModel;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    /// More bouts toward a goal than visits of it plus one.
    BoutsExceedVisits,
    /// More bouts than `ln t / β̄ + 1`.
    BoutsExceedLogBound,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GlieViolation {
    pub t: u64,
    pub goal: usize,
    pub kind: ViolationKind,
    pub bouts: u64,
    pub limit: f64,
}

/// Per-run record of exploration steps and bouts, keyed by goal pair.
#[derive(Clone, Debug, PartialEq)]
pub struct GlieTrace {
    pub beta_bar: f64,
    /// `Z(s, a)`: exploring steps spent pursuing each goal.
    pub z: Vec<u64>,
    /// `I(s, a)`: exploration bouts started toward each goal.
    pub bouts: Vec<u64>,
    /// Per-step exploring flag.
    pub exploring: Vec<bool>,
    /// Per-step goal pair.
    pub goals: Vec<u32>,
    pub violations: Vec<GlieViolation>,
    /// Consecutive exploring steps whose goal changed although the earlier
    /// step did not execute its goal; zero when goals persist.
    pub goal_switches: u64,
    last: Option<(bool, usize, bool)>,
}

impl GlieTrace {
    pub fn new(n_pairs: usize, beta_bar: f64) -> Self {
        GlieTrace {
            beta_bar,
            z: vec![0; n_pairs],
            bouts: vec![0; n_pairs],
            exploring: Vec::new(),
            goals: Vec::new(),
            violations: Vec::new(),
            goal_switches: 0,
            last: None,
        }
    }

    pub fn steps(&self) -> u64 {
        self.exploring.len() as u64
    }

    /// Records step `t` (one-based). `goal_visits` is the goal's count before
    /// this step's increment.
    pub fn record(&mut self, t: u64, exploring: bool, goal: usize, executed: usize, goal_visits: u64) {
        debug_assert_eq!(t, self.steps() + 1);
        self.exploring.push(exploring);
        self.goals.push(goal as u32);
        if exploring {
            if let Some((true, last_goal, false)) = self.last {
                if last_goal != goal {
                    self.goal_switches += 1;
                }
            }
            self.z[goal] += 1;
            let new_bout = match self.last {
                None => true,
                Some((was_exploring, last_goal, hit)) => !was_exploring || last_goal != goal || hit,
            };
            if new_bout {
                self.bouts[goal] += 1;
                let bouts = self.bouts[goal];
                let visit_limit = goal_visits as f64 + 1.0;
                if bouts as f64 > visit_limit {
                    self.violations.push(GlieViolation {
                        t,
                        goal,
                        kind: ViolationKind::BoutsExceedVisits,
                        bouts,
                        limit: visit_limit,
                    });
                }
                let log_limit = log_bound(t, self.beta_bar);
                if bouts as f64 > log_limit {
                    self.violations.push(GlieViolation {
                        t,
                        goal,
                        kind: ViolationKind::BoutsExceedLogBound,
                        bouts,
                        limit: log_limit,
                    });
                }
            }
        }
        self.last = Some((exploring, goal, executed == goal));
    }

    pub fn exploring_steps(&self) -> u64 {
        self.z.iter().sum()
    }

    /// `X_t` at each requested one-based time (must be sorted ascending).
    pub fn fraction_series(&self, times: &[u64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(times.len());
        let mut count = 0u64;
        let mut seen = 0usize;
        for &t in times {
            let t_idx = (t as usize).min(self.exploring.len());
            count += self.exploring[seen..t_idx].iter().filter(|&&e| e).count() as u64;
            seen = t_idx;
            out.push(count as f64 / t.max(1) as f64);
        }
        out
    }
}

/// `ln t / β̄ + 1`.
pub fn log_bound(t: u64, beta_bar: f64) -> f64 {
    (t.max(1) as f64).ln() / beta_bar + 1.0
}

/// Times `⌈10^(k/4)⌉` up to and including `total`.
pub fn log_spaced_times(total: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut k = 0;
    loop {
        let t = 10f64.powf(k as f64 / 4.0).ceil() as u64;
        if t >= total {
            break;
        }
        if out.last() != Some(&t) {
            out.push(t);
        }
        k += 1;
    }
    out.push(total);
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiameterEstimate {
    pub goal: usize,
    /// Mean hitting time per start state over uncensored rollouts; `None`
    /// when every rollout from that start hit the cap.
    pub mean_hitting: Vec<Option<f64>>,
    pub std_err: Vec<f64>,
    pub censored: Vec<usize>,
    pub trials: usize,
    pub horizon_cap: usize,
}

impl DiameterEstimate {
    /// `max` over starts, or `None` if some start looks unbounded.
    pub fn diameter(&self) -> Option<f64> {
        self.mean_hitting
            .iter()
            .try_fold(f64::NEG_INFINITY, |m, x| x.map(|v| m.max(v)))
    }

    /// Start state attaining the diameter, with its standard error.
    pub fn worst_start(&self) -> Option<(usize, f64)> {
        let d = self.diameter()?;
        let s = self.mean_hitting.iter().position(|x| *x == Some(d))?;
        Some((s, self.std_err[s]))
    }

    pub fn any_censored(&self) -> bool {
        self.censored.iter().any(|&c| c > 0)
    }
}

pub fn default_horizon_cap(model: &MonMdpModel) -> usize {
    100 * model.n_states * model.n_actions
}

/// Monte-Carlo goal-relative diameter of `policy`, rolling out from every
/// joint state. Time counts the goal-executing step, so an immediate hit is 1.
/// Terminated episodes continue from a fresh start state.
pub fn estimate_diameter<R, P>(
    model: &MonMdpModel,
    mut policy: P,
    goal: usize,
    trials: usize,
    horizon_cap: usize,
    rng: &mut R,
) -> DiameterEstimate
where
    R: Rng + ?Sized,
    P: FnMut(usize, &mut R) -> usize,
{
    assert!(trials >= 1 && horizon_cap >= 1);
    let mut mean_hitting = Vec::with_capacity(model.n_states);
    let mut std_err = Vec::with_capacity(model.n_states);
    let mut censored = Vec::with_capacity(model.n_states);
    for start in 0..model.n_states {
        let mut times = Vec::with_capacity(trials);
        let mut cut = 0;
        for _ in 0..trials {
            let mut s = start;
            let mut hit = None;
            for step in 1..=horizon_cap {
                let a = policy(s, rng);
                let sa = model.pair(s, a);
                if sa == goal {
                    hit = Some(step);
                    break;
                }
                let o = model.sample(sa, rng);
                s = if o.terminated { model.sample_start(rng) } else { o.next };
            }
            match hit {
                Some(h) => times.push(h as f64),
                None => cut += 1,
            }
        }
        censored.push(cut);
        if times.is_empty() {
            mean_hitting.push(None);
            std_err.push(f64::INFINITY);
            continue;
        }
        let n = times.len() as f64;
        let mean = times.iter().sum::<f64>() / n;
        let var = if times.len() > 1 {
            times.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        mean_hitting.push(Some(mean));
        std_err.push((var / n).sqrt());
    }
    DiameterEstimate {
        goal,
        mean_hitting,
        std_err,
        censored,
        trials,
        horizon_cap,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundRow {
    pub t: u64,
    /// Fraction of runs with `X_t ≥ 1/√t`.
    pub frequency: f64,
    /// `|S||A| D̂ (ln t / β̄ + 1) / √t`.
    pub bound: f64,
}

impl BoundRow {
    pub fn applicable(&self) -> bool {
        self.bound < 1.0
    }

    pub fn violated(&self) -> bool {
        self.applicable() && self.frequency > self.bound
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GlieReport {
    pub runs: usize,
    pub violations: Vec<(usize, GlieViolation)>,
    /// Runs where Σ Z disagrees with the number of exploring steps.
    pub identity_failures: usize,
    pub bound_rows: Vec<BoundRow>,
    /// Least-squares slope of `X_t` over the second half of each run.
    pub late_slopes: Vec<f64>,
}

impl GlieReport {
    pub fn decreasing_runs(&self) -> usize {
        self.late_slopes.iter().filter(|&&s| s < 0.0).count()
    }

    pub fn bound_violations(&self) -> usize {
        self.bound_rows.iter().filter(|r| r.violated()).count()
    }

    /// Checks (a) and (b) hold and `X_t` decreases late in most runs.
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
            && self.identity_failures == 0
            && self.bound_violations() == 0
            && 2 * self.decreasing_runs() > self.runs
    }
}

impl fmt::Display for GlieReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "runs: {}", self.runs)?;
        writeln!(f, "bout-count violations: {}", self.violations.len())?;
        for (run, v) in self.violations.iter().take(20) {
            writeln!(f, "  run {run} t={} goal={} {:?}: {} > {}", v.t, v.goal, v.kind, v.bouts, v.limit)?;
        }
        writeln!(f, "bookkeeping identity failures: {}", self.identity_failures)?;
        writeln!(f, "t,frequency,bound,applicable,violated")?;
        for r in &self.bound_rows {
            writeln!(f, "{},{},{},{},{}", r.t, r.frequency, r.bound, r.applicable(), r.violated())?;
        }
        writeln!(
            f,
            "late-half X_t slope negative in {}/{} runs",
            self.decreasing_runs(),
            self.runs
        )?;
        write!(f, "result: {}", if self.passed() { "PASS" } else { "FAIL" })
    }
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Aggregates traces of independent runs on the same problem. `diameter`
/// is the goal-relative diameter used in the Markov-inequality bound.
pub fn track_glie(traces: &[&GlieTrace], n_pairs: usize, diameter: f64) -> GlieReport {
    let mut violations = Vec::new();
    let mut identity_failures = 0;
    let mut late_slopes = Vec::new();
    for (run, trace) in traces.iter().enumerate() {
        violations.extend(trace.violations.iter().map(|v| (run, *v)));
        let flagged = trace.exploring.iter().filter(|&&e| e).count() as u64;
        if flagged != trace.exploring_steps() || flagged > trace.steps() {
            identity_failures += 1;
        }
        let total = trace.steps();
        if total >= 4 {
            let times: Vec<u64> = (0..=100).map(|k| total / 2 + k * (total - total / 2) / 100).collect();
            let xs: Vec<f64> = times.iter().map(|&t| t as f64).collect();
            late_slopes.push(slope(&xs, &trace.fraction_series(&times)));
        }
    }
    let shortest = traces.iter().map(|t| t.steps()).min().unwrap_or(0);
    let beta_bar = traces.first().map_or(0.01, |t| t.beta_bar);
    let bound_rows = if shortest == 0 {
        Vec::new()
    } else {
        let times = log_spaced_times(shortest);
        let series: Vec<Vec<f64>> = traces.iter().map(|t| t.fraction_series(&times)).collect();
        times
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let threshold = 1.0 / (t as f64).sqrt();
                let hits = series.iter().filter(|s| s[i] >= threshold).count();
                BoundRow {
                    t,
                    frequency: hits as f64 / traces.len() as f64,
                    bound: n_pairs as f64 * diameter * log_bound(t, beta_bar) / (t as f64).sqrt(),
                }
            })
            .collect()
    };
    GlieReport {
        runs: traces.len(),
        violations,
        identity_failures,
        bound_rows,
        late_slopes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{EnvKind, Environment};
    use crate::mdp::MonMdp;
    use crate::monitor::{Monitor, MonitorKind, MonitorParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn log_bound_arithmetic() {
        let b = log_bound(10_000, 0.01);
        assert!((b - (10_000f64.ln() / 0.01 + 1.0)).abs() < 1e-12);
        assert!((b - 922.03).abs() < 0.01, "{b}");
        assert_eq!(log_bound(1, 0.01), 1.0);
    }

    #[test]
    fn bouts_and_exploring_steps() {
        let mut tr = GlieTrace::new(4, 0.01);
        // explore toward 2 for two steps, hit it, then toward 3, exploit, toward 3 again
        tr.record(1, true, 2, 0, 0);
        tr.record(2, true, 2, 2, 0);
        tr.record(3, true, 3, 1, 0);
        tr.record(4, false, 3, 1, 0);
        tr.record(5, true, 3, 3, 0);
        assert_eq!(tr.z, vec![0, 0, 2, 2]);
        assert_eq!(tr.bouts, vec![0, 0, 1, 2]);
        assert_eq!(tr.exploring_steps(), 4);
        // the second bout toward 3 started with no recorded visit of it
        assert_eq!(tr.violations.len(), 1);
        assert_eq!(tr.violations[0].kind, ViolationKind::BoutsExceedVisits);
        assert_eq!(tr.fraction_series(&[1, 4, 5]), vec![1.0, 0.75, 0.8]);
        assert_eq!(tr.goal_switches, 0);
        tr.record(6, true, 1, 0, 0);
        tr.record(7, true, 2, 0, 0);
        assert_eq!(tr.goal_switches, 1);
    }

    #[test]
    fn log_bound_violation_is_detected() {
        let mut tr = GlieTrace::new(1, 10.0);
        tr.record(1, true, 0, 0, 5);
        tr.record(2, true, 0, 0, 5);
        assert_eq!(tr.violations.len(), 1);
        assert_eq!(tr.violations[0].kind, ViolationKind::BoutsExceedLogBound);
    }

    #[test]
    fn spaced_times() {
        assert_eq!(log_spaced_times(20), vec![1, 2, 4, 6, 10, 18, 20]);
        assert_eq!(*log_spaced_times(1000).last().unwrap(), 1000);
    }

    #[test]
    fn single_state_diameter_is_one() {
        let model = MonMdpModel {
            n_states: 1,
            n_actions: 1,
            outcomes: vec![vec![crate::mdp::JointOutcome {
                prob: 1.0,
                next: 0,
                env_reward: 0.0,
                mon_reward: 0.0,
                terminated: false,
                observe_prob: 1.0,
            }]],
            expected_reward: vec![0.0],
            terminal: vec![0.0],
            start: vec![(0, 1.0)],
            max_episode_steps: 10,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let est = estimate_diameter(&model, |_, _| 0, 0, 10, 5, &mut rng);
        assert_eq!(est.diameter(), Some(1.0));
        assert_eq!(est.worst_start(), Some((0, 0.0)));
    }

    #[test]
    fn unreachable_goal_is_reported_unbounded() {
        let env = Environment::from_text(EnvKind::Custom, "1 2 10\nSC\n").unwrap();
        let monitor = Monitor::new(MonitorKind::Full, &MonitorParams::default(), &env);
        let model = MonMdpModel::from_mdp(&MonMdp::new(env, monitor));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let goal = model.pair(1, crate::env::grid::STAY);
        let est = estimate_diameter(&model, |_, _| crate::env::grid::LEFT, goal, 5, 50, &mut rng);
        assert_eq!(est.diameter(), None);
        assert!(est.any_censored());
    }

    #[test]
    fn report_on_clean_traces() {
        let mut tr = GlieTrace::new(2, 0.01);
        for t in 1..=1000u64 {
            let exploring = t % 2 == 0 && t < 100;
            tr.record(t, exploring, 0, 0, t);
        }
        let report = track_glie(&[&tr], 2, 3.0);
        assert!(report.violations.is_empty());
        assert_eq!(report.identity_failures, 0);
        assert!(report.bound_rows.iter().all(|r| !r.applicable()));
        assert_eq!(report.late_slopes.len(), 1);
        assert!(report.late_slopes[0] < 0.0);
        assert!(report.passed());
        assert!(report.to_string().ends_with("PASS"));
    }
}
