use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use monmdp::glie::{default_horizon_cap, estimate_diameter, track_glie};
use monmdp::harness::{run_training, train};
use monmdp::io::write_run;
use monmdp::oracle::{greedy_policy, MonMdpModel};
use monmdp::policy::argmax_random;
use monmdp::{PolicyKind, RunConfig};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const ORACLE_TOL: f64 = 1e-10;

#[derive(Parser)]
#[command(name = "monmdp", version, about = "Monitored MDP experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one agent and write its artifacts.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train seeds 0..N in parallel, one directory per seed plus summary.csv.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seeds: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the optimal action values and the optimal episode return.
    Oracle {
        #[arg(long)]
        config: PathBuf,
    },
    /// Train directed agents and check the exploration bookkeeping and bounds.
    VerifyGlie {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 20)]
        seeds: u64,
        /// Goals used for the diameter estimate; all pairs when omitted or larger.
        #[arg(long)]
        goals: Option<usize>,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        /// Also write the report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(path: &Path) -> Result<RunConfig> {
    RunConfig::from_path(path).with_context(|| format!("reading config {}", path.display()))
}

fn run(config: &Path, seed: u64, out: &Path) -> Result<()> {
    let cfg = load(config)?.with_seed(seed);
    let art = run_training(&cfg)?;
    write_run(&art, out)?;
    println!(
        "seed {seed}: final greedy return {} after {} steps, {} observed rewards, {:.2}s",
        art.final_return(),
        cfg.total_steps,
        art.observed_rewards,
        art.wall_clock.as_secs_f64()
    );
    Ok(())
}

fn sweep(config: &Path, seeds: u64, out: &Path) -> Result<()> {
    if seeds == 0 {
        bail!("--seeds must be at least 1");
    }
    let base = load(config)?;
    base.validate()?;
    let mdp = base.build_mdp()?;
    let rows: Vec<Result<String>> = (0..seeds)
        .into_par_iter()
        .map(|seed| {
            let cfg = base.clone().with_seed(seed);
            let art = train(&cfg, &mdp);
            write_run(&art, &out.join(format!("seed_{seed}")))?;
            Ok(format!(
                "{seed},{},{},{},{}",
                art.final_return(),
                art.observed_rewards,
                art.episodes,
                art.wall_clock.as_secs_f64()
            ))
        })
        .collect();
    let mut summary = String::from("seed,final_greedy_return,observed_rewards,episodes,wall_clock_s\n");
    for row in rows {
        summary.push_str(&row?);
        summary.push('\n');
    }
    let path = out.join("summary.csv");
    fs::write(&path, &summary).with_context(|| format!("writing {}", path.display()))?;
    print!("{summary}");
    Ok(())
}

fn oracle(config: &Path) -> Result<()> {
    let cfg = load(config)?;
    cfg.validate()?;
    let model = MonMdpModel::from_mdp(&cfg.build_mdp()?);
    let q = model.value_iteration(cfg.gamma, ORACLE_TOL);
    let mut text = String::from("state");
    for a in 0..model.n_actions {
        write!(text, ",{a}")?;
    }
    text.push('\n');
    for (s, row) in q.chunks(model.n_actions).enumerate() {
        write!(text, "{s}")?;
        for v in row {
            write!(text, ",{v}")?;
        }
        text.push('\n');
    }
    let ret = model.evaluate_finite(&greedy_policy(&q, model.n_actions), model.max_episode_steps);
    print!("{text}");
    println!("optimal_return,{ret}");
    Ok(())
}

/// Largest expected hitting time of a goal under the greedy policy of its
/// optimal successor values, over the chosen goals. `None` if some start
/// state never reached its goal within the cap.
fn diameter(model: &MonMdpModel, gamma: f64, goals: &[usize], trials: usize, rng: &mut ChaCha8Rng) -> Option<f64> {
    let cap = default_horizon_cap(model);
    let mut worst: f64 = 0.0;
    for &goal in goals {
        let s_star = model.indicator_oracle(goal, gamma, 1e-8);
        let n_actions = model.n_actions;
        let est = estimate_diameter(
            model,
            |s, r: &mut ChaCha8Rng| argmax_random(&s_star[s * n_actions..(s + 1) * n_actions], r),
            goal,
            trials,
            cap,
            rng,
        );
        worst = worst.max(est.diameter()?);
    }
    Some(worst)
}

fn verify_glie(config: &Path, seeds: u64, goals: Option<usize>, trials: usize, out: Option<&Path>) -> Result<bool> {
    let mut cfg = load(config)?;
    cfg.policy = PolicyKind::Directed;
    cfg.record_glie = true;
    cfg.validate()?;
    let mdp = cfg.build_mdp()?;
    let model = MonMdpModel::from_mdp(&mdp);
    let n_pairs = mdp.space.n_pairs();

    let arts: Vec<_> = (0..seeds)
        .into_par_iter()
        .map(|seed| train(&cfg.clone().with_seed(seed), &mdp))
        .collect();
    let traces: Vec<_> = arts.iter().filter_map(|a| a.glie.as_ref()).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let chosen: Vec<usize> = match goals {
        Some(k) if k < n_pairs => {
            let mut g = sample(&mut rng, n_pairs, k).into_vec();
            g.sort_unstable();
            g
        }
        _ => (0..n_pairs).collect(),
    };
    let d = diameter(&model, cfg.gamma, &chosen, trials, &mut rng);

    let mut text = format!(
        "env: {}\nmonitor: {}\nbeta_bar: {}\ndiameter goals: {}/{}\n",
        cfg.env,
        cfg.monitor,
        cfg.beta_bar,
        chosen.len(),
        n_pairs
    );
    let report = match d {
        Some(d) => {
            writeln!(text, "diameter: {d}")?;
            track_glie(&traces, n_pairs, d)
        }
        None => {
            writeln!(text, "diameter: unbounded-suspect (a rollout start never reached its goal)")?;
            track_glie(&traces, n_pairs, f64::INFINITY)
        }
    };
    writeln!(text, "{report}")?;
    print!("{text}");
    if let Some(p) = out {
        fs::write(p, &text).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(report.passed())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run { config, seed, out } => run(&config, seed, &out),
        Command::Sweep { config, seeds, out } => sweep(&config, seeds, &out),
        Command::Oracle { config } => oracle(&config),
        Command::VerifyGlie {
            config,
            seeds,
            goals,
            trials,
            out,
        } => {
            if !verify_glie(&config, seeds, goals, trials, out.as_deref())? {
                std::process::exit(1);
            }
            Ok(())
        }
    }
}
