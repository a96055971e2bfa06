//! CSV artifacts. Floats are written in Rust's shortest round-trip form,
//! so reading a file back reproduces every value bit for bit.

use std::fs;
use std::path::Path;

use crate::agent::AgentTables;
use crate::error::{Error, Result};
use crate::harness::{MetricRow, RunArtifacts};

pub const METRICS_HEADER: [&str; 5] = [
    "test_idx",
    "train_step",
    "greedy_return_mean",
    "beta",
    "observed_rewards_cum",
];

pub fn write_metrics(rows: &[MetricRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(METRICS_HEADER)?;
    for r in rows {
        w.write_record([
            r.test_idx.to_string(),
            r.train_step.to_string(),
            r.greedy_return_mean.to_string(),
            r.beta.to_string(),
            r.observed_rewards_cum.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, path: &Path) -> Result<T> {
    rec.get(i)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::Table {
            path: path.into(),
            message: format!("bad field {i} in {rec:?}"),
        })
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricRow>> {
    let mut r = csv::Reader::from_path(path)?;
    if r.headers()?.iter().ne(METRICS_HEADER) {
        return Err(Error::Table {
            path: path.into(),
            message: "unexpected metrics header".into(),
        });
    }
    r.records()
        .map(|rec| {
            let rec = rec?;
            Ok(MetricRow {
                test_idx: field(&rec, 0, path)?,
                train_step: field(&rec, 1, path)?,
                greedy_return_mean: field(&rec, 2, path)?,
                beta: field(&rec, 3, path)?,
                observed_rewards_cum: field(&rec, 4, path)?,
            })
        })
        .collect()
}

/// Writes a `states x actions` table: header `state,0,1,...`, one row per state.
pub fn write_table<T: ToString>(values: &[T], n_actions: usize, path: &Path) -> Result<()> {
    assert_eq!(values.len() % n_actions, 0);
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["state".to_string()];
    header.extend((0..n_actions).map(|a| a.to_string()));
    w.write_record(&header)?;
    for (s, row) in values.chunks(n_actions).enumerate() {
        let mut rec = vec![s.to_string()];
        rec.extend(row.iter().map(ToString::to_string));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a table written by [`write_table`]; returns the flat values and the action count.
pub fn read_table(path: &Path) -> Result<(Vec<f64>, usize)> {
    let mut r = csv::Reader::from_path(path)?;
    let n_actions = r.headers()?.len().saturating_sub(1);
    let mut values = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        if field::<usize>(&rec, 0, path)? != i || rec.len() != n_actions + 1 {
            return Err(Error::Table {
                path: path.into(),
                message: format!("row {i} is malformed"),
            });
        }
        for j in 1..=n_actions {
            values.push(field(&rec, j, path)?);
        }
    }
    Ok((values, n_actions))
}

/// `N.csv`, `Q.csv` and, when asked for, `S/goal_<pair>.csv` per goal.
pub fn dump_tables(tables: &AgentTables, dir: &Path, with_successor: bool) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let n_actions = tables.space.n_actions();
    write_table(&tables.visits, n_actions, &dir.join("N.csv"))?;
    write_table(&tables.q, n_actions, &dir.join("Q.csv"))?;
    if let (true, Some(s)) = (with_successor, tables.successor.as_ref()) {
        let sdir = dir.join("S");
        fs::create_dir_all(&sdir).map_err(|e| Error::io(&sdir, e))?;
        for g in 0..s.n_goals() {
            write_table(&s.goal_table(g), n_actions, &sdir.join(format!("goal_{g}.csv")))?;
        }
    }
    Ok(())
}

/// Everything a run produces. Wall-clock time is written to `wall_clock.txt`;
/// every other file depends only on the configuration and seed.
pub fn write_run(art: &RunArtifacts, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_metrics(&art.metrics, &dir.join("metrics.csv"))?;
    dump_tables(&art.tables, dir, art.config.dump_successor)?;
    let write = |name: &str, text: String| {
        let p = dir.join(name);
        fs::write(&p, text).map_err(|e| Error::io(&p, e))
    };
    write("config.toml", art.config.to_toml())?;
    write("wall_clock.txt", format!("{:.6}\n", art.wall_clock.as_secs_f64()))
}
