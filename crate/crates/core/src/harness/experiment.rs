//! Replicated runs, metric files and the summary document.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::build::{build, BuildError};
use super::metrics::{sample, to_csv, Row};
use super::scenario::Scenario;
use crate::nodes::SimNode;
use crate::simnet::{SimDuration, SimTime, Simulator};

/// Environment variable overriding the output directory.
pub const OUT_ENV: &str = "NDN_DOS_OUT";

/// A finished simulation and the rows sampled from it.
pub struct Run {
    pub sim: Simulator<SimNode>,
    pub rows: Vec<Row>,
}

impl Run {
    pub fn csv(&self) -> Vec<u8> {
        to_csv(&self.rows)
    }

    /// Rows for one node, in time order.
    pub fn series<'a>(&'a self, node: &'a str) -> impl Iterator<Item = &'a Row> + 'a {
        self.rows.iter().filter(move |r| r.node == node)
    }
}

pub fn simulate(scn: &Scenario, seed: u64) -> Result<Run, BuildError> {
    let mut sim = build(scn, seed)?;
    let topo = scn.topology.clone();
    let mut rows = Vec::new();
    sim.run(
        SimTime::from_ms(scn.doc.duration_ms),
        SimDuration::from_ms(scn.doc.tick_ms),
        |now, nodes| rows.extend(sample(now, &topo, nodes)),
    );
    Ok(Run { sim, rows })
}

/// CSV bytes and scalar metrics of one replicate.
type Replicate = (Vec<u8>, BTreeMap<String, f64>);

/// Scalar results of one replicate, all computable from its CSV alone.
pub fn replicate_metrics(rows: &[Row]) -> BTreeMap<String, f64> {
    let mut m = BTreeMap::new();
    let Some(last_t) = rows.iter().map(|r| r.time_ms).max() else {
        return m;
    };
    let last: Vec<&Row> = rows.iter().filter(|r| r.time_ms == last_t).collect();
    let total = |col: &str, role: &str| -> f64 {
        last.iter()
            .filter(|r| r.role == role)
            .map(|r| r.get(col).unwrap_or(0.0))
            .sum()
    };
    let completed = total("consumer_completed", "consumer");
    let failed = total("consumer_failed", "consumer");
    let sat = if completed + failed > 0.0 {
        completed / (completed + failed)
    } else {
        1.0
    };
    m.insert("honest_satisfaction".into(), sat);
    m.insert("consumer_completed".into(), completed);
    m.insert("consumer_failed".into(), failed);
    m.insert("poisoned_delivered".into(), total("poisoned_delivered", "consumer"));
    m.insert("accepted_poisoned".into(), total("accepted_poisoned", "consumer"));
    m.insert("producer_interests".into(), total("producer_interests", "producer"));
    m.insert(
        "producer_attack_interests".into(),
        total("producer_attack_interests", "producer"),
    );
    for role in ["router", "compromised-router"] {
        for col in ["poisoned_cached", "fake_cached", "rejected", "forwarded"] {
            *m.entry(col.into()).or_insert(0.0) += total(col, role);
        }
    }
    let mut routers: Vec<&str> = last
        .iter()
        .filter(|r| r.role == "router" || r.role == "compromised-router")
        .map(|r| r.node.as_str())
        .collect();
    routers.sort_unstable();
    for node in routers {
        let pits: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.node == node)
            .map(|r| (r.get("pit").unwrap_or(0.0), r.get("pit_attack").unwrap_or(0.0)))
            .collect();
        let n = pits.len() as f64;
        m.insert(format!("max_pit.{node}"), pits.iter().map(|p| p.0).fold(0.0, f64::max));
        m.insert(format!("mean_pit.{node}"), pits.iter().map(|p| p.0).sum::<f64>() / n);
        m.insert(
            format!("mean_pit_attack.{node}"),
            pits.iter().map(|p| p.1).sum::<f64>() / n,
        );
    }
    m
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stat {
    pub mean: f64,
    /// 95% Student-t confidence interval for the mean.
    pub ci95: [f64; 2],
    pub values: Vec<f64>,
}

pub fn stat(values: &[f64]) -> Stat {
    let n = values.len();
    let mean = if n == 0 {
        0.0
    } else {
        values.iter().sum::<f64>() / n as f64
    };
    let half = if n < 2 {
        0.0
    } else {
        let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
            .expect("dof >= 1")
            .inverse_cdf(0.975);
        t * (var / n as f64).sqrt()
    };
    Stat {
        mean,
        ci95: [mean - half, mean + half],
        values: values.to_vec(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ArmSummary {
    pub seeds: Vec<u64>,
    pub files: Vec<String>,
    pub metrics: BTreeMap<String, Stat>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub scenario: String,
    pub base_seed: u64,
    pub replicates: usize,
    pub arms: BTreeMap<String, ArmSummary>,
}

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error("scenario: {}", .0.join("; "))]
    Scenario(Vec<String>),
    #[error("writing {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Output directory: the override variable if set, else `default`.
pub fn output_dir(default: &Path) -> PathBuf {
    std::env::var_os(OUT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| default.to_path_buf())
}

/// Runs `replicates` seeds (base seed + index) of every arm, writing
/// `<arm>/replicate-<k>.csv` per run and `summary.json` under `out`.
pub fn run_experiment(
    scn: &Scenario,
    replicates: usize,
    base_seed: u64,
    out: &Path,
) -> Result<Summary, ExperimentError> {
    let arms = scn.arms().map_err(ExperimentError::Scenario)?;
    let seeds: Vec<u64> = (0..replicates as u64).map(|k| base_seed.wrapping_add(k)).collect();
    let mut summary = Summary {
        scenario: scn.doc.name.clone(),
        base_seed,
        replicates,
        arms: BTreeMap::new(),
    };
    for (arm, s) in &arms {
        let dir = out.join(arm);
        fs::create_dir_all(&dir).map_err(io(&dir))?;
        let results: Vec<Result<Replicate, BuildError>> = std::thread::scope(|sc| {
            let handles: Vec<_> = seeds
                .iter()
                .map(|&seed| {
                    sc.spawn(move || {
                        let run = simulate(s, seed)?;
                        Ok((run.csv(), replicate_metrics(&run.rows)))
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("replicate thread"))
                .collect()
        });
        let mut per_metric: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        let mut files = Vec::new();
        for (k, r) in results.into_iter().enumerate() {
            let (csv, metrics) = r?;
            let name = format!("replicate-{k}.csv");
            let path = dir.join(&name);
            fs::write(&path, csv).map_err(io(&path))?;
            files.push(format!("{arm}/{name}"));
            for (key, v) in metrics {
                per_metric.entry(key).or_default().push(v);
            }
        }
        summary.arms.insert(
            arm.clone(),
            ArmSummary {
                seeds: seeds.clone(),
                files,
                metrics: per_metric.into_iter().map(|(k, v)| (k, stat(&v))).collect(),
            },
        );
    }
    let path = out.join("summary.json");
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    fs::write(&path, text).map_err(io(&path))?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ci_of_constant_is_degenerate() {
        let s = stat(&[2.0, 2.0, 2.0]);
        assert_eq!(s.mean, 2.0);
        assert_eq!(s.ci95, [2.0, 2.0]);
    }

    #[test]
    fn ci_matches_t_table() {
        // n = 2: t(0.975, 1) = 12.706.
        let s = stat(&[0.0, 2.0]);
        let half = s.ci95[1] - 1.0;
        assert!((half - 12.7062 * (2.0f64 / 2.0).sqrt()).abs() < 1e-3, "{half}");
    }
}
