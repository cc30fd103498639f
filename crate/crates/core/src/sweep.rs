//! Parameter sweeps over the evaluation scenarios. Grid points are independent
//! runs; each gets its own output directory.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, WorkloadConfig};
use crate::experiment::{run_experiment, ExperimentError};
use crate::fixtures::{fixture, stability_preset};
use crate::par;
use crate::routing::RoutingMode;
use crate::workload::WorkloadSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    SubscriberScalability,
    PublisherScalability,
    Stability,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 3] = [
        ScenarioKind::SubscriberScalability,
        ScenarioKind::PublisherScalability,
        ScenarioKind::Stability,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::SubscriberScalability => "subscriber-scalability",
            ScenarioKind::PublisherScalability => "publisher-scalability",
            ScenarioKind::Stability => "stability",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        ScenarioKind::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| {
            format!("unknown scenario `{s}` (expected one of subscriber-scalability, publisher-scalability, stability)")
        })
    }
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub label: String,
    pub config: ExperimentConfig,
}

fn scaled(n: usize, divisor: usize) -> usize {
    (n / divisor.max(1)).max(1)
}

fn scalability(subscribers: usize, publishers: usize, per_publisher: usize, rate_npm: f64) -> WorkloadSpec {
    WorkloadSpec {
        subscribers,
        publishers,
        notifications_per_publisher: per_publisher,
        rate_npm,
        selectivity: 0.02,
        range_predicate: false,
        barrier_ticks: 1000,
        start_spread_ticks: 5000,
        hrp: None,
    }
}

/// Grid for `kind` with client counts and volumes divided by `divisor`
/// (1 gives the published sizes). Every point compares all three modes.
pub fn grid(kind: ScenarioKind, divisor: usize, seed: u64) -> Vec<SweepPoint> {
    let base = fixture("fig8").expect("built-in fixture");
    let point = |label: String, workload: WorkloadSpec| {
        let mut config = base.clone();
        config.name = Some(format!("{kind}/{label}"));
        config.mode = RoutingMode::Bid;
        config.compare = vec![RoutingMode::Snr, RoutingMode::Dnr];
        config.workload = WorkloadConfig::Generated(workload);
        config.seed = seed;
        SweepPoint { label, config }
    };
    match kind {
        ScenarioKind::SubscriberScalability => [500, 1000, 2500, 5000, 10_000]
            .into_iter()
            .map(|s| {
                point(
                    format!("subscribers-{s:05}"),
                    scalability(scaled(s, divisor), scaled(100, divisor), scaled(1000, divisor), 60.0),
                )
            })
            .collect(),
        ScenarioKind::PublisherScalability => [100, 200, 300, 400, 500]
            .into_iter()
            .map(|p| {
                point(
                    format!("publishers-{p:03}"),
                    scalability(scaled(3000, divisor), scaled(p, divisor), scaled(500, divisor), 100.0),
                )
            })
            .collect(),
        ScenarioKind::Stability => [100_000.0, 80_000.0, 60_000.0]
            .into_iter()
            .map(|rate| {
                let label = format!("hrp-{}k", rate as u64 / 1000);
                let mut config = stability_preset(&label, rate);
                if let WorkloadConfig::Generated(w) = &mut config.workload {
                    w.subscribers = scaled(5000, divisor);
                    w.publishers = scaled(100, divisor);
                    w.notifications_per_publisher = scaled(2000, divisor);
                    if let Some(h) = &mut w.hrp {
                        h.count = scaled(100_000, divisor);
                    }
                }
                config.name = Some(format!("{kind}/{label}"));
                config.seed = seed;
                SweepPoint { label, config }
            })
            .collect(),
    }
}

/// `root/name`, or `root/name-2`, `root/name-3`, ... when taken.
pub fn unique_dir(root: &Path, name: &str, taken: &[PathBuf]) -> PathBuf {
    let mut candidate = root.join(name);
    let mut n = 2;
    while candidate.exists() || taken.contains(&candidate) {
        candidate = root.join(format!("{name}-{n}"));
        n += 1;
    }
    candidate
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub label: String,
    pub dir: PathBuf,
    pub result: Result<String, ExperimentError>,
}

/// Runs every grid point under `root/<scenario>/`, with up to `threads`
/// concurrent runs.
pub fn run_sweep(points: &[SweepPoint], kind: ScenarioKind, root: &Path, threads: usize) -> Vec<SweepOutcome> {
    let base = root.join(kind.name());
    let mut dirs: Vec<PathBuf> = Vec::with_capacity(points.len());
    for p in points {
        let d = unique_dir(&base, &p.label, &dirs);
        dirs.push(d);
    }
    let jobs: Vec<(&SweepPoint, &PathBuf)> = points.iter().zip(&dirs).collect();
    par::map_with_threads(&jobs, threads, |(p, dir)| SweepOutcome {
        label: p.label.clone(),
        dir: (*dir).clone(),
        result: run_experiment(&p.config, Some(dir), false).map(|r| r.summary),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_have_published_shapes() {
        let g = grid(ScenarioKind::SubscriberScalability, 1, 1);
        let subs: Vec<usize> = g
            .iter()
            .map(|p| match &p.config.workload {
                WorkloadConfig::Generated(w) => w.subscribers,
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(subs, vec![500, 1000, 2500, 5000, 10_000]);
        assert_eq!(grid(ScenarioKind::PublisherScalability, 100, 1).len(), 5);
        assert_eq!(grid(ScenarioKind::Stability, 100, 1)[2].label, "hrp-60k");
        for k in ScenarioKind::ALL {
            assert_eq!(k.name().parse::<ScenarioKind>().unwrap(), k);
            for p in grid(k, 1000, 3) {
                p.config.prepare().unwrap();
            }
        }
    }

    #[test]
    fn never_overwrites() {
        let root = tempfile::tempdir().unwrap();
        let points: Vec<SweepPoint> = grid(ScenarioKind::PublisherScalability, 1000, 1)
            .into_iter()
            .take(2)
            .collect();
        let dup = vec![points[0].clone(), points[0].clone()];
        let first = run_sweep(&dup, ScenarioKind::PublisherScalability, root.path(), 2);
        let second = run_sweep(&points[..1], ScenarioKind::PublisherScalability, root.path(), 1);
        let mut dirs: Vec<PathBuf> = first.iter().chain(&second).map(|o| o.dir.clone()).collect();
        assert!(first.iter().chain(&second).all(|o| o.result.is_ok()));
        dirs.sort();
        dirs.dedup();
        assert_eq!(dirs.len(), 3);
        for d in dirs {
            assert!(d.join("summary.txt").exists());
        }
    }
}
