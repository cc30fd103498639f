//! Runs one configuration and writes its artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::config::{ExperimentConfig, Prepared};
use crate::error::{ConfigError, SimError};
use crate::routing::RoutingMode;
use crate::sim::{self, metrics, SimReport};
use crate::topology::LinkRef;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("writing {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl ExperimentError {
    /// Process exit status: 2 for configuration problems, 3 for timeouts.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) => 2,
            ExperimentError::Sim(SimError::Timeout { .. }) => 3,
            ExperimentError::Sim(SimError::Topology(_) | SimError::UnknownLink(_)) => 2,
            ExperimentError::Io { .. } => 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub prepared: Prepared,
    /// Primary mode first, then each comparison mode.
    pub reports: Vec<SimReport>,
    pub summary: String,
}

impl ExperimentResult {
    pub fn primary(&self) -> &SimReport {
        &self.reports[0]
    }

    pub fn report(&self, mode: RoutingMode) -> Option<&SimReport> {
        self.reports.iter().find(|r| r.mode == Some(mode))
    }
}

fn mean_max(xs: impl Iterator<Item = u64>) -> (f64, u64) {
    let (mut n, mut sum, mut max) = (0u64, 0u64, 0u64);
    for x in xs {
        n += 1;
        sum += x;
        max = max.max(x);
    }
    (if n == 0 { 0.0 } else { sum as f64 / n as f64 }, max)
}

/// Mean queue length over `links`, averaged across every window up to
/// `horizon` (exclusive); idle windows count as zero.
pub fn mean_queue_len(report: &SimReport, links: &[LinkRef], horizon: u64, window: u64) -> f64 {
    let windows = horizon.div_ceil(window).max(1);
    let total: usize = report
        .windows
        .iter()
        .filter(|w| w.window_start < horizon && links.contains(&w.link))
        .map(|w| w.q_len)
        .sum();
    total as f64 / (windows as f64 * links.len().max(1) as f64)
}

/// The HRP host's outgoing iCOLs toward clusters with an interested
/// subscriber.
pub fn hrp_target_icols(prepared: &Prepared) -> Vec<LinkRef> {
    let Some(h) = &prepared.workload.hrp else {
        return Vec::new();
    };
    let topo = &prepared.topology;
    let mut clusters: Vec<usize> = prepared
        .workload
        .events
        .iter()
        .filter_map(|e| match e {
            crate::workload::WorkloadEvent::Subscribe { client, broker, .. } if h.interested.contains(client) => {
                Some(broker.cluster())
            }
            _ => None,
        })
        .filter(|&c| c != h.host.cluster())
        .collect();
    clusters.sort_unstable();
    clusters.dedup();
    clusters
        .into_iter()
        .filter_map(|c| topo.icol_toward(h.host, c).ok())
        .collect()
}

fn summarize(prepared: &Prepared, reports: &[SimReport]) -> String {
    let mut s = String::new();
    let topo = &prepared.topology;
    let r = &reports[0];
    let expected = prepared.workload.expected_deliveries().len();
    let (sub_mean, sub_max) = mean_max(r.subscriptions.iter().map(|s| s.settled_tick - s.issue_tick));
    let (pub_mean, pub_max) = mean_max(r.deliveries.iter().map(|d| d.delivery_tick - d.issue_tick));
    let mode = r.mode.map_or("", RoutingMode::name);
    let _ = writeln!(s, "mode={mode}");
    let _ = writeln!(s, "brokers={}", topo.broker_count());
    let _ = writeln!(s, "links={}", topo.overlay_edge_count());
    let _ = writeln!(s, "clusters={}", topo.cluster_count());
    let _ = writeln!(s, "regions={}", topo.region_count());
    let _ = writeln!(s, "subscriptions={}", r.subscriptions.len());
    let _ = writeln!(s, "notifications={}", r.notifications.len());
    let _ = writeln!(s, "deliveries={}", r.deliveries.len());
    let _ = writeln!(s, "expected_deliveries={expected}");
    let _ = writeln!(s, "total_ims={}", r.total_ims());
    let _ = writeln!(s, "subscription_ims={}", r.subscription_ims());
    let _ = writeln!(s, "notification_ims={}", r.notification_ims());
    let _ = writeln!(s, "mean_subscription_delay={sub_mean:.3}");
    let _ = writeln!(s, "max_subscription_delay={sub_max}");
    let _ = writeln!(s, "mean_notification_delay={pub_mean:.3}");
    let _ = writeln!(s, "max_notification_delay={pub_max}");
    let _ = writeln!(s, "quiescence_tick={}", r.quiescence_tick);
    let _ = writeln!(s, "match_invocations={}", r.match_invocations);
    let _ = writeln!(s, "dnr_case_i={}", r.dnr_cases[0]);
    let _ = writeln!(s, "dnr_case_ii={}", r.dnr_cases[1]);
    let _ = writeln!(s, "dnr_case_iii={}", r.dnr_cases[2]);
    let _ = writeln!(
        s,
        "congested_windows={}",
        r.windows.iter().filter(|w| w.congested).count()
    );
    let _ = writeln!(s, "violations={}", r.violations.len());
    for c in &reports[1..] {
        let name = c.mode.map_or("", RoutingMode::name);
        let (mean, max) = mean_max(c.deliveries.iter().map(|d| d.delivery_tick - d.issue_tick));
        let _ = writeln!(s, "compare.{name}.total_ims={}", c.total_ims());
        let _ = writeln!(s, "compare.{name}.notification_ims={}", c.notification_ims());
        let _ = writeln!(s, "compare.{name}.deliveries={}", c.deliveries.len());
        let _ = writeln!(s, "compare.{name}.mean_notification_delay={mean:.3}");
        let _ = writeln!(s, "compare.{name}.max_notification_delay={max}");
        let _ = writeln!(s, "compare.{name}.quiescence_tick={}", c.quiescence_tick);
    }
    let targets = hrp_target_icols(prepared);
    if !targets.is_empty() {
        let horizon = reports.iter().map(|r| r.quiescence_tick + 1).max().unwrap_or(1);
        for r in reports {
            let name = r.mode.map_or("", RoutingMode::name);
            let q = mean_queue_len(r, &targets, horizon, prepared.sim.window);
            let _ = writeln!(s, "hrp_target_mean_queue.{name}={q:.3}");
        }
    }
    s
}

fn write_file(path: PathBuf, bytes: &[u8]) -> Result<(), ExperimentError> {
    fs::write(&path, bytes).map_err(|source| ExperimentError::Io { path, source })
}

/// Validates `cfg`, runs the primary mode and every comparison mode, and
/// writes `messages.csv`, `links.csv` and `summary.txt` (plus `trace.txt`
/// when tracing) into `out` if given.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    out: Option<&Path>,
    trace: bool,
) -> Result<ExperimentResult, ExperimentError> {
    let prepared = cfg.prepare()?;
    let mut modes = vec![cfg.mode];
    for m in &cfg.compare {
        if !modes.contains(m) {
            modes.push(*m);
        }
    }
    let mut reports = Vec::with_capacity(modes.len());
    for (i, mode) in modes.into_iter().enumerate() {
        let mut sim_cfg = prepared.sim.clone();
        sim_cfg.trace = trace && i == 0;
        reports.push(sim::run(
            &prepared.topology,
            mode,
            &prepared.workload,
            &sim_cfg,
            &prepared.overrides,
        )?);
    }
    let summary = summarize(&prepared, &reports);
    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(|source| ExperimentError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let r = &reports[0];
        let mut buf = Vec::new();
        metrics::write_messages_csv(&mut buf, r, &prepared.workload).map_err(|e| ExperimentError::Io {
            path: dir.join("messages.csv"),
            source: e.into(),
        })?;
        write_file(dir.join("messages.csv"), &buf)?;
        let mut buf = Vec::new();
        metrics::write_links_csv(&mut buf, r, &prepared.topology).map_err(|e| ExperimentError::Io {
            path: dir.join("links.csv"),
            source: e.into(),
        })?;
        write_file(dir.join("links.csv"), &buf)?;
        write_file(dir.join("summary.txt"), summary.as_bytes())?;
        if trace {
            let mut t = r.trace.join("\n");
            t.push('\n');
            write_file(dir.join("trace.txt"), t.as_bytes())?;
        }
    }
    Ok(ExperimentResult {
        prepared,
        reports,
        summary,
    })
}

/// Parses `key=value` summary lines.
pub fn parse_summary(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}
