//! Experiment configuration: one JSON document with a versioned `schema`
//! field, validated into runnable parts before anything executes.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::matching::{ClientId, Content, Filter, NotificationId};
use crate::routing::RoutingMode;
use crate::sim::{LinkOverride, SimConfig};
use crate::topology::{ScotTopology, TopologySpec};
use crate::workload::{generate_workload, Workload, WorkloadEvent, WorkloadSpec};

pub const SCHEMA_VERSION: u32 = 1;

fn default_tau() -> f64 {
    10.0
}
fn default_window() -> u64 {
    50
}
fn default_latency() -> u64 {
    1
}
fn default_rate() -> f64 {
    1.0
}
fn default_max_events() -> u64 {
    100_000_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CongestionConfig {
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_window")]
    pub window: u64,
}

impl Default for CongestionConfig {
    fn default() -> Self {
        CongestionConfig {
            tau: default_tau(),
            window: default_window(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkConfig {
    #[serde(default = "default_latency")]
    pub latency: u64,
    #[serde(default = "default_rate")]
    pub service_rate: f64,
    #[serde(default)]
    pub client_latency: u64,
}

impl Default for LinkConfig {
    fn default() -> Self {
        LinkConfig {
            latency: default_latency(),
            service_rate: default_rate(),
            client_latency: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BrokerConfig {
    #[serde(default)]
    pub processing_delay: u64,
    #[serde(default)]
    pub match_cost_per_entry: f64,
}

/// One hand-written workload event. Exactly one of `subscribe` / `publish`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptEvent {
    #[serde(default)]
    pub tick: u64,
    pub client: String,
    pub broker: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subscribe: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub publish: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum WorkloadConfig {
    Generated(WorkloadSpec),
    Scripted(Vec<ScriptEvent>),
}

/// Link adjustment addressed by label, e.g. `"(b,2)->(b,0)"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverrideConfig {
    pub link: String,
    #[serde(default)]
    pub both_directions: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overloaded: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub queue_len: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub service_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latency: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub topology: TopologySpec,
    pub mode: RoutingMode,
    /// Further modes run on the same workload for the summary's comparison
    /// fields.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub compare: Vec<RoutingMode>,
    pub workload: WorkloadConfig,
    #[serde(default)]
    pub congestion: CongestionConfig,
    #[serde(default)]
    pub link: LinkConfig,
    #[serde(default)]
    pub broker: BrokerConfig,
    #[serde(default = "default_max_events")]
    pub max_events: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub overrides: Vec<OverrideConfig>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

/// A validated configuration, ready to simulate.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub topology: ScotTopology,
    pub workload: Workload,
    pub sim: SimConfig,
    pub overrides: Vec<LinkOverride>,
}

fn invalid(path: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        path: path.to_string(),
        message: message.into(),
    }
}

impl ExperimentConfig {
    /// Parses JSON text; `origin` names the source in error messages.
    pub fn from_json(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
            path: origin.to_string(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        if cfg.schema != SCHEMA_VERSION {
            return Err(ConfigError::Parse {
                path: origin.to_string(),
                line: line_of(text, "\"schema\""),
                column: 1,
                message: format!("unsupported schema {}, expected {SCHEMA_VERSION}", cfg.schema),
            });
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text, &path.display().to_string())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            tau: self.congestion.tau,
            window: self.congestion.window,
            latency: self.link.latency,
            service_rate: self.link.service_rate,
            client_latency: self.link.client_latency,
            processing_delay: self.broker.processing_delay,
            match_cost_per_entry: self.broker.match_cost_per_entry,
            max_events: self.max_events,
            trace: false,
        }
    }

    /// Checks every semantic constraint and builds topology, workload and
    /// link overrides.
    // negated comparisons so NaN is rejected too
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn prepare(&self) -> Result<Prepared, ConfigError> {
        if !(self.congestion.tau > 0.0) {
            return Err(invalid("congestion.tau", "must be positive"));
        }
        if self.congestion.window == 0 {
            return Err(invalid("congestion.window", "must be positive"));
        }
        if !(self.link.service_rate > 0.0 && self.link.service_rate.is_finite()) {
            return Err(invalid("link.service_rate", "must be positive"));
        }
        if !(self.broker.match_cost_per_entry >= 0.0) {
            return Err(invalid("broker.match_cost_per_entry", "must be non-negative"));
        }
        let topology = self.topology.build()?;
        let workload = match &self.workload {
            WorkloadConfig::Generated(spec) => generate_workload(spec, &topology, self.seed)
                .map_err(|e| invalid("workload.generated", e.to_string()))?,
            WorkloadConfig::Scripted(events) => scripted_workload(events, &topology)?,
        };
        let mut overrides = Vec::new();
        for (i, o) in self.overrides.iter().enumerate() {
            let path = format!("overrides[{i}]");
            let (a, b) = o
                .link
                .split_once("->")
                .ok_or_else(|| invalid(&path, format!("link `{}` is not `src->dst`", o.link)))?;
            let a = topology.parse_broker(a).map_err(|e| invalid(&path, e.to_string()))?;
            let b = topology.parse_broker(b).map_err(|e| invalid(&path, e.to_string()))?;
            if topology.link_id(a, b).is_none() {
                return Err(invalid(&path, format!("no overlay link {}", o.link)));
            }
            if let Some(r) = o.service_rate {
                if !(r > 0.0 && r.is_finite()) {
                    return Err(invalid(&path, "service_rate must be positive"));
                }
            }
            let one = |source, destination| LinkOverride {
                source,
                destination,
                overloaded: o.overloaded,
                queue_len: o.queue_len,
                service_rate: o.service_rate,
                latency: o.latency,
            };
            overrides.push(one(a, b));
            if o.both_directions {
                overrides.push(one(b, a));
            }
        }
        Ok(Prepared {
            topology,
            workload,
            sim: self.sim_config(),
            overrides,
        })
    }
}

fn line_of(text: &str, needle: &str) -> usize {
    text.lines().position(|l| l.contains(needle)).map_or(1, |i| i + 1)
}

/// Builds a workload from literal events. Client names map to ids in order of
/// first appearance.
pub fn scripted_workload(events: &[ScriptEvent], topology: &ScotTopology) -> Result<Workload, ConfigError> {
    let mut w = Workload::default();
    let mut ids: HashMap<&str, ClientId> = HashMap::new();
    for (i, e) in events.iter().enumerate() {
        let path = format!("workload.scripted[{i}]");
        let broker = topology
            .parse_broker(&e.broker)
            .map_err(|err| invalid(&path, err.to_string()))?;
        let client = *ids.entry(e.client.as_str()).or_insert_with(|| {
            w.client_names.push(e.client.clone());
            ClientId(w.client_names.len() as u32 - 1)
        });
        let ev = match (&e.subscribe, &e.publish) {
            (Some(f), None) => WorkloadEvent::Subscribe {
                tick: e.tick,
                client,
                broker,
                filter: Arc::new(Filter::parse(f).map_err(|err| invalid(&path, err.to_string()))?),
            },
            (None, Some(c)) => WorkloadEvent::Publish {
                tick: e.tick,
                id: NotificationId(0),
                client,
                broker,
                content: Arc::new(Content::parse(c).map_err(|err| invalid(&path, err.to_string()))?),
            },
            _ => return Err(invalid(&path, "needs exactly one of `subscribe` or `publish`")),
        };
        w.events.push(ev);
    }
    w.finalize();
    Ok(w)
}
