//! Built-in experiment configurations for the worked examples and the
//! evaluation presets.

use crate::config::{
    BrokerConfig, CongestionConfig, ExperimentConfig, LinkConfig, OverrideConfig, ScriptEvent, WorkloadConfig,
    SCHEMA_VERSION,
};
use crate::graph::GraphSpec;
use crate::routing::RoutingMode;
use crate::topology::{evaluation_topology, h_graph_topology, IndexMode, TopologySpec};
use crate::workload::{HrpSpec, WorkloadSpec};

pub const FIXTURE_NAMES: [&str; 10] = [
    "fig2",
    "fig3",
    "fig6",
    "fig7-case1",
    "fig7-case2",
    "fig7-case3",
    "fig8",
    "stability",
    "stability-80k",
    "stability-60k",
];

fn base(name: &str, topology: TopologySpec, mode: RoutingMode, workload: WorkloadConfig) -> ExperimentConfig {
    ExperimentConfig {
        schema: SCHEMA_VERSION,
        name: Some(name.to_string()),
        topology,
        mode,
        compare: Vec::new(),
        workload,
        congestion: CongestionConfig::default(),
        link: LinkConfig::default(),
        broker: BrokerConfig::default(),
        max_events: 100_000_000,
        overrides: Vec::new(),
        seed: 1,
        out: None,
    }
}

fn sub(client: &str, broker: &str, filter: &str) -> ScriptEvent {
    ScriptEvent {
        tick: 0,
        client: client.into(),
        broker: broker.into(),
        subscribe: Some(filter.into()),
        publish: None,
    }
}

fn publish(tick: u64, client: &str, broker: &str, content: &str) -> ScriptEvent {
    ScriptEvent {
        tick,
        client: client.into(),
        broker: broker.into(),
        subscribe: None,
        publish: Some(content.into()),
    }
}

fn overload(link: &str) -> OverrideConfig {
    OverrideConfig {
        link: link.into(),
        both_directions: false,
        overloaded: Some(true),
        queue_len: None,
        service_rate: None,
        latency: None,
    }
}

fn backlog(link: &str, n: usize) -> OverrideConfig {
    OverrideConfig {
        link: link.into(),
        both_directions: false,
        overloaded: None,
        queue_len: Some(n),
        service_rate: None,
        latency: None,
    }
}

/// Three-vertex path `a - b - c` times a triangle.
pub fn abc_topology() -> TopologySpec {
    TopologySpec {
        af: GraphSpec::Tree(vec![("a".into(), "b".into()), ("b".into(), "c".into())]),
        cf: GraphSpec::Complete(3),
        index_mode: IndexMode::Strict,
    }
}

fn fig7(name: &str, placement: [&str; 4], overrides: Vec<OverrideConfig>) -> ExperimentConfig {
    let mut events: Vec<ScriptEvent> = placement
        .iter()
        .enumerate()
        .map(|(i, at)| sub(&format!("S{}", i + 1), at, "a eq 1"))
        .collect();
    events.push(publish(100, "P", "b,2", "a=1"));
    let mut cfg = base(name, abc_topology(), RoutingMode::Dnr, WorkloadConfig::Scripted(events));
    cfg.compare = vec![RoutingMode::Snr];
    cfg.overrides = overrides;
    cfg
}

/// HRP burst on the evaluation topology at one hundredth of the published
/// volumes. The HRP keeps its per-tick rate so it still outruns unit-rate
/// links.
pub fn stability_preset(name: &str, hrp_rate_npm: f64) -> ExperimentConfig {
    let spec = WorkloadSpec {
        subscribers: 50,
        publishers: 1,
        notifications_per_publisher: 20,
        rate_npm: 60.0,
        selectivity: 0.02,
        range_predicate: false,
        barrier_ticks: 1000,
        start_spread_ticks: 5000,
        hrp: Some(HrpSpec {
            rate_npm: hrp_rate_npm,
            count: 1000,
            start_tick: None,
            host: None,
            interested_fraction: 0.002,
        }),
    };
    let mut cfg = base(
        name,
        evaluation_topology(),
        RoutingMode::Dnr,
        WorkloadConfig::Generated(spec),
    );
    cfg.compare = vec![RoutingMode::Snr, RoutingMode::Bid];
    cfg
}

pub fn fixture(name: &str) -> Option<ExperimentConfig> {
    let empty = || WorkloadConfig::Scripted(Vec::new());
    Some(match name {
        "fig2" | "fig3" => base(name, h_graph_topology(), RoutingMode::Snr, empty()),
        "fig6" => {
            let events = vec![
                sub("S1", "a,0", "a eq 1"),
                sub("S2", "f,0", "a eq 1"),
                sub("S3", "f,1", "b eq 1"),
                sub("S4", "a,2", "a eq 1"),
                publish(100, "P1", "f,2", "a=1, b=1"),
                publish(200, "P2", "f,1", "a=1, b=0"),
                publish(300, "P3", "a,1", "a=0, b=1"),
            ];
            let mut cfg = base(
                name,
                h_graph_topology(),
                RoutingMode::Snr,
                WorkloadConfig::Scripted(events),
            );
            cfg.compare = vec![RoutingMode::Bid, RoutingMode::Dnr];
            cfg
        }
        "fig7-case1" => fig7(name, ["c,0", "c,1", "a,2", "c,2"], vec![overload("(b,2)->(b,0)")]),
        "fig7-case2" => fig7(
            name,
            ["c,0", "c,1", "a,2", "c,2"],
            vec![
                overload("(b,2)->(b,1)"),
                overload("(b,2)->(b,0)"),
                backlog("(b,2)->(a,2)", 1),
            ],
        ),
        "fig7-case3" => fig7(
            name,
            ["a,0", "c,1", "c,2", "c,2"],
            vec![
                overload("(b,2)->(c,2)"),
                overload("(b,2)->(b,0)"),
                overload("(b,2)->(b,1)"),
                overload("(b,1)->(b,0)"),
                overload("(c,1)->(c,0)"),
                backlog("(b,2)->(b,1)", 1),
                backlog("(b,2)->(b,0)", 2),
            ],
        ),
        "fig8" => {
            let spec = WorkloadSpec {
                subscribers: 100,
                publishers: 10,
                notifications_per_publisher: 10,
                rate_npm: 60.0,
                selectivity: 0.02,
                range_predicate: false,
                barrier_ticks: 1000,
                start_spread_ticks: 5000,
                hrp: None,
            };
            let mut cfg = base(
                name,
                evaluation_topology(),
                RoutingMode::Snr,
                WorkloadConfig::Generated(spec),
            );
            cfg.compare = vec![RoutingMode::Bid, RoutingMode::Dnr];
            cfg
        }
        "stability" => stability_preset(name, 100_000.0),
        "stability-80k" => stability_preset(name, 80_000.0),
        "stability-60k" => stability_preset(name, 60_000.0),
        _ => return None,
    })
}
