//! Shared helpers for integration tests: a random small-SCOT corpus and an
//! exhaustive matching oracle that does not go through the library matcher.

#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use scotsim::config::{scripted_workload, ScriptEvent};
use scotsim::graph::GraphSpec;
use scotsim::sim::{LinkOverride, SimReport};
use scotsim::topology::{IndexMode, ScotTopology, TopologySpec};
use scotsim::workload::Workload;

pub const ATTRS: [&str; 2] = ["x", "y"];
const OPS: [&str; 6] = ["eq", "neq", "lt", "le", "gt", "ge"];

#[derive(Debug, Clone)]
pub struct Pred {
    pub attr: usize,
    pub op: usize,
    pub value: i64,
}

impl Pred {
    fn holds(&self, values: &[Option<i64>; 2]) -> bool {
        let Some(v) = values[self.attr] else {
            return false;
        };
        match OPS[self.op] {
            "eq" => v == self.value,
            "neq" => v != self.value,
            "lt" => v < self.value,
            "le" => v <= self.value,
            "gt" => v > self.value,
            _ => v >= self.value,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Case {
    pub spec: TopologySpec,
    pub topology: ScotTopology,
    pub events: Vec<ScriptEvent>,
    /// (subscriber name, publisher name) pairs that must be delivered.
    pub expected: BTreeSet<(String, String)>,
    pub overloads: Vec<LinkOverride>,
}

impl Case {
    pub fn workload(&self) -> Workload {
        scripted_workload(&self.events, &self.topology).expect("corpus events are valid")
    }
}

/// Random tree on `n` vertices by attaching each vertex to an earlier one.
fn random_tree(rng: &mut ChaCha8Rng, n: usize) -> GraphSpec {
    let vertices: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    let edges = (1..n)
        .map(|i| (vertices[rng.gen_range(0..i)].clone(), vertices[i].clone()))
        .collect();
    GraphSpec::Explicit { vertices, edges }
}

pub fn random_case(seed: u64) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let regions = rng.gen_range(1..=7);
    let spec = TopologySpec {
        af: random_tree(&mut rng, regions),
        cf: GraphSpec::Complete(rng.gen_range(2..=4)),
        index_mode: IndexMode::Strict,
    };
    let topology = spec.build().expect("random SCOT is valid");
    let brokers: Vec<_> = topology.brokers().collect();
    let pick = |rng: &mut ChaCha8Rng| topology.broker_label(brokers[rng.gen_range(0..brokers.len())]);

    let mut events = Vec::new();
    let mut subs: Vec<(String, Vec<Pred>)> = Vec::new();
    for i in 0..rng.gen_range(1..=50) {
        let mut preds = vec![Pred {
            attr: rng.gen_range(0..2),
            op: rng.gen_range(0..OPS.len()),
            value: rng.gen_range(0..4),
        }];
        if rng.gen_bool(0.3) {
            preds.push(Pred {
                attr: 1 - preds[0].attr,
                op: rng.gen_range(0..OPS.len()),
                value: rng.gen_range(0..4),
            });
        }
        let text = preds
            .iter()
            .map(|p| format!("{} {} {}", ATTRS[p.attr], OPS[p.op], p.value))
            .collect::<Vec<_>>()
            .join(", ");
        let name = format!("S{i}");
        events.push(ScriptEvent {
            tick: rng.gen_range(0..20),
            client: name.clone(),
            broker: pick(&mut rng),
            subscribe: Some(text),
            publish: None,
        });
        subs.push((name, preds));
    }
    let mut expected = BTreeSet::new();
    for j in 0..rng.gen_range(0..=20) {
        let values = [
            Some(rng.gen_range(0..4i64)),
            rng.gen_bool(0.8).then(|| rng.gen_range(0..4i64)),
        ];
        let text = ATTRS
            .iter()
            .zip(values)
            .filter_map(|(a, v)| v.map(|v| format!("{a}={v}")))
            .collect::<Vec<_>>()
            .join(", ");
        let name = format!("P{j}");
        events.push(ScriptEvent {
            tick: 500 + rng.gen_range(0..40),
            client: name.clone(),
            broker: pick(&mut rng),
            subscribe: None,
            publish: Some(text),
        });
        for (s, preds) in &subs {
            if preds.iter().all(|p| p.holds(&values)) {
                expected.insert((s.clone(), name.clone()));
            }
        }
    }
    let mut overloads = Vec::new();
    for l in topology.links() {
        if rng.gen_bool(0.3) {
            overloads.push(LinkOverride {
                source: l.source,
                destination: l.destination,
                overloaded: Some(true),
                queue_len: Some(rng.gen_range(0..6)),
                ..Default::default()
            });
        } else if rng.gen_bool(0.3) {
            overloads.push(LinkOverride {
                source: l.source,
                destination: l.destination,
                queue_len: Some(rng.gen_range(0..6)),
                ..Default::default()
            });
        }
    }
    Case {
        spec,
        topology,
        events,
        expected,
        overloads,
    }
}

type Pair = (String, String);

/// Delivered (subscriber, publisher) names, plus any pair seen twice.
pub fn delivered(report: &SimReport, workload: &Workload) -> (BTreeSet<Pair>, Vec<Pair>) {
    let mut set = BTreeSet::new();
    let mut repeats = Vec::new();
    for d in &report.deliveries {
        let pair = (workload.client_name(d.subscriber), workload.client_name(d.publisher));
        if !set.insert(pair.clone()) {
            repeats.push(pair);
        }
    }
    (set, repeats)
}

/// Diameter by breadth-first search from every vertex of the acyclic factor.
pub fn bfs_diameter(topology: &ScotTopology) -> u32 {
    let g = topology.acyclic_factor();
    let mut best = 0;
    for s in 0..g.order() {
        let mut dist = vec![u32::MAX; g.order()];
        dist[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(v) = q.pop_front() {
            for &w in g.neighbours(v) {
                if dist[w] == u32::MAX {
                    dist[w] = dist[v] + 1;
                    q.push_back(w);
                }
            }
        }
        best = best.max(dist.into_iter().max().unwrap_or(0));
    }
    best
}
