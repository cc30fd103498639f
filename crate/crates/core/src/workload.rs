//! Timed client workloads: scripted lists and the seeded generator.
//!
//! Generated subscriptions are one equality predicate on a stock symbol drawn
//! from a pool of `ceil(1/selectivity)` symbols (out of a 500-symbol
//! universe), optionally with `price lt 50`, which half of all notifications
//! pass. Notifications carry ten attributes and draw their symbol from the
//! same pool, so the marginal match probability is `1/pool` (or half that).

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::matching::{ClientId, Content, Filter, NotificationId, Op, Predicate, Value};
use crate::par;
use crate::topology::{BrokerId, ScotTopology};

pub const SYMBOL_UNIVERSE: usize = 500;
pub const ATTRIBUTES_PER_NOTIFICATION: usize = 10;
/// Symbol reserved for the high-rate publisher's stream.
pub const HRP_SYMBOL: &str = "HRP";
const TICKS_PER_MINUTE: f64 = 60_000.0;

#[derive(Debug, Clone, PartialEq)]
pub enum WorkloadEvent {
    Subscribe {
        tick: u64,
        client: ClientId,
        broker: BrokerId,
        filter: Arc<Filter>,
    },
    Publish {
        tick: u64,
        id: NotificationId,
        client: ClientId,
        broker: BrokerId,
        content: Arc<Content>,
    },
}

impl WorkloadEvent {
    pub fn tick(&self) -> u64 {
        match self {
            WorkloadEvent::Subscribe { tick, .. } | WorkloadEvent::Publish { tick, .. } => *tick,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HrpInfo {
    pub host: BrokerId,
    pub client: ClientId,
    pub interested: Vec<ClientId>,
}

/// Events in issue order plus client display names indexed by `ClientId`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Workload {
    pub events: Vec<WorkloadEvent>,
    pub client_names: Vec<String>,
    pub hrp: Option<HrpInfo>,
}

impl Workload {
    /// Stable-sorts by tick and renumbers notifications in the new order.
    pub fn finalize(&mut self) {
        self.events.sort_by_key(WorkloadEvent::tick);
        let mut next = 0;
        for e in &mut self.events {
            if let WorkloadEvent::Publish { id, .. } = e {
                *id = NotificationId(next);
                next += 1;
            }
        }
    }

    pub fn client_name(&self, c: ClientId) -> String {
        self.client_names
            .get(c.0 as usize)
            .cloned()
            .unwrap_or_else(|| c.to_string())
    }

    pub fn subscriptions(&self) -> impl Iterator<Item = (ClientId, &Arc<Filter>)> {
        self.events.iter().filter_map(|e| match e {
            WorkloadEvent::Subscribe { client, filter, .. } => Some((*client, filter)),
            _ => None,
        })
    }

    pub fn publications(&self) -> impl Iterator<Item = (NotificationId, ClientId, &Arc<Content>)> {
        self.events.iter().filter_map(|e| match e {
            WorkloadEvent::Publish {
                id, client, content, ..
            } => Some((*id, *client, content)),
            _ => None,
        })
    }

    pub fn subscription_count(&self) -> usize {
        self.subscriptions().count()
    }

    pub fn publication_count(&self) -> usize {
        self.publications().count()
    }

    /// Every (subscriber, notification) pair whose filter matches, by
    /// exhaustive cross product. A client with several matching filters
    /// appears once.
    pub fn expected_deliveries(&self) -> BTreeSet<(ClientId, NotificationId)> {
        let subs: Vec<(ClientId, Arc<Filter>)> = self.subscriptions().map(|(c, f)| (c, f.clone())).collect();
        let pubs: Vec<(NotificationId, Arc<Content>)> = self.publications().map(|(id, _, c)| (id, c.clone())).collect();
        par::map_batch(&pubs, |(id, content)| {
            subs.iter()
                .filter(|(_, f)| f.matches(content))
                .map(|(c, _)| (*c, *id))
                .collect::<Vec<_>>()
        })
        .into_iter()
        .flatten()
        .collect()
    }

    /// Matching fraction over the full subscription x notification product,
    /// HRP traffic excluded.
    pub fn empirical_selectivity(&self) -> f64 {
        let hrp = self.hrp.as_ref();
        let excluded = |c: ClientId| hrp.is_some_and(|h| h.client == c || h.interested.contains(&c));
        let subs: Vec<&Arc<Filter>> = self
            .subscriptions()
            .filter(|(c, _)| !excluded(*c))
            .map(|(_, f)| f)
            .collect();
        let pubs: Vec<&Arc<Content>> = self
            .publications()
            .filter(|(_, c, _)| !excluded(*c))
            .map(|(_, _, c)| c)
            .collect();
        let total = subs.len() * pubs.len();
        if total == 0 {
            return 0.0;
        }
        let hits: usize = par::map_batch(&pubs, |content| subs.iter().filter(|f| f.matches(content)).count())
            .into_iter()
            .sum();
        hits as f64 / total as f64
    }
}

fn default_barrier() -> u64 {
    1000
}

fn default_spread() -> u64 {
    5000
}

fn default_interested_fraction() -> f64 {
    0.002
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HrpSpec {
    pub rate_npm: f64,
    pub count: usize,
    /// Defaults to the registration barrier.
    #[serde(default)]
    pub start_tick: Option<u64>,
    /// Broker label such as `vii,0`; drawn from the seed when absent.
    #[serde(default)]
    pub host: Option<String>,
    #[serde(default = "default_interested_fraction")]
    pub interested_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadSpec {
    pub subscribers: usize,
    pub publishers: usize,
    pub notifications_per_publisher: usize,
    /// Per-publisher rate in notifications per minute.
    pub rate_npm: f64,
    pub selectivity: f64,
    #[serde(default)]
    pub range_predicate: bool,
    /// Publishing starts after this many ticks.
    #[serde(default = "default_barrier")]
    pub barrier_ticks: u64,
    /// Each publisher's first notification is offset uniformly in `[0, spread)`.
    #[serde(default = "default_spread")]
    pub start_spread_ticks: u64,
    #[serde(default)]
    pub hrp: Option<HrpSpec>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WorkloadError {
    #[error("selectivity {value} is unreachable; achievable range is [{min}, {max}]")]
    Selectivity { value: f64, min: f64, max: f64 },
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error("unknown HRP host broker `{0}`")]
    UnknownHost(String),
    #[error("HRP host cannot be the only broker")]
    NoRoomForInterested,
}

impl WorkloadSpec {
    /// Achievable selectivity range under this spec's predicate shape.
    pub fn selectivity_range(&self) -> (f64, f64) {
        let pass = if self.range_predicate { 0.5 } else { 1.0 };
        (pass / SYMBOL_UNIVERSE as f64, pass)
    }

    fn pool_size(&self) -> Result<usize, WorkloadError> {
        let (min, max) = self.selectivity_range();
        let s = self.selectivity;
        if !(s > 0.0 && s.is_finite()) || s < min - 1e-12 || s > max + 1e-12 {
            return Err(WorkloadError::Selectivity { value: s, min, max });
        }
        Ok(((max / s) - 1e-9).ceil().clamp(1.0, SYMBOL_UNIVERSE as f64) as usize)
    }

    pub fn validate(&self) -> Result<(), WorkloadError> {
        self.pool_size()?;
        if self.publishers > 0 && self.notifications_per_publisher > 0 && self.rate_npm <= 0.0 {
            return Err(WorkloadError::NonPositive("rate_npm"));
        }
        if let Some(h) = &self.hrp {
            if h.rate_npm <= 0.0 {
                return Err(WorkloadError::NonPositive("hrp.rate_npm"));
            }
        }
        Ok(())
    }
}

fn symbol(i: usize) -> String {
    format!("SYM{i:03}")
}

fn content_for(rng: &mut ChaCha8Rng, sym: &str) -> Content {
    let mut attrs = vec![
        ("symbol".to_string(), Value::Text(sym.to_string())),
        ("price".to_string(), Value::Num(rng.gen_range(0..100) as f64)),
        ("volume".to_string(), Value::Num(rng.gen_range(1..10_000) as f64)),
        (
            "exchange".to_string(),
            Value::Text(["NYSE", "NASDAQ", "TSX"][rng.gen_range(0..3)].into()),
        ),
    ];
    for name in ["open", "high", "low", "close", "bid", "ask"] {
        attrs.push((name.to_string(), Value::Num(rng.gen_range(0..1000) as f64 / 10.0)));
    }
    debug_assert_eq!(attrs.len(), ATTRIBUTES_PER_NOTIFICATION);
    Content::new(attrs).expect("generated attribute names are unique")
}

/// Deterministic workload: identical (spec, topology, seed) give identical
/// events.
pub fn generate_workload(spec: &WorkloadSpec, topology: &ScotTopology, seed: u64) -> Result<Workload, WorkloadError> {
    spec.validate()?;
    let pool = spec.pool_size()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let brokers: Vec<BrokerId> = topology.brokers().collect();
    let mut w = Workload::default();
    let mut next_client = 0u32;
    let mut new_client = |w: &mut Workload, name: String| {
        let c = ClientId(next_client);
        next_client += 1;
        w.client_names.push(name);
        c
    };

    for i in 0..spec.subscribers {
        let client = new_client(&mut w, format!("sub{i}"));
        let broker = brokers[rng.gen_range(0..brokers.len())];
        let sym = symbol(rng.gen_range(0..pool));
        let mut preds = vec![Predicate::new("symbol", Op::Eq, Value::Text(sym)).expect("eq on text")];
        if spec.range_predicate {
            preds.push(Predicate::new("price", Op::Lt, 50.0).expect("numeric ordering"));
        }
        w.events.push(WorkloadEvent::Subscribe {
            tick: 0,
            client,
            broker,
            filter: Arc::new(Filter::new(preds).expect("non-empty filter")),
        });
    }

    let interval = if spec.rate_npm > 0.0 {
        TICKS_PER_MINUTE / spec.rate_npm
    } else {
        0.0
    };
    for p in 0..spec.publishers {
        let client = new_client(&mut w, format!("pub{p}"));
        let broker = brokers[rng.gen_range(0..brokers.len())];
        let offset = if spec.start_spread_ticks > 0 {
            rng.gen_range(0..spec.start_spread_ticks)
        } else {
            0
        };
        for j in 0..spec.notifications_per_publisher {
            let sym = symbol(rng.gen_range(0..pool));
            let tick = spec.barrier_ticks + offset + (j as f64 * interval).round() as u64;
            w.events.push(WorkloadEvent::Publish {
                tick,
                id: NotificationId(0),
                client,
                broker,
                content: Arc::new(content_for(&mut rng, &sym)),
            });
        }
    }

    if let Some(h) = &spec.hrp {
        let host = match &h.host {
            Some(label) => topology
                .parse_broker(label)
                .map_err(|_| WorkloadError::UnknownHost(label.clone()))?,
            None => brokers[rng.gen_range(0..brokers.len())],
        };
        let client = new_client(&mut w, "hrp".to_string());
        let k = topology.cluster_count();
        let wanted = ((h.interested_fraction * spec.subscribers as f64).round() as usize).max(k);
        let mut interested = Vec::with_capacity(wanted);
        for i in 0..wanted {
            let cluster = i % k;
            let mut candidates: Vec<BrokerId> = brokers
                .iter()
                .copied()
                .filter(|b| b.cluster() == cluster && *b != host)
                .collect();
            if candidates.is_empty() {
                return Err(WorkloadError::NoRoomForInterested);
            }
            candidates.shuffle(&mut rng);
            let c = new_client(&mut w, format!("hrp-sub{i}"));
            interested.push(c);
            w.events.push(WorkloadEvent::Subscribe {
                tick: 0,
                client: c,
                broker: candidates[0],
                filter: Arc::new(
                    Filter::new(vec![Predicate::new("symbol", Op::Eq, HRP_SYMBOL).expect("eq")]).expect("non-empty"),
                ),
            });
        }
        let start = h.start_tick.unwrap_or(spec.barrier_ticks);
        let interval = TICKS_PER_MINUTE / h.rate_npm;
        for j in 0..h.count {
            w.events.push(WorkloadEvent::Publish {
                tick: start + (j as f64 * interval).floor() as u64,
                id: NotificationId(0),
                client,
                broker: host,
                content: Arc::new(content_for(&mut rng, HRP_SYMBOL)),
            });
        }
        w.hrp = Some(HrpInfo {
            host,
            client,
            interested,
        });
    }

    w.finalize();
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::evaluation_topology;

    fn spec(subs: usize, pubs: usize, per: usize, sel: f64) -> WorkloadSpec {
        WorkloadSpec {
            subscribers: subs,
            publishers: pubs,
            notifications_per_publisher: per,
            rate_npm: 60.0,
            selectivity: sel,
            range_predicate: false,
            barrier_ticks: 1000,
            start_spread_ticks: 5000,
            hrp: None,
        }
    }

    #[test]
    fn ten_attributes_and_universe() {
        let topo = evaluation_topology().build().unwrap();
        let w = generate_workload(&spec(5, 3, 4, 0.002), &topo, 1).unwrap();
        for (_, _, c) in w.publications() {
            assert_eq!(c.len(), ATTRIBUTES_PER_NOTIFICATION);
            let Some(Value::Text(s)) = c.get("symbol") else {
                panic!()
            };
            let idx: usize = s[3..].parse().unwrap();
            assert!(idx < SYMBOL_UNIVERSE);
        }
        assert_eq!(w.publication_count(), 12);
        assert_eq!(w.subscription_count(), 5);
    }

    #[test]
    fn no_publishers_means_subscriptions_only() {
        let topo = evaluation_topology().build().unwrap();
        let w = generate_workload(&spec(7, 0, 10, 0.5), &topo, 3).unwrap();
        assert_eq!(w.events.len(), 7);
        assert!(w
            .events
            .iter()
            .all(|e| matches!(e, WorkloadEvent::Subscribe { tick: 0, .. })));
    }

    #[test]
    fn timing_after_barrier() {
        let topo = evaluation_topology().build().unwrap();
        let w = generate_workload(&spec(1, 4, 3, 0.5), &topo, 9).unwrap();
        let ticks: Vec<u64> = w.events.iter().map(WorkloadEvent::tick).collect();
        assert!(ticks.windows(2).all(|p| p[0] <= p[1]));
        for e in &w.events {
            if let WorkloadEvent::Publish { tick, .. } = e {
                assert!(*tick >= 1000 && *tick < 1000 + 5000 + 2 * 1000);
            }
        }
        let ids: Vec<u64> = w.publications().map(|(id, _, _)| id.0).collect();
        assert_eq!(ids, (0..12).collect::<Vec<_>>());
    }

    #[test]
    fn seeded_and_reproducible() {
        let topo = evaluation_topology().build().unwrap();
        let s = spec(20, 5, 5, 0.02);
        assert_eq!(
            generate_workload(&s, &topo, 42).unwrap(),
            generate_workload(&s, &topo, 42).unwrap()
        );
        assert_ne!(
            generate_workload(&s, &topo, 42).unwrap(),
            generate_workload(&s, &topo, 43).unwrap()
        );
    }

    #[test]
    fn selectivity_bounds() {
        let topo = evaluation_topology().build().unwrap();
        for bad in [0.0, -0.1, 1.5, 0.001, f64::NAN] {
            assert!(matches!(
                generate_workload(&spec(1, 1, 1, bad), &topo, 1),
                Err(WorkloadError::Selectivity { .. })
            ));
        }
        assert!(generate_workload(&spec(1, 1, 1, 1.0 / 500.0), &topo, 1).is_ok());
        let mut ranged = spec(1, 1, 1, 0.6);
        ranged.range_predicate = true;
        assert!(generate_workload(&ranged, &topo, 1).is_err());
        ranged.selectivity = 0.25;
        assert!(generate_workload(&ranged, &topo, 1).is_ok());
    }

    #[test]
    fn hrp_interest_spans_clusters() {
        let topo = evaluation_topology().build().unwrap();
        let mut s = spec(500, 2, 2, 0.02);
        s.hrp = Some(HrpSpec {
            rate_npm: 100_000.0,
            count: 100,
            start_tick: None,
            host: Some("vii,0".into()),
            interested_fraction: 0.002,
        });
        let w = generate_workload(&s, &topo, 5).unwrap();
        let h = w.hrp.clone().unwrap();
        assert_eq!(h.interested.len(), 5);
        let mut clusters = BTreeSet::new();
        for e in &w.events {
            if let WorkloadEvent::Subscribe { client, broker, .. } = e {
                if h.interested.contains(client) {
                    assert_ne!(*broker, h.host);
                    clusters.insert(broker.cluster());
                }
            }
        }
        assert_eq!(clusters.len(), 5);
        let hrp_ticks: Vec<u64> = w
            .events
            .iter()
            .filter_map(|e| match e {
                WorkloadEvent::Publish { client, tick, .. } if *client == h.client => Some(*tick),
                _ => None,
            })
            .collect();
        assert_eq!(hrp_ticks.len(), 100);
        // 100K npm is 5 every 3 ticks
        assert_eq!(hrp_ticks[..6], [1000, 1000, 1001, 1001, 1002, 1003]);
        let d = w.expected_deliveries();
        assert_eq!(d.iter().filter(|(c, _)| h.interested.contains(c)).count(), 500);
    }

    #[test]
    fn empirical_selectivity_tracks_target() {
        let topo = evaluation_topology().build().unwrap();
        let w = generate_workload(&spec(200, 20, 10, 0.02), &topo, 11).unwrap();
        // independent count over the product
        let subs: Vec<_> = w.subscriptions().collect();
        let mut hits = 0usize;
        let mut total = 0usize;
        for (_, _, c) in w.publications() {
            for (_, f) in &subs {
                total += 1;
                hits += usize::from(f.matches(c));
            }
        }
        let oracle = hits as f64 / total as f64;
        assert_eq!(w.empirical_selectivity(), oracle);
        assert!((oracle - 0.02).abs() <= 0.005, "{oracle}");
    }
}
