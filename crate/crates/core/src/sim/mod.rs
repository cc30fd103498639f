//! Deterministic discrete-event overlay simulator.
//!
//! Time is an integer tick (one simulated millisecond). Events run in
//! `(tick, sequence)` order. Every directed overlay link owns a FIFO output
//! queue with a service rate and a latency, plus the window counters of its
//! source broker's link status table. All links roll their windows on one
//! global grid.

pub mod link;
pub mod metrics;

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::matching::{ClientId, Notification, NotificationId, Subscription, SubscriptionId};
use crate::routing::{
    flood_sbp, pub_bid, scot_dnr, scot_sbp, scot_snr, Clustering, DestinationList, DnrCase, LinkStatusView,
    NeighbourView, RouteContext, RoutingMode,
};
use crate::table::{Hop, RoutingTable};
use crate::topology::{BrokerId, LinkId, LinkRef, ScotTopology};
use crate::workload::{Workload, WorkloadEvent};

use link::OutputQueue;
pub use metrics::{DeliveryRecord, LinkSummary, PubRecord, SimReport, SubRecord, WindowRow};

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
pub struct SimConfig {
    /// Congestion threshold.
    #[serde(default = "default_tau")]
    pub tau: f64,
    /// Window length in ticks.
    #[serde(default = "default_window")]
    pub window: u64,
    /// Broker-to-broker latency in ticks.
    #[serde(default = "default_latency")]
    pub latency: u64,
    /// Copies per tick per directed link.
    #[serde(default = "default_rate")]
    pub service_rate: f64,
    /// Client-to-broker and broker-to-client latency in ticks.
    #[serde(default)]
    pub client_latency: u64,
    /// Ticks a broker spends on each message.
    #[serde(default)]
    pub processing_delay: u64,
    /// Ticks per routing-table entry scanned while matching; rounded up.
    #[serde(default)]
    pub match_cost_per_entry: f64,
    #[serde(default = "default_max_events")]
    pub max_events: u64,
    #[serde(default)]
    pub trace: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            tau: default_tau(),
            window: default_window(),
            latency: default_latency(),
            service_rate: default_rate(),
            client_latency: 0,
            processing_delay: 0,
            match_cost_per_entry: 0.0,
            max_events: default_max_events(),
            trace: false,
        }
    }
}

/// Per-direction adjustments applied before the run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinkOverride {
    pub source: BrokerId,
    pub destination: BrokerId,
    pub overloaded: Option<bool>,
    /// Phantom backlog added to Q_ℓ.
    pub queue_len: Option<usize>,
    pub service_rate: Option<f64>,
    pub latency: Option<u64>,
}

#[derive(Debug, Clone)]
enum Msg {
    Sub(Subscription),
    Pub(Notification),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum MsgKey {
    Sub(SubscriptionId),
    Pub(NotificationId),
}

impl Msg {
    fn key(&self) -> MsgKey {
        match self {
            Msg::Sub(s) => MsgKey::Sub(s.id),
            Msg::Pub(n) => MsgKey::Pub(n.id),
        }
    }
}

#[derive(Debug)]
struct InFlight {
    msg: Msg,
    /// Links this copy and its ancestors crossed, oldest first.
    trail: Vec<LinkId>,
}

#[derive(Debug)]
enum EventKind {
    Issue(usize),
    Arrive {
        broker: BrokerId,
        msg: Msg,
        sender: Hop,
        trail: Vec<LinkId>,
    },
    Depart(LinkId),
    Emit {
        forwards: Vec<(LinkRef, Msg)>,
        trail: Vec<LinkId>,
    },
    Roll,
}

#[derive(Debug)]
struct Event {
    time: u64,
    seq: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        (self.time, self.seq) == (other.time, other.seq)
    }
}
impl Eq for Event {}
impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Event {
    // BinaryHeap is a max-heap; earliest (time, seq) must compare greatest.
    fn cmp(&self, other: &Self) -> Ordering {
        (other.time, other.seq).cmp(&(self.time, self.seq))
    }
}

struct LiveStatus<'a> {
    topo: &'a ScotTopology,
    queues: &'a [OutputQueue<InFlight>],
}

impl LinkStatusView for LiveStatus<'_> {
    fn overloaded(&self, l: LinkRef) -> bool {
        self.topo
            .link_id(l.source, l.destination)
            .is_some_and(|id| self.queues[id.0 as usize].overloaded())
    }
    fn queue_len(&self, l: LinkRef) -> usize {
        self.topo
            .link_id(l.source, l.destination)
            .map_or(0, |id| self.queues[id.0 as usize].len())
    }
}

struct Engine<'a> {
    topo: &'a ScotTopology,
    mode: RoutingMode,
    cfg: &'a SimConfig,
    workload: &'a Workload,
    views: Vec<NeighbourView>,
    tables: Vec<RoutingTable>,
    queues: Vec<OutputQueue<InFlight>>,
    heap: BinaryHeap<Event>,
    seq: u64,
    now: u64,
    sub_seq: Vec<u32>,
    sub_index: HashMap<SubscriptionId, usize>,
    pub_index: HashMap<NotificationId, usize>,
    crossed: HashMap<MsgKey, HashSet<LinkId>>,
    report: SimReport,
}

/// Runs `workload` to quiescence.
pub fn run(
    topology: &ScotTopology,
    mode: RoutingMode,
    workload: &Workload,
    cfg: &SimConfig,
    overrides: &[LinkOverride],
) -> Result<SimReport, SimError> {
    let mut queues: Vec<OutputQueue<InFlight>> = topology
        .links()
        .iter()
        .map(|_| OutputQueue::new(cfg.service_rate, cfg.latency))
        .collect();
    for o in overrides {
        let id = topology.link_id(o.source, o.destination).ok_or_else(|| {
            SimError::UnknownLink(format!(
                "{}->{}",
                topology.broker_label(o.source),
                topology.broker_label(o.destination)
            ))
        })?;
        let q = &mut queues[id.0 as usize];
        if let Some(f) = o.overloaded {
            q.forced = Some(f);
        }
        if let Some(n) = o.queue_len {
            q.extra_len = n;
        }
        if let Some(r) = o.service_rate {
            q.set_rate(r);
        }
        if let Some(l) = o.latency {
            q.latency = l;
        }
    }
    let views = topology
        .brokers()
        .map(|b| NeighbourView::of(topology, b))
        .collect::<Result<Vec<_>, _>>()?;
    let mut engine = Engine {
        topo: topology,
        mode,
        cfg,
        workload,
        views,
        tables: vec![RoutingTable::new(); topology.broker_count()],
        queues,
        heap: BinaryHeap::new(),
        seq: 0,
        now: 0,
        sub_seq: vec![0; topology.broker_count()],
        sub_index: HashMap::new(),
        pub_index: HashMap::new(),
        crossed: HashMap::new(),
        report: SimReport {
            mode: Some(mode),
            ..Default::default()
        },
    };
    engine.execute()?;
    Ok(engine.finish())
}

impl Engine<'_> {
    fn schedule(&mut self, time: u64, kind: EventKind) {
        debug_assert!(time >= self.now, "event scheduled in the past");
        self.seq += 1;
        self.heap.push(Event {
            time,
            seq: self.seq,
            kind,
        });
    }

    fn execute(&mut self) -> Result<(), SimError> {
        for (i, e) in self.workload.events.iter().enumerate() {
            let t = e.tick();
            self.schedule(t, EventKind::Issue(i));
        }
        if !self.heap.is_empty() && self.cfg.window > 0 {
            self.schedule(self.cfg.window, EventKind::Roll);
        }
        while let Some(ev) = self.heap.pop() {
            self.now = ev.time;
            self.report.events += 1;
            if self.report.events > self.cfg.max_events {
                return Err(SimError::Timeout {
                    events: self.cfg.max_events,
                    tick: self.now,
                    snapshot: self.snapshot(),
                });
            }
            if !matches!(ev.kind, EventKind::Roll) {
                self.report.quiescence_tick = self.report.quiescence_tick.max(self.now);
            }
            match ev.kind {
                EventKind::Issue(i) => self.issue(i),
                EventKind::Arrive {
                    broker,
                    msg,
                    sender,
                    trail,
                } => self.arrive(broker, msg, sender, trail),
                EventKind::Depart(id) => self.depart(id),
                EventKind::Emit { forwards, trail } => self.emit(self.now, forwards, &trail),
                EventKind::Roll => self.roll(),
            }
        }
        Ok(())
    }

    fn snapshot(&self) -> String {
        let busy: Vec<String> = self
            .queues
            .iter()
            .enumerate()
            .filter(|(_, q)| !q.is_empty())
            .take(20)
            .map(|(i, q)| {
                format!(
                    "{}={}",
                    self.topo.link_label(self.topo.link_by_id(LinkId(i as u32))),
                    q.in_flight()
                )
            })
            .collect();
        if busy.is_empty() {
            "none".into()
        } else {
            busy.join(" ")
        }
    }

    fn issue(&mut self, i: usize) {
        let arrive = self.now + self.cfg.client_latency;
        match &self.workload.events[i] {
            WorkloadEvent::Subscribe {
                client, broker, filter, ..
            } => {
                let slot = &mut self.sub_seq[self.topo.broker_index(*broker)];
                *slot += 1;
                let id = SubscriptionId {
                    host: *broker,
                    seq: *slot,
                };
                self.sub_index.insert(id, self.report.subscriptions.len());
                self.report.subscriptions.push(SubRecord {
                    id,
                    subscriber: *client,
                    issue_tick: self.now,
                    settled_tick: self.now,
                    max_depth: 0,
                    ims: 0,
                    duplicates: 0,
                    stored_at: 0,
                });
                let s = Subscription::new(id, *client, filter.clone());
                self.schedule(
                    arrive,
                    EventKind::Arrive {
                        broker: *broker,
                        msg: Msg::Sub(s),
                        sender: Hop::Local(*client),
                        trail: Vec::new(),
                    },
                );
            }
            WorkloadEvent::Publish {
                id,
                client,
                broker,
                content,
                ..
            } => {
                self.pub_index.insert(*id, self.report.notifications.len());
                self.report.notifications.push(PubRecord {
                    id: *id,
                    publisher: *client,
                    issue_tick: self.now,
                    ims: 0,
                    deliveries: 0,
                    last_delivery: None,
                    max_hops: 0,
                    repeated_links: 0,
                });
                let n = Notification::new(*id, *client, self.now, content.clone());
                self.schedule(
                    arrive,
                    EventKind::Arrive {
                        broker: *broker,
                        msg: Msg::Pub(n),
                        sender: Hop::Local(*client),
                        trail: Vec::new(),
                    },
                );
            }
        }
    }

    fn count_traversal(&mut self, key: MsgKey, trail: &[LinkId]) {
        let Some((&via, ancestry)) = trail.split_last() else {
            return;
        };
        // another copy of the same message already used this link
        let repeated = !self.crossed.entry(key).or_default().insert(via);
        match key {
            MsgKey::Sub(id) => {
                if let Some(&i) = self.sub_index.get(&id) {
                    self.report.subscriptions[i].ims += 1;
                }
            }
            MsgKey::Pub(id) => {
                if let Some(&i) = self.pub_index.get(&id) {
                    let r = &mut self.report.notifications[i];
                    r.ims += 1;
                    r.repeated_links += u32::from(repeated);
                }
            }
        }
        if ancestry.contains(&via) {
            let l = self.topo.link_by_id(via);
            self.report
                .violations
                .push(format!("{key:?} looped over {}", self.topo.link_label(l)));
        }
    }

    fn arrive(&mut self, broker: BrokerId, msg: Msg, sender: Hop, trail: Vec<LinkId>) {
        self.count_traversal(msg.key(), &trail);
        let hops = trail.len() as u32;
        let bi = self.topo.broker_index(broker);
        let status = LiveStatus {
            topo: self.topo,
            queues: &self.queues,
        };
        let ctx = RouteContext::new(&self.views[bi], self.mode.clustering(), &status);
        let done = self.now + self.cfg.processing_delay;
        match msg {
            Msg::Sub(s) => {
                let outcome = match self.mode.clustering() {
                    Clustering::Clustered => scot_sbp(&ctx, &mut self.tables[bi], &s, sender)
                        .map(Some)
                        .map_err(|e| e.to_string()),
                    Clustering::Unclustered => Ok(flood_sbp(&ctx, &mut self.tables[bi], &s, sender)),
                };
                let rec = self.sub_index.get(&s.id).copied();
                match outcome {
                    Ok(Some(dl)) => {
                        if let Some(i) = rec {
                            let r = &mut self.report.subscriptions[i];
                            r.stored_at += 1;
                            r.settled_tick = r.settled_tick.max(self.now);
                            r.max_depth = r.max_depth.max(hops);
                        }
                        let forwards = dl
                            .actions
                            .into_iter()
                            .filter_map(|a| match a {
                                crate::routing::Action::Forward { link, message } => Some((link, Msg::Sub(message))),
                                crate::routing::Action::Deliver { .. } => None,
                            })
                            .collect();
                        self.emit(done, forwards, &trail);
                    }
                    Ok(None) => {
                        if let Some(i) = rec {
                            self.report.subscriptions[i].duplicates += 1;
                        }
                    }
                    Err(e) => {
                        if let Some(i) = rec {
                            self.report.subscriptions[i].duplicates += 1;
                        }
                        self.report.violations.push(e);
                    }
                }
            }
            Msg::Pub(n) => {
                let rt = &self.tables[bi];
                let matches_here = match self.mode {
                    RoutingMode::Bid => sender.is_local(),
                    _ => true,
                };
                let mut delay = done;
                if matches_here {
                    self.report.match_invocations += 1;
                    delay += (self.cfg.match_cost_per_entry * rt.len() as f64).ceil() as u64;
                }
                let mut case: Option<DnrCase> = None;
                let decided = match self.mode {
                    RoutingMode::Bid => pub_bid(&ctx, rt, &n, sender),
                    RoutingMode::Snr => scot_snr(&ctx, rt, &n, sender),
                    RoutingMode::Dnr => scot_dnr(&ctx, rt, &n, sender).map(|(dl, plan)| {
                        case = plan.case;
                        dl
                    }),
                };
                let dl = match decided {
                    Ok(dl) => dl,
                    Err(e) => {
                        self.report
                            .violations
                            .push(format!("{} at {}: {e}", n.id, self.topo.broker_label(broker)));
                        return;
                    }
                };
                if let Some(c) = case {
                    self.report.dnr_cases[match c {
                        DnrCase::UnoverloadedIcol => 0,
                        DnrCase::AllIcolsOverloaded => 1,
                        DnrCase::AllOverloaded => 2,
                    }] += 1;
                }
                if self.cfg.trace {
                    self.trace(broker, &n, case, &dl);
                }
                let ri = self.pub_index.get(&n.id).copied();
                let mut forwards = Vec::new();
                for a in dl.actions {
                    match a {
                        crate::routing::Action::Deliver { client } => {
                            self.deliver(ri, &n, client, delay + self.cfg.client_latency, hops)
                        }
                        crate::routing::Action::Forward { link, message } => forwards.push((link, Msg::Pub(message))),
                    }
                }
                self.emit(delay, forwards, &trail);
            }
        }
    }

    fn trace(&mut self, broker: BrokerId, n: &Notification, case: Option<DnrCase>, dl: &DestinationList<Notification>) {
        let line = format!(
            "t={} broker={} msg={} case={} dl={}",
            self.now,
            self.topo.broker_label(broker),
            n.id,
            case.map_or("-".to_string(), |c| c.to_string()),
            dl.describe(|m| m
                .cbv()
                .map(|v| v.to_string())
                .or_else(|| (!m.bids().is_empty()).then(|| format!("{} bids", m.bids().len()))))
        );
        self.report.trace.push(line);
    }

    fn deliver(&mut self, ri: Option<usize>, n: &Notification, client: ClientId, tick: u64, hops: u32) {
        self.report.quiescence_tick = self.report.quiescence_tick.max(tick);
        self.report.deliveries.push(DeliveryRecord {
            notification: n.id,
            publisher: n.publisher,
            subscriber: client,
            issue_tick: n.issue_tick,
            delivery_tick: tick,
            hops,
        });
        if let Some(i) = ri {
            let r = &mut self.report.notifications[i];
            r.deliveries += 1;
            r.last_delivery = Some(r.last_delivery.map_or(tick, |t| t.max(tick)));
            r.max_hops = r.max_hops.max(hops);
        }
    }

    fn emit(&mut self, at: u64, forwards: Vec<(LinkRef, Msg)>, trail: &[LinkId]) {
        if forwards.is_empty() {
            return;
        }
        if at == self.now {
            for (l, m) in forwards {
                self.enqueue(l, m, trail);
            }
        } else {
            self.schedule(
                at,
                EventKind::Emit {
                    forwards,
                    trail: trail.to_vec(),
                },
            );
        }
    }

    fn enqueue(&mut self, l: LinkRef, msg: Msg, trail: &[LinkId]) {
        let Some(id) = self.topo.link_id(l.source, l.destination) else {
            self.report
                .violations
                .push(format!("enqueue onto unknown link {}", self.topo.link_label(l)));
            return;
        };
        let mut trail = trail.to_vec();
        trail.push(id);
        let depart = self.queues[id.0 as usize].enqueue(InFlight { msg, trail }, self.now);
        self.schedule(depart, EventKind::Depart(id));
    }

    fn depart(&mut self, id: LinkId) {
        let q = &mut self.queues[id.0 as usize];
        let Some(item) = q.depart() else {
            return;
        };
        let latency = q.latency;
        let l = self.topo.link_by_id(id);
        self.schedule(
            self.now + latency,
            EventKind::Arrive {
                broker: l.destination,
                msg: item.msg,
                sender: Hop::Link(l.reversed()),
                trail: item.trail,
            },
        );
    }

    fn roll(&mut self) {
        let start = self.now - self.cfg.window;
        for (i, q) in self.queues.iter_mut().enumerate() {
            let s = q.roll(self.cfg.tau);
            if !s.is_idle() {
                self.report.windows.push(WindowRow {
                    window_start: start,
                    link: self.topo.link_by_id(LinkId(i as u32)),
                    q_in: s.q_in,
                    q_out: s.q_out,
                    q_len: s.q_len,
                    ce: s.ce,
                    congested: s.congested,
                });
            }
        }
        if !self.heap.is_empty() {
            self.schedule(self.now + self.cfg.window, EventKind::Roll);
        }
    }

    fn finish(mut self) -> SimReport {
        let mut congested = vec![0u64; self.queues.len()];
        let ids: HashMap<LinkRef, usize> = self.topo.links().iter().enumerate().map(|(i, l)| (*l, i)).collect();
        for w in &self.report.windows {
            if w.congested {
                congested[ids[&w.link]] += 1;
            }
        }
        self.report.links = self
            .queues
            .iter()
            .enumerate()
            .map(|(i, q)| LinkSummary {
                link: self.topo.link_by_id(LinkId(i as u32)),
                total_in: q.total_in,
                total_out: q.total_out,
                max_len: q.max_len,
                mean_len: q.mean_len(),
                congested_windows: congested[i],
            })
            .collect();
        for (i, q) in self.queues.iter().enumerate() {
            if !q.is_empty() {
                self.report.violations.push(format!(
                    "queue {} not drained",
                    self.topo.link_label(self.topo.link_by_id(LinkId(i as u32)))
                ));
            }
        }
        self.report.table_sizes = self.tables.iter().map(RoutingTable::len).collect();
        self.report
    }
}
