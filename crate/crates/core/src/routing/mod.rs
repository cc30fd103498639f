//! Per-broker routing decisions. Each function sees one broker's neighbour
//! view, its routing table and a read-only link status view, and returns the
//! copies to emit. Nothing here performs I/O or touches time.

mod bid;
mod dnr;
mod sbp;
mod snr;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use bid::pub_bid;
pub use dnr::{scot_dnr, DnrCase, DnrPlan};
pub use sbp::{flood_sbp, scot_sbp};
pub use snr::scot_snr;

use crate::error::{RoutingError, TopologyError};
use crate::matching::ClientId;
use crate::table::Hop;
use crate::topology::{BrokerId, BrokerKind, LinkKind, LinkRef, ScotTopology};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoutingMode {
    /// Flood SBP + BID notification routing; clustering ignored.
    Bid,
    /// Clustered SBP + static notification routing.
    Snr,
    /// Clustered SBP + dynamic inter-cluster notification routing.
    Dnr,
}

impl RoutingMode {
    pub const ALL: [RoutingMode; 3] = [RoutingMode::Bid, RoutingMode::Snr, RoutingMode::Dnr];

    pub fn clustering(self) -> Clustering {
        match self {
            RoutingMode::Bid => Clustering::Unclustered,
            _ => Clustering::Clustered,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RoutingMode::Bid => "bid",
            RoutingMode::Snr => "snr",
            RoutingMode::Dnr => "dnr",
        }
    }
}

impl fmt::Display for RoutingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for RoutingMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bid" => Ok(RoutingMode::Bid),
            "snr" => Ok(RoutingMode::Snr),
            "dnr" => Ok(RoutingMode::Dnr),
            _ => Err(format!("unknown mode `{s}` (expected bid, snr or dnr)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Clustering {
    Clustered,
    Unclustered,
}

/// What a broker knows about its own position: itself and its direct
/// neighbours.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighbourView {
    pub broker: BrokerId,
    pub kind: BrokerKind,
    pub primary: Vec<BrokerId>,
    pub secondary: Vec<BrokerId>,
    pub cluster_count: usize,
}

impl NeighbourView {
    pub fn of(topology: &ScotTopology, broker: BrokerId) -> Result<Self, TopologyError> {
        Ok(NeighbourView {
            broker,
            kind: topology.classify_broker(broker)?,
            primary: topology.primary_neighbours(broker)?,
            secondary: topology.secondary_neighbours(broker)?,
            cluster_count: topology.cluster_count(),
        })
    }

    pub fn own_cluster(&self) -> usize {
        self.broker.cluster()
    }

    pub fn link_to(&self, neighbour: BrokerId) -> LinkRef {
        LinkRef {
            source: self.broker,
            destination: neighbour,
            kind: if neighbour.cluster == self.broker.cluster {
                LinkKind::Acol
            } else {
                LinkKind::Icol
            },
        }
    }

    /// The iCOL toward cluster `c`, if `c` is another cluster.
    pub fn icol_toward(&self, c: usize) -> Option<LinkRef> {
        self.secondary
            .iter()
            .find(|b| b.cluster() == c)
            .map(|&b| self.link_to(b))
    }

    pub fn neighbours(&self) -> impl Iterator<Item = BrokerId> + '_ {
        self.primary.iter().chain(&self.secondary).copied()
    }
}

/// Read view of a broker's link status table.
pub trait LinkStatusView {
    /// Congestion flag from the last completed window.
    fn overloaded(&self, link: LinkRef) -> bool;
    /// Current output queue length.
    fn queue_len(&self, link: LinkRef) -> usize;
}

/// Every link idle and unoverloaded.
#[derive(Debug, Clone, Copy, Default)]
pub struct Uncongested;

impl LinkStatusView for Uncongested {
    fn overloaded(&self, _: LinkRef) -> bool {
        false
    }
    fn queue_len(&self, _: LinkRef) -> usize {
        0
    }
}

/// Fixed link states keyed by (source, destination).
#[derive(Debug, Clone, Default)]
pub struct StaticLinkStatus {
    pub overloaded: HashMap<(BrokerId, BrokerId), bool>,
    pub queue_len: HashMap<(BrokerId, BrokerId), usize>,
}

impl StaticLinkStatus {
    pub fn set_overloaded(&mut self, a: BrokerId, b: BrokerId) -> &mut Self {
        self.overloaded.insert((a, b), true);
        self
    }

    pub fn set_queue(&mut self, a: BrokerId, b: BrokerId, q: usize) -> &mut Self {
        self.queue_len.insert((a, b), q);
        self
    }
}

impl LinkStatusView for StaticLinkStatus {
    fn overloaded(&self, l: LinkRef) -> bool {
        self.overloaded
            .get(&(l.source, l.destination))
            .copied()
            .unwrap_or(false)
    }
    fn queue_len(&self, l: LinkRef) -> usize {
        self.queue_len.get(&(l.source, l.destination)).copied().unwrap_or(0)
    }
}

pub struct RouteContext<'a> {
    pub view: &'a NeighbourView,
    pub mode: Clustering,
    pub links: &'a dyn LinkStatusView,
}

impl<'a> RouteContext<'a> {
    pub fn new(view: &'a NeighbourView, mode: Clustering, links: &'a dyn LinkStatusView) -> Self {
        RouteContext { view, mode, links }
    }

    pub fn broker(&self) -> BrokerId {
        self.view.broker
    }

    fn require(&self, mode: Clustering, algorithm: &'static str) -> Result<(), RoutingError> {
        if self.mode == mode {
            Ok(())
        } else {
            Err(RoutingError::WrongMode { algorithm })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Action<M> {
    Deliver { client: ClientId },
    Forward { link: LinkRef, message: M },
}

/// Ordered copies produced by one routing decision.
#[derive(Debug, Clone, PartialEq)]
pub struct DestinationList<M> {
    pub actions: Vec<Action<M>>,
}

impl<M> Default for DestinationList<M> {
    fn default() -> Self {
        DestinationList { actions: Vec::new() }
    }
}

impl<M> DestinationList<M> {
    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn forward(&mut self, link: LinkRef, message: M) {
        self.actions.push(Action::Forward { link, message });
    }

    pub fn deliver(&mut self, client: ClientId) {
        self.actions.push(Action::Deliver { client });
    }

    pub fn forwards(&self) -> impl Iterator<Item = (LinkRef, &M)> {
        self.actions.iter().filter_map(|a| match a {
            Action::Forward { link, message } => Some((*link, message)),
            Action::Deliver { .. } => None,
        })
    }

    pub fn deliveries(&self) -> impl Iterator<Item = ClientId> + '_ {
        self.actions.iter().filter_map(|a| match a {
            Action::Deliver { client } => Some(*client),
            Action::Forward { .. } => None,
        })
    }

    pub fn forward_count(&self) -> usize {
        self.forwards().count()
    }

    /// Compact `[local:c1 0.2->1.2 ...]` rendering for trace lines.
    pub fn describe(&self, annotate: impl Fn(&M) -> Option<String>) -> String {
        let parts: Vec<String> = self
            .actions
            .iter()
            .map(|a| match a {
                Action::Deliver { client } => Hop::Local(*client).to_string(),
                Action::Forward { link, message } => match annotate(message) {
                    Some(extra) => format!("{}{{{extra}}}", Hop::Link(*link)),
                    None => Hop::Link(*link).to_string(),
                },
            })
            .collect();
        format!("[{}]", parts.join(" "))
    }
}
