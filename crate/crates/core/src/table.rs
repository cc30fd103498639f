use std::collections::{HashMap, HashSet};
use std::fmt;

use crate::cbv::ClusterBitVector;
use crate::matching::{Bid, ClientId, Notification, SubState, Subscription, SubscriptionId};
use crate::topology::{LinkKind, LinkRef};

/// One step away from a broker: a hosted client or an outgoing link.
///
/// Stored last hops are always outgoing from the storing broker, i.e. the
/// reverse of the link the subscription arrived on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Hop {
    Local(ClientId),
    Link(LinkRef),
}

impl Hop {
    pub fn link(self) -> Option<LinkRef> {
        match self {
            Hop::Link(l) => Some(l),
            Hop::Local(_) => None,
        }
    }

    pub fn is_local(self) -> bool {
        matches!(self, Hop::Local(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoutingEntry {
    pub subscription: Subscription,
    pub last_hop: Hop,
    /// Clustered mode.
    pub cbv: Option<ClusterBitVector>,
    /// Unclustered mode.
    pub bid: Option<Bid>,
}

impl RoutingEntry {
    /// PRIMARY iff the subscriber's cluster bit equals `own_cluster`.
    pub fn derived_state(&self, own_cluster: usize) -> Option<SubState> {
        self.cbv.as_ref().map(|v| {
            if v.get(own_cluster) {
                SubState::Primary
            } else {
                SubState::Secondary
            }
        })
    }

    /// Host cluster of the subscriber, from the stored CBV_s.
    pub fn subscriber_cluster(&self) -> Option<usize> {
        self.cbv.as_ref().and_then(|v| v.set_indexes().first().copied())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HopFilter {
    All,
    /// Local deliveries and aCOLs; iCOL last hops are dropped.
    AcolOnly,
}

/// Per-broker subscription table in insertion order.
#[derive(Debug, Clone, Default)]
pub struct RoutingTable {
    entries: Vec<RoutingEntry>,
    by_id: HashMap<SubscriptionId, usize>,
}

impl RoutingTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, id: SubscriptionId) -> bool {
        self.by_id.contains_key(&id)
    }

    pub fn get(&self, id: SubscriptionId) -> Option<&RoutingEntry> {
        self.by_id.get(&id).map(|&i| &self.entries[i])
    }

    /// Entry stamped with `bid`.
    pub fn by_bid(&self, bid: Bid) -> Option<&RoutingEntry> {
        self.get(bid.0).filter(|e| e.bid == Some(bid))
    }

    pub fn entries(&self) -> &[RoutingEntry] {
        &self.entries
    }

    /// Returns false, leaving the table untouched, if the id is present.
    pub fn insert(&mut self, entry: RoutingEntry) -> bool {
        let id = entry.subscription.id;
        if self.by_id.contains_key(&id) {
            return false;
        }
        self.by_id.insert(id, self.entries.len());
        self.entries.push(entry);
        true
    }

    /// Entries whose filter matches `n`, in insertion order.
    pub fn match_all(&self, n: &Notification) -> Vec<&RoutingEntry> {
        self.entries.iter().filter(|e| e.subscription.matches(n)).collect()
    }
}

/// Deduplicated last hops, first occurrence kept. Local hops are kept once per
/// client.
pub fn distinct_next_hops<'a>(entries: impl IntoIterator<Item = &'a RoutingEntry>, filter: HopFilter) -> Vec<Hop> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for e in entries {
        let keep = match (filter, e.last_hop) {
            (HopFilter::AcolOnly, Hop::Link(l)) => l.kind == LinkKind::Acol,
            _ => true,
        };
        if keep && seen.insert(e.last_hop) {
            out.push(e.last_hop);
        }
    }
    out
}

impl fmt::Display for Hop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Hop::Local(c) => write!(f, "local:{c}"),
            Hop::Link(l) => write!(
                f,
                "{}.{}->{}.{}",
                l.source.region, l.source.cluster, l.destination.region, l.destination.cluster
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matching::{Content, Filter, NotificationId};
    use crate::topology::BrokerId;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn sub(seq: u32, client: u32, filter: &str) -> Subscription {
        Subscription::new(
            SubscriptionId {
                host: BrokerId::new(0, 0),
                seq,
            },
            ClientId(client),
            Arc::new(Filter::parse(filter).unwrap()),
        )
    }

    fn link(dst_region: usize, dst_cluster: usize) -> LinkRef {
        let source = BrokerId::new(0, 0);
        let destination = BrokerId::new(dst_region, dst_cluster);
        LinkRef {
            source,
            destination,
            kind: if dst_cluster == 0 {
                LinkKind::Acol
            } else {
                LinkKind::Icol
            },
        }
    }

    fn entry(s: Subscription, hop: Hop) -> RoutingEntry {
        RoutingEntry {
            subscription: s,
            last_hop: hop,
            cbv: None,
            bid: None,
        }
    }

    fn note(line: &str) -> Notification {
        Notification::new(
            NotificationId(1),
            ClientId(99),
            0,
            Arc::new(Content::parse(line).unwrap()),
        )
    }

    #[test]
    fn empty_table_matches_nothing() {
        assert!(RoutingTable::new().match_all(&note("pub: a=1")).is_empty());
    }

    #[test]
    fn insert_rejects_duplicates() {
        let mut rt = RoutingTable::new();
        assert!(rt.insert(entry(sub(1, 1, "a eq 1"), Hop::Local(ClientId(1)))));
        assert!(!rt.insert(entry(sub(1, 2, "a eq 2"), Hop::Local(ClientId(2)))));
        assert_eq!(rt.len(), 1);
        assert_eq!(
            rt.get(sub(1, 0, "a eq 1").id).unwrap().subscription.subscriber,
            ClientId(1)
        );
    }

    #[test]
    fn shared_link_collapses() {
        let l = link(0, 1);
        let mut rt = RoutingTable::new();
        rt.insert(entry(sub(1, 1, "a eq 1"), Hop::Link(l)));
        rt.insert(entry(sub(2, 2, "a eq 1"), Hop::Link(l)));
        let m = rt.match_all(&note("pub: a=1"));
        assert_eq!(distinct_next_hops(m, HopFilter::All), vec![Hop::Link(l)]);
    }

    #[test]
    fn acol_only_drops_icols_keeps_local() {
        let mut rt = RoutingTable::new();
        rt.insert(entry(sub(1, 1, "a eq 1"), Hop::Link(link(0, 1))));
        rt.insert(entry(sub(2, 2, "a eq 1"), Hop::Local(ClientId(2))));
        rt.insert(entry(sub(3, 3, "a eq 1"), Hop::Link(link(1, 0))));
        let m = rt.match_all(&note("pub: a=1"));
        assert_eq!(
            distinct_next_hops(m.iter().copied(), HopFilter::AcolOnly),
            vec![Hop::Local(ClientId(2)), Hop::Link(link(1, 0))]
        );
        assert_eq!(distinct_next_hops(m, HopFilter::All).len(), 3);
    }

    #[test]
    fn derived_state() {
        let mut e = entry(sub(1, 1, "a eq 1"), Hop::Local(ClientId(1)));
        assert_eq!(e.derived_state(0), None);
        e.cbv = Some(ClusterBitVector::single(3, 2).unwrap());
        assert_eq!(e.derived_state(2), Some(SubState::Primary));
        assert_eq!(e.derived_state(0), Some(SubState::Secondary));
        assert_eq!(e.subscriber_cluster(), Some(2));
    }

    proptest! {
        #[test]
        fn matches_linear_scan_and_unique_hops(
            rows in proptest::collection::vec((0u8..4, 0usize..3, 0usize..3, any::<bool>()), 0..40),
            value in 0u8..4,
        ) {
            let mut rt = RoutingTable::new();
            for (i, &(v, r, c, local)) in rows.iter().enumerate() {
                let hop = if local { Hop::Local(ClientId(r as u32)) } else { Hop::Link(link(r + 1, c)) };
                rt.insert(entry(sub(i as u32, i as u32, &format!("a eq {v}")), hop));
            }
            let n = note(&format!("pub: a={value}"));
            let got: Vec<u32> = rt.match_all(&n).iter().map(|e| e.subscription.id.seq).collect();
            let oracle: Vec<u32> = rows.iter().enumerate()
                .filter(|(_, r)| r.0 == value).map(|(i, _)| i as u32).collect();
            prop_assert_eq!(&got, &oracle);

            let all = distinct_next_hops(rt.entries(), HopFilter::All);
            let unique: HashSet<Hop> = rt.entries().iter().map(|e| e.last_hop).collect();
            prop_assert_eq!(all.len(), unique.len());
            let first_seen: Vec<Hop> = rt.entries().iter().map(|e| e.last_hop)
                .fold(Vec::new(), |mut acc, h| { if !acc.contains(&h) { acc.push(h); } acc });
            prop_assert_eq!(all, first_seen);
        }
    }
}
