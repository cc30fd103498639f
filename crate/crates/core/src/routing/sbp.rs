use super::{Clustering, DestinationList, RouteContext};
use crate::cbv::ClusterBitVector;
use crate::error::RoutingError;
use crate::matching::{Bid, SubState, Subscription};
use crate::table::{Hop, RoutingEntry, RoutingTable};

/// Clustered subscription broadcast. The host broker stamps CBV_s; PRIMARY
/// copies spread through the cluster and every cluster broker hands a
/// SECONDARY copy to its region. SECONDARY receivers store and stop.
pub fn scot_sbp(
    ctx: &RouteContext<'_>,
    rt: &mut RoutingTable,
    s: &Subscription,
    sender: Hop,
) -> Result<DestinationList<Subscription>, RoutingError> {
    ctx.require(Clustering::Clustered, "scot_sbp")?;
    let view = ctx.view;
    let mut s = s.clone();
    if sender.is_local() {
        s.cbv = Some(
            ClusterBitVector::single(view.cluster_count, view.own_cluster()).expect("own cluster is within width"),
        );
        s.state = Some(SubState::Primary);
        s.bid = None;
    }
    if rt.contains(s.id) {
        return Err(RoutingError::DuplicateSubscription(
            s.id.to_string(),
            format!("{}.{}", view.broker.region, view.broker.cluster),
        ));
    }

    let mut dl = DestinationList::default();
    if s.state == Some(SubState::Primary) {
        let back = sender.link().map(|l| l.destination);
        for &n in view.primary.iter().filter(|&&n| Some(n) != back) {
            dl.forward(view.link_to(n), with_state(&s, SubState::Primary));
        }
        for &n in view.secondary.iter().filter(|&&n| Some(n) != back) {
            dl.forward(view.link_to(n), with_state(&s, SubState::Secondary));
        }
    }
    rt.insert(RoutingEntry {
        cbv: s.cbv.clone(),
        bid: None,
        subscription: s,
        last_hop: sender,
    });
    Ok(dl)
}

fn with_state(s: &Subscription, state: SubState) -> Subscription {
    Subscription {
        state: Some(state),
        ..s.clone()
    }
}

/// Unclustered flood broadcast with BID stamping. Returns `None` when the
/// subscription was already stored here and the copy is discarded.
pub fn flood_sbp(
    ctx: &RouteContext<'_>,
    rt: &mut RoutingTable,
    s: &Subscription,
    sender: Hop,
) -> Option<DestinationList<Subscription>> {
    let view = ctx.view;
    if rt.contains(s.id) {
        return None;
    }
    let mut s = s.clone();
    if sender.is_local() {
        s.bid = Some(Bid(s.id));
        s.state = None;
        s.cbv = None;
    }
    let back = sender.link().map(|l| l.destination);
    let mut dl = DestinationList::default();
    for n in view.neighbours().filter(|&n| Some(n) != back) {
        dl.forward(view.link_to(n), s.clone());
    }
    rt.insert(RoutingEntry {
        bid: s.bid,
        cbv: None,
        subscription: s,
        last_hop: sender,
    });
    Some(dl)
}

#[cfg(test)]
mod tests {
    use super::super::testkit::Net;
    use super::super::*;
    use super::*;
    use crate::graph::GraphSpec;
    use crate::matching::{ClientId, Filter, SubscriptionId};
    use crate::table::RoutingTable;
    use crate::topology::{evaluation_topology, h_graph_topology, TopologySpec};
    use std::sync::Arc;

    fn fig3() -> Net {
        Net::new(h_graph_topology().build().unwrap(), RoutingMode::Snr)
    }

    fn sub(host: BrokerId) -> Subscription {
        Subscription::new(
            SubscriptionId { host, seq: 1 },
            ClientId(1),
            Arc::new(Filter::parse("a eq 1").unwrap()),
        )
    }

    #[test]
    fn host_copies_follow_state() {
        let net = fig3();
        let a0 = net.b("a,0");
        let view = &net.views[net.topo.broker_index(a0)];
        let ctx = RouteContext::new(view, Clustering::Clustered, &Uncongested);
        let mut rt = RoutingTable::new();
        let dl = scot_sbp(&ctx, &mut rt, &sub(a0), Hop::Local(ClientId(1))).unwrap();
        let got: Vec<(String, Option<SubState>)> = dl
            .forwards()
            .map(|(l, m)| (net.topo.broker_label(l.destination), m.state))
            .collect();
        assert_eq!(
            got,
            vec![
                ("(b,0)".to_string(), Some(SubState::Primary)),
                ("(a,1)".to_string(), Some(SubState::Secondary)),
                ("(a,2)".to_string(), Some(SubState::Secondary)),
            ]
        );
        let e = &rt.entries()[0];
        assert_eq!(e.cbv.as_ref().unwrap().to_string(), "001");
        assert_eq!(e.last_hop, Hop::Local(ClientId(1)));
    }

    #[test]
    fn secondary_copy_stops() {
        let net = fig3();
        let a1 = net.b("a,1");
        let a0 = net.b("a,0");
        let view = &net.views[net.topo.broker_index(a1)];
        let ctx = RouteContext::new(view, Clustering::Clustered, &Uncongested);
        let mut rt = RoutingTable::new();
        let mut s = sub(a0);
        s.state = Some(SubState::Secondary);
        s.cbv = Some(ClusterBitVector::single(3, 0).unwrap());
        let dl = scot_sbp(&ctx, &mut rt, &s, Hop::Link(view.link_to(a0))).unwrap();
        assert!(dl.is_empty());
        assert_eq!(rt.len(), 1);
        assert_eq!(rt.entries()[0].derived_state(1), Some(SubState::Secondary));
        assert!(matches!(
            scot_sbp(&ctx, &mut rt, &s, Hop::Link(view.link_to(a0))),
            Err(RoutingError::DuplicateSubscription(..))
        ));
    }

    #[test]
    fn wrong_mode_rejected() {
        let net = fig3();
        let ctx = RouteContext::new(&net.views[0], Clustering::Unclustered, &Uncongested);
        let mut rt = RoutingTable::new();
        assert_eq!(
            scot_sbp(&ctx, &mut rt, &sub(net.views[0].broker), Hop::Local(ClientId(1))),
            Err(RoutingError::WrongMode { algorithm: "scot_sbp" })
        );
    }

    #[test]
    fn clustered_broadcast_on_evaluation_topology() {
        let topo = evaluation_topology().build().unwrap();
        let expected = (15 - 1) + 15 * (5 - 1);
        let brokers: Vec<String> = topo.brokers().map(|b| topo.broker_label(b)).collect();
        let mut net = Net::new(topo, RoutingMode::Snr);
        for (i, at) in brokers.iter().enumerate().step_by(7) {
            assert_eq!(net.subscribe(at, i as u32, "a eq 1"), expected);
        }
        let subs = brokers.iter().step_by(7).count();
        for (i, rt) in net.tables.iter().enumerate() {
            assert_eq!(rt.len(), subs);
            let own = net.views[i].own_cluster();
            for e in rt.entries() {
                assert_eq!(e.derived_state(own), e.subscription.state);
            }
        }
    }

    #[test]
    fn clustered_broadcast_ignores_overload() {
        let mut net = fig3();
        net.overload("b,0", "b,1");
        net.overload("a,0", "b,0");
        assert_eq!(net.subscribe("a,0", 1, "a eq 1"), 5 + 6 * 2);
    }

    #[test]
    fn flood_counts() {
        let topo = evaluation_topology().build().unwrap();
        let mut net = Net::new(topo, RoutingMode::Bid);
        // host forwards on deg(h) links, everyone else on deg(v) - 1
        assert_eq!(net.subscribe("(vii,3)", 1, "a eq 1"), 2 * 220 - 75 + 1);
        for rt in &net.tables {
            assert_eq!(rt.len(), 1);
            assert!(rt.entries()[0].bid.is_some());
        }

        let two = TopologySpec {
            af: GraphSpec::Path(2),
            cf: GraphSpec::Complete(1),
            index_mode: Default::default(),
        };
        let mut net = Net::new(two.build().unwrap(), RoutingMode::Bid);
        assert_eq!(net.subscribe("0,0", 1, "a eq 1"), 1);
    }
}
