use std::collections::HashMap;

use super::{Clustering, DestinationList, RouteContext};
use crate::error::RoutingError;
use crate::matching::{Bid, Header, Notification};
use crate::table::{Hop, RoutingTable};
use crate::topology::LinkRef;

/// BID-addressed notification routing. Only the host broker matches; every
/// other broker splits the carried BID list by stored last hop.
pub fn pub_bid(
    ctx: &RouteContext<'_>,
    rt: &RoutingTable,
    n: &Notification,
    sender: Hop,
) -> Result<DestinationList<Notification>, RoutingError> {
    ctx.require(Clustering::Unclustered, "pub_bid")?;
    let bids: Vec<Bid> = if sender.is_local() {
        rt.match_all(n)
            .into_iter()
            .map(|e| e.bid.unwrap_or(Bid(e.subscription.id)))
            .collect()
    } else {
        n.bids().to_vec()
    };

    let mut dl = DestinationList::default();
    let mut delivered = Vec::new();
    let mut order: Vec<LinkRef> = Vec::new();
    let mut groups: HashMap<LinkRef, Vec<Bid>> = HashMap::new();
    for bid in bids {
        let entry = rt.by_bid(bid).ok_or_else(|| RoutingError::UnknownBid {
            bid: bid.to_string(),
            broker: format!("{}.{}", ctx.broker().region, ctx.broker().cluster),
        })?;
        match entry.last_hop {
            Hop::Local(c) => {
                if !delivered.contains(&c) {
                    delivered.push(c);
                    dl.deliver(c);
                }
            }
            Hop::Link(l) => groups
                .entry(l)
                .or_insert_with(|| {
                    order.push(l);
                    Vec::new()
                })
                .push(bid),
        }
    }
    for l in order {
        let group = groups.remove(&l).unwrap_or_default();
        dl.forward(l, n.with_header(Header::Bids(group)));
    }
    Ok(dl)
}

#[cfg(test)]
mod tests {
    use super::super::testkit::Net;
    use super::super::*;
    use super::*;
    use crate::graph::GraphSpec;
    use crate::matching::{ClientId, Content, Filter, NotificationId, Subscription, SubscriptionId};
    use crate::table::RoutingEntry;
    use crate::topology::{BrokerId, TopologySpec};
    use std::sync::Arc;

    /// Six brokers numbered 1..=6 over a 3-path times K2.
    fn broker(n: u32) -> BrokerId {
        let (r, c) = [(0, 0), (1, 0), (2, 0), (0, 1), (1, 1), (2, 1)][n as usize - 1];
        BrokerId::new(r, c)
    }

    fn six() -> Net {
        let spec = TopologySpec {
            af: GraphSpec::Path(3),
            cf: GraphSpec::Complete(2),
            index_mode: Default::default(),
        };
        Net::new(spec.build().unwrap(), RoutingMode::Bid)
    }

    fn entry(net: &Net, at: u32, host: u32, client: u32, via: Option<u32>) -> RoutingEntry {
        let id = SubscriptionId {
            host: broker(host),
            seq: 1,
        };
        let view = &net.views[net.topo.broker_index(broker(at))];
        RoutingEntry {
            subscription: Subscription::new(id, ClientId(client), Arc::new(Filter::parse("a eq 1").unwrap())),
            last_hop: match via {
                Some(v) => Hop::Link(view.link_to(broker(v))),
                None => Hop::Local(ClientId(client)),
            },
            cbv: None,
            bid: Some(Bid(id)),
        }
    }

    fn note() -> Notification {
        Notification::new(
            NotificationId(7),
            ClientId(9),
            0,
            Arc::new(Content::parse("a=1").unwrap()),
        )
    }

    #[test]
    fn split_by_last_hop() {
        let net = six();
        let mut rt6 = RoutingTable::new();
        rt6.insert(entry(&net, 6, 4, 1, Some(5)));
        rt6.insert(entry(&net, 6, 3, 2, Some(3)));
        rt6.insert(entry(&net, 6, 5, 3, Some(5)));
        let view6 = &net.views[net.topo.broker_index(broker(6))];
        let ctx = RouteContext::new(view6, Clustering::Unclustered, &Uncongested);
        let dl = pub_bid(&ctx, &rt6, &note(), Hop::Local(ClientId(9))).unwrap();
        let mut got: Vec<(BrokerId, Vec<BrokerId>)> = dl
            .forwards()
            .map(|(l, m)| (l.destination, m.bids().iter().map(|b| b.broker()).collect()))
            .collect();
        got.sort();
        assert_eq!(
            got,
            vec![(broker(5), vec![broker(4), broker(5)]), (broker(3), vec![broker(3)]),]
        );

        // broker 5 delivers to its own subscriber and passes BID(4) on
        let m2 = dl
            .forwards()
            .find(|(l, _)| l.destination == broker(5))
            .unwrap()
            .1
            .clone();
        let mut rt5 = RoutingTable::new();
        rt5.insert(entry(&net, 5, 4, 1, Some(4)));
        rt5.insert(entry(&net, 5, 5, 3, None));
        let view5 = &net.views[net.topo.broker_index(broker(5))];
        let ctx5 = RouteContext::new(view5, Clustering::Unclustered, &Uncongested);
        let dl5 = pub_bid(&ctx5, &rt5, &m2, Hop::Link(view5.link_to(broker(6)))).unwrap();
        assert_eq!(dl5.deliveries().collect::<Vec<_>>(), vec![ClientId(3)]);
        let fwd: Vec<_> = dl5.forwards().collect();
        assert_eq!(fwd.len(), 1);
        assert_eq!(fwd[0].0.destination, broker(4));
        assert_eq!(fwd[0].1.bids().len(), 1);

        // broker 4 delivers and stops
        let mut rt4 = RoutingTable::new();
        rt4.insert(entry(&net, 4, 4, 1, None));
        let view4 = &net.views[net.topo.broker_index(broker(4))];
        let ctx4 = RouteContext::new(view4, Clustering::Unclustered, &Uncongested);
        let dl4 = pub_bid(&ctx4, &rt4, fwd[0].1, Hop::Link(view4.link_to(broker(5)))).unwrap();
        assert_eq!(dl4.deliveries().collect::<Vec<_>>(), vec![ClientId(1)]);
        assert_eq!(dl4.forward_count(), 0);
    }

    #[test]
    fn unknown_bid_is_corruption() {
        let net = six();
        let view = &net.views[0];
        let ctx = RouteContext::new(view, Clustering::Unclustered, &Uncongested);
        let stray = note().with_header(Header::Bids(vec![Bid(SubscriptionId {
            host: broker(2),
            seq: 4,
        })]));
        assert!(matches!(
            pub_bid(&ctx, &RoutingTable::new(), &stray, Hop::Link(view.link_to(broker(2)))),
            Err(RoutingError::UnknownBid { .. })
        ));
    }

    #[test]
    fn flooded_tables_reach_everyone() {
        let mut net = six();
        for (i, at) in ["0,0", "2,1", "1,0"].iter().enumerate() {
            net.subscribe(at, i as u32, "a eq 1");
        }
        net.subscribe("2,0", 7, "a eq 2");
        let out = net.publish("0,1", 9, "a=1");
        let clients: Vec<u32> = out.deliveries.iter().map(|d| d.0 .0).collect();
        assert_eq!(clients, vec![0, 1, 2]);
        // at most |cf| (diam + 1) - 1
        assert!(out.deliveries.iter().all(|&(_, h)| h < 2 * 3));
        let mut links = out.links.clone();
        links.sort();
        links.dedup();
        assert_eq!(links.len(), out.links.len());
    }
}
