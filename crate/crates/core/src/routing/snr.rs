use super::{Clustering, DestinationList, RouteContext};
use crate::error::RoutingError;
use crate::matching::{Header, Notification};
use crate::table::{distinct_next_hops, Hop, HopFilter, RoutingTable};

/// Static notification routing. The host broker fans out on every distinct
/// next hop, iCOLs included; every other broker stays inside its cluster.
pub fn scot_snr(
    ctx: &RouteContext<'_>,
    rt: &RoutingTable,
    n: &Notification,
    sender: Hop,
) -> Result<DestinationList<Notification>, RoutingError> {
    ctx.require(Clustering::Clustered, "scot_snr")?;
    let matched = rt.match_all(n);
    let filter = if sender.is_local() {
        HopFilter::All
    } else {
        HopFilter::AcolOnly
    };
    let back = sender.link().map(|l| l.destination);
    let mut dl = DestinationList::default();
    for hop in distinct_next_hops(matched, filter) {
        match hop {
            Hop::Local(c) => dl.deliver(c),
            Hop::Link(l) if Some(l.destination) != back => dl.forward(l, n.with_header(Header::None)),
            Hop::Link(_) => {}
        }
    }
    Ok(dl)
}
