use std::fmt;

use super::{Clustering, DestinationList, LinkStatusView, RouteContext};
use crate::cbv::ClusterBitVector;
use crate::error::RoutingError;
use crate::matching::{Header, Notification};
use crate::table::{distinct_next_hops, Hop, HopFilter, RoutingTable};
use crate::topology::{LinkKind, LinkRef};

/// Which carrier the outgoing CBV_p rode on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DnrCase {
    /// Attached to the least-loaded unoverloaded target iCOL.
    UnoverloadedIcol,
    /// Every target iCOL overloaded; attached to an unoverloaded target aCOL.
    AllIcolsOverloaded,
    /// No unoverloaded target link; extra copy on the least-loaded iCOL.
    AllOverloaded,
}

impl fmt::Display for DnrCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DnrCase::UnoverloadedIcol => "I",
            DnrCase::AllIcolsOverloaded => "II",
            DnrCase::AllOverloaded => "III",
        })
    }
}

/// Intermediate sets of one dynamic routing decision.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DnrPlan {
    /// Unique non-local destinations.
    pub targets: Vec<LinkRef>,
    /// Overloaded target iCOLs.
    pub overloaded_icols: Vec<LinkRef>,
    pub least_loaded_icol: Option<LinkRef>,
    pub least_loaded_acol: Option<LinkRef>,
    /// Vector as attached to the outgoing carrier, if any.
    pub cbv: Option<ClusterBitVector>,
    pub case: Option<DnrCase>,
    /// Incoming bits with no matching secondary entry here.
    pub carried: Vec<usize>,
    /// Bits that found no carrier.
    pub dropped: Vec<usize>,
}

/// Least-loaded link, preferring unoverloaded ones. Ties go to the smaller
/// destination.
fn least_loaded(links: &[LinkRef], status: &dyn LinkStatusView) -> Option<LinkRef> {
    let key = |l: &&LinkRef| (status.queue_len(**l), l.destination);
    links
        .iter()
        .filter(|l| !status.overloaded(**l))
        .min_by_key(key)
        .or_else(|| links.iter().min_by_key(key))
        .copied()
}

/// Dynamic inter-cluster notification routing.
pub fn scot_dnr(
    ctx: &RouteContext<'_>,
    rt: &RoutingTable,
    n: &Notification,
    sender: Hop,
) -> Result<(DestinationList<Notification>, DnrPlan), RoutingError> {
    ctx.require(Clustering::Clustered, "scot_dnr")?;
    let view = ctx.view;
    let status = ctx.links;
    let own = view.own_cluster();
    let incoming = n.cbv();
    if incoming.is_some_and(|v| v.get(own)) {
        return Err(RoutingError::OwnClusterBit {
            broker: format!("{}.{}", view.broker.region, view.broker.cluster),
            cluster: own,
        });
    }

    let matched = rt.match_all(n);
    let host = sender.is_local();
    let back = sender.link().map(|l| l.destination);
    let mut dl = DestinationList::default();
    let mut plan = DnrPlan::default();

    let hops = distinct_next_hops(
        matched.iter().copied(),
        if host { HopFilter::All } else { HopFilter::AcolOnly },
    );
    for hop in hops {
        match hop {
            Hop::Local(c) => dl.deliver(c),
            Hop::Link(l) if Some(l.destination) != back => plan.targets.push(l),
            Hop::Link(_) => {}
        }
    }
    if let Some(v) = incoming {
        for c in v.set_indexes() {
            let resolved = view
                .icol_toward(c)
                .filter(|&l| matched.iter().any(|e| e.last_hop == Hop::Link(l)));
            match resolved {
                Some(l) if !plan.targets.contains(&l) => plan.targets.push(l),
                Some(_) => {}
                None => plan.carried.push(c),
            }
        }
    }

    plan.overloaded_icols = plan
        .targets
        .iter()
        .copied()
        .filter(|&l| l.kind == LinkKind::Icol && status.overloaded(l))
        .collect();
    let mut cbv = ClusterBitVector::new(view.cluster_count);
    for l in plan.overloaded_icols.iter().map(|l| l.destination.cluster()) {
        cbv.set_bit(l).expect("cluster index within width");
    }
    for &c in &plan.carried {
        cbv.set_bit(c).expect("cluster index within width");
    }

    let icols: Vec<LinkRef> = plan
        .targets
        .iter()
        .copied()
        .filter(|l| l.kind == LinkKind::Icol)
        .collect();
    let acols: Vec<LinkRef> = plan
        .targets
        .iter()
        .copied()
        .filter(|l| l.kind == LinkKind::Acol)
        .collect();
    plan.least_loaded_icol = least_loaded(&icols, status);
    plan.least_loaded_acol = least_loaded(&acols, status);

    let mut carrier: Option<LinkRef> = None;
    let mut extra: Option<LinkRef> = None;
    if !cbv.is_empty() {
        match (plan.least_loaded_icol, plan.least_loaded_acol) {
            (Some(eta2), _) if !status.overloaded(eta2) => {
                plan.case = Some(DnrCase::UnoverloadedIcol);
                carrier = Some(eta2);
            }
            (_, Some(ell)) if !status.overloaded(ell) => {
                plan.case = Some(DnrCase::AllIcolsOverloaded);
                carrier = Some(ell);
            }
            (Some(eta2), _) => {
                plan.case = Some(DnrCase::AllOverloaded);
                cbv.clear_bit(eta2.destination.cluster())
                    .expect("cluster index within width");
                extra = Some(eta2);
            }
            (None, Some(ell)) => {
                plan.case = Some(DnrCase::AllOverloaded);
                carrier = Some(ell);
            }
            (None, None) => plan.dropped = cbv.set_indexes(),
        }
    }

    let header_for = |l: LinkRef| {
        if (carrier == Some(l) || extra == Some(l)) && !cbv.is_empty() {
            Header::Cbv(cbv.clone())
        } else {
            Header::None
        }
    };
    for &l in &plan.targets {
        if !plan.overloaded_icols.contains(&l) {
            dl.forward(l, n.with_header(header_for(l)));
        }
    }
    if let Some(l) = extra {
        dl.forward(l, n.with_header(header_for(l)));
    }
    if (carrier.is_some() || extra.is_some()) && !cbv.is_empty() {
        plan.cbv = Some(cbv);
    }
    Ok((dl, plan))
}
