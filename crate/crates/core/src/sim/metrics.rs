//! Run records and their CSV renderings.

use std::io::Write;

use crate::matching::{ClientId, NotificationId, SubscriptionId};
use crate::routing::RoutingMode;
use crate::topology::{LinkRef, ScotTopology};
use crate::workload::Workload;

#[derive(Debug, Clone, PartialEq)]
pub struct SubRecord {
    pub id: SubscriptionId,
    pub subscriber: ClientId,
    pub issue_tick: u64,
    /// Tick the last broker stored the subscription.
    pub settled_tick: u64,
    /// Deepest store, in broker hops from the host.
    pub max_depth: u32,
    pub ims: u64,
    /// Copies discarded because the broker already held the subscription.
    pub duplicates: u64,
    pub stored_at: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PubRecord {
    pub id: NotificationId,
    pub publisher: ClientId,
    pub issue_tick: u64,
    pub ims: u64,
    pub deliveries: u32,
    pub last_delivery: Option<u64>,
    pub max_hops: u32,
    /// Traversals of a directed link some other copy of this notification
    /// already crossed. Not a loop; sibling BID copies can reconverge.
    pub repeated_links: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeliveryRecord {
    pub notification: NotificationId,
    pub publisher: ClientId,
    pub subscriber: ClientId,
    pub issue_tick: u64,
    pub delivery_tick: u64,
    pub hops: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowRow {
    pub window_start: u64,
    pub link: LinkRef,
    pub q_in: u64,
    pub q_out: u64,
    pub q_len: usize,
    pub ce: f64,
    pub congested: bool,
}

/// Whole-run totals for one directed link.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkSummary {
    pub link: LinkRef,
    pub total_in: u64,
    pub total_out: u64,
    pub max_len: usize,
    pub mean_len: f64,
    pub congested_windows: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimReport {
    pub mode: Option<RoutingMode>,
    pub subscriptions: Vec<SubRecord>,
    pub notifications: Vec<PubRecord>,
    pub deliveries: Vec<DeliveryRecord>,
    pub windows: Vec<WindowRow>,
    pub links: Vec<LinkSummary>,
    /// Routing-table size per broker, in `brokers()` order.
    pub table_sizes: Vec<usize>,
    pub quiescence_tick: u64,
    pub events: u64,
    pub match_invocations: u64,
    /// DNR decisions per case I, II, III.
    pub dnr_cases: [u64; 3],
    pub violations: Vec<String>,
    pub trace: Vec<String>,
}

impl SimReport {
    pub fn subscription_ims(&self) -> u64 {
        self.subscriptions.iter().map(|s| s.ims).sum()
    }

    pub fn notification_ims(&self) -> u64 {
        self.notifications.iter().map(|n| n.ims).sum()
    }

    pub fn total_ims(&self) -> u64 {
        self.subscription_ims() + self.notification_ims()
    }

    pub fn link(&self, link: LinkRef) -> Option<&LinkSummary> {
        self.links.iter().find(|l| l.link == link)
    }
}

fn mode_name(r: &SimReport) -> &'static str {
    r.mode.map_or("", RoutingMode::name)
}

/// `message_id,kind,publisher,subscriber,issue_tick,delivery_tick,hops,ims,mode`
pub fn write_messages_csv<W: Write>(out: W, report: &SimReport, workload: &Workload) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "message_id",
        "kind",
        "publisher",
        "subscriber",
        "issue_tick",
        "delivery_tick",
        "hops",
        "ims",
        "mode",
    ])?;
    let mode = mode_name(report);
    for s in &report.subscriptions {
        w.write_record([
            s.id.to_string(),
            "sub".into(),
            String::new(),
            workload.client_name(s.subscriber),
            s.issue_tick.to_string(),
            s.settled_tick.to_string(),
            s.max_depth.to_string(),
            s.ims.to_string(),
            mode.into(),
        ])?;
    }
    for n in &report.notifications {
        w.write_record([
            n.id.to_string(),
            "pub".into(),
            workload.client_name(n.publisher),
            String::new(),
            n.issue_tick.to_string(),
            n.last_delivery.map(|t| t.to_string()).unwrap_or_default(),
            n.max_hops.to_string(),
            n.ims.to_string(),
            mode.into(),
        ])?;
    }
    for d in &report.deliveries {
        w.write_record([
            d.notification.to_string(),
            "delivery".into(),
            workload.client_name(d.publisher),
            workload.client_name(d.subscriber),
            d.issue_tick.to_string(),
            d.delivery_tick.to_string(),
            d.hops.to_string(),
            String::new(),
            mode.into(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `window_start,link,q_in,q_out,q_len,ce,congested`; idle windows omitted.
pub fn write_links_csv<W: Write>(out: W, report: &SimReport, topology: &ScotTopology) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["window_start", "link", "q_in", "q_out", "q_len", "ce", "congested"])?;
    for r in &report.windows {
        w.write_record([
            r.window_start.to_string(),
            topology.link_label(r.link),
            r.q_in.to_string(),
            r.q_out.to_string(),
            r.q_len.to_string(),
            format!("{:.6}", r.ce),
            u8::from(r.congested).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
