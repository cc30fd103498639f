//! Directed output queues and their link status records.

use std::collections::VecDeque;

/// `(1 + q_in) / (1 + q_out)` over one window.
pub fn congestion_element(q_in: u64, q_out: u64) -> f64 {
    (1 + q_in) as f64 / (1 + q_out) as f64
}

/// Window counters and the congestion verdict for one directed link.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkStatusRecord {
    pub q_in: u64,
    pub q_out: u64,
    pub last_ce: f64,
    pub congested: bool,
}

impl Default for LinkStatusRecord {
    fn default() -> Self {
        LinkStatusRecord {
            q_in: 0,
            q_out: 0,
            last_ce: 1.0,
            congested: false,
        }
    }
}

/// What a window roll observed on one link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowSample {
    pub q_in: u64,
    pub q_out: u64,
    pub q_len: usize,
    pub ce: f64,
    pub congested: bool,
}

impl WindowSample {
    pub fn is_idle(&self) -> bool {
        self.q_in == 0 && self.q_out == 0 && self.q_len == 0 && !self.congested
    }
}

/// `q_len * last_ce > tau`, using the last completed window's CE.
pub fn congested(record: &LinkStatusRecord, q_len: usize, tau: f64) -> bool {
    q_len as f64 * record.last_ce > tau
}

impl LinkStatusRecord {
    /// Closes the current window: recomputes CE, re-evaluates the flag
    /// against `q_len`, resets the counters.
    pub fn roll(&mut self, q_len: usize, tau: f64) -> WindowSample {
        self.last_ce = congestion_element(self.q_in, self.q_out);
        self.congested = congested(self, q_len, tau);
        let sample = WindowSample {
            q_in: self.q_in,
            q_out: self.q_out,
            q_len,
            ce: self.last_ce,
            congested: self.congested,
        };
        self.q_in = 0;
        self.q_out = 0;
        sample
    }
}

/// Milliticks per tick. Service times are tracked at this resolution.
pub const MILLI: u64 = 1000;

/// FIFO output queue with a fixed service rate. A copy enqueued on an idle
/// queue departs in the same tick; idle time earns no credit.
#[derive(Debug, Clone)]
pub struct OutputQueue<T> {
    pending: VecDeque<T>,
    /// milliticks between departures
    spacing: u64,
    /// earliest millitick the next copy may depart
    free_at: u64,
    pub latency: u64,
    pub status: LinkStatusRecord,
    /// phantom backlog added to the reported length
    pub extra_len: usize,
    /// forced overload flag, overriding the window verdict
    pub forced: Option<bool>,
    pub total_in: u64,
    pub total_out: u64,
    pub max_len: usize,
    pub len_sum: u64,
    pub rolls: u64,
}

impl<T> OutputQueue<T> {
    /// `rate` copies per tick, must be positive.
    pub fn new(rate: f64, latency: u64) -> Self {
        OutputQueue {
            pending: VecDeque::new(),
            spacing: spacing_for(rate),
            free_at: 0,
            latency,
            status: LinkStatusRecord::default(),
            extra_len: 0,
            forced: None,
            total_in: 0,
            total_out: 0,
            max_len: 0,
            len_sum: 0,
            rolls: 0,
        }
    }

    pub fn set_rate(&mut self, rate: f64) {
        self.spacing = spacing_for(rate);
    }

    /// Current Q_ℓ including any phantom backlog.
    pub fn len(&self) -> usize {
        self.pending.len() + self.extra_len
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }

    pub fn in_flight(&self) -> usize {
        self.pending.len()
    }

    pub fn overloaded(&self) -> bool {
        self.forced.unwrap_or(self.status.congested)
    }

    /// Appends `item` at tick `now`; returns its departure tick.
    pub fn enqueue(&mut self, item: T, now: u64) -> u64 {
        let start = self.free_at.max(now * MILLI);
        self.free_at = start + self.spacing;
        self.pending.push_back(item);
        self.status.q_in += 1;
        self.total_in += 1;
        self.max_len = self.max_len.max(self.len());
        start / MILLI
    }

    /// Removes the head copy.
    pub fn depart(&mut self) -> Option<T> {
        let item = self.pending.pop_front()?;
        self.status.q_out += 1;
        self.total_out += 1;
        Some(item)
    }

    pub fn roll(&mut self, tau: f64) -> WindowSample {
        let q = self.len();
        self.len_sum += q as u64;
        self.rolls += 1;
        self.status.roll(q, tau)
    }

    /// Mean Q_ℓ over completed windows.
    pub fn mean_len(&self) -> f64 {
        if self.rolls == 0 {
            0.0
        } else {
            self.len_sum as f64 / self.rolls as f64
        }
    }
}

fn spacing_for(rate: f64) -> u64 {
    ((MILLI as f64 / rate).round() as u64).max(1)
}
