use alloc::collections::{BTreeMap, VecDeque};
use alloc::vec::Vec;

/// Opaque receiver identifier.
pub type ReceiverId = u32;

/// One acknowledgement as seen by the sender.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AckSample {
    pub arrival: f64,
    pub latency: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Outstanding {
    pub send_time: f64,
    pub later_acks: u32,
}

/// Per-receiver latency and in-flight bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceiverStats {
    pub receiver_id: ReceiverId,
    /// Lowest observed ack round trip; stands in for the path RTT.
    pub d_min: Option<f64>,
    /// Latency of the last delivered packet when a loss was detected.
    pub d_max: Option<f64>,
    /// Most recent latency sample.
    pub last_latency: Option<f64>,
    /// Packets sent to this receiver and neither acknowledged nor lost.
    pub in_flight: u64,
    /// This receiver's share of all unacknowledged packets, refreshed every tick.
    pub lambda_sq: f64,
    /// Acks that arrived within the bandwidth-estimation horizon.
    pub ack_timestamps: VecDeque<AckSample>,
    pub(crate) next_seq: u64,
    pub(crate) outstanding: BTreeMap<u64, Outstanding>,
    /// `(seq, latency)` of delivered packets, oldest first, trimmed to the
    /// newest one sent before the oldest outstanding packet.
    pub(crate) delivered: VecDeque<(u64, f64)>,
}

impl ReceiverStats {
    pub fn new(receiver_id: ReceiverId) -> Self {
        Self {
            receiver_id,
            d_min: None,
            d_max: None,
            last_latency: None,
            in_flight: 0,
            lambda_sq: 0.0,
            ack_timestamps: VecDeque::new(),
            next_seq: 0,
            outstanding: BTreeMap::new(),
            delivered: VecDeque::new(),
        }
    }

    /// `d_max - d_min`, once both are known.
    pub fn queue_delay_span(&self) -> Option<f64> {
        match (self.d_min, self.d_max) {
            (Some(lo), Some(hi)) => Some((hi - lo).max(0.0)),
            _ => None,
        }
    }

    /// Send time of the oldest outstanding packet.
    pub fn oldest_send_time(&self) -> Option<f64> {
        self.outstanding.values().next().map(|o| o.send_time)
    }

    pub fn is_outstanding(&self, seq: u64) -> bool {
        self.outstanding.contains_key(&seq)
    }

    /// Latency of the newest delivered packet sent before `seq`.
    pub fn latency_before(&self, seq: u64) -> Option<f64> {
        let idx = self.delivered.partition_point(|&(s, _)| s < seq);
        idx.checked_sub(1).map(|i| self.delivered[i].1)
    }

    pub(crate) fn record_delivery(&mut self, seq: u64, latency: f64) {
        let idx = self.delivered.partition_point(|&(s, _)| s < seq);
        self.delivered.insert(idx, (seq, latency));
        let oldest = self.outstanding.keys().next().copied().unwrap_or(u64::MAX);
        while self.delivered.len() > 1 && self.delivered[1].0 < oldest {
            self.delivered.pop_front();
        }
    }
}

/// Everything the controller remembers between ticks.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ControllerState {
    pub cumulative_sent: u64,
    pub cumulative_acked: u64,
    pub cumulative_lost: u64,
    /// Current window `w(kT)`, packets.
    pub window: u64,
    /// Current send quota `u(kT)`, packets.
    pub quota: u64,
    /// Estimated available bandwidth `U(kT)`, packets per second.
    pub est_bandwidth: f64,
    /// Raw ack rate measured at the last tick, packets per second.
    pub ack_rate: f64,
    /// Queue-delay reference, seconds.
    pub d_ref: f64,
    /// Mean queue delay `d(kT)` of the acks seen during the last period, seconds.
    pub avg_queue_delay: f64,
    pub receivers: Vec<ReceiverStats>,
    pub epoch: u64,
    /// Acks for packets that were not outstanding.
    pub spurious_acks: u64,
    /// Loss events that moved some receiver's `d_max`.
    pub calibrations: u64,
    pub(crate) interval_delay_sum: f64,
    pub(crate) interval_delay_count: u64,
}

impl ControllerState {
    /// Packets sent and neither acknowledged nor declared lost.
    pub fn in_flight(&self) -> u64 {
        self.cumulative_sent - self.cumulative_acked - self.cumulative_lost
    }

    pub fn receiver(&self, id: ReceiverId) -> Option<&ReceiverStats> {
        self.receivers.iter().find(|r| r.receiver_id == id)
    }

    pub(crate) fn receiver_mut(&mut self, id: ReceiverId) -> Option<&mut ReceiverStats> {
        self.receivers.iter_mut().find(|r| r.receiver_id == id)
    }

    /// True once any receiver has produced a latency sample.
    pub fn has_samples(&self) -> bool {
        self.receivers.iter().any(|r| r.d_min.is_some())
    }
}
