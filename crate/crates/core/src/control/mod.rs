//! The periodic P2P congestion controller.
//!
//! [`Controller`] is a plain state machine. The owner reports every packet
//! handed to the network ([`Controller::on_send`]), every acknowledgement
//! ([`Controller::on_ack`]) and calls [`Controller::control_tick`] once per
//! period `T`. Each tick returns how many packets may be injected during the
//! next period.
//!
//! A tick does the following, in order:
//!
//! 1. expires packets outstanding for longer than `2 · (d_min + q_max)`,
//! 2. averages the queue-delay samples of the period into `d(kT)`, zero when
//!    no ack arrived,
//! 3. measures the ack rate over the last `t_c` seconds and adopts it as the
//!    bandwidth estimate `U` when the queue looks non-empty
//!    (`d ≥ trust_fraction · d_ref`) or when it exceeds the current estimate,
//! 4. recomputes `d_ref = α · q_max`,
//! 5. refreshes the per-receiver in-flight shares `λ²`,
//! 6. recomputes the window and the quota.
//!
//! Losses are declared per receiver once `dupack_threshold` later packets of
//! the same receiver have been acknowledged, or on the timeout above. A loss
//! sets that receiver's `d_max` to the latency of the newest packet sent
//! before the lost one that did get through, which saw the queue as it was
//! when the buffer overflowed.

mod ops;
mod params;
mod state;

use alloc::vec::Vec;
use core::fmt;

pub use ops::{
    compute_dref, compute_send_quota, compute_window, estimate_bandwidth, estimate_qmax,
    lambda_squared_shares, lemma2_min_window,
};
pub use params::{ControllerParams, ParamError};
pub use state::{AckSample, ControllerState, ReceiverId, ReceiverStats};

use state::Outstanding;

/// Assumed round trip for timeout purposes before a receiver has any sample.
const UNSAMPLED_RTT: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlError {
    /// No receiver has produced a latency sample yet.
    NoSamples,
    UnknownReceiver(ReceiverId),
    /// Duplicate or spurious acknowledgement.
    UnknownPacket { receiver: ReceiverId, seq: u64 },
}

impl fmt::Display for ControlError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NoSamples => f.write_str("no latency samples yet"),
            Self::UnknownReceiver(id) => write!(f, "unknown receiver {id}"),
            Self::UnknownPacket { receiver, seq } => {
                write!(f, "packet {seq} to receiver {receiver} is not outstanding")
            }
        }
    }
}

impl core::error::Error for ControlError {}

/// Result of a successfully matched acknowledgement.
#[derive(Debug, Clone, PartialEq)]
pub struct AckOutcome {
    /// `ack_time − send_time`.
    pub latency: f64,
    /// `latency − d_min` after this sample.
    pub queue_delay: f64,
    /// Earlier packets of the same receiver declared lost by this ack.
    pub lost: Vec<u64>,
}

/// What a tick decided.
#[derive(Debug, Clone, PartialEq)]
pub struct TickReport {
    pub epoch: u64,
    pub time: f64,
    pub quota: u64,
    pub window: u64,
    pub est_bandwidth: f64,
    pub ack_rate: f64,
    pub d_ref: f64,
    pub avg_queue_delay: f64,
    pub in_flight: u64,
    /// No acknowledgement has arrived yet; the quota is the bootstrap floor.
    pub bootstrap: bool,
    /// Packets expired by the timeout rule during this tick.
    pub timed_out: Vec<(ReceiverId, u64)>,
}

#[derive(Debug, Clone)]
pub struct Controller {
    params: ControllerParams,
    state: ControllerState,
}

impl Controller {
    pub fn new(
        params: ControllerParams,
        receivers: impl IntoIterator<Item = ReceiverId>,
    ) -> Result<Self, ParamError> {
        params.validate()?;
        let mut ctl = Self { params, state: ControllerState::default() };
        for id in receivers {
            ctl.add_receiver(id);
        }
        Ok(ctl)
    }

    pub fn params(&self) -> &ControllerParams {
        &self.params
    }

    pub fn state(&self) -> &ControllerState {
        &self.state
    }

    /// Registers a receiver. Returns false if it was already known.
    pub fn add_receiver(&mut self, id: ReceiverId) -> bool {
        if self.state.receiver(id).is_some() {
            return false;
        }
        self.state.receivers.push(ReceiverStats::new(id));
        true
    }

    /// Records a packet handed to the network and returns its per-receiver
    /// sequence number.
    pub fn on_send(&mut self, receiver: ReceiverId, now: f64) -> Result<u64, ControlError> {
        let r = self
            .state
            .receiver_mut(receiver)
            .ok_or(ControlError::UnknownReceiver(receiver))?;
        let seq = r.next_seq;
        r.next_seq += 1;
        r.outstanding.insert(seq, Outstanding { send_time: now, later_acks: 0 });
        r.in_flight += 1;
        self.state.cumulative_sent += 1;
        Ok(seq)
    }

    /// Matches an acknowledgement against the outstanding packets.
    ///
    /// Unknown packets are counted in `spurious_acks` and otherwise leave the
    /// state untouched.
    pub fn on_ack(
        &mut self,
        receiver: ReceiverId,
        seq: u64,
        ack_time: f64,
    ) -> Result<AckOutcome, ControlError> {
        let threshold = self.params.dupack_threshold;
        let horizon = self.params.bw_window;
        let Some(r) = self.state.receiver_mut(receiver) else {
            self.state.spurious_acks += 1;
            return Err(ControlError::UnknownReceiver(receiver));
        };
        let Some(entry) = r.outstanding.remove(&seq) else {
            self.state.spurious_acks += 1;
            return Err(ControlError::UnknownPacket { receiver, seq });
        };
        let latency = (ack_time - entry.send_time).max(0.0);
        r.in_flight -= 1;
        let d_min = r.d_min.map_or(latency, |m| m.min(latency));
        r.d_min = Some(d_min);
        r.last_latency = Some(latency);
        r.ack_timestamps.push_back(AckSample { arrival: ack_time, latency });
        while r.ack_timestamps.front().is_some_and(|a| a.arrival <= ack_time - horizon) {
            r.ack_timestamps.pop_front();
        }

        let mut lost = Vec::new();
        for (&q, o) in r.outstanding.range_mut(..seq) {
            o.later_acks += 1;
            if o.later_acks >= threshold {
                lost.push(q);
            }
        }

        r.record_delivery(seq, latency);
        let before: Vec<Option<f64>> = lost.iter().map(|&q| r.latency_before(q)).collect();

        let queue_delay = latency - d_min;
        self.state.cumulative_acked += 1;
        self.state.interval_delay_sum += queue_delay;
        self.state.interval_delay_count += 1;

        for (&q, prev) in lost.iter().zip(before) {
            self.on_loss(receiver, q, Some(prev.unwrap_or(latency)))?;
        }
        Ok(AckOutcome { latency, queue_delay, lost })
    }

    /// Declares packet `seq` of `receiver` lost.
    ///
    /// `last_success_latency` is the latency of the receiver's most recent
    /// delivered packet; when present it becomes the receiver's `d_max`.
    pub fn on_loss(
        &mut self,
        receiver: ReceiverId,
        seq: u64,
        last_success_latency: Option<f64>,
    ) -> Result<(), ControlError> {
        let r = self
            .state
            .receiver_mut(receiver)
            .ok_or(ControlError::UnknownReceiver(receiver))?;
        if r.outstanding.remove(&seq).is_none() {
            return Err(ControlError::UnknownPacket { receiver, seq });
        }
        r.in_flight -= 1;
        let calibrated = if let Some(latency) = last_success_latency {
            r.d_max = Some(latency);
            true
        } else {
            false
        };
        self.state.cumulative_lost += 1;
        if calibrated {
            self.state.calibrations += 1;
        }
        Ok(())
    }

    /// Per-receiver RTT target `d_min + d_ref`.
    pub fn rtt_reference(&self, receiver: ReceiverId) -> Option<f64> {
        self.state.receiver(receiver)?.d_min.map(|m| m + self.state.d_ref)
    }

    /// How long a packet to `receiver` may stay unacknowledged.
    pub fn loss_timeout(&self, receiver: ReceiverId) -> Option<f64> {
        let r = self.state.receiver(receiver)?;
        let qmax = estimate_qmax(&self.state.receivers, &self.params);
        Some(2.0 * (r.d_min.unwrap_or(UNSAMPLED_RTT) + qmax))
    }

    fn expire_timeouts(&mut self, now: f64) -> Vec<(ReceiverId, u64)> {
        let qmax = estimate_qmax(&self.state.receivers, &self.params);
        let mut expired = Vec::new();
        for r in &self.state.receivers {
            let timeout = 2.0 * (r.d_min.unwrap_or(UNSAMPLED_RTT) + qmax);
            expired.extend(
                r.outstanding
                    .iter()
                    .take_while(|(_, o)| now - o.send_time > timeout)
                    .map(|(&seq, _)| (r.receiver_id, seq)),
            );
        }
        for &(id, seq) in &expired {
            let last = self
                .state
                .receiver(id)
                .and_then(|r| r.latency_before(seq).or(r.last_latency));
            // The entry was just listed as outstanding.
            let _ = self.on_loss(id, seq, last);
        }
        expired
    }

    /// Runs one control epoch at time `now`.
    pub fn control_tick(&mut self, now: f64) -> TickReport {
        let timed_out = self.expire_timeouts(now);

        let st = &mut self.state;
        st.avg_queue_delay = if st.interval_delay_count > 0 {
            st.interval_delay_sum / st.interval_delay_count as f64
        } else {
            0.0
        };
        st.interval_delay_sum = 0.0;
        st.interval_delay_count = 0;

        let horizon_start = now - self.params.bw_window;
        for r in &mut st.receivers {
            while r.ack_timestamps.front().is_some_and(|a| a.arrival <= horizon_start) {
                r.ack_timestamps.pop_front();
            }
        }
        let rate = estimate_bandwidth(st, &self.params, now);
        st.ack_rate = rate;
        if st.avg_queue_delay >= self.params.trust_fraction * st.d_ref || rate > st.est_bandwidth {
            st.est_bandwidth = rate;
        }

        let bootstrap = match compute_dref(&st.receivers, &self.params) {
            Ok(d_ref) => {
                st.d_ref = d_ref;
                let shares = lambda_squared_shares(st);
                for (r, s) in st.receivers.iter_mut().zip(shares) {
                    r.lambda_sq = s;
                }
                st.window = compute_window(st, &self.params);
                st.quota = compute_send_quota(st, &self.params);
                false
            }
            Err(_) => {
                st.window = st.window.max(self.params.bootstrap_quota);
                st.quota = self.params.bootstrap_quota;
                true
            }
        };
        st.epoch += 1;

        TickReport {
            epoch: st.epoch,
            time: now,
            quota: st.quota,
            window: st.window,
            est_bandwidth: st.est_bandwidth,
            ack_rate: st.ack_rate,
            d_ref: st.d_ref,
            avg_queue_delay: st.avg_queue_delay,
            in_flight: st.in_flight(),
            bootstrap,
            timed_out,
        }
    }
}
