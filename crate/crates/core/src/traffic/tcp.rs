//! Packet-level TCP endpoints with cumulative acks, a selective-ack
//! scoreboard for loss recovery and a retransmission timer. The window
//! arithmetic is delegated to a [`CongestionWindow`] policy.
//!
//! Recovery follows the conservative SACK scheme: a hole counts as lost once
//! three higher segments were selectively acknowledged, and the sender keeps
//! the data in the pipe (unacked, not sacked, not lost, plus retransmissions)
//! at or below `cwnd`.

use alloc::collections::{BTreeMap, BTreeSet};

use super::{CongestionWindow, LossKind};

const DUPACK_THRESHOLD: u32 = 3;
const INITIAL_RTO: f64 = 1.0;
const MIN_RTO: f64 = 0.2;
const MAX_RTO: f64 = 60.0;

/// A data packet the sender wants on the wire now.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub seq: u64,
    pub retransmit: bool,
}

/// Receiver feedback: the next expected sequence number, plus the segment
/// that triggered the ack when it arrived out of order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TcpAck {
    pub cumulative: u64,
    pub sack: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct TcpSender<C> {
    cc: C,
    active: bool,
    snd_una: u64,
    snd_nxt: u64,
    /// One past the highest sequence ever sent.
    high_tx: u64,
    /// Last transmission time of every unacknowledged segment.
    send_times: BTreeMap<u64, f64>,
    /// Segments sent at least twice; excluded from RTT sampling.
    retransmitted: BTreeSet<u64>,
    sacked: BTreeSet<u64>,
    /// Holes retransmitted during the current recovery.
    recovery_retx: BTreeSet<u64>,
    dupacks: u32,
    /// Highest sequence outstanding when recovery started.
    recover: Option<u64>,
    srtt: Option<f64>,
    rttvar: f64,
    rto: f64,
    timer_deadline: Option<f64>,
    timeouts: u64,
    fast_retransmits: u64,
}

impl<C: CongestionWindow> TcpSender<C> {
    pub fn new(cc: C) -> Self {
        Self {
            cc,
            active: false,
            snd_una: 0,
            snd_nxt: 0,
            high_tx: 0,
            send_times: BTreeMap::new(),
            retransmitted: BTreeSet::new(),
            sacked: BTreeSet::new(),
            recovery_retx: BTreeSet::new(),
            dupacks: 0,
            recover: None,
            srtt: None,
            rttvar: 0.0,
            rto: INITIAL_RTO,
            timer_deadline: None,
            timeouts: 0,
            fast_retransmits: 0,
        }
    }

    pub fn window(&self) -> &C {
        &self.cc
    }

    pub fn is_active(&self) -> bool {
        self.active
    }

    pub fn start(&mut self) {
        self.active = true;
    }

    /// Stops the flow: nothing more is transmitted, timers are disarmed.
    pub fn stop(&mut self) {
        self.active = false;
        self.timer_deadline = None;
    }

    pub fn in_recovery(&self) -> bool {
        self.recover.is_some()
    }

    pub fn rtt_estimate(&self) -> Option<f64> {
        self.srtt
    }

    pub fn rto(&self) -> f64 {
        self.rto
    }

    /// Segments sent and not cumulatively acknowledged.
    pub fn outstanding(&self) -> u64 {
        self.high_tx - self.snd_una
    }

    pub fn timeouts(&self) -> u64 {
        self.timeouts
    }

    pub fn fast_retransmits(&self) -> u64 {
        self.fast_retransmits
    }

    /// When the retransmission timer fires, if armed.
    pub fn timer_deadline(&self) -> Option<f64> {
        self.timer_deadline
    }

    fn arm_timer(&mut self, now: f64) {
        self.timer_deadline = if self.high_tx > self.snd_una { Some(now + self.rto) } else { None };
    }

    fn is_lost(&self, seq: u64) -> bool {
        self.sacked.range(seq + 1..).nth(DUPACK_THRESHOLD as usize - 1).is_some()
    }

    /// Segments believed to be in the network.
    pub fn pipe(&self) -> u64 {
        let mut pipe = 0;
        for seq in self.snd_una..self.snd_nxt {
            if self.sacked.contains(&seq) {
                continue;
            }
            if self.recover.is_none() || !self.is_lost(seq) {
                pipe += 1;
            }
            if self.recovery_retx.contains(&seq) {
                pipe += 1;
            }
        }
        pipe
    }

    fn next_hole(&self) -> Option<u64> {
        (self.snd_una..self.snd_nxt)
            .find(|s| !self.sacked.contains(s) && !self.recovery_retx.contains(s) && self.is_lost(*s))
    }

    fn transmit(&mut self, seq: u64, now: f64) -> Segment {
        let retransmit = seq < self.high_tx;
        if retransmit {
            self.retransmitted.insert(seq);
        }
        self.high_tx = self.high_tx.max(seq + 1);
        self.send_times.insert(seq, now);
        if self.timer_deadline.is_none() {
            self.arm_timer(now);
        }
        Segment { seq, retransmit }
    }

    /// Next packet to transmit at `now`, if the window allows one.
    pub fn poll_transmit(&mut self, now: f64) -> Option<Segment> {
        if !self.active {
            return None;
        }
        let window = libm::floor(self.cc.cwnd()).max(1.0) as u64;
        if self.pipe() >= window {
            return None;
        }
        if self.recover.is_some() {
            if let Some(seq) = self.next_hole() {
                self.recovery_retx.insert(seq);
                if seq == self.snd_una {
                    // the resent head waits behind a full queue; give it a fresh RTO
                    self.arm_timer(now);
                }
                return Some(self.transmit(seq, now));
            }
        }
        while self.sacked.contains(&self.snd_nxt) {
            self.snd_nxt += 1;
        }
        let seq = self.snd_nxt;
        self.snd_nxt += 1;
        Some(self.transmit(seq, now))
    }

    fn sample_rtt(&mut self, sample: f64) {
        match self.srtt {
            None => {
                self.srtt = Some(sample);
                self.rttvar = sample / 2.0;
            }
            Some(srtt) => {
                self.rttvar = 0.75 * self.rttvar + 0.25 * (srtt - sample).abs();
                self.srtt = Some(0.875 * srtt + 0.125 * sample);
            }
        }
        let srtt = self.srtt.unwrap_or(sample);
        self.rto = (srtt + 4.0 * self.rttvar).clamp(MIN_RTO, MAX_RTO);
    }

    pub fn on_ack(&mut self, ack: TcpAck, now: f64) {
        if !self.active {
            return;
        }
        let ackno = ack.cumulative;
        if let Some(s) = ack.sack {
            if s >= ackno && s < self.high_tx {
                self.sacked.insert(s);
            }
        }
        if ackno > self.snd_una {
            // Karn: only segments sent once give RTT samples
            if !self.retransmitted.contains(&(ackno - 1)) {
                if let Some(&sent) = self.send_times.get(&(ackno - 1)) {
                    self.sample_rtt(now - sent);
                }
            }
            let newly = ackno - self.snd_una;
            self.snd_una = ackno;
            self.snd_nxt = self.snd_nxt.max(ackno);
            self.high_tx = self.high_tx.max(ackno);
            self.send_times = self.send_times.split_off(&ackno);
            self.retransmitted = self.retransmitted.split_off(&ackno);
            self.sacked = self.sacked.split_off(&ackno);
            self.recovery_retx = self.recovery_retx.split_off(&ackno);
            self.dupacks = 0;
            match self.recover {
                Some(recover) if ackno > recover => {
                    self.recover = None;
                    self.recovery_retx.clear();
                    self.cc.on_recovery_exit();
                }
                Some(_) => {}
                None => {
                    for _ in 0..newly {
                        self.cc.on_ack();
                    }
                }
            }
            self.arm_timer(now);
        } else if ackno == self.snd_una && self.high_tx > self.snd_una {
            self.dupacks += 1;
        }
        if self.recover.is_none()
            && self.high_tx > self.snd_una
            && (self.dupacks >= DUPACK_THRESHOLD || self.is_lost(self.snd_una))
        {
            self.cc.on_loss(LossKind::TripleDup);
            self.recover = Some(self.high_tx - 1);
            self.fast_retransmits += 1;
        }
    }

    /// Fires the retransmission timer if it is due. Returns true on timeout.
    pub fn on_timer(&mut self, now: f64) -> bool {
        match self.timer_deadline {
            Some(deadline) if self.active && deadline <= now => {}
            _ => return false,
        }
        self.timeouts += 1;
        self.cc.on_loss(LossKind::Timeout);
        self.recover = None;
        self.recovery_retx.clear();
        self.dupacks = 0;
        // go back N, skipping what the receiver already holds
        self.snd_nxt = self.snd_una;
        self.rto = (self.rto * 2.0).min(MAX_RTO);
        self.timer_deadline = Some(now + self.rto);
        true
    }
}

/// Cumulative-ack receiver.
#[derive(Debug, Clone, Default)]
pub struct TcpReceiver {
    expected: u64,
    out_of_order: BTreeSet<u64>,
    delivered: u64,
}

impl TcpReceiver {
    pub fn new() -> Self {
        Self::default()
    }

    /// Accepts a segment and returns the acknowledgement it triggers.
    pub fn on_segment(&mut self, seq: u64) -> TcpAck {
        if seq == self.expected {
            self.expected += 1;
            self.delivered += 1;
            while self.out_of_order.remove(&self.expected) {
                self.expected += 1;
                self.delivered += 1;
            }
        } else if seq > self.expected {
            self.out_of_order.insert(seq);
        }
        TcpAck { cumulative: self.expected, sack: (seq > self.expected).then_some(seq) }
    }

    /// Distinct in-order packets delivered to the application.
    pub fn delivered(&self) -> u64 {
        self.delivered
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::traffic::{RenoFlow, RenoPhase};
    use alloc::vec::Vec;

    fn drain(s: &mut TcpSender<RenoFlow>, now: f64) -> Vec<Segment> {
        core::iter::from_fn(|| s.poll_transmit(now)).collect()
    }

    fn cum(n: u64) -> TcpAck {
        TcpAck { cumulative: n, sack: None }
    }

    /// Delivers `segs` except those in `drop`, returning the receiver's acks.
    fn deliver(rx: &mut TcpReceiver, segs: &[Segment], drop: &[u64]) -> Vec<TcpAck> {
        segs.iter().filter(|s| !drop.contains(&s.seq)).map(|s| rx.on_segment(s.seq)).collect()
    }

    #[test]
    fn window_limits_transmission() {
        let mut s = TcpSender::new(RenoFlow::default());
        assert!(s.poll_transmit(0.0).is_none(), "inactive");
        s.start();
        assert_eq!(drain(&mut s, 0.0).len(), 2);
        s.on_ack(cum(1), 0.05);
        s.on_ack(cum(2), 0.05);
        assert_eq!(s.window().cwnd(), 4.0);
        assert_eq!(drain(&mut s, 0.05).len(), 4);
        assert!((s.rtt_estimate().unwrap() - 0.05).abs() < 1e-12);
    }

    #[test]
    fn triple_dupack_fast_retransmit_and_recovery() {
        let mut s = TcpSender::new(RenoFlow::new(8.0, 4.0));
        s.start();
        let segs = drain(&mut s, 0.0);
        assert_eq!(segs.len(), 8);
        let mut rx = TcpReceiver::new();
        let acks = deliver(&mut rx, &segs, &[2]);
        let cums: Vec<u64> = acks.iter().map(|a| a.cumulative).collect();
        assert_eq!(cums, [1, 2, 2, 2, 2, 2, 2]);
        for a in &acks {
            s.on_ack(*a, 0.1);
        }
        assert_eq!(s.fast_retransmits(), 1);
        assert_eq!(s.window().phase(), RenoPhase::FastRecovery);
        let retx = s.poll_transmit(0.1).unwrap();
        assert_eq!(retx, Segment { seq: 2, retransmit: true });
        let ack = rx.on_segment(2);
        assert_eq!(ack, cum(8));
        s.on_ack(ack, 0.2);
        assert_eq!(s.window().phase(), RenoPhase::CongestionAvoidance);
        // two in-order acks grew cwnd slightly above 8 before the halving
        assert_eq!(s.window().cwnd(), s.window().ssthresh());
        assert!((s.window().cwnd() - 4.124).abs() < 1e-3);
        assert_eq!(rx.delivered(), 8);
    }

    #[test]
    fn sack_repairs_several_holes_in_one_round_trip() {
        let mut s = TcpSender::new(RenoFlow::new(20.0, 10.0));
        s.start();
        let segs = drain(&mut s, 0.0);
        assert_eq!(segs.len(), 20);
        let mut rx = TcpReceiver::new();
        for a in deliver(&mut rx, &segs, &[2, 5, 9]) {
            s.on_ack(a, 0.1);
        }
        assert!(s.in_recovery());
        let retx: Vec<u64> = drain(&mut s, 0.1).iter().filter(|g| g.retransmit).map(|g| g.seq).collect();
        assert_eq!(retx, [2, 5, 9]);
        for seq in retx {
            s.on_ack(rx.on_segment(seq), 0.2);
        }
        assert!(!s.in_recovery());
        assert!(rx.delivered() >= 20);
        assert_eq!(s.timeouts(), 0);
        assert_eq!(s.fast_retransmits(), 1);
    }

    #[test]
    fn pipe_limits_sending_during_recovery() {
        let mut s = TcpSender::new(RenoFlow::new(10.0, 5.0));
        s.start();
        let segs = drain(&mut s, 0.0);
        let mut rx = TcpReceiver::new();
        for a in deliver(&mut rx, &segs, &[0, 1, 2, 3, 4]) {
            s.on_ack(a, 0.1);
        }
        // cwnd 5; five holes lost, five sacked: pipe is empty
        assert_eq!(s.pipe(), 0);
        let out = drain(&mut s, 0.1);
        assert_eq!(out.len(), 5);
        assert!(out.iter().all(|g| g.retransmit));
    }

    #[test]
    fn timeout_goes_back_n() {
        let mut s = TcpSender::new(RenoFlow::new(4.0, 100.0));
        s.start();
        drain(&mut s, 0.0);
        let deadline = s.timer_deadline().unwrap();
        assert!(!s.on_timer(deadline - 0.01));
        assert!(s.on_timer(deadline));
        assert_eq!(s.window().cwnd(), 1.0);
        let seg = s.poll_transmit(deadline).unwrap();
        assert_eq!(seg, Segment { seq: 0, retransmit: true });
        assert!(s.poll_transmit(deadline).is_none());
        assert!(s.rto() >= 2.0);
    }

    #[test]
    fn timeout_skips_sacked_segments() {
        let mut s = TcpSender::new(RenoFlow::new(4.0, 100.0));
        s.start();
        let segs = drain(&mut s, 0.0);
        let mut rx = TcpReceiver::new();
        for a in deliver(&mut rx, &segs, &[0, 2]) {
            s.on_ack(a, 0.05);
        }
        let deadline = s.timer_deadline().unwrap();
        assert!(s.on_timer(deadline));
        let a = s.poll_transmit(deadline).unwrap();
        assert_eq!(a.seq, 0);
        s.on_ack(rx.on_segment(0), deadline + 0.05);
        let b = s.poll_transmit(deadline + 0.05).unwrap();
        assert_eq!(b.seq, 2);
        let c = s.poll_transmit(deadline + 0.05).unwrap();
        assert_eq!(c.seq, 4, "seq 3 is already at the receiver");
    }

    #[test]
    fn stop_silences_sender() {
        let mut s = TcpSender::new(RenoFlow::default());
        s.start();
        drain(&mut s, 0.0);
        s.stop();
        assert!(s.poll_transmit(1.0).is_none());
        assert!(s.timer_deadline().is_none());
        assert!(!s.on_timer(100.0));
    }

    #[test]
    fn receiver_ignores_duplicates_and_reports_sack() {
        let mut rx = TcpReceiver::new();
        assert_eq!(rx.on_segment(0), cum(1));
        assert_eq!(rx.on_segment(0), cum(1));
        assert_eq!(rx.on_segment(2), TcpAck { cumulative: 1, sack: Some(2) });
        assert_eq!(rx.on_segment(1), cum(3));
        assert_eq!(rx.delivered(), 3);
    }
}
