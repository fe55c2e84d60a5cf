use super::{CongestionWindow, LossKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenoPhase {
    SlowStart,
    CongestionAvoidance,
    FastRecovery,
}

/// Reno window arithmetic in packets.
#[derive(Debug, Clone, PartialEq)]
pub struct RenoFlow {
    cwnd: f64,
    ssthresh: f64,
    phase: RenoPhase,
}

const MIN_SSTHRESH: f64 = 2.0;

impl RenoFlow {
    pub fn new(initial_cwnd: f64, initial_ssthresh: f64) -> Self {
        let cwnd = initial_cwnd.max(1.0);
        let ssthresh = initial_ssthresh.max(MIN_SSTHRESH);
        let phase = if cwnd < ssthresh { RenoPhase::SlowStart } else { RenoPhase::CongestionAvoidance };
        Self { cwnd, ssthresh, phase }
    }

    pub fn ssthresh(&self) -> f64 {
        self.ssthresh
    }

    pub fn phase(&self) -> RenoPhase {
        self.phase
    }
}

impl Default for RenoFlow {
    fn default() -> Self {
        Self::new(2.0, f64::INFINITY)
    }
}

impl CongestionWindow for RenoFlow {
    fn cwnd(&self) -> f64 {
        self.cwnd
    }

    fn on_ack(&mut self) {
        match self.phase {
            RenoPhase::SlowStart => {
                self.cwnd += 1.0;
                if self.cwnd >= self.ssthresh {
                    self.phase = RenoPhase::CongestionAvoidance;
                }
            }
            RenoPhase::CongestionAvoidance => self.cwnd += 1.0 / self.cwnd,
            RenoPhase::FastRecovery => {}
        }
    }

    fn on_loss(&mut self, kind: LossKind) {
        self.ssthresh = (self.cwnd / 2.0).max(MIN_SSTHRESH);
        match kind {
            LossKind::TripleDup => {
                self.cwnd = self.ssthresh;
                self.phase = RenoPhase::FastRecovery;
            }
            LossKind::Timeout => {
                self.cwnd = 1.0;
                self.phase = RenoPhase::SlowStart;
            }
        }
    }

    fn on_recovery_exit(&mut self) {
        if self.phase == RenoPhase::FastRecovery {
            self.cwnd = self.ssthresh;
            self.phase = RenoPhase::CongestionAvoidance;
        }
    }
}
