use super::{CongestionWindow, LossKind};

/// Binary-increase parameters, in packets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BicParams {
    /// Largest per-RTT increment.
    pub s_max: f64,
    /// Smallest per-RTT increment.
    pub s_min: f64,
    /// Multiplicative decrease factor applied on loss.
    pub beta: f64,
    /// Below this window the flow behaves like Reno.
    pub low_window: f64,
}

impl Default for BicParams {
    fn default() -> Self {
        Self { s_max: 32.0, s_min: 0.01, beta: 0.8, low_window: 14.0 }
    }
}

/// BIC window arithmetic: binary search towards the window of the last
/// loss, then max probing beyond it.
#[derive(Debug, Clone, PartialEq)]
pub struct BicFlow {
    params: BicParams,
    cwnd: f64,
    ssthresh: f64,
    w_max: Option<f64>,
    in_recovery: bool,
}

impl BicFlow {
    pub fn new(params: BicParams, initial_cwnd: f64) -> Self {
        Self { params, cwnd: initial_cwnd.max(1.0), ssthresh: f64::INFINITY, w_max: None, in_recovery: false }
    }

    pub fn w_max(&self) -> Option<f64> {
        self.w_max
    }

    /// Increment the window would gain over one RTT without loss.
    pub fn increment_per_rtt(&self) -> f64 {
        let p = &self.params;
        if self.cwnd < self.ssthresh || self.cwnd < p.low_window {
            return if self.cwnd < self.ssthresh { self.cwnd } else { 1.0 };
        }
        match self.w_max {
            None => 1.0,
            Some(w_max) if self.cwnd < w_max => ((w_max - self.cwnd) / 2.0).clamp(p.s_min, p.s_max),
            Some(w_max) => (self.cwnd - w_max).clamp(1.0, p.s_max),
        }
    }

    #[cfg(test)]
    fn with_state(params: BicParams, cwnd: f64, w_max: f64) -> Self {
        Self { params, cwnd, ssthresh: 1.0, w_max: Some(w_max), in_recovery: false }
    }
}

impl Default for BicFlow {
    fn default() -> Self {
        Self::new(BicParams::default(), 2.0)
    }
}

impl CongestionWindow for BicFlow {
    fn cwnd(&self) -> f64 {
        self.cwnd
    }

    fn on_ack(&mut self) {
        if self.in_recovery {
            return;
        }
        self.cwnd += self.increment_per_rtt() / self.cwnd;
    }

    fn on_loss(&mut self, kind: LossKind) {
        let p = self.params;
        let previous = self.w_max;
        // fast convergence: release bandwidth when losing below the last peak
        self.w_max = Some(match previous {
            Some(w) if self.cwnd < w => self.cwnd * (1.0 + p.beta) / 2.0,
            _ => self.cwnd,
        });
        let reduced = if self.cwnd < p.low_window { self.cwnd / 2.0 } else { self.cwnd * p.beta };
        self.ssthresh = reduced.max(2.0);
        match kind {
            LossKind::TripleDup => {
                self.cwnd = self.ssthresh;
                self.in_recovery = true;
            }
            LossKind::Timeout => {
                self.cwnd = 1.0;
                self.in_recovery = false;
            }
        }
    }

    fn on_recovery_exit(&mut self) {
        if self.in_recovery {
            self.in_recovery = false;
            self.cwnd = self.ssthresh;
        }
    }
}
