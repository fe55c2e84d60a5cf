use core::fmt;

/// Tuning knobs of the controller.
///
/// Times are in seconds, rates in packets per second, sizes in bits.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct ControllerParams {
    /// Gain applied to the free window when computing the send quota, in (0, 1].
    pub gamma: f64,
    /// Gain of the queue-delay correction term of the window, packets per second.
    pub gamma2: f64,
    /// Fraction of the estimated maximum queue delay used as the target, in (0, 1).
    pub alpha: f64,
    /// Control period `T`.
    pub period: f64,
    /// Ack-rate averaging horizon `t_c`.
    pub bw_window: f64,
    /// Maximum queue delay assumed until the first loss calibrates it.
    pub initial_qmax_offset: f64,
    /// Packet size `s`.
    pub packet_size_bits: f64,
    /// The bandwidth estimate is refreshed only while the measured queue delay
    /// is at least this fraction of the reference.
    pub trust_fraction: f64,
    /// Quota handed out per period while no acknowledgement has ever arrived.
    pub bootstrap_quota: u64,
    /// Number of acknowledgements for later packets of the same receiver that
    /// declares an outstanding packet lost.
    pub dupack_threshold: u32,
}

impl Default for ControllerParams {
    fn default() -> Self {
        Self {
            gamma: 0.75,
            gamma2: 200.0,
            alpha: 0.75,
            period: 0.050,
            bw_window: 1.0,
            initial_qmax_offset: 0.100,
            packet_size_bits: 12_000.0,
            trust_fraction: 0.25,
            bootstrap_quota: 2,
            dupack_threshold: 3,
        }
    }
}

/// A parameter outside its admissible range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamError {
    Gamma(f64),
    Gamma2(f64),
    Alpha(f64),
    Period(f64),
    BwWindow { bw_window: f64, period: f64 },
    InitialQmaxOffset(f64),
    PacketSize(f64),
    TrustFraction(f64),
    DupackThreshold,
}

impl fmt::Display for ParamError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Gamma(v) => write!(f, "gamma must be in (0, 1], got {v}"),
            Self::Gamma2(v) => write!(f, "gamma2 must be finite and >= 0, got {v}"),
            Self::Alpha(v) => write!(f, "alpha must be in (0, 1), got {v}"),
            Self::Period(v) => write!(f, "period must be > 0, got {v}"),
            Self::BwWindow { bw_window, period } => {
                write!(f, "bw_window ({bw_window}) must be >= period ({period})")
            }
            Self::InitialQmaxOffset(v) => {
                write!(f, "initial_qmax_offset must be > 0, got {v}")
            }
            Self::PacketSize(v) => write!(f, "packet_size_bits must be > 0, got {v}"),
            Self::TrustFraction(v) => write!(f, "trust_fraction must be in [0, 1], got {v}"),
            Self::DupackThreshold => f.write_str("dupack_threshold must be >= 1"),
        }
    }
}

impl core::error::Error for ParamError {}

fn positive(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

impl ControllerParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(ParamError::Gamma(self.gamma));
        }
        if !(self.gamma2.is_finite() && self.gamma2 >= 0.0) {
            return Err(ParamError::Gamma2(self.gamma2));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(ParamError::Alpha(self.alpha));
        }
        if !positive(self.period) {
            return Err(ParamError::Period(self.period));
        }
        if !(self.bw_window.is_finite() && self.bw_window >= self.period) {
            return Err(ParamError::BwWindow { bw_window: self.bw_window, period: self.period });
        }
        if !positive(self.initial_qmax_offset) {
            return Err(ParamError::InitialQmaxOffset(self.initial_qmax_offset));
        }
        if !positive(self.packet_size_bits) {
            return Err(ParamError::PacketSize(self.packet_size_bits));
        }
        if !(self.trust_fraction >= 0.0 && self.trust_fraction <= 1.0) {
            return Err(ParamError::TrustFraction(self.trust_fraction));
        }
        if self.dupack_threshold == 0 {
            return Err(ParamError::DupackThreshold);
        }
        Ok(())
    }

    /// Converts a count of packets to kilobits.
    pub fn packets_to_kbits(&self, packets: f64) -> f64 {
        packets * self.packet_size_bits / 1000.0
    }
}
