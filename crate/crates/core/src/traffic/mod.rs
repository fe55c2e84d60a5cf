//! Traffic sources that share the bottleneck with the controller.

mod bic;
mod block;
mod reno;
mod tcp;

pub use bic::{BicFlow, BicParams};
pub use block::{Backlog, BlockPacket, BlockSource};
pub use reno::{RenoFlow, RenoPhase};
pub use tcp::{Segment, TcpAck, TcpReceiver, TcpSender};

/// How a TCP sender learned about a loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    TripleDup,
    Timeout,
}

/// Congestion-window policy of a loss-based TCP sender. Windows are in
/// packets.
pub trait CongestionWindow {
    fn cwnd(&self) -> f64;
    /// One new packet was cumulatively acknowledged outside recovery.
    fn on_ack(&mut self);
    fn on_loss(&mut self, kind: LossKind);
    /// Fast recovery completed.
    fn on_recovery_exit(&mut self);
}
