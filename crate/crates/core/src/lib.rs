//! Congestion control for P2P live-streaming traffic.
//!
//! A live-streaming sender pushes small blocks of video, one after another,
//! to many receivers at different network distances. All of that traffic
//! leaves through one bottleneck (usually the home gateway on the upload
//! path). The controller in [`control`] runs once per period `T` and keeps
//! the bottleneck queue at a chosen delay: never empty, so the upload link is
//! fully used, and never full, so nothing is dropped.
//!
//! The crate is `no_std` (it needs `alloc`) and has no I/O. It contains:
//!
//! * [`control`]: the periodic controller, its state and the pure
//!   computations it is built from (send quota, queue-delay reference,
//!   dynamic window, ack-rate bandwidth estimate, queue-bound helpers).
//! * [`fluid`]: the period-level queue recursion used to check the queue
//!   bounds independently of the event simulator.
//! * [`queue`]: drop-tail bottleneck queue and piecewise-constant schedules.
//! * [`traffic`]: the sequential block source and the loss-based TCP
//!   endpoints (Reno, BIC) that share the bottleneck in experiments.

#![no_std]
#![deny(rustdoc::broken_intra_doc_links)]

extern crate alloc;

pub mod control;
pub mod fluid;
pub mod queue;
pub mod traffic;

pub use control::{
    compute_dref, compute_send_quota, compute_window, estimate_bandwidth,
    lambda_squared_shares, lemma2_min_window, AckOutcome, ControlError, Controller,
    ControllerParams, ControllerState, ParamError, ReceiverId, ReceiverStats, TickReport,
};
