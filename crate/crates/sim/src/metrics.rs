//! Per-period metrics and their CSV form.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use p2pcc_core::control::ReceiverId;

use crate::error::OutputError;

/// One row per control period. Delay fields are `None` for periods without
/// acknowledgements.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    /// End of the period, seconds.
    pub time: f64,
    pub w_kbits: f64,
    pub u_kbits: f64,
    pub ack_rate_kbps: f64,
    pub u_est_kbps: f64,
    pub d_ref_ms: f64,
    /// Measured latency minus configured path RTT, per receiver.
    pub drtt_ms: Vec<Option<f64>>,
    pub rtt_avg_ms: Option<f64>,
    /// Mean of `d_min + d_ref` over the period's acks.
    pub rtt_ref_ms: Option<f64>,
    pub queue_packets: usize,
    pub cumulative_drops: u64,
    /// Bits served by the bottleneck during the period, per flow, over `T`.
    pub throughput_kbps: Vec<f64>,
    /// Configured round trip of the acknowledged packets.
    pub path_rtt_ms: Option<f64>,
    pub capacity_kbps: f64,
}

/// Whole-run counters.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunSummary {
    /// Packets offered to the bottleneck.
    pub arrivals: u64,
    pub served: u64,
    pub dropped: u64,
    pub resident: u64,
    pub served_bits: f64,
    pub served_bits_per_flow: Vec<f64>,
    pub dropped_per_flow: Vec<u64>,
    pub p2p_sent: u64,
    pub p2p_acked: u64,
    pub p2p_lost: u64,
    pub p2p_in_flight: u64,
    pub spurious_acks: u64,
    /// `(time, d_ref before, d_ref after)` for every loss recalibration of `d_ref`.
    pub dref_recalibrations: Vec<(f64, f64, f64)>,
    /// Retransmission timeouts per competing flow.
    pub tcp_timeouts: Vec<u64>,
    /// Fast-recovery episodes per competing flow.
    pub tcp_fast_retransmits: Vec<u64>,
    /// Largest queue occupancy seen, packets.
    pub max_queue: usize,
    pub buffer_capacity: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsLog {
    pub receivers: Vec<ReceiverId>,
    /// `p2p` first, then the competing flows in configuration order.
    pub flows: Vec<String>,
    pub rows: Vec<MetricsRow>,
    pub summary: RunSummary,
}

/// Formats like C's `%.6g`.
pub fn format_sig6(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{v:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mantissa}e{sign}{:02}", exp.abs());
    }
    let decimals = (5 - exp).max(0) as usize;
    trim_zeros(&format!("{v:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(format_sig6).unwrap_or_default()
}

impl MetricsLog {
    pub fn header(&self) -> Vec<String> {
        let mut h: Vec<String> =
            ["time", "w_kbits", "u_kbits", "ack_rate_kbps", "U_est_kbps", "d_ref_ms"].map(String::from).into();
        h.extend(self.receivers.iter().map(|r| format!("dRTT_{r}_ms")));
        h.extend(["rtt_avg_ms", "rtt_ref_ms", "queue_packets", "cumulative_drops"].map(String::from));
        h.extend(self.flows.iter().map(|f| format!("throughput_{f}_kbps")));
        h.extend(["path_rtt_ms", "capacity_kbps"].map(String::from));
        h
    }

    fn record(row: &MetricsRow) -> Vec<String> {
        let mut r = vec![
            format_sig6(row.time),
            format_sig6(row.w_kbits),
            format_sig6(row.u_kbits),
            format_sig6(row.ack_rate_kbps),
            format_sig6(row.u_est_kbps),
            format_sig6(row.d_ref_ms),
        ];
        r.extend(row.drtt_ms.iter().map(|v| opt(*v)));
        r.push(opt(row.rtt_avg_ms));
        r.push(opt(row.rtt_ref_ms));
        r.push(row.queue_packets.to_string());
        r.push(row.cumulative_drops.to_string());
        r.extend(row.throughput_kbps.iter().map(|v| format_sig6(*v)));
        r.push(opt(row.path_rtt_ms));
        r.push(format_sig6(row.capacity_kbps));
        r
    }

    /// Writes the log as CSV to any writer.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(self.header())?;
        for row in &self.rows {
            w.write_record(Self::record(row))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("in-memory write");
        String::from_utf8(buf).expect("utf-8 csv")
    }

    /// Index of a flow's throughput column.
    pub fn flow_index(&self, name: &str) -> Option<usize> {
        self.flows.iter().position(|f| f == name)
    }
}

/// Writes `log` to `path`.
pub fn emit_csv(log: &MetricsLog, path: &Path) -> Result<(), OutputError> {
    let file = File::create(path).map_err(|source| OutputError::Io { path: path.into(), source })?;
    log.write_csv(BufWriter::new(file))
        .map_err(|source| OutputError::Csv { path: path.into(), source })
}
