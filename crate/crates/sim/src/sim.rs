//! Deterministic discrete-event simulation of one sender, one drop-tail
//! bottleneck and a set of receivers behind per-receiver delay links.
//!
//! Packets queue at the bottleneck first and then travel the receiver's
//! forward link; acknowledgements come back over a loss-free ack link. Each
//! link delivers in FIFO order: a latency decrease never lets a packet
//! overtake one sent earlier on the same link. The P2P controller ticks
//! every `T` and its quota is paced evenly over the following period.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use p2pcc_core::control::{Controller, ReceiverId};
use p2pcc_core::queue::{service_time, BottleneckQueue, Schedule};
use p2pcc_core::traffic::{
    Backlog, BicFlow, BicParams, BlockPacket, BlockSource, RenoFlow, TcpAck, TcpReceiver, TcpSender,
};

use crate::config::{ScenarioConfig, TcpKind};
use crate::error::ConfigError;
use crate::metrics::{MetricsLog, MetricsRow, RunSummary};

const P2P_FLOW: usize = 0;

/// A packet inside the simulated network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimPacket {
    /// 0 for P2P, `1 + i` for competing flow `i`.
    pub flow: usize,
    pub receiver: ReceiverId,
    pub seq: u64,
    pub block_id: u64,
    pub size_bits: f64,
    pub send_time: f64,
    pub enqueue_time: f64,
}

#[derive(Debug, Clone)]
enum Event {
    Tick(u64),
    PaceSend,
    ServiceDone,
    /// The bottleneck rate was zero; look again.
    ServiceRetry,
    Deliver { pkt: SimPacket, base_rtt_fwd: f64 },
    P2pAck { receiver: ReceiverId, seq: u64, base_rtt: f64 },
    TcpAck { flow: usize, ack: TcpAck },
    TcpTimer { flow: usize },
    FlowStart { flow: usize },
    FlowStop { flow: usize },
}

struct Scheduled {
    time: f64,
    seq: u64,
    event: Event,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Scheduled {}
impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Scheduled {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Pending events ordered by `(time, insertion order)`.
#[derive(Default)]
pub struct EventQueue {
    heap: BinaryHeap<Scheduled>,
    next_seq: u64,
}

impl EventQueue {
    fn push(&mut self, time: f64, event: Event) {
        self.heap.push(Scheduled { time, seq: self.next_seq, event });
        self.next_seq += 1;
    }

    fn pop(&mut self) -> Option<(f64, Event)> {
        self.heap.pop().map(|s| (s.time, s.event))
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

/// One-way delay link that never reorders.
#[derive(Debug, Clone)]
pub struct DelayLink {
    latency: Schedule,
    last_arrival: f64,
}

impl DelayLink {
    pub fn new(latency: Schedule) -> Self {
        Self { latency, last_arrival: f64::NEG_INFINITY }
    }

    /// Arrival time of a packet entering at `now`, and the configured latency
    /// it was assigned.
    pub fn transit(&mut self, now: f64) -> (f64, f64) {
        let lat = self.latency.value_at(now).max(0.0);
        let arrival = (now + lat).max(self.last_arrival);
        self.last_arrival = arrival;
        (arrival, lat)
    }
}

enum TcpEndpoint {
    Reno(TcpSender<RenoFlow>),
    Bic(TcpSender<BicFlow>),
}

macro_rules! with_sender {
    ($ep:expr, $s:ident => $body:expr) => {
        match $ep {
            TcpEndpoint::Reno($s) => $body,
            TcpEndpoint::Bic($s) => $body,
        }
    };
}

struct TcpFlowState {
    receiver: ReceiverId,
    sender: TcpEndpoint,
    rx: TcpReceiver,
    timer_pending: Option<f64>,
}

#[derive(Default)]
struct PeriodStats {
    latency_sum: f64,
    ack_count: u64,
    path_sum: f64,
    ref_sum: f64,
    ref_count: u64,
    drtt_sum: Vec<f64>,
    drtt_count: Vec<u64>,
    served_bits: Vec<f64>,
}

impl PeriodStats {
    fn new(receivers: usize, flows: usize) -> Self {
        Self {
            drtt_sum: vec![0.0; receivers],
            drtt_count: vec![0; receivers],
            served_bits: vec![0.0; flows],
            ..Default::default()
        }
    }

    fn reset(&mut self) {
        let (r, f) = (self.drtt_sum.len(), self.served_bits.len());
        *self = Self::new(r, f);
    }
}

struct Simulation<'a> {
    cfg: &'a ScenarioConfig,
    now: f64,
    events: EventQueue,
    controller: Controller,
    source: BlockSource,
    pacing: VecDeque<BlockPacket>,
    queue: BottleneckQueue<SimPacket>,
    busy: bool,
    forward: Vec<DelayLink>,
    ack: Vec<DelayLink>,
    tcp: Vec<TcpFlowState>,
    period_stats: PeriodStats,
    summary: RunSummary,
    rows: Vec<MetricsRow>,
    last_report: Option<p2pcc_core::control::TickReport>,
    last_calibrations: u64,
}

impl<'a> Simulation<'a> {
    fn new(cfg: &'a ScenarioConfig) -> Self {
        let ids = cfg.receiver_ids();
        let controller = Controller::new(cfg.controller, ids.iter().copied()).expect("validated params");
        let backlog = cfg.block_source.blocks.map_or(Backlog::Infinite, Backlog::Blocks);
        let source = BlockSource::new(cfg.block_source.block_size, ids.clone(), backlog);
        let flows = 1 + cfg.competing_flows.len();
        let tcp = cfg
            .competing_flows
            .iter()
            .map(|f| TcpFlowState {
                receiver: f.receiver,
                sender: match f.kind {
                    TcpKind::Reno => TcpEndpoint::Reno(TcpSender::new(RenoFlow::default())),
                    TcpKind::Bic => TcpEndpoint::Bic(TcpSender::new(BicFlow::new(BicParams::default(), 2.0))),
                },
                rx: TcpReceiver::new(),
                timer_pending: None,
            })
            .collect();
        let capacity = cfg.buffer_capacity();
        Self {
            cfg,
            now: 0.0,
            events: EventQueue::default(),
            controller,
            source,
            pacing: VecDeque::new(),
            queue: BottleneckQueue::new(capacity),
            busy: false,
            forward: cfg.receivers.iter().map(|r| DelayLink::new(r.forward_latency.clone())).collect(),
            ack: cfg.receivers.iter().map(|r| DelayLink::new(r.ack_latency.clone())).collect(),
            tcp,
            period_stats: PeriodStats::new(ids.len(), flows),
            summary: RunSummary {
                served_bits_per_flow: vec![0.0; flows],
                dropped_per_flow: vec![0; flows],
                buffer_capacity: capacity,
                ..Default::default()
            },
            rows: Vec::new(),
            last_report: None,
            last_calibrations: 0,
        }
    }

    fn receiver_index(&self, id: ReceiverId) -> usize {
        self.cfg.receivers.iter().position(|r| r.id == id).expect("known receiver")
    }

    fn packet_bits(&self) -> f64 {
        self.cfg.controller.packet_size_bits
    }

    fn run(mut self) -> MetricsLog {
        let period = self.cfg.controller.period;
        let n = self.cfg.periods();
        self.events.push(0.0, Event::Tick(0));
        for (i, f) in self.cfg.competing_flows.iter().enumerate() {
            self.events.push(f.active.start, Event::FlowStart { flow: i });
            if let Some(stop) = f.active.stop {
                self.events.push(stop, Event::FlowStop { flow: i });
            }
        }
        while let Some((time, event)) = self.events.pop() {
            self.now = time;
            match event {
                Event::Tick(k) => {
                    if k > 0 {
                        self.record_row(k as f64 * period);
                    }
                    if k == n {
                        break;
                    }
                    self.control(k);
                    self.events.push((k + 1) as f64 * period, Event::Tick(k + 1));
                }
                Event::PaceSend => self.pace_send(),
                Event::ServiceDone => self.service_done(),
                Event::ServiceRetry => {
                    self.busy = false;
                    self.start_service();
                }
                Event::Deliver { pkt, base_rtt_fwd } => self.deliver(pkt, base_rtt_fwd),
                Event::P2pAck { receiver, seq, base_rtt } => self.p2p_ack(receiver, seq, base_rtt),
                Event::TcpAck { flow, ack } => {
                    let now = self.now;
                    with_sender!(&mut self.tcp[flow].sender, s => s.on_ack(ack, now));
                    self.pump_tcp(flow);
                }
                Event::TcpTimer { flow } => {
                    self.tcp[flow].timer_pending = None;
                    let now = self.now;
                    with_sender!(&mut self.tcp[flow].sender, s => s.on_timer(now));
                    self.pump_tcp(flow);
                }
                Event::FlowStart { flow } => {
                    with_sender!(&mut self.tcp[flow].sender, s => s.start());
                    self.pump_tcp(flow);
                }
                Event::FlowStop { flow } => {
                    with_sender!(&mut self.tcp[flow].sender, s => s.stop());
                }
            }
        }
        self.finish()
    }

    fn control(&mut self, k: u64) {
        if !self.cfg.p2p.contains(self.now) {
            self.pacing.clear();
            return;
        }
        let d_ref_before = self.controller.state().d_ref;
        let report = self.controller.control_tick(self.now);
        let calibrations = self.controller.state().calibrations;
        if calibrations != self.last_calibrations && (report.d_ref - d_ref_before).abs() > 1e-12 {
            self.summary.dref_recalibrations.push((self.now, d_ref_before, report.d_ref));
        }
        self.last_calibrations = calibrations;
        let packets = self.source.next_packets(report.quota);
        self.last_report = Some(report);
        if packets.is_empty() {
            return;
        }
        let spacing = self.cfg.controller.period / packets.len() as f64;
        let start = k as f64 * self.cfg.controller.period;
        for i in 0..packets.len() {
            self.events.push(start + i as f64 * spacing, Event::PaceSend);
        }
        self.pacing.extend(packets);
    }

    fn pace_send(&mut self) {
        let Some(bp) = self.pacing.pop_front() else { return };
        let seq = self.controller.on_send(bp.receiver, self.now).expect("known receiver");
        let pkt = SimPacket {
            flow: P2P_FLOW,
            receiver: bp.receiver,
            seq,
            block_id: bp.block_id,
            size_bits: self.packet_bits(),
            send_time: self.now,
            enqueue_time: self.now,
        };
        self.enqueue(pkt);
    }

    fn enqueue(&mut self, pkt: SimPacket) {
        self.summary.arrivals += 1;
        if let Err(dropped) = self.queue.enqueue(pkt) {
            self.summary.dropped_per_flow[dropped.flow] += 1;
            return;
        }
        self.summary.max_queue = self.summary.max_queue.max(self.queue.len());
        self.start_service();
    }

    fn start_service(&mut self) {
        if self.busy {
            return;
        }
        let Some(head) = self.queue.head() else { return };
        let rate = self.cfg.bottleneck.rate_bps.value_at(self.now);
        let dt = service_time(head.size_bits, rate);
        self.busy = true;
        if dt.is_finite() {
            self.events.push(self.now + dt, Event::ServiceDone);
        } else if let Some(next) = self.cfg.bottleneck.rate_bps.next_change_after(self.now) {
            self.events.push(next, Event::ServiceRetry);
        }
    }

    fn service_done(&mut self) {
        self.busy = false;
        let pkt = self.queue.complete_service().expect("head in service");
        self.period_stats.served_bits[pkt.flow] += pkt.size_bits;
        self.summary.served_bits_per_flow[pkt.flow] += pkt.size_bits;
        self.summary.served_bits += pkt.size_bits;
        let idx = self.receiver_index(pkt.receiver);
        let (arrival, lat) = self.forward[idx].transit(self.now);
        self.events.push(arrival, Event::Deliver { pkt, base_rtt_fwd: lat });
        self.start_service();
    }

    fn deliver(&mut self, pkt: SimPacket, base_rtt_fwd: f64) {
        let idx = self.receiver_index(pkt.receiver);
        let (arrival, lat) = self.ack[idx].transit(self.now);
        if pkt.flow == P2P_FLOW {
            self.events.push(
                arrival,
                Event::P2pAck { receiver: pkt.receiver, seq: pkt.seq, base_rtt: base_rtt_fwd + lat },
            );
        } else {
            let flow = pkt.flow - 1;
            let ack = self.tcp[flow].rx.on_segment(pkt.seq);
            self.events.push(arrival, Event::TcpAck { flow, ack });
        }
    }

    fn p2p_ack(&mut self, receiver: ReceiverId, seq: u64, base_rtt: f64) {
        let Ok(outcome) = self.controller.on_ack(receiver, seq, self.now) else {
            return;
        };
        let idx = self.receiver_index(receiver);
        let st = &mut self.period_stats;
        st.latency_sum += outcome.latency;
        st.ack_count += 1;
        st.path_sum += base_rtt;
        st.drtt_sum[idx] += outcome.latency - base_rtt;
        st.drtt_count[idx] += 1;
        if let Some(r) = self.controller.rtt_reference(receiver) {
            st.ref_sum += r;
            st.ref_count += 1;
        }
    }

    fn pump_tcp(&mut self, flow: usize) {
        let now = self.now;
        let bits = self.packet_bits();
        let receiver = self.tcp[flow].receiver;
        loop {
            let seg = with_sender!(&mut self.tcp[flow].sender, s => s.poll_transmit(now));
            let Some(seg) = seg else { break };
            self.enqueue(SimPacket {
                flow: flow + 1,
                receiver,
                seq: seg.seq,
                block_id: 0,
                size_bits: bits,
                send_time: now,
                enqueue_time: now,
            });
        }
        let deadline = with_sender!(&self.tcp[flow].sender, s => s.timer_deadline());
        let state = &mut self.tcp[flow];
        if let Some(d) = deadline {
            if state.timer_pending.is_none_or(|p| d < p) {
                state.timer_pending = Some(d);
                self.events.push(d, Event::TcpTimer { flow });
            }
        }
    }

    fn record_row(&mut self, time: f64) {
        let p = self.cfg.controller;
        let kbits = |pk: f64| p.packets_to_kbits(pk);
        let st = &self.period_stats;
        let per = |sum: f64, n: u64| (n > 0).then(|| sum / n as f64 * 1000.0);
        let (w, u, ack_rate, est, d_ref) = match &self.last_report {
            Some(r) => (r.window as f64, r.quota as f64, r.ack_rate, r.est_bandwidth, r.d_ref),
            None => (0.0, 0.0, 0.0, 0.0, 0.0),
        };
        let row = MetricsRow {
            time,
            w_kbits: kbits(w),
            u_kbits: kbits(u),
            ack_rate_kbps: kbits(ack_rate),
            u_est_kbps: kbits(est),
            d_ref_ms: d_ref * 1000.0,
            drtt_ms: st.drtt_sum.iter().zip(&st.drtt_count).map(|(s, n)| per(*s, *n)).collect(),
            rtt_avg_ms: per(st.latency_sum, st.ack_count),
            rtt_ref_ms: per(st.ref_sum, st.ref_count),
            queue_packets: self.queue.len(),
            cumulative_drops: self.queue.dropped(),
            throughput_kbps: st.served_bits.iter().map(|b| b / p.period / 1000.0).collect(),
            path_rtt_ms: per(st.path_sum, st.ack_count),
            capacity_kbps: self.cfg.bottleneck.rate_bps.value_at(time) / 1000.0,
        };
        self.rows.push(row);
        self.period_stats.reset();
    }

    fn finish(mut self) -> MetricsLog {
        let s = self.controller.state();
        self.summary.served = self.queue.served();
        self.summary.dropped = self.queue.dropped();
        self.summary.resident = self.queue.len() as u64;
        self.summary.p2p_sent = s.cumulative_sent;
        self.summary.p2p_acked = s.cumulative_acked;
        self.summary.p2p_lost = s.cumulative_lost;
        self.summary.p2p_in_flight = s.receivers.iter().map(|r| r.in_flight).sum();
        self.summary.spurious_acks = s.spurious_acks;
        for f in &self.tcp {
            let (t, r) = with_sender!(&f.sender, s => (s.timeouts(), s.fast_retransmits()));
            self.summary.tcp_timeouts.push(t);
            self.summary.tcp_fast_retransmits.push(r);
        }
        let mut flows = vec!["p2p".to_string()];
        flows.extend(self.cfg.competing_flows.iter().map(|f| f.name.clone()));
        MetricsLog { receivers: self.cfg.receiver_ids(), flows, rows: self.rows, summary: self.summary }
    }
}

/// Runs a scenario to completion.
pub fn run(cfg: &ScenarioConfig) -> Result<MetricsLog, ConfigError> {
    cfg.validate()?;
    Ok(Simulation::new(cfg).run())
}
