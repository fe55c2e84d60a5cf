//! Built-in scenarios for the three experiment families.

use p2pcc_core::control::ControllerParams;
use p2pcc_core::queue::{Schedule, Step};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{
    ActivePeriod, BlockSourceConfig, BottleneckConfig, CompetingFlow, ReceiverConfig, ScenarioConfig, TcpKind,
};
use crate::error::ConfigError;

pub const BUILTIN_NAMES: [&str; 7] = [
    "exp1",
    "exp2-static",
    "exp2-dynamic",
    "exp3-reno-p2pfirst",
    "exp3-reno-tcpfirst",
    "exp3-bic-p2pfirst",
    "exp3-bic-tcpfirst",
];

const DURATION: f64 = 100.0;
const RESAMPLE_EVERY: f64 = 10.0;
/// One-way sender to router latency.
const ACCESS_LATENCY: f64 = 0.020;
const CAPACITY_BPS: f64 = 4.0e6;
/// Router to receiver latencies of the four-receiver topology.
const EXP2_LATENCIES: [f64; 4] = [0.012, 0.022, 0.007, 0.016];
/// Buffer for the variable-capacity run. Kept small enough that the window
/// built at high capacity overruns it when the rate falls.
const EXP2_DYNAMIC_BUFFER: usize = 50;
const TCP_DURATION: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exp2Variant {
    Static,
    Dynamic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ordering {
    P2pFirst,
    TcpFirst,
}

/// Piecewise-constant schedule redrawn from `U(lo, hi)` every ten seconds.
fn resampled(rng: &mut ChaCha8Rng, lo: f64, hi: f64, offset: f64) -> Schedule {
    let steps = (0..(DURATION / RESAMPLE_EVERY) as usize)
        .map(|i| Step { at: i as f64 * RESAMPLE_EVERY, value: offset + rng.gen_range(lo..hi) })
        .collect();
    Schedule::new(steps).expect("sorted finite steps")
}

fn receiver(id: u32, one_way: Schedule) -> ReceiverConfig {
    ReceiverConfig { id, forward_latency: one_way.clone(), ack_latency: one_way }
}

fn four_receivers() -> Vec<ReceiverConfig> {
    EXP2_LATENCIES
        .iter()
        .enumerate()
        .map(|(i, d)| receiver(i as u32 + 1, Schedule::constant(ACCESS_LATENCY + d)))
        .collect()
}

fn base(name: &str, seed: u64, receivers: Vec<ReceiverConfig>, rate: Schedule) -> ScenarioConfig {
    ScenarioConfig {
        name: name.to_string(),
        duration: DURATION,
        seed,
        controller: ControllerParams::default(),
        receivers,
        bottleneck: BottleneckConfig { rate_bps: rate, buffer_packets: None },
        block_source: BlockSourceConfig::default(),
        p2p: ActivePeriod::always(),
        competing_flows: Vec::new(),
    }
}

/// One receiver whose access latency is redrawn every 10 s.
pub fn build_experiment_1(seed: u64) -> ScenarioConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let one_way = resampled(&mut rng, 0.002, 0.022, ACCESS_LATENCY);
    base("exp1", seed, vec![receiver(1, one_way)], Schedule::constant(CAPACITY_BPS))
}

pub fn build_experiment_2(variant: Exp2Variant, seed: u64) -> ScenarioConfig {
    match variant {
        Exp2Variant::Static => base("exp2-static", seed, four_receivers(), Schedule::constant(CAPACITY_BPS)),
        Exp2Variant::Dynamic => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rate = resampled(&mut rng, 1.0e6, 5.0e6, 0.0);
            let mut cfg = base("exp2-dynamic", seed, four_receivers(), rate);
            cfg.bottleneck.buffer_packets = Some(EXP2_DYNAMIC_BUFFER);
            cfg
        }
    }
}

/// Four-receiver topology plus one 60 s TCP flow towards receiver 1.
pub fn build_experiment_3(tcp: TcpKind, ordering: Ordering, seed: u64) -> ScenarioConfig {
    let (kind, offset) = match tcp {
        TcpKind::Reno => ("reno", 15.0),
        TcpKind::Bic => ("bic", if ordering == Ordering::P2pFirst { 40.0 } else { 30.0 }),
    };
    let order = match ordering {
        Ordering::P2pFirst => "p2pfirst",
        Ordering::TcpFirst => "tcpfirst",
    };
    let name = format!("exp3-{kind}-{order}");
    let mut cfg = base(&name, seed, four_receivers(), Schedule::constant(CAPACITY_BPS));
    cfg.controller.alpha = 0.75;
    let (tcp_start, p2p_start) = match ordering {
        Ordering::P2pFirst => (offset, 0.0),
        // the P2P sender joins a flow that has been running for a while
        Ordering::TcpFirst => (0.0, if tcp == TcpKind::Reno { 25.0 } else { offset }),
    };
    cfg.p2p = ActivePeriod { start: p2p_start, stop: None };
    cfg.competing_flows.push(CompetingFlow {
        name: kind.to_string(),
        kind: tcp,
        receiver: 1,
        active: ActivePeriod { start: tcp_start, stop: Some(tcp_start + TCP_DURATION) },
    });
    cfg
}

pub fn builtin(name: &str, seed: u64) -> Result<ScenarioConfig, ConfigError> {
    Ok(match name {
        "exp1" => build_experiment_1(seed),
        "exp2-static" => build_experiment_2(Exp2Variant::Static, seed),
        "exp2-dynamic" => build_experiment_2(Exp2Variant::Dynamic, seed),
        "exp3-reno-p2pfirst" => build_experiment_3(TcpKind::Reno, Ordering::P2pFirst, seed),
        "exp3-reno-tcpfirst" => build_experiment_3(TcpKind::Reno, Ordering::TcpFirst, seed),
        "exp3-bic-p2pfirst" => build_experiment_3(TcpKind::Bic, Ordering::P2pFirst, seed),
        "exp3-bic-tcpfirst" => build_experiment_3(TcpKind::Bic, Ordering::TcpFirst, seed),
        other => return Err(ConfigError::UnknownScenario(other.to_string())),
    })
}
