//! Scenario description, mirrored field for field by the JSON scenario files.

use std::collections::HashSet;

use p2pcc_core::control::{lemma2_min_window, ControllerParams, ReceiverId};
use p2pcc_core::queue::{packets_per_period, Schedule};
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    /// Simulated time, seconds.
    pub duration: f64,
    /// Seed the scenario's random draws came from.
    pub seed: u64,
    pub controller: ControllerParams,
    pub receivers: Vec<ReceiverConfig>,
    pub bottleneck: BottleneckConfig,
    pub block_source: BlockSourceConfig,
    /// When the P2P sender is active.
    pub p2p: ActivePeriod,
    #[serde(default)]
    pub competing_flows: Vec<CompetingFlow>,
}

/// One receiver and the one-way delays (seconds) of its data and ack paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReceiverConfig {
    pub id: ReceiverId,
    pub forward_latency: Schedule,
    pub ack_latency: Schedule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BottleneckConfig {
    /// Service rate, bits per second.
    pub rate_bps: Schedule,
    /// Buffer size in packets; twice the minimum non-empty-queue window when absent.
    #[serde(default)]
    pub buffer_packets: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockSourceConfig {
    pub block_size: u32,
    /// Finite number of blocks; unlimited when absent.
    #[serde(default)]
    pub blocks: Option<u64>,
}

impl Default for BlockSourceConfig {
    fn default() -> Self {
        Self { block_size: 40, blocks: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActivePeriod {
    pub start: f64,
    #[serde(default)]
    pub stop: Option<f64>,
}

impl ActivePeriod {
    pub fn always() -> Self {
        Self { start: 0.0, stop: None }
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start && self.stop.is_none_or(|s| t < s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TcpKind {
    Reno,
    Bic,
}

/// A loss-based TCP flow sharing the bottleneck.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompetingFlow {
    pub name: String,
    pub kind: TcpKind,
    pub receiver: ReceiverId,
    pub active: ActivePeriod,
}

fn check_schedule(schedule: &Schedule, what: &str, nonneg: bool) -> Result<(), ConfigError> {
    schedule
        .validate()
        .map_err(|e| ConfigError::Schedule { what: what.to_string(), reason: e.to_string() })?;
    if schedule.steps()[0].at > 0.0 {
        return Err(ConfigError::Schedule {
            what: what.to_string(),
            reason: "first step must start at or before t = 0".into(),
        });
    }
    if nonneg && schedule.min_value() < 0.0 {
        return Err(ConfigError::Schedule { what: what.to_string(), reason: "negative value".into() });
    }
    Ok(())
}

fn check_period(p: &ActivePeriod, what: &str) -> Result<(), ConfigError> {
    let ok = p.start.is_finite() && p.start >= 0.0 && p.stop.is_none_or(|s| s.is_finite() && s > p.start);
    if ok {
        Ok(())
    } else {
        Err(ConfigError::ActivePeriod(what.to_string()))
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(ConfigError::Duration(self.duration));
        }
        self.controller.validate()?;
        if self.receivers.is_empty() {
            return Err(ConfigError::NoReceivers);
        }
        let mut seen = HashSet::new();
        for r in &self.receivers {
            if !seen.insert(r.id) {
                return Err(ConfigError::DuplicateReceiver(r.id));
            }
            check_schedule(&r.forward_latency, &format!("receiver {} forward latency", r.id), true)?;
            check_schedule(&r.ack_latency, &format!("receiver {} ack latency", r.id), true)?;
        }
        check_schedule(&self.bottleneck.rate_bps, "bottleneck rate", true)?;
        if self.block_source.block_size == 0 {
            return Err(ConfigError::BlockSize);
        }
        check_period(&self.p2p, "p2p")?;
        let mut names = HashSet::new();
        for f in &self.competing_flows {
            if f.name.is_empty() || f.name == "p2p" || !names.insert(f.name.as_str()) {
                return Err(ConfigError::FlowName(f.name.clone()));
            }
            if !seen.contains(&f.receiver) {
                return Err(ConfigError::FlowReceiver { flow: f.name.clone(), receiver: f.receiver });
            }
            check_period(&f.active, &f.name)?;
        }
        Ok(())
    }

    /// Number of metric rows a run produces.
    pub fn periods(&self) -> u64 {
        (self.duration / self.controller.period).round() as u64
    }

    /// Minimum window that keeps the queue busy, evaluated at the highest
    /// service rate, the longest path round trips and equal receiver shares.
    pub fn lemma2_bound(&self) -> f64 {
        let p = &self.controller;
        let u_max = packets_per_period(self.bottleneck.rate_bps.max_value(), p.period, p.packet_size_bits);
        let share = 1.0 / self.receivers.len() as f64;
        let shares = vec![share; self.receivers.len()];
        let n_p: Vec<f64> = self
            .receivers
            .iter()
            .map(|r| (r.forward_latency.max_value() + r.ack_latency.max_value()) / p.period)
            .collect();
        lemma2_min_window(u_max, &shares, &n_p, p.gamma)
    }

    pub fn buffer_capacity(&self) -> usize {
        self.bottleneck
            .buffer_packets
            .unwrap_or_else(|| (2.0 * self.lemma2_bound()).ceil() as usize)
    }

    pub fn receiver_ids(&self) -> Vec<ReceiverId> {
        self.receivers.iter().map(|r| r.id).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments;

    #[test]
    fn builtins_validate_and_round_trip() {
        for name in experiments::BUILTIN_NAMES {
            let cfg = experiments::builtin(name, 3).unwrap();
            cfg.validate().unwrap();
            let back = ScenarioConfig::from_json(&cfg.to_json()).unwrap();
            assert_eq!(back, cfg, "{name}");
        }
    }

    #[test]
    fn rejects_bad_configs() {
        let base = experiments::build_experiment_1(1);
        let mut c = base.clone();
        c.duration = -1.0;
        assert!(matches!(c.validate(), Err(ConfigError::Duration(_))));
        let mut c = base.clone();
        c.receivers.clear();
        assert!(matches!(c.validate(), Err(ConfigError::NoReceivers)));
        let mut c = base.clone();
        c.receivers.push(c.receivers[0].clone());
        assert!(matches!(c.validate(), Err(ConfigError::DuplicateReceiver(1))));
        let mut c = base.clone();
        c.controller.gamma = 2.0;
        assert!(matches!(c.validate(), Err(ConfigError::Params(_))));
        let mut c = base.clone();
        c.p2p.stop = Some(0.0);
        assert!(matches!(c.validate(), Err(ConfigError::ActivePeriod(_))));
        let mut c = base;
        c.receivers[0].ack_latency = Schedule::constant(-0.01);
        assert!(matches!(c.validate(), Err(ConfigError::Schedule { .. })));
    }

    #[test]
    fn unknown_fields_rejected() {
        let mut v: serde_json::Value = serde_json::from_str(&experiments::build_experiment_1(1).to_json()).unwrap();
        v["bogus"] = serde_json::json!(1);
        assert!(matches!(ScenarioConfig::from_json(&v.to_string()), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn default_buffer_is_twice_lemma2_bound() {
        let cfg = experiments::build_experiment_2(experiments::Exp2Variant::Static, 1);
        // u_max = ceil(4e6 * 0.05 / 12000) = 17; RTTs 64/84/54/72 ms -> mean n = 1.37
        let expected = 17.0 * ((0.064 + 0.084 + 0.054 + 0.072) / 4.0 / 0.05 + 1.0 / cfg.controller.gamma);
        assert!((cfg.lemma2_bound() - expected).abs() < 1e-9);
        assert_eq!(cfg.buffer_capacity(), (2.0 * expected).ceil() as usize);
    }
}
