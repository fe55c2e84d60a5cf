//! Drop-tail bottleneck queue and piecewise-constant schedules.

use alloc::collections::VecDeque;
use alloc::vec::Vec;
use core::fmt;

/// A step function of time: `value_at(t)` is the value of the last step that
/// starts at or before `t`. Times before the first step take its value.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct Schedule {
    steps: Vec<Step>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Step {
    pub at: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScheduleError {
    Empty,
    Unsorted { index: usize },
    NotFinite { index: usize },
}

impl fmt::Display for ScheduleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Empty => f.write_str("schedule has no steps"),
            Self::Unsorted { index } => write!(f, "schedule step {index} starts before its predecessor"),
            Self::NotFinite { index } => write!(f, "schedule step {index} is not finite"),
        }
    }
}

impl core::error::Error for ScheduleError {}

impl Schedule {
    pub fn constant(value: f64) -> Self {
        Self { steps: alloc::vec![Step { at: 0.0, value }] }
    }

    pub fn new(steps: Vec<Step>) -> Result<Self, ScheduleError> {
        let s = Self { steps };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), ScheduleError> {
        if self.steps.is_empty() {
            return Err(ScheduleError::Empty);
        }
        for (i, s) in self.steps.iter().enumerate() {
            if !(s.at.is_finite() && s.value.is_finite()) {
                return Err(ScheduleError::NotFinite { index: i });
            }
            if i > 0 && s.at < self.steps[i - 1].at {
                return Err(ScheduleError::Unsorted { index: i });
            }
        }
        Ok(())
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn value_at(&self, t: f64) -> f64 {
        let idx = self.steps.partition_point(|s| s.at <= t);
        self.steps[idx.saturating_sub(1)].value
    }

    /// Start of the first step strictly after `t`.
    pub fn next_change_after(&self, t: f64) -> Option<f64> {
        let idx = self.steps.partition_point(|s| s.at <= t);
        self.steps.get(idx).map(|s| s.at)
    }

    pub fn max_value(&self) -> f64 {
        self.steps.iter().map(|s| s.value).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_value(&self) -> f64 {
        self.steps.iter().map(|s| s.value).fold(f64::INFINITY, f64::min)
    }
}

/// Time to serialize `size_bits` at `rate_bps`; infinite when the rate is zero.
pub fn service_time(size_bits: f64, rate_bps: f64) -> f64 {
    if rate_bps > 0.0 {
        size_bits / rate_bps
    } else {
        f64::INFINITY
    }
}

/// Most packets of `size_bits` a link at `rate_bps` serves in `period` seconds.
pub fn packets_per_period(rate_bps: f64, period: f64, size_bits: f64) -> f64 {
    libm::ceil(rate_bps * period / size_bits - 1e-9)
}

/// FIFO with a fixed packet capacity that drops arrivals when full.
///
/// The head packet is the one in service. Counters satisfy
/// `enqueued = served + resident` at all times; rejected arrivals are counted
/// in `dropped` only.
#[derive(Debug, Clone)]
pub struct BottleneckQueue<P> {
    capacity: usize,
    packets: VecDeque<P>,
    enqueued: u64,
    served: u64,
    dropped: u64,
}

impl<P> BottleneckQueue<P> {
    pub fn new(capacity: usize) -> Self {
        Self { capacity, packets: VecDeque::with_capacity(capacity), enqueued: 0, served: 0, dropped: 0 }
    }

    /// Appends `pkt`, or hands it back when the buffer is full.
    pub fn enqueue(&mut self, pkt: P) -> Result<(), P> {
        if self.packets.len() >= self.capacity {
            self.dropped += 1;
            return Err(pkt);
        }
        self.packets.push_back(pkt);
        self.enqueued += 1;
        Ok(())
    }

    pub fn head(&self) -> Option<&P> {
        self.packets.front()
    }

    /// Removes the head packet once its service completes.
    pub fn complete_service(&mut self) -> Option<P> {
        let pkt = self.packets.pop_front()?;
        self.served += 1;
        Some(pkt)
    }

    pub fn len(&self) -> usize {
        self.packets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.packets.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn enqueued(&self) -> u64 {
        self.enqueued
    }

    pub fn served(&self) -> u64 {
        self.served
    }

    pub fn dropped(&self) -> u64 {
        self.dropped
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn schedule_lookup() {
        let s = Schedule::new(vec![
            Step { at: 0.0, value: 4e6 },
            Step { at: 10.0, value: 1e6 },
            Step { at: 20.0, value: 5e6 },
        ])
        .unwrap();
        assert_eq!(s.value_at(-1.0), 4e6);
        assert_eq!(s.value_at(9.999), 4e6);
        assert_eq!(s.value_at(10.0), 1e6);
        assert_eq!(s.value_at(25.0), 5e6);
        assert_eq!(s.next_change_after(10.0), Some(20.0));
        assert_eq!(s.next_change_after(20.0), None);
        assert_eq!(s.max_value(), 5e6);
        assert_eq!(s.min_value(), 1e6);
    }

    #[test]
    fn schedule_rejects_bad_steps() {
        assert_eq!(Schedule::new(vec![]), Err(ScheduleError::Empty));
        let bad = vec![Step { at: 1.0, value: 1.0 }, Step { at: 0.5, value: 2.0 }];
        assert_eq!(Schedule::new(bad), Err(ScheduleError::Unsorted { index: 1 }));
    }

    #[test]
    fn service_time_arithmetic() {
        assert!((service_time(12_000.0, 4e6) - 0.003).abs() < 1e-15);
        assert!((service_time(12_000.0, 1e6) - 0.012).abs() < 1e-15);
        assert!(service_time(12_000.0, 0.0).is_infinite());
        assert_eq!(packets_per_period(4e6, 0.05, 12_000.0), 17.0);
        assert_eq!(packets_per_period(2.4e6, 0.05, 12_000.0), 10.0);
    }

    #[test]
    fn drop_tail_boundary() {
        let mut q = BottleneckQueue::new(2);
        assert!(q.enqueue(1).is_ok());
        assert_eq!(q.len(), 1);
        assert!(q.enqueue(2).is_ok());
        assert_eq!(q.enqueue(3), Err(3));
        assert_eq!(q.dropped(), 1);
        assert_eq!(q.complete_service(), Some(1));
        assert_eq!(q.head(), Some(&2));
        assert_eq!(q.enqueued(), q.served() + q.len() as u64);
    }

    #[test]
    fn zero_capacity_drops_everything() {
        let mut q = BottleneckQueue::new(0);
        assert_eq!(q.enqueue('a'), Err('a'));
        assert!(q.is_empty());
    }
}
