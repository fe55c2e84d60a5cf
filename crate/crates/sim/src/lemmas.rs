//! Randomised checks of the two queue-bound lemmas on the fluid recursion.

use std::fmt;

use p2pcc_core::control::lemma2_min_window;
use p2pcc_core::fluid::{first_empty_after, first_overflow, simulate, FluidConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const PERIODS: usize = 1000;
const MAX_RECEIVERS: usize = 5;
const MAX_DELAY: usize = 10;
/// Service schedules are piecewise constant over segments of this many periods.
const SEGMENT: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lemma {
    BoundedQueue,
    NonEmptyQueue,
}

impl fmt::Display for Lemma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Lemma::BoundedQueue => "lemma1",
            Lemma::NonEmptyQueue => "lemma2",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub trial: usize,
    pub period: usize,
    pub queue: f64,
    pub window: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaReport {
    pub lemma: Lemma,
    pub trials: usize,
    pub seed: u64,
    pub violations: Vec<Violation>,
    /// Lemma 1: largest `y / w`. Lemma 2: smallest `y` after `n_m + 1`.
    pub extreme: f64,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    /// Line-oriented text form: a summary line, then one line per violation.
    pub fn render(&self) -> String {
        let mut out = format!(
            "{} trials={} seed={} violations={} extreme={:.6}\n",
            self.lemma,
            self.trials,
            self.seed,
            self.violations.len(),
            self.extreme
        );
        for v in &self.violations {
            out += &format!(
                "{} violation trial={} period={} queue={:.6} window={:.6} gamma={:.6}\n",
                self.lemma, v.trial, v.period, v.queue, v.window, v.gamma
            );
        }
        out
    }
}

struct Trial {
    gamma: f64,
    mix: Vec<f64>,
    delays: Vec<usize>,
    /// Per-segment service capacity, packets per period.
    service: Vec<f64>,
}

fn sample_trial(rng: &mut ChaCha8Rng, u_max: f64) -> Trial {
    // (0, 1]
    let gamma = 1.0 - rng.gen::<f64>();
    let receivers = rng.gen_range(1..=MAX_RECEIVERS);
    let raw: Vec<f64> = (0..receivers).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mix = raw.iter().map(|r| r / total).collect();
    let delays = (0..receivers).map(|_| rng.gen_range(0..=MAX_DELAY)).collect();
    let service = (0..PERIODS.div_ceil(SEGMENT)).map(|_| rng.gen_range(0.05 * u_max..=u_max)).collect();
    Trial { gamma, mix, delays, service }
}

/// Queue never reaches a fixed window under bounded positive service.
pub fn verify_lemma1(trials: usize, seed: u64) -> LemmaReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = Vec::new();
    let mut extreme: f64 = 0.0;
    for trial in 0..trials {
        let window = rng.gen_range(1.0..200.0);
        let u_max = rng.gen_range(1.0..50.0);
        let t = sample_trial(&mut rng, u_max);
        let cfg = FluidConfig { window, gamma: t.gamma, mix: t.mix, delays: t.delays, integer_quota: false };
        let trace = simulate(&cfg, PERIODS, |l| t.service[l / SEGMENT]);
        extreme = trace.queue.iter().fold(extreme, |m, y| m.max(y / window));
        if let Some(period) = first_overflow(&trace, window) {
            violations.push(Violation { trial, period, queue: trace.queue[period], window, gamma: t.gamma });
        }
    }
    LemmaReport { lemma: Lemma::BoundedQueue, trials, seed, violations, extreme }
}

/// Queue stays non-empty after `n_m + 1` periods when the window exceeds the
/// minimum-window bound and the sender is always backlogged.
pub fn verify_lemma2(trials: usize, seed: u64) -> LemmaReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = Vec::new();
    let mut extreme = f64::INFINITY;
    for trial in 0..trials {
        let u_max = rng.gen_range(1.0..50.0);
        let t = sample_trial(&mut rng, u_max);
        let n_p: Vec<f64> = t.delays.iter().map(|&d| d as f64).collect();
        let window = lemma2_min_window(u_max, &t.mix, &n_p, t.gamma) + 1.0;
        let cfg = FluidConfig { window, gamma: t.gamma, mix: t.mix, delays: t.delays, integer_quota: false };
        let n_m = cfg.max_delay();
        let trace = simulate(&cfg, PERIODS, |l| t.service[l / SEGMENT]);
        extreme = trace.queue.iter().skip(n_m + 2).fold(extreme, |m, &y| m.min(y));
        if let Some(period) = first_empty_after(&trace, n_m) {
            violations.push(Violation { trial, period, queue: trace.queue[period], window, gamma: t.gamma });
        }
    }
    LemmaReport { lemma: Lemma::NonEmptyQueue, trials, seed, violations, extreme }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_suites_are_clean() {
        let l1 = verify_lemma1(100, 1);
        assert!(l1.passed(), "{}", l1.render());
        assert!(l1.extreme < 1.0);
        let l2 = verify_lemma2(100, 1);
        assert!(l2.passed(), "{}", l2.render());
        assert!(l2.extreme > 0.0);
    }

    #[test]
    fn reports_are_reproducible() {
        assert_eq!(verify_lemma1(20, 9), verify_lemma1(20, 9));
        assert_eq!(verify_lemma2(20, 9), verify_lemma2(20, 9));
    }

    #[test]
    fn render_lists_violations() {
        let r = LemmaReport {
            lemma: Lemma::BoundedQueue,
            trials: 1,
            seed: 0,
            violations: vec![Violation { trial: 0, period: 3, queue: 50.0, window: 50.0, gamma: 1.0 }],
            extreme: 1.0,
        };
        let text = r.render();
        assert_eq!(text.lines().count(), 2);
        assert!(text.starts_with("lemma1 trials=1 seed=0 violations=1"));
        assert!(text.contains("period=3"));
    }
}
