use p2pcc_core::control::{
    compute_send_quota, lambda_squared_shares, lemma2_min_window, Controller, ControllerParams, ControllerState,
};
use p2pcc_core::fluid::{closed_form_next, first_empty_after, first_overflow, simulate, FluidConfig};
use proptest::prelude::*;

/// Straight-line recursion with no prefix sums: every period rescans the
/// whole service history to count acknowledged packets.
fn brute_force(cfg: &FluidConfig, periods: usize, service: &[f64]) -> Vec<f64> {
    let mut y = 0.0;
    let mut sent = 0.0;
    let mut served: Vec<f64> = Vec::new();
    let mut out = vec![y];
    for l in 0..periods {
        let mut acked = 0.0;
        for (j, h) in served.iter().enumerate() {
            for (share, &n) in cfg.mix.iter().zip(&cfg.delays) {
                if j + n < l {
                    acked += share * h;
                }
            }
        }
        let u = (cfg.gamma * (cfg.window - (sent - acked))).max(0.0);
        let h = service[l].min(y + u);
        y += u - h;
        sent += u;
        served.push(h);
        out.push(y);
    }
    out
}

fn config() -> impl Strategy<Value = (f64, Vec<f64>, Vec<usize>)> {
    (1usize..=5).prop_flat_map(|n| {
        (
            (0.0f64..1.0).prop_map(|r| 1.0 - r),
            prop::collection::vec(0.05f64..1.0, n),
            prop::collection::vec(0usize..=10, n),
        )
            .prop_map(|(g, raw, delays)| {
                let total: f64 = raw.iter().sum();
                (g, raw.iter().map(|r| r / total).collect(), delays)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fluid_matches_brute_force(
        (gamma, mix, delays) in config(),
        window in 1.0f64..150.0,
        service in prop::collection::vec(0.0f64..40.0, 120),
    ) {
        let cfg = FluidConfig { window, gamma, mix, delays, integer_quota: false };
        let trace = simulate(&cfg, service.len(), |l| service[l]);
        let oracle = brute_force(&cfg, service.len(), &service);
        for (a, b) in trace.queue.iter().zip(&oracle) {
            prop_assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn queue_stays_below_window(
        (gamma, mix, delays) in config(),
        window in 1.0f64..200.0,
        service in prop::collection::vec(0.1f64..50.0, 1000),
    ) {
        let cfg = FluidConfig { window, gamma, mix, delays, integer_quota: false };
        let trace = simulate(&cfg, service.len(), |l| service[l]);
        prop_assert_eq!(first_overflow(&trace, window), None);
    }

    #[test]
    fn queue_stays_busy_above_min_window(
        (gamma, mix, delays) in config(),
        u_max in 1.0f64..50.0,
        service in prop::collection::vec(0.05f64..=1.0, 1000),
    ) {
        let n_p: Vec<f64> = delays.iter().map(|&d| d as f64).collect();
        let window = lemma2_min_window(u_max, &mix, &n_p, gamma) + 1.0;
        let cfg = FluidConfig { window, gamma, mix, delays, integer_quota: false };
        let n_m = cfg.max_delay();
        let trace = simulate(&cfg, service.len(), |l| service[l] * u_max);
        prop_assert_eq!(first_empty_after(&trace, n_m), None);
    }

    #[test]
    fn closed_form_agrees_with_recursion(
        (gamma, mix, delays) in config(),
        window in 1.0f64..150.0,
        service in prop::collection::vec(0.0f64..40.0, 300),
    ) {
        let cfg = FluidConfig { window, gamma, mix, delays, integer_quota: false };
        let t = simulate(&cfg, service.len(), |l| service[l]);
        for l in 0..service.len() {
            if t.clamped[l] {
                continue;
            }
            let next = closed_form_next(window, gamma, t.queue[l], t.unacked_served[l], t.served[l]);
            prop_assert!((next - t.queue[l + 1]).abs() < 1e-6, "period {l}: {next} vs {}", t.queue[l + 1]);
        }
    }

    #[test]
    fn quota_is_never_negative(window in 0u64..500, sent in 0u64..1000, acked_frac in 0.0f64..=1.0, gamma in 0.01f64..=1.0) {
        let acked = (sent as f64 * acked_frac) as u64;
        let mut state = ControllerState::default();
        state.window = window;
        state.cumulative_sent = sent;
        state.cumulative_acked = acked;
        let params = ControllerParams { gamma, ..Default::default() };
        let u = compute_send_quota(&state, &params);
        let free = window as f64 - (sent - acked) as f64;
        prop_assert!(u as f64 <= (gamma * free).max(0.0) + 0.5 + 1e-9);
    }

    /// Random send / ack / tick sequences keep the packet books balanced and
    /// the in-flight shares normalised.
    #[test]
    fn controller_books_balance(ops in prop::collection::vec((0u8..3, 1u32..=4, 0usize..8), 1..400)) {
        let mut c = Controller::new(ControllerParams::default(), 1..=4).unwrap();
        let mut now = 0.0;
        let mut pending: Vec<(u32, u64)> = Vec::new();
        let mut d_min = [f64::INFINITY; 4];
        for (op, rx, pick) in ops {
            now += 0.005;
            match op {
                0 => pending.push((rx, c.on_send(rx, now).unwrap())),
                1 if !pending.is_empty() => {
                    let (r, seq) = pending.remove(pick % pending.len());
                    // may already have been declared lost
                    if c.state().receiver(r).unwrap().is_outstanding(seq) {
                        c.on_ack(r, seq, now).unwrap();
                    }
                }
                _ => {
                    c.control_tick(now);
                    let shares = lambda_squared_shares(c.state());
                    let total: f64 = shares.iter().sum();
                    prop_assert!(total == 0.0 || (total - 1.0).abs() < 1e-9);
                    prop_assert!(shares.iter().all(|s| (0.0..=1.0).contains(s)));
                }
            }
            let s = c.state();
            let per_rx: u64 = s.receivers.iter().map(|r| r.in_flight).sum();
            prop_assert_eq!(s.cumulative_sent, s.cumulative_acked + s.cumulative_lost + s.in_flight());
            prop_assert_eq!(per_rx, s.in_flight());
            for (slot, r) in d_min.iter_mut().zip(&s.receivers) {
                let now_min = r.d_min.unwrap_or(f64::INFINITY);
                prop_assert!(now_min <= *slot);
                *slot = now_min;
            }
        }
    }
}
