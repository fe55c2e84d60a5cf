//! Pure computations the controller is assembled from.

use alloc::vec::Vec;

use super::{ControlError, ControllerParams, ControllerState, ReceiverStats};

// Guards `ceil` against products like 15.000000000000002.
const CEIL_SLACK: f64 = 1e-9;

/// Packets to inject this period: `γ · (w − in_flight)`, rounded half-up and
/// clamped at zero.
pub fn compute_send_quota(state: &ControllerState, params: &ControllerParams) -> u64 {
    let free = state.window as f64 - state.in_flight() as f64;
    let raw = params.gamma * free;
    if raw <= 0.0 {
        0
    } else {
        libm::floor(raw + 0.5) as u64
    }
}

/// Estimated maximum queue delay: the tightest `d_max − d_min` among the
/// receivers a loss has calibrated, or the configured bootstrap value.
pub fn estimate_qmax(receivers: &[ReceiverStats], params: &ControllerParams) -> f64 {
    receivers
        .iter()
        .filter_map(ReceiverStats::queue_delay_span)
        .fold(None, |acc: Option<f64>, span| Some(acc.map_or(span, |a| a.min(span))))
        .unwrap_or(params.initial_qmax_offset)
}

/// Queue-delay reference `d_ref = α · q_max`.
///
/// The RTT-level target for a receiver is `d_min + d_ref`.
pub fn compute_dref(
    receivers: &[ReceiverStats],
    params: &ControllerParams,
) -> Result<f64, ControlError> {
    if !receivers.iter().any(|r| r.d_min.is_some()) {
        return Err(ControlError::NoSamples);
    }
    Ok(params.alpha * estimate_qmax(receivers, params))
}

/// Dynamic window:
/// `ceil(U · Σ λ²_p (d_min,p + d_ref + T) + 1) + γ₂ (d_ref − d)`, floored at one
/// packet.
///
/// Receivers without a latency sample contribute with `d_min = 0`.
pub fn compute_window(state: &ControllerState, params: &ControllerParams) -> u64 {
    let weighted: f64 = state
        .receivers
        .iter()
        .map(|r| r.lambda_sq * (r.d_min.unwrap_or(0.0) + state.d_ref + params.period))
        .sum();
    let base = libm::ceil(state.est_bandwidth * weighted + 1.0 - CEIL_SLACK);
    let correction = params.gamma2 * (state.d_ref - state.avg_queue_delay);
    let w = libm::floor(base + correction + 0.5);
    if w < 1.0 {
        1
    } else {
        w as u64
    }
}

/// Ack arrival rate over `(now − t_c, now]`, packets per second.
pub fn estimate_bandwidth(state: &ControllerState, params: &ControllerParams, now: f64) -> f64 {
    let horizon_start = now - params.bw_window;
    let count: usize = state
        .receivers
        .iter()
        .map(|r| {
            r.ack_timestamps
                .iter()
                .filter(|a| a.arrival > horizon_start && a.arrival <= now)
                .count()
        })
        .sum();
    count as f64 / params.bw_window
}

/// Each receiver's share of the unacknowledged packets, in receiver order.
/// All zero when nothing is in flight.
pub fn lambda_squared_shares(state: &ControllerState) -> Vec<f64> {
    let total: u64 = state.receivers.iter().map(|r| r.in_flight).sum();
    state
        .receivers
        .iter()
        .map(|r| if total == 0 { 0.0 } else { r.in_flight as f64 / total as f64 })
        .collect()
}

/// Smallest window (exclusive) that keeps the bottleneck queue non-empty:
/// `u_max · (Σ λ²_p n_p + 1/γ)`.
///
/// `u_max` is the most packets the bottleneck serves in one period and `n_p`
/// the receiver round trip in periods. Panics if the slices differ in length.
pub fn lemma2_min_window(u_max: f64, shares: &[f64], n_p: &[f64], gamma: f64) -> f64 {
    assert_eq!(shares.len(), n_p.len(), "one delay per share");
    let weighted: f64 = shares.iter().zip(n_p).map(|(s, n)| s * n).sum();
    u_max * (weighted + 1.0 / gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::ReceiverStats;
    use alloc::vec;

    fn state_with(window: u64, sent: u64, acked: u64) -> ControllerState {
        ControllerState {
            window,
            cumulative_sent: sent,
            cumulative_acked: acked,
            ..Default::default()
        }
    }

    fn params() -> ControllerParams {
        ControllerParams::default()
    }

    #[test]
    fn quota_empty_pipe_equals_window() {
        let p = ControllerParams { gamma: 1.0, ..params() };
        assert_eq!(compute_send_quota(&state_with(100, 0, 0), &p), 100);
    }

    #[test]
    fn quota_scales_free_window() {
        let p = ControllerParams { gamma: 0.5, ..params() };
        assert_eq!(compute_send_quota(&state_with(100, 40, 0), &p), 30);
    }

    #[test]
    fn quota_clamps_negative() {
        let p = ControllerParams { gamma: 1.0, ..params() };
        assert_eq!(compute_send_quota(&state_with(100, 130, 0), &p), 0);
    }

    #[test]
    fn quota_rounds_half_up() {
        let p = ControllerParams { gamma: 0.5, ..params() };
        assert_eq!(compute_send_quota(&state_with(5, 0, 0), &p), 3);
        assert_eq!(compute_send_quota(&state_with(3, 0, 0), &p), 2);
    }

    #[test]
    fn quota_excludes_lost_packets() {
        let p = ControllerParams { gamma: 1.0, ..params() };
        let mut s = state_with(10, 10, 2);
        s.cumulative_lost = 3;
        assert_eq!(compute_send_quota(&s, &p), 5);
    }

    fn rx(id: u32, d_min: Option<f64>, d_max: Option<f64>) -> ReceiverStats {
        ReceiverStats { d_min, d_max, ..ReceiverStats::new(id) }
    }

    #[test]
    fn dref_from_calibrated_receiver() {
        let p = ControllerParams { alpha: 0.75, ..params() };
        let r = [rx(1, Some(0.020), Some(0.120))];
        let d_ref = compute_dref(&r, &p).unwrap();
        assert!((d_ref - 0.075).abs() < 1e-12);
        assert!((r[0].d_min.unwrap() + d_ref - 0.095).abs() < 1e-12);
    }

    #[test]
    fn dref_bootstrap_before_loss() {
        let p = ControllerParams { alpha: 0.5, initial_qmax_offset: 0.040, ..params() };
        let d_ref = compute_dref(&[rx(1, Some(0.030), None)], &p).unwrap();
        assert!((d_ref - 0.020).abs() < 1e-12);
    }

    #[test]
    fn dref_takes_tightest_span() {
        let p = ControllerParams { alpha: 0.75, ..params() };
        let r = [rx(1, Some(0.020), Some(0.100)), rx(2, Some(0.010), Some(0.110)), rx(3, Some(0.0), None)];
        assert!((compute_dref(&r, &p).unwrap() - 0.060).abs() < 1e-12);
    }

    #[test]
    fn dref_without_samples_errors() {
        let r = [rx(1, None, Some(0.2))];
        assert_eq!(compute_dref(&r, &params()), Err(ControlError::NoSamples));
        assert_eq!(compute_dref(&[], &params()), Err(ControlError::NoSamples));
    }

    fn window_state(u: f64, d_ref: f64, d: f64, receivers: Vec<ReceiverStats>) -> ControllerState {
        ControllerState { est_bandwidth: u, d_ref, avg_queue_delay: d, receivers, ..Default::default() }
    }

    #[test]
    fn window_single_receiver() {
        let mut r = rx(1, Some(0.020), None);
        r.lambda_sq = 1.0;
        let s = window_state(333.0, 0.075, 0.075, vec![r]);
        assert_eq!(compute_window(&s, &params()), 50);
    }

    #[test]
    fn window_cold_start_opens_via_correction() {
        let s = window_state(0.0, 0.075, 0.0, vec![rx(1, None, None)]);
        let p = ControllerParams { gamma2: 200.0, ..params() };
        assert_eq!(compute_window(&s, &p), 16);
    }

    #[test]
    fn window_four_receivers_hand_evaluated() {
        // 0.25 * (0.012 + 0.022 + 0.007 + 0.016) = 0.01425
        // 0.01425 + 0.040 + 0.050 = 0.10425
        // 333 * 0.10425 + 1 = 35.71525 -> 36
        let receivers = [0.012, 0.022, 0.007, 0.016]
            .iter()
            .enumerate()
            .map(|(i, d)| {
                let mut r = rx(i as u32 + 1, Some(*d), None);
                r.lambda_sq = 0.25;
                r
            })
            .collect();
        let s = window_state(333.0, 0.040, 0.040, receivers);
        assert_eq!(compute_window(&s, &params()), 36);
    }

    #[test]
    fn window_floors_at_one() {
        let mut r = rx(1, Some(0.02), None);
        r.lambda_sq = 1.0;
        let s = window_state(100.0, 0.05, 2.0, vec![r]);
        assert_eq!(compute_window(&s, &params()), 1);
    }

    #[test]
    fn lemma2_bound_examples() {
        assert!((lemma2_min_window(10.0, &[1.0], &[5.0], 1.0) - 60.0).abs() < 1e-12);
        assert!((lemma2_min_window(10.0, &[1.0], &[5.0], 0.5) - 70.0).abs() < 1e-12);
        assert!((lemma2_min_window(20.0, &[0.5, 0.5], &[2.0, 6.0], 1.0) - 100.0).abs() < 1e-12);
    }

    #[test]
    fn shares_examples() {
        let mut s = ControllerState::default();
        s.receivers = vec![ReceiverStats::new(1), ReceiverStats::new(2)];
        assert_eq!(lambda_squared_shares(&s), vec![0.0, 0.0]);
        s.receivers[0].in_flight = 10;
        s.receivers[1].in_flight = 30;
        assert_eq!(lambda_squared_shares(&s), vec![0.25, 0.75]);
        s.receivers.truncate(1);
        assert_eq!(lambda_squared_shares(&s), vec![1.0]);
    }
}
