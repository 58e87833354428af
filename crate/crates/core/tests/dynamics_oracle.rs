//! Closed-form delivery probabilities against a deterministic quadrature of
//! the capacity conditions.
//!
//! For `g ~ Exp(1)` and an indicator `A(g)`, `P{A} = ∫₀¹ A(−ln(1−u)) du`.
//! Each delivery region is a union of at most two intervals in `g`, so the
//! midpoint rule on `n` points is off by at most `4/n`.

use noma_core::dynamics::{
    action_space, p_u1_success_order12, p_u1_success_order21, p_u2_success_order12, p_u2_success_order21,
    success_probabilities, ActionFilter, DecodingOrder,
};
use noma_core::scenario::{ScenarioConfig, ScenarioParams};
use proptest::prelude::*;

fn cap(cfg: &ScenarioConfig, bits: u32, signal: f64, interference: f64, noise: f64) -> f64 {
    cfg.tau_s * cfg.bandwidth_hz / f64::from(bits) * (1.0 + signal / (noise + interference)).log2()
}

/// Delivery of user 1 (`user = 0`) or user 2 (`user = 1`) at gain `g` of
/// that user's own channel.
fn delivered(
    cfg: &ScenarioConfig,
    user: usize,
    order: DecodingOrder,
    v1: f64,
    v2: f64,
    r1: u32,
    r2: u32,
    g: f64,
) -> bool {
    let h = cfg.power_w * cfg.beta[user] * g;
    let n = cfg.noise_w[user];
    let [y1, y2] = cfg.packet_bits;
    let (r1f, r2f) = (f64::from(r1), f64::from(r2));
    match (order, user) {
        (DecodingOrder::OneThenTwo, 0) => cap(cfg, y1, h * v1, h * v2, n) >= r1f,
        (DecodingOrder::OneThenTwo, _) => {
            if cap(cfg, y1, h * v1, h * v2, n) >= r1f {
                cap(cfg, y2, h * v2, 0.0, n) >= r2f
            } else {
                cap(cfg, y2, h * v2, h * v1, n) >= r2f
            }
        }
        (DecodingOrder::TwoThenOne, 0) => {
            if cap(cfg, y2, h * v2, h * v1, n) >= r2f {
                cap(cfg, y1, h * v1, 0.0, n) >= r1f
            } else {
                cap(cfg, y1, h * v1, h * v2, n) >= r1f
            }
        }
        (DecodingOrder::TwoThenOne, _) => cap(cfg, y2, h * v2, h * v1, n) >= r2f,
    }
}

fn quadrature(n: usize, mut ok: impl FnMut(f64) -> bool) -> f64 {
    let hits = (0..n)
        .filter(|&i| {
            let u = (i as f64 + 0.5) / n as f64;
            ok(-(-u).ln_1p())
        })
        .count();
    hits as f64 / n as f64
}

fn oracle(
    cfg: &ScenarioConfig,
    user: usize,
    order: DecodingOrder,
    v1: f64,
    v2: f64,
    r1: u32,
    r2: u32,
    n: usize,
) -> f64 {
    quadrature(n, |g| delivered(cfg, user, order, v1, v2, r1, r2, g))
}

fn reference() -> ScenarioConfig {
    ScenarioParams::reference().validate().unwrap()
}

/// Unequal users, small packets: exercises every branch of the SIC formula.
fn asymmetric() -> ScenarioConfig {
    ScenarioParams {
        beta1: 3e-8,
        beta2: 2e-7,
        sigma1_sq_dbm: -72.0,
        sigma2_sq_dbm: -68.0,
        Y1: 700,
        Y2: 450,
        power_set: vec![
            (0.0, 0.0),
            (0.2, 0.8),
            (0.35, 0.65),
            (0.5, 0.5),
            (0.6, 0.4),
            (0.8, 0.15),
            (1.0, 0.0),
        ],
        ..ScenarioParams::reference()
    }
    .validate()
    .unwrap()
}

const FINE: usize = 10_000_000;

#[test]
fn reference_examples_match_quadrature() {
    let cfg = reference();
    let tol = 4.0 / FINE as f64;
    let p = p_u1_success_order12(&cfg, 0.9, 0.1, 1);
    assert!((p - oracle(&cfg, 0, DecodingOrder::OneThenTwo, 0.9, 0.1, 1, 0, FINE)).abs() <= tol);
    assert!((p - 0.9997451).abs() < 1e-7);

    let p = p_u2_success_order12(&cfg, 0.7, 0.3, 1, 1);
    assert!((p - oracle(&cfg, 1, DecodingOrder::OneThenTwo, 0.7, 0.3, 1, 1, FINE)).abs() <= tol);
    assert!((p - 0.998794).abs() < 1e-6);

    let p = p_u2_success_order21(&cfg, 0.1, 0.9, 1);
    assert!((p - 0.9997451).abs() < 1e-7);

    // Mirror image of the 1→2 user-2 value under equal user parameters.
    let p = p_u1_success_order21(&cfg, 0.3, 0.7, 1, 1);
    assert!((p - oracle(&cfg, 0, DecodingOrder::TwoThenOne, 0.3, 0.7, 1, 1, FINE)).abs() <= tol);
    assert!((p - 0.9987936214791452).abs() < 1e-12);
}

#[test]
fn zero_rate_sic_collapses_to_interference_free() {
    let cfg = asymmetric();
    for &(v1, v2) in &[(0.2, 0.8), (0.6, 0.4), (1.0, 0.0)] {
        for r1 in 1..=4 {
            let thr = cfg.threshold(0, r1);
            let expected = if v1 > 0.0 {
                (-thr / (cfg.snr_scale(0) * v1)).exp()
            } else {
                0.0
            };
            assert!((p_u1_success_order21(&cfg, v1, v2, r1, 0) - expected).abs() < 1e-15);
        }
    }
}

fn check_all_actions(cfg: &ScenarioConfig, n: usize) {
    let tol = 4.0 / n as f64 + 1e-12;
    for a in action_space(cfg, ActionFilter::Full) {
        let split = cfg.power_set[a.power_idx];
        let (p1, p2) = success_probabilities(cfg, &a);
        let q1 = oracle(cfg, 0, a.order, split.v1, split.v2, a.r1, a.r2, n);
        let q2 = oracle(cfg, 1, a.order, split.v1, split.v2, a.r1, a.r2, n);
        assert!((p1 - q1).abs() <= tol, "{a:?}: user 1 closed {p1} vs quadrature {q1}");
        assert!((p2 - q2).abs() <= tol, "{a:?}: user 2 closed {p2} vs quadrature {q2}");
    }
}

#[test]
fn every_reference_action_matches_quadrature() {
    check_all_actions(&reference(), 200_000);
}

#[test]
fn every_asymmetric_action_matches_quadrature() {
    check_all_actions(&asymmetric(), 200_000);
}

#[test]
fn sic_difference_branch_is_nonnegative() {
    // Both margins positive and φ2 ≤ φ1 needs small thresholds on both streams.
    let cfg = asymmetric();
    let mut hit = 0;
    for a in action_space(&cfg, ActionFilter::Full) {
        let s = cfg.power_set[a.power_idx];
        let (own, first, thr_first, thr_own, user) = match a.order {
            DecodingOrder::OneThenTwo => (s.v2, s.v1, cfg.threshold(0, a.r1), cfg.threshold(1, a.r2), 1),
            DecodingOrder::TwoThenOne => (s.v1, s.v2, cfg.threshold(1, a.r2), cfg.threshold(0, a.r1), 0),
        };
        if thr_first == 0.0 || thr_own == 0.0 {
            continue;
        }
        let scale = cfg.snr_scale(user);
        let (m1, m2) = (first - own * thr_first, own - first * thr_own);
        if m1 > 0.0 && m2 > 0.0 && thr_own / (scale * m2) <= thr_first / (scale * m1) {
            hit += 1;
            let (p1, p2) = success_probabilities(&cfg, &a);
            assert!(if user == 0 { p1 } else { p2 } >= 0.0);
        }
    }
    assert!(hit > 0, "no action reached the difference branch");
}

#[test]
fn probabilities_decrease_with_rate() {
    // `other` is the rate of the user whose rate stays fixed.
    for cfg in [reference(), asymmetric()] {
        for s in &cfg.power_set {
            let (v1, v2) = (s.v1, s.v2);
            for other in 0..=4 {
                for r in 0..4 {
                    assert!(p_u1_success_order12(&cfg, v1, v2, r + 1) <= p_u1_success_order12(&cfg, v1, v2, r));
                    assert!(
                        p_u1_success_order21(&cfg, v1, v2, r + 1, other)
                            <= p_u1_success_order21(&cfg, v1, v2, r, other)
                    );
                    assert!(
                        p_u2_success_order12(&cfg, v1, v2, other, r + 1)
                            <= p_u2_success_order12(&cfg, v1, v2, other, r)
                    );
                    assert!(p_u2_success_order21(&cfg, v1, v2, r + 1) <= p_u2_success_order21(&cfg, v1, v2, r));
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_scenarios_match_quadrature(
        beta1 in 1e-8f64..1e-5,
        beta2 in 1e-8f64..1e-5,
        y1 in 200u32..2000,
        y2 in 200u32..2000,
        v1 in 0.0f64..1.0,
        share in 0.0f64..1.0,
        r1 in 0u32..4,
        r2 in 0u32..4,
    ) {
        let v2 = (1.0 - v1) * share;
        let cfg = ScenarioParams {
            beta1, beta2, Y1: y1, Y2: y2,
            power_set: vec![(v1, v2)],
            ..ScenarioParams::reference()
        }.validate().unwrap();
        let n = 50_000;
        let tol = 4.0 / n as f64 + 1e-12;
        for order in DecodingOrder::ALL {
            let a = noma_core::Action { order, power_idx: 0, r1, r2 };
            let (p1, p2) = success_probabilities(&cfg, &a);
            prop_assert!((0.0..=1.0).contains(&p1) && (0.0..=1.0).contains(&p2));
            prop_assert!((p1 - oracle(&cfg, 0, order, v1, v2, r1, r2, n)).abs() <= tol);
            prop_assert!((p2 - oracle(&cfg, 1, order, v1, v2, r1, r2, n)).abs() <= tol);
            let d = noma_core::outcome_distribution(&cfg, &a);
            prop_assert!((d.total() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dbm_round_trip(dbm in -150.0f64..60.0) {
        let w = noma_core::scenario::dbm_to_watts(dbm);
        let back = noma_core::scenario::watts_to_dbm(w);
        prop_assert!((noma_core::scenario::dbm_to_watts(back) - w).abs() <= 1e-12 * w);
    }

    #[test]
    fn threshold_monotone(bits in 1u32..4000, rate in 0u32..8) {
        use noma_core::scenario::spectral_threshold;
        let t = spectral_threshold(bits, rate, 1e-3, 1e6);
        prop_assert!(spectral_threshold(bits, rate + 1, 1e-3, 1e6) > t);
        prop_assert!(spectral_threshold(bits + 1, rate, 1e-3, 1e6) >= t);
        prop_assert_eq!(t == 0.0, rate == 0);
    }
}
