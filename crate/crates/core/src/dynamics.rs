//! Closed-form per-slot delivery probabilities under Rayleigh fading.
//!
//! The small-scale gains `g1`, `g2` are independent unit-mean exponentials,
//! so a delivery condition of the form `SINR(g) >= θ` is an interval of `g`
//! and its probability is a difference of exponentials.
//!
//! With decoding order 1→2, user 1 decodes its own stream treating user 2's
//! as interference, and user 2 first tries to strip user 1's stream:
//!
//! * SIC succeeds when `g2 >= φ1`; user 2 then needs `g2 >= ψ` with
//!   `ψ = σ2²θ2/(Pβ2·v2)` (interference-free);
//! * otherwise user 2 needs `g2 >= φ2` while still seeing user 1's power.
//!
//! The delivery region is `[max(φ1, ψ), ∞) ∪ [φ2, φ1)`, giving the five
//! branches implemented in [`sic_success`].
//!
//! Decoding order 2→1 is the mirror image: user 2 decodes directly, user 1
//! first strips user 2's stream (with user 2's packet size in the rate
//! comparison) and then decodes its own. Substituting `β1`, `σ1²`, the SIC
//! threshold `θ2 = 2^(Y2·r2/τW) − 1` and the own threshold
//! `θ1 = 2^(Y1·r1/τW) − 1` into the same region yields the same branch
//! structure with user 2's power as the first-decoded stream.
//!
//! A zero target rate is always met and delivers nothing. The SIC step of a
//! zero-rate stream always succeeds since capacity is nonnegative.

use alloc::vec::Vec;

use crate::scenario::{PowerSplit, ScenarioConfig};

/// Which user's stream is decoded first under SIC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum DecodingOrder {
    /// User 1's stream is decoded first.
    OneThenTwo,
    /// User 2's stream is decoded first.
    TwoThenOne,
}

impl DecodingOrder {
    pub const ALL: [DecodingOrder; 2] = [DecodingOrder::OneThenTwo, DecodingOrder::TwoThenOne];

    pub fn as_str(self) -> &'static str {
        match self {
            DecodingOrder::OneThenTwo => "order12",
            DecodingOrder::TwoThenOne => "order21",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "order12" => Some(DecodingOrder::OneThenTwo),
            "order21" => Some(DecodingOrder::TwoThenOne),
            _ => None,
        }
    }
}

/// Restriction of the action space, used for fixed-order baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ActionFilter {
    Full,
    OnlyOneThenTwo,
    OnlyTwoThenOne,
}

impl ActionFilter {
    pub const ALL: [ActionFilter; 3] = [
        ActionFilter::Full,
        ActionFilter::OnlyOneThenTwo,
        ActionFilter::OnlyTwoThenOne,
    ];

    pub fn allows(self, order: DecodingOrder) -> bool {
        match self {
            ActionFilter::Full => true,
            ActionFilter::OnlyOneThenTwo => order == DecodingOrder::OneThenTwo,
            ActionFilter::OnlyTwoThenOne => order == DecodingOrder::TwoThenOne,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ActionFilter::Full => "full",
            ActionFilter::OnlyOneThenTwo => "order12",
            ActionFilter::OnlyTwoThenOne => "order21",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "full" => Some(ActionFilter::Full),
            "order12" => Some(ActionFilter::OnlyOneThenTwo),
            "order21" => Some(ActionFilter::OnlyTwoThenOne),
            _ => None,
        }
    }
}

/// Per-slot decision: decoding order, power split, and target rates in
/// packets per slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Action {
    pub order: DecodingOrder,
    /// Index into [`ScenarioConfig::power_set`].
    pub power_idx: usize,
    pub r1: u32,
    pub r2: u32,
}

impl Action {
    pub fn power<'a>(&self, cfg: &'a ScenarioConfig) -> &'a PowerSplit {
        &cfg.power_set[self.power_idx]
    }

    /// Whether the action only uses entries of the scenario's sets.
    pub fn is_valid(&self, cfg: &ScenarioConfig) -> bool {
        self.power_idx < cfg.power_set.len()
            && cfg.rate_sets[0].contains(&self.r1)
            && cfg.rate_sets[1].contains(&self.r2)
    }
}

/// Enumerates the actions allowed by `filter` in lexicographic
/// (order, power index, r1, r2) order. Solvers break ties by this order.
pub fn action_space(cfg: &ScenarioConfig, filter: ActionFilter) -> Vec<Action> {
    let mut actions = Vec::new();
    for order in DecodingOrder::ALL.into_iter().filter(|&o| filter.allows(o)) {
        for power_idx in 0..cfg.power_set.len() {
            for &r1 in &cfg.rate_sets[0] {
                for &r2 in &cfg.rate_sets[1] {
                    actions.push(Action {
                        order,
                        power_idx,
                        r1,
                        r2,
                    });
                }
            }
        }
    }
    actions
}

/// Joint law of the per-slot deliveries `(d1, d2)`. Each user receives
/// either its full target or nothing.
///
/// When a target rate is zero both outcomes coincide; the mass then sits on
/// the "delivered" entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcomeDistribution {
    /// `d1 = r1`, `d2 = r2`.
    pub p_11: f64,
    /// `d1 = r1`, `d2 = 0`.
    pub p_10: f64,
    /// `d1 = 0`, `d2 = r2`.
    pub p_01: f64,
    /// `d1 = 0`, `d2 = 0`.
    pub p_00: f64,
}

impl OutcomeDistribution {
    /// Product law of two independent per-user deliveries.
    pub fn from_marginals(p1: f64, p2: f64) -> Self {
        Self {
            p_11: p1 * p2,
            p_10: p1 * (1.0 - p2),
            p_01: (1.0 - p1) * p2,
            p_00: (1.0 - p1) * (1.0 - p2),
        }
    }

    /// `(probability, user-1 delivered, user-2 delivered)` for each outcome.
    pub fn outcomes(&self) -> [(f64, bool, bool); 4] {
        [
            (self.p_11, true, true),
            (self.p_10, true, false),
            (self.p_01, false, true),
            (self.p_00, false, false),
        ]
    }

    pub fn total(&self) -> f64 {
        self.p_11 + self.p_10 + self.p_01 + self.p_00
    }
}

/// Exponents of the SIC receiver's delivery region. `INFINITY` stands for
/// an empty region.
#[derive(Debug, Clone, Copy)]
struct SicExponents {
    /// Margin of the first-decoded stream over the SIC threshold.
    first_margin: f64,
    /// Margin of the own stream over the threshold while interfered.
    own_margin: f64,
    phi1: f64,
    phi2: f64,
    phi3: f64,
}

impl SicExponents {
    fn new(snr_scale: f64, own: f64, first: f64, thr_first: f64, thr_own: f64) -> Self {
        let first_margin = first - own * thr_first;
        let own_margin = own - first * thr_own;
        let phi1 = exponent(thr_first, snr_scale * first_margin, first_margin > 0.0);
        let phi2 = exponent(thr_own, snr_scale * own_margin, own_margin > 0.0);
        let clean = exponent(thr_own, snr_scale * own, own > 0.0);
        Self {
            first_margin,
            own_margin,
            phi1,
            phi2,
            phi3: phi1.max(clean),
        }
    }
}

fn exponent(threshold: f64, denominator: f64, feasible: bool) -> f64 {
    if feasible {
        threshold / denominator
    } else {
        f64::INFINITY
    }
}

/// `P{capacity >= target}` for a stream decoded with `interference` power
/// treated as noise. `threshold` must be positive.
fn direct_success(snr_scale: f64, own: f64, interference: f64, threshold: f64) -> f64 {
    let margin = own - interference * threshold;
    if margin > 0.0 {
        libm::exp(-threshold / (snr_scale * margin))
    } else {
        0.0
    }
}

/// Delivery probability at a receiver that first decodes the stream with
/// power `first` (SIC threshold `thr_first`), then its own stream with power
/// `own` (threshold `thr_own > 0`).
fn sic_success(snr_scale: f64, own: f64, first: f64, thr_first: f64, thr_own: f64) -> f64 {
    if thr_first == 0.0 {
        // Zero-rate first stream: SIC always succeeds.
        return if own > 0.0 {
            libm::exp(-thr_own / (snr_scale * own))
        } else {
            0.0
        };
    }
    let e = SicExponents::new(snr_scale, own, first, thr_first, thr_own);
    match (e.first_margin > 0.0, e.own_margin > 0.0) {
        (true, true) if e.phi2 > e.phi1 => libm::exp(-e.phi3),
        (true, true) => libm::exp(-e.phi2) + libm::exp(-e.phi3) - libm::exp(-e.phi1),
        (true, false) => libm::exp(-e.phi3),
        (false, true) => libm::exp(-e.phi2),
        (false, false) => 0.0,
    }
}

/// User 1 delivery probability when user 1 is decoded first.
pub fn p_u1_success_order12(cfg: &ScenarioConfig, v1: f64, v2: f64, r1: u32) -> f64 {
    if r1 == 0 {
        return 1.0;
    }
    direct_success(cfg.snr_scale(0), v1, v2, cfg.threshold(0, r1))
}

/// User 2 delivery probability when user 1 is decoded first (user 2 runs SIC).
pub fn p_u2_success_order12(cfg: &ScenarioConfig, v1: f64, v2: f64, r1: u32, r2: u32) -> f64 {
    if r2 == 0 {
        return 1.0;
    }
    sic_success(cfg.snr_scale(1), v2, v1, cfg.threshold(0, r1), cfg.threshold(1, r2))
}

/// User 2 delivery probability when user 2 is decoded first.
pub fn p_u2_success_order21(cfg: &ScenarioConfig, v1: f64, v2: f64, r2: u32) -> f64 {
    if r2 == 0 {
        return 1.0;
    }
    direct_success(cfg.snr_scale(1), v2, v1, cfg.threshold(1, r2))
}

/// User 1 delivery probability when user 2 is decoded first (user 1 runs SIC).
pub fn p_u1_success_order21(cfg: &ScenarioConfig, v1: f64, v2: f64, r1: u32, r2: u32) -> f64 {
    if r1 == 0 {
        return 1.0;
    }
    sic_success(cfg.snr_scale(0), v1, v2, cfg.threshold(1, r2), cfg.threshold(0, r1))
}

/// Per-user delivery probabilities `(p1, p2)` of an action.
pub fn success_probabilities(cfg: &ScenarioConfig, action: &Action) -> (f64, f64) {
    let PowerSplit { v1, v2 } = *action.power(cfg);
    let (r1, r2) = (action.r1, action.r2);
    match action.order {
        DecodingOrder::OneThenTwo => (
            p_u1_success_order12(cfg, v1, v2, r1),
            p_u2_success_order12(cfg, v1, v2, r1, r2),
        ),
        DecodingOrder::TwoThenOne => (
            p_u1_success_order21(cfg, v1, v2, r1, r2),
            p_u2_success_order21(cfg, v1, v2, r2),
        ),
    }
}

/// Joint outcome law of an action. Deliveries factorize because `d1`
/// depends on `g1` only and `d2` on `g2` only.
pub fn outcome_distribution(cfg: &ScenarioConfig, action: &Action) -> OutcomeDistribution {
    let (p1, p2) = success_probabilities(cfg, action);
    OutcomeDistribution::from_marginals(p1, p2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::ScenarioParams;

    fn reference() -> ScenarioConfig {
        ScenarioParams::reference().validate().unwrap()
    }

    #[test]
    fn u1_order12_reference_value() {
        let cfg = reference();
        let p = p_u1_success_order12(&cfg, 0.9, 0.1, 1);
        assert!((p - 0.9997450776707992).abs() < 1e-12, "{p}");
    }

    #[test]
    fn u1_order12_infeasible_sinr() {
        assert_eq!(p_u1_success_order12(&reference(), 0.5, 0.5, 1), 0.0);
    }

    #[test]
    fn zero_rate_is_certain() {
        let cfg = reference();
        assert_eq!(p_u1_success_order12(&cfg, 0.0, 0.0, 0), 1.0);
        assert_eq!(p_u2_success_order12(&cfg, 0.0, 0.0, 3, 0), 1.0);
        assert_eq!(p_u2_success_order21(&cfg, 0.0, 0.0, 0), 1.0);
        assert_eq!(p_u1_success_order21(&cfg, 0.0, 0.0, 0, 4), 1.0);
    }

    #[test]
    fn u2_order12_branch_three() {
        let cfg = reference();
        let p = p_u2_success_order12(&cfg, 0.7, 0.3, 1, 1);
        assert!((p - 0.9987936214791452).abs() < 1e-12, "{p}");
        let e = SicExponents::new(cfg.snr_scale(1), 0.3, 0.7, cfg.threshold(0, 1), cfg.threshold(1, 1));
        assert!((e.phi1 - 1.2071e-3).abs() < 1e-7);
        assert!(e.own_margin < 0.0);
        assert_eq!(e.phi3, e.phi1);
    }

    #[test]
    fn u2_gets_nothing_without_power() {
        assert_eq!(p_u2_success_order12(&reference(), 1.0, 0.0, 1, 1), 0.0);
    }

    #[test]
    fn zero_rate_first_stream_leaves_interference_free_link() {
        let cfg = reference();
        let thr = cfg.threshold(1, 2);
        let expected = libm::exp(-thr / (cfg.snr_scale(1) * 0.3));
        assert_eq!(p_u2_success_order12(&cfg, 0.7, 0.3, 0, 2), expected);
        let thr = cfg.threshold(0, 2);
        let expected = libm::exp(-thr / (cfg.snr_scale(0) * 0.3));
        assert_eq!(p_u1_success_order21(&cfg, 0.3, 0.7, 2, 0), expected);
    }

    #[test]
    fn u1_order21_without_power() {
        assert_eq!(p_u1_success_order21(&reference(), 0.0, 1.0, 1, 1), 0.0);
    }

    #[test]
    fn order_swap_symmetry() {
        let cfg = reference();
        for &PowerSplit { v1, v2 } in &cfg.power_set {
            for r in 0..5 {
                assert_eq!(
                    p_u2_success_order21(&cfg, v1, v2, r),
                    p_u1_success_order12(&cfg, v2, v1, r)
                );
                for q in 0..5 {
                    assert_eq!(
                        p_u1_success_order21(&cfg, v1, v2, r, q),
                        p_u2_success_order12(&cfg, v2, v1, q, r)
                    );
                }
            }
        }
    }

    #[test]
    fn outcome_products() {
        let cfg = reference();
        let a = Action {
            order: DecodingOrder::OneThenTwo,
            power_idx: 0,
            r1: 0,
            r2: 0,
        };
        let d = outcome_distribution(&cfg, &a);
        assert_eq!((d.p_11, d.p_10, d.p_01, d.p_00), (1.0, 0.0, 0.0, 0.0));
        let d = OutcomeDistribution::from_marginals(0.9997451, 0.998794);
        assert!((d.p_11 - 0.998540).abs() < 1e-6);
    }

    #[test]
    fn action_space_ordering() {
        let cfg = reference();
        let full = action_space(&cfg, ActionFilter::Full);
        assert_eq!(full.len(), 400);
        assert_eq!(
            full[0],
            Action {
                order: DecodingOrder::OneThenTwo,
                power_idx: 0,
                r1: 0,
                r2: 0
            }
        );
        assert_eq!(full[1].r2, 1);
        assert_eq!(full[200].order, DecodingOrder::TwoThenOne);
        let only = action_space(&cfg, ActionFilter::OnlyTwoThenOne);
        assert_eq!(only.len(), 200);
        assert!(only.iter().all(|a| a.order == DecodingOrder::TwoThenOne));
    }

    #[test]
    fn phi3_dominates_phi1() {
        let cfg = reference();
        for a in action_space(&cfg, ActionFilter::Full) {
            let PowerSplit { v1, v2 } = *a.power(&cfg);
            let e = SicExponents::new(cfg.snr_scale(1), v2, v1, cfg.threshold(0, a.r1), cfg.threshold(1, a.r2));
            assert!(e.phi3 >= e.phi1);
            assert!(e.phi1 >= 0.0 && e.phi2 >= 0.0);
        }
    }
}
