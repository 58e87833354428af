//! Monte-Carlo episode simulator.
//!
//! Deliveries are decided by evaluating the Shannon capacities at sampled
//! fading gains, never through the closed-form thresholds in
//! [`crate::dynamics`], so the two can check each other.
//!
//! Randomness comes from ChaCha8 (`rand_chacha`) seeded with
//! `seed_from_u64`. Episode `m` of a batch uses seed `seed + m` (wrapping),
//! so results do not depend on how a batch is split across threads. In each
//! slot `g1` is drawn before `g2`, each as `−ln U` with `U` uniform on the
//! open unit interval built from the top 53 bits of one `u64`.

use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::dynamics::{Action, DecodingOrder};
use crate::mdp::{constraint_reward, transition, Policy, State, StateSpace};
use crate::scenario::{PowerSplit, ScenarioConfig};

/// Seedable fading source.
#[derive(Debug, Clone)]
pub struct FadingRng(ChaCha8Rng);

impl FadingRng {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Uniform on `(0, 1)`.
    pub fn open_unit(&mut self) -> f64 {
        ((self.0.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Unit-mean exponential by inverse CDF.
    pub fn exponential(&mut self) -> f64 {
        -libm::log(self.open_unit())
    }

    /// `(g1, g2)` for one slot.
    pub fn gains(&mut self) -> (f64, f64) {
        let g1 = self.exponential();
        (g1, self.exponential())
    }
}

/// Packets per slot supported at SINR `sinr` for `bits`-bit packets.
fn capacity(cfg: &ScenarioConfig, bits: u32, sinr: f64) -> f64 {
    cfg.tau_s * cfg.bandwidth_hz / f64::from(bits) * libm::log2(1.0 + sinr)
}

fn sinr(signal: f64, interference: f64, noise: f64) -> f64 {
    signal / (noise + interference)
}

/// Packets delivered `(d1, d2)` in one slot for realized gains `g1`, `g2`.
pub fn slot_outcome(cfg: &ScenarioConfig, action: &Action, g1: f64, g2: f64) -> (u32, u32) {
    let PowerSplit { v1, v2 } = *action.power(cfg);
    let (r1, r2) = (f64::from(action.r1), f64::from(action.r2));
    let [y1, y2] = cfg.packet_bits;
    let [n1, n2] = cfg.noise_w;
    // Received power of each stream at each user.
    let h1 = cfg.power_w * cfg.beta[0] * g1;
    let h2 = cfg.power_w * cfg.beta[1] * g2;

    let (ok1, ok2) = match action.order {
        DecodingOrder::OneThenTwo => {
            let ok1 = capacity(cfg, y1, sinr(h1 * v1, h1 * v2, n1)) >= r1;
            let sic = capacity(cfg, y1, sinr(h2 * v1, h2 * v2, n2)) >= r1;
            let own = if sic {
                sinr(h2 * v2, 0.0, n2)
            } else {
                sinr(h2 * v2, h2 * v1, n2)
            };
            (ok1, capacity(cfg, y2, own) >= r2)
        }
        DecodingOrder::TwoThenOne => {
            let ok2 = capacity(cfg, y2, sinr(h2 * v2, h2 * v1, n2)) >= r2;
            let sic = capacity(cfg, y2, sinr(h1 * v2, h1 * v1, n1)) >= r2;
            let own = if sic {
                sinr(h1 * v1, 0.0, n1)
            } else {
                sinr(h1 * v1, h1 * v2, n1)
            };
            (capacity(cfg, y1, own) >= r1, ok2)
        }
    };
    (if ok1 { action.r1 } else { 0 }, if ok2 { action.r2 } else { 0 })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotRecord {
    pub state: State,
    pub action: Action,
    pub g1: f64,
    pub g2: f64,
    pub d1: u32,
    pub d2: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub slots: Vec<SlotRecord>,
    pub terminal: State,
    /// Packets delivered to user 2.
    pub capacity: u32,
    /// Realized `Σ (d2 + λc)`.
    pub realized_return: f64,
    /// User 1 received all its packets.
    pub success: bool,
}

/// Runs one episode of `policy` with fading from `rng_seed`.
pub fn sample_episode(cfg: &ScenarioConfig, policy: &Policy, lambda: f64, rng_seed: u64) -> EpisodeRecord {
    let mut rng = FadingRng::new(rng_seed);
    sample_episode_with(cfg, policy, lambda, |_| rng.gains())
}

/// Runs one episode with gains supplied per slot by `gains(slot)`.
pub fn sample_episode_with<F>(cfg: &ScenarioConfig, policy: &Policy, lambda: f64, mut gains: F) -> EpisodeRecord
where
    F: FnMut(usize) -> (f64, f64),
{
    let space = policy.space();
    let mut state = space.initial();
    let mut slots = Vec::with_capacity(cfg.horizon as usize);
    let mut capacity = 0;
    let mut realized_return = 0.0;
    while !state.is_terminal() {
        let action = *policy.action(state);
        let (g1, g2) = gains(slots.len());
        let (d1, d2) = slot_outcome(cfg, &action, g1, g2);
        slots.push(SlotRecord {
            state,
            action,
            g1,
            g2,
            d1,
            d2,
        });
        state = transition(state, d1);
        capacity += d2;
        realized_return += f64::from(d2) + lambda * constraint_reward(state, cfg.delta);
    }
    EpisodeRecord {
        slots,
        terminal: state,
        capacity,
        realized_return,
        success: state.remaining_packets == 0,
    }
}

/// Sample means with standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimates {
    pub episodes: u64,
    pub capacity: f64,
    pub capacity_se: f64,
    pub outage: f64,
    /// Binomial standard error of the outage frequency.
    pub outage_se: f64,
    pub mean_return: f64,
    pub return_se: f64,
}

/// Running sums over episodes; merge-free so that folding in episode order
/// is reproducible.
#[derive(Debug, Clone, Copy, Default)]
pub struct MonteCarloAccumulator {
    n: u64,
    outages: u64,
    cap_sum: f64,
    cap_sq: f64,
    ret_sum: f64,
    ret_sq: f64,
}

impl MonteCarloAccumulator {
    pub fn push(&mut self, episode: &EpisodeRecord) {
        self.push_summary(episode.capacity, episode.success, episode.realized_return);
    }

    pub fn push_summary(&mut self, capacity: u32, success: bool, realized_return: f64) {
        let c = f64::from(capacity);
        self.n += 1;
        self.outages += u64::from(!success);
        self.cap_sum += c;
        self.cap_sq += c * c;
        self.ret_sum += realized_return;
        self.ret_sq += realized_return * realized_return;
    }

    pub fn finish(&self) -> MonteCarloEstimates {
        let n = self.n as f64;
        let (capacity, capacity_se) = mean_and_se(self.cap_sum, self.cap_sq, n);
        let (mean_return, return_se) = mean_and_se(self.ret_sum, self.ret_sq, n);
        let outage = self.outages as f64 / n;
        MonteCarloEstimates {
            episodes: self.n,
            capacity,
            capacity_se,
            outage,
            outage_se: libm::sqrt(outage * (1.0 - outage) / n),
            mean_return,
            return_se,
        }
    }
}

fn mean_and_se(sum: f64, sum_sq: f64, n: f64) -> (f64, f64) {
    let mean = sum / n;
    if n < 2.0 {
        return (mean, 0.0);
    }
    let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    (mean, libm::sqrt(var / n))
}

/// Estimates capacity, outage, and mean return of `policy` from `episodes`
/// independent episodes.
pub fn monte_carlo(
    cfg: &ScenarioConfig,
    policy: &Policy,
    lambda: f64,
    episodes: u64,
    rng_seed: u64,
) -> MonteCarloEstimates {
    assert!(episodes >= 1, "need at least one episode");
    let mut acc = MonteCarloAccumulator::default();
    for m in 0..episodes {
        acc.push(&sample_episode(cfg, policy, lambda, rng_seed.wrapping_add(m)));
    }
    acc.finish()
}

/// Counts single-slot deliveries `(user 1, user 2)` of `action` over `draws`
/// independent fading draws. A zero target rate counts as delivered.
pub fn success_counts(cfg: &ScenarioConfig, action: &Action, draws: u64, rng_seed: u64) -> (u64, u64) {
    let mut rng = FadingRng::new(rng_seed);
    let mut counts = (0, 0);
    for _ in 0..draws {
        let (g1, g2) = rng.gains();
        let (d1, d2) = slot_outcome(cfg, action, g1, g2);
        counts.0 += u64::from(d1 == action.r1);
        counts.1 += u64::from(d2 == action.r2);
    }
    counts
}

/// Checks that `policy` was built for the scenario's state space.
pub fn policy_matches(cfg: &ScenarioConfig, policy: &Policy) -> bool {
    policy.space() == StateSpace::for_config(cfg) && policy.actions().iter().all(|a| a.is_valid(cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{action_space, success_probabilities, ActionFilter};
    use crate::scenario::ScenarioParams;

    fn reference() -> ScenarioConfig {
        ScenarioParams::reference().validate().unwrap()
    }

    #[test]
    fn open_unit_stays_open() {
        let mut rng = FadingRng::new(7);
        for _ in 0..10_000 {
            let u = rng.open_unit();
            assert!(u > 0.0 && u < 1.0);
        }
    }

    #[test]
    fn huge_gains_deliver_every_feasible_target() {
        let cfg = reference();
        for a in action_space(&cfg, ActionFilter::Full) {
            let (d1, d2) = slot_outcome(&cfg, &a, 1e12, 1e12);
            let (p1, p2) = success_probabilities(&cfg, &a);
            assert_eq!(d1 == a.r1, p1 > 0.0, "{a:?}");
            assert_eq!(d2 == a.r2, p2 > 0.0, "{a:?}");
        }
    }

    #[test]
    fn zero_gains_deliver_nothing() {
        let cfg = reference();
        for a in action_space(&cfg, ActionFilter::Full) {
            assert_eq!(slot_outcome(&cfg, &a, 0.0, 0.0), (0, 0));
        }
    }

    #[test]
    fn seeded_episodes_repeat() {
        let cfg = reference();
        let a = Action {
            order: DecodingOrder::OneThenTwo,
            power_idx: 6,
            r1: 4,
            r2: 1,
        };
        let policy = Policy::constant(StateSpace::for_config(&cfg), a);
        let first = sample_episode(&cfg, &policy, 2.0, 42);
        assert_eq!(first, sample_episode(&cfg, &policy, 2.0, 42));
        assert_eq!(first.slots.len(), 4);
        assert_ne!(first.slots, sample_episode(&cfg, &policy, 2.0, 43).slots);
    }

    #[test]
    fn single_episode_estimates() {
        let cfg = reference();
        let a = Action {
            order: DecodingOrder::TwoThenOne,
            power_idx: 5,
            r1: 4,
            r2: 2,
        };
        let policy = Policy::constant(StateSpace::for_config(&cfg), a);
        let ep = sample_episode(&cfg, &policy, 1.5, 9);
        let est = monte_carlo(&cfg, &policy, 1.5, 1, 9);
        assert_eq!(est.capacity, f64::from(ep.capacity));
        assert_eq!(est.outage, if ep.success { 0.0 } else { 1.0 });
        assert_eq!(est.mean_return, ep.realized_return);
        assert_eq!((est.capacity_se, est.return_se, est.outage_se), (0.0, 0.0, 0.0));
    }
}
