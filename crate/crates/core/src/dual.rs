//! Bisection on the Lagrange multiplier.
//!
//! Outage and capacity of the Lagrangian maximizer are both nonincreasing in
//! λ, so the dual optimum is the smallest λ whose maximizer meets the outage
//! threshold. The search keeps `λ_min` infeasible and `λ_max` feasible and
//! returns the policy at `λ_max`.

use alloc::vec::Vec;

use crate::dynamics::ActionFilter;
use crate::mdp::{evaluate_policy_exact, min_outage_policy, solve, EvaluationResult, Model, Policy};
use crate::scenario::ScenarioConfig;

/// Cap on upper-bound doublings before declaring the problem infeasible.
pub const MAX_DOUBLINGS: usize = 20;

/// `E[Σ d2] + λ(δ − P{outage})`.
pub fn lagrangian(eval: &EvaluationResult, lambda: f64, delta: f64) -> f64 {
    eval.lagrangian_at(lambda, delta)
}

/// One solve of the Lagrangian at a given λ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probe {
    pub lambda: f64,
    pub outage_prob: f64,
    pub expected_capacity: f64,
    /// Optimal value at the initial state, `f(λ)`.
    pub dual_value: f64,
}

/// Search phase a probe belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Slack,
    Doubling,
    Bisection,
}

#[derive(Debug, Clone)]
pub struct DualSearchResult {
    pub lambda_star: f64,
    pub policy: Policy,
    pub eval: EvaluationResult,
    /// Probes in the order they were run.
    pub trace: Vec<(Phase, Probe)>,
    pub feasible: bool,
}

impl DualSearchResult {
    pub fn probes(&self, phase: Phase) -> usize {
        self.trace.iter().filter(|(p, _)| *p == phase).count()
    }
}

struct Prober<'a> {
    cfg: &'a ScenarioConfig,
    model: Model,
    trace: Vec<(Phase, Probe)>,
}

impl Prober<'_> {
    fn probe(&mut self, phase: Phase, lambda: f64) -> (Policy, EvaluationResult) {
        let sol = solve(&self.model, lambda);
        let eval = evaluate_policy_exact(self.cfg, &sol.policy);
        self.trace.push((
            phase,
            Probe {
                lambda,
                outage_prob: eval.outage_prob,
                expected_capacity: eval.expected_capacity,
                dual_value: sol.values.initial(),
            },
        ));
        (sol.policy, eval)
    }
}

/// Finds the smallest multiplier (within `epsilon`) whose optimal policy
/// satisfies the outage constraint.
///
/// Probes `λ = 0` first and returns immediately if that policy is feasible.
/// Otherwise doubles `λ_max` from `T·max(ℛ₂)` until feasible, then bisects.
/// If no probe is feasible after [`MAX_DOUBLINGS`] doublings, the result has
/// `feasible = false` and carries the minimum-outage policy.
pub fn bisection_search(cfg: &ScenarioConfig, epsilon: f64, filter: ActionFilter) -> DualSearchResult {
    assert!(epsilon > 0.0, "epsilon must be positive");
    let delta = cfg.delta;
    let mut prober = Prober {
        cfg,
        model: Model::new(cfg, filter),
        trace: Vec::new(),
    };

    let (policy, eval) = prober.probe(Phase::Slack, 0.0);
    if eval.outage_prob <= delta {
        return DualSearchResult {
            lambda_star: 0.0,
            policy,
            eval,
            trace: prober.trace,
            feasible: true,
        };
    }

    let mut lambda_min = 0.0;
    let mut lambda_max = f64::from(cfg.horizon * cfg.max_rate_2().max(1));
    let mut doublings = 0;
    let (mut best_policy, mut best_eval) = loop {
        let (policy, eval) = prober.probe(Phase::Doubling, lambda_max);
        if eval.outage_prob <= delta {
            break (policy, eval);
        }
        if doublings == MAX_DOUBLINGS {
            let policy = min_outage_policy(&prober.model);
            let eval = evaluate_policy_exact(cfg, &policy);
            return DualSearchResult {
                lambda_star: lambda_max,
                policy,
                eval,
                trace: prober.trace,
                feasible: false,
            };
        }
        lambda_min = lambda_max;
        lambda_max *= 2.0;
        doublings += 1;
    };

    while lambda_max - lambda_min >= epsilon {
        let mid = 0.5 * (lambda_min + lambda_max);
        let (policy, eval) = prober.probe(Phase::Bisection, mid);
        if eval.outage_prob > delta {
            lambda_min = mid;
        } else {
            lambda_max = mid;
            best_policy = policy;
            best_eval = eval;
        }
    }

    DualSearchResult {
        lambda_star: lambda_max,
        policy: best_policy,
        eval: best_eval,
        trace: prober.trace,
        feasible: true,
    }
}
