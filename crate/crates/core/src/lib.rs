//! Optimal dynamic power, rate, and decoding-order allocation for a
//! two-user NOMA downlink.
//!
//! User 1 must receive `N` packets within `T` slots with outage probability
//! at most `δ`; user 2 wants as many packets as possible. The transmitter
//! knows only large-scale fading. The constrained problem is relaxed with a
//! Lagrange multiplier, each relaxation is an acyclic finite MDP solved
//! exactly by dynamic programming, and the multiplier is found by bisection.
//!
//! * [`scenario`]: parameters, units, validation.
//! * [`dynamics`]: closed-form per-slot delivery probabilities.
//! * [`mdp`]: state space, solvers, exact policy evaluation.
//! * [`dual`]: multiplier search.
//! * [`sim`]: Monte-Carlo episodes driven by sampled fading.

#![no_std]

extern crate alloc;

pub mod dual;
pub mod dynamics;
pub mod mdp;
pub mod scenario;
pub mod sim;

pub use dual::{bisection_search, lagrangian, DualSearchResult, Phase, Probe};
pub use dynamics::{outcome_distribution, Action, ActionFilter, DecodingOrder, OutcomeDistribution};
pub use mdp::{
    backward_induction, evaluate_policy_exact, extract_policy, solve, value_iteration, EvaluationResult, Model, Policy,
    Solution, State, StateSpace, ValueTable,
};
pub use scenario::{ConfigError, PowerSplit, ScenarioConfig, ScenarioParams};
