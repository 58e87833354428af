//! Finite-horizon MDP over `(remaining slots, remaining packets)`.
//!
//! Rewards are `d2 + λ·c`, where `c` is nonzero only on entering a terminal
//! state: `δ` if user 1 got all its packets, `δ − 1` otherwise. The expected
//! return from the initial state is therefore the Lagrangian
//! `E[Σ d2] + λ(δ − P{outage})`.
//!
//! Every transition decreases the remaining-slot count, so the MDP is
//! acyclic and a single backward sweep is exact.

use alloc::vec;
use alloc::vec::Vec;

use crate::dynamics::{action_space, outcome_distribution, Action, ActionFilter, OutcomeDistribution};
use crate::scenario::ScenarioConfig;

/// Default stopping tolerance of [`value_iteration`].
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// `(remaining slots, remaining packets of user 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct State {
    pub remaining_slots: u32,
    pub remaining_packets: u32,
}

impl State {
    pub const fn new(remaining_slots: u32, remaining_packets: u32) -> Self {
        Self {
            remaining_slots,
            remaining_packets,
        }
    }

    pub fn is_terminal(&self) -> bool {
        self.remaining_slots == 0
    }
}

/// The reachable states of a horizon-`T`, `N`-packet problem.
///
/// States are ordered by increasing remaining slots, then increasing
/// remaining packets. Only `(T, N)` is kept at the full horizon, giving
/// `T(N+1) + 1` states of which the first `N+1` are terminal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateSpace {
    horizon: u32,
    packets: u32,
}

impl StateSpace {
    pub fn new(horizon: u32, packets: u32) -> Self {
        assert!(horizon >= 1, "horizon must be positive");
        Self { horizon, packets }
    }

    pub fn for_config(cfg: &ScenarioConfig) -> Self {
        Self::new(cfg.horizon, cfg.packets)
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    pub fn packets(&self) -> u32 {
        self.packets
    }

    fn width(&self) -> usize {
        self.packets as usize + 1
    }

    pub fn len(&self) -> usize {
        self.horizon as usize * self.width() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn terminal_count(&self) -> usize {
        self.width()
    }

    pub fn nonterminal_count(&self) -> usize {
        self.len() - self.terminal_count()
    }

    pub fn initial(&self) -> State {
        State::new(self.horizon, self.packets)
    }

    pub fn contains(&self, s: State) -> bool {
        s.remaining_packets <= self.packets && (s.remaining_slots < self.horizon || s == self.initial())
    }

    /// Position of `s` in the state ordering.
    pub fn index(&self, s: State) -> usize {
        debug_assert!(self.contains(s), "{s:?} not in state space");
        if s.remaining_slots == self.horizon {
            return self.len() - 1;
        }
        s.remaining_slots as usize * self.width() + s.remaining_packets as usize
    }

    /// Position of a nonterminal `s` among nonterminal states.
    pub fn nonterminal_index(&self, s: State) -> usize {
        debug_assert!(!s.is_terminal());
        self.index(s) - self.terminal_count()
    }

    pub fn state(&self, index: usize) -> State {
        if index == self.len() - 1 {
            return self.initial();
        }
        let w = self.width();
        State::new((index / w) as u32, (index % w) as u32)
    }

    pub fn states(&self) -> impl Iterator<Item = State> + '_ {
        (0..self.len()).map(move |i| self.state(i))
    }

    pub fn nonterminal_states(&self) -> impl Iterator<Item = State> + '_ {
        (self.terminal_count()..self.len()).map(move |i| self.state(i))
    }
}

/// Ordered state list `𝒮` of a horizon-`T`, `N`-packet problem.
pub fn build_state_space(horizon: u32, packets: u32) -> Vec<State> {
    StateSpace::new(horizon, packets).states().collect()
}

/// Successor of nonterminal `s` when user 1 receives `delivered` packets.
/// Overshoot clamps at zero remaining packets.
pub fn transition(s: State, delivered: u32) -> State {
    assert!(!s.is_terminal(), "transition from terminal state {s:?}");
    State::new(s.remaining_slots - 1, s.remaining_packets.saturating_sub(delivered))
}

/// Constraint part of the reward on entering `next`.
pub fn constraint_reward(next: State, delta: f64) -> f64 {
    if !next.is_terminal() {
        0.0
    } else if next.remaining_packets > 0 {
        delta - 1.0
    } else {
        delta
    }
}

/// Reward split `(capacity part, constraint part)`; the full reward is
/// `capacity + λ·constraint`.
pub fn reward_components(next: State, delivered_2: u32, cfg: &ScenarioConfig) -> (f64, f64) {
    (f64::from(delivered_2), constraint_reward(next, cfg.delta))
}

/// Tabular state values indexed like [`StateSpace`]. Terminal values are 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    space: StateSpace,
    values: Vec<f64>,
}

impl ValueTable {
    pub fn zeros(space: StateSpace) -> Self {
        Self {
            space,
            values: vec![0.0; space.len()],
        }
    }

    pub fn space(&self) -> StateSpace {
        self.space
    }

    pub fn get(&self, s: State) -> f64 {
        self.values[self.space.index(s)]
    }

    pub fn initial(&self) -> f64 {
        self.get(self.space.initial())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Largest componentwise absolute difference.
    pub fn max_abs_diff(&self, other: &ValueTable) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Deterministic policy: one action per nonterminal state.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    space: StateSpace,
    actions: Vec<Action>,
}

impl Policy {
    /// Builds a policy from actions listed in nonterminal-state order.
    pub fn from_actions(space: StateSpace, actions: Vec<Action>) -> Self {
        assert_eq!(
            actions.len(),
            space.nonterminal_count(),
            "policy must cover every nonterminal state"
        );
        Self { space, actions }
    }

    /// The same action in every state.
    pub fn constant(space: StateSpace, action: Action) -> Self {
        Self {
            space,
            actions: vec![action; space.nonterminal_count()],
        }
    }

    pub fn space(&self) -> StateSpace {
        self.space
    }

    pub fn action(&self, s: State) -> &Action {
        &self.actions[self.space.nonterminal_index(s)]
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    /// `(state, action)` pairs in state order.
    pub fn iter(&self) -> impl Iterator<Item = (State, &Action)> + '_ {
        self.space.nonterminal_states().zip(&self.actions)
    }
}

/// Exact objective and constraint values of a policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvaluationResult {
    /// Expected packets delivered to user 2 over the horizon.
    pub expected_capacity: f64,
    /// Probability user 1 receives fewer than `N` packets.
    pub outage_prob: f64,
}

impl EvaluationResult {
    pub fn lagrangian_at(&self, lambda: f64, delta: f64) -> f64 {
        self.expected_capacity + lambda * (delta - self.outage_prob)
    }
}

/// Precomputed dynamics for one scenario and action filter. Outcome laws do
/// not depend on the state or on λ, so one model serves every solve.
#[derive(Debug, Clone)]
pub struct Model {
    space: StateSpace,
    delta: f64,
    filter: ActionFilter,
    actions: Vec<Action>,
    outcomes: Vec<OutcomeDistribution>,
}

impl Model {
    pub fn new(cfg: &ScenarioConfig, filter: ActionFilter) -> Self {
        let actions = action_space(cfg, filter);
        let outcomes = actions.iter().map(|a| outcome_distribution(cfg, a)).collect();
        Self {
            space: StateSpace::for_config(cfg),
            delta: cfg.delta,
            filter,
            actions,
            outcomes,
        }
    }

    pub fn space(&self) -> StateSpace {
        self.space
    }

    pub fn filter(&self) -> ActionFilter {
        self.filter
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    /// One-step lookahead `Σ p·[d2 + λc + v(s')]` of action number `a` in `s`.
    fn q_value(&self, s: State, a: usize, lambda: f64, values: &[f64]) -> f64 {
        backup(
            &self.space,
            self.delta,
            s,
            &self.actions[a],
            &self.outcomes[a],
            lambda,
            values,
        )
    }

    /// Best action index and its value; ties go to the lowest index.
    fn greedy(&self, s: State, lambda: f64, values: &[f64]) -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for a in 0..self.actions.len() {
            let q = self.q_value(s, a, lambda, values);
            if q > best.1 {
                best = (a, q);
            }
        }
        best
    }
}

fn backup(
    space: &StateSpace,
    delta: f64,
    s: State,
    action: &Action,
    dist: &OutcomeDistribution,
    lambda: f64,
    values: &[f64],
) -> f64 {
    let mut total = 0.0;
    for (p, ok1, ok2) in dist.outcomes() {
        if p == 0.0 {
            continue;
        }
        let next = transition(s, if ok1 { action.r1 } else { 0 });
        let d2 = if ok2 { f64::from(action.r2) } else { 0.0 };
        let c = constraint_reward(next, delta);
        total += p * (d2 + lambda * c + values[space.index(next)]);
    }
    total
}

/// Order in which [`value_iteration`] visits nonterminal states per sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SweepOrder {
    /// Fewest remaining slots first; values settle in one sweep.
    #[default]
    IncreasingSlots,
    /// Initial state first; values settle after `T` sweeps.
    DecreasingSlots,
}

/// In-place value iteration, stopping once a sweep changes no value by
/// `tolerance` or more. Returns the values and the number of sweeps run,
/// including the final sweep that detects convergence.
pub fn value_iteration(model: &Model, lambda: f64, tolerance: f64) -> (ValueTable, usize) {
    value_iteration_ordered(model, lambda, tolerance, SweepOrder::default())
}

pub fn value_iteration_ordered(model: &Model, lambda: f64, tolerance: f64, order: SweepOrder) -> (ValueTable, usize) {
    assert!(tolerance > 0.0, "tolerance must be positive");
    let space = model.space;
    let mut table = ValueTable::zeros(space);
    let mut order_list: Vec<State> = space.nonterminal_states().collect();
    if order == SweepOrder::DecreasingSlots {
        order_list.reverse();
    }
    let mut sweeps = 0;
    loop {
        sweeps += 1;
        let mut change: f64 = 0.0;
        for &s in &order_list {
            let old = table.values[space.index(s)];
            let (_, new) = model.greedy(s, lambda, &table.values);
            table.values[space.index(s)] = new;
            change = change.max((new - old).abs());
        }
        if change < tolerance {
            return (table, sweeps);
        }
    }
}

/// Exact optimal values by one sweep in increasing remaining slots.
pub fn backward_induction(model: &Model, lambda: f64) -> ValueTable {
    let space = model.space;
    let mut table = ValueTable::zeros(space);
    for s in space.nonterminal_states() {
        let (_, v) = model.greedy(s, lambda, &table.values);
        table.values[space.index(s)] = v;
    }
    table
}

/// Greedy policy with respect to `values`.
pub fn extract_policy(model: &Model, lambda: f64, values: &ValueTable) -> Policy {
    let actions = model
        .space
        .nonterminal_states()
        .map(|s| model.actions[model.greedy(s, lambda, &values.values).0])
        .collect();
    Policy {
        space: model.space,
        actions,
    }
}

/// Optimal values and policy for a fixed λ.
#[derive(Debug, Clone)]
pub struct Solution {
    pub values: ValueTable,
    pub policy: Policy,
}

/// Maximizes the Lagrangian for `lambda` with backward induction.
pub fn solve(model: &Model, lambda: f64) -> Solution {
    let values = backward_induction(model, lambda);
    let policy = extract_policy(model, lambda, &values);
    Solution { values, policy }
}

/// Minimizes outage probability alone, ignoring capacity.
pub fn min_outage_policy(model: &Model) -> Policy {
    // λ = 1 with capacity stripped: backup of the constraint term only.
    let stripped = Model {
        actions: model.actions.iter().map(|a| Action { r2: 0, ..*a }).collect(),
        ..model.clone()
    };
    let values = backward_induction(&stripped, 1.0);
    let space = model.space;
    let actions = space
        .nonterminal_states()
        .map(|s| model.actions[stripped.greedy(s, 1.0, &values.values).0])
        .collect();
    Policy { space, actions }
}

/// Values `v_π` of a fixed policy for reward `d2 + λc`, by backward recursion.
pub fn policy_values(cfg: &ScenarioConfig, policy: &Policy, lambda: f64) -> ValueTable {
    let space = policy.space;
    let mut table = ValueTable::zeros(space);
    for (s, action) in policy.iter() {
        let dist = outcome_distribution(cfg, action);
        let v = backup(&space, cfg.delta, s, action, &dist, lambda, &table.values);
        table.values[space.index(s)] = v;
    }
    table
}

/// Exact capacity and outage of `policy` by forward propagation of the
/// state distribution from the initial state.
pub fn evaluate_policy_exact(cfg: &ScenarioConfig, policy: &Policy) -> EvaluationResult {
    let space = policy.space;
    let mut mass = vec![0.0; space.len()];
    mass[space.index(space.initial())] = 1.0;
    let mut expected_capacity = 0.0;
    // Nonterminal states in decreasing remaining slots: all inflow to a
    // state arrives before it is expanded.
    for (s, action) in policy.iter().collect::<Vec<_>>().into_iter().rev() {
        let here = mass[space.index(s)];
        if here == 0.0 {
            continue;
        }
        let dist = outcome_distribution(cfg, action);
        for (p, ok1, ok2) in dist.outcomes() {
            if p == 0.0 {
                continue;
            }
            let next = transition(s, if ok1 { action.r1 } else { 0 });
            mass[space.index(next)] += here * p;
            if ok2 {
                expected_capacity += here * p * f64::from(action.r2);
            }
        }
    }
    let outage_prob: f64 = space
        .states()
        .take(space.terminal_count())
        .filter(|s| s.remaining_packets > 0)
        .map(|s| mass[space.index(s)])
        .sum();
    EvaluationResult {
        expected_capacity,
        outage_prob: outage_prob.clamp(0.0, 1.0),
    }
}
