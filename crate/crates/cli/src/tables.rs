//! CSV schemas. Every file starts with a header row; columns are fixed and
//! floats are written in shortest round-trip form, so output is byte-stable.
//!
//! | file | columns |
//! |------|---------|
//! | policy | `E,Z,order,V1,V2,r1,r2,value` |
//! | summary | `filter,feasible,lambda_star,expected_capacity,outage_prob,dual_value,probes` |
//! | trace | `phase,lambda,outage,capacity,dual_value` |
//! | lambda sweep | `filter,lambda,return,outage,capacity` |
//! | delta sweep | `filter,delta,mean_capacity,feasible,infeasible` |
//! | probabilities | `order,V1,V2,r1,r2,p1,p2,p_11,p_10,p_01,p_00` |
//! | episode log | `episode,slot,E,Z,order,V1,V2,r1,r2,g1,g2,d1,d2` |

use std::io::{Read, Write};

use noma_core::dual::{DualSearchResult, Phase};
use noma_core::dynamics::{action_space, success_probabilities, ActionFilter};
use noma_core::sim::EpisodeRecord;
use noma_core::{outcome_distribution, Action, DecodingOrder, Policy, ScenarioConfig, State, StateSpace, ValueTable};

use crate::error::CliError;
use crate::experiments::{DeltaRow, SweepRow};

pub fn write_policy<W: Write>(
    out: W,
    cfg: &ScenarioConfig,
    policy: &Policy,
    values: &ValueTable,
) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["E", "Z", "order", "V1", "V2", "r1", "r2", "value"])?;
    for (s, a) in policy.iter() {
        let split = a.power(cfg);
        w.write_record([
            s.remaining_slots.to_string(),
            s.remaining_packets.to_string(),
            a.order.as_str().to_string(),
            split.v1.to_string(),
            split.v2.to_string(),
            a.r1.to_string(),
            a.r2.to_string(),
            values.get(s).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn field<'a>(record: &'a csv::StringRecord, i: usize, line: usize) -> Result<&'a str, CliError> {
    record
        .get(i)
        .ok_or_else(|| CliError::Policy(format!("line {line}: missing column {i}")))
}

fn number<T: std::str::FromStr>(record: &csv::StringRecord, i: usize, line: usize) -> Result<T, CliError> {
    let text = field(record, i, line)?;
    text.parse()
        .map_err(|_| CliError::Policy(format!("line {line}: cannot parse `{text}`")))
}

/// Reads a policy file and checks it covers exactly the nonterminal states
/// of `cfg` with actions from its power and rate sets.
pub fn read_policy<R: Read>(input: R, cfg: &ScenarioConfig) -> Result<Policy, CliError> {
    let space = StateSpace::for_config(cfg);
    let mut slots: Vec<Option<Action>> = vec![None; space.nonterminal_count()];
    let mut reader = csv::Reader::from_reader(input);
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let line = i + 2;
        let state = State::new(number(&record, 0, line)?, number(&record, 1, line)?);
        if state.is_terminal() || !space.contains(state) {
            return Err(CliError::Policy(format!(
                "line {line}: state {state:?} is not a nonterminal state"
            )));
        }
        let order_text = field(&record, 2, line)?;
        let order = DecodingOrder::parse(order_text)
            .ok_or_else(|| CliError::Policy(format!("line {line}: unknown decoding order `{order_text}`")))?;
        let (v1, v2): (f64, f64) = (number(&record, 3, line)?, number(&record, 4, line)?);
        let power_idx = cfg
            .power_set
            .iter()
            .position(|p| p.v1 == v1 && p.v2 == v2)
            .ok_or_else(|| CliError::Policy(format!("line {line}: power split ({v1}, {v2}) not in power_set")))?;
        let action = Action {
            order,
            power_idx,
            r1: number(&record, 5, line)?,
            r2: number(&record, 6, line)?,
        };
        if !action.is_valid(cfg) {
            return Err(CliError::Policy(format!(
                "line {line}: rates ({}, {}) not in rate sets",
                action.r1, action.r2
            )));
        }
        let slot = &mut slots[space.nonterminal_index(state)];
        if slot.is_some() {
            return Err(CliError::Policy(format!("line {line}: duplicate state {state:?}")));
        }
        *slot = Some(action);
    }
    let mut actions = Vec::with_capacity(slots.len());
    for (s, slot) in space.nonterminal_states().zip(slots) {
        match slot {
            Some(a) => actions.push(a),
            None => {
                return Err(CliError::Policy(format!(
                    "missing state (E={}, Z={})",
                    s.remaining_slots, s.remaining_packets
                )))
            }
        }
    }
    Ok(Policy::from_actions(space, actions))
}

pub fn write_summary<W: Write>(out: W, filter: ActionFilter, result: &DualSearchResult) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "filter",
        "feasible",
        "lambda_star",
        "expected_capacity",
        "outage_prob",
        "dual_value",
        "probes",
    ])?;
    let dual_value = result
        .trace
        .iter()
        .rev()
        .find(|(_, p)| p.lambda == result.lambda_star)
        .map(|(_, p)| p.dual_value.to_string())
        .unwrap_or_default();
    w.write_record([
        filter.as_str().to_string(),
        result.feasible.to_string(),
        result.lambda_star.to_string(),
        result.eval.expected_capacity.to_string(),
        result.eval.outage_prob.to_string(),
        dual_value,
        result.trace.len().to_string(),
    ])?;
    w.flush()?;
    Ok(())
}

fn phase_name(phase: Phase) -> &'static str {
    match phase {
        Phase::Slack => "slack",
        Phase::Doubling => "doubling",
        Phase::Bisection => "bisection",
    }
}

pub fn write_trace<W: Write>(out: W, result: &DualSearchResult) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["phase", "lambda", "outage", "capacity", "dual_value"])?;
    for (phase, p) in &result.trace {
        w.write_record([
            phase_name(*phase).to_string(),
            p.lambda.to_string(),
            p.outage_prob.to_string(),
            p.expected_capacity.to_string(),
            p.dual_value.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep<W: Write>(out: W, rows: &[SweepRow]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["filter", "lambda", "return", "outage", "capacity"])?;
    for r in rows {
        w.write_record([
            r.filter.as_str().to_string(),
            r.lambda.to_string(),
            r.dual_value.to_string(),
            r.outage_prob.to_string(),
            r.expected_capacity.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_delta_sweep<W: Write>(out: W, rows: &[DeltaRow]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["filter", "delta", "mean_capacity", "feasible", "infeasible"])?;
    for r in rows {
        w.write_record([
            r.filter.as_str().to_string(),
            r.delta.to_string(),
            r.mean_capacity.map(|c| c.to_string()).unwrap_or_else(|| "NaN".into()),
            r.feasible.to_string(),
            r.infeasible.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Per-action delivery probabilities and joint outcome law.
pub fn write_probabilities<W: Write>(out: W, cfg: &ScenarioConfig) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "order", "V1", "V2", "r1", "r2", "p1", "p2", "p_11", "p_10", "p_01", "p_00",
    ])?;
    for a in action_space(cfg, ActionFilter::Full) {
        let split = a.power(cfg);
        let (p1, p2) = success_probabilities(cfg, &a);
        let d = outcome_distribution(cfg, &a);
        w.write_record([
            a.order.as_str().to_string(),
            split.v1.to_string(),
            split.v2.to_string(),
            a.r1.to_string(),
            a.r2.to_string(),
            p1.to_string(),
            p2.to_string(),
            d.p_11.to_string(),
            d.p_10.to_string(),
            d.p_01.to_string(),
            d.p_00.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_episode_log<W: Write>(out: W, cfg: &ScenarioConfig, episodes: &[EpisodeRecord]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "episode", "slot", "E", "Z", "order", "V1", "V2", "r1", "r2", "g1", "g2", "d1", "d2",
    ])?;
    for (m, ep) in episodes.iter().enumerate() {
        for (t, slot) in ep.slots.iter().enumerate() {
            let split = slot.action.power(cfg);
            w.write_record([
                m.to_string(),
                (t + 1).to_string(),
                slot.state.remaining_slots.to_string(),
                slot.state.remaining_packets.to_string(),
                slot.action.order.as_str().to_string(),
                split.v1.to_string(),
                split.v2.to_string(),
                slot.action.r1.to_string(),
                slot.action.r2.to_string(),
                slot.g1.to_string(),
                slot.g2.to_string(),
                slot.d1.to_string(),
                slot.d2.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
