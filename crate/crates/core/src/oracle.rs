//! Exhaustive search over quantized, slotted policies.
//!
//! Small instances only: every node picks one power level per slot from a
//! finite grid, energy and data must be available at the start of the slot
//! in which they are spent, and each relay may never have sent more than it
//! has received. Because every oracle policy is also a policy of the
//! continuous problem, the oracle bounds the solvers from below.

use rayon::prelude::*;

use crate::curves::{PiecewiseCurve, Term};
use crate::error::{Error, Result};
use crate::multihop::{Node, Scenario};
use crate::rate::RateFunction;

pub const MAX_SLOTS: usize = 6;
pub const MAX_LEVELS: usize = 12;

const SLACK: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct SlottedInstance {
    /// Slot length in seconds.
    pub slot_len: f64,
    /// `energy[node][i]`: cumulative energy available at the start of slot `i`.
    pub energy: Vec<Vec<f64>>,
    /// Cumulative source data available at the start of each slot.
    pub data: Vec<f64>,
    /// Allowed power levels.
    pub levels: Vec<f64>,
}

impl SlottedInstance {
    pub fn new(slot_len: f64, energy: Vec<Vec<f64>>, data: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        let inst = Self {
            slot_len,
            energy,
            data,
            levels,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn slots(&self) -> usize {
        self.data.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.slots();
        if n == 0 || n > MAX_SLOTS {
            return Err(Error::InstanceTooLarge(format!("{n} slots (allowed 1..={MAX_SLOTS})")));
        }
        if self.levels.is_empty() || self.levels.len() > MAX_LEVELS {
            return Err(Error::InstanceTooLarge(format!(
                "{} power levels (allowed 1..={MAX_LEVELS})",
                self.levels.len()
            )));
        }
        if !(self.slot_len > 0.0) {
            return Err(Error::InvalidScenario("slot length must be positive".into()));
        }
        if self.levels.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidScenario("power levels must be finite and nonnegative".into()));
        }
        let cumulative = |xs: &[f64]| xs.first().is_some_and(|x| *x >= 0.0) && xs.windows(2).all(|w| w[1] >= w[0]);
        if !cumulative(&self.data) {
            return Err(Error::InvalidScenario("slot data must be nonnegative and nondecreasing".into()));
        }
        for e in &self.energy {
            if e.len() != n || !cumulative(e) {
                return Err(Error::InvalidScenario(
                    "slot energy must have one nonnegative, nondecreasing entry per slot".into(),
                ));
            }
        }
        Ok(())
    }

    /// The same instance as step curves, so the grid solvers can run on it.
    pub fn to_scenario(&self, rates: &[RateFunction], cells: usize) -> Result<Scenario> {
        if rates.len() != self.energy.len() {
            return Err(Error::InvalidScenario("one rate law per node is required".into()));
        }
        let horizon = self.slot_len * self.slots() as f64;
        let stairs = |cum: &[f64]| -> Result<PiecewiseCurve> {
            let mut prev = 0.0;
            let mut terms = Vec::new();
            for (i, v) in cum.iter().enumerate() {
                if *v > prev {
                    terms.push(Term::step(v - prev, i as f64 * self.slot_len));
                }
                prev = *v;
            }
            PiecewiseCurve::new(terms, horizon)
        };
        let nodes = self
            .energy
            .iter()
            .zip(rates)
            .enumerate()
            .map(|(i, (e, r))| Ok(Node::new(format!("node{i}"), stairs(e)?, r.clone())))
            .collect::<Result<Vec<_>>>()?;
        Ok(Scenario::new(nodes, stairs(&self.data)?, horizon)?.with_cells(cells))
    }
}

/// `count` evenly spaced levels from 0 to `p_max`.
pub fn uniform_levels(p_max: f64, count: usize) -> Vec<f64> {
    if count <= 1 {
        return vec![0.0];
    }
    (0..count)
        .map(|i| p_max * i as f64 / (count - 1) as f64)
        .collect()
}

/// Samples a scenario's curves at the slot starts of `slots` equal slots.
pub fn slot_from_scenario(scenario: &Scenario, slots: usize, levels: Vec<f64>) -> Result<SlottedInstance> {
    if slots == 0 || slots > MAX_SLOTS {
        return Err(Error::InstanceTooLarge(format!("{slots} slots (allowed 1..={MAX_SLOTS})")));
    }
    let slot_len = scenario.deadline / slots as f64;
    let starts: Vec<f64> = (0..slots).map(|i| i as f64 * slot_len).collect();
    let sample = |c: &PiecewiseCurve| starts.iter().map(|&t| c.eval(t)).collect::<Result<Vec<_>>>();
    let energy = scenario
        .nodes
        .iter()
        .map(|n| sample(&n.energy))
        .collect::<Result<Vec<_>>>()?;
    SlottedInstance::new(slot_len, energy, sample(&scenario.arrival)?, levels)
}

#[derive(Clone, Debug)]
struct Candidate {
    power: Vec<f64>,
    /// Cumulative data sent by the end of each slot.
    sent: Vec<f64>,
    energy: f64,
}

fn tol(values: &[f64]) -> f64 {
    SLACK * values.iter().fold(1.0f64, |m, v| m.max(v.abs()))
}

/// All level vectors that respect cumulative energy and, if given, data limits.
fn feasible_vectors(
    inst: &SlottedInstance,
    energy: &[f64],
    data: Option<&[f64]>,
    rate: &RateFunction,
) -> Vec<Candidate> {
    let n = inst.slots();
    let e_tol = tol(energy);
    let d_tol = data.map(tol).unwrap_or(0.0);
    let mut out = Vec::new();
    let mut power = Vec::with_capacity(n);
    let mut sent = Vec::with_capacity(n);

    fn walk(
        slot: usize,
        used: f64,
        carried: f64,
        ctx: (&SlottedInstance, &[f64], Option<&[f64]>, &RateFunction, f64, f64),
        power: &mut Vec<f64>,
        sent: &mut Vec<f64>,
        out: &mut Vec<Candidate>,
    ) {
        let (inst, energy, data, rate, e_tol, d_tol) = ctx;
        if slot == inst.slots() {
            out.push(Candidate {
                power: power.clone(),
                sent: sent.clone(),
                energy: used,
            });
            return;
        }
        for &p in &inst.levels {
            let e = used + p * inst.slot_len;
            if e > energy[slot] + e_tol {
                continue;
            }
            let d = carried + rate.rate(p) * inst.slot_len;
            if let Some(limit) = data {
                if d > limit[slot] + d_tol {
                    continue;
                }
            }
            power.push(p);
            sent.push(d);
            walk(slot + 1, e, d, ctx, power, sent, out);
            power.pop();
            sent.pop();
        }
    }

    walk(
        0,
        0.0,
        0.0,
        (inst, energy, data, rate, e_tol, d_tol),
        &mut power,
        &mut sent,
        &mut out,
    );
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleResult {
    /// Bits delivered to the receiver.
    pub delivered: f64,
    pub source_power: Vec<f64>,
    /// Empty for a single-hop instance.
    pub relay_power: Vec<f64>,
    /// Least source energy among the throughput maximizers.
    pub source_energy: f64,
}

fn check_nodes(inst: &SlottedInstance, nodes: usize) -> Result<()> {
    inst.validate()?;
    if inst.energy.len() != nodes {
        return Err(Error::InvalidScenario(format!(
            "instance has {} nodes, expected {nodes}",
            inst.energy.len()
        )));
    }
    Ok(())
}

/// Best single-hop policy, least energy among the maximizers.
pub fn brute_force_single_hop(inst: &SlottedInstance, rate: &RateFunction) -> Result<OracleResult> {
    check_nodes(inst, 1)?;
    let candidates = feasible_vectors(inst, &inst.energy[0], Some(&inst.data), rate);
    let best = pick(candidates.iter().map(|c| (*c.sent.last().unwrap(), c.energy, c, None)));
    let (delivered, energy, c, _) = best.expect("the all-zero policy is always feasible");
    Ok(OracleResult {
        delivered,
        source_power: c.power.clone(),
        relay_power: Vec::new(),
        source_energy: energy,
    })
}

type Choice<'a> = (f64, f64, &'a Candidate, Option<&'a Candidate>);

fn better(a: &Choice, b: &Choice) -> bool {
    let t = SLACK * a.0.abs().max(b.0.abs()).max(1.0);
    if a.0 > b.0 + t {
        return true;
    }
    if b.0 > a.0 + t {
        return false;
    }
    a.1 < b.1
}

fn pick<'a>(choices: impl Iterator<Item = Choice<'a>>) -> Option<Choice<'a>> {
    choices.fold(None, |best, c| match best {
        Some(b) if !better(&c, &b) => Some(b),
        _ => Some(c),
    })
}

/// Best two-hop policy over all `levels^(2N)` power vectors: maximum data at
/// the receiver, and among those the least source energy.
pub fn brute_force_two_hop(
    inst: &SlottedInstance,
    source_rate: &RateFunction,
    relay_rate: &RateFunction,
) -> Result<OracleResult> {
    check_nodes(inst, 2)?;
    let sources = feasible_vectors(inst, &inst.energy[0], Some(&inst.data), source_rate);
    let mut relays = feasible_vectors(inst, &inst.energy[1], None, relay_rate);
    relays.sort_by(|a, b| {
        b.sent
            .last()
            .unwrap()
            .total_cmp(a.sent.last().unwrap())
            .then(a.energy.total_cmp(&b.energy))
    });

    let best_per_source: Vec<Choice> = sources
        .par_iter()
        .filter_map(|src| {
            let d_tol = tol(&src.sent);
            relays
                .iter()
                .find(|rel| rel.sent.iter().zip(&src.sent).all(|(r, s)| *r <= s + d_tol))
                .map(|rel| (*rel.sent.last().unwrap(), src.energy, src, Some(rel)))
        })
        .collect();

    let (delivered, source_energy, src, rel) =
        pick(best_per_source.into_iter()).expect("the all-zero policy is always feasible");
    Ok(OracleResult {
        delivered,
        source_power: src.power.clone(),
        relay_power: rel.map(|r| r.power.clone()).unwrap_or_default(),
        source_energy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn levels() -> Vec<f64> {
        uniform_levels(2.0, 9)
    }

    #[test]
    fn single_slot_two_hop() {
        let inst = SlottedInstance::new(1.0, vec![vec![1.0], vec![1.0]], vec![1e6], levels()).unwrap();
        let r = RateFunction::shannon();
        let out = brute_force_two_hop(&inst, &r, &r).unwrap();
        assert!((out.delivered - 1.0).abs() < 1e-12);
        assert_eq!(out.source_power, vec![1.0]);
        assert_eq!(out.relay_power, vec![1.0]);
        assert!((out.source_energy - 1.0).abs() < 1e-12);
    }

    #[test]
    fn starved_relay() {
        let inst = SlottedInstance::new(1.0, vec![vec![1.0, 2.0], vec![0.0, 0.0]], vec![1e6, 1e6], levels()).unwrap();
        let r = RateFunction::shannon();
        let out = brute_force_two_hop(&inst, &r, &r).unwrap();
        assert_eq!(out.delivered, 0.0);
        assert_eq!(out.source_energy, 0.0);
    }

    #[test]
    fn unconstrained_relay_matches_single_hop() {
        let r = RateFunction::shannon();
        let single = SlottedInstance::new(1.0, vec![vec![1.0, 2.0]], vec![1e6, 1e6], levels()).unwrap();
        let p2p = brute_force_single_hop(&single, &r).unwrap();
        assert!((p2p.delivered - 2.0).abs() < 1e-12);
        let two = SlottedInstance::new(1.0, vec![vec![1.0, 2.0], vec![1e6, 1e6]], vec![1e6, 1e6], levels()).unwrap();
        let chain = brute_force_two_hop(&two, &r, &r).unwrap();
        assert!((chain.delivered - p2p.delivered).abs() < 1e-12);
    }

    #[test]
    fn slotting_samples_slot_starts() {
        let lin = PiecewiseCurve::new(vec![Term::poly(1.0, 0.0, 1.0, 0.0)], 1.0).unwrap();
        let sc = Scenario::new(vec![Node::new("s", lin.clone(), RateFunction::shannon())], lin, 1.0).unwrap();
        let inst = slot_from_scenario(&sc, 2, levels()).unwrap();
        assert_eq!(inst.energy[0], vec![0.0, 0.5]);
        assert_eq!(inst.data, vec![0.0, 0.5]);

        let steps = PiecewiseCurve::new(vec![Term::step(1.0, 0.0), Term::step(2.0, 0.5)], 1.0).unwrap();
        let sc = Scenario::new(vec![Node::new("s", steps.clone(), RateFunction::shannon())], steps, 1.0).unwrap();
        let inst = slot_from_scenario(&sc, 2, levels()).unwrap();
        assert_eq!(inst.energy[0], vec![1.0, 3.0]);
    }

    #[test]
    fn limits_are_enforced() {
        let big = SlottedInstance::new(1.0, vec![vec![0.0; 7]], vec![0.0; 7], levels());
        assert!(matches!(big, Err(Error::InstanceTooLarge(_))));
        let many = SlottedInstance::new(1.0, vec![vec![0.0]], vec![0.0], uniform_levels(1.0, 13));
        assert!(matches!(many, Err(Error::InstanceTooLarge(_))));
    }

    #[test]
    fn round_trips_to_step_scenario() {
        let inst = SlottedInstance::new(0.5, vec![vec![1.0, 1.5]], vec![0.2, 0.7], levels()).unwrap();
        let sc = inst.to_scenario(&[RateFunction::shannon()], 10).unwrap();
        assert_eq!(sc.deadline, 1.0);
        assert_eq!(sc.nodes[0].energy.eval(0.0).unwrap(), 1.0);
        assert_eq!(sc.nodes[0].energy.eval(0.5).unwrap(), 1.5);
        assert!((sc.arrival.eval(0.5).unwrap() - 0.7).abs() < 1e-15);
    }
}
