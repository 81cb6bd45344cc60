//! Causal transmission policies.
//!
//! Every grid step each node looks only at what it has harvested and received
//! so far and spreads its remaining data or energy evenly over the time left,
//! `T - t + ε`. The proposed relay rule also lets the relay keep pace with the
//! current incoming rate; the benchmark applies the point-to-point rule at
//! every node unchanged.

use std::fmt;
use std::str::FromStr;

use crate::curves::PiecewiseCurve;
use crate::error::{Error, Result};
use crate::multihop::Scenario;
use crate::p2p::Schedule;
use crate::rate::RateFunction;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Relays take the larger of the remaining-data and incoming-rate powers.
    Proposed,
    /// Point-to-point online rule at every node.
    Benchmark,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Proposed => "proposed",
            Variant::Benchmark => "benchmark",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "proposed" => Ok(Variant::Proposed),
            "benchmark" => Ok(Variant::Benchmark),
            other => Err(Error::InvalidScenario(format!("unknown online variant `{other}`"))),
        }
    }
}

/// Which limit set a relay's power.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RelayBranch {
    DataRemaining,
    Arrival,
    Energy,
}

/// Data and energy a node holds but has not yet spent.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NodeState {
    pub data_remaining: f64,
    pub energy_remaining: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OnlineState {
    pub time: f64,
    pub deadline: f64,
    pub epsilon: f64,
    /// Source first, then relays in chain order.
    pub nodes: Vec<NodeState>,
}

impl OnlineState {
    /// `T - t + ε`
    pub fn time_left(&self) -> f64 {
        self.deadline - self.time + self.epsilon
    }
}

/// `min{ r⁻¹(B_rem / (T - t + ε)), E_rem / (T - t + ε) }` for the source.
pub fn source_power(state: &OnlineState, rate: &RateFunction) -> f64 {
    let tau = state.time_left();
    let node = state.nodes[0];
    let data = rate.inverse(node.data_remaining.max(0.0) / tau);
    let energy = node.energy_remaining.max(0.0) / tau;
    data.min(energy)
}

/// Power of relay `relay` (an index into `state.nodes`, at least 1).
///
/// `incoming_rate` is the rate at which the upstream node is transmitting now.
pub fn relay_power(
    state: &OnlineState,
    relay: usize,
    incoming_rate: f64,
    rate: &RateFunction,
    variant: Variant,
) -> (f64, RelayBranch) {
    let tau = state.time_left();
    let node = state.nodes[relay];
    let backlog = rate.inverse(node.data_remaining.max(0.0) / tau);
    let energy = node.energy_remaining.max(0.0) / tau;
    let (wanted, branch) = match variant {
        Variant::Proposed => {
            let arrival = rate.inverse(incoming_rate);
            if arrival > backlog {
                (arrival, RelayBranch::Arrival)
            } else {
                (backlog, RelayBranch::DataRemaining)
            }
        }
        Variant::Benchmark => (backlog, RelayBranch::DataRemaining),
    };
    if energy < wanted {
        (energy, RelayBranch::Energy)
    } else {
        (wanted, branch)
    }
}

/// Read access to a curve that refuses to look past the current time.
#[derive(Clone, Debug)]
pub struct CausalView<'a> {
    curve: &'a PiecewiseCurve,
    now: f64,
}

impl<'a> CausalView<'a> {
    pub fn new(curve: &'a PiecewiseCurve) -> Self {
        Self { curve, now: 0.0 }
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    /// Moves the clock forward; it never moves back.
    pub fn advance_to(&mut self, t: f64) {
        self.now = self.now.max(t);
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if t > self.now {
            return Err(Error::LookAhead {
                requested: t,
                now: self.now,
            });
        }
        self.curve.eval(t)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OnlineRun {
    pub variant: Variant,
    pub epsilon: f64,
    pub times: Vec<f64>,
    pub schedules: Vec<Schedule>,
    /// Data delivered to the receiver by the deadline.
    pub delivered: f64,
    /// Active branch per cell for every relay (empty for the source).
    pub branches: Vec<Vec<RelayBranch>>,
    /// Times where a relay's active branch changed.
    pub switches: Vec<Vec<f64>>,
}

pub fn run_online(scenario: &Scenario, epsilon: f64, variant: Variant) -> Result<OnlineRun> {
    scenario.validate()?;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidScenario(format!("epsilon must be positive, got {epsilon}")));
    }
    let grid = scenario.grid()?;
    let times = grid.times();
    let cells = grid.cells();
    let hops = scenario.hops();

    let mut arrival = CausalView::new(&scenario.arrival);
    let mut harvest: Vec<CausalView> = scenario.nodes.iter().map(|n| CausalView::new(&n.energy)).collect();

    let mut power = vec![Vec::with_capacity(cells); hops];
    let mut energy = vec![vec![0.0]; hops];
    let mut data = vec![vec![0.0]; hops];
    let mut branches = vec![Vec::with_capacity(cells); hops];
    let mut switches = vec![Vec::new(); hops];
    let mut state = OnlineState {
        time: 0.0,
        deadline: scenario.deadline,
        epsilon,
        nodes: vec![NodeState::default(); hops],
    };

    for k in 0..cells {
        let t = times[k];
        state.time = t;
        arrival.advance_to(t);
        for view in &mut harvest {
            view.advance_to(t);
        }

        for i in 0..hops {
            let received = if i == 0 { arrival.eval(t)? } else { data[i - 1][k] };
            state.nodes[i] = NodeState {
                data_remaining: received - data[i][k],
                energy_remaining: harvest[i].eval(t)? - energy[i][k],
            };
        }

        let mut upstream_rate = 0.0;
        for i in 0..hops {
            let rate = &scenario.nodes[i].rate;
            let p = if i == 0 {
                source_power(&state, rate)
            } else {
                let (p, branch) = relay_power(&state, i, upstream_rate, rate, variant);
                if let Some(prev) = branches[i].last() {
                    if *prev != branch {
                        switches[i].push(t);
                    }
                }
                branches[i].push(branch);
                p
            };
            upstream_rate = rate.rate(p);
            let h = times[k + 1] - t;
            power[i].push(p);
            let e_next = energy[i][k] + p * h;
            let d_next = data[i][k] + upstream_rate * h;
            energy[i].push(e_next);
            data[i].push(d_next);
        }
    }

    let schedules: Vec<Schedule> = (0..hops)
        .map(|i| Schedule {
            times: times.to_vec(),
            power: std::mem::take(&mut power[i]),
            energy: std::mem::take(&mut energy[i]),
            data: std::mem::take(&mut data[i]),
        })
        .collect();
    let delivered = schedules.last().map(Schedule::delivered).unwrap_or(0.0);
    Ok(OnlineRun {
        variant,
        epsilon,
        times: times.to_vec(),
        schedules,
        delivered,
        branches,
        switches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::Term;
    use crate::multihop::Node;

    fn state(nodes: Vec<NodeState>, time_left: f64) -> OnlineState {
        OnlineState {
            time: 0.0,
            deadline: time_left,
            epsilon: 0.0,
            nodes,
        }
    }

    fn ns(data: f64, energy: f64) -> NodeState {
        NodeState {
            data_remaining: data,
            energy_remaining: energy,
        }
    }

    #[test]
    fn source_power_examples() {
        let r = RateFunction::shannon();
        assert_eq!(source_power(&state(vec![ns(0.0, 5.0)], 1.0), &r), 0.0);
        assert!((source_power(&state(vec![ns(2.0, 3.0)], 1.0), &r) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn relay_power_examples() {
        let r = RateFunction::shannon();
        let st = state(vec![ns(0.0, 0.0), ns(0.0, 10.0)], 1.0);
        let (p, b) = relay_power(&st, 1, r.rate(3.0), &r, Variant::Proposed);
        assert!((p - 3.0).abs() < 1e-12);
        assert_eq!(b, RelayBranch::Arrival);

        let st = state(vec![ns(0.0, 0.0), ns(4.0, 0.0)], 1.0);
        let (p, b) = relay_power(&st, 1, r.rate(3.0), &r, Variant::Proposed);
        assert_eq!(p, 0.0);
        assert_eq!(b, RelayBranch::Energy);

        let st = state(vec![ns(0.0, 0.0), ns(1.0, 5.0)], 1.0);
        let (p, b) = relay_power(&st, 1, 0.0, &r, Variant::Proposed);
        assert!((p - 1.0).abs() < 1e-12);
        assert_eq!(b, RelayBranch::DataRemaining);

        let st = state(vec![ns(0.0, 0.0), ns(0.0, 10.0)], 1.0);
        let (p, _) = relay_power(&st, 1, r.rate(3.0), &r, Variant::Benchmark);
        assert_eq!(p, 0.0);
    }

    #[test]
    fn causal_view_refuses_the_future() {
        let c = PiecewiseCurve::new(vec![Term::poly(1.0, 0.0, 1.0, 0.0)], 1.0).unwrap();
        let mut v = CausalView::new(&c);
        assert!(v.eval(0.0).is_ok());
        assert!(matches!(v.eval(0.5), Err(Error::LookAhead { .. })));
        v.advance_to(0.5);
        assert_eq!(v.eval(0.5).unwrap(), 0.5);
        v.advance_to(0.2);
        assert_eq!(v.now(), 0.5);
    }

    #[test]
    fn starved_relay_sends_nothing() {
        let src = PiecewiseCurve::new(vec![Term::poly(2.0, 0.0, 1.0, 0.0)], 1.0).unwrap();
        let sc = Scenario::new(
            vec![
                Node::new("s", src, RateFunction::shannon()),
                Node::new("r", PiecewiseCurve::zero(1.0).unwrap(), RateFunction::shannon()),
            ],
            PiecewiseCurve::buffered(10.0, 1.0).unwrap(),
            1.0,
        )
        .unwrap()
        .with_cells(500);
        for variant in [Variant::Proposed, Variant::Benchmark] {
            let run = run_online(&sc, 1e-5, variant).unwrap();
            assert_eq!(run.delivered, 0.0);
            assert!(run.schedules[0].delivered() > 0.0);
        }
    }

    #[test]
    fn rejects_nonpositive_epsilon() {
        let c = PiecewiseCurve::buffered(1.0, 1.0).unwrap();
        let sc = Scenario::new(vec![Node::new("s", c.clone(), RateFunction::shannon())], c, 1.0).unwrap();
        assert!(run_online(&sc, 0.0, Variant::Proposed).is_err());
    }

    #[test]
    fn variant_round_trip() {
        for v in [Variant::Proposed, Variant::Benchmark] {
            assert_eq!(v.to_string().parse::<Variant>().unwrap(), v);
        }
        assert!("other".parse::<Variant>().is_err());
    }
}
