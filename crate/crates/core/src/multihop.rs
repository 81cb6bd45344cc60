//! Offline throughput maximization over a relay chain.
//!
//! Forward pass: every hop runs the point-to-point solver, taking the previous
//! hop's transmitted data curve as its arrival curve. Backward pass: starting
//! from the second-to-last transmitter and moving towards the source, each
//! node keeps its optimal curve up to the tangent point and then follows the
//! tangent line through `(T, data delivered downstream)`, which is the least
//! energy that still feeds the downstream schedule.

use crate::curves::{tangent_on_samples, Grid, PiecewiseCurve, Sampled, Tangent, DEFAULT_CELLS};
use crate::error::{Error, Result};
use crate::p2p::{solve_p2p_on_grid, Schedule, CAUSALITY_TOL};
use crate::rate::RateFunction;

/// A transmitting node and the link it drives.
#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub name: String,
    pub energy: PiecewiseCurve,
    /// Rate law of the outgoing hop.
    pub rate: RateFunction,
}

impl Node {
    pub fn new(name: impl Into<String>, energy: PiecewiseCurve, rate: RateFunction) -> Self {
        Self {
            name: name.into(),
            energy,
            rate,
        }
    }
}

/// A full problem instance: transmitters from the source to the last relay,
/// the source's data arrivals, and the deadline.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub nodes: Vec<Node>,
    pub arrival: PiecewiseCurve,
    pub deadline: f64,
    /// Uniform cells over `[0, deadline]` before breakpoints are merged in.
    pub cells: usize,
}

impl Scenario {
    pub fn new(nodes: Vec<Node>, arrival: PiecewiseCurve, deadline: f64) -> Result<Self> {
        let scenario = Self {
            nodes,
            arrival,
            deadline,
            cells: DEFAULT_CELLS,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn with_cells(mut self, cells: usize) -> Self {
        self.cells = cells.max(1);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::InvalidScenario("at least one hop is required".into()));
        }
        if !(self.deadline > 0.0 && self.deadline.is_finite()) {
            return Err(Error::NonPositiveDeadline(self.deadline));
        }
        let horizon = self.horizon();
        if horizon < self.deadline * (1.0 - 1e-12) {
            return Err(Error::InvalidScenario(format!(
                "deadline {} lies beyond the curve domain {}",
                self.deadline, horizon
            )));
        }
        for node in &self.nodes {
            node.rate.validate()?;
        }
        Ok(())
    }

    /// Number of hops (transmitting nodes).
    pub fn hops(&self) -> usize {
        self.nodes.len()
    }

    /// The shortest curve domain among the scenario's curves.
    pub fn horizon(&self) -> f64 {
        self.nodes
            .iter()
            .map(|n| n.energy.horizon())
            .fold(self.arrival.horizon(), f64::min)
    }

    /// Same curves, different deadline.
    pub fn with_deadline(&self, deadline: f64) -> Result<Self> {
        let scenario = Self {
            deadline,
            ..self.clone()
        };
        scenario.validate()?;
        Ok(scenario)
    }

    /// Every curve replaced by its staircase with `epochs` epochs over `[0, deadline]`.
    pub fn discretized(&self, epochs: usize) -> Result<Self> {
        let stair = |c: &PiecewiseCurve| c.with_horizon(self.deadline)?.discretize(epochs);
        let nodes = self
            .nodes
            .iter()
            .map(|n| {
                Ok(Node {
                    energy: stair(&n.energy)?,
                    ..n.clone()
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            nodes,
            arrival: stair(&self.arrival)?,
            deadline: self.deadline,
            cells: self.cells,
        })
    }

    /// Uniform grid over `[0, deadline]` refined with all curve breakpoints.
    pub fn grid(&self) -> Result<Grid> {
        let mut breakpoints: Vec<f64> = self.arrival.breakpoints().to_vec();
        for node in &self.nodes {
            breakpoints.extend_from_slice(node.energy.breakpoints());
        }
        Grid::with_breakpoints(0.0, self.deadline, self.cells, &breakpoints)
    }
}

/// Per-node schedules and the end-to-end throughput.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiHopSolution {
    pub times: Vec<f64>,
    /// Throughput-maximal schedules from the forward pass.
    pub forward: Vec<Schedule>,
    /// Final schedules (equal to `forward` when the energy pass is skipped).
    pub schedules: Vec<Schedule>,
    /// Tangent used for each node in the energy pass; `None` for the last
    /// transmitter and when the pass is skipped.
    pub tangents: Vec<Option<Tangent>>,
    /// Data delivered to the receiver by the deadline.
    pub delivered: f64,
}

impl MultiHopSolution {
    /// Energy spent by each node under the final schedules.
    pub fn energies(&self) -> Vec<f64> {
        self.schedules.iter().map(Schedule::energy_used).collect()
    }

    /// Largest amount by which any node sends data it has not yet received.
    pub fn chain_violation(&self) -> f64 {
        self.schedules
            .windows(2)
            .flat_map(|w| w[1].data.iter().zip(&w[0].data).map(|(down, up)| down - up))
            .fold(0.0f64, f64::max)
    }
}

/// Runs the forward cascade and, if `minimize_energy`, the backward tangent pass.
pub fn solve_throughput(scenario: &Scenario, minimize_energy: bool) -> Result<MultiHopSolution> {
    scenario.validate()?;
    let grid = scenario.grid()?;
    let arrival = scenario.arrival.sample(&grid)?;

    let mut forward: Vec<Schedule> = Vec::with_capacity(scenario.hops());
    for node in &scenario.nodes {
        let energy = node.energy.sample(&grid)?;
        let incoming: Sampled = match forward.last() {
            Some(upstream) => upstream.data_curve(),
            None => arrival.clone(),
        };
        forward.push(solve_p2p_on_grid(&grid, &energy, &incoming, &node.rate));
    }
    let delivered = forward.last().map(Schedule::delivered).unwrap_or(0.0);

    let mut schedules = forward.clone();
    let mut tangents = vec![None; scenario.hops()];
    if minimize_energy {
        for i in (0..scenario.hops().saturating_sub(1)).rev() {
            let target = schedules[i + 1].delivered();
            let (schedule, tangent) = minimize_source_energy(&forward[i], target, &scenario.nodes[i].rate)?;
            schedules[i] = schedule;
            tangents[i] = Some(tangent);
        }
    }

    Ok(MultiHopSolution {
        times: grid.times().to_vec(),
        forward,
        schedules,
        tangents,
        delivered,
    })
}

/// Least-energy schedule that still transmits `delivered` bits by the deadline
/// and stays above every curve the downstream node can follow.
///
/// Follows the throughput-optimal curve up to the tangent point, then the
/// tangent line through `(T, delivered)`.
pub fn minimize_source_energy(
    upstream: &Schedule,
    delivered: f64,
    rate: &RateFunction,
) -> Result<(Schedule, Tangent)> {
    let tangent = tangent_on_samples(&upstream.times, &upstream.data, delivered)?;
    let n = upstream.cells();
    if tangent.touch_index == n {
        return Ok((upstream.clone(), tangent));
    }

    let idx = tangent.touch_index;
    let line_power = rate.inverse(tangent.slope);
    let mut power = upstream.power[..idx].to_vec();
    power.resize(n, line_power);

    let mut data = upstream.data[..=idx].to_vec();
    data.extend(upstream.times[idx + 1..].iter().map(|&t| tangent.at(t)));
    data[n] = delivered;

    let mut energy = upstream.energy[..=idx].to_vec();
    for k in idx..n {
        let h = upstream.times[k + 1] - upstream.times[k];
        energy.push(energy[k] + line_power * h);
    }

    Ok((
        Schedule {
            times: upstream.times.clone(),
            power,
            energy,
            data,
        },
        tangent,
    ))
}

/// Absolute tolerance for the hop data-causality chain of a solution.
pub fn chain_tolerance(solution: &MultiHopSolution) -> f64 {
    let scale = solution
        .forward
        .first()
        .map(Schedule::delivered)
        .unwrap_or(0.0)
        .max(1.0);
    CAUSALITY_TOL * scale
}
