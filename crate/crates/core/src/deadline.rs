//! Completion-time minimization.
//!
//! The end-to-end throughput `D(t)` is nondecreasing in the deadline, and
//! continuous when the last hop's rate grows sublinearly. The shortest time
//! to deliver `B0` bits is therefore the smallest `t` with `D(t) >= B0`,
//! found by bisection, after which the throughput solver runs at that deadline.

use crate::error::{Error, Result};
use crate::multihop::{solve_throughput, MultiHopSolution, Scenario};
use crate::rate::check_rate_law;

/// Maximum end-to-end data deliverable by deadline `t`.
pub fn throughput_at(scenario: &Scenario, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::NonPositiveDeadline(t));
    }
    Ok(solve_throughput(&scenario.with_deadline(t)?, false)?.delivered)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeadlineQuery {
    /// `B0`, bits to deliver.
    pub target_bits: f64,
    /// Upper end of the search interval.
    pub t_max: f64,
    /// Stop once the bracket is narrower than this.
    pub time_tol: f64,
    pub max_iter: usize,
}

impl DeadlineQuery {
    pub fn new(target_bits: f64, t_max: f64) -> Self {
        Self {
            target_bits,
            t_max,
            time_tol: 1e-9 * t_max,
            max_iter: 40,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompletionTime {
    pub t_off: f64,
    /// Energy-minimal throughput-optimal solution at deadline `t_off`.
    pub solution: MultiHopSolution,
    /// Number of throughput evaluations spent in the search.
    pub evaluations: usize,
}

pub fn min_completion_time(scenario: &Scenario, query: &DeadlineQuery) -> Result<CompletionTime> {
    if !(query.target_bits > 0.0) {
        return Err(Error::InvalidScenario(format!(
            "target must be positive, got {}",
            query.target_bits
        )));
    }
    if !(query.t_max > 0.0) {
        return Err(Error::NonPositiveDeadline(query.t_max));
    }
    for node in &scenario.nodes {
        if !check_rate_law(&node.rate).sublinear {
            return Err(Error::NotSublinear(node.rate.label()));
        }
    }

    let mut evaluations = 1;
    let reachable = throughput_at(scenario, query.t_max)?;
    if reachable < query.target_bits {
        return Err(Error::Unreachable {
            target: query.target_bits,
            achievable: reachable,
        });
    }

    let (mut lo, mut hi) = (0.0, query.t_max);
    for _ in 0..query.max_iter {
        if hi - lo <= query.time_tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        evaluations += 1;
        if throughput_at(scenario, mid)? >= query.target_bits {
            hi = mid;
        } else {
            lo = mid;
        }
    }

    let solution = solve_throughput(&scenario.with_deadline(hi)?, true)?;
    Ok(CompletionTime {
        t_off: hi,
        solution,
        evaluations,
    })
}
