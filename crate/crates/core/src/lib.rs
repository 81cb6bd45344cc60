//! Offline and online scheduling for full-duplex multi-hop links whose nodes
//! harvest their energy and whose source data arrives over time.
//!
//! Resources are cumulative curves of time ([`PiecewiseCurve`]). The offline
//! solvers find the schedule that delivers the most data by a deadline
//! ([`solve_p2p`], [`solve_throughput`]), the shortest time to deliver a
//! given amount ([`min_completion_time`]), and the least source energy among
//! throughput-optimal schedules. [`run_online`] runs causal policies that see
//! only the past, and [`oracle`] brute-forces small slotted instances.

pub mod curves;
pub mod deadline;
pub mod error;
pub mod multihop;
pub mod online;
pub mod oracle;
pub mod p2p;
pub mod rate;
pub mod scenario;

pub use curves::{inf_ratio, tangent_from_point, Grid, PiecewiseCurve, RatioInf, Sampled, Tangent, Term};
pub use deadline::{min_completion_time, throughput_at, CompletionTime, DeadlineQuery};
pub use error::{Error, Result};
pub use multihop::{minimize_source_energy, solve_throughput, MultiHopSolution, Node, Scenario};
pub use online::{run_online, OnlineRun, RelayBranch, Variant};
pub use p2p::{check_feasible, solve_p2p, FeasibilityReport, Schedule};
pub use rate::{check_rate_law, RateFunction, RateReport};
pub use scenario::{builtin, ScenarioFile};
