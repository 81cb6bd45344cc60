//! Offline throughput-optimal point-to-point scheduling, the kernel reused on every hop.
//!
//! At the start of each grid cell the transmitter picks
//!
//! ```text
//! p(t0) = min { r⁻¹( inf_{x>t0} (B(x) - B_tx(t0)) / (x - t0) ),
//!               inf_{x>t0} (E(x) - E_tx(t0)) / (x - t0) }
//! ```
//!
//! and holds it for the cell. The resulting power is nondecreasing, the
//! transmitted data curve is convex, and among throughput maximizers it spends
//! the least energy.

use crate::curves::{inf_ratio_samples, Grid, PiecewiseCurve, Sampled, DEFAULT_CELLS};
use crate::error::{Error, Result};
use crate::rate::RateFunction;

/// Relative tolerance for causality checks.
pub const CAUSALITY_TOL: f64 = 1e-6;

/// A node's transmission policy on a grid: piecewise-constant power per cell,
/// and cumulative transmitted energy and data at every grid time.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    pub times: Vec<f64>,
    /// Power on `[times[k], times[k + 1])`; one entry per cell.
    pub power: Vec<f64>,
    pub energy: Vec<f64>,
    pub data: Vec<f64>,
}

impl Schedule {
    /// Integrates a per-cell power profile.
    pub fn from_power(times: &[f64], power: Vec<f64>, rate: &RateFunction) -> Self {
        assert_eq!(times.len(), power.len() + 1, "one power value per cell");
        let mut energy = Vec::with_capacity(times.len());
        let mut data = Vec::with_capacity(times.len());
        energy.push(0.0);
        data.push(0.0);
        for (k, p) in power.iter().enumerate() {
            let h = times[k + 1] - times[k];
            energy.push(energy[k] + p * h);
            data.push(data[k] + rate.rate(*p) * h);
        }
        Self {
            times: times.to_vec(),
            power,
            energy,
            data,
        }
    }

    pub fn zero(times: &[f64]) -> Self {
        Self {
            times: times.to_vec(),
            power: vec![0.0; times.len() - 1],
            energy: vec![0.0; times.len()],
            data: vec![0.0; times.len()],
        }
    }

    pub fn cells(&self) -> usize {
        self.power.len()
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Data delivered by the end of the horizon.
    pub fn delivered(&self) -> f64 {
        *self.data.last().unwrap()
    }

    /// Energy spent by the end of the horizon.
    pub fn energy_used(&self) -> f64 {
        *self.energy.last().unwrap()
    }

    /// The transmitted data curve, used as the next hop's arrival curve.
    pub fn data_curve(&self) -> Sampled {
        Sampled::continuous(self.data.clone())
    }
}

/// Solves on the default grid over `[0, deadline]`.
pub fn solve_p2p(
    energy: &PiecewiseCurve,
    data: &PiecewiseCurve,
    rate: &RateFunction,
    deadline: f64,
) -> Result<Schedule> {
    solve_p2p_with_cells(energy, data, rate, deadline, DEFAULT_CELLS)
}

pub fn solve_p2p_with_cells(
    energy: &PiecewiseCurve,
    data: &PiecewiseCurve,
    rate: &RateFunction,
    deadline: f64,
    cells: usize,
) -> Result<Schedule> {
    if !(deadline > 0.0 && deadline.is_finite()) {
        return Err(Error::NonPositiveDeadline(deadline));
    }
    rate.validate()?;
    let breakpoints: Vec<f64> = energy
        .breakpoints()
        .iter()
        .chain(data.breakpoints())
        .copied()
        .collect();
    let grid = Grid::with_breakpoints(0.0, deadline, cells, &breakpoints)?;
    let e = energy.sample(&grid)?;
    let b = data.sample(&grid)?;
    Ok(solve_p2p_on_grid(&grid, &e, &b, rate))
}

/// The forward sweep on pre-sampled constraint curves.
pub fn solve_p2p_on_grid(grid: &Grid, energy: &Sampled, data: &Sampled, rate: &RateFunction) -> Schedule {
    let times = grid.times();
    let n = grid.cells();
    let e_bound: Vec<f64> = (0..=n).map(|k| energy.bound(k)).collect();
    let d_bound: Vec<f64> = (0..=n).map(|k| data.bound(k)).collect();

    let mut power = Vec::with_capacity(n);
    let mut e_tx = Vec::with_capacity(n + 1);
    let mut b_tx = Vec::with_capacity(n + 1);
    e_tx.push(0.0);
    b_tx.push(0.0);
    for k in 0..n {
        let (e_inf, _) = inf_ratio_samples(times, &e_bound, k, e_tx[k]);
        let (d_inf, _) = inf_ratio_samples(times, &d_bound, k, b_tx[k]);
        let p = rate.inverse(d_inf.max(0.0)).min(e_inf.max(0.0));
        let h = times[k + 1] - times[k];
        power.push(p);
        e_tx.push(e_tx[k] + p * h);
        b_tx.push(b_tx[k] + rate.rate(p) * h);
    }
    Schedule {
        times: times.to_vec(),
        power,
        energy: e_tx,
        data: b_tx,
    }
}

/// Energy needed to follow a data curve: the sum over cells of `r⁻¹(slope) * width`.
pub fn energy_of_data_curve(times: &[f64], data: &[f64], rate: &RateFunction) -> Result<f64> {
    if times.len() != data.len() {
        return Err(Error::InvalidCurve("times and data differ in length".into()));
    }
    let scale = data.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut total = 0.0;
    for k in 0..times.len().saturating_sub(1) {
        let rise = data[k + 1] - data[k];
        if rise < -1e-12 * scale {
            return Err(Error::Decreasing {
                at: times[k + 1],
                drop: -rise,
            });
        }
        let h = times[k + 1] - times[k];
        total += rate.inverse(rise.max(0.0) / h) * h;
    }
    Ok(total)
}

/// Largest causality violations of a schedule against its constraint curves.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeasibilityReport {
    /// `max(0, max_t E_tx(t) - E(t))`
    pub energy_violation: f64,
    /// `max(0, max_t B_tx(t) - B(t))`
    pub data_violation: f64,
    pub energy_tol: f64,
    pub data_tol: f64,
}

impl FeasibilityReport {
    pub fn feasible(&self) -> bool {
        self.energy_violation <= self.energy_tol && self.data_violation <= self.data_tol
    }
}

fn violation(used: &[f64], bound: &Sampled) -> (f64, f64) {
    let worst = used
        .iter()
        .enumerate()
        .map(|(k, u)| u - bound.bound(k))
        .fold(0.0f64, f64::max);
    let scale = bound.right.last().copied().unwrap_or(0.0).abs().max(1.0);
    (worst, CAUSALITY_TOL * scale)
}

/// Checks energy and data causality on the schedule's own grid.
pub fn check_feasible_sampled(schedule: &Schedule, energy: &Sampled, data: &Sampled) -> FeasibilityReport {
    let (energy_violation, energy_tol) = violation(&schedule.energy, energy);
    let (data_violation, data_tol) = violation(&schedule.data, data);
    FeasibilityReport {
        energy_violation,
        data_violation,
        energy_tol,
        data_tol,
    }
}

pub fn check_feasible(schedule: &Schedule, energy: &PiecewiseCurve, data: &PiecewiseCurve) -> Result<FeasibilityReport> {
    let grid = Grid::from_times(schedule.times.clone())?;
    Ok(check_feasible_sampled(
        schedule,
        &energy.sample(&grid)?,
        &data.sample(&grid)?,
    ))
}
