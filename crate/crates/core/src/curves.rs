//! Cumulative harvest and arrival curves, and the grid calculus the solvers run on.
//!
//! A [`PiecewiseCurve`] is a sum of elementary [`Term`]s on a closed domain
//! `[0, horizon]`. Steps are right-continuous: an amount arriving at `at` is
//! usable from `at` onwards. Everything numerical happens on a [`Grid`], a
//! uniform partition refined with the curves' declared breakpoints.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of uniform cells over a horizon.
pub const DEFAULT_CELLS: usize = 4000;

/// Relative tolerance used when merging breakpoints into a uniform grid.
const SNAP: f64 = 1e-9;

/// Relative tolerance for the convexity check on sampled curves.
pub const CONVEXITY_TOL: f64 = 1e-9;

fn one() -> f64 {
    1.0
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

fn is_one(x: &f64) -> bool {
    *x == 1.0
}

/// One elementary term of a curve expression.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Term {
    /// `coef * (t - shift)^power + offset`
    Poly {
        coef: f64,
        #[serde(default, skip_serializing_if = "is_zero")]
        shift: f64,
        #[serde(default = "one", skip_serializing_if = "is_one")]
        power: f64,
        #[serde(default, skip_serializing_if = "is_zero")]
        offset: f64,
    },
    /// `coef * exp(rate * t^power)`
    Exp {
        coef: f64,
        rate: f64,
        #[serde(default = "one", skip_serializing_if = "is_one")]
        power: f64,
    },
    /// `amount` becomes available at time `at`.
    Step { amount: f64, at: f64 },
    /// Linear interpolation through `points`, held flat outside them.
    Pwl { points: Vec<[f64; 2]> },
}

fn pow(base: f64, power: f64) -> f64 {
    if power.fract() == 0.0 && power.abs() < i32::MAX as f64 {
        base.powi(power as i32)
    } else {
        base.powf(power)
    }
}

impl Term {
    pub fn poly(coef: f64, shift: f64, power: f64, offset: f64) -> Self {
        Term::Poly {
            coef,
            shift,
            power,
            offset,
        }
    }

    pub fn constant(value: f64) -> Self {
        Term::Poly {
            coef: 0.0,
            shift: 0.0,
            power: 1.0,
            offset: value,
        }
    }

    pub fn exp(coef: f64, rate: f64, power: f64) -> Self {
        Term::Exp { coef, rate, power }
    }

    pub fn step(amount: f64, at: f64) -> Self {
        Term::Step { amount, at }
    }

    pub fn pwl(points: Vec<[f64; 2]>) -> Self {
        Term::Pwl { points }
    }

    fn value(&self, t: f64) -> f64 {
        match self {
            Term::Poly {
                coef,
                shift,
                power,
                offset,
            } => {
                if *coef == 0.0 {
                    *offset
                } else {
                    coef * pow(t - shift, *power) + offset
                }
            }
            Term::Exp { coef, rate, power } => coef * (rate * pow(t, *power)).exp(),
            Term::Step { amount, at } => {
                if t >= *at {
                    *amount
                } else {
                    0.0
                }
            }
            Term::Pwl { points } => interpolate(points, t),
        }
    }

    fn left_limit(&self, t: f64) -> f64 {
        match self {
            Term::Step { amount, at } => {
                if t > *at {
                    *amount
                } else {
                    0.0
                }
            }
            other => other.value(t),
        }
    }

    fn breakpoints(&self, out: &mut Vec<f64>) {
        match self {
            Term::Step { at, .. } => out.push(*at),
            Term::Pwl { points } => out.extend(points.iter().map(|p| p[0])),
            Term::Poly { shift, power, .. } if power.fract() != 0.0 || *power < 1.0 => {
                out.push(*shift)
            }
            _ => {}
        }
    }

    fn validate(&self) -> Result<()> {
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        match self {
            Term::Poly {
                coef,
                shift,
                power,
                offset,
            } => {
                if !finite(&[*coef, *shift, *power, *offset]) {
                    return Err(Error::InvalidCurve("non-finite poly parameter".into()));
                }
            }
            Term::Exp { coef, rate, power } => {
                if !finite(&[*coef, *rate, *power]) {
                    return Err(Error::InvalidCurve("non-finite exp parameter".into()));
                }
            }
            Term::Step { amount, at } => {
                if !finite(&[*amount, *at]) || *amount < 0.0 || *at < 0.0 {
                    return Err(Error::InvalidCurve(format!(
                        "step needs a nonnegative amount and time, got amount {amount} at {at}"
                    )));
                }
            }
            Term::Pwl { points } => {
                if points.is_empty() {
                    return Err(Error::InvalidCurve("pwl term without points".into()));
                }
                if !points.iter().all(|p| finite(p)) {
                    return Err(Error::InvalidCurve("non-finite pwl point".into()));
                }
                for w in points.windows(2) {
                    if w[1][0] <= w[0][0] {
                        return Err(Error::InvalidCurve(
                            "pwl abscissae must be strictly increasing".into(),
                        ));
                    }
                    if w[1][1] < w[0][1] {
                        return Err(Error::InvalidCurve("pwl values must be nondecreasing".into()));
                    }
                }
            }
        }
        Ok(())
    }
}

fn interpolate(points: &[[f64; 2]], t: f64) -> f64 {
    let first = points[0];
    let last = points[points.len() - 1];
    if t <= first[0] {
        return first[1];
    }
    if t >= last[0] {
        return last[1];
    }
    let idx = points.partition_point(|p| p[0] <= t);
    let (a, b) = (points[idx - 1], points[idx]);
    a[1] + (b[1] - a[1]) * (t - a[0]) / (b[0] - a[0])
}

/// A nondecreasing cumulative curve on `[0, horizon]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseCurve {
    terms: Vec<Term>,
    horizon: f64,
    breakpoints: Vec<f64>,
}

impl PiecewiseCurve {
    /// Builds a curve and checks that it is nonnegative at the origin and
    /// nondecreasing on a fine grid over its domain.
    pub fn new(terms: Vec<Term>, horizon: f64) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidCurve(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        for term in &terms {
            term.validate()?;
        }
        let mut breakpoints = Vec::new();
        for term in &terms {
            term.breakpoints(&mut breakpoints);
        }
        breakpoints.retain(|b| *b >= 0.0 && *b <= horizon);
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();

        let curve = Self {
            terms,
            horizon,
            breakpoints,
        };
        curve.validate_monotone()?;
        Ok(curve)
    }

    pub fn zero(horizon: f64) -> Result<Self> {
        Self::new(Vec::new(), horizon)
    }

    pub fn constant(value: f64, horizon: f64) -> Result<Self> {
        Self::new(vec![Term::constant(value)], horizon)
    }

    /// All data (or energy) available at t = 0.
    pub fn buffered(amount: f64, horizon: f64) -> Result<Self> {
        Self::new(vec![Term::step(amount, 0.0)], horizon)
    }

    /// Piecewise-linear curve through the given samples.
    pub fn from_samples(times: &[f64], values: &[f64]) -> Result<Self> {
        if times.len() != values.len() || times.is_empty() {
            return Err(Error::InvalidCurve("sample vectors must be non-empty and of equal length".into()));
        }
        let points = times.iter().zip(values).map(|(t, v)| [*t, *v]).collect();
        Self::new(vec![Term::pwl(points)], *times.last().unwrap())
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Times in `[0, horizon]` where the curve may jump or kink.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// The same expression on a different domain.
    pub fn with_horizon(&self, horizon: f64) -> Result<Self> {
        Self::new(self.terms.clone(), horizon)
    }

    fn check_domain(&self, t: f64) -> Result<f64> {
        let slack = SNAP * self.horizon.max(1.0);
        if !t.is_finite() || t < -slack || t > self.horizon + slack {
            return Err(Error::OutOfDomain {
                t,
                horizon: self.horizon,
            });
        }
        Ok(t.clamp(0.0, self.horizon))
    }

    /// Value at `t`; the right limit at a jump.
    pub fn eval(&self, t: f64) -> Result<f64> {
        let t = self.check_domain(t)?;
        Ok(self.value_unchecked(t))
    }

    /// Left limit at `t` (equal to the value away from jumps).
    pub fn left_limit(&self, t: f64) -> Result<f64> {
        let t = self.check_domain(t)?;
        Ok(self.left_unchecked(t))
    }

    pub(crate) fn value_unchecked(&self, t: f64) -> f64 {
        self.terms.iter().map(|term| term.value(t)).sum()
    }

    pub(crate) fn left_unchecked(&self, t: f64) -> f64 {
        self.terms.iter().map(|term| term.left_limit(t)).sum()
    }

    fn validate_monotone(&self) -> Result<()> {
        let grid = Grid::with_breakpoints(0.0, self.horizon, DEFAULT_CELLS, &self.breakpoints)?;
        let sampled = self.sample_unchecked(&grid);
        let scale = sampled
            .right
            .iter()
            .chain(&sampled.left)
            .fold(1.0f64, |m, v| m.max(v.abs()));
        if sampled.right.iter().chain(&sampled.left).any(|v| !v.is_finite()) {
            return Err(Error::InvalidCurve("curve is not finite on its domain".into()));
        }
        let tol = 1e-10 * scale;
        if sampled.right[0] < -tol {
            return Err(Error::InvalidCurve(format!(
                "value at t = 0 is negative ({})",
                sampled.right[0]
            )));
        }
        let times = grid.times();
        for k in 1..times.len() {
            let drops = [
                sampled.right[k - 1] - sampled.left[k],
                sampled.left[k] - sampled.right[k],
            ];
            for drop in drops {
                if drop > tol {
                    return Err(Error::Decreasing { at: times[k], drop });
                }
            }
        }
        Ok(())
    }

    /// Samples left limits and values at every grid time.
    pub fn sample(&self, grid: &Grid) -> Result<Sampled> {
        self.check_domain(grid.start())?;
        self.check_domain(grid.end())?;
        Ok(self.sample_unchecked(grid))
    }

    fn sample_unchecked(&self, grid: &Grid) -> Sampled {
        let times = grid.times();
        Sampled {
            left: times.iter().map(|&t| self.left_unchecked(t)).collect(),
            right: times.iter().map(|&t| self.value_unchecked(t)).collect(),
        }
    }

    /// Staircase version of the curve: `epochs` equal epochs over the domain,
    /// each holding the value the curve had at the epoch start.
    pub fn discretize(&self, epochs: usize) -> Result<Self> {
        if epochs == 0 {
            return Err(Error::InvalidCurve("discretize needs at least one epoch".into()));
        }
        let starts: Vec<f64> = (0..epochs).map(|k| self.horizon * k as f64 / epochs as f64).collect();
        let values: Vec<f64> = starts.iter().map(|&t| self.value_unchecked(t)).collect();
        let mut terms = vec![Term::constant(values[0])];
        for k in 1..epochs {
            let rise = (values[k] - values[k - 1]).max(0.0);
            if rise > 0.0 {
                terms.push(Term::step(rise, starts[k]));
            }
        }
        Self::new(terms, self.horizon)
    }
}

/// Left limits and values of a curve on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Sampled {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

impl Sampled {
    /// Samples of a continuous curve (left limit equals value).
    pub fn continuous(values: Vec<f64>) -> Self {
        Self {
            left: values.clone(),
            right: values,
        }
    }

    /// The tightest bound on a continuous cumulative quantity at each grid time.
    ///
    /// Anything continuous that stays under the curve can only reach the left
    /// limit at a jump; at the first grid time the value itself applies.
    pub fn bound(&self, k: usize) -> f64 {
        if k == 0 {
            self.right[0]
        } else {
            self.left[k]
        }
    }
}

/// Strictly increasing evaluation times.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    times: Vec<f64>,
}

impl Grid {
    pub fn uniform(start: f64, end: f64, cells: usize) -> Result<Self> {
        Self::with_breakpoints(start, end, cells, &[])
    }

    /// A uniform partition of `[start, end]` refined with the breakpoints that
    /// fall strictly inside it. A breakpoint closer than a relative 1e-9 to a
    /// uniform node replaces that node.
    pub fn with_breakpoints(start: f64, end: f64, cells: usize, breakpoints: &[f64]) -> Result<Self> {
        if !(start.is_finite() && end.is_finite()) || start >= end {
            return Err(Error::EmptyInterval { start, end });
        }
        let cells = cells.max(1);
        let span = end - start;
        let snap = SNAP * span;
        let mut times: Vec<f64> = (0..=cells)
            .map(|k| start + span * k as f64 / cells as f64)
            .collect();
        times[cells] = end;

        let mut inner: Vec<f64> = breakpoints
            .iter()
            .copied()
            .filter(|b| *b > start + snap && *b < end - snap)
            .collect();
        inner.sort_by(f64::total_cmp);
        inner.dedup();
        for b in inner {
            let idx = times.partition_point(|t| *t < b);
            let near_left = idx > 0 && (b - times[idx - 1]).abs() <= snap;
            let near_right = idx < times.len() && (times[idx] - b).abs() <= snap;
            if near_right {
                if idx != 0 && idx != times.len() - 1 {
                    times[idx] = b;
                }
            } else if near_left {
                if idx - 1 != 0 {
                    times[idx - 1] = b;
                }
            } else {
                times.insert(idx, b);
            }
        }
        Ok(Self { times })
    }

    /// Takes ownership of explicit times; they must be strictly increasing.
    pub fn from_times(times: Vec<f64>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::InvalidCurve("a grid needs at least two times".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidCurve("grid times must be finite and strictly increasing".into()));
        }
        Ok(Self { times })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Number of cells (one less than the number of times).
    pub fn cells(&self) -> usize {
        self.times.len() - 1
    }

    pub fn width(&self, cell: usize) -> f64 {
        self.times[cell + 1] - self.times[cell]
    }
}

/// Infimum of a difference quotient and where it is attained.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RatioInf {
    pub value: f64,
    pub at: f64,
}

/// `min_{j > from} (bound[j] - base) / (times[j] - times[from])`, with the index of the
/// first minimizer.
pub(crate) fn inf_ratio_samples(times: &[f64], bound: &[f64], from: usize, base: f64) -> (f64, usize) {
    let t0 = times[from];
    let mut best = f64::INFINITY;
    let mut arg = from + 1;
    for j in from + 1..times.len() {
        let ratio = (bound[j] - base) / (times[j] - t0);
        if ratio < best {
            best = ratio;
            arg = j;
        }
    }
    (best, arg)
}

/// `inf over t0 < x <= end of (c(x) - base) / (x - t0)` on the default grid.
///
/// Jumps are approached from the left, so a jump at `x` cannot be spent on the
/// way to `x`.
pub fn inf_ratio(curve: &PiecewiseCurve, t0: f64, base: f64, end: f64) -> Result<RatioInf> {
    inf_ratio_with_cells(curve, t0, base, end, DEFAULT_CELLS)
}

pub fn inf_ratio_with_cells(
    curve: &PiecewiseCurve,
    t0: f64,
    base: f64,
    end: f64,
    cells: usize,
) -> Result<RatioInf> {
    if t0 >= end {
        return Err(Error::EmptyInterval { start: t0, end });
    }
    curve.check_domain(t0)?;
    curve.check_domain(end)?;
    let grid = Grid::with_breakpoints(t0, end, cells, curve.breakpoints())?;
    let sampled = curve.sample_unchecked(&grid);
    let (value, arg) = inf_ratio_samples(grid.times(), &sampled.left, 0, base);
    Ok(RatioInf {
        value,
        at: grid.times()[arg],
    })
}

/// A supporting line `l(t) = slope * t + intercept` and its last contact time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tangent {
    pub slope: f64,
    pub intercept: f64,
    /// Last time in `[0, T]` where the line meets the curve.
    pub touch: f64,
    /// Grid index of `touch`.
    pub touch_index: usize,
}

impl Tangent {
    pub fn at(&self, t: f64) -> f64 {
        self.slope * t + self.intercept
    }
}

/// Fails unless the sampled curve has nonnegative second differences up to a
/// tolerance of `1e-9 * scale`.
pub fn check_convex(times: &[f64], values: &[f64]) -> Result<()> {
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = CONVEXITY_TOL * scale.max(f64::MIN_POSITIVE);
    for k in 1..times.len().saturating_sub(1) {
        let h0 = times[k] - times[k - 1];
        let h1 = times[k + 1] - times[k];
        let s0 = (values[k] - values[k - 1]) / h0;
        let s1 = (values[k + 1] - values[k]) / h1;
        let second = (s1 - s0) * 0.5 * (h0 + h1);
        if second < -tol {
            return Err(Error::NonConvex {
                at: times[k],
                second_difference: second,
            });
        }
    }
    Ok(())
}

/// Line through `(times[last], anchor)` that supports the sampled convex curve from below.
pub(crate) fn tangent_on_samples(times: &[f64], values: &[f64], anchor: f64) -> Result<Tangent> {
    check_convex(times, values)?;
    let n = times.len() - 1;
    let end = times[n];
    let top = values[n];
    let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    if anchor > top + 1e-9 * scale {
        return Err(Error::ExceedsAchievable {
            requested: anchor,
            achievable: top,
        });
    }
    if anchor >= top - 1e-12 * scale {
        let slope = if n > 0 {
            (values[n] - values[n - 1]) / (times[n] - times[n - 1])
        } else {
            0.0
        };
        return Ok(Tangent {
            slope,
            intercept: anchor - slope * end,
            touch: end,
            touch_index: n,
        });
    }
    // Smallest slope keeping the line under every sample; the contact is the
    // last maximizer.
    let ratios: Vec<f64> = (0..n)
        .map(|k| (anchor - values[k]) / (end - times[k]))
        .collect();
    let best = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tie = 1e-12 * best.abs().max(1.0);
    let touch_index = ratios.iter().rposition(|r| *r >= best - tie).unwrap_or(0);
    Ok(Tangent {
        slope: best,
        intercept: anchor - best * end,
        touch: times[touch_index],
        touch_index,
    })
}

/// Tangent to a convex curve through the anchor `(end, value)`, computed on the
/// default grid over `[0, end]`.
pub fn tangent_from_point(curve: &PiecewiseCurve, end: f64, value: f64) -> Result<Tangent> {
    curve.check_domain(end)?;
    let grid = Grid::with_breakpoints(0.0, end, DEFAULT_CELLS, curve.breakpoints())?;
    let sampled = curve.sample_unchecked(&grid);
    tangent_on_samples(grid.times(), &sampled.right, value)
}
