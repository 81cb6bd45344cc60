//! Rate-versus-power laws `r(p)` and their inverses.

use std::f64::consts::LN_2;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const BISECTION_STEPS: usize = 60;

type RateFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A concave, increasing rate law with `r(0) = 0`.
#[derive(Clone, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum RateFunction {
    /// `log2(1 + p)`, an AWGN link with unit gain-to-noise ratio.
    Shannon,
    /// `gain * p`. Concave but not sublinear; mainly useful in tests.
    Linear { gain: f64 },
    /// `sqrt(p)`.
    Sqrt,
    /// Piecewise-linear through `(0, 0)` and `points` (`[power, rate]`),
    /// extended past the last point with the last slope.
    Custom { points: Vec<[f64; 2]> },
    /// Arbitrary closure. Inverted by bisection; cannot be written to a file.
    #[serde(skip)]
    Closure { label: String, forward: RateFn },
}

impl fmt::Debug for RateFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RateFunction::Shannon => write!(f, "Shannon"),
            RateFunction::Linear { gain } => write!(f, "Linear {{ gain: {gain} }}"),
            RateFunction::Sqrt => write!(f, "Sqrt"),
            RateFunction::Custom { points } => write!(f, "Custom {{ points: {points:?} }}"),
            RateFunction::Closure { label, .. } => write!(f, "Closure({label})"),
        }
    }
}

impl PartialEq for RateFunction {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (RateFunction::Shannon, RateFunction::Shannon) => true,
            (RateFunction::Sqrt, RateFunction::Sqrt) => true,
            (RateFunction::Linear { gain: a }, RateFunction::Linear { gain: b }) => a == b,
            (RateFunction::Custom { points: a }, RateFunction::Custom { points: b }) => a == b,
            (RateFunction::Closure { forward: a, .. }, RateFunction::Closure { forward: b, .. }) => {
                Arc::ptr_eq(a, b)
            }
            _ => false,
        }
    }
}

impl RateFunction {
    pub fn shannon() -> Self {
        RateFunction::Shannon
    }

    pub fn linear(gain: f64) -> Self {
        RateFunction::Linear { gain }
    }

    pub fn sqrt() -> Self {
        RateFunction::Sqrt
    }

    /// Piecewise-linear law through the given `[power, rate]` points.
    pub fn custom(points: Vec<[f64; 2]>) -> Result<Self> {
        let law = RateFunction::Custom { points };
        law.validate()?;
        Ok(law)
    }

    pub fn from_fn(label: impl Into<String>, forward: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        RateFunction::Closure {
            label: label.into(),
            forward: Arc::new(forward),
        }
    }

    pub fn label(&self) -> String {
        match self {
            RateFunction::Shannon => "shannon".into(),
            RateFunction::Linear { .. } => "linear".into(),
            RateFunction::Sqrt => "sqrt".into(),
            RateFunction::Custom { .. } => "custom".into(),
            RateFunction::Closure { label, .. } => label.clone(),
        }
    }

    /// Structural checks on the parameters. [`check_rate_law`] does the
    /// numerical ones.
    pub fn validate(&self) -> Result<()> {
        match self {
            RateFunction::Linear { gain } if !(gain.is_finite() && *gain > 0.0) => {
                Err(Error::InvalidRate(format!("linear gain must be positive, got {gain}")))
            }
            RateFunction::Custom { points } => {
                if points.is_empty() {
                    return Err(Error::InvalidRate("custom law needs at least one point".into()));
                }
                let mut prev = [0.0, 0.0];
                let mut prev_slope = f64::INFINITY;
                for (i, p) in points.iter().enumerate() {
                    if i == 0 && p[0] == 0.0 {
                        if p[1] != 0.0 {
                            return Err(Error::InvalidRate("custom law must satisfy r(0) = 0".into()));
                        }
                        continue;
                    }
                    if !(p[0] > prev[0] && p[1] > prev[1]) || !p[0].is_finite() || !p[1].is_finite() {
                        return Err(Error::InvalidRate(
                            "custom points must be strictly increasing in power and rate".into(),
                        ));
                    }
                    let slope = (p[1] - prev[1]) / (p[0] - prev[0]);
                    if slope > prev_slope * (1.0 + 1e-12) {
                        return Err(Error::InvalidRate("custom law is not concave".into()));
                    }
                    prev_slope = slope;
                    prev = *p;
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// `r(p)`; negative powers are treated as zero.
    pub fn rate(&self, power: f64) -> f64 {
        let p = power.max(0.0);
        match self {
            RateFunction::Shannon => p.ln_1p() / LN_2,
            RateFunction::Linear { gain } => gain * p,
            RateFunction::Sqrt => p.sqrt(),
            RateFunction::Custom { points } => custom_rate(points, p),
            RateFunction::Closure { forward, .. } => forward(p),
        }
    }

    /// `r⁻¹(x)`; nonpositive rates map to zero power and rates beyond the
    /// representable range to `+inf`.
    pub fn inverse(&self, rate: f64) -> f64 {
        if rate.is_nan() || rate <= 0.0 {
            return 0.0;
        }
        if rate == f64::INFINITY {
            return f64::INFINITY;
        }
        match self {
            RateFunction::Shannon => (rate * LN_2).exp_m1(),
            RateFunction::Linear { gain } => rate / gain,
            RateFunction::Sqrt => rate * rate,
            _ => self.bisect(rate),
        }
    }

    fn bisect(&self, target: f64) -> f64 {
        let mut hi = 1.0f64;
        while self.rate(hi) < target {
            hi *= 2.0;
            if !hi.is_finite() {
                return f64::INFINITY;
            }
        }
        let mut lo = 0.0;
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if self.rate(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

fn custom_rate(points: &[[f64; 2]], p: f64) -> f64 {
    let mut prev = [0.0, 0.0];
    for point in points {
        if point[0] <= prev[0] {
            continue;
        }
        if p <= point[0] {
            return prev[1] + (point[1] - prev[1]) * (p - prev[0]) / (point[0] - prev[0]);
        }
        prev = *point;
    }
    // Past the last point: keep the last slope.
    let n = points.len();
    let before = if n >= 2 { points[n - 2] } else { [0.0, 0.0] };
    let last = points[n - 1];
    let slope = (last[1] - before[1]) / (last[0] - before[0]);
    last[1] + slope * (p - last[0])
}

/// Outcome of the numerical checks on a rate law.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RateReport {
    pub zero_at_origin: bool,
    pub increasing: bool,
    pub concave: bool,
    pub inverse_consistent: bool,
    pub unbounded: bool,
    /// `r(p) / p -> 0`; needed for the throughput function to be continuous in
    /// the deadline.
    pub sublinear: bool,
}

impl RateReport {
    /// All model assumptions hold (sublinear growth is reported separately).
    pub fn is_valid(&self) -> bool {
        self.zero_at_origin && self.increasing && self.concave && self.inverse_consistent && self.unbounded
    }
}

fn probe_powers() -> Vec<f64> {
    let mut ps: Vec<f64> = (0..=40).map(|k| k as f64 * 0.25).collect();
    ps.extend((-6..=8).map(|e| 10f64.powi(e)));
    ps.extend((-6..=8).map(|e| 3.0 * 10f64.powi(e)));
    ps.sort_by(f64::total_cmp);
    ps.dedup();
    ps
}

pub fn check_rate_law(law: &RateFunction) -> RateReport {
    let ps = probe_powers();
    let rs: Vec<f64> = ps.iter().map(|&p| law.rate(p)).collect();

    let zero_at_origin = law.rate(0.0).abs() <= 1e-15;
    let increasing = rs.windows(2).all(|w| w[1] > w[0]);

    let mut concave = true;
    'outer: for (i, &a) in ps.iter().enumerate() {
        for &b in &ps[i + 1..] {
            for lambda in [0.25, 0.5, 0.75] {
                let mix = law.rate(lambda * a + (1.0 - lambda) * b);
                let chord = lambda * law.rate(a) + (1.0 - lambda) * law.rate(b);
                if mix < chord - 1e-12 * chord.abs().max(1.0) {
                    concave = false;
                    break 'outer;
                }
            }
        }
    }

    let inverse_consistent = ps.iter().zip(&rs).all(|(&p, &r)| {
        let forward_back = law.rate(law.inverse(r));
        let back_forward = law.inverse(r);
        (forward_back - r).abs() <= 1e-10 * r.abs().max(1e-300)
            && (back_forward - p).abs() <= 1e-10 * p.max(1.0)
    });

    let far = law.rate(1e12);
    let unbounded = far.is_finite() && far - law.rate(1e11) > 1e-6 * far.abs();

    let big = 1e15;
    let sublinear = law.rate(big) / big <= 1e-4 * law.rate(1.0);

    RateReport {
        zero_at_origin,
        increasing,
        concave,
        inverse_consistent,
        unbounded,
        sublinear,
    }
}
