//! Scenario files and the built-in examples.
//!
//! Scenarios are TOML documents:
//!
//! ```toml
//! deadline = 0.6
//! # optional: horizon (curve domain), cells or dt (grid), epsilon (online)
//!
//! [[arrival]]
//! kind = "poly"
//! coef = 10.0
//! power = 2.0
//! offset = 0.1
//!
//! [[node]]
//! name = "source"
//! rate = { name = "shannon" }
//!
//! [[node.energy]]
//! kind = "poly"
//! coef = 100.0
//! power = 2.0
//! offset = 1.0
//! ```
//!
//! Term kinds are `poly` (`coef * (t - shift)^power + offset`), `exp`
//! (`coef * exp(rate * t^power)`), `step` (`amount` at `at`) and `pwl`
//! (`points = [[t, v], ...]`). Rate laws are `shannon`, `sqrt`,
//! `linear` (with `gain`) and `custom` (with `points = [[p, r], ...]`).

use std::path::Path;

use serde::{Deserialize, Serialize};
use toml::Spanned;

use crate::curves::{PiecewiseCurve, Term, DEFAULT_CELLS};
use crate::error::{Error, Result};
use crate::multihop::{Node, Scenario};
use crate::rate::RateFunction;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub name: String,
    pub rate: RateFunction,
    pub energy: Vec<Term>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OutputOptions {
    /// Where to write the time series.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub deadline: f64,
    /// Curve domain; defaults to the deadline.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cells: Option<usize>,
    /// Grid step; takes precedence over `cells`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Online look-ahead slack; defaults to `1e-5 * deadline`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputOptions>,
    pub arrival: Vec<Term>,
    #[serde(rename = "node")]
    pub nodes: Vec<NodeSpec>,
}

/// Same layout with source spans, used only while loading.
#[derive(Deserialize)]
struct RawFile {
    deadline: Spanned<f64>,
    #[serde(default)]
    horizon: Option<f64>,
    #[serde(default)]
    cells: Option<usize>,
    #[serde(default)]
    dt: Option<f64>,
    #[serde(default)]
    epsilon: Option<f64>,
    #[serde(default)]
    output: Option<OutputOptions>,
    arrival: Spanned<Vec<Term>>,
    #[serde(rename = "node", default)]
    nodes: Vec<Spanned<NodeSpec>>,
}

fn line_of(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].matches('\n').count() + 1
}

impl ScenarioFile {
    /// Parses and validates a scenario document. Errors name the offending line.
    pub fn parse(src: &str) -> Result<Self> {
        let raw: RawFile = toml::from_str(src).map_err(|e| {
            let line = e.span().map(|s| line_of(src, s.start));
            match line {
                Some(line) => Error::Parse(format!("line {line}: {}", e.message())),
                None => Error::Parse(e.message().to_string()),
            }
        })?;
        let at = |span: std::ops::Range<usize>, err: Error| Error::Parse(format!("line {}: {err}", line_of(src, span.start)));

        let file = ScenarioFile {
            deadline: *raw.deadline.get_ref(),
            horizon: raw.horizon,
            cells: raw.cells,
            dt: raw.dt,
            epsilon: raw.epsilon,
            output: raw.output,
            arrival: raw.arrival.get_ref().clone(),
            nodes: raw.nodes.iter().map(|n| n.get_ref().clone()).collect(),
        };

        let horizon = file.horizon();
        if !(file.deadline > 0.0) {
            return Err(at(raw.deadline.span(), Error::NonPositiveDeadline(file.deadline)));
        }
        if raw.nodes.is_empty() {
            return Err(Error::Parse(format!(
                "line {}: at least one [[node]] is required",
                src.lines().count().max(1)
            )));
        }
        PiecewiseCurve::new(file.arrival.clone(), horizon).map_err(|e| at(raw.arrival.span(), e))?;
        for node in &raw.nodes {
            let spec = node.get_ref();
            let wrap = |e: Error| at(node.span(), Error::InvalidScenario(format!("node `{}`: {e}", spec.name)));
            PiecewiseCurve::new(spec.energy.clone(), horizon).map_err(wrap)?;
            spec.rate.validate().map_err(wrap)?;
        }
        file.build().map_err(|e| Error::Parse(e.to_string()))?;
        Ok(file)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let src = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::parse(&src).map_err(|e| match e {
            Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario files always serialize")
    }

    pub fn horizon(&self) -> f64 {
        self.horizon.unwrap_or(self.deadline).max(self.deadline)
    }

    pub fn grid_cells(&self) -> usize {
        match (self.dt, self.cells) {
            (Some(dt), _) if dt > 0.0 => ((self.deadline / dt).round() as usize).max(1),
            (_, Some(cells)) => cells.max(1),
            _ => DEFAULT_CELLS,
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon.unwrap_or(1e-5 * self.deadline)
    }

    /// Builds the solver-side scenario.
    pub fn build(&self) -> Result<Scenario> {
        let horizon = self.horizon();
        let nodes = self
            .nodes
            .iter()
            .map(|n| Ok(Node::new(n.name.clone(), PiecewiseCurve::new(n.energy.clone(), horizon)?, n.rate.clone())))
            .collect::<Result<Vec<_>>>()?;
        let arrival = PiecewiseCurve::new(self.arrival.clone(), horizon)?;
        Ok(Scenario::new(nodes, arrival, self.deadline)?.with_cells(self.grid_cells()))
    }
}

fn node(name: &str, energy: Vec<Term>) -> NodeSpec {
    NodeSpec {
        name: name.into(),
        rate: RateFunction::shannon(),
        energy,
    }
}

fn two_hop(deadline: f64, source: Vec<Term>, relay: Vec<Term>, arrival: Vec<Term>) -> ScenarioFile {
    ScenarioFile {
        deadline,
        horizon: None,
        cells: None,
        dt: None,
        epsilon: None,
        output: None,
        arrival,
        nodes: vec![node("source", source), node("relay", relay)],
    }
}

/// Names accepted by [`builtin`].
pub const BUILTINS: [&str; 4] = ["ex1", "ex2", "ex3", "cubic"];

/// Built-in scenarios, all with `log2(1 + p)` on every hop:
///
/// * `ex1`: `E_s = 100t² + 1`, `E_r = 0.5e^{7t} - 0.5`, `B_s = 10t² + 0.1`, `T = 0.6`.
/// * `ex2`: `E_s = 3.5(t-1)⁵ + 3.5`, `E_r = 0.45t⁴`, `B_s = 2(t-1)⁵ + 2`, `T = 1.9`.
/// * `ex3`: `E_s = 80(t-1)³ + 80`, `E_r = e^{t³}`, `B_s = 3.5(t-1)³ + 3.5`, `T = 2`, `ε = 1e-5`.
/// * `cubic`: single hop, `E = 5(t-1)³ + 5`, a large buffered backlog, `T = 1`.
pub fn builtin(name: &str) -> Option<ScenarioFile> {
    match name {
        "ex1" => Some(two_hop(
            0.6,
            vec![Term::poly(100.0, 0.0, 2.0, 1.0)],
            vec![Term::exp(0.5, 7.0, 1.0), Term::constant(-0.5)],
            vec![Term::poly(10.0, 0.0, 2.0, 0.1)],
        )),
        "ex2" => Some(two_hop(
            1.9,
            vec![Term::poly(3.5, 1.0, 5.0, 3.5)],
            vec![Term::poly(0.45, 0.0, 4.0, 0.0)],
            vec![Term::poly(2.0, 1.0, 5.0, 2.0)],
        )),
        "ex3" => Some(ScenarioFile {
            epsilon: Some(1e-5),
            ..two_hop(
                2.0,
                vec![Term::poly(80.0, 1.0, 3.0, 80.0)],
                vec![Term::exp(1.0, 1.0, 3.0)],
                vec![Term::poly(3.5, 1.0, 3.0, 3.5)],
            )
        }),
        "cubic" => Some(ScenarioFile {
            deadline: 1.0,
            horizon: None,
            cells: None,
            dt: None,
            epsilon: None,
            output: None,
            arrival: vec![Term::step(1e6, 0.0)],
            nodes: vec![node("source", vec![Term::poly(5.0, 1.0, 3.0, 5.0)])],
        }),
        _ => None,
    }
}
