use std::io;
use std::path::Path;

use ehflow_core::{Scenario, Schedule};
use serde::Serialize;

/// 12 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.11e}")
}

fn write_rows(path: &Path, header: Vec<String>, rows: impl Iterator<Item = Vec<f64>>) -> io::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(&header)?;
    for row in rows {
        w.write_record(row.into_iter().map(num))?;
    }
    w.flush()
}

/// One row per grid time: `t, p_node*, E_tx_node*, B_tx_node*, E_in_node*, B_in_source`.
///
/// Power is piecewise constant per cell; the final row repeats the last cell's power.
pub fn write_schedules(path: &Path, scenario: &Scenario, schedules: &[Schedule]) -> io::Result<()> {
    let n = schedules.len();
    let mut header = vec!["t".to_string()];
    for prefix in ["p", "E_tx", "B_tx", "E_in"] {
        header.extend((0..n).map(|i| format!("{prefix}_node{i}")));
    }
    header.push("B_in_source".into());

    let times = &schedules[0].times;
    let rows = times.iter().enumerate().map(|(k, &t)| {
        let cell = k.min(times.len() - 2);
        let mut row = vec![t];
        row.extend(schedules.iter().map(|s| s.power[cell]));
        row.extend(schedules.iter().map(|s| s.energy[k]));
        row.extend(schedules.iter().map(|s| s.data[k]));
        row.extend(scenario.nodes.iter().map(|node| node.energy.eval(t).unwrap_or(f64::NAN)));
        row.push(scenario.arrival.eval(t).unwrap_or(f64::NAN));
        row
    });
    write_rows(path, header, rows)
}

/// Data delivered to the receiver under the offline optimum and both online variants.
pub fn write_comparison(path: &Path, times: &[f64], columns: [&[f64]; 3]) -> io::Result<()> {
    let header = ["t", "B_out_offline", "B_out_proposed", "B_out_benchmark"]
        .map(String::from)
        .to_vec();
    let rows = times
        .iter()
        .enumerate()
        .map(|(k, &t)| vec![t, columns[0][k], columns[1][k], columns[2][k]]);
    write_rows(path, header, rows)
}

#[derive(Serialize)]
pub struct NodeSummary {
    pub name: String,
    pub energy_used: f64,
    pub data_sent: f64,
    /// Last contact time of the energy-minimizing tangent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t1: Option<f64>,
}

impl NodeSummary {
    pub fn from_schedules(scenario: &Scenario, schedules: &[Schedule], t1: &[Option<f64>]) -> Vec<Self> {
        scenario
            .nodes
            .iter()
            .zip(schedules)
            .enumerate()
            .map(|(i, (node, s))| NodeSummary {
                name: node.name.clone(),
                energy_used: s.energy_used(),
                data_sent: s.delivered(),
                t1: t1.get(i).copied().flatten(),
            })
            .collect()
    }
}

#[derive(Serialize, Default)]
pub struct Summary {
    pub command: String,
    pub scenario: String,
    pub deadline: f64,
    pub cells: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delivered: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_off: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_bits: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub offline: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub proposed: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub benchmark: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty", rename = "node")]
    pub nodes: Vec<NodeSummary>,
}

#[derive(Serialize)]
pub struct OracleSummary {
    pub slots: usize,
    pub levels: Vec<f64>,
    pub oracle_delivered: f64,
    pub oracle_source_energy: f64,
    pub slotted_solver_delivered: f64,
    pub slotted_solver_source_energy: f64,
    pub continuous_delivered: f64,
    pub certified: bool,
}

impl Summary {
    pub fn render(&self) -> String {
        toml::to_string(self).expect("summaries always serialize")
    }
}
