// SPDX-License-Identifier: Apache-2.0
//! Cycle and resource report by summation of per-function costs.

use std::fmt::Write as _;

use serde::Serialize;

use crate::codegen::Wrapper;
use crate::costs::{CostTable, Resources};
use crate::scheduler::{critical_path_cycles, DelaySink, DelaySource, Mode, ScheduledGraph};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReportLine {
    pub item: String,
    pub detail: String,
    pub resources: Resources,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Report {
    pub design: String,
    pub mode: Mode,
    /// Only reported for pipelined designs.
    pub cycles: Option<u32>,
    pub totals: Resources,
    pub breakdown: Vec<ReportLine>,
}

/// Cost of a delay element: the per-stage cost scales with width, rounded up.
pub fn delay_cost(costs: &CostTable, stages: u32, width: u32) -> Resources {
    let unit = costs.delay_stage();
    let scale = |v: u64| (v * width as u64).div_ceil(32) * stages as u64;
    Resources::new(scale(unit.lut), scale(unit.ff), scale(unit.dsp), scale(unit.bram))
}

pub fn estimate(g: &ScheduledGraph, costs: &CostTable, mode: Mode) -> Report {
    let mut breakdown = Vec::new();
    for n in &g.tree.nodes {
        breakdown.push(ReportLine {
            item: format!("{} {}", n.address, n.op.module_name()),
            detail: n.results.join(", "),
            resources: costs.resources(&n.op),
        });
    }
    for (i, d) in g.delays.iter().enumerate() {
        let src = match &d.source {
            DelaySource::Input(n) => n.clone(),
            DelaySource::Node { address, result } => g.tree.nodes[*address].results[*result].clone(),
        };
        let dst = match &d.sink {
            DelaySink::Node { address, port } => format!("node {address}:{port}"),
            DelaySink::Output(o) => format!("output {o}"),
        };
        breakdown.push(ReportLine {
            item: format!("delay {i}"),
            detail: format!("{src} -> {dst}, {} x {} bit", d.stages, d.width),
            resources: delay_cost(costs, d.stages, d.width),
        });
    }
    if mode == Mode::Pipelined && !g.tree.nodes.is_empty() {
        let w = Wrapper::new(g.total_cycles);
        breakdown.push(ReportLine {
            item: "control".into(),
            detail: format!("{}-bit counter and comparator", w.width),
            resources: Resources::new(w.width as u64, w.width as u64, 0, 0),
        });
    }
    let totals = breakdown.iter().fold(Resources::ZERO, |acc, l| acc + l.resources);
    Report {
        design: g.tree.name.clone(),
        mode,
        cycles: (mode == Mode::Pipelined).then(|| critical_path_cycles(g)),
        totals,
        breakdown,
    }
}

fn table(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(String::len).max().unwrap_or(0))
        .collect();
    let mut s = String::new();
    for r in rows {
        let cells: Vec<String> = r.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        writeln!(s, "{}", cells.join("  ").trim_end()).unwrap();
    }
    s
}

fn res_cells(r: &Resources) -> [String; 4] {
    [
        r.lut.to_string(),
        r.ff.to_string(),
        r.dsp.to_string(),
        r.bram.to_string(),
    ]
}

/// The summary row, then the breakdown whose rows sum to the totals.
pub fn emit_report(r: &Report) -> String {
    let mut s = String::new();
    let cycles = r.cycles.map_or("NA".to_string(), |c| c.to_string());
    let mut head = vec![["Design", "Mode", "Cycles", "LUT", "FF", "DSP", "BRAM"]
        .map(String::from)
        .to_vec()];
    let mut row = vec![r.design.clone(), r.mode.to_string(), cycles];
    row.extend(res_cells(&r.totals));
    head.push(row);
    s.push_str(&table(&head));
    s.push_str("\nBreakdown\n");
    let mut rows = vec![["Item", "Detail", "LUT", "FF", "DSP", "BRAM"]
        .map(String::from)
        .to_vec()];
    for l in &r.breakdown {
        let mut row = vec![l.item.clone(), l.detail.clone()];
        row.extend(res_cells(&l.resources));
        rows.push(row);
    }
    let mut total = vec!["total".to_string(), String::new()];
    total.extend(res_cells(&r.totals));
    rows.push(total);
    s.push_str(&table(&rows));
    s
}
