// SPDX-License-Identifier: Apache-2.0
//! ASAP level assignment and delay balancing.
//!
//! Time is counted in clock cycles. Inputs and constants are valid at time
//! 0; a node starting at level `s` with latency `d` has its result at
//! `s + d - 1`. In pipelined mode every edge whose producer finishes early
//! gets a shift register so the operand arrives exactly when the consumer
//! starts, and every output is aligned to the overall latency.

pub mod fuzz;

use std::fmt::Write as _;

use crate::frontend::Operand;
use crate::ir::{PrevAddress, TreeArray, TreeNode};
use crate::ops::OpKind;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DelaySource {
    Input(String),
    Node { address: usize, result: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DelaySink {
    /// Hardware input port index, counting both halves of a merge pair.
    Node {
        address: usize,
        port: usize,
    },
    Output(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DelayElement {
    pub source: DelaySource,
    pub sink: DelaySink,
    pub stages: u32,
    pub width: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduledGraph {
    pub tree: TreeArray,
    pub start: Vec<u32>,
    pub finish: Vec<u32>,
    pub delays: Vec<DelayElement>,
    pub total_cycles: u32,
}

/// One resolved hardware input port of a node.
#[derive(Debug, Clone, PartialEq)]
pub struct PortEdge {
    pub port: usize,
    pub source: Option<DelaySource>,
    /// Set for constant operands.
    pub constant: Option<crate::fixedpoint::Fixed>,
    pub width: u32,
}

/// Bit width of the value flowing into `port` of `node`.
pub fn port_width(node: &TreeNode, port: usize) -> u32 {
    if node.op == OpKind::Merge && port == 2 {
        1
    } else {
        32
    }
}

/// Resolves every hardware input port of `node` to its source.
pub fn port_edges(tree: &TreeArray, node: &TreeNode) -> Vec<PortEdge> {
    node.input_ports()
        .into_iter()
        .enumerate()
        .map(|(port, (operand, prev))| {
            let width = port_width(node, port);
            match (operand, prev) {
                (Operand::Const(c), _) => PortEdge {
                    port,
                    source: None,
                    constant: Some(c),
                    width,
                },
                (Operand::Name(n), PrevAddress::Single(a)) => PortEdge {
                    port,
                    source: Some(DelaySource::Node {
                        address: a,
                        result: result_index(&tree.nodes[a], &n),
                    }),
                    constant: None,
                    width,
                },
                (Operand::Name(n), _) => PortEdge {
                    port,
                    source: Some(DelaySource::Input(n)),
                    constant: None,
                    width,
                },
            }
        })
        .collect()
}

pub fn result_index(node: &TreeNode, name: &str) -> usize {
    node.results
        .iter()
        .position(|r| r == name)
        .expect("producer holds the operand name")
}

impl ScheduledGraph {
    pub fn source_finish(&self, s: &DelaySource) -> u32 {
        match s {
            DelaySource::Input(_) => 0,
            DelaySource::Node { address, .. } => self.finish[*address],
        }
    }

    /// Finish time of the value driving each output, parallel to `tree.outputs`.
    pub fn output_finish(&self) -> Vec<u32> {
        self.tree
            .output_prev
            .iter()
            .map(|p| p.addresses().iter().map(|&a| self.finish[a]).max().unwrap_or(0))
            .collect()
    }

    pub fn delay_stage_total(&self) -> u64 {
        self.delays.iter().map(|d| d.stages as u64).sum()
    }

    /// `addr | level | finish` per node, then the delay list.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        writeln!(s, "# {} total_cycles={}", self.tree.name, self.total_cycles).unwrap();
        writeln!(s, "# addr | level | finish").unwrap();
        for n in &self.tree.nodes {
            writeln!(
                s,
                "{} | {} | {}",
                n.address, self.start[n.address], self.finish[n.address]
            )
            .unwrap();
        }
        writeln!(s, "# delays: source -> sink | stages | width").unwrap();
        for d in &self.delays {
            let src = match &d.source {
                DelaySource::Input(n) => format!("input {n}"),
                DelaySource::Node { address, result } => format!("node {address}.{result}"),
            };
            let sink = match &d.sink {
                DelaySink::Node { address, port } => format!("node {address}:{port}"),
                DelaySink::Output(n) => format!("output {n}"),
            };
            writeln!(s, "{src} -> {sink} | {} | {}", d.stages, d.width).unwrap();
        }
        s
    }
}

/// ASAP schedule without delays.
pub fn assign_levels(tree: &TreeArray) -> ScheduledGraph {
    let n = tree.nodes.len();
    let mut start = vec![0u32; n];
    let mut finish = vec![0u32; n];
    for node in &tree.nodes {
        let ready = node.producers().iter().map(|&p| finish[p]).max().unwrap_or(0);
        start[node.address] = ready + 1;
        finish[node.address] = ready + node.delay_cycles.max(1);
    }
    let mut g = ScheduledGraph {
        tree: tree.clone(),
        start,
        finish,
        delays: Vec::new(),
        total_cycles: 0,
    };
    g.total_cycles = g.output_finish().into_iter().max().unwrap_or(0);
    g
}

/// Adds one delay element per early edge and per early output.
pub fn insert_delays(g: &ScheduledGraph) -> ScheduledGraph {
    let mut out = g.clone();
    out.delays.clear();
    for node in &g.tree.nodes {
        for e in port_edges(&g.tree, node) {
            let Some(src) = e.source else { continue };
            let gap = g.start[node.address] - g.source_finish(&src) - 1;
            if gap > 0 {
                out.delays.push(DelayElement {
                    source: src,
                    sink: DelaySink::Node {
                        address: node.address,
                        port: e.port,
                    },
                    stages: gap,
                    width: e.width,
                });
            }
        }
    }
    for (o, (prev, f)) in g
        .tree
        .outputs
        .iter()
        .zip(g.tree.output_prev.iter().zip(g.output_finish()))
    {
        if let PrevAddress::Single(a) = *prev {
            if f < g.total_cycles {
                out.delays.push(DelayElement {
                    source: DelaySource::Node {
                        address: a,
                        result: result_index(&g.tree.nodes[a], o),
                    },
                    sink: DelaySink::Output(o.clone()),
                    stages: g.total_cycles - f,
                    width: 32,
                });
            }
        }
    }
    out
}

pub fn critical_path_cycles(g: &ScheduledGraph) -> u32 {
    g.total_cycles
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, clap::ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Unrolled,
    Pipelined,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Unrolled => "unrolled",
            Mode::Pipelined => "pipelined",
        })
    }
}

/// Levels for both modes; delays only for pipelined.
pub fn schedule(tree: &TreeArray, mode: Mode) -> ScheduledGraph {
    let g = assign_levels(tree);
    match mode {
        Mode::Unrolled => g,
        Mode::Pipelined => insert_delays(&g),
    }
}
