// SPDX-License-Identifier: Apache-2.0
//! Single-assignment wire names.
//!
//! Every node result gets its own wire. The first assignment of a name keeps
//! it and later ones become `name_v1`, `name_v2`, ... An output port is
//! always driven by the net that carries the final value, so when that
//! net is not the port itself (pipelined alignment delay) or is not the
//! first assignment, the earlier versions of an output name take `_vK`
//! suffixes starting at `_v0`.

use std::collections::{BTreeMap, BTreeSet};

use crate::frontend::Operand;
use crate::ir::PrevAddress;
use crate::scheduler::{port_edges, result_index, DelaySink, DelaySource, ScheduledGraph};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetNamer {
    /// Wire per node, per result.
    nodes: Vec<Vec<String>>,
    /// Assignment counter value per node, per result.
    versions: Vec<Vec<u32>>,
    delays: Vec<String>,
    /// (name, version) -> wire
    by_version: BTreeMap<(String, u32), String>,
}

impl NetNamer {
    pub fn result(&self, address: usize, result: usize) -> &str {
        &self.nodes[address][result]
    }

    pub fn version(&self, address: usize, result: usize) -> u32 {
        self.versions[address][result]
    }

    pub fn wire(&self, name: &str, version: u32) -> Option<&str> {
        self.by_version.get(&(name.to_string(), version)).map(String::as_str)
    }

    pub fn delay(&self, index: usize) -> &str {
        &self.delays[index]
    }

    pub fn source(&self, s: &DelaySource) -> String {
        match s {
            DelaySource::Input(n) => n.clone(),
            DelaySource::Node { address, result } => self.result(*address, *result).to_string(),
        }
    }

    /// Net or literal connected to input `port` of node `address`.
    pub fn operand(&self, g: &ScheduledGraph, address: usize, port: usize) -> String {
        let sink = DelaySink::Node { address, port };
        if let Some(i) = g.delays.iter().position(|d| d.sink == sink) {
            return self.delays[i].clone();
        }
        let e = &port_edges(&g.tree, &g.tree.nodes[address])[port];
        match (&e.constant, &e.source) {
            (Some(c), _) => c.verilog_literal(),
            (None, Some(s)) => self.source(s),
            (None, None) => unreachable!("port has a constant or a source"),
        }
    }
}

/// Names every node result and delay output of `g`.
pub fn rename_signals(g: &ScheduledGraph) -> NetNamer {
    let t = &g.tree;
    let mut taken: BTreeSet<String> = t.inputs.iter().chain(&t.outputs).cloned().collect();
    for n in &t.nodes {
        taken.extend(n.results.iter().cloned());
        for o in &n.operands {
            if let Operand::Name(s) = o {
                taken.insert(s.clone());
            }
        }
    }
    // Nets that drive an output port directly carry the port name.
    let mut port_driver: BTreeMap<(usize, usize), String> = BTreeMap::new();
    for (o, p) in t.outputs.iter().zip(&t.output_prev) {
        if g.delays.iter().any(|d| d.sink == DelaySink::Output(o.clone())) {
            continue;
        }
        if let PrevAddress::Single(a) = *p {
            port_driver.insert((a, result_index(&t.nodes[a], o)), o.clone());
        }
    }
    let mut counter: BTreeMap<&str, u32> = BTreeMap::new();
    let mut nodes = Vec::with_capacity(t.nodes.len());
    let mut versions = Vec::with_capacity(t.nodes.len());
    let mut by_version = BTreeMap::new();
    let mut used: BTreeSet<String> = BTreeSet::new();
    for n in &t.nodes {
        let mut wires = Vec::new();
        let mut vs = Vec::new();
        for (i, r) in n.results.iter().enumerate() {
            let c = counter.entry(r.as_str()).or_insert(0);
            let v = *c;
            *c += 1;
            let wire = if let Some(port) = port_driver.get(&(n.address, i)) {
                port.clone()
            } else if v == 0 && !t.outputs.contains(r) {
                r.clone()
            } else {
                fresh(&format!("{r}_v{v}"), &taken, &used)
            };
            used.insert(wire.clone());
            by_version.insert((r.clone(), v), wire.clone());
            wires.push(wire);
            vs.push(v);
        }
        nodes.push(wires);
        versions.push(vs);
    }
    let delays = (0..g.delays.len()).map(|i| format!("hls_dly{i}")).collect();
    NetNamer {
        nodes,
        versions,
        delays,
        by_version,
    }
}

/// `base`, or `base_` repeated until it clashes with neither a source name
/// nor an already issued wire.
fn fresh(base: &str, taken: &BTreeSet<String>, used: &BTreeSet<String>) -> String {
    let mut w = base.to_string();
    while taken.contains(&w) || used.contains(&w) {
        w.push('_');
    }
    w
}
