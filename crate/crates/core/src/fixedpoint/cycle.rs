// SPDX-License-Identifier: Apache-2.0
//! Register-level model of a scheduled datapath.
//!
//! Every operator output passes through `delay_cycles` registers and every
//! delay element is a shift register. Inputs are sampled on the clock edge
//! after they are applied. Domain errors produce 0, as the hardware
//! produces some value regardless.

use std::collections::{BTreeMap, HashMap};

use super::{eval_op, Fixed, SimError};
use crate::ir::PrevAddress;
use crate::ops::OpKind;
use crate::scheduler::{port_edges, result_index, DelaySink, DelaySource, ScheduledGraph};

struct Machine<'a> {
    g: &'a ScheduledGraph,
    /// Per node, per result: register chain, oldest value last.
    regs: Vec<Vec<Vec<Fixed>>>,
    delays: Vec<Vec<Fixed>>,
    sink_delay: HashMap<DelaySink, usize>,
}

impl<'a> Machine<'a> {
    fn new(g: &'a ScheduledGraph) -> Result<Self, SimError> {
        for n in &g.tree.nodes {
            if let OpKind::Call(label) = &n.op {
                return Err(SimError::Internal(format!("no behavioural model for `{label}`")));
            }
        }
        let regs = g
            .tree
            .nodes
            .iter()
            .map(|n| vec![vec![Fixed::ZERO; n.delay_cycles.max(1) as usize]; n.results.len()])
            .collect();
        let delays = g.delays.iter().map(|d| vec![Fixed::ZERO; d.stages as usize]).collect();
        let sink_delay = g.delays.iter().enumerate().map(|(i, d)| (d.sink.clone(), i)).collect();
        Ok(Machine {
            g,
            regs,
            delays,
            sink_delay,
        })
    }

    fn source_value(&self, s: &DelaySource, inputs: &BTreeMap<String, Fixed>) -> Result<Fixed, SimError> {
        match s {
            DelaySource::Input(n) => inputs.get(n).copied().ok_or_else(|| SimError::MissingInput(n.clone())),
            DelaySource::Node { address, result } => {
                Ok(*self.regs[*address][*result].last().expect("at least one register"))
            }
        }
    }

    fn clock(&mut self, inputs: &BTreeMap<String, Fixed>) -> Result<(), SimError> {
        let g = self.g;
        let mut next_out = Vec::with_capacity(g.tree.nodes.len());
        for node in &g.tree.nodes {
            let mut args = Vec::new();
            for e in port_edges(&g.tree, node) {
                let sink = DelaySink::Node {
                    address: node.address,
                    port: e.port,
                };
                let v = if let Some(&d) = self.sink_delay.get(&sink) {
                    *self.delays[d].last().expect("stages >= 1")
                } else if let Some(c) = e.constant {
                    c
                } else {
                    self.source_value(e.source.as_ref().expect("named port"), inputs)?
                };
                args.push(v);
            }
            let out = match eval_op(&node.op, node.condition, &args) {
                Ok(r) => r.values,
                Err(_) => vec![Fixed::ZERO; node.results.len()],
            };
            next_out.push(out);
        }
        let mut next_delay = Vec::with_capacity(g.delays.len());
        for d in &g.delays {
            next_delay.push(self.source_value(&d.source, inputs)?);
        }
        for (regs, out) in self.regs.iter_mut().zip(next_out) {
            for (chain, v) in regs.iter_mut().zip(out) {
                chain.pop();
                chain.insert(0, v);
            }
        }
        for (chain, v) in self.delays.iter_mut().zip(next_delay) {
            chain.pop();
            chain.insert(0, v);
        }
        Ok(())
    }

    fn outputs(&self) -> Vec<(String, Fixed)> {
        let t = &self.g.tree;
        t.outputs
            .iter()
            .zip(&t.output_prev)
            .map(|(o, p)| {
                let v = if let Some(&d) = self.sink_delay.get(&DelaySink::Output(o.clone())) {
                    *self.delays[d].last().expect("stages >= 1")
                } else if let PrevAddress::Single(a) = p {
                    *self.regs[*a][result_index(&t.nodes[*a], o)].last().expect("register")
                } else {
                    Fixed::ZERO
                };
                (o.clone(), v)
            })
            .collect()
    }
}

/// Holds one input vector for `total_cycles` edges, as the unrolled
/// design requires, and reads the outputs.
pub fn simulate_held(g: &ScheduledGraph, inputs: &BTreeMap<String, Fixed>) -> Result<Vec<(String, Fixed)>, SimError> {
    let mut m = Machine::new(g)?;
    for _ in 0..g.total_cycles {
        m.clock(inputs)?;
    }
    Ok(m.outputs())
}

/// Applies one vector per cycle and collects each vector's outputs
/// `total_cycles` edges later.
pub fn simulate_streaming(
    g: &ScheduledGraph,
    vectors: &[BTreeMap<String, Fixed>],
) -> Result<Vec<Vec<(String, Fixed)>>, SimError> {
    let mut m = Machine::new(g)?;
    let t = g.total_cycles as usize;
    let mut out = Vec::with_capacity(vectors.len());
    if vectors.is_empty() {
        return Ok(out);
    }
    for edge in 1..=vectors.len() - 1 + t {
        let applied = &vectors[(edge - 1).min(vectors.len() - 1)];
        m.clock(applied)?;
        if edge >= t && edge - t < vectors.len() {
            out.push(m.outputs());
        }
    }
    if t == 0 {
        out = vectors.iter().map(|_| m.outputs()).collect();
    }
    Ok(out)
}
