// SPDX-License-Identifier: Apache-2.0
//! Top module and per-block if/else modules.
//!
//! Every node and delay element becomes one instance. Instances inside an
//! if/else block live in that block's module; compares and merges live in
//! the enclosing scope, so the block module only computes both branches and
//! the select happens at its boundary.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use super::library::LIBRARY_MODULES;
use super::namer::NetNamer;
use super::VerilogFile;
use crate::frontend::is_reserved;
use crate::ops::OpKind;
use crate::scheduler::{DelaySink, Mode, ScheduledGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dir {
    Input,
    Output,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Port {
    pub dir: Dir,
    pub name: String,
    pub width: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstanceKind {
    Node(usize),
    Delay(usize),
    Block(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub kind: InstanceKind,
    pub module: String,
    pub params: Vec<(String, u64)>,
    pub name: String,
    /// (port, net or literal), inputs first.
    pub conns: Vec<(String, String)>,
    pub outputs: Vec<String>,
    pub comment: String,
}

/// Control wrapper of a pipelined top module.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Wrapper {
    pub total_cycles: u32,
    pub width: u32,
}

impl Wrapper {
    pub fn new(total_cycles: u32) -> Self {
        let target = total_cycles.max(1);
        Wrapper {
            total_cycles: target,
            width: counter_width(target),
        }
    }
}

/// Bits needed to count from 0 to `t` inclusive, at least 1.
pub fn counter_width(t: u32) -> u32 {
    (u32::BITS - t.leading_zeros()).max(1)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmitPlan {
    pub module: String,
    pub file: String,
    pub ports: Vec<Port>,
    pub wires: Vec<(String, u32)>,
    pub instances: Vec<Instance>,
    pub wrapper: Option<Wrapper>,
    pub header: String,
}

/// Verilog module name for a design: identifier characters only, never a
/// library module or keyword.
pub fn module_ident(design: &str) -> String {
    let mut s: String = design
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
        .collect();
    if s.is_empty() || s.starts_with(|c: char| c.is_ascii_digit()) {
        s.insert_str(0, "d_");
    }
    if is_reserved(&s) || LIBRARY_MODULES.contains(&s.as_str()) {
        s.push_str("_top");
    }
    s
}

pub fn block_module(design: &str, k: usize) -> String {
    format!("{}_ifelse_{k}", module_ident(design))
}

struct Leaf {
    inst: Instance,
    scope: Option<usize>,
    reads: Vec<String>,
}

fn is_literal(net: &str) -> bool {
    net.starts_with(|c: char| c.is_ascii_digit())
}

fn node_ports(op: &OpKind) -> (&'static [&'static str], &'static [&'static str]) {
    match op {
        OpKind::Sqrt | OpKind::Value => (&["a"], &["res"]),
        OpKind::SinCosTan => (&["a"], &["sin_res", "cos_res", "tan_res"]),
        OpKind::Merge => (&["a_if", "a_else", "sel"], &["res"]),
        _ => (&["a", "b"], &["res"]),
    }
}

fn leaves(g: &ScheduledGraph, namer: &NetNamer) -> Vec<Leaf> {
    let t = &g.tree;
    let mut out = Vec::new();
    for n in &t.nodes {
        let scope = n.block.map(|b| b.id);
        let n_in = n.input_ports().len();
        let ins: Vec<String> = (0..n_in).map(|p| namer.operand(g, n.address, p)).collect();
        let outs: Vec<String> = (0..n.results.len())
            .map(|r| namer.result(n.address, r).to_string())
            .collect();
        let mut conns = Vec::new();
        let mut params = Vec::new();
        let module;
        if let Some(sig) = &n.call {
            module = sig.module.clone();
            if sig.clocked {
                conns.push(("clk".to_string(), "clk".to_string()));
            }
            if sig.resettable {
                conns.push(("rst".to_string(), "rst".to_string()));
            }
            conns.extend(sig.inputs.iter().cloned().zip(ins.iter().cloned()));
            conns.extend(sig.outputs.iter().cloned().zip(outs.iter().cloned()));
        } else {
            module = n.op.module_name().to_string();
            if let (OpKind::IfCompare, Some(c)) = (&n.op, n.condition) {
                params.push(("OP".to_string(), c.code() as u64));
            }
            if n.delay_cycles != 1 {
                params.push(("LATENCY".to_string(), n.delay_cycles as u64));
            }
            conns.push(("clk".to_string(), "clk".to_string()));
            conns.push(("rst".to_string(), "rst".to_string()));
            let (pi, po) = node_ports(&n.op);
            conns.extend(pi.iter().map(|p| p.to_string()).zip(ins.iter().cloned()));
            conns.extend(po.iter().map(|p| p.to_string()).zip(outs.iter().cloned()));
        }
        out.push(Leaf {
            inst: Instance {
                kind: InstanceKind::Node(n.address),
                module,
                params,
                name: format!("hls_u{}", n.address),
                conns,
                outputs: outs,
                comment: format!("line {}: {}", n.origin.line, n.origin.text),
            },
            scope,
            reads: ins.into_iter().filter(|s| !is_literal(s)).collect(),
        });
    }
    for (i, d) in g.delays.iter().enumerate() {
        let scope = match &d.sink {
            DelaySink::Node { address, .. } => t.nodes[*address].block.map(|b| b.id),
            DelaySink::Output(_) => None,
        };
        let src = namer.source(&d.source);
        let (q, target) = match &d.sink {
            DelaySink::Node { address, port } => (namer.delay(i).to_string(), format!("node {address} port {port}")),
            DelaySink::Output(o) => (o.clone(), format!("output {o}")),
        };
        out.push(Leaf {
            inst: Instance {
                kind: InstanceKind::Delay(i),
                module: "Delay_V".to_string(),
                params: vec![
                    ("STAGES".to_string(), d.stages as u64),
                    ("WIDTH".to_string(), d.width as u64),
                ],
                name: format!("hls_d{i}"),
                conns: vec![
                    ("clk".to_string(), "clk".to_string()),
                    ("rst".to_string(), "rst".to_string()),
                    ("d".to_string(), src.clone()),
                    ("q".to_string(), q.clone()),
                ],
                outputs: vec![q],
                comment: format!("align {src} to {target}, {} cycle(s)", d.stages),
            },
            scope,
            reads: vec![src],
        });
    }
    out
}

struct Scopes<'a> {
    g: &'a ScheduledGraph,
}

impl Scopes<'_> {
    fn parent(&self, k: usize) -> Option<usize> {
        self.g.tree.blocks[k].parent.map(|p| p.id)
    }

    fn within(&self, scope: Option<usize>, k: usize) -> bool {
        let mut s = scope;
        while let Some(b) = s {
            if b == k {
                return true;
            }
            s = self.parent(b);
        }
        false
    }

    /// The child of `outer` on the path to `scope`, if `scope` is strictly
    /// inside `outer`.
    fn child_towards(&self, outer: Option<usize>, scope: Option<usize>) -> Option<usize> {
        let mut s = scope?;
        loop {
            let p = self.parent(s);
            if p == outer {
                return Some(s);
            }
            s = p?;
        }
    }
}

/// One plan per module: the top first, then one per block in id order.
pub fn plan_design(g: &ScheduledGraph, mode: Mode, namer: &NetNamer) -> Vec<EmitPlan> {
    let t = &g.tree;
    let scopes = Scopes { g };
    let leaves = leaves(g, namer);

    let mut order: BTreeMap<String, usize> = BTreeMap::new();
    let mut width: BTreeMap<String, u32> = BTreeMap::new();
    for i in &t.inputs {
        let k = order.len();
        order.entry(i.clone()).or_insert(k);
        width.insert(i.clone(), 32);
    }
    for l in &leaves {
        for o in &l.inst.outputs {
            let k = order.len();
            order.entry(o.clone()).or_insert(k);
        }
        let w = match l.inst.kind {
            InstanceKind::Node(a) if t.nodes[a].op == OpKind::IfCompare => 1,
            InstanceKind::Delay(i) => g.delays[i].width,
            _ => 32,
        };
        for o in &l.inst.outputs {
            width.insert(o.clone(), w);
        }
    }
    let by_order = |set: BTreeSet<String>| {
        let mut v: Vec<String> = set.into_iter().collect();
        v.sort_by_key(|n| order.get(n).copied().unwrap_or(usize::MAX));
        v
    };

    // Block module ports from the free nets of each subtree.
    let mut block_ports: Vec<(Vec<String>, Vec<String>)> = Vec::new();
    for k in 0..t.blocks.len() {
        let mut reads = BTreeSet::new();
        let mut produced = BTreeSet::new();
        let mut outside = BTreeSet::new();
        for l in &leaves {
            if scopes.within(l.scope, k) {
                reads.extend(l.reads.iter().cloned());
                produced.extend(l.inst.outputs.iter().cloned());
            } else {
                outside.extend(l.reads.iter().cloned());
            }
        }
        outside.extend(t.outputs.iter().cloned());
        let ins = by_order(reads.difference(&produced).cloned().collect());
        let outs = by_order(produced.intersection(&outside).cloned().collect());
        block_ports.push((ins, outs));
    }

    let mut plans = Vec::new();
    let scope_list: Vec<Option<usize>> = std::iter::once(None).chain((0..t.blocks.len()).map(Some)).collect();
    for scope in scope_list {
        let mut ports = vec![
            Port {
                dir: Dir::Input,
                name: "clk".into(),
                width: 1,
            },
            Port {
                dir: Dir::Input,
                name: "rst".into(),
                width: 1,
            },
        ];
        let wrapper = (scope.is_none() && mode == Mode::Pipelined).then(|| Wrapper::new(g.total_cycles));
        match scope {
            None => {
                if wrapper.is_some() {
                    ports.push(Port {
                        dir: Dir::Input,
                        name: "start".into(),
                        width: 1,
                    });
                }
                for i in &t.inputs {
                    ports.push(Port {
                        dir: Dir::Input,
                        name: i.clone(),
                        width: 32,
                    });
                }
                for o in &t.outputs {
                    ports.push(Port {
                        dir: Dir::Output,
                        name: o.clone(),
                        width: 32,
                    });
                }
                if wrapper.is_some() {
                    for n in ["busy", "valid"] {
                        ports.push(Port {
                            dir: Dir::Output,
                            name: n.into(),
                            width: 1,
                        });
                    }
                }
            }
            Some(k) => {
                let (ins, outs) = &block_ports[k];
                for (dir, list) in [(Dir::Input, ins), (Dir::Output, outs)] {
                    for n in list {
                        ports.push(Port {
                            dir,
                            name: n.clone(),
                            width: width.get(n).copied().unwrap_or(32),
                        });
                    }
                }
            }
        }

        let mut instances = Vec::new();
        let mut opened = BTreeSet::new();
        for n in &t.nodes {
            let ns = n.block.map(|b| b.id);
            if ns == scope {
                for l in &leaves {
                    if let InstanceKind::Delay(i) = l.inst.kind {
                        if matches!(g.delays[i].sink, DelaySink::Node { address, .. } if address == n.address) {
                            instances.push(l.inst.clone());
                        }
                    }
                }
                instances.push(leaves[n.address].inst.clone());
            } else if let Some(b) = scopes.child_towards(scope, ns) {
                if opened.insert(b) {
                    let info = &t.blocks[b];
                    let (ins, outs) = &block_ports[b];
                    let mut conns = vec![
                        ("clk".to_string(), "clk".to_string()),
                        ("rst".to_string(), "rst".to_string()),
                    ];
                    conns.extend(ins.iter().chain(outs).map(|p| (p.clone(), p.clone())));
                    instances.push(Instance {
                        kind: InstanceKind::Block(b),
                        module: block_module(&t.name, b),
                        params: Vec::new(),
                        name: format!("hls_b{b}"),
                        conns,
                        outputs: outs.clone(),
                        comment: format!("line {}: both branches of {}", info.origin.line, info.origin.text),
                    });
                }
            }
        }
        if scope.is_none() {
            for l in &leaves {
                if let InstanceKind::Delay(i) = l.inst.kind {
                    if matches!(g.delays[i].sink, DelaySink::Output(_)) {
                        instances.push(l.inst.clone());
                    }
                }
            }
        }

        let port_names: BTreeSet<&str> = ports.iter().map(|p| p.name.as_str()).collect();
        let produced: BTreeSet<String> = instances.iter().flat_map(|i| i.outputs.iter().cloned()).collect();
        let wires = by_order(
            produced
                .into_iter()
                .filter(|n| !port_names.contains(n.as_str()))
                .collect(),
        )
        .into_iter()
        .map(|n| {
            let w = width.get(&n).copied().unwrap_or(32);
            (n, w)
        })
        .collect();
        let (module, file, header) = match scope {
            None => (
                module_ident(&t.name),
                "top.v".to_string(),
                format!(
                    "// {} datapath of `{}`, {} cycle(s) from inputs to outputs.",
                    mode, t.name, g.total_cycles
                ),
            ),
            Some(k) => {
                let info = &t.blocks[k];
                (
                    block_module(&t.name, k),
                    format!("ifelse_{k}.v"),
                    format!(
                        "// Both branches of the if/else at line {}: {}\n// The enclosing module selects between them.",
                        info.origin.line, info.origin.text
                    ),
                )
            }
        };
        plans.push(EmitPlan {
            module,
            file,
            ports,
            wires,
            instances,
            wrapper,
            header,
        });
    }
    plans
}

fn range(width: u32) -> String {
    if width == 1 {
        String::new()
    } else {
        format!("[{}:0] ", width - 1)
    }
}

pub fn render(plan: &EmitPlan) -> String {
    let mut s = String::new();
    writeln!(s, "{}", plan.header).unwrap();
    writeln!(s, "module {} (", plan.module).unwrap();
    for (i, p) in plan.ports.iter().enumerate() {
        let dir = match p.dir {
            Dir::Input => "input",
            Dir::Output => "output",
        };
        let sep = if i + 1 == plan.ports.len() { "" } else { "," };
        writeln!(s, "    {dir} {}{}{sep}", range(p.width), p.name).unwrap();
    }
    writeln!(s, ");").unwrap();
    for (n, w) in &plan.wires {
        writeln!(s, "    wire {}{n};", range(*w)).unwrap();
    }
    if let Some(w) = plan.wrapper {
        let cw = w.width;
        let t = format!("{cw}'d{}", w.total_cycles);
        write!(
            s,
            "
    // control: start launches one computation, valid marks the cycle in
    // which the outputs hold its result
    reg {r}hls_cnt;
    reg hls_busy;
    always @(posedge clk) begin
        if (rst) begin
            hls_cnt <= {cw}'d0;
            hls_busy <= 1'b0;
        end else if (!hls_busy) begin
            if (start) begin
                hls_busy <= 1'b1;
                hls_cnt <= {cw}'d1;
            end
        end else if (hls_cnt == {t}) begin
            hls_busy <= 1'b0;
            hls_cnt <= {cw}'d0;
        end else begin
            hls_cnt <= hls_cnt + {cw}'d1;
        end
    end
    assign busy = hls_busy;
    assign valid = hls_busy && (hls_cnt == {t});
",
            r = range(cw),
        )
        .unwrap();
    }
    for inst in &plan.instances {
        writeln!(s).unwrap();
        writeln!(s, "    // {}", inst.comment).unwrap();
        let params = if inst.params.is_empty() {
            String::new()
        } else {
            let p: Vec<String> = inst.params.iter().map(|(k, v)| format!(".{k}({v})")).collect();
            format!(" #({})", p.join(", "))
        };
        let conns: Vec<String> = inst.conns.iter().map(|(p, n)| format!(".{p}({n})")).collect();
        writeln!(s, "    {}{params} {} ({});", inst.module, inst.name, conns.join(", ")).unwrap();
    }
    writeln!(s, "endmodule").unwrap();
    s
}

pub fn emit_top(g: &ScheduledGraph, mode: Mode, namer: &NetNamer) -> VerilogFile {
    let plan = &plan_design(g, mode, namer)[0];
    VerilogFile {
        name: plan.file.clone(),
        text: render(plan),
    }
}

/// The module for block `k`, or `None` when the graph has no such block.
pub fn emit_ifelse_module(g: &ScheduledGraph, mode: Mode, namer: &NetNamer, k: usize) -> Option<VerilogFile> {
    let plans = plan_design(g, mode, namer);
    plans.get(k + 1).map(|p| VerilogFile {
        name: p.file.clone(),
        text: render(p),
    })
}

/// `top.v` followed by one `ifelse_<k>.v` per block.
pub fn emit_design(g: &ScheduledGraph, mode: Mode) -> Vec<VerilogFile> {
    let namer = super::rename_signals(g);
    plan_design(g, mode, &namer)
        .iter()
        .map(|p| VerilogFile {
            name: p.file.clone(),
            text: render(p),
        })
        .collect()
}
