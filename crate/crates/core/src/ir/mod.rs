// SPDX-License-Identifier: Apache-2.0
//! The binary-tree array: a flat, address-ordered dataflow IR.
//!
//! Each node records its operands, operator, results, the address of the
//! node that last produced each operand, and its latency. Control flow is
//! kept as nested regions so the array can be re-lowered after padding
//! one-sided assignments and after inserting merge nodes.

use std::collections::HashMap;
use std::fmt::{self, Write as _};

use crate::costs::CostTable;
use crate::diag::{DiagCode, Diagnostic, Span};
use crate::frontend::{BlockInfo, BlockRef, Branch, CallSig, Elaborated, Operand, Origin, Statement};
use crate::ops::{Comparison, OpKind};

/// Where an operand's value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PrevAddress {
    /// Primary input or constant (`-1`).
    None,
    Single(usize),
    /// Produced in both branches of a block: `(if_addr, else_addr)`.
    Pair(usize, usize),
}

impl PrevAddress {
    pub fn count(self) -> usize {
        match self {
            PrevAddress::Pair(..) => 2,
            _ => 1,
        }
    }

    pub fn addresses(self) -> Vec<usize> {
        match self {
            PrevAddress::None => vec![],
            PrevAddress::Single(a) => vec![a],
            PrevAddress::Pair(a, b) => vec![a, b],
        }
    }
}

impl fmt::Display for PrevAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PrevAddress::None => f.write_str("-1"),
            PrevAddress::Single(a) => write!(f, "{a}"),
            PrevAddress::Pair(a, b) => write!(f, "({a},{b})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Source,
    /// Inserted in a branch that does not assign a block-assigned name.
    Padding,
    Merge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub address: usize,
    pub op: OpKind,
    pub operands: Vec<Operand>,
    pub results: Vec<String>,
    pub prev: Vec<PrevAddress>,
    pub delay_cycles: u32,
    pub block: Option<BlockRef>,
    pub condition: Option<Comparison>,
    pub opens_block: Option<usize>,
    pub call: Option<CallSig>,
    pub kind: NodeKind,
    pub origin: Origin,
}

impl TreeNode {
    pub fn n_operands(&self) -> usize {
        self.operands.len()
    }

    pub fn n_results(&self) -> usize {
        self.results.len()
    }

    pub fn n_prev_addresses(&self) -> Vec<usize> {
        self.prev.iter().map(|p| p.count()).collect()
    }

    /// Addresses of every node this one reads from.
    pub fn producers(&self) -> Vec<usize> {
        self.prev.iter().flat_map(|p| p.addresses()).collect()
    }

    /// Hardware input ports in order: a merge reads its pair as two ports.
    pub fn input_ports(&self) -> Vec<(Operand, PrevAddress)> {
        let mut out = Vec::new();
        for (o, p) in self.operands.iter().zip(&self.prev) {
            match *p {
                PrevAddress::Pair(a, b) => {
                    out.push((o.clone(), PrevAddress::Single(a)));
                    out.push((o.clone(), PrevAddress::Single(b)));
                }
                _ => out.push((o.clone(), *p)),
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Item {
    Stmt(Box<Statement>),
    Block(usize, Vec<Item>, Vec<Item>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeArray {
    pub name: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub nodes: Vec<TreeNode>,
    pub blocks: Vec<BlockInfo>,
    /// Final producer of each output port, parallel to `outputs`.
    pub output_prev: Vec<PrevAddress>,
    pub padded: bool,
    pub merged: bool,
    regions: Vec<Item>,
    latencies: HashMap<String, u32>,
}

fn internal(msg: impl Into<String>) -> Diagnostic {
    Diagnostic::new(DiagCode::Internal, Span::default(), msg)
}

/// Builds the merge-complete tree used by every later stage.
pub fn build_tree(elab: &Elaborated, costs: &CostTable) -> Result<TreeArray, Diagnostic> {
    let mut t = TreeArray::unlowered(elab, costs)?;
    t.padded = true;
    t.merged = true;
    t.relower()?;
    Ok(t)
}

/// Adds a `Value` node to the deficient branch for every name assigned in
/// only one branch of a block. The node carries the name's value at block
/// entry, or 0 when the name had none. Nested blocks cannot be expressed
/// with pairs alone and fail here; [`insert_merges`] handles them.
pub fn pad_else_branch(tree: &TreeArray) -> Result<TreeArray, Diagnostic> {
    let mut t = tree.clone();
    t.padded = true;
    t.relower()?;
    Ok(t)
}

/// Adds one `Merge` node per block-assigned name after each block. Pads
/// first when needed.
pub fn insert_merges(tree: &TreeArray) -> Result<TreeArray, Diagnostic> {
    let mut t = tree.clone();
    t.padded = true;
    t.merged = true;
    t.relower()?;
    Ok(t)
}

impl TreeArray {
    /// One node per statement, no padding and no merges. Operands read
    /// after a block resolve to `(if_addr, else_addr)` pairs.
    pub fn from_statements(elab: &Elaborated, costs: &CostTable) -> Result<TreeArray, Diagnostic> {
        let mut t = TreeArray::unlowered(elab, costs)?;
        t.relower()?;
        Ok(t)
    }

    fn unlowered(elab: &Elaborated, costs: &CostTable) -> Result<TreeArray, Diagnostic> {
        let mut latencies = HashMap::new();
        for s in &elab.statements {
            if let Some(sig) = &s.call {
                if s.operands.len() != sig.n_inputs() || s.results.len() != sig.n_outputs() {
                    return Err(Diagnostic::new(
                        DiagCode::Arity,
                        Span::new(s.origin.line, 1),
                        format!(
                            "`{}` expects {} outputs and {} inputs",
                            sig.label,
                            sig.n_outputs(),
                            sig.n_inputs()
                        ),
                    ));
                }
                latencies.insert(s.op.cost_key().to_string(), sig.cycles.max(1));
            }
        }
        for op in OpKind::builtins() {
            latencies.insert(op.cost_key().to_string(), costs.latency(&op));
        }
        let t = TreeArray {
            name: elab.name.clone(),
            inputs: elab.inputs.clone(),
            outputs: elab.outputs.clone(),
            nodes: Vec::new(),
            blocks: elab.blocks.clone(),
            output_prev: Vec::new(),
            padded: false,
            merged: false,
            regions: build_regions(&elab.statements, elab.blocks.len())?,
            latencies,
        };
        Ok(t)
    }

    fn relower(&mut self) -> Result<(), Diagnostic> {
        let mut l = Lowering {
            tree: self,
            nodes: Vec::new(),
        };
        let mut env = HashMap::new();
        let regions = l.tree.regions.clone();
        l.region(&regions, &mut env, None)?;
        let nodes = l.nodes;
        let mut output_prev = Vec::new();
        for o in &self.outputs {
            output_prev.push(*env.get(o).unwrap_or(&PrevAddress::None));
        }
        self.nodes = nodes;
        self.output_prev = output_prev;
        Ok(())
    }

    pub fn is_input(&self, name: &str) -> bool {
        self.inputs.iter().any(|i| i == name)
    }

    pub fn merge_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Merge).count()
    }

    /// Line-oriented dump: `addr | op | results | operands | prev | nprev | delay`.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        writeln!(s, "# {} ({} nodes)", self.name, self.nodes.len()).unwrap();
        writeln!(s, "# addr | op | results | operands | prev | nprev | delay").unwrap();
        for n in &self.nodes {
            let op = match (&n.op, n.condition) {
                (OpKind::IfCompare, Some(c)) => format!("If_V{c}"),
                (op, _) => op.function_name().to_string(),
            };
            writeln!(
                s,
                "{} | {} | [{}] | [{}] | [{}] | [{}] | {}",
                n.address,
                op,
                n.results.join(", "),
                join(&n.operands),
                join(&n.prev),
                join(&n.n_prev_addresses()),
                n.delay_cycles
            )
            .unwrap();
        }
        for (o, p) in self.outputs.iter().zip(&self.output_prev) {
            writeln!(s, "output {o} <- {p}").unwrap();
        }
        s
    }
}

fn join<T: fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

/// Groups the flat statement list back into nested block regions.
fn build_regions(stmts: &[Statement], n_blocks: usize) -> Result<Vec<Item>, Diagnostic> {
    #[derive(Clone, Copy)]
    enum Entry {
        Stmt(usize),
        Block(usize),
    }
    let mut root = Vec::new();
    let mut branches: Vec<[Vec<Entry>; 2]> = vec![[Vec::new(), Vec::new()]; n_blocks];
    for (i, s) in stmts.iter().enumerate() {
        let mut entries = vec![Entry::Stmt(i)];
        if let Some(id) = s.opens_block {
            if id >= n_blocks {
                return Err(internal(format!("statement opens unknown block {id}")));
            }
            entries.push(Entry::Block(id));
        }
        let dest = match s.block {
            None => &mut root,
            Some(b) if b.id < n_blocks => &mut branches[b.id][(b.branch == Branch::Else) as usize],
            Some(b) => return Err(internal(format!("statement in unknown block {}", b.id))),
        };
        dest.extend(entries);
    }
    fn materialize(entries: &[Entry], stmts: &[Statement], branches: &[[Vec<Entry>; 2]]) -> Vec<Item> {
        entries
            .iter()
            .map(|e| match *e {
                Entry::Stmt(i) => Item::Stmt(Box::new(stmts[i].clone())),
                Entry::Block(id) => Item::Block(
                    id,
                    materialize(&branches[id][0], stmts, branches),
                    materialize(&branches[id][1], stmts, branches),
                ),
            })
            .collect()
    }
    Ok(materialize(&root, stmts, &branches))
}

struct Lowering<'a> {
    tree: &'a TreeArray,
    nodes: Vec<TreeNode>,
}

type Env = HashMap<String, PrevAddress>;

impl Lowering<'_> {
    fn resolve(&self, env: &Env, o: &Operand) -> Result<PrevAddress, Diagnostic> {
        match o {
            Operand::Const(_) => Ok(PrevAddress::None),
            Operand::Name(n) => match env.get(n) {
                Some(p) => Ok(*p),
                None if self.tree.is_input(n) => Ok(PrevAddress::None),
                None => Err(internal(format!("operand `{n}` has no producer"))),
            },
        }
    }

    fn latency(&self, op: &OpKind) -> u32 {
        self.tree.latencies.get(op.cost_key()).copied().unwrap_or(1)
    }

    #[allow(clippy::too_many_arguments)]
    fn push(
        &mut self,
        env: &mut Env,
        op: OpKind,
        operands: Vec<Operand>,
        prev: Vec<PrevAddress>,
        results: Vec<String>,
        block: Option<BlockRef>,
        condition: Option<Comparison>,
        opens_block: Option<usize>,
        call: Option<CallSig>,
        kind: NodeKind,
        origin: Origin,
    ) -> usize {
        let address = self.nodes.len();
        for r in &results {
            env.insert(r.clone(), PrevAddress::Single(address));
        }
        let delay_cycles = self.latency(&op);
        self.nodes.push(TreeNode {
            address,
            op,
            operands,
            results,
            prev,
            delay_cycles,
            block,
            condition,
            opens_block,
            call,
            kind,
            origin,
        });
        address
    }

    fn region(&mut self, items: &[Item], env: &mut Env, ctx: Option<BlockRef>) -> Result<(), Diagnostic> {
        for item in items {
            match item {
                Item::Stmt(s) => {
                    let prev = s
                        .operands
                        .iter()
                        .map(|o| self.resolve(env, o))
                        .collect::<Result<Vec<_>, _>>()?;
                    self.push(
                        env,
                        s.op.clone(),
                        s.operands.clone(),
                        prev,
                        s.results.clone(),
                        s.block,
                        s.condition,
                        s.opens_block,
                        s.call.clone(),
                        NodeKind::Source,
                        s.origin.clone(),
                    );
                }
                Item::Block(id, then_items, else_items) => self.block(*id, then_items, else_items, env, ctx)?,
            }
        }
        Ok(())
    }

    fn block(
        &mut self,
        id: usize,
        then_items: &[Item],
        else_items: &[Item],
        env: &mut Env,
        ctx: Option<BlockRef>,
    ) -> Result<(), Diagnostic> {
        let info = self.tree.blocks[id].clone();
        let mut names: Vec<String> = info.assigned_if.clone();
        for n in &info.assigned_else {
            if !names.contains(n) {
                names.push(n.clone());
            }
        }
        let mut branch_envs = Vec::new();
        for (branch, items, assigned) in [
            (Branch::If, then_items, &info.assigned_if),
            (Branch::Else, else_items, &info.assigned_else),
        ] {
            let here = BlockRef { id, branch };
            let mut benv = env.clone();
            self.region(items, &mut benv, Some(here))?;
            if self.tree.padded {
                for n in names.iter().filter(|n| !assigned.contains(n)) {
                    let operand = match info.entry_constants.get(n) {
                        Some(c) => Operand::Const(*c),
                        None if env.contains_key(n) || self.tree.is_input(n) => Operand::Name(n.clone()),
                        None => Operand::Const(crate::fixedpoint::Fixed::ZERO),
                    };
                    let prev = self.resolve(env, &operand)?;
                    let side = match branch {
                        Branch::If => "if",
                        Branch::Else => "else",
                    };
                    let origin = Origin {
                        line: info.origin.line,
                        text: format!("{n} is not assigned in the {side} branch of {}", info.origin.text),
                    };
                    self.push(
                        &mut benv,
                        OpKind::Value,
                        vec![operand],
                        vec![prev],
                        vec![n.clone()],
                        Some(here),
                        None,
                        None,
                        None,
                        NodeKind::Padding,
                        origin,
                    );
                }
            }
            branch_envs.push(benv);
        }
        let (env_if, env_else) = (&branch_envs[0], &branch_envs[1]);
        let single = |e: &Env, n: &str| match e.get(n) {
            Some(PrevAddress::Single(a)) => Some(*a),
            _ => None,
        };
        let mut post = Vec::new();
        for n in &names {
            let in_if = info.assigned_if.contains(n) || self.tree.padded;
            let in_else = info.assigned_else.contains(n) || self.tree.padded;
            let (a, b) = (single(env_if, n), single(env_else, n));
            let p = match (in_if, in_else, a, b) {
                (true, true, Some(a), Some(b)) => PrevAddress::Pair(a, b),
                (true, false, Some(a), _) => match env.get(n) {
                    Some(PrevAddress::Single(p)) => PrevAddress::Pair(a, *p),
                    _ => PrevAddress::Single(a),
                },
                (false, true, _, Some(b)) => match env.get(n) {
                    Some(PrevAddress::Single(p)) => PrevAddress::Pair(*p, b),
                    _ => PrevAddress::Single(b),
                },
                _ => {
                    return Err(internal(format!(
                        "`{n}` of block {id} needs a nested pair; insert merges first"
                    )))
                }
            };
            post.push((n.clone(), p));
        }
        if self.tree.merged {
            let cond = Operand::Name(info.cond_name.clone());
            let cond_prev = self.resolve(env, &cond)?;
            for (n, p) in post {
                let origin = Origin {
                    line: info.origin.line,
                    text: format!("{n} selected by {}", info.origin.text),
                };
                self.push(
                    env,
                    OpKind::Merge,
                    vec![Operand::Name(n.clone()), cond.clone()],
                    vec![p, cond_prev],
                    vec![n],
                    ctx,
                    None,
                    None,
                    None,
                    NodeKind::Merge,
                    origin,
                );
            }
        } else {
            for (n, p) in post {
                env.insert(n, p);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests;
