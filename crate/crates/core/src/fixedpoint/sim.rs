// SPDX-License-Identifier: Apache-2.0
//! Golden dataflow simulator over a merge-complete tree.

use std::collections::BTreeMap;

use thiserror::Error;

use super::{eval_op, Fixed, FixedError, Warning};
use crate::frontend::Operand;
use crate::ir::{PrevAddress, TreeArray};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("no value supplied for input `{0}`")]
    MissingInput(String),
    #[error("node {address}: {error}")]
    Eval { address: usize, error: FixedError },
    #[error("{0}")]
    Internal(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    /// Declared outputs in declaration order.
    pub outputs: Vec<(String, Fixed)>,
    pub warnings: Vec<(usize, Warning)>,
}

impl SimResult {
    pub fn get(&self, name: &str) -> Option<Fixed> {
        self.outputs.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}

/// A failed evaluation travels with the value so that a domain error in
/// the branch a merge discards does not fail the run.
type Val = Result<Fixed, (usize, FixedError)>;

/// Evaluates every node in address order and returns the declared outputs.
pub fn simulate_graph(tree: &TreeArray, inputs: &BTreeMap<String, Fixed>) -> Result<SimResult, SimError> {
    for i in &tree.inputs {
        if !inputs.contains_key(i) {
            return Err(SimError::MissingInput(i.clone()));
        }
    }
    let mut values: Vec<Vec<Val>> = Vec::with_capacity(tree.nodes.len());
    let mut warnings = Vec::new();
    let lookup = |values: &Vec<Vec<Val>>, a: usize, name: &str| -> Result<Val, SimError> {
        let node = &tree.nodes[a];
        let r = node
            .results
            .iter()
            .position(|r| r == name)
            .ok_or_else(|| SimError::Internal(format!("node {a} does not produce `{name}`")))?;
        Ok(values[a][r].clone())
    };
    for node in &tree.nodes {
        let mut args: Vec<Val> = Vec::new();
        for (o, p) in node.operands.iter().zip(&node.prev) {
            match (o, p) {
                (Operand::Const(c), _) => args.push(Ok(*c)),
                (Operand::Name(n), PrevAddress::None) => {
                    args.push(Ok(*inputs.get(n).ok_or_else(|| SimError::MissingInput(n.clone()))?))
                }
                (Operand::Name(n), PrevAddress::Single(a)) => args.push(lookup(&values, *a, n)?),
                (Operand::Name(n), PrevAddress::Pair(a, b)) => {
                    args.push(lookup(&values, *a, n)?);
                    args.push(lookup(&values, *b, n)?);
                }
            }
        }
        let out: Vec<Val> = if node.op == crate::ops::OpKind::Merge {
            // [if, else, sel]: only the selected side must be valid
            match &args[2] {
                Err(e) => vec![Err(e.clone())],
                Ok(sel) => vec![if sel.0 != 0 { args[0].clone() } else { args[1].clone() }],
            }
        } else {
            match args.iter().cloned().collect::<Result<Vec<Fixed>, _>>() {
                Err(e) => vec![Err(e); node.results.len()],
                Ok(a) => match eval_op(&node.op, node.condition, &a) {
                    Ok(r) => {
                        if let Some(w) = r.warning {
                            warnings.push((node.address, w));
                        }
                        r.values.into_iter().map(Ok).collect()
                    }
                    Err(e) => vec![Err((node.address, e)); node.results.len()],
                },
            }
        };
        values.push(out);
    }
    let mut outputs = Vec::new();
    for (o, p) in tree.outputs.iter().zip(&tree.output_prev) {
        let v = match p {
            PrevAddress::Single(a) => lookup(&values, *a, o)?,
            _ => return Err(SimError::Internal(format!("output `{o}` has no single driver"))),
        };
        let v = v.map_err(|(address, error)| SimError::Eval { address, error })?;
        outputs.push((o.clone(), v));
    }
    Ok(SimResult { outputs, warnings })
}
