// SPDX-License-Identifier: Apache-2.0
//! Self-checking testbench with seeded random stimulus.
//!
//! Expected values come from the golden simulator. Vectors on which the
//! golden model hits a domain error (square root of a negative value, a
//! bad logarithm base) are redrawn, since the hardware result is
//! unspecified there.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use rand_xoshiro::rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use thiserror::Error;

use crate::codegen::{module_ident, VerilogFile};
use crate::fixedpoint::{simulate_graph, to_fixed, Fixed, SimError};
use crate::ir::TreeArray;
use crate::ops::OpKind;
use crate::scheduler::{Mode, ScheduledGraph};

/// Allowed raw-LSB error on outputs that depend on an approximated function.
pub const APPROX_TOLERANCE: u32 = 256;
/// Redraws allowed per vector before giving up.
const MAX_DRAWS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TestbenchError {
    #[error("no stimulus for vector {vector} avoids a golden-model error after {MAX_DRAWS} draws: {last}")]
    NoValidStimulus { vector: usize, last: SimError },
    #[error("empty input range {lo}:{hi}")]
    EmptyRange { lo: Fixed, hi: Fixed },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StimulusPlan {
    pub seed: u64,
    pub n_vectors: usize,
    /// Range for inputs without an entry in `ranges`.
    pub range: (Fixed, Fixed),
    pub ranges: BTreeMap<String, (Fixed, Fixed)>,
    /// When false, only stimulus is applied and outputs are printed.
    pub assert: bool,
}

impl Default for StimulusPlan {
    fn default() -> Self {
        StimulusPlan {
            seed: 1,
            n_vectors: 10,
            range: (Fixed::from_int(-8), Fixed::from_int(8)),
            ranges: BTreeMap::new(),
            assert: true,
        }
    }
}

/// Parses `lo:hi` in real values, for example `-2.5:2.5`.
pub fn parse_range(text: &str) -> Result<(Fixed, Fixed), String> {
    let (lo, hi) = text
        .split_once(':')
        .ok_or_else(|| format!("expected lo:hi, got `{text}`"))?;
    let conv = |s: &str| -> Result<Fixed, String> {
        let v: f64 = s.trim().parse().map_err(|_| format!("`{s}` is not a number"))?;
        to_fixed(v).map_err(|e| e.to_string())
    };
    let (lo, hi) = (conv(lo)?, conv(hi)?);
    if lo > hi {
        return Err(format!("range {lo}:{hi} is empty"));
    }
    Ok((lo, hi))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vector {
    pub inputs: Vec<(String, Fixed)>,
    /// Declared outputs in order; `None` when the design has no golden model.
    pub expected: Option<Vec<(String, Fixed)>>,
}

/// Whether the golden model can evaluate the tree at all.
pub fn has_golden_model(tree: &TreeArray) -> bool {
    !tree.nodes.iter().any(|n| matches!(n.op, OpKind::Call(_)))
}

/// Raw-LSB tolerance per declared output: nonzero only when the output's
/// cone contains a function the hardware approximates.
pub fn tolerances(tree: &TreeArray) -> Vec<(String, u32)> {
    tree.outputs
        .iter()
        .zip(&tree.output_prev)
        .map(|(o, p)| {
            let mut seen = BTreeSet::new();
            let mut stack = p.addresses();
            let mut approx = false;
            while let Some(a) = stack.pop() {
                if !seen.insert(a) {
                    continue;
                }
                approx |= matches!(tree.nodes[a].op, OpKind::Log | OpKind::SinCosTan);
                stack.extend(tree.nodes[a].producers());
            }
            (o.clone(), if approx { APPROX_TOLERANCE } else { 0 })
        })
        .collect()
}

/// Draws `plan.n_vectors` input vectors from a SplitMix64 stream seeded
/// with `plan.seed`, each input uniform over its raw range.
pub fn generate_vectors(g: &ScheduledGraph, plan: &StimulusPlan) -> Result<Vec<Vector>, TestbenchError> {
    let t = &g.tree;
    let mut rng = SplitMix64::seed_from_u64(plan.seed);
    let golden = has_golden_model(t);
    let ranges: Vec<(i64, u64)> = t
        .inputs
        .iter()
        .map(|i| {
            let (lo, hi) = plan.ranges.get(i).copied().unwrap_or(plan.range);
            if lo > hi {
                return Err(TestbenchError::EmptyRange { lo, hi });
            }
            Ok((lo.0 as i64, (hi.0 as i64 - lo.0 as i64) as u64 + 1))
        })
        .collect::<Result<_, _>>()?;
    let mut out = Vec::with_capacity(plan.n_vectors);
    for vector in 0..plan.n_vectors {
        let mut draws = 0;
        loop {
            draws += 1;
            let inputs: Vec<(String, Fixed)> = t
                .inputs
                .iter()
                .zip(&ranges)
                .map(|(n, &(lo, span))| (n.clone(), Fixed((lo + (rng.next_u64() % span) as i64) as i32)))
                .collect();
            if !golden {
                out.push(Vector { inputs, expected: None });
                break;
            }
            let map: BTreeMap<String, Fixed> = inputs.iter().cloned().collect();
            match simulate_graph(t, &map) {
                Ok(r) => {
                    out.push(Vector {
                        inputs,
                        expected: Some(r.outputs),
                    });
                    break;
                }
                Err(e) if draws >= MAX_DRAWS => return Err(TestbenchError::NoValidStimulus { vector, last: e }),
                Err(_) => {}
            }
        }
    }
    Ok(out)
}

/// `tb_top.v` for the top module of `g`.
pub fn emit_testbench(g: &ScheduledGraph, mode: Mode, plan: &StimulusPlan) -> Result<VerilogFile, TestbenchError> {
    let t = &g.tree;
    let vectors = generate_vectors(g, plan)?;
    let check = plan.assert && has_golden_model(t);
    let tol = tolerances(t);
    let cycles = g.total_cycles.max(1);
    let pipelined = mode == Mode::Pipelined;
    let mut s = String::new();

    writeln!(
        s,
        "// Testbench for `{}` ({mode}), {} vector(s), seed {}.",
        t.name,
        vectors.len(),
        plan.seed
    )
    .unwrap();
    if check {
        s.push_str("// Expected values come from the golden fixed-point model.\n");
    } else {
        s.push_str("// Stimulus only: outputs are printed, not checked.\n");
    }
    s.push_str("`timescale 1ns/1ps\nmodule tb_top;\n    reg clk = 1'b0;\n    reg rst = 1'b1;\n");
    if pipelined {
        s.push_str("    reg start = 1'b0;\n    wire busy;\n    wire valid;\n    integer waited;\n");
    }
    for i in &t.inputs {
        writeln!(s, "    reg [31:0] {i} = 32'h00000000;").unwrap();
    }
    for o in &t.outputs {
        writeln!(s, "    wire [31:0] {o};").unwrap();
    }
    s.push_str("    integer failures = 0;\n    reg vec_ok;\n    reg signed [32:0] diff;\n\n");

    let mut conns = vec!["clk".to_string(), "rst".to_string()];
    if pipelined {
        conns.push("start".into());
    }
    conns.extend(t.inputs.iter().cloned());
    conns.extend(t.outputs.iter().cloned());
    if pipelined {
        conns.extend(["busy".to_string(), "valid".to_string()]);
    }
    let conns: Vec<String> = conns.iter().map(|c| format!(".{c}({c})")).collect();
    writeln!(s, "    {} dut ({});\n", module_ident(&t.name), conns.join(", ")).unwrap();
    s.push_str("    always #5 clk = ~clk;\n\n");

    if check {
        s.push_str(
            "    task check;
        input [31:0] got;
        input [31:0] want;
        input [31:0] tol;
        input [8*64-1:0] name;
        begin
            diff = $signed({got[31], got}) - $signed({want[31], want});
            if (diff < 0) diff = -diff;
            if (diff > tol) begin
                vec_ok = 1'b0;
                $display(\"  %0s = %h, expected %h (tolerance %0d)\", name, got, want, tol);
            end
        end
    endtask

",
        );
    }

    s.push_str("    initial begin\n        $dumpfile(\"tb_top.vcd\");\n        $dumpvars(0, tb_top);\n");
    s.push_str("        repeat (2) @(posedge clk);\n        @(negedge clk);\n        rst = 1'b0;\n");
    for (k, v) in vectors.iter().enumerate() {
        writeln!(s, "\n        // vector {k}\n        @(negedge clk);").unwrap();
        for (n, x) in &v.inputs {
            writeln!(s, "        {n} = {}; // {x}", x.verilog_literal()).unwrap();
        }
        if pipelined {
            writeln!(
                s,
                "        start = 1'b1;
        @(negedge clk);
        start = 1'b0;
        waited = 1;
        while (!valid && waited < {}) begin
            @(negedge clk);
            waited = waited + 1;
        end",
                cycles + 4
            )
            .unwrap();
        } else {
            writeln!(
                s,
                "        repeat ({}) @(posedge clk);\n        @(negedge clk);",
                cycles + 1
            )
            .unwrap();
        }
        match (&v.expected, check) {
            (Some(exp), true) => {
                s.push_str("        vec_ok = 1'b1;\n");
                if pipelined {
                    s.push_str("        if (!valid) begin\n            vec_ok = 1'b0;\n            $display(\"  valid never rose\");\n        end\n");
                }
                for ((o, want), (_, tl)) in exp.iter().zip(&tol) {
                    writeln!(
                        s,
                        "        check({o}, {}, {tl}, \"{o}\"); // {want}",
                        want.verilog_literal()
                    )
                    .unwrap();
                }
                writeln!(
                    s,
                    "        if (vec_ok) $display(\"PASS vector {k}\");
        else begin
            failures = failures + 1;
            $display(\"FAIL vector {k}\");
        end"
                )
                .unwrap();
            }
            _ => {
                let fmt: Vec<String> = t.outputs.iter().map(|o| format!("{o} = %h")).collect();
                let args: Vec<&str> = t.outputs.iter().map(String::as_str).collect();
                writeln!(
                    s,
                    "        $display(\"vector {k}: {}\", {});",
                    fmt.join(", "),
                    args.join(", ")
                )
                .unwrap();
            }
        }
    }
    if check {
        writeln!(
            s,
            "\n        if (failures == 0) $display(\"SUMMARY: PASS, {n} of {n} vectors\");
        else $display(\"SUMMARY: FAIL, %0d of {n} vectors failed\", failures);",
            n = vectors.len()
        )
        .unwrap();
    } else {
        writeln!(s, "\n        $display(\"SUMMARY: {} vectors applied\");", vectors.len()).unwrap();
    }
    s.push_str("        $finish;\n    end\nendmodule\n");
    Ok(VerilogFile {
        name: "tb_top.v".into(),
        text: s,
    })
}
