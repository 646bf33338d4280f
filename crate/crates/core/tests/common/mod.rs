// SPDX-License-Identifier: Apache-2.0
//! Helpers shared by the integration tests and the acceptance runner.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use hlsgen::costs::CostTable;
use hlsgen::frontend::{elaborate, parse_source, BlockRef, Branch, ElabOptions, Elaborated, Operand};
use hlsgen::ir::{build_tree, TreeArray};
use hlsgen::ops::{Comparison, OpKind};
use hlsgen::scheduler::{schedule, Mode, ScheduledGraph};
use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};

pub const CORPUS: [&str; 9] = [
    "mac16",
    "fft32",
    "demodulation",
    "modulation",
    "backprop",
    "polar",
    "clip",
    "levels",
    "rename",
];

pub fn corpus_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("corpus")
        .join(format!("{name}.vpy"))
}

pub fn corpus_source(name: &str) -> String {
    std::fs::read_to_string(corpus_path(name)).expect("corpus file")
}

pub fn elaborated(name: &str) -> Elaborated {
    let prog = parse_source(&corpus_source(name), name).expect("parses");
    elaborate(&prog, &ElabOptions::default()).expect("elaborates")
}

pub fn tree(name: &str) -> TreeArray {
    build_tree(&elaborated(name), &CostTable::default()).expect("lowers")
}

pub fn graph(name: &str, mode: Mode) -> ScheduledGraph {
    schedule(&tree(name), mode)
}

/// Small deterministic generator so the oracle does not share the
/// testbench's random source.
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next(&mut self) -> u64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        self.0 >> 16
    }

    /// Raw Q16.16 value in [-8, 8].
    pub fn sample(&mut self) -> i32 {
        (self.next() % (16 * 65536 + 1)) as i32 - 8 * 65536
    }
}

// ---- rule violations ------------------------------------------------------

/// Sources that each break one rule, with the expected code.
pub const NEGATIVE: [(&str, &str, &str); 5] = [
    ("too_many_inputs", "", "E002"),
    (
        "bare_literal",
        "input_define(\"a\")\noutput_define(\"c\")\nAddition_V(\"c\", \"a\", 5)\n",
        "E003",
    ),
    (
        "self_reference",
        "input_define(\"x\")\noutput_define(\"acc\")\nValue_V(\"acc\", \"x\")\nAddition_V(\"acc\", \"acc\", \"x\")\n",
        "E004",
    ),
    (
        "three_deep",
        "input_define(\"a\", \"b\")\noutput_define(\"c\")\nValue_V(\"c\", \"a\")\nIf_V(\"a\", \"b\", \">\"):\n    If_V(\"a\", \"b\", \"<\"):\n        If_V(\"a\", \"b\", \"==\"):\n            Value_V(\"c\", \"b\")\n",
        "E005",
    ),
    (
        "unknown_function",
        "input_define(\"a\")\noutput_define(\"c\")\nSquare_V(\"c\", \"a\")\n",
        "E006",
    ),
];

pub fn negative_source(name: &str, text: &str) -> String {
    if name == "too_many_inputs" {
        let ins: Vec<String> = (0..21).map(|i| format!("\"i{i}\"")).collect();
        return format!(
            "input_define({})\noutput_define(\"c\")\nAddition_V(\"c\", \"i0\", \"i1\")\n",
            ins.join(", ")
        );
    }
    text.to_string()
}

// ---- independent reference evaluator --------------------------------------

fn big(v: i64) -> BigInt {
    BigInt::from(v)
}

fn pow2(n: u32) -> BigInt {
    BigInt::from(1u8) << n
}

/// Two's-complement wrap of `x` into `bits` bits.
fn wrap(x: &BigInt, bits: u32) -> BigInt {
    let m = pow2(bits);
    let mut r = x % &m;
    if r.is_negative() {
        r += &m;
    }
    if r >= pow2(bits - 1) {
        r -= m;
    }
    r
}

fn wrap32(x: &BigInt) -> i32 {
    wrap(x, 32).to_i32().expect("wrapped")
}

/// Quotient rounded toward negative infinity.
fn floor_div(a: &BigInt, b: &BigInt) -> BigInt {
    let q = a / b;
    if !(a % b).is_zero() && (a.is_negative() != b.is_negative()) {
        q - 1
    } else {
        q
    }
}

/// A value plus whether it passed through a real-valued approximation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RefVal {
    pub raw: i32,
    pub approx: bool,
}

fn real_to_raw(x: f64) -> i32 {
    let s = (x * 65536.0).round();
    s.clamp(i32::MIN as f64, i32::MAX as f64) as i32
}

fn reference_op(op: &OpKind, cmp: Option<Comparison>, a: &[i32]) -> Result<Vec<i32>, String> {
    let b: Vec<BigInt> = a.iter().map(|&v| big(v as i64)).collect();
    Ok(match op {
        OpKind::Add => vec![wrap32(&(&b[0] + &b[1]))],
        OpKind::Sub => vec![wrap32(&(&b[0] - &b[1]))],
        OpKind::Mul => vec![wrap32(&floor_div(&(&b[0] * &b[1]), &pow2(16)))],
        OpKind::Div => {
            if b[1].is_zero() {
                vec![if a[0] < 0 { i32::MIN } else { i32::MAX }]
            } else {
                // truncating quotient, low 32 bits kept
                vec![wrap32(&((&b[0] * pow2(16)) / &b[1]))]
            }
        }
        OpKind::Power => {
            if a[1] % 65536 != 0 {
                return Err("fractional exponent".into());
            }
            let e = a[1] / 65536;
            if !(-128..=127).contains(&e) {
                return Err("exponent out of range".into());
            }
            // Q32.32 square-and-multiply; every product is floored and
            // wrapped to 64 bits
            let q32 = |x: &BigInt, y: &BigInt| wrap(&floor_div(&(x * y), &pow2(32)), 64);
            let mut base = &b[0] * pow2(16);
            let mut acc = pow2(32);
            let mut k = e.unsigned_abs();
            while k > 0 {
                if k & 1 == 1 {
                    acc = q32(&acc, &base);
                }
                base = q32(&base, &base);
                k >>= 1;
            }
            if e < 0 {
                acc = if acc.is_zero() {
                    pow2(63) - 1
                } else {
                    wrap(&(pow2(64) / &acc), 64)
                };
            }
            vec![wrap32(&floor_div(&acc, &pow2(16)))]
        }
        OpKind::Sqrt => {
            if a[0] < 0 {
                return Err("sqrt of a negative value".into());
            }
            vec![wrap32(&(b[0].sqrt() * pow2(8)))]
        }
        OpKind::Log => {
            if a[0] <= 0 || a[0] == 65536 || a[1] <= 0 {
                return Err("logarithm domain".into());
            }
            let r = (a[1] as f64 / 65536.0).ln() / (a[0] as f64 / 65536.0).ln();
            vec![real_to_raw(r)]
        }
        OpKind::SinCosTan => {
            let x = a[0] as f64 / 65536.0;
            vec![real_to_raw(x.sin()), real_to_raw(x.cos()), real_to_raw(x.tan())]
        }
        OpKind::Value => vec![a[0]],
        OpKind::IfCompare => {
            let (l, r) = (a[0], a[1]);
            let holds = match cmp.expect("comparison") {
                Comparison::Gt => l > r,
                Comparison::Lt => l < r,
                Comparison::Ge => l >= r,
                Comparison::Le => l <= r,
                Comparison::Eq => l == r,
                Comparison::Ne => l != r,
            };
            vec![holds as i32]
        }
        OpKind::Merge | OpKind::Call(_) => return Err(format!("{op:?} has no reference model")),
    })
}

/// Runs the elaborated statements in order, executing a branch only when
/// its condition selects it. Returns the declared outputs.
pub fn reference_eval(e: &Elaborated, inputs: &BTreeMap<String, i32>) -> Result<Vec<(String, RefVal)>, String> {
    let mut env: BTreeMap<String, RefVal> = inputs
        .iter()
        .map(|(k, &raw)| (k.clone(), RefVal { raw, approx: false }))
        .collect();
    let taken = |env: &BTreeMap<String, RefVal>, mut b: Option<BlockRef>| -> bool {
        while let Some(r) = b {
            let info = &e.blocks[r.id];
            let c = env.get(&info.cond_name).map_or(0, |v| v.raw);
            if (c != 0) != (r.branch == Branch::If) {
                return false;
            }
            b = info.parent;
        }
        true
    };
    for s in &e.statements {
        if !taken(&env, s.block) {
            continue;
        }
        let mut args = Vec::new();
        let mut approx = s.op.is_transcendental() && s.op != OpKind::Sqrt;
        for o in &s.operands {
            match o {
                Operand::Const(c) => args.push(c.raw()),
                Operand::Name(n) => {
                    let v = env.get(n).ok_or_else(|| format!("`{n}` read before it is assigned"))?;
                    approx |= v.approx;
                    args.push(v.raw);
                }
            }
        }
        let vals = reference_op(&s.op, s.condition, &args)?;
        for (r, raw) in s.results.iter().zip(vals) {
            env.insert(r.clone(), RefVal { raw, approx });
        }
        if let Some(id) = s.opens_block {
            for (k, c) in &e.blocks[id].entry_constants {
                env.insert(
                    k.clone(),
                    RefVal {
                        raw: c.raw(),
                        approx: false,
                    },
                );
            }
        }
    }
    e.outputs
        .iter()
        .map(|o| {
            env.get(o)
                .map(|v| (o.clone(), *v))
                .ok_or_else(|| format!("output `{o}` never assigned"))
        })
        .collect()
}

/// Allowed raw error on outputs computed through a real-valued function.
pub const REF_TOLERANCE: i64 = 256;

/// Compares golden outputs against the reference on `n` random vectors.
/// Returns the number of vectors checked.
pub fn check_against_reference(name: &str, n: usize, seed: u64) -> Result<usize, String> {
    use hlsgen::fixedpoint::{simulate_graph, Fixed};
    let e = elaborated(name);
    let t = build_tree(&e, &CostTable::default()).map_err(|d| d.to_string())?;
    let mut rng = Lcg(seed);
    for k in 0..n {
        let raw: BTreeMap<String, i32> = e.inputs.iter().map(|i| (i.clone(), rng.sample())).collect();
        let fx: BTreeMap<String, Fixed> = raw.iter().map(|(k, &v)| (k.clone(), Fixed(v))).collect();
        let golden = simulate_graph(&t, &fx);
        let reference = reference_eval(&e, &raw);
        match (golden, reference) {
            (Err(_), Err(_)) => {}
            (Ok(g), Ok(r)) => {
                for ((name_g, gv), (name_r, rv)) in g.outputs.iter().zip(&r) {
                    assert_eq!(name_g, name_r);
                    let diff = (gv.raw() as i64 - rv.raw as i64).abs();
                    let tol = if rv.approx { REF_TOLERANCE } else { 0 };
                    if diff > tol {
                        return Err(format!(
                            "{name} vector {k}: {name_g} golden {} reference {} (tolerance {tol})",
                            gv.raw(),
                            rv.raw
                        ));
                    }
                }
            }
            (g, r) => return Err(format!("{name} vector {k}: golden {g:?} but reference {r:?}")),
        }
    }
    Ok(n)
}
