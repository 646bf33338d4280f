// SPDX-License-Identifier: Apache-2.0
//! Random design generator for schedule property tests.

use rand_xoshiro::rand_core::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;

use crate::costs::CostTable;

struct Gen {
    rng: SplitMix64,
    next: usize,
    lines: Vec<String>,
}

impl Gen {
    fn below(&mut self, n: usize) -> usize {
        (self.rng.next_u64() % n as u64) as usize
    }

    fn pick(&mut self, pool: &[String]) -> String {
        if self.below(8) == 0 {
            let v = self.below(9) as i64 - 4;
            return format!("number_to_hex({v})");
        }
        format!("\"{}\"", pool[self.below(pool.len())])
    }

    fn fresh(&mut self) -> String {
        self.next += 1;
        format!("v{}", self.next - 1)
    }

    /// Emits one statement at `indent`; returns the names it assigns.
    fn statement(&mut self, pool: &[String], indent: usize, reuse: Option<&str>) -> Vec<String> {
        let pad = " ".repeat(indent);
        let r = reuse.map_or_else(|| self.fresh(), str::to_string);
        let pool: Vec<String> = pool.iter().filter(|p| **p != r).cloned().collect();
        let (a, b) = (self.pick(&pool), self.pick(&pool));
        match self.below(6) {
            0 => self.lines.push(format!("{pad}Addition_V(\"{r}\", {a}, {b})")),
            1 => self.lines.push(format!("{pad}Subtraction_V(\"{r}\", {a}, {b})")),
            2 => self.lines.push(format!("{pad}Multiplication_V(\"{r}\", {a}, {b})")),
            3 => self.lines.push(format!("{pad}Value_V(\"{r}\", {a})")),
            4 => self.lines.push(format!("{pad}Division_V(\"{r}\", {a}, {b})")),
            _ => {
                let (c, t) = (self.fresh(), self.fresh());
                self.lines
                    .push(format!("{pad}SinCosTan_V(\"{r}\", \"{c}\", \"{t}\", {a})"));
                return vec![r, c, t];
            }
        }
        vec![r]
    }
}

/// A random straight-line design with occasional one- or two-level
/// if/else blocks, plus a cost table with latencies between 1 and 4.
pub fn random_design(seed: u64, n_statements: usize) -> (String, CostTable) {
    let mut g = Gen {
        rng: SplitMix64::seed_from_u64(seed),
        next: 0,
        lines: Vec::new(),
    };
    let n_inputs = 1 + g.below(5);
    let mut pool: Vec<String> = (0..n_inputs).map(|i| format!("i{i}")).collect();
    let mut assigned: Vec<String> = Vec::new();
    let mut remaining = n_statements.max(1);
    while remaining > 0 {
        if g.below(6) == 0 && remaining >= 2 {
            let made = block(&mut g, &pool, 0, 1);
            remaining = remaining.saturating_sub(made.len());
            pool.extend(made.iter().cloned());
            assigned.extend(made);
        } else {
            let made = g.statement(&pool, 0, None);
            remaining -= 1;
            pool.extend(made.iter().cloned());
            assigned.extend(made);
        }
    }
    assigned.sort();
    assigned.dedup();
    let n_out = 1 + g.below(3.min(assigned.len()));
    let mut outputs = Vec::new();
    while outputs.len() < n_out {
        let o = assigned[g.below(assigned.len())].clone();
        if !outputs.contains(&o) {
            outputs.push(o);
        }
    }
    let quote = |v: &[String]| v.iter().map(|n| format!("\"{n}\"")).collect::<Vec<_>>().join(", ");
    let inputs: Vec<String> = (0..n_inputs).map(|i| format!("i{i}")).collect();
    let mut src = format!("input_define({})\noutput_define({})\n", quote(&inputs), quote(&outputs));
    for l in &g.lines {
        src.push_str(l);
        src.push('\n');
    }
    let mut costs = CostTable::default();
    let mut overrides = String::new();
    for key in ["add", "sub", "mul", "div", "value", "sincostan", "compare", "merge"] {
        overrides.push_str(&format!("{key}.latency={}\n", 1 + g.below(4)));
    }
    costs
        .apply_overrides(&overrides)
        .expect("generated overrides are valid");
    (src, costs)
}

fn block(g: &mut Gen, pool: &[String], indent: usize, depth: usize) -> Vec<String> {
    let pad = " ".repeat(indent);
    let cmp = [">", "<", ">=", "<=", "==", "!="][g.below(6)];
    let (a, b) = (g.pick(pool), g.pick(pool));
    g.lines.push(format!("{pad}If_V({a}, {b}, \"{cmp}\"):"));
    let mut names = Vec::new();
    let then_names = branch(g, pool, indent + 4, depth, &[]);
    names.extend(then_names.iter().cloned());
    if g.below(3) != 0 {
        g.lines.push(format!("{pad}Else_V():"));
        for n in branch(g, pool, indent + 4, depth, &then_names) {
            if !names.contains(&n) {
                names.push(n);
            }
        }
    }
    names
}

fn branch(g: &mut Gen, pool: &[String], indent: usize, depth: usize, shared: &[String]) -> Vec<String> {
    let mut local = pool.to_vec();
    let mut names = Vec::new();
    for _ in 0..1 + g.below(3) {
        if depth < 2 && g.below(5) == 0 {
            names.extend(block(g, &local, indent, depth + 1));
            local.extend(names.iter().cloned());
            continue;
        }
        // Reassigning a name from the other branch exercises pair merges.
        let reuse = if !shared.is_empty() && g.below(2) == 0 {
            Some(shared[g.below(shared.len())].clone())
        } else {
            None
        };
        let made = g.statement(&local, indent, reuse.as_deref());
        local.extend(made.iter().cloned());
        names.extend(made);
    }
    names
}
