// SPDX-License-Identifier: Apache-2.0
//! Per-operator latency and resource costs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::ops::OpKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Resources {
    pub lut: u64,
    pub ff: u64,
    pub dsp: u64,
    pub bram: u64,
}

impl Resources {
    pub const ZERO: Resources = Resources {
        lut: 0,
        ff: 0,
        dsp: 0,
        bram: 0,
    };

    pub fn new(lut: u64, ff: u64, dsp: u64, bram: u64) -> Self {
        Resources { lut, ff, dsp, bram }
    }
}

impl std::ops::Add for Resources {
    type Output = Resources;
    fn add(self, o: Resources) -> Resources {
        Resources {
            lut: self.lut + o.lut,
            ff: self.ff + o.ff,
            dsp: self.dsp + o.dsp,
            bram: self.bram + o.bram,
        }
    }
}

impl std::ops::AddAssign for Resources {
    fn add_assign(&mut self, o: Resources) {
        *self = *self + o;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OpCost {
    pub resources: Resources,
    pub latency: u32,
}

/// Costs keyed by [`OpKind::cost_key`]. The key `delay` holds the cost of
/// one 32-bit delay stage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostTable {
    entries: BTreeMap<String, OpCost>,
}

const DELAY_KEY: &str = "delay";

impl Default for CostTable {
    /// Mul, add, sub and value are calibrated so an unrolled 16-tap MAC
    /// comes to 4320 LUT, 1024 FF and 64 DSP; div, power, log, sqrt and
    /// sincostan are placeholders.
    fn default() -> Self {
        let rows: [(&str, u64, u64, u64); 12] = [
            ("add", 32, 32, 0),
            ("sub", 32, 32, 0),
            ("mul", 238, 32, 4),
            ("div", 1100, 32, 4),
            ("power", 900, 64, 8),
            ("log", 2400, 64, 8),
            ("sqrt", 300, 16, 0),
            ("sincostan", 1800, 96, 0),
            ("value", 0, 32, 0),
            ("compare", 32, 1, 0),
            ("merge", 32, 32, 0),
            (DELAY_KEY, 0, 32, 0),
        ];
        let entries = rows
            .iter()
            .map(|&(k, lut, ff, dsp)| {
                (
                    k.to_string(),
                    OpCost {
                        resources: Resources::new(lut, ff, dsp, 0),
                        latency: 1,
                    },
                )
            })
            .collect();
        CostTable { entries }
    }
}

impl CostTable {
    pub fn get(&self, op: &OpKind) -> Option<OpCost> {
        self.entries.get(op.cost_key()).copied()
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    /// Latency of `op`; operators missing from the table take one cycle.
    pub fn latency(&self, op: &OpKind) -> u32 {
        self.get(op).map_or(1, |c| c.latency)
    }

    pub fn resources(&self, op: &OpKind) -> Resources {
        self.get(op).map_or(Resources::ZERO, |c| c.resources)
    }

    /// Cost of a single 32-bit delay stage.
    pub fn delay_stage(&self) -> Resources {
        self.entries[DELAY_KEY].resources
    }

    pub fn set(&mut self, key: &str, cost: OpCost) {
        self.entries.insert(key.to_string(), cost);
    }

    /// Applies `key.field=value` lines (`mul.lut=238`). Blank lines and
    /// `#` comments are ignored.
    pub fn apply_overrides(&mut self, text: &str) -> Result<(), String> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |why: &str| format!("line {}: {why}: `{line}`", i + 1);
            let (lhs, rhs) = line.split_once('=').ok_or_else(|| bad("expected key.field=value"))?;
            let (key, field) = lhs
                .trim()
                .split_once('.')
                .ok_or_else(|| bad("expected key.field=value"))?;
            let value: u64 = rhs
                .trim()
                .parse()
                .map_err(|_| bad("value is not a non-negative integer"))?;
            let entry = self.entries.entry(key.to_string()).or_insert(OpCost {
                resources: Resources::ZERO,
                latency: 1,
            });
            match field {
                "lut" => entry.resources.lut = value,
                "ff" => entry.resources.ff = value,
                "dsp" => entry.resources.dsp = value,
                "bram" => entry.resources.bram = value,
                "latency" => {
                    if value == 0 || key == DELAY_KEY {
                        return Err(bad("latency must be at least 1 and cannot be set for delay"));
                    }
                    entry.latency = u32::try_from(value).map_err(|_| bad("latency too large"))?;
                }
                _ => return Err(bad("unknown field")),
            }
        }
        Ok(())
    }
}
