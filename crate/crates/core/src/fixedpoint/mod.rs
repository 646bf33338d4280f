// SPDX-License-Identifier: Apache-2.0
//! Bit-exact Q16.16 semantics of the fundamental functions and the golden
//! simulators built on them.
//!
//! Every port in a generated design carries a [`Fixed`]: a 32-bit two's
//! complement integer with 16 fractional bits. Add, sub and mul wrap like
//! plain Verilog vector arithmetic. The transcendental functions are
//! evaluated in real arithmetic and quantized through the internal format of
//! the matching hardware module before landing back in Q16.16.

mod cycle;
mod eval;
mod sim;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cycle::{simulate_held, simulate_streaming};
pub use eval::{eval_op, power_exponent, EvalOutcome, Warning};
pub use sim::{simulate_graph, SimError, SimResult};

pub const FRAC_BITS: u32 = 16;
pub const ONE_RAW: i32 = 1 << FRAC_BITS;

/// A Q16.16 sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Fixed(pub i32);

impl Fixed {
    pub const ZERO: Fixed = Fixed(0);
    pub const ONE: Fixed = Fixed(ONE_RAW);
    pub const MIN: Fixed = Fixed(i32::MIN);
    pub const MAX: Fixed = Fixed(i32::MAX);

    pub fn raw(self) -> i32 {
        self.0
    }

    pub fn from_raw(raw: i32) -> Fixed {
        Fixed(raw)
    }

    /// Integer value shifted into position; wraps outside ±32768.
    pub fn from_int(v: i32) -> Fixed {
        Fixed(v.wrapping_shl(FRAC_BITS))
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / ONE_RAW as f64
    }

    /// Unsigned two's-complement bit pattern, as written in Verilog literals.
    pub fn bits(self) -> u32 {
        self.0 as u32
    }

    pub fn hex(self) -> String {
        format!("0x{:08X}", self.bits())
    }

    /// `32'hXXXXXXXX`
    pub fn verilog_literal(self) -> String {
        format!("32'h{:08X}", self.bits())
    }

    /// Shortest decimal that maps back to the same raw value.
    pub fn decimal(self) -> String {
        // raw / 2^16 has at most 16 decimal fraction digits and is exact in f64.
        let v = self.to_f64();
        let mut s = format!("{v:.16}");
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
        s
    }
}

impl fmt::Display for Fixed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.decimal())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FixedError {
    #[error("{0} is outside the Q16.16 range [-32768, 32767.99998474]")]
    Range(f64),
    #[error("{0}")]
    Domain(String),
    #[error("{op} expects {expected} operands, got {got}")]
    Arity { op: String, expected: usize, got: usize },
    #[error("no behavioural model for library module `{0}`")]
    Opaque(String),
}

/// Rounds to nearest, ties away from zero (`number_to_hex`).
pub fn to_fixed(x: f64) -> Result<Fixed, FixedError> {
    if !x.is_finite() {
        return Err(FixedError::Range(x));
    }
    let scaled = (x * ONE_RAW as f64).round();
    if scaled < i32::MIN as f64 || scaled > i32::MAX as f64 {
        return Err(FixedError::Range(x));
    }
    Ok(Fixed(scaled as i32))
}

/// Same rounding as [`to_fixed`] but clamps instead of failing. Used when
/// folding constants whose real value leaves the representable range.
pub fn to_fixed_saturating(x: f64) -> Fixed {
    if x.is_nan() {
        return Fixed::ZERO;
    }
    let scaled = (x * ONE_RAW as f64).round();
    if scaled <= i32::MIN as f64 {
        Fixed::MIN
    } else if scaled >= i32::MAX as f64 {
        Fixed::MAX
    } else {
        Fixed(scaled as i32)
    }
}
