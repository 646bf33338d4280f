// SPDX-License-Identifier: Apache-2.0
//! Operator vocabulary shared by every stage of the compiler.

use std::fmt;

use serde::{Deserialize, Serialize};

/// A fundamental function, or a call into the user hardware library.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OpKind {
    Add,
    Sub,
    Mul,
    Div,
    Power,
    Log,
    Sqrt,
    SinCosTan,
    Value,
    IfCompare,
    Merge,
    Call(String),
}

impl OpKind {
    /// Resolves a source-level function name. `If_V` and `Call_V` are
    /// handled by the parser and elaborator and are not returned here.
    pub fn from_function(name: &str) -> Option<OpKind> {
        Some(match name {
            "Addition_V" => OpKind::Add,
            "Subtraction_V" => OpKind::Sub,
            "Multiplication_V" => OpKind::Mul,
            "Division_V" => OpKind::Div,
            "Power_V" => OpKind::Power,
            "Logarithm_V" => OpKind::Log,
            "Sqrt_V" => OpKind::Sqrt,
            "SinCosTan_V" => OpKind::SinCosTan,
            "Value_V" => OpKind::Value,
            _ => return None,
        })
    }

    /// Source-level spelling of the function.
    pub fn function_name(&self) -> &str {
        match self {
            OpKind::Add => "Addition_V",
            OpKind::Sub => "Subtraction_V",
            OpKind::Mul => "Multiplication_V",
            OpKind::Div => "Division_V",
            OpKind::Power => "Power_V",
            OpKind::Log => "Logarithm_V",
            OpKind::Sqrt => "Sqrt_V",
            OpKind::SinCosTan => "SinCosTan_V",
            OpKind::Value => "Value_V",
            OpKind::IfCompare => "If_V",
            OpKind::Merge => "Merge",
            OpKind::Call(label) => label,
        }
    }

    /// Name of the Verilog module implementing the operator.
    pub fn module_name(&self) -> &str {
        match self {
            OpKind::IfCompare => "Compare_V",
            OpKind::Merge => "Merge_V",
            other => other.function_name(),
        }
    }

    /// `(results, operands)` for the fixed-arity fundamental functions.
    pub fn arity(&self) -> Option<(usize, usize)> {
        Some(match self {
            OpKind::Add | OpKind::Sub | OpKind::Mul | OpKind::Div | OpKind::Power | OpKind::Log => (1, 2),
            OpKind::Sqrt | OpKind::Value => (1, 1),
            OpKind::SinCosTan => (3, 1),
            OpKind::IfCompare => (1, 2),
            OpKind::Merge => (1, 2),
            OpKind::Call(_) => return None,
        })
    }

    /// Key used in cost files (`mul.lut=238`).
    pub fn cost_key(&self) -> &str {
        match self {
            OpKind::Add => "add",
            OpKind::Sub => "sub",
            OpKind::Mul => "mul",
            OpKind::Div => "div",
            OpKind::Power => "power",
            OpKind::Log => "log",
            OpKind::Sqrt => "sqrt",
            OpKind::SinCosTan => "sincostan",
            OpKind::Value => "value",
            OpKind::IfCompare => "compare",
            OpKind::Merge => "merge",
            OpKind::Call(label) => label,
        }
    }

    /// Operators whose golden model goes through a real-valued approximation.
    pub fn is_transcendental(&self) -> bool {
        matches!(self, OpKind::Log | OpKind::Sqrt | OpKind::SinCosTan)
    }

    /// All built-in operators, in cost-table order.
    pub fn builtins() -> [OpKind; 11] {
        [
            OpKind::Add,
            OpKind::Sub,
            OpKind::Mul,
            OpKind::Div,
            OpKind::Power,
            OpKind::Log,
            OpKind::Sqrt,
            OpKind::SinCosTan,
            OpKind::Value,
            OpKind::IfCompare,
            OpKind::Merge,
        ]
    }
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.function_name())
    }
}

/// Comparison carried by an `If_V` condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Comparison {
    Gt,
    Lt,
    Ge,
    Le,
    Eq,
    Ne,
}

impl Comparison {
    pub fn parse(token: &str) -> Option<Comparison> {
        Some(match token {
            ">" => Comparison::Gt,
            "<" => Comparison::Lt,
            ">=" => Comparison::Ge,
            "<=" => Comparison::Le,
            "==" => Comparison::Eq,
            "!=" => Comparison::Ne,
            _ => return None,
        })
    }

    pub fn token(self) -> &'static str {
        match self {
            Comparison::Gt => ">",
            Comparison::Lt => "<",
            Comparison::Ge => ">=",
            Comparison::Le => "<=",
            Comparison::Eq => "==",
            Comparison::Ne => "!=",
        }
    }

    /// Encoding of the `OP` parameter of `Compare_V`.
    pub fn code(self) -> u8 {
        match self {
            Comparison::Gt => 0,
            Comparison::Lt => 1,
            Comparison::Ge => 2,
            Comparison::Le => 3,
            Comparison::Eq => 4,
            Comparison::Ne => 5,
        }
    }

    pub fn holds(self, lhs: i32, rhs: i32) -> bool {
        match self {
            Comparison::Gt => lhs > rhs,
            Comparison::Lt => lhs < rhs,
            Comparison::Ge => lhs >= rhs,
            Comparison::Le => lhs <= rhs,
            Comparison::Eq => lhs == rhs,
            Comparison::Ne => lhs != rhs,
        }
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}
