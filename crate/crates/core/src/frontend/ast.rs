// SPDX-License-Identifier: Apache-2.0
//! Unexpanded source program, as written.

use std::collections::HashMap;

use crate::diag::Span;

/// Loop-variable and `pi` aware constant expression.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(String, Span),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    FloorDiv,
    Rem,
}

impl Expr {
    /// Evaluates against loop bindings. Returns the offending identifier
    /// when it is neither a bound loop variable nor `pi`.
    pub fn eval(&self, vars: &HashMap<String, i64>) -> Result<f64, (String, Span)> {
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::Var(name, span) => match name.as_str() {
                "pi" | "PI" => std::f64::consts::PI,
                _ => match vars.get(name) {
                    Some(v) => *v as f64,
                    None => return Err((name.clone(), *span)),
                },
            },
            Expr::Neg(e) => -e.eval(vars)?,
            Expr::Bin(op, l, r) => {
                let (a, b) = (l.eval(vars)?, r.eval(vars)?);
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::FloorDiv => (a / b).floor(),
                    BinOp::Rem => a - b * (a / b).floor(),
                }
            }
        })
    }

    /// True when any identifier (loop variable or `pi`) appears.
    pub fn references_vars(&self) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var(..) => true,
            Expr::Neg(e) => e.references_vars(),
            Expr::Bin(_, l, r) => l.references_vars() || r.references_vars(),
        }
    }
}

/// `base` or `base[index]` inside a quoted argument.
#[derive(Debug, Clone, PartialEq)]
pub struct NameRef {
    pub base: String,
    pub index: Option<Expr>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ArgKind {
    Name(NameRef),
    /// `number_to_hex(expr)`
    Hex(Expr),
    /// Unconverted numeric expression; flagged by validation.
    Literal(Expr),
    List(Vec<NameRef>),
    /// Plain string that is not a name: comparison tokens and library labels.
    Str(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Arg {
    pub kind: ArgKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawCall {
    pub func: String,
    pub args: Vec<Arg>,
    pub span: Span,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawFor {
    pub var: String,
    pub start: Expr,
    pub end: Expr,
    pub body: Vec<RawStmt>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawIf {
    /// `comp1, comp2, condition[, inputs, outputs]`
    pub args: Vec<Arg>,
    pub then_body: Vec<RawStmt>,
    pub else_body: Vec<RawStmt>,
    pub span: Span,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RawStmt {
    Call(RawCall),
    For(RawFor),
    If(RawIf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PortDecl {
    pub name: String,
    /// Element count for array ports (`"A[16]"`).
    pub len: Option<usize>,
    pub span: Span,
}

impl PortDecl {
    /// Flattened port names in declaration order.
    pub fn expand(&self) -> Vec<String> {
        match self.len {
            None => vec![self.name.clone()],
            Some(n) => (0..n).map(|i| array_wire(&self.name, i as i64)).collect(),
        }
    }
}

/// Flattened name of an array element.
pub fn array_wire(base: &str, index: i64) -> String {
    format!("array_{base}_wire_{index}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceProgram {
    pub name: String,
    pub inputs: Vec<PortDecl>,
    pub outputs: Vec<PortDecl>,
    pub body: Vec<RawStmt>,
}

/// Maximum names accepted by each of `input_define` / `output_define`.
pub const MAX_PORT_NAMES: usize = 20;
/// Maximum `If_V` nesting depth.
pub const MAX_NESTING: usize = 2;
