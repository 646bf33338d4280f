// SPDX-License-Identifier: Apache-2.0
//! Source dialect: parsing, elaboration and rule validation.

pub mod ast;
mod elaborate;
mod lexer;
mod parser;
mod validate;

pub use ast::{array_wire, SourceProgram};
pub use elaborate::{
    elaborate, fold, is_reserved, BlockInfo, BlockRef, Branch, CallSig, ElabOptions, Elaborated, Operand, Origin,
    Statement, COND_PREFIX,
};
pub use parser::parse_source;
pub use validate::validate_rules;
