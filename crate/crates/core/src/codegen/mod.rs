// SPDX-License-Identifier: Apache-2.0
//! Verilog generation.

mod emit;
mod library;
mod lint;
mod namer;

pub use emit::{
    block_module, counter_width, emit_design, emit_ifelse_module, emit_top, module_ident, plan_design, render, Dir,
    EmitPlan, Instance, InstanceKind, Port, Wrapper,
};
pub use library::{emit_function_library, LIBRARY_MODULES};
pub(crate) use lint::module_headers;
pub use lint::{lint, Violation};
pub use namer::{rename_signals, NetNamer};

/// One emitted file, named relative to the output directory it goes in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerilogFile {
    pub name: String,
    pub text: String,
}
