// SPDX-License-Identifier: Apache-2.0
//! Compiler from a call-statement dataflow dialect to unrolled or
//! pipelined Verilog, with a golden fixed-point simulator, testbench
//! generation, resource estimation and a reusable module library.

pub mod codegen;
pub mod costs;
pub mod diag;
pub mod driver;
pub mod estimator;
pub mod fixedpoint;
pub mod frontend;
pub mod hwlib;
pub mod ir;
pub mod ops;
pub mod scheduler;
pub mod testbench;

#[cfg(test)]
mod testutil;
