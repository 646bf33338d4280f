// SPDX-License-Identifier: Apache-2.0
//! Numbered diagnostics reported to the user.

use std::fmt;

/// Stable diagnostic codes. The numeric value is printed as `E0NN`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DiagCode {
    Syntax = 1,
    PortLimit = 2,
    BareLiteral = 3,
    SelfReference = 4,
    NestingDepth = 5,
    UnknownFunction = 6,
    InputWrite = 7,
    UndefinedName = 8,
    NonConstant = 9,
    DuplicatePort = 10,
    UndrivenOutput = 11,
    Arity = 12,
    ConstantRange = 13,
    PowerExponent = 14,
    ReservedName = 15,
    IndexRange = 16,
    Internal = 99,
}

impl DiagCode {
    pub fn number(self) -> u32 {
        self as u32
    }
}

impl fmt::Display for DiagCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "E{:03}", self.number())
    }
}

/// 1-based source position. Line 0 means "no position".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

impl Span {
    pub fn new(line: usize, col: usize) -> Self {
        Span { line, col }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub code: DiagCode,
    pub span: Span,
    pub message: String,
}

impl Diagnostic {
    pub fn new(code: DiagCode, span: Span, message: impl Into<String>) -> Self {
        Diagnostic {
            code,
            span,
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.span.line > 0 {
            write!(
                f,
                "error[{}]: {}:{}: {}",
                self.code, self.span.line, self.span.col, self.message
            )
        } else {
            write!(f, "error[{}]: {}", self.code, self.message)
        }
    }
}

impl std::error::Error for Diagnostic {}
