// SPDX-License-Identifier: Apache-2.0
//! Loop unrolling, array flattening and constant folding.
//!
//! Elaboration is deliberately lenient about rule violations that do not
//! stop it from producing a statement list (bare literals, unknown
//! functions, wrong arity, self-references). Those are collected in
//! [`Elaborated::issues`] and reported by validation together.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::ast::*;
use crate::diag::{DiagCode, Diagnostic, Span};
use crate::fixedpoint::{power_exponent, to_fixed, to_fixed_saturating, Fixed};
use crate::ops::{Comparison, OpKind};

/// Name prefix reserved for generated condition nets.
pub const COND_PREFIX: &str = "ifcond_";

/// Identifiers that would collide with Verilog keywords or wrapper signals.
pub const RESERVED_NAMES: &[&str] = &[
    "always",
    "assign",
    "begin",
    "busy",
    "case",
    "clk",
    "default",
    "else",
    "end",
    "endcase",
    "endfunction",
    "endmodule",
    "for",
    "function",
    "generate",
    "genvar",
    "if",
    "initial",
    "inout",
    "input",
    "integer",
    "localparam",
    "module",
    "negedge",
    "output",
    "parameter",
    "posedge",
    "reg",
    "rst",
    "signed",
    "start",
    "valid",
    "wire",
];

pub fn is_reserved(name: &str) -> bool {
    name.starts_with(COND_PREFIX) || name.starts_with("hls_") || RESERVED_NAMES.contains(&name)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Operand {
    Name(String),
    Const(Fixed),
}

impl Operand {
    pub fn name(&self) -> Option<&str> {
        match self {
            Operand::Name(n) => Some(n),
            Operand::Const(_) => None,
        }
    }
}

impl std::fmt::Display for Operand {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Operand::Name(n) => f.write_str(n),
            Operand::Const(c) => write!(f, "{}", c.hex()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Branch {
    If,
    Else,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockRef {
    pub id: usize,
    pub branch: Branch,
}

/// Signature of a hardware-library module callable through `Call_V`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallSig {
    pub label: String,
    /// Verilog module name inside the library file.
    pub module: String,
    /// Port names in declaration order.
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub cycles: u32,
    /// Whether the module has `clk` / `rst` ports to connect.
    pub clocked: bool,
    pub resettable: bool,
}

impl CallSig {
    pub fn n_inputs(&self) -> usize {
        self.inputs.len()
    }

    pub fn n_outputs(&self) -> usize {
        self.outputs.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Origin {
    pub line: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Statement {
    pub op: OpKind,
    pub results: Vec<String>,
    pub operands: Vec<Operand>,
    /// Innermost enclosing branch.
    pub block: Option<BlockRef>,
    /// `IfCompare` only.
    pub condition: Option<Comparison>,
    /// `IfCompare` only: the block this comparison selects.
    pub opens_block: Option<usize>,
    pub call: Option<CallSig>,
    pub origin: Origin,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockInfo {
    pub id: usize,
    pub parent: Option<BlockRef>,
    /// 1 for a top-level block, 2 for a nested one.
    pub depth: usize,
    pub cond_name: String,
    pub origin: Origin,
    /// The optional `[ins]` / `[outs]` lists of the five-argument form.
    pub declared_inputs: Option<Vec<String>>,
    pub declared_outputs: Option<Vec<String>>,
    /// Names assigned in each branch, in first-assignment order.
    pub assigned_if: Vec<String>,
    pub assigned_else: Vec<String>,
    /// Folded constant values of block-assigned names at block entry.
    pub entry_constants: BTreeMap<String, Fixed>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Elaborated {
    pub name: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub statements: Vec<Statement>,
    pub blocks: Vec<BlockInfo>,
    /// Rule violations found while elaborating; see [`super::validate_rules`].
    pub issues: Vec<Diagnostic>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ElabOptions {
    pub fold_constants: bool,
    /// Library modules visible to `Call_V`, keyed by label.
    pub calls: BTreeMap<String, CallSig>,
}

impl Default for ElabOptions {
    fn default() -> Self {
        ElabOptions {
            fold_constants: true,
            calls: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Binding {
    Input,
    Const(Fixed),
    Node,
}

struct Elab<'a> {
    opts: &'a ElabOptions,
    arrays: HashMap<String, usize>,
    inputs: BTreeSet<String>,
    outputs: BTreeSet<String>,
    env: HashMap<String, Binding>,
    vars: Vec<(String, i64)>,
    stmts: Vec<Statement>,
    blocks: Vec<BlockInfo>,
    issues: Vec<Diagnostic>,
    /// Stack of branches being elaborated, with the names each assigned.
    scopes: Vec<(BlockRef, Vec<String>)>,
}

/// Unrolls, flattens and folds a parsed program.
pub fn elaborate(prog: &SourceProgram, opts: &ElabOptions) -> Result<Elaborated, Diagnostic> {
    let mut e = Elab {
        opts,
        arrays: HashMap::new(),
        inputs: BTreeSet::new(),
        outputs: BTreeSet::new(),
        env: HashMap::new(),
        vars: Vec::new(),
        stmts: Vec::new(),
        blocks: Vec::new(),
        issues: Vec::new(),
        scopes: Vec::new(),
    };
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    for p in &prog.inputs {
        e.check_port(p);
        for n in p.expand() {
            e.env.insert(n.clone(), Binding::Input);
            e.inputs.insert(n.clone());
            inputs.push(n);
        }
    }
    for p in &prog.outputs {
        e.check_port(p);
        for n in p.expand() {
            e.outputs.insert(n.clone());
            outputs.push(n);
        }
    }
    for p in prog.inputs.iter().chain(&prog.outputs) {
        if let Some(n) = p.len {
            e.arrays.insert(p.name.clone(), n);
        }
    }
    e.body(&prog.body)?;
    Ok(Elaborated {
        name: prog.name.clone(),
        inputs,
        outputs,
        statements: e.stmts,
        blocks: e.blocks,
        issues: e.issues,
    })
}

fn err(code: DiagCode, span: Span, msg: impl Into<String>) -> Diagnostic {
    Diagnostic::new(code, span, msg)
}

impl Elab<'_> {
    fn check_port(&mut self, p: &PortDecl) {
        if is_reserved(&p.name) {
            self.issues.push(err(
                DiagCode::ReservedName,
                p.span,
                format!("`{}` is a reserved name", p.name),
            ));
        }
    }

    fn var_map(&self) -> HashMap<String, i64> {
        self.vars.iter().cloned().collect()
    }

    fn eval(&self, e: &Expr) -> Result<f64, Diagnostic> {
        e.eval(&self.var_map()).map_err(|(name, span)| {
            err(
                DiagCode::NonConstant,
                span,
                format!("`{name}` is not an elaboration-time constant"),
            )
        })
    }

    fn eval_int(&self, e: &Expr, span: Span, what: &str) -> Result<i64, Diagnostic> {
        let v = self.eval(e)?;
        if v.fract() != 0.0 || !v.is_finite() {
            return Err(err(
                DiagCode::NonConstant,
                span,
                format!("{what} `{v}` is not an integer"),
            ));
        }
        Ok(v as i64)
    }

    fn origin(&self, line: usize, text: &str) -> Origin {
        let mut text = text.to_string();
        if !self.vars.is_empty() {
            let vs: Vec<String> = self.vars.iter().map(|(n, v)| format!("{n}={v}")).collect();
            text.push_str(&format!(" [{}]", vs.join(", ")));
        }
        Origin { line, text }
    }

    fn resolve_name(&self, r: &NameRef) -> Result<String, Diagnostic> {
        let Some(idx) = &r.index else {
            return Ok(r.base.clone());
        };
        let i = self.eval_int(idx, r.span, "array index")?;
        if i < 0 {
            return Err(err(
                DiagCode::IndexRange,
                r.span,
                format!("negative index {i} into `{}`", r.base),
            ));
        }
        if let Some(&len) = self.arrays.get(&r.base) {
            if i as usize >= len {
                return Err(err(
                    DiagCode::IndexRange,
                    r.span,
                    format!("index {i} out of range for `{}[{len}]`", r.base),
                ));
            }
        }
        Ok(array_wire(&r.base, i))
    }

    fn constant(&mut self, e: &Expr, span: Span, bare: bool) -> Result<Fixed, Diagnostic> {
        let v = self.eval(e)?;
        if bare {
            self.issues
                .push(err(DiagCode::BareLiteral, span, "literal requires number_to_hex"));
            return Ok(to_fixed_saturating(v));
        }
        to_fixed(v).map_err(|x| err(DiagCode::ConstantRange, span, x.to_string()))
    }

    /// Resolves an operand argument. Also returns the source-level name, if
    /// any, for the self-reference check.
    fn operand(&mut self, a: &Arg) -> Result<(Operand, Option<String>), Diagnostic> {
        match &a.kind {
            ArgKind::Name(r) => {
                let n = self.resolve_name(r)?;
                let op = match self.env.get(&n) {
                    Some(Binding::Const(c)) => Operand::Const(*c),
                    Some(_) => Operand::Name(n.clone()),
                    None => {
                        return Err(err(
                            DiagCode::UndefinedName,
                            r.span,
                            format!("`{n}` is used before it is assigned"),
                        ))
                    }
                };
                Ok((op, Some(n)))
            }
            ArgKind::Hex(e) => Ok((Operand::Const(self.constant(e, a.span, false)?), None)),
            ArgKind::Literal(e) => Ok((Operand::Const(self.constant(e, a.span, true)?), None)),
            ArgKind::List(_) | ArgKind::Str(_) => Err(err(
                DiagCode::Syntax,
                a.span,
                "expected a quoted name or number_to_hex(...)",
            )),
        }
    }

    fn result(&self, a: &Arg) -> Result<String, Diagnostic> {
        match &a.kind {
            ArgKind::Name(r) => self.resolve_name(r),
            _ => Err(err(DiagCode::Syntax, a.span, "result must be a quoted name")),
        }
    }

    fn body(&mut self, body: &[RawStmt]) -> Result<(), Diagnostic> {
        for s in body {
            match s {
                RawStmt::Call(c) => self.call(c)?,
                RawStmt::For(f) => {
                    let start = self.eval_int(&f.start, f.span, "loop bound")?;
                    let end = self.eval_int(&f.end, f.span, "loop bound")?;
                    for i in start..end {
                        self.vars.push((f.var.clone(), i));
                        let r = self.body(&f.body);
                        self.vars.pop();
                        r?;
                    }
                }
                RawStmt::If(b) => self.if_block(b)?,
            }
        }
        Ok(())
    }

    fn current_block(&self) -> Option<BlockRef> {
        self.scopes.last().map(|(b, _)| *b)
    }

    fn assign(&mut self, name: &str, binding: Binding) {
        if let Some((_, names)) = self.scopes.last_mut() {
            if !names.iter().any(|n| n == name) {
                names.push(name.to_string());
            }
        }
        self.env.insert(name.to_string(), binding);
    }

    fn check_results(&mut self, results: &[String], operand_names: &[Option<String>], span: Span) {
        for (i, r) in results.iter().enumerate() {
            if operand_names.iter().flatten().any(|o| o == r) {
                self.issues.push(err(
                    DiagCode::SelfReference,
                    span,
                    format!("result equals operand: `{r}` is both read and written; use a new name"),
                ));
            }
            if results[..i].contains(r) {
                self.issues.push(err(
                    DiagCode::SelfReference,
                    span,
                    format!("`{r}` appears twice among the results"),
                ));
            }
            if self.inputs.contains(r) {
                self.issues.push(err(
                    DiagCode::InputWrite,
                    span,
                    format!("input port `{r}` cannot be assigned"),
                ));
            }
            if is_reserved(r) {
                self.issues
                    .push(err(DiagCode::ReservedName, span, format!("`{r}` is a reserved name")));
            }
        }
    }

    fn call(&mut self, c: &RawCall) -> Result<(), Diagnostic> {
        if c.func == "Call_V" {
            return self.library_call(c);
        }
        let Some(op) = OpKind::from_function(&c.func) else {
            self.issues.push(err(
                DiagCode::UnknownFunction,
                c.span,
                format!("unknown function `{}`", c.func),
            ));
            self.mark_opaque(&c.args);
            return Ok(());
        };
        let (n_res, n_ops) = op.arity().expect("fixed arity");
        if c.args.len() != n_res + n_ops {
            self.issues.push(err(
                DiagCode::Arity,
                c.span,
                format!("{} takes {} arguments, got {}", c.func, n_res + n_ops, c.args.len()),
            ));
            self.mark_opaque(&c.args);
            return Ok(());
        }
        let mut results = Vec::new();
        for a in &c.args[..n_res] {
            results.push(self.result(a)?);
        }
        let mut operands = Vec::new();
        let mut names = Vec::new();
        for a in &c.args[n_res..] {
            let (o, n) = self.operand(a)?;
            operands.push(o);
            names.push(n);
        }
        self.check_results(&results, &names, c.span);
        if op == OpKind::Power {
            if let Operand::Const(e) = operands[1] {
                if let Err(x) = power_exponent(e) {
                    self.issues
                        .push(err(DiagCode::PowerExponent, c.args[2].span, x.to_string()));
                }
            }
        }
        let origin = self.origin(c.span.line, &c.text);
        let block = self.current_block();
        let all_const = operands.iter().all(|o| matches!(o, Operand::Const(_)));
        if self.opts.fold_constants && block.is_none() && all_const {
            let args: Vec<Fixed> = operands
                .iter()
                .map(|o| match o {
                    Operand::Const(c) => *c,
                    Operand::Name(_) => unreachable!(),
                })
                .collect();
            if let Some(values) = fold(&op, &args) {
                for (r, v) in results.iter().zip(values) {
                    if self.outputs.contains(r) {
                        // Output ports need a driver, so keep the value as a node.
                        self.stmts.push(Statement {
                            op: OpKind::Value,
                            results: vec![r.clone()],
                            operands: vec![Operand::Const(v)],
                            block: None,
                            condition: None,
                            opens_block: None,
                            call: None,
                            origin: origin.clone(),
                        });
                        self.assign(r, Binding::Node);
                    } else {
                        self.assign(r, Binding::Const(v));
                    }
                }
                return Ok(());
            }
        }
        for r in &results {
            self.assign(r, Binding::Node);
        }
        self.stmts.push(Statement {
            op,
            results,
            operands,
            block,
            condition: None,
            opens_block: None,
            call: None,
            origin,
        });
        Ok(())
    }

    /// Defines every name-like argument so that one bad call does not
    /// cascade into undefined-name errors downstream.
    fn mark_opaque(&mut self, args: &[Arg]) {
        for a in args {
            if let ArgKind::Name(r) = &a.kind {
                if let Ok(n) = self.resolve_name(r) {
                    if !self.env.contains_key(&n) {
                        self.assign(&n, Binding::Node);
                    }
                }
            }
        }
    }

    fn library_call(&mut self, c: &RawCall) -> Result<(), Diagnostic> {
        let label = match c.args.first().map(|a| &a.kind) {
            Some(ArgKind::Str(s)) => s.clone(),
            _ => return Err(err(DiagCode::Syntax, c.span, "Call_V needs a quoted label first")),
        };
        let Some(sig) = self.opts.calls.get(&label).cloned() else {
            self.issues.push(err(
                DiagCode::UnknownFunction,
                c.span,
                format!("no hardware-library module labelled `{label}`"),
            ));
            self.mark_opaque(&c.args[1..]);
            return Ok(());
        };
        let args = &c.args[1..];
        if args.len() != sig.n_inputs() + sig.n_outputs() {
            self.issues.push(err(
                DiagCode::Arity,
                c.span,
                format!(
                    "`{label}` has {} outputs and {} inputs, got {} names",
                    sig.n_outputs(),
                    sig.n_inputs(),
                    args.len()
                ),
            ));
            self.mark_opaque(args);
            return Ok(());
        }
        let mut results = Vec::new();
        for a in &args[..sig.n_outputs()] {
            results.push(self.result(a)?);
        }
        let mut operands = Vec::new();
        let mut names = Vec::new();
        for a in &args[sig.n_outputs()..] {
            let (o, n) = self.operand(a)?;
            operands.push(o);
            names.push(n);
        }
        self.check_results(&results, &names, c.span);
        for r in &results {
            self.assign(r, Binding::Node);
        }
        let origin = self.origin(c.span.line, &c.text);
        self.stmts.push(Statement {
            op: OpKind::Call(label),
            results,
            operands,
            block: self.current_block(),
            condition: None,
            opens_block: None,
            call: Some(sig),
            origin,
        });
        Ok(())
    }

    fn name_list(&self, a: Option<&Arg>) -> Result<Option<Vec<String>>, Diagnostic> {
        match a.map(|a| (&a.kind, a.span)) {
            None => Ok(None),
            Some((ArgKind::List(names), _)) => Ok(Some(
                names.iter().map(|r| self.resolve_name(r)).collect::<Result<_, _>>()?,
            )),
            Some((_, span)) => Err(err(DiagCode::Syntax, span, "expected a list of quoted names")),
        }
    }

    fn if_block(&mut self, b: &RawIf) -> Result<(), Diagnostic> {
        if b.args.len() != 3 && b.args.len() != 5 {
            return Err(err(
                DiagCode::Arity,
                b.span,
                format!("If_V takes 3 or 5 arguments, got {}", b.args.len()),
            ));
        }
        let cmp = match &b.args[2].kind {
            ArgKind::Str(s) => Comparison::parse(s)
                .ok_or_else(|| err(DiagCode::Syntax, b.args[2].span, format!("unknown comparison `{s}`")))?,
            _ => {
                return Err(err(
                    DiagCode::Syntax,
                    b.args[2].span,
                    "comparison must be a quoted token",
                ))
            }
        };
        let (lhs, _) = self.operand(&b.args[0])?;
        let (rhs, _) = self.operand(&b.args[1])?;
        let declared_inputs = self.name_list(b.args.get(3))?;
        let declared_outputs = self.name_list(b.args.get(4))?;

        let id = self.blocks.len();
        let cond_name = format!("{COND_PREFIX}{id}");
        let parent = self.current_block();
        let depth = self.scopes.len() + 1;
        let origin = self.origin(b.span.line, &b.text);
        self.stmts.push(Statement {
            op: OpKind::IfCompare,
            results: vec![cond_name.clone()],
            operands: vec![lhs, rhs],
            block: parent,
            condition: Some(cmp),
            opens_block: Some(id),
            call: None,
            origin: origin.clone(),
        });
        self.blocks.push(BlockInfo {
            id,
            parent,
            depth,
            cond_name,
            origin,
            declared_inputs,
            declared_outputs,
            assigned_if: Vec::new(),
            assigned_else: Vec::new(),
            entry_constants: BTreeMap::new(),
        });

        let entry_env = self.env.clone();
        self.scopes.push((BlockRef { id, branch: Branch::If }, Vec::new()));
        let r = self.body(&b.then_body);
        let (_, assigned_if) = self.scopes.pop().expect("scope");
        r?;
        self.env = entry_env.clone();
        self.scopes.push((
            BlockRef {
                id,
                branch: Branch::Else,
            },
            Vec::new(),
        ));
        let r = self.body(&b.else_body);
        let (_, assigned_else) = self.scopes.pop().expect("scope");
        r?;
        self.env = entry_env;

        let mut entry_constants = BTreeMap::new();
        for n in assigned_if.iter().chain(&assigned_else) {
            if let Some(Binding::Const(c)) = self.env.get(n) {
                entry_constants.insert(n.clone(), *c);
            }
        }
        for n in assigned_if.iter().chain(&assigned_else) {
            self.assign(&n.clone(), Binding::Node);
        }
        let info = &mut self.blocks[id];
        info.assigned_if = assigned_if;
        info.assigned_else = assigned_else;
        info.entry_constants = entry_constants;
        Ok(())
    }
}

fn round_div(n: i128, d: i128) -> i128 {
    let q = n / d;
    let r = n % d;
    if 2 * r.abs() >= d.abs() {
        q + if (n < 0) == (d < 0) { 1 } else { -1 }
    } else {
        q
    }
}

fn clamp_raw(v: i128) -> Fixed {
    Fixed(v.clamp(i32::MIN as i128, i32::MAX as i128) as i32)
}

/// Real-valued evaluation of a constant statement, rounded to nearest and
/// saturated into Q16.16. `None` leaves the statement unfolded.
pub fn fold(op: &OpKind, args: &[Fixed]) -> Option<Vec<Fixed>> {
    let a = |i: usize| args[i].0 as i128;
    let f = |i: usize| args[i].to_f64();
    Some(match op {
        OpKind::Add => vec![clamp_raw(a(0) + a(1))],
        OpKind::Sub => vec![clamp_raw(a(0) - a(1))],
        OpKind::Mul => vec![clamp_raw(round_div(a(0) * a(1), 1 << 16))],
        OpKind::Div => {
            if a(1) == 0 {
                vec![match a(0).signum() {
                    1 => Fixed::MAX,
                    -1 => Fixed::MIN,
                    _ => Fixed::ZERO,
                }]
            } else {
                vec![clamp_raw(round_div(a(0) << 16, a(1)))]
            }
        }
        OpKind::Power => {
            let e = power_exponent(args[1]).ok()?;
            vec![to_fixed_saturating(f(0).powi(e))]
        }
        OpKind::Log => {
            if a(0) <= 0 || args[0] == Fixed::ONE || a(1) <= 0 {
                return None;
            }
            vec![to_fixed_saturating(f(1).ln() / f(0).ln())]
        }
        OpKind::Sqrt => {
            if a(0) < 0 {
                return None;
            }
            vec![to_fixed_saturating(f(0).sqrt())]
        }
        OpKind::SinCosTan => {
            let x = f(0);
            vec![
                to_fixed_saturating(x.sin()),
                to_fixed_saturating(x.cos()),
                to_fixed_saturating(x.tan()),
            ]
        }
        OpKind::Value => vec![args[0]],
        OpKind::IfCompare | OpKind::Merge | OpKind::Call(_) => return None,
    })
}
