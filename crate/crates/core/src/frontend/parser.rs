// SPDX-License-Identifier: Apache-2.0
//! Indentation-delimited recursive-descent parser.

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use crate::diag::{DiagCode, Diagnostic, Span};

const INDENT: usize = 4;

struct Line {
    number: usize,
    indent: usize,
    tokens: Vec<Token>,
    text: String,
}

fn syntax(span: Span, msg: impl Into<String>) -> Diagnostic {
    Diagnostic::new(DiagCode::Syntax, span, msg)
}

/// Parses one design file. `name` becomes the top module name.
pub fn parse_source(text: &str, name: &str) -> Result<SourceProgram, Diagnostic> {
    let mut lines = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let number = idx + 1;
        let indent = raw.chars().take_while(|c| *c == ' ').count();
        if raw[indent..].starts_with('\t') {
            return Err(syntax(
                Span::new(number, indent + 1),
                "tabs are not allowed for indentation",
            ));
        }
        let tokens = tokenize(&raw[indent..], number, indent + 1)?;
        if tokens.is_empty() {
            continue;
        }
        if indent % INDENT != 0 {
            return Err(syntax(
                Span::new(number, 1),
                format!("indentation must be a multiple of {INDENT} spaces"),
            ));
        }
        let text = strip_comment(raw[indent..].trim_end()).to_string();
        lines.push(Line {
            number,
            indent,
            tokens,
            text,
        });
    }
    let mut p = Parser {
        lines,
        pos: 0,
        inputs: Vec::new(),
        outputs: Vec::new(),
    };
    let body = p.block(0, 0, true)?;
    if p.pos < p.lines.len() {
        let l = &p.lines[p.pos];
        return Err(syntax(Span::new(l.number, l.indent + 1), "unexpected indentation"));
    }
    check_ports(&p.inputs, "input_define")?;
    check_ports(&p.outputs, "output_define")?;
    let mut seen = std::collections::HashSet::new();
    for port in p.inputs.iter().chain(&p.outputs) {
        if !seen.insert(port.name.clone()) {
            return Err(Diagnostic::new(
                DiagCode::DuplicatePort,
                port.span,
                format!("port `{}` is declared more than once", port.name),
            ));
        }
    }
    Ok(SourceProgram {
        name: name.to_string(),
        inputs: p.inputs,
        outputs: p.outputs,
        body,
    })
}

fn strip_comment(s: &str) -> &str {
    let mut quote = None;
    for (i, c) in s.char_indices() {
        match (quote, c) {
            (None, '"' | '\'') => quote = Some(c),
            (Some(q), c) if c == q => quote = None,
            (None, '#') => return s[..i].trim_end(),
            _ => {}
        }
    }
    s
}

fn check_ports(ports: &[PortDecl], what: &str) -> Result<(), Diagnostic> {
    if ports.len() > MAX_PORT_NAMES {
        return Err(Diagnostic::new(
            DiagCode::PortLimit,
            ports[MAX_PORT_NAMES].span,
            format!(
                "{what} declares {} names; at most {MAX_PORT_NAMES} are allowed",
                ports.len()
            ),
        ));
    }
    Ok(())
}

struct Parser {
    lines: Vec<Line>,
    pos: usize,
    inputs: Vec<PortDecl>,
    outputs: Vec<PortDecl>,
}

impl Parser {
    fn block(&mut self, indent: usize, if_depth: usize, top: bool) -> Result<Vec<RawStmt>, Diagnostic> {
        let mut out = Vec::new();
        while self.pos < self.lines.len() {
            let line = &self.lines[self.pos];
            if line.indent < indent {
                break;
            }
            if line.indent > indent {
                return Err(syntax(
                    Span::new(line.number, line.indent + 1),
                    "unexpected indentation",
                ));
            }
            let first = line.tokens[0].clone();
            let head = match &first.tok {
                Tok::Ident(s) => s.clone(),
                _ => return Err(syntax(first.span, "expected a statement")),
            };
            match head.as_str() {
                "for" => out.push(self.for_loop(indent, if_depth)?),
                "If_V" => out.push(self.if_block(indent, if_depth)?),
                "Else_V" => return Err(syntax(first.span, "`Else_V` without a preceding `If_V` block")),
                "input_define" | "output_define" => {
                    if !top {
                        return Err(syntax(first.span, format!("`{head}` is only allowed at top level")));
                    }
                    self.ports(&head)?;
                }
                _ => out.push(RawStmt::Call(self.call_line()?)),
            }
        }
        Ok(out)
    }

    fn nested_block(&mut self, indent: usize, if_depth: usize, header: Span) -> Result<Vec<RawStmt>, Diagnostic> {
        match self.lines.get(self.pos) {
            Some(l) if l.indent == indent + INDENT => self.block(indent + INDENT, if_depth, false),
            _ => Err(syntax(header, "expected an indented block")),
        }
    }

    fn for_loop(&mut self, indent: usize, if_depth: usize) -> Result<RawStmt, Diagnostic> {
        let line = &self.lines[self.pos];
        let span = line.tokens[0].span;
        let mut c = Cursor::new(&line.tokens, span);
        c.next(); // for
        let var = c.ident()?;
        c.keyword("in")?;
        c.keyword("range")?;
        c.expect(Tok::LParen, "`(`")?;
        let first = c.expr()?;
        let (start, end) = if c.eat(&Tok::Comma) {
            (first, c.expr()?)
        } else {
            (Expr::Num(0.0), first)
        };
        c.expect(Tok::RParen, "`)`")?;
        c.expect(Tok::Colon, "`:`")?;
        c.end()?;
        self.pos += 1;
        let body = self.nested_block(indent, if_depth, span)?;
        Ok(RawStmt::For(RawFor {
            var,
            start,
            end,
            body,
            span,
        }))
    }

    fn if_block(&mut self, indent: usize, if_depth: usize) -> Result<RawStmt, Diagnostic> {
        let line = &self.lines[self.pos];
        let span = line.tokens[0].span;
        if if_depth + 1 > MAX_NESTING {
            return Err(Diagnostic::new(
                DiagCode::NestingDepth,
                span,
                format!("if/else blocks may be nested at most {MAX_NESTING} levels deep"),
            ));
        }
        let text = line.text.clone();
        let mut c = Cursor::new(&line.tokens, span);
        c.next();
        let args = c.call_args("If_V")?;
        c.expect(Tok::Colon, "`:` after If_V(...)")?;
        c.end()?;
        self.pos += 1;
        let then_body = self.nested_block(indent, if_depth + 1, span)?;
        let mut else_body = Vec::new();
        if let Some(l) = self.lines.get(self.pos) {
            if l.indent == indent && matches!(&l.tokens[0].tok, Tok::Ident(s) if s == "Else_V") {
                let espan = l.tokens[0].span;
                let mut c = Cursor::new(&l.tokens, espan);
                c.next();
                c.expect(Tok::LParen, "`(`")?;
                c.expect(Tok::RParen, "`)`")?;
                c.expect(Tok::Colon, "`:`")?;
                c.end()?;
                self.pos += 1;
                else_body = self.nested_block(indent, if_depth + 1, espan)?;
            }
        }
        Ok(RawStmt::If(RawIf {
            args,
            then_body,
            else_body,
            span,
            text,
        }))
    }

    fn call_line(&mut self) -> Result<RawCall, Diagnostic> {
        let line = &self.lines[self.pos];
        let span = line.tokens[0].span;
        let text = line.text.clone();
        let mut c = Cursor::new(&line.tokens, span);
        let func = c.ident()?;
        let args = c.call_args(&func)?;
        c.end()?;
        self.pos += 1;
        Ok(RawCall { func, args, span, text })
    }

    fn ports(&mut self, which: &str) -> Result<(), Diagnostic> {
        let line = &self.lines[self.pos];
        let span = line.tokens[0].span;
        let mut c = Cursor::new(&line.tokens, span);
        c.next();
        c.expect(Tok::LParen, "`(`")?;
        let mut decls = Vec::new();
        if !c.eat(&Tok::RParen) {
            loop {
                let t = c.next_or_eof("a quoted port name")?;
                let Tok::Str(s) = &t.tok else {
                    return Err(syntax(t.span, "port names must be quoted strings"));
                };
                let r = parse_name_ref(s, t.span)?;
                let len = match r.index {
                    None => None,
                    Some(e) => {
                        let v = e
                            .eval(&Default::default())
                            .map_err(|(n, sp)| syntax(sp, format!("`{n}` is not a constant")))?;
                        if v.fract() != 0.0 || v < 1.0 {
                            return Err(syntax(t.span, "array port length must be a positive integer"));
                        }
                        Some(v as usize)
                    }
                };
                decls.push(PortDecl {
                    name: r.base,
                    len,
                    span: t.span,
                });
                if c.eat(&Tok::RParen) {
                    break;
                }
                c.expect(Tok::Comma, "`,` or `)`")?;
            }
        }
        c.end()?;
        self.pos += 1;
        if which == "input_define" {
            self.inputs.extend(decls);
        } else {
            self.outputs.extend(decls);
        }
        Ok(())
    }
}

/// Parses the inside of a quoted name argument: `x` or `x[expr]`.
pub fn parse_name_ref(s: &str, span: Span) -> Result<NameRef, Diagnostic> {
    let toks = tokenize(s, span.line, span.col + 1)?;
    let mut c = Cursor::new(&toks, span);
    let base = match c.next_or_eof("a name")? {
        Token { tok: Tok::Ident(n), .. } => n.clone(),
        t => return Err(syntax(t.span, format!("`{s}` is not a valid name"))),
    };
    let index = if c.eat(&Tok::LBracket) {
        let e = c.expr()?;
        c.expect(Tok::RBracket, "`]`")?;
        Some(e)
    } else {
        None
    };
    c.end()?;
    Ok(NameRef { base, index, span })
}

struct Cursor<'a> {
    toks: &'a [Token],
    i: usize,
    line_span: Span,
}

impl<'a> Cursor<'a> {
    fn new(toks: &'a [Token], line_span: Span) -> Self {
        Cursor { toks, i: 0, line_span }
    }

    fn peek(&self) -> Option<&'a Token> {
        self.toks.get(self.i)
    }

    fn next(&mut self) -> Option<&'a Token> {
        let t = self.toks.get(self.i);
        self.i += 1;
        t
    }

    fn eof_span(&self) -> Span {
        self.toks
            .last()
            .map(|t| Span::new(t.span.line, t.span.col + 1))
            .unwrap_or(self.line_span)
    }

    fn next_or_eof(&mut self, what: &str) -> Result<&'a Token, Diagnostic> {
        let span = self.eof_span();
        self.next()
            .ok_or_else(|| syntax(span, format!("expected {what}, found end of line")))
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek().is_some_and(|t| &t.tok == tok) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), Diagnostic> {
        let t = self.next_or_eof(what)?;
        if t.tok == tok {
            Ok(())
        } else {
            Err(syntax(t.span, format!("expected {what}")))
        }
    }

    fn ident(&mut self) -> Result<String, Diagnostic> {
        match self.next_or_eof("an identifier")? {
            Token { tok: Tok::Ident(s), .. } => Ok(s.clone()),
            t => Err(syntax(t.span, "expected an identifier")),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), Diagnostic> {
        let t = self.next_or_eof(kw)?;
        match &t.tok {
            Tok::Ident(s) if s == kw => Ok(()),
            _ => Err(syntax(t.span, format!("expected `{kw}`"))),
        }
    }

    fn end(&self) -> Result<(), Diagnostic> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(syntax(t.span, "unexpected trailing tokens")),
        }
    }

    fn call_args(&mut self, func: &str) -> Result<Vec<Arg>, Diagnostic> {
        self.expect(Tok::LParen, "`(`")?;
        let mut args = Vec::new();
        if self.eat(&Tok::RParen) {
            return Ok(args);
        }
        loop {
            let position = args.len();
            args.push(self.arg(func, position)?);
            if self.eat(&Tok::RParen) {
                return Ok(args);
            }
            self.expect(Tok::Comma, "`,` or `)`")?;
        }
    }

    fn arg(&mut self, func: &str, position: usize) -> Result<Arg, Diagnostic> {
        let t = self
            .peek()
            .ok_or_else(|| syntax(self.eof_span(), "expected an argument"))?;
        let span = t.span;
        let kind = match &t.tok {
            Tok::Str(s) => {
                self.i += 1;
                let plain = (func == "If_V" && position == 2) || (func == "Call_V" && position == 0);
                if plain {
                    ArgKind::Str(s.clone())
                } else {
                    ArgKind::Name(parse_name_ref(s, span)?)
                }
            }
            Tok::LBracket => {
                self.i += 1;
                let mut names = Vec::new();
                if !self.eat(&Tok::RBracket) {
                    loop {
                        let t = self.next_or_eof("a quoted name")?;
                        let Tok::Str(s) = &t.tok else {
                            return Err(syntax(t.span, "list elements must be quoted names"));
                        };
                        names.push(parse_name_ref(s, t.span)?);
                        if self.eat(&Tok::RBracket) {
                            break;
                        }
                        self.expect(Tok::Comma, "`,` or `]`")?;
                    }
                }
                ArgKind::List(names)
            }
            Tok::Ident(s)
                if s == "number_to_hex" && self.toks.get(self.i + 1).is_some_and(|n| n.tok == Tok::LParen) =>
            {
                self.i += 2;
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                ArgKind::Hex(e)
            }
            _ => ArgKind::Literal(self.expr()?),
        };
        Ok(Arg { kind, span })
    }

    fn expr(&mut self) -> Result<Expr, Diagnostic> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().map(|t| &t.tok) {
                Some(Tok::Plus) => BinOp::Add,
                Some(Tok::Minus) => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.i += 1;
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, Diagnostic> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().map(|t| &t.tok) {
                Some(Tok::Star) => BinOp::Mul,
                Some(Tok::Slash) => BinOp::Div,
                Some(Tok::SlashSlash) => BinOp::FloorDiv,
                Some(Tok::Percent) => BinOp::Rem,
                _ => return Ok(lhs),
            };
            self.i += 1;
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, Diagnostic> {
        if self.eat(&Tok::Minus) {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat(&Tok::Plus) {
            return self.unary();
        }
        let t = self.next_or_eof("an expression")?;
        match &t.tok {
            Tok::Number(v) => Ok(Expr::Num(*v)),
            Tok::Ident(s) => Ok(Expr::Var(s.clone(), t.span)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            _ => Err(syntax(t.span, "expected an expression")),
        }
    }
}
