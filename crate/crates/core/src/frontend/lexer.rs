// SPDX-License-Identifier: Apache-2.0
//! Line-local tokenizer. Indentation is handled by the parser, which sees
//! one logical line at a time.

use crate::diag::{DiagCode, Diagnostic, Span};

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Number(f64),
    Str(String),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Colon,
    Plus,
    Minus,
    Star,
    Slash,
    SlashSlash,
    Percent,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

/// Tokenizes `text`, which starts at column `col0` (1-based) of `line`.
/// A `#` outside a string ends the line.
pub fn tokenize(text: &str, line: usize, col0: usize) -> Result<Vec<Token>, Diagnostic> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let span = Span::new(line, col0 + i);
        let single = |t: Tok| Token { tok: t, span };
        match c {
            ' ' | '\t' | '\r' => {
                i += 1;
            }
            '#' => break,
            '(' => {
                out.push(single(Tok::LParen));
                i += 1;
            }
            ')' => {
                out.push(single(Tok::RParen));
                i += 1;
            }
            '[' => {
                out.push(single(Tok::LBracket));
                i += 1;
            }
            ']' => {
                out.push(single(Tok::RBracket));
                i += 1;
            }
            ',' => {
                out.push(single(Tok::Comma));
                i += 1;
            }
            ':' => {
                out.push(single(Tok::Colon));
                i += 1;
            }
            '+' => {
                out.push(single(Tok::Plus));
                i += 1;
            }
            '-' => {
                out.push(single(Tok::Minus));
                i += 1;
            }
            '*' => {
                out.push(single(Tok::Star));
                i += 1;
            }
            '%' => {
                out.push(single(Tok::Percent));
                i += 1;
            }
            '/' => {
                if chars.get(i + 1) == Some(&'/') {
                    out.push(single(Tok::SlashSlash));
                    i += 2;
                } else {
                    out.push(single(Tok::Slash));
                    i += 1;
                }
            }
            '"' | '\'' => {
                let quote = c;
                let start = i + 1;
                let mut j = start;
                while j < chars.len() && chars[j] != quote {
                    j += 1;
                }
                if j >= chars.len() {
                    return Err(Diagnostic::new(DiagCode::Syntax, span, "unterminated string literal"));
                }
                out.push(single(Tok::Str(chars[start..j].iter().collect())));
                i = j + 1;
            }
            c if c.is_ascii_digit() || (c == '.' && next_is_digit(&chars, i)) => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let lexeme: String = chars[start..i].iter().collect();
                let value = lexeme
                    .parse::<f64>()
                    .map_err(|_| Diagnostic::new(DiagCode::Syntax, span, format!("bad number `{lexeme}`")))?;
                out.push(single(Tok::Number(value)));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(single(Tok::Ident(chars[start..i].iter().collect())));
            }
            other => {
                return Err(Diagnostic::new(
                    DiagCode::Syntax,
                    span,
                    format!("unexpected character `{other}`"),
                ))
            }
        }
    }
    Ok(out)
}

fn next_is_digit(chars: &[char], i: usize) -> bool {
    chars.get(i + 1).is_some_and(|c| c.is_ascii_digit())
}
