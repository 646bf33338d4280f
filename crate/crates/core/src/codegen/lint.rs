// SPDX-License-Identifier: Apache-2.0
//! Structural checks over emitted Verilog text.
//!
//! The linter reads the text back rather than trusting the emitter: module
//! headers give port directions, instances give connections, and every net
//! must end up with exactly one driver.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::OnceLock;

use regex::Regex;

use super::VerilogFile;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub module: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.module, self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dir {
    In,
    Out,
}

#[derive(Debug, Clone)]
struct Module {
    name: String,
    ports: Vec<(Dir, String)>,
    body: String,
}

fn re(cell: &'static OnceLock<Regex>, pat: &str) -> &'static Regex {
    cell.get_or_init(|| Regex::new(pat).expect("valid pattern"))
}

fn strip_comments(text: &str) -> String {
    text.lines()
        .map(|l| l.split("//").next().unwrap_or(""))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Index just past the parenthesis matching the one at `open`.
fn matching(s: &str, open: usize) -> Option<usize> {
    let mut depth = 0usize;
    for (i, c) in s[open..].char_indices() {
        match c {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth == 0 {
                    return Some(open + i + 1);
                }
            }
            _ => {}
        }
    }
    None
}

fn last_ident(decl: &str) -> Option<String> {
    static ID: OnceLock<Regex> = OnceLock::new();
    re(&ID, r"([A-Za-z_][A-Za-z0-9_]*)\s*$")
        .captures(decl.trim())
        .map(|c| c[1].to_string())
}

fn parse_modules(text: &str) -> Vec<Module> {
    static HEAD: OnceLock<Regex> = OnceLock::new();
    let head = re(&HEAD, r"(?m)^\s*module\s+([A-Za-z_][A-Za-z0-9_]*)\s*");
    let text = strip_comments(text);
    let mut out = Vec::new();
    for cap in head.captures_iter(&text) {
        let name = cap[1].to_string();
        let mut pos = cap.get(0).expect("whole match").end();
        let rest = &text[pos..];
        if rest.starts_with('#') {
            let Some(open) = rest.find('(') else { continue };
            let Some(close) = matching(rest, open) else { continue };
            pos += close;
        }
        let Some(open) = text[pos..].find('(').map(|o| pos + o) else {
            continue;
        };
        let Some(close) = matching(&text, open) else { continue };
        let ports = text[open + 1..close - 1]
            .split(',')
            .filter_map(|decl| {
                let d = decl.trim();
                let dir = if d.starts_with("input") {
                    Dir::In
                } else if d.starts_with("output") {
                    Dir::Out
                } else {
                    return None;
                };
                last_ident(d).map(|n| (dir, n))
            })
            .collect();
        let end = text[close..].find("endmodule").map_or(text.len(), |e| close + e);
        out.push(Module {
            name,
            ports,
            body: text[close..end].trim_start_matches(';').to_string(),
        });
    }
    out
}

/// Module names with their ports as `(is_input, name)`, in declaration order.
pub(crate) fn module_headers(text: &str) -> Vec<(String, Vec<(bool, String)>)> {
    parse_modules(text)
        .into_iter()
        .map(|m| (m.name, m.ports.into_iter().map(|(d, n)| (d == Dir::In, n)).collect()))
        .collect()
}

const KEYWORDS: [&str; 12] = [
    "wire",
    "reg",
    "assign",
    "always",
    "integer",
    "function",
    "begin",
    "end",
    "if",
    "else",
    "for",
    "localparam",
];

/// Lints every module in `files`. Instances may refer to modules from
/// `files` or `library`.
pub fn lint(files: &[VerilogFile], library: &[VerilogFile]) -> Vec<Violation> {
    static INST: OnceLock<Regex> = OnceLock::new();
    static CONN: OnceLock<Regex> = OnceLock::new();
    static DECL: OnceLock<Regex> = OnceLock::new();
    static ASSIGN: OnceLock<Regex> = OnceLock::new();
    static LIT: OnceLock<Regex> = OnceLock::new();
    let inst_re = re(
        &INST,
        r"(?s)^\s*([A-Za-z_][A-Za-z0-9_]*)\s*(#\s*\(.*?\))?\s+([A-Za-z_][A-Za-z0-9_]*)\s*\((.*)\)\s*$",
    );
    let conn_re = re(&CONN, r"\.([A-Za-z_][A-Za-z0-9_]*)\s*\(\s*([^()]*?)\s*\)");
    let decl_re = re(&DECL, r"^\s*(wire|reg)\b(.*)$");
    let assign_re = re(&ASSIGN, r"(?m)^\s*assign\s+([A-Za-z_][A-Za-z0-9_]*)\s*=");
    let lit_re = re(&LIT, r"^\d+'[sS]?[hHdDbB][0-9a-fA-F_]+$");

    let own: Vec<Module> = files.iter().flat_map(|f| parse_modules(&f.text)).collect();
    let known: BTreeMap<String, Vec<(Dir, String)>> = own
        .iter()
        .cloned()
        .chain(library.iter().flat_map(|f| parse_modules(&f.text)))
        .map(|m| (m.name, m.ports))
        .collect();

    let mut v = Vec::new();
    for m in &own {
        let mut bad = |msg: String| {
            v.push(Violation {
                module: m.name.clone(),
                message: msg,
            })
        };
        let mut nets: BTreeSet<String> = m.ports.iter().map(|(_, n)| n.clone()).collect();
        let mut drivers: BTreeMap<String, usize> = BTreeMap::new();
        let mut regs = BTreeSet::new();
        for (d, n) in &m.ports {
            if *d == Dir::In {
                *drivers.entry(n.clone()).or_default() += 1;
            }
        }
        let mut reads: Vec<(String, String)> = Vec::new();
        for stmt in m.body.split(';') {
            if let Some(c) = decl_re.captures(stmt) {
                let name = last_ident(&c[2]).unwrap_or_default();
                if &c[1] == "reg" {
                    regs.insert(name.clone());
                } else if !nets.insert(name.clone()) {
                    bad(format!("`{name}` declared twice"));
                }
                continue;
            }
            if let Some(c) = assign_re.captures(stmt) {
                *drivers.entry(c[1].to_string()).or_default() += 1;
                continue;
            }
            let Some(c) = inst_re.captures(stmt) else { continue };
            let module = &c[1];
            if KEYWORDS.contains(&module) {
                continue;
            }
            let inst = c[3].to_string();
            let Some(ports) = known.get(module) else {
                bad(format!("instance {inst} of unknown module {module}"));
                continue;
            };
            let mut seen = BTreeMap::new();
            for cc in conn_re.captures_iter(&c[4]) {
                let (port, net) = (cc[1].to_string(), cc[2].to_string());
                if net.is_empty() {
                    bad(format!("{inst}.{port} is unconnected"));
                    continue;
                }
                *seen.entry(port.clone()).or_insert(0usize) += 1;
                match ports.iter().find(|(_, p)| *p == port) {
                    None => bad(format!("{inst} has no port {port}")),
                    Some((Dir::Out, _)) => {
                        if lit_re.is_match(&net) {
                            bad(format!("{inst}.{port} drives a literal"));
                        } else {
                            *drivers.entry(net).or_default() += 1;
                        }
                    }
                    Some((Dir::In, _)) => {
                        if !lit_re.is_match(&net) {
                            reads.push((format!("{inst}.{port}"), net));
                        }
                    }
                }
            }
            for (_, p) in ports {
                match seen.get(p) {
                    None => bad(format!("{inst}.{p} is unconnected")),
                    Some(&k) if k > 1 => bad(format!("{inst}.{p} is connected {k} times")),
                    _ => {}
                }
            }
        }
        for (at, net) in reads {
            if !nets.contains(&net) && !regs.contains(&net) {
                bad(format!("{at} reads undeclared net {net}"));
            }
        }
        for n in &nets {
            let k = drivers.get(n).copied().unwrap_or(0);
            if k != 1 {
                bad(format!("`{n}` has {k} drivers"));
            }
        }
        for n in drivers.keys() {
            if !nets.contains(n) && !regs.contains(n) {
                bad(format!("undeclared net {n} is driven"));
            }
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codegen::emit_function_library;

    fn file(text: &str) -> VerilogFile {
        VerilogFile {
            name: "t.v".into(),
            text: text.into(),
        }
    }

    #[test]
    fn reads_library_headers() {
        let lib = emit_function_library();
        let m = parse_modules(&lib[7].text);
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].name, "SinCosTan_V");
        let outs: Vec<_> = m[0]
            .ports
            .iter()
            .filter(|p| p.0 == Dir::Out)
            .map(|p| p.1.as_str())
            .collect();
        assert_eq!(outs, vec!["sin_res", "cos_res", "tan_res"]);
        assert!(lint(&[], &lib).is_empty());
    }

    #[test]
    fn clean_module() {
        let top = file(
            "module t (\n    input clk,\n    input rst,\n    input [31:0] a,\n    output [31:0] y\n);\n    wire [31:0] m;\n    // copy\n    Value_V hls_u0 (.clk(clk), .rst(rst), .a(a), .res(m));\n    Addition_V #(.LATENCY(2)) hls_u1 (.clk(clk), .rst(rst), .a(m), .b(32'h00010000), .res(y));\nendmodule\n",
        );
        assert_eq!(lint(&[top], &emit_function_library()), vec![]);
    }

    #[test]
    fn finds_multi_driver_and_dangling_ports() {
        let top = file(
            "module t (\n    input clk,\n    input rst,\n    input [31:0] a,\n    output [31:0] y\n);\n    wire [31:0] m;\n    wire [31:0] u;\n    Value_V hls_u0 (.clk(clk), .rst(rst), .a(a), .res(y));\n    Value_V hls_u1 (.clk(clk), .rst(rst), .a(m), .res(y));\n    Value_V hls_u2 (.clk(clk), .a(a), .res(m));\nendmodule\n",
        );
        let v = lint(&[top], &emit_function_library());
        let msgs: Vec<String> = v.iter().map(|x| x.message.clone()).collect();
        assert!(msgs.contains(&"`y` has 2 drivers".to_string()), "{msgs:?}");
        assert!(msgs.contains(&"hls_u2.rst is unconnected".to_string()));
        assert!(msgs.contains(&"`u` has 0 drivers".to_string()));
    }

    #[test]
    fn unknown_module_and_port() {
        let top = file("module t (\n    input clk,\n    output [31:0] y\n);\n    Foo_V hls_u0 (.res(y));\n    Value_V hls_u1 (.clk(clk), .rst(clk), .a(clk), .b(clk), .res(y));\nendmodule\n");
        let v = lint(&[top], &emit_function_library());
        assert!(v.iter().any(|x| x.message.contains("unknown module Foo_V")));
        assert!(v.iter().any(|x| x.message.contains("has no port b")));
    }
}
