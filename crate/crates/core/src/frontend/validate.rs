// SPDX-License-Identifier: Apache-2.0
//! Source rule checks.

use std::collections::BTreeSet;

use super::ast::SourceProgram;
use super::elaborate::Elaborated;
use crate::diag::{DiagCode, Diagnostic};

/// Returns every rule violation, sorted by position. Empty means the
/// program may be lowered.
pub fn validate_rules(elab: &Elaborated, prog: &SourceProgram) -> Vec<Diagnostic> {
    let mut out = elab.issues.clone();
    let driven: BTreeSet<&str> = elab
        .statements
        .iter()
        .flat_map(|s| s.results.iter().map(String::as_str))
        .collect();
    for port in &prog.outputs {
        for name in port.expand() {
            if !driven.contains(name.as_str()) {
                out.push(Diagnostic::new(
                    DiagCode::UndrivenOutput,
                    port.span,
                    format!("output `{name}` is never assigned"),
                ));
            }
        }
    }
    out.sort_by_key(|d| (d.span, d.code));
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{elaborate, parse_source, ElabOptions};

    fn check(src: &str) -> Vec<Diagnostic> {
        let p = parse_source(src, "t").unwrap();
        let e = elaborate(&p, &ElabOptions::default()).unwrap();
        validate_rules(&e, &p)
    }

    #[test]
    fn self_reference() {
        let d =
            check("input_define(\"x\")\noutput_define(\"t\")\nValue_V(\"t\", \"x\")\nAddition_V(\"t\",\"t\",\"x\")\n");
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].code, DiagCode::SelfReference);
        assert!(d[0].message.contains("result equals operand"));
        assert_eq!(d[0].span.line, 4);
    }

    #[test]
    fn compliant_mac_chain() {
        let mut src = String::from(
            "input_define(\"A[16]\",\"B[16]\")\noutput_define(\"t16\")\nMultiplication_V(\"t0\",\"A[0]\",\"B[0]\")\n",
        );
        for i in 1..16 {
            src.push_str(&format!(
                "Multiplication_V(\"p{i}\",\"A[{i}]\",\"B[{i}]\")\nAddition_V(\"t{}\",\"t{}\",\"p{i}\")\n",
                if i == 15 { 16 } else { i },
                i - 1
            ));
        }
        assert!(check(&src).is_empty(), "{:?}", check(&src));
    }

    #[test]
    fn bare_literal() {
        let d = check("input_define(\"a\")\noutput_define(\"c\")\nAddition_V(\"c\",\"a\", 3)\n");
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].code, DiagCode::BareLiteral);
        assert!(d[0].message.contains("literal requires number_to_hex"));
    }

    #[test]
    fn undriven_output() {
        let d = check("input_define(\"a\")\noutput_define(\"c\", \"d\")\nValue_V(\"c\",\"a\")\n");
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].code, DiagCode::UndrivenOutput);
    }

    #[test]
    fn power_exponent_and_reserved() {
        let d = check(
            "input_define(\"a\")\noutput_define(\"c\", \"wire\")\nPower_V(\"c\",\"a\", number_to_hex(0.5))\nValue_V(\"wire\", \"a\")\n",
        );
        let codes: Vec<_> = d.iter().map(|x| x.code).collect();
        assert!(codes.contains(&DiagCode::PowerExponent));
        assert!(codes.contains(&DiagCode::ReservedName));
    }
}
