//! Debugger directives carried in `// @qdb ...` comments.
//!
//! ```text
//! // @qdb break
//! // @qdb assert-classical <qubits> -> <bits>
//! // @qdb assert-superposition <qubits>
//! // @qdb assert-separable <qubits>
//! // @qdb assert-entangled <qubits>
//! // @qdb assert-distribution <clbits> {<bits>:<p>, ...} tol <t>
//! ```
//!
//! Bitstrings list the operands in the order written, leftmost first.

use super::{CircuitIR, Span};
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DirectiveKind {
    Break,
    AssertClassical { qubits: Vec<usize>, expected: String },
    AssertSuperposition { qubits: Vec<usize> },
    AssertSeparable { qubits: Vec<usize> },
    AssertEntangled { qubits: Vec<usize> },
    AssertDistribution {
        clbits: Vec<usize>,
        expected: BTreeMap<String, f64>,
        tolerance: f64,
    },
}

impl DirectiveKind {
    pub fn is_assertion(&self) -> bool {
        !matches!(self, DirectiveKind::Break)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Directive {
    pub kind: DirectiveKind,
    /// Index of the instruction the directive precedes; equal to the number
    /// of instructions when it sits at the end of the program.
    pub anchor: usize,
    pub span: Span,
    pub text: String,
}

fn is_bits(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c == '0' || c == '1')
}

/// Parses directive text (everything after `@qdb`) against the registers of `ir`.
pub fn parse_directive(text: &str, ir: &CircuitIR) -> Result<DirectiveKind, String> {
    let text = text.trim();
    let (verb, rest) = text.split_once(char::is_whitespace).unwrap_or((text, ""));
    let rest = rest.trim();
    match verb {
        "break" if rest.is_empty() => Ok(DirectiveKind::Break),
        "break" => Err("break takes no arguments".into()),
        "assert-classical" => {
            let (lhs, bits) = rest
                .split_once("->")
                .ok_or("assert-classical expects `<qubits> -> <bits>`")?;
            let qubits = ir.resolve_qubits(lhs)?;
            let expected = bits.trim().to_string();
            if !is_bits(&expected) || expected.len() != qubits.len() {
                return Err(format!(
                    "expected a {}-bit string, got {expected:?}",
                    qubits.len()
                ));
            }
            Ok(DirectiveKind::AssertClassical { qubits, expected })
        }
        "assert-superposition" => Ok(DirectiveKind::AssertSuperposition {
            qubits: ir.resolve_qubits(rest)?,
        }),
        "assert-separable" => Ok(DirectiveKind::AssertSeparable {
            qubits: ir.resolve_qubits(rest)?,
        }),
        "assert-entangled" => Ok(DirectiveKind::AssertEntangled {
            qubits: ir.resolve_qubits(rest)?,
        }),
        "assert-distribution" => parse_distribution(rest, ir),
        "" => Err("empty directive".into()),
        other => Err(format!("unknown directive {other:?}")),
    }
}

fn parse_distribution(rest: &str, ir: &CircuitIR) -> Result<DirectiveKind, String> {
    let open = rest.find('{').ok_or("assert-distribution expects `{bits:p, ...}`")?;
    let close = rest.find('}').ok_or("unterminated distribution")?;
    if close < open {
        return Err("malformed distribution".into());
    }
    let clbits = ir.resolve_clbits(&rest[..open])?;
    let mut expected = BTreeMap::new();
    for entry in rest[open + 1..close].split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (bits, p) = entry
            .split_once(':')
            .ok_or_else(|| format!("malformed entry {entry:?}"))?;
        let bits = bits.trim().trim_matches('"');
        if !is_bits(bits) || bits.len() != clbits.len() {
            return Err(format!("outcome {bits:?} must have {} bits", clbits.len()));
        }
        let p: f64 = p.trim().parse().map_err(|_| format!("bad probability {p:?}"))?;
        if !(0.0..=1.0).contains(&p) {
            return Err(format!("probability {p} outside [0, 1]"));
        }
        if expected.insert(bits.to_string(), p).is_some() {
            return Err(format!("outcome {bits} listed twice"));
        }
    }
    let total: f64 = expected.values().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(format!("probabilities sum to {total}, not 1"));
    }
    let tail = rest[close + 1..].trim();
    let tol = tail
        .strip_prefix("tol")
        .ok_or("assert-distribution expects `tol <t>` after the distribution")?
        .trim();
    let tolerance: f64 = tol.parse().map_err(|_| format!("bad tolerance {tol:?}"))?;
    if !(tolerance > 0.0 && tolerance < 1.0) {
        return Err(format!("tolerance {tolerance} must lie in (0, 1)"));
    }
    Ok(DirectiveKind::AssertDistribution {
        clbits,
        expected,
        tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qasm::{compile, CompileOptions};

    fn ir() -> CircuitIR {
        compile(
            "OPENQASM 2.0; include \"qelib1.inc\"; qreg q[3]; creg c[2]; h q[0];",
            &CompileOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn parses_each_kind() {
        let ir = ir();
        assert_eq!(parse_directive("break", &ir), Ok(DirectiveKind::Break));
        assert_eq!(
            parse_directive("assert-classical q -> 010", &ir),
            Ok(DirectiveKind::AssertClassical {
                qubits: vec![0, 1, 2],
                expected: "010".into()
            })
        );
        assert_eq!(
            parse_directive("assert-separable q[2]", &ir),
            Ok(DirectiveKind::AssertSeparable { qubits: vec![2] })
        );
        assert_eq!(
            parse_directive("assert-entangled q[0], q[1]", &ir),
            Ok(DirectiveKind::AssertEntangled { qubits: vec![0, 1] })
        );
        match parse_directive("assert-distribution c {00:0.5, 11:0.5} tol 0.05", &ir).unwrap() {
            DirectiveKind::AssertDistribution {
                clbits,
                expected,
                tolerance,
            } => {
                assert_eq!(clbits, vec![0, 1]);
                assert_eq!(expected.len(), 2);
                assert_eq!(tolerance, 0.05);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_malformed() {
        let ir = ir();
        for bad in [
            "assert-classical q -> 01",
            "assert-classical q[5] -> 0",
            "assert-separable r[0]",
            "assert-distribution c {00:0.5, 11:0.4} tol 0.05",
            "assert-distribution c {00:1.0}",
            "assert-distribution c {0:1.0} tol 0.1",
            "frobnicate",
            "break now",
        ] {
            assert!(parse_directive(bad, &ir).is_err(), "{bad}");
        }
    }
}
