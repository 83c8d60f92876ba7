//! Elaborated circuit: flat primitive instructions with a source map.

use super::{Directive, Span};
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Register {
    pub name: String,
    /// Global index of element 0.
    pub offset: usize,
    pub size: usize,
}

/// A primitive operation. Qubit and clbit operands are global indices.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Op {
    U {
        qubit: usize,
        theta: f64,
        phi: f64,
        lambda: f64,
    },
    Cx {
        control: usize,
        target: usize,
    },
    Measure {
        qubit: usize,
        clbit: usize,
    },
    Reset {
        qubit: usize,
    },
    Barrier {
        qubits: Vec<usize>,
    },
    /// Applies `ops` iff the value of classical register `creg` (bit 0 least
    /// significant) equals `value`. The test happens once, before `ops` run.
    Conditional {
        creg: usize,
        value: u64,
        ops: Vec<Op>,
    },
}

impl Op {
    pub fn name(&self) -> &'static str {
        match self {
            Op::U { .. } => "U",
            Op::Cx { .. } => "CX",
            Op::Measure { .. } => "measure",
            Op::Reset { .. } => "reset",
            Op::Barrier { .. } => "barrier",
            Op::Conditional { .. } => "if",
        }
    }

    /// Purely unitary: no measurement, reset or classical control.
    pub fn is_unitary(&self) -> bool {
        matches!(self, Op::U { .. } | Op::Cx { .. } | Op::Barrier { .. })
    }

    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Op::U { qubit, .. } | Op::Measure { qubit, .. } | Op::Reset { qubit } => vec![*qubit],
            Op::Cx { control, target } => vec![*control, *target],
            Op::Barrier { qubits } => qubits.clone(),
            Op::Conditional { ops, .. } => {
                let mut qs: Vec<usize> = ops.iter().flat_map(Op::qubits).collect();
                qs.sort_unstable();
                qs.dedup();
                qs
            }
        }
    }
}

/// The source-level call an instruction was expanded from, after register
/// broadcast (so `h q;` yields one origin per qubit).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Origin {
    /// Ordinal of the source statement among the program's statements.
    pub statement: usize,
    /// Element of the register broadcast.
    pub element: usize,
    pub gate: String,
    pub qubits: Vec<usize>,
    pub params: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Instruction {
    pub op: Op,
    pub span: Span,
    pub origin: Origin,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CircuitIR {
    pub n_qubits: usize,
    pub n_clbits: usize,
    pub qregs: Vec<Register>,
    pub cregs: Vec<Register>,
    pub instructions: Vec<Instruction>,
    pub directives: Vec<Directive>,
}

fn lookup(regs: &[Register], name: &str, index: Option<usize>) -> Result<Vec<usize>, String> {
    let reg = regs
        .iter()
        .find(|r| r.name == name)
        .ok_or_else(|| format!("undeclared register {name:?}"))?;
    match index {
        None => Ok((reg.offset..reg.offset + reg.size).collect()),
        Some(i) if i < reg.size => Ok(vec![reg.offset + i]),
        Some(i) => Err(format!("index {i} out of range for {name}[{}]", reg.size)),
    }
}

fn resolve_list(regs: &[Register], total: usize, text: &str) -> Result<Vec<usize>, String> {
    let mut out = Vec::new();
    for item in text.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()) {
        if let Ok(i) = item.parse::<usize>() {
            if i >= total {
                return Err(format!("index {i} out of range ({total} available)"));
            }
            out.push(i);
            continue;
        }
        let (name, index) = match item.split_once('[') {
            Some((name, rest)) => {
                let idx = rest
                    .strip_suffix(']')
                    .and_then(|s| s.trim().parse::<usize>().ok())
                    .ok_or_else(|| format!("malformed operand {item:?}"))?;
                (name.trim(), Some(idx))
            }
            None => (item, None),
        };
        out.extend(lookup(regs, name, index)?);
    }
    if out.is_empty() {
        return Err("empty operand list".into());
    }
    for (i, q) in out.iter().enumerate() {
        if out[..i].contains(q) {
            return Err(format!("operand {q} listed twice"));
        }
    }
    Ok(out)
}

impl CircuitIR {
    /// Resolves `q`, `q[1]`, `q[0],r[2]` or bare global indices to qubit indices.
    pub fn resolve_qubits(&self, text: &str) -> Result<Vec<usize>, String> {
        resolve_list(&self.qregs, self.n_qubits, text)
    }

    pub fn resolve_clbits(&self, text: &str) -> Result<Vec<usize>, String> {
        resolve_list(&self.cregs, self.n_clbits, text)
    }

    pub fn qubit_label(&self, q: usize) -> String {
        label(&self.qregs, q)
    }

    pub fn clbit_label(&self, c: usize) -> String {
        label(&self.cregs, c)
    }

    /// First instruction whose source span starts on `line`.
    pub fn instruction_at_line(&self, line: usize) -> Option<usize> {
        self.instructions.iter().position(|i| i.span.line == line)
    }

    /// Index of the first non-unitary instruction in `[0, end)`.
    pub fn first_non_unitary(&self, end: usize) -> Option<usize> {
        self.instructions[..end.min(self.instructions.len())]
            .iter()
            .position(|i| !i.op.is_unitary())
    }

    pub fn has_measurement(&self) -> bool {
        self.first_non_unitary(self.instructions.len()).is_some()
    }

    /// Copy keeping only instructions `[0, end)` and the directives anchored there.
    pub fn prefix(&self, end: usize) -> CircuitIR {
        let end = end.min(self.instructions.len());
        CircuitIR {
            instructions: self.instructions[..end].to_vec(),
            directives: self.directives.iter().filter(|d| d.anchor <= end).cloned().collect(),
            ..self.clone()
        }
    }

    /// Builds an IR directly from primitive operations on `n_qubits` qubits
    /// (no classical bits), labelling each as its own statement.
    pub fn from_ops(n_qubits: usize, n_clbits: usize, ops: Vec<(String, Op)>) -> CircuitIR {
        let instructions = ops
            .into_iter()
            .enumerate()
            .map(|(i, (gate, op))| Instruction {
                origin: Origin {
                    statement: i,
                    element: 0,
                    gate,
                    qubits: op.qubits(),
                    params: Vec::new(),
                },
                op,
                span: Span::default(),
            })
            .collect();
        let reg = |name: &str, size: usize| {
            if size == 0 {
                vec![]
            } else {
                vec![Register {
                    name: name.to_string(),
                    offset: 0,
                    size,
                }]
            }
        };
        CircuitIR {
            n_qubits,
            n_clbits,
            qregs: reg("q", n_qubits),
            cregs: reg("c", n_clbits),
            instructions,
            directives: Vec::new(),
        }
    }

    /// Source-level operator list, e.g. `["h q[0]", "cx q[0],q[1]"]`, with one
    /// entry per broadcast element.
    pub fn operator_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut last: Option<(usize, usize)> = None;
        for inst in &self.instructions {
            let key = (inst.origin.statement, inst.origin.element);
            if last == Some(key) {
                continue;
            }
            last = Some(key);
            out.push(self.describe_origin(&inst.origin));
        }
        out
    }

    pub fn describe_origin(&self, origin: &Origin) -> String {
        let mut s = origin.gate.clone();
        if !origin.params.is_empty() {
            let ps: Vec<String> = origin.params.iter().map(|p| format!("{p:.6}")).collect();
            s.push_str(&format!("({})", ps.join(",")));
        }
        let qs: Vec<String> = origin.qubits.iter().map(|&q| self.qubit_label(q)).collect();
        if !qs.is_empty() {
            s.push(' ');
            s.push_str(&qs.join(","));
        }
        s
    }
}

fn label(regs: &[Register], index: usize) -> String {
    regs.iter()
        .find(|r| index >= r.offset && index < r.offset + r.size)
        .map(|r| format!("{}[{}]", r.name, index - r.offset))
        .unwrap_or_else(|| index.to_string())
}
