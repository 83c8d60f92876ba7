use super::ast::{Expr, GateCall, GateDef, Operand, Program, Statement, StmtKind};
use super::directive::{parse_directive, Directive};
use super::ir::{CircuitIR, Instruction, Op, Origin, Register};
use super::{QasmError, Span};
use std::collections::HashMap;

enum GateInfo<'a> {
    Builtin { params: usize, qargs: usize },
    Defined(&'a GateDef),
    Opaque { params: usize, qargs: usize },
}

impl GateInfo<'_> {
    fn arity(&self) -> (usize, usize) {
        match self {
            GateInfo::Builtin { params, qargs } | GateInfo::Opaque { params, qargs } => (*params, *qargs),
            GateInfo::Defined(def) => (def.params.len(), def.qargs.len()),
        }
    }
}

struct Elaborator<'a> {
    qregs: Vec<Register>,
    cregs: Vec<Register>,
    gates: HashMap<&'a str, GateInfo<'a>>,
    instructions: Vec<Instruction>,
    pending: Vec<(&'a str, Span)>,
    anchored: Vec<(&'a str, Span, usize)>,
}

/// Lowers a program (with includes already resolved) to primitive
/// instructions: register broadcast, recursive gate inlining, parameter
/// evaluation, and directive anchoring.
pub fn elaborate(program: &Program) -> Result<CircuitIR, QasmError> {
    let mut e = Elaborator {
        qregs: Vec::new(),
        cregs: Vec::new(),
        gates: HashMap::new(),
        instructions: Vec::new(),
        pending: Vec::new(),
        anchored: Vec::new(),
    };
    e.gates.insert("U", GateInfo::Builtin { params: 3, qargs: 1 });
    e.gates.insert("CX", GateInfo::Builtin { params: 0, qargs: 2 });
    for (ordinal, stmt) in program.statements.iter().enumerate() {
        let before = e.instructions.len();
        e.statement(ordinal, stmt)?;
        if e.instructions.len() > before {
            for (text, span) in e.pending.drain(..) {
                e.anchored.push((text, span, before));
            }
        }
    }
    let end = e.instructions.len();
    for (text, span) in e.pending.drain(..) {
        e.anchored.push((text, span, end));
    }

    let mut ir = CircuitIR {
        n_qubits: e.qregs.iter().map(|r| r.size).sum(),
        n_clbits: e.cregs.iter().map(|r| r.size).sum(),
        qregs: e.qregs,
        cregs: e.cregs,
        instructions: e.instructions,
        directives: Vec::new(),
    };
    let mut directives = Vec::with_capacity(e.anchored.len());
    for (text, span, anchor) in e.anchored {
        let kind = parse_directive(text, &ir)
            .map_err(|m| QasmError::semantic(format!("invalid directive: {m}"), span))?;
        directives.push(Directive {
            kind,
            anchor,
            span,
            text: text.to_string(),
        });
    }
    ir.directives = directives;
    Ok(ir)
}

type Env<'e> = HashMap<&'e str, f64>;

fn eval(expr: &Expr, env: &Env<'_>) -> Result<f64, String> {
    let v = match expr {
        Expr::Int { value } => *value as f64,
        Expr::Real { value } => *value,
        Expr::Pi => std::f64::consts::PI,
        Expr::Ident { name } => *env
            .get(name.as_str())
            .ok_or_else(|| format!("undeclared parameter {name:?}"))?,
        Expr::Neg { operand } => -eval(operand, env)?,
        Expr::Binary { op, lhs, rhs } => {
            let (a, b) = (eval(lhs, env)?, eval(rhs, env)?);
            use super::ast::BinOp::*;
            match op {
                Add => a + b,
                Sub => a - b,
                Mul => a * b,
                Div => a / b,
                Pow => a.powf(b),
            }
        }
        Expr::Call { func, arg } => {
            let x = eval(arg, env)?;
            match func.as_str() {
                "sin" => x.sin(),
                "cos" => x.cos(),
                "tan" => x.tan(),
                "exp" => x.exp(),
                "ln" => x.ln(),
                "sqrt" => x.sqrt(),
                other => return Err(format!("unknown function {other:?}")),
            }
        }
    };
    if !v.is_finite() {
        return Err(format!("parameter expression {expr} is not finite"));
    }
    Ok(v)
}

/// Checks that `expr` only mentions the given parameter names.
fn check_expr_names(expr: &Expr, params: &[String]) -> Result<(), String> {
    match expr {
        Expr::Ident { name } if !params.contains(name) => Err(format!("undeclared parameter {name:?}")),
        Expr::Neg { operand } => check_expr_names(operand, params),
        Expr::Binary { lhs, rhs, .. } => {
            check_expr_names(lhs, params)?;
            check_expr_names(rhs, params)
        }
        Expr::Call { arg, .. } => check_expr_names(arg, params),
        _ => Ok(()),
    }
}

impl<'a> Elaborator<'a> {
    fn register_name_taken(&self, name: &str) -> bool {
        self.qregs.iter().chain(&self.cregs).any(|r| r.name == name)
    }

    fn statement(&mut self, ordinal: usize, stmt: &'a Statement) -> Result<(), QasmError> {
        let span = stmt.span;
        match &stmt.kind {
            StmtKind::Include { name } => Err(QasmError::semantic(
                format!("include {name:?} was not resolved before elaboration"),
                span,
            )),
            StmtKind::Qreg { name, size } | StmtKind::Creg { name, size } => {
                if self.register_name_taken(name) {
                    return Err(QasmError::semantic(format!("register {name:?} already declared"), span));
                }
                let quantum = matches!(stmt.kind, StmtKind::Qreg { .. });
                let regs = if quantum { &mut self.qregs } else { &mut self.cregs };
                let offset = regs.iter().map(|r| r.size).sum();
                regs.push(Register {
                    name: name.clone(),
                    offset,
                    size: *size,
                });
                Ok(())
            }
            StmtKind::GateDef(def) => self.define_gate(def, span),
            StmtKind::Opaque { name, params, qargs } => {
                if self.gates.contains_key(name.as_str()) {
                    return Err(QasmError::semantic(format!("gate {name:?} already defined"), span));
                }
                self.gates.insert(
                    name,
                    GateInfo::Opaque {
                        params: params.len(),
                        qargs: qargs.len(),
                    },
                );
                Ok(())
            }
            StmtKind::Directive { text } => {
                self.pending.push((text, span));
                Ok(())
            }
            StmtKind::If { creg, value, body } => {
                let reg_index = self
                    .cregs
                    .iter()
                    .position(|r| &r.name == creg)
                    .ok_or_else(|| {
                        let msg = if self.qregs.iter().any(|r| &r.name == creg) {
                            format!("{creg:?} is a quantum register; conditions need a classical register")
                        } else {
                            format!("undeclared classical register {creg:?}")
                        };
                        QasmError::semantic(msg, span)
                    })?;
                let size = self.cregs[reg_index].size;
                if size < 64 && *value >= 1u64 << size {
                    return Err(QasmError::semantic(
                        format!("value {value} does not fit in {creg}[{size}]"),
                        span,
                    ));
                }
                let mut ops = Vec::new();
                let mut qubits = Vec::new();
                let label = self.lower_quantum(body, &mut |_, op_list, qs| {
                    ops.extend(op_list);
                    qubits.extend(qs);
                })?;
                qubits.sort_unstable();
                qubits.dedup();
                self.instructions.push(Instruction {
                    op: Op::Conditional {
                        creg: reg_index,
                        value: *value,
                        ops,
                    },
                    span,
                    origin: Origin {
                        statement: ordinal,
                        element: 0,
                        gate: format!("if({creg}=={value}) {}", label.0),
                        qubits,
                        params: label.1,
                    },
                });
                Ok(())
            }
            _ => {
                let mut emitted = Vec::new();
                let (gate, params) = self.lower_quantum(stmt, &mut |element, ops, qubits| {
                    emitted.push((element, ops, qubits));
                })?;
                for (element, ops, qubits) in emitted {
                    for op in ops {
                        self.instructions.push(Instruction {
                            op,
                            span,
                            origin: Origin {
                                statement: ordinal,
                                element,
                                gate: gate.clone(),
                                qubits: qubits.clone(),
                                params: params.clone(),
                            },
                        });
                    }
                }
                Ok(())
            }
        }
    }

    /// Lowers a gate call, measure, reset or barrier. `sink` receives, for
    /// each broadcast element, the primitive ops and the element's qubits.
    /// Returns the source-level name and evaluated parameters.
    fn lower_quantum(
        &self,
        stmt: &Statement,
        sink: &mut dyn FnMut(usize, Vec<Op>, Vec<usize>),
    ) -> Result<(String, Vec<f64>), QasmError> {
        let span = stmt.span;
        match &stmt.kind {
            StmtKind::GateCall(call) => {
                let info = self
                    .gates
                    .get(call.name.as_str())
                    .ok_or_else(|| QasmError::semantic(format!("undeclared gate {:?}", call.name), span))?;
                let (n_params, n_qargs) = info.arity();
                if call.params.len() != n_params {
                    return Err(QasmError::semantic(
                        format!("gate {} expects {n_params} parameter(s), got {}", call.name, call.params.len()),
                        span,
                    ));
                }
                if call.args.len() != n_qargs {
                    return Err(QasmError::semantic(
                        format!("gate {} expects {n_qargs} qubit argument(s), got {}", call.name, call.args.len()),
                        span,
                    ));
                }
                if let GateInfo::Opaque { .. } = info {
                    return Err(QasmError::semantic(
                        format!("opaque gate {} has no definition to simulate", call.name),
                        span,
                    ));
                }
                let env = Env::new();
                let params = call
                    .params
                    .iter()
                    .map(|p| eval(p, &env))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|m| QasmError::semantic(m, span))?;
                let operands = call
                    .args
                    .iter()
                    .map(|a| self.quantum_operand(a))
                    .collect::<Result<Vec<_>, _>>()?;
                for (element, qubits) in broadcast(&operands, span)?.into_iter().enumerate() {
                    for (i, q) in qubits.iter().enumerate() {
                        if qubits[..i].contains(q) {
                            return Err(QasmError::semantic(
                                format!("qubit {} used twice in one gate application", self.qubit_label(*q)),
                                span,
                            ));
                        }
                    }
                    let mut ops = Vec::new();
                    self.expand(&call.name, &params, &qubits, &mut ops, span)?;
                    sink(element, ops, qubits);
                }
                Ok((call.name.clone(), params))
            }
            StmtKind::Measure { src, dst } => {
                let qs = self.quantum_operand(src)?;
                let cs = self.classical_operand(dst)?;
                if qs.len() != cs.len() || src.index.is_some() != dst.index.is_some() {
                    return Err(QasmError::semantic(
                        format!("cannot measure {src} ({} qubit(s)) into {dst} ({} bit(s))", qs.len(), cs.len()),
                        span,
                    ));
                }
                for (element, (q, c)) in qs.into_iter().zip(cs).enumerate() {
                    sink(element, vec![Op::Measure { qubit: q, clbit: c }], vec![q]);
                }
                Ok(("measure".into(), vec![]))
            }
            StmtKind::Reset { target } => {
                for (element, q) in self.quantum_operand(target)?.into_iter().enumerate() {
                    sink(element, vec![Op::Reset { qubit: q }], vec![q]);
                }
                Ok(("reset".into(), vec![]))
            }
            StmtKind::Barrier { targets } => {
                let mut qubits = Vec::new();
                for t in targets {
                    for q in self.quantum_operand(t)? {
                        if !qubits.contains(&q) {
                            qubits.push(q);
                        }
                    }
                }
                sink(0, vec![Op::Barrier { qubits: qubits.clone() }], qubits);
                Ok(("barrier".into(), vec![]))
            }
            _ => Err(QasmError::semantic("expected a quantum operation", span)),
        }
    }

    fn qubit_label(&self, q: usize) -> String {
        self.qregs
            .iter()
            .find(|r| q >= r.offset && q < r.offset + r.size)
            .map(|r| format!("{}[{}]", r.name, q - r.offset))
            .unwrap_or_else(|| q.to_string())
    }

    fn resolve(&self, regs: &[Register], op: &Operand) -> Option<Result<Vec<usize>, QasmError>> {
        let reg = regs.iter().find(|r| r.name == op.name)?;
        Some(match op.index {
            None => Ok((reg.offset..reg.offset + reg.size).collect()),
            Some(i) if i < reg.size => Ok(vec![reg.offset + i]),
            Some(i) => Err(QasmError::semantic(
                format!("index {i} out of range for {}[{}]", reg.name, reg.size),
                op.span,
            )),
        })
    }

    fn quantum_operand(&self, op: &Operand) -> Result<Vec<usize>, QasmError> {
        if let Some(r) = self.resolve(&self.qregs, op) {
            return r;
        }
        let msg = if self.cregs.iter().any(|r| r.name == op.name) {
            format!("{:?} is a classical register; a quantum register is required", op.name)
        } else {
            format!("undeclared quantum register {:?}", op.name)
        };
        Err(QasmError::semantic(msg, op.span))
    }

    fn classical_operand(&self, op: &Operand) -> Result<Vec<usize>, QasmError> {
        if let Some(r) = self.resolve(&self.cregs, op) {
            return r;
        }
        let msg = if self.qregs.iter().any(|r| r.name == op.name) {
            format!("{:?} is a quantum register; a classical register is required", op.name)
        } else {
            format!("undeclared classical register {:?}", op.name)
        };
        Err(QasmError::semantic(msg, op.span))
    }

    fn define_gate(&mut self, def: &'a GateDef, span: Span) -> Result<(), QasmError> {
        let wrap = |e: QasmError| match &def.source {
            Some(file) => QasmError::InInclude {
                file: file.clone(),
                inner: Box::new(e),
            },
            None => e,
        };
        if self.gates.contains_key(def.name.as_str()) {
            return Err(wrap(QasmError::semantic(
                format!("gate {:?} already defined", def.name),
                span,
            )));
        }
        for (i, q) in def.qargs.iter().enumerate() {
            if def.qargs[..i].contains(q) {
                return Err(wrap(QasmError::semantic(format!("duplicate qubit argument {q:?}"), span)));
            }
        }
        for stmt in &def.body {
            self.check_body_statement(def, stmt).map_err(wrap)?;
        }
        self.gates.insert(&def.name, GateInfo::Defined(def));
        Ok(())
    }

    fn check_body_statement(&self, def: &GateDef, stmt: &Statement) -> Result<(), QasmError> {
        let span = stmt.span;
        let check_arg = |op: &Operand| {
            if op.index.is_some() {
                return Err(QasmError::semantic("gate bodies cannot index qubit arguments", op.span));
            }
            if !def.qargs.contains(&op.name) {
                return Err(QasmError::semantic(
                    format!("{:?} is not an argument of gate {}", op.name, def.name),
                    op.span,
                ));
            }
            Ok(())
        };
        match &stmt.kind {
            StmtKind::GateCall(GateCall { name, params, args }) => {
                let info = self.gates.get(name.as_str()).ok_or_else(|| {
                    QasmError::semantic(format!("undeclared gate {name:?} in body of {}", def.name), span)
                })?;
                let (np, nq) = info.arity();
                if params.len() != np || args.len() != nq {
                    return Err(QasmError::semantic(
                        format!("gate {name} expects {np} parameter(s) and {nq} qubit(s)"),
                        span,
                    ));
                }
                for p in params {
                    check_expr_names(p, &def.params).map_err(|m| QasmError::semantic(m, span))?;
                }
                for (i, a) in args.iter().enumerate() {
                    check_arg(a)?;
                    if args[..i].iter().any(|b| b.name == a.name) {
                        return Err(QasmError::semantic(format!("qubit {:?} used twice", a.name), a.span));
                    }
                }
                Ok(())
            }
            StmtKind::Barrier { targets } => targets.iter().try_for_each(check_arg),
            _ => Err(QasmError::semantic("unexpected statement in gate body", span)),
        }
    }

    /// Recursively inlines `name(params) qubits` down to `U`/`CX`.
    fn expand(
        &self,
        name: &str,
        params: &[f64],
        qubits: &[usize],
        out: &mut Vec<Op>,
        span: Span,
    ) -> Result<(), QasmError> {
        match self.gates.get(name) {
            Some(GateInfo::Builtin { .. }) if name == "U" => {
                out.push(Op::U {
                    qubit: qubits[0],
                    theta: params[0],
                    phi: params[1],
                    lambda: params[2],
                });
                Ok(())
            }
            Some(GateInfo::Builtin { .. }) => {
                out.push(Op::Cx {
                    control: qubits[0],
                    target: qubits[1],
                });
                Ok(())
            }
            Some(GateInfo::Defined(def)) => {
                let env: Env<'_> = def.params.iter().map(String::as_str).zip(params.iter().copied()).collect();
                let binding: HashMap<&str, usize> =
                    def.qargs.iter().map(String::as_str).zip(qubits.iter().copied()).collect();
                for stmt in &def.body {
                    match &stmt.kind {
                        StmtKind::GateCall(call) => {
                            let ps = call
                                .params
                                .iter()
                                .map(|p| eval(p, &env))
                                .collect::<Result<Vec<_>, _>>()
                                .map_err(|m| QasmError::semantic(m, span))?;
                            let qs: Vec<usize> = call.args.iter().map(|a| binding[a.name.as_str()]).collect();
                            self.expand(&call.name, &ps, &qs, out, span)?;
                        }
                        StmtKind::Barrier { targets } => out.push(Op::Barrier {
                            qubits: targets.iter().map(|a| binding[a.name.as_str()]).collect(),
                        }),
                        _ => unreachable!("checked at definition"),
                    }
                }
                Ok(())
            }
            Some(GateInfo::Opaque { .. }) => Err(QasmError::semantic(
                format!("opaque gate {name} has no definition to simulate"),
                span,
            )),
            None => Err(QasmError::semantic(format!("undeclared gate {name:?}"), span)),
        }
    }
}

/// Register broadcast: whole-register operands apply element-wise and must
/// agree in size; single-qubit operands repeat.
fn broadcast(operands: &[Vec<usize>], span: Span) -> Result<Vec<Vec<usize>>, QasmError> {
    let mut width = 1;
    for o in operands.iter().filter(|o| o.len() > 1) {
        if width > 1 && o.len() != width {
            return Err(QasmError::semantic(
                format!("register sizes {width} and {} do not match", o.len()),
                span,
            ));
        }
        width = o.len();
    }
    Ok((0..width)
        .map(|i| {
            operands
                .iter()
                .map(|o| if o.len() == 1 { o[0] } else { o[i] })
                .collect()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qasm::{compile, CompileOptions, DirectiveKind};

    fn build(body: &str) -> Result<CircuitIR, QasmError> {
        compile(
            &format!("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n{body}"),
            &CompileOptions::default(),
        )
    }

    fn semantic(body: &str) -> String {
        match build(body) {
            Err(QasmError::Semantic { message, .. }) => message,
            other => panic!("expected a semantic error, got {other:?}"),
        }
    }

    #[test]
    fn only_primitive_kinds_remain() {
        let ir = build("qreg q[3]; creg c[3]; ccx q[0],q[1],q[2]; cu3(0.1,0.2,0.3) q[0],q[2]; reset q[1]; barrier q; measure q -> c; if(c==3) h q[0];").unwrap();
        for inst in &ir.instructions {
            match &inst.op {
                Op::Conditional { ops, .. } => assert!(ops.iter().all(|o| matches!(o, Op::U { .. } | Op::Cx { .. }))),
                Op::U { .. } | Op::Cx { .. } | Op::Measure { .. } | Op::Reset { .. } | Op::Barrier { .. } => {}
            }
        }
    }

    #[test]
    fn swap_is_three_cx() {
        let ir = build("qreg q[3]; swap q[0],q[2];").unwrap();
        let ops: Vec<_> = ir.instructions.iter().map(|i| i.op.clone()).collect();
        assert_eq!(
            ops,
            vec![
                Op::Cx { control: 0, target: 2 },
                Op::Cx { control: 2, target: 0 },
                Op::Cx { control: 0, target: 2 },
            ]
        );
    }

    #[test]
    fn broadcast_rule() {
        let ir = build("qreg a[2]; qreg b[2]; h a; cx a,b; cx a[0],b;").unwrap();
        let cx: Vec<_> = ir
            .instructions
            .iter()
            .filter_map(|i| match i.op {
                Op::Cx { control, target } => Some((control, target)),
                _ => None,
            })
            .collect();
        assert_eq!(cx, vec![(0, 2), (1, 3), (0, 2), (0, 3)]);
        assert_eq!(ir.operator_names()[..2], ["h a[0]".to_string(), "h a[1]".to_string()]);
        assert!(semantic("qreg a[2]; qreg b[3]; cx a,b;").contains("do not match"));
    }

    #[test]
    fn semantic_errors() {
        assert!(semantic("qreg q[1]; foo q[0];").contains("undeclared gate"));
        assert!(semantic("qreg q[2]; cx q[0];").contains("expects 2 qubit"));
        assert!(semantic("qreg q[1]; rx q[0];").contains("expects 1 parameter"));
        assert!(semantic("qreg q[1]; h q[1];").contains("out of range"));
        assert!(semantic("qreg q[1]; creg c[1]; h c[0];").contains("classical register"));
        assert!(semantic("qreg q[1]; creg c[1]; measure c[0] -> q[0];").contains("classical register"));
        assert!(semantic("qreg q[1]; h r[0];").contains("undeclared quantum register"));
        assert!(semantic("qreg q[2]; cx q[0],q[0];").contains("used twice"));
        assert!(semantic("qreg q[1]; qreg q[2];").contains("already declared"));
        assert!(semantic("qreg q[1]; creg c[1]; if(c==2) x q[0];").contains("does not fit"));
        assert!(semantic("gate g a { U(theta,0,0) a; }").contains("undeclared parameter"));
        assert!(semantic("gate g a { h b; }").contains("not an argument"));
        assert!(semantic("opaque o a; qreg q[1]; o q[0];").contains("opaque"));
        assert!(semantic("qreg q[2]; creg c[1]; measure q -> c;").contains("cannot measure"));
    }

    #[test]
    fn h_without_include_is_undeclared() {
        let err = compile("OPENQASM 2.0;\nqreg q[1];\nh q[0];", &CompileOptions::default()).unwrap_err();
        match err {
            QasmError::Semantic { message, span } => {
                assert!(message.contains("undeclared gate"));
                assert_eq!(span.line, 3);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn directive_anchors_to_next_instruction() {
        let ir = build("qreg q[3];\nh q[0];\n// @qdb assert-separable q[2]\ncx q[0],q[1];\n// @qdb break\n").unwrap();
        // h expands to one U, so cx starts at instruction 1.
        assert_eq!(ir.directives.len(), 2);
        assert_eq!(ir.directives[0].anchor, 1);
        assert_eq!(ir.directives[0].kind, DirectiveKind::AssertSeparable { qubits: vec![2] });
        assert_eq!(ir.directives[1].anchor, ir.instructions.len());
        assert_eq!(ir.directives[1].kind, DirectiveKind::Break);
    }

    #[test]
    fn bad_directive_is_semantic_error() {
        assert!(semantic("qreg q[1];\n// @qdb assert-separable r[0]\nh q[0];").contains("invalid directive"));
    }

    #[test]
    fn parameters_evaluate_with_pi() {
        let ir = build("qreg q[1]; U(pi/2, -pi, 2^3) q[0];").unwrap();
        match ir.instructions[0].op {
            Op::U { theta, phi, lambda, .. } => {
                assert!((theta - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
                assert!((phi + std::f64::consts::PI).abs() < 1e-15);
                assert_eq!(lambda, 8.0);
            }
            ref other => panic!("{other:?}"),
        }
    }

    #[test]
    fn conditional_wraps_body() {
        let ir = build("qreg q[2]; creg c[2]; if(c==2) cx q[0],q[1];").unwrap();
        assert_eq!(ir.instructions.len(), 1);
        match &ir.instructions[0].op {
            Op::Conditional { creg, value, ops } => {
                assert_eq!((*creg, *value), (0, 2));
                assert_eq!(ops, &vec![Op::Cx { control: 0, target: 1 }]);
            }
            other => panic!("{other:?}"),
        }
    }
}
