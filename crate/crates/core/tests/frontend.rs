use nalgebra::DMatrix;
use num_complex::Complex64;
use qdb::qasm::{compile, parse, tokenize, CompileOptions, DirectiveKind, Op, QasmError, StmtKind};
use qdb::sim::circuit_unitary;
use qdb::state::{gates, GateMatrix};
use std::f64::consts::PI;

const FIG4: &str = include_str!("../programs/fig4.qasm");
const FIG5: &str = include_str!("../programs/fig5.qasm");
const FIG6: &str = include_str!("../programs/fig6.qasm");
const FIG7: &str = include_str!("../programs/fig7.qasm");

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn unitary_of(n: usize, body: &str) -> GateMatrix {
    let src = format!("OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[{n}];\n{body}");
    circuit_unitary(&compile(&src, &CompileOptions::default()).unwrap()).unwrap()
}

/// `|0><0| (x) I + |1><1| (x) g`, control on the first qubit.
fn controlled(g: &GateMatrix) -> GateMatrix {
    let mut m = DMatrix::zeros(4, 4);
    m[(0, 0)] = c(1.0, 0.0);
    m[(1, 1)] = c(1.0, 0.0);
    for r in 0..2 {
        for k in 0..2 {
            m[(2 + r, 2 + k)] = g.get(r, k);
        }
    }
    GateMatrix::from_matrix(m)
}

fn permutation(n: usize, f: impl Fn(usize) -> usize) -> GateMatrix {
    let dim = 1 << n;
    let mut m = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        m[(f(i), i)] = c(1.0, 0.0);
    }
    GateMatrix::from_matrix(m)
}

fn assert_same(name: &str, got: &GateMatrix, want: &GateMatrix, up_to_phase: bool) {
    let ok = if up_to_phase {
        got.equal_up_to_global_phase(want, 1e-12)
    } else {
        (got.matrix() - want.matrix()).iter().all(|d| d.norm() <= 1e-12)
    };
    assert!(ok, "{name}: got {}\nwant {}", got.matrix(), want.matrix());
}

#[test]
fn single_qubit_library_matches_reference_matrices() {
    let theta = 0.7;
    let cases: Vec<(&str, GateMatrix, bool)> = vec![
        ("x q[0];", gates::pauli_x(), false),
        ("y q[0];", gates::pauli_y(), true),
        ("z q[0];", gates::pauli_z(), false),
        ("h q[0];", gates::hadamard(), false),
        ("s q[0];", gates::s(), false),
        ("sdg q[0];", gates::sdg(), false),
        ("t q[0];", gates::t(), false),
        ("tdg q[0];", gates::tdg(), false),
        ("id q[0];", gates::identity(), false),
        ("rx(0.7) q[0];", gates::rx(theta), false),
        ("ry(0.7) q[0];", gates::ry(theta), false),
        ("rz(0.7) q[0];", gates::rz(theta), true),
        ("u1(0.7) q[0];", gates::phase(theta), false),
        ("p(0.7) q[0];", gates::phase(theta), false),
        ("u2(0.3,0.9) q[0];", gates::u(PI / 2.0, 0.3, 0.9), false),
        ("u3(0.7,0.3,0.9) q[0];", gates::u(0.7, 0.3, 0.9), false),
    ];
    for (body, want, phase) in cases {
        assert_same(body, &unitary_of(1, body), &want, phase);
    }
}

#[test]
fn controlled_library_matches_reference_matrices() {
    let lam = 0.9;
    let cases: Vec<(&str, GateMatrix)> = vec![
        ("cx q[0],q[1];", gates::cnot()),
        ("cz q[0],q[1];", controlled(&gates::pauli_z())),
        ("cy q[0],q[1];", controlled(&gates::pauli_y())),
        ("ch q[0],q[1];", controlled(&gates::hadamard())),
        ("crz(0.9) q[0],q[1];", controlled(&gates::rz(lam))),
        ("cu1(0.9) q[0],q[1];", gates::cphase(lam)),
        ("cp(0.9) q[0],q[1];", gates::cphase(lam)),
        ("cu3(0.4,0.5,0.9) q[0],q[1];", controlled(&gates::u(0.4, 0.5, lam))),
        ("swap q[0],q[1];", gates::swap()),
    ];
    for (body, want) in cases {
        assert_same(body, &unitary_of(2, body), &want, true);
    }
}

#[test]
fn toffoli_is_the_bit_permutation() {
    let want = permutation(3, |i| if i & 0b110 == 0b110 { i ^ 1 } else { i });
    assert_same("ccx", &unitary_of(3, "ccx q[0],q[1],q[2];"), &want, false);
}

#[test]
fn swap_inlines_to_three_cx_and_matches_permutation() {
    let src = "OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[3];\nswap q[0],q[2];";
    let ir = compile(src, &CompileOptions::default()).unwrap();
    assert_eq!(ir.instructions.len(), 3);
    assert!(ir.instructions.iter().all(|i| matches!(i.op, Op::Cx { .. })));
    // Exchange bit 0 (MSB) and bit 2 (LSB) of every index.
    let oracle = permutation(3, |i| {
        let (b0, b2) = ((i >> 2) & 1, i & 1);
        (i & 0b010) | (b2 << 2) | b0
    });
    assert_same("swap", &circuit_unitary(&ir).unwrap(), &oracle, false);
}

fn structure(src: &str) -> serde_json::Value {
    parse(&tokenize(src).unwrap()).unwrap().structure()
}

#[test]
fn reference_listings_round_trip() {
    for src in [FIG4, FIG5, FIG6, FIG7] {
        let program = parse(&tokenize(src).unwrap()).unwrap();
        let printed = program.to_string();
        assert_eq!(structure(&printed), program.structure(), "{printed}");
    }
}

#[test]
fn fig4_parses_to_expected_statements() {
    let p = parse(&tokenize(FIG4).unwrap()).unwrap();
    assert_eq!(p.qregs().collect::<Vec<_>>(), vec![("q", 3)]);
    assert_eq!(p.cregs().collect::<Vec<_>>(), vec![("c", 1)]);
    let body: Vec<String> = p
        .statements
        .iter()
        .filter(|s| matches!(s.kind, StmtKind::GateCall(_) | StmtKind::Measure { .. }))
        .map(|s| s.to_string())
        .collect();
    assert_eq!(
        body,
        vec!["x q[1];", "h q[0];", "h q[1];", "h q[2];", "cx q[1],q[2];", "measure q[2] -> c[0];"]
    );
}

#[test]
fn fig7_has_eight_gates_and_no_measurement() {
    let p = parse(&tokenize(FIG7).unwrap()).unwrap();
    let calls = p.statements.iter().filter(|s| matches!(s.kind, StmtKind::GateCall(_))).count();
    let measures = p.statements.iter().filter(|s| matches!(s.kind, StmtKind::Measure { .. })).count();
    assert_eq!((calls, measures), (8, 0));
}

#[test]
fn fig6_ir_shape() {
    let ir = compile(FIG6, &CompileOptions::default()).unwrap();
    assert_eq!((ir.n_qubits, ir.n_clbits), (3, 2));
    let n = ir.instructions.len();
    assert_eq!(ir.instructions[n - 2].op, Op::Measure { qubit: 0, clbit: 0 });
    assert_eq!(ir.instructions[n - 1].op, Op::Measure { qubit: 1, clbit: 1 });
}

#[test]
fn fig5_resolves() {
    assert!(compile(FIG5, &CompileOptions::default()).is_ok());
}

#[test]
fn every_instruction_maps_into_the_source() {
    for src in [FIG4, FIG5, FIG6, FIG7] {
        let ir = compile(src, &CompileOptions::default()).unwrap();
        for inst in &ir.instructions {
            let s = inst.span;
            assert!(s.start < s.end && s.end <= src.len());
            let text = &src[s.start..s.end];
            assert!(text.ends_with(';'), "{text:?}");
            assert_eq!(src.lines().nth(s.line - 1).unwrap().trim(), text);
        }
    }
}

#[test]
fn fig4_cx_is_on_line_11() {
    let ir = compile(FIG4, &CompileOptions::default()).unwrap();
    let idx = ir.instruction_at_line(11).unwrap();
    assert_eq!(ir.instructions[idx].op, Op::Cx { control: 1, target: 2 });
}

#[test]
fn directive_binds_to_following_statement() {
    let src = "OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[3];\nx q[2];\nh q[0];\n// @qdb assert-separable q[2]\ncx q[0], q[1];\n";
    let ir = compile(src, &CompileOptions::default()).unwrap();
    assert_eq!(ir.directives.len(), 1);
    let d = &ir.directives[0];
    assert_eq!(d.kind, DirectiveKind::AssertSeparable { qubits: vec![2] });
    assert_eq!(ir.instructions[d.anchor].op, Op::Cx { control: 0, target: 1 });
    assert_eq!(d.span.line, 6);
}

#[test]
fn unsupported_version() {
    let err = compile("OPENQASM 3.0;\nqreg q[1];", &CompileOptions::default()).unwrap_err();
    assert!(matches!(err, QasmError::UnsupportedVersion { .. }));
}

/// Each mutation of fig6.qasm must be rejected at the given line and column.
#[test]
fn invalid_corpus_is_rejected_at_the_offending_token() {
    let base: Vec<&str> = FIG6.lines().collect();
    let mutate = |line: usize, text: &str| {
        let mut lines = base.clone();
        lines[line - 1] = text;
        lines.join("\n")
    };
    let cases = [
        // Missing semicolon: the error is reported on the next token.
        (mutate(6, "x q[2]"), "parse", 7, 1),
        (mutate(7, "h r[0];"), "semantic", 7, 3),
        (mutate(8, "cx q[0];"), "semantic", 8, 1),
        (mutate(8, "cx q[0], q[1], q[2];"), "semantic", 8, 1),
        (mutate(9, "h q[3];"), "semantic", 9, 3),
        (mutate(10, "measure q[0] -> d[0];"), "semantic", 10, 17),
        (mutate(10, "measure c[0] -> q[0];"), "semantic", 10, 9),
        (mutate(9, "hh q[2];"), "semantic", 9, 1),
        (mutate(4, "qreg q[3]"), "parse", 5, 1),
        (mutate(6, "x q[2;"), "parse", 6, 6),
        (mutate(6, "x q[2]];"), "parse", 6, 7),
        (mutate(6, "rx(pi/) q[2];"), "parse", 6, 7),
    ];
    for (src, kind, line, col) in cases {
        let err = compile(&src, &CompileOptions::default()).unwrap_err();
        let got_kind = match err {
            QasmError::Parse { .. } => "parse",
            QasmError::Semantic { .. } => "semantic",
            _ => "other",
        };
        let span = err.span();
        assert_eq!((got_kind, span.line, span.col), (kind, line, col), "{err}\n{src}");
    }
    // The unmutated program is accepted.
    assert!(compile(FIG6, &CompileOptions::default()).is_ok());
}

#[test]
fn diagnostics_show_caret() {
    let src = "OPENQASM 2.0;\nqreg q[1];\nh q[0];\n";
    let err = compile(src, &CompileOptions::default()).unwrap_err();
    let text = err.render(src, "prog.qasm");
    assert!(text.contains("prog.qasm:3:1"), "{text}");
    assert!(text.contains("3 | h q[0];"), "{text}");
    assert!(text.contains("  | ^"), "{text}");
}
