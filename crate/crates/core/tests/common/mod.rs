#![allow(dead_code)]

use qdb::qasm::{compile, CircuitIR, CompileOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;

pub fn program_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("programs").join(name)
}

pub fn program_source(name: &str) -> String {
    std::fs::read_to_string(program_path(name)).expect("program file")
}

pub fn compile_str(src: &str) -> CircuitIR {
    compile(src, &CompileOptions::default()).expect("compiles")
}

pub fn load(name: &str) -> CircuitIR {
    compile_str(&program_source(name))
}

const ONE_QUBIT: &[&str] = &["h", "x", "y", "z", "s", "sdg", "t", "tdg"];
const ROTATIONS: &[&str] = &["rx", "ry", "rz", "u1"];
const TWO_QUBIT: &[&str] = &["cx", "cz", "swap", "ch"];

/// Random gate-level program over the standard library, without
/// measurements unless `measure` is set.
pub fn random_program(n: usize, gates: usize, seed: u64, measure: bool) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut src = format!("OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[{n}];\ncreg c[{n}];\n");
    for _ in 0..gates {
        let a = rng.random_range(0..n);
        match rng.random_range(0..3) {
            0 => src.push_str(&format!("{} q[{a}];\n", ONE_QUBIT[rng.random_range(0..ONE_QUBIT.len())])),
            1 => {
                let g = ROTATIONS[rng.random_range(0..ROTATIONS.len())];
                let theta: f64 = rng.random_range(-3.2..3.2);
                src.push_str(&format!("{g}({theta}) q[{a}];\n"));
            }
            _ if n > 1 => {
                let mut b = rng.random_range(0..n - 1);
                if b >= a {
                    b += 1;
                }
                let g = TWO_QUBIT[rng.random_range(0..TWO_QUBIT.len())];
                src.push_str(&format!("{g} q[{a}],q[{b}];\n"));
            }
            _ => src.push_str(&format!("h q[{a}];\n")),
        }
    }
    if measure {
        src.push_str("measure q -> c;\n");
    }
    src
}
