//! Shot-based execution of [`CircuitIR`] programs.
//!
//! Randomness comes from ChaCha8 seeded with the configured 64-bit seed;
//! shot `i` reads stream `i` of that generator, so shots are independent and
//! reproducible in isolation. Each measured qubit consumes exactly one
//! uniform draw.

mod backend;
mod cursor;

pub use backend::{Backend, Dense, Naive, RngDyn};
pub use cursor::{ExecutionCursor, TraceEvent};

use crate::qasm::{CircuitIR, Op};
use crate::state::{gates, naive, GateMatrix, StateError, StateSnapshot, MAX_DENSE_QUBITS};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

pub const DEFAULT_DENSE_QUBITS: usize = 20;
pub const DEFAULT_NAIVE_QUBITS: usize = 10;
/// Naive matrices beyond this size would need tens of gigabytes.
pub const MAX_NAIVE_QUBITS: usize = 12;
pub const NORM_DRIFT_LIMIT: f64 = 1e-6;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum SimError {
    #[error("program needs {requested} qubits but the engine allows {limit}")]
    CapacityExceeded { requested: usize, limit: usize },
    #[error("norm drifted by {drift:e} after instruction {instruction}")]
    KernelCorruption { instruction: usize, drift: f64 },
    #[error("instruction {instruction} ({kind}) is not unitary")]
    NonUnitaryProgram { instruction: usize, kind: String },
    #[error("cursor is already past the last instruction")]
    CursorExhausted,
    #[error("invalid engine configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    State(#[from] StateError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    #[default]
    DenseInplace,
    NaiveMatrix,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::DenseInplace => "dense-inplace",
            Method::NaiveMatrix => "naive-matrix",
        }
    }

    pub fn default_capacity(self) -> usize {
        match self {
            Method::DenseInplace => DEFAULT_DENSE_QUBITS,
            Method::NaiveMatrix => DEFAULT_NAIVE_QUBITS,
        }
    }

    fn hard_capacity(self) -> usize {
        match self {
            Method::DenseInplace => MAX_DENSE_QUBITS,
            Method::NaiveMatrix => MAX_NAIVE_QUBITS,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "dense" | "dense-inplace" => Ok(Method::DenseInplace),
            "naive" | "naive-matrix" => Ok(Method::NaiveMatrix),
            other => Err(format!("unknown engine {other:?} (expected dense or naive)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub method: Method,
    pub seed: u64,
    pub shots: u64,
    /// Defaults to 20 for the dense engine and 10 for the naive one.
    pub max_qubits: Option<usize>,
    /// Keep the final state; honored only when `shots == 1`.
    pub record_statevector: bool,
    /// Keep each shot's classical register contents.
    pub record_shots: bool,
    /// Attach a state snapshot to every trace event.
    pub trace_states: bool,
    /// Fault-injection fixture for the naive engine: every CX runs with
    /// control and target exchanged.
    #[serde(skip)]
    pub fault_flip_cx: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            method: Method::DenseInplace,
            seed: 0,
            shots: 1024,
            max_qubits: None,
            record_statevector: false,
            record_shots: false,
            trace_states: false,
            fault_flip_cx: false,
        }
    }
}

impl EngineConfig {
    pub fn new(method: Method, seed: u64, shots: u64) -> Self {
        Self {
            method,
            seed,
            shots,
            ..Self::default()
        }
    }

    pub fn capacity(&self) -> usize {
        self.max_qubits
            .unwrap_or_else(|| self.method.default_capacity())
            .min(self.method.hard_capacity())
    }

    pub fn check_capacity(&self, n_qubits: usize) -> Result<(), SimError> {
        let limit = self.capacity();
        if n_qubits > limit {
            return Err(SimError::CapacityExceeded {
                requested: n_qubits,
                limit,
            });
        }
        Ok(())
    }

    pub fn backend(&self, n_qubits: usize) -> Result<Box<dyn Backend>, SimError> {
        self.check_capacity(n_qubits)?;
        Ok(match self.method {
            Method::DenseInplace => Box::new(Dense::new(n_qubits)?),
            Method::NaiveMatrix => Box::new(Naive::new(n_qubits, self.fault_flip_cx)?),
        })
    }
}

/// Generator for shot `shot` under `seed`.
pub fn shot_rng(seed: u64, shot: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shot);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineInfo {
    pub method: Method,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    /// Classical register contents, `c[0]` leftmost, to occurrence counts.
    pub counts: BTreeMap<String, u64>,
    pub shots: u64,
    pub engine: EngineInfo,
    pub final_state: Option<StateSnapshot>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub per_shot: Option<Vec<String>>,
    pub elapsed_ms: f64,
}

impl RunResult {
    pub fn probability(&self, key: &str) -> f64 {
        *self.counts.get(key).unwrap_or(&0) as f64 / self.shots as f64
    }

    /// JSON without the timing field, for byte-level reproducibility checks.
    pub fn to_json_without_timing(&self) -> String {
        let mut v = serde_json::to_value(self).expect("RunResult serializes");
        v.as_object_mut().expect("object").remove("elapsed_ms");
        v.to_string()
    }
}

/// Classical memory plus the rules for applying one instruction.
pub(crate) struct Machine {
    pub backend: Box<dyn Backend>,
    pub clbits: Vec<u8>,
    creg_layout: Vec<(usize, usize)>,
}

impl Machine {
    pub fn new(ir: &CircuitIR, config: &EngineConfig) -> Result<Self, SimError> {
        Ok(Self {
            backend: config.backend(ir.n_qubits)?,
            clbits: vec![0; ir.n_clbits],
            creg_layout: ir.cregs.iter().map(|r| (r.offset, r.size)).collect(),
        })
    }

    /// Register value with its element 0 as the least significant bit.
    pub fn creg_value(&self, creg: usize) -> u64 {
        let (offset, size) = self.creg_layout[creg];
        (0..size).fold(0u64, |acc, k| acc | ((self.clbits[offset + k] as u64) << k))
    }

    pub fn clbit_string(&self) -> String {
        self.clbits.iter().map(|b| if *b == 1 { '1' } else { '0' }).collect()
    }

    /// Applies `op`, returning the measured bit for measure/reset.
    pub fn apply(&mut self, op: &Op, rng: &mut dyn RngDyn) -> Result<Option<u8>, SimError> {
        match op {
            Op::U {
                qubit,
                theta,
                phi,
                lambda,
            } => self.backend.apply_u(*qubit, *theta, *phi, *lambda)?,
            Op::Cx { control, target } => self.backend.apply_cx(*control, *target)?,
            Op::Measure { qubit, clbit } => {
                let bit = self.backend.measure(*qubit, rng)?;
                self.clbits[*clbit] = bit;
                return Ok(Some(bit));
            }
            Op::Reset { qubit } => {
                let bit = self.backend.measure(*qubit, rng)?;
                if bit == 1 {
                    self.backend
                        .apply_u(*qubit, std::f64::consts::PI, 0.0, std::f64::consts::PI)?;
                }
                return Ok(Some(bit));
            }
            Op::Barrier { .. } => {}
            Op::Conditional { creg, value, ops } => {
                if self.creg_value(*creg) == *value {
                    let mut last = None;
                    for inner in ops {
                        last = self.apply(inner, rng)?.or(last);
                    }
                    return Ok(last);
                }
            }
        }
        Ok(None)
    }

    pub fn check_norm(&self, instruction: usize) -> Result<f64, SimError> {
        check_norm(self.backend.state().norm_sqr(), instruction)
    }
}

/// Fails with `KernelCorruption` when `norm_sqr` strays more than
/// [`NORM_DRIFT_LIMIT`] from 1.
pub fn check_norm(norm_sqr: f64, instruction: usize) -> Result<f64, SimError> {
    let drift = (norm_sqr - 1.0).abs();
    if drift > NORM_DRIFT_LIMIT || !drift.is_finite() {
        return Err(SimError::KernelCorruption { instruction, drift });
    }
    Ok(norm_sqr)
}

/// Runs `config.shots` shots of `ir` and aggregates the classical outcomes.
pub fn execute(ir: &CircuitIR, config: &EngineConfig) -> Result<RunResult, SimError> {
    execute_traced(ir, config, None)
}

/// [`execute`], additionally passing one [`TraceEvent`] per executed
/// instruction of every shot to `sink`.
pub fn execute_traced(
    ir: &CircuitIR,
    config: &EngineConfig,
    mut sink: Option<&mut dyn FnMut(TraceEvent)>,
) -> Result<RunResult, SimError> {
    if config.shots == 0 {
        return Err(SimError::InvalidConfig("shots must be positive".into()));
    }
    let start = Instant::now();
    let mut machine = Machine::new(ir, config)?;
    let n = ir.instructions.len();

    // The unitary prefix is deterministic, so it runs once and every shot
    // starts from its result. Tracing replays it per shot instead.
    let split = if sink.is_some() {
        0
    } else {
        ir.first_non_unitary(n).unwrap_or(n)
    };
    let mut unused = shot_rng(config.seed, u64::MAX);
    for (i, inst) in ir.instructions[..split].iter().enumerate() {
        machine.apply(&inst.op, &mut unused)?;
        machine.check_norm(i)?;
    }
    let prefix_state = machine.backend.state().clone();

    let mut counts = BTreeMap::new();
    let mut per_shot = config.record_shots.then(Vec::new);
    for shot in 0..config.shots {
        if shot > 0 || split == 0 {
            machine.backend.set_state(prefix_state.clone());
        }
        machine.clbits.iter_mut().for_each(|b| *b = 0);
        let mut rng = shot_rng(config.seed, shot);
        for (i, inst) in ir.instructions.iter().enumerate().skip(split) {
            let outcome = machine.apply(&inst.op, &mut rng)?;
            let norm = machine.check_norm(i)?;
            if let Some(sink) = sink.as_mut() {
                sink(TraceEvent::new(
                    shot,
                    i,
                    inst,
                    outcome,
                    norm,
                    config.trace_states.then(|| machine.backend.state().snapshot()),
                ));
            }
        }
        let key = machine.clbit_string();
        if let Some(list) = per_shot.as_mut() {
            list.push(key.clone());
        }
        *counts.entry(key).or_insert(0) += 1;
    }

    let final_state =
        (config.shots == 1 && config.record_statevector).then(|| machine.backend.state().snapshot());
    Ok(RunResult {
        counts,
        shots: config.shots,
        engine: EngineInfo {
            method: config.method,
            seed: config.seed,
        },
        final_state,
        per_shot,
        elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

/// The matrix of a measurement-free program: the product of the
/// full-space matrices of its instructions, first instruction rightmost.
pub fn circuit_unitary(ir: &CircuitIR) -> Result<GateMatrix, SimError> {
    let n = ir.n_qubits;
    if n > DEFAULT_NAIVE_QUBITS {
        return Err(SimError::CapacityExceeded {
            requested: n,
            limit: DEFAULT_NAIVE_QUBITS,
        });
    }
    let dim = 1usize << n;
    let mut total: DMatrix<Complex64> = DMatrix::identity(dim, dim);
    for (i, inst) in ir.instructions.iter().enumerate() {
        let m = match &inst.op {
            Op::U {
                qubit,
                theta,
                phi,
                lambda,
            } => naive::expand_1q(n, &gates::u(*theta, *phi, *lambda), *qubit),
            Op::Cx { control, target } => naive::expand_cx(n, *control, *target),
            Op::Barrier { .. } => continue,
            other => {
                return Err(SimError::NonUnitaryProgram {
                    instruction: i,
                    kind: other.name().to_string(),
                })
            }
        };
        total = m * total;
    }
    Ok(GateMatrix::from_matrix(total))
}
