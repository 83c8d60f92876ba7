use super::{shot_rng, EngineConfig, Machine, SimError};
use crate::qasm::{CircuitIR, Instruction, Op};
use crate::state::{GateMatrix, QuantumState, StateSnapshot};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEvent {
    pub shot: u64,
    pub index: usize,
    pub kind: &'static str,
    pub qubits: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outcome: Option<u8>,
    pub norm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state: Option<StateSnapshot>,
}

impl TraceEvent {
    pub(crate) fn new(
        shot: u64,
        index: usize,
        inst: &Instruction,
        outcome: Option<u8>,
        norm: f64,
        state: Option<StateSnapshot>,
    ) -> Self {
        Self {
            shot,
            index,
            kind: inst.op.name(),
            qubits: inst.op.qubits(),
            outcome,
            norm,
            state,
        }
    }
}

/// Single-shot stepper. Runs shot 0 of the configured seed one instruction
/// at a time.
pub struct ExecutionCursor {
    ir: Arc<CircuitIR>,
    config: EngineConfig,
    machine: Machine,
    rng: ChaCha8Rng,
    position: usize,
    state_reads: AtomicUsize,
}

impl ExecutionCursor {
    pub fn new(ir: Arc<CircuitIR>, config: &EngineConfig) -> Result<Self, SimError> {
        let machine = Machine::new(&ir, config)?;
        Ok(Self {
            rng: shot_rng(config.seed, 0),
            config: config.clone(),
            ir,
            machine,
            position: 0,
            state_reads: AtomicUsize::new(0),
        })
    }

    pub fn ir(&self) -> &Arc<CircuitIR> {
        &self.ir
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    /// Index of the next instruction to run.
    pub fn position(&self) -> usize {
        self.position
    }

    pub fn len(&self) -> usize {
        self.ir.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ir.instructions.is_empty()
    }

    pub fn is_finished(&self) -> bool {
        self.position >= self.len()
    }

    pub fn step(&mut self) -> Result<TraceEvent, SimError> {
        let index = self.position;
        let inst = self.ir.instructions.get(index).ok_or(SimError::CursorExhausted)?;
        let outcome = self.machine.apply(&inst.op, &mut self.rng)?;
        let norm = self.machine.check_norm(index)?;
        self.position += 1;
        let snapshot = self
            .config
            .trace_states
            .then(|| self.machine.backend.state().snapshot());
        Ok(TraceEvent::new(0, index, inst, outcome, norm, snapshot))
    }

    /// Advances until `position() == index` (clamped to the end).
    pub fn run_to(&mut self, index: usize) -> Result<Vec<TraceEvent>, SimError> {
        let target = index.min(self.len());
        let mut events = Vec::new();
        while self.position < target {
            events.push(self.step()?);
        }
        Ok(events)
    }

    pub fn run_to_end(&mut self) -> Result<Vec<TraceEvent>, SimError> {
        self.run_to(self.len())
    }

    /// Back to index 0 with a fresh `|0...0>` and the same random stream.
    pub fn restart(&mut self) -> Result<(), SimError> {
        let reads = self.state_reads();
        *self = Self::new(self.ir.clone(), &self.config)?;
        self.state_reads = AtomicUsize::new(reads);
        Ok(())
    }

    /// Applies primitive gates to the live state outside the program, e.g.
    /// for cloning tactics. Only `U`, `CX` and barriers are accepted.
    pub fn apply_ops(&mut self, ops: &[Op]) -> Result<(), SimError> {
        for op in ops {
            if !op.is_unitary() {
                return Err(SimError::NonUnitaryProgram {
                    instruction: self.position,
                    kind: op.name().to_string(),
                });
            }
            let mut unused = shot_rng(self.config.seed, u64::MAX);
            self.machine.apply(op, &mut unused)?;
        }
        self.machine.check_norm(self.position)?;
        Ok(())
    }

    pub fn apply_gate(&mut self, gate: &GateMatrix, targets: &[usize]) -> Result<(), SimError> {
        self.machine.backend.apply_gate(gate, targets)?;
        self.machine.check_norm(self.position)?;
        Ok(())
    }

    /// The live state. Every call is counted; see [`state_reads`](Self::state_reads).
    pub fn state(&self) -> &QuantumState {
        self.state_reads.fetch_add(1, Ordering::Relaxed);
        self.machine.backend.state()
    }

    /// How many times the live amplitudes have been handed out.
    pub fn state_reads(&self) -> usize {
        self.state_reads.load(Ordering::Relaxed)
    }

    pub fn clbits(&self) -> &[u8] {
        &self.machine.clbits
    }

    /// Classical bits as a string, `c[0]` leftmost.
    pub fn clbit_string(&self) -> String {
        self.machine.clbit_string()
    }

    pub fn creg_value(&self, creg: usize) -> u64 {
        self.machine.creg_value(creg)
    }
}
