//! Interactive debugging over a compiled program.
//!
//! A [`DebugSession`] owns an [`ExecutionCursor`] and answers questions about
//! the paused state in one of two modes. In [`Mode::Omniscient`] the live
//! amplitudes are read directly. In [`Mode::Device`] the live state is never
//! read: every answer comes from sampling fresh re-executions of the
//! session history, the way evidence would be gathered on hardware.

pub mod analysis;
pub mod assertions;
pub mod cloning;
mod replay;
pub mod tomography;

pub use analysis::{
    check_superposition_known_input, describe_as_known_preparation, regenerate, separability_report,
    separability_report_density, superposition_of, Candidate, PreparationMatch, SeparabilityReport,
    SuperpositionReport,
};
pub use assertions::{purity_margin, required_shots, AssertionResult};
pub use cloning::{exact_clone_ops, universal_cloner, CloneReport, UNIVERSAL_CLONE_FIDELITY};
pub use replay::Action;
pub use tomography::{tomography, TomographyResult, TomographyShots, MAX_TOMOGRAPHY_QUBITS};

use crate::harness::{HarnessError, Verdict};
use crate::qasm::{CircuitIR, Directive, DirectiveKind};
use crate::sim::{EngineConfig, ExecutionCursor, Method, SimError};
use crate::state::{StateError, StateSnapshot};
use analysis::QubitPurity;
use assertions::Check;
use replay::Replay;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

#[derive(Debug, thiserror::Error)]
pub enum DebugError {
    #[error("cannot resolve breakpoint location: {0}")]
    UnresolvableLocation(String),
    #[error("prefix instruction {instruction} ({kind}) is not unitary")]
    NonUnitaryPrefix { instruction: usize, kind: String },
    #[error("superposition cannot be decided without a known input state")]
    UnknownInput,
    #[error("global state is mixed (purity {0:.6}); the purity criterion needs a pure state")]
    MixedGlobalState(f64),
    #[error("qubit {0} appears in both registers")]
    RegisterOverlap(usize),
    #[error("blank qubit {0} is not in |0>")]
    BlankNotZero(usize),
    #[error("source qubit is entangled (purity {0:.6})")]
    MixedSource(f64),
    #[error("{requested} qubits requested, at most {limit} supported")]
    TooManyQubits { requested: usize, limit: usize },
    #[error("preparation instruction {instruction} ({kind}) is not unitary")]
    NonUnitaryPreparation { instruction: usize, kind: String },
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    #[error("invalid operand: {0}")]
    InvalidOperand(String),
    #[error("{0} is not available in device mode")]
    DeviceMode(&'static str),
    #[error("directive anchored at {anchor} but the cursor is at {position}")]
    NotAtAnchor { anchor: usize, position: usize },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Omniscient,
    Device,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Omniscient => "omniscient",
            Mode::Device => "device",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "omniscient" | "omni" => Ok(Mode::Omniscient),
            "device" | "device-faithful" => Ok(Mode::Device),
            other => Err(format!("unknown mode {other:?} (expected omniscient or device)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionConfig {
    pub mode: Mode,
    pub seed: u64,
    /// Shots per statistical query in device mode.
    pub shot_budget: u64,
    pub engine: Method,
    pub max_qubits: Option<usize>,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Omniscient,
            seed: 0,
            shot_budget: 1060,
            engine: Method::DenseInplace,
            max_qubits: None,
        }
    }
}

/// A breakpoint target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Line(usize),
    Index(usize),
}

impl FromStr for Location {
    type Err = String;
    /// `12` is a source line, `@3` an instruction index.
    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        let parse = |t: &str| t.parse::<usize>().map_err(|_| format!("bad location {s:?}"));
        match s.strip_prefix('@') {
            Some(rest) => Ok(Location::Index(parse(rest)?)),
            None => Ok(Location::Line(parse(s.strip_prefix("line:").unwrap_or(s))?)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StopReason {
    Step,
    Breakpoint,
    Finished,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stop {
    pub reason: StopReason,
    pub position: usize,
    /// Source line of the next instruction.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub next: Option<String>,
    pub assertions: Vec<AssertionResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Inspection {
    Amplitudes {
        position: usize,
        state: StateSnapshot,
    },
    Histogram {
        position: usize,
        shots: u64,
        qubits: Vec<usize>,
        counts: BTreeMap<String, u64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbabilityReport {
    pub qubit: usize,
    pub p1: f64,
    /// Shots behind the estimate; absent when exact.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shots: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogEntry {
    pub seq: u64,
    pub event: String,
    pub data: Value,
}

pub struct DebugSession {
    ir: Arc<CircuitIR>,
    cursor: ExecutionCursor,
    engine: EngineConfig,
    mode: Mode,
    seed: u64,
    shot_budget: u64,
    breakpoints: BTreeSet<usize>,
    history: Vec<Action>,
    visited: Option<usize>,
    queries: u64,
    results: Vec<AssertionResult>,
    log: Vec<LogEntry>,
    log_seq: u64,
}

impl DebugSession {
    pub fn new(ir: CircuitIR, config: &SessionConfig) -> Result<Self, DebugError> {
        if config.shot_budget == 0 {
            return Err(SimError::InvalidConfig("shot budget must be positive".into()).into());
        }
        let mut engine = EngineConfig::new(config.engine, config.seed, 1);
        engine.max_qubits = config.max_qubits;
        let ir = Arc::new(ir);
        let cursor = ExecutionCursor::new(ir.clone(), &engine)?;
        let breakpoints = ir
            .directives
            .iter()
            .filter(|d| d.kind == DirectiveKind::Break && d.anchor < ir.instructions.len())
            .map(|d| d.anchor)
            .collect();
        Ok(Self {
            ir,
            cursor,
            engine,
            mode: config.mode,
            seed: config.seed,
            shot_budget: config.shot_budget,
            breakpoints,
            history: Vec::new(),
            visited: None,
            queries: 0,
            results: Vec::new(),
            log: Vec::new(),
            log_seq: 0,
        })
    }

    pub fn ir(&self) -> &Arc<CircuitIR> {
        &self.ir
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
        self.record("mode", json!({ "mode": mode }));
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn shot_budget(&self) -> u64 {
        self.shot_budget
    }

    pub fn set_shot_budget(&mut self, shots: u64) -> Result<(), DebugError> {
        if shots == 0 {
            return Err(SimError::InvalidConfig("shot budget must be positive".into()).into());
        }
        self.shot_budget = shots;
        Ok(())
    }

    pub fn position(&self) -> usize {
        self.cursor.position()
    }

    pub fn len(&self) -> usize {
        self.cursor.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cursor.is_empty()
    }

    pub fn is_finished(&self) -> bool {
        self.cursor.is_finished()
    }

    pub fn breakpoints(&self) -> &BTreeSet<usize> {
        &self.breakpoints
    }

    /// Number of times the live amplitudes have been read.
    pub fn state_reads(&self) -> usize {
        self.cursor.state_reads()
    }

    /// Assertion results gathered since the last restart.
    pub fn assertion_results(&self) -> &[AssertionResult] {
        &self.results
    }

    pub fn log(&self) -> &[LogEntry] {
        &self.log
    }

    pub fn drain_log(&mut self) -> Vec<LogEntry> {
        std::mem::take(&mut self.log)
    }

    /// Classical bits of the live run, `c[0]` leftmost.
    pub fn clbits(&self) -> String {
        self.cursor.clbit_string()
    }

    fn record(&mut self, event: &str, data: Value) {
        self.log_seq += 1;
        self.log.push(LogEntry {
            seq: self.log_seq,
            event: event.to_string(),
            data,
        });
    }

    pub fn resolve(&self, location: Location) -> Result<usize, DebugError> {
        match location {
            Location::Index(i) if i < self.len() => Ok(i),
            Location::Index(i) => Err(DebugError::UnresolvableLocation(format!(
                "instruction {i} does not exist ({} instructions)",
                self.len()
            ))),
            Location::Line(line) => self
                .ir
                .instruction_at_line(line)
                .ok_or_else(|| DebugError::UnresolvableLocation(format!("line {line} has no instruction"))),
        }
    }

    /// Pauses before the instruction at `location`; returns its index.
    pub fn set_breakpoint(&mut self, location: Location) -> Result<usize, DebugError> {
        let index = self.resolve(location)?;
        self.breakpoints.insert(index);
        Ok(index)
    }

    pub fn clear_breakpoint(&mut self, location: Location) -> Result<bool, DebugError> {
        let index = self.resolve(location)?;
        Ok(self.breakpoints.remove(&index))
    }

    fn stop(&self, reason: StopReason, assertions: Vec<AssertionResult>) -> Stop {
        let pos = self.position();
        let inst = self.ir.instructions.get(pos);
        Stop {
            reason,
            position: pos,
            line: inst.map(|i| i.span.line),
            next: inst.map(|i| self.ir.describe_origin(&i.origin)),
            assertions,
        }
    }

    /// Evaluates the assertions anchored at the current position once.
    /// Returns whether a breakpoint sits there.
    fn visit(&mut self) -> Result<(bool, Vec<AssertionResult>), DebugError> {
        let pos = self.position();
        if self.visited == Some(pos) {
            return Ok((false, Vec::new()));
        }
        self.visited = Some(pos);
        let directives: Vec<Directive> = self
            .ir
            .directives
            .iter()
            .filter(|d| d.anchor == pos && d.kind.is_assertion())
            .cloned()
            .collect();
        let mut out = Vec::new();
        for d in &directives {
            out.push(self.evaluate_assertion(d)?);
        }
        Ok((self.breakpoints.contains(&pos), out))
    }

    fn advance(&mut self) -> Result<(), DebugError> {
        let op = self.ir.instructions[self.position()].op.clone();
        let ev = self.cursor.step()?;
        self.history.push(Action::Op(op));
        self.record("step", serde_json::to_value(&ev).unwrap_or(Value::Null));
        Ok(())
    }

    /// Executes one instruction.
    pub fn step(&mut self) -> Result<Stop, DebugError> {
        let (_, mut asserts) = self.visit()?;
        if !self.is_finished() {
            self.advance()?;
            asserts.extend(self.visit()?.1);
        }
        let reason = if self.is_finished() {
            StopReason::Finished
        } else {
            StopReason::Step
        };
        Ok(self.finish_stop(reason, asserts))
    }

    /// Runs until a breakpoint or the end.
    pub fn resume(&mut self) -> Result<Stop, DebugError> {
        let mut asserts = Vec::new();
        loop {
            let (bp, a) = self.visit()?;
            asserts.extend(a);
            if bp {
                return Ok(self.finish_stop(StopReason::Breakpoint, asserts));
            }
            if self.is_finished() {
                return Ok(self.finish_stop(StopReason::Finished, asserts));
            }
            self.advance()?;
        }
    }

    fn finish_stop(&mut self, reason: StopReason, asserts: Vec<AssertionResult>) -> Stop {
        let stop = self.stop(reason, asserts);
        self.record("stopped", serde_json::to_value(&stop).unwrap_or(Value::Null));
        stop
    }

    /// Back to the first instruction; breakpoints, mode and budget persist.
    pub fn restart(&mut self) -> Result<(), DebugError> {
        self.cursor.restart()?;
        self.history.clear();
        self.visited = None;
        self.results.clear();
        self.record("restarted", Value::Null);
        Ok(())
    }

    fn next_seed(&mut self) -> u64 {
        self.queries += 1;
        self.seed
            .wrapping_add(self.queries.wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }

    fn replay(&self) -> Replay<'_> {
        Replay {
            ir: &self.ir,
            actions: &self.history,
            config: &self.engine,
        }
    }

    fn sample_qubits(&mut self, qubits: &[usize], shots: u64) -> Result<BTreeMap<String, u64>, DebugError> {
        let seed = self.next_seed();
        self.replay().sample(&[], qubits, &[], shots, seed)
    }

    fn sample_clbits(&mut self, clbits: &[usize], shots: u64) -> Result<BTreeMap<String, u64>, DebugError> {
        let seed = self.next_seed();
        self.replay().sample(&[], &[], clbits, shots, seed)
    }

    fn check_operands(&self, qubits: &[usize]) -> Result<(), DebugError> {
        match qubits.iter().find(|&&q| q >= self.ir.n_qubits) {
            Some(q) => Err(DebugError::InvalidOperand(format!("qubit {q} out of range"))),
            None => Ok(()),
        }
    }

    /// Amplitudes in omniscient mode; otherwise a histogram of fresh
    /// measurements of every qubit over `shot_budget` replays.
    pub fn inspect_state(&mut self) -> Result<Inspection, DebugError> {
        let position = self.position();
        match self.mode {
            Mode::Omniscient => Ok(Inspection::Amplitudes {
                position,
                state: self.cursor.state().snapshot(),
            }),
            Mode::Device => {
                let qubits: Vec<usize> = (0..self.ir.n_qubits).collect();
                let shots = self.shot_budget;
                let counts = self.sample_qubits(&qubits, shots)?;
                Ok(Inspection::Histogram {
                    position,
                    shots,
                    qubits,
                    counts,
                })
            }
        }
    }

    /// Probability that `qubit` reads 1.
    pub fn probability(&mut self, qubit: usize) -> Result<ProbabilityReport, DebugError> {
        self.check_operands(&[qubit])?;
        match self.mode {
            Mode::Omniscient => Ok(ProbabilityReport {
                qubit,
                p1: self.cursor.state().prob_one(qubit)?,
                shots: None,
            }),
            Mode::Device => {
                let shots = self.shot_budget;
                let counts = self.sample_qubits(&[qubit], shots)?;
                Ok(ProbabilityReport {
                    qubit,
                    p1: *counts.get("1").unwrap_or(&0) as f64 / shots as f64,
                    shots: Some(shots),
                })
            }
        }
    }

    /// Regenerates the instructions executed so far on the basis state
    /// `initial`. Needs a measurement-free history.
    pub fn check_superposition(&self, initial: Option<&str>) -> Result<SuperpositionReport, DebugError> {
        check_superposition_known_input(&self.ir.prefix(self.position()), initial)
    }

    /// Per-qubit purities. Device mode estimates each one by single-qubit
    /// tomography with `shot_budget` shots per setting, so bipartitions are
    /// only offered in omniscient mode.
    pub fn separability(&mut self, with_bipartitions: bool) -> Result<SeparabilityReport, DebugError> {
        match self.mode {
            Mode::Omniscient => separability_report(self.cursor.state(), with_bipartitions),
            Mode::Device => {
                let shots = self.shot_budget;
                let margin = purity_margin(1, shots);
                let mut qubits = Vec::new();
                for q in 0..self.ir.n_qubits {
                    let t = self.sampled_tomography(&[q], shots)?;
                    qubits.push(QubitPurity {
                        qubit: q,
                        purity: t.raw_purity,
                        entangled: t.raw_purity < 1.0 - margin,
                    });
                }
                Ok(SeparabilityReport {
                    qubits,
                    bipartitions: None,
                })
            }
        }
    }

    fn sampled_tomography(&mut self, qubits: &[usize], shots: u64) -> Result<TomographyResult, DebugError> {
        let qubits = tomography::check_qubits(qubits, self.ir.n_qubits)?;
        let seed = self.next_seed();
        let source = tomography::Source::Sampled {
            replay: self.replay(),
            shots,
            seed,
        };
        tomography::reconstruct(&source, &qubits, self.ir.n_qubits, None)
    }

    /// Tomography of the paused state. Exact expectations read the live
    /// state and are refused in device mode.
    pub fn tomography(&mut self, qubits: &[usize], shots: TomographyShots) -> Result<TomographyResult, DebugError> {
        match shots {
            TomographyShots::Exact => {
                if self.mode == Mode::Device {
                    return Err(DebugError::DeviceMode("exact tomography"));
                }
                let qubits = tomography::check_qubits(qubits, self.ir.n_qubits)?;
                let state = self.cursor.state().clone();
                tomography::reconstruct(&tomography::Source::Exact(&state), &qubits, self.ir.n_qubits, None)
            }
            TomographyShots::Finite(0) => Err(SimError::InvalidConfig("shots must be positive".into()).into()),
            TomographyShots::Finite(n) => self.sampled_tomography(qubits, n),
        }
    }

    /// Matches the live state against known preparations.
    pub fn describe(&self, candidates: &[Candidate]) -> Result<Option<PreparationMatch>, DebugError> {
        if self.mode == Mode::Device {
            return Err(DebugError::DeviceMode("describe"));
        }
        describe_as_known_preparation(self.cursor.state(), candidates)
    }

    fn check_blank(&self, blank: &[usize]) -> Result<(), DebugError> {
        if self.mode == Mode::Omniscient {
            for &q in blank {
                if self.cursor.state().prob_one(q)? > 1e-9 {
                    return Err(DebugError::BlankNotZero(q));
                }
            }
        }
        Ok(())
    }

    /// Copies `source`, known to hold one of the states `H^n |j>`, into
    /// `blank`. Blanks are verified in omniscient mode only.
    pub fn exact_clone(&mut self, source: &[usize], blank: &[usize]) -> Result<(), DebugError> {
        let ops = exact_clone_ops(source, blank)?;
        self.check_operands(source)?;
        self.check_operands(blank)?;
        self.check_blank(blank)?;
        let ops: Vec<_> = ops.into_iter().map(|(_, op)| op).collect();
        self.cursor.apply_ops(&ops)?;
        self.history.extend(ops.into_iter().map(Action::Op));
        self.record("clone-exact", json!({"source": source, "blank": blank}));
        Ok(())
    }

    /// Applies the universal cloner to `(source, copy, ancilla)`. In
    /// omniscient mode the source must be unentangled and both output
    /// fidelities are reported.
    pub fn universal_clone(&mut self, source: usize, copy: usize, ancilla: usize) -> Result<CloneReport, DebugError> {
        let targets = [source, copy, ancilla];
        self.check_operands(&targets)?;
        for (i, q) in targets.iter().enumerate() {
            if targets[..i].contains(q) {
                return Err(DebugError::RegisterOverlap(*q));
            }
        }
        self.check_blank(&[copy, ancilla])?;
        let input = match self.mode {
            Mode::Omniscient => Some(cloning::pure_reduction(self.cursor.state(), source)?),
            Mode::Device => None,
        };
        let gate = universal_cloner();
        self.cursor.apply_gate(&gate, &targets)?;
        self.history.push(Action::Gate {
            gate,
            targets: targets.to_vec(),
        });
        let fidelities = match &input {
            Some(input) => Some(cloning::copy_fidelities(self.cursor.state(), [source, copy], input)?),
            None => None,
        };
        let report = CloneReport {
            source,
            copies: [source, copy],
            fidelities,
        };
        self.record("clone-approx", serde_json::to_value(&report).unwrap_or(Value::Null));
        Ok(report)
    }

    /// Evaluates an assertion at the current position.
    pub fn evaluate_assertion(&mut self, directive: &Directive) -> Result<AssertionResult, DebugError> {
        let position = self.position();
        if directive.anchor != position {
            return Err(DebugError::NotAtAnchor {
                anchor: directive.anchor,
                position,
            });
        }
        let required = required_shots(&directive.kind);
        let budget = self.shot_budget;
        let mode = self.mode;
        let (check, shots) = match (&directive.kind, mode) {
            (DirectiveKind::Break, _) => {
                return Err(DebugError::InvalidOperand("break is not an assertion".into()));
            }
            (DirectiveKind::AssertClassical { qubits, expected }, Mode::Omniscient) => {
                (assertions::classical_exact(self.cursor.state(), qubits, expected)?, 0)
            }
            (DirectiveKind::AssertClassical { qubits, expected }, Mode::Device) => {
                let counts = self.sample_qubits(qubits, budget)?;
                (assertions::classical_sampled(&counts, expected, budget, required), budget)
            }
            (DirectiveKind::AssertSuperposition { qubits }, Mode::Omniscient) => {
                (assertions::superposition_exact(self.cursor.state(), qubits)?, 0)
            }
            (DirectiveKind::AssertSuperposition { qubits }, Mode::Device) => {
                let counts = self.sample_qubits(qubits, budget)?;
                (assertions::superposition_sampled(&counts, budget, required), budget)
            }
            (DirectiveKind::AssertSeparable { qubits }, Mode::Omniscient) => {
                (assertions::separable_exact(self.cursor.state(), qubits)?, 0)
            }
            (DirectiveKind::AssertEntangled { qubits }, Mode::Omniscient) => {
                (assertions::entangled_exact(self.cursor.state(), qubits)?, 0)
            }
            (DirectiveKind::AssertSeparable { qubits }, Mode::Device) => self.purity_check(std::slice::from_ref(qubits), true)?,
            (DirectiveKind::AssertEntangled { qubits }, Mode::Device) => {
                let sets: Vec<Vec<usize>> = qubits.iter().map(|&q| vec![q]).collect();
                self.purity_check(&sets, false)?
            }
            (
                DirectiveKind::AssertDistribution {
                    clbits,
                    expected,
                    tolerance,
                },
                _,
            ) => {
                let shots = if mode == Mode::Omniscient { required } else { budget };
                let counts = self.sample_clbits(clbits, shots)?;
                (
                    assertions::distribution_sampled(&counts, expected, *tolerance, shots, required),
                    shots,
                )
            }
        };
        let result = AssertionResult {
            directive: directive.text.clone(),
            anchor: directive.anchor,
            line: directive.span.line,
            mode,
            verdict: check.verdict,
            evidence: check.evidence,
            shots,
            p_value: check.p_value,
        };
        self.results.push(result.clone());
        self.record("assertion", serde_json::to_value(&result).unwrap_or(Value::Null));
        Ok(result)
    }

    /// Sampled purity assertion over each qubit set. Sets too large for
    /// tomography make the check inconclusive.
    fn purity_check(&mut self, sets: &[Vec<usize>], want_pure: bool) -> Result<(Check, u64), DebugError> {
        let budget = self.shot_budget;
        let mut estimates = Vec::new();
        let mut used = 0;
        for set in sets {
            if set.len() > MAX_TOMOGRAPHY_QUBITS {
                let check = Check {
                    verdict: Verdict::Inconclusive,
                    evidence: json!({"reason": "too many qubits for tomography", "qubits": set}),
                    p_value: None,
                };
                return Ok((check, used));
            }
            let t = self.sampled_tomography(set, budget)?;
            used += budget * t.settings.len() as u64;
            estimates.push((t.qubits.clone(), t.raw_purity));
        }
        Ok((assertions::purity_sampled(&estimates, want_pure, budget), used))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qasm::{compile, CompileOptions};

    fn session(src: &str, mode: Mode) -> DebugSession {
        let ir = compile(
            &format!("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n{src}"),
            &CompileOptions::default(),
        )
        .unwrap();
        DebugSession::new(
            ir,
            &SessionConfig {
                mode,
                seed: 11,
                ..SessionConfig::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn location_parsing() {
        assert_eq!("12".parse::<Location>().unwrap(), Location::Line(12));
        assert_eq!("@3".parse::<Location>().unwrap(), Location::Index(3));
        assert!("x".parse::<Location>().is_err());
    }

    #[test]
    fn breakpoint_pauses_then_resumes() {
        let mut s = session("qreg q[2];\nh q[0];\ncx q[0],q[1];\n", Mode::Omniscient);
        assert_eq!(s.set_breakpoint(Location::Line(5)).unwrap(), 1);
        let stop = s.resume().unwrap();
        assert_eq!((stop.reason, stop.position, stop.line), (StopReason::Breakpoint, 1, Some(5)));
        let stop = s.resume().unwrap();
        assert_eq!(stop.reason, StopReason::Finished);
        assert!(matches!(
            s.set_breakpoint(Location::Line(1)),
            Err(DebugError::UnresolvableLocation(_))
        ));
    }

    #[test]
    fn directive_break_and_assertions() {
        let mut s = session(
            "qreg q[3];\nx q[1];\n// @qdb break\n// @qdb assert-classical q -> 010\nh q[0];\n// @qdb assert-superposition q[0]\n",
            Mode::Omniscient,
        );
        let stop = s.resume().unwrap();
        assert_eq!(stop.reason, StopReason::Breakpoint);
        assert_eq!(stop.assertions.len(), 1);
        assert_eq!(stop.assertions[0].verdict, Verdict::Pass);
        let stop = s.resume().unwrap();
        assert_eq!(stop.assertions[0].verdict, Verdict::Pass);
        assert_eq!(s.assertion_results().len(), 2);
    }

    #[test]
    fn device_mode_never_reads_live_state() {
        let mut s = session(
            "qreg q[2];\nh q[0];\ncx q[0],q[1];\n// @qdb assert-entangled q[0],q[1]\n",
            Mode::Device,
        );
        let stop = s.resume().unwrap();
        assert_eq!(stop.assertions[0].verdict, Verdict::Pass, "{:?}", stop.assertions[0]);
        match s.inspect_state().unwrap() {
            Inspection::Histogram { counts, .. } => {
                assert_eq!(counts.keys().cloned().collect::<Vec<_>>(), vec!["00", "11"]);
            }
            other => panic!("{other:?}"),
        }
        s.probability(0).unwrap();
        s.separability(false).unwrap();
        s.tomography(&[0], TomographyShots::Finite(100)).unwrap();
        assert!(s.tomography(&[0], TomographyShots::Exact).is_err());
        assert_eq!(s.state_reads(), 0);
    }

    #[test]
    fn budget_too_small_is_inconclusive() {
        let mut s = session("qreg q[1];\nx q[0];\n// @qdb assert-classical q -> 1\n", Mode::Device);
        s.set_shot_budget(10).unwrap();
        let stop = s.resume().unwrap();
        assert_eq!(stop.assertions[0].verdict, Verdict::Inconclusive);
    }

    #[test]
    fn universal_clone_in_session() {
        let mut s = session("qreg q[3];\nh q[0];\n", Mode::Omniscient);
        s.resume().unwrap();
        let r = s.universal_clone(0, 1, 2).unwrap();
        for f in r.fidelities.unwrap() {
            assert!((f - UNIVERSAL_CLONE_FIDELITY).abs() < 1e-9);
        }
        // Device histograms see the injected gate through the replay.
        s.set_mode(Mode::Device);
        let p = s.probability(2).unwrap();
        assert!(p.p1 > 0.0);
    }

    #[test]
    fn blank_must_be_zero() {
        let mut s = session("qreg q[2];\nx q[1];\n", Mode::Omniscient);
        s.resume().unwrap();
        assert!(matches!(s.exact_clone(&[0], &[1]), Err(DebugError::BlankNotZero(1))));
    }
}
