use crate::debug::{
    Candidate, DebugError, DebugSession, Location, Mode, SessionConfig, StopReason, TomographyShots,
};
use crate::qasm::{compile, directive::parse_directive, CircuitIR, CompileOptions, Directive};
use crate::sim::Method;
use serde::Deserialize;
use serde_json::{json, Value};
use std::path::PathBuf;

pub const PROTOCOL_VERSION: u64 = 1;

pub const CAPABILITIES: &[&str] = &[
    "hello",
    "load",
    "status",
    "step",
    "continue",
    "restart",
    "set-breakpoint",
    "clear-breakpoint",
    "inspect",
    "probability",
    "assert",
    "separability",
    "superposition",
    "describe",
    "clone",
    "tomo",
    "set-mode",
    "set-shots",
    "close",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SessionState {
    Created,
    Loaded,
    Paused,
    Running,
    Finished,
}

impl SessionState {
    pub fn as_str(self) -> &'static str {
        match self {
            SessionState::Created => "created",
            SessionState::Loaded => "loaded",
            SessionState::Paused => "paused",
            SessionState::Running => "running",
            SessionState::Finished => "finished",
        }
    }
}

/// Error codes carried in `error` payloads.
pub mod code {
    pub const PARSE_ERROR: &str = "parse-error";
    pub const INVALID_REQUEST: &str = "invalid-request";
    pub const UNKNOWN_TYPE: &str = "unknown-type";
    pub const INVALID_STATE: &str = "invalid-state";
    pub const COMPILE_ERROR: &str = "compile-error";
    pub const DEBUG_ERROR: &str = "debug-error";
}

#[derive(Debug)]
struct Failure {
    code: &'static str,
    message: String,
    data: Option<Value>,
}

impl Failure {
    fn new(code: &'static str, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            data: None,
        }
    }
}

impl From<DebugError> for Failure {
    fn from(e: DebugError) -> Self {
        Failure::new(code::DEBUG_ERROR, e.to_string())
    }
}

type Reply = Result<Value, Failure>;

pub fn event(name: &str, data: Value) -> Value {
    json!({"type": "event", "payload": {"event": name, "data": data}})
}

fn result(id: u64, payload: Value) -> Value {
    json!({"id": id, "type": "result", "payload": payload})
}

fn error(id: Option<u64>, f: Failure) -> Value {
    let mut payload = json!({"code": f.code, "message": f.message});
    if let Some(d) = f.data {
        payload["data"] = d;
    }
    json!({"id": id, "type": "error", "payload": payload})
}

fn payload<T: for<'de> Deserialize<'de>>(v: &Value) -> Result<T, Failure> {
    serde_json::from_value(v.clone()).map_err(|e| Failure::new(code::INVALID_REQUEST, format!("bad payload: {e}")))
}

/// Qubit operands: integers, or register text such as `"q[0],q[2]"`.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Operands {
    Indices(Vec<usize>),
    Index(usize),
    Text(String),
}

impl Operands {
    fn resolve(&self, ir: &CircuitIR) -> Result<Vec<usize>, Failure> {
        let qs = match self {
            Operands::Indices(v) => v.clone(),
            Operands::Index(i) => vec![*i],
            Operands::Text(t) => ir
                .resolve_qubits(t)
                .map_err(|e| Failure::new(code::INVALID_REQUEST, e))?,
        };
        if let Some(q) = qs.iter().find(|&&q| q >= ir.n_qubits) {
            return Err(Failure::new(code::INVALID_REQUEST, format!("qubit {q} out of range")));
        }
        Ok(qs)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LoadPayload {
    source: String,
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    include_path: Option<PathBuf>,
    #[serde(default)]
    mode: Option<Mode>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    shot_budget: Option<u64>,
    #[serde(default)]
    engine: Option<Method>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BreakpointPayload {
    line: Option<usize>,
    index: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum ClonePayload {
    Exact { source: Operands, blank: Operands },
    Approx { source: usize, copy: usize, ancilla: usize },
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ShotsSpec {
    Count(u64),
    Word(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TomoPayload {
    qubits: Operands,
    shots: Option<ShotsSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CandidatePayload {
    name: String,
    source: String,
    initial: String,
}

/// Protocol state machine for one connection. Feed it one request line at a
/// time; it returns the messages to send, events first and the reply last.
pub struct Handler {
    state: SessionState,
    session: Option<DebugSession>,
    source_name: String,
    last_id: Option<u64>,
    closed: bool,
}

impl Default for Handler {
    fn default() -> Self {
        Self::new()
    }
}

impl Handler {
    pub fn new() -> Self {
        Self {
            state: SessionState::Created,
            session: None,
            source_name: String::new(),
            last_id: None,
            closed: false,
        }
    }

    pub fn state(&self) -> SessionState {
        self.state
    }

    /// True after a `close` request.
    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// Handles one frame. `emit` receives events as they happen, including
    /// heartbeats raised by `on_running` around long runs.
    pub fn handle_line(&mut self, line: &str, emit: &mut dyn FnMut(Value)) -> Value {
        let msg: Value = match serde_json::from_str(line) {
            Ok(v) => v,
            Err(e) => return error(None, Failure::new(code::PARSE_ERROR, format!("malformed JSON: {e}"))),
        };
        let id = match msg.get("id").and_then(Value::as_u64) {
            Some(id) => id,
            None => {
                return error(
                    None,
                    Failure::new(code::INVALID_REQUEST, "request needs a non-negative integer id"),
                )
            }
        };
        if self.last_id.is_some_and(|last| id <= last) {
            return error(
                Some(id),
                Failure::new(code::INVALID_REQUEST, format!("id {id} does not increase")),
            );
        }
        self.last_id = Some(id);
        let Some(kind) = msg.get("type").and_then(Value::as_str) else {
            return error(Some(id), Failure::new(code::INVALID_REQUEST, "request needs a string type"));
        };
        let body = msg.get("payload").cloned().unwrap_or_else(|| json!({}));
        if !body.is_object() {
            return error(Some(id), Failure::new(code::INVALID_REQUEST, "payload must be an object"));
        }
        match self.dispatch(kind, &body, emit) {
            Ok(v) => result(id, v),
            Err(f) => error(Some(id), f),
        }
    }

    fn transition(&mut self, to: SessionState, emit: &mut dyn FnMut(Value)) {
        if self.state != to {
            emit(event("state", json!({"from": self.state.as_str(), "to": to.as_str()})));
            self.state = to;
        }
    }

    fn session(&mut self) -> Result<&mut DebugSession, Failure> {
        self.session
            .as_mut()
            .ok_or_else(|| Failure::new(code::INVALID_STATE, "no program loaded"))
    }

    fn dispatch(&mut self, kind: &str, body: &Value, emit: &mut dyn FnMut(Value)) -> Reply {
        match kind {
            "hello" => Ok(json!({
                "protocol": PROTOCOL_VERSION,
                "server": concat!("qdb ", env!("CARGO_PKG_VERSION")),
                "capabilities": CAPABILITIES,
            })),
            "load" => self.load(payload(body)?, emit),
            "status" => self.status(),
            "close" => {
                self.closed = true;
                Ok(json!({}))
            }
            "step" | "continue" => self.run(kind == "step", emit),
            "restart" => {
                self.session()?.restart()?;
                self.transition(SessionState::Loaded, emit);
                self.status()
            }
            "set-breakpoint" | "clear-breakpoint" => {
                let p: BreakpointPayload = payload(body)?;
                let loc = match (p.line, p.index) {
                    (Some(l), None) => Location::Line(l),
                    (None, Some(i)) => Location::Index(i),
                    _ => return Err(Failure::new(code::INVALID_REQUEST, "give exactly one of line, index")),
                };
                let s = self.session()?;
                if kind == "set-breakpoint" {
                    let index = s.set_breakpoint(loc)?;
                    Ok(json!({"index": index, "line": s.ir().instructions[index].span.line}))
                } else {
                    Ok(json!({"removed": s.clear_breakpoint(loc)?}))
                }
            }
            "inspect" => Ok(serde_json::to_value(self.session()?.inspect_state()?).unwrap_or(Value::Null)),
            "probability" => {
                #[derive(Deserialize)]
                #[serde(deny_unknown_fields)]
                struct P {
                    qubit: Operands,
                }
                let p: P = payload(body)?;
                let s = self.session()?;
                let qs = p.qubit.resolve(s.ir())?;
                let reports = qs
                    .iter()
                    .map(|&q| s.probability(q))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(json!(reports))
            }
            "assert" => {
                #[derive(Deserialize)]
                #[serde(deny_unknown_fields)]
                struct P {
                    directive: String,
                }
                let p: P = payload(body)?;
                let s = self.session()?;
                let text = p.directive.trim().trim_start_matches("@qdb").trim().to_string();
                let kind = parse_directive(&text, s.ir()).map_err(|e| Failure::new(code::INVALID_REQUEST, e))?;
                if !kind.is_assertion() {
                    return Err(Failure::new(code::INVALID_REQUEST, "not an assertion"));
                }
                let directive = Directive {
                    kind,
                    anchor: s.position(),
                    span: Default::default(),
                    text,
                };
                Ok(serde_json::to_value(s.evaluate_assertion(&directive)?).unwrap_or(Value::Null))
            }
            "separability" => {
                #[derive(Deserialize)]
                #[serde(deny_unknown_fields)]
                struct P {
                    #[serde(default)]
                    bipartitions: bool,
                }
                let p: P = payload(body)?;
                Ok(serde_json::to_value(self.session()?.separability(p.bipartitions)?).unwrap_or(Value::Null))
            }
            "superposition" => {
                #[derive(Deserialize)]
                #[serde(deny_unknown_fields)]
                struct P {
                    initial: Option<String>,
                }
                let p: P = payload(body)?;
                let r = self.session()?.check_superposition(p.initial.as_deref())?;
                Ok(serde_json::to_value(r).unwrap_or(Value::Null))
            }
            "describe" => {
                #[derive(Deserialize)]
                #[serde(deny_unknown_fields)]
                struct P {
                    candidates: Vec<CandidatePayload>,
                }
                let p: P = payload(body)?;
                let candidates = p
                    .candidates
                    .into_iter()
                    .map(|c| {
                        let ir = compile(&c.source, &CompileOptions::default()).map_err(|e| Failure {
                            code: code::COMPILE_ERROR,
                            message: format!("candidate {:?}: {e}", c.name),
                            data: None,
                        })?;
                        Ok(Candidate {
                            name: c.name,
                            ir,
                            initial: c.initial,
                        })
                    })
                    .collect::<Result<Vec<_>, Failure>>()?;
                Ok(json!({ "match": self.session()?.describe(&candidates)? }))
            }
            "clone" => {
                let p: ClonePayload = payload(body)?;
                let s = self.session()?;
                match p {
                    ClonePayload::Exact { source, blank } => {
                        let (src, dst) = (source.resolve(s.ir())?, blank.resolve(s.ir())?);
                        s.exact_clone(&src, &dst)?;
                        Ok(json!({"kind": "exact", "source": src, "blank": dst}))
                    }
                    ClonePayload::Approx { source, copy, ancilla } => {
                        Ok(serde_json::to_value(s.universal_clone(source, copy, ancilla)?).unwrap_or(Value::Null))
                    }
                }
            }
            "tomo" => {
                let p: TomoPayload = payload(body)?;
                let s = self.session()?;
                let qubits = p.qubits.resolve(s.ir())?;
                let shots = match p.shots {
                    None => TomographyShots::Finite(s.shot_budget()),
                    Some(ShotsSpec::Count(n)) => TomographyShots::Finite(n),
                    Some(ShotsSpec::Word(w)) if w == "exact" => TomographyShots::Exact,
                    Some(ShotsSpec::Word(w)) => {
                        return Err(Failure::new(code::INVALID_REQUEST, format!("bad shots {w:?}")))
                    }
                };
                Ok(serde_json::to_value(s.tomography(&qubits, shots)?).unwrap_or(Value::Null))
            }
            "set-mode" => {
                #[derive(Deserialize)]
                #[serde(deny_unknown_fields)]
                struct P {
                    mode: Mode,
                }
                let p: P = payload(body)?;
                self.session()?.set_mode(p.mode);
                Ok(json!({"mode": p.mode}))
            }
            "set-shots" => {
                #[derive(Deserialize)]
                #[serde(deny_unknown_fields)]
                struct P {
                    shots: u64,
                }
                let p: P = payload(body)?;
                self.session()?.set_shot_budget(p.shots)?;
                Ok(json!({"shots": p.shots}))
            }
            "event" | "error" | "result" => Err(Failure::new(
                code::INVALID_REQUEST,
                format!("{kind} messages are server-initiated"),
            )),
            other => Err(Failure::new(code::UNKNOWN_TYPE, format!("unknown request type {other:?}"))),
        }
    }

    fn load(&mut self, p: LoadPayload, emit: &mut dyn FnMut(Value)) -> Reply {
        if self.state == SessionState::Running {
            return Err(Failure::new(code::INVALID_STATE, "cannot load while running"));
        }
        let options = CompileOptions {
            include_path: p.include_path,
        };
        let name = p.name.unwrap_or_else(|| "program.qasm".into());
        let ir = compile(&p.source, &options).map_err(|e| Failure {
            code: code::COMPILE_ERROR,
            message: e.to_string(),
            data: Some(json!({
                "line": e.span().line,
                "col": e.span().col,
                "rendered": e.render(&p.source, &name),
            })),
        })?;
        let defaults = SessionConfig::default();
        let config = SessionConfig {
            mode: p.mode.unwrap_or(defaults.mode),
            seed: p.seed.unwrap_or(defaults.seed),
            shot_budget: p.shot_budget.unwrap_or(defaults.shot_budget),
            engine: p.engine.unwrap_or(defaults.engine),
            max_qubits: None,
        };
        let session = DebugSession::new(ir, &config)?;
        let ir = session.ir().clone();
        self.session = Some(session);
        self.source_name = name;
        self.transition(SessionState::Loaded, emit);
        Ok(json!({
            "name": self.source_name,
            "n_qubits": ir.n_qubits,
            "n_clbits": ir.n_clbits,
            "qubits": (0..ir.n_qubits).map(|q| ir.qubit_label(q)).collect::<Vec<_>>(),
            "instructions": ir.instructions.iter().enumerate().map(|(i, inst)| json!({
                "index": i,
                "line": inst.span.line,
                "op": ir.describe_origin(&inst.origin),
            })).collect::<Vec<_>>(),
            "directives": ir.directives,
            "breakpoints": self.session.as_ref().map(|s| s.breakpoints().clone()),
        }))
    }

    fn status(&mut self) -> Reply {
        let state = self.state.as_str();
        match &self.session {
            None => Ok(json!({"state": state})),
            Some(s) => Ok(json!({
                "state": state,
                "name": self.source_name,
                "position": s.position(),
                "length": s.len(),
                "mode": s.mode(),
                "shot_budget": s.shot_budget(),
                "seed": s.seed(),
                "breakpoints": s.breakpoints(),
                "clbits": s.clbits(),
            })),
        }
    }

    fn run(&mut self, single: bool, emit: &mut dyn FnMut(Value)) -> Reply {
        self.session()?;
        if self.state == SessionState::Finished {
            return Err(Failure::new(code::INVALID_STATE, "program finished; send restart first"));
        }
        self.transition(SessionState::Running, emit);
        let s = self.session.as_mut().expect("checked above");
        let outcome = if single { s.step() } else { s.resume() };
        let stop = match outcome {
            Ok(stop) => stop,
            Err(e) => {
                self.transition(SessionState::Paused, emit);
                return Err(e.into());
            }
        };
        for a in &stop.assertions {
            emit(event("assertion", serde_json::to_value(a).unwrap_or(Value::Null)));
        }
        let stop_json = serde_json::to_value(&stop).unwrap_or(Value::Null);
        if stop.reason == StopReason::Finished {
            self.transition(SessionState::Finished, emit);
            emit(event("finished", stop_json.clone()));
        } else {
            self.transition(SessionState::Paused, emit);
            emit(event("stopped", stop_json.clone()));
        }
        Ok(stop_json)
    }

    /// Status snapshot for heartbeats.
    pub fn heartbeat_data(&self) -> Value {
        json!({
            "state": self.state.as_str(),
            "position": self.session.as_ref().map(|s| s.position()),
        })
    }
}
