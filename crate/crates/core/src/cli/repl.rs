use super::Format;
use crate::debug::{
    DebugError, DebugSession, Inspection, Location, Mode, SessionConfig, Stop, TomographyResult, TomographyShots,
};
use crate::qasm::{directive::parse_directive, CircuitIR, Directive};
use crate::state::{index_to_bits, QuantumState};
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

pub struct ReplOptions {
    pub format: Format,
    /// Print a prompt before each line.
    pub prompt: bool,
    pub name: String,
}

const HELP: &str = "\
commands:
  step [n]                 execute n instructions (default 1)
  continue                 run to the next breakpoint or the end
  break <line|@index>      set a breakpoint
  delete <line|@index>     remove a breakpoint
  state                    amplitudes (omniscient) or histogram (device)
  prob <qubit>             probability of reading 1
  sep                      per-qubit purity and entanglement flags
  sup <bits>               regenerate from a known basis input
  clone-exact <src> <dst>  copy an H^n|j> state into blank qubits
  clone-approx <q> [c a]   universal 1->2 cloner into blanks c, a
  tomo <qubits> [n|exact]  state tomography of the paused state
  assert <directive>       evaluate e.g. `assert-classical q -> 010`
  mode <omniscient|device> switch inspection mode
  shots <n>                shot budget for statistical queries
  status                   position, mode and breakpoints
  restart                  back to the first instruction
  quit";

/// Formats the nonzero amplitudes of `state`, one basis state per line.
pub fn format_amplitudes(state: &QuantumState) -> String {
    let n = state.n_qubits();
    let mut s = String::new();
    for (i, a) in state.amplitudes().iter().enumerate() {
        if a.norm_sqr() > 1e-12 {
            let _ = writeln!(
                s,
                "|{}⟩  {:+.6} {:+.6}i  p={:.6}",
                index_to_bits(i, n),
                a.re,
                a.im,
                a.norm_sqr()
            );
        }
    }
    s
}

pub fn format_tomography(t: &TomographyResult) -> String {
    let mut s = String::new();
    let shots = t
        .shots_per_setting
        .map_or("exact".to_string(), |n| format!("{n} shots/setting"));
    let _ = writeln!(s, "tomography of qubits {:?} ({shots})", t.qubits);
    for (p, v) in &t.expectations {
        let _ = writeln!(s, "  <{p}> = {v:+.6}");
    }
    let _ = writeln!(s, "purity (raw) = {:.6}", t.raw_purity);
    let m = t.estimate.matrix();
    let _ = writeln!(s, "rho =");
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|c| format!("{:+.4}{:+.4}i", m[(r, c)].re, m[(r, c)].im))
            .collect();
        let _ = writeln!(s, "  [{}]", row.join("  "));
    }
    if let Some(f) = t.fidelity {
        let _ = writeln!(s, "fidelity = {f:.6}");
    }
    s
}

fn format_stop(stop: &Stop) -> String {
    let mut s = String::new();
    for a in &stop.assertions {
        let _ = writeln!(s, "assertion line {}: {} -> {}", a.line, a.directive, a.verdict);
    }
    match (&stop.next, stop.line) {
        (Some(next), Some(line)) => {
            let _ = writeln!(s, "{:?} at #{} (line {line}): {next}", stop.reason, stop.position);
        }
        _ => {
            let _ = writeln!(s, "finished after {} instructions", stop.position);
        }
    }
    s.to_lowercase_first()
}

trait LowerFirst {
    fn to_lowercase_first(self) -> String;
}

impl LowerFirst for String {
    fn to_lowercase_first(self) -> String {
        let mut c = self.chars();
        match c.next() {
            Some(f) => f.to_lowercase().collect::<String>() + c.as_str(),
            None => self,
        }
    }
}

fn format_inspection(ins: &Inspection) -> String {
    match ins {
        Inspection::Amplitudes { position, state } => {
            let body = state.to_state().map(|s| format_amplitudes(&s)).unwrap_or_default();
            format!("state at #{position}:\n{body}")
        }
        Inspection::Histogram {
            position,
            shots,
            counts,
            ..
        } => {
            let mut s = format!("histogram at #{position} ({shots} shots):\n");
            for (k, c) in counts {
                let _ = writeln!(s, "|{k}⟩  {c}  {:.4}", *c as f64 / *shots as f64);
            }
            s
        }
    }
}

fn qubits(ir: &CircuitIR, text: &str) -> Result<Vec<usize>, String> {
    ir.resolve_qubits(text)
}

fn qubit(ir: &CircuitIR, text: &str) -> Result<usize, String> {
    match qubits(ir, text)?.as_slice() {
        [q] => Ok(*q),
        _ => Err(format!("{text:?} names more than one qubit")),
    }
}

enum Outcome {
    Output(Value, String),
    Quit,
}

fn debug_err(e: DebugError) -> String {
    e.to_string()
}

fn execute(session: &mut DebugSession, verb: &str, args: &[&str]) -> Result<Outcome, String> {
    let ir = session.ir().clone();
    let out = |v: Value, text: String| Ok(Outcome::Output(v, text));
    match (verb, args) {
        ("quit" | "exit" | "q", _) => Ok(Outcome::Quit),
        ("help" | "h", _) => out(json!({ "help": HELP }), format!("{HELP}\n")),
        ("step" | "s", _) => {
            let n: usize = match args.first() {
                Some(a) => a.parse().map_err(|_| format!("bad count {a:?}"))?,
                None => 1,
            };
            let mut stops = Vec::new();
            for _ in 0..n.max(1) {
                let stop = session.step().map_err(debug_err)?;
                let done = session.is_finished();
                stops.push(stop);
                if done {
                    break;
                }
            }
            let text = stops.iter().map(format_stop).collect::<String>();
            let last = serde_json::to_value(stops.last()).unwrap_or(Value::Null);
            out(last, text)
        }
        ("continue" | "c" | "cont", _) => {
            let stop = session.resume().map_err(debug_err)?;
            out(serde_json::to_value(&stop).unwrap_or(Value::Null), format_stop(&stop))
        }
        ("break" | "b" | "delete", [loc]) => {
            let location: Location = loc.parse()?;
            if verb == "delete" {
                let removed = session.clear_breakpoint(location).map_err(debug_err)?;
                out(json!({ "removed": removed }), format!("removed: {removed}\n"))
            } else {
                let index = session.set_breakpoint(location).map_err(debug_err)?;
                let line = ir.instructions[index].span.line;
                out(
                    json!({"index": index, "line": line}),
                    format!("breakpoint at #{index} (line {line})\n"),
                )
            }
        }
        ("state", []) => {
            let ins = session.inspect_state().map_err(debug_err)?;
            out(serde_json::to_value(&ins).unwrap_or(Value::Null), format_inspection(&ins))
        }
        ("prob", [q]) => {
            let r = session.probability(qubit(&ir, q)?).map_err(debug_err)?;
            let text = match r.shots {
                Some(n) => format!("P({} = 1) ≈ {:.6} ({n} shots)\n", ir.qubit_label(r.qubit), r.p1),
                None => format!("P({} = 1) = {:.6}\n", ir.qubit_label(r.qubit), r.p1),
            };
            out(serde_json::to_value(&r).unwrap_or(Value::Null), text)
        }
        ("sep", _) => {
            let bip = args.first() == Some(&"all");
            let r = session.separability(bip).map_err(debug_err)?;
            let mut text = String::new();
            for q in &r.qubits {
                let flag = if q.entangled { "entangled" } else { "separable" };
                let _ = writeln!(text, "{}: purity {:.6} {flag}", ir.qubit_label(q.qubit), q.purity);
            }
            for b in r.bipartitions.iter().flatten() {
                let flag = if b.entangled { "entangled" } else { "separable" };
                let _ = writeln!(text, "{:?} | rest: purity {:.6} {flag}", b.partition, b.purity);
            }
            out(serde_json::to_value(&r).unwrap_or(Value::Null), text)
        }
        ("sup", [bits]) => {
            let r = session.check_superposition(Some(bits)).map_err(debug_err)?;
            let mut text = format!("superposed: {}\n", r.superposed);
            for e in &r.support {
                let _ = writeln!(
                    text,
                    "|{}⟩  {:+.6} {:+.6}i  p={:.6}",
                    e.bits, e.amplitude[0], e.amplitude[1], e.probability
                );
            }
            out(serde_json::to_value(&r).unwrap_or(Value::Null), text)
        }
        ("sup", []) => Err(DebugError::UnknownInput.to_string()),
        ("clone-exact", [src, dst]) => {
            let (s, d) = (qubits(&ir, src)?, qubits(&ir, dst)?);
            session.exact_clone(&s, &d).map_err(debug_err)?;
            out(
                json!({"source": s, "blank": d}),
                format!("cloned {src} into {dst}\n"),
            )
        }
        ("clone-approx", [src, rest @ ..]) if rest.is_empty() || rest.len() == 2 => {
            let s = qubit(&ir, src)?;
            let (c, a) = if rest.len() == 2 {
                (qubit(&ir, rest[0])?, qubit(&ir, rest[1])?)
            } else {
                let free: Vec<usize> = (0..ir.n_qubits).filter(|&q| q != s).take(2).collect();
                match free.as_slice() {
                    [c, a] => (*c, *a),
                    _ => return Err("universal cloning needs two blank qubits".into()),
                }
            };
            let r = session.universal_clone(s, c, a).map_err(debug_err)?;
            let text = match r.fidelities {
                Some([f0, f1]) => format!(
                    "copies {} and {}: fidelity {f0:.6}, {f1:.6}\n",
                    ir.qubit_label(r.copies[0]),
                    ir.qubit_label(r.copies[1])
                ),
                None => format!(
                    "copies {} and {}\n",
                    ir.qubit_label(r.copies[0]),
                    ir.qubit_label(r.copies[1])
                ),
            };
            out(serde_json::to_value(&r).unwrap_or(Value::Null), text)
        }
        ("tomo", [qs, rest @ ..]) if rest.len() <= 1 => {
            let qs = qubits(&ir, qs)?;
            let shots = match rest.first() {
                None => TomographyShots::Finite(session.shot_budget()),
                Some(&"exact") => TomographyShots::Exact,
                Some(n) => TomographyShots::Finite(n.parse().map_err(|_| format!("bad shots {n:?}"))?),
            };
            let t = session.tomography(&qs, shots).map_err(debug_err)?;
            out(serde_json::to_value(&t).unwrap_or(Value::Null), format_tomography(&t))
        }
        ("assert", rest) if !rest.is_empty() => {
            let text = rest.join(" ");
            let kind = parse_directive(&text, &ir)?;
            if !kind.is_assertion() {
                return Err("not an assertion".into());
            }
            let d = Directive {
                kind,
                anchor: session.position(),
                span: Default::default(),
                text,
            };
            let r = session.evaluate_assertion(&d).map_err(debug_err)?;
            let msg = format!("{} -> {}\n", r.directive, r.verdict);
            out(serde_json::to_value(&r).unwrap_or(Value::Null), msg)
        }
        ("mode", [m]) => {
            let mode: Mode = m.parse()?;
            session.set_mode(mode);
            out(json!({ "mode": mode }), format!("mode: {mode}\n"))
        }
        ("shots", [n]) => {
            let n: u64 = n.parse().map_err(|_| format!("bad shot count {n:?}"))?;
            session.set_shot_budget(n).map_err(debug_err)?;
            out(json!({ "shots": n }), format!("shot budget: {n}\n"))
        }
        ("status", []) => {
            let v = json!({
                "position": session.position(),
                "length": session.len(),
                "finished": session.is_finished(),
                "mode": session.mode(),
                "shots": session.shot_budget(),
                "breakpoints": session.breakpoints(),
                "clbits": session.clbits(),
            });
            let text = format!(
                "#{}/{} mode {} shots {} breakpoints {:?} clbits {:?}\n",
                session.position(),
                session.len(),
                session.mode(),
                session.shot_budget(),
                session.breakpoints(),
                session.clbits()
            );
            out(v, text)
        }
        ("restart", []) => {
            session.restart().map_err(debug_err)?;
            out(json!({ "position": 0 }), "restarted\n".into())
        }
        (
            "break" | "b" | "delete" | "state" | "prob" | "sup" | "clone-exact" | "clone-approx" | "tomo"
            | "assert" | "mode" | "shots" | "status" | "restart",
            _,
        ) => Err(format!("wrong arguments for {verb}; type `help`")),
        _ => Err(format!("unknown command {verb:?}; type `help` for the list")),
    }
}

/// Reads commands from `input` until `quit` or EOF. Several commands may
/// share a line when separated by `;`. Errors are reported and the session
/// continues.
pub fn run_repl(
    ir: CircuitIR,
    config: &SessionConfig,
    options: &ReplOptions,
    input: &mut dyn BufRead,
    output: &mut dyn Write,
) -> Result<i32, DebugError> {
    let json = options.format == Format::Json;
    let mut session = DebugSession::new(ir, config)?;
    let write = |output: &mut dyn Write, s: &str| -> Result<(), DebugError> {
        output
            .write_all(s.as_bytes())
            .and_then(|_| output.flush())
            .map_err(|e| DebugError::InvalidOperand(format!("output: {e}")))
    };
    let banner = json!({
        "loaded": options.name,
        "qubits": session.ir().n_qubits,
        "instructions": session.len(),
        "mode": session.mode(),
    });
    if json {
        write(output, &format!("{banner}\n"))?;
    } else {
        write(
            output,
            &format!(
                "loaded {}: {} qubits, {} instructions, {} mode\n",
                options.name,
                session.ir().n_qubits,
                session.len(),
                session.mode()
            ),
        )?;
    }
    let mut line = String::new();
    loop {
        if options.prompt {
            write(output, "(qdb) ")?;
        }
        line.clear();
        match input.read_line(&mut line) {
            Ok(0) => return Ok(0),
            Ok(_) => {}
            Err(e) if e.kind() == io::ErrorKind::InvalidData => continue,
            Err(e) => return Err(DebugError::InvalidOperand(format!("input: {e}"))),
        }
        for cmd in line.split(';') {
            let words: Vec<&str> = cmd.split_whitespace().collect();
            let Some((verb, args)) = words.split_first() else {
                continue;
            };
            match execute(&mut session, verb, args) {
                Ok(Outcome::Quit) => return Ok(0),
                Ok(Outcome::Output(v, text)) => {
                    if json {
                        write(output, &format!("{}\n", json!({"command": verb, "result": v})))?;
                    } else {
                        write(output, &text)?;
                    }
                }
                Err(msg) => {
                    if json {
                        write(output, &format!("{}\n", json!({"command": verb, "error": msg})))?;
                    } else {
                        write(output, &format!("error: {msg}\n"))?;
                    }
                }
            }
        }
    }
}
