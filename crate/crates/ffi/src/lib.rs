//! C ABI over the `qdb` library.
//!
//! Objects cross the boundary as opaque handles created by `*_new` /
//! `*_compile` and released by the matching `*_free`. Every fallible call
//! returns a [`QdbStatus`]; on failure a message is stored per thread and
//! can be read with [`qdb_last_error_message`]. Structured results come back
//! as JSON strings owned by the caller and released with [`qdb_string_free`].

use qdb::debug::{DebugSession, Mode, SessionConfig};
use qdb::harness::{chernoff_shots, validate_shor_factors};
use qdb::qasm::{compile, CircuitIR, CompileOptions};
use qdb::service::Handler;
use qdb::sim::{execute, EngineConfig, Method};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QdbStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    CompileError = 3,
    RuntimeError = 4,
    InvalidArgument = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QdbEngine {
    Dense = 0,
    Naive = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QdbMode {
    Omniscient = 0,
    Device = 1,
}

/// A compiled program.
pub struct QdbProgram {
    ir: CircuitIR,
}

/// A debug session over one program.
pub struct QdbSession {
    inner: DebugSession,
}

/// One session-protocol connection driven frame by frame.
pub struct QdbHandler {
    inner: Handler,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(QdbStatus, String);

type Outcome = Result<(), Failure>;

fn fail<T>(status: QdbStatus, message: impl Into<String>) -> Result<T, Failure> {
    Err(Failure(status, message.into()))
}

fn guard(f: impl FnOnce() -> Outcome) -> QdbStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => QdbStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            QdbStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return fail(QdbStatus::NullArgument, format!("{what} is null"));
    }
    CStr::from_ptr(p)
        .to_str()
        .or_else(|_| fail(QdbStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn handle<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .map_or_else(|| fail(QdbStatus::NullArgument, format!("{what} is null")), Ok)
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Outcome {
    if out.is_null() {
        return fail(QdbStatus::NullArgument, "output pointer is null");
    }
    out.write(value);
    Ok(())
}

unsafe fn write_json(out: *mut *mut c_char, json: String) -> Outcome {
    let c = CString::new(json).or_else(|_| fail(QdbStatus::RuntimeError, "result contains NUL"))?;
    write_out(out, c.into_raw())
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure(QdbStatus::RuntimeError, e.to_string())
}

fn to_json(v: &impl serde::Serialize) -> String {
    serde_json::to_string(v).unwrap_or_else(|_| "null".into())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qdb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn qdb_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn qdb_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Compiles OpenQASM 2.0 `source` into `*out`.
///
/// # Safety
/// `source` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qdb_program_compile(source: *const c_char, out: *mut *mut QdbProgram) -> QdbStatus {
    guard(|| {
        let src = text(source, "source")?;
        let ir = compile(src, &CompileOptions::default())
            .map_err(|e| Failure(QdbStatus::CompileError, e.render(src, "<source>")))?;
        write_out(out, Box::into_raw(Box::new(QdbProgram { ir })))
    })
}

/// # Safety
/// `program` must come from [`qdb_program_compile`] or be NULL.
#[no_mangle]
pub unsafe extern "C" fn qdb_program_free(program: *mut QdbProgram) {
    if !program.is_null() {
        drop(Box::from_raw(program));
    }
}

/// Number of qubits, or 0 for NULL.
///
/// # Safety
/// `program` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn qdb_program_qubits(program: *const QdbProgram) -> usize {
    program.as_ref().map_or(0, |p| p.ir.n_qubits)
}

/// Runs `shots` shots and writes the run result as JSON to `*out_json`.
///
/// # Safety
/// `program` must be a live handle; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qdb_program_run(
    program: *const QdbProgram,
    engine: QdbEngine,
    seed: u64,
    shots: u64,
    out_json: *mut *mut c_char,
) -> QdbStatus {
    guard(|| {
        let program = handle(program.cast_mut(), "program")?;
        let method = match engine {
            QdbEngine::Dense => Method::DenseInplace,
            QdbEngine::Naive => Method::NaiveMatrix,
        };
        let result = execute(&program.ir, &EngineConfig::new(method, seed, shots)).map_err(runtime)?;
        write_json(out_json, result.to_json_without_timing())
    })
}

/// Opens a debug session on a copy of `program`.
///
/// # Safety
/// `program` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qdb_session_new(
    program: *const QdbProgram,
    mode: QdbMode,
    seed: u64,
    shot_budget: u64,
    out: *mut *mut QdbSession,
) -> QdbStatus {
    guard(|| {
        let program = handle(program.cast_mut(), "program")?;
        let config = SessionConfig {
            mode: to_mode(mode),
            seed,
            shot_budget,
            ..SessionConfig::default()
        };
        let inner = DebugSession::new(program.ir.clone(), &config).map_err(runtime)?;
        write_out(out, Box::into_raw(Box::new(QdbSession { inner })))
    })
}

fn to_mode(mode: QdbMode) -> Mode {
    match mode {
        QdbMode::Omniscient => Mode::Omniscient,
        QdbMode::Device => Mode::Device,
    }
}

/// # Safety
/// `session` must come from [`qdb_session_new`] or be NULL.
#[no_mangle]
pub unsafe extern "C" fn qdb_session_free(session: *mut QdbSession) {
    if !session.is_null() {
        drop(Box::from_raw(session));
    }
}

/// Executes one instruction; the stop record is written as JSON.
///
/// # Safety
/// `session` must be a live handle; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qdb_session_step(session: *mut QdbSession, out_json: *mut *mut c_char) -> QdbStatus {
    guard(|| {
        let s = handle(session, "session")?;
        let stop = s.inner.step().map_err(runtime)?;
        write_json(out_json, to_json(&stop))
    })
}

/// Runs to the next breakpoint or the end.
///
/// # Safety
/// `session` must be a live handle; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qdb_session_continue(session: *mut QdbSession, out_json: *mut *mut c_char) -> QdbStatus {
    guard(|| {
        let s = handle(session, "session")?;
        let stop = s.inner.resume().map_err(runtime)?;
        write_json(out_json, to_json(&stop))
    })
}

/// Amplitudes in omniscient mode, a sampled histogram in device mode.
///
/// # Safety
/// `session` must be a live handle; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qdb_session_inspect(session: *mut QdbSession, out_json: *mut *mut c_char) -> QdbStatus {
    guard(|| {
        let s = handle(session, "session")?;
        let inspection = s.inner.inspect_state().map_err(runtime)?;
        write_json(out_json, to_json(&inspection))
    })
}

/// Per-qubit purities and entanglement flags. Omniscient mode only reports
/// exact values; device mode estimates them by tomography.
///
/// # Safety
/// `session` must be a live handle; `out_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qdb_session_separability(session: *mut QdbSession, out_json: *mut *mut c_char) -> QdbStatus {
    guard(|| {
        let s = handle(session, "session")?;
        let report = s.inner.separability(false).map_err(runtime)?;
        write_json(out_json, to_json(&report))
    })
}

/// # Safety
/// `session` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn qdb_session_set_mode(session: *mut QdbSession, mode: QdbMode) -> QdbStatus {
    guard(|| {
        handle(session, "session")?.inner.set_mode(to_mode(mode));
        Ok(())
    })
}

/// Instruction index of the next instruction to execute.
///
/// # Safety
/// `session` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn qdb_session_position(session: *const QdbSession) -> usize {
    session.as_ref().map_or(0, |s| s.inner.position())
}

/// Shots needed to estimate a probability within `epsilon` with confidence
/// `1 - delta`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qdb_chernoff_shots(epsilon: f64, delta: f64, out: *mut u64) -> QdbStatus {
    guard(|| {
        let plan = chernoff_shots(epsilon, delta).map_err(|e| Failure(QdbStatus::InvalidArgument, e.to_string()))?;
        write_out(out, plan.shots)
    })
}

/// Checks that the decimal `factors` multiply to `n`, each strictly
/// between 1 and `n`.
///
/// # Safety
/// `n` and each of the `count` entries of `factors` must be NUL-terminated;
/// `out_valid` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qdb_validate_factors(
    n: *const c_char,
    factors: *const *const c_char,
    count: usize,
    out_valid: *mut bool,
) -> QdbStatus {
    guard(|| {
        let parse = |s: &str| {
            s.parse()
                .or_else(|_| fail(QdbStatus::InvalidArgument, format!("{s:?} is not a non-negative integer")))
        };
        let n = parse(text(n, "n")?)?;
        if factors.is_null() && count > 0 {
            return fail(QdbStatus::NullArgument, "factors is null");
        }
        let list = (0..count)
            .map(|i| parse(text(*factors.add(i), "factor")?))
            .collect::<Result<Vec<_>, _>>()?;
        write_out(out_valid, validate_shor_factors(&n, &list).valid)
    })
}

/// A fresh protocol handler in the `created` state.
#[no_mangle]
pub extern "C" fn qdb_handler_new() -> *mut QdbHandler {
    Box::into_raw(Box::new(QdbHandler { inner: Handler::new() }))
}

/// # Safety
/// `handler` must come from [`qdb_handler_new`] or be NULL.
#[no_mangle]
pub unsafe extern "C" fn qdb_handler_free(handler: *mut QdbHandler) {
    if !handler.is_null() {
        drop(Box::from_raw(handler));
    }
}

/// Handles one request frame. Every emitted frame, events first and the
/// reply last, is written newline-separated to `*out_frames`.
///
/// # Safety
/// `handler` must be a live handle, `line` NUL-terminated and `out_frames`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn qdb_handler_request(
    handler: *mut QdbHandler,
    line: *const c_char,
    out_frames: *mut *mut c_char,
) -> QdbStatus {
    guard(|| {
        let h = handle(handler, "handler")?;
        let line = text(line, "line")?;
        let mut frames = String::new();
        let reply = h.inner.handle_line(line, &mut |ev| {
            frames.push_str(&ev.to_string());
            frames.push('\n');
        });
        frames.push_str(&reply.to_string());
        frames.push('\n');
        write_json(out_frames, frames)
    })
}

/// Whether the handler has processed a `close` request.
///
/// # Safety
/// `handler` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn qdb_handler_is_closed(handler: *const QdbHandler) -> bool {
    handler.as_ref().is_none_or(|h| h.inner.is_closed())
}
