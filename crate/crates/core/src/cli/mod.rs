//! Command-line front end.
//!
//! Exit codes: 0 success or pass, 1 a check failed, 2 usage or parse
//! error, 3 runtime error.

mod repl;

pub use repl::{run_repl, ReplOptions};

use crate::debug::{tomography, Mode, SessionConfig, TomographyShots};
use crate::harness::{chernoff_shots, cross_engine_verify, run_test_suite, validate_shor_factors, Verdict};
use crate::qasm::{compile, CircuitIR, CompileOptions};
use crate::service::{self, ServerConfig};
use crate::sim::{execute_traced, EngineConfig, Method};
use crate::state::QuantumState;
use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use serde_json::{json, Value};
use std::ffi::OsString;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "qdb", version, about = "OpenQASM 2.0 simulator, debugger and test harness")]
pub struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Directory searched for included files.
    #[arg(long, global = true, env = "QDB_INCLUDE_PATH")]
    pub include_path: Option<PathBuf>,
    /// Write one JSON trace event per executed instruction to stderr.
    #[arg(long, global = true)]
    pub trace: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Execute a program and print the measurement counts.
    Run {
        file: PathBuf,
        #[arg(long, default_value_t = 1024)]
        shots: u64,
        #[arg(long, default_value = "dense")]
        engine: Method,
        /// Print the final state (single shot only).
        #[arg(long)]
        statevector: bool,
    },
    /// Run a TOML test suite.
    Test { suite: PathBuf },
    /// Interactive debugger reading commands from stdin.
    Debug {
        file: PathBuf,
        #[arg(long, default_value = "omniscient")]
        mode: Mode,
        /// Shots per statistical query.
        #[arg(long, default_value_t = 1060)]
        shots: u64,
        #[arg(long, default_value = "dense")]
        engine: Method,
    },
    /// Cross-check engines on a program.
    Verify {
        file: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = vec![Method::DenseInplace, Method::NaiveMatrix])]
        engines: Vec<Method>,
        #[arg(long, default_value_t = 2048)]
        shots: u64,
    },
    /// Shots needed for a target accuracy and confidence.
    Shots {
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        delta: f64,
    },
    /// Check a claimed factorization.
    ValidateFactors {
        n: String,
        #[arg(long, value_delimiter = ',', required = true)]
        factors: Vec<String>,
    },
    /// State tomography of the final state of a measurement-free program.
    Tomo {
        file: PathBuf,
        /// Qubits, e.g. `q[0],q[1]`.
        #[arg(long)]
        qubits: String,
        /// Shots per setting, or `exact`.
        #[arg(long, default_value = "10000")]
        shots: String,
        #[arg(long, default_value = "dense")]
        engine: Method,
    },
    /// Serve the session protocol.
    Serve {
        #[arg(long, default_value = "127.0.0.1:7878")]
        addr: String,
        /// Use stdin/stdout instead of TCP.
        #[arg(long)]
        stdio: bool,
    },
}

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
}

/// A failure mapped to an exit code.
struct Exit(i32);

fn load(path: &Path, include: Option<&Path>, io: &mut Io) -> Result<CircuitIR, Exit> {
    let src = std::fs::read_to_string(path).map_err(|e| {
        let _ = writeln!(io.err, "error: cannot read {}: {e}", path.display());
        Exit(EXIT_USAGE)
    })?;
    let options = CompileOptions {
        include_path: include
            .map(Path::to_path_buf)
            .or_else(|| path.parent().map(Path::to_path_buf)),
    };
    compile(&src, &options).map_err(|e| {
        let _ = write!(io.err, "{}", e.render(&src, &path.display().to_string()));
        Exit(EXIT_USAGE)
    })
}

fn runtime(io: &mut Io, e: impl std::fmt::Display) -> Exit {
    let _ = writeln!(io.err, "error: {e}");
    Exit(EXIT_RUNTIME)
}

fn emit_json(io: &mut Io, v: &Value) {
    let _ = writeln!(io.out, "{v}");
}

fn verdict_exit(v: Verdict) -> i32 {
    if v == Verdict::Pass {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with(
    args: impl IntoIterator<Item = OsString>,
    stdin: &mut dyn BufRead,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(err, "{rendered}")
            } else {
                write!(out, "{rendered}")
            };
            return code;
        }
    };
    let mut io = Io { out, err };
    match dispatch(&cli, stdin, &mut io) {
        Ok(code) | Err(Exit(code)) => code,
    }
}

fn dispatch(cli: &Cli, stdin: &mut dyn BufRead, io: &mut Io) -> Result<i32, Exit> {
    let include = cli.include_path.as_deref();
    let json = cli.format == Format::Json;
    match &cli.command {
        Command::Run {
            file,
            shots,
            engine,
            statevector,
        } => {
            let ir = load(file, include, io)?;
            let mut cfg = EngineConfig::new(*engine, cli.seed, *shots);
            cfg.record_statevector = *statevector;
            let result = if cli.trace {
                let err = &mut *io.err;
                let mut sink = |ev: crate::sim::TraceEvent| {
                    let _ = writeln!(err, "{}", serde_json::to_string(&ev).unwrap_or_default());
                };
                execute_traced(&ir, &cfg, Some(&mut sink))
            } else {
                execute_traced(&ir, &cfg, None)
            }
            .map_err(|e| runtime(io, e))?;
            if *statevector && *shots != 1 {
                let _ = writeln!(io.err, "warning: --statevector is honored only with --shots 1");
            }
            if json {
                emit_json(io, &serde_json::to_value(&result).unwrap_or(Value::Null));
            } else {
                let _ = writeln!(io.out, "engine: {} seed: {} shots: {}", result.engine.method, result.engine.seed, result.shots);
                for (k, c) in &result.counts {
                    let key = if k.is_empty() { "(no clbits)" } else { k };
                    let _ = writeln!(io.out, "{key}: {c}");
                }
                if let Some(snap) = &result.final_state {
                    let state = snap.to_state().map_err(|e| runtime(io, e))?;
                    let _ = write!(io.out, "{}", repl::format_amplitudes(&state));
                }
            }
            Ok(EXIT_OK)
        }
        Command::Test { suite } => {
            let report = run_test_suite(suite).map_err(|e| {
                let _ = writeln!(io.err, "error: {e}");
                Exit(EXIT_USAGE)
            })?;
            if json {
                emit_json(io, &serde_json::to_value(&report).unwrap_or(Value::Null));
            } else {
                for case in &report.cases {
                    let _ = writeln!(io.out, "{:<12} {}", case.verdict.as_str(), case.name);
                    for c in &case.checks {
                        let _ = writeln!(io.out, "  {:<12} {}", c.verdict.as_str(), c.check);
                    }
                }
                let _ = writeln!(
                    io.out,
                    "verdict: {} ({} passed, {} failed, {} inconclusive)",
                    report.verdict, report.passed, report.failed, report.inconclusive
                );
            }
            Ok(report.exit_code())
        }
        Command::Debug {
            file,
            mode,
            shots,
            engine,
        } => {
            let ir = load(file, include, io)?;
            let config = SessionConfig {
                mode: *mode,
                seed: cli.seed,
                shot_budget: *shots,
                engine: *engine,
                max_qubits: None,
            };
            let options = ReplOptions {
                format: cli.format,
                prompt: false,
                name: file.display().to_string(),
            };
            run_repl(ir, &config, &options, stdin, io.out).map_err(|e| runtime(io, e))
        }
        Command::Verify { file, engines, shots } => {
            let ir = load(file, include, io)?;
            let configs: Vec<EngineConfig> = engines.iter().map(|m| EngineConfig::new(*m, cli.seed, *shots)).collect();
            let report = cross_engine_verify(&ir, &configs, *shots).map_err(|e| runtime(io, e))?;
            if json {
                emit_json(io, &serde_json::to_value(&report).unwrap_or(Value::Null));
            } else {
                for p in &report.pairs {
                    let _ = writeln!(
                        io.out,
                        "{} vs {}: {} (p = {:.4}, TVD = {:.4}{})",
                        report.runs[p.a].engine.method,
                        report.runs[p.b].engine.method,
                        p.verdict,
                        p.distribution.p_value,
                        p.distribution.tvd,
                        p.state_overlap.map(|o| format!(", |<a|b>| = {o:.9}")).unwrap_or_default()
                    );
                }
                if let Some(w) = &report.witness {
                    let _ = writeln!(io.out, "witness: {w}");
                }
                let _ = writeln!(io.out, "verdict: {}", report.verdict);
            }
            Ok(verdict_exit(report.verdict))
        }
        Command::Shots { epsilon, delta } => {
            let plan = chernoff_shots(*epsilon, *delta).map_err(|e| {
                let _ = writeln!(io.err, "error: {e}");
                Exit(EXIT_USAGE)
            })?;
            if json {
                emit_json(io, &serde_json::to_value(plan).unwrap_or(Value::Null));
            } else {
                let _ = writeln!(io.out, "{}", plan.shots);
            }
            Ok(EXIT_OK)
        }
        Command::ValidateFactors { n, factors } => {
            let parse = |s: &str| {
                s.trim().parse::<BigUint>().map_err(|_| format!("not a non-negative integer: {s:?}"))
            };
            let parsed = parse(n).and_then(|n| {
                factors
                    .iter()
                    .map(|f| parse(f))
                    .collect::<Result<Vec<_>, _>>()
                    .map(|fs| (n, fs))
            });
            let (n, fs) = parsed.map_err(|e| {
                let _ = writeln!(io.err, "error: {e}");
                Exit(EXIT_USAGE)
            })?;
            let outcome = validate_shor_factors(&n, &fs);
            if json {
                emit_json(io, &json!(outcome));
            } else {
                let word = if outcome.valid { "valid" } else { "invalid" };
                let _ = writeln!(io.out, "{word}: {}", outcome.witness);
            }
            Ok(if outcome.valid { EXIT_OK } else { EXIT_CHECK_FAILED })
        }
        Command::Tomo {
            file,
            qubits,
            shots,
            engine,
        } => {
            let ir = load(file, include, io)?;
            let qs = ir.resolve_qubits(qubits).map_err(|e| {
                let _ = writeln!(io.err, "error: {e}");
                Exit(EXIT_USAGE)
            })?;
            let shots = match shots.as_str() {
                "exact" => TomographyShots::Exact,
                s => TomographyShots::Finite(s.parse().map_err(|_| {
                    let _ = writeln!(io.err, "error: --shots takes a count or `exact`");
                    Exit(EXIT_USAGE)
                })?),
            };
            let cfg = EngineConfig::new(*engine, cli.seed, 1);
            let result = tomography(&ir, &qs, shots, &cfg, None::<&QuantumState>).map_err(|e| runtime(io, e))?;
            if json {
                emit_json(io, &serde_json::to_value(&result).unwrap_or(Value::Null));
            } else {
                let _ = write!(io.out, "{}", repl::format_tomography(&result));
            }
            Ok(EXIT_OK)
        }
        Command::Serve { addr, stdio } => {
            let config = ServerConfig::default();
            if *stdio {
                service::serve_connection(stdin, std::io::stdout(), &config).map_err(|e| runtime(io, e))?;
            } else {
                let listener = service::bind(addr.as_str()).map_err(|e| runtime(io, e))?;
                let local = listener.local_addr().map_err(|e| runtime(io, e))?;
                let _ = writeln!(io.err, "qdb: listening on {local}");
                service::serve_listener(listener, config).map_err(|e| runtime(io, e))?;
            }
            Ok(EXIT_OK)
        }
    }
}
