//! TOML test suites.
//!
//! ```toml
//! [[case]]
//! name = "bell"
//! program = "bell.qasm"        # relative to the suite file
//! shots = 2000
//! seed = 7
//! engines = ["dense", "naive"] # two or more also cross-checks the engines
//! tolerance = 0.05             # TVD bound for `expected`
//! [case.expected]
//! "00" = 0.5
//! "11" = 0.5
//!
//! [[case]]
//! name = "factors"
//! [[case.validators]]
//! kind = "shor"
//! n = "15"
//! factors = ["3", "5"]
//! ```
//!
//! Embedded `@qdb` assertions run in a debug session unless
//! `directives = false`.

use super::stats::{compare_distributions, Verdict, DEFAULT_ALPHA};
use super::validate::{validate_grover, validate_shor_factors};
use super::verify::cross_engine_verify;
use super::HarnessError;
use crate::debug::{DebugSession, Mode, SessionConfig, StopReason};
use crate::qasm::{compile, CircuitIR, CompileOptions};
use crate::sim::{execute, EngineConfig, Method};
use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SuiteFile {
    #[serde(default)]
    case: Vec<CaseSpec>,
}

fn default_shots() -> u64 {
    1024
}

fn default_true() -> bool {
    true
}

fn default_budget() -> u64 {
    1060
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CaseSpec {
    name: String,
    program: Option<PathBuf>,
    #[serde(default = "default_shots")]
    shots: u64,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    engines: Vec<String>,
    alpha: Option<f64>,
    expected: Option<BTreeMap<String, f64>>,
    tolerance: Option<f64>,
    #[serde(default = "default_true")]
    directives: bool,
    #[serde(default)]
    mode: Option<String>,
    #[serde(default = "default_budget")]
    shot_budget: u64,
    #[serde(default)]
    validators: Vec<ValidatorSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum ValidatorSpec {
    Shor {
        n: String,
        factors: Vec<String>,
    },
    Grover {
        items: Vec<i64>,
        index: usize,
        target: i64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub check: String,
    pub verdict: Verdict,
    pub detail: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseReport {
    pub name: String,
    pub verdict: Verdict,
    pub checks: Vec<CheckReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub verdict: Verdict,
    pub passed: usize,
    pub failed: usize,
    pub inconclusive: usize,
    pub cases: Vec<CaseReport>,
}

impl SuiteReport {
    /// 0 when every case passed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.verdict == Verdict::Pass {
            0
        } else {
            1
        }
    }
}

fn parse_error(location: impl Into<String>, message: impl ToString) -> HarnessError {
    HarnessError::SuiteParse {
        location: location.into(),
        message: message.to_string(),
    }
}

fn check(name: &str, verdict: Verdict, detail: Value) -> CheckReport {
    CheckReport {
        check: name.to_string(),
        verdict,
        detail,
    }
}

fn error_check(name: &str, err: impl ToString) -> CheckReport {
    check(name, Verdict::Fail, json!({ "error": err.to_string() }))
}

pub fn run_test_suite(path: &Path) -> Result<SuiteReport, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| parse_error(path.display().to_string(), e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    run_test_suite_str(&text, base)
}

/// Runs a suite given as text; program paths resolve against `base_dir`.
pub fn run_test_suite_str(text: &str, base_dir: &Path) -> Result<SuiteReport, HarnessError> {
    let file: SuiteFile = toml::from_str(text).map_err(|e| {
        let location = e
            .span()
            .map(|s| {
                let line = text[..s.start].matches('\n').count() + 1;
                format!("line {line}")
            })
            .unwrap_or_else(|| "suite".into());
        parse_error(location, e.message())
    })?;
    if file.case.is_empty() {
        return Err(parse_error("suite", "no [[case]] entries"));
    }
    let mut prepared = Vec::new();
    for (i, spec) in file.case.into_iter().enumerate() {
        let location = format!("case {} ({:?})", i + 1, spec.name);
        let engines = spec
            .engines
            .iter()
            .map(|e| e.parse::<Method>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| parse_error(&location, e))?;
        let mode = match &spec.mode {
            Some(m) => m.parse::<Mode>().map_err(|e| parse_error(&location, e))?,
            None => Mode::Omniscient,
        };
        if spec.shots == 0 || spec.shot_budget == 0 {
            return Err(parse_error(&location, "shots must be positive"));
        }
        let ir = match &spec.program {
            Some(p) => {
                let full = base_dir.join(p);
                let src = std::fs::read_to_string(&full)
                    .map_err(|e| parse_error(&location, format!("{}: {e}", full.display())))?;
                let options = CompileOptions {
                    include_path: full.parent().map(Path::to_path_buf),
                };
                Some(compile(&src, &options).map_err(|e| parse_error(format!("{location}: {}", p.display()), e))?)
            }
            None => None,
        };
        if ir.is_none() && (spec.expected.is_some() || !spec.engines.is_empty()) {
            return Err(parse_error(&location, "expected/engines need a program"));
        }
        prepared.push((spec, ir, engines, mode));
    }

    let cases: Vec<CaseReport> = prepared
        .into_iter()
        .map(|(spec, ir, engines, mode)| run_case(spec, ir.as_ref(), &engines, mode))
        .collect();
    let count = |v: Verdict| cases.iter().filter(|c| c.verdict == v).count();
    Ok(SuiteReport {
        verdict: cases.iter().map(|c| c.verdict).max().unwrap_or(Verdict::Pass),
        passed: count(Verdict::Pass),
        failed: count(Verdict::Fail),
        inconclusive: count(Verdict::Inconclusive),
        cases,
    })
}

fn run_case(spec: CaseSpec, ir: Option<&CircuitIR>, engines: &[Method], mode: Mode) -> CaseReport {
    let mut checks = Vec::new();
    let alpha = spec.alpha.unwrap_or(DEFAULT_ALPHA);
    let methods: Vec<Method> = if engines.is_empty() {
        vec![Method::DenseInplace]
    } else {
        engines.to_vec()
    };
    if let Some(ir) = ir {
        if let Some(expected) = &spec.expected {
            let cfg = EngineConfig::new(methods[0], spec.seed, spec.shots);
            checks.push(match execute(ir, &cfg) {
                Ok(run) => match compare_distributions(&run.counts, expected, alpha) {
                    Ok(d) => {
                        let tvd_ok = spec.tolerance.is_none_or(|t| d.tvd <= t);
                        let verdict = if tvd_ok { d.verdict } else { Verdict::Fail };
                        check(
                            "distribution",
                            verdict,
                            json!({"counts": run.counts, "result": d, "tolerance": spec.tolerance}),
                        )
                    }
                    Err(e) => error_check("distribution", e),
                },
                Err(e) => error_check("distribution", e),
            });
        }
        if methods.len() >= 2 {
            let configs: Vec<EngineConfig> = methods
                .iter()
                .map(|m| EngineConfig::new(*m, spec.seed, spec.shots))
                .collect();
            checks.push(match cross_engine_verify(ir, &configs, spec.shots) {
                Ok(r) => check("cross-engine", r.verdict, serde_json::to_value(&r).unwrap_or(Value::Null)),
                Err(e) => error_check("cross-engine", e),
            });
        }
        if spec.directives && ir.directives.iter().any(|d| d.kind.is_assertion()) {
            checks.extend(run_assertions(ir, &spec, methods[0], mode));
        }
    }
    for v in &spec.validators {
        checks.push(run_validator(v));
    }
    if checks.is_empty() {
        checks.push(check("program", Verdict::Pass, json!({ "note": "no checks requested" })));
    }
    CaseReport {
        name: spec.name,
        verdict: checks.iter().map(|c| c.verdict).max().unwrap_or(Verdict::Pass),
        checks,
    }
}

fn run_assertions(ir: &CircuitIR, spec: &CaseSpec, engine: Method, mode: Mode) -> Vec<CheckReport> {
    let config = SessionConfig {
        mode,
        seed: spec.seed,
        shot_budget: spec.shot_budget,
        engine,
        max_qubits: None,
    };
    let mut session = match DebugSession::new(ir.clone(), &config) {
        Ok(s) => s,
        Err(e) => return vec![error_check("assertions", e)],
    };
    loop {
        match session.resume() {
            Ok(stop) if stop.reason == StopReason::Finished => break,
            Ok(_) => {}
            Err(e) => return vec![error_check("assertions", e)],
        }
    }
    session
        .assertion_results()
        .iter()
        .map(|r| {
            check(
                &format!("assert line {}: {}", r.line, r.directive),
                r.verdict,
                serde_json::to_value(r).unwrap_or(Value::Null),
            )
        })
        .collect()
}

fn run_validator(v: &ValidatorSpec) -> CheckReport {
    match v {
        ValidatorSpec::Shor { n, factors } => {
            let parse = |s: &String| s.parse::<BigUint>().map_err(|e| format!("{s:?}: {e}"));
            match (parse(n), factors.iter().map(parse).collect::<Result<Vec<_>, _>>()) {
                (Ok(n), Ok(fs)) => {
                    let out = validate_shor_factors(&n, &fs);
                    check("validate-shor", Verdict::from_bool(out.valid), json!(out))
                }
                (Err(e), _) | (_, Err(e)) => error_check("validate-shor", e),
            }
        }
        ValidatorSpec::Grover { items, index, target } => match validate_grover(items, *index, |x| x == target) {
            Ok(out) => check("validate-grover", Verdict::from_bool(out.valid), json!(out)),
            Err(e) => error_check("validate-grover", e),
        },
    }
}
