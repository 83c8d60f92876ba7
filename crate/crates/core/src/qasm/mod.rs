//! OpenQASM 2.0 front end: tokenize, parse, resolve includes, elaborate.
//!
//! The elaborated [`CircuitIR`] contains only the `U`/`CX` primitives plus
//! measure, reset, barrier and single-statement conditionals. Debugger
//! directives ride in comments of the form `// @qdb <kind> <args>` and bind
//! to the next instruction.

pub mod ast;
pub mod directive;
mod elaborate;
mod includes;
pub mod ir;
pub mod lexer;
mod parser;

pub use ast::{Program, Statement, StmtKind};
pub use directive::{Directive, DirectiveKind};
pub use elaborate::elaborate;
pub use includes::{resolve_includes, IncludeResolver, QELIB1};
pub use ir::{CircuitIR, Instruction, Op, Origin, Register};
pub use lexer::{tokenize, Token, TokenKind};
pub use parser::parse;

use serde::Serialize;
use std::fmt;
use std::path::PathBuf;

/// Source location: 1-based line/column of the first byte plus the byte range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Span {
    pub line: usize,
    pub col: usize,
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(line: usize, col: usize, start: usize, end: usize) -> Self {
        Self {
            line,
            col,
            start,
            end,
        }
    }

    /// Smallest span covering both.
    pub fn to(self, other: Span) -> Span {
        if other.end <= self.start {
            return other.to(self);
        }
        Span {
            line: self.line,
            col: self.col,
            start: self.start,
            end: self.end.max(other.end),
        }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QasmError {
    #[error("{span}: lex error: {message}")]
    Lex { message: String, span: Span },
    #[error("{span}: parse error: {message}{}", expected_suffix(.expected))]
    Parse {
        message: String,
        expected: Vec<String>,
        span: Span,
    },
    #[error("{span}: unsupported OpenQASM version {found} (only 2.0 is accepted)")]
    UnsupportedVersion { found: String, span: Span },
    #[error("{span}: include file {name:?} not found")]
    IncludeNotFound { name: String, span: Span },
    #[error("{span}: cyclic include of {name:?}")]
    CyclicInclude { name: String, span: Span },
    #[error("in included file {file:?}: {inner}")]
    InInclude { file: String, inner: Box<QasmError> },
    #[error("{span}: {message}")]
    Semantic { message: String, span: Span },
}

fn expected_suffix(expected: &[String]) -> String {
    if expected.is_empty() {
        String::new()
    } else {
        format!(" (expected {})", expected.join(", "))
    }
}

impl QasmError {
    pub(crate) fn semantic(message: impl Into<String>, span: Span) -> Self {
        QasmError::Semantic {
            message: message.into(),
            span,
        }
    }

    /// Location in the user's file. Errors inside included files report the
    /// span of the offending construct in that file.
    pub fn span(&self) -> Span {
        match self {
            QasmError::Lex { span, .. }
            | QasmError::Parse { span, .. }
            | QasmError::UnsupportedVersion { span, .. }
            | QasmError::IncludeNotFound { span, .. }
            | QasmError::CyclicInclude { span, .. }
            | QasmError::Semantic { span, .. } => *span,
            QasmError::InInclude { inner, .. } => inner.span(),
        }
    }

    /// Compiler-style diagnostic with the offending line and a caret.
    pub fn render(&self, source: &str, file_name: &str) -> String {
        if let QasmError::InInclude { file, inner } = self {
            return format!("error: in included file {file}: {inner}\n");
        }
        let span = self.span();
        let mut out = format!("error: {self}\n --> {file_name}:{}:{}\n", span.line, span.col);
        if let Some(line) = source.lines().nth(span.line.saturating_sub(1)) {
            let gutter = span.line.to_string();
            let width = (span.end.saturating_sub(span.start)).max(1);
            let width = width.min(line.len().saturating_sub(span.col - 1).max(1));
            out.push_str(&format!("{} |\n", " ".repeat(gutter.len())));
            out.push_str(&format!("{gutter} | {line}\n"));
            out.push_str(&format!(
                "{} | {}{}\n",
                " ".repeat(gutter.len()),
                " ".repeat(span.col - 1),
                "^".repeat(width)
            ));
        }
        out
    }
}

/// Front-end configuration.
#[derive(Debug, Clone, Default)]
pub struct CompileOptions {
    /// Directory searched for includes other than the built-in `qelib1.inc`.
    pub include_path: Option<PathBuf>,
}

/// Tokenize, parse, resolve includes and elaborate in one call.
pub fn compile(source: &str, options: &CompileOptions) -> Result<CircuitIR, QasmError> {
    let program = parse(&tokenize(source)?)?;
    let resolver = IncludeResolver::new(options.include_path.clone());
    let program = resolve_includes(program, &resolver)?;
    elaborate(&program)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_points_at_token() {
        let src = "OPENQASM 2.0;\nqreg q[1];\nh q[0]\n";
        let err = compile(src, &CompileOptions::default()).unwrap_err();
        let text = err.render(src, "broken.qasm");
        assert!(text.contains("broken.qasm:"), "{text}");
        assert!(text.contains('^'), "{text}");
    }
}
