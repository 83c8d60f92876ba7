//! Syntax tree for OpenQASM 2.0 programs. `Display` prints canonical source
//! that reparses to the same tree.

use super::Span;
use serde::Serialize;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Program {
    pub version: (u32, u32),
    /// Include file names in order of appearance.
    pub includes: Vec<String>,
    pub statements: Vec<Statement>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Statement {
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum StmtKind {
    Include { name: String },
    Qreg { name: String, size: usize },
    Creg { name: String, size: usize },
    GateDef(GateDef),
    Opaque {
        name: String,
        params: Vec<String>,
        qargs: Vec<String>,
    },
    GateCall(GateCall),
    Measure { src: Operand, dst: Operand },
    Reset { target: Operand },
    Barrier { targets: Vec<Operand> },
    If {
        creg: String,
        value: u64,
        body: Box<Statement>,
    },
    /// A `// @qdb ...` comment; `text` is everything after the `@qdb` marker.
    Directive { text: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateDef {
    pub name: String,
    pub params: Vec<String>,
    pub qargs: Vec<String>,
    pub body: Vec<Statement>,
    /// File the definition came from, `None` for the main program.
    pub source: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateCall {
    pub name: String,
    pub params: Vec<Expr>,
    pub args: Vec<Operand>,
}

/// `name` or `name[index]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Operand {
    pub name: String,
    pub index: Option<usize>,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }

    pub(crate) fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "expr", rename_all = "snake_case")]
pub enum Expr {
    Int { value: u64 },
    Real { value: f64 },
    Pi,
    Ident { name: String },
    Neg { operand: Box<Expr> },
    Binary { op: BinOp, lhs: Box<Expr>, rhs: Box<Expr> },
    Call { func: String, arg: Box<Expr> },
}

const NEG_PRECEDENCE: u8 = 3;

impl Expr {
    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary { op, .. } => op.precedence(),
            Expr::Neg { .. } => NEG_PRECEDENCE,
            _ => u8::MAX,
        }
    }

    fn fmt_child(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.precedence() < min {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Int { value } => write!(f, "{value}"),
            Expr::Real { value } => {
                if value.fract() == 0.0 && value.abs() < 1e15 {
                    write!(f, "{value:.1}")
                } else {
                    write!(f, "{value}")
                }
            }
            Expr::Pi => f.write_str("pi"),
            Expr::Ident { name } => f.write_str(name),
            Expr::Neg { operand } => {
                f.write_str("-")?;
                operand.fmt_child(f, NEG_PRECEDENCE + 1)
            }
            Expr::Binary { op, lhs, rhs } => {
                let p = op.precedence();
                // Left-associative except `^`, which is right-associative.
                let (lmin, rmin) = if *op == BinOp::Pow { (p + 1, p) } else { (p, p + 1) };
                lhs.fmt_child(f, lmin)?;
                f.write_str(op.symbol())?;
                rhs.fmt_child(f, rmin)
            }
            Expr::Call { func, arg } => write!(f, "{func}({arg})"),
        }
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.index {
            Some(i) => write!(f, "{}[{i}]", self.name),
            None => f.write_str(&self.name),
        }
    }
}

fn join<T: fmt::Display>(items: &[T], sep: &str) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(sep)
}

impl fmt::Display for GateCall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        if !self.params.is_empty() {
            write!(f, "({})", join(&self.params, ","))?;
        }
        write!(f, " {}", join(&self.args, ","))
    }
}

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            StmtKind::Include { name } => write!(f, "include \"{name}\";"),
            StmtKind::Qreg { name, size } => write!(f, "qreg {name}[{size}];"),
            StmtKind::Creg { name, size } => write!(f, "creg {name}[{size}];"),
            StmtKind::GateDef(def) => {
                write!(f, "gate {}", def.name)?;
                if !def.params.is_empty() {
                    write!(f, "({})", def.params.join(","))?;
                }
                writeln!(f, " {} {{", def.qargs.join(","))?;
                for s in &def.body {
                    writeln!(f, "  {s}")?;
                }
                f.write_str("}")
            }
            StmtKind::Opaque { name, params, qargs } => {
                write!(f, "opaque {name}")?;
                if !params.is_empty() {
                    write!(f, "({})", params.join(","))?;
                }
                write!(f, " {};", qargs.join(","))
            }
            StmtKind::GateCall(call) => write!(f, "{call};"),
            StmtKind::Measure { src, dst } => write!(f, "measure {src} -> {dst};"),
            StmtKind::Reset { target } => write!(f, "reset {target};"),
            StmtKind::Barrier { targets } => write!(f, "barrier {};", join(targets, ",")),
            StmtKind::If { creg, value, body } => write!(f, "if({creg}=={value}) {body}"),
            StmtKind::Directive { text } => write!(f, "// @qdb {text}"),
        }
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "OPENQASM {}.{};", self.version.0, self.version.1)?;
        for s in &self.statements {
            writeln!(f, "{s}")?;
        }
        Ok(())
    }
}

impl Program {
    pub fn qregs(&self) -> impl Iterator<Item = (&str, usize)> {
        self.statements.iter().filter_map(|s| match &s.kind {
            StmtKind::Qreg { name, size } => Some((name.as_str(), *size)),
            _ => None,
        })
    }

    pub fn cregs(&self) -> impl Iterator<Item = (&str, usize)> {
        self.statements.iter().filter_map(|s| match &s.kind {
            StmtKind::Creg { name, size } => Some((name.as_str(), *size)),
            _ => None,
        })
    }

    pub fn gate_defs(&self) -> impl Iterator<Item = &GateDef> {
        self.statements.iter().filter_map(|s| match &s.kind {
            StmtKind::GateDef(def) => Some(def),
            _ => None,
        })
    }

    /// JSON form of the tree with all spans removed, for structural comparison.
    pub fn structure(&self) -> serde_json::Value {
        fn strip(v: &mut serde_json::Value) {
            match v {
                serde_json::Value::Object(map) => {
                    map.remove("span");
                    map.values_mut().for_each(strip);
                }
                serde_json::Value::Array(items) => items.iter_mut().for_each(strip),
                _ => {}
            }
        }
        let mut v = serde_json::to_value(self).expect("AST serializes");
        strip(&mut v);
        v
    }
}
