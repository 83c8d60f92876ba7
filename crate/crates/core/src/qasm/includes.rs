use super::ast::{Program, Statement, StmtKind};
use super::parser::parse_library;
use super::{tokenize, QasmError, Span};
use std::path::PathBuf;

/// The standard gate header, compiled into the binary.
pub const QELIB1: &str = include_str!("../../assets/qelib1.inc");

/// Locates include files. `qelib1.inc` is always served from memory; other
/// names are only looked up when an include directory is configured.
#[derive(Debug, Clone, Default)]
pub struct IncludeResolver {
    include_path: Option<PathBuf>,
}

impl IncludeResolver {
    pub fn new(include_path: Option<PathBuf>) -> Self {
        Self { include_path }
    }

    fn load(&self, name: &str, span: Span) -> Result<String, QasmError> {
        if name == "qelib1.inc" {
            return Ok(QELIB1.to_string());
        }
        let not_found = || QasmError::IncludeNotFound {
            name: name.to_string(),
            span,
        };
        let dir = self.include_path.as_ref().ok_or_else(not_found)?;
        std::fs::read_to_string(dir.join(name)).map_err(|_| not_found())
    }
}

/// Replaces every `include` statement with the statements of the named file,
/// recursively. Included gate definitions remember their source file.
pub fn resolve_includes(program: Program, resolver: &IncludeResolver) -> Result<Program, QasmError> {
    let mut stack = Vec::new();
    let statements = expand(program.statements, resolver, &mut stack)?;
    Ok(Program {
        version: program.version,
        includes: program.includes,
        statements,
    })
}

fn expand(
    statements: Vec<Statement>,
    resolver: &IncludeResolver,
    stack: &mut Vec<String>,
) -> Result<Vec<Statement>, QasmError> {
    let mut out = Vec::with_capacity(statements.len());
    for stmt in statements {
        let StmtKind::Include { name } = &stmt.kind else {
            out.push(stmt);
            continue;
        };
        if stack.contains(name) {
            return Err(QasmError::CyclicInclude {
                name: name.clone(),
                span: stmt.span,
            });
        }
        let text = resolver.load(name, stmt.span)?;
        let wrap = |inner: QasmError| QasmError::InInclude {
            file: name.clone(),
            inner: Box::new(inner),
        };
        let mut included = parse_library(&tokenize(&text).map_err(wrap)?).map_err(wrap)?;
        for s in &mut included {
            if let StmtKind::GateDef(def) = &mut s.kind {
                def.source.get_or_insert_with(|| name.clone());
            }
        }
        stack.push(name.clone());
        let nested = expand(included, resolver, stack).map_err(|e| match e {
            e @ QasmError::InInclude { .. } => e,
            e => wrap(e),
        })?;
        stack.pop();
        out.extend(nested);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qasm::parse;

    fn program(src: &str) -> Program {
        parse(&tokenize(src).unwrap()).unwrap()
    }

    #[test]
    fn qelib_is_builtin() {
        let p = resolve_includes(
            program("OPENQASM 2.0; include \"qelib1.inc\";"),
            &IncludeResolver::default(),
        )
        .unwrap();
        let names: Vec<_> = p.gate_defs().map(|d| d.name.as_str()).collect();
        for g in [
            "id", "x", "y", "z", "h", "s", "sdg", "t", "tdg", "rx", "ry", "rz", "cx", "cz", "cy", "ch",
            "ccx", "cp", "cu1", "crz", "cu3", "u1", "u2", "u3", "swap",
        ] {
            assert!(names.contains(&g), "missing {g}");
        }
        assert!(p.gate_defs().all(|d| d.source.as_deref() == Some("qelib1.inc")));
    }

    #[test]
    fn missing_include() {
        let err = resolve_includes(
            program("OPENQASM 2.0; include \"missing.inc\";"),
            &IncludeResolver::default(),
        )
        .unwrap_err();
        assert!(matches!(err, QasmError::IncludeNotFound { ref name, .. } if name == "missing.inc"));
    }

    #[test]
    fn include_path_and_cycles() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.inc"), "include \"b.inc\"; gate ga q { U(0,0,0) q; }").unwrap();
        std::fs::write(dir.path().join("b.inc"), "gate gb q { U(0,0,0) q; }").unwrap();
        std::fs::write(dir.path().join("loop.inc"), "include \"loop.inc\";").unwrap();
        let resolver = IncludeResolver::new(Some(dir.path().to_path_buf()));

        let p = resolve_includes(program("OPENQASM 2.0; include \"a.inc\";"), &resolver).unwrap();
        let names: Vec<_> = p.gate_defs().map(|d| d.name.as_str()).collect();
        assert_eq!(names, vec!["gb", "ga"]);

        let err = resolve_includes(program("OPENQASM 2.0; include \"loop.inc\";"), &resolver).unwrap_err();
        match err {
            QasmError::InInclude { inner, .. } => assert!(matches!(*inner, QasmError::CyclicInclude { .. })),
            other => panic!("{other:?}"),
        }
    }
}
