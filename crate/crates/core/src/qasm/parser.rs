use super::ast::{BinOp, Expr, GateCall, GateDef, Operand, Program, Statement, StmtKind};
use super::lexer::{Token, TokenKind};
use super::{QasmError, Span};

const DIRECTIVE_MARKER: &str = "@qdb";
const FUNCTIONS: &[&str] = &["sin", "cos", "tan", "exp", "ln", "sqrt"];

/// Parses a complete program, starting with the `OPENQASM 2.0;` header.
pub fn parse(tokens: &[Token]) -> Result<Program, QasmError> {
    let mut p = Parser::new(tokens);
    let version = p.header()?;
    let statements = p.statements(true)?;
    Ok(Program {
        version,
        includes: collect_includes(&statements),
        statements,
    })
}

/// Parses an include file: statements only, no version header.
pub(crate) fn parse_library(tokens: &[Token]) -> Result<Vec<Statement>, QasmError> {
    Parser::new(tokens).statements(false)
}

pub(crate) fn collect_includes(statements: &[Statement]) -> Vec<String> {
    statements
        .iter()
        .filter_map(|s| match &s.kind {
            StmtKind::Include { name } => Some(name.clone()),
            _ => None,
        })
        .collect()
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(tokens: &'a [Token]) -> Self {
        Self { tokens, pos: 0 }
    }

    fn skip_comments(&mut self) {
        while self.tokens.get(self.pos).is_some_and(|t| t.kind == TokenKind::Comment) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<&'a Token> {
        self.skip_comments();
        self.tokens.get(self.pos)
    }

    fn eof_span(&self) -> Span {
        self.tokens
            .last()
            .map(|t| Span::new(t.span.line, t.span.col + (t.span.end - t.span.start), t.span.end, t.span.end))
            .unwrap_or_else(|| Span::new(1, 1, 0, 0))
    }

    fn error<T>(&mut self, message: &str, expected: &[&str]) -> Result<T, QasmError> {
        let (span, found) = match self.peek() {
            Some(t) => (t.span, format!("found {:?}", t.lexeme)),
            None => (self.eof_span(), "found end of input".to_string()),
        };
        Err(QasmError::Parse {
            message: format!("{message}, {found}"),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            span,
        })
    }

    fn next(&mut self) -> Option<&'a Token> {
        let t = self.peek()?;
        self.pos += 1;
        Some(t)
    }

    fn at_symbol(&mut self, s: &str) -> bool {
        self.peek().is_some_and(|t| t.is_symbol(s))
    }

    fn eat_symbol(&mut self, s: &str) -> bool {
        if self.at_symbol(s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_symbol(&mut self, s: &str) -> Result<&'a Token, QasmError> {
        if self.at_symbol(s) {
            Ok(self.next().expect("peeked"))
        } else {
            self.error("unexpected token", &[&format!("'{s}'")])
        }
    }

    fn expect_keyword(&mut self, k: &str) -> Result<&'a Token, QasmError> {
        if self.peek().is_some_and(|t| t.is_keyword(k)) {
            Ok(self.next().expect("peeked"))
        } else {
            self.error("unexpected token", &[k])
        }
    }

    fn identifier(&mut self) -> Result<&'a Token, QasmError> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Identifier => Ok(self.next().expect("peeked")),
            _ => self.error("expected an identifier", &["identifier"]),
        }
    }

    fn integer(&mut self) -> Result<(u64, Span), QasmError> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::Integer => {
                let t = self.next().expect("peeked");
                let v = t.lexeme.parse::<u64>().map_err(|_| QasmError::Parse {
                    message: format!("integer literal {} out of range", t.lexeme),
                    expected: vec![],
                    span: t.span,
                })?;
                Ok((v, t.span))
            }
            _ => self.error("expected an integer", &["integer"]),
        }
    }

    fn header(&mut self) -> Result<(u32, u32), QasmError> {
        self.expect_keyword("OPENQASM")?;
        let tok = match self.peek() {
            Some(t) if matches!(t.kind, TokenKind::Real | TokenKind::Integer) => self.next().expect("peeked"),
            _ => return self.error("expected a version number", &["version"]),
        };
        if tok.lexeme != "2.0" {
            return Err(QasmError::UnsupportedVersion {
                found: tok.lexeme.clone(),
                span: tok.span,
            });
        }
        self.expect_symbol(";")?;
        Ok((2, 0))
    }

    /// Directive comment at the current raw position, if any.
    fn take_directive(&mut self) -> Option<Statement> {
        let t = self.tokens.get(self.pos)?;
        if t.kind != TokenKind::Comment {
            return None;
        }
        self.pos += 1;
        let body = t.lexeme.trim_start_matches('/').trim();
        let rest = body.strip_prefix(DIRECTIVE_MARKER)?;
        if !rest.is_empty() && !rest.starts_with(char::is_whitespace) {
            return None;
        }
        Some(Statement {
            kind: StmtKind::Directive {
                text: rest.trim().to_string(),
            },
            span: t.span,
        })
    }

    fn statements(&mut self, allow_directives: bool) -> Result<Vec<Statement>, QasmError> {
        let mut out = Vec::new();
        loop {
            while self.tokens.get(self.pos).is_some_and(|t| t.kind == TokenKind::Comment) {
                if let Some(d) = self.take_directive() {
                    if allow_directives {
                        out.push(d);
                    }
                }
            }
            if self.peek().is_none() {
                return Ok(out);
            }
            out.push(self.statement()?);
        }
    }

    fn statement(&mut self) -> Result<Statement, QasmError> {
        let first = self.peek().expect("caller checked");
        let start = first.span;
        let kind = match (first.kind, first.lexeme.as_str()) {
            (TokenKind::Keyword, "include") => {
                self.next();
                let name = match self.peek() {
                    Some(t) if t.kind == TokenKind::Str => self.next().expect("peeked").lexeme.clone(),
                    _ => return self.error("expected a file name", &["string"]),
                };
                self.expect_symbol(";")?;
                StmtKind::Include { name }
            }
            (TokenKind::Keyword, kw @ ("qreg" | "creg")) => {
                self.next();
                let name = self.identifier()?.lexeme.clone();
                self.expect_symbol("[")?;
                let (size, span) = self.integer()?;
                if size == 0 {
                    return Err(QasmError::Parse {
                        message: "register size must be positive".into(),
                        expected: vec![],
                        span,
                    });
                }
                self.expect_symbol("]")?;
                self.expect_symbol(";")?;
                if kw == "qreg" {
                    StmtKind::Qreg { name, size: size as usize }
                } else {
                    StmtKind::Creg { name, size: size as usize }
                }
            }
            (TokenKind::Keyword, "gate") => {
                self.next();
                StmtKind::GateDef(self.gate_def()?)
            }
            (TokenKind::Keyword, "opaque") => {
                self.next();
                let name = self.identifier()?.lexeme.clone();
                let params = self.param_names()?;
                let qargs = self.ident_list()?;
                self.expect_symbol(";")?;
                StmtKind::Opaque { name, params, qargs }
            }
            (TokenKind::Keyword, "if") => {
                self.next();
                self.expect_symbol("(")?;
                let creg = self.identifier()?.lexeme.clone();
                self.expect_symbol("==")?;
                let (value, _) = self.integer()?;
                self.expect_symbol(")")?;
                let body = match self.peek() {
                    Some(t) if t.is_keyword("if") => {
                        return self.error("nested conditionals are not allowed", &["quantum operation"])
                    }
                    Some(_) => self.quantum_op()?,
                    None => return self.error("expected a statement", &["quantum operation"]),
                };
                StmtKind::If {
                    creg,
                    value,
                    body: Box::new(body),
                }
            }
            _ => return self.quantum_op(),
        };
        let end = self.tokens[self.pos - 1].span;
        Ok(Statement {
            kind,
            span: start.to(end),
        })
    }

    /// Gate call, measure, reset or barrier.
    fn quantum_op(&mut self) -> Result<Statement, QasmError> {
        let first = match self.peek() {
            Some(t) => t,
            None => return self.error("expected a statement", &["statement"]),
        };
        let start = first.span;
        let kind = match (first.kind, first.lexeme.as_str()) {
            (TokenKind::Keyword, "measure") => {
                self.next();
                let src = self.operand()?;
                self.expect_symbol("->")?;
                let dst = self.operand()?;
                StmtKind::Measure { src, dst }
            }
            (TokenKind::Keyword, "reset") => {
                self.next();
                StmtKind::Reset { target: self.operand()? }
            }
            (TokenKind::Keyword, "barrier") => {
                self.next();
                StmtKind::Barrier {
                    targets: self.operand_list()?,
                }
            }
            (TokenKind::Identifier, _) | (TokenKind::Keyword, "U" | "CX") => {
                let name = self.next().expect("peeked").lexeme.clone();
                let params = if self.eat_symbol("(") {
                    let mut params = Vec::new();
                    if !self.at_symbol(")") {
                        loop {
                            params.push(self.expr(0)?);
                            if !self.eat_symbol(",") {
                                break;
                            }
                        }
                    }
                    self.expect_symbol(")")?;
                    params
                } else {
                    Vec::new()
                };
                let args = self.operand_list()?;
                StmtKind::GateCall(GateCall { name, params, args })
            }
            _ => {
                return self.error(
                    "expected a statement",
                    &["qreg", "creg", "gate", "measure", "reset", "barrier", "if", "gate name"],
                )
            }
        };
        let semi = self.expect_symbol(";")?;
        Ok(Statement {
            kind,
            span: start.to(semi.span),
        })
    }

    fn operand(&mut self) -> Result<Operand, QasmError> {
        let name_tok = self.identifier()?;
        let mut span = name_tok.span;
        let index = if self.eat_symbol("[") {
            let (i, _) = self.integer()?;
            let close = self.expect_symbol("]")?;
            span = span.to(close.span);
            Some(i as usize)
        } else {
            None
        };
        Ok(Operand {
            name: name_tok.lexeme.clone(),
            index,
            span,
        })
    }

    fn operand_list(&mut self) -> Result<Vec<Operand>, QasmError> {
        let mut out = vec![self.operand()?];
        while self.eat_symbol(",") {
            out.push(self.operand()?);
        }
        Ok(out)
    }

    fn ident_list(&mut self) -> Result<Vec<String>, QasmError> {
        let mut out = vec![self.identifier()?.lexeme.clone()];
        while self.eat_symbol(",") {
            out.push(self.identifier()?.lexeme.clone());
        }
        Ok(out)
    }

    fn param_names(&mut self) -> Result<Vec<String>, QasmError> {
        if !self.eat_symbol("(") {
            return Ok(Vec::new());
        }
        if self.eat_symbol(")") {
            return Ok(Vec::new());
        }
        let names = self.ident_list()?;
        self.expect_symbol(")")?;
        Ok(names)
    }

    fn gate_def(&mut self) -> Result<GateDef, QasmError> {
        let name = self.identifier()?.lexeme.clone();
        let params = self.param_names()?;
        let qargs = self.ident_list()?;
        self.expect_symbol("{")?;
        let mut body = Vec::new();
        while !self.eat_symbol("}") {
            if self.peek().is_none() {
                return self.error("unterminated gate body", &["'}'"]);
            }
            let stmt = self.quantum_op()?;
            match &stmt.kind {
                StmtKind::GateCall(_) | StmtKind::Barrier { .. } => body.push(stmt),
                _ => {
                    return Err(QasmError::Parse {
                        message: "only gate calls and barriers may appear in a gate body".into(),
                        expected: vec!["gate call".into(), "barrier".into()],
                        span: stmt.span,
                    })
                }
            }
        }
        Ok(GateDef {
            name,
            params,
            qargs,
            body,
            source: None,
        })
    }

    fn binop(&mut self) -> Option<BinOp> {
        let t = self.peek()?;
        if t.kind != TokenKind::Symbol {
            return None;
        }
        Some(match t.lexeme.as_str() {
            "+" => BinOp::Add,
            "-" => BinOp::Sub,
            "*" => BinOp::Mul,
            "/" => BinOp::Div,
            "^" => BinOp::Pow,
            _ => return None,
        })
    }

    /// Precedence climbing: `+ -` < `* /` < unary minus < `^` (right-assoc).
    fn expr(&mut self, min_prec: u8) -> Result<Expr, QasmError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.next();
            let next_min = if op == BinOp::Pow { prec } else { prec + 1 };
            let rhs = self.expr(next_min)?;
            lhs = Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, QasmError> {
        if self.eat_symbol("-") {
            // Unary minus binds looser than `^`: -a^b = -(a^b).
            let operand = self.expr(BinOp::Pow.precedence())?;
            return Ok(Expr::Neg {
                operand: Box::new(operand),
            });
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr, QasmError> {
        let t = match self.peek() {
            Some(t) => t,
            None => return self.error("expected an expression", &["expression"]),
        };
        match t.kind {
            TokenKind::Integer => {
                let (value, _) = self.integer()?;
                Ok(Expr::Int { value })
            }
            TokenKind::Real => {
                self.next();
                let value = t.lexeme.parse::<f64>().map_err(|_| QasmError::Parse {
                    message: format!("bad real literal {}", t.lexeme),
                    expected: vec![],
                    span: t.span,
                })?;
                Ok(Expr::Real { value })
            }
            TokenKind::Keyword if t.lexeme == "pi" => {
                self.next();
                Ok(Expr::Pi)
            }
            TokenKind::Keyword if FUNCTIONS.contains(&t.lexeme.as_str()) => {
                self.next();
                self.expect_symbol("(")?;
                let arg = self.expr(0)?;
                self.expect_symbol(")")?;
                Ok(Expr::Call {
                    func: t.lexeme.clone(),
                    arg: Box::new(arg),
                })
            }
            TokenKind::Identifier => {
                self.next();
                Ok(Expr::Ident { name: t.lexeme.clone() })
            }
            TokenKind::Symbol if t.lexeme == "(" => {
                self.next();
                let e = self.expr(0)?;
                self.expect_symbol(")")?;
                Ok(e)
            }
            _ => self.error("expected an expression", &["number", "pi", "identifier", "'('", "'-'"]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qasm::tokenize;

    fn parse_src(src: &str) -> Result<Program, QasmError> {
        parse(&tokenize(src)?)
    }

    fn parse_expr(src: &str) -> Expr {
        let prog = parse_src(&format!("OPENQASM 2.0; u({src}) q;")).unwrap();
        match &prog.statements[0].kind {
            StmtKind::GateCall(c) => c.params[0].clone(),
            _ => unreachable!(),
        }
    }

    #[test]
    fn version_gate() {
        assert!(matches!(
            parse_src("OPENQASM 3.0;"),
            Err(QasmError::UnsupportedVersion { .. })
        ));
        assert!(parse_src("OPENQASM 2.0;").is_ok());
        assert!(matches!(parse_src("qreg q[1];"), Err(QasmError::Parse { .. })));
    }

    #[test]
    fn expression_precedence() {
        assert_eq!(parse_expr("1+2*3").to_string(), "1+2*3");
        assert_eq!(parse_expr("(1+2)*3").to_string(), "(1+2)*3");
        assert_eq!(parse_expr("-pi/2").to_string(), "-pi/2");
        assert_eq!(parse_expr("2^3^2").to_string(), "2^3^2");
        assert_eq!(parse_expr("(2^3)^2").to_string(), "(2^3)^2");
        assert_eq!(parse_expr("1-(2-3)").to_string(), "1-(2-3)");
        assert_eq!(parse_expr("-(phi+lambda)/2").to_string(), "-(phi+lambda)/2");
        assert_eq!(parse_expr("sin(pi)").to_string(), "sin(pi)");
        assert!(matches!(parse_expr("-x^2"), Expr::Neg { .. }));
    }

    #[test]
    fn missing_semicolon_points_at_next_token() {
        let err = parse_src("OPENQASM 2.0;\nqreg q[2];\nh q[0]\ncx q[0],q[1];").unwrap_err();
        match err {
            QasmError::Parse { span, expected, .. } => {
                assert_eq!((span.line, span.col), (4, 1));
                assert_eq!(expected, vec!["';'"]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn conditional_statement() {
        let prog = parse_src("OPENQASM 2.0; qreg q[1]; creg c[1]; if(c==1) x q[0];").unwrap();
        match &prog.statements[2].kind {
            StmtKind::If { creg, value, body } => {
                assert_eq!((creg.as_str(), *value), ("c", 1));
                assert!(matches!(body.kind, StmtKind::GateCall(_)));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn directives_become_statements() {
        let prog = parse_src("OPENQASM 2.0;\nqreg q[3];\n// plain comment\n// @qdb assert-separable q[2]\nh q[0];").unwrap();
        let kinds: Vec<_> = prog.statements.iter().map(|s| &s.kind).collect();
        assert_eq!(kinds.len(), 3);
        assert_eq!(
            kinds[1],
            &StmtKind::Directive {
                text: "assert-separable q[2]".into()
            }
        );
        // `@qdbx` is not a directive.
        let prog = parse_src("OPENQASM 2.0; // @qdbx\n").unwrap();
        assert!(prog.statements.is_empty());
    }

    #[test]
    fn gate_definition() {
        let prog = parse_src("OPENQASM 2.0; gate foo(a,b) x,y { U(a,b,0) x; CX x,y; barrier x,y; }").unwrap();
        let def = prog.gate_defs().next().unwrap();
        assert_eq!(def.params, vec!["a", "b"]);
        assert_eq!(def.qargs, vec!["x", "y"]);
        assert_eq!(def.body.len(), 3);
        assert!(parse_src("OPENQASM 2.0; gate foo x { measure x -> c; }").is_err());
    }
}
