use super::{QasmError, Span};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenKind {
    Keyword,
    Identifier,
    Integer,
    Real,
    Str,
    Symbol,
    Comment,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    pub span: Span,
}

impl Token {
    pub fn is(&self, kind: TokenKind, lexeme: &str) -> bool {
        self.kind == kind && self.lexeme == lexeme
    }

    pub fn is_symbol(&self, s: &str) -> bool {
        self.is(TokenKind::Symbol, s)
    }

    pub fn is_keyword(&self, s: &str) -> bool {
        self.is(TokenKind::Keyword, s)
    }
}

pub const KEYWORDS: &[&str] = &[
    "OPENQASM", "include", "qreg", "creg", "gate", "opaque", "measure", "reset", "barrier", "if",
    "pi", "U", "CX", "sin", "cos", "tan", "exp", "ln", "sqrt",
];

const TWO_CHAR_SYMBOLS: &[&str] = &["->", "=="];
const ONE_CHAR_SYMBOLS: &str = "[](){};,+-*/^";

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    col: usize,
}

impl Cursor<'_> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_at(&self, offset: usize) -> Option<char> {
        self.src[self.pos..].chars().nth(offset)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn eat_while(&mut self, f: impl Fn(char) -> bool) {
        while self.peek().is_some_and(&f) {
            self.bump();
        }
    }
}

/// Splits OpenQASM 2.0 source into tokens. `//` comments are kept as
/// comment tokens because debugger directives live inside them.
pub fn tokenize(src: &str) -> Result<Vec<Token>, QasmError> {
    let mut cur = Cursor {
        src,
        pos: 0,
        line: 1,
        col: 1,
    };
    let mut tokens = Vec::new();
    while let Some(c) = cur.peek() {
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        let (start, line, col) = (cur.pos, cur.line, cur.col);
        let kind = if c == '/' && cur.peek_at(1) == Some('/') {
            cur.eat_while(|c| c != '\n');
            TokenKind::Comment
        } else if c.is_ascii_alphabetic() || c == '_' {
            cur.eat_while(|c| c.is_ascii_alphanumeric() || c == '_');
            if KEYWORDS.contains(&&src[start..cur.pos]) {
                TokenKind::Keyword
            } else {
                TokenKind::Identifier
            }
        } else if c.is_ascii_digit() || (c == '.' && cur.peek_at(1).is_some_and(|d| d.is_ascii_digit())) {
            lex_number(&mut cur)
        } else if c == '"' {
            cur.bump();
            cur.eat_while(|c| c != '"' && c != '\n');
            if cur.peek() != Some('"') {
                return Err(QasmError::Lex {
                    message: "unterminated string literal".into(),
                    span: Span::new(line, col, start, cur.pos),
                });
            }
            cur.bump();
            TokenKind::Str
        } else if TWO_CHAR_SYMBOLS.iter().any(|s| src[start..].starts_with(s)) {
            cur.bump();
            cur.bump();
            TokenKind::Symbol
        } else if ONE_CHAR_SYMBOLS.contains(c) {
            cur.bump();
            TokenKind::Symbol
        } else {
            cur.bump();
            return Err(QasmError::Lex {
                message: format!("illegal character {c:?}"),
                span: Span::new(line, col, start, cur.pos),
            });
        };
        let lexeme = if kind == TokenKind::Str {
            src[start + 1..cur.pos - 1].to_string()
        } else {
            src[start..cur.pos].to_string()
        };
        tokens.push(Token {
            kind,
            lexeme,
            span: Span::new(line, col, start, cur.pos),
        });
    }
    Ok(tokens)
}

fn lex_number(cur: &mut Cursor<'_>) -> TokenKind {
    let mut real = false;
    cur.eat_while(|c| c.is_ascii_digit());
    if cur.peek() == Some('.') {
        real = true;
        cur.bump();
        cur.eat_while(|c| c.is_ascii_digit());
    }
    if matches!(cur.peek(), Some('e' | 'E')) {
        let sign = matches!(cur.peek_at(1), Some('+' | '-'));
        let digit_at = if sign { 2 } else { 1 };
        if cur.peek_at(digit_at).is_some_and(|c| c.is_ascii_digit()) {
            real = true;
            for _ in 0..digit_at {
                cur.bump();
            }
            cur.eat_while(|c| c.is_ascii_digit());
        }
    }
    if real {
        TokenKind::Real
    } else {
        TokenKind::Integer
    }
}
