//! Text format of (E)MDM schemes and constraint formulas.

mod formula;
mod lexer;
mod scheme;
mod serialize;

use std::fmt;

use lexer::{Lexer, Tok, Token};

use crate::model::{Formula, MdmScheme, SchemeIndex, Term, TypeEnv};

pub use lexer::quote_text;
pub use serialize::serialize_scheme;

/// 1-based, inclusive source range.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct SourceSpan {
    pub file: String,
    pub line_start: usize,
    pub col_start: usize,
    pub line_end: usize,
    pub col_end: usize,
}

impl SourceSpan {
    pub fn point(file: &str, line: usize, col: usize) -> Self {
        SourceSpan {
            file: file.to_string(),
            line_start: line,
            col_start: col,
            line_end: line,
            col_end: col,
        }
    }

    pub fn to(&self, end: &SourceSpan) -> SourceSpan {
        SourceSpan {
            line_end: end.line_end,
            col_end: end.col_end,
            ..self.clone()
        }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line_start, self.col_start)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{span}: {message}")]
pub struct ParseError {
    pub span: SourceSpan,
    pub message: String,
}

impl ParseError {
    pub fn new(span: SourceSpan, message: impl Into<String>) -> Self {
        ParseError {
            span,
            message: message.into(),
        }
    }
}

/// Token cursor; the last token is always `Eof`.
pub(crate) struct Cursor {
    toks: Vec<Token>,
    pos: usize,
}

impl Cursor {
    fn new(toks: Vec<Token>) -> Self {
        Cursor { toks, pos: 0 }
    }

    fn token(&self) -> &Token {
        &self.toks[self.pos.min(self.toks.len() - 1)]
    }

    fn peek(&self) -> &Tok {
        &self.token().tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn span(&self) -> SourceSpan {
        self.token().span.clone()
    }

    fn prev_span(&self) -> SourceSpan {
        self.toks[self.pos.saturating_sub(1)].span.clone()
    }

    fn next(&mut self) -> Token {
        let t = self.token().clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    fn at_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(t) if *t == s)
    }

    fn at_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Ident(t) if t == k)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        let hit = self.at_sym(s);
        if hit {
            self.next();
        }
        hit
    }

    fn eat_kw(&mut self, k: &str) -> bool {
        let hit = self.at_kw(k);
        if hit {
            self.next();
        }
        hit
    }

    fn error_here(&self, message: impl Into<String>) -> ParseError {
        ParseError::new(self.span(), message)
    }

    fn expect_sym(&mut self, s: &str) -> Result<SourceSpan, ParseError> {
        if self.at_sym(s) {
            Ok(self.next().span)
        } else {
            Err(self.error_here(format!("expected `{s}`, found {}", self.peek().describe())))
        }
    }

    fn expect_kw(&mut self, k: &str) -> Result<SourceSpan, ParseError> {
        if self.at_kw(k) {
            Ok(self.next().span)
        } else {
            Err(self.error_here(format!("expected `{k}`, found {}", self.peek().describe())))
        }
    }

    fn expect_ident(&mut self) -> Result<(String, SourceSpan), ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => Ok((s, self.next().span)),
            other => Err(self.error_here(format!("expected a name, found {}", other.describe()))),
        }
    }

    fn expect_int(&mut self) -> Result<i64, ParseError> {
        let neg = self.eat_sym("-");
        match self.peek().clone() {
            Tok::Int(v) => {
                self.next();
                Ok(if neg { -v } else { v })
            }
            other => Err(self.error_here(format!("expected a number, found {}", other.describe()))),
        }
    }

    fn expect_text(&mut self) -> Result<(String, Token), ParseError> {
        match self.peek().clone() {
            Tok::Text(s) => Ok((s, self.next())),
            other => Err(self.error_here(format!("expected quoted text, found {}", other.describe()))),
        }
    }
}

/// Tokenizes formula source located at `(line, col)` of `file`.
fn formula_cursor(file: &str, text: &str, line: usize, col: usize) -> Result<Cursor, ParseError> {
    let (toks, mut errors) = Lexer::new(file, text, line, col, false).tokenize();
    if !errors.is_empty() {
        return Err(errors.remove(0));
    }
    Ok(Cursor::new(toks))
}

fn parse_formula_at(file: &str, text: &str, line: usize, col: usize) -> Result<Formula, ParseError> {
    let mut c = formula_cursor(file, text, line, col)?;
    let f = formula::formula(&mut c)?;
    if !c.at_eof() {
        return Err(c.error_here(format!("unexpected {} after formula", c.peek().describe())));
    }
    Ok(f)
}

fn parse_term_at(file: &str, text: &str, line: usize, col: usize) -> Result<Term, ParseError> {
    let mut c = formula_cursor(file, text, line, col)?;
    let t = formula::term(&mut c)?;
    if !c.at_eof() {
        return Err(c.error_here(format!("unexpected {} after term", c.peek().describe())));
    }
    Ok(t)
}

/// Parses formula syntax without resolving names.
pub fn parse_formula_syntax(text: &str) -> Result<Formula, ParseError> {
    parse_formula_at("<formula>", text, 1, 1)
}

/// Parses a closed formula and type-checks it against `scheme`.
pub fn parse_formula(text: &str, scheme: &MdmScheme) -> Result<Formula, ParseError> {
    let f = parse_formula_syntax(text)?;
    let idx = SchemeIndex::new(scheme);
    let whole = SourceSpan {
        file: "<formula>".into(),
        line_start: 1,
        col_start: 1,
        line_end: 1,
        col_end: text.chars().count().max(1),
    };
    idx.check_closed(&f)
        .map_err(|e| ParseError::new(whole, e.to_string()))?;
    Ok(f)
}

/// Parses a term in which `x` ranges over `set`.
pub fn parse_term(text: &str, scheme: &MdmScheme, set: &str) -> Result<Term, ParseError> {
    let t = parse_term_at("<term>", text, 1, 1)?;
    SchemeIndex::new(scheme)
        .type_of(&t, &TypeEnv::with("x", set))
        .map_err(|e| ParseError::new(SourceSpan::point("<term>", 1, 1), e.to_string()))?;
    Ok(t)
}

/// Parses scheme source. All independent errors are reported together.
pub fn parse_scheme(text: &str) -> Result<MdmScheme, Vec<ParseError>> {
    scheme::parse(text, "<input>")
}

/// Like [`parse_scheme`], naming `file` in error spans.
pub fn parse_scheme_named(text: &str, file: &str) -> Result<MdmScheme, Vec<ParseError>> {
    scheme::parse(text, file)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formula_type_errors_are_reported() {
        let s = parse_scheme(
            "set A entity; set B entity; fun f: A -> B; fun g: B -> ascii(4);",
        )
        .unwrap();
        assert!(parse_formula("forall x in A: g(f(x)) = 'a'", &s).is_ok());
        let e = parse_formula("forall x in A: g(x) = 'a'", &s).unwrap_err();
        assert!(e.message.contains("g is not defined on A"), "{e}");
        let e = parse_formula("forall x in A: f(y) is null", &s).unwrap_err();
        assert!(e.message.contains("free variable y"), "{e}");
    }
}
