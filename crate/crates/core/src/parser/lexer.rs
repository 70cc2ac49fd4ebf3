//! Tokenizer shared by the scheme and formula parsers.

use super::{ParseError, SourceSpan};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    /// Single-quoted literal, quotes removed and `''` unescaped.
    Str(String),
    /// Double-quoted text (formula source, descriptions, view bodies).
    Text(String),
    Sym(&'static str),
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Int(v) => format!("number {v}"),
            Tok::Str(s) => format!("literal '{s}'"),
            Tok::Text(_) => "quoted text".to_string(),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
    /// Position of the first character inside a `Text` token's quotes.
    pub inner: (usize, usize),
}

const SYMBOLS: [&str; 19] = [
    "->", "<>", "<=", ">=", ";", ":", ",", ".", "(", ")", "[", "]", "{", "}", "=", "<", ">",
    "+", "-",
];

pub struct Lexer<'a> {
    file: &'a str,
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col: usize,
    /// Scheme-level identifiers may contain inner hyphens (`null-reflexive`).
    hyphen_idents: bool,
}

impl<'a> Lexer<'a> {
    pub fn new(file: &'a str, text: &str, line: usize, col: usize, hyphen_idents: bool) -> Self {
        Lexer {
            file,
            chars: text.chars().collect(),
            pos: 0,
            line,
            col,
            hyphen_idents,
        }
    }

    fn peek(&self, k: usize) -> Option<char> {
        self.chars.get(self.pos + k).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn span_from(&self, line: usize, col: usize) -> SourceSpan {
        SourceSpan {
            file: self.file.to_string(),
            line_start: line,
            col_start: col,
            line_end: self.line,
            col_end: self.col.saturating_sub(1).max(col),
        }
    }

    /// Tokenizes the whole input. Lexical errors are collected and the
    /// offending character skipped, so later errors are still reported.
    pub fn tokenize(mut self) -> (Vec<Token>, Vec<ParseError>) {
        let mut out = Vec::new();
        let mut errors = Vec::new();
        loop {
            self.skip_trivia();
            let (line, col) = (self.line, self.col);
            let Some(c) = self.peek(0) else {
                out.push(Token {
                    tok: Tok::Eof,
                    span: self.span_from(line, col),
                    inner: (line, col),
                });
                break;
            };
            let mut inner = (line, col);
            let tok = if c.is_ascii_alphabetic() || c == '_' {
                Ok(Tok::Ident(self.ident()))
            } else if c.is_ascii_digit() {
                self.number()
            } else if c == '\'' {
                self.single_quoted()
            } else if c == '"' {
                self.bump();
                inner = (self.line, self.col);
                self.double_quoted()
            } else if let Some(sym) = SYMBOLS.iter().find(|s| self.starts_with(s)) {
                for _ in 0..sym.chars().count() {
                    self.bump();
                }
                Ok(Tok::Sym(sym))
            } else {
                self.bump();
                Err(format!("unexpected character `{c}`"))
            };
            match tok {
                Ok(tok) => out.push(Token {
                    tok,
                    span: self.span_from(line, col),
                    inner,
                }),
                Err(message) => errors.push(ParseError {
                    span: self.span_from(line, col),
                    message,
                }),
            }
        }
        (out, errors)
    }

    fn starts_with(&self, s: &str) -> bool {
        s.chars().enumerate().all(|(i, c)| self.peek(i) == Some(c))
    }

    fn skip_trivia(&mut self) {
        while let Some(c) = self.peek(0) {
            if c.is_whitespace() {
                self.bump();
            } else if c == '#' {
                while let Some(c) = self.peek(0) {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else {
                break;
            }
        }
    }

    fn ident(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek(0) {
            let hyphen = self.hyphen_idents
                && c == '-'
                && self.peek(1).is_some_and(|n| n.is_ascii_alphabetic());
            if c.is_ascii_alphanumeric() || c == '_' || hyphen {
                s.push(c);
                self.bump();
            } else {
                break;
            }
        }
        s
    }

    fn number(&mut self) -> Result<Tok, String> {
        let mut s = String::new();
        while let Some(c) = self.peek(0).filter(|c| c.is_ascii_digit()) {
            s.push(c);
            self.bump();
        }
        s.parse::<i64>()
            .map(Tok::Int)
            .map_err(|_| format!("number {s} is out of range"))
    }

    fn single_quoted(&mut self) -> Result<Tok, String> {
        self.bump();
        let mut s = String::new();
        loop {
            match self.bump() {
                None | Some('\n') => return Err("unterminated literal".to_string()),
                Some('\'') if self.peek(0) == Some('\'') => {
                    self.bump();
                    s.push('\'');
                }
                Some('\'') => return Ok(Tok::Str(s)),
                Some(c) => s.push(c),
            }
        }
    }

    fn double_quoted(&mut self) -> Result<Tok, String> {
        let mut s = String::new();
        loop {
            match self.bump() {
                None => return Err("unterminated string".to_string()),
                Some('\\') => match self.bump() {
                    Some(c @ ('"' | '\\')) => s.push(c),
                    Some(c) => {
                        s.push('\\');
                        s.push(c);
                    }
                    None => return Err("unterminated string".to_string()),
                },
                Some('"') => return Ok(Tok::Text(s)),
                Some(c) => s.push(c),
            }
        }
    }
}

/// Quotes `s` as double-quoted text, escaping `"` and `\`.
pub fn quote_text(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}
