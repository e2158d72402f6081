use std::fmt;

use super::ast::{BinOp, Expr, ExprKind, Func, Let, Program, Span};

/// Largest accepted source text.
pub const MAX_SOURCE: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub found: String,
    pub expected: Vec<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: found {}", self.line, self.col, self.found)?;
        if !self.expected.is_empty() {
            write!(f, ", expected one of: {}", self.expected.join(", "))?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseError {}

impl From<ParseError> for crate::Error {
    fn from(e: ParseError) -> Self {
        crate::Error::Parse(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Number(f64),
    Uint(u64),
    Ident(String),
    Let,
    Sym(char),
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Number(v) => format!("number {v}"),
            Tok::Uint(v) => format!("integer {v}"),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Let => "`let`".into(),
            Tok::Sym(c) => format!("`{c}`"),
            Tok::Eof => "end of input".into(),
        }
    }
}

struct Lexer<'a> {
    src: &'a str,
    toks: Vec<(Tok, Span)>,
}

impl<'a> Lexer<'a> {
    fn run(src: &'a str) -> Result<Vec<(Tok, Span)>, ParseError> {
        let mut lx = Lexer { src, toks: Vec::new() };
        let bytes = src.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i];
            if c.is_ascii_whitespace() {
                i += 1;
            } else if c == b'#' {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            } else if c.is_ascii_digit() || (c == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
                i = lx.number(i)?;
            } else if c.is_ascii_alphabetic() || c == b'_' {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                let word = &src[start..i];
                let tok = if word == "let" { Tok::Let } else { Tok::Ident(word.to_string()) };
                lx.toks.push((tok, Span::new(start, i)));
            } else if b"+-*^()[],:;=".contains(&c) {
                lx.toks.push((Tok::Sym(c as char), Span::new(i, i + 1)));
                i += 1;
            } else {
                let ch = src[i..].chars().next().unwrap();
                return Err(error_at(src, i, format!("character `{ch}`"), vec!["a token".into()]));
            }
        }
        lx.toks.push((Tok::Eof, Span::new(src.len(), src.len())));
        Ok(lx.toks)
    }

    fn number(&mut self, start: usize) -> Result<usize, ParseError> {
        let b = self.src.as_bytes();
        let mut i = start;
        let digits = |i: &mut usize| {
            while *i < b.len() && b[*i].is_ascii_digit() {
                *i += 1;
            }
        };
        digits(&mut i);
        let mut integral = true;
        if i < b.len() && b[i] == b'.' {
            integral = false;
            i += 1;
            digits(&mut i);
        }
        if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
            let mut j = i + 1;
            if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
                j += 1;
            }
            if j < b.len() && b[j].is_ascii_digit() {
                integral = false;
                i = j;
                digits(&mut i);
            }
        }
        let text = &self.src[start..i];
        let tok = match (integral, text.parse::<u64>()) {
            (true, Ok(v)) => Tok::Uint(v),
            _ => Tok::Number(
                text.parse::<f64>()
                    .map_err(|_| error_at(self.src, start, format!("malformed number `{text}`"), vec![]))?,
            ),
        };
        self.toks.push((tok, Span::new(start, i)));
        Ok(i)
    }
}

fn error_at(src: &str, offset: usize, found: String, expected: Vec<String>) -> ParseError {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    ParseError {
        line,
        col,
        found,
        expected,
    }
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<(Tok, Span)>,
    pos: usize,
}

/// Parses `let` bindings followed by one expression.
pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    if src.len() > MAX_SOURCE {
        return Err(ParseError {
            line: 1,
            col: 1,
            found: format!("{} bytes of input", src.len()),
            expected: vec![format!("at most {MAX_SOURCE} bytes")],
        });
    }
    let mut p = Parser {
        src,
        toks: Lexer::run(src)?,
        pos: 0,
    };
    let mut lets = Vec::new();
    while p.peek() == &Tok::Let {
        let start = p.span().start;
        p.bump();
        let name = match p.peek().clone() {
            Tok::Ident(n) => {
                p.bump();
                n
            }
            _ => return Err(p.unexpected(&["identifier"])),
        };
        p.expect('=')?;
        let value = p.expr()?;
        let end = p.expect(';')?.end;
        lets.push(Let {
            name,
            value,
            span: Span::new(start, end),
        });
    }
    let body = p.expr()?;
    if p.peek() != &Tok::Eof {
        return Err(p.unexpected(&["`+`", "`-`", "`*`", "`^`", "end of input"]));
    }
    Ok(Program { lets, body })
}

/// Parses a single expression.
pub fn parse(src: &str) -> Result<Expr, ParseError> {
    let prog = parse_program(src)?;
    if let Some(l) = prog.lets.first() {
        return Err(error_at(src, l.span.start, "`let`".into(), vec!["an expression".into()]));
    }
    Ok(prog.body)
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Span {
        let s = self.span();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        s
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        error_at(
            self.src,
            self.span().start,
            self.peek().describe(),
            expected.iter().map(|s| s.to_string()).collect(),
        )
    }

    fn expect(&mut self, c: char) -> Result<Span, ParseError> {
        if self.peek() == &Tok::Sym(c) {
            Ok(self.bump())
        } else {
            Err(self.unexpected(&[&format!("`{c}`")]))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Sym('+') => BinOp::Add,
                Tok::Sym('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            let span = lhs.span.join(rhs.span);
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        while self.peek() == &Tok::Sym('*') {
            self.bump();
            let rhs = self.factor()?;
            let span = lhs.span.join(rhs.span);
            lhs = Expr::new(ExprKind::Binary(BinOp::Mul, Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == &Tok::Sym('-') {
            let start = self.bump();
            let inner = self.factor()?;
            let span = start.join(inner.span);
            return Ok(Expr::new(ExprKind::Neg(Box::new(inner)), span));
        }
        let base = self.primary()?;
        if self.peek() == &Tok::Sym('^') {
            self.bump();
            let (k, s) = self.uint("exponent")?;
            let span = base.span.join(s);
            return Ok(Expr::new(ExprKind::Pow(Box::new(base), k), span));
        }
        Ok(base)
    }

    fn uint(&mut self, what: &str) -> Result<(u32, Span), ParseError> {
        match *self.peek() {
            Tok::Uint(v) if v <= u32::MAX as u64 => {
                let s = self.bump();
                Ok((v as u32, s))
            }
            _ => Err(self.unexpected(&[&format!("unsigned integer {what}")])),
        }
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Number(v) => {
                self.bump();
                Ok(Expr::new(ExprKind::Number(v), span))
            }
            Tok::Uint(v) => {
                self.bump();
                Ok(Expr::new(ExprKind::Number(v as f64), span))
            }
            Tok::Sym('(') => {
                self.bump();
                let inner = self.expr()?;
                self.expect(')')?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                self.bump();
                let next = self.peek().clone();
                if name == "H" && next == Tok::Sym('[') {
                    return self.basis(span);
                }
                if next == Tok::Sym('(') {
                    if let Some(func) = Func::from_name(&name) {
                        return self.call(func, span);
                    }
                    return Err(error_at(
                        self.src,
                        span.start,
                        format!("unknown function `{name}`"),
                        Func::ALL.iter().map(|f| format!("`{}`", f.name())).collect(),
                    ));
                }
                Ok(Expr::new(ExprKind::Ident(name), span))
            }
            _ => Err(self.unexpected(&["number", "identifier", "`H[`", "function call", "`(`", "`-`"])),
        }
    }

    fn basis(&mut self, start: Span) -> Result<Expr, ParseError> {
        self.expect('[')?;
        let mut pairs = Vec::new();
        loop {
            let (mode, _) = self.uint("mode")?;
            let power = if self.peek() == &Tok::Sym(':') {
                self.bump();
                self.uint("power")?.0
            } else {
                1
            };
            pairs.push((mode, power));
            match self.peek() {
                Tok::Sym(',') => {
                    self.bump();
                }
                Tok::Sym(']') => break,
                _ => return Err(self.unexpected(&["`,`", "`:`", "`]`"])),
            }
        }
        let end = self.bump();
        Ok(Expr::new(ExprKind::Basis(pairs), start.join(end)))
    }

    fn call(&mut self, func: Func, start: Span) -> Result<Expr, ParseError> {
        self.expect('(')?;
        let mut args = Vec::new();
        if self.peek() != &Tok::Sym(')') {
            loop {
                args.push(self.expr()?);
                match self.peek() {
                    Tok::Sym(',') => {
                        self.bump();
                    }
                    Tok::Sym(')') => break,
                    _ => return Err(self.unexpected(&["`,`", "`)`"])),
                }
            }
        }
        let end = self.bump();
        let (lo, hi) = func.arity();
        if args.len() < lo || args.len() > hi {
            let want = if lo == hi { format!("{lo}") } else { format!("{lo} to {hi}") };
            return Err(error_at(
                self.src,
                start.start,
                format!("`{}` with {} argument(s)", func.name(), args.len()),
                vec![format!("{want} argument(s)")],
            ));
        }
        Ok(Expr::new(ExprKind::Call(func, args), start.join(end)))
    }
}
