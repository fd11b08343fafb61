use std::sync::Arc;

use super::{Expr, Func, ParseError, Symbols};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Int(i64),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    End,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(src: &'a str) -> Result<Vec<(Tok, usize)>, ParseError> {
        let mut lx = Lexer { src: src.as_bytes(), pos: 0 };
        let mut out = Vec::new();
        loop {
            let (tok, at) = lx.next()?;
            let end = tok == Tok::End;
            out.push((tok, at));
            if end {
                return Ok(out);
            }
        }
    }

    fn next(&mut self) -> Result<(Tok, usize), ParseError> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(&c) = self.src.get(self.pos) else {
            return Ok((Tok::End, start));
        };
        let simple = match c {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(t) = simple {
            self.pos += 1;
            return Ok((t, start));
        }
        if c.is_ascii_alphabetic() {
            while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
                self.pos += 1;
            }
            let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
            return Ok((Tok::Ident(name.to_string()), start));
        }
        if c.is_ascii_digit() || c == b'.' {
            return self.number(start);
        }
        Err(ParseError::Syntax { offset: start, message: format!("unexpected character `{}`", c as char) })
    }

    fn number(&mut self, start: usize) -> Result<(Tok, usize), ParseError> {
        let digits = |lx: &mut Self| {
            let s = lx.pos;
            while lx.pos < lx.src.len() && lx.src[lx.pos].is_ascii_digit() {
                lx.pos += 1;
            }
            lx.pos - s
        };
        let mut n = digits(self);
        let mut integral = true;
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            integral = false;
            n += digits(self);
        }
        if n == 0 {
            return Err(ParseError::Syntax { offset: start, message: "malformed number".into() });
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = save;
            } else {
                integral = false;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        if self.src.get(self.pos).is_some_and(|c| c.is_ascii_alphabetic() || *c == b'_') {
            return Err(ParseError::Syntax { offset: self.pos, message: "name directly after number".into() });
        }
        if integral {
            if let Ok(k) = text.parse::<i64>() {
                return Ok((Tok::Int(k), start));
            }
        }
        let x: f64 = text
            .parse()
            .map_err(|_| ParseError::Syntax { offset: start, message: format!("malformed number `{text}`") })?;
        Ok((Tok::Num(x), start))
    }
}

struct Parser<'s> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    symbols: &'s Symbols,
}

/// Parses `src` against the given symbol table.
///
/// ```text
/// expr  := term (('+' | '-') term)*
/// term  := unary (('*' | '/') unary)*
/// unary := '-' unary | power
/// power := atom ('^' signed-integer)?
/// atom  := number | name | name '(' expr ')' | '(' expr ')'
/// ```
pub fn parse(src: &str, symbols: &Symbols) -> Result<Expr, ParseError> {
    if src.trim().is_empty() {
        return Err(ParseError::Syntax { offset: 0, message: "empty expression".into() });
    }
    let toks = Lexer::tokens(src)?;
    let mut p = Parser { toks, pos: 0, symbols };
    let e = p.expr()?;
    match p.peek() {
        Tok::End => Ok(e),
        t => Err(p.error(format!("unexpected {}", describe(t)))),
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(x) => format!("number {x}"),
        Tok::Int(k) => format!("number {k}"),
        Tok::Ident(s) => format!("name `{s}`"),
        Tok::Plus => "`+`".into(),
        Tok::Minus => "`-`".into(),
        Tok::Star => "`*`".into(),
        Tok::Slash => "`/`".into(),
        Tok::Caret => "`^`".into(),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Comma => "`,`".into(),
        Tok::End => "end of input".into(),
    }
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if t.0 != Tok::End {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: String) -> ParseError {
        ParseError::Syntax { offset: self.offset(), message }
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!("expected {}, found {}", describe(&want), describe(self.peek()))))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    lhs = Expr::Add(Arc::new(lhs), Arc::new(self.term()?));
                }
                Tok::Minus => {
                    self.bump();
                    lhs = Expr::Sub(Arc::new(lhs), Arc::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    lhs = Expr::Mul(Arc::new(lhs), Arc::new(self.unary()?));
                }
                Tok::Slash => {
                    self.bump();
                    lhs = Expr::Div(Arc::new(lhs), Arc::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            // `-2` is a negative literal, `-2^2` and `-(2)` are negations
            let literal = match self.peek() {
                Tok::Num(x) => Some(*x),
                Tok::Int(k) => Some(*k as f64),
                _ => None,
            };
            if let Some(x) = literal {
                if self.toks.get(self.pos + 1).map(|t| &t.0) != Some(&Tok::Caret) {
                    self.bump();
                    return Ok(Expr::Real(-x));
                }
            }
            return Ok(Expr::Neg(Arc::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        self.bump();
        let negative = match self.peek() {
            Tok::Minus => {
                self.bump();
                true
            }
            Tok::Plus => {
                self.bump();
                false
            }
            _ => false,
        };
        let at = self.offset();
        match self.bump().0 {
            Tok::Int(k) => {
                let k = if negative { -k } else { k };
                let k = i32::try_from(k).map_err(|_| ParseError::Syntax { offset: at, message: "exponent out of range".into() })?;
                if *self.peek() == Tok::Caret {
                    return Err(self.error("chained `^` needs parentheses".into()));
                }
                Ok(Expr::Pow(Arc::new(base), k))
            }
            t => Err(ParseError::Syntax { offset: at, message: format!("exponent must be an integer, found {}", describe(&t)) }),
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let (tok, at) = self.bump();
        match tok {
            Tok::Num(x) => Ok(Expr::Real(x)),
            Tok::Int(k) => Ok(Expr::Real(k as f64)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(name) => self.name(name, at),
            t => Err(ParseError::Syntax { offset: at, message: format!("expected a value, found {}", describe(&t)) }),
        }
    }

    fn name(&mut self, name: String, at: usize) -> Result<Expr, ParseError> {
        let called = *self.peek() == Tok::LParen;
        if let Some(i) = self.symbols.coord_index(&name) {
            if called {
                return Err(self.error(format!("coordinate `{name}` cannot be called")));
            }
            return Ok(Expr::Coord(i));
        }
        if self.symbols.is_constant(&name) {
            if called {
                return Err(self.error(format!("constant `{name}` cannot be called")));
            }
            return Ok(Expr::Const(name));
        }
        let Some(func) = Func::from_name(&name) else {
            return Err(ParseError::UnknownName { name, offset: at });
        };
        if !called {
            return Err(self.error(format!("function `{name}` needs a parenthesized argument")));
        }
        self.bump();
        if *self.peek() == Tok::RParen {
            return Err(ParseError::Arity { name, offset: at, expected: 1, got: 0 });
        }
        let arg = self.expr()?;
        if *self.peek() == Tok::Comma {
            let mut got = 1;
            while *self.peek() == Tok::Comma {
                self.bump();
                self.expr()?;
                got += 1;
            }
            return Err(ParseError::Arity { name, offset: at, expected: 1, got });
        }
        self.expect(Tok::RParen)?;
        Ok(Expr::Call(func, Arc::new(arg)))
    }
}
