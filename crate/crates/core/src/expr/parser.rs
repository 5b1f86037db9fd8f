//! Tokenizer and recursive-descent parser for immersion expressions.
//!
//! Grammar (loosest to tightest):
//!
//! ```text
//! list    := expr (';' expr)* [';']
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' exponent)*
//! exponent:= ['-'] INT | '(' ['-'] INT ')'
//! primary := NUMBER | 'pi' | VAR | FUNC '(' expr ')' | '(' expr ')'
//! ```
//!
//! Variables are `u1..u9`, with `u`, `v`, `w` as aliases for the first three.

use super::ast::{BinOp, Expr, ExprKind, Func, Span};
use super::ExprError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    Semi,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(x) => format!("number {x}"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Star => "'*'".into(),
            Tok::Slash => "'/'".into(),
            Tok::Caret => "'^'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Comma => "','".into(),
            Tok::Semi => "';'".into(),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, Span)>, ExprError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let single = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b',' => Some(Tok::Comma),
            b';' => Some(Tok::Semi),
            _ => None,
        };
        if let Some(tok) = single {
            i += 1;
            out.push((tok, Span::new(start, i)));
            continue;
        }
        if c.is_ascii_digit() || c == b'.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text = &src[start..i];
            let value: f64 = text.parse().map_err(|_| ExprError::Lex {
                message: format!("malformed number `{text}`"),
                span: Span::new(start, i),
            })?;
            out.push((Tok::Num(value), Span::new(start, i)));
            continue;
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), Span::new(start, i)));
            continue;
        }
        let ch = src[start..].chars().next().unwrap_or('?');
        return Err(ExprError::Lex {
            message: format!("unexpected character `{ch}`"),
            span: Span::new(start, start + ch.len_utf8()),
        });
    }
    Ok(out)
}

fn variable_index(name: &str) -> Option<usize> {
    match name {
        "u" => Some(0),
        "v" => Some(1),
        "w" => Some(2),
        _ => {
            let digits = name.strip_prefix('u')?;
            let k: usize = digits.parse().ok()?;
            (k >= 1 && !digits.starts_with('0')).then(|| k - 1)
        }
    }
}

struct Parser<'a> {
    toks: &'a [(Tok, Span)],
    pos: usize,
    n: usize,
    src_len: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn span(&self) -> Span {
        self.toks
            .get(self.pos)
            .map(|(_, s)| *s)
            .unwrap_or(Span::new(self.src_len, self.src_len))
    }

    fn bump(&mut self) -> Option<(&'a Tok, Span)> {
        let t = self.toks.get(self.pos).map(|(t, s)| (t, *s));
        self.pos += 1;
        t
    }

    fn error(&self, message: impl Into<String>) -> ExprError {
        ExprError::Parse { message: message.into(), span: self.span() }
    }

    fn unexpected(&self, what: &str) -> ExprError {
        match self.peek() {
            None => self.error(format!("unexpected end of input, expected {what}")),
            Some(t) => self.error(format!("unexpected {}, expected {what}", t.describe())),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<Span, ExprError> {
        if self.peek() == Some(&tok) {
            Ok(self.bump().map(|(_, s)| s).unwrap_or_default())
        } else {
            Err(self.unexpected(what))
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Plus) => BinOp::Add,
                Some(Tok::Minus) => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            let span = lhs.span.join(rhs.span);
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Star) => BinOp::Mul,
                Some(Tok::Slash) => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            let span = lhs.span.join(rhs.span);
            lhs = Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.peek() == Some(&Tok::Minus) {
            let (_, start) = self.bump().expect("peeked");
            let inner = self.unary()?;
            let span = start.join(inner.span);
            return Ok(Expr::new(ExprKind::Neg(Box::new(inner)), span));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let mut base = self.primary()?;
        while self.peek() == Some(&Tok::Caret) {
            self.bump();
            let (k, end) = self.exponent()?;
            let span = base.span.join(end);
            base = Expr::new(ExprKind::Pow(Box::new(base), k), span);
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<(i32, Span), ExprError> {
        let parens = self.peek() == Some(&Tok::LParen);
        if parens {
            self.bump();
        }
        let negative = self.peek() == Some(&Tok::Minus);
        if negative {
            self.bump();
        }
        let (k, mut span) = match self.peek() {
            Some(Tok::Num(x)) if x.fract() == 0.0 && x.abs() <= i32::MAX as f64 => {
                let k = *x as i32;
                let (_, s) = self.bump().expect("peeked");
                (k, s)
            }
            Some(Tok::Num(_)) => return Err(self.error("exponent must be an integer literal")),
            _ => return Err(self.unexpected("an integer exponent")),
        };
        if parens {
            span = span.join(self.expect(Tok::RParen, "')' after exponent")?);
        }
        Ok((if negative { -k } else { k }, span))
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        let span = self.span();
        match self.peek() {
            Some(Tok::Num(x)) => {
                let x = *x;
                self.bump();
                Ok(Expr::new(ExprKind::Const(x), span))
            }
            Some(Tok::LParen) => {
                self.bump();
                let inner = self.expr()?;
                let close = self.expect(Tok::RParen, "')'")?;
                Ok(Expr::new(inner.kind, span.join(close)))
            }
            Some(Tok::Ident(name)) => {
                self.bump();
                if name == "pi" {
                    return Ok(Expr::new(ExprKind::Pi, span));
                }
                if let Some(func) = Func::from_name(name) {
                    self.expect(Tok::LParen, &format!("'(' after `{name}`"))?;
                    let arg = self.expr()?;
                    if self.peek() == Some(&Tok::Comma) {
                        return Err(self.error(format!("`{name}` takes exactly one argument")));
                    }
                    let close = self.expect(Tok::RParen, "')'")?;
                    return Ok(Expr::new(ExprKind::Call(func, Box::new(arg)), span.join(close)));
                }
                match variable_index(name) {
                    Some(i) if i < self.n => Ok(Expr::new(ExprKind::Var(i), span)),
                    Some(i) => Err(ExprError::Parse {
                        message: format!(
                            "variable `{name}` refers to parameter {} but the surface has {}",
                            i + 1,
                            self.n
                        ),
                        span,
                    }),
                    None => Err(ExprError::Parse {
                        message: format!("unknown identifier `{name}`"),
                        span,
                    }),
                }
            }
            _ => Err(self.unexpected("an expression")),
        }
    }
}

/// Parses a single expression over `n` parameters.
pub fn parse_expr(source: &str, n: usize) -> Result<Expr, ExprError> {
    let toks = lex(source)?;
    let mut p = Parser { toks: &toks, pos: 0, n, src_len: source.len() };
    let e = p.expr()?;
    if p.peek().is_some() {
        return Err(p.unexpected("end of input"));
    }
    Ok(e)
}

/// Parses `ambient_dim` semicolon-separated coordinate expressions.
pub fn parse_immersion(source: &str, n: usize, ambient_dim: usize) -> Result<Vec<Expr>, ExprError> {
    let toks = lex(source)?;
    let mut p = Parser { toks: &toks, pos: 0, n, src_len: source.len() };
    let mut out = Vec::new();
    loop {
        if p.peek().is_none() {
            break;
        }
        out.push(p.expr()?);
        match p.peek() {
            None => break,
            Some(Tok::Semi) => {
                p.bump();
            }
            Some(_) => return Err(p.unexpected("an operator, ';' or end of input")),
        }
    }
    if out.len() != ambient_dim {
        return Err(ExprError::Count {
            expected: ambient_dim,
            got: out.len(),
            span: Span::new(0, source.len()),
        });
    }
    Ok(out)
}
