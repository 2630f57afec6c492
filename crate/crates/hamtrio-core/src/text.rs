//! Text form of expressions, shared by the library and the CLI.
//!
//! Grammar: identifiers `u1, u2, ...`; jets `u1x`, `u1xx`, ... or `u1_3`;
//! covector jets `p1_2`, `p1_2x`, `p1_2_4`; any other identifier is a
//! symbolic parameter; operators `+ - * / ^`; `sqrt(...)`; rational
//! literals `p/q` (plain division). `Dx` is reserved for operator context
//! and rejected inside scalar expressions.

use std::fmt;

use crate::expr::Expr;
use crate::sym::{Symbol, Var};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Token {
    Ident(String),
    Int(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Equals,
}

#[derive(Debug, Clone)]
pub struct SpannedToken {
    pub tok: Token,
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone)]
pub struct ParseError {
    pub message: String,
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

impl std::error::Error for ParseError {}

/// Tokenizes source text; `#` starts a comment to end of line.
pub fn tokenize(src: &str) -> Result<Vec<SpannedToken>, ParseError> {
    let mut out = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let mut chars = src.chars().peekable();
    while let Some(&c) = chars.peek() {
        let (tl, tc) = (line, col);
        let mut bump = |chars: &mut std::iter::Peekable<std::str::Chars>| {
            let c = chars.next().unwrap();
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            c
        };
        if c.is_whitespace() {
            bump(&mut chars);
            continue;
        }
        if c == '#' {
            while let Some(&c2) = chars.peek() {
                if c2 == '\n' {
                    break;
                }
                bump(&mut chars);
            }
            continue;
        }
        let tok = if c.is_ascii_digit() {
            let mut s = String::new();
            while let Some(&c2) = chars.peek() {
                if c2.is_ascii_digit() {
                    s.push(bump(&mut chars));
                } else {
                    break;
                }
            }
            Token::Int(s)
        } else if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(&c2) = chars.peek() {
                if c2.is_ascii_alphanumeric() || c2 == '_' {
                    s.push(bump(&mut chars));
                } else {
                    break;
                }
            }
            Token::Ident(s)
        } else {
            let t = match c {
                '+' => Token::Plus,
                '-' => Token::Minus,
                '*' => Token::Star,
                '/' => Token::Slash,
                '^' => Token::Caret,
                '(' => Token::LParen,
                ')' => Token::RParen,
                '[' => Token::LBracket,
                ']' => Token::RBracket,
                ',' => Token::Comma,
                ';' => Token::Semi,
                '=' => Token::Equals,
                _ => {
                    return Err(ParseError {
                        message: format!("unexpected character '{}'", c),
                        line: tl,
                        col: tc,
                    })
                }
            };
            bump(&mut chars);
            t
        };
        out.push(SpannedToken {
            tok,
            line: tl,
            col: tc,
        });
    }
    Ok(out)
}

/// Classifies an identifier as a variable or parameter.
pub fn classify_ident(name: &str) -> Option<Var> {
    if name == "sqrt" || name == "Dx" {
        return None;
    }
    let bytes = name.as_bytes();
    if bytes[0] == b'u' && bytes.len() > 1 && bytes[1].is_ascii_digit() {
        // u<idx> [x+ | _<order>]
        let mut i = 1;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        let idx: usize = name[1..i].parse().ok()?;
        if idx == 0 {
            return None;
        }
        let rest = &name[i..];
        if rest.is_empty() {
            return Some(Var::field(idx - 1));
        }
        if rest.chars().all(|c| c == 'x') {
            return Some(Var::jet(idx - 1, rest.len()));
        }
        if let Some(order) = rest.strip_prefix('_').and_then(|s| s.parse::<usize>().ok()) {
            return Some(Var::jet(idx - 1, order));
        }
        return None;
    }
    if bytes[0] == b'p' && bytes.len() > 1 && bytes[1].is_ascii_digit() {
        // p<slot>_<comp> [x+ | _<order>]
        let mut i = 1;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        let slot: usize = name[1..i].parse().ok()?;
        let rest = &name[i..];
        if slot >= 1 && slot <= 3 {
            if let Some(rest) = rest.strip_prefix('_') {
                let mut j = 0;
                let rb = rest.as_bytes();
                while j < rb.len() && rb[j].is_ascii_digit() {
                    j += 1;
                }
                if j > 0 {
                    let comp: usize = rest[..j].parse().ok()?;
                    let tail = &rest[j..];
                    if comp >= 1 {
                        if tail.is_empty() {
                            return Some(Var::cov(slot - 1, comp - 1, 0));
                        }
                        if tail.chars().all(|c| c == 'x') {
                            return Some(Var::cov(slot - 1, comp - 1, tail.len()));
                        }
                        if let Some(order) =
                            tail.strip_prefix('_').and_then(|s| s.parse::<usize>().ok())
                        {
                            return Some(Var::cov(slot - 1, comp - 1, order));
                        }
                    }
                }
            }
        }
        // Fall through: a parameter like p1 with no underscore.
    }
    Some(Var::param(Symbol::new(name)))
}

pub struct ExprParser<'a> {
    toks: &'a [SpannedToken],
    pos: usize,
}

impl<'a> ExprParser<'a> {
    pub fn new(toks: &'a [SpannedToken]) -> Self {
        ExprParser { toks, pos: 0 }
    }

    pub fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    pub fn pos(&self) -> usize {
        self.pos
    }

    pub fn error_here(&self, msg: &str) -> ParseError {
        let (line, col) = self
            .toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map(|t| (t.line, t.col))
            .unwrap_or((1, 1));
        ParseError {
            message: msg.to_string(),
            line,
            col,
        }
    }

    pub fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    pub fn next_tok(&mut self) -> Option<&Token> {
        let t = self.toks.get(self.pos).map(|t| &t.tok);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    pub fn expect(&mut self, t: &Token, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(t) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error_here(&format!("expected {}", what)))
        }
    }

    /// expr := term (('+'|'-') term)*
    pub fn parse_expr(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.parse_term()?;
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.pos += 1;
                    acc = acc.add(&self.parse_term()?);
                }
                Some(Token::Minus) => {
                    self.pos += 1;
                    acc = acc.sub(&self.parse_term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    /// term := factor (('*'|'/') factor)*
    fn parse_term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.parse_factor()?;
        loop {
            match self.peek() {
                Some(Token::Star) => {
                    self.pos += 1;
                    acc = acc.mul(&self.parse_factor()?);
                }
                Some(Token::Slash) => {
                    self.pos += 1;
                    let rhs = self.parse_factor()?;
                    if rhs.try_is_zero().unwrap_or(false) {
                        return Err(self.error_here("division by zero expression"));
                    }
                    acc = acc.div(&rhs);
                }
                _ => return Ok(acc),
            }
        }
    }

    /// factor := '-'* power
    fn parse_factor(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some(&Token::Minus) {
            self.pos += 1;
            return Ok(self.parse_factor()?.neg());
        }
        self.parse_power()
    }

    /// power := atom ('^' ['-'] integer)?
    fn parse_power(&mut self) -> Result<Expr, ParseError> {
        let base = self.parse_atom()?;
        if self.peek() == Some(&Token::Caret) {
            self.pos += 1;
            let mut neg = false;
            let mut parens = false;
            if self.peek() == Some(&Token::LParen) {
                self.pos += 1;
                parens = true;
            }
            if self.peek() == Some(&Token::Minus) {
                self.pos += 1;
                neg = true;
            }
            let n = match self.next_tok() {
                Some(Token::Int(s)) => s.parse::<i32>().map_err(|_| ()),
                _ => Err(()),
            }
            .map_err(|_| self.error_here("expected integer exponent"))?;
            if parens {
                self.expect(&Token::RParen, "')'")?;
            }
            let n = if neg { -n } else { n };
            if n < 0 && base.try_is_zero().unwrap_or(false) {
                return Err(self.error_here("negative power of zero"));
            }
            return Ok(base.pow(n));
        }
        Ok(base)
    }

    fn parse_atom(&mut self) -> Result<Expr, ParseError> {
        let err = self.error_here("expected expression");
        match self.next_tok().cloned() {
            Some(Token::Int(s)) => {
                let n: i64 = s
                    .parse()
                    .map_err(|_| self.error_here("integer literal too large"))?;
                Ok(Expr::int(n))
            }
            Some(Token::Ident(name)) => {
                if name == "sqrt" {
                    self.expect(&Token::LParen, "'(' after sqrt")?;
                    let inner = self.parse_expr()?;
                    self.expect(&Token::RParen, "')'")?;
                    return Ok(inner.sqrt());
                }
                if name == "Dx" {
                    return Err(self.error_here("Dx is not allowed in scalar expressions"));
                }
                match classify_ident(&name) {
                    Some(v) => Ok(Expr::var(v)),
                    None => Err(self.error_here(&format!("bad identifier '{}'", name))),
                }
            }
            Some(Token::LParen) => {
                let inner = self.parse_expr()?;
                self.expect(&Token::RParen, "')'")?;
                Ok(inner)
            }
            _ => Err(err),
        }
    }
}

/// Parses a standalone scalar expression.
pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let toks = tokenize(src)?;
    let mut p = ExprParser::new(&toks);
    let e = p.parse_expr()?;
    if !p.at_end() {
        return Err(p.error_here("trailing input"));
    }
    Ok(e)
}

/// Prints an expression in the shared grammar. Parsing the output yields
/// an equal expression, so pretty-print of parse of pretty-print is a
/// fixed point.
pub fn pretty(e: &Expr) -> String {
    let r = e.rat();
    if r.den().is_one() {
        pretty_poly(r.num())
    } else if r.num().num_terms() <= 1 {
        format!("{}/({})", pretty_poly(r.num()), pretty_poly(r.den()))
    } else {
        format!("({})/({})", pretty_poly(r.num()), pretty_poly(r.den()))
    }
}

fn pretty_poly(p: &crate::poly::Poly) -> String {
    use num_traits::Signed;
    if p.is_zero() {
        return "0".into();
    }
    let mut out = String::new();
    // Leading monomial first.
    for (i, (m, c)) in p.terms().rev().enumerate() {
        let neg = c.is_negative();
        let abs = c.abs();
        if i == 0 {
            if neg {
                out.push('-');
            }
        } else if neg {
            out.push_str(" - ");
        } else {
            out.push_str(" + ");
        }
        let coeff_one = abs == num_rational::BigRational::from_integer(1.into());
        let mut parts: Vec<String> = Vec::new();
        if !coeff_one || m.is_one() {
            if abs.denom() == &num_bigint::BigInt::from(1) {
                parts.push(format!("{}", abs.numer()));
            } else {
                parts.push(format!("{}/{}", abs.numer(), abs.denom()));
            }
        }
        for (v, e) in m.vars() {
            let vs = pretty_var(v);
            if e == 1 {
                parts.push(vs);
            } else {
                parts.push(format!("{}^{}", vs, e));
            }
        }
        out.push_str(&parts.join("*"));
    }
    out
}

fn pretty_var(v: Var) -> String {
    if let Some(id) = v.as_radical() {
        let arg = crate::expr::radical_arg(id);
        return format!("sqrt({})", pretty(&Expr::from_rat(arg)));
    }
    format!("{}", v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_classify() {
        let e = parse_expr("u1x*u2 + u1*u2x").unwrap();
        let manual = Expr::jet(0, 1)
            .mul(&Expr::field(1))
            .add(&Expr::field(0).mul(&Expr::jet(1, 1)));
        assert_eq!(e, manual);
        let j = parse_expr("u1_3").unwrap();
        assert_eq!(j, Expr::jet(0, 3));
        let c = parse_expr("3/4*c1 + alpha").unwrap();
        assert_eq!(
            c,
            Expr::param("c1").scale(3, 4).add(&Expr::param("alpha"))
        );
    }

    #[test]
    fn parse_powers_and_sqrt() {
        let e = parse_expr("(u2^2 - 2*u1*u2)").unwrap();
        let s = parse_expr("sqrt(u2^2 - 2*u1*u2)").unwrap();
        assert_eq!(e.sqrt(), s);
        let n = parse_expr("u1^-2").unwrap();
        assert_eq!(n, Expr::field(0).pow(-2));
    }

    #[test]
    fn pretty_roundtrip_fixed_point() {
        for src in [
            "u1x*u2 + u1*u2x",
            "(u2 + 1)/u1",
            "sqrt(u2^2 - 2*u1*u2) + 1/2",
            "-u1xx/u1^3 + 9*u1x*u1xx/u1^4",
            "c1*u1 + c2*u2 + c3",
        ] {
            let e = parse_expr(src).unwrap();
            let printed = pretty(&e);
            let reparsed = parse_expr(&printed).unwrap();
            assert_eq!(e, reparsed, "roundtrip failed for {}", src);
            assert_eq!(printed, pretty(&reparsed));
        }
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = parse_expr("u1 + ").unwrap_err();
        assert!(err.line >= 1);
        let err2 = parse_expr("u1 $ u2").unwrap_err();
        assert!(err2.message.contains("unexpected character"));
    }
}
