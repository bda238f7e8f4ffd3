//! Term-list DSL for small polynomials, e.g.
//! `f(x,y) = -1*x^2 + 1*lambda*x + 1*y`.
//!
//! One definition per line; `#` starts a comment. Coefficients are
//! integers, decimals or `p/q`. Identifiers other than the arguments must
//! be parameter names.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::Rational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

/// `name(args) = sum of terms`. Exponent vectors run over `args` then the
/// parameter names.
#[derive(Clone, Debug, PartialEq)]
pub struct Definition {
    pub name: String,
    pub args: Vec<String>,
    pub params: Vec<String>,
    pub terms: Vec<(Vec<u32>, Rational)>,
}

impl Definition {
    pub fn coeff(&self, exps: &[u32]) -> Rational {
        self.terms.iter().filter(|(e, _)| e == exps).map(|(_, c)| c.clone()).fold(Rational::zero(), |a, b| a + b)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Num(Rational),
    Sym(char),
}

fn tokenize(line: &str, lno: usize) -> Result<Vec<(Tok, usize)>, ParseError> {
    let err = |column: usize, message: String| ParseError { line: lno, column, message };
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c == '#' {
            break;
        } else if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), col));
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            let value = parse_decimal(&text).ok_or_else(|| err(col, format!("bad number `{text}`")))?;
            out.push((Tok::Num(value), col));
        } else if "+-*/^()=,".contains(c) {
            out.push((Tok::Sym(c), col));
            i += 1;
        } else {
            return Err(err(col, format!("unexpected character `{c}`")));
        }
    }
    Ok(out)
}

fn parse_decimal(text: &str) -> Option<Rational> {
    let (int, frac) = text.split_once('.').unwrap_or((text, ""));
    if int.is_empty() && frac.is_empty() || frac.contains('.') {
        return None;
    }
    let digits = format!("{int}{frac}");
    let num: BigInt = digits.parse().ok()?;
    let den = num_traits::pow(BigInt::from(10), frac.len());
    Some(Rational::new(num, den))
}

struct Cursor<'a> {
    toks: &'a [(Tok, usize)],
    pos: usize,
    line: usize,
    end: usize,
}

impl Cursor<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn column(&self) -> usize {
        self.toks.get(self.pos).map(|t| t.1).unwrap_or(self.end)
    }

    fn err(&self, message: impl Into<String>) -> ParseError {
        ParseError { line: self.line, column: self.column(), message: message.into() }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected `{c}`")))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.err("expected identifier")),
        }
    }

    fn integer(&mut self) -> Result<u32, ParseError> {
        match self.peek() {
            Some(Tok::Num(n)) if n.is_integer() => {
                let v = n.to_integer().to_string().parse().map_err(|_| self.err("exponent too large"))?;
                self.pos += 1;
                Ok(v)
            }
            _ => Err(self.err("expected integer exponent")),
        }
    }
}

fn parse_line(line: &str, lno: usize, params: &[&str]) -> Result<Option<Definition>, ParseError> {
    let toks = tokenize(line, lno)?;
    if toks.is_empty() {
        return Ok(None);
    }
    let mut cur = Cursor { toks: &toks, pos: 0, line: lno, end: line.chars().count() + 1 };
    let name = cur.ident()?;
    cur.expect('(')?;
    let mut args = vec![cur.ident()?];
    while cur.peek() == Some(&Tok::Sym(',')) {
        cur.pos += 1;
        args.push(cur.ident()?);
    }
    cur.expect(')')?;
    cur.expect('=')?;
    for (i, a) in args.iter().enumerate() {
        if params.contains(&a.as_str()) || args[..i].contains(a) {
            return Err(ParseError { line: lno, column: 1, message: format!("argument `{a}` repeated or shadows a parameter") });
        }
    }
    let vars: Vec<String> = args.iter().cloned().chain(params.iter().map(|p| p.to_string())).collect();
    let mut terms: Vec<(Vec<u32>, Rational)> = Vec::new();
    let mut first = true;
    loop {
        let mut sign = Rational::one();
        match cur.peek() {
            Some(Tok::Sym('+')) if !first => cur.pos += 1,
            Some(Tok::Sym('-')) => {
                cur.pos += 1;
                sign = -sign;
            }
            None if first => return Err(cur.err("empty right-hand side")),
            _ if first => {}
            _ => return Err(cur.err("expected `+` or `-`")),
        }
        first = false;
        let mut coeff = sign;
        let mut exps = vec![0u32; vars.len()];
        loop {
            match cur.peek().cloned() {
                Some(Tok::Num(n)) => {
                    cur.pos += 1;
                    let mut value = n;
                    if cur.peek() == Some(&Tok::Sym('/')) {
                        cur.pos += 1;
                        match cur.peek().cloned() {
                            Some(Tok::Num(d)) if !d.is_zero() => {
                                cur.pos += 1;
                                value /= d;
                            }
                            _ => return Err(cur.err("expected nonzero denominator")),
                        }
                    }
                    coeff *= value;
                }
                Some(Tok::Ident(id)) => {
                    let Some(k) = vars.iter().position(|v| *v == id) else {
                        return Err(cur.err(format!("unknown variable `{id}`")));
                    };
                    cur.pos += 1;
                    let mut e = 1;
                    if cur.peek() == Some(&Tok::Sym('^')) {
                        cur.pos += 1;
                        e = cur.integer()?;
                    }
                    exps[k] += e;
                }
                _ => return Err(cur.err("expected number or variable")),
            }
            if cur.peek() == Some(&Tok::Sym('*')) {
                cur.pos += 1;
            } else {
                break;
            }
        }
        match terms.iter_mut().find(|t| t.0 == exps) {
            Some(t) => t.1 += coeff,
            None => terms.push((exps, coeff)),
        }
        if cur.peek().is_none() {
            break;
        }
    }
    terms.retain(|t| !t.1.is_zero());
    Ok(Some(Definition { name, args, params: params.iter().map(|p| p.to_string()).collect(), terms }))
}

/// Parses every non-empty line of `src`.
pub fn parse_definitions(src: &str, params: &[&str]) -> Result<Vec<Definition>, ParseError> {
    let mut out = Vec::new();
    for (i, line) in src.lines().enumerate() {
        if let Some(d) = parse_line(line, i + 1, params)? {
            out.push(d);
        }
    }
    Ok(out)
}

/// The definition named `name`, required to take `arity` arguments.
pub fn find<'a>(defs: &'a [Definition], name: &str, arity: usize) -> Result<&'a Definition, ParseError> {
    let d = defs
        .iter()
        .find(|d| d.name == name)
        .ok_or_else(|| ParseError { line: 0, column: 0, message: format!("missing definition of `{name}`") })?;
    if d.args.len() != arity {
        return Err(ParseError { line: 0, column: 0, message: format!("`{name}` takes {arity} arguments") });
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Scalar;

    #[test]
    fn parses_case_one() {
        let d = parse_definitions("f(x,y) = -1*x^2 + 1*lambda*x + 1*y\ng(y,x) = -y + x # comment", &["lambda"]).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d[0].coeff(&[2, 0, 0]), Rational::from_i64(-1));
        assert_eq!(d[0].coeff(&[1, 0, 1]), Rational::from_i64(1));
        assert_eq!(d[1].coeff(&[1, 0, 0]), Rational::from_i64(-1));
    }

    #[test]
    fn fractions_and_decimals() {
        let d = parse_definitions("h(u) = 1/3*u + 0.25*u^2 - 2*u*u", &[]).unwrap();
        assert_eq!(d[0].coeff(&[1]), Rational::from_ratio(1, 3));
        assert_eq!(d[0].coeff(&[2]), Rational::from_ratio(-7, 4));
    }

    #[test]
    fn errors_carry_position() {
        let e = parse_definitions("f(x,y) = 1*x\nf(x,y) = 2*z", &[]).unwrap_err();
        assert_eq!((e.line, e.column), (2, 12));
        let e = parse_definitions("f(x) = 1 $ x", &[]).unwrap_err();
        assert_eq!((e.line, e.column), (1, 10));
        assert!(parse_definitions("f(x) = ", &[]).is_err());
    }
}
