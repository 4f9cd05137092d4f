//! S-expression reader for `.ax` programs.

use std::str::FromStr;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

use super::ast::{ErrVal, Expr, Op, Ty, E};
use crate::num::float::{round_rational, RoundMode};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: unknown builtin `{name}`")]
    UnknownBuiltin { line: usize, col: usize, name: String },
}

/// Parsed program plus the byte span of every `redseq` form, in pre-order.
#[derive(Debug, Clone)]
pub struct Parsed {
    pub expr: E,
    pub redseq_spans: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Open,
    Close,
    Atom(String),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    start: usize,
    end: usize,
}

const KEYWORDS: &[&str] = &[
    "lam", "app", "tlam", "tyapp", "fix", "if", "redseq", "float", "real", "nat", "err", "bottom",
    "true", "false", "unit", "inf",
];

fn lex(src: &str) -> Vec<Token> {
    let mut out = Vec::new();
    let bytes = src.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b'(' => {
                out.push(Token { tok: Tok::Open, start: i, end: i + 1 });
                i += 1;
            }
            b')' => {
                out.push(Token { tok: Tok::Close, start: i, end: i + 1 });
                i += 1;
            }
            b';' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            c if c.is_ascii_whitespace() => i += 1,
            _ => {
                let start = i;
                while i < bytes.len()
                    && !bytes[i].is_ascii_whitespace()
                    && !matches!(bytes[i], b'(' | b')' | b';')
                {
                    i += 1;
                }
                out.push(Token {
                    tok: Tok::Atom(src[start..i].to_string()),
                    start,
                    end: i,
                });
            }
        }
    }
    out
}

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'' || c == '^')
        && !KEYWORDS.contains(&s)
        && Op::from_name(s).is_none()
}

/// Exact value of a decimal (`-1.25`, `3e-2`), ratio (`22/7`) or integer token.
pub fn parse_rational(tok: &str) -> Option<BigRational> {
    if let Some((p, q)) = tok.split_once('/') {
        let p = BigInt::from_str(p).ok()?;
        if q.starts_with(['-', '+']) {
            return None;
        }
        let q = BigInt::from_str(q).ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(BigRational::new(p, q));
    }
    let (mantissa, exp) = match tok.find(['e', 'E']) {
        Some(i) => (&tok[..i], i64::from_str(&tok[i + 1..]).ok()?),
        None => (tok, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    if exp.abs() > 100_000 {
        return None;
    }
    let all = format!("{int_part}{frac_part}");
    let mut n = BigInt::from_str(if all.is_empty() { "0" } else { &all }).ok()?;
    if neg {
        n = -n;
    }
    let scale = exp - frac_part.len() as i64;
    let ten = BigInt::from(10u32);
    Some(if scale >= 0 {
        BigRational::from_integer(n * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(n, num_traits::pow(ten, (-scale) as usize))
    })
}

fn parse_float_token(tok: &str) -> Option<f64> {
    match tok {
        "nan" => return Some(f64::NAN),
        "inf" | "+inf" => return Some(f64::INFINITY),
        "-inf" => return Some(f64::NEG_INFINITY),
        _ => {}
    }
    if tok.contains('/') {
        return parse_rational(tok).map(|r| round_rational(&r, RoundMode::Nearest));
    }
    // The standard library parse is correctly rounded and keeps -0.0.
    let x = f64::from_str(tok).ok()?;
    if x.is_finite() {
        Some(x)
    } else {
        // Overlong literal: fall back to exact rounding.
        parse_rational(tok).map(|r| round_rational(&r, RoundMode::Nearest))
    }
}

fn looks_numeric(tok: &str) -> bool {
    let t = tok.strip_prefix('-').unwrap_or(tok);
    t.starts_with(|c: char| c.is_ascii_digit() || c == '.')
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<Token>,
    pos: usize,
    spans: Vec<(usize, usize)>,
}

impl<'a> Parser<'a> {
    fn line_col(&self, offset: usize) -> (usize, usize) {
        let before = &self.src[..offset.min(self.src.len())];
        let line = before.matches('\n').count() + 1;
        let col = before.len() - before.rfind('\n').map(|i| i + 1).unwrap_or(0) + 1;
        (line, col)
    }

    fn err_at(&self, offset: usize, msg: impl Into<String>) -> ParseError {
        let (line, col) = self.line_col(offset);
        ParseError::Syntax { line, col, msg: msg.into() }
    }

    fn here(&self) -> usize {
        self.toks
            .get(self.pos)
            .map(|t| t.start)
            .unwrap_or(self.src.len())
    }

    fn next(&mut self) -> Result<Token, ParseError> {
        let t = self
            .toks
            .get(self.pos)
            .cloned()
            .ok_or_else(|| self.err_at(self.src.len(), "unexpected end of input"))?;
        self.pos += 1;
        Ok(t)
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn expect_open(&mut self) -> Result<(), ParseError> {
        let t = self.next()?;
        match t.tok {
            Tok::Open => Ok(()),
            _ => Err(self.err_at(t.start, "expected `(`")),
        }
    }

    fn expect_close(&mut self) -> Result<usize, ParseError> {
        let t = self.next()?;
        match t.tok {
            Tok::Close => Ok(t.end),
            _ => Err(self.err_at(t.start, "expected `)`")),
        }
    }

    fn atom(&mut self) -> Result<(String, usize), ParseError> {
        let t = self.next()?;
        match t.tok {
            Tok::Atom(s) => Ok((s, t.start)),
            _ => Err(self.err_at(t.start, "expected an atom")),
        }
    }

    fn name(&mut self) -> Result<String, ParseError> {
        let (s, at) = self.atom()?;
        if is_identifier(&s) {
            Ok(s)
        } else {
            Err(self.err_at(at, format!("`{s}` is not a valid name")))
        }
    }

    fn ty(&mut self) -> Result<Ty, ParseError> {
        let t = self.next()?;
        match t.tok {
            Tok::Atom(s) => Ok(match s.as_str() {
                "Real" => Ty::Real,
                "Float64" => Ty::Float64,
                "Nat" => Ty::Nat,
                "Bool" => Ty::Bool,
                "Unit" => Ty::Unit,
                "ErrReal" => Ty::ErrReal,
                _ if is_identifier(&s) => Ty::TyVar(s),
                _ => return Err(self.err_at(t.start, format!("`{s}` is not a type"))),
            }),
            Tok::Open => {
                let (head, at) = self.atom()?;
                match head.as_str() {
                    "->" => {
                        let mut parts = vec![self.ty()?];
                        while self.peek() != Some(&Tok::Close) {
                            parts.push(self.ty()?);
                        }
                        self.expect_close()?;
                        if parts.len() < 2 {
                            return Err(self.err_at(at, "`->` needs at least two types"));
                        }
                        let result = parts.pop().unwrap();
                        Ok(Ty::arrows(parts, result))
                    }
                    "forall" => {
                        let x = self.name()?;
                        let body = self.ty()?;
                        self.expect_close()?;
                        Ok(Ty::forall(x, body))
                    }
                    _ => Err(self.err_at(at, format!("unknown type former `{head}`"))),
                }
            }
            Tok::Close => Err(self.err_at(t.start, "expected a type")),
        }
    }

    fn atom_expr(&self, s: &str, at: usize) -> Result<E, ParseError> {
        match s {
            "true" => return Ok(Arc::new(Expr::BoolLit(true))),
            "false" => return Ok(Arc::new(Expr::BoolLit(false))),
            "unit" => return Ok(Arc::new(Expr::UnitLit)),
            _ => {}
        }
        if let Some(op) = Op::from_name(s) {
            return Ok(Expr::op(op, vec![]));
        }
        if looks_numeric(s) {
            if s.chars().all(|c| c.is_ascii_digit()) {
                let n = BigUint::from_str(s).map_err(|_| self.err_at(at, "bad natural"))?;
                return Ok(Arc::new(Expr::NatLit(n)));
            }
            return parse_rational(s)
                .map(Expr::real)
                .ok_or_else(|| self.err_at(at, format!("malformed number `{s}`")));
        }
        if is_identifier(s) {
            return Ok(Expr::var(s));
        }
        if KEYWORDS.contains(&s) {
            return Err(self.err_at(at, format!("keyword `{s}` used as an expression")));
        }
        let (line, col) = self.line_col(at);
        Err(ParseError::UnknownBuiltin { line, col, name: s.to_string() })
    }

    fn expr(&mut self) -> Result<E, ParseError> {
        let t = self.next()?;
        match t.tok {
            Tok::Atom(s) => self.atom_expr(&s, t.start),
            Tok::Close => Err(self.err_at(t.start, "unexpected `)`")),
            Tok::Open => self.form(t.start),
        }
    }

    fn form(&mut self, open_at: usize) -> Result<E, ParseError> {
        let head_at = self.here();
        let (head, _) = match self.peek() {
            Some(Tok::Atom(_)) => self.atom()?,
            _ => return Err(self.err_at(head_at, "expected a form name")),
        };
        let e = match head.as_str() {
            "lam" => {
                self.expect_open()?;
                let x = self.name()?;
                let ty = self.ty()?;
                self.expect_close()?;
                let body = self.expr()?;
                Expr::lam(x, ty, body)
            }
            "app" => {
                let mut f = self.expr()?;
                let mut n = 0;
                while self.peek() != Some(&Tok::Close) {
                    f = Expr::app(f, self.expr()?);
                    n += 1;
                }
                if n == 0 {
                    return Err(self.err_at(head_at, "`app` needs an argument"));
                }
                f
            }
            "tlam" => {
                let x = self.name()?;
                Expr::tylam(x, self.expr()?)
            }
            "tyapp" => {
                let e = self.expr()?;
                Expr::tyapp(e, self.ty()?)
            }
            "fix" => Expr::fix(self.expr()?),
            "if" => {
                let c = self.expr()?;
                let t = self.expr()?;
                Expr::ite(c, t, self.expr()?)
            }
            "redseq" => {
                let slot = self.spans.len();
                self.spans.push((open_at, open_at));
                let c = self.expr()?;
                let n = self.expr()?;
                let g = self.expr()?;
                let end = self.expect_close()?;
                self.spans[slot].1 = end;
                return Ok(Expr::redseq(c, n, g));
            }
            "float" => {
                let (tok, at) = self.atom()?;
                let x = parse_float_token(&tok)
                    .ok_or_else(|| self.err_at(at, format!("malformed float `{tok}`")))?;
                let bits = if x.is_nan() { f64::NAN.to_bits() } else { x.to_bits() };
                Arc::new(Expr::FloatLit(bits))
            }
            "real" => {
                let (tok, at) = self.atom()?;
                let r = parse_rational(&tok)
                    .ok_or_else(|| self.err_at(at, format!("malformed real `{tok}`")))?;
                Expr::real(r)
            }
            "nat" => {
                let (tok, at) = self.atom()?;
                let n = BigUint::from_str(&tok)
                    .map_err(|_| self.err_at(at, format!("malformed natural `{tok}`")))?;
                Arc::new(Expr::NatLit(n))
            }
            "err" => {
                let (tok, at) = self.atom()?;
                let v = if tok == "inf" {
                    ErrVal::Infinity
                } else {
                    match parse_rational(&tok) {
                        Some(r) if r >= BigRational::zero() => ErrVal::Finite(r),
                        _ => return Err(self.err_at(at, format!("malformed error bound `{tok}`"))),
                    }
                };
                Expr::err(v)
            }
            "bottom" => Arc::new(Expr::Bottom(self.ty()?)),
            _ => {
                let Some(op) = Op::from_name(&head) else {
                    if KEYWORDS.contains(&head.as_str()) {
                        return Err(self.err_at(head_at, format!("`{head}` cannot head a form")));
                    }
                    let (line, col) = self.line_col(head_at);
                    return Err(ParseError::UnknownBuiltin { line, col, name: head });
                };
                let mut args = Vec::new();
                while self.peek() != Some(&Tok::Close) {
                    if self.peek().is_none() {
                        break;
                    }
                    args.push(self.expr()?);
                }
                if args.len() > op.arity() {
                    return Err(self.err_at(
                        head_at,
                        format!("`{}` takes {} arguments, got {}", op, op.arity(), args.len()),
                    ));
                }
                Expr::op(op, args)
            }
        };
        self.expect_close()?;
        Ok(e)
    }
}

pub fn parse_program(src: &str) -> Result<Parsed, ParseError> {
    let mut p = Parser { src, toks: lex(src), pos: 0, spans: Vec::new() };
    if p.toks.is_empty() {
        return Err(p.err_at(0, "empty program"));
    }
    let expr = p.expr()?;
    if p.pos < p.toks.len() {
        return Err(p.err_at(p.here(), "trailing input after expression"));
    }
    Ok(Parsed { expr, redseq_spans: p.spans })
}

pub fn parse(src: &str) -> Result<E, ParseError> {
    parse_program(src).map(|p| p.expr)
}

pub fn parse_type(src: &str) -> Result<Ty, ParseError> {
    let mut p = Parser { src, toks: lex(src), pos: 0, spans: Vec::new() };
    let t = p.ty()?;
    if p.pos < p.toks.len() {
        return Err(p.err_at(p.here(), "trailing input after type"));
    }
    Ok(t)
}

/// `n/1` helper for callers building literals from integers.
pub fn rat(n: i64, d: i64) -> BigRational {
    if d == 1 {
        BigRational::from_integer(n.into())
    } else {
        BigRational::new(n.into(), d.into())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_lambda() {
        let e = parse("(lam (x Real) x)").unwrap();
        assert_eq!(*e, Expr::Lam("x".into(), Ty::Real, Expr::var("x")));
    }

    #[test]
    fn application_of_builtin_is_folded() {
        let e = parse("(app sinr 1/2)").unwrap();
        assert_eq!(*e, Expr::Builtin(Op::SinR, vec![Expr::real(rat(1, 2))]));
    }

    #[test]
    fn redseq_spans_are_recorded() {
        let src = "(redseq +r 8 (lam (i Nat) (nat2real i)))";
        let p = parse_program(src).unwrap();
        let Expr::RedSeq(c, n, _) = &*p.expr else { panic!() };
        assert_eq!(**c, Expr::Builtin(Op::AddR, vec![]));
        assert_eq!(**n, Expr::NatLit(8u32.into()));
        assert_eq!(p.redseq_spans, vec![(0, src.len())]);
    }

    #[test]
    fn numbers() {
        assert_eq!(parse_rational("3.25"), Some(rat(13, 4)));
        assert_eq!(parse_rational("-1e-2"), Some(rat(-1, 100)));
        assert_eq!(parse_rational("22/7"), Some(rat(22, 7)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(*parse("5").unwrap(), Expr::NatLit(5u32.into()));
        assert_eq!(*parse("5.0").unwrap(), Expr::RealLit(rat(5, 1)));
        assert_eq!(*parse("(float 0.1)").unwrap(), Expr::FloatLit(0.1f64.to_bits()));
        assert_eq!(*parse("(err inf)").unwrap(), Expr::ErrLit(ErrVal::Infinity));
    }

    #[test]
    fn errors_carry_positions() {
        match parse("(lam (x Real)\n  (frob x))") {
            Err(ParseError::UnknownBuiltin { line: 2, col: 4, name }) => assert_eq!(name, "frob"),
            other => panic!("{other:?}"),
        }
        match parse("(if true 1") {
            Err(ParseError::Syntax { .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(parse("(+r 1.0 2.0 3.0)").is_err());
        assert!(parse("(err -1)").is_err());
    }

    #[test]
    fn types() {
        let t = parse_type("(forall X (-> X X X))").unwrap();
        assert_eq!(
            t,
            Ty::forall("X", Ty::arrow(Ty::var("X"), Ty::arrow(Ty::var("X"), Ty::var("X"))))
        );
    }
}
