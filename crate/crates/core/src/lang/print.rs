//! Printer emitting the same grammar the reader accepts.

use std::fmt;

use num_rational::BigRational;
use num_traits::One;

use super::ast::{Expr, Ty};

pub fn real_literal(r: &BigRational) -> String {
    if r.denom().is_one() {
        format!("{}.0", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn float_literal(x: f64) -> String {
    let body = if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        // Debug gives the shortest string that reads back to the same bits.
        format!("{x:?}")
    };
    format!("(float {body})")
}

impl fmt::Display for Ty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ty::Real => f.write_str("Real"),
            Ty::Float64 => f.write_str("Float64"),
            Ty::Nat => f.write_str("Nat"),
            Ty::Bool => f.write_str("Bool"),
            Ty::Unit => f.write_str("Unit"),
            Ty::ErrReal => f.write_str("ErrReal"),
            Ty::TyVar(n) => f.write_str(n),
            Ty::Forall(x, b) => write!(f, "(forall {x} {b})"),
            Ty::Arrow(..) => {
                f.write_str("(->")?;
                let mut t = self;
                while let Ty::Arrow(a, b) = t {
                    write!(f, " {a}")?;
                    t = b;
                }
                write!(f, " {t})")
            }
        }
    }
}

enum Doc {
    Atom(String),
    List(Vec<Doc>),
}

impl Doc {
    fn list(items: Vec<Doc>) -> Doc {
        Doc::List(items)
    }

    fn flat(&self, out: &mut String) {
        match self {
            Doc::Atom(s) => out.push_str(s),
            Doc::List(items) => {
                out.push('(');
                for (i, d) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(' ');
                    }
                    d.flat(out);
                }
                out.push(')');
            }
        }
    }

    fn flat_len(&self) -> usize {
        match self {
            Doc::Atom(s) => s.len(),
            Doc::List(items) => {
                2 + items.iter().map(Doc::flat_len).sum::<usize>() + items.len().saturating_sub(1)
            }
        }
    }

    fn pretty(&self, indent: usize, width: usize, out: &mut String) {
        if indent + self.flat_len() <= width {
            return self.flat(out);
        }
        let Doc::List(items) = self else {
            return self.flat(out);
        };
        // The head and a short first operand (a name or binder) share the
        // opening line.
        out.push('(');
        items[0].flat(out);
        let mut rest = &items[1..];
        if let Some(first) = rest.first() {
            if first.flat_len() < 24 {
                out.push(' ');
                first.flat(out);
                rest = &rest[1..];
            }
        }
        for d in rest {
            out.push('\n');
            out.push_str(&" ".repeat(indent + 2));
            d.pretty(indent + 2, width, out);
        }
        out.push(')');
    }
}

fn ty_doc(t: &Ty) -> Doc {
    Doc::Atom(t.to_string())
}

fn doc(e: &Expr) -> Doc {
    let a = |s: &str| Doc::Atom(s.to_string());
    match e {
        Expr::Var(n) => a(n),
        Expr::Lam(x, t, b) => Doc::list(vec![
            a("lam"),
            Doc::list(vec![a(x), ty_doc(t)]),
            doc(b),
        ]),
        Expr::App(f, x) => Doc::list(vec![a("app"), doc(f), doc(x)]),
        Expr::TyLam(x, b) => Doc::list(vec![a("tlam"), a(x), doc(b)]),
        Expr::TyApp(b, t) => Doc::list(vec![a("tyapp"), doc(b), ty_doc(t)]),
        Expr::Fix(b) => Doc::list(vec![a("fix"), doc(b)]),
        Expr::If(c, t, f) => Doc::list(vec![a("if"), doc(c), doc(t), doc(f)]),
        Expr::RedSeq(c, n, g) => Doc::list(vec![a("redseq"), doc(c), doc(n), doc(g)]),
        Expr::RealLit(r) => Doc::Atom(real_literal(r)),
        Expr::NatLit(n) => Doc::Atom(n.to_string()),
        Expr::BoolLit(b) => a(if *b { "true" } else { "false" }),
        Expr::UnitLit => a("unit"),
        Expr::FloatLit(bits) => Doc::Atom(float_literal(f64::from_bits(*bits))),
        Expr::ErrLit(v) => Doc::Atom(format!("(err {v})")),
        Expr::Builtin(op, args) if args.is_empty() => a(op.name()),
        Expr::Builtin(op, args) => {
            let mut items = vec![a(op.name())];
            items.extend(args.iter().map(|x| doc(x)));
            Doc::list(items)
        }
        Expr::Bottom(t) => Doc::list(vec![a("bottom"), ty_doc(t)]),
    }
}

/// Single-line rendering.
pub fn print(e: &Expr) -> String {
    let mut out = String::new();
    doc(e).flat(&mut out);
    out
}

/// Multi-line rendering broken at `width` columns.
pub fn pretty(e: &Expr, width: usize) -> String {
    let mut out = String::new();
    doc(e).pretty(0, width, &mut out);
    out
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse::parse;

    #[test]
    fn literals_print_unambiguously() {
        for src in [
            "(lam (x Real) (+r x 1/3))",
            "(+f (float 0.1) (float -0.0))",
            "(+q (err 0) (err inf))",
            "(redseq +n 8 (lam (i Nat) i))",
            "(tyapp (tlam X (lam (x X) x)) (-> Real Real))",
            "(app (bottom (-> Real Real)) 2.0)",
        ] {
            let e = parse(src).unwrap();
            assert_eq!(print(&e), src);
        }
    }

    #[test]
    fn pretty_output_reparses() {
        let src = "(lam (x Real) (lam (xq ErrReal) (+q (fperr+ x xq (sinr x) (+q xq (dr x (sinr x)))) (fperrsin x (+q xq (err 1/1000))))))";
        let e = parse(src).unwrap();
        let p = pretty(&e, 40);
        assert!(p.contains('\n'));
        assert_eq!(parse(&p).unwrap(), e);
    }
}
