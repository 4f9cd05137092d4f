//! Beta reduction of generated error terms.
//!
//! Only redexes whose argument is a value are contracted, so evaluation
//! order and divergence are unchanged.

use crate::lang::{Expr, E};

/// Upper bound on contractions per call; generated terms need far fewer.
const MAX_STEPS: usize = 10_000;

pub fn is_value(e: &Expr) -> bool {
    match e {
        Expr::Var(_)
        | Expr::Lam(..)
        | Expr::TyLam(..)
        | Expr::RealLit(_)
        | Expr::NatLit(_)
        | Expr::BoolLit(_)
        | Expr::UnitLit
        | Expr::FloatLit(_)
        | Expr::ErrLit(_) => true,
        Expr::Builtin(op, args) => args.len() < op.arity() && args.iter().all(|a| is_value(a)),
        Expr::Fix(inner) => matches!(&**inner, Expr::Lam(..)),
        _ => false,
    }
}

pub fn simplify(e: &E) -> E {
    let mut steps = 0;
    go(e, &mut steps)
}

fn go(e: &E, steps: &mut usize) -> E {
    let out = match &**e {
        Expr::Var(_)
        | Expr::RealLit(_)
        | Expr::NatLit(_)
        | Expr::BoolLit(_)
        | Expr::UnitLit
        | Expr::FloatLit(_)
        | Expr::ErrLit(_)
        | Expr::Bottom(_) => return e.clone(),
        Expr::Lam(x, t, b) => Expr::lam(x.clone(), t.clone(), go(b, steps)),
        Expr::TyLam(x, b) => Expr::tylam(x.clone(), go(b, steps)),
        Expr::Fix(b) => Expr::fix(go(b, steps)),
        Expr::If(c, t, f) => Expr::ite(go(c, steps), go(t, steps), go(f, steps)),
        Expr::RedSeq(c, n, g) => Expr::redseq(go(c, steps), go(n, steps), go(g, steps)),
        Expr::Builtin(op, args) => Expr::op(*op, args.iter().map(|a| go(a, steps)).collect()),
        Expr::App(f, a) => {
            let (f, a) = (go(f, steps), go(a, steps));
            match &*f {
                Expr::Lam(x, _, body) if is_value(&a) && *steps < MAX_STEPS => {
                    *steps += 1;
                    return go(&body.subst(x, &a), steps);
                }
                _ => Expr::app(f, a),
            }
        }
        Expr::TyApp(f, t) => {
            let f = go(f, steps);
            match &*f {
                Expr::TyLam(x, body) if *steps < MAX_STEPS => {
                    *steps += 1;
                    return go(&body.subst_ty(x, t), steps);
                }
                _ => Expr::tyapp(f, t.clone()),
            }
        }
    };
    if *out == **e {
        e.clone()
    } else {
        out
    }
}

/// Convenience for `simplify(apps(f, args))`.
pub fn apply(f: E, args: impl IntoIterator<Item = E>) -> E {
    simplify(&Expr::apps(f, args))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse;

    #[test]
    fn contracts_value_redexes() {
        let e = parse("(app (app (lam (x Real) (lam (xq ErrReal) xq)) y) (err 1/2))").unwrap();
        assert_eq!(simplify(&e).to_string(), "(err 1/2)");
    }

    #[test]
    fn keeps_redexes_with_computations() {
        let e = parse("(app (lam (x Real) 1.5) (sinr y))").unwrap();
        assert_eq!(simplify(&e), e);
    }

    #[test]
    fn instantiates_type_abstractions() {
        let e = parse("(tyapp (tlam X (lam (x X) x)) Real)").unwrap();
        assert_eq!(simplify(&e).to_string(), "(lam (x Real) x)");
    }
}
