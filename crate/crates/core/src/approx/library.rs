//! Samplers for triples `(e, a, q)` with `e ∈ appr(q, a)` by construction.
//!
//! Function families draw from a small library of closed terms whose error
//! expressions are known bounds.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::Rng;

use super::{err_name, plus_name, zero_name, ApproxTy, Triple};
use crate::lang::{ErrVal, Expr, Op, Ty, E};
use crate::num::float::{f64_to_rational, round_rational, RoundMode};
use crate::sample::{self, TrialRng};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("no sampler for members of {0}")]
pub struct NoSampler(pub String);

fn err_lit(r: BigRational) -> E {
    Expr::err(ErrVal::Finite(r))
}

fn nat_lit(n: &BigUint) -> E {
    std::sync::Arc::new(Expr::NatLit(n.clone()))
}

fn triple(exact: E, approx: E, err: E) -> Triple {
    Triple { exact, approx, err }
}

/// Float member: snapped, at its exact rounding distance, or perturbed within
/// a sampled error. Occasionally the error is infinite and the float
/// unrelated.
pub fn fl_member(rng: &mut TrialRng) -> Triple {
    let e = sample::real(rng);
    match rng.gen_range(0..32) {
        0 => {
            let other = round_rational(&sample::real(rng), RoundMode::Nearest);
            triple(Expr::real(e), Expr::float(other), Expr::err(ErrVal::Infinity))
        }
        1..=10 => {
            let (e, a, _) = sample::float_near(rng, &e, &BigRational::zero());
            triple(Expr::real(e), Expr::float(a), Expr::err_zero())
        }
        11..=18 => {
            let a = round_rational(&e, RoundMode::Nearest);
            let d = (&e - f64_to_rational(a).expect("finite")).abs();
            triple(Expr::real(e), Expr::float(a), err_lit(d))
        }
        _ => {
            let q = sample::err(rng);
            let (e, a, d) = sample::float_near(rng, &e, &q);
            triple(Expr::real(e), Expr::float(a), err_lit(q.max(d)))
        }
    }
}

pub fn nat_member(rng: &mut TrialRng) -> Triple {
    let e = sample::nat(rng);
    let q = if rng.gen_bool(0.5) { BigUint::zero() } else { BigUint::from(rng.gen_range(1u32..=3)) };
    let a = sample::nat_near(rng, &e, &q);
    triple(nat_lit(&e), nat_lit(&a), nat_lit(&q))
}

pub fn bool_member(rng: &mut TrialRng) -> Triple {
    let e = rng.gen_bool(0.5);
    let (a, q) = if rng.gen_bool(0.75) { (e, 0) } else { (rng.gen_bool(0.5), 1) };
    let lit = |b| std::sync::Arc::new(Expr::BoolLit(b));
    triple(lit(e), lit(a), err_lit(BigRational::from_integer(q.into())))
}

/// `(lam (s E) body_e)`, `(lam (s A) body_a)` and `(lam (s E) (lam (s^q Q) body_q))`.
fn lift(dom: &ApproxTy, body: Triple) -> Triple {
    triple(
        Expr::lam("s", dom.exact_ty(), body.exact),
        Expr::lam("s", dom.approx_ty(), body.approx),
        Expr::lam("s", dom.exact_ty(), Expr::lam("s^q", dom.err_ty(), body.err)),
    )
}

fn s() -> E {
    Expr::var("s")
}

fn sq() -> E {
    Expr::var("s^q")
}

/// Constant float, its rounding and the rounding distance.
fn fl_constant(rng: &mut TrialRng) -> (E, E, E) {
    let c = sample::real(rng);
    let f = round_rational(&c, RoundMode::Nearest);
    let d = (&c - f64_to_rational(f).expect("finite")).abs();
    (Expr::real(c), Expr::float(f), err_lit(d))
}

fn fl_to_fl(rng: &mut TrialRng) -> Triple {
    let fl = ApproxTy::FlBase;
    let un = |r: Op, f: Op, q: E| triple(Expr::op(r, vec![s()]), Expr::op(f, vec![s()]), q);
    let body = match rng.gen_range(0..7) {
        0 => triple(s(), s(), sq()),
        1 => triple(
            Expr::op(Op::SubR, vec![Expr::real_int(0), s()]),
            Expr::op(Op::SubF, vec![Expr::float(0.0), s()]),
            sq(),
        ),
        2 => un(Op::AbsR, Op::AbsF, sq()),
        3 => un(Op::SinR, Op::SinF, Expr::op(Op::FpErrSin, vec![s(), sq()])),
        4 | 5 => {
            let (ce, ca, cq) = fl_constant(rng);
            let (r, f, q) = if rng.gen_bool(0.5) {
                (Op::AddR, Op::AddF, Op::FpErrAdd)
            } else {
                (Op::MulR, Op::MulF, Op::FpErrMul)
            };
            triple(
                Expr::op(r, vec![s(), ce.clone()]),
                Expr::op(f, vec![s(), ca]),
                Expr::op(q, vec![s(), sq(), ce, cq]),
            )
        }
        _ => return constant(&fl, &fl, rng).expect("floats have samplers"),
    };
    lift(&fl, body)
}

fn nat_to_nat(rng: &mut TrialRng) -> Triple {
    let n = ApproxTy::NatBase;
    let body = match rng.gen_range(0..4) {
        0 => triple(s(), s(), sq()),
        1 => {
            let k = Expr::nat(rng.gen_range(0..=5));
            triple(
                Expr::op(Op::AddN, vec![s(), k.clone()]),
                Expr::op(Op::AddN, vec![s(), k]),
                sq(),
            )
        }
        2 => triple(
            Expr::op(Op::AddN, vec![s(), s()]),
            Expr::op(Op::AddN, vec![s(), s()]),
            Expr::op(Op::AddN, vec![sq(), sq()]),
        ),
        _ => return constant(&n, &n, rng).expect("naturals have samplers"),
    };
    lift(&n, body)
}

fn nat_to_fl(rng: &mut TrialRng) -> Triple {
    if rng.gen_bool(0.25) {
        return constant(&ApproxTy::NatBase, &ApproxTy::FlBase, rng).expect("floats have samplers");
    }
    lift(
        &ApproxTy::NatBase,
        triple(
            Expr::op(Op::NatToReal, vec![s()]),
            Expr::op(Op::NatToFloat, vec![s()]),
            Expr::op(Op::FpErrNatToFloat, vec![s(), sq()]),
        ),
    )
}

/// Binary float operations, curried.
fn fl_binary(rng: &mut TrialRng) -> Triple {
    let (r, f, q) = match rng.gen_range(0..4) {
        0 => (Op::AddR, Op::AddF, Op::FpErrAdd),
        1 => (Op::SubR, Op::SubF, Op::FpErrSub),
        2 => (Op::MulR, Op::MulF, Op::FpErrMul),
        _ => {
            // First projection.
            let fl = ApproxTy::FlBase;
            let inner = lift(&fl, triple(Expr::var("t"), Expr::var("t"), Expr::var("t^q")));
            return rename_outer(lift(&fl, inner));
        }
    };
    let (t, tq) = (Expr::var("t"), Expr::var("t^q"));
    let inner = triple(
        Expr::op(r, vec![t.clone(), s()]),
        Expr::op(f, vec![t.clone(), s()]),
        Expr::op(q, vec![t, tq, s(), sq()]),
    );
    rename_outer(lift(&ApproxTy::FlBase, lift(&ApproxTy::FlBase, inner)))
}

/// `lift(lift(body))` binds `s` twice; the outer binder becomes `t`.
fn rename_outer(t: Triple) -> Triple {
    let rename = |e: &E, err: bool| -> E {
        match &**e {
            Expr::Lam(x, ty, body) if x == "s" => {
                if err {
                    match &**body {
                        Expr::Lam(xq, tyq, inner) if xq == "s^q" => {
                            Expr::lam("t", ty.clone(), Expr::lam("t^q", tyq.clone(), inner.clone()))
                        }
                        _ => e.clone(),
                    }
                } else {
                    Expr::lam("t", ty.clone(), body.clone())
                }
            }
            _ => e.clone(),
        }
    };
    triple(rename(&t.exact, false), rename(&t.approx, false), rename(&t.err, true))
}

/// Function ignoring its argument.
fn constant(dom: &ApproxTy, cod: &ApproxTy, rng: &mut TrialRng) -> Result<Triple, NoSampler> {
    let c = sample_member(cod, rng)?;
    Ok(lift(dom, c))
}

/// Draws a member of `fam`.
pub fn sample_member(fam: &ApproxTy, rng: &mut TrialRng) -> Result<Triple, NoSampler> {
    use ApproxTy::*;
    Ok(match fam {
        FlBase => fl_member(rng),
        NatBase => nat_member(rng),
        BoolBase => bool_member(rng),
        Pi(d, c) => match (&**d, &**c) {
            (FlBase, FlBase) => fl_to_fl(rng),
            (NatBase, NatBase) => nat_to_nat(rng),
            (NatBase, FlBase) => nat_to_fl(rng),
            (FlBase, Pi(d2, c2)) if **d2 == FlBase && **c2 == FlBase && rng.gen_bool(0.75) => fl_binary(rng),
            (Pi(d1, c1), _) if c1 == c && rng.gen_bool(0.5) => {
                // Apply the argument to a sampled point.
                let x = sample_member(d1, rng)?;
                let f = Expr::var("s");
                triple(
                    Expr::lam("s", d.exact_ty(), Expr::app(f.clone(), x.exact.clone())),
                    Expr::lam("s", d.approx_ty(), Expr::app(f, x.approx)),
                    Expr::lam(
                        "s",
                        d.exact_ty(),
                        Expr::lam("s^q", d.err_ty(), Expr::apps(sq(), [x.exact, x.err])),
                    ),
                )
            }
            _ if d == c && rng.gen_bool(0.5) => lift(d, triple(s(), s(), sq())),
            _ => constant(d, c, rng)?,
        },
        PiTy(x, body) => poly_member(x, body).ok_or_else(|| NoSampler(fam.to_string()))?,
        FamVar(_) => return Err(NoSampler(fam.to_string())),
    })
}

/// Polymorphic identity or first projection, when the family has that shape.
fn poly_member(x: &str, body: &ApproxTy) -> Option<Triple> {
    let var = ApproxTy::FamVar(x.to_string());
    let xv = Ty::var(x);
    let xq = Ty::var(err_name(x));
    let wrap = |exact: E, approx: E, err: E| {
        let err = Expr::tylam(
            x,
            Expr::tylam(
                err_name(x),
                Expr::lam(
                    zero_name(x),
                    xq.clone(),
                    Expr::lam(plus_name(x), Ty::arrows([xq.clone(), xq.clone()], xq.clone()), err),
                ),
            ),
        );
        triple(Expr::tylam(x, exact), Expr::tylam(x, approx), err)
    };
    let id = ApproxTy::pi(var.clone(), var.clone());
    if *body == id {
        let e = Expr::lam("s", xv.clone(), s());
        return Some(wrap(e.clone(), e, Expr::lam("s", xv, Expr::lam("s^q", xq.clone(), sq()))));
    }
    if *body == ApproxTy::pi(var.clone(), id) {
        let e = Expr::lam("t", xv.clone(), Expr::lam("s", xv.clone(), Expr::var("t")));
        let q = Expr::lam(
            "t",
            xv.clone(),
            Expr::lam("t^q", xq.clone(), Expr::lam("s", xv, Expr::lam("s^q", xq.clone(), Expr::var("t^q")))),
        );
        return Some(wrap(e.clone(), e, q));
    }
    None
}

/// Exact input for approximate equality on function carriers: any exact
/// value with any error.
pub fn sample_exact_input(fam: &ApproxTy, rng: &mut TrialRng) -> Result<(E, E), NoSampler> {
    let t = sample_member(fam, rng)?;
    Ok((t.exact, t.err))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{check_type, TyCtx};
    use crate::sample::trial_rng;

    #[test]
    fn samples_typecheck() {
        let fl = ApproxTy::FlBase;
        let nat = ApproxTy::NatBase;
        let x = ApproxTy::FamVar("X".into());
        let fams = [
            fl.clone(),
            nat.clone(),
            ApproxTy::BoolBase,
            ApproxTy::pi(fl.clone(), fl.clone()),
            ApproxTy::pi(nat.clone(), nat.clone()),
            ApproxTy::pi(nat.clone(), fl.clone()),
            ApproxTy::pi(fl.clone(), ApproxTy::pi(fl.clone(), fl.clone())),
            ApproxTy::pi(ApproxTy::pi(fl.clone(), fl.clone()), fl.clone()),
            ApproxTy::pi(ApproxTy::pi(fl.clone(), fl.clone()), ApproxTy::pi(fl.clone(), fl.clone())),
            ApproxTy::pi_ty("X", ApproxTy::pi(x.clone(), x.clone())),
            ApproxTy::pi_ty("X", ApproxTy::pi(x.clone(), ApproxTy::pi(x.clone(), x))),
        ];
        let ctx = TyCtx::new();
        for fam in &fams {
            for i in 0..64 {
                let t = sample_member(fam, &mut trial_rng(1, 2, i)).unwrap();
                check_type(&ctx, &t.exact, &fam.exact_ty()).unwrap_or_else(|e| panic!("{fam} exact {}: {e}", t.exact));
                check_type(&ctx, &t.approx, &fam.approx_ty()).unwrap_or_else(|e| panic!("{fam} approx {}: {e}", t.approx));
                check_type(&ctx, &t.err, &fam.err_ty()).unwrap_or_else(|e| panic!("{fam} err {}: {e}", t.err));
            }
        }
    }

    #[test]
    fn free_family_variables_have_no_sampler() {
        assert!(sample_member(&ApproxTy::FamVar("X".into()), &mut trial_rng(0, 0, 0)).is_err());
    }
}
