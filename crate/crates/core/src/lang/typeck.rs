use num_traits::Signed;
use thiserror::Error;

use super::ast::{ErrVal, Expr, Ty, E};
use crate::num::float::{round_rational, RoundMode};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("type mismatch at `{location}`: expected {expected}, found {found}")]
    TypeMismatch {
        expected: String,
        found: String,
        location: String,
    },
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("unbound type variable `{0}`")]
    UnboundTypeVariable(String),
    #[error("kind error: {0}")]
    KindError(String),
}

#[derive(Clone, Debug, PartialEq)]
pub enum CtxEntry {
    Var(String, Ty),
    TyVar(String),
}

/// Typing context; later entries shadow earlier ones.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TyCtx {
    entries: Vec<CtxEntry>,
}

impl TyCtx {
    pub fn new() -> TyCtx {
        TyCtx::default()
    }

    pub fn with_var(&self, name: impl Into<String>, ty: Ty) -> TyCtx {
        let mut c = self.clone();
        c.entries.push(CtxEntry::Var(name.into(), ty));
        c
    }

    pub fn with_ty_var(&self, name: impl Into<String>) -> TyCtx {
        let mut c = self.clone();
        c.entries.push(CtxEntry::TyVar(name.into()));
        c
    }

    pub fn push_var(&mut self, name: impl Into<String>, ty: Ty) {
        self.entries.push(CtxEntry::Var(name.into(), ty));
    }

    pub fn push_ty_var(&mut self, name: impl Into<String>) {
        self.entries.push(CtxEntry::TyVar(name.into()));
    }

    pub fn lookup(&self, name: &str) -> Option<&Ty> {
        self.entries.iter().rev().find_map(|e| match e {
            CtxEntry::Var(n, t) if n == name => Some(t),
            _ => None,
        })
    }

    pub fn has_ty_var(&self, name: &str) -> bool {
        self.entries
            .iter()
            .any(|e| matches!(e, CtxEntry::TyVar(n) if n == name))
    }

    pub fn entries(&self) -> &[CtxEntry] {
        &self.entries
    }

    pub fn extend(&mut self, other: &TyCtx) {
        self.entries.extend(other.entries.iter().cloned());
    }
}

pub fn kind_check(ctx: &TyCtx, t: &Ty) -> Result<(), TypeError> {
    for v in t.free_vars() {
        if !ctx.has_ty_var(&v) {
            return Err(TypeError::UnboundTypeVariable(v));
        }
    }
    Ok(())
}

fn location(e: &Expr) -> String {
    let s = e.to_string();
    if s.chars().count() > 60 {
        let cut: String = s.chars().take(57).collect();
        format!("{cut}...")
    } else {
        s
    }
}

fn mismatch(expected: &Ty, found: &Ty, at: &Expr) -> TypeError {
    TypeError::TypeMismatch {
        expected: expected.to_string(),
        found: found.to_string(),
        location: location(at),
    }
}

struct Checker {
    /// Rewrite numeric literals to the type the context expects.
    coerce: bool,
}

/// Literal reinterpretation used by elaboration; `None` when not applicable.
fn coerce_literal(e: &Expr, expected: &Ty) -> Option<E> {
    let r = match e {
        Expr::NatLit(n) => num_rational::BigRational::from_integer(n.clone().into()),
        Expr::RealLit(r) => r.clone(),
        _ => return None,
    };
    match expected {
        Ty::Real if !matches!(e, Expr::RealLit(_)) => Some(Expr::real(r)),
        Ty::ErrReal if !r.is_negative() => Some(Expr::err(ErrVal::Finite(r))),
        Ty::Float64 => Some(Expr::float(round_rational(&r, RoundMode::Nearest))),
        _ => None,
    }
}

impl Checker {
    fn check(&self, ctx: &TyCtx, e: &E, expected: &Ty) -> Result<E, TypeError> {
        if self.coerce {
            if let Some(c) = coerce_literal(e, expected) {
                return Ok(c);
            }
            match &**e {
                Expr::If(c, t, f) => {
                    let c = self.check(ctx, c, &Ty::Bool)?;
                    let t = self.check(ctx, t, expected)?;
                    let f = self.check(ctx, f, expected)?;
                    return Ok(Expr::ite(c, t, f));
                }
                Expr::Lam(x, dom, body) => {
                    if let Ty::Arrow(d, cod) = expected {
                        if **d == *dom {
                            kind_check(ctx, dom)?;
                            let b = self.check(&ctx.with_var(x.clone(), dom.clone()), body, cod)?;
                            return Ok(Expr::lam(x.clone(), dom.clone(), b));
                        }
                    }
                }
                _ => {}
            }
        }
        let (e2, t) = self.infer(ctx, e)?;
        if t == *expected {
            Ok(e2)
        } else {
            Err(mismatch(expected, &t, e))
        }
    }

    fn infer(&self, ctx: &TyCtx, e: &E) -> Result<(E, Ty), TypeError> {
        match &**e {
            Expr::Var(n) => ctx
                .lookup(n)
                .cloned()
                .map(|t| (e.clone(), t))
                .ok_or_else(|| TypeError::UnboundVariable(n.clone())),
            Expr::Lam(x, dom, body) => {
                kind_check(ctx, dom)?;
                let (b, cod) = self.infer(&ctx.with_var(x.clone(), dom.clone()), body)?;
                Ok((Expr::lam(x.clone(), dom.clone(), b), Ty::arrow(dom.clone(), cod)))
            }
            Expr::App(f, a) => {
                let (f2, ft) = self.infer(ctx, f)?;
                match ft {
                    Ty::Arrow(dom, cod) => {
                        let a2 = self.check(ctx, a, &dom)?;
                        Ok((Expr::app(f2, a2), *cod))
                    }
                    other => Err(mismatch(
                        &Ty::arrow(Ty::var("_"), Ty::var("_")),
                        &other,
                        f,
                    )),
                }
            }
            Expr::TyLam(x, body) => {
                let (b, t) = self.infer(&ctx.with_ty_var(x.clone()), body)?;
                Ok((Expr::tylam(x.clone(), b), Ty::forall(x.clone(), t)))
            }
            Expr::TyApp(inner, arg) => {
                kind_check(ctx, arg).map_err(|err| {
                    TypeError::KindError(format!("type argument {arg} is ill-formed: {err}"))
                })?;
                let (i2, t) = self.infer(ctx, inner)?;
                match t {
                    Ty::Forall(x, body) => Ok((Expr::tyapp(i2, arg.clone()), body.subst(&x, arg))),
                    other => Err(TypeError::KindError(format!(
                        "type application of non-polymorphic `{}` : {other}",
                        location(inner)
                    ))),
                }
            }
            Expr::Fix(inner) => {
                let (i2, t) = self.infer(ctx, inner)?;
                match &t {
                    Ty::Arrow(a, b) if a == b => Ok((Expr::fix(i2), (**a).clone())),
                    _ => Err(mismatch(&Ty::arrow(Ty::var("T"), Ty::var("T")), &t, inner)),
                }
            }
            Expr::If(c, t, f) => {
                let c2 = self.check(ctx, c, &Ty::Bool)?;
                let (t2, tt) = self.infer(ctx, t)?;
                match self.check(ctx, f, &tt) {
                    Ok(f2) => Ok((Expr::ite(c2, t2, f2), tt)),
                    Err(err) if self.coerce => {
                        // the else branch may fix the type of a literal then branch
                        let (f2, ft) = self.infer(ctx, f).map_err(|_| err.clone())?;
                        let t2 = self.check(ctx, t, &ft).map_err(|_| err)?;
                        Ok((Expr::ite(c2, t2, f2), ft))
                    }
                    Err(err) => Err(err),
                }
            }
            Expr::RealLit(_) => Ok((e.clone(), Ty::Real)),
            Expr::NatLit(_) => Ok((e.clone(), Ty::Nat)),
            Expr::BoolLit(_) => Ok((e.clone(), Ty::Bool)),
            Expr::UnitLit => Ok((e.clone(), Ty::Unit)),
            Expr::FloatLit(_) => Ok((e.clone(), Ty::Float64)),
            Expr::ErrLit(_) => Ok((e.clone(), Ty::ErrReal)),
            Expr::Bottom(t) => {
                kind_check(ctx, t)?;
                Ok((e.clone(), t.clone()))
            }
            Expr::Builtin(op, args) => {
                let (params, _) = op.signature();
                let args2 = args
                    .iter()
                    .zip(&params)
                    .map(|(a, p)| self.check(ctx, a, p))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok((Expr::op(*op, args2), op.residual_type(args.len())))
            }
            Expr::RedSeq(c, n, g) => {
                let n2 = self.check(ctx, n, &Ty::Nat)?;
                let (g2, gt) = self.infer(ctx, g)?;
                let elem = match &gt {
                    Ty::Arrow(d, cod) if **d == Ty::Nat => (**cod).clone(),
                    _ => return Err(mismatch(&Ty::arrow(Ty::Nat, Ty::var("T")), &gt, g)),
                };
                if !matches!(elem, Ty::Real | Ty::Float64 | Ty::Nat | Ty::ErrReal) {
                    return Err(TypeError::TypeMismatch {
                        expected: "Real, Float64, Nat or ErrReal".into(),
                        found: elem.to_string(),
                        location: location(e),
                    });
                }
                let comb_ty = Ty::arrows([elem.clone(), elem.clone()], elem.clone());
                let c2 = self.check(ctx, c, &comb_ty)?;
                Ok((Expr::redseq(c2, n2, g2), elem))
            }
        }
    }
}

/// Strict typing: literals must already carry their intended type.
pub fn infer_type(ctx: &TyCtx, e: &E) -> Result<Ty, TypeError> {
    Checker { coerce: false }.infer(ctx, e).map(|(_, t)| t)
}

pub fn check_type(ctx: &TyCtx, e: &E, expected: &Ty) -> Result<(), TypeError> {
    Checker { coerce: false }.check(ctx, e, expected).map(|_| ())
}

/// Typing with literal overloading: bare numerals in positions expecting
/// `Real`, `ErrReal` or `Float64` are rewritten to literals of that type.
pub fn elaborate(ctx: &TyCtx, e: &E) -> Result<(E, Ty), TypeError> {
    Checker { coerce: true }.infer(ctx, e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse::parse;

    fn ty_of(src: &str) -> Result<Ty, TypeError> {
        infer_type(&TyCtx::new(), &parse(src).unwrap())
    }

    #[test]
    fn basic_types() {
        assert_eq!(ty_of("(lam (x Real) x)").unwrap(), Ty::arrow(Ty::Real, Ty::Real));
        assert_eq!(ty_of("sinr").unwrap(), Ty::arrow(Ty::Real, Ty::Real));
        assert_eq!(
            ty_of("(tlam X (lam (x X) x))").unwrap(),
            Ty::forall("X", Ty::arrow(Ty::var("X"), Ty::var("X")))
        );
        assert_eq!(ty_of("(redseq +r 4 (lam (i Nat) (nat2real i)))").unwrap(), Ty::Real);
        assert_eq!(
            ty_of("(tyapp (tlam X (lam (x X) x)) Real)").unwrap(),
            Ty::arrow(Ty::Real, Ty::Real)
        );
        assert_eq!(
            ty_of("(fix (lam (f (-> Nat Nat)) f))").unwrap(),
            Ty::arrow(Ty::Nat, Ty::Nat)
        );
    }

    #[test]
    fn errors() {
        assert!(matches!(ty_of("x"), Err(TypeError::UnboundVariable(_))));
        assert!(matches!(ty_of("(+r 1 2.0)"), Err(TypeError::TypeMismatch { .. })));
        assert!(matches!(ty_of("(tyapp 1.0 Real)"), Err(TypeError::KindError(_))));
        assert!(matches!(ty_of("(tyapp (tlam X 1.0) Y)"), Err(TypeError::KindError(_))));
        assert!(matches!(ty_of("(lam (x Y) x)"), Err(TypeError::UnboundTypeVariable(_))));
    }

    #[test]
    fn kinding() {
        let ctx = TyCtx::new();
        assert!(kind_check(&ctx, &Ty::Real).is_ok());
        assert!(kind_check(&ctx, &Ty::var("X")).is_err());
        assert!(kind_check(&ctx, &Ty::forall("X", Ty::arrow(Ty::var("X"), Ty::var("X")))).is_ok());
    }

    #[test]
    fn elaboration_coerces_literals() {
        let e = parse("(app (app (lam (x Real) (lam (q ErrReal) q)) 5) 1/2)").unwrap();
        assert!(infer_type(&TyCtx::new(), &e).is_err());
        let (e2, t) = elaborate(&TyCtx::new(), &e).unwrap();
        assert_eq!(t, Ty::ErrReal);
        assert_eq!(infer_type(&TyCtx::new(), &e2).unwrap(), Ty::ErrReal);
        let (e3, _) = elaborate(&TyCtx::new(), &parse("(+f 0.1 0.2)").unwrap()).unwrap();
        assert_eq!(e3.to_string(), "(+f (float 0.1) (float 0.2))");
    }

    #[test]
    fn shadowing_uses_latest_binding() {
        let ctx = TyCtx::new().with_var("x", Ty::Nat).with_var("x", Ty::Real);
        assert_eq!(ctx.lookup("x"), Some(&Ty::Real));
    }
}
