//! Approximation families, approximation contexts and sampled membership.

pub mod axioms;
pub mod check;
pub mod library;

use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::lang::{Expr, Op, Ty, TyCtx, E};
use crate::quant::QuantInstance;

pub use check::{aeq_check, appr_member, replay_member, Outcome, Replay, Status, Verdict};

/// Descriptor of an approximation family.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ApproxTy {
    /// Reals by binary64 floats with real-valued error.
    FlBase,
    /// Naturals by naturals with natural error.
    NatBase,
    /// Booleans by booleans; the error is 0 when they agree and 1 otherwise.
    BoolBase,
    /// Functions from the first family to the second.
    Pi(Box<ApproxTy>, Box<ApproxTy>),
    /// Abstraction over a family variable.
    PiTy(String, Box<ApproxTy>),
    FamVar(String),
}

pub fn err_name(x: &str) -> String {
    format!("{x}^q")
}

pub fn zero_name(x: &str) -> String {
    format!("{x}^zero")
}

pub fn plus_name(x: &str) -> String {
    format!("{x}^plus")
}

impl ApproxTy {
    pub fn pi(dom: ApproxTy, cod: ApproxTy) -> ApproxTy {
        ApproxTy::Pi(Box::new(dom), Box::new(cod))
    }

    pub fn pi_ty(x: impl Into<String>, body: ApproxTy) -> ApproxTy {
        ApproxTy::PiTy(x.into(), Box::new(body))
    }

    /// Family whose exact type is `t`: reals map to floats, naturals and
    /// booleans to themselves.
    pub fn for_exact_type(t: &Ty) -> Option<ApproxTy> {
        Some(match t {
            Ty::Real => ApproxTy::FlBase,
            Ty::Nat => ApproxTy::NatBase,
            Ty::Bool => ApproxTy::BoolBase,
            Ty::Arrow(a, b) => ApproxTy::pi(Self::for_exact_type(a)?, Self::for_exact_type(b)?),
            Ty::Forall(x, b) => ApproxTy::pi_ty(x.clone(), Self::for_exact_type(b)?),
            Ty::TyVar(x) => ApproxTy::FamVar(x.clone()),
            Ty::Float64 | Ty::Unit | Ty::ErrReal => return None,
        })
    }

    pub fn exact_ty(&self) -> Ty {
        match self {
            ApproxTy::FlBase => Ty::Real,
            ApproxTy::NatBase => Ty::Nat,
            ApproxTy::BoolBase => Ty::Bool,
            ApproxTy::Pi(d, c) => Ty::arrow(d.exact_ty(), c.exact_ty()),
            ApproxTy::PiTy(x, b) => Ty::forall(x.clone(), b.exact_ty()),
            ApproxTy::FamVar(x) => Ty::var(x.clone()),
        }
    }

    pub fn approx_ty(&self) -> Ty {
        match self {
            ApproxTy::FlBase => Ty::Float64,
            ApproxTy::NatBase => Ty::Nat,
            ApproxTy::BoolBase => Ty::Bool,
            ApproxTy::Pi(d, c) => Ty::arrow(d.approx_ty(), c.approx_ty()),
            ApproxTy::PiTy(x, b) => Ty::forall(x.clone(), b.approx_ty()),
            ApproxTy::FamVar(x) => Ty::var(x.clone()),
        }
    }

    /// Type of error expressions. A function's error takes the exact input
    /// and the input's error.
    pub fn err_ty(&self) -> Ty {
        match self {
            ApproxTy::FlBase | ApproxTy::BoolBase => Ty::ErrReal,
            ApproxTy::NatBase => Ty::Nat,
            ApproxTy::Pi(d, c) => Ty::arrows([d.exact_ty(), d.err_ty()], c.err_ty()),
            ApproxTy::PiTy(x, b) => {
                let xq = Ty::var(err_name(x));
                Ty::forall(
                    x.clone(),
                    Ty::forall(
                        err_name(x),
                        Ty::arrows(
                            [xq.clone(), Ty::arrows([xq.clone(), xq.clone()], xq)],
                            b.err_ty(),
                        ),
                    ),
                )
            }
            ApproxTy::FamVar(x) => Ty::var(err_name(x)),
        }
    }

    pub fn zero(&self) -> E {
        match self {
            ApproxTy::FlBase | ApproxTy::BoolBase => Expr::err_zero(),
            ApproxTy::NatBase => Expr::nat(0),
            ApproxTy::Pi(d, c) => Expr::lam(
                "z^e",
                d.exact_ty(),
                Expr::lam("z^q", d.err_ty(), c.zero()),
            ),
            ApproxTy::PiTy(x, b) => poly_abstraction(x, b.zero()),
            ApproxTy::FamVar(x) => Expr::var(zero_name(x)),
        }
    }

    pub fn plus(&self) -> E {
        match self {
            ApproxTy::FlBase | ApproxTy::BoolBase => Expr::op(Op::AddQ, vec![]),
            ApproxTy::NatBase => Expr::op(Op::AddN, vec![]),
            ApproxTy::Pi(d, c) => {
                let q = self.err_ty();
                let at = |f: &str| {
                    Expr::apps(Expr::var(f), [Expr::var("z^e"), Expr::var("z^q")])
                };
                Expr::lam(
                    "f^q",
                    q.clone(),
                    Expr::lam(
                        "g^q",
                        q,
                        Expr::lam(
                            "z^e",
                            d.exact_ty(),
                            Expr::lam(
                                "z^q",
                                d.err_ty(),
                                Expr::apps(c.plus(), [at("f^q"), at("g^q")]),
                            ),
                        ),
                    ),
                )
            }
            ApproxTy::PiTy(x, b) => {
                let q = self.err_ty();
                let at = |f: &str| {
                    Expr::apps(
                        Expr::tyapp(
                            Expr::tyapp(Expr::var(f), Ty::var(x.clone())),
                            Ty::var(err_name(x)),
                        ),
                        [Expr::var(zero_name(x)), Expr::var(plus_name(x))],
                    )
                };
                Expr::lam(
                    "f^q",
                    q.clone(),
                    Expr::lam("g^q", q, poly_abstraction(x, Expr::apps(b.plus(), [at("f^q"), at("g^q")]))),
                )
            }
            ApproxTy::FamVar(x) => Expr::var(plus_name(x)),
        }
    }

    pub fn add(&self, a: E, b: E) -> E {
        Expr::apps(self.plus(), [a, b])
    }

    pub fn quant(&self) -> QuantInstance {
        QuantInstance { name: self.to_string(), carrier: self.err_ty(), zero: self.zero(), plus: self.plus() }
    }

    /// Replaces the family variable `x` by `fam`.
    pub fn instantiate(&self, x: &str, fam: &ApproxTy) -> ApproxTy {
        match self {
            ApproxTy::FamVar(y) if y == x => fam.clone(),
            ApproxTy::Pi(d, c) => ApproxTy::pi(d.instantiate(x, fam), c.instantiate(x, fam)),
            ApproxTy::PiTy(y, b) if y != x => ApproxTy::pi_ty(y.clone(), b.instantiate(x, fam)),
            other => other.clone(),
        }
    }

    pub fn free_vars(&self) -> Vec<String> {
        fn go(t: &ApproxTy, bound: &mut Vec<String>, out: &mut Vec<String>) {
            match t {
                ApproxTy::FamVar(x) if !bound.contains(x) && !out.contains(x) => out.push(x.clone()),
                ApproxTy::Pi(d, c) => {
                    go(d, bound, out);
                    go(c, bound, out);
                }
                ApproxTy::PiTy(x, b) => {
                    bound.push(x.clone());
                    go(b, bound, out);
                    bound.pop();
                }
                _ => {}
            }
        }
        let mut out = Vec::new();
        go(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    pub fn is_base(&self) -> bool {
        matches!(self, ApproxTy::FlBase | ApproxTy::NatBase | ApproxTy::BoolBase)
    }

    /// Builds the exact distance between two exact values of a base family.
    pub fn distance(&self, a: E, b: E) -> Option<E> {
        Some(match self {
            ApproxTy::FlBase => Expr::op(Op::DistR, vec![a, b]),
            ApproxTy::NatBase => Expr::op(Op::DistN, vec![a, b]),
            ApproxTy::BoolBase => Expr::op(Op::DistB, vec![a, b]),
            _ => return None,
        })
    }
}

/// `(tlam X (tlam X^q (lam (X^zero X^q) (lam (X^plus ...) body))))`.
pub fn poly_abstraction(x: &str, body: E) -> E {
    let xq = Ty::var(err_name(x));
    Expr::tylam(
        x,
        Expr::tylam(
            err_name(x),
            Expr::lam(
                zero_name(x),
                xq.clone(),
                Expr::lam(plus_name(x), Ty::arrows([xq.clone(), xq.clone()], xq), body),
            ),
        ),
    )
}

/// Instantiates a polymorphic family at `fam`.
pub fn instantiate_poly(poly: &ApproxTy, fam: &ApproxTy) -> Option<ApproxTy> {
    match poly {
        ApproxTy::PiTy(x, body) => Some(body.instantiate(x, fam)),
        _ => None,
    }
}

/// Error of a polymorphic value applied to the components of `fam`.
pub fn instantiate_err(q: E, fam: &ApproxTy) -> E {
    Expr::apps(
        Expr::tyapp(Expr::tyapp(q, fam.exact_ty()), fam.err_ty()),
        [fam.zero(), fam.plus()],
    )
}

impl fmt::Display for ApproxTy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ApproxTy::FlBase => f.write_str("Fl"),
            ApproxTy::NatBase => f.write_str("Nat"),
            ApproxTy::BoolBase => f.write_str("Bool"),
            ApproxTy::Pi(d, c) => write!(f, "({d} => {c})"),
            ApproxTy::PiTy(x, b) => write!(f, "(forall {x}. {b})"),
            ApproxTy::FamVar(x) => f.write_str(x),
        }
    }
}

// ---------------------------------------------------------------------------
// contexts

/// Components of a recursive binding, filled in once the body is compiled.
pub type FixSlot = Arc<OnceLock<Triple>>;

/// Exact, approximate and error expressions for one value.
#[derive(Clone, Debug)]
pub struct Triple {
    pub exact: E,
    pub approx: E,
    pub err: E,
}

#[derive(Clone, Debug)]
pub enum CtxEntry {
    /// `x` approximated by `x` with error `x^q` in `family`.
    Val { name: String, family: ApproxTy },
    /// Family variable `X` with error type `X^q`, zero `X^zero`, plus `X^plus`.
    Ty { name: String },
    /// A value triple further constrained to equal the fixed point in `slot`.
    Fix { name: String, family: ApproxTy, slot: FixSlot },
}

#[derive(Clone, Debug, Default)]
pub struct ApproxCtx {
    entries: Vec<CtxEntry>,
}

impl ApproxCtx {
    pub fn new() -> ApproxCtx {
        ApproxCtx::default()
    }

    pub fn entries(&self) -> &[CtxEntry] {
        &self.entries
    }

    pub fn push(&self, entry: CtxEntry) -> ApproxCtx {
        let mut c = self.clone();
        c.entries.push(entry);
        c
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The latest value entry for `name` and its family.
    pub fn lookup(&self, name: &str) -> Option<&ApproxTy> {
        self.entries.iter().rev().find_map(|e| match e {
            CtxEntry::Val { name: n, family } | CtxEntry::Fix { name: n, family, .. } if n == name => {
                Some(family)
            }
            _ => None,
        })
    }

    pub fn has_family_var(&self, x: &str) -> bool {
        self.entries.iter().any(|e| matches!(e, CtxEntry::Ty { name } if name == x))
    }

    /// Typing context of exact programs.
    pub fn exact_ctx(&self) -> TyCtx {
        let mut c = TyCtx::new();
        for e in &self.entries {
            match e {
                CtxEntry::Val { name, family } | CtxEntry::Fix { name, family, .. } => {
                    c.push_var(name.clone(), family.exact_ty())
                }
                CtxEntry::Ty { name } => c.push_ty_var(name.clone()),
            }
        }
        c
    }

    /// Typing context of approximate programs.
    pub fn approx_ctx(&self) -> TyCtx {
        let mut c = TyCtx::new();
        for e in &self.entries {
            match e {
                CtxEntry::Val { name, family } | CtxEntry::Fix { name, family, .. } => {
                    c.push_var(name.clone(), family.approx_ty())
                }
                CtxEntry::Ty { name } => c.push_ty_var(name.clone()),
            }
        }
        c
    }

    /// Typing context of error expressions: exact variables and errors.
    pub fn err_ctx(&self) -> TyCtx {
        let mut c = TyCtx::new();
        for e in &self.entries {
            match e {
                CtxEntry::Val { name, family } | CtxEntry::Fix { name, family, .. } => {
                    c.push_var(name.clone(), family.exact_ty());
                    c.push_var(err_name(name), family.err_ty());
                }
                CtxEntry::Ty { name } => {
                    let xq = Ty::var(err_name(name));
                    c.push_ty_var(name.clone());
                    c.push_ty_var(err_name(name));
                    c.push_var(zero_name(name), xq.clone());
                    c.push_var(plus_name(name), Ty::arrows([xq.clone(), xq.clone()], xq));
                }
            }
        }
        c
    }

    pub fn describe(&self) -> Vec<String> {
        self.entries
            .iter()
            .map(|e| match e {
                CtxEntry::Val { name, family } => format!("{name}: {family}"),
                CtxEntry::Ty { name } => format!("{name}: family"),
                CtxEntry::Fix { name, family, .. } => format!("{name}: {family} (fixed point)"),
            })
            .collect()
    }
}

/// A substitution sampled from a context, applied to the three kinds of
/// expression.
#[derive(Clone, Debug, Default)]
pub struct CtxSample {
    vals: Vec<(String, Triple)>,
    tys: Vec<(String, ApproxTy)>,
    /// Surface syntax of the sampled values, for counterexamples.
    pub shown: Vec<String>,
}

impl CtxSample {
    pub fn push_val(&mut self, name: &str, t: Triple) {
        self.shown.push(format!("{name} = {} ~ {} with error {}", t.exact, t.approx, t.err));
        self.vals.push((name.to_string(), t));
    }

    pub fn push_ty(&mut self, name: &str, fam: ApproxTy) {
        self.shown.push(format!("{name} = {fam}"));
        self.tys.push((name.to_string(), fam));
    }

    /// Later entries may mention earlier ones, so they are substituted first.
    pub fn exact(&self, e: &E) -> E {
        let mut e = e.clone();
        for (x, t) in self.vals.iter().rev() {
            e = e.subst(x, &t.exact);
        }
        self.apply_tys(e, |f| f.exact_ty())
    }

    pub fn approx(&self, a: &E) -> E {
        let mut a = a.clone();
        for (x, t) in self.vals.iter().rev() {
            a = a.subst(x, &t.approx);
        }
        self.apply_tys(a, |f| f.approx_ty())
    }

    pub fn err(&self, q: &E) -> E {
        let mut q = q.clone();
        for (x, t) in self.vals.iter().rev() {
            q = q.subst(&err_name(x), &t.err);
            q = q.subst(x, &t.exact);
        }
        for (x, f) in self.tys.iter().rev() {
            q = q.subst(&zero_name(x), &f.zero());
            q = q.subst(&plus_name(x), &f.plus());
            q = q.subst_ty(&err_name(x), &f.err_ty());
            q = q.subst_ty(x, &f.exact_ty());
        }
        q
    }

    pub fn family(&self, fam: &ApproxTy) -> ApproxTy {
        self.tys.iter().rev().fold(fam.clone(), |f, (x, g)| f.instantiate(x, g))
    }

    fn apply_tys(&self, e: E, f: impl Fn(&ApproxTy) -> Ty) -> E {
        self.tys.iter().rev().fold(e, |e, (x, g)| e.subst_ty(x, &f(g)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{infer_type, parse_type};

    fn fl_fl() -> ApproxTy {
        ApproxTy::pi(ApproxTy::FlBase, ApproxTy::FlBase)
    }

    #[test]
    fn base_components() {
        let f = ApproxTy::FlBase;
        assert_eq!((f.exact_ty(), f.approx_ty(), f.err_ty()), (Ty::Real, Ty::Float64, Ty::ErrReal));
        let n = ApproxTy::NatBase;
        assert_eq!((n.exact_ty(), n.approx_ty(), n.err_ty()), (Ty::Nat, Ty::Nat, Ty::Nat));
    }

    #[test]
    fn function_error_type_is_curried() {
        assert_eq!(fl_fl().err_ty(), parse_type("(-> Real ErrReal ErrReal)").unwrap());
    }

    #[test]
    fn zero_and_plus_typecheck() {
        let poly = ApproxTy::pi_ty("X", ApproxTy::pi(ApproxTy::FamVar("X".into()), ApproxTy::FamVar("X".into())));
        for fam in [ApproxTy::FlBase, ApproxTy::NatBase, fl_fl(), ApproxTy::pi(fl_fl(), ApproxTy::FlBase), poly] {
            let q = fam.err_ty();
            assert_eq!(infer_type(&TyCtx::new(), &fam.zero()).unwrap(), q, "{fam}");
            assert_eq!(
                infer_type(&TyCtx::new(), &fam.plus()).unwrap(),
                Ty::arrows([q.clone(), q.clone()], q),
                "{fam}"
            );
        }
    }

    #[test]
    fn instantiation_resolves_variables() {
        let x = ApproxTy::FamVar("X".into());
        let poly = ApproxTy::pi_ty("X", ApproxTy::pi(x.clone(), x));
        let at_fl = instantiate_poly(&poly, &ApproxTy::FlBase).unwrap();
        assert_eq!(at_fl, fl_fl());
        assert_eq!(at_fl.exact_ty(), parse_type("(-> Real Real)").unwrap());
        let at_nat = instantiate_poly(&poly, &ApproxTy::NatBase).unwrap();
        assert_eq!(at_nat.approx_ty(), parse_type("(-> Nat Nat)").unwrap());
        let y = ApproxTy::FamVar("Y".into());
        let nested = ApproxTy::pi_ty("X", ApproxTy::pi_ty("Y", ApproxTy::pi(ApproxTy::FamVar("X".into()), y)));
        let once = instantiate_poly(&nested, &ApproxTy::FlBase).unwrap();
        let twice = instantiate_poly(&once, &ApproxTy::NatBase).unwrap();
        assert!(twice.is_closed());
        assert_eq!(twice, ApproxTy::pi(ApproxTy::FlBase, ApproxTy::NatBase));
    }

    #[test]
    fn family_of_exact_type() {
        let t = parse_type("(forall X (-> X X))").unwrap();
        let f = ApproxTy::for_exact_type(&t).unwrap();
        assert_eq!(f.to_string(), "(forall X. (X => X))");
        assert_eq!(f.exact_ty(), t);
    }
}
