use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::num::rational_to_string;

#[derive(Clone, Debug)]
pub enum Ty {
    Real,
    Float64,
    Nat,
    Bool,
    Unit,
    ErrReal,
    Arrow(Box<Ty>, Box<Ty>),
    Forall(String, Box<Ty>),
    TyVar(String),
}

impl Ty {
    pub fn arrow(dom: Ty, cod: Ty) -> Ty {
        Ty::Arrow(Box::new(dom), Box::new(cod))
    }

    /// `a -> b -> ... -> result`
    pub fn arrows(params: impl IntoIterator<Item = Ty>, result: Ty) -> Ty {
        let params: Vec<Ty> = params.into_iter().collect();
        params
            .into_iter()
            .rev()
            .fold(result, |acc, p| Ty::arrow(p, acc))
    }

    pub fn forall(var: impl Into<String>, body: Ty) -> Ty {
        Ty::Forall(var.into(), Box::new(body))
    }

    pub fn var(name: impl Into<String>) -> Ty {
        Ty::TyVar(name.into())
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match self {
            Ty::TyVar(n) => {
                if !bound.contains(n) {
                    out.insert(n.clone());
                }
            }
            Ty::Arrow(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Ty::Forall(x, body) => {
                bound.push(x.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
            _ => {}
        }
    }

    /// Capture-avoiding `self[replacement/var]`.
    pub fn subst(&self, var: &str, replacement: &Ty) -> Ty {
        let fv = replacement.free_vars();
        self.subst_inner(var, replacement, &fv)
    }

    fn subst_inner(&self, var: &str, rep: &Ty, fv: &BTreeSet<String>) -> Ty {
        match self {
            Ty::TyVar(n) if n == var => rep.clone(),
            Ty::Arrow(a, b) => Ty::arrow(a.subst_inner(var, rep, fv), b.subst_inner(var, rep, fv)),
            Ty::Forall(x, body) => {
                if x == var {
                    self.clone()
                } else if fv.contains(x) {
                    let mut avoid = fv.clone();
                    avoid.extend(body.free_vars());
                    avoid.insert(var.to_string());
                    let fresh = fresh_name(x, &avoid);
                    let renamed = body.subst(x, &Ty::TyVar(fresh.clone()));
                    Ty::forall(fresh, renamed.subst_inner(var, rep, fv))
                } else {
                    Ty::forall(x.clone(), body.subst_inner(var, rep, fv))
                }
            }
            _ => self.clone(),
        }
    }

    fn alpha_eq(&self, other: &Ty, left: &mut Vec<String>, right: &mut Vec<String>) -> bool {
        match (self, other) {
            (Ty::TyVar(a), Ty::TyVar(b)) => {
                let ia = left.iter().rposition(|n| n == a);
                let ib = right.iter().rposition(|n| n == b);
                match (ia, ib) {
                    (Some(i), Some(j)) => i == j,
                    (None, None) => a == b,
                    _ => false,
                }
            }
            (Ty::Arrow(a1, b1), Ty::Arrow(a2, b2)) => {
                a1.alpha_eq(a2, left, right) && b1.alpha_eq(b2, left, right)
            }
            (Ty::Forall(x, b1), Ty::Forall(y, b2)) => {
                left.push(x.clone());
                right.push(y.clone());
                let r = b1.alpha_eq(b2, left, right);
                left.pop();
                right.pop();
                r
            }
            (Ty::Real, Ty::Real)
            | (Ty::Float64, Ty::Float64)
            | (Ty::Nat, Ty::Nat)
            | (Ty::Bool, Ty::Bool)
            | (Ty::Unit, Ty::Unit)
            | (Ty::ErrReal, Ty::ErrReal) => true,
            _ => false,
        }
    }
}

/// Types compare up to renaming of bound variables.
impl PartialEq for Ty {
    fn eq(&self, other: &Ty) -> bool {
        self.alpha_eq(other, &mut Vec::new(), &mut Vec::new())
    }
}

impl Eq for Ty {}

/// `base`, or `base'`, `base''`, ... until it avoids `used`.
pub fn fresh_name(base: &str, used: &BTreeSet<String>) -> String {
    let mut cand = base.to_string();
    while used.contains(&cand) {
        cand.push('\'');
    }
    cand
}

/// Error literal: a nonnegative rational or infinity.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ErrVal {
    Finite(BigRational),
    Infinity,
}

impl ErrVal {
    pub fn zero() -> ErrVal {
        ErrVal::Finite(BigRational::zero())
    }

    /// Panics on a negative input; error values are nonnegative by construction.
    pub fn finite(r: BigRational) -> ErrVal {
        assert!(!r.is_negative(), "negative error literal");
        ErrVal::Finite(r)
    }

    pub fn from_int(n: i64) -> ErrVal {
        ErrVal::finite(BigRational::from_integer(n.into()))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, ErrVal::Infinity)
    }

    pub fn add(&self, other: &ErrVal) -> ErrVal {
        match (self, other) {
            (ErrVal::Finite(a), ErrVal::Finite(b)) => ErrVal::Finite(a + b),
            _ => ErrVal::Infinity,
        }
    }

    pub fn leq(&self, other: &ErrVal) -> bool {
        match (self, other) {
            (_, ErrVal::Infinity) => true,
            (ErrVal::Infinity, ErrVal::Finite(_)) => false,
            (ErrVal::Finite(a), ErrVal::Finite(b)) => a <= b,
        }
    }

    pub fn max(&self, other: &ErrVal) -> ErrVal {
        if self.leq(other) {
            other.clone()
        } else {
            self.clone()
        }
    }
}

impl PartialOrd for ErrVal {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ErrVal {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        use std::cmp::Ordering::*;
        match (self, other) {
            (ErrVal::Infinity, ErrVal::Infinity) => Equal,
            (ErrVal::Infinity, _) => Greater,
            (_, ErrVal::Infinity) => Less,
            (ErrVal::Finite(a), ErrVal::Finite(b)) => a.cmp(b),
        }
    }
}

impl fmt::Display for ErrVal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ErrVal::Finite(r) => write!(f, "{}", rational_to_string(r)),
            ErrVal::Infinity => write!(f, "inf"),
        }
    }
}

macro_rules! ops {
    ($( $variant:ident => $name:literal ),* $(,)?) => {
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum Op { $($variant),* }

        impl Op {
            pub const ALL: &'static [Op] = &[$(Op::$variant),*];

            pub fn name(self) -> &'static str {
                match self { $(Op::$variant => $name),* }
            }
        }
    };
}

ops! {
    AddR => "+r", SubR => "-r", MulR => "*r", DivR => "/r",
    SinR => "sinr", AbsR => "absr", LeqR => "leqr", DistR => "dr",
    NatToReal => "nat2real",
    AddF => "+f", SubF => "-f", MulF => "*f", DivF => "/f",
    SinF => "sinf", AbsF => "absf", LeqF => "leqf", NatToFloat => "nat2float",
    AddN => "+n", SubN => "-n", MulN => "*n", DivN => "divn",
    LeqN => "leqn", EqN => "eqn", DistN => "dn", FloorK => "floorK", CeilK => "ceilK",
    AddQ => "+q", LeqQ => "leqq", NatToErr => "nat2err", DistB => "db",
    FpErrAdd => "fperr+", FpErrSub => "fperr-", FpErrMul => "fperr*", FpErrDiv => "fperr/",
    FpErrSin => "fperrsin", FpErrNatToFloat => "fperrn2f", FpErrLeq => "fperrleq",
}

impl Op {
    pub fn from_name(name: &str) -> Option<Op> {
        Op::ALL.iter().copied().find(|op| op.name() == name)
    }

    /// Parameter types and result type.
    pub fn signature(self) -> (Vec<Ty>, Ty) {
        use Op::*;
        use Ty::*;
        match self {
            AddR | SubR | MulR | DivR => (vec![Real, Real], Real),
            SinR | AbsR => (vec![Real], Real),
            LeqR => (vec![Real, Real], Bool),
            DistR => (vec![Real, Real], ErrReal),
            NatToReal => (vec![Nat], Real),
            AddF | SubF | MulF | DivF => (vec![Float64, Float64], Float64),
            SinF | AbsF => (vec![Float64], Float64),
            LeqF => (vec![Float64, Float64], Bool),
            NatToFloat => (vec![Nat], Float64),
            AddN | SubN | MulN | DivN | DistN | FloorK | CeilK => (vec![Nat, Nat], Nat),
            LeqN | EqN => (vec![Nat, Nat], Bool),
            AddQ => (vec![ErrReal, ErrReal], ErrReal),
            LeqQ => (vec![ErrReal, ErrReal], Bool),
            NatToErr => (vec![Nat], ErrReal),
            DistB => (vec![Bool, Bool], ErrReal),
            FpErrAdd | FpErrSub | FpErrMul | FpErrDiv | FpErrLeq => {
                (vec![Real, ErrReal, Real, ErrReal], ErrReal)
            }
            FpErrSin => (vec![Real, ErrReal], ErrReal),
            FpErrNatToFloat => (vec![Nat, Nat], ErrReal),
        }
    }

    pub fn arity(self) -> usize {
        self.signature().0.len()
    }

    /// Type of the op partially applied to `given` arguments.
    pub fn residual_type(self, given: usize) -> Ty {
        let (params, result) = self.signature();
        Ty::arrows(params.into_iter().skip(given), result)
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub type E = Arc<Expr>;

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Var(String),
    Lam(String, Ty, E),
    App(E, E),
    TyLam(String, E),
    TyApp(E, Ty),
    Fix(E),
    If(E, E, E),
    RealLit(BigRational),
    NatLit(BigUint),
    BoolLit(bool),
    UnitLit,
    /// Bit pattern of a binary64.
    FloatLit(u64),
    ErrLit(ErrVal),
    /// Possibly unsaturated builtin application.
    Builtin(Op, Vec<E>),
    RedSeq(E, E, E),
    Bottom(Ty),
}

impl Expr {
    pub fn var(name: impl Into<String>) -> E {
        Arc::new(Expr::Var(name.into()))
    }

    pub fn lam(x: impl Into<String>, ty: Ty, body: E) -> E {
        Arc::new(Expr::Lam(x.into(), ty, body))
    }

    /// Application that folds arguments into unsaturated builtins.
    pub fn app(f: E, arg: E) -> E {
        if let Expr::Builtin(op, args) = &*f {
            if args.len() < op.arity() {
                let mut args = args.clone();
                args.push(arg);
                return Arc::new(Expr::Builtin(*op, args));
            }
        }
        Arc::new(Expr::App(f, arg))
    }

    pub fn apps(f: E, args: impl IntoIterator<Item = E>) -> E {
        args.into_iter().fold(f, Expr::app)
    }

    pub fn tylam(x: impl Into<String>, body: E) -> E {
        Arc::new(Expr::TyLam(x.into(), body))
    }

    pub fn tyapp(e: E, ty: Ty) -> E {
        Arc::new(Expr::TyApp(e, ty))
    }

    pub fn fix(e: E) -> E {
        Arc::new(Expr::Fix(e))
    }

    pub fn ite(c: E, t: E, f: E) -> E {
        Arc::new(Expr::If(c, t, f))
    }

    pub fn op(op: Op, args: Vec<E>) -> E {
        Arc::new(Expr::Builtin(op, args))
    }

    pub fn real(r: BigRational) -> E {
        Arc::new(Expr::RealLit(r))
    }

    pub fn real_int(n: i64) -> E {
        Expr::real(BigRational::from_integer(n.into()))
    }

    pub fn nat(n: u64) -> E {
        Arc::new(Expr::NatLit(BigUint::from(n)))
    }

    pub fn float(x: f64) -> E {
        Arc::new(Expr::FloatLit(x.to_bits()))
    }

    pub fn err(v: ErrVal) -> E {
        Arc::new(Expr::ErrLit(v))
    }

    pub fn bool_lit(b: bool) -> E {
        Arc::new(Expr::BoolLit(b))
    }

    pub fn bottom(t: Ty) -> E {
        Arc::new(Expr::Bottom(t))
    }

    pub fn err_zero() -> E {
        Expr::err(ErrVal::zero())
    }

    pub fn redseq(c: E, n: E, g: E) -> E {
        Arc::new(Expr::RedSeq(c, n, g))
    }

    pub fn children(&self) -> Vec<&E> {
        match self {
            Expr::Lam(_, _, b) | Expr::TyLam(_, b) | Expr::TyApp(b, _) | Expr::Fix(b) => vec![b],
            Expr::App(f, a) => vec![f, a],
            Expr::If(c, t, e) | Expr::RedSeq(c, t, e) => vec![c, t, e],
            Expr::Builtin(_, args) => args.iter().collect(),
            _ => vec![],
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match self {
            Expr::Var(n) => {
                if !bound.contains(n) {
                    out.insert(n.clone());
                }
            }
            Expr::Lam(x, _, b) => {
                bound.push(x.clone());
                b.collect_free(bound, out);
                bound.pop();
            }
            _ => {
                for c in self.children() {
                    c.collect_free(bound, out);
                }
            }
        }
    }

    /// Every variable name occurring anywhere, bound or free.
    pub fn all_names(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Var(n) => {
                out.insert(n.clone());
            }
            Expr::Lam(x, _, _) => {
                out.insert(x.clone());
            }
            _ => {}
        }
        for c in self.children() {
            c.all_names(out);
        }
    }

    /// Free type variables of all annotations.
    pub fn free_ty_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free_ty(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free_ty(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        let mut add = |t: &Ty, bound: &Vec<String>| {
            for v in t.free_vars() {
                if !bound.contains(&v) {
                    out.insert(v);
                }
            }
        };
        match self {
            Expr::Lam(_, t, _) | Expr::TyApp(_, t) | Expr::Bottom(t) => add(t, bound),
            _ => {}
        }
        if let Expr::TyLam(x, b) = self {
            bound.push(x.clone());
            b.collect_free_ty(bound, out);
            bound.pop();
            return;
        }
        for c in self.children() {
            c.collect_free_ty(bound, out);
        }
    }

    /// Capture-avoiding `self[value/var]`.
    pub fn subst(self: &E, var: &str, value: &E) -> E {
        let fv = value.free_vars();
        subst_inner(self, var, value, &fv)
    }

    /// Capture-avoiding substitution of a type variable in every annotation.
    pub fn subst_ty(self: &E, var: &str, ty: &Ty) -> E {
        let fv = ty.free_vars();
        subst_ty_inner(self, var, ty, &fv)
    }

    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }
}

fn map_children(e: &E, mut f: impl FnMut(&E) -> E) -> E {
    Arc::new(match &**e {
        Expr::Lam(x, t, b) => Expr::Lam(x.clone(), t.clone(), f(b)),
        Expr::App(a, b) => Expr::App(f(a), f(b)),
        Expr::TyLam(x, b) => Expr::TyLam(x.clone(), f(b)),
        Expr::TyApp(b, t) => Expr::TyApp(f(b), t.clone()),
        Expr::Fix(b) => Expr::Fix(f(b)),
        Expr::If(c, t, el) => Expr::If(f(c), f(t), f(el)),
        Expr::RedSeq(c, n, g) => Expr::RedSeq(f(c), f(n), f(g)),
        Expr::Builtin(op, args) => Expr::Builtin(*op, args.iter().map(f).collect()),
        other => other.clone(),
    })
}

fn subst_inner(e: &E, var: &str, value: &E, fv: &BTreeSet<String>) -> E {
    match &**e {
        Expr::Var(n) if n == var => value.clone(),
        Expr::Var(_) => e.clone(),
        Expr::Lam(x, t, body) => {
            if x == var {
                e.clone()
            } else if fv.contains(x) {
                let mut avoid = fv.clone();
                body.all_names(&mut avoid);
                avoid.insert(var.to_string());
                let fresh = fresh_name(x, &avoid);
                let renamed = body.subst(x, &Expr::var(fresh.clone()));
                Expr::lam(fresh, t.clone(), subst_inner(&renamed, var, value, fv))
            } else {
                Expr::lam(x.clone(), t.clone(), subst_inner(body, var, value, fv))
            }
        }
        // Re-associate so substituted builtins absorb their arguments.
        Expr::App(f, a) => Expr::app(subst_inner(f, var, value, fv), subst_inner(a, var, value, fv)),
        _ => map_children(e, |c| subst_inner(c, var, value, fv)),
    }
}

fn subst_ty_inner(e: &E, var: &str, ty: &Ty, fv: &BTreeSet<String>) -> E {
    match &**e {
        Expr::Lam(x, t, b) => Expr::lam(x.clone(), t.subst(var, ty), subst_ty_inner(b, var, ty, fv)),
        Expr::TyApp(b, t) => Expr::tyapp(subst_ty_inner(b, var, ty, fv), t.subst(var, ty)),
        Expr::Bottom(t) => Arc::new(Expr::Bottom(t.subst(var, ty))),
        Expr::TyLam(x, b) => {
            if x == var {
                e.clone()
            } else if fv.contains(x) {
                let mut avoid = fv.clone();
                avoid.extend(b.free_ty_vars());
                avoid.insert(var.to_string());
                let fresh = fresh_name(x, &avoid);
                let renamed = b.subst_ty(x, &Ty::TyVar(fresh.clone()));
                Expr::tylam(fresh, subst_ty_inner(&renamed, var, ty, fv))
            } else {
                Expr::tylam(x.clone(), subst_ty_inner(b, var, ty, fv))
            }
        }
        _ => map_children(e, |c| subst_ty_inner(c, var, ty, fv)),
    }
}

/// Pre-order enumeration of `redseq` nodes; index `i` is site `L{i}`.
pub fn redseq_sites(e: &E) -> Vec<E> {
    fn go(e: &E, out: &mut Vec<E>) {
        if let Expr::RedSeq(..) = &**e {
            out.push(e.clone());
        }
        for c in e.children() {
            go(c, out);
        }
    }
    let mut out = Vec::new();
    go(e, &mut out);
    out
}

pub fn site_label(i: usize) -> String {
    format!("L{i}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn app_absorbs_into_unsaturated_builtin() {
        let e = Expr::app(Expr::op(Op::SinR, vec![]), Expr::real_int(1));
        assert!(matches!(&*e, Expr::Builtin(Op::SinR, a) if a.len() == 1));
        let sat = Expr::app(e.clone(), Expr::real_int(2));
        assert!(matches!(&*sat, Expr::App(..)));
    }

    #[test]
    fn alpha_equivalent_types_are_equal() {
        let a = Ty::forall("X", Ty::arrow(Ty::var("X"), Ty::var("X")));
        let b = Ty::forall("Y", Ty::arrow(Ty::var("Y"), Ty::var("Y")));
        assert_eq!(a, b);
        assert_ne!(a, Ty::forall("Y", Ty::arrow(Ty::var("Y"), Ty::var("X"))));
    }

    #[test]
    fn type_substitution_avoids_capture() {
        // (forall Y. X -> Y)[Y/X] must not capture
        let t = Ty::forall("Y", Ty::arrow(Ty::var("X"), Ty::var("Y")));
        let s = t.subst("X", &Ty::var("Y"));
        let Ty::Forall(b, body) = &s else { panic!() };
        assert_ne!(b, "Y");
        assert_eq!(**body, Ty::arrow(Ty::var("Y"), Ty::var(b.clone())));
    }

    #[test]
    fn term_substitution_avoids_capture() {
        let e = Expr::lam("y", Ty::Real, Expr::op(Op::AddR, vec![Expr::var("x"), Expr::var("y")]));
        let s = e.subst("x", &Expr::var("y"));
        let Expr::Lam(b, _, body) = &*s else { panic!() };
        assert_ne!(b, "y");
        assert_eq!(body.free_vars().into_iter().collect::<Vec<_>>(), vec!["y".to_string(), b.clone()]);
    }

    #[test]
    fn op_names_round_trip() {
        for op in Op::ALL {
            assert_eq!(Op::from_name(op.name()), Some(*op));
        }
    }
}
