//! Syntax-directed approximate compilation with derivation traces.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::{Arc, OnceLock};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use super::simplify::{apply, simplify};
use crate::approx::check::{aeq_in_ctx, err_leq_in_ctx, member_in_ctx, CheckConfig, Status, Verdict};
use crate::approx::{err_name, instantiate_err, poly_abstraction, ApproxCtx, ApproxTy, CtxEntry, Triple};
use crate::eval::{eval_exact, Env, EvalConfig, Value};
use crate::lang::{infer_type, redseq_sites, site_label, ErrVal, Expr, Op, Ty, TypeError, E};
use crate::num::float::{f64_to_rational, round_rational, RoundMode};
use crate::sample::stream_id;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Rule {
    #[serde(rename = "A-Weak")]
    AWeak,
    #[serde(rename = "A-Var")]
    AVar,
    #[serde(rename = "A-Lam")]
    ALam,
    #[serde(rename = "A-App")]
    AApp,
    #[serde(rename = "A-TLam")]
    ATLam,
    #[serde(rename = "A-TApp")]
    ATApp,
    #[serde(rename = "A-Fix")]
    AFix,
    #[serde(rename = "A-If")]
    AIf,
    #[serde(rename = "R-Lit")]
    RLit,
    #[serde(rename = "R-Op")]
    ROp,
    #[serde(rename = "R-SinSubst")]
    RSinSubst,
    #[serde(rename = "R-Perforate")]
    RPerforate,
}

impl Rule {
    pub const ALL: [Rule; 12] = [
        Rule::AWeak,
        Rule::AVar,
        Rule::ALam,
        Rule::AApp,
        Rule::ATLam,
        Rule::ATApp,
        Rule::AFix,
        Rule::AIf,
        Rule::RLit,
        Rule::ROp,
        Rule::RSinSubst,
        Rule::RPerforate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Rule::AWeak => "A-Weak",
            Rule::AVar => "A-Var",
            Rule::ALam => "A-Lam",
            Rule::AApp => "A-App",
            Rule::ATLam => "A-TLam",
            Rule::ATApp => "A-TApp",
            Rule::AFix => "A-Fix",
            Rule::AIf => "A-If",
            Rule::RLit => "R-Lit",
            Rule::ROp => "R-Op",
            Rule::RSinSubst => "R-SinSubst",
            Rule::RPerforate => "R-Perforate",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SideCondition {
    pub description: String,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, Serialize)]
pub struct Derivation {
    pub id: usize,
    pub rule: Rule,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub site: Option<String>,
    pub context: Vec<String>,
    pub family: String,
    pub exact: String,
    pub approx: String,
    pub err: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub side_conditions: Vec<SideCondition>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub premises: Vec<Derivation>,
}

impl Derivation {
    /// Rules used anywhere in the tree.
    pub fn rules(&self) -> BTreeSet<Rule> {
        let mut out = BTreeSet::new();
        self.walk(&mut |d| {
            out.insert(d.rule);
        });
        out
    }

    pub fn walk(&self, f: &mut impl FnMut(&Derivation)) {
        f(self);
        for p in &self.premises {
            p.walk(f);
        }
    }

    pub fn side_conditions(&self) -> Vec<&SideCondition> {
        let mut out = Vec::new();
        fn go<'a>(d: &'a Derivation, out: &mut Vec<&'a SideCondition>) {
            out.extend(d.side_conditions.iter());
            for p in &d.premises {
                go(p, out);
            }
        }
        go(self, &mut out);
        out
    }

    pub fn size(&self) -> usize {
        1 + self.premises.iter().map(Derivation::size).sum::<usize>()
    }

    fn find_mut(&mut self, id: usize) -> Option<&mut Derivation> {
        if self.id == id {
            return Some(self);
        }
        self.premises.iter_mut().find_map(|p| p.find_mut(id))
    }
}

#[derive(Clone, Debug)]
pub struct CompileOpts {
    pub enable_sin_subst: bool,
    /// Perforation factor per `redseq` site label (`L0`, `L1`, ...).
    pub perforation: BTreeMap<String, u64>,
    pub weaken_to: Option<E>,
    /// Trials per sampled side condition.
    pub sample_budget: usize,
    pub seed: u64,
    pub eval: EvalConfig,
}

impl Default for CompileOpts {
    fn default() -> Self {
        CompileOpts {
            enable_sin_subst: false,
            perforation: BTreeMap::new(),
            weaken_to: None,
            sample_budget: 100,
            seed: 42,
            eval: EvalConfig::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct CompileResult {
    pub approx: E,
    pub err: E,
    pub family: ApproxTy,
    pub derivation: Derivation,
}

#[derive(Debug, Clone, Error)]
pub enum CompileError {
    #[error("no rule applies at `{location}`: {reason}")]
    NoRuleApplies { location: String, reason: String },
    #[error("side condition failed: {description}; counterexample: {counterexample}")]
    SideConditionFailed { description: String, counterexample: String },
    #[error(transparent)]
    TypeMismatch(#[from] TypeError),
    #[error("invalid option: {0}")]
    InvalidOption(String),
}

fn location(e: &E) -> String {
    let s = e.to_string();
    if s.chars().count() > 80 {
        format!("{}...", s.chars().take(77).collect::<String>())
    } else {
        s
    }
}

fn no_rule(e: &E, reason: impl Into<String>) -> CompileError {
    CompileError::NoRuleApplies { location: location(e), reason: reason.into() }
}

fn mismatch(e: &E, expected: &ApproxTy, found: &ApproxTy) -> CompileError {
    CompileError::TypeMismatch(TypeError::TypeMismatch {
        expected: expected.to_string(),
        found: found.to_string(),
        location: location(e),
    })
}

fn family_of(t: &Ty, e: &E) -> Result<ApproxTy, CompileError> {
    ApproxTy::for_exact_type(t).ok_or_else(|| no_rule(e, format!("type {t} has no approximation family")))
}

/// Nearest binary64 and the exact rounding distance.
pub fn lower_literal(r: &BigRational) -> (f64, ErrVal) {
    let f = round_rational(r, RoundMode::Nearest);
    match f64_to_rational(f) {
        Some(v) => (f, ErrVal::Finite((r - v).abs())),
        None => (f, ErrVal::Infinity),
    }
}

/// Float counterpart and error term of a real or natural builtin.
fn op_rule(op: Op) -> Option<(Op, E)> {
    use Op::*;
    let (x, xq, y, yq) = (Expr::var("x"), Expr::var("x^q"), Expr::var("y"), Expr::var("y^q"));
    let binary = |t: Ty, q: Ty, body: E| {
        Expr::lam("x", t.clone(), Expr::lam("x^q", q.clone(), Expr::lam("y", t, Expr::lam("y^q", q, body))))
    };
    let unary = |t: Ty, q: Ty, body: E| Expr::lam("x", t, Expr::lam("x^q", q, body));
    let nat_bin = |body: E| binary(Ty::Nat, Ty::Nat, body);
    let real_bin = |body: E| binary(Ty::Real, Ty::ErrReal, body);
    let nat_sum = Expr::op(AddN, vec![xq.clone(), yq.clone()]);
    let nat_zero_if = |cond_err: E, otherwise: E| {
        Expr::ite(Expr::op(EqN, vec![cond_err, Expr::nat(0)]), Expr::nat(0), otherwise)
    };
    Some(match op {
        AddR | SubR | MulR | DivR => {
            let (f, q) = match op {
                AddR => (AddF, FpErrAdd),
                SubR => (SubF, FpErrSub),
                MulR => (MulF, FpErrMul),
                _ => (DivF, FpErrDiv),
            };
            (f, real_bin(Expr::op(q, vec![x, xq, y, yq])))
        }
        LeqR => (LeqF, real_bin(Expr::op(FpErrLeq, vec![x, xq, y, yq]))),
        SinR => (SinF, unary(Ty::Real, Ty::ErrReal, Expr::op(FpErrSin, vec![x, xq]))),
        AbsR => (AbsF, unary(Ty::Real, Ty::ErrReal, xq)),
        NatToReal => (NatToFloat, unary(Ty::Nat, Ty::Nat, Expr::op(FpErrNatToFloat, vec![x, xq]))),
        AddN | SubN | DistN => (op, nat_bin(nat_sum)),
        // |xy - x'y'| <= x |y - y'| + |y'| |x - x'|
        MulN => (
            op,
            nat_bin(Expr::op(
                AddN,
                vec![
                    Expr::op(MulN, vec![x, yq.clone()]),
                    Expr::op(MulN, vec![Expr::op(AddN, vec![y, yq]), xq]),
                ],
            )),
        ),
        DivN => (
            op,
            nat_bin(Expr::ite(
                Expr::op(EqN, vec![yq, Expr::nat(0)]),
                nat_zero_if(xq.clone(), Expr::op(AddN, vec![Expr::op(DivN, vec![xq, y]), Expr::nat(1)])),
                Expr::bottom(Ty::Nat),
            )),
        ),
        FloorK | CeilK => (
            op,
            nat_bin(Expr::ite(
                Expr::op(EqN, vec![yq, Expr::nat(0)]),
                nat_zero_if(xq.clone(), Expr::op(AddN, vec![xq, y])),
                Expr::bottom(Ty::Nat),
            )),
        ),
        LeqN | EqN => (
            op,
            nat_bin(Expr::ite(
                Expr::op(EqN, vec![nat_sum, Expr::nat(0)]),
                Expr::err_zero(),
                Expr::err(ErrVal::from_int(1)),
            )),
        ),
        _ => return None,
    })
}

/// Error term of `sinr` when it is replaced by the identity.
pub fn sin_subst_err() -> E {
    let (x, xq) = (Expr::var("x"), Expr::var("x^q"));
    Expr::lam(
        "x",
        Ty::Real,
        Expr::lam(
            "x^q",
            Ty::ErrReal,
            Expr::op(Op::AddQ, vec![xq, Expr::op(Op::DistR, vec![x.clone(), Expr::op(Op::SinR, vec![x])])]),
        ),
    )
}

/// A compiled subterm.
struct Out {
    approx: E,
    err: E,
    family: ApproxTy,
    deriv: Derivation,
}

enum Check {
    Member { fam: ApproxTy, q: E, a: E, e: E },
    Aeq { fam: ApproxTy, q: E, e1: E, e2: E },
    Leq { fam: ApproxTy, q1: E, q2: E },
}

/// A side condition validated once all fixed-point slots are filled.
struct Pending {
    node: usize,
    description: String,
    ctx: ApproxCtx,
    check: Check,
}

struct Compiler<'o> {
    opts: &'o CompileOpts,
    sites: Vec<E>,
    next_id: usize,
    pending: Vec<Pending>,
}

impl Compiler<'_> {
    #[allow(clippy::too_many_arguments)]
    fn node(
        &mut self,
        rule: Rule,
        ctx: &ApproxCtx,
        exact: &E,
        approx: E,
        err: E,
        family: ApproxTy,
        premises: Vec<Derivation>,
    ) -> Result<Out, CompileError> {
        // Every conclusion must be well typed under the projected contexts.
        let found_a = infer_type(&ctx.approx_ctx(), &approx)?;
        if found_a != family.approx_ty() {
            return Err(TypeError::TypeMismatch {
                expected: family.approx_ty().to_string(),
                found: found_a.to_string(),
                location: location(&approx),
            }
            .into());
        }
        let found_q = infer_type(&ctx.err_ctx(), &err)?;
        if found_q != family.err_ty() {
            return Err(TypeError::TypeMismatch {
                expected: family.err_ty().to_string(),
                found: found_q.to_string(),
                location: location(&err),
            }
            .into());
        }
        let id = self.next_id;
        self.next_id += 1;
        let deriv = Derivation {
            id,
            rule,
            site: None,
            context: ctx.describe(),
            family: family.to_string(),
            exact: exact.to_string(),
            approx: approx.to_string(),
            err: err.to_string(),
            side_conditions: Vec::new(),
            premises,
        };
        Ok(Out { approx, err, family, deriv })
    }

    fn require(&mut self, node: usize, ctx: &ApproxCtx, description: impl Into<String>, check: Check) {
        self.pending.push(Pending { node, description: description.into(), ctx: ctx.clone(), check });
    }

    fn compile(&mut self, ctx: &ApproxCtx, e: &E) -> Result<Out, CompileError> {
        match &**e {
            Expr::Var(x) => {
                let fam = ctx.lookup(x).ok_or_else(|| TypeError::UnboundVariable(x.clone()))?.clone();
                self.node(Rule::AVar, ctx, e, e.clone(), Expr::var(err_name(x)), fam, vec![])
            }
            Expr::Lam(x, t, body) => {
                let dom = family_of(t, e)?;
                let inner = ctx.push(CtxEntry::Val { name: x.clone(), family: dom.clone() });
                let b = self.compile(&inner, body)?;
                let approx = Expr::lam(x.clone(), dom.approx_ty(), b.approx);
                let err = Expr::lam(x.clone(), t.clone(), Expr::lam(err_name(x), dom.err_ty(), b.err));
                self.node(Rule::ALam, ctx, e, approx, err, ApproxTy::pi(dom, b.family), vec![b.deriv])
            }
            Expr::App(f, arg) => {
                let fo = self.compile(ctx, f)?;
                let ao = self.compile(ctx, arg)?;
                self.application(ctx, e, fo, arg, ao)
            }
            Expr::Builtin(op, args) => {
                let mut acc = self.op_leaf(ctx, e, *op)?;
                for (k, arg) in args.iter().enumerate() {
                    let ao = self.compile(ctx, arg)?;
                    let partial = Expr::op(*op, args[..=k].to_vec());
                    acc = self.application(ctx, &partial, acc, arg, ao)?;
                }
                Ok(acc)
            }
            Expr::TyLam(x, body) => {
                let inner = ctx.push(CtxEntry::Ty { name: x.clone() });
                let b = self.compile(&inner, body)?;
                let approx = Expr::tylam(x.clone(), b.approx);
                let err = poly_abstraction(x, b.err);
                self.node(Rule::ATLam, ctx, e, approx, err, ApproxTy::pi_ty(x.clone(), b.family), vec![b.deriv])
            }
            Expr::TyApp(inner, t) => {
                let io = self.compile(ctx, inner)?;
                let ApproxTy::PiTy(x, body) = &io.family else {
                    return Err(no_rule(e, format!("type application of a value in {}", io.family)));
                };
                let fam = family_of(t, e)?;
                let approx = Expr::tyapp(io.approx.clone(), fam.approx_ty());
                let err = simplify(&instantiate_err(io.err.clone(), &fam));
                let result = body.instantiate(x, &fam);
                self.node(Rule::ATApp, ctx, e, approx, err, result, vec![io.deriv])
            }
            Expr::Fix(inner) => self.fix(ctx, e, inner),
            Expr::If(c, t, f) => self.branch(ctx, e, c, t, f),
            Expr::RealLit(r) => {
                let (a, q) = lower_literal(r);
                self.node(Rule::RLit, ctx, e, Expr::float(a), Expr::err(q), ApproxTy::FlBase, vec![])
            }
            Expr::NatLit(_) => self.node(Rule::RLit, ctx, e, e.clone(), Expr::nat(0), ApproxTy::NatBase, vec![]),
            Expr::BoolLit(_) => {
                self.node(Rule::RLit, ctx, e, e.clone(), Expr::err_zero(), ApproxTy::BoolBase, vec![])
            }
            Expr::RedSeq(c, n, g) => {
                let idx = self.sites.iter().position(|s| Arc::ptr_eq(s, e));
                let label = idx.map(site_label);
                let k = label.as_ref().and_then(|l| self.opts.perforation.get(l)).copied().unwrap_or(1);
                self.perforate(ctx, e, c, n, g, k, label)
            }
            _ => Err(no_rule(e, "not an exact program construct")),
        }
    }

    fn application(&mut self, ctx: &ApproxCtx, e: &E, fo: Out, arg: &E, ao: Out) -> Result<Out, CompileError> {
        let ApproxTy::Pi(dom, cod) = &fo.family else {
            return Err(no_rule(e, format!("application of a value in {}", fo.family)));
        };
        if **dom != ao.family {
            return Err(mismatch(arg, dom, &ao.family));
        }
        let approx = Expr::app(fo.approx.clone(), ao.approx.clone());
        let err = apply(fo.err.clone(), [arg.clone(), ao.err.clone()]);
        let cod = (**cod).clone();
        self.node(Rule::AApp, ctx, e, approx, err, cod, vec![fo.deriv, ao.deriv])
    }

    fn op_leaf(&mut self, ctx: &ApproxCtx, e: &E, op: Op) -> Result<Out, CompileError> {
        let exact = Expr::op(op, vec![]);
        let fam = family_of(&op.residual_type(0), e)?;
        if op == Op::SinR && self.opts.enable_sin_subst {
            let approx = Expr::lam("x", Ty::Float64, Expr::var("x"));
            return self.node(Rule::RSinSubst, ctx, &exact, approx, sin_subst_err(), fam, vec![]);
        }
        let (fop, err) = op_rule(op).ok_or_else(|| no_rule(e, format!("`{op}` has no approximation")))?;
        self.node(Rule::ROp, ctx, &exact, Expr::op(fop, vec![]), err, fam, vec![])
    }

    fn fix(&mut self, ctx: &ApproxCtx, e: &E, inner: &E) -> Result<Out, CompileError> {
        let Expr::Lam(f, t, body) = &**inner else {
            return Err(no_rule(e, "fixed points must be taken of a lambda"));
        };
        let fam = family_of(t, e)?;
        let slot = Arc::new(OnceLock::new());
        let inner_ctx = ctx.push(CtxEntry::Fix { name: f.clone(), family: fam.clone(), slot: slot.clone() });
        let b = self.compile(&inner_ctx, body)?;
        if b.family != fam {
            return Err(mismatch(body, &fam, &b.family));
        }
        let a_fn = Expr::lam(f.clone(), fam.approx_ty(), b.approx.clone());
        let q_fn = Expr::lam(f.clone(), t.clone(), Expr::lam(err_name(f), fam.err_ty(), b.err.clone()));
        let _ = slot.set(Triple { exact: inner.clone(), approx: a_fn.clone(), err: q_fn.clone() });
        let lam = self.node(Rule::ALam, ctx, inner, a_fn.clone(), q_fn.clone(), ApproxTy::pi(fam.clone(), fam.clone()), vec![b.deriv])?;
        let err = simplify(&Expr::fix(Expr::app(q_fn, Expr::fix(inner.clone()))));
        self.node(Rule::AFix, ctx, e, Expr::fix(a_fn), err, fam, vec![lam.deriv])
    }

    fn branch(&mut self, ctx: &ApproxCtx, e: &E, c: &E, t: &E, f: &E) -> Result<Out, CompileError> {
        let co = self.compile(ctx, c)?;
        if co.family != ApproxTy::BoolBase {
            return Err(mismatch(c, &ApproxTy::BoolBase, &co.family));
        }
        let to = self.compile(ctx, t)?;
        let fo = self.compile(ctx, f)?;
        if to.family != fo.family {
            return Err(mismatch(f, &to.family, &fo.family));
        }
        let fam = to.family.clone();
        let certain = self.is_exact_condition(&co.err);
        let err = if certain {
            Expr::ite(c.clone(), to.err.clone(), fo.err.clone())
        } else {
            // When the approximate condition may differ, a branch's error also
            // covers the distance to the other branch's approximation.
            let dist = |x: &E, y: &E| {
                fam.distance(x.clone(), y.clone())
                    .ok_or_else(|| no_rule(e, format!("condition may be wrong and branches are in {fam}")))
            };
            let maybe_wrong = Expr::op(Op::LeqQ, vec![Expr::err(ErrVal::from_int(1)), co.err.clone()]);
            let cross = |d: E, q: &E| Expr::ite(maybe_wrong.clone(), fam.add(d, q.clone()), fam.zero());
            let then_err = fam.add(to.err.clone(), cross(dist(t, f)?, &fo.err));
            let else_err = fam.add(fo.err.clone(), cross(dist(f, t)?, &to.err));
            Expr::ite(c.clone(), simplify(&then_err), simplify(&else_err))
        };
        let approx = Expr::ite(co.approx.clone(), to.approx.clone(), fo.approx.clone());
        let out = self.node(Rule::AIf, ctx, e, approx.clone(), err.clone(), fam.clone(), vec![co.deriv, to.deriv, fo.deriv])?;
        let description = if certain {
            "branches agree: condition is exact"
        } else {
            "cross-branch bound covers every condition outcome within its error"
        };
        self.require(out.deriv.id, ctx, description, Check::Member { fam, q: err, a: approx, e: e.clone() });
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn perforate(
        &mut self,
        ctx: &ApproxCtx,
        e: &E,
        c: &E,
        n: &E,
        g: &E,
        k: u64,
        label: Option<String>,
    ) -> Result<Out, CompileError> {
        if k == 0 {
            return Err(CompileError::InvalidOption("perforation factor must be at least 1".into()));
        }
        let elem = match &**c {
            Expr::Builtin(Op::AddR, a) if a.is_empty() => ApproxTy::FlBase,
            Expr::Builtin(Op::AddN, a) if a.is_empty() => ApproxTy::NatBase,
            _ => return Err(no_rule(e, "the combiner must be +r or +n")),
        };
        let co = self.compile(ctx, c)?;
        let no = self.compile(ctx, n)?;
        let go = self.compile(ctx, g)?;
        if no.family != ApproxTy::NatBase {
            return Err(mismatch(n, &ApproxTy::NatBase, &no.family));
        }
        let gen_fam = ApproxTy::pi(ApproxTy::NatBase, elem.clone());
        if go.family != gen_fam {
            return Err(mismatch(g, &gen_fam, &go.family));
        }
        self.require_exact_count(n, &no.err)?;

        let kk = Expr::nat(k);
        let (x, i, acc, accq, lp) = ("x^p", "i^p", "acc^p", "accq^p", "loop^p");
        let floor = |v: E| Expr::op(Op::FloorK, vec![v, kk.clone()]);
        let count = if k == 1 { n.clone() } else { Expr::op(Op::CeilK, vec![n.clone(), kk.clone()]) };

        let approx = if k == 1 {
            Expr::redseq(co.approx.clone(), no.approx.clone(), go.approx.clone())
        } else {
            let at = elem.approx_ty();
            let mut body = Expr::var(acc);
            for _ in 0..k {
                body = Expr::apps(co.approx.clone(), [Expr::var(x), body]);
            }
            let combine = Expr::lam(x, at.clone(), Expr::lam(acc, at, body));
            let groups = Expr::op(
                Op::DivN,
                vec![Expr::op(Op::AddN, vec![no.approx.clone(), Expr::nat(k - 1)]), kk.clone()],
            );
            let gen = Expr::lam(i, Ty::Nat, Expr::app(go.approx.clone(), Expr::op(Op::MulN, vec![Expr::var(i), kk.clone()])));
            Expr::redseq(combine, groups, gen)
        };

        // Per-element bound: the exact distance between the element and the
        // element at the start of its group.
        let elem_dist = |v: E| {
            elem.distance(Expr::app(g.clone(), v.clone()), Expr::app(g.clone(), floor(v)))
                .expect("ground element family")
        };
        let per_elem = Expr::lam(x, Ty::Nat, elem_dist(Expr::var(x)));
        let grouping = Expr::redseq(elem.plus(), count.clone(), per_elem.clone());

        // Error of combining the group-start elements in the approximate
        // world, accumulated along the exact perforated reduction.
        let et = elem.exact_ty();
        let qt = elem.err_ty();
        let start = Expr::app(g.clone(), floor(Expr::var(i)));
        let start_err = apply(go.err.clone(), [floor(Expr::var(i)), Expr::nat(0)]);
        let step = Expr::ite(
            Expr::op(Op::EqN, vec![Expr::var(i), count.clone()]),
            Expr::var(accq),
            Expr::apps(
                Expr::var(lp),
                [
                    Expr::op(Op::AddN, vec![Expr::var(i), Expr::nat(1)]),
                    Expr::apps(c.clone(), [start.clone(), Expr::var(acc)]),
                    apply(co.err.clone(), [start, start_err, Expr::var(acc), Expr::var(accq)]),
                ],
            ),
        );
        let loop_ty = Ty::arrows([Ty::Nat, et.clone(), qt.clone()], qt.clone());
        let fold = Expr::fix(Expr::lam(
            lp,
            loop_ty,
            Expr::lam(i, Ty::Nat, Expr::lam(acc, et, Expr::lam(accq, qt, step))),
        ));
        let exact_zero = if elem == ApproxTy::FlBase { Expr::real_int(0) } else { Expr::nat(0) };
        let rounding = Expr::apps(fold, [Expr::nat(0), exact_zero, elem.zero()]);

        let divisible = matches!(&**n, Expr::NatLit(v) if (v % BigUint::from(k)).is_zero());
        let tail = if k == 1 || divisible {
            elem.zero()
        } else {
            elem.distance(Expr::redseq(c.clone(), n.clone(), g.clone()), Expr::redseq(c.clone(), count.clone(), g.clone()))
                .expect("ground element family")
        };
        let err = simplify(&elem.add(elem.add(grouping, rounding), tail.clone()));

        let mut out = self.node(Rule::RPerforate, ctx, e, approx, err, elem.clone(), vec![co.deriv, no.deriv, go.deriv])?;
        out.deriv.site = label;
        let id = out.deriv.id;
        let per_elem_err = Expr::lam(x, Ty::Nat, Expr::lam("x^q^p", Ty::Nat, elem_dist(Expr::var(x))));
        let grouped = Expr::lam(x, Ty::Nat, Expr::app(g.clone(), floor(Expr::var(x))));
        self.require(
            id,
            ctx,
            "each element is within the per-element bound of its group start",
            Check::Aeq { fam: gen_fam, q: per_elem_err, e1: g.clone(), e2: grouped },
        );
        if k > 1 {
            self.require(
                id,
                ctx,
                "rounding the count up to a multiple of the factor stays within the tail bound",
                Check::Aeq {
                    fam: elem,
                    q: tail,
                    e1: Expr::redseq(c.clone(), n.clone(), g.clone()),
                    e2: Expr::redseq(c.clone(), count, g.clone()),
                },
            );
        }
        Ok(out)
    }

    /// Whether a condition's error is provably zero: a literal zero, or a
    /// closed term that evaluates to zero.
    fn is_exact_condition(&self, err: &E) -> bool {
        match &**err {
            Expr::ErrLit(v) => *v == ErrVal::zero(),
            _ if err.free_vars().is_empty() => matches!(
                eval_exact(err, &Env::new(), &self.opts.eval),
                Ok(Value::Err(v)) if v == crate::oracle::ErrEnclosure::zero()
            ),
            _ => false,
        }
    }

    /// The iteration count must be approximated exactly.
    fn require_exact_count(&self, n: &E, err: &E) -> Result<(), CompileError> {
        let err = simplify(err);
        if matches!(&*err, Expr::NatLit(v) if v.is_zero()) {
            return Ok(());
        }
        if err.free_vars().is_empty() {
            if let Ok(Value::Nat(v)) = eval_exact(&err, &Env::new(), &self.opts.eval) {
                if v.is_zero() {
                    return Ok(());
                }
            }
        }
        Err(no_rule(n, "the iteration count must be approximated with zero error"))
    }

    fn validate(&self, root: &mut Derivation) -> Result<(), CompileError> {
        for (k, p) in self.pending.iter().enumerate() {
            let cfg = CheckConfig {
                trials: self.opts.sample_budget,
                seed: self.opts.seed,
                stream: stream_id(&format!("side/{}/{k}", p.node)),
                eval: self.opts.eval,
            };
            let verdict = match &p.check {
                Check::Member { fam, q, a, e } => member_in_ctx(&p.ctx, fam, q, a, e, &cfg),
                Check::Aeq { fam, q, e1, e2 } => aeq_in_ctx(&p.ctx, fam, q, e1, e2, &cfg),
                Check::Leq { fam, q1, q2 } => err_leq_in_ctx(&p.ctx, fam, q1, q2, &cfg),
            };
            if verdict.status == Status::Fail {
                let r = &verdict.failures[0];
                return Err(CompileError::SideConditionFailed {
                    description: p.description.clone(),
                    counterexample: format!(
                        "inputs [{}]; {} vs {}; bound {}; distance {}; {}",
                        r.inputs.join("; "),
                        r.exact,
                        r.approx,
                        r.bound,
                        r.distance,
                        r.reason
                    ),
                });
            }
            if let Some(node) = root.find_mut(p.node) {
                node.side_conditions.push(SideCondition { description: p.description.clone(), verdict });
            }
        }
        Ok(())
    }
}

/// Compiles `e` at family `target` under `ctx`.
pub fn compile(ctx: &ApproxCtx, e: &E, target: &ApproxTy, opts: &CompileOpts) -> Result<CompileResult, CompileError> {
    let sites = redseq_sites(e);
    for label in opts.perforation.keys() {
        if !(0..sites.len()).any(|i| site_label(i) == *label) {
            return Err(CompileError::InvalidOption(format!("no redseq site {label}")));
        }
    }
    let mut c = Compiler { opts, sites, next_id: 0, pending: Vec::new() };
    let mut out = c.compile(ctx, e)?;
    if out.family != *target {
        return Err(mismatch(e, target, &out.family));
    }
    if let Some(w) = &opts.weaken_to {
        let q = out.err.clone();
        let fam = out.family.clone();
        let weak = c.node(Rule::AWeak, ctx, e, out.approx.clone(), w.clone(), fam.clone(), vec![out.deriv])?;
        c.require(weak.deriv.id, ctx, "weakened bound is at least the derived bound", Check::Leq { fam, q1: q, q2: w.clone() });
        out = weak;
    }
    let mut derivation = out.deriv;
    c.validate(&mut derivation)?;
    Ok(CompileResult { approx: out.approx, err: out.err, family: out.family, derivation })
}

/// Compiles a closed program at the family of its type.
pub fn compile_closed(e: &E, opts: &CompileOpts) -> Result<CompileResult, CompileError> {
    let t = infer_type(&crate::lang::TyCtx::new(), e)?;
    let fam = family_of(&t, e)?;
    compile(&ApproxCtx::new(), e, &fam, opts)
}

/// `q + c` with the constant `c` lifted to `fam`; naturals round `c` up.
pub fn weaken_by(fam: &ApproxTy, q: &E, c: &BigRational) -> E {
    fn constant(fam: &ApproxTy, c: &BigRational) -> E {
        match fam {
            ApproxTy::FlBase | ApproxTy::BoolBase => Expr::err(ErrVal::Finite(c.clone())),
            ApproxTy::NatBase => {
                let n = c.ceil().to_integer().to_biguint().unwrap_or_default();
                Arc::new(Expr::NatLit(n))
            }
            ApproxTy::Pi(d, cod) => Expr::lam("z^w", d.exact_ty(), Expr::lam("z^w^q", d.err_ty(), constant(cod, c))),
            ApproxTy::PiTy(x, body) => poly_abstraction(x, constant(body, c)),
            ApproxTy::FamVar(x) => Expr::var(crate::approx::zero_name(x)),
        }
    }
    simplify(&fam.add(q.clone(), constant(fam, c)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{elaborate, parse, TyCtx};

    fn p(src: &str) -> E {
        elaborate(&TyCtx::new(), &parse(src).unwrap()).unwrap().0
    }

    fn run(src: &str) -> CompileResult {
        compile_closed(&p(src), &CompileOpts::default()).unwrap()
    }

    #[test]
    fn third_lowers_to_nearest_float() {
        let r = run("1/3");
        assert_eq!(r.approx.to_string(), "(float 0.3333333333333333)");
        let Expr::FloatLit(bits) = &*r.approx else { panic!() };
        assert_eq!(*bits, 0x3FD5555555555555);
        let third = BigRational::new(1.into(), 3.into());
        let expected = (&third - f64_to_rational(1.0 / 3.0).unwrap()).abs();
        assert_eq!(*r.err, Expr::ErrLit(ErrVal::Finite(expected.clone())));
        // 3 * 0x15555555555555 = 2^54 - 1
        assert_eq!(expected, BigRational::new(1.into(), num_bigint::BigInt::from(3) << 54));
    }

    #[test]
    fn identity_function() {
        let r = run("(lam (x Real) x)");
        assert_eq!(r.approx.to_string(), "(lam (x Float64) x)");
        assert_eq!(r.err.to_string(), "(lam (x Real) (lam (x^q ErrReal) x^q))");
        assert_eq!(r.derivation.rules(), [Rule::ALam, Rule::AVar].into_iter().collect());
    }

    #[test]
    fn doubling_uses_float_addition() {
        let r = run("(lam (x Real) (+r x x))");
        assert_eq!(r.approx.to_string(), "(lam (x Float64) (+f x x))");
        assert_eq!(r.err.to_string(), "(lam (x Real) (lam (x^q ErrReal) (fperr+ x x^q x x^q)))");
    }

    #[test]
    fn sine_substitution() {
        let opts = CompileOpts { enable_sin_subst: true, ..CompileOpts::default() };
        let r = compile_closed(&p("sinr"), &opts).unwrap();
        assert_eq!(r.approx.to_string(), "(lam (x Float64) x)");
        assert_eq!(r.err.to_string(), "(lam (x Real) (lam (x^q ErrReal) (+q x^q (dr x (sinr x)))))");
        assert_eq!(r.derivation.rule, Rule::RSinSubst);
    }

    #[test]
    fn polymorphic_identity_and_instantiation() {
        let r = run("(tlam X (lam (x X) x))");
        assert_eq!(r.family.to_string(), "(forall X. (X => X))");
        let r = run("(tyapp (tlam X (lam (x X) x)) Real)");
        assert_eq!(r.family, ApproxTy::pi(ApproxTy::FlBase, ApproxTy::FlBase));
        assert_eq!(r.err.to_string(), "(lam (x Real) (lam (x^q ErrReal) x^q))");
        assert!(r.derivation.rules().contains(&Rule::ATApp));
    }

    #[test]
    fn perforated_sum_of_eight() {
        let src = "(redseq +n 8 (lam (x Nat) x))";
        let mut opts = CompileOpts::default();
        opts.perforation.insert("L0".into(), 2);
        let r = compile_closed(&p(src), &opts).unwrap();
        let cfg = EvalConfig::default();
        let a = eval_exact(&r.approx, &Env::new(), &cfg).unwrap();
        assert_eq!(a.as_nat().unwrap(), &BigUint::from(24u32));
        let q = eval_exact(&r.err, &Env::new(), &cfg).unwrap();
        assert_eq!(q.as_nat().unwrap(), &BigUint::from(4u32));
        assert_eq!(r.derivation.rule, Rule::RPerforate);
        assert_eq!(r.derivation.site.as_deref(), Some("L0"));
        assert_eq!(r.derivation.side_conditions.len(), 2);
        assert!(r.derivation.side_conditions.iter().all(|s| s.verdict.passed()));
    }

    #[test]
    fn perforated_sum_of_seven() {
        let mut opts = CompileOpts::default();
        opts.perforation.insert("L0".into(), 2);
        let r = compile_closed(&p("(redseq +n 7 (lam (x Nat) x))"), &opts).unwrap();
        let cfg = EvalConfig::default();
        assert_eq!(eval_exact(&r.approx, &Env::new(), &cfg).unwrap().as_nat().unwrap(), &BigUint::from(24u32));
        assert_eq!(eval_exact(&r.err, &Env::new(), &cfg).unwrap().as_nat().unwrap(), &BigUint::from(11u32));
    }

    #[test]
    fn unit_perforation_is_identity() {
        let r = run("(redseq +r 5 (lam (x Nat) (nat2real x)))");
        assert_eq!(r.approx.to_string(), "(redseq +f 5 (lam (x Nat) (nat2float x)))");
        let q = eval_exact(&r.err, &Env::new(), &EvalConfig::default()).unwrap();
        assert_eq!(q.as_err().unwrap(), &crate::oracle::ErrEnclosure::zero());
    }

    #[test]
    fn recursion_compiles() {
        let src = "(app (fix (lam (f (-> Nat Real)) (lam (n Nat) (if (eqn n 0) 0.0 (+r (nat2real n) (app f (-n n 1))))))) 10)";
        let r = run(src);
        assert!(r.derivation.rules().contains(&Rule::AFix));
        let cfg = EvalConfig::default();
        let a = eval_exact(&r.approx, &Env::new(), &cfg).unwrap();
        assert_eq!(a.as_float().unwrap(), 55.0);
        let q = eval_exact(&r.err, &Env::new(), &cfg).unwrap();
        assert_eq!(q.as_err().unwrap(), &crate::oracle::ErrEnclosure::zero());
    }

    #[test]
    fn unsupported_constructs_are_reported() {
        let e = p("(lam (x Float64) x)");
        assert!(matches!(compile_closed(&e, &CompileOpts::default()), Err(CompileError::NoRuleApplies { .. })));
        let mut opts = CompileOpts::default();
        opts.perforation.insert("L3".into(), 2);
        assert!(matches!(compile_closed(&p("1.5"), &opts), Err(CompileError::InvalidOption(_))));
    }

    #[test]
    fn weakening_is_checked() {
        let opts = CompileOpts { weaken_to: Some(p("(err 1)")), ..CompileOpts::default() };
        let r = compile_closed(&p("1/3"), &opts).unwrap();
        assert_eq!(r.derivation.rule, Rule::AWeak);
        assert_eq!(r.err.to_string(), "(err 1)");
        let opts = CompileOpts { weaken_to: Some(p("(err 0)")), ..CompileOpts::default() };
        assert!(matches!(compile_closed(&p("1/3"), &opts), Err(CompileError::SideConditionFailed { .. })));
    }
}
