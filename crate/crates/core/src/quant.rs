//! Quantification types: error carriers with a preorder, a monoid and a least
//! zero, plus executable checks of their axioms.
//!
//! Scalar carriers are compared with exact rational arithmetic. Function
//! carriers are compared pointwise on sampled inputs, which can refute but
//! never prove.

use std::fmt;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::Signed;
use rand::Rng;

use crate::eval::par_map;
use crate::lang::{fresh_name, infer_type, ErrVal, Expr, Op, Ty, TyCtx, E};
use crate::report::{AxiomReport, AxiomResult, AxiomStatus};
use crate::sample::{self, stream_id, trial_rng, TrialRng};

#[derive(Clone, Debug)]
pub struct QuantInstance {
    pub name: String,
    pub carrier: Ty,
    pub zero: E,
    pub plus: E,
}

impl QuantInstance {
    /// Nonnegative reals with infinity.
    pub fn reals() -> QuantInstance {
        QuantInstance {
            name: "ErrReal".into(),
            carrier: Ty::ErrReal,
            zero: Expr::err_zero(),
            plus: Expr::op(Op::AddQ, vec![]),
        }
    }

    pub fn nats() -> QuantInstance {
        QuantInstance {
            name: "Nat".into(),
            carrier: Ty::Nat,
            zero: Expr::nat(0),
            plus: Expr::op(Op::AddN, vec![]),
        }
    }

    /// Pointwise lifting over inputs of type `dom`.
    pub fn lift(dom: Ty, inner: &QuantInstance) -> QuantInstance {
        let carrier = Ty::arrow(dom.clone(), inner.carrier.clone());
        let zero = Expr::lam("y", dom.clone(), inner.zero.clone());
        let y = Expr::var("y");
        let plus = Expr::lam(
            "f",
            carrier.clone(),
            Expr::lam(
                "g",
                carrier.clone(),
                Expr::lam(
                    "y",
                    dom.clone(),
                    Expr::apps(
                        inner.plus.clone(),
                        [Expr::app(Expr::var("f"), y.clone()), Expr::app(Expr::var("g"), y)],
                    ),
                ),
            ),
        );
        QuantInstance { name: format!("{dom} => {}", inner.name), carrier, zero, plus }
    }

    pub fn add(&self, a: E, b: E) -> E {
        Expr::apps(self.plus.clone(), [a, b])
    }

    pub fn is_scalar(&self) -> bool {
        !matches!(self.carrier, Ty::Arrow(..))
    }
}

// ---------------------------------------------------------------------------
// exact evaluation of error terms

/// Result of exact evaluation of an error-level term.
#[derive(Clone, Debug, PartialEq)]
pub enum Exact {
    Err(ErrVal),
    Nat(BigUint),
    Real(BigRational),
    Bool(bool),
    /// An abstraction or partial builtin, kept as syntax.
    Fun(E),
}

impl Exact {
    pub fn to_expr(&self) -> E {
        match self {
            Exact::Err(v) => Expr::err(v.clone()),
            Exact::Nat(n) => std::sync::Arc::new(Expr::NatLit(n.clone())),
            Exact::Real(r) => Expr::real(r.clone()),
            Exact::Bool(b) => std::sync::Arc::new(Expr::BoolLit(*b)),
            Exact::Fun(e) => e.clone(),
        }
    }
}

impl fmt::Display for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_expr())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExactError {
    /// Reached `bottom`; as a bound this means infinity.
    Diverged,
    Unsupported(String),
}

/// Call-by-value evaluation by substitution over exact rationals. Covers the
/// literal, lambda and error-arithmetic fragment used by quantification
/// checks; anything else is `Unsupported`.
pub fn eval_exact_term(e: &E) -> Result<Exact, ExactError> {
    let mut fuel = 100_000u32;
    exact(e, &mut fuel)
}

fn exact(e: &E, fuel: &mut u32) -> Result<Exact, ExactError> {
    if *fuel == 0 {
        return Err(ExactError::Unsupported("step limit".into()));
    }
    *fuel -= 1;
    match &**e {
        Expr::ErrLit(v) => Ok(Exact::Err(v.clone())),
        Expr::NatLit(n) => Ok(Exact::Nat(n.clone())),
        Expr::RealLit(r) => Ok(Exact::Real(r.clone())),
        Expr::BoolLit(b) => Ok(Exact::Bool(*b)),
        Expr::Lam(..) | Expr::TyLam(..) => Ok(Exact::Fun(e.clone())),
        Expr::Bottom(_) => Err(ExactError::Diverged),
        Expr::App(f, a) => {
            let f = exact(f, fuel)?;
            let a = exact(a, fuel)?.to_expr();
            match f {
                Exact::Fun(f) => match &*f {
                    Expr::Lam(x, _, body) => exact(&body.subst(x, &a), fuel),
                    Expr::Builtin(..) => exact(&Expr::app(f.clone(), a), fuel),
                    _ => Err(ExactError::Unsupported(format!("apply {f}"))),
                },
                other => Err(ExactError::Unsupported(format!("apply {other}"))),
            }
        }
        Expr::TyApp(f, t) => match exact(f, fuel)? {
            Exact::Fun(f) => match &*f {
                Expr::TyLam(x, body) => exact(&body.subst_ty(x, t), fuel),
                _ => Err(ExactError::Unsupported(format!("type-apply {f}"))),
            },
            other => Err(ExactError::Unsupported(format!("type-apply {other}"))),
        },
        Expr::If(c, t, f) => match exact(c, fuel)? {
            Exact::Bool(true) => exact(t, fuel),
            Exact::Bool(false) => exact(f, fuel),
            other => Err(ExactError::Unsupported(format!("branch on {other}"))),
        },
        Expr::Builtin(op, args) if args.len() < op.arity() => Ok(Exact::Fun(e.clone())),
        Expr::Builtin(op, args) => {
            let vals = args.iter().map(|a| exact(a, fuel)).collect::<Result<Vec<_>, _>>()?;
            delta(*op, &vals)
        }
        _ => Err(ExactError::Unsupported(format!("term {e}"))),
    }
}

fn delta(op: Op, vals: &[Exact]) -> Result<Exact, ExactError> {
    use Exact as X;
    let unsupported = || ExactError::Unsupported(format!("{op} on {vals:?}"));
    Ok(match (op, vals) {
        (Op::AddQ, [X::Err(a), X::Err(b)]) => X::Err(a.add(b)),
        (Op::LeqQ, [X::Err(a), X::Err(b)]) => X::Bool(a.leq(b)),
        (Op::NatToErr, [X::Nat(n)]) => X::Err(ErrVal::Finite(BigRational::from_integer(n.clone().into()))),
        (Op::AddN, [X::Nat(a), X::Nat(b)]) => X::Nat(a + b),
        (Op::MulN, [X::Nat(a), X::Nat(b)]) => X::Nat(a * b),
        (Op::LeqN, [X::Nat(a), X::Nat(b)]) => X::Bool(a <= b),
        (Op::EqN, [X::Nat(a), X::Nat(b)]) => X::Bool(a == b),
        (Op::DistN, [X::Nat(a), X::Nat(b)]) => X::Nat(if a > b { a - b } else { b - a }),
        (Op::AddR, [X::Real(a), X::Real(b)]) => X::Real(a + b),
        (Op::SubR, [X::Real(a), X::Real(b)]) => X::Real(a - b),
        (Op::MulR, [X::Real(a), X::Real(b)]) => X::Real(a * b),
        (Op::AbsR, [X::Real(a)]) => X::Real(a.abs()),
        (Op::LeqR, [X::Real(a), X::Real(b)]) => X::Bool(a <= b),
        (Op::NatToReal, [X::Nat(n)]) => X::Real(BigRational::from_integer(n.clone().into())),
        (Op::DistR, [X::Real(a), X::Real(b)]) => X::Err(ErrVal::Finite((a - b).abs())),
        (Op::DistB, [X::Bool(a), X::Bool(b)]) => X::Err(ErrVal::from_int((a != b) as i64)),
        _ => return Err(unsupported()),
    })
}

// ---------------------------------------------------------------------------
// comparison

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum QVerdict {
    Yes,
    No { witness: String },
    /// No sampled input refuted the comparison.
    YesOnSamples,
    Unsupported(String),
}

impl QVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, QVerdict::Yes | QVerdict::YesOnSamples)
    }
}

fn scalar_value(e: &E) -> Result<Exact, ExactError> {
    match eval_exact_term(e) {
        Err(ExactError::Diverged) => Ok(Exact::Err(ErrVal::Infinity)),
        r => r,
    }
}

/// Exact `q1 <= q2` on a scalar carrier; `None` when evaluation fails.
fn scalar_leq(q1: &E, q2: &E) -> Result<bool, String> {
    let a = scalar_value(q1).map_err(|e| format!("{e:?}"))?;
    let b = scalar_value(q2).map_err(|e| format!("{e:?}"))?;
    match (&a, &b) {
        (Exact::Err(x), Exact::Err(y)) => Ok(x.leq(y)),
        (Exact::Nat(x), Exact::Nat(y)) => Ok(x <= y),
        _ => Err(format!("cannot compare {a} with {b}")),
    }
}

/// Compares along one sampled input path. `path` collects the inputs.
fn leq_path(
    carrier: &Ty,
    q1: &E,
    q2: &E,
    rng: &mut TrialRng,
    path: &mut Vec<String>,
) -> Result<bool, String> {
    match carrier {
        Ty::Arrow(dom, cod) => {
            let zero = path.is_empty() && rng.gen_ratio(1, 8);
            let x = sample_input(dom, rng, zero);
            path.push(x.to_string());
            leq_path(cod, &Expr::app(q1.clone(), x.clone()), &Expr::app(q2.clone(), x), rng, path)
        }
        _ => scalar_leq(q1, q2),
    }
}

/// `q1 <= q2` in `inst`: exact on scalar carriers, sampled on function
/// carriers.
pub fn q_leq(inst: &QuantInstance, q1: &E, q2: &E, trials: usize, seed: u64) -> QVerdict {
    if inst.is_scalar() {
        return match scalar_leq(q1, q2) {
            Ok(true) => QVerdict::Yes,
            Ok(false) => QVerdict::No { witness: format!("{q1} > {q2}") },
            Err(e) => QVerdict::Unsupported(e),
        };
    }
    let stream = stream_id("q_leq");
    for i in 0..trials.max(1) {
        let mut rng = trial_rng(seed, stream, i as u64);
        let mut path = Vec::new();
        match leq_path(&inst.carrier, q1, q2, &mut rng, &mut path) {
            Ok(true) => {}
            Ok(false) => return QVerdict::No { witness: path.join(" ") },
            Err(e) => return QVerdict::Unsupported(e),
        }
    }
    QVerdict::YesOnSamples
}

/// `q1 + q2`, reduced to a value on scalar carriers.
pub fn q_plus(inst: &QuantInstance, q1: &E, q2: &E) -> E {
    let sum = inst.add(q1.clone(), q2.clone());
    if inst.is_scalar() {
        if let Ok(v) = scalar_value(&sum) {
            return v.to_expr();
        }
    }
    sum
}

// ---------------------------------------------------------------------------
// samplers

/// Sampled input of type `ty` for a function carrier.
pub fn sample_input(ty: &Ty, rng: &mut TrialRng, zero: bool) -> E {
    match ty {
        Ty::Real if zero => Expr::real_int(0),
        Ty::Real => Expr::real(sample::real(rng)),
        Ty::ErrReal if zero => Expr::err_zero(),
        Ty::ErrReal => Expr::err(sample::err_val(rng)),
        Ty::Nat if zero => Expr::nat(0),
        Ty::Nat => std::sync::Arc::new(Expr::NatLit(sample::nat(rng))),
        Ty::Bool => std::sync::Arc::new(Expr::BoolLit(rng.gen_bool(0.5))),
        _ => sample_carrier(ty, rng, zero),
    }
}

/// Sampled element of an error carrier; `zero` asks for the constant zero.
pub fn sample_carrier(ty: &Ty, rng: &mut TrialRng, zero: bool) -> E {
    gen_carrier(ty, &mut Vec::new(), rng, zero)
}

fn gen_carrier(ty: &Ty, vars: &mut Vec<(String, Ty)>, rng: &mut TrialRng, zero: bool) -> E {
    match ty {
        Ty::Arrow(dom, cod) => {
            let used = vars.iter().map(|(n, _)| n.clone()).collect();
            let x = fresh_name("y", &used);
            vars.push((x.clone(), (**dom).clone()));
            let body = gen_carrier(cod, vars, rng, zero);
            vars.pop();
            Expr::lam(x, (**dom).clone(), body)
        }
        Ty::ErrReal => {
            if zero {
                return Expr::err_zero();
            }
            let mut acc = Expr::err(if rng.gen_ratio(1, 16) {
                ErrVal::Infinity
            } else {
                ErrVal::Finite(sample::err(rng))
            });
            for (name, t) in vars.iter() {
                if !rng.gen_bool(0.5) {
                    continue;
                }
                let term = match t {
                    Ty::ErrReal => Expr::var(name),
                    Ty::Real => Expr::op(
                        Op::DistR,
                        vec![Expr::var(name), Expr::real(sample::real(rng))],
                    ),
                    Ty::Nat => Expr::op(Op::NatToErr, vec![Expr::var(name)]),
                    _ => continue,
                };
                acc = Expr::op(Op::AddQ, vec![acc, term]);
            }
            acc
        }
        Ty::Nat => {
            if zero {
                return Expr::nat(0);
            }
            let mut acc = std::sync::Arc::new(Expr::NatLit(sample::nat(rng)));
            for (name, t) in vars.iter() {
                if *t == Ty::Nat && rng.gen_bool(0.5) {
                    acc = Expr::op(Op::AddN, vec![acc, Expr::var(name)]);
                }
            }
            acc
        }
        _ => Expr::err_zero(),
    }
}

// ---------------------------------------------------------------------------
// axioms

pub const QUANT_AXIOMS: [&str; 6] =
    ["Closedness", "Monotonicity", "Leastness", "Identity", "Commutativity", "Associativity"];

/// Outcome of one axiom instance: `Ok(None)` holds, `Ok(Some(w))` is refuted
/// with witness `w`.
type Instance = Result<Option<String>, String>;

fn refute(inst: &QuantInstance, lhs: &E, rhs: &E, rng: &mut TrialRng, shown: &[&E]) -> Instance {
    let mut path = Vec::new();
    match leq_path(&inst.carrier, lhs, rhs, rng, &mut path) {
        Ok(true) => Ok(None),
        Ok(false) => {
            let mut w: Vec<String> = shown.iter().map(|e| e.to_string()).collect();
            if !path.is_empty() {
                w.push(format!("at {}", path.join(" ")));
            }
            Ok(Some(w.join(", ")))
        }
        Err(e) => Err(e),
    }
}

fn axiom_instance(inst: &QuantInstance, axiom: &str, rng: &mut TrialRng, first: bool) -> Instance {
    let c = &inst.carrier;
    let q1 = sample_carrier(c, rng, first);
    let q2 = sample_carrier(c, rng, false);
    let q3 = sample_carrier(c, rng, false);
    let both = |rng: &mut TrialRng, a: &E, b: &E, shown: &[&E]| -> Instance {
        if let Some(w) = refute(inst, a, b, rng, shown)? {
            return Ok(Some(w));
        }
        refute(inst, b, a, rng, shown)
    };
    match axiom {
        "Closedness" => {
            let sum = inst.add(q1.clone(), q2.clone());
            match infer_type(&TyCtx::new(), &sum) {
                Ok(t) if t == *c => refute(inst, &sum, &sum, rng, &[&q1, &q2]),
                Ok(t) => Ok(Some(format!("{sum} has type {t}"))),
                Err(e) => Ok(Some(format!("{sum}: {e}"))),
            }
        }
        "Monotonicity" => {
            let d1 = sample_carrier(c, rng, false);
            let d2 = sample_carrier(c, rng, false);
            let q1b = inst.add(q1.clone(), d1);
            let q2b = inst.add(q2.clone(), d2);
            // The premise holds by construction when the sum is increasing;
            // instances where it does not are vacuous.
            let mut path = Vec::new();
            let mut probe = rng.clone();
            if !leq_path(c, &q1, &q1b, &mut probe, &mut path)?
                || !leq_path(c, &q2, &q2b, &mut probe, &mut path)?
            {
                return Ok(None);
            }
            refute(inst, &inst.add(q1.clone(), q2.clone()), &inst.add(q1b.clone(), q2b.clone()), rng, &[&q1, &q1b, &q2, &q2b])
        }
        "Leastness" => refute(inst, &inst.zero, &q1, rng, &[&q1]),
        "Identity" => both(rng, &inst.add(q1.clone(), inst.zero.clone()), &q1, &[&q1]),
        "Commutativity" => both(rng, &inst.add(q1.clone(), q2.clone()), &inst.add(q2.clone(), q1.clone()), &[&q1, &q2]),
        "Associativity" => both(
            rng,
            &inst.add(q1.clone(), inst.add(q2.clone(), q3.clone())),
            &inst.add(inst.add(q1.clone(), q2.clone()), q3.clone()),
            &[&q1, &q2, &q3],
        ),
        other => Err(format!("unknown axiom {other}")),
    }
}

/// Checks all six axioms on `trials` sampled instances each. Trial 0 of each
/// axiom uses the zero element as its first sample.
pub fn check_quant_axioms(inst: &QuantInstance, trials: usize, seed: u64) -> AxiomReport {
    let results = QUANT_AXIOMS
        .iter()
        .map(|axiom| {
            let stream = stream_id(&format!("quant/{}/{axiom}", inst.name));
            let outcomes = par_map(trials.max(1), |i| {
                let mut rng = trial_rng(seed, stream, i as u64);
                axiom_instance(inst, axiom, &mut rng, i == 0)
            });
            let mut status =
                if inst.is_scalar() { AxiomStatus::Pass } else { AxiomStatus::PassOnSamples };
            let mut witness = None;
            let mut note = None;
            for o in outcomes {
                match o {
                    Ok(None) => {}
                    Ok(Some(w)) => {
                        status = AxiomStatus::Fail;
                        witness = Some(w);
                        break;
                    }
                    Err(e) => {
                        status = AxiomStatus::Inconclusive;
                        note = Some(e);
                        break;
                    }
                }
            }
            AxiomResult { axiom: axiom.to_string(), status, trials: trials.max(1), witness, note }
        })
        .collect();
    AxiomReport::new(format!("quant {}", inst.name), seed, results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse;

    fn p(s: &str) -> E {
        parse(s).unwrap()
    }

    #[test]
    fn scalar_comparisons() {
        let r = QuantInstance::reals();
        assert_eq!(q_leq(&r, &p("(err 0)"), &p("(err 1/3)"), 1, 0), QVerdict::Yes);
        assert!(matches!(q_leq(&r, &p("(err inf)"), &p("(err 5)"), 1, 0), QVerdict::No { .. }));
        assert_eq!(q_leq(&r, &p("(err 5)"), &p("(bottom ErrReal)"), 1, 0), QVerdict::Yes);
    }

    #[test]
    fn scalar_sums() {
        let r = QuantInstance::reals();
        assert_eq!(q_plus(&r, &p("(err 1/4)"), &p("(err 1/4)")).to_string(), "(err 1/2)");
        assert_eq!(q_plus(&r, &p("(err inf)"), &p("(err 0)")).to_string(), "(err inf)");
    }

    #[test]
    fn lifted_comparison_on_samples() {
        let l = QuantInstance::lift(Ty::ErrReal, &QuantInstance::reals());
        let id = p("(lam (x ErrReal) x)");
        let succ = p("(lam (x ErrReal) (+q x (err 1)))");
        assert_eq!(q_leq(&l, &id, &succ, 50, 3), QVerdict::YesOnSamples);
        assert!(matches!(q_leq(&l, &succ, &id, 50, 3), QVerdict::No { .. }));
    }

    #[test]
    fn real_instance_satisfies_axioms() {
        let rep = check_quant_axioms(&QuantInstance::reals(), 200, 42);
        assert!(rep.all_passed(), "{rep:?}");
        assert!(rep.results.iter().all(|r| r.status == AxiomStatus::Pass));
    }

    #[test]
    fn broken_zero_is_caught() {
        let mut bad = QuantInstance::reals();
        bad.zero = p("(err 1)");
        let rep = check_quant_axioms(&bad, 50, 42);
        let least = rep.results.iter().find(|r| r.axiom == "Leastness").unwrap();
        assert_eq!(least.status, AxiomStatus::Fail);
        assert_eq!(least.witness.as_deref(), Some("(err 0)"));
    }
}
