//! Sampled membership and approximate-equality checks.

use serde::Serialize;

use super::library::{sample_member, NoSampler};
use super::{instantiate_err, ApproxCtx, ApproxTy, CtxEntry, CtxSample, Triple};
use crate::eval::{
    coerce_divergence, eval_approx, eval_exact, par_map, Divergence, Env, EvalConfig, EvalError, Value,
};
use crate::lang::{Expr, E};
use crate::num::Dyadic;
use crate::oracle::{Enclosure, ErrEnclosure, Ext};
use crate::sample::{trial_rng, TrialRng};
use rand::Rng;

/// Grid used when measuring distances; fine enough for subnormal floats.
const DISTANCE_PRECISION: u32 = 1200;

#[derive(Clone, Copy, Debug)]
pub struct CheckConfig {
    pub trials: usize,
    pub seed: u64,
    /// Separates independent sample streams under one seed.
    pub stream: u64,
    pub eval: EvalConfig,
}

impl CheckConfig {
    pub fn new(trials: usize, seed: u64) -> CheckConfig {
        CheckConfig { trials, seed, stream: 0, eval: EvalConfig::default() }
    }

    pub fn with_stream(self, stream: u64) -> CheckConfig {
        CheckConfig { stream, ..self }
    }
}

/// Everything needed to rerun and inspect one failed trial.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Replay {
    pub seed: u64,
    pub stream: u64,
    pub index: u64,
    pub inputs: Vec<String>,
    pub exact: String,
    pub approx: String,
    /// Decimal upper ends; the exact enclosures follow.
    pub bound: String,
    pub distance: String,
    pub bound_exact: String,
    pub distance_exact: String,
    pub reason: String,
}

fn approx_hi(e: &ErrEnclosure) -> String {
    format!("{:e}", e.hi().approx_f64())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Pass {
        /// Enclosure width needed to pass, when the enclosures overlap.
        slack: Option<Ext>,
        /// The bound was infinite.
        vacuous: bool,
    },
    Fail(Box<Replay>),
    Inconclusive(String),
}

impl Outcome {
    pub fn is_pass(&self) -> bool {
        matches!(self, Outcome::Pass { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Verdict {
    pub status: Status,
    pub trials: usize,
    pub passes: usize,
    /// Passes that needed the enclosure width.
    pub slack_passes: usize,
    /// Passes against an infinite bound.
    pub vacuous_passes: usize,
    /// Largest enclosure width any pass relied on.
    pub max_slack: String,
    pub inconclusive: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inconclusive_reason: Option<String>,
    pub failures: Vec<Replay>,
}

impl Verdict {
    pub fn from_outcomes(outcomes: Vec<Outcome>) -> Verdict {
        let trials = outcomes.len();
        let (mut passes, mut slack_passes, mut vacuous_passes, mut inconclusive) = (0, 0, 0, 0);
        let mut max_slack = Ext::Fin(Dyadic::zero());
        let mut reason = None;
        let mut failures = Vec::new();
        for o in outcomes {
            match o {
                Outcome::Pass { slack, vacuous } => {
                    passes += 1;
                    vacuous_passes += vacuous as usize;
                    if let Some(w) = slack {
                        slack_passes += 1;
                        max_slack = max_slack.max(w);
                    }
                }
                Outcome::Fail(r) => failures.push(*r),
                Outcome::Inconclusive(why) => {
                    inconclusive += 1;
                    reason.get_or_insert(why);
                }
            }
        }
        let status = if !failures.is_empty() {
            Status::Fail
        } else if passes == 0 && inconclusive > 0 {
            Status::Inconclusive
        } else {
            Status::Pass
        };
        Verdict {
            status,
            trials,
            passes,
            slack_passes,
            vacuous_passes,
            max_slack: format!("{:e}", max_slack.approx_f64()),
            inconclusive,
            inconclusive_reason: reason,
            failures,
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

// ---------------------------------------------------------------------------
// ground comparison

/// Distance and bound measured on a ground family.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Measurement {
    pub exact: String,
    pub other: String,
    pub distance: ErrEnclosure,
    pub bound: ErrEnclosure,
}

impl Measurement {
    /// `d <= q + w`, where `w` is the combined enclosure width.
    fn outcome(&self, fail: impl FnOnce(&Measurement) -> Replay) -> Outcome {
        let (d, q) = (&self.distance, &self.bound);
        if q.is_infinite() {
            return Outcome::Pass { slack: None, vacuous: true };
        }
        if d.lo() > q.hi() {
            return Outcome::Fail(Box::new(fail(self)));
        }
        let slack = (d.hi() > q.lo()).then(|| add_ext(&d.width(), &q.width()));
        Outcome::Pass { slack, vacuous: false }
    }
}

fn add_ext(a: &Ext, b: &Ext) -> Ext {
    match (a, b) {
        (Ext::Fin(a), Ext::Fin(b)) => Ext::Fin(a + b),
        _ => Ext::Inf,
    }
}

/// Why a ground trial produced no measurement.
enum Skip {
    Pass,
    Fail(String),
    Inconclusive(String),
}

fn eval_bound(q: &E, cfg: &EvalConfig) -> Result<ErrEnclosure, Skip> {
    match coerce_divergence(eval_exact(q, &Env::new(), cfg)) {
        Ok(Value::Err(v)) => Ok(v),
        Ok(Value::Nat(n)) => Ok(ErrEnclosure::point(Dyadic::from_bigint(n.into()))),
        Ok(v) => Err(Skip::Fail(format!("bound evaluated to a {}", v.kind()))),
        Err(EvalError::Stuck(s)) => Err(Skip::Fail(format!("bound is stuck: {s}"))),
        Err(e) => Err(Skip::Inconclusive(format!("bound: {e}"))),
    }
}

fn definite_divergence(r: &Result<Value, EvalError>) -> bool {
    matches!(r, Err(EvalError::Diverged(Divergence::Bottom | Divergence::Undefined)))
}

fn describe(r: &Result<Value, EvalError>) -> String {
    match r {
        Ok(v) => v.to_string(),
        Err(e) => e.to_string(),
    }
}

/// Compares a ground exact value against either an approximation (`member`)
/// or a second exact value.
fn measure_ground(
    fam: &ApproxTy,
    q: &E,
    left: &E,
    right: &E,
    member: bool,
    cfg: &EvalConfig,
) -> Result<Measurement, Skip> {
    let bound = eval_bound(q, cfg)?;
    if bound.is_infinite() {
        return Err(Skip::Pass);
    }
    let lv = eval_exact(left, &Env::new(), cfg);
    let rv = if member { eval_approx(right, &Env::new(), cfg) } else { eval_exact(right, &Env::new(), cfg) };
    match (&lv, &rv) {
        _ if definite_divergence(&lv) && definite_divergence(&rv) => return Err(Skip::Pass),
        (Err(e), _) | (_, Err(e)) if e.is_resource_limit() || *e == EvalError::Inconclusive => {
            return Err(Skip::Inconclusive(e.to_string()));
        }
        (Err(EvalError::Stuck(s)), _) | (_, Err(EvalError::Stuck(s))) => {
            return Err(Skip::Fail(format!("stuck: {s}")));
        }
        (Err(_), _) | (_, Err(_)) => {
            return Err(Skip::Fail(format!(
                "only one side diverges: {} versus {}",
                describe(&lv),
                describe(&rv)
            )))
        }
        _ => {}
    }
    let (lv, rv) = (lv.unwrap_or_else(|_| unreachable!()), rv.unwrap_or_else(|_| unreachable!()));
    let distance = ground_distance(fam, &lv, &rv).map_err(Skip::Fail)?;
    Ok(Measurement { exact: lv.to_string(), other: rv.to_string(), distance, bound })
}

fn ground_distance(fam: &ApproxTy, l: &Value, r: &Value) -> Result<ErrEnclosure, String> {
    let err = |e: EvalError| e.to_string();
    Ok(match fam {
        ApproxTy::FlBase => {
            let e = l.as_real().map_err(err)?;
            let other = match r {
                Value::Float(f) => match Enclosure::from_f64(*f) {
                    Some(enc) => enc,
                    None => return Ok(ErrEnclosure::infinity()),
                },
                v => v.as_real().map_err(err)?.clone(),
            };
            ErrEnclosure::from_real(&e.dist(&other, DISTANCE_PRECISION))
        }
        ApproxTy::NatBase => {
            let (a, b) = (l.as_nat().map_err(err)?, r.as_nat().map_err(err)?);
            let d = if a >= b { a - b } else { b - a };
            ErrEnclosure::point(Dyadic::from_bigint(d.into()))
        }
        ApproxTy::BoolBase => {
            let same = l.as_bool().map_err(err)? == r.as_bool().map_err(err)?;
            ErrEnclosure::point(if same { Dyadic::zero() } else { Dyadic::one() })
        }
        other => return Err(format!("{other} is not a ground family")),
    })
}

/// Measures a closed ground membership instance directly.
pub fn measure_member(fam: &ApproxTy, q: &E, a: &E, e: &E, cfg: &EvalConfig) -> Result<Measurement, String> {
    match measure_ground(fam, q, e, a, true, cfg) {
        Ok(m) => Ok(m),
        Err(Skip::Pass) => Err("bound infinite or both sides diverge".into()),
        Err(Skip::Fail(s) | Skip::Inconclusive(s)) => Err(s),
    }
}

// ---------------------------------------------------------------------------
// trials

struct Trial<'a> {
    cfg: &'a CheckConfig,
    index: u64,
    rng: TrialRng,
    inputs: Vec<String>,
}

impl Trial<'_> {
    fn fail(&self, exact: String, approx: String, bound: String, reason: String) -> Outcome {
        Outcome::Fail(Box::new(Replay {
            seed: self.cfg.seed,
            stream: self.cfg.stream,
            index: self.index,
            inputs: self.inputs.clone(),
            exact,
            approx,
            bound: bound.clone(),
            distance: "-".into(),
            bound_exact: bound,
            distance_exact: "-".into(),
            reason,
        }))
    }

    /// Compares two bounds of `fam` along one sampled input path.
    fn leq(&mut self, fam: &ApproxTy, q1: E, q2: E) -> Outcome {
        match fam {
            ApproxTy::Pi(d, c) => {
                let x = match sample_member(d, &mut self.rng) {
                    Ok(x) => x,
                    Err(e) => return self.no_sampler(e),
                };
                self.inputs.push(format!("{} with error {}", x.exact, x.err));
                let args = [x.exact, x.err];
                self.leq(c, Expr::apps(q1, args.clone()), Expr::apps(q2, args))
            }
            ApproxTy::PiTy(x, body) => {
                let inst = if (self.index + self.inputs.len() as u64).is_multiple_of(2) {
                    ApproxTy::FlBase
                } else {
                    ApproxTy::NatBase
                };
                self.inputs.push(format!("{x} = {inst}"));
                self.leq(&body.instantiate(x, &inst), instantiate_err(q1, &inst), instantiate_err(q2, &inst))
            }
            ApproxTy::FamVar(x) => Outcome::Inconclusive(format!("free family variable {x}")),
            _ => {
                let (b1, b2) = match (eval_bound(&q1, &self.cfg.eval), eval_bound(&q2, &self.cfg.eval)) {
                    (Ok(b1), Ok(b2)) => (b1, b2),
                    (Err(Skip::Inconclusive(s)), _) | (_, Err(Skip::Inconclusive(s))) => {
                        return Outcome::Inconclusive(s)
                    }
                    (Err(Skip::Fail(s)), _) | (_, Err(Skip::Fail(s))) => {
                        return self.fail(q1.to_string(), q2.to_string(), q2.to_string(), s)
                    }
                    _ => unreachable!("bounds never skip as passes"),
                };
                let m = Measurement { exact: q1.to_string(), other: q2.to_string(), distance: b1, bound: b2 };
                m.outcome(|m| Replay {
                    seed: self.cfg.seed,
                    stream: self.cfg.stream,
                    index: self.index,
                    inputs: self.inputs.clone(),
                    exact: m.exact.clone(),
                    approx: m.other.clone(),
                    bound: approx_hi(&m.bound),
                    distance: approx_hi(&m.distance),
                    bound_exact: m.bound.to_string(),
                    distance_exact: m.distance.to_string(),
                    reason: "first bound exceeds second".into(),
                })
            }
        }
    }

    fn no_sampler(&self, e: NoSampler) -> Outcome {
        Outcome::Inconclusive(e.to_string())
    }

    /// Walks down function families by applying both sides to sampled inputs.
    fn run(&mut self, fam: &ApproxTy, q: E, left: E, right: E, member: bool) -> Outcome {
        match fam {
            ApproxTy::Pi(d, c) => {
                let x = match sample_member(d, &mut self.rng) {
                    Ok(x) => x,
                    Err(e) => return self.no_sampler(e),
                };
                self.inputs.push(if member {
                    format!("{} ~ {} with error {}", x.exact, x.approx, x.err)
                } else {
                    format!("{} with error {}", x.exact, x.err)
                });
                let right_arg = if member { x.approx.clone() } else { x.exact.clone() };
                self.run(
                    c,
                    Expr::apps(q, [x.exact.clone(), x.err]),
                    Expr::app(left, x.exact),
                    Expr::app(right, right_arg),
                    member,
                )
            }
            ApproxTy::PiTy(x, body) => {
                // Alternate between the two ground families across trials.
                let inst = if (self.index + self.inputs.len() as u64).is_multiple_of(2) {
                    ApproxTy::FlBase
                } else {
                    ApproxTy::NatBase
                };
                self.inputs.push(format!("{x} = {inst}"));
                let right_ty = if member { inst.approx_ty() } else { inst.exact_ty() };
                self.run(
                    &body.instantiate(x, &inst),
                    instantiate_err(q, &inst),
                    Expr::tyapp(left, inst.exact_ty()),
                    Expr::tyapp(right, right_ty),
                    member,
                )
            }
            ApproxTy::FamVar(x) => Outcome::Inconclusive(format!("free family variable {x}")),
            _ => match measure_ground(fam, &q, &left, &right, member, &self.cfg.eval) {
                Ok(m) => m.outcome(|m| Replay {
                    seed: self.cfg.seed,
                    stream: self.cfg.stream,
                    index: self.index,
                    inputs: self.inputs.clone(),
                    exact: m.exact.clone(),
                    approx: m.other.clone(),
                    bound: approx_hi(&m.bound),
                    distance: approx_hi(&m.distance),
                    bound_exact: m.bound.to_string(),
                    distance_exact: m.distance.to_string(),
                    reason: "distance exceeds bound".into(),
                }),
                Err(Skip::Pass) => Outcome::Pass { slack: None, vacuous: true },
                Err(Skip::Inconclusive(s)) => Outcome::Inconclusive(s),
                Err(Skip::Fail(s)) => self.fail(left.to_string(), right.to_string(), q.to_string(), s),
            },
        }
    }
}

/// Families whose check draws no samples.
fn is_ground(fam: &ApproxTy) -> bool {
    fam.is_base()
}

fn run_trial(cfg: &CheckConfig, index: u64, f: impl FnOnce(&mut Trial) -> Outcome) -> Outcome {
    let mut t = Trial { cfg, index, rng: trial_rng(cfg.seed, cfg.stream, index), inputs: Vec::new() };
    f(&mut t)
}

fn run_trials(cfg: &CheckConfig, ground: bool, f: impl Fn(&mut Trial) -> Outcome + Sync + Send) -> Verdict {
    if ground && cfg.trials > 0 {
        // Deterministic and input-free: every trial would repeat the first.
        let first = run_trial(cfg, 0, &f);
        let outcomes = (0..cfg.trials as u64)
            .map(|i| match &first {
                Outcome::Fail(r) => Outcome::Fail(Box::new(Replay { index: i, ..(**r).clone() })),
                o => o.clone(),
            })
            .collect();
        return Verdict::from_outcomes(outcomes);
    }
    Verdict::from_outcomes(par_map(cfg.trials, |i| run_trial(cfg, i as u64, &f)))
}

/// Checks `e ∈ appr(q, a)` in family `fam` on sampled inputs.
pub fn appr_member(fam: &ApproxTy, q: &E, a: &E, e: &E, cfg: &CheckConfig) -> Verdict {
    run_trials(cfg, is_ground(fam), |t| t.run(fam, q.clone(), e.clone(), a.clone(), true))
}

/// Checks that `e1` and `e2` are approximately equal up to `q`.
pub fn aeq_check(fam: &ApproxTy, q: &E, e1: &E, e2: &E, cfg: &CheckConfig) -> Verdict {
    run_trials(cfg, is_ground(fam), |t| t.run(fam, q.clone(), e1.clone(), e2.clone(), false))
}

/// One trial of a membership check (`member`) or an approximate-equality
/// check.
pub(crate) fn check_once(fam: &ApproxTy, q: &E, left: &E, right: &E, member: bool, cfg: &CheckConfig, index: u64) -> Outcome {
    run_trial(cfg, index, |t| t.run(fam, q.clone(), left.clone(), right.clone(), member))
}

/// Reruns one membership trial.
pub fn replay_member(fam: &ApproxTy, q: &E, a: &E, e: &E, cfg: &CheckConfig, index: u64) -> Outcome {
    run_trial(cfg, index, |t| t.run(fam, q.clone(), e.clone(), a.clone(), true))
}

// ---------------------------------------------------------------------------
// contexts

/// Draws a substitution satisfying `ctx`: family variables become Fl or Nat,
/// values become sampled members and fixed points their unrollings.
pub fn sample_ctx(ctx: &ApproxCtx, rng: &mut TrialRng) -> Result<CtxSample, NoSampler> {
    let mut s = CtxSample::default();
    for entry in ctx.entries() {
        match entry {
            CtxEntry::Ty { name } => {
                let fam = if rng.gen_bool(0.5) { ApproxTy::FlBase } else { ApproxTy::NatBase };
                s.push_ty(name, fam);
            }
            CtxEntry::Val { name, family } => {
                let t = sample_member(&s.family(family), rng)?;
                s.push_val(name, t);
            }
            CtxEntry::Fix { name, slot, .. } => {
                let t = slot.get().ok_or_else(|| NoSampler(format!("unfinished fixed point {name}")))?;
                s.push_val(name, fix_triple(t));
            }
        }
    }
    Ok(s)
}

/// `fix e`, `fix a` and `fix (q (fix e))` for a compiled recursive body.
fn fix_triple(t: &Triple) -> Triple {
    let fe = Expr::fix(t.exact.clone());
    Triple { exact: fe.clone(), approx: Expr::fix(t.approx.clone()), err: Expr::fix(Expr::app(t.err.clone(), fe)) }
}

/// Checks membership under sampled substitutions for `ctx`.
pub fn member_in_ctx(ctx: &ApproxCtx, fam: &ApproxTy, q: &E, a: &E, e: &E, cfg: &CheckConfig) -> Verdict {
    let ground = ctx.is_empty() && is_ground(fam);
    run_trials(cfg, ground, |t| {
        let s = match sample_ctx(ctx, &mut t.rng) {
            Ok(s) => s,
            Err(e) => return t.no_sampler(e),
        };
        t.inputs.extend(s.shown.iter().cloned());
        t.run(&s.family(fam), s.err(q), s.exact(e), s.approx(a), true)
    })
}

/// Checks approximate equality under sampled substitutions for `ctx`.
pub fn aeq_in_ctx(ctx: &ApproxCtx, fam: &ApproxTy, q: &E, e1: &E, e2: &E, cfg: &CheckConfig) -> Verdict {
    let ground = ctx.is_empty() && is_ground(fam);
    run_trials(cfg, ground, |t| {
        let s = match sample_ctx(ctx, &mut t.rng) {
            Ok(s) => s,
            Err(e) => return t.no_sampler(e),
        };
        t.inputs.extend(s.shown.iter().cloned());
        t.run(&s.family(fam), s.err(q), s.exact(e1), s.exact(e2), false)
    })
}

/// Checks `q1 <= q2` in the error order of `fam` under sampled
/// substitutions for `ctx`.
pub fn err_leq_in_ctx(ctx: &ApproxCtx, fam: &ApproxTy, q1: &E, q2: &E, cfg: &CheckConfig) -> Verdict {
    let ground = ctx.is_empty() && is_ground(fam);
    run_trials(cfg, ground, |t| {
        let s = match sample_ctx(ctx, &mut t.rng) {
            Ok(s) => s,
            Err(e) => return t.no_sampler(e),
        };
        t.inputs.extend(s.shown.iter().cloned());
        t.leq(&s.family(fam), s.err(q1), s.err(q2))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{elaborate, parse, ErrVal, TyCtx};
    use num_rational::BigRational;

    fn p(src: &str) -> E {
        elaborate(&TyCtx::new(), &parse(src).unwrap()).unwrap().0
    }

    fn cfg(trials: usize) -> CheckConfig {
        CheckConfig::new(trials, 42)
    }

    const PI_40: &str = "3.141592653589793238462643383279502884197";

    #[test]
    fn pi_against_three() {
        let fl = ApproxTy::FlBase;
        let (e, a) = (p(PI_40), Expr::float(3.0));
        assert!(appr_member(&fl, &p("(err 0.1415927)"), &a, &e, &cfg(1)).passed());
        assert!(appr_member(&fl, &p("(err 0.14159266)"), &a, &e, &cfg(1)).passed());
        let v = appr_member(&fl, &p("(err 0.1415926)"), &a, &e, &cfg(1));
        assert_eq!(v.status, Status::Fail);
        assert_eq!(v.failures[0].bound, "1.415926e-1");
        assert_eq!(v.failures[0].distance, "1.4159265358979323e-1");
    }

    #[test]
    fn representable_value_needs_no_error() {
        let v = appr_member(&ApproxTy::FlBase, &Expr::err_zero(), &Expr::float(1.0), &Expr::real_int(1), &cfg(3));
        assert_eq!((v.status, v.passes, v.slack_passes), (Status::Pass, 3, 0));
    }

    #[test]
    fn third_is_far_from_a_half() {
        let v = appr_member(&ApproxTy::FlBase, &p("(err 1/10)"), &Expr::float(0.5), &p("1/3"), &cfg(1));
        assert_eq!(v.status, Status::Fail);
        assert_eq!(v.failures[0].distance, "1.6666666666666666e-1");
    }

    #[test]
    fn nat_membership_is_exact() {
        let n = ApproxTy::NatBase;
        assert!(appr_member(&n, &Expr::nat(2), &Expr::nat(5), &Expr::nat(3), &cfg(1)).passed());
        assert!(!appr_member(&n, &Expr::nat(1), &Expr::nat(5), &Expr::nat(3), &cfg(1)).passed());
    }

    #[test]
    fn scalar_approximate_equality() {
        let fl = ApproxTy::FlBase;
        let sum = p("(+r 1 2)");
        let v = aeq_check(&fl, &Expr::err_zero(), &sum, &sum, &cfg(1));
        assert!(v.passed(), "{v:?}");
        assert!(aeq_check(&fl, &p("(err 1/2)"), &Expr::real_int(1), &p("5/4"), &cfg(1)).passed());
        assert!(!aeq_check(&fl, &p("(err 1/5)"), &Expr::real_int(1), &p("5/4"), &cfg(1)).passed());
        let inf = Expr::err(ErrVal::Infinity);
        assert!(aeq_check(&fl, &inf, &Expr::real_int(0), &Expr::real_int(1000), &cfg(1)).passed());
    }

    #[test]
    fn doubling_function_is_a_member() {
        let fam = ApproxTy::pi(ApproxTy::FlBase, ApproxTy::FlBase);
        let e = p("(lam (x Real) (+r x x))");
        let a = p("(lam (x Float64) (+f x x))");
        let q = p("(lam (x Real) (lam (xq ErrReal) (fperr+ x xq x xq)))");
        let v = appr_member(&fam, &q, &a, &e, &cfg(200));
        assert!(v.passed(), "{v:?}");
        assert_eq!(v.passes, 200);
        let halved = p("(lam (x Real) (lam (xq ErrReal) xq))");
        let v = appr_member(&fam, &halved, &a, &e, &cfg(200));
        assert_eq!(v.status, Status::Fail);
        let r = &v.failures[0];
        let again = replay_member(&fam, &halved, &a, &e, &cfg(200), r.index);
        assert_eq!(again, Outcome::Fail(Box::new(r.clone())));
    }

    #[test]
    fn polymorphic_identity_is_a_member() {
        let x = ApproxTy::FamVar("X".into());
        let fam = ApproxTy::pi_ty("X", ApproxTy::pi(x.clone(), x));
        let e = p("(tlam X (lam (x X) x))");
        let q = p("(tlam X (tlam Xq (lam (z Xq) (lam (pl (-> Xq Xq Xq)) (lam (x X) (lam (xq Xq) xq))))))");
        let v = appr_member(&fam, &q, &e, &e, &cfg(50));
        assert!(v.passed(), "{v:?}");
        let zero = p("(tlam X (tlam Xq (lam (z Xq) (lam (pl (-> Xq Xq Xq)) (lam (x X) (lam (xq Xq) z))))))");
        assert_eq!(appr_member(&fam, &zero, &e, &e, &cfg(50)).status, Status::Fail);
    }

    #[test]
    fn infinite_bound_admits_divergence() {
        let fl = ApproxTy::FlBase;
        let bottom = p("(bottom Real)");
        let inf = Expr::err(ErrVal::Infinity);
        assert!(appr_member(&fl, &inf, &Expr::float(1.0), &bottom, &cfg(1)).passed());
        let both = appr_member(&fl, &Expr::err_zero(), &p("(bottom Float64)"), &bottom, &cfg(1));
        assert!(both.passed());
        assert!(!appr_member(&fl, &Expr::err_zero(), &Expr::float(1.0), &bottom, &cfg(1)).passed());
    }

    #[test]
    fn measurement_reports_exact_distance() {
        let m = measure_member(
            &ApproxTy::FlBase,
            &Expr::err_zero(),
            &Expr::float(0.5),
            &p("1/2"),
            &EvalConfig::default(),
        )
        .unwrap();
        assert_eq!(m.distance, ErrEnclosure::zero());
        let third = BigRational::new(1.into(), 3.into());
        let m = measure_member(&ApproxTy::FlBase, &Expr::err_zero(), &Expr::float(0.0), &Expr::real(third), &EvalConfig::default()).unwrap();
        assert!(m.distance.hi() > &Ext::Fin(Dyadic::zero()));
    }
}
