//! Sampled checks of the approximation-type and approximate-equality laws.
//!
//! Every instance is built so its hypotheses hold; only the conclusion is
//! checked.

use num_traits::Signed;
use rand::Rng;

use super::check::{check_once, CheckConfig, Outcome};
use super::library::sample_member;
use super::{ApproxTy, Triple};
use crate::eval::par_map;
use crate::lang::{ErrVal, Expr, Op, E};
use crate::num::float::f64_to_rational;
use crate::report::{AxiomReport, AxiomResult, AxiomStatus};
use crate::sample::{self, stream_id, trial_rng, TrialRng};

pub const APPROX_AXIOMS: [&str; 9] = [
    "error weakening",
    "error addition",
    "equivalence",
    "approximate equality",
    "upward closedness",
    "reflexivity",
    "symmetry",
    "triangle",
    "completeness",
];

/// `e'` with `aeq(bound, e, e')` by construction.
fn shift(fam: &ApproxTy, e: E, rng: &mut TrialRng) -> Option<(E, E)> {
    Some(match fam {
        ApproxTy::FlBase => {
            let size = sample::err(rng);
            let delta = sample::real_in(rng, &size);
            let bound = Expr::err(ErrVal::Finite(delta.abs()));
            (Expr::op(Op::AddR, vec![e, Expr::real(delta)]), bound)
        }
        ApproxTy::NatBase => {
            let k = rng.gen_range(0..=3);
            (Expr::op(Op::AddN, vec![e, Expr::nat(k)]), Expr::nat(k))
        }
        ApproxTy::BoolBase => {
            if rng.gen_bool(0.5) {
                let flipped = Expr::ite(e, Expr::bool_lit(false), Expr::bool_lit(true));
                (flipped, Expr::err(ErrVal::from_int(1)))
            } else {
                (e, Expr::err_zero())
            }
        }
        ApproxTy::Pi(d, c) => {
            let (body, bound) = shift(c, Expr::app(e, Expr::var("s")), rng)?;
            (
                Expr::lam("s", d.exact_ty(), body),
                Expr::lam("s", d.exact_ty(), Expr::lam("s^q", d.err_ty(), bound)),
            )
        }
        ApproxTy::PiTy(..) | ApproxTy::FamVar(_) => return None,
    })
}

/// A nonzero-ish error of `fam`.
fn extra_error(fam: &ApproxTy, rng: &mut TrialRng) -> Option<E> {
    match fam {
        ApproxTy::FlBase | ApproxTy::BoolBase => Some(Expr::err(ErrVal::Finite(sample::err(rng)))),
        ApproxTy::NatBase => Some(Expr::nat(rng.gen_range(0..=3))),
        ApproxTy::Pi(d, c) => Some(Expr::lam("s", d.exact_ty(), Expr::lam("s^q", d.err_ty(), extra_error(c, rng)?))),
        _ => None,
    }
}

/// What one instance asks the checker to confirm.
enum Goal {
    Member { q: E, a: E, e: E },
    Aeq { q: E, e1: E, e2: E },
}

fn instance(fam: &ApproxTy, axiom: &str, rng: &mut TrialRng) -> Result<Goal, String> {
    let none = || format!("{fam} has no constructions for {axiom}");
    let Triple { exact: e, approx: a, err: q } = sample_member(fam, rng).map_err(|e| e.to_string())?;
    Ok(match axiom {
        "error weakening" => {
            let more = fam.add(q, extra_error(fam, rng).ok_or_else(none)?);
            Goal::Member { q: more, a, e }
        }
        "error addition" => {
            let (e2, bound) = shift(fam, e, rng).ok_or_else(none)?;
            Goal::Member { q: fam.add(q, bound), a, e: e2 }
        }
        "equivalence" => {
            let e2 = Expr::app(Expr::lam("s", fam.exact_ty(), Expr::var("s")), e);
            let a2 = Expr::app(Expr::lam("s", fam.approx_ty(), Expr::var("s")), a);
            Goal::Member { q, a: a2, e: e2 }
        }
        "approximate equality" => {
            // A second member of the same approximation, at a larger error.
            let (e2, bound) = match fam {
                ApproxTy::FlBase if rng.gen_bool(0.5) => match &*a {
                    Expr::FloatLit(bits) => {
                        let r = f64_to_rational(f64::from_bits(*bits)).ok_or_else(none)?;
                        (Expr::real(r), Expr::err_zero())
                    }
                    _ => return Err(none()),
                },
                _ => shift(fam, e.clone(), rng).ok_or_else(none)?,
            };
            let q2 = fam.add(q, bound);
            Goal::Aeq { q: fam.add(q2.clone(), q2), e1: e, e2 }
        }
        "upward closedness" => {
            let (e2, bound) = shift(fam, e.clone(), rng).ok_or_else(none)?;
            let more = fam.add(bound, extra_error(fam, rng).ok_or_else(none)?);
            Goal::Aeq { q: more, e1: e, e2 }
        }
        "reflexivity" => Goal::Aeq { q: fam.zero(), e1: e.clone(), e2: e },
        "symmetry" => {
            let (e2, bound) = shift(fam, e.clone(), rng).ok_or_else(none)?;
            Goal::Aeq { q: bound, e1: e2, e2: e }
        }
        "triangle" => {
            let (e2, b1) = shift(fam, e.clone(), rng).ok_or_else(none)?;
            let (e3, b2) = shift(fam, e2, rng).ok_or_else(none)?;
            Goal::Aeq { q: fam.add(b1, b2), e1: e, e2: e3 }
        }
        "completeness" => {
            let other = sample_member(fam, rng).map_err(|e| e.to_string())?;
            Goal::Aeq { q: Expr::bottom(fam.err_ty()), e1: e, e2: other.exact }
        }
        _ => return Err(format!("unknown axiom {axiom}")),
    })
}

fn witness(o: &Outcome) -> Option<String> {
    match o {
        Outcome::Fail(r) => Some(format!(
            "inputs [{}]; {} vs {}; bound {} < distance {}",
            r.inputs.join("; "),
            r.exact,
            r.approx,
            r.bound,
            r.distance
        )),
        _ => None,
    }
}

/// Checks every law on instances of `fam`.
pub fn check_approx_axioms(fam: &ApproxTy, cfg: &CheckConfig) -> AxiomReport {
    let trials = cfg.trials.max(1);
    let results = APPROX_AXIOMS
        .iter()
        .map(|axiom| {
            let stream = stream_id(&format!("approx/{fam}/{axiom}"));
            let check_cfg = cfg.with_stream(stream ^ 1);
            let outcomes = par_map(trials, |i| {
                let mut rng = trial_rng(cfg.seed, stream, i as u64);
                match instance(fam, axiom, &mut rng) {
                    Ok(Goal::Member { q, a, e }) => check_once(fam, &q, &e, &a, true, &check_cfg, i as u64),
                    Ok(Goal::Aeq { q, e1, e2 }) => check_once(fam, &q, &e1, &e2, false, &check_cfg, i as u64),
                    Err(why) => Outcome::Inconclusive(why),
                }
            });
            let mut result = AxiomResult {
                axiom: axiom.to_string(),
                status: if fam.is_base() { AxiomStatus::Pass } else { AxiomStatus::PassOnSamples },
                trials,
                witness: None,
                note: None,
            };
            if let Some(w) = outcomes.iter().find_map(witness) {
                result.status = AxiomStatus::Fail;
                result.witness = Some(w);
            } else if let Some(Outcome::Inconclusive(why)) =
                outcomes.iter().find(|o| matches!(o, Outcome::Inconclusive(_)))
            {
                result.status = AxiomStatus::Inconclusive;
                result.note = Some(why.clone());
            }
            result
        })
        .collect();
    AxiomReport::new(format!("approx {fam}"), cfg.seed, results)
}

/// Distance helper for tests: `|a - b|` on rationals.
#[cfg(test)]
fn dist(a: &num_rational::BigRational, b: &num_rational::BigRational) -> num_rational::BigRational {
    (a - b).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    fn cfg(trials: usize) -> CheckConfig {
        CheckConfig::new(trials, 42)
    }

    #[test]
    fn float_laws_hold() {
        let r = check_approx_axioms(&ApproxTy::FlBase, &cfg(300));
        assert!(r.all_passed(), "{}", crate::report::to_json(&r));
        assert!(r.results.iter().all(|x| x.status == AxiomStatus::Pass));
    }

    #[test]
    fn nat_and_bool_laws_hold() {
        for fam in [ApproxTy::NatBase, ApproxTy::BoolBase] {
            let r = check_approx_axioms(&fam, &cfg(200));
            assert!(r.all_passed(), "{}", crate::report::to_json(&r));
        }
    }

    #[test]
    fn function_laws_hold_on_samples() {
        let fam = ApproxTy::pi(ApproxTy::FlBase, ApproxTy::FlBase);
        let r = check_approx_axioms(&fam, &cfg(100));
        assert!(r.all_passed(), "{}", crate::report::to_json(&r));
        assert!(r.results.iter().all(|x| x.status == AxiomStatus::PassOnSamples));
    }

    #[test]
    fn weakening_from_an_eighth_to_a_quarter() {
        let fl = ApproxTy::FlBase;
        let e = Expr::real(BigRational::new(1.into(), 3.into()));
        let a = Expr::float(0.25);
        let third = BigRational::new(1.into(), 3.into());
        let quarter = BigRational::new(1.into(), 4.into());
        assert!(dist(&third, &quarter) <= BigRational::new(1.into(), 8.into()));
        let v1 = check_once(&fl, &Expr::err(ErrVal::Finite(BigRational::new(1.into(), 8.into()))), &e, &a, true, &cfg(1), 0);
        let v2 = check_once(&fl, &Expr::err(ErrVal::Finite(quarter)), &e, &a, true, &cfg(1), 0);
        assert!(v1.is_pass() && v2.is_pass());
    }

    #[test]
    fn a_wrong_law_is_caught() {
        // Halving an error is not a valid weakening.
        let fl = ApproxTy::FlBase;
        let mut rng = trial_rng(3, 0, 0);
        let failures = (0..200u64)
            .filter(|&i| {
                let t = sample_member(&fl, &mut rng).unwrap();
                let q = match &*t.err {
                    Expr::ErrLit(ErrVal::Finite(r)) => Expr::err(ErrVal::Finite(r / BigRational::from_integer(2.into()))),
                    _ => return false,
                };
                !check_once(&fl, &q, &t.exact, &t.approx, true, &cfg(1), i).is_pass()
            })
            .count();
        assert!(failures > 0);
    }
}
