//! Acceptance criteria, one line of output each. Runs without the test
//! harness so every criterion reports even when an earlier one fails.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use approxc_core::approx::axioms::check_approx_axioms;
use approxc_core::approx::check::{appr_member, measure_member, CheckConfig, Status};
use approxc_core::approx::ApproxTy;
use approxc_core::checker::{check_rule_corpus, check_soundness, load_program, CorpusOpts, CorpusReport};
use approxc_core::eval::{eval_exact, Env, EvalConfig};
use approxc_core::lang::{parse, ErrVal, Expr, E};
use approxc_core::num::float::{f64_to_rational, round_rational, RoundMode};
use approxc_core::oracle::Ext;
use approxc_core::quant::{check_quant_axioms, QuantInstance};
use approxc_core::report::to_json;
use approxc_core::sample::{self, trial_rng};
use approxc_core::transform::compile::{compile_closed, CompileOpts, Rule};
use approxc_core::transform::float_err::{float_op_err_exact, FloatOp};
use approxc_core::transform::simplify::apply;

type Outcome = Result<String, String>;

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn pow2(k: i32) -> BigRational {
    if k >= 0 {
        BigRational::from_integer(BigInt::one() << k as usize)
    } else {
        BigRational::new(BigInt::one(), BigInt::one() << (-k) as usize)
    }
}

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    if elapsed <= limit {
        Ok(())
    } else {
        Err(format!("took {elapsed:.2?}, limit {limit:?}"))
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// 1 -------------------------------------------------------------------------

const PI_40: &str = "3.141592653589793238462643383279502884197";

fn pi_example() -> Outcome {
    let start = Instant::now();
    let fl = ApproxTy::FlBase;
    let e = parse(PI_40).map_err(|e| e.to_string())?;
    let a = Expr::float(3.0);
    let cfg = CheckConfig::new(1, 42);
    let verdict = |q: &str| appr_member(&fl, &parse(q).unwrap(), &a, &e, &cfg);
    let loose = verdict("(err 0.1415927)");
    let tight = verdict("(err 0.14159266)");
    let short = verdict("(err 0.1415926)");
    ensure(loose.status == Status::Pass, || format!("q=0.1415927: {:?}", loose.status))?;
    ensure(tight.status == Status::Pass, || format!("q=0.14159266: {:?}", tight.status))?;
    ensure(short.status == Status::Fail, || format!("q=0.1415926: {:?}", short.status))?;
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!(
        "0.1415927 and 0.14159266 pass; 0.1415926 fails at distance {}",
        short.failures[0].distance
    ))
}

// 2 -------------------------------------------------------------------------

fn axiom_suites() -> Outcome {
    let start = Instant::now();
    let fl_fl = ApproxTy::pi(ApproxTy::FlBase, ApproxTy::FlBase);
    let cfg = CheckConfig::new(1000, 42);
    let reports = [
        check_quant_axioms(&QuantInstance::reals(), 1000, 42),
        check_quant_axioms(&fl_fl.quant(), 1000, 42),
        check_approx_axioms(&ApproxTy::FlBase, &cfg),
        check_approx_axioms(&fl_fl, &cfg),
    ];
    let mut clauses = 0;
    for r in &reports {
        ensure(r.all_passed(), || format!("{} failed: {}", r.suite, to_json(r)))?;
        clauses += r.results.len();
    }
    ensure(reports[0].results.len() == 6, || "Q_R suite should have 6 clauses".into())?;
    within(start.elapsed(), Duration::from_secs(30))?;
    Ok(format!("{} suites, {clauses} clauses, zero failures", reports.len()))
}

// 3 -------------------------------------------------------------------------

fn ulp(x: f64) -> BigRational {
    let x = x.abs();
    let next = f64::from_bits(x.to_bits() + 1);
    f64_to_rational(next).unwrap() - f64_to_rational(x).unwrap()
}

/// At least 8 floats in `[c - r, c + r]`: both inward-rounded endpoints and
/// evenly spaced interior points.
fn floats_in(c: &BigRational, r: &BigRational) -> Vec<f64> {
    let lo = round_rational(&(c - r), RoundMode::Up);
    let hi = round_rational(&(c + r), RoundMode::Down);
    let (lr, hr) = (f64_to_rational(lo).unwrap(), f64_to_rational(hi).unwrap());
    let mut out: Vec<f64> = (0..8)
        .map(|k| {
            let t = &lr + (&hr - &lr) * rat(k, 7);
            let f = round_rational(&t, RoundMode::Nearest);
            f.clamp(lo, hi)
        })
        .collect();
    out.dedup();
    let mut f = lo;
    while out.len() < 8 {
        f = f64::from_bits(if f >= 0.0 { f.to_bits() + 1 } else { f.to_bits() - 1 });
        if !out.contains(&f) && f <= hi {
            out.push(f);
        }
    }
    out
}

fn float_op_brute_force() -> Outcome {
    let start = Instant::now();
    let centers = [rat(-3, 2), rat(-1, 4), rat(3, 4), rat(2, 1), rat(21, 2)];
    let radii = [pow2(-44), pow2(-30), pow2(-12), pow2(-3), pow2(-1)];
    let mut summary = Vec::new();
    for op in [FloatOp::Add, FloatOp::Sub, FloatOp::Mul, FloatOp::Div] {
        let (mut cells, mut pairs, mut tight) = (0usize, 0usize, 0usize);
        for xe in &centers {
            for xq in &radii {
                let xs = floats_in(xe, xq);
                for ye in &centers {
                    for yq in &radii {
                        let ys = floats_in(ye, yq);
                        let bound = float_op_err_exact(op, xe, &ErrVal::Finite(xq.clone()), ye, &ErrVal::Finite(yq.clone()));
                        let exact = op.exact(xe, ye).ok_or("exact operation undefined on grid")?;
                        cells += 1;
                        let mut worst: Option<(BigRational, f64)> = None;
                        for &x in &xs {
                            for &y in &ys {
                                pairs += 1;
                                let r = op.apply_f64(x, y);
                                let d = match f64_to_rational(r) {
                                    Some(v) => (&exact - v).abs(),
                                    None => {
                                        ensure(bound.is_infinite(), || {
                                            format!("{} overflowed at ({x}, {y}) with finite bound", op.symbol())
                                        })?;
                                        continue;
                                    }
                                };
                                if let ErrVal::Finite(b) = &bound {
                                    ensure(d <= *b, || {
                                        format!("{} at ({x}, {y}) in cell ({xe}, {xq}, {ye}, {yq}): {d} > {b}", op.symbol())
                                    })?;
                                }
                                if worst.as_ref().is_none_or(|(w, _)| d > *w) {
                                    worst = Some((d, r));
                                }
                            }
                        }
                        if let (ErrVal::Finite(b), Some((w, r))) = (&bound, worst) {
                            if b - w <= ulp(r) {
                                tight += 1;
                            }
                        }
                    }
                }
            }
        }
        ensure(tight > 0, || format!("{}: no cell within one ulp of its bound", op.symbol()))?;
        ensure(pairs >= cells * 64, || format!("{}: only {pairs} pairs", op.symbol()))?;
        summary.push(format!("{} {tight}/{cells} tight", op.symbol()));
    }
    within(start.elapsed(), Duration::from_secs(60))?;
    Ok(format!("all cells sound; {}", summary.join(", ")))
}

// 4 -------------------------------------------------------------------------

/// `x - sin x` for `x` in (0, 1) from the alternating Taylor series, as an
/// interval of width twice the first omitted term.
fn x_minus_sin(x: &BigRational) -> (BigRational, BigRational) {
    let mut sum = BigRational::zero();
    let mut term = x.clone();
    let mut k = 1i64;
    for n in 0..12 {
        if n % 2 == 0 {
            sum += &term;
        } else {
            sum -= &term;
        }
        term = &term * x * x / BigRational::from_integer(((k + 1) * (k + 2)).into());
        k += 2;
    }
    let diff = x - &sum;
    (&diff - &term, &diff + &term)
}

fn sin_substitution() -> Outcome {
    let start = Instant::now();
    let opts = CompileOpts { enable_sin_subst: true, ..CompileOpts::default() };
    let sinr = parse("sinr").unwrap();
    let r = compile_closed(&sinr, &opts).map_err(|e| e.to_string())?;
    ensure(r.derivation.rule == Rule::RSinSubst, || format!("rule {}", r.derivation.rule))?;
    let cfg = EvalConfig::default();
    let fl = ApproxTy::FlBase;
    let bound_at = |x: &BigRational, q: &BigRational| -> E {
        apply(r.err.clone(), [Expr::real(x.clone()), Expr::err(ErrVal::Finite(q.clone()))])
    };
    let fifth = rat(1, 5);
    for i in 0..1000u64 {
        let mut rng = trial_rng(42, 4, i);
        let x = sample::real_in(&mut rng, &fifth);
        let q = sample::err(&mut rng);
        let (x, xf, _) = sample::float_near(&mut rng, &x, &q);
        let e = Expr::op(approxc_core::lang::Op::SinR, vec![Expr::real(x.clone())]);
        let a = Expr::app(r.approx.clone(), Expr::float(xf));
        let m = measure_member(&fl, &bound_at(&x, &q), &a, &e, &cfg)?;
        ensure(!(m.distance.lo() > m.bound.hi()), || {
            format!("x={x} q={q}: distance {:?} exceeds bound {:?}", m.distance.lo(), m.bound.hi())
        })?;
    }
    let tenth = rat(1, 10);
    let v = eval_exact(&bound_at(&tenth, &BigRational::zero()), &Env::new(), &cfg).map_err(|e| e.to_string())?;
    let enc = v.as_err().map_err(|e| e.to_string())?;
    let (Ext::Fin(lo), Ext::Fin(hi)) = (enc.lo(), enc.hi()) else {
        return Err("bound at 0.1 is infinite".into());
    };
    let (rlo, rhi) = x_minus_sin(&tenth);
    ensure(lo.to_rational() <= rhi && rlo <= hi.to_rational(), || "bound misses the Taylor interval".into())?;
    let shown = format!("{:.5e}", hi.to_f64());
    ensure(shown == "1.66583e-4", || format!("bound at 0.1 is {shown}"))?;
    within(start.elapsed(), Duration::from_secs(10))?;
    Ok(format!("1000 samples sound; bound at x=0.1 is {shown}"))
}

// 5 -------------------------------------------------------------------------

fn perforation() -> Outcome {
    let start = Instant::now();
    let cfg = EvalConfig::default();
    let nat = |e: &E| -> Result<u64, String> {
        let v = eval_exact(e, &Env::new(), &cfg).map_err(|e| e.to_string())?;
        let n = v.as_nat().map_err(|e| e.to_string())?;
        u64::try_from(n.clone()).map_err(|e| e.to_string())
    };
    let mut opts = CompileOpts::default();
    opts.perforation.insert("L0".into(), 2);

    let eight = load_program("(redseq +n 8 (lam (x Nat) x))").map_err(|e| e.to_string())?;
    let r8 = compile_closed(&eight.expr, &opts).map_err(|e| e.to_string())?;
    let (exact, approx, bound) = (nat(&eight.expr)?, nat(&r8.approx)?, nat(&r8.err)?);
    ensure(exact == 28 && approx == 24, || format!("sums {exact} and {approx}"))?;
    ensure(bound == 4 && exact - approx == bound, || format!("bound {bound}, distance {}", exact - approx))?;

    let seven = load_program("(redseq +n 7 (lam (x Nat) x))").map_err(|e| e.to_string())?;
    let r7 = compile_closed(&seven.expr, &opts).map_err(|e| e.to_string())?;
    let conds = r7.derivation.side_conditions();
    ensure(conds.len() == 2 && conds.iter().all(|c| c.verdict.passed()), || format!("{} side conditions", conds.len()))?;
    let report = check_soundness("sum7", &seven.expr, &r7, 100, 42, &cfg);
    ensure(report.passes == 100, || format!("{:?}", report))?;
    let (approx7, bound7) = (nat(&r7.approx)?, nat(&r7.err)?);
    within(start.elapsed(), Duration::from_secs(10))?;
    Ok(format!(
        "e2=8: bound 4 = |28-24|; e2=7: sum 21 vs {approx7}, bound {bound7}, tail condition holds, 100/100 trials"
    ))
}

// 6, 7, 8 -------------------------------------------------------------------

fn run_corpus(weaken: Option<BigRational>) -> Result<CorpusReport, String> {
    let opts = CorpusOpts { weaken_by: weaken, ..CorpusOpts::default() };
    check_rule_corpus(&corpus_dir(), &opts).map_err(|e| e.to_string())
}

fn corpus_soundness(base: &CorpusReport, elapsed: Duration) -> Outcome {
    ensure(base.programs.len() >= 20, || format!("only {} programs", base.programs.len()))?;
    ensure(base.errors == 0, || {
        let bad: Vec<_> = base.programs.iter().filter_map(|p| p.error.as_ref().map(|e| format!("{}: {e}", p.file))).collect();
        bad.join("; ")
    })?;
    ensure(base.failures == 0, || format!("{} failures: {}", base.failures, to_json(base)))?;
    let missing: Vec<_> = Rule::ALL.iter().filter(|r| !base.rules_covered.contains(r)).map(|r| r.name()).collect();
    ensure(missing.is_empty(), || format!("rules not covered: {}", missing.join(" ")))?;
    let polymorphic = base.programs.iter().filter_map(|p| p.check.as_ref()).any(|c| c.instances == ["Fl", "Nat"]);
    ensure(polymorphic, || "no program checked at both Fl and Nat".into())?;
    let mut agreeing = false;
    let mut crossing = false;
    for p in &base.programs {
        let prog = load_program(&std::fs::read_to_string(corpus_dir().join(&p.file)).unwrap()).unwrap();
        if let Ok(r) = compile_closed(&prog.expr, &CompileOpts::default()) {
            r.derivation.walk(&mut |d| {
                if d.rule == Rule::AIf {
                    let desc = &d.side_conditions[0].description;
                    agreeing |= desc.starts_with("branches agree");
                    crossing |= desc.starts_with("cross-branch");
                }
            });
        }
    }
    ensure(agreeing && crossing, || format!("if forms: agreeing {agreeing}, cross-branch {crossing}"))?;
    within(elapsed, Duration::from_secs(300))?;
    let trials: usize = base.programs.iter().filter_map(|p| p.check.as_ref()).map(|c| c.trials).sum();
    Ok(format!(
        "{} programs, {trials} trials, 0 failures, {} inconclusive, all {} rules covered",
        base.programs.len(),
        base.inconclusive,
        Rule::ALL.len()
    ))
}

fn weakening(base: &CorpusReport) -> Outcome {
    let weak = run_corpus(Some(rat(1, 1000)))?;
    ensure(weak.errors == 0 && weak.failures == 0, || format!("{} errors, {} failures", weak.errors, weak.failures))?;
    for (b, w) in base.programs.iter().zip(&weak.programs) {
        let (Some(bc), Some(wc)) = (&b.check, &w.check) else { continue };
        ensure(w.rules.contains(&Rule::AWeak), || format!("{}: no A-Weak step", w.file))?;
        ensure(wc.trials == bc.trials && wc.passes >= bc.passes, || {
            format!("{}: {} passes before, {} after", b.file, bc.passes, wc.passes)
        })?;
    }
    Ok(format!("{} programs keep every pass after adding 1/1000", weak.programs.len()))
}

fn determinism(base: &CorpusReport) -> Outcome {
    let again = run_corpus(None)?;
    let (a, b) = (to_json(base), to_json(&again));
    ensure(a == b, || "reports differ".into())?;
    Ok(format!("two runs produce identical {}-byte reports", a.len()))
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |n: usize, name: &str, start: Instant, o: Outcome| {
        let t = start.elapsed();
        match o {
            Ok(detail) => println!("criterion {n} ({name}): PASS  {detail}  [{t:.2?}]"),
            Err(why) => {
                failed += 1;
                println!("criterion {n} ({name}): FAIL  {why}  [{t:.2?}]");
            }
        }
    };
    let t = Instant::now();
    report(1, "pi example", t, pi_example());
    let t = Instant::now();
    report(2, "axiom suites", t, axiom_suites());
    let t = Instant::now();
    report(3, "float-op brute force", t, float_op_brute_force());
    let t = Instant::now();
    report(4, "sin substitution", t, sin_substitution());
    let t = Instant::now();
    report(5, "perforation", t, perforation());
    let t = Instant::now();
    let base = run_corpus(None);
    let elapsed = t.elapsed();
    match base {
        Ok(base) => {
            report(6, "corpus soundness", t, corpus_soundness(&base, elapsed));
            let t = Instant::now();
            report(7, "metamorphic weakening", t, weakening(&base));
            let t = Instant::now();
            report(8, "determinism", t, determinism(&base));
        }
        Err(e) => {
            for (n, name) in [(6, "corpus soundness"), (7, "metamorphic weakening"), (8, "determinism")] {
                report(n, name, t, Err(e.clone()));
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
