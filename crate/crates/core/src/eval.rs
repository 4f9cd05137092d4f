//! Fuel-bounded call-by-value interpreter shared by the exact, approximate and
//! error evaluators.
//!
//! Types are erased at runtime. Real literals and real builtins are evaluated
//! as enclosures at the configured precision, floats bit-exactly, and error
//! values as enclosures of extended nonnegative reals.

use std::cell::Cell;
use std::fmt;
use std::sync::{Arc, OnceLock};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use thiserror::Error;

use crate::lang::{Expr, Op, E};
use crate::num::float::{round_rational, RoundMode};
use crate::num::Dyadic;
use crate::oracle::{
    compare_err_leq, compare_leq, enclose_op, Cmp, Enclosure, ErrEnclosure, OracleError,
    DEFAULT_PRECISION, MAX_PRECISION,
};
use crate::transform::float_err::{self, FloatOp};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EvalConfig {
    /// Maximum number of beta, delta and reduction steps.
    pub fuel: u64,
    /// Starting precision of the exact evaluator; doubled on demand.
    pub precision_bits: u32,
    /// Maximum nesting of evaluation frames before giving up.
    pub max_depth: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { fuel: 1_000_000, precision_bits: DEFAULT_PRECISION, max_depth: 20_000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Divergence {
    Bottom,
    FuelExhausted,
    DepthExhausted,
    /// A partial builtin applied outside its domain, such as `/r` by zero.
    Undefined,
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Divergence::Bottom => "bottom",
            Divergence::FuelExhausted => "fuel exhausted",
            Divergence::DepthExhausted => "depth exhausted",
            Divergence::Undefined => "undefined operation",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("diverged ({0})")]
    Diverged(Divergence),
    /// The oracle could not decide a comparison or division at this precision.
    #[error("oracle undecided at {0} bits")]
    NeedsPrecision(u32),
    #[error("oracle undecided at the {MAX_PRECISION}-bit cap")]
    Inconclusive,
    #[error("stuck: {0}")]
    Stuck(String),
}

impl EvalError {
    /// True for fuel and depth exhaustion, which only suggest divergence.
    pub fn is_resource_limit(&self) -> bool {
        matches!(
            self,
            EvalError::Diverged(Divergence::FuelExhausted | Divergence::DepthExhausted)
        )
    }
}

#[derive(Clone)]
pub enum Value {
    Real(Enclosure),
    Float(f64),
    Nat(BigUint),
    Bool(bool),
    Unit,
    Err(ErrEnclosure),
    Closure(Arc<Closure>),
    TyClosure(Arc<TyClosure>),
    /// Builtin waiting for more arguments.
    Prim(Op, Vec<Value>),
    /// `fix f`, unrolled on demand.
    Fix(Arc<Value>),
}

pub struct Closure {
    pub param: String,
    pub body: E,
    pub env: Env,
}

pub struct TyClosure {
    pub body: E,
    pub env: Env,
}

impl Value {
    pub fn kind(&self) -> &'static str {
        match self {
            Value::Real(_) => "real",
            Value::Float(_) => "float",
            Value::Nat(_) => "nat",
            Value::Bool(_) => "bool",
            Value::Unit => "unit",
            Value::Err(_) => "error",
            Value::Closure(_) | Value::Prim(..) | Value::Fix(_) => "function",
            Value::TyClosure(_) => "type abstraction",
        }
    }

    pub fn as_real(&self) -> Result<&Enclosure, EvalError> {
        match self {
            Value::Real(r) => Ok(r),
            v => Err(stuck("real", v)),
        }
    }

    pub fn as_float(&self) -> Result<f64, EvalError> {
        match self {
            Value::Float(x) => Ok(*x),
            v => Err(stuck("float", v)),
        }
    }

    pub fn as_nat(&self) -> Result<&BigUint, EvalError> {
        match self {
            Value::Nat(n) => Ok(n),
            v => Err(stuck("nat", v)),
        }
    }

    pub fn as_bool(&self) -> Result<bool, EvalError> {
        match self {
            Value::Bool(b) => Ok(*b),
            v => Err(stuck("bool", v)),
        }
    }

    pub fn as_err(&self) -> Result<&ErrEnclosure, EvalError> {
        match self {
            Value::Err(q) => Ok(q),
            v => Err(stuck("error value", v)),
        }
    }

    /// Zero of the same base kind, used to seed `redseq`.
    fn zero_like(&self) -> Result<Value, EvalError> {
        Ok(match self {
            Value::Real(_) => Value::Real(Enclosure::from_int(0)),
            Value::Float(_) => Value::Float(0.0),
            Value::Nat(_) => Value::Nat(BigUint::zero()),
            Value::Err(_) => Value::Err(ErrEnclosure::zero()),
            v => return Err(stuck("summable value", v)),
        })
    }
}

fn stuck(expected: &str, found: &Value) -> EvalError {
    EvalError::Stuck(format!("expected {expected}, found {}", found.kind()))
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Real(r) => write!(f, "{r}"),
            Value::Float(x) => f.write_str(&crate::lang::print::float_literal(*x)),
            Value::Nat(n) => write!(f, "{n}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Unit => f.write_str("unit"),
            Value::Err(q) => write!(f, "{q}"),
            Value::Closure(c) => write!(f, "<closure {}>", c.param),
            Value::TyClosure(_) => f.write_str("<type closure>"),
            Value::Prim(op, args) => write!(f, "<{op} with {} args>", args.len()),
            Value::Fix(_) => f.write_str("<fix>"),
        }
    }
}

/// Persistent environment; later bindings shadow earlier ones.
#[derive(Clone, Default)]
pub struct Env(Option<Arc<EnvNode>>);

struct EnvNode {
    name: String,
    value: Value,
    next: Env,
}

impl Env {
    pub fn new() -> Env {
        Env(None)
    }

    pub fn bind(&self, name: impl Into<String>, value: Value) -> Env {
        Env(Some(Arc::new(EnvNode { name: name.into(), value, next: self.clone() })))
    }

    pub fn lookup(&self, name: &str) -> Option<&Value> {
        let mut cur = self;
        while let Some(node) = &cur.0 {
            if node.name == name {
                return Some(&node.value);
            }
            cur = &node.next;
        }
        None
    }
}

// ---------------------------------------------------------------------------
// stack management

/// Stack size for threads that run the interpreter.
pub const EVAL_STACK_BYTES: usize = 512 << 20;

thread_local! {
    static ON_BIG_STACK: Cell<bool> = const { Cell::new(false) };
}

/// Marks the current thread as having at least `EVAL_STACK_BYTES` of stack.
pub fn mark_big_stack() {
    ON_BIG_STACK.with(|c| c.set(true));
}

/// Runs `f` on a thread with a large stack, spawning one if needed.
pub fn with_big_stack<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    if ON_BIG_STACK.with(Cell::get) {
        return f();
    }
    std::thread::scope(|s| {
        let handle = std::thread::Builder::new()
            .stack_size(EVAL_STACK_BYTES)
            .spawn_scoped(s, || {
                mark_big_stack();
                f()
            })
            .expect("failed to spawn evaluator thread");
        handle.join().unwrap_or_else(|p| std::panic::resume_unwind(p))
    })
}

/// Shared worker pool whose threads all have large stacks.
pub fn pool() -> &'static rayon::ThreadPool {
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        rayon::ThreadPoolBuilder::new()
            .stack_size(EVAL_STACK_BYTES)
            .start_handler(|_| mark_big_stack())
            .build()
            .expect("failed to build worker pool")
    })
}

/// `f(0), ..., f(n-1)` computed on the worker pool, in index order.
pub fn par_map<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    use rayon::prelude::*;
    pool().install(|| (0..n).into_par_iter().map(f).collect())
}

// ---------------------------------------------------------------------------
// interpreter

struct Machine {
    fuel: u64,
    prec: u32,
    depth: usize,
    max_depth: usize,
}

impl Machine {
    fn new(cfg: &EvalConfig, prec: u32) -> Machine {
        Machine { fuel: cfg.fuel, prec, depth: 0, max_depth: cfg.max_depth }
    }

    fn tick(&mut self) -> Result<(), EvalError> {
        if self.fuel == 0 {
            return Err(EvalError::Diverged(Divergence::FuelExhausted));
        }
        self.fuel -= 1;
        Ok(())
    }

    fn eval(&mut self, e: &E, env: &Env) -> Result<Value, EvalError> {
        self.depth += 1;
        if self.depth > self.max_depth {
            self.depth -= 1;
            return Err(EvalError::Diverged(Divergence::DepthExhausted));
        }
        let r = self.eval_inner(e, env);
        self.depth -= 1;
        r
    }

    fn eval_inner(&mut self, e: &E, env: &Env) -> Result<Value, EvalError> {
        match &**e {
            Expr::Var(x) => env
                .lookup(x)
                .cloned()
                .ok_or_else(|| EvalError::Stuck(format!("unbound variable `{x}`"))),
            Expr::Lam(x, _, body) => Ok(Value::Closure(Arc::new(Closure {
                param: x.clone(),
                body: body.clone(),
                env: env.clone(),
            }))),
            Expr::App(f, a) => {
                let f = self.eval(f, env)?;
                let a = self.eval(a, env)?;
                self.apply(f, a)
            }
            Expr::TyLam(_, body) => {
                Ok(Value::TyClosure(Arc::new(TyClosure { body: body.clone(), env: env.clone() })))
            }
            Expr::TyApp(f, _) => {
                let f = self.eval(f, env)?;
                self.ty_apply(f)
            }
            Expr::Fix(f) => {
                let f = self.eval(f, env)?;
                Ok(Value::Fix(Arc::new(f)))
            }
            Expr::If(c, t, f) => {
                let c = self.eval(c, env)?;
                if self.force(c)?.as_bool()? {
                    self.eval(t, env)
                } else {
                    self.eval(f, env)
                }
            }
            Expr::RealLit(r) => Ok(Value::Real(Enclosure::from_rational(r, self.prec))),
            Expr::NatLit(n) => Ok(Value::Nat(n.clone())),
            Expr::BoolLit(b) => Ok(Value::Bool(*b)),
            Expr::UnitLit => Ok(Value::Unit),
            Expr::FloatLit(bits) => Ok(Value::Float(f64::from_bits(*bits))),
            Expr::ErrLit(v) => Ok(Value::Err(ErrEnclosure::from_errval(v, self.prec))),
            Expr::Builtin(op, args) => {
                let mut vals = Vec::with_capacity(args.len());
                for a in args {
                    let v = self.eval(a, env)?;
                    vals.push(self.force(v)?);
                }
                if vals.len() < op.arity() {
                    Ok(Value::Prim(*op, vals))
                } else {
                    self.tick()?;
                    self.delta(*op, vals)
                }
            }
            Expr::RedSeq(c, n, g) => {
                let c = self.eval(c, env)?;
                let n = self.eval(n, env)?;
                let n = self.force(n)?.as_nat()?.clone();
                let g = self.eval(g, env)?;
                self.redseq(c, &n, g)
            }
            Expr::Bottom(_) => Err(EvalError::Diverged(Divergence::Bottom)),
        }
    }

    /// `acc <- c (g i) acc` for `i` in `[0, n)`, seeded with the zero of the
    /// generator's kind.
    fn redseq(&mut self, c: Value, n: &BigUint, g: Value) -> Result<Value, EvalError> {
        let first = self.apply(g.clone(), Value::Nat(BigUint::zero()))?;
        let mut acc = self.force(first.clone())?.zero_like()?;
        let mut i = BigUint::zero();
        let mut next = Some(first);
        while &i < n {
            self.tick()?;
            let item = match next.take() {
                Some(v) => v,
                None => self.apply(g.clone(), Value::Nat(i.clone()))?,
            };
            let step = self.apply(c.clone(), item)?;
            acc = self.apply(step, acc)?;
            i += 1u32;
        }
        self.force(acc)
    }

    /// Unrolls `fix` until a non-fix value appears.
    fn force(&mut self, mut v: Value) -> Result<Value, EvalError> {
        while let Value::Fix(f) = v {
            self.tick()?;
            v = self.apply((*f).clone(), Value::Fix(f))?;
        }
        Ok(v)
    }

    fn apply(&mut self, mut f: Value, arg: Value) -> Result<Value, EvalError> {
        loop {
            self.tick()?;
            match f {
                Value::Closure(c) => {
                    let env = c.env.bind(c.param.clone(), arg);
                    return self.eval(&c.body, &env);
                }
                Value::Prim(op, mut args) => {
                    args.push(self.force(arg)?);
                    return if args.len() < op.arity() {
                        Ok(Value::Prim(op, args))
                    } else {
                        self.delta(op, args)
                    };
                }
                Value::Fix(inner) => {
                    f = self.apply((*inner).clone(), Value::Fix(inner))?;
                }
                other => return Err(stuck("function", &other)),
            }
        }
    }

    fn ty_apply(&mut self, f: Value) -> Result<Value, EvalError> {
        match self.force(f)? {
            Value::TyClosure(c) => {
                self.tick()?;
                self.eval(&c.body, &c.env)
            }
            other => Err(stuck("type abstraction", &other)),
        }
    }

    fn oracle(&self, r: Result<Enclosure, OracleError>) -> Result<Enclosure, EvalError> {
        r.map_err(|e| match e {
            OracleError::DivisionByZero => EvalError::Diverged(Divergence::Undefined),
            OracleError::DivisorStraddlesZero => EvalError::NeedsPrecision(self.prec),
            OracleError::PrecisionOverflow(_) => EvalError::Inconclusive,
            OracleError::NotARealOp(op) => EvalError::Stuck(format!("`{op}` is not a real op")),
        })
    }

    fn decide(&self, c: Cmp) -> Result<Value, EvalError> {
        match c {
            Cmp::Yes => Ok(Value::Bool(true)),
            Cmp::No => Ok(Value::Bool(false)),
            Cmp::Unknown => Err(EvalError::NeedsPrecision(self.prec)),
        }
    }

    fn delta(&mut self, op: Op, args: Vec<Value>) -> Result<Value, EvalError> {
        use Op::*;
        let prec = self.prec;
        let a = &args;
        Ok(match op {
            AddR | SubR | MulR | DivR | SinR | AbsR => {
                let xs = a.iter().map(Value::as_real).collect::<Result<Vec<_>, _>>()?;
                let xs: Vec<Enclosure> = xs.into_iter().cloned().collect();
                Value::Real(self.oracle(enclose_op(op, &xs, prec))?)
            }
            DistR => {
                let d = self.oracle(enclose_op(
                    op,
                    &[a[0].as_real()?.clone(), a[1].as_real()?.clone()],
                    prec,
                ))?;
                Value::Err(ErrEnclosure::from_real(&d))
            }
            LeqR => self.decide(compare_leq(a[0].as_real()?, a[1].as_real()?))?,
            NatToReal => {
                Value::Real(Enclosure::point(Dyadic::from_bigint(a[0].as_nat()?.clone().into())))
            }
            AddF | SubF | MulF | DivF => {
                let fop = FloatOp::from_op(op).expect("float op");
                Value::Float(fop.apply_f64(a[0].as_float()?, a[1].as_float()?))
            }
            SinF => Value::Float(libm::sin(a[0].as_float()?)),
            AbsF => Value::Float(a[0].as_float()?.abs()),
            LeqF => Value::Bool(a[0].as_float()? <= a[1].as_float()?),
            NatToFloat => Value::Float(nat_to_f64(a[0].as_nat()?)),
            AddN => Value::Nat(a[0].as_nat()? + a[1].as_nat()?),
            SubN => {
                let (x, y) = (a[0].as_nat()?, a[1].as_nat()?);
                Value::Nat(if x > y { x - y } else { BigUint::zero() })
            }
            MulN => Value::Nat(a[0].as_nat()? * a[1].as_nat()?),
            DivN => {
                let (x, y) = (a[0].as_nat()?, a[1].as_nat()?);
                if y.is_zero() {
                    return Err(EvalError::Diverged(Divergence::Undefined));
                }
                Value::Nat(x / y)
            }
            LeqN => Value::Bool(a[0].as_nat()? <= a[1].as_nat()?),
            EqN => Value::Bool(a[0].as_nat()? == a[1].as_nat()?),
            DistN => {
                let (x, y) = (a[0].as_nat()?, a[1].as_nat()?);
                Value::Nat(if x > y { x - y } else { y - x })
            }
            FloorK | CeilK => {
                let (x, k) = (a[0].as_nat()?, a[1].as_nat()?);
                if k.is_zero() {
                    return Err(EvalError::Diverged(Divergence::Undefined));
                }
                let q = if op == FloorK { x / k } else { (x + k - BigUint::one()) / k };
                Value::Nat(q * k)
            }
            AddQ => Value::Err(a[0].as_err()?.add(a[1].as_err()?).round_out(prec)),
            LeqQ => self.decide(compare_err_leq(a[0].as_err()?, a[1].as_err()?))?,
            NatToErr => {
                Value::Err(ErrEnclosure::point(Dyadic::from_bigint(a[0].as_nat()?.clone().into())))
            }
            DistB => {
                let d = a[0].as_bool()? != a[1].as_bool()?;
                Value::Err(ErrEnclosure::point(Dyadic::from_int(d as i64)))
            }
            FpErrAdd | FpErrSub | FpErrMul | FpErrDiv => {
                let fop = FloatOp::from_op(op).expect("float op");
                Value::Err(float_err::float_op_err(
                    fop,
                    a[0].as_real()?,
                    a[1].as_err()?,
                    a[2].as_real()?,
                    a[3].as_err()?,
                    prec,
                ))
            }
            FpErrSin => Value::Err(float_err::sin_err(a[0].as_real()?, a[1].as_err()?, prec)),
            FpErrNatToFloat => Value::Err(ErrEnclosure::from_errval(
                &float_err::nat_to_float_err(a[0].as_nat()?, a[1].as_nat()?),
                prec,
            )),
            FpErrLeq => Value::Err(float_err::leq_err(
                a[0].as_real()?,
                a[1].as_err()?,
                a[2].as_real()?,
                a[3].as_err()?,
            )),
        })
    }
}

/// Round-to-nearest conversion of a natural.
pub fn nat_to_f64(n: &BigUint) -> f64 {
    match n.to_u64() {
        Some(v) if v < (1 << 53) => v as f64,
        _ => round_rational(&num_rational::BigRational::from_integer(n.clone().into()), RoundMode::Nearest),
    }
}

// ---------------------------------------------------------------------------
// entry points

/// Evaluates once at a fixed precision.
pub fn eval_at(e: &E, env: &Env, cfg: &EvalConfig, prec: u32) -> Result<Value, EvalError> {
    with_big_stack(|| {
        let mut m = Machine::new(cfg, prec);
        let v = m.eval(e, env)?;
        m.force(v)
    })
}

/// Exact evaluation with precision doubled from `cfg.precision_bits` while
/// the oracle cannot decide, up to the cap.
pub fn eval_exact(e: &E, env: &Env, cfg: &EvalConfig) -> Result<Value, EvalError> {
    refine(cfg, |prec| eval_at(e, env, cfg, prec))
}

/// Runs `attempt` at doubling precision while it asks for more.
pub fn refine<T>(
    cfg: &EvalConfig,
    mut attempt: impl FnMut(u32) -> Result<T, EvalError>,
) -> Result<T, EvalError> {
    let mut prec = cfg.precision_bits.max(1);
    loop {
        match attempt(prec) {
            Err(EvalError::NeedsPrecision(_)) if prec < MAX_PRECISION => {
                prec = (prec * 2).min(MAX_PRECISION);
            }
            Err(EvalError::NeedsPrecision(_)) => return Err(EvalError::Inconclusive),
            r => return r,
        }
    }
}

/// Evaluation of a float program. Real operations are still accepted so the
/// same entry point serves mixed terms, but none should occur.
pub fn eval_approx(e: &E, env: &Env, cfg: &EvalConfig) -> Result<Value, EvalError> {
    eval_exact(e, env, cfg)
}

/// Evaluation of an error expression; any divergence becomes the infinite
/// bound.
pub fn eval_error(q: &E, env: &Env, cfg: &EvalConfig) -> Result<Value, EvalError> {
    coerce_divergence(eval_exact(q, env, cfg))
}

pub fn coerce_divergence(r: Result<Value, EvalError>) -> Result<Value, EvalError> {
    match r {
        Err(EvalError::Diverged(_)) => Ok(Value::Err(ErrEnclosure::infinity())),
        r => r,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::parse;
    use num_rational::BigRational;

    fn run(src: &str) -> Result<Value, EvalError> {
        let e = parse(src).unwrap();
        let (e, _) = crate::lang::elaborate(&crate::lang::TyCtx::new(), &e).unwrap();
        eval_exact(&e, &Env::new(), &EvalConfig::default())
    }

    #[test]
    fn identity_on_a_third() {
        let v = run("(app (lam (x Real) x) 1/3)").unwrap();
        let r = v.as_real().unwrap();
        assert!(r.contains_rational(&BigRational::new(1.into(), 3.into())));
        assert!(r.width() <= Dyadic::pow2(-128));
    }

    #[test]
    fn redseq_counts_from_zero_exclusive() {
        let v = run("(redseq +r 4 (lam (i Nat) (nat2real i)))").unwrap();
        assert_eq!(v.as_real().unwrap(), &Enclosure::from_int(6));
        let v = run("(redseq +n 0 (lam (i Nat) i))").unwrap();
        assert_eq!(v.as_nat().unwrap(), &BigUint::zero());
    }

    #[test]
    fn divergent_fix() {
        let r = run("(app (fix (lam (f (-> Nat Nat)) f)) 3)");
        assert_eq!(r.unwrap_err(), EvalError::Diverged(Divergence::FuelExhausted));
        let r = run("(app (lam (x Real) x) (bottom Real))");
        assert_eq!(r.unwrap_err(), EvalError::Diverged(Divergence::Bottom));
    }

    #[test]
    fn recursive_sum_via_fix() {
        let src = "(app (fix (lam (f (-> Nat Nat)) (lam (n Nat) (if (eqn n 0) 0 (+n n (app f (-n n 1))))))) 100)";
        assert_eq!(run(src).unwrap().as_nat().unwrap(), &BigUint::from(5050u32));
    }

    #[test]
    fn float_addition_is_bit_exact() {
        let v = run("(+f (float 0.1) (float 0.2))").unwrap();
        assert_eq!(v.as_float().unwrap().to_bits(), 0x3FD3333333333334);
        let v = run("(+f (float 1.7976931348623157e308) (float 1.7976931348623157e308))").unwrap();
        assert_eq!(v.as_float().unwrap(), f64::INFINITY);
        let v = run("(*f (float 1.0) (float -2.5e-300))").unwrap();
        assert_eq!(v.as_float().unwrap(), -2.5e-300);
    }

    #[test]
    fn error_values() {
        let v = eval_error(&parse("(+q (err 0) (err 1/4))").unwrap(), &Env::new(), &EvalConfig::default()).unwrap();
        assert_eq!(v.as_err().unwrap(), &ErrEnclosure::point(Dyadic::pow2(-2)));
        let v = eval_error(&parse("(+q (err inf) (err 3))").unwrap(), &Env::new(), &EvalConfig::default()).unwrap();
        assert!(v.as_err().unwrap().is_infinite());
        let v = run("(app (app (lam (x Real) (lam (q ErrReal) q)) 5) 1/2)").unwrap();
        assert_eq!(v.as_err().unwrap(), &ErrEnclosure::point(Dyadic::pow2(-1)));
        let v = eval_error(&parse("(bottom ErrReal)").unwrap(), &Env::new(), &EvalConfig::default()).unwrap();
        assert!(v.as_err().unwrap().is_infinite());
    }

    #[test]
    fn comparison_refines_precision() {
        // Equal up to 2^-200; decided only after doubling.
        let src = "(leqr (+r 1 (/r 1 (nat2real (*n 1606938044258990275541962092341162602522202993782792835301376 1)))) 1)";
        assert!(!run(src).unwrap().as_bool().unwrap());
    }

    #[test]
    fn polymorphic_identity() {
        let v = run("(app (tyapp (tlam X (lam (x X) x)) Nat) 7)").unwrap();
        assert_eq!(v.as_nat().unwrap(), &BigUint::from(7u32));
    }

    #[test]
    fn perforation_helpers() {
        assert_eq!(run("(floorK 7 2)").unwrap().as_nat().unwrap(), &BigUint::from(6u32));
        assert_eq!(run("(ceilK 7 2)").unwrap().as_nat().unwrap(), &BigUint::from(8u32));
    }
}
