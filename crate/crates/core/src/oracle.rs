//! Dyadic interval enclosures of exact reals.
//!
//! Every result at precision `p` is the exact set rounded outward to the grid
//! `2^-p`. Because the rounding is a function of the exact endpoints (even for
//! `sin`, which loops until the grid point is certain), raising the precision
//! can only shrink an enclosure.

use std::fmt;
use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::lang::ErrVal;
use crate::num::{Dir, Dyadic};

pub const DEFAULT_PRECISION: u32 = 128;
pub const MAX_PRECISION: u32 = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("divisor enclosure straddles zero")]
    DivisorStraddlesZero,
    #[error("division by exact zero")]
    DivisionByZero,
    #[error("precision {0} exceeds the cap of {MAX_PRECISION} bits")]
    PrecisionOverflow(u32),
    #[error("`{0}` is not a real operation")]
    NotARealOp(&'static str),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cmp {
    Yes,
    No,
    Unknown,
}

fn grid(prec: u32) -> i64 {
    -(prec as i64)
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Enclosure {
    lo: Dyadic,
    hi: Dyadic,
}

impl Enclosure {
    pub fn new(lo: Dyadic, hi: Dyadic) -> Enclosure {
        assert!(lo <= hi, "inverted enclosure");
        Enclosure { lo, hi }
    }

    pub fn point(d: Dyadic) -> Enclosure {
        Enclosure { lo: d.clone(), hi: d }
    }

    pub fn from_int(n: i64) -> Enclosure {
        Enclosure::point(Dyadic::from_int(n))
    }

    /// Tightest grid enclosure of an exact rational.
    pub fn from_rational(r: &BigRational, prec: u32) -> Enclosure {
        if r.denom().is_one() || r.denom().trailing_zeros() == Some(r.denom().bits() - 1) {
            // dyadic already: exact
            let d = Dyadic::from_rational(r, -(r.denom().bits() as i64 - 1), Dir::Down);
            return Enclosure::point(d);
        }
        let g = grid(prec);
        Enclosure {
            lo: Dyadic::from_rational(r, g, Dir::Down),
            hi: Dyadic::from_rational(r, g, Dir::Up),
        }
    }

    pub fn from_f64(x: f64) -> Option<Enclosure> {
        Dyadic::from_f64(x).map(Enclosure::point)
    }

    pub fn lo(&self) -> &Dyadic {
        &self.lo
    }

    pub fn hi(&self) -> &Dyadic {
        &self.hi
    }

    pub fn width(&self) -> Dyadic {
        &self.hi - &self.lo
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn midpoint(&self) -> Dyadic {
        Dyadic::midpoint(&self.lo, &self.hi)
    }

    pub fn contains_rational(&self, r: &BigRational) -> bool {
        &self.lo.to_rational() <= r && r <= &self.hi.to_rational()
    }

    pub fn contains(&self, other: &Enclosure) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        !self.lo.is_positive() && !self.hi.is_negative()
    }

    fn round_out(lo: &Dyadic, hi: &Dyadic, prec: u32) -> Enclosure {
        let g = grid(prec);
        Enclosure {
            lo: lo.round_to_grid(g, Dir::Down),
            hi: hi.round_to_grid(g, Dir::Up),
        }
    }

    pub fn neg(&self) -> Enclosure {
        Enclosure { lo: -&self.hi, hi: -&self.lo }
    }

    pub fn add(&self, o: &Enclosure, prec: u32) -> Enclosure {
        Enclosure::round_out(&(&self.lo + &o.lo), &(&self.hi + &o.hi), prec)
    }

    pub fn sub(&self, o: &Enclosure, prec: u32) -> Enclosure {
        Enclosure::round_out(&(&self.lo - &o.hi), &(&self.hi - &o.lo), prec)
    }

    pub fn mul(&self, o: &Enclosure, prec: u32) -> Enclosure {
        let c = [
            &self.lo * &o.lo,
            &self.lo * &o.hi,
            &self.hi * &o.lo,
            &self.hi * &o.hi,
        ];
        let lo = c.iter().min().unwrap();
        let hi = c.iter().max().unwrap();
        Enclosure::round_out(lo, hi, prec)
    }

    pub fn div(&self, o: &Enclosure, prec: u32) -> Result<Enclosure, OracleError> {
        if o.lo.is_zero() && o.hi.is_zero() {
            return Err(OracleError::DivisionByZero);
        }
        if !(o.lo > Dyadic::zero() || o.hi < Dyadic::zero()) {
            return Err(OracleError::DivisorStraddlesZero);
        }
        let g = grid(prec);
        let pairs = [
            (&self.lo, &o.lo),
            (&self.lo, &o.hi),
            (&self.hi, &o.lo),
            (&self.hi, &o.hi),
        ];
        let lo = pairs
            .iter()
            .map(|(a, b)| Dyadic::div_round(a, b, g, Dir::Down))
            .min()
            .unwrap();
        let hi = pairs
            .iter()
            .map(|(a, b)| Dyadic::div_round(a, b, g, Dir::Up))
            .max()
            .unwrap();
        Ok(Enclosure { lo, hi })
    }

    pub fn abs(&self, prec: u32) -> Enclosure {
        let zero = Dyadic::zero();
        let (lo, hi) = if self.lo >= zero {
            (self.lo.clone(), self.hi.clone())
        } else if self.hi <= zero {
            (-&self.hi, -&self.lo)
        } else {
            (zero, Dyadic::max(&-&self.lo, &self.hi))
        };
        Enclosure::round_out(&lo, &hi, prec)
    }

    pub fn dist(&self, o: &Enclosure, prec: u32) -> Enclosure {
        self.sub(o, prec).abs(prec)
    }

    pub fn sin(&self, prec: u32) -> Enclosure {
        let g = grid(prec);
        let one = Dyadic::one();
        let w = self.width();
        if w >= Dyadic::from_int(2) {
            return Enclosure { lo: -&one, hi: one };
        }
        if self.is_point() {
            return Enclosure {
                lo: sin_round(&self.lo, &Dyadic::zero(), g, Dir::Down),
                hi: sin_round(&self.lo, &Dyadic::zero(), g, Dir::Up),
            };
        }
        // sin is 1-Lipschitz: on [lo, hi] it stays within w of both endpoint values.
        let neg_w = -&w;
        let lo = [
            sin_round(&self.lo, &neg_w, g, Dir::Down),
            sin_round(&self.hi, &neg_w, g, Dir::Down),
            -&one,
        ]
        .into_iter()
        .max()
        .unwrap();
        let hi = [
            sin_round(&self.lo, &w, g, Dir::Up),
            sin_round(&self.hi, &w, g, Dir::Up),
            one,
        ]
        .into_iter()
        .min()
        .unwrap();
        Enclosure { lo, hi }
    }

    pub fn approx_f64(&self) -> f64 {
        self.midpoint().to_f64()
    }
}

impl fmt::Debug for Enclosure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo.approx_string(), self.hi.approx_string())
    }
}

impl fmt::Display for Enclosure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_point() {
            write!(f, "{}", self.lo)
        } else {
            write!(f, "[{}, {}]", self.lo, self.hi)
        }
    }
}

pub fn compare_leq(a: &Enclosure, b: &Enclosure) -> Cmp {
    if a.hi <= b.lo {
        Cmp::Yes
    } else if b.hi < a.lo {
        Cmp::No
    } else {
        Cmp::Unknown
    }
}

pub fn enclose_op(
    op: crate::lang::Op,
    args: &[Enclosure],
    prec: u32,
) -> Result<Enclosure, OracleError> {
    use crate::lang::Op::*;
    if prec > MAX_PRECISION {
        return Err(OracleError::PrecisionOverflow(prec));
    }
    Ok(match (op, args) {
        (AddR, [a, b]) => a.add(b, prec),
        (SubR, [a, b]) => a.sub(b, prec),
        (MulR, [a, b]) => a.mul(b, prec),
        (DivR, [a, b]) => a.div(b, prec)?,
        (SinR, [a]) => a.sin(prec),
        (AbsR, [a]) => a.abs(prec),
        (DistR, [a, b]) => a.dist(b, prec),
        _ => return Err(OracleError::NotARealOp(op.name())),
    })
}

// ---------------------------------------------------------------------------
// sin

/// `floor` or `ceil` of `sin(x) + shift` on the grid `2^g`, found by
/// recomputing at growing working precision until the grid point is certain.
fn sin_round(x: &Dyadic, shift: &Dyadic, g: i64, dir: Dir) -> Dyadic {
    if x.is_zero() {
        return shift.round_to_grid(g, dir);
    }
    let mut guard = 32i64;
    loop {
        let work = (-g).max(0) + guard;
        let (lo, hi) = sin_raw(x, work);
        let a = (&lo + shift).round_to_grid(g, dir);
        let b = (&hi + shift).round_to_grid(g, dir);
        if a == b || guard > 8192 {
            // Past the guard limit fall back to the certainly-sound side.
            return match dir {
                Dir::Down => a,
                Dir::Up => b,
            };
        }
        guard *= 2;
    }
}

/// Raw enclosure of `sin(x)` with width about `2^-work`.
pub fn sin_raw(x: &Dyadic, work: i64) -> (Dyadic, Dyadic) {
    let w = work + 8;
    let four = Dyadic::from_int(4);
    let (fixed, input_err) = if x.abs() <= four {
        to_fixed(x, w)
    } else {
        reduce(x, w)
    };
    let (sum, err) = taylor_sin_fixed(&fixed, w);
    let total = err + input_err;
    let lo = Dyadic::new(&sum - &total, -w);
    let hi = Dyadic::new(&sum + &total, -w);
    let one = Dyadic::one();
    (Dyadic::max(&lo, &-&one), Dyadic::min(&hi, &one))
}

/// `(X, e)` with `|x - X 2^-w| <= e 2^-w`.
fn to_fixed(x: &Dyadic, w: i64) -> (BigInt, BigInt) {
    let shifted = x.mul_pow2(w);
    let f = shifted.round_to_grid(0, Dir::Down);
    let err = if f == shifted { BigInt::zero() } else { BigInt::one() };
    (f.to_bigint().expect("integral after rounding"), err)
}

/// Argument reduction by a multiple of `2 pi`, returning a fixed-point value
/// within `[-4, 4]` and the accumulated discrepancy in ulps.
fn reduce(x: &Dyadic, w: i64) -> (BigInt, BigInt) {
    let mag = x.msb().unwrap_or(0).max(0);
    let wp = w + mag + 16;
    let (pi, pi_err) = pi_fixed(wp);
    let two_pi = &pi << 1usize;
    let (xf, x_err) = to_fixed(x, wp);
    // k = round(x / 2pi)
    let k = crate::num::dyadic::floor_div(&((&xf << 1usize) + &two_pi), &(&two_pi << 1usize));
    let y = &xf - &k * &two_pi;
    // |y_true - y| <= x_err + 2|k| pi_err  (in 2^-wp ulps)
    let err_wp = x_err + (k.abs() * pi_err * 2u32);
    // Drop to w bits; truncation adds at most one ulp.
    let shift = (wp - w) as usize;
    let y_w = &y >> shift;
    let err_w = (&err_wp >> shift) + 2u32;
    (y_w, err_w)
}

/// Fixed-point Taylor series for `sin(X 2^-w)`, `|X 2^-w| <= 4`.
/// Returns `(S, E)` with `|sin - S 2^-w| <= E 2^-w`.
fn taylor_sin_fixed(x: &BigInt, w: i64) -> (BigInt, BigInt) {
    let one_w: BigInt = BigInt::one() << w as usize;
    let x2 = (x * x) >> w as usize;
    let x2_hi = &x2 + 1u32;
    let mut t = x.clone();
    let mut t_err = BigInt::zero();
    let mut sum = x.clone();
    let mut err_sum = BigInt::zero();
    let mut k: u64 = 0;
    loop {
        let d = BigInt::from((2 * k + 2) * (2 * k + 3));
        let den = &one_w * &d;
        let next = crate::num::dyadic::floor_div(&(-(&t * &x2)), &den);
        let next_err =
            crate::num::dyadic::ceil_div(&(t.abs() + &t_err * &x2_hi), &den) + 1u32;
        let decreasing = x2_hi < den;
        if decreasing && next.abs() <= BigInt::one() {
            // Alternating tail with shrinking terms: bounded by its first term.
            err_sum += next.abs() + next_err;
            return (sum, err_sum);
        }
        sum += &next;
        err_sum += &next_err;
        t = next;
        t_err = next_err;
        k += 1;
    }
}

/// `pi` in fixed point at scale `2^-w`, with an error bound in ulps.
fn pi_fixed(w: i64) -> (BigInt, BigInt) {
    static CACHE: OnceLock<Mutex<Vec<(i64, BigInt, BigInt)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(Vec::new()));
    let bucket = (w + 127) / 128 * 128;
    {
        let guard = cache.lock().expect("pi cache poisoned");
        if let Some((bw, p, e)) = guard.iter().find(|(bw, _, _)| *bw >= bucket) {
            let shift = (bw - w) as usize;
            return ((p >> shift), (e >> shift) + 2u32);
        }
    }
    let (p, e) = machin_pi(bucket);
    cache
        .lock()
        .expect("pi cache poisoned")
        .push((bucket, p.clone(), e.clone()));
    let shift = (bucket - w) as usize;
    (p >> shift, (e >> shift) + 2u32)
}

fn atan_inv(n: u32, w: i64) -> (BigInt, BigInt) {
    let n2 = BigInt::from(n) * BigInt::from(n);
    let mut power = (BigInt::one() << w as usize) / BigInt::from(n);
    let mut sum = BigInt::zero();
    let mut k: u64 = 0;
    while !power.is_zero() {
        let term = &power / BigInt::from(2 * k + 1);
        if k.is_multiple_of(2) {
            sum += term;
        } else {
            sum -= term;
        }
        power /= &n2;
        k += 1;
    }
    // each power and term is within 3 ulps; the dropped tail is below one ulp
    (sum, BigInt::from(3 * (k + 2)))
}

fn machin_pi(w: i64) -> (BigInt, BigInt) {
    let (a5, e5) = atan_inv(5, w);
    let (a239, e239) = atan_inv(239, w);
    let pi = a5 * 16u32 - a239 * 4u32;
    (pi, e5 * 16u32 + e239 * 4u32)
}

/// Enclosure of pi at the given precision.
pub fn pi_enclosure(prec: u32) -> Enclosure {
    let w = prec as i64 + 16;
    let (p, e) = pi_fixed(w);
    Enclosure::round_out(&Dyadic::new(&p - &e, -w), &Dyadic::new(&p + &e, -w), prec)
}

// ---------------------------------------------------------------------------
// error-level values

/// Extended nonnegative dyadic.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ext {
    Fin(Dyadic),
    Inf,
}

impl Ext {
    fn add(&self, o: &Ext) -> Ext {
        match (self, o) {
            (Ext::Fin(a), Ext::Fin(b)) => Ext::Fin(a + b),
            _ => Ext::Inf,
        }
    }

    pub fn approx_f64(&self) -> f64 {
        match self {
            Ext::Fin(d) => d.to_f64(),
            Ext::Inf => f64::INFINITY,
        }
    }

    pub fn to_errval(&self) -> ErrVal {
        match self {
            Ext::Fin(d) => ErrVal::Finite(d.to_rational()),
            Ext::Inf => ErrVal::Infinity,
        }
    }
}

impl fmt::Display for Ext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ext::Fin(d) => write!(f, "{d}"),
            Ext::Inf => f.write_str("inf"),
        }
    }
}

/// Enclosure of a value of the extended nonnegative reals.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ErrEnclosure {
    lo: Ext,
    hi: Ext,
}

impl ErrEnclosure {
    pub fn new(lo: Ext, hi: Ext) -> ErrEnclosure {
        assert!(lo <= hi);
        assert!(!matches!(&lo, Ext::Fin(d) if d.is_negative()));
        ErrEnclosure { lo, hi }
    }

    pub fn zero() -> ErrEnclosure {
        ErrEnclosure::point(Dyadic::zero())
    }

    pub fn infinity() -> ErrEnclosure {
        ErrEnclosure { lo: Ext::Inf, hi: Ext::Inf }
    }

    pub fn point(d: Dyadic) -> ErrEnclosure {
        ErrEnclosure { lo: Ext::Fin(d.clone()), hi: Ext::Fin(d) }
    }

    pub fn from_errval(v: &ErrVal, prec: u32) -> ErrEnclosure {
        match v {
            ErrVal::Infinity => ErrEnclosure::infinity(),
            ErrVal::Finite(r) => ErrEnclosure::from_real(&Enclosure::from_rational(r, prec)),
        }
    }

    /// Clamp a real enclosure known to denote a nonnegative value.
    pub fn from_real(e: &Enclosure) -> ErrEnclosure {
        let lo = Dyadic::max(e.lo(), &Dyadic::zero());
        let hi = Dyadic::max(e.hi(), &Dyadic::zero());
        ErrEnclosure { lo: Ext::Fin(lo), hi: Ext::Fin(hi) }
    }

    pub fn lo(&self) -> &Ext {
        &self.lo
    }

    pub fn hi(&self) -> &Ext {
        &self.hi
    }

    pub fn is_infinite(&self) -> bool {
        self.lo == Ext::Inf
    }

    /// True when the enclosure admits infinity.
    pub fn may_be_infinite(&self) -> bool {
        self.hi == Ext::Inf
    }

    pub fn width(&self) -> Ext {
        match (&self.lo, &self.hi) {
            (Ext::Fin(a), Ext::Fin(b)) => Ext::Fin(b - a),
            (Ext::Inf, Ext::Inf) => Ext::Fin(Dyadic::zero()),
            _ => Ext::Inf,
        }
    }

    pub fn add(&self, o: &ErrEnclosure) -> ErrEnclosure {
        ErrEnclosure { lo: self.lo.add(&o.lo), hi: self.hi.add(&o.hi) }
    }

    pub fn round_out(&self, prec: u32) -> ErrEnclosure {
        let g = grid(prec);
        let r = |e: &Ext, dir| match e {
            Ext::Fin(d) => Ext::Fin(d.round_to_grid(g, dir)),
            Ext::Inf => Ext::Inf,
        };
        ErrEnclosure { lo: r(&self.lo, Dir::Down), hi: r(&self.hi, Dir::Up) }
    }

    pub fn approx_f64(&self) -> f64 {
        self.hi.approx_f64()
    }
}

pub fn compare_err_leq(a: &ErrEnclosure, b: &ErrEnclosure) -> Cmp {
    if a.hi <= b.lo {
        Cmp::Yes
    } else if b.hi < a.lo {
        Cmp::No
    } else {
        Cmp::Unknown
    }
}

impl fmt::Debug for ErrEnclosure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}]", self.lo.approx_f64(), self.hi.approx_f64())
    }
}

impl fmt::Display for ErrEnclosure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.lo == self.hi {
            write!(f, "{}", self.lo)
        } else {
            write!(f, "[{}, {}]", self.lo, self.hi)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::Op;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn integer_addition_is_exact() {
        let r = enclose_op(Op::AddR, &[Enclosure::from_int(1), Enclosure::from_int(2)], 53).unwrap();
        assert_eq!(r, Enclosure::from_int(3));
    }

    #[test]
    fn sin_of_zero_is_zero() {
        let r = enclose_op(Op::SinR, &[Enclosure::from_int(0)], 128).unwrap();
        assert_eq!(r, Enclosure::from_int(0));
    }

    #[test]
    fn sin_one_tenth() {
        let x = Enclosure::from_rational(&q(1, 10), 80);
        let r = enclose_op(Op::SinR, &[x], 80).unwrap();
        // sin(1/10) = 0.09983341664682815230681...
        let lo = BigRational::new(998334166468281523u64.into(), 10_000_000_000_000_000_000u64.into());
        let hi = BigRational::new(998334166468281524u64.into(), 10_000_000_000_000_000_000u64.into());
        assert!(r.lo().to_rational() <= hi && r.hi().to_rational() >= lo);
        assert!(r.width() <= Dyadic::pow2(-79));
    }

    #[test]
    fn comparisons() {
        let one = Enclosure::from_int(1);
        let two = Enclosure::from_int(2);
        assert_eq!(compare_leq(&one, &two), Cmp::Yes);
        assert_eq!(compare_leq(&two, &one), Cmp::No);
        let a = Enclosure::new(Dyadic::zero(), Dyadic::pow2(-1));
        let b = Enclosure::new(Dyadic::pow2(-2), Dyadic::from_f64(0.75).unwrap());
        assert_eq!(compare_leq(&a, &b), Cmp::Unknown);
    }

    #[test]
    fn division_errors() {
        let one = Enclosure::from_int(1);
        let z = Enclosure::from_int(0);
        assert_eq!(one.div(&z, 64), Err(OracleError::DivisionByZero));
        let s = Enclosure::new(Dyadic::from_int(-1), Dyadic::one());
        assert_eq!(one.div(&s, 64), Err(OracleError::DivisorStraddlesZero));
        assert!(enclose_op(Op::AddR, &[one.clone(), one], MAX_PRECISION + 1).is_err());
    }

    #[test]
    fn pi_brackets_known_digits() {
        let p = pi_enclosure(200);
        let lo = BigRational::new(
            31415926535897932384626433832795u128.into(),
            10_000_000_000_000_000_000_000_000_000_000u128.into(),
        );
        let hi = &lo + q(1, 1) / BigRational::from_integer(BigInt::from(10).pow(31));
        assert!(p.lo().to_rational() < hi && p.hi().to_rational() > lo);
        assert!(p.width() <= Dyadic::pow2(-200));
    }

    #[test]
    fn large_argument_reduction() {
        // sin(1e6) = -0.34999350217129293616...
        let r = Enclosure::from_int(1_000_000).sin(100);
        let v = r.approx_f64();
        assert!((v - (-0.349_993_502_171_292_9)).abs() < 1e-15, "{v}");
        assert!(r.width() <= Dyadic::pow2(-100));
    }
}
