//! Dyadic rationals `m * 2^e` with arbitrary-precision mantissas.
//!
//! Every finite binary64 value is a dyadic rational, and sums, differences and
//! products of dyadics are again dyadic, so the only inexact operations are
//! division and transcendental functions. Those round to an explicit grid
//! `2^g` in an explicit direction, which is what makes outward rounding cheap.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Rounding direction on the real line.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dir {
    Down,
    Up,
}

impl Dir {
    pub fn flip(self) -> Dir {
        match self {
            Dir::Down => Dir::Up,
            Dir::Up => Dir::Down,
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dyadic {
    // Normalized: zero has exp 0; otherwise mant is odd.
    mant: BigInt,
    exp: i64,
}

pub(crate) fn floor_div(a: &BigInt, b: &BigInt) -> BigInt {
    a.div_floor(b)
}

pub(crate) fn ceil_div(a: &BigInt, b: &BigInt) -> BigInt {
    -((-a).div_floor(b))
}

impl Dyadic {
    pub fn new(mant: BigInt, exp: i64) -> Dyadic {
        if mant.is_zero() {
            return Dyadic { mant, exp: 0 };
        }
        let tz = mant.trailing_zeros().unwrap_or(0);
        if tz == 0 {
            Dyadic { mant, exp }
        } else {
            Dyadic {
                mant: mant >> tz,
                exp: exp + tz as i64,
            }
        }
    }

    pub fn zero() -> Dyadic {
        Dyadic {
            mant: BigInt::zero(),
            exp: 0,
        }
    }

    pub fn one() -> Dyadic {
        Dyadic::from_int(1)
    }

    pub fn from_int(v: i64) -> Dyadic {
        Dyadic::new(BigInt::from(v), 0)
    }

    pub fn from_bigint(v: BigInt) -> Dyadic {
        Dyadic::new(v, 0)
    }

    pub fn pow2(k: i64) -> Dyadic {
        Dyadic {
            mant: BigInt::one(),
            exp: k,
        }
    }

    /// Exact value of a finite binary64; `None` for NaN and infinities.
    pub fn from_f64(x: f64) -> Option<Dyadic> {
        if !x.is_finite() {
            return None;
        }
        if x == 0.0 {
            return Some(Dyadic::zero());
        }
        let bits = x.to_bits();
        let neg = bits >> 63 == 1;
        let biased = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (m, e) = if biased == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), biased - 1075)
        };
        let m = BigInt::from(m);
        Some(Dyadic::new(if neg { -m } else { m }, e))
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.mant
    }

    pub fn exponent(&self) -> i64 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.mant.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.mant.is_positive()
    }

    pub fn is_integer(&self) -> bool {
        self.exp >= 0
    }

    pub fn abs(&self) -> Dyadic {
        Dyadic {
            mant: self.mant.abs(),
            exp: self.exp,
        }
    }

    pub fn mul_pow2(&self, k: i64) -> Dyadic {
        if self.is_zero() {
            return self.clone();
        }
        Dyadic {
            mant: self.mant.clone(),
            exp: self.exp + k,
        }
    }

    /// `floor(log2|x|) + 1`, i.e. the position just above the leading bit.
    pub fn msb(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            Some(self.exp + self.mant.bits() as i64)
        }
    }

    pub fn to_rational(&self) -> BigRational {
        if self.exp >= 0 {
            BigRational::from_integer(&self.mant << self.exp as usize)
        } else {
            BigRational::new(self.mant.clone(), BigInt::one() << (-self.exp) as usize)
        }
    }

    /// Integer value when the dyadic is an integer.
    pub fn to_bigint(&self) -> Option<BigInt> {
        if self.exp >= 0 {
            Some(&self.mant << self.exp as usize)
        } else {
            None
        }
    }

    pub fn to_f64(&self) -> f64 {
        crate::num::float::round_dyadic(self, crate::num::float::RoundMode::Nearest)
    }

    /// Round onto the grid `2^grid` in direction `dir`.
    pub fn round_to_grid(&self, grid: i64, dir: Dir) -> Dyadic {
        if self.exp >= grid || self.is_zero() {
            return self.clone();
        }
        let shift = (grid - self.exp) as usize;
        let q = match dir {
            // BigInt's arithmetic shift rounds toward negative infinity.
            Dir::Down => &self.mant >> shift,
            Dir::Up => -((-&self.mant) >> shift),
        };
        Dyadic::new(q, grid)
    }

    /// Round the rational `r` onto the grid `2^grid`.
    pub fn from_rational(r: &BigRational, grid: i64, dir: Dir) -> Dyadic {
        let (mut num, mut den) = (r.numer().clone(), r.denom().clone());
        if grid <= 0 {
            num <<= (-grid) as usize;
        } else {
            den <<= grid as usize;
        }
        let q = match dir {
            Dir::Down => floor_div(&num, &den),
            Dir::Up => ceil_div(&num, &den),
        };
        Dyadic::new(q, grid)
    }

    /// `a / b` rounded onto the grid `2^grid`. Panics on a zero divisor.
    pub fn div_round(a: &Dyadic, b: &Dyadic, grid: i64, dir: Dir) -> Dyadic {
        assert!(!b.is_zero(), "dyadic division by zero");
        // a/b = (ma/mb) * 2^(ea-eb); we want floor/ceil(a/b * 2^-grid).
        let shift = a.exp - b.exp - grid;
        let (mut num, mut den) = (a.mant.clone(), b.mant.clone());
        if shift >= 0 {
            num <<= shift as usize;
        } else {
            den <<= (-shift) as usize;
        }
        let q = match dir {
            Dir::Down => floor_div(&num, &den),
            Dir::Up => ceil_div(&num, &den),
        };
        Dyadic::new(q, grid)
    }

    /// Exact midpoint.
    pub fn midpoint(a: &Dyadic, b: &Dyadic) -> Dyadic {
        (a + b).mul_pow2(-1)
    }

    pub fn min(a: &Dyadic, b: &Dyadic) -> Dyadic {
        if a <= b {
            a.clone()
        } else {
            b.clone()
        }
    }

    pub fn max(a: &Dyadic, b: &Dyadic) -> Dyadic {
        if a >= b {
            a.clone()
        } else {
            b.clone()
        }
    }

    /// Short human-readable form (17 significant digits); not exact.
    pub fn approx_string(&self) -> String {
        let f = self.to_f64();
        if f.is_finite() {
            format!("{:e}", f)
        } else {
            format!("~2^{}", self.msb().unwrap_or(0))
        }
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let (sa, sb) = (self.mant.sign(), other.mant.sign());
        if sa != sb {
            let rank = |s: Sign| match s {
                Sign::Minus => 0,
                Sign::NoSign => 1,
                Sign::Plus => 2,
            };
            return rank(sa).cmp(&rank(sb));
        }
        if sa == Sign::NoSign {
            return Ordering::Equal;
        }
        let e = self.exp.min(other.exp);
        let a = &self.mant << (self.exp - e) as usize;
        let b = &other.mant << (other.exp - e) as usize;
        a.cmp(&b)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<'a> Add<&'a Dyadic> for &'a Dyadic {
    type Output = Dyadic;
    fn add(self, rhs: &Dyadic) -> Dyadic {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        let e = self.exp.min(rhs.exp);
        let a = &self.mant << (self.exp - e) as usize;
        let b = &rhs.mant << (rhs.exp - e) as usize;
        Dyadic::new(a + b, e)
    }
}

impl<'a> Sub<&'a Dyadic> for &'a Dyadic {
    type Output = Dyadic;
    fn sub(self, rhs: &Dyadic) -> Dyadic {
        self + &(-rhs)
    }
}

impl<'a> Mul<&'a Dyadic> for &'a Dyadic {
    type Output = Dyadic;
    fn mul(self, rhs: &Dyadic) -> Dyadic {
        Dyadic::new(&self.mant * &rhs.mant, self.exp + rhs.exp)
    }
}

impl Neg for &Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic {
            mant: -&self.mant,
            exp: self.exp,
        }
    }
}

impl Neg for Dyadic {
    type Output = Dyadic;
    fn neg(self) -> Dyadic {
        Dyadic {
            mant: -self.mant,
            exp: self.exp,
        }
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}*2^{}", self.mant, self.exp)
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::num::rational_to_string(&self.to_rational()))
    }
}

impl From<i64> for Dyadic {
    fn from(v: i64) -> Self {
        Dyadic::from_int(v)
    }
}

impl ToPrimitive for Dyadic {
    fn to_i64(&self) -> Option<i64> {
        self.to_bigint().and_then(|b| b.to_i64())
    }
    fn to_u64(&self) -> Option<u64> {
        self.to_bigint().and_then(|b| b.to_u64())
    }
    fn to_f64(&self) -> Option<f64> {
        Some(Dyadic::to_f64(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn f64_round_trip_is_exact() {
        for x in [0.1, -2.5, 1e-310, f64::MAX, f64::MIN_POSITIVE, 3.0] {
            let d = Dyadic::from_f64(x).unwrap();
            assert_eq!(d.to_f64(), x);
        }
        assert!(Dyadic::from_f64(f64::NAN).is_none());
    }

    #[test]
    fn grid_rounding_brackets_the_rational() {
        let r = q(1, 3);
        let lo = Dyadic::from_rational(&r, -20, Dir::Down);
        let hi = Dyadic::from_rational(&r, -20, Dir::Up);
        assert!(lo.to_rational() < r && r < hi.to_rational());
        assert_eq!(&hi - &lo, Dyadic::pow2(-20));
        let neg = Dyadic::from_rational(&q(-1, 3), -20, Dir::Down);
        assert_eq!(neg, -&hi);
    }

    #[test]
    fn division_rounds_in_the_requested_direction() {
        let one = Dyadic::one();
        let three = Dyadic::from_int(3);
        let lo = Dyadic::div_round(&one, &three, -30, Dir::Down);
        let hi = Dyadic::div_round(&one, &three, -30, Dir::Up);
        assert!(lo.to_rational() < q(1, 3));
        assert!(hi.to_rational() > q(1, 3));
        let m = Dyadic::div_round(&-&one, &three, -30, Dir::Up);
        assert_eq!(m, -&lo);
    }

    #[test]
    fn ordering_across_exponents() {
        let a = Dyadic::from_f64(0.75).unwrap();
        let b = Dyadic::from_int(1);
        assert!(a < b);
        assert!(-&b < -&a);
        assert_eq!((&a + &a), Dyadic::from_f64(1.5).unwrap());
        assert_eq!(a.msb(), Some(0));
        assert_eq!(Dyadic::from_int(4).msb(), Some(3));
    }
}
