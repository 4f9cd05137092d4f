//! Exact conversions between rationals and IEEE 754 binary64.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use super::dyadic::Dyadic;

/// Largest finite binary64, `2^1024 - 2^971`.
pub const MAX_FLOAT: f64 = f64::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RoundMode {
    /// Round to nearest, ties to even.
    Nearest,
    /// Toward negative infinity.
    Down,
    /// Toward positive infinity.
    Up,
}

fn pow2_f64(k: i64) -> f64 {
    debug_assert!((-1074..=1023).contains(&k));
    if k >= -1022 {
        f64::from_bits(((k + 1023) as u64) << 52)
    } else {
        f64::from_bits(1u64 << (k + 1074))
    }
}

/// `floor(log2 r)` for positive `r = num / den`.
fn floor_log2(num: &BigInt, den: &BigInt) -> i64 {
    let e = num.bits() as i64 - den.bits() as i64;
    // 2^e <= r  iff  num >= den * 2^e
    let ge = if e >= 0 {
        num >= &(den << e as usize)
    } else {
        &(num << (-e) as usize) >= den
    };
    if ge {
        e
    } else {
        e - 1
    }
}

/// Round a positive rational `num/den` to binary64 magnitude.
fn round_positive(num: &BigInt, den: &BigInt, mode: RoundMode) -> f64 {
    let e = floor_log2(num, den);
    if e > 1023 {
        return match mode {
            RoundMode::Down => MAX_FLOAT,
            _ => f64::INFINITY,
        };
    }
    // Scale so the significand (53 bits, or the subnormal grid) is an integer.
    let s: i64 = if e >= -1022 { 52 - e } else { 1074 };
    let (n, d) = if s >= 0 {
        (num << s as usize, den.clone())
    } else {
        (num.clone(), den << (-s) as usize)
    };
    let (q, rem) = n.div_rem(&d);
    let q = if rem.is_zero() {
        q
    } else {
        match mode {
            RoundMode::Down => q,
            RoundMode::Up => q + 1,
            RoundMode::Nearest => {
                let twice: BigInt = &rem << 1usize;
                if twice > d || (twice == d && q.is_odd()) {
                    q + 1
                } else {
                    q
                }
            }
        }
    };
    if q.is_zero() {
        return 0.0;
    }
    // q <= 2^53, so the conversion is exact and the scaling multiply is the
    // only rounding step (and it is exact unless it overflows to infinity).
    let qf = q.to_f64().expect("significand fits");
    qf * pow2_f64(-s)
}

pub fn round_rational(r: &BigRational, mode: RoundMode) -> f64 {
    let num = r.numer();
    let den = r.denom();
    if num.is_zero() {
        return 0.0;
    }
    if num.is_negative() {
        let flipped = match mode {
            RoundMode::Nearest => RoundMode::Nearest,
            RoundMode::Down => RoundMode::Up,
            RoundMode::Up => RoundMode::Down,
        };
        -round_positive(&-num, den, flipped)
    } else {
        round_positive(num, den, mode)
    }
}

pub fn round_dyadic(d: &Dyadic, mode: RoundMode) -> f64 {
    round_rational(&d.to_rational(), mode)
}

/// Exact rational value of a finite float.
pub fn f64_to_rational(x: f64) -> Option<BigRational> {
    Dyadic::from_f64(x).map(|d| d.to_rational())
}

/// Unit in the last place of a finite nonzero float's binade.
pub fn ulp(x: f64) -> f64 {
    let x = x.abs();
    if x == 0.0 || x < f64::MIN_POSITIVE {
        return pow2_f64(-1074);
    }
    let e = ((x.to_bits() >> 52) & 0x7ff) as i64 - 1023;
    pow2_f64(e - 52)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn nearest_matches_hardware_parse() {
        for (n, d) in [(1, 3), (1, 10), (2, 3), (-7, 9), (355, 113), (1, 1 << 40)] {
            let expect: f64 = n as f64 / d as f64;
            assert_eq!(round_rational(&q(n, d), RoundMode::Nearest), expect);
        }
        assert_eq!(
            round_rational(&q(1, 3), RoundMode::Nearest).to_bits(),
            0x3FD5555555555555
        );
    }

    #[test]
    fn directed_modes_bracket() {
        for (n, d) in [(1, 3), (-1, 3), (1, 10), (22, 7)] {
            let r = q(n, d);
            let lo = round_rational(&r, RoundMode::Down);
            let hi = round_rational(&r, RoundMode::Up);
            assert!(f64_to_rational(lo).unwrap() < r);
            assert!(f64_to_rational(hi).unwrap() > r);
            assert_eq!(lo.next_up(), hi);
        }
    }

    #[test]
    fn overflow_and_subnormals() {
        let huge = BigRational::from_integer(BigInt::from(1) << 1024usize);
        assert_eq!(round_rational(&huge, RoundMode::Nearest), f64::INFINITY);
        assert_eq!(round_rational(&huge, RoundMode::Down), MAX_FLOAT);
        assert_eq!(round_rational(&-huge, RoundMode::Up), -MAX_FLOAT);
        let tiny = BigRational::new(1.into(), BigInt::from(1) << 1075usize);
        // exactly half the smallest subnormal: ties to even gives zero
        assert_eq!(round_rational(&tiny, RoundMode::Nearest), 0.0);
        assert_eq!(round_rational(&tiny, RoundMode::Up), pow2_f64(-1074));
        let max = f64_to_rational(MAX_FLOAT).unwrap();
        assert_eq!(round_rational(&max, RoundMode::Nearest), MAX_FLOAT);
        assert_eq!(ulp(1.0), f64::EPSILON);
    }
}
