//! Interval bounds on the error of a single floating-point operation whose
//! operands are themselves approximate.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::lang::{ErrVal, Op};
use crate::num::float::{f64_to_rational, round_rational, RoundMode, MAX_FLOAT};
use crate::num::Dyadic;
use crate::oracle::{Enclosure, ErrEnclosure, Ext};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FloatOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl FloatOp {
    pub const ALL: [FloatOp; 4] = [FloatOp::Add, FloatOp::Sub, FloatOp::Mul, FloatOp::Div];

    pub fn exact(self, a: &BigRational, b: &BigRational) -> Option<BigRational> {
        Some(match self {
            FloatOp::Add => a + b,
            FloatOp::Sub => a - b,
            FloatOp::Mul => a * b,
            FloatOp::Div => {
                if b.is_zero() {
                    return None;
                }
                a / b
            }
        })
    }

    pub fn apply_f64(self, a: f64, b: f64) -> f64 {
        match self {
            FloatOp::Add => a + b,
            FloatOp::Sub => a - b,
            FloatOp::Mul => a * b,
            FloatOp::Div => a / b,
        }
    }

    pub fn from_op(op: Op) -> Option<FloatOp> {
        match op {
            Op::AddR | Op::AddF | Op::FpErrAdd => Some(FloatOp::Add),
            Op::SubR | Op::SubF | Op::FpErrSub => Some(FloatOp::Sub),
            Op::MulR | Op::MulF | Op::FpErrMul => Some(FloatOp::Mul),
            Op::DivR | Op::DivF | Op::FpErrDiv => Some(FloatOp::Div),
            _ => None,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            FloatOp::Add => "+",
            FloatOp::Sub => "-",
            FloatOp::Mul => "*",
            FloatOp::Div => "/",
        }
    }

    /// Exact image of two closed intervals; `None` when a divisor interval
    /// contains zero.
    fn interval(
        self,
        (xl, xh): (&BigRational, &BigRational),
        (yl, yh): (&BigRational, &BigRational),
    ) -> Option<(BigRational, BigRational)> {
        match self {
            FloatOp::Add => Some((xl + yl, xh + yh)),
            FloatOp::Sub => Some((xl - yh, xh - yl)),
            FloatOp::Mul | FloatOp::Div => {
                if self == FloatOp::Div && !yl.is_positive() && !yh.is_negative() {
                    return None;
                }
                let c = [(xl, yl), (xl, yh), (xh, yl), (xh, yh)].map(|(a, b)| {
                    if self == FloatOp::Mul {
                        a * b
                    } else {
                        a / b
                    }
                });
                let lo = c.iter().min().unwrap().clone();
                let hi = c.iter().max().unwrap().clone();
                Some((lo, hi))
            }
        }
    }
}

/// Rounds `[lo, hi]` outward to binary64 and returns the largest distance
/// from a point of `[r_lo, r_hi]` to a point of the rounded interval, or
/// infinity when the rounded interval reaches MAXFLOAT.
fn rounded_distance(
    lo: &BigRational,
    hi: &BigRational,
    r_lo: &BigRational,
    r_hi: &BigRational,
) -> ErrVal {
    let lo_f = round_rational(lo, RoundMode::Down);
    let hi_f = round_rational(hi, RoundMode::Up);
    if !(lo_f.abs() < MAX_FLOAT && hi_f.abs() < MAX_FLOAT) {
        return ErrVal::Infinity;
    }
    let lo_f = f64_to_rational(lo_f).expect("finite");
    let hi_f = f64_to_rational(hi_f).expect("finite");
    let d = std::cmp::max(&hi_f - r_lo, r_hi - &lo_f);
    ErrVal::Finite(if d.is_negative() { BigRational::zero() } else { d })
}

/// Error bound for `op` applied to floats within `xq` of `xe` and `yq` of `ye`,
/// measured against the exact `op(xe, ye)`.
pub fn float_op_err_exact(
    op: FloatOp,
    xe: &BigRational,
    xq: &ErrVal,
    ye: &BigRational,
    yq: &ErrVal,
) -> ErrVal {
    let (ErrVal::Finite(xq), ErrVal::Finite(yq)) = (xq, yq) else {
        return ErrVal::Infinity;
    };
    let Some((lo, hi)) = op.interval((&(xe - xq), &(xe + xq)), (&(ye - yq), &(ye + yq))) else {
        return ErrVal::Infinity;
    };
    let r = op.exact(xe, ye).expect("divisor interval excludes zero");
    rounded_distance(&lo, &hi, &r, &r)
}

fn ext_rational(e: &Ext) -> Option<BigRational> {
    match e {
        Ext::Fin(d) => Some(d.to_rational()),
        Ext::Inf => None,
    }
}

fn point_rational(e: &Enclosure) -> Option<BigRational> {
    e.is_point().then(|| e.lo().to_rational())
}

fn point_err(q: &ErrEnclosure) -> Option<ErrVal> {
    if q.lo() == q.hi() {
        Some(q.hi().to_errval())
    } else {
        None
    }
}

/// Enclosure version: exact whenever every input is a point, otherwise an
/// upper bound computed from the outer intervals.
pub fn float_op_err(
    op: FloatOp,
    xe: &Enclosure,
    xq: &ErrEnclosure,
    ye: &Enclosure,
    yq: &ErrEnclosure,
    prec: u32,
) -> ErrEnclosure {
    if let (Some(a), Some(aq), Some(b), Some(bq)) =
        (point_rational(xe), point_err(xq), point_rational(ye), point_err(yq))
    {
        return ErrEnclosure::from_errval(&float_op_err_exact(op, &a, &aq, &b, &bq), prec);
    }
    let (Some(xqh), Some(yqh)) = (ext_rational(xq.hi()), ext_rational(yq.hi())) else {
        return ErrEnclosure::infinity();
    };
    let (xl, xh) = (xe.lo().to_rational(), xe.hi().to_rational());
    let (yl, yh) = (ye.lo().to_rational(), ye.hi().to_rational());
    let Some((lo, hi)) = op.interval((&(&xl - &xqh), &(&xh + &xqh)), (&(&yl - &yqh), &(&yh + &yqh)))
    else {
        return ErrEnclosure::infinity();
    };
    let Some((r_lo, r_hi)) = op.interval((&xl, &xh), (&yl, &yh)) else {
        return ErrEnclosure::infinity();
    };
    match rounded_distance(&lo, &hi, &r_lo, &r_hi) {
        ErrVal::Infinity => ErrEnclosure::infinity(),
        ErrVal::Finite(d) => {
            let up = Enclosure::from_rational(&d, prec);
            ErrEnclosure::new(Ext::Fin(Dyadic::zero()), Ext::Fin(up.hi().clone()))
        }
    }
}

fn pow2_rational(k: i64) -> BigRational {
    Dyadic::pow2(k).to_rational()
}

/// Bound for `sinf` on a float within `xq` of `xe`: the exact functions
/// differ by at most `min(xq, 2)`, and the float routine adds at most one ulp
/// of a result whose magnitude is below `min(1, |xe| + xq)`.
pub fn sin_err_exact(xe: &BigRational, xq: &ErrVal) -> ErrVal {
    let ErrVal::Finite(xq) = xq else {
        return ErrVal::Infinity;
    };
    let two = BigRational::from_integer(2.into());
    let one = BigRational::from_integer(1.into());
    let moved = std::cmp::min(xq.clone(), two);
    let mag = std::cmp::min(one, xe.abs() + xq);
    ErrVal::Finite(moved + mag * pow2_rational(-52) + pow2_rational(-1074))
}

pub fn sin_err(xe: &Enclosure, xq: &ErrEnclosure, prec: u32) -> ErrEnclosure {
    let mag = std::cmp::max(xe.lo().abs(), xe.hi().abs()).to_rational();
    match ext_rational(xq.hi()) {
        None => ErrEnclosure::infinity(),
        Some(q) => match sin_err_exact(&mag, &ErrVal::Finite(q)) {
            ErrVal::Infinity => ErrEnclosure::infinity(),
            ErrVal::Finite(d) => {
                let exact_inputs = xe.is_point() && xq.lo() == xq.hi();
                let enc = Enclosure::from_rational(&d, prec);
                let lo = if exact_inputs { enc.lo().clone() } else { Dyadic::zero() };
                ErrEnclosure::new(Ext::Fin(lo), Ext::Fin(enc.hi().clone()))
            }
        },
    }
}

/// Bound for converting a natural within `xq` of `xe` to binary64.
pub fn nat_to_float_err(xe: &BigUint, xq: &BigUint) -> ErrVal {
    let top = xe + xq;
    let q = BigRational::from_integer(BigInt::from(xq.clone()));
    let bits = top.bits() as i64;
    if bits <= 53 {
        return ErrVal::Finite(q);
    }
    // Nearest rounding overflows from 2^1024 - 2^970 upward.
    let overflow = (BigUint::from(1u32) << 1024usize) - (BigUint::from(1u32) << 970usize);
    if top >= overflow {
        return ErrVal::Infinity;
    }
    ErrVal::Finite(q + pow2_rational(bits - 54))
}

/// 0 when the comparison of any floats in the two intervals agrees with the
/// exact comparison, 1 otherwise. Enclosures that cannot show the intervals
/// apart give 1, which is always a valid bound.
pub fn leq_err(xe: &Enclosure, xq: &ErrEnclosure, ye: &Enclosure, yq: &ErrEnclosure) -> ErrEnclosure {
    let one = ErrEnclosure::point(Dyadic::one());
    let (Ext::Fin(a), Ext::Fin(b)) = (xq.hi(), yq.hi()) else {
        return one;
    };
    let x_hi = xe.hi() + a;
    let x_lo = xe.lo() - a;
    let y_hi = ye.hi() + b;
    let y_lo = ye.lo() - b;
    if x_hi <= y_lo || x_lo > y_hi {
        ErrEnclosure::zero()
    } else {
        one
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn e(n: i64, d: i64) -> ErrVal {
        ErrVal::Finite(r(n, d))
    }

    #[test]
    fn exact_sum_has_no_error() {
        assert_eq!(
            float_op_err_exact(FloatOp::Add, &r(1, 1), &e(0, 1), &r(2, 1), &e(0, 1)),
            e(0, 1)
        );
    }

    #[test]
    fn interval_sum() {
        assert_eq!(
            float_op_err_exact(FloatOp::Add, &r(1, 1), &e(1, 2), &r(2, 1), &e(1, 2)),
            e(1, 1)
        );
    }

    #[test]
    fn overflow_is_infinite() {
        let big = f64_to_rational(MAX_FLOAT).unwrap();
        assert_eq!(
            float_op_err_exact(FloatOp::Mul, &big, &e(0, 1), &r(2, 1), &e(0, 1)),
            ErrVal::Infinity
        );
        assert_eq!(
            float_op_err_exact(FloatOp::Div, &r(1, 1), &e(0, 1), &r(1, 2), &e(1, 1)),
            ErrVal::Infinity
        );
    }

    #[test]
    fn third_has_rounding_error() {
        // 1/3 rounds; the bound is the larger endpoint distance.
        let b = float_op_err_exact(FloatOp::Div, &r(1, 1), &e(0, 1), &r(3, 1), &e(0, 1));
        let ErrVal::Finite(b) = b else { panic!() };
        assert!(b > BigRational::zero() && b < r(1, 1 << 54) * r(2, 1));
    }

    #[test]
    fn nat_conversion() {
        assert_eq!(nat_to_float_err(&5u32.into(), &1u32.into()), e(1, 1));
        let big = BigUint::from(1u64 << 53) + 1u32;
        assert_eq!(nat_to_float_err(&big, &0u32.into()), e(1, 1));
    }
}
