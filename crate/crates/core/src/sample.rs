//! Seeded samplers for exact reals, naturals and error values.
//!
//! Each trial draws from its own generator derived from `(seed, stream,
//! index)`, so results do not depend on scheduling.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::lang::ErrVal;
use crate::num::float::{f64_to_rational, round_rational, RoundMode};
use crate::num::Dyadic;

pub type TrialRng = ChaCha8Rng;

/// SplitMix64 finalizer, used to spread seeds.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for trial `index` of stream `stream`.
pub fn trial_rng(seed: u64, stream: u64, index: u64) -> TrialRng {
    ChaCha8Rng::seed_from_u64(mix(mix(seed ^ mix(stream)) ^ index))
}

/// Stable stream id for a label such as a file or axiom name.
pub fn stream_id(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3))
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn signed(rng: &mut TrialRng, r: BigRational) -> BigRational {
    if rng.gen_bool(0.5) {
        -r
    } else {
        r
    }
}

/// Mixture of small integers, values next to binade boundaries, rationals in
/// `[-1000, 1000]` and values close to zero.
pub fn real(rng: &mut TrialRng) -> BigRational {
    match rng.gen_range(0..4) {
        0 => rat(rng.gen_range(-16..=16), 1),
        1 => {
            let k = rng.gen_range(-20i64..=20);
            let j = rng.gen_range(1i64..=60);
            let off = Dyadic::pow2(-j).to_rational();
            let base = if rng.gen_bool(0.5) { BigRational::from_integer(1.into()) + off } else { BigRational::from_integer(1.into()) - off };
            signed(rng, base * Dyadic::pow2(k).to_rational())
        }
        2 => {
            let d = rng.gen_range(1i64..=1000);
            rat(rng.gen_range(-1000 * d..=1000 * d), d)
        }
        _ => {
            let k = rng.gen_range(10i64..=60);
            let r = rat(rng.gen_range(1..=1000), rng.gen_range(1..=1000));
            signed(rng, r * Dyadic::pow2(-k).to_rational())
        }
    }
}

/// Real in `[-bound, bound]` with a denominator below 2^20.
pub fn real_in(rng: &mut TrialRng, bound: &BigRational) -> BigRational {
    let d: i64 = rng.gen_range(1..=1 << 20);
    let u = rat(rng.gen_range(-d..=d), d);
    u * bound
}

pub fn nat(rng: &mut TrialRng) -> BigUint {
    BigUint::from(rng.gen_range(0u32..=16))
}

/// Finite nonnegative error, zero with probability one quarter.
pub fn err(rng: &mut TrialRng) -> BigRational {
    match rng.gen_range(0..4) {
        0 => BigRational::zero(),
        1 => rat(rng.gen_range(0..=64), rng.gen_range(1..=64)),
        2 => rat(rng.gen_range(1..=1000), 1) * Dyadic::pow2(-rng.gen_range(20i64..=60)).to_rational(),
        _ => rat(rng.gen_range(0..=1000), rng.gen_range(1..=1000)),
    }
}

/// Error value that is occasionally infinite.
pub fn err_val(rng: &mut TrialRng) -> ErrVal {
    if rng.gen_ratio(1, 16) {
        ErrVal::Infinity
    } else {
        ErrVal::Finite(err(rng))
    }
}

/// Float approximating `exact` within `q`, and the exact distance between
/// them. With `q = 0` the exact value is snapped to the float first, so the
/// triple returned is `(exact', float, distance)`.
pub fn float_near(
    rng: &mut TrialRng,
    exact: &BigRational,
    q: &BigRational,
) -> (BigRational, f64, BigRational) {
    if q.is_zero() {
        let a = round_rational(exact, RoundMode::Nearest);
        let e = f64_to_rational(a).expect("sampled reals are finite");
        return (e, a, BigRational::zero());
    }
    let target = exact + real_in(rng, q);
    let a = round_rational(&target, RoundMode::Nearest);
    let d = (exact - f64_to_rational(a).expect("sampled reals are finite")).abs();
    (exact.clone(), a, d)
}

/// Natural within `q` of `exact`.
pub fn nat_near(rng: &mut TrialRng, exact: &BigUint, q: &BigUint) -> BigUint {
    let q = q.clone().min(BigUint::from(1_000u32));
    let q: u32 = q.try_into().unwrap_or(0);
    let delta = rng.gen_range(-(q as i64)..=q as i64);
    let v = BigInt::from(exact.clone()) + delta;
    if v.is_negative() {
        BigUint::zero()
    } else {
        v.to_biguint().expect("nonnegative")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trials_are_reproducible() {
        let a: Vec<_> = (0..5).map(|i| real(&mut trial_rng(42, 1, i))).collect();
        let b: Vec<_> = (0..5).map(|i| real(&mut trial_rng(42, 1, i))).collect();
        assert_eq!(a, b);
        assert_ne!(real(&mut trial_rng(42, 1, 0)), real(&mut trial_rng(43, 1, 0)));
    }

    #[test]
    fn float_near_respects_bound() {
        let mut rng = trial_rng(7, 0, 0);
        for _ in 0..200 {
            let e = real(&mut rng);
            let q = err(&mut rng);
            let (e2, a, d) = float_near(&mut rng, &e, &q);
            let real_a = f64_to_rational(a).unwrap();
            assert_eq!((&e2 - real_a).abs(), d);
            if !q.is_zero() {
                assert_eq!(e2, e);
                // Within q of the target plus half an ulp of rounding.
                let ulp = f64_to_rational(crate::num::float::ulp(a)).unwrap();
                assert!(d <= &q + ulp);
            } else {
                assert!(d.is_zero());
            }
        }
    }
}
