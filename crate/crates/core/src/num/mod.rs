pub mod dyadic;
pub mod float;

pub use dyadic::{Dir, Dyadic};
pub use float::RoundMode;

use num_rational::BigRational;
use num_traits::One;

/// Canonical text for an exact rational: `n` for integers, `p/q` otherwise.
pub fn rational_to_string(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}
