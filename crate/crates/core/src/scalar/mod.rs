//! Exact scalars: cyclotomic numbers, rational angles, rational functions in
//! `X = q^{-s}`, and multivariate Laurent polynomials for symbolic runs.

mod cyclotomic;
mod laurent;
mod sympoly;

pub use cyclotomic::{angle_root, factor_small, Cyc, IntAccum, RationalAngle};
pub use laurent::{cyc_from_json, cyc_json, LPoly, LaurentRational};
pub(crate) use laurent::{poly_divrem, poly_gcd};
pub use sympoly::{SymPoly, SymSeries};

use num_bigint::BigInt;
use num_rational::BigRational;

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rint(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// `q^k` as an exact rational, `k` of either sign.
pub fn qpow(q: u64, k: i64) -> BigRational {
    let b = BigInt::from(q);
    if k >= 0 {
        BigRational::from_integer(num_traits::pow(b, k as usize))
    } else {
        BigRational::new(BigInt::from(1), num_traits::pow(b, (-k) as usize))
    }
}
