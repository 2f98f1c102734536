//! `∏_{p < X^γ} (1 − ω(p)/p)`.

use num_traits::{One, ToPrimitive};

use super::{Result, SieveError};
use crate::forms::FormSystem;
use crate::localdensity::omega_closed;
use crate::numutil::primes_below;
use crate::Rational;

/// Largest admissible `X^γ`.
pub const DEFAULT_PRIME_CAP: u64 = 10_000_000;

/// Denominator size beyond which the product continues in floating point.
const EXACT_BITS: u64 = 4096;

pub fn density_product(sys: &FormSystem, x: f64, gamma: f64) -> Result<f64> {
    density_product_capped(sys, x, gamma, DEFAULT_PRIME_CAP)
}

pub fn density_product_capped(sys: &FormSystem, x: f64, gamma: f64, cap: u64) -> Result<f64> {
    if !(x > 0.0 && gamma.is_finite()) {
        return Err(SieveError::BadParams(format!("X = {x}, gamma = {gamma}")));
    }
    let bound = x.powf(gamma);
    if !(bound <= cap as f64) {
        return Err(SieveError::CapExceeded { value: bound, cap });
    }
    // primes p < bound
    let limit = bound.ceil() as u64;
    let mut exact = Rational::one();
    let mut float: Option<f64> = None;
    for p in primes_below(limit) {
        if (p as f64) >= bound {
            break;
        }
        let factor = Rational::one() - omega_closed(sys, p as u128)? / Rational::from_integer((p as i64).into());
        match float.as_mut() {
            Some(acc) => *acc *= factor.to_f64().unwrap_or(f64::NAN),
            None => {
                exact *= factor;
                if exact.denom().bits() > EXACT_BITS {
                    float = Some(exact.to_f64().unwrap_or(f64::NAN));
                }
            }
        }
    }
    Ok(float.unwrap_or_else(|| exact.to_f64().unwrap_or(f64::NAN)))
}
