//! Shared configuration values: the separation constant, the shrink factor,
//! the float tolerance and the entry-time search cap.

use crate::scalar::{NumericMode, Scalar};
use num_bigint::BigInt;
use num_rational::BigRational;

#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    /// Enlargement factor of the separated condition. Any value `λ = μ ≥ 5`
    /// satisfies the covering threshold `μ ≥ 4/(λ−1) + 3`; 5 is the default.
    pub separation: BigRational,
    /// Shrink factor of the doubly-scaled class (default 1/50).
    pub shrink: BigRational,
    /// Comparison tolerance in float mode.
    pub tol: f64,
    /// Step cap for the geometric entry-time search.
    pub step_cap: usize,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            separation: BigRational::from_integer(BigInt::from(5)),
            shrink: BigRational::new(BigInt::from(1), BigInt::from(50)),
            tol: 1e-9,
            step_cap: 64,
        }
    }
}

impl Params {
    pub fn with_tol(tol: f64) -> Self {
        Params {
            tol,
            ..Params::default()
        }
    }

    pub fn separation_scalar(&self, mode: NumericMode) -> Scalar {
        Scalar::from_rational(self.separation.clone(), mode)
    }

    pub fn shrink_scalar(&self, mode: NumericMode) -> Scalar {
        Scalar::from_rational(self.shrink.clone(), mode)
    }
}
