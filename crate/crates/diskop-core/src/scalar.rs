//! Numeric substrate: exact rationals or floats with a comparison tolerance.
//!
//! Every quantity in the crate (radii, centers, matrix entries, flow times) is a
//! [`Scalar`]. A scalar is either an arbitrary-precision rational (`Exact`) or an
//! `f64` (`Float`). Arithmetic inside one mode is closed; mixing modes in an
//! arithmetic operation is a programming error and panics. Comparisons in float
//! mode are tolerance-relaxed symmetrically: `a ≤ b` is interpreted as
//! `a ≤ b + tol`, and `a ≥ b` as `a ≥ b − tol`. All geometric predicates stick to
//! squared quantities so exact mode never needs square roots.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::fmt;

/// Which arithmetic a value (or a whole scene) lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NumericMode {
    Exact,
    Float,
}

/// A single number in either numeric mode.
#[derive(Clone, PartialEq)]
pub enum Scalar {
    Exact(BigRational),
    Float(f64),
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(q) => write!(f, "{}", q),
            Scalar::Float(x) => write!(f, "{}", x),
        }
    }
}

impl Scalar {
    pub fn mode(&self) -> NumericMode {
        match self {
            Scalar::Exact(_) => NumericMode::Exact,
            Scalar::Float(_) => NumericMode::Float,
        }
    }

    pub fn zero(mode: NumericMode) -> Scalar {
        Scalar::from_int(0, mode)
    }

    pub fn one(mode: NumericMode) -> Scalar {
        Scalar::from_int(1, mode)
    }

    pub fn from_int(n: i64, mode: NumericMode) -> Scalar {
        match mode {
            NumericMode::Exact => Scalar::Exact(BigRational::from_integer(BigInt::from(n))),
            NumericMode::Float => Scalar::Float(n as f64),
        }
    }

    /// `p/q` in the requested mode. Panics if `q == 0`.
    pub fn ratio(p: i64, q: i64, mode: NumericMode) -> Scalar {
        assert!(q != 0, "scalar ratio with zero denominator");
        match mode {
            NumericMode::Exact => {
                Scalar::Exact(BigRational::new(BigInt::from(p), BigInt::from(q)))
            }
            NumericMode::Float => Scalar::Float(p as f64 / q as f64),
        }
    }

    pub fn from_rational(q: BigRational, mode: NumericMode) -> Scalar {
        match mode {
            NumericMode::Exact => Scalar::Exact(q),
            NumericMode::Float => Scalar::Float(rational_to_f64(&q)),
        }
    }

    /// Exact value of this scalar as a rational. Every `f64` is a rational, so
    /// this is lossless in both modes.
    pub fn to_rational(&self) -> BigRational {
        match self {
            Scalar::Exact(q) => q.clone(),
            Scalar::Float(x) => BigRational::from_float(*x)
                .unwrap_or_else(|| panic!("non-finite float {} has no rational value", x)),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Exact(q) => rational_to_f64(q),
            Scalar::Float(x) => *x,
        }
    }

    /// Re-express this value in another mode. Float → Exact is lossless;
    /// Exact → Float rounds to the nearest `f64`.
    pub fn convert(&self, mode: NumericMode) -> Scalar {
        match mode {
            NumericMode::Exact => Scalar::Exact(self.to_rational()),
            NumericMode::Float => Scalar::Float(self.to_f64()),
        }
    }

    fn binop(
        &self,
        rhs: &Scalar,
        fq: impl Fn(&BigRational, &BigRational) -> BigRational,
        ff: impl Fn(f64, f64) -> f64,
    ) -> Scalar {
        match (self, rhs) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(fq(a, b)),
            (Scalar::Float(a), Scalar::Float(b)) => Scalar::Float(ff(*a, *b)),
            _ => panic!("mixed exact/float scalar arithmetic"),
        }
    }

    pub fn add(&self, rhs: &Scalar) -> Scalar {
        self.binop(rhs, |a, b| a + b, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Scalar) -> Scalar {
        self.binop(rhs, |a, b| a - b, |a, b| a - b)
    }

    pub fn mul(&self, rhs: &Scalar) -> Scalar {
        self.binop(rhs, |a, b| a * b, |a, b| a * b)
    }

    /// Panics on a zero divisor in exact mode (all divisors in this crate are
    /// strictly positive scales or radii).
    pub fn div(&self, rhs: &Scalar) -> Scalar {
        self.binop(
            rhs,
            |a, b| {
                assert!(!b.is_zero(), "scalar division by zero");
                a / b
            },
            |a, b| a / b,
        )
    }

    pub fn neg(&self) -> Scalar {
        match self {
            Scalar::Exact(q) => Scalar::Exact(-q),
            Scalar::Float(x) => Scalar::Float(-x),
        }
    }

    pub fn square(&self) -> Scalar {
        self.mul(self)
    }

    pub fn recip(&self) -> Scalar {
        Scalar::one(self.mode()).div(self)
    }

    pub fn abs(&self) -> Scalar {
        match self {
            Scalar::Exact(q) => Scalar::Exact(q.abs()),
            Scalar::Float(x) => Scalar::Float(x.abs()),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Exact(q) => q.is_zero(),
            Scalar::Float(x) => *x == 0.0,
        }
    }

    /// Strict sign test, no tolerance. Used for structural invariants such as
    /// "radii are strictly positive".
    pub fn is_positive(&self) -> bool {
        match self {
            Scalar::Exact(q) => q.is_positive(),
            Scalar::Float(x) => *x > 0.0,
        }
    }

    fn cmp_raw(&self, rhs: &Scalar) -> Ordering {
        match (self, rhs) {
            (Scalar::Exact(a), Scalar::Exact(b)) => a.cmp(b),
            (Scalar::Float(a), Scalar::Float(b)) => {
                a.partial_cmp(b).expect("NaN in scalar comparison")
            }
            _ => panic!("mixed exact/float scalar comparison"),
        }
    }

    /// `self ≤ rhs` with the symmetric tolerance convention.
    pub fn le(&self, rhs: &Scalar, tol: f64) -> bool {
        match (self, rhs) {
            (Scalar::Float(a), Scalar::Float(b)) => *a <= *b + tol,
            _ => self.cmp_raw(rhs) != Ordering::Greater,
        }
    }

    /// `self ≥ rhs` with the symmetric tolerance convention.
    pub fn ge(&self, rhs: &Scalar, tol: f64) -> bool {
        rhs.le(self, tol)
    }

    /// Equality up to tolerance in float mode, exact otherwise.
    pub fn eq_tol(&self, rhs: &Scalar, tol: f64) -> bool {
        match (self, rhs) {
            (Scalar::Float(a), Scalar::Float(b)) => (a - b).abs() <= tol,
            _ => self.cmp_raw(rhs) == Ordering::Equal,
        }
    }

    /// Strict order with no tolerance, for deterministic tie-breaking and
    /// maximum selection.
    pub fn cmp_strict(&self, rhs: &Scalar) -> Ordering {
        self.cmp_raw(rhs)
    }

    /// Square root. Float mode always succeeds; exact mode succeeds only for
    /// perfect rational squares.
    pub fn sqrt(&self) -> Result<Scalar, SqrtError> {
        match self {
            Scalar::Float(x) => {
                if *x < 0.0 {
                    Err(SqrtError::Negative)
                } else {
                    Ok(Scalar::Float(x.sqrt()))
                }
            }
            Scalar::Exact(q) => {
                if q.is_negative() {
                    return Err(SqrtError::Negative);
                }
                let num = q.numer().sqrt();
                let den = q.denom().sqrt();
                if &(&num * &num) == q.numer() && &(&den * &den) == q.denom() {
                    Ok(Scalar::Exact(BigRational::new(num, den)))
                } else {
                    Err(SqrtError::Irrational)
                }
            }
        }
    }

    /// A rational upper bound on the square root of a nonnegative scalar,
    /// exact when the input is a perfect square. Used where a non-minimal
    /// enclosing radius is acceptable.
    pub fn sqrt_upper(&self) -> Scalar {
        match self {
            Scalar::Float(x) => Scalar::Float(x.max(0.0).sqrt()),
            Scalar::Exact(q) => {
                if q.is_negative() {
                    return Scalar::Exact(BigRational::zero());
                }
                // sqrt(a/b) = sqrt(a*b)/b <= (isqrt(a*b)+1)/b
                let ab = q.numer() * q.denom();
                let root = ab.sqrt();
                let bound = if &(&root * &root) == &ab {
                    root
                } else {
                    root + BigInt::one()
                };
                Scalar::Exact(BigRational::new(bound, q.denom().clone()))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum SqrtError {
    #[error("square root of a negative scalar")]
    Negative,
    #[error("exact-mode square root of a non-square rational")]
    Irrational,
}

fn rational_to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        // Out-of-range rationals; fall back to the numerator/denominator ratio.
        let n = q.numer().to_f64().unwrap_or(f64::MAX);
        let d = q.denom().to_f64().unwrap_or(f64::MAX);
        n / d
    })
}

/// Parse the scene-file scalar syntax: `"p/q"` or `"p"` for exact values.
pub fn parse_rational(text: &str) -> Result<BigRational, String> {
    let text = text.trim();
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), Some(d.trim())),
        None => (text, None),
    };
    let n: BigInt = num
        .parse()
        .map_err(|_| format!("invalid rational numerator {:?}", num))?;
    let d: BigInt = match den {
        Some(d) => d
            .parse()
            .map_err(|_| format!("invalid rational denominator {:?}", d))?,
        None => BigInt::one(),
    };
    if d.is_zero() {
        return Err(format!("rational {:?} has zero denominator", text));
    }
    Ok(BigRational::new(n, d))
}

/// Canonical `p/q` rendering (reduced, `p` alone when the denominator is 1).
pub fn format_rational(q: &BigRational) -> String {
    if q.denom().is_one() {
        format!("{}", q.numer())
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Sum of squares of a slice of scalars.
pub fn norm2(v: &[Scalar]) -> Scalar {
    let mode = v.first().map(Scalar::mode).unwrap_or(NumericMode::Exact);
    v.iter()
        .fold(Scalar::zero(mode), |acc, x| acc.add(&x.square()))
}

/// Componentwise difference `a - b`.
pub fn vec_sub(a: &[Scalar], b: &[Scalar]) -> Vec<Scalar> {
    assert_eq!(a.len(), b.len(), "vector length mismatch");
    a.iter().zip(b).map(|(x, y)| x.sub(y)).collect()
}

/// Componentwise sum `a + b`.
pub fn vec_add(a: &[Scalar], b: &[Scalar]) -> Vec<Scalar> {
    assert_eq!(a.len(), b.len(), "vector length mismatch");
    a.iter().zip(b).map(|(x, y)| x.add(y)).collect()
}

/// Scale a vector by a scalar.
pub fn vec_scale(s: &Scalar, v: &[Scalar]) -> Vec<Scalar> {
    v.iter().map(|x| s.mul(x)).collect()
}

/// Dot product.
pub fn dot(a: &[Scalar], b: &[Scalar]) -> Scalar {
    assert_eq!(a.len(), b.len(), "vector length mismatch");
    let mode = a.first().map(Scalar::mode).unwrap_or(NumericMode::Exact);
    a.iter()
        .zip(b)
        .fold(Scalar::zero(mode), |acc, (x, y)| acc.add(&x.mul(y)))
}
