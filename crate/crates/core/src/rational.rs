//! Exact rational scalars and their text form.
//!
//! Rationals serialize as `"num/den"` with a positive denominator, e.g.
//! `"1/3"` or `"-2/1"`. Parsing also accepts bare integers.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Precision used when an irrational quantity has to be stored as a rational.
pub const DEFAULT_PRECISION_BITS: u32 = 60;

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let parse_int = |t: &str| -> Result<BigInt> {
        t.trim()
            .parse::<BigInt>()
            .map_err(|_| Error::Parse(format!("bad integer in rational {s:?}")))
    };
    match s.split_once('/') {
        Some((n, d)) => {
            let num = parse_int(n)?;
            let den = parse_int(d)?;
            if den.is_zero() {
                return Err(Error::Parse(format!("zero denominator in {s:?}")));
            }
            Ok(Rational::new(num, den))
        }
        None => Ok(Rational::from_integer(parse_int(s)?)),
    }
}

pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        if r.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Exact value of a finite float.
pub fn from_f64_exact(x: f64) -> Option<Rational> {
    Rational::from_float(x)
}

/// Nearest multiple of `2^-bits` to `x`.
pub fn approx_f64(x: f64, bits: u32) -> Rational {
    let scale = BigInt::one() << bits;
    let exact = from_f64_exact(x).unwrap_or_else(Rational::zero);
    let scaled = (exact * Rational::from_integer(scale.clone())).round();
    scaled / Rational::from_integer(scale)
}

/// Square root of a nonnegative rational.
///
/// Returns the exact root when numerator and denominator are perfect squares,
/// otherwise `floor(sqrt(q) * 2^bits) / 2^bits`, whose error is below
/// `2^-bits`. The flag tells which case applied.
pub fn sqrt_rational(q: &Rational, bits: u32) -> (Rational, bool) {
    assert!(!q.is_negative(), "square root of a negative rational");
    let (n, d) = (q.numer(), q.denom());
    let (rn, rd) = (n.sqrt(), d.sqrt());
    if &(&rn * &rn) == n && &(&rd * &rd) == d {
        return (Rational::new(rn, rd), true);
    }
    let scaled: BigInt = (n << (2 * bits)) / d;
    let root = scaled.sqrt();
    (Rational::new(root, BigInt::one() << bits), false)
}

pub fn abs(r: &Rational) -> Rational {
    r.abs()
}
