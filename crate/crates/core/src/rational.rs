//! Exact rational helpers shared by every module.
//!
//! All combinatorial objects (atoms, generators, polytope constraints) are
//! carried as [`Rational`] values so that equality of points is exact.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serializer};

pub type Rational = num_rational::BigRational;

/// A point of `Q^d`.
pub type Point = Vec<Rational>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot parse rational from {0:?}")]
pub struct ParseRationalError(pub String);

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `"p/q"` or `"p"`; whitespace around the parts is tolerated.
pub fn parse(s: &str) -> Result<Rational, ParseRationalError> {
    let err = || ParseRationalError(s.to_string());
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s.trim(), "1"),
    };
    let num: BigInt = num.parse().map_err(|_| err())?;
    let den: BigInt = den.parse().map_err(|_| err())?;
    if den.is_zero() {
        return Err(err());
    }
    Ok(Rational::new(num, den))
}

/// Canonical wire form: always `"p/q"` with `q > 0`, fully reduced.
pub fn format(x: &Rational) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

pub fn to_f64(x: &Rational) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        if x.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Exact conversion of a finite `f64`.
pub fn from_f64(x: f64) -> Option<Rational> {
    Rational::from_float(x)
}

/// Smallest rational with denominator `2^bits` that is `>= x`.
pub fn ceil_dyadic(x: f64, bits: u32) -> Option<Rational> {
    if !x.is_finite() {
        return None;
    }
    let scale = (1u64 << bits) as f64;
    let n = (x * scale).ceil();
    Some(Rational::new(
        BigInt::from(n as i128),
        BigInt::from(1u64 << bits),
    ))
}

pub fn floor_int(x: &Rational) -> BigInt {
    x.floor().to_integer()
}

/// `max_j |x_j|`, zero for the empty vector.
pub fn max_norm(x: &[Rational]) -> Rational {
    x.iter().map(|v| v.abs()).max().unwrap_or_else(Rational::zero)
}

/// Max-norm distance between two points of equal length.
pub fn max_dist(x: &[Rational], y: &[Rational]) -> Rational {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b).abs())
        .max()
        .unwrap_or_else(Rational::zero)
}

pub fn dot(x: &[Rational], y: &[Rational]) -> Rational {
    x.iter().zip(y).fold(Rational::zero(), |acc, (a, b)| acc + a * b)
}

pub fn norm_sq(x: &[Rational]) -> Rational {
    dot(x, x)
}

pub fn neg(x: &[Rational]) -> Point {
    x.iter().map(|v| -v).collect()
}

pub fn scale(x: &[Rational], s: &Rational) -> Point {
    x.iter().map(|v| v * s).collect()
}

pub fn add(x: &[Rational], y: &[Rational]) -> Point {
    x.iter().zip(y).map(|(a, b)| a + b).collect()
}

pub fn sub(x: &[Rational], y: &[Rational]) -> Point {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

pub fn zero_point(d: usize) -> Point {
    vec![Rational::zero(); d]
}

pub fn is_zero_point(x: &[Rational]) -> bool {
    x.iter().all(Zero::is_zero)
}

/// Least common multiple of all denominators (1 for an empty input).
pub fn common_denominator<'a>(xs: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    xs.into_iter()
        .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()))
}

/// `floor(sqrt(x) * 2^bits) / 2^bits`, i.e. a dyadic lower approximation of
/// the square root. Returns zero for `x <= 0`.
pub fn sqrt_floor(x: &Rational, bits: u32) -> Rational {
    if !x.is_positive() {
        return Rational::zero();
    }
    let scale = BigInt::one() << (2 * bits as usize);
    // floor(sqrt(num * 4^bits / den))
    let scaled = (x.numer() * &scale) / x.denom();
    let root = scaled.sqrt();
    Rational::new(root, BigInt::one() << bits as usize)
}

/// Exact test of `x <= c * sqrt(y)` for `c, y >= 0`.
pub fn le_scaled_sqrt(x: &Rational, c: &Rational, y: &Rational) -> bool {
    if !x.is_positive() {
        return true;
    }
    x * x <= c * c * y
}

pub fn biguint_to_f64(x: &BigUint) -> f64 {
    x.to_f64().unwrap_or(f64::INFINITY)
}

/// Display adapter printing a point as `(a, b, c)`.
pub struct PointDisplay<'a>(pub &'a [Rational]);

impl fmt::Display for PointDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

/// Serde adapters for the `"p/q"` string encoding.
pub mod serde_q {
    use super::*;

    pub fn serialize<S: Serializer>(x: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse(&s).map_err(serde::de::Error::custom)
    }

    pub mod vec {
        use super::*;
        use serde::ser::SerializeSeq;

        pub fn serialize<S: Serializer>(xs: &[Rational], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(xs.len()))?;
            for x in xs {
                seq.serialize_element(&format(x))?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
            let raw = Vec::<String>::deserialize(d)?;
            raw.iter()
                .map(|s| parse(s).map_err(serde::de::Error::custom))
                .collect()
        }
    }

    pub mod vec2 {
        use super::*;
        use serde::ser::SerializeSeq;

        pub fn serialize<S: Serializer>(xs: &[Vec<Rational>], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(xs.len()))?;
            for x in xs {
                let row: Vec<String> = x.iter().map(format).collect();
                seq.serialize_element(&row)?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(
            d: D,
        ) -> Result<Vec<Vec<Rational>>, D::Error> {
            let raw = Vec::<Vec<String>>::deserialize(d)?;
            raw.iter()
                .map(|row| {
                    row.iter()
                        .map(|s| parse(s).map_err(serde::de::Error::custom))
                        .collect()
                })
                .collect()
        }
    }

    pub mod opt_vec {
        use super::*;

        pub fn serialize<S: Serializer>(
            xs: &Option<Vec<Rational>>,
            s: S,
        ) -> Result<S::Ok, S::Error> {
            match xs {
                Some(v) => s.serialize_some(&v.iter().map(format).collect::<Vec<_>>()),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(
            d: D,
        ) -> Result<Option<Vec<Rational>>, D::Error> {
            let raw = Option::<Vec<String>>::deserialize(d)?;
            raw.map(|row| {
                row.iter()
                    .map(|s| parse(s).map_err(serde::de::Error::custom))
                    .collect()
            })
            .transpose()
        }
    }
}
