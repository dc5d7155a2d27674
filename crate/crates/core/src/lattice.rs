//! Exact lattice algebra: weights, coweights, rational points and the pairing
//! between the weight lattice and the lattice of one-parameter subgroups.

use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Exact rational scalar used for all combinatorial predicates.
pub type Rational = num_rational::Rational64;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LatticeError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("cannot parse rational {0:?} (expected \"p\" or \"p/q\")")]
    Parse(String),
    #[error("zero denominator in {0:?}")]
    ZeroDenominator(String),
}

fn check_dims(left: usize, right: usize) -> Result<(), LatticeError> {
    if left == right {
        Ok(())
    } else {
        Err(LatticeError::DimensionMismatch { left, right })
    }
}

/// An element of the character (weight) lattice, i.e. a monomial exponent.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Weight(pub Vec<i64>);

/// An element of the cocharacter lattice (a one-parameter subgroup).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoWeight(pub Vec<i64>);

/// A point of the real weight space with exact rational coordinates.
///
/// `num_rational` keeps every coordinate reduced with a positive denominator.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RationalPoint(pub Vec<Rational>);

impl Weight {
    pub fn new(coords: impl Into<Vec<i64>>) -> Self {
        Weight(coords.into())
    }

    pub fn zero(m: usize) -> Self {
        Weight(vec![0; m])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Integer pairing with a coweight.
    pub fn pair(&self, v: &CoWeight) -> Result<i64, LatticeError> {
        check_dims(self.dim(), v.dim())?;
        Ok(self.0.iter().zip(&v.0).map(|(a, b)| a * b).sum())
    }

    pub fn to_rational(&self) -> RationalPoint {
        RationalPoint(self.0.iter().map(|&a| Rational::from_integer(a)).collect())
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&a| a as f64).collect()
    }

    pub fn add(&self, other: &Weight) -> Result<Weight, LatticeError> {
        check_dims(self.dim(), other.dim())?;
        Ok(Weight(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect()))
    }

    pub fn sub(&self, other: &Weight) -> Result<Weight, LatticeError> {
        check_dims(self.dim(), other.dim())?;
        Ok(Weight(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect()))
    }
}

impl CoWeight {
    pub fn new(coords: impl Into<Vec<i64>>) -> Self {
        CoWeight(coords.into())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// True when the gcd of the entries is one.
    pub fn is_primitive(&self) -> bool {
        self.0.iter().fold(0i64, |g, &a| g.gcd(&a)) == 1
    }

    /// Divides out the gcd of the entries; the zero vector is returned unchanged.
    pub fn primitive_part(&self) -> CoWeight {
        let g = self.0.iter().fold(0i64, |g, &a| g.gcd(&a));
        if g <= 1 {
            return self.clone();
        }
        CoWeight(self.0.iter().map(|a| a / g).collect())
    }

    pub fn to_rational(&self) -> Vec<Rational> {
        self.0.iter().map(|&a| Rational::from_integer(a)).collect()
    }
}

impl RationalPoint {
    pub fn new(coords: impl Into<Vec<Rational>>) -> Self {
        RationalPoint(coords.into())
    }

    /// Builds a point from `(numerator, denominator)` pairs.
    pub fn from_fractions(coords: &[(i64, i64)]) -> Self {
        RationalPoint(coords.iter().map(|&(p, q)| Rational::new(p, q)).collect())
    }

    pub fn from_integers(coords: &[i64]) -> Self {
        RationalPoint(coords.iter().map(|&p| Rational::from_integer(p)).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn pair(&self, v: &CoWeight) -> Result<Rational, LatticeError> {
        check_dims(self.dim(), v.dim())?;
        Ok(self
            .0
            .iter()
            .zip(&v.0)
            .fold(Rational::zero(), |acc, (a, &b)| acc + a * Rational::from_integer(b)))
    }

    /// `n * self`, exactly.
    pub fn scale(&self, n: i64) -> RationalPoint {
        RationalPoint(self.0.iter().map(|a| a * Rational::from_integer(n)).collect())
    }

    pub fn is_integral(&self) -> bool {
        self.0.iter().all(|a| a.is_integer())
    }

    /// Integer coordinates when every coordinate is integral.
    pub fn to_weight(&self) -> Option<Weight> {
        if self.is_integral() {
            Some(Weight(self.0.iter().map(|a| a.to_integer()).collect()))
        } else {
            None
        }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(rational_to_f64).collect()
    }

    /// Exact sup-norm distance to a lattice point.
    pub fn linf_distance(&self, w: &Weight) -> Result<Rational, LatticeError> {
        check_dims(self.dim(), w.dim())?;
        Ok(self
            .0
            .iter()
            .zip(&w.0)
            .map(|(a, &b)| (a - Rational::from_integer(b)).abs())
            .fold(Rational::zero(), |m, d| if d > m { d } else { m }))
    }
}

/// Generic pairing of a weight-space vector with a coweight.
pub trait Pairing {
    fn pair_with(&self, v: &CoWeight) -> Result<Rational, LatticeError>;
}

impl Pairing for Weight {
    fn pair_with(&self, v: &CoWeight) -> Result<Rational, LatticeError> {
        self.pair(v).map(Rational::from_integer)
    }
}

impl Pairing for RationalPoint {
    fn pair_with(&self, v: &CoWeight) -> Result<Rational, LatticeError> {
        self.pair(v)
    }
}

/// `<u, v>` for a weight or rational point `u`; integral whenever `u` is a weight.
pub fn pair<P: Pairing + ?Sized>(u: &P, v: &CoWeight) -> Result<Rational, LatticeError> {
    u.pair_with(v)
}

/// `log |chi_alpha|^2` at the point with logarithmic coordinates `u_j = log |t_j|^2`.
pub fn log_char_modulus(alpha: &Weight, u: &[f64]) -> Result<f64, LatticeError> {
    check_dims(alpha.dim(), u.len())?;
    Ok(alpha.0.iter().zip(u).map(|(&a, x)| a as f64 * x).sum())
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| *r.numer() as f64 / *r.denom() as f64)
}

/// Parses `"p"` or `"p/q"` (whitespace tolerant).
pub fn parse_rational(s: &str) -> Result<Rational, LatticeError> {
    let t = s.trim();
    let (p, q) = match t.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (t, "1"),
    };
    let p: i64 = p.parse().map_err(|_| LatticeError::Parse(s.to_string()))?;
    let q: i64 = q.parse().map_err(|_| LatticeError::Parse(s.to_string()))?;
    if q == 0 {
        return Err(LatticeError::ZeroDenominator(s.to_string()));
    }
    Ok(Rational::new(p, q))
}

pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for RationalPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(format_rational).collect();
        write!(f, "({})", parts.join(", "))
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|a| a.to_string()).collect();
        write!(f, "({})", parts.join(", "))
    }
}

impl FromStr for RationalPoint {
    type Err = LatticeError;

    /// Comma separated coordinates, e.g. `"1/2, 0"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let body = s.trim().trim_start_matches('(').trim_end_matches(')');
        body.split(',')
            .map(parse_rational)
            .collect::<Result<Vec<_>, _>>()
            .map(RationalPoint)
    }
}

impl Serialize for RationalPoint {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let parts: Vec<String> = self.0.iter().map(format_rational).collect();
        parts.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for RationalPoint {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let parts: Vec<String> = Vec::deserialize(deserializer)?;
        parts
            .iter()
            .map(|s| parse_rational(s))
            .collect::<Result<Vec<_>, _>>()
            .map(RationalPoint)
            .map_err(serde::de::Error::custom)
    }
}

/// Serde adapter storing a single [`Rational`] as a `"p/q"` string.
pub mod rational_string {
    use super::{format_rational, parse_rational, Rational};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(deserializer)?;
        parse_rational(&s).map_err(serde::de::Error::custom)
    }
}

/// Nearest integer with ties resolved downwards (towards the lexicographically
/// smaller lattice point).
pub fn round_half_down(r: &Rational) -> i64 {
    // ceil(r - 1/2) is the nearest integer with ties going down
    (r - Rational::new(1, 2)).ceil().to_integer()
}
