//! Points of the Riemann sphere and of complex projective space.

use std::fmt;

use num_complex::Complex64;
use serde::de::{self, Deserializer, SeqAccess, Visitor};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A point of the extended complex plane.
///
/// Serialized as `[re, im]`, or the string `"inf"` for the point at infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedComplex {
    Finite(Complex64),
    Infinity,
}

impl ExtendedComplex {
    pub fn finite(re: f64, im: f64) -> Self {
        Self::Finite(Complex64::new(re, im))
    }

    pub fn real(re: f64) -> Self {
        Self::Finite(Complex64::new(re, 0.0))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Self::Infinity)
    }

    pub fn as_finite(&self) -> Option<Complex64> {
        match self {
            Self::Finite(z) => Some(*z),
            Self::Infinity => None,
        }
    }

    /// Chordal distance on the unit-diameter-2 sphere.
    pub fn chordal_distance(&self, other: &Self) -> f64 {
        match (self, other) {
            (Self::Infinity, Self::Infinity) => 0.0,
            (Self::Finite(z), Self::Infinity) | (Self::Infinity, Self::Finite(z)) => {
                2.0 / (1.0 + z.norm_sqr()).sqrt()
            }
            (Self::Finite(a), Self::Finite(b)) => {
                2.0 * (a - b).norm() / ((1.0 + a.norm_sqr()).sqrt() * (1.0 + b.norm_sqr()).sqrt())
            }
        }
    }

    /// Euclidean distance for finite points, infinite otherwise (and 0 between two infinities).
    pub fn plane_distance(&self, other: &Self) -> f64 {
        match (self, other) {
            (Self::Finite(a), Self::Finite(b)) => (a - b).norm(),
            (Self::Infinity, Self::Infinity) => 0.0,
            _ => f64::INFINITY,
        }
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        match (self, other) {
            (Self::Infinity, Self::Infinity) => true,
            (Self::Finite(a), Self::Finite(b)) => {
                (a - b).norm() <= tol * (1.0 + a.norm().max(b.norm()))
            }
            _ => false,
        }
    }
}

impl From<Complex64> for ExtendedComplex {
    fn from(z: Complex64) -> Self {
        Self::Finite(z)
    }
}

impl fmt::Display for ExtendedComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Infinity => write!(f, "∞"),
            Self::Finite(z) => write!(f, "{}", z),
        }
    }
}

impl Serialize for ExtendedComplex {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Self::Infinity => serializer.serialize_str("inf"),
            Self::Finite(z) => {
                let mut seq = serializer.serialize_seq(Some(2))?;
                seq.serialize_element(&z.re)?;
                seq.serialize_element(&z.im)?;
                seq.end()
            }
        }
    }
}

impl<'de> Deserialize<'de> for ExtendedComplex {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = ExtendedComplex;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                write!(f, "a [re, im] pair or the string \"inf\"")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Self::Value, E> {
                if v == "inf" {
                    Ok(ExtendedComplex::Infinity)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }
            fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Self::Value, A::Error> {
                let re: f64 = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::invalid_length(0, &self))?;
                let im: f64 = seq
                    .next_element()?
                    .ok_or_else(|| de::Error::invalid_length(1, &self))?;
                if seq.next_element::<f64>()?.is_some() {
                    return Err(de::Error::invalid_length(3, &self));
                }
                if !re.is_finite() || !im.is_finite() {
                    return Err(de::Error::custom("complex components must be finite"));
                }
                Ok(ExtendedComplex::finite(re, im))
            }
        }
        deserializer.deserialize_any(V)
    }
}

/// Serde helper for plain `Complex64` values as `[re, im]`.
pub mod complex_pair {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(Complex64::new(re, im))
    }
}

/// Serde helper for `Vec<Complex64>` as a list of `[re, im]` pairs.
pub mod complex_vec {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
        v.iter()
            .map(|z| [z.re, z.im])
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Complex64>, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(pairs
            .into_iter()
            .map(|[re, im]| Complex64::new(re, im))
            .collect())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PointError {
    #[error("the zero vector is not a projective point")]
    ZeroVector,
    #[error("coordinates must be finite")]
    NonFinite,
}

const TIE_TOLERANCE: f64 = 1e-12;

/// A point of complex projective space, normalized so that its coordinate of
/// largest modulus is exactly 1 (ties go to the lowest index).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectivePoint {
    #[serde(with = "complex_vec")]
    coords: Vec<Complex64>,
}

impl ProjectivePoint {
    pub fn new(coords: Vec<Complex64>) -> Result<Self, PointError> {
        if coords
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(PointError::NonFinite);
        }
        let max = coords.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if max == 0.0 {
            return Err(PointError::ZeroVector);
        }
        let pivot = coords
            .iter()
            .position(|z| z.norm() >= max * (1.0 - TIE_TOLERANCE))
            .expect("maximum is attained");
        let scale = coords[pivot];
        let mut coords: Vec<Complex64> = coords.iter().map(|z| z / scale).collect();
        coords[pivot] = Complex64::new(1.0, 0.0);
        Ok(Self { coords })
    }

    pub fn coords(&self) -> &[Complex64] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Scale-invariant distance: `min_{|s|=1} |p/|p| - s q/|q||`.
    /// Infinite when the dimensions differ.
    pub fn distance(&self, other: &Self) -> f64 {
        if self.len() != other.len() {
            return f64::INFINITY;
        }
        let np = self.coords.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let nq = other
            .coords
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt();
        let inner: Complex64 = self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(p, q)| q.conj() * p)
            .sum::<Complex64>()
            / (np * nq);
        let phase = if inner.norm() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            inner / inner.norm()
        };
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(p, q)| (p / np - phase * q / nq).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// The point with coordinate `i` multiplied by `factor`.
    pub fn scale_coordinate(&self, i: usize, factor: Complex64) -> Result<Self, PointError> {
        let mut coords = self.coords.clone();
        coords[i] *= factor;
        Self::new(coords)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn normalization_picks_largest_modulus() {
        let p = ProjectivePoint::new(vec![c(0.1, 0.0), c(0.0, 2.0), c(1.0, 1.0)]).unwrap();
        assert_eq!(p.coords()[1], c(1.0, 0.0));
        assert!((p.coords()[0] - c(0.0, -0.05)).norm() < 1e-15);
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let p = ProjectivePoint::new(vec![c(0.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0)]).unwrap();
        assert_eq!(p.coords()[1], c(1.0, 0.0));
    }

    #[test]
    fn zero_vector_rejected() {
        assert_eq!(
            ProjectivePoint::new(vec![c(0.0, 0.0); 3]),
            Err(PointError::ZeroVector)
        );
    }

    #[test]
    fn distance_is_scale_invariant() {
        let p = ProjectivePoint::new(vec![c(1.0, 2.0), c(3.0, -1.0), c(0.5, 0.5)]).unwrap();
        let s = c(-0.3, 7.0);
        let q = ProjectivePoint::new(p.coords().iter().map(|z| z * s).collect()).unwrap();
        assert!(p.distance(&q) < 1e-15);
        let r = ProjectivePoint::new(vec![c(1.0, 2.0), c(3.0, -1.0), c(0.6, 0.5)]).unwrap();
        assert!(p.distance(&r) > 1e-3);
    }

    #[test]
    fn extended_complex_json() {
        let v = vec![
            ExtendedComplex::Infinity,
            ExtendedComplex::finite(1.5, -2.0),
        ];
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"["inf",[1.5,-2.0]]"#);
        let back: Vec<ExtendedComplex> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
        assert!(serde_json::from_str::<ExtendedComplex>(r#""infinity""#).is_err());
        assert!(serde_json::from_str::<ExtendedComplex>("[1.0]").is_err());
    }

    #[test]
    fn chordal_distance_to_infinity() {
        let z = ExtendedComplex::real(0.0);
        assert!((z.chordal_distance(&ExtendedComplex::Infinity) - 2.0).abs() < 1e-15);
        let w = ExtendedComplex::real(1e12);
        assert!(w.chordal_distance(&ExtendedComplex::Infinity) < 1e-11);
    }
}
