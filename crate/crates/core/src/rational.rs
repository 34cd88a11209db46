//! Rotation numbers given as exact fractions or decimal strings, and
//! continued-fraction approximation.

use std::fmt;

use num_integer::Integer;
use num_rational::Ratio;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RationalError {
    #[error("cannot parse rotation {0:?}: expected \"p/q\" or a decimal")]
    Parse(String),
    #[error("rotation {0:?} has a zero denominator")]
    ZeroDenominator(String),
}

/// How a rotation coordinate was written.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RotationKind {
    Fraction,
    Decimal,
}

/// One coordinate of a rotation vector. Decimal strings are kept as the
/// exact rational they denote.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rotation {
    text: String,
    kind: RotationKind,
    exact: Ratio<i128>,
}

impl Rotation {
    pub fn parse(text: &str) -> Result<Self, RationalError> {
        let t = text.trim();
        let err = || RationalError::Parse(text.to_string());
        if let Some((p, q)) = t.split_once('/') {
            let p: i128 = p.trim().parse().map_err(|_| err())?;
            let q: i128 = q.trim().parse().map_err(|_| err())?;
            if q == 0 {
                return Err(RationalError::ZeroDenominator(text.to_string()));
            }
            return Ok(Self { text: t.to_string(), kind: RotationKind::Fraction, exact: Ratio::new(p, q) });
        }
        let (neg, body) = match t.strip_prefix('-') {
            Some(b) => (true, b),
            None => (false, t.strip_prefix('+').unwrap_or(t)),
        };
        let (int, frac) = body.split_once('.').unwrap_or((body, ""));
        if (int.is_empty() && frac.is_empty())
            || !int.bytes().all(|b| b.is_ascii_digit())
            || !frac.bytes().all(|b| b.is_ascii_digit())
            || frac.len() > 30
        {
            return Err(err());
        }
        let digits = format!("{int}{frac}");
        let numer: i128 = if digits.is_empty() { 0 } else { digits.parse().map_err(|_| err())? };
        let denom = 10i128.checked_pow(frac.len() as u32).ok_or_else(err)?;
        let numer = if neg { -numer } else { numer };
        Ok(Self { text: t.to_string(), kind: RotationKind::Decimal, exact: Ratio::new(numer, denom) })
    }

    pub fn from_fraction(p: i64, q: i64) -> Self {
        Self::parse(&format!("{p}/{q}")).expect("valid fraction")
    }

    pub fn zero() -> Self {
        Self::parse("0").expect("valid decimal")
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn kind(&self) -> RotationKind {
        self.kind
    }

    pub fn exact(&self) -> Ratio<i128> {
        self.exact
    }

    pub fn is_zero(&self) -> bool {
        *self.exact.numer() == 0
    }

    /// Value reduced into `[0, 1)`.
    pub fn value(&self) -> f64 {
        let r = self.exact;
        let (n, d) = (*r.numer(), *r.denom());
        n.mod_floor(&d) as f64 / d as f64
    }

    /// Reduced denominator of the exact value.
    pub fn denominator(&self) -> i128 {
        *self.exact.denom()
    }
}

impl fmt::Display for Rotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl Serialize for Rotation {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.text)
    }
}

impl<'de> Deserialize<'de> for Rotation {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Text(String),
            Number(serde_json::Number),
        }
        let text = match Repr::deserialize(d)? {
            Repr::Text(t) => t,
            Repr::Number(n) => n.to_string(),
        };
        Rotation::parse(&text).map_err(serde::de::Error::custom)
    }
}

/// Continued-fraction convergents `p/q` of `x` with `q ≤ max_den`.
pub fn convergents(x: f64, max_den: i64) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    let (mut p0, mut q0, mut p1, mut q1) = (0i64, 1i64, 1i64, 0i64);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        if !a.is_finite() || a.abs() > 1e15 {
            break;
        }
        let a = a as i64;
        let (Some(p2), Some(q2)) = (a.checked_mul(p1).and_then(|v| v.checked_add(p0)), a.checked_mul(q1).and_then(|v| v.checked_add(q0))) else {
            break;
        };
        if q2 > max_den {
            break;
        }
        out.push((p2, q2));
        let frac = r - a as f64;
        if frac.abs() < 1e-15 {
            break;
        }
        r = 1.0 / frac;
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
    }
    out
}

/// Fraction `p/q`, `q ≤ max_den`, within `tol` of `x`, found among the
/// convergents of `x`.
pub fn recover_fraction(x: f64, max_den: i64, tol: f64) -> Option<(i64, i64)> {
    convergents(x, max_den).into_iter().find(|&(p, q)| (x - p as f64 / q as f64).abs() <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parsing() {
        let r = Rotation::parse("618034/1000000").unwrap();
        assert_eq!(r.kind(), RotationKind::Fraction);
        assert_eq!(r.denominator(), 500000);
        let d = Rotation::parse("0.6180339887").unwrap();
        assert_eq!(d.kind(), RotationKind::Decimal);
        assert_eq!(d.denominator(), 10_000_000_000);
        assert!((d.value() - 0.6180339887).abs() < 1e-16);
        assert_eq!(Rotation::parse("0.5").unwrap().denominator(), 2);
        assert_eq!(Rotation::parse("-0.25").unwrap().value(), 0.75);
        assert_eq!(Rotation::parse("3/2").unwrap().value(), 0.5);
        assert_eq!(Rotation::parse("0").unwrap().value(), 0.0);
        assert!(Rotation::parse("1/0").is_err());
        assert!(Rotation::parse("abc").is_err());
        assert!(Rotation::parse(".").is_err());
    }

    #[test]
    fn serde_accepts_strings_and_numbers() {
        let v: Vec<Rotation> = serde_json::from_str(r#"["1/3", "0.25", 0.5]"#).unwrap();
        assert_eq!(v[0].denominator(), 3);
        assert_eq!(v[2].value(), 0.5);
        assert_eq!(serde_json::to_string(&v[0]).unwrap(), "\"1/3\"");
    }

    #[test]
    fn convergents_of_golden_section() {
        let c = convergents(0.6180339887498949, 100);
        assert_eq!(c, vec![(0, 1), (1, 1), (1, 2), (2, 3), (3, 5), (5, 8), (8, 13), (13, 21), (21, 34), (34, 55), (55, 89)]);
        assert_eq!(recover_fraction(0.375, 256, 1e-12), Some((3, 8)));
        assert_eq!(recover_fraction(0.6180339887, 256, 1e-9), None);
    }
}
