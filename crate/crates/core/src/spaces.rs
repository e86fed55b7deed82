//! Finite-dimensional complex normed and quasi-normed spaces.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cvec::CVec;
use crate::error::{invalid, Error, Result};
use crate::math;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Lp,
    Schatten,
    Hilbert,
    WeightedLp,
    Custom,
}

/// Declarative description of a space. `p` is the ℓ_p exponent, or the
/// Schatten index `r`; `dim` is the complex dimension (`m²` for an `m×m`
/// Schatten class).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    pub family: Family,
    #[serde(default = "default_exponent", with = "exponent_serde")]
    pub p: f64,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

fn default_exponent() -> f64 {
    2.0
}

/// JSON has no infinity; the ℓ_∞ exponent is written as the string `"inf"`.
mod exponent_serde {
    use serde::de::{self, Visitor};
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(p: &f64, s: S) -> Result<S::Ok, S::Error> {
        if p.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*p)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        struct ExpVisitor;
        impl Visitor<'_> for ExpVisitor {
            type Value = f64;
            fn expecting(&self, f: &mut core::fmt::Formatter) -> core::fmt::Result {
                f.write_str("a positive number or \"inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
                Ok(v)
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
                Ok(v as f64)
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
                Ok(v as f64)
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
                match v {
                    "inf" | "infinity" => Ok(f64::INFINITY),
                    _ => Err(E::invalid_value(de::Unexpected::Str(v), &self)),
                }
            }
        }
        d.deserialize_any(ExpVisitor)
    }
}

impl SpaceSpec {
    pub fn lp(p: f64, dim: usize) -> Self {
        SpaceSpec { family: Family::Lp, p, dim, weights: None, name: None }
    }

    pub fn hilbert(dim: usize) -> Self {
        SpaceSpec { family: Family::Hilbert, p: 2.0, dim, weights: None, name: None }
    }

    /// Schatten class `C_r` on `side × side` matrices.
    pub fn schatten(r: f64, side: usize) -> Self {
        SpaceSpec { family: Family::Schatten, p: r, dim: side * side, weights: None, name: None }
    }

    pub fn weighted_lp(p: f64, weights: Vec<f64>) -> Self {
        let dim = weights.len();
        SpaceSpec { family: Family::WeightedLp, p, dim, weights: Some(weights), name: None }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0) {
            return Err(invalid(format!("exponent must be positive, got {}", self.p)));
        }
        if self.dim == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        match self.family {
            Family::Schatten => {
                if self.p.is_infinite() {
                    return Err(invalid("schatten index must be finite"));
                }
                let side = isqrt(self.dim);
                if side * side != self.dim {
                    return Err(invalid(format!("schatten dim {} is not a perfect square", self.dim)));
                }
            }
            Family::Hilbert => {
                if self.p != 2.0 {
                    return Err(invalid("hilbert family has exponent 2"));
                }
            }
            Family::WeightedLp => match &self.weights {
                Some(w) if w.len() == self.dim && w.iter().all(|&x| x > 0.0 && x.is_finite()) => {}
                _ => return Err(invalid("weighted_lp needs `dim` positive finite weights")),
            },
            Family::Lp | Family::Custom => {}
        }
        Ok(())
    }

    /// `p < 1`: only a quasi-triangle inequality holds.
    pub fn is_quasi(&self) -> bool {
        self.p < 1.0
    }
}

impl fmt::Display for SpaceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = if self.p.is_infinite() { String::from("inf") } else { format!("{}", self.p) };
        match self.family {
            Family::Lp => write!(f, "lp:{}:{}", p, self.dim),
            Family::Hilbert => write!(f, "hilbert:{}", self.dim),
            Family::Schatten => write!(f, "schatten:{}:{}", p, isqrt(self.dim)),
            Family::WeightedLp => {
                write!(f, "weighted_lp:{}:", p)?;
                for (i, w) in self.weights.iter().flatten().enumerate() {
                    write!(f, "{}{}", if i == 0 { "" } else { "," }, w)?;
                }
                Ok(())
            }
            Family::Custom => write!(f, "custom:{}", self.name.as_deref().unwrap_or("?")),
        }
    }
}

/// The mini-grammar printed by `Display`: `lp:P:N`, `hilbert:N`,
/// `schatten:R:SIDE`, `weighted_lp:P:W1,W2,…`, with `P = inf` allowed.
impl FromStr for SpaceSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad =
            || invalid(format!("cannot parse space `{s}` (expected e.g. lp:2:3, lp:inf:2, hilbert:3, schatten:1:2)"));
        let exp = |t: &str| -> Result<f64> {
            match t {
                "inf" | "infinity" => Ok(f64::INFINITY),
                _ => t.parse::<f64>().map_err(|_| bad()),
            }
        };
        let count = |t: &str| t.parse::<usize>().map_err(|_| bad());
        let parts: Vec<&str> = s.trim().split(':').collect();
        let spec = match parts.as_slice() {
            ["lp", p, n] => SpaceSpec::lp(exp(p)?, count(n)?),
            ["hilbert", n] => SpaceSpec::hilbert(count(n)?),
            ["schatten", r, side] => SpaceSpec::schatten(exp(r)?, count(side)?),
            ["weighted_lp", p, w] => {
                let w = w.split(',').map(|x| x.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<Vec<_>>>()?;
                SpaceSpec::weighted_lp(exp(p)?, w)
            }
            _ => return Err(bad()),
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn isqrt(n: usize) -> usize {
    let mut s = math::sqrt(n as f64) as usize;
    while s * s > n {
        s -= 1;
    }
    while (s + 1) * (s + 1) <= n {
        s += 1;
    }
    s
}

pub type NormFn = Arc<dyn Fn(&[Complex64]) -> f64 + Send + Sync>;

/// An evaluable space: a [`SpaceSpec`] plus, for the custom family, the norm
/// oracle itself.
#[derive(Clone)]
pub struct Space {
    spec: SpaceSpec,
    custom: Option<NormFn>,
}

impl fmt::Debug for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Space").field("spec", &self.spec).finish()
    }
}

const HOMOGENEITY_SAMPLES: u64 = 100;
const HOMOGENEITY_TOL: f64 = 1e-8;

impl Space {
    pub fn new(spec: SpaceSpec) -> Result<Self> {
        spec.validate()?;
        if spec.family == Family::Custom {
            return Err(invalid("custom spaces need a norm oracle; use Space::custom"));
        }
        Ok(Space { spec, custom: None })
    }

    pub fn lp(p: f64, dim: usize) -> Result<Self> {
        Self::new(SpaceSpec::lp(p, dim))
    }

    /// Registers a user norm. Absolute homogeneity is spot-checked on seeded
    /// samples and the oracle is rejected if it fails.
    pub fn custom(dim: usize, name: &str, norm: NormFn) -> Result<Self> {
        let spec = SpaceSpec { family: Family::Custom, p: 1.0, dim, weights: None, name: Some(String::from(name)) };
        spec.validate()?;
        let mut worst: f64 = 0.0;
        for i in 0..HOMOGENEITY_SAMPLES {
            let mut g = rng::task_rng(0x5eed_4e0b, i);
            let v = rng::complex_gaussian(&mut g, dim);
            let mag = math::exp(math::ln(10.0) * (2.0 * rng::uniform(&mut g) - 1.0));
            let c = rng::phase(&mut g) * mag;
            let nv = norm(v.as_slice());
            let ncv = norm(v.scaled(c).as_slice());
            if !nv.is_finite() || !ncv.is_finite() || nv < 0.0 {
                return Err(Error::NotHomogeneous { defect: f64::INFINITY });
            }
            let scale = (mag * nv).max(f64::MIN_POSITIVE);
            worst = worst.max(math::abs(ncv - mag * nv) / scale);
        }
        if worst > HOMOGENEITY_TOL {
            return Err(Error::NotHomogeneous { defect: worst });
        }
        Ok(Space { spec, custom: Some(norm) })
    }

    pub fn spec(&self) -> &SpaceSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    pub fn is_quasi(&self) -> bool {
        self.spec.is_quasi()
    }

    /// ‖v‖, with dimension and finiteness checks.
    pub fn norm(&self, v: &CVec) -> Result<f64> {
        v.check_dim(self.dim())?;
        if !v.is_finite() {
            return Err(Error::NonFinite);
        }
        self.norm_of(v.as_slice())
    }

    /// Unchecked evaluation for hot loops; callers guarantee the dimension.
    pub(crate) fn norm_of(&self, v: &[Complex64]) -> Result<f64> {
        debug_assert_eq!(v.len(), self.dim());
        match self.spec.family {
            Family::Lp | Family::Hilbert => Ok(lp_norm(v, self.spec.p, None)),
            Family::WeightedLp => Ok(lp_norm(v, self.spec.p, self.spec.weights.as_deref())),
            Family::Schatten => schatten_norm(v, self.spec.p),
            Family::Custom => Ok((self.custom.as_ref().expect("custom oracle"))(v)),
        }
    }

    /// `count` vectors of norm one: complex Gaussian draws rescaled by 1/‖v‖.
    pub fn random_unit(&self, count: usize, seed: u64) -> Result<Vec<CVec>> {
        if count == 0 {
            return Err(invalid("count must be at least 1"));
        }
        (0..count as u64)
            .map(|i| {
                let mut g = rng::task_rng(seed, i);
                self.unit_from(&mut g)
            })
            .collect()
    }

    pub(crate) fn unit_from(&self, g: &mut rng::SampleRng) -> Result<CVec> {
        loop {
            let v = rng::complex_gaussian(g, self.dim());
            let n = self.norm_of(v.as_slice())?;
            if n > 1e-300 {
                return Ok(v.scaled_real(1.0 / n));
            }
        }
    }
}

fn lp_norm(v: &[Complex64], p: f64, weights: Option<&[f64]>) -> f64 {
    let w = |j: usize| weights.map_or(1.0, |ws| ws[j]);
    if p.is_infinite() {
        return v.iter().enumerate().map(|(j, z)| w(j) * z.norm()).fold(0.0, f64::max);
    }
    if p == 1.0 {
        return v.iter().enumerate().map(|(j, z)| w(j) * z.norm()).sum();
    }
    if p == 2.0 {
        return math::sqrt(v.iter().enumerate().map(|(j, z)| w(j) * z.norm_sqr()).sum());
    }
    // Scale by the largest entry so the power sum neither underflows nor
    // overflows.
    let m = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if m == 0.0 {
        return 0.0;
    }
    let s: f64 = v.iter().enumerate().map(|(j, z)| w(j) * math::powf(z.norm() / m, p)).sum();
    m * math::powf(s, 1.0 / p)
}

fn schatten_norm(v: &[Complex64], r: f64) -> Result<f64> {
    let side = isqrt(v.len());
    let a = DMatrix::from_row_slice(side, side, v);
    let svd =
        a.try_svd(false, false, f64::EPSILON, 10_000).ok_or_else(|| Error::SvdFailed { side, matrix: v.to_vec() })?;
    let sv: Vec<Complex64> = svd.singular_values.iter().map(|&s| Complex64::new(s, 0.0)).collect();
    Ok(lp_norm(&sv, r, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn euclidean_norm_of_three_four_i() {
        let s = Space::lp(2.0, 2).unwrap();
        let v = CVec::new(vec![c(3.0, 0.0), c(0.0, 4.0)]);
        assert!((s.norm(&v).unwrap() - 5.0).abs() < 1e-15);
    }

    #[test]
    fn l1_norm_of_one_and_i() {
        let s = Space::lp(1.0, 2).unwrap();
        let v = CVec::new(vec![c(1.0, 0.0), c(0.0, 1.0)]);
        assert!((s.norm(&v).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn trace_norm_of_identity() {
        let s = Space::new(SpaceSpec::schatten(1.0, 2)).unwrap();
        let v = CVec::new(vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!((s.norm(&v).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let s = Space::lp(2.0, 3).unwrap();
        let v = CVec::zeros(2);
        assert_eq!(s.norm(&v), Err(Error::DimensionMismatch { expected: 3, found: 2 }));
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let s = Space::lp(2.0, 1).unwrap();
        let v = CVec::new(vec![c(f64::NAN, 0.0)]);
        assert_eq!(s.norm(&v), Err(Error::NonFinite));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(Space::new(SpaceSpec::lp(0.0, 2)).is_err());
        assert!(Space::new(SpaceSpec { dim: 3, ..SpaceSpec::schatten(1.0, 2) }).is_err());
        assert!(Space::new(SpaceSpec::weighted_lp(2.0, vec![1.0, -1.0])).is_err());
    }

    #[test]
    fn weighted_norm_uses_weights() {
        let s = Space::new(SpaceSpec::weighted_lp(1.0, vec![2.0, 3.0])).unwrap();
        let v = CVec::from_real(&[1.0, 1.0]);
        assert!((s.norm(&v).unwrap() - 5.0).abs() < 1e-15);
    }

    #[test]
    fn random_unit_vectors_are_normalized_and_reproducible() {
        let s = Space::lp(2.0, 3).unwrap();
        let vs = s.random_unit(10, 42).unwrap();
        assert_eq!(vs.len(), 10);
        for v in &vs {
            assert!((s.norm(v).unwrap() - 1.0).abs() <= 1e-12);
        }
        let l1 = Space::lp(1.0, 2).unwrap();
        assert_eq!(l1.random_unit(5, 7).unwrap(), l1.random_unit(5, 7).unwrap());
    }

    #[test]
    fn random_schatten_two_units_have_unit_frobenius_norm() {
        let s = Space::new(SpaceSpec::schatten(2.0, 2)).unwrap();
        for v in s.random_unit(3, 1).unwrap() {
            assert!((v.euclid() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn custom_norm_must_be_homogeneous() {
        let good: NormFn = Arc::new(|v: &[Complex64]| v.iter().map(|z| z.norm()).sum());
        assert!(Space::custom(2, "l1", good).is_ok());
        let bad: NormFn = Arc::new(|v: &[Complex64]| v.iter().map(|z| z.norm_sqr()).sum());
        assert!(matches!(Space::custom(2, "sq", bad), Err(Error::NotHomogeneous { .. })));
    }

    #[test]
    fn spec_json_uses_inf_string() {
        let s = SpaceSpec::lp(f64::INFINITY, 2);
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(j, r#"{"family":"lp","p":"inf","dim":2}"#);
        let back: SpaceSpec = serde_json::from_str(&j).unwrap();
        assert_eq!(back, s);
        let parsed: SpaceSpec = serde_json::from_str(r#"{"family":"lp","p":1.0,"dim":2}"#).unwrap();
        assert_eq!(parsed, SpaceSpec::lp(1.0, 2));
        assert!(serde_json::from_str::<SpaceSpec>(r#"{"family":"lp","p":1,"dim":2,"x":0}"#).is_err());
    }
}
