use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;

/// A point of ℂⁿ. Serialized as a list of `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CVec(Vec<Complex64>);

impl CVec {
    pub fn new(coords: Vec<Complex64>) -> Self {
        CVec(coords)
    }

    pub fn zeros(n: usize) -> Self {
        CVec(alloc::vec![Complex64::new(0.0, 0.0); n])
    }

    /// The `k`-th standard basis vector of ℂⁿ.
    pub fn basis(n: usize, k: usize) -> Self {
        let mut v = Self::zeros(n);
        v.0[k] = Complex64::new(1.0, 0.0);
        v
    }

    pub fn from_real(xs: &[f64]) -> Self {
        CVec(xs.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    /// Interleaved `(re, im)` reals, the layout used by grid functions and
    /// the optimizer.
    pub fn from_interleaved(xs: &[f64]) -> Self {
        CVec(xs.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect())
    }

    pub fn to_interleaved(&self) -> Vec<f64> {
        self.0.iter().flat_map(|c| [c.re, c.im]).collect()
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn check_dim(&self, n: usize) -> Result<()> {
        if self.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, found: self.dim() });
        }
        Ok(())
    }

    pub fn scaled(&self, c: Complex64) -> CVec {
        CVec(self.0.iter().map(|z| z * c).collect())
    }

    pub fn scaled_real(&self, c: f64) -> CVec {
        CVec(self.0.iter().map(|z| z * c).collect())
    }

    pub fn add(&self, other: &CVec) -> CVec {
        CVec(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &CVec) -> CVec {
        CVec(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    /// `self + w * other`.
    pub fn add_scaled(&self, w: Complex64, other: &CVec) -> CVec {
        CVec(self.0.iter().zip(&other.0).map(|(a, b)| a + w * b).collect())
    }

    /// Hermitian inner product `Σ self_j · conj(other_j)`.
    pub fn inner(&self, other: &CVec) -> Complex64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b.conj()).sum()
    }

    /// Euclidean norm on ℂⁿ ≅ ℝ²ⁿ.
    pub fn euclid(&self) -> f64 {
        math::sqrt(self.0.iter().map(|c| c.norm_sqr()).sum())
    }
}

/// Writes `a + w * b` into `out` without allocating.
#[inline]
pub fn combine_into(a: &[Complex64], w: Complex64, b: &[Complex64], out: &mut [Complex64]) {
    for ((o, x), y) in out.iter_mut().zip(a).zip(b) {
        *o = x + w * y;
    }
}

impl Index<usize> for CVec {
    type Output = Complex64;
    fn index(&self, i: usize) -> &Complex64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for CVec {
    fn index_mut(&mut self, i: usize) -> &mut Complex64 {
        &mut self.0[i]
    }
}

impl From<Vec<Complex64>> for CVec {
    fn from(v: Vec<Complex64>) -> Self {
        CVec(v)
    }
}
