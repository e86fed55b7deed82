//! Real-valued function oracles on open subsets of ℂⁿ.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// What the caller knows about a field's regularity. Drives the choice of
/// finite-difference model in the Levi-form estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Smoothness {
    #[default]
    C2,
    Lipschitz,
    Usc,
}

/// A deterministic function `ℂⁿ → [-∞, ∞)`. `f64::NEG_INFINITY` is the
/// sentinel for the value −∞; NaN and +∞ are evaluation errors.
pub trait Field {
    fn dim(&self) -> usize;
    fn eval(&self, z: &[Complex64]) -> f64;
    fn smoothness(&self) -> Smoothness {
        Smoothness::C2
    }
}

impl<T: Field + ?Sized> Field for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, z: &[Complex64]) -> f64 {
        (**self).eval(z)
    }
    fn smoothness(&self) -> Smoothness {
        (**self).smoothness()
    }
}

/// Closure-backed field.
#[derive(Clone)]
pub struct FnField<F> {
    dim: usize,
    hint: Smoothness,
    f: F,
}

impl<F: Fn(&[Complex64]) -> f64> FnField<F> {
    pub fn new(dim: usize, f: F) -> Self {
        FnField { dim, hint: Smoothness::C2, f }
    }

    pub fn with_hint(mut self, hint: Smoothness) -> Self {
        self.hint = hint;
        self
    }
}

impl<F: Fn(&[Complex64]) -> f64> Field for FnField<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, z: &[Complex64]) -> f64 {
        (self.f)(z)
    }
    fn smoothness(&self) -> Smoothness {
        self.hint
    }
}
