use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::{One, Zero};

use super::rational::Rational;

/// Coefficient field for jets and frame computations.
///
/// Implemented by `f64` (pipeline mode) and [`Rational`] (exact mode).
/// The transcendental hooks return `None` where the operation leaves the
/// field: rationals only know `exp(0)`, `ln(1)` and integer powers, which is
/// exactly what the exact-mode tests need.
pub trait Scalar:
    Clone
    + PartialEq
    + fmt::Debug
    + fmt::Display
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Zero
    + One
{
    fn from_i64(n: i64) -> Self;

    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_i64(num) / Self::from_i64(den)
    }

    /// Magnitude as f64, for tolerance checks and pivot selection.
    fn abs_f64(&self) -> f64;

    fn to_f64(&self) -> f64;

    fn exp_value(&self) -> Option<Self>;

    fn ln_value(&self) -> Option<Self>;

    /// `self^exponent` for a constant exponent.
    fn pow_value(&self, exponent: &Self) -> Option<Self>;
}

impl Scalar for f64 {
    fn from_i64(n: i64) -> Self {
        n as f64
    }

    fn abs_f64(&self) -> f64 {
        self.abs()
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn exp_value(&self) -> Option<Self> {
        Some(self.exp())
    }

    fn ln_value(&self) -> Option<Self> {
        (*self > 0.0).then(|| self.ln())
    }

    fn pow_value(&self, exponent: &Self) -> Option<Self> {
        if exponent.fract() == 0.0 && exponent.abs() < 64.0 {
            return Some(self.powi(*exponent as i32));
        }
        (*self > 0.0).then(|| self.powf(*exponent))
    }
}

impl Scalar for Rational {
    fn from_i64(n: i64) -> Self {
        Rational::from_i64(n)
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        Rational::new(num, den)
    }

    fn abs_f64(&self) -> f64 {
        self.to_f64().abs()
    }

    fn to_f64(&self) -> f64 {
        Rational::to_f64(self)
    }

    fn exp_value(&self) -> Option<Self> {
        self.is_zero().then(Rational::one)
    }

    fn ln_value(&self) -> Option<Self> {
        self.is_one().then(Rational::zero)
    }

    fn pow_value(&self, exponent: &Self) -> Option<Self> {
        if let Some(k) = exponent.as_integer() {
            return self.checked_powi(k);
        }
        self.is_one().then(Rational::one)
    }
}

/// Commutative-ring operations, for code shared between numeric scalars and
/// symbolic polynomials (the E/H coefficient tables and the Z-system).
///
/// Constants are built from a template element so that context-carrying rings
/// (multivariate polynomials) can participate.
pub trait RingElem:
    Clone + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    /// Constant `n` in the same ring context as `self`.
    fn const_like(&self, n: i64) -> Self;

    fn ring_powi(&self, k: u32) -> Self {
        let mut acc = self.const_like(1);
        for _ in 0..k {
            acc = acc * self.clone();
        }
        acc
    }
}

impl RingElem for f64 {
    fn const_like(&self, n: i64) -> Self {
        n as f64
    }
}

impl RingElem for Rational {
    fn const_like(&self, n: i64) -> Self {
        Rational::from_i64(n)
    }
}
