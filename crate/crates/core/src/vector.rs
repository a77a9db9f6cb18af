//! Dense Euclidean vectors.

use std::ops::{Deref, Index};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VectorError {
    #[error("vector must have at least one coordinate")]
    Empty,
    #[error("coordinate {index} is not finite ({value})")]
    NonFinite { index: usize, value: f64 },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
}

/// A dense vector of finite reals with dimension at least one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Vector(Vec<f64>);

impl Vector {
    /// Builds a vector, rejecting empty input and non-finite coordinates.
    pub fn new(data: Vec<f64>) -> Result<Self, VectorError> {
        if data.is_empty() {
            return Err(VectorError::Empty);
        }
        if let Some((index, &value)) = data.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(VectorError::NonFinite { index, value });
        }
        Ok(Self(data))
    }

    pub fn from_slice(data: &[f64]) -> Result<Self, VectorError> {
        Self::new(data.to_vec())
    }

    /// Wraps arithmetic results without re-validating them. Solvers check
    /// finiteness of oracle output themselves.
    pub(crate) fn from_raw(data: Vec<f64>) -> Self {
        Self(data)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n.max(1)])
    }

    pub fn filled(n: usize, value: f64) -> Self {
        Self(vec![value; n.max(1)])
    }

    /// The `i`-th standard basis vector of dimension `n`.
    pub fn basis(n: usize, i: usize) -> Self {
        let mut v = vec![0.0; n.max(1)];
        v[i] = 1.0;
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn check_dim(&self, other: &Vector) -> Result<(), VectorError> {
        check_dims(self.dim(), other.dim())
    }

    pub fn scale(&self, t: f64) -> Vector {
        Vector(self.0.iter().map(|v| t * v).collect())
    }

    /// `self + t * other`.
    pub fn add_scaled(&self, t: f64, other: &Vector) -> Vector {
        debug_assert_eq!(self.dim(), other.dim());
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a + t * b).collect())
    }

    pub fn sub(&self, other: &Vector) -> Vector {
        self.add_scaled(-1.0, other)
    }

    pub fn add(&self, other: &Vector) -> Vector {
        self.add_scaled(1.0, other)
    }

    /// `(a * x + b * y) / denom`, the convex-combination update used by the
    /// coupled-sequence methods.
    pub fn combine(a: f64, x: &Vector, b: f64, y: &Vector, denom: f64) -> Vector {
        debug_assert_eq!(x.dim(), y.dim());
        Vector(x.0.iter().zip(&y.0).map(|(xi, yi)| (a * xi + b * yi) / denom).collect())
    }

    pub fn norm(&self) -> f64 {
        norm2(self)
    }

    /// Squared Euclidean distance, assuming equal dimensions.
    pub fn dist2(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    pub fn dist(&self, other: &Vector) -> f64 {
        self.dist2(other).sqrt()
    }
}

pub(crate) fn check_dims(left: usize, right: usize) -> Result<(), VectorError> {
    if left == right {
        Ok(())
    } else {
        Err(VectorError::DimensionMismatch { left, right })
    }
}

impl Deref for Vector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl Index<usize> for Vector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl TryFrom<Vec<f64>> for Vector {
    type Error = VectorError;

    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        Vector::new(v)
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Self {
        v.0
    }
}

/// Euclidean inner product.
pub fn dot(a: &Vector, b: &Vector) -> Result<f64, VectorError> {
    a.check_dim(b)?;
    Ok(a.0.iter().zip(&b.0).map(|(x, y)| x * y).sum())
}

/// Euclidean norm. Falls back to rescaling by a power of two (exact) when the
/// plain sum of squares overflows or underflows.
pub fn norm2(a: &Vector) -> f64 {
    let sum: f64 = a.0.iter().map(|v| v * v).sum();
    if sum.is_finite() && sum > f64::MIN_POSITIVE {
        return sum.sqrt();
    }
    let max = a.0.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if max == 0.0 {
        return 0.0;
    }
    let scale = 2f64.powi(max.log2().floor() as i32);
    let sum: f64 = a.0.iter().map(|v| (v / scale) * (v / scale)).sum();
    scale * sum.sqrt()
}
