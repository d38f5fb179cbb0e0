//! Flat parameter vectors.
//!
//! Policy parameters, gradients and natural-gradient steps all live in one
//! contiguous `f64` buffer so the learner can treat them as plain vectors.

use std::ops::{Deref, DerefMut};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FlatVector(Vec<f64>);

impl FlatVector {
    pub fn zeros(dim: usize) -> Self {
        FlatVector(vec![0.0; dim])
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

    pub fn dot(&self, other: &FlatVector) -> Result<f64> {
        check_dims(self, other)?;
        Ok(dot(&self.0, &other.0))
    }

    pub fn norm(&self) -> f64 {
        dot(&self.0, &self.0).sqrt()
    }

    pub fn scaled(&self, alpha: f64) -> FlatVector {
        FlatVector(self.0.iter().map(|v| alpha * v).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// In-place `self += alpha * x`.
    pub fn add_scaled(&mut self, alpha: f64, x: &FlatVector) -> Result<()> {
        check_dims(self, x)?;
        for (y, x) in self.0.iter_mut().zip(&x.0) {
            *y += alpha * x;
        }
        Ok(())
    }
}

/// Returns `alpha * x + y`.
pub fn flat_axpy(alpha: f64, x: &FlatVector, y: &FlatVector) -> Result<FlatVector> {
    let mut out = y.clone();
    out.add_scaled(alpha, x)?;
    Ok(out)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_dims(a: &FlatVector, b: &FlatVector) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::invalid(format!(
            "dimension mismatch: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(())
}

impl From<Vec<f64>> for FlatVector {
    fn from(values: Vec<f64>) -> Self {
        FlatVector(values)
    }
}

impl From<&[f64]> for FlatVector {
    fn from(values: &[f64]) -> Self {
        FlatVector(values.to_vec())
    }
}

impl Deref for FlatVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for FlatVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}
