//! Dense vector helpers, box projection and the nonnegative clip `[.]+`.

use nalgebra::DVector;

use crate::error::{Error, Result};

/// A point in the decision space R^p. Entries are always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionVector(DVector<f64>);

impl DecisionVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        Self::from_dvector(DVector::from_vec(coords))
    }

    pub fn from_dvector(v: DVector<f64>) -> Result<Self> {
        if v.iter().all(|c| c.is_finite()) {
            Ok(Self(v))
        } else {
            Err(Error::NonFinite("decision vector"))
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DVector::zeros(dim))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn as_dvector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_dvector(self) -> DVector<f64> {
        self.0
    }

    pub fn distance(&self, other: &DecisionVector) -> f64 {
        euclid_norm((&self.0 - &other.0).as_slice())
    }
}

impl std::ops::Index<usize> for DecisionVector {
    type Output = f64;
    fn index(&self, k: usize) -> &f64 {
        &self.0[k]
    }
}

/// Axis-aligned box `[lower, upper]`, the feasible set X.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxSet {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxSet {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                context: "box bounds",
                expected: lower.len(),
                actual: upper.len(),
            });
        }
        for (k, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(Error::NonFinite("box bounds"));
            }
            if lo > hi {
                return Err(Error::InvalidBox(k));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The cube `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// R(X): an upper bound on ‖x‖ over the box.
    pub fn radius(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| lo.abs().max(hi.abs()).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn contains(&self, x: &DecisionVector) -> bool {
        x.dim() == self.dim()
            && x
                .as_slice()
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| lo <= v && v <= hi)
    }
}

/// Vector with nonnegative entries (dual variables, clipped constraints).
#[derive(Debug, Clone, PartialEq)]
pub struct NonnegVector(DVector<f64>);

impl NonnegVector {
    pub fn zeros(dim: usize) -> Self {
        Self(DVector::zeros(dim))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn as_dvector(&self) -> &DVector<f64> {
        &self.0
    }
}

/// Euclidean projection onto a box: coordinate-wise clamp.
pub fn project_box(x: &DVector<f64>, bounds: &BoxSet) -> Result<DecisionVector> {
    if x.len() != bounds.dim() {
        return Err(Error::DimensionMismatch {
            context: "project_box",
            expected: bounds.dim(),
            actual: x.len(),
        });
    }
    let clamped = DVector::from_iterator(
        x.len(),
        x.iter()
            .zip(bounds.lower.iter().zip(&bounds.upper))
            .map(|(v, (lo, hi))| v.clamp(*lo, *hi)),
    );
    DecisionVector::from_dvector(clamped)
}

/// `[v]+`, the projection onto the nonnegative orthant.
pub fn pos_part(v: &DVector<f64>) -> NonnegVector {
    NonnegVector(v.map(|c| c.max(0.0)))
}

pub fn euclid_norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}
