//! Axis-aligned boxes used for hulls, ReLU case analysis and containment checks.

use serde::{Deserialize, Serialize};

/// A closed axis-aligned box `[lower, upper]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl IntervalBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        assert_eq!(lower.len(), upper.len(), "interval bounds must have equal length");
        Self { lower, upper }
    }

    pub fn point(x: &[f64]) -> Self {
        Self::new(x.to_vec(), x.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn width(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    pub fn widths(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.width(i)).collect()
    }

    /// Largest absolute value in coordinate `i`.
    pub fn magnitude(&self, i: usize) -> f64 {
        self.lower[i].abs().max(self.upper[i].abs())
    }

    /// Closed containment in every coordinate.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }

    /// Containment with an absolute slack on every side.
    pub fn contains_with_tol(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *lo - tol <= *v && *v <= *hi + tol)
    }

    /// True when `other` lies inside `self` up to `tol`.
    pub fn encloses(&self, other: &IntervalBox, tol: f64) -> bool {
        self.dim() == other.dim()
            && (0..self.dim()).all(|i| {
                self.lower[i] <= other.lower[i] + tol && other.upper[i] <= self.upper[i] + tol
            })
    }
}
