use ndarray::{Array2, ArrayView1};

use super::FactorId;
use crate::error::{Error, Result};

/// Non-negative integer exponent matrix, one row per dependent factor and one
/// column per dependent generator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExponentMatrix {
    entries: Array2<u32>,
}

/// Range of a monomial Πₖ αₖ^eₖ over the unit box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonomialRange {
    /// All exponents zero.
    One,
    /// All exponents even, at least one positive: `[0, 1]`.
    Unit,
    /// `[-1, 1]`.
    Symmetric,
}

impl MonomialRange {
    /// Bounds of `m · g` for `m` in this range.
    pub fn contribution(self, g: f64) -> (f64, f64) {
        match self {
            MonomialRange::One => (g, g),
            MonomialRange::Unit => (g.min(0.0), g.max(0.0)),
            MonomialRange::Symmetric => (-g.abs(), g.abs()),
        }
    }

    /// Midpoint and radius of `m · g`.
    pub fn center_radius(self, g: f64) -> (f64, f64) {
        match self {
            MonomialRange::One => (g, 0.0),
            MonomialRange::Unit => (0.5 * g, 0.5 * g.abs()),
            MonomialRange::Symmetric => (0.0, g.abs()),
        }
    }
}

impl ExponentMatrix {
    /// `p × 0` matrix.
    pub fn empty(num_factors: usize) -> Self {
        Self {
            entries: Array2::zeros((num_factors, 0)),
        }
    }

    pub fn from_array(entries: Array2<u32>) -> Self {
        Self { entries }
    }

    /// Builds from rows (one per factor). All rows must have equal length.
    pub fn from_rows(rows: &[Vec<u32>]) -> Result<Self> {
        let h = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != h) {
            return Err(Error::Structure("ragged exponent matrix rows".into()));
        }
        let flat: Vec<u32> = rows.iter().flatten().copied().collect();
        let entries = Array2::from_shape_vec((rows.len(), h), flat)
            .map_err(|e| Error::Structure(e.to_string()))?;
        Ok(Self { entries })
    }

    pub fn num_factors(&self) -> usize {
        self.entries.nrows()
    }

    pub fn num_generators(&self) -> usize {
        self.entries.ncols()
    }

    pub fn entries(&self) -> &Array2<u32> {
        &self.entries
    }

    pub fn column(&self, i: usize) -> ArrayView1<'_, u32> {
        self.entries.column(i)
    }

    pub fn total_degree(&self, i: usize) -> u32 {
        self.entries.column(i).sum()
    }

    pub fn range(&self, i: usize) -> MonomialRange {
        let col = self.entries.column(i);
        if col.iter().all(|e| *e == 0) {
            MonomialRange::One
        } else if col.iter().all(|e| e % 2 == 0) {
            MonomialRange::Unit
        } else {
            MonomialRange::Symmetric
        }
    }

    /// Value of monomial `i` at the factor values `alpha`.
    pub fn monomial(&self, i: usize, alpha: &[f64]) -> f64 {
        self.entries
            .column(i)
            .iter()
            .zip(alpha)
            .filter(|(e, _)| **e > 0)
            .map(|(e, a)| a.powi(*e as i32))
            .product()
    }

    /// Re-indexes rows into a `p_new`-row matrix; row `k` moves to `map[k]`.
    pub(crate) fn lift(&self, map: &[usize], p_new: usize) -> Array2<u32> {
        let mut out = Array2::zeros((p_new, self.num_generators()));
        for (k, &target) in map.iter().enumerate() {
            out.row_mut(target).assign(&self.entries.row(k));
        }
        out
    }
}

/// Sorts factor ids ascending, permuting exponent rows along. Rejects duplicates.
pub(super) fn sort_factors(
    exp: ExponentMatrix,
    ids: Vec<FactorId>,
) -> Result<(ExponentMatrix, Vec<FactorId>)> {
    let mut order: Vec<usize> = (0..ids.len()).collect();
    order.sort_by_key(|&k| ids[k]);
    if order.windows(2).any(|w| ids[w[0]] == ids[w[1]]) {
        return Err(Error::Structure("duplicate factor id".into()));
    }
    if order.iter().enumerate().all(|(i, k)| i == *k) {
        return Ok((exp, ids));
    }
    let mut entries = Array2::zeros(exp.entries.raw_dim());
    for (new_row, &old_row) in order.iter().enumerate() {
        entries.row_mut(new_row).assign(&exp.entries.row(old_row));
    }
    let ids = order.iter().map(|&k| ids[k]).collect();
    Ok((ExponentMatrix { entries }, ids))
}

/// Merges two ascending id lists. Returns the union and, for each input, the
/// position of each of its ids inside the union.
pub(crate) fn align_factors(a: &[FactorId], b: &[FactorId]) -> (Vec<FactorId>, Vec<usize>, Vec<usize>) {
    let mut union = Vec::with_capacity(a.len() + b.len());
    let mut map_a = Vec::with_capacity(a.len());
    let mut map_b = Vec::with_capacity(b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let take_a = j >= b.len() || (i < a.len() && a[i] <= b[j]);
        let take_b = i >= a.len() || (j < b.len() && b[j] <= a[i]);
        let pos = union.len();
        if take_a {
            union.push(a[i]);
            map_a.push(pos);
            i += 1;
        } else {
            union.push(b[j]);
        }
        if take_b {
            map_b.push(pos);
            j += 1;
        }
    }
    (union, map_a, map_b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        let e = ExponentMatrix::from_rows(&[vec![0, 2, 1, 2], vec![0, 0, 0, 4]]).unwrap();
        assert_eq!(e.range(0), MonomialRange::One);
        assert_eq!(e.range(1), MonomialRange::Unit);
        assert_eq!(e.range(2), MonomialRange::Symmetric);
        assert_eq!(e.range(3), MonomialRange::Unit);
    }

    #[test]
    fn align_disjoint_and_shared() {
        let a = [FactorId(1), FactorId(3), FactorId(5)];
        let b = [FactorId(2), FactorId(3), FactorId(9)];
        let (u, ma, mb) = align_factors(&a, &b);
        assert_eq!(
            u,
            vec![FactorId(1), FactorId(2), FactorId(3), FactorId(5), FactorId(9)]
        );
        assert_eq!(ma, vec![0, 2, 3]);
        assert_eq!(mb, vec![1, 2, 4]);
    }

    #[test]
    fn align_with_empty() {
        let a = [FactorId(4)];
        let (u, ma, mb) = align_factors(&a, &[]);
        assert_eq!(u, vec![FactorId(4)]);
        assert_eq!(ma, vec![0]);
        assert!(mb.is_empty());
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(ExponentMatrix::from_rows(&[vec![1, 2], vec![1]]).is_err());
    }
}
