//! Polynomial zonotopes and matrix polynomial zonotopes.
//!
//! A polynomial zonotope is the set
//!
//! ```text
//! { c + Σᵢ (Πₖ αₖ^E(k,i)) G(·,i) + Σⱼ βⱼ G_I(·,j)  |  αₖ, βⱼ ∈ [-1, 1] }
//! ```
//!
//! Dependent factors αₖ carry a global [`FactorId`]; two sets that mention the
//! same id share that factor's value whenever they are combined. Independent
//! factors βⱼ are private to each set.
//!
//! Factor ids inside a set are always kept in ascending order, which is also the
//! order used when two sets are aligned over the union of their factors.

mod exponent;
mod json;
mod matrix;
mod ops;

pub use exponent::{ExponentMatrix, MonomialRange};
pub use json::{MatPolyZonotopeDoc, PolyZonotopeDoc};
pub use matrix::MatPolyZonotope;
pub use ops::DEFAULT_MAX_GENERATORS;

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::interval::IntervalBox;

/// Global identifier of a dependent factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FactorId(pub u32);

/// Vector-valued polynomial zonotope `⟨c, G, G_I, E⟩`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "PolyZonotopeDoc", try_from = "PolyZonotopeDoc")]
pub struct PolyZonotope {
    center: Array1<f64>,
    /// n × h, one column per dependent generator.
    dep_gen: Array2<f64>,
    /// n × q, one column per independent generator.
    indep_gen: Array2<f64>,
    exp_mat: ExponentMatrix,
    factor_ids: Vec<FactorId>,
}

impl PolyZonotope {
    pub fn new(
        center: Array1<f64>,
        dep_gen: Array2<f64>,
        indep_gen: Array2<f64>,
        exp_mat: ExponentMatrix,
        factor_ids: Vec<FactorId>,
    ) -> Result<Self> {
        let n = center.len();
        check_dim("PolyZonotope dependent generator rows", n, dep_gen.nrows())?;
        check_dim("PolyZonotope independent generator rows", n, indep_gen.nrows())?;
        check_dim("PolyZonotope exponent columns", dep_gen.ncols(), exp_mat.num_generators())?;
        check_dim("PolyZonotope exponent rows", factor_ids.len(), exp_mat.num_factors())?;
        let (exp_mat, factor_ids) = exponent::sort_factors(exp_mat, factor_ids)?;
        Ok(Self {
            center,
            dep_gen,
            indep_gen,
            exp_mat,
            factor_ids,
        })
    }

    /// The singleton `{c}`.
    pub fn point(c: &[f64]) -> Self {
        let n = c.len();
        Self {
            center: Array1::from_vec(c.to_vec()),
            dep_gen: Array2::zeros((n, 0)),
            indep_gen: Array2::zeros((n, 0)),
            exp_mat: ExponentMatrix::empty(0),
            factor_ids: Vec::new(),
        }
    }

    /// The zero vector of dimension `n`.
    pub fn zeros(n: usize) -> Self {
        Self::point(&vec![0.0; n])
    }

    /// Axis-aligned box expressed with independent generators only.
    pub fn from_box(b: &IntervalBox) -> Self {
        let n = b.dim();
        let center: Array1<f64> = (0..n).map(|i| 0.5 * (b.lower[i] + b.upper[i])).collect();
        let radii: Vec<f64> = (0..n).map(|i| 0.5 * (b.upper[i] - b.lower[i])).collect();
        let mut p = Self::point(center.as_slice().unwrap());
        p.indep_gen = diagonal_columns(&radii);
        p
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn num_dependent(&self) -> usize {
        self.dep_gen.ncols()
    }

    pub fn num_independent(&self) -> usize {
        self.indep_gen.ncols()
    }

    pub fn num_factors(&self) -> usize {
        self.factor_ids.len()
    }

    pub fn num_generators(&self) -> usize {
        self.num_dependent() + self.num_independent()
    }

    pub fn center(&self) -> &Array1<f64> {
        &self.center
    }

    pub fn dep_gen(&self) -> &Array2<f64> {
        &self.dep_gen
    }

    pub fn indep_gen(&self) -> &Array2<f64> {
        &self.indep_gen
    }

    pub fn exp_mat(&self) -> &ExponentMatrix {
        &self.exp_mat
    }

    pub fn factor_ids(&self) -> &[FactorId] {
        &self.factor_ids
    }

    pub fn is_point(&self) -> bool {
        self.num_generators() == 0
    }

    /// Evaluates the defining expression for explicit factor values.
    ///
    /// `alpha` is indexed like [`factor_ids`](Self::factor_ids), `beta` like
    /// the independent generators. Both must lie in the unit box.
    pub fn sample_point(&self, alpha: &[f64], beta: &[f64]) -> Result<Vec<f64>> {
        check_dim("sample_point alpha", self.num_factors(), alpha.len())?;
        check_dim("sample_point beta", self.num_independent(), beta.len())?;
        check_unit_box(alpha)?;
        check_unit_box(beta).map_err(|e| match e {
            Error::OutOfBox { index, value } => Error::OutOfBox {
                index: alpha.len() + index,
                value,
            },
            other => other,
        })?;
        Ok(self.evaluate_unchecked(alpha, beta))
    }

    /// Evaluates the set with factor values looked up by id, so that several
    /// sets sharing ids can be sampled jointly. Factors missing from the map are
    /// treated as zero.
    pub fn sample_by_id(&self, alpha_of: impl Fn(FactorId) -> f64, beta: &[f64]) -> Result<Vec<f64>> {
        let alpha: Vec<f64> = self.factor_ids.iter().map(|id| alpha_of(*id)).collect();
        self.sample_point(&alpha, beta)
    }

    pub(crate) fn evaluate_unchecked(&self, alpha: &[f64], beta: &[f64]) -> Vec<f64> {
        let mut x = self.center.clone();
        for i in 0..self.num_dependent() {
            let m = self.exp_mat.monomial(i, alpha);
            if m != 0.0 {
                x.scaled_add(m, &self.dep_gen.column(i));
            }
        }
        for (j, b) in beta.iter().enumerate() {
            if *b != 0.0 {
                x.scaled_add(*b, &self.indep_gen.column(j));
            }
        }
        x.to_vec()
    }

    /// Interval hull under the monomial bounding rule: a monomial with only
    /// even exponents ranges over `[0, 1]`, the empty monomial is `1`, and any
    /// other monomial ranges over `[-1, 1]`.
    pub fn interval_hull(&self) -> IntervalBox {
        let n = self.dim();
        let mut lower = self.center.to_vec();
        let mut upper = self.center.to_vec();
        for i in 0..self.num_dependent() {
            let g = self.dep_gen.column(i);
            let range = self.exp_mat.range(i);
            for r in 0..n {
                let (lo, hi) = range.contribution(g[r]);
                lower[r] += lo;
                upper[r] += hi;
            }
        }
        for j in 0..self.num_independent() {
            let g = self.indep_gen.column(j);
            for r in 0..n {
                lower[r] -= g[r].abs();
                upper[r] += g[r].abs();
            }
        }
        IntervalBox::new(lower, upper)
    }

    pub(crate) fn from_parts_unchecked(
        center: Array1<f64>,
        dep_gen: Array2<f64>,
        indep_gen: Array2<f64>,
        exp_mat: ExponentMatrix,
        factor_ids: Vec<FactorId>,
    ) -> Self {
        debug_assert_eq!(center.len(), dep_gen.nrows());
        debug_assert_eq!(center.len(), indep_gen.nrows());
        debug_assert_eq!(dep_gen.ncols(), exp_mat.num_generators());
        debug_assert_eq!(factor_ids.len(), exp_mat.num_factors());
        debug_assert!(factor_ids.windows(2).all(|w| w[0] < w[1]));
        Self {
            center,
            dep_gen,
            indep_gen,
            exp_mat,
            factor_ids,
        }
    }
}

pub(crate) fn check_unit_box(v: &[f64]) -> Result<()> {
    for (index, value) in v.iter().enumerate() {
        if !(-1.0..=1.0).contains(value) {
            return Err(Error::OutOfBox {
                index,
                value: *value,
            });
        }
    }
    Ok(())
}

/// One axis-aligned column per nonzero radius.
pub(crate) fn diagonal_columns(radii: &[f64]) -> Array2<f64> {
    let nz: Vec<usize> = (0..radii.len()).filter(|i| radii[*i] != 0.0).collect();
    let mut g = Array2::zeros((radii.len(), nz.len()));
    for (col, &row) in nz.iter().enumerate() {
        g[[row, col]] = radii[row];
    }
    g
}

pub(crate) fn column_norm(c: ArrayView1<f64>) -> f64 {
    c.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn alpha_set() -> PolyZonotope {
        PolyZonotope::new(
            array![0.0],
            array![[1.0]],
            Array2::zeros((1, 0)),
            ExponentMatrix::from_rows(&[vec![1]]).unwrap(),
            vec![FactorId(7)],
        )
        .unwrap()
    }

    fn alpha_squared() -> PolyZonotope {
        PolyZonotope::new(
            array![0.0],
            array![[1.0]],
            Array2::zeros((1, 0)),
            ExponentMatrix::from_rows(&[vec![2]]).unwrap(),
            vec![FactorId(7)],
        )
        .unwrap()
    }

    #[test]
    fn sample_at_origin_is_center() {
        let p = PolyZonotope::new(
            array![1.0, -2.0],
            array![[1.0, 0.5], [0.0, 2.0]],
            array![[0.3], [0.1]],
            ExponentMatrix::from_rows(&[vec![1, 2], vec![0, 1]]).unwrap(),
            vec![FactorId(1), FactorId(2)],
        )
        .unwrap();
        assert_eq!(p.sample_point(&[0.0, 0.0], &[0.0]).unwrap(), vec![1.0, -2.0]);
    }

    #[test]
    fn sample_unit_interval_endpoint() {
        assert_eq!(alpha_set().sample_point(&[1.0], &[]).unwrap(), vec![1.0]);
    }

    #[test]
    fn sample_squared_factor() {
        assert_eq!(alpha_squared().sample_point(&[0.5], &[]).unwrap(), vec![0.25]);
    }

    #[test]
    fn sample_rejects_out_of_box() {
        let err = alpha_set().sample_point(&[1.5], &[]).unwrap_err();
        assert!(matches!(err, Error::OutOfBox { index: 0, .. }));
    }

    #[test]
    fn sample_rejects_wrong_length() {
        assert!(matches!(
            alpha_set().sample_point(&[0.1, 0.2], &[]),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn hull_of_point() {
        let p = PolyZonotope::point(&[1.5, -3.0]);
        assert_eq!(p.interval_hull(), IntervalBox::point(&[1.5, -3.0]));
    }

    #[test]
    fn hull_of_even_monomial() {
        let h = alpha_squared().interval_hull();
        assert_eq!((h.lower[0], h.upper[0]), (0.0, 1.0));
    }

    #[test]
    fn constructor_sorts_factor_ids() {
        let p = PolyZonotope::new(
            array![0.0],
            array![[1.0, 2.0]],
            Array2::zeros((1, 0)),
            ExponentMatrix::from_rows(&[vec![1, 0], vec![0, 3]]).unwrap(),
            vec![FactorId(9), FactorId(4)],
        )
        .unwrap();
        assert_eq!(p.factor_ids(), &[FactorId(4), FactorId(9)]);
        // α₉ = 0.5, α₄ = -1 → 0.5 + 2·(-1)³
        let v = p
            .sample_by_id(|id| if id == FactorId(9) { 0.5 } else { -1.0 }, &[])
            .unwrap();
        assert_eq!(v, vec![0.5 - 2.0]);
    }

    #[test]
    fn constructor_rejects_duplicate_ids() {
        let r = PolyZonotope::new(
            array![0.0],
            array![[1.0]],
            Array2::zeros((1, 0)),
            ExponentMatrix::from_rows(&[vec![1], vec![1]]).unwrap(),
            vec![FactorId(1), FactorId(1)],
        );
        assert!(matches!(r, Err(Error::Structure(_))));
    }

    #[test]
    fn from_box_hull_roundtrip() {
        let b = IntervalBox::new(vec![-1.0, 2.0, 0.5], vec![3.0, 2.0, 0.75]);
        assert_eq!(PolyZonotope::from_box(&b).interval_hull(), b);
    }
}
