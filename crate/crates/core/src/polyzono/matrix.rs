use ndarray::{s, Array1, Array2, Array3, Axis};
use serde::{Deserialize, Serialize};

use super::exponent::align_factors;
use super::{check_unit_box, diagonal_columns, MatPolyZonotopeDoc, ExponentMatrix, FactorId, PolyZonotope};
use crate::error::{check_dim, Error, Result};

/// Matrix polynomial zonotope: a set of `n × m` matrices with the same
/// structure as [`PolyZonotope`].
///
/// Besides ordinary independent generators it carries an entry-wise radius
/// matrix `R`: every entry `(r, c)` gets its own private factor
/// `β_rc ∈ [-1, 1]` scaled by `R[r, c]`. This is the same as one axis-aligned
/// independent generator per nonzero entry, stored compactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "MatPolyZonotopeDoc", try_from = "MatPolyZonotopeDoc")]
pub struct MatPolyZonotope {
    center: Array2<f64>,
    /// h × n × m; `dep_gen[i]` is the matrix of generator `i`.
    dep_gen: Array3<f64>,
    /// q × n × m.
    indep_gen: Array3<f64>,
    entry_radius: Array2<f64>,
    exp_mat: ExponentMatrix,
    factor_ids: Vec<FactorId>,
}

impl MatPolyZonotope {
    pub fn new(
        center: Array2<f64>,
        dep_gen: Array3<f64>,
        indep_gen: Array3<f64>,
        exp_mat: ExponentMatrix,
        factor_ids: Vec<FactorId>,
    ) -> Result<Self> {
        let (n, m) = center.dim();
        let entry_radius = Array2::zeros((n, m));
        Self::with_entry_radius(center, dep_gen, indep_gen, entry_radius, exp_mat, factor_ids)
    }

    pub fn with_entry_radius(
        center: Array2<f64>,
        dep_gen: Array3<f64>,
        indep_gen: Array3<f64>,
        entry_radius: Array2<f64>,
        exp_mat: ExponentMatrix,
        factor_ids: Vec<FactorId>,
    ) -> Result<Self> {
        let (n, m) = center.dim();
        for (what, shape) in [
            ("dependent generators", (dep_gen.dim().1, dep_gen.dim().2)),
            ("independent generators", (indep_gen.dim().1, indep_gen.dim().2)),
            ("entry radius", entry_radius.dim()),
        ] {
            if shape != (n, m) {
                return Err(Error::Structure(format!(
                    "{what} have shape {shape:?}, center is {:?}",
                    (n, m)
                )));
            }
        }
        if entry_radius.iter().any(|r| *r < 0.0 || !r.is_finite()) {
            return Err(Error::Structure("entry radius must be finite and non-negative".into()));
        }
        check_dim("MatPolyZonotope exponent columns", dep_gen.dim().0, exp_mat.num_generators())?;
        check_dim("MatPolyZonotope exponent rows", factor_ids.len(), exp_mat.num_factors())?;
        let (exp_mat, factor_ids) = super::exponent::sort_factors(exp_mat, factor_ids)?;
        Ok(Self {
            center,
            dep_gen,
            indep_gen,
            entry_radius,
            exp_mat,
            factor_ids,
        })
    }

    /// A single known matrix.
    pub fn constant(c: Array2<f64>) -> Self {
        let (n, m) = c.dim();
        Self {
            center: c,
            dep_gen: Array3::zeros((0, n, m)),
            indep_gen: Array3::zeros((0, n, m)),
            entry_radius: Array2::zeros((n, m)),
            exp_mat: ExponentMatrix::empty(0),
            factor_ids: Vec::new(),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.center.dim()
    }

    pub fn center(&self) -> &Array2<f64> {
        &self.center
    }

    pub fn dep_gen(&self) -> &Array3<f64> {
        &self.dep_gen
    }

    pub fn indep_gen(&self) -> &Array3<f64> {
        &self.indep_gen
    }

    pub fn entry_radius(&self) -> &Array2<f64> {
        &self.entry_radius
    }

    pub fn exp_mat(&self) -> &ExponentMatrix {
        &self.exp_mat
    }

    pub fn factor_ids(&self) -> &[FactorId] {
        &self.factor_ids
    }

    pub fn num_dependent(&self) -> usize {
        self.dep_gen.dim().0
    }

    pub fn num_independent(&self) -> usize {
        self.indep_gen.dim().0
    }

    /// Evaluates one member. `entry_beta` supplies the private entry-wise
    /// factors; `None` sets them to zero.
    pub fn sample_point(
        &self,
        alpha: &[f64],
        beta: &[f64],
        entry_beta: Option<&Array2<f64>>,
    ) -> Result<Array2<f64>> {
        check_dim("sample_point alpha", self.factor_ids.len(), alpha.len())?;
        check_dim("sample_point beta", self.num_independent(), beta.len())?;
        check_unit_box(alpha)?;
        check_unit_box(beta)?;
        let mut x = self.center.clone();
        for i in 0..self.num_dependent() {
            let mono = self.exp_mat.monomial(i, alpha);
            if mono != 0.0 {
                x.scaled_add(mono, &self.dep_gen.index_axis(Axis(0), i));
            }
        }
        for (j, b) in beta.iter().enumerate() {
            x.scaled_add(*b, &self.indep_gen.index_axis(Axis(0), j));
        }
        if let Some(eb) = entry_beta {
            if eb.dim() != self.shape() {
                return Err(Error::Structure("entry_beta shape differs from matrix shape".into()));
            }
            if let Some(v) = eb.iter().find(|v| !(-1.0..=1.0).contains(*v)) {
                return Err(Error::OutOfBox { index: 0, value: *v });
            }
            x += &(&self.entry_radius * eb);
        }
        Ok(x)
    }

    /// Entry-wise interval hull `(lower, upper)`.
    pub fn interval_hull(&self) -> (Array2<f64>, Array2<f64>) {
        let mut lo = self.center.clone();
        let mut hi = self.center.clone();
        for i in 0..self.num_dependent() {
            let range = self.exp_mat.range(i);
            let g = self.dep_gen.index_axis(Axis(0), i);
            ndarray::Zip::from(&mut lo).and(&mut hi).and(&g).for_each(|l, h, v| {
                let (a, b) = range.contribution(*v);
                *l += a;
                *h += b;
            });
        }
        let rad = self.independent_magnitude();
        (lo - &rad, hi + &rad)
    }

    /// Σⱼ |G_I,j| + R, the entry-wise bound of all independent terms.
    fn independent_magnitude(&self) -> Array2<f64> {
        let mut rad = self.entry_radius.clone();
        for g in self.indep_gen.outer_iter() {
            rad += &g.mapv(f64::abs);
        }
        rad
    }

    /// Set product `{ W x | W ∈ self, x ∈ p }` without a generator cap.
    pub fn multiply(&self, p: &PolyZonotope) -> Result<PolyZonotope> {
        self.multiply_limited(p, usize::MAX)
    }

    /// Set product with an upper bound on the number of dependent generators
    /// formed before compaction.
    ///
    /// Products of dependent terms are exact, with exponent columns added over
    /// the union of factor ids. Terms that involve an independent generator of
    /// either operand are bounded by interval arithmetic and returned as an
    /// axis-aligned box, except `C_W · G_I` which stays an exact independent
    /// generator.
    pub fn multiply_limited(&self, p: &PolyZonotope, max_dependent: usize) -> Result<PolyZonotope> {
        let (n, m) = self.shape();
        check_dim("multiply inner dimension", m, p.dim())?;
        let hw = self.num_dependent();
        let hp = p.num_dependent();
        let total = hw
            .checked_mul(hp)
            .and_then(|v| v.checked_add(hw + hp))
            .unwrap_or(usize::MAX);
        if total > max_dependent {
            return Err(Error::ResourceLimit(format!(
                "multiplication would create {total} dependent generators (cap {max_dependent})"
            )));
        }

        let (ids, map_w, map_p) = align_factors(&self.factor_ids, p.factor_ids());
        let pu = ids.len();
        let ew = self.exp_mat.lift(&map_w, pu);
        let ep = p.exp_mat().lift(&map_p, pu);

        let cp = p.center();
        let gp = p.dep_gen();
        let mut dep = Array2::zeros((n, total));
        let mut exp = Array2::<u32>::zeros((pu, total));

        for i in 0..hw {
            let gw = self.dep_gen.index_axis(Axis(0), i);
            dep.column_mut(i).assign(&gw.dot(cp));
            exp.column_mut(i).assign(&ew.column(i));
        }
        if hp > 0 {
            dep.slice_mut(s![.., hw..hw + hp]).assign(&self.center.dot(gp));
            exp.slice_mut(s![.., hw..hw + hp]).assign(&ep);
        }
        let mut offset = hw + hp;
        for i in 0..hw {
            if hp == 0 {
                break;
            }
            let gw = self.dep_gen.index_axis(Axis(0), i);
            dep.slice_mut(s![.., offset..offset + hp]).assign(&gw.dot(gp));
            let mut block = exp.slice_mut(s![.., offset..offset + hp]);
            block.assign(&ep);
            block += &ew.column(i).insert_axis(Axis(1));
            offset += hp;
        }

        let mut radius = Array1::<f64>::zeros(n);
        let gpi = p.indep_gen();
        if gpi.ncols() > 0 {
            for i in 0..hw {
                let prod = self.dep_gen.index_axis(Axis(0), i).dot(gpi);
                radius += &prod.mapv(f64::abs).sum_axis(Axis(1));
            }
        }
        let hull = p.interval_hull();
        let mag: Array1<f64> = (0..m).map(|c| hull.magnitude(c)).collect();
        radius += &self.independent_magnitude().dot(&mag);

        let indep = ndarray::concatenate(
            Axis(1),
            &[self.center.dot(gpi).view(), diagonal_columns(radius.as_slice().unwrap()).view()],
        )
        .expect("equal rows");

        Ok(PolyZonotope::from_parts_unchecked(
            self.center.dot(cp),
            dep,
            indep,
            ExponentMatrix::from_array(exp),
            ids,
        )
        .compact())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn scalar_alpha(id: u32) -> MatPolyZonotope {
        MatPolyZonotope::new(
            array![[0.0]],
            Array3::from_elem((1, 1, 1), 1.0),
            Array3::zeros((0, 1, 1)),
            ExponentMatrix::from_rows(&[vec![1]]).unwrap(),
            vec![FactorId(id)],
        )
        .unwrap()
    }

    fn vector_alpha(id: u32) -> PolyZonotope {
        PolyZonotope::new(
            array![0.0],
            array![[1.0]],
            Array2::zeros((1, 0)),
            ExponentMatrix::from_rows(&[vec![1]]).unwrap(),
            vec![FactorId(id)],
        )
        .unwrap()
    }

    #[test]
    fn shared_factor_squares() {
        let q = scalar_alpha(0).multiply(&vector_alpha(0)).unwrap();
        let h = q.interval_hull();
        assert_eq!((h.lower[0], h.upper[0]), (0.0, 1.0));
        assert_eq!(q.num_factors(), 1);
    }

    #[test]
    fn distinct_factors_stay_symmetric() {
        let q = scalar_alpha(0).multiply(&vector_alpha(1)).unwrap();
        let h = q.interval_hull();
        assert_eq!((h.lower[0], h.upper[0]), (-1.0, 1.0));
        assert_eq!(q.num_factors(), 2);
    }

    #[test]
    fn constant_matrix_matches_affine_map() {
        let a = array![[1.0, -2.0], [0.5, 3.0]];
        let p = PolyZonotope::new(
            array![0.2, -0.1],
            array![[1.0, 0.3], [0.0, 0.7]],
            array![[0.1], [-0.4]],
            ExponentMatrix::from_rows(&[vec![1, 2]]).unwrap(),
            vec![FactorId(5)],
        )
        .unwrap();
        let q = MatPolyZonotope::constant(a.clone()).multiply(&p).unwrap();
        let r = p.affine_map(&a, &array![0.0, 0.0]).unwrap().compact();
        assert_eq!(q, r);
    }

    #[test]
    fn generator_cap_is_enforced() {
        let err = scalar_alpha(0).multiply_limited(&vector_alpha(1), 2).unwrap_err();
        assert!(matches!(err, Error::ResourceLimit(_)));
    }

    #[test]
    fn inner_dimension_checked() {
        let w = MatPolyZonotope::constant(array![[1.0, 2.0]]);
        assert!(w.multiply(&PolyZonotope::zeros(3)).is_err());
    }

    #[test]
    fn entry_radius_widens_product() {
        let w = MatPolyZonotope::with_entry_radius(
            array![[1.0]],
            Array3::zeros((0, 1, 1)),
            Array3::zeros((0, 1, 1)),
            array![[0.25]],
            ExponentMatrix::empty(0),
            vec![],
        )
        .unwrap();
        let q = w.multiply(&PolyZonotope::point(&[-2.0])).unwrap();
        let h = q.interval_hull();
        assert_eq!((h.lower[0], h.upper[0]), (-2.5, -1.5));
    }

    #[test]
    fn matrix_hull_and_sample() {
        let w = scalar_alpha(3);
        let (lo, hi) = w.interval_hull();
        assert_eq!((lo[[0, 0]], hi[[0, 0]]), (-1.0, 1.0));
        assert_eq!(w.sample_point(&[0.25], &[], None).unwrap()[[0, 0]], 0.25);
    }
}
