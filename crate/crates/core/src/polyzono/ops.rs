use std::collections::HashMap;

use ndarray::{concatenate, Array1, Array2, Axis};

use super::exponent::align_factors;
use super::{column_norm, diagonal_columns, ExponentMatrix, FactorId, PolyZonotope};
use crate::error::{check_dim, Result};

/// Default generator budget for [`PolyZonotope::reduce_order`].
pub const DEFAULT_MAX_GENERATORS: usize = 2000;

impl PolyZonotope {
    /// `A·P + b`, computed exactly. Factor ids are preserved.
    pub fn affine_map(&self, a: &Array2<f64>, b: &Array1<f64>) -> Result<Self> {
        check_dim("affine_map columns", self.dim(), a.ncols())?;
        check_dim("affine_map offset", a.nrows(), b.len())?;
        Ok(Self::from_parts_unchecked(
            a.dot(&self.center) + b,
            a.dot(&self.dep_gen),
            a.dot(&self.indep_gen),
            self.exp_mat.clone(),
            self.factor_ids.clone(),
        ))
    }

    /// `diag(scale)·P + offset` without forming the diagonal matrix.
    pub fn scale_rows(&self, scale: &[f64], offset: &[f64]) -> Result<Self> {
        check_dim("scale_rows scale", self.dim(), scale.len())?;
        check_dim("scale_rows offset", self.dim(), offset.len())?;
        let s = Array1::from_vec(scale.to_vec());
        let col = s.view().insert_axis(Axis(1));
        Ok(Self::from_parts_unchecked(
            &self.center * &s + Array1::from_vec(offset.to_vec()),
            &self.dep_gen * &col,
            &self.indep_gen * &col,
            self.exp_mat.clone(),
            self.factor_ids.clone(),
        ))
    }

    /// Minkowski sum with factor identification: equal ids denote the same
    /// factor, distinct ids are concatenated. The result is compacted.
    pub fn exact_sum(&self, other: &PolyZonotope) -> Result<Self> {
        check_dim("exact_sum", self.dim(), other.dim())?;
        let (ids, map_a, map_b) = align_factors(&self.factor_ids, &other.factor_ids);
        let p = ids.len();
        let exp = concatenate(
            Axis(1),
            &[
                self.exp_mat.lift(&map_a, p).view(),
                other.exp_mat.lift(&map_b, p).view(),
            ],
        )
        .expect("aligned exponent rows");
        let dep = concatenate(Axis(1), &[self.dep_gen.view(), other.dep_gen.view()]).expect("equal rows");
        let indep =
            concatenate(Axis(1), &[self.indep_gen.view(), other.indep_gen.view()]).expect("equal rows");
        Ok(Self::from_parts_unchecked(
            &self.center + &other.center,
            dep,
            indep,
            ExponentMatrix::from_array(exp),
            ids,
        )
        .compact())
    }

    /// Adds an axis-aligned box `shift ± radius` as independent generators.
    pub fn add_box(&self, shift: &[f64], radius: &[f64]) -> Result<Self> {
        check_dim("add_box shift", self.dim(), shift.len())?;
        check_dim("add_box radius", self.dim(), radius.len())?;
        let extra = diagonal_columns(radius);
        let indep = concatenate(Axis(1), &[self.indep_gen.view(), extra.view()]).expect("equal rows");
        Ok(Self::from_parts_unchecked(
            &self.center + &Array1::from_vec(shift.to_vec()),
            self.dep_gen.clone(),
            indep,
            self.exp_mat.clone(),
            self.factor_ids.clone(),
        ))
    }

    /// Merges dependent generators with identical exponent columns, folds
    /// constant monomials into the center, and drops zero generators and
    /// unused factors. Membership is preserved exactly.
    pub fn compact(&self) -> Self {
        let n = self.dim();
        let p = self.num_factors();
        let mut center = self.center.clone();
        let mut slot_of: HashMap<Vec<u32>, usize> = HashMap::new();
        let mut columns: Vec<Array1<f64>> = Vec::new();
        let mut exps: Vec<Vec<u32>> = Vec::new();
        for i in 0..self.num_dependent() {
            let key: Vec<u32> = self.exp_mat.column(i).to_vec();
            let g = self.dep_gen.column(i);
            if key.iter().all(|e| *e == 0) {
                center += &g;
                continue;
            }
            match slot_of.get(&key) {
                Some(&s) => columns[s] += &g,
                None => {
                    slot_of.insert(key.clone(), columns.len());
                    columns.push(g.to_owned());
                    exps.push(key);
                }
            }
        }
        let kept: Vec<usize> = (0..columns.len())
            .filter(|&s| columns[s].iter().any(|v| *v != 0.0))
            .collect();
        let used: Vec<usize> = (0..p)
            .filter(|&k| kept.iter().any(|&s| exps[s][k] != 0))
            .collect();

        let mut dep = Array2::zeros((n, kept.len()));
        let mut exp = Array2::zeros((used.len(), kept.len()));
        for (c, &s) in kept.iter().enumerate() {
            dep.column_mut(c).assign(&columns[s]);
            for (r, &k) in used.iter().enumerate() {
                exp[[r, c]] = exps[s][k];
            }
        }
        let indep_cols: Vec<usize> = (0..self.num_independent())
            .filter(|&j| self.indep_gen.column(j).iter().any(|v| *v != 0.0))
            .collect();
        let indep = self.indep_gen.select(Axis(1), &indep_cols);
        let ids = used.iter().map(|&k| self.factor_ids[k]).collect();
        Self::from_parts_unchecked(center, dep, indep, ExponentMatrix::from_array(exp), ids)
    }

    /// Fixes the factors for which `value_of` returns a value and keeps the
    /// rest symbolic. The result is compacted.
    pub fn substitute(&self, value_of: impl Fn(FactorId) -> Option<f64>) -> Self {
        let values: Vec<Option<f64>> = self.factor_ids.iter().map(|id| value_of(*id)).collect();
        let mut dep = self.dep_gen.clone();
        let mut exp = self.exp_mat.entries().clone();
        for i in 0..self.num_dependent() {
            let mut m = 1.0;
            for (k, v) in values.iter().enumerate() {
                if let Some(v) = v {
                    m *= v.powi(exp[[k, i]] as i32);
                    exp[[k, i]] = 0;
                }
            }
            if m != 1.0 {
                dep.column_mut(i).mapv_inplace(|g| g * m);
            }
        }
        Self::from_parts_unchecked(
            self.center.clone(),
            dep,
            self.indep_gen.clone(),
            ExponentMatrix::from_array(exp),
            self.factor_ids.clone(),
        )
        .compact()
    }

    /// Bounds the total generator count by `max_gens`.
    ///
    /// Generators are ranked by Euclidean norm; the largest
    /// `max_gens - dim` survive and the rest are replaced by the axis-aligned
    /// box of their interval contribution. The result is a superset of `self`.
    /// When `max_gens < dim` the box alone may exceed the budget.
    pub fn reduce_order(&self, max_gens: usize) -> Self {
        let max_gens = max_gens.max(1);
        if self.num_generators() <= max_gens {
            return self.clone();
        }
        let keep = max_gens.saturating_sub(self.dim());
        let h = self.num_dependent();
        let mut ranked: Vec<(f64, usize)> = (0..h)
            .map(|i| (column_norm(self.dep_gen.column(i)), i))
            .chain((0..self.num_independent()).map(|j| (column_norm(self.indep_gen.column(j)), h + j)))
            .collect();
        ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut dep_keep = vec![false; h];
        let mut indep_keep = vec![false; self.num_independent()];
        for &(_, idx) in ranked.iter().take(keep) {
            if idx < h {
                dep_keep[idx] = true;
            } else {
                indep_keep[idx - h] = true;
            }
        }
        self.enclose_generators(&dep_keep, &indep_keep)
    }

    /// Replaces every dependent generator whose monomial has total degree
    /// above `max_degree` by its interval contribution.
    pub fn demote_above_degree(&self, max_degree: u32) -> Self {
        let dep_keep: Vec<bool> = (0..self.num_dependent())
            .map(|i| self.exp_mat.total_degree(i) <= max_degree)
            .collect();
        if dep_keep.iter().all(|k| *k) {
            return self.clone();
        }
        let indep_keep = vec![true; self.num_independent()];
        self.enclose_generators(&dep_keep, &indep_keep)
    }

    /// Keeps flagged generators and encloses the rest in a box.
    fn enclose_generators(&self, dep_keep: &[bool], indep_keep: &[bool]) -> Self {
        let n = self.dim();
        let mut shift = vec![0.0; n];
        let mut radius = vec![0.0; n];
        for (i, keep) in dep_keep.iter().enumerate() {
            if *keep {
                continue;
            }
            let range = self.exp_mat.range(i);
            let g = self.dep_gen.column(i);
            for r in 0..n {
                let (c, rad) = range.center_radius(g[r]);
                shift[r] += c;
                radius[r] += rad;
            }
        }
        for (j, keep) in indep_keep.iter().enumerate() {
            if *keep {
                continue;
            }
            for (r, v) in self.indep_gen.column(j).iter().enumerate() {
                radius[r] += v.abs();
            }
        }
        let dep_cols: Vec<usize> = (0..dep_keep.len()).filter(|&i| dep_keep[i]).collect();
        let indep_cols: Vec<usize> = (0..indep_keep.len()).filter(|&j| indep_keep[j]).collect();
        let exp = self.exp_mat.entries().select(Axis(1), &dep_cols);
        let boxed = diagonal_columns(&radius);
        let indep = concatenate(
            Axis(1),
            &[self.indep_gen.select(Axis(1), &indep_cols).view(), boxed.view()],
        )
        .expect("equal rows");
        Self::from_parts_unchecked(
            &self.center + &Array1::from_vec(shift),
            self.dep_gen.select(Axis(1), &dep_cols),
            indep,
            ExponentMatrix::from_array(exp),
            self.factor_ids.clone(),
        )
        .compact()
    }
}
