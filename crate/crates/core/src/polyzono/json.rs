//! JSON documents for dumping sets: row-major nested arrays.

use ndarray::{Array1, Array2, Array3, Axis};
use serde::{Deserialize, Serialize};

use super::{ExponentMatrix, FactorId, MatPolyZonotope, PolyZonotope};
use crate::error::{Error, Result};

/// Wire form of a [`PolyZonotope`]. `dep_gen` is `n × h`, `indep_gen` is
/// `n × q`, `exp_mat` is `p × h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyZonotopeDoc {
    pub center: Vec<f64>,
    pub dep_gen: Vec<Vec<f64>>,
    pub indep_gen: Vec<Vec<f64>>,
    pub exp_mat: Vec<Vec<u32>>,
    pub factor_ids: Vec<FactorId>,
}

/// Wire form of a [`MatPolyZonotope`]. Generators are `n × m × h`; the
/// optional `entry_radius` is `n × m` and omitted when zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatPolyZonotopeDoc {
    pub center: Vec<Vec<f64>>,
    pub dep_gen: Vec<Vec<Vec<f64>>>,
    pub indep_gen: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entry_radius: Option<Vec<Vec<f64>>>,
    pub exp_mat: Vec<Vec<u32>>,
    pub factor_ids: Vec<FactorId>,
}

fn rows_of(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.outer_iter().map(|r| r.to_vec()).collect()
}

fn matrix_from_rows(rows: &[Vec<f64>], ncols: usize, what: &str) -> Result<Array2<f64>> {
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Format(format!("{what}: every row must have {ncols} entries")));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Array2::from_shape_vec((rows.len(), ncols), flat).map_err(|e| Error::Format(e.to_string()))
}

impl From<PolyZonotope> for PolyZonotopeDoc {
    fn from(p: PolyZonotope) -> Self {
        Self {
            center: p.center.to_vec(),
            dep_gen: rows_of(&p.dep_gen),
            indep_gen: rows_of(&p.indep_gen),
            exp_mat: p.exp_mat.entries().outer_iter().map(|r| r.to_vec()).collect(),
            factor_ids: p.factor_ids,
        }
    }
}

impl TryFrom<PolyZonotopeDoc> for PolyZonotope {
    type Error = Error;

    fn try_from(d: PolyZonotopeDoc) -> Result<Self> {
        let n = d.center.len();
        let h = d
            .dep_gen
            .first()
            .map(Vec::len)
            .or_else(|| d.exp_mat.first().map(Vec::len))
            .unwrap_or(0);
        let q = d.indep_gen.first().map_or(0, Vec::len);
        let dep = if n == 0 { Array2::zeros((0, h)) } else { matrix_from_rows(&d.dep_gen, h, "dep_gen")? };
        let indep = if n == 0 { Array2::zeros((0, q)) } else { matrix_from_rows(&d.indep_gen, q, "indep_gen")? };
        let exp = if d.exp_mat.is_empty() {
            ExponentMatrix::from_array(ndarray::Array2::zeros((0, h)))
        } else {
            ExponentMatrix::from_rows(&d.exp_mat)?
        };
        PolyZonotope::new(Array1::from_vec(d.center), dep, indep, exp, d.factor_ids)
    }
}

fn tensor_to_nested(t: &Array3<f64>) -> Vec<Vec<Vec<f64>>> {
    // stored as (h, n, m); emitted as n × m × h
    let (h, n, m) = t.dim();
    (0..n)
        .map(|r| (0..m).map(|c| (0..h).map(|i| t[[i, r, c]]).collect()).collect())
        .collect()
}

fn nested_to_tensor(v: &[Vec<Vec<f64>>], n: usize, m: usize, what: &str) -> Result<Array3<f64>> {
    if v.len() != n || v.iter().any(|row| row.len() != m) {
        return Err(Error::Format(format!("{what}: expected {n} × {m} outer shape")));
    }
    let h = v.first().and_then(|r| r.first()).map_or(0, Vec::len);
    let mut t = Array3::zeros((h, n, m));
    for (r, row) in v.iter().enumerate() {
        for (c, gens) in row.iter().enumerate() {
            if gens.len() != h {
                return Err(Error::Format(format!("{what}: ragged generator axis")));
            }
            for (i, g) in gens.iter().enumerate() {
                t[[i, r, c]] = *g;
            }
        }
    }
    Ok(t)
}

impl From<MatPolyZonotope> for MatPolyZonotopeDoc {
    fn from(w: MatPolyZonotope) -> Self {
        let entry_radius = if w.entry_radius().iter().all(|v| *v == 0.0) {
            None
        } else {
            Some(rows_of(w.entry_radius()))
        };
        Self {
            center: rows_of(w.center()),
            dep_gen: tensor_to_nested(w.dep_gen()),
            indep_gen: tensor_to_nested(w.indep_gen()),
            entry_radius,
            exp_mat: w.exp_mat().entries().outer_iter().map(|r| r.to_vec()).collect(),
            factor_ids: w.factor_ids().to_vec(),
        }
    }
}

impl TryFrom<MatPolyZonotopeDoc> for MatPolyZonotope {
    type Error = Error;

    fn try_from(d: MatPolyZonotopeDoc) -> Result<Self> {
        let n = d.center.len();
        let m = d.center.first().map_or(0, Vec::len);
        let center = matrix_from_rows(&d.center, m, "center")?;
        let dep = nested_to_tensor(&d.dep_gen, n, m, "dep_gen")?;
        let indep = nested_to_tensor(&d.indep_gen, n, m, "indep_gen")?;
        let radius = match &d.entry_radius {
            Some(r) => matrix_from_rows(r, m, "entry_radius")?,
            None => Array2::zeros((n, m)),
        };
        let exp = if d.exp_mat.is_empty() {
            ExponentMatrix::from_array(Array2::zeros((0, dep.len_of(Axis(0)))))
        } else {
            ExponentMatrix::from_rows(&d.exp_mat)?
        };
        MatPolyZonotope::with_entry_radius(center, dep, indep, radius, exp, d.factor_ids)
    }
}
