use ndarray::{Array2, Array3};

use super::cubic::MONOMIALS;
use super::{Cubic, Variant, VariationModel};
use crate::error::{check_dim, Result};
use crate::network::LoweredLayer;
use crate::polyzono::{ExponentMatrix, FactorId, MatPolyZonotope, MonomialRange, PolyZonotope};

/// Factor ids of the three process symbols, shared by every weight in a
/// network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProcessFactors {
    pub phi1: FactorId,
    pub phi2: FactorId,
    pub residual: FactorId,
}

impl Default for ProcessFactors {
    fn default() -> Self {
        Self {
            phi1: FactorId(0),
            phi2: FactorId(1),
            residual: FactorId(2),
        }
    }
}

impl ProcessFactors {
    fn ids(&self) -> Vec<FactorId> {
        vec![self.phi1, self.phi2, self.residual]
    }
}

/// Sign of a first-layer input over the whole input set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignClass {
    NonNegative,
    Negative,
    Mixed,
}

impl SignClass {
    pub fn of_interval(lo: f64, hi: f64) -> Self {
        if lo >= 0.0 {
            SignClass::NonNegative
        } else if hi < 0.0 {
            SignClass::Negative
        } else {
            SignClass::Mixed
        }
    }

    pub fn of_value(x: f64) -> Self {
        Self::of_interval(x, x)
    }
}

/// Which coefficient tables a layer draws from.
#[derive(Debug, Clone, Copy)]
pub enum LayerRole<'a> {
    /// First layer; one sign class per input column.
    First(&'a [SignClass]),
    Hidden,
}

/// A weight surface rewritten in `(α₁, α₂)` plus the residual coefficient.
/// Terms dropped by the degree limit are accounted for in `slack`.
#[derive(Debug, Clone, Copy, Default)]
struct Expansion {
    alpha: Cubic,
    residual: f64,
    slack: f64,
}

impl Expansion {
    /// Interval of `alpha(α) + residual·α₃ ± slack` over the unit box.
    fn bounds(&self) -> (f64, f64) {
        let mut lo = self.alpha.0[0];
        let mut hi = lo;
        for (k, (i, j)) in MONOMIALS.iter().enumerate().skip(1) {
            let range = if i % 2 == 0 && j % 2 == 0 {
                MonomialRange::Unit
            } else {
                MonomialRange::Symmetric
            };
            let (a, b) = range.contribution(self.alpha.0[k]);
            lo += a;
            hi += b;
        }
        let r = self.residual.abs() + self.slack;
        (lo - r, hi + r)
    }
}

fn expand(model: &VariationModel, surface: &Cubic, residual: f64) -> Expansion {
    let (s1, s2) = model.half_widths();
    let mut alpha = surface.compose_affine(1.0, s1, 1.0, s2);
    let mut slack = 0.0;
    for (k, (i, j)) in MONOMIALS.iter().enumerate() {
        if i + j > model.degree_limit {
            slack += alpha.0[k].abs();
            alpha.0[k] = 0.0;
        }
    }
    Expansion {
        alpha,
        residual,
        slack,
    }
}

fn weight_expansion(model: &VariationModel, code: u8, variant: Variant) -> Result<Expansion> {
    let e = model.entry(code, variant)?;
    Ok(expand(model, &e.coeffs, e.d3_half_width))
}

/// Per-entry data before assembly: dependent polynomial, residual
/// coefficient, constant shift and private radius.
#[derive(Clone, Copy, Default)]
struct EntryTerms {
    alpha: Cubic,
    residual: f64,
    shift: f64,
    radius: f64,
}

/// Number of generator slots: nine non-constant α-monomials and α₃.
const SLOTS: usize = 10;

fn slot_exponents() -> ExponentMatrix {
    let mut rows = vec![vec![0u32; SLOTS]; 3];
    for (s, (i, j)) in MONOMIALS.iter().enumerate().skip(1) {
        rows[0][s - 1] = *i;
        rows[1][s - 1] = *j;
    }
    rows[2][SLOTS - 1] = 1;
    ExponentMatrix::from_rows(&rows).expect("rectangular")
}

fn assemble(n: usize, m: usize, terms: &[EntryTerms], factors: &ProcessFactors) -> Result<MatPolyZonotope> {
    let mut center = Array2::zeros((n, m));
    let mut radius = Array2::zeros((n, m));
    let mut gens = Array3::zeros((SLOTS, n, m));
    for r in 0..n {
        for c in 0..m {
            let t = &terms[r * m + c];
            center[[r, c]] = t.alpha.0[0] + t.shift;
            radius[[r, c]] = t.radius;
            for s in 1..10 {
                gens[[s - 1, r, c]] = t.alpha.0[s];
            }
            gens[[SLOTS - 1, r, c]] = t.residual;
        }
    }
    let exp = slot_exponents();
    let used: Vec<usize> = (0..SLOTS)
        .filter(|s| gens.index_axis(ndarray::Axis(0), *s).iter().any(|v| *v != 0.0))
        .collect();
    let gens = gens.select(ndarray::Axis(0), &used);
    let exp_cols = exp.entries().select(ndarray::Axis(1), &used);
    // drop factor rows no surviving generator mentions
    let ids = factors.ids();
    let rows: Vec<usize> = (0..3).filter(|k| exp_cols.row(*k).iter().any(|e| *e > 0)).collect();
    let exp = ExponentMatrix::from_array(exp_cols.select(ndarray::Axis(0), &rows));
    let ids = rows.iter().map(|k| ids[*k]).collect();
    MatPolyZonotope::with_entry_radius(center, gens, Array3::zeros((0, n, m)), radius, exp, ids)
}

/// Set of values of a single weight as a `1 × 1` matrix polynomial zonotope.
pub fn weight_set(
    code: u8,
    variant: Variant,
    model: &VariationModel,
    factors: &ProcessFactors,
) -> Result<MatPolyZonotope> {
    let e = weight_expansion(model, code, variant)?;
    let t = EntryTerms {
        alpha: e.alpha,
        residual: e.residual,
        shift: 0.0,
        radius: e.slack,
    };
    assemble(1, 1, &[t], factors)
}

/// Entry for a first-layer connection whose input may take either sign:
/// the non-negative surface as dependent part plus a private interval that
/// covers its own slack and the gap to the negative-input surface.
fn mixed_entry(model: &VariationModel, code: u8) -> Result<EntryTerms> {
    let pos = weight_expansion(model, code, Variant::FirstPos)?;
    let neg = weight_expansion(model, code, Variant::FirstNeg)?;
    let gap = Expansion {
        alpha: neg.alpha.sub(&pos.alpha),
        residual: neg.residual - pos.residual,
        slack: neg.slack,
    };
    let (glo, ghi) = gap.bounds();
    let lo = glo.min(-pos.slack);
    let hi = ghi.max(pos.slack);
    Ok(EntryTerms {
        alpha: pos.alpha,
        residual: pos.residual,
        shift: 0.5 * (lo + hi),
        radius: 0.5 * (hi - lo),
    })
}

/// Full uncertain weight matrix of a (lowered) layer.
///
/// Structural zeros stay exactly zero. In the first layer each input column
/// uses the surface of its sign class; hidden layers use the hidden surfaces.
pub fn build_weight_matrix_set(
    layer: &LoweredLayer,
    role: LayerRole<'_>,
    model: &VariationModel,
    factors: &ProcessFactors,
) -> Result<MatPolyZonotope> {
    if let LayerRole::First(signs) = role {
        check_dim("first-layer sign classes", layer.cols, signs.len())?;
    }
    let mut terms = vec![EntryTerms::default(); layer.rows * layer.cols];
    for r in 0..layer.rows {
        for c in 0..layer.cols {
            let Some(code) = layer.code(r, c) else { continue };
            let t = match role {
                LayerRole::Hidden => plain(weight_expansion(model, code, Variant::Hidden)?),
                LayerRole::First(signs) => match signs[c] {
                    SignClass::NonNegative => plain(weight_expansion(model, code, Variant::FirstPos)?),
                    SignClass::Negative => plain(weight_expansion(model, code, Variant::FirstNeg)?),
                    SignClass::Mixed => mixed_entry(model, code)?,
                },
            };
            terms[r * layer.cols + c] = t;
        }
    }
    assemble(layer.rows, layer.cols, &terms, factors)
}

fn plain(e: Expansion) -> EntryTerms {
    EntryTerms {
        alpha: e.alpha,
        residual: e.residual,
        shift: 0.0,
        radius: e.slack,
    }
}

/// Leakage emitted by each connection in `codes` when its driving neuron is
/// cut off, as a polynomial zonotope in `(α₁, α₂)`. Structural zeros emit
/// nothing.
pub fn leakage_set(codes: &[Option<u8>], model: &VariationModel, factors: &ProcessFactors) -> Result<PolyZonotope> {
    let n = codes.len();
    let mut center = ndarray::Array1::zeros(n);
    let mut dep = Array2::zeros((n, 9));
    let mut slack = vec![0.0; n];
    for (r, code) in codes.iter().enumerate() {
        let Some(code) = code else { continue };
        let e = model.entry(*code, Variant::Hidden)?;
        let x = expand(model, &e.leak_coeffs, 0.0);
        center[r] = x.alpha.0[0];
        for s in 1..10 {
            dep[[r, s - 1]] = x.alpha.0[s];
        }
        slack[r] = x.slack;
    }
    let mut rows = vec![vec![0u32; 9]; 2];
    for (s, (i, j)) in MONOMIALS.iter().enumerate().skip(1) {
        rows[0][s - 1] = *i;
        rows[1][s - 1] = *j;
    }
    let p = PolyZonotope::new(
        center,
        dep,
        Array2::zeros((n, 0)),
        ExponentMatrix::from_rows(&rows)?,
        vec![factors.phi1, factors.phi2],
    )?;
    p.add_box(&vec![0.0; n], &slack).map(|p| p.compact())
}

/// Interval bounds of one weight's value set.
pub fn weight_bounds(model: &VariationModel, code: u8, variant: Variant) -> Result<(f64, f64)> {
    Ok(weight_expansion(model, code, variant)?.bounds())
}

impl From<SignClass> for Variant {
    fn from(s: SignClass) -> Self {
        match s {
            SignClass::Negative => Variant::FirstNeg,
            _ => Variant::FirstPos,
        }
    }
}
