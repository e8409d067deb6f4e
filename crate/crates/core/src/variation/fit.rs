//! Least-squares fitting of the cubic surfaces from measured samples.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::cubic::MONOMIALS;
use super::{CodeEntry, Cubic, Variant, VariationModel};
use crate::error::{Error, Result};

/// Ratio of smallest to largest singular value below which the design is
/// treated as rank deficient.
const RANK_TOL: f64 = 1e-10;

/// One measurement `(φ₁, φ₂) ↦ value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitSample {
    pub phi1: f64,
    pub phi2: f64,
    pub value: f64,
}

/// What a sample row measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SampleKind {
    Weight(Variant),
    /// Leakage of a hidden-layer connection.
    Leak,
}

impl SampleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SampleKind::Weight(v) => v.as_str(),
            SampleKind::Leak => "leak",
        }
    }
}

impl fmt::Display for SampleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SampleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "leak" {
            Ok(SampleKind::Leak)
        } else {
            s.parse().map(SampleKind::Weight)
        }
    }
}

/// One row of the sample CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleRow {
    pub phi1: f64,
    pub phi2: f64,
    pub code: u8,
    pub kind: SampleKind,
    pub measured: f64,
}

/// Result of fitting one surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOutcome {
    pub code: u8,
    pub kind: SampleKind,
    pub samples: usize,
    pub coeffs: Cubic,
    /// Largest absolute residual over the fitting samples.
    pub residual_half_width: f64,
}

/// Fits the ten coefficients of a cubic in `(φ₁, φ₂)` by least squares.
///
/// The regression runs in the scaled deviations `(φ - 1) / s` for
/// conditioning and is converted back afterwards. The residual half-width is
/// the largest absolute residual, so every sample lies within the fitted
/// surface ± half-width.
pub fn fit_coefficients(samples: &[FitSample], code: u8, kind: SampleKind) -> Result<FitOutcome> {
    let rank_err = |reason: String| Error::RankDeficient {
        code,
        variant: kind.to_string(),
        reason,
    };
    if samples.len() < MONOMIALS.len() {
        return Err(rank_err(format!("{} samples, need at least 10", samples.len())));
    }
    let scale = |f: fn(&FitSample) -> f64| samples.iter().map(|s| (f(s) - 1.0).abs()).fold(0.0, f64::max);
    let s1 = scale(|s| s.phi1);
    let s2 = scale(|s| s.phi2);
    if s1 == 0.0 || s2 == 0.0 {
        return Err(rank_err("no spread in a process parameter".into()));
    }

    let design = DMatrix::from_fn(samples.len(), MONOMIALS.len(), |r, k| {
        let (i, j) = MONOMIALS[k];
        let u = (samples[r].phi1 - 1.0) / s1;
        let v = (samples[r].phi2 - 1.0) / s2;
        u.powi(i as i32) * v.powi(j as i32)
    });
    let rhs = DVector::from_iterator(samples.len(), samples.iter().map(|s| s.value));
    let svd = design.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smax > 0.0) || smin / smax < RANK_TOL {
        return Err(rank_err(format!("condition ratio {:.3e}", smin / smax)));
    }
    let sol = svd
        .solve(&rhs, RANK_TOL * smax)
        .map_err(|e| rank_err(e.to_string()))?;
    let mut scaled = [0.0; 10];
    scaled.copy_from_slice(sol.as_slice());
    let coeffs = Cubic(scaled).compose_affine(-1.0 / s1, 1.0 / s1, -1.0 / s2, 1.0 / s2);

    let residual_half_width = samples
        .iter()
        .map(|s| (s.value - coeffs.eval(s.phi1, s.phi2)).abs())
        .fold(0.0, f64::max);
    Ok(FitOutcome {
        code,
        kind,
        samples: samples.len(),
        coeffs,
        residual_half_width,
    })
}

/// Fits every `(code, kind)` group in `rows` and assembles a model.
///
/// Leak rows attach to the hidden entry of the same code. When `sigmas` is
/// `None` the standard deviations are estimated from the weight rows.
/// All failing groups are reported together.
pub fn fit_model(rows: &[SampleRow], sigmas: Option<(f64, f64)>) -> Result<(VariationModel, Vec<FitOutcome>)> {
    if rows.is_empty() {
        return Err(Error::Format("no samples".into()));
    }
    let mut groups: BTreeMap<(u8, SampleKind), Vec<FitSample>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.code, r.kind)).or_default().push(FitSample {
            phi1: r.phi1,
            phi2: r.phi2,
            value: r.measured,
        });
    }
    let results: Vec<Result<FitOutcome>> = groups
        .par_iter()
        .map(|((code, kind), s)| fit_coefficients(s, *code, *kind))
        .collect();
    let mut failures = Vec::new();
    let mut outcomes = Vec::new();
    for r in results {
        match r {
            Ok(o) => outcomes.push(o),
            Err(e) => failures.push(e.to_string()),
        }
    }
    if !failures.is_empty() {
        return Err(Error::Format(format!("fit failed:\n  {}", failures.join("\n  "))));
    }

    let (sigma1, sigma2) = sigmas.unwrap_or_else(|| estimate_sigmas(rows));
    let mut model = VariationModel::new(sigma1, sigma2);
    for o in &outcomes {
        if let SampleKind::Weight(v) = o.kind {
            model.insert(
                o.code,
                v,
                CodeEntry {
                    coeffs: o.coeffs,
                    leak_coeffs: Cubic::default(),
                    d3_half_width: o.residual_half_width,
                },
            );
        }
    }
    for o in outcomes.iter().filter(|o| o.kind == SampleKind::Leak) {
        let mut e = *model.entry(o.code, Variant::Hidden).map_err(|_| {
            Error::Format(format!("leak samples for code {} without hidden samples", o.code))
        })?;
        e.leak_coeffs = o.coeffs;
        model.insert(o.code, Variant::Hidden, e);
    }
    Ok((model, outcomes))
}

fn estimate_sigmas(rows: &[SampleRow]) -> (f64, f64) {
    let std = |f: fn(&SampleRow) -> f64| {
        let n = rows.len() as f64;
        let mean = rows.iter().map(f).sum::<f64>() / n;
        (rows.iter().map(|r| (f(r) - mean).powi(2)).sum::<f64>() / n).sqrt()
    };
    (std(|r| r.phi1), std(|r| r.phi2))
}
