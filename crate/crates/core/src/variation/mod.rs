//! Process-variation model of the analog weights.
//!
//! Every 6-bit weight code has a cubic response surface in the two dominant
//! process parameters `(φ₁, φ₂)`, separately for the first-layer circuit with
//! positive and negative inputs and for hidden layers, plus a residual
//! half-width that absorbs everything else through a third shared symbol
//! `d₃`. Hidden-layer codes also carry a cubic leakage surface: the current a
//! connection emits when the driving neuron's input is negative.
//!
//! In set form the parameters become dependent factors:
//! `φ₁ = 1 + k_σ σ₁ α₁`, `φ₂ = 1 + k_σ σ₂ α₂`, `d₃ = d3_half_width · α₃`.

mod cubic;
mod fit;
mod sets;
mod synth;

pub use cubic::{Cubic, MONOMIALS};
pub use fit::{fit_coefficients, fit_model, FitOutcome, FitSample, SampleKind, SampleRow};
pub use sets::{
    build_weight_matrix_set, leakage_set, weight_bounds, weight_set, LayerRole, ProcessFactors, SignClass,
};
pub use synth::SynthCircuit;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{dequantize, MAX_CODE};

/// Default domain multiplier (the "3σ" setting).
pub const DEFAULT_SIGMA_MULT: f64 = 3.0;
/// Full polynomial degree of the weight surfaces.
pub const FULL_DEGREE: u32 = 3;

/// Which circuit a coefficient set describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// First layer, non-negative input.
    FirstPos,
    /// First layer, negative input.
    FirstNeg,
    Hidden,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::FirstPos, Variant::FirstNeg, Variant::Hidden];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::FirstPos => "first_pos",
            Variant::FirstNeg => "first_neg",
            Variant::Hidden => "hidden",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first_pos" => Ok(Variant::FirstPos),
            "first_neg" => Ok(Variant::FirstNeg),
            "hidden" => Ok(Variant::Hidden),
            other => Err(Error::Format(format!("unknown variant {other:?}"))),
        }
    }
}

/// Coefficients for one `(code, variant)` pair, in `(φ₁, φ₂)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodeEntry {
    pub coeffs: Cubic,
    pub leak_coeffs: Cubic,
    pub d3_half_width: f64,
}

/// Complete variation model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "ModelDoc", try_from = "ModelDoc")]
pub struct VariationModel {
    pub sigma1: f64,
    pub sigma2: f64,
    /// Domain multiplier `k_σ`: `𝒟ᵢ = [-k_σ σᵢ, k_σ σᵢ]`.
    pub sigma_mult: f64,
    /// Highest total degree in `(α₁, α₂)` kept as dependent terms. Higher
    /// terms are bounded by their coefficient magnitude.
    pub degree_limit: u32,
    entries: BTreeMap<(u8, Variant), CodeEntry>,
}

impl VariationModel {
    pub fn new(sigma1: f64, sigma2: f64) -> Self {
        Self {
            sigma1,
            sigma2,
            sigma_mult: DEFAULT_SIGMA_MULT,
            degree_limit: FULL_DEGREE,
            entries: BTreeMap::new(),
        }
    }

    /// Zero variation: every surface is the constant dequantized weight, no
    /// residual, no leakage.
    pub fn nominal() -> Self {
        let mut m = Self::new(0.0, 0.0);
        for code in 0..=MAX_CODE {
            let w = dequantize(code).expect("code in range");
            for v in Variant::ALL {
                m.insert(
                    code,
                    v,
                    CodeEntry {
                        coeffs: Cubic::constant(w),
                        leak_coeffs: Cubic::default(),
                        d3_half_width: 0.0,
                    },
                );
            }
        }
        m
    }

    pub fn insert(&mut self, code: u8, variant: Variant, entry: CodeEntry) {
        self.entries.insert((code, variant), entry);
    }

    pub fn entry(&self, code: u8, variant: Variant) -> Result<&CodeEntry> {
        self.entries
            .get(&(code, variant))
            .ok_or_else(|| Error::MissingCoefficients {
                code,
                variant: variant.to_string(),
            })
    }

    pub fn entries(&self) -> impl Iterator<Item = ((u8, Variant), &CodeEntry)> {
        self.entries.iter().map(|(k, v)| (*k, v))
    }

    pub fn with_sigma_mult(mut self, k: f64) -> Self {
        self.sigma_mult = k;
        self
    }

    /// Degree-1 version for the zonotope baseline.
    pub fn linearized(mut self) -> Self {
        self.degree_limit = 1;
        self
    }

    /// `(k_σ σ₁, k_σ σ₂)`, the half-widths of the parameter domains.
    pub fn half_widths(&self) -> (f64, f64) {
        (self.sigma_mult * self.sigma1, self.sigma_mult * self.sigma2)
    }

    /// Concrete weight for deviations `d = φ - 1` and residual symbol
    /// `alpha3 ∈ [-1, 1]`.
    pub fn weight_value(&self, code: u8, variant: Variant, d1: f64, d2: f64, alpha3: f64) -> Result<f64> {
        let e = self.entry(code, variant)?;
        Ok(e.coeffs.eval(1.0 + d1, 1.0 + d2) + e.d3_half_width * alpha3)
    }

    /// Concrete leakage of a hidden-layer connection.
    pub fn leak_value(&self, code: u8, d1: f64, d2: f64) -> Result<f64> {
        Ok(self.entry(code, Variant::Hidden)?.leak_coeffs.eval(1.0 + d1, 1.0 + d2))
    }

    pub fn has_leakage(&self) -> bool {
        self.entries
            .values()
            .any(|e| e.leak_coeffs.0.iter().any(|c| *c != 0.0))
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("sigma1", self.sigma1), ("sigma2", self.sigma2), ("sigma_mult", self.sigma_mult)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Format(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        for ((code, variant), e) in &self.entries {
            if *code > MAX_CODE {
                return Err(Error::CodeOutOfRange(*code as i64));
            }
            if !(e.d3_half_width.is_finite() && e.d3_half_width >= 0.0) {
                return Err(Error::Format(format!(
                    "d3_half_width of code {code} {variant} must be non-negative"
                )));
            }
            if e.coeffs.0.iter().chain(&e.leak_coeffs.0).any(|c| !c.is_finite()) {
                return Err(Error::Format(format!("non-finite coefficient for code {code} {variant}")));
            }
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct EntryDoc {
    code: u8,
    variant: Variant,
    coeffs: Cubic,
    #[serde(default)]
    leak_coeffs: Cubic,
    #[serde(default)]
    d3_half_width: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ModelDoc {
    sigma1: f64,
    sigma2: f64,
    #[serde(default = "default_sigma_mult")]
    sigma_mult: f64,
    #[serde(default = "default_degree")]
    degree_limit: u32,
    codes: Vec<EntryDoc>,
}

fn default_sigma_mult() -> f64 {
    DEFAULT_SIGMA_MULT
}

fn default_degree() -> u32 {
    FULL_DEGREE
}

impl From<VariationModel> for ModelDoc {
    fn from(m: VariationModel) -> Self {
        Self {
            sigma1: m.sigma1,
            sigma2: m.sigma2,
            sigma_mult: m.sigma_mult,
            degree_limit: m.degree_limit,
            codes: m
                .entries
                .iter()
                .map(|((code, variant), e)| EntryDoc {
                    code: *code,
                    variant: *variant,
                    coeffs: e.coeffs,
                    leak_coeffs: e.leak_coeffs,
                    d3_half_width: e.d3_half_width,
                })
                .collect(),
        }
    }
}

impl TryFrom<ModelDoc> for VariationModel {
    type Error = Error;

    fn try_from(d: ModelDoc) -> Result<Self> {
        let mut m = VariationModel::new(d.sigma1, d.sigma2);
        m.sigma_mult = d.sigma_mult;
        m.degree_limit = d.degree_limit;
        for e in d.codes {
            if m.entries.contains_key(&(e.code, e.variant)) {
                return Err(Error::Format(format!(
                    "duplicate entry for code {} {}",
                    e.code, e.variant
                )));
            }
            m.insert(
                e.code,
                e.variant,
                CodeEntry {
                    coeffs: e.coeffs,
                    leak_coeffs: e.leak_coeffs,
                    d3_half_width: e.d3_half_width,
                },
            );
        }
        m.validate()?;
        Ok(m)
    }
}
