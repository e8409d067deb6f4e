//! Monte-Carlo evaluation of the parametric network and containment
//! statistics against computed output hulls.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::interval::IntervalBox;
use crate::network::{LoweredLayer, NetworkSpec, NUM_CODES};
use crate::rng::derive_seed;
use crate::variation::{Variant, VariationModel};

/// Default number of Monte-Carlo samples per pattern.
pub const DEFAULT_SAMPLES: usize = 1000;

/// One realization of the process parameters. `d3` is the shared residual
/// symbol in `[-1, 1]`; each weight scales it by its own half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamDraw {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

impl ParamDraw {
    pub const NOMINAL: ParamDraw = ParamDraw {
        d1: 0.0,
        d2: 0.0,
        d3: 0.0,
    };
}

/// Draws `d₁ ~ N(0, σ₁²)`, `d₂ ~ N(0, σ₂²)` and a uniform residual symbol.
/// With `truncated`, the normals are resampled until they fall inside the
/// `k_σ σ` domains.
pub fn draw_params(model: &VariationModel, rng: &mut impl Rng, truncated: bool) -> ParamDraw {
    let (h1, h2) = model.half_widths();
    ParamDraw {
        d1: draw_normal(model.sigma1, h1, rng, truncated),
        d2: draw_normal(model.sigma2, h2, rng, truncated),
        d3: rng.random_range(-1.0..=1.0),
    }
}

fn draw_normal(sigma: f64, half_width: f64, rng: &mut impl Rng, truncated: bool) -> f64 {
    if sigma <= 0.0 || (truncated && half_width <= 0.0) {
        return 0.0;
    }
    let dist = Normal::new(0.0, sigma).expect("positive finite sigma");
    loop {
        let d = dist.sample(rng);
        if !truncated || d.abs() <= half_width {
            return d;
        }
    }
}

/// Concrete weights and leakages of every code for one parameter draw.
struct WeightTable {
    weights: Vec<[Option<f64>; 3]>,
    leak: Vec<Option<f64>>,
}

fn variant_slot(v: Variant) -> usize {
    match v {
        Variant::FirstPos => 0,
        Variant::FirstNeg => 1,
        Variant::Hidden => 2,
    }
}

impl WeightTable {
    fn new(model: &VariationModel, p: &ParamDraw) -> Self {
        let mut weights = vec![[None; 3]; NUM_CODES];
        let mut leak = vec![None; NUM_CODES];
        for ((code, variant), e) in model.entries() {
            let c = code as usize;
            weights[c][variant_slot(variant)] =
                Some(e.coeffs.eval(1.0 + p.d1, 1.0 + p.d2) + e.d3_half_width * p.d3);
            if variant == Variant::Hidden {
                leak[c] = Some(e.leak_coeffs.eval(1.0 + p.d1, 1.0 + p.d2));
            }
        }
        Self { weights, leak }
    }

    fn weight(&self, code: u8, variant: Variant) -> Result<f64> {
        self.weights[code as usize][variant_slot(variant)].ok_or_else(|| Error::MissingCoefficients {
            code,
            variant: variant.to_string(),
        })
    }

    fn leak(&self, code: u8) -> Result<f64> {
        self.leak[code as usize].ok_or_else(|| Error::MissingCoefficients {
            code,
            variant: Variant::Hidden.to_string(),
        })
    }
}

/// Pre-activations of every layer of the parametric network for one input
/// and one parameter draw.
///
/// The first layer picks the positive- or negative-input circuit by the sign
/// of each input. In later layers a connection whose driving neuron has a
/// negative pre-activation emits its leakage instead of the weighted input.
pub fn preactivations(layers: &[LoweredLayer], model: &VariationModel, x: &[f64], p: &ParamDraw) -> Result<Vec<Vec<f64>>> {
    let first = layers.first().ok_or_else(|| Error::Structure("network has no layers".into()))?;
    check_dim("pattern length", first.cols, x.len())?;
    let table = WeightTable::new(model, p);
    let mut trace: Vec<Vec<f64>> = Vec::with_capacity(layers.len());
    for (k, layer) in layers.iter().enumerate() {
        let mut y = layer.bias.clone();
        for (r, out) in y.iter_mut().enumerate() {
            for c in 0..layer.cols {
                let Some(code) = layer.code(r, c) else { continue };
                *out += if k == 0 {
                    let v = if x[c] >= 0.0 { Variant::FirstPos } else { Variant::FirstNeg };
                    table.weight(code, v)? * x[c]
                } else {
                    let h = trace[k - 1][c];
                    if h < 0.0 {
                        table.leak(code)?
                    } else {
                        table.weight(code, Variant::Hidden)? * h
                    }
                };
            }
        }
        trace.push(y);
    }
    Ok(trace)
}

/// Network output for one parameter draw: final ReLU of the last layer.
pub fn forward_with_params(layers: &[LoweredLayer], model: &VariationModel, x: &[f64], p: &ParamDraw) -> Result<Vec<f64>> {
    let mut trace = preactivations(layers, model, x, p)?;
    let mut y = trace.pop().expect("at least one layer");
    for v in y.iter_mut() {
        *v = v.max(0.0);
    }
    Ok(y)
}

/// Draws parameters from `rng` and evaluates the network once.
pub fn sample_forward(
    net: &NetworkSpec,
    model: &VariationModel,
    x: &[f64],
    rng: &mut impl Rng,
    truncated: bool,
) -> Result<Vec<f64>> {
    let p = draw_params(model, rng, truncated);
    forward_with_params(&net.lowered()?, model, x, &p)
}

/// Fraction of `outputs` inside `hull` in every coordinate.
pub fn enclosure_percentage(outputs: &[Vec<f64>], hull: &IntervalBox) -> Result<f64> {
    if outputs.is_empty() {
        return Err(Error::Format("no Monte-Carlo samples".into()));
    }
    let inside = outputs.iter().filter(|y| hull.contains(y)).count();
    Ok(inside as f64 / outputs.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub samples: usize,
    pub seed: u64,
    pub truncated: bool,
    /// Inputs are drawn uniformly from `x ± epsilon`.
    pub epsilon: f64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            samples: DEFAULT_SAMPLES,
            seed: 0,
            truncated: false,
            epsilon: 0.0,
        }
    }
}

/// One Monte-Carlo evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSample {
    pub seed: u64,
    pub params: ParamDraw,
    pub output: Vec<f64>,
}

/// Runs `config.samples` evaluations in parallel. Sample `i` uses its own
/// seed derived from `config.seed`, so results do not depend on the thread
/// count.
pub fn monte_carlo(layers: &[LoweredLayer], model: &VariationModel, x: &[f64], config: &McConfig) -> Result<Vec<McSample>> {
    if config.samples == 0 {
        return Err(Error::Format("sample count must be positive".into()));
    }
    (0..config.samples as u64)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(config.seed, i);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let params = draw_params(model, &mut rng, config.truncated);
            let input: Vec<f64> = if config.epsilon > 0.0 {
                x.iter()
                    .map(|v| v + config.epsilon * rng.random_range(-1.0..=1.0))
                    .collect()
            } else {
                x.to_vec()
            };
            Ok(McSample {
                seed,
                params,
                output: forward_with_params(layers, model, &input, &params)?,
            })
        })
        .collect()
}
