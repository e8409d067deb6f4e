//! Propagation of input sets through a network with uncertain weights and
//! classification checks on the resulting output set.

use std::time::Instant;

use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::interval::IntervalBox;
use crate::network::{nominal_forward_lowered, predicted_class, LoweredLayer, NetworkSpec, BINARY_THRESHOLD};
use crate::polyzono::{ExponentMatrix, FactorId, PolyZonotope, DEFAULT_MAX_GENERATORS};
use crate::relu::{classify, enclose_relu, NeuronCase};
use crate::variation::{build_weight_matrix_set, leakage_set, LayerRole, ProcessFactors, SignClass, VariationModel};

/// First factor id used for input perturbation symbols; process factors sit
/// below it.
pub const INPUT_FACTOR_BASE: u32 = 1000;
/// Default cap on dependent generators created by one set multiplication.
pub const DEFAULT_MAX_DEPENDENT: usize = 2_000_000;

/// Set representation used during propagation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    /// Full polynomial zonotopes.
    #[default]
    Polynomial,
    /// Degree-1 surfaces and no surviving products of factors: a plain
    /// zonotope domain.
    Zonotope,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationOptions {
    /// Generator budget after each layer.
    pub max_gens: usize,
    /// Hard cap per multiplication; exceeding it is an error.
    pub max_dependent: usize,
    pub domain: Domain,
    pub factors: ProcessFactors,
    /// Keep the hull of every layer's pre-activation in the report.
    pub layer_hulls: bool,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        Self {
            max_gens: DEFAULT_MAX_GENERATORS,
            max_dependent: DEFAULT_MAX_DEPENDENT,
            domain: Domain::Polynomial,
            factors: ProcessFactors::default(),
            layer_hulls: false,
        }
    }
}

/// One pattern to verify.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationTask {
    pub pattern: Vec<f64>,
    /// L∞ input perturbation radius.
    pub epsilon: f64,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub label: usize,
    pub verified: bool,
    pub nominal_class: usize,
    /// Lower bounds of `y_label - y_j` (or the distance to the threshold for a
    /// single output).
    pub margins: Vec<f64>,
    pub output_hull: IntervalBox,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layer_hulls: Option<Vec<IntervalBox>>,
    /// Seconds.
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracySummary {
    pub patterns: usize,
    pub verified_accuracy: f64,
    pub nominal_accuracy: f64,
    pub reports: Vec<VerificationReport>,
}

/// Output of [`Verifier::propagate`].
#[derive(Debug, Clone)]
pub struct Propagation {
    pub output: PolyZonotope,
    /// Hull of each layer's affine output, before its activation.
    pub layer_hulls: Vec<IntervalBox>,
}

/// Input set `x ± ε` with one dependent factor per coordinate.
pub fn build_input_set(x: &[f64], epsilon: f64) -> Result<PolyZonotope> {
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(Error::Format(format!("epsilon must be non-negative, got {epsilon}")));
    }
    let n = x.len();
    if epsilon == 0.0 {
        return Ok(PolyZonotope::point(x));
    }
    let exp = ExponentMatrix::from_array(Array2::eye(n).mapv(|v: f64| v as u32));
    PolyZonotope::new(
        Array1::from_vec(x.to_vec()),
        Array2::eye(n) * epsilon,
        Array2::zeros((n, 0)),
        exp,
        (0..n as u32).map(|i| FactorId(INPUT_FACTOR_BASE + i)).collect(),
    )
}

/// Checks the classification property on an output set.
///
/// For several outputs every difference `y_label - y_j` is formed exactly and
/// its lower bound must be strictly positive. For a single output, label 1
/// requires the lower bound to exceed 0.5 and label 0 requires the upper
/// bound to stay below it. Returns the verdict and the margins.
pub fn check_classification(output: &PolyZonotope, label: usize) -> Result<(bool, Vec<f64>)> {
    let n = output.dim();
    check_label(n, label)?;
    let margins = if n == 1 {
        let h = output.interval_hull();
        vec![if label == 1 {
            h.lower[0] - BINARY_THRESHOLD
        } else {
            BINARY_THRESHOLD - h.upper[0]
        }]
    } else {
        let mut a = Array2::zeros((n - 1, n));
        for (row, j) in (0..n).filter(|j| *j != label).enumerate() {
            a[[row, label]] = 1.0;
            a[[row, j]] = -1.0;
        }
        output.affine_map(&a, &Array1::zeros(n - 1))?.interval_hull().lower
    };
    Ok((margins.iter().all(|m| *m > 0.0), margins))
}

fn check_label(outputs: usize, label: usize) -> Result<()> {
    let classes = if outputs == 1 { 2 } else { outputs };
    if label >= classes {
        return Err(Error::Format(format!("label {label} out of range for {classes} classes")));
    }
    Ok(())
}

/// A network and variation model prepared for repeated verification.
#[derive(Debug, Clone)]
pub struct Verifier {
    layers: Vec<LoweredLayer>,
    input_dim: usize,
    model: VariationModel,
    options: PropagationOptions,
}

impl Verifier {
    /// The model's own `sigma_mult` sets the parameter domains. In the
    /// zonotope domain the model is linearized.
    pub fn new(net: &NetworkSpec, model: &VariationModel, options: PropagationOptions) -> Result<Self> {
        model.validate()?;
        let model = match options.domain {
            Domain::Polynomial => model.clone(),
            Domain::Zonotope => model.clone().linearized(),
        };
        Ok(Self {
            layers: net.lowered()?,
            input_dim: net.input_dim,
            model,
            options,
        })
    }

    pub fn model(&self) -> &VariationModel {
        &self.model
    }

    pub fn options(&self) -> &PropagationOptions {
        &self.options
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.rows)
    }

    pub fn layers(&self) -> &[LoweredLayer] {
        &self.layers
    }

    fn finish_layer(&self, h: PolyZonotope, bias: &[f64]) -> Result<PolyZonotope> {
        let h = h.add_box(bias, &vec![0.0; bias.len()])?;
        let h = match self.options.domain {
            Domain::Polynomial => h,
            Domain::Zonotope => h.demote_above_degree(1),
        };
        Ok(h.compact().reduce_order(self.options.max_gens))
    }

    /// Output set of the network for inputs `x ± epsilon`.
    pub fn propagate(&self, x: &[f64], epsilon: f64) -> Result<Propagation> {
        check_dim("pattern length", self.input_dim, x.len())?;
        let factors = &self.options.factors;
        let cap = self.options.max_dependent;
        let input = build_input_set(x, epsilon)?;
        let in_hull = input.interval_hull();
        let signs: Vec<SignClass> = in_hull
            .lower
            .iter()
            .zip(&in_hull.upper)
            .map(|(l, u)| SignClass::of_interval(*l, *u))
            .collect();

        let first = &self.layers[0];
        let w = build_weight_matrix_set(first, LayerRole::First(&signs), &self.model, factors)?;
        let mut h = self.finish_layer(w.multiply_limited(&input, cap)?, &first.bias)?;
        let mut layer_hulls = vec![h.interval_hull()];

        for layer in &self.layers[1..] {
            let cases = classify(layer_hulls.last().expect("one hull per layer"));
            let r = enclose_relu(&h, None)?;
            let w = build_weight_matrix_set(layer, LayerRole::Hidden, &self.model, factors)?;
            let mut out = w.multiply_limited(&r, cap)?;
            if self.model.has_leakage() {
                out = self.add_leakage(out, layer, &cases)?;
            }
            h = self.finish_layer(out, &layer.bias)?;
            layer_hulls.push(h.interval_hull());
        }
        let output = enclose_relu(&h, None)?;
        Ok(Propagation { output, layer_hulls })
    }

    /// Connections driven by a cut-off neuron emit their leakage instead of
    /// the weighted input. Inactive neurons contribute their leakage exactly;
    /// for mixed neurons the product term already covers zero, so a box
    /// spanning the leakage and zero is added.
    fn add_leakage(&self, mut out: PolyZonotope, layer: &LoweredLayer, cases: &[NeuronCase]) -> Result<PolyZonotope> {
        let n = layer.rows;
        let mut shift = vec![0.0; n];
        let mut radius = vec![0.0; n];
        for (j, case) in cases.iter().enumerate() {
            match case {
                NeuronCase::Active => {}
                NeuronCase::Inactive => {
                    let leak = leakage_set(&layer.column_codes(j), &self.model, &self.options.factors)?;
                    out = out.exact_sum(&leak)?;
                }
                NeuronCase::Mixed { .. } => {
                    let hull = leakage_set(&layer.column_codes(j), &self.model, &self.options.factors)?.interval_hull();
                    for r in 0..n {
                        let lo = hull.lower[r].min(0.0);
                        let hi = hull.upper[r].max(0.0);
                        shift[r] += 0.5 * (lo + hi);
                        radius[r] += 0.5 * (hi - lo);
                    }
                }
            }
        }
        out.add_box(&shift, &radius)
    }

    pub fn verify(&self, task: &VerificationTask) -> Result<VerificationReport> {
        check_label(self.output_dim(), task.label)?;
        let start = Instant::now();
        let prop = self.propagate(&task.pattern, task.epsilon)?;
        let (verified, margins) = check_classification(&prop.output, task.label)?;
        let wall_time = start.elapsed().as_secs_f64();
        let nominal = nominal_forward_lowered(&self.layers, &task.pattern);
        Ok(VerificationReport {
            label: task.label,
            verified,
            nominal_class: predicted_class(&nominal),
            margins,
            output_hull: prop.output.interval_hull(),
            layer_hulls: self.options.layer_hulls.then_some(prop.layer_hulls),
            wall_time,
        })
    }

    /// Verifies every task in parallel and aggregates verified and nominal
    /// accuracy.
    pub fn verified_accuracy(&self, tasks: &[VerificationTask]) -> Result<AccuracySummary> {
        if tasks.is_empty() {
            return Err(Error::Format("no patterns".into()));
        }
        let reports = tasks
            .par_iter()
            .map(|t| self.verify(t))
            .collect::<Result<Vec<_>>>()?;
        let n = reports.len() as f64;
        let verified = reports.iter().filter(|r| r.verified).count() as f64;
        let nominal = reports.iter().filter(|r| r.nominal_class == r.label).count() as f64;
        Ok(AccuracySummary {
            patterns: reports.len(),
            verified_accuracy: verified / n,
            nominal_accuracy: nominal / n,
            reports,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::LayerSpec;
    use ndarray::arr1;

    #[test]
    fn zero_epsilon_is_point() {
        let p = build_input_set(&[0.5, -1.0], 0.0).unwrap();
        assert!(p.is_point());
    }

    #[test]
    fn unit_box_input() {
        let p = build_input_set(&[0.0, 0.0], 1.0).unwrap();
        let h = p.interval_hull();
        assert_eq!(h.lower, vec![-1.0, -1.0]);
        assert_eq!(h.upper, vec![1.0, 1.0]);
        assert!(p.factor_ids().iter().all(|id| id.0 >= INPUT_FACTOR_BASE));
    }

    #[test]
    fn negative_epsilon_rejected() {
        assert!(build_input_set(&[0.0], -0.1).is_err());
    }

    #[test]
    fn point_classification() {
        let (ok, m) = check_classification(&PolyZonotope::point(&[3.0, 1.0, 0.0]), 0).unwrap();
        assert!(ok);
        assert_eq!(m, vec![2.0, 3.0]);
        let (ok, _) = check_classification(&PolyZonotope::point(&[1.0, 1.0]), 0).unwrap();
        assert!(!ok);
        assert!(check_classification(&PolyZonotope::point(&[1.0, 1.0]), 2).is_err());
    }

    #[test]
    fn binary_threshold() {
        let hi = PolyZonotope::point(&[0.7]);
        assert!(check_classification(&hi, 1).unwrap().0);
        assert!(!check_classification(&hi, 0).unwrap().0);
        let mid = PolyZonotope::point(&[0.5]);
        assert!(!check_classification(&mid, 0).unwrap().0);
        assert!(!check_classification(&mid, 1).unwrap().0);
    }

    #[test]
    fn dependent_difference_beats_hull_overlap() {
        // y = (1 + α, 0.5 + α): hulls overlap but y0 - y1 = 0.5
        let p = PolyZonotope::new(
            arr1(&[1.0, 0.5]),
            ndarray::arr2(&[[1.0], [1.0]]),
            Array2::zeros((2, 0)),
            ExponentMatrix::from_rows(&[vec![1]]).unwrap(),
            vec![FactorId(0)],
        )
        .unwrap();
        let (ok, m) = check_classification(&p, 0).unwrap();
        assert!(ok);
        assert!((m[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn nominal_model_degenerates_to_forward_pass() {
        let net = NetworkSpec::new(
            2,
            vec![
                LayerSpec::dense(vec![vec![50, 10], vec![20, 40]], vec![0.1, -0.2]),
                LayerSpec::dense(vec![vec![60, 5], vec![30, 33]], vec![0.0, 0.3]),
            ],
        )
        .unwrap();
        let v = Verifier::new(&net, &VariationModel::nominal(), PropagationOptions::default()).unwrap();
        for x in [[0.3, -0.7], [1.0, 1.0], [-0.2, 0.4]] {
            let out = v.propagate(&x, 0.0).unwrap().output;
            assert!(out.is_point());
            let nominal = net.nominal_forward(&x).unwrap();
            for (a, b) in out.center().iter().zip(&nominal) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
