//! Degree-1 (zonotope) baseline for comparison with the polynomial pipeline.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::interval::IntervalBox;
use crate::network::NetworkSpec;
use crate::variation::VariationModel;
use crate::verifier::{check_classification, Domain, PropagationOptions, VerificationTask, Verifier};

/// Keeps only the terms of total degree ≤ 1 in `(α₁, α₂)`; every dropped
/// monomial is bounded by its coefficient magnitude as private slack.
pub fn linearize_model(model: &VariationModel) -> VariationModel {
    model.clone().linearized()
}

/// Output hull and verdict of one pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineResult {
    pub hull: IntervalBox,
    pub verified: bool,
}

/// Runs the verifier in the zonotope domain.
pub fn propagate_zonotope(
    net: &NetworkSpec,
    model: &VariationModel,
    task: &VerificationTask,
    options: PropagationOptions,
) -> Result<PipelineResult> {
    run(net, model, task, PropagationOptions { domain: Domain::Zonotope, ..options })
}

fn run(net: &NetworkSpec, model: &VariationModel, task: &VerificationTask, options: PropagationOptions) -> Result<PipelineResult> {
    let v = Verifier::new(net, model, options)?;
    let out = v.propagate(&task.pattern, task.epsilon)?.output;
    let (verified, _) = check_classification(&out, task.label)?;
    Ok(PipelineResult {
        hull: out.interval_hull(),
        verified,
    })
}

/// Both pipelines on the same task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub polynomial: PipelineResult,
    pub zonotope: PipelineResult,
}

impl Comparison {
    /// Zonotope width minus polynomial width per output.
    pub fn width_excess(&self) -> Vec<f64> {
        self.zonotope
            .hull
            .widths()
            .iter()
            .zip(self.polynomial.hull.widths())
            .map(|(z, p)| z - p)
            .collect()
    }
}

pub fn compare(
    net: &NetworkSpec,
    model: &VariationModel,
    task: &VerificationTask,
    options: PropagationOptions,
) -> Result<Comparison> {
    Ok(Comparison {
        polynomial: run(net, model, task, PropagationOptions { domain: Domain::Polynomial, ..options })?,
        zonotope: propagate_zonotope(net, model, task, options)?,
    })
}
