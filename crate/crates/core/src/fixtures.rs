//! Synthetic benchmark networks and patterns in four reference shapes.
//!
//! Weights are drawn from a fan-in scaled normal and quantized, so the
//! networks are untrained but numerically well behaved. Labels are the nominal
//! prediction with about one pattern in ten relabeled, giving a nominal
//! accuracy near 90%.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{predicted_class, quantize, ConvMeta, LayerSpec, NetworkSpec, BINARY_THRESHOLD};
use crate::rng::derive_seed;

/// Seed used for the shipped fixture files.
pub const DEFAULT_FIXTURE_SEED: u64 = 2024;
/// Fraction of patterns whose label differs from the nominal prediction.
const FLIP_RATE: f64 = 0.1;
/// Patterns closer than this to a decision tie are skipped.
const TIE_GAP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixtureShape {
    /// 30-8-16-1, binary.
    Breast,
    /// 4-8-3.
    Iris,
    /// 196-10-10.
    MnistDense,
    /// 14×14 input, one 7×7 filter (stride 1) to 64, then 64-10.
    MnistCnn,
}

impl FixtureShape {
    pub const ALL: [FixtureShape; 4] = [
        FixtureShape::Breast,
        FixtureShape::Iris,
        FixtureShape::MnistDense,
        FixtureShape::MnistCnn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FixtureShape::Breast => "breast",
            FixtureShape::Iris => "iris",
            FixtureShape::MnistDense => "mnist_dense",
            FixtureShape::MnistCnn => "mnist_cnn",
        }
    }

    fn stream(self) -> u64 {
        match self {
            FixtureShape::Breast => 1,
            FixtureShape::Iris => 2,
            FixtureShape::MnistDense => 3,
            FixtureShape::MnistCnn => 4,
        }
    }

    fn input_dim(self) -> usize {
        match self {
            FixtureShape::Breast => 30,
            FixtureShape::Iris => 4,
            FixtureShape::MnistDense | FixtureShape::MnistCnn => 196,
        }
    }
}

impl fmt::Display for FixtureShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for FixtureShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Format(format!("unknown fixture {s:?}")))
    }
}

/// An input with its expected class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pattern {
    pub x: Vec<f64>,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub shape: FixtureShape,
    pub net: NetworkSpec,
    pub patterns: Vec<Pattern>,
}

fn dense_codes(rng: &mut ChaCha8Rng, rows: usize, cols: usize, gain: f64) -> Vec<Vec<u8>> {
    let dist = Normal::new(0.0, gain / (cols as f64).sqrt()).expect("positive std");
    (0..rows)
        .map(|_| (0..cols).map(|_| quantize(dist.sample(rng))).collect())
        .collect()
}

fn biases(rng: &mut ChaCha8Rng, n: usize, mean: f64, spread: f64) -> Vec<f64> {
    (0..n).map(|_| mean + rng.random_range(-spread..spread)).collect()
}

fn dense(rng: &mut ChaCha8Rng, rows: usize, cols: usize, gain: f64, bias_mean: f64) -> LayerSpec {
    let w = dense_codes(rng, rows, cols, gain);
    LayerSpec::dense(w, biases(rng, rows, bias_mean, 0.1))
}

/// Network of the given shape with deterministic weights.
pub fn network(shape: FixtureShape, seed: u64) -> NetworkSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, shape.stream()));
    let layers = match shape {
        FixtureShape::Breast => vec![
            dense(&mut rng, 8, 30, 1.5, 0.1),
            dense(&mut rng, 16, 8, 1.5, 0.1),
            dense(&mut rng, 1, 16, 1.0, BINARY_THRESHOLD),
        ],
        FixtureShape::Iris => vec![
            dense(&mut rng, 8, 4, 1.5, 0.1),
            dense(&mut rng, 3, 8, 1.5, 0.5),
        ],
        FixtureShape::MnistDense => vec![
            dense(&mut rng, 10, 196, 2.0, 0.0),
            dense(&mut rng, 10, 10, 1.5, 0.5),
        ],
        FixtureShape::MnistCnn => {
            let meta = ConvMeta {
                in_height: 14,
                in_width: 14,
                in_channels: 1,
                filter_size: 7,
                stride: 1,
            };
            let filter = dense_codes(&mut rng, 1, meta.filter_len(), 2.0);
            let bias = biases(&mut rng, 1, 0.0, 0.1);
            vec![
                LayerSpec::conv(filter, bias, meta),
                dense(&mut rng, 10, 64, 1.5, 0.5),
            ]
        }
    };
    NetworkSpec::new(shape.input_dim(), layers).expect("fixture shapes are consistent")
}

fn random_input(shape: FixtureShape, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = shape.input_dim();
    match shape {
        FixtureShape::Breast | FixtureShape::Iris => (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect(),
        FixtureShape::MnistDense | FixtureShape::MnistCnn => (0..n)
            .map(|_| {
                if rng.random_bool(0.3) {
                    rng.random_range(0.2..=1.0)
                } else {
                    0.0
                }
            })
            .collect(),
    }
}

/// Whether the nominal output has a clear winner.
fn decisive(y: &[f64]) -> bool {
    if y.len() == 1 {
        return (y[0] - BINARY_THRESHOLD).abs() > TIE_GAP;
    }
    let best = predicted_class(y);
    y.iter()
        .enumerate()
        .all(|(j, v)| j == best || y[best] - v > TIE_GAP)
}

/// `count` patterns with decisive nominal outputs.
pub fn patterns(net: &NetworkSpec, shape: FixtureShape, count: usize, seed: u64) -> Vec<Pattern> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 100 + shape.stream()));
    let classes = net.output_dim().max(2);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let x = random_input(shape, &mut rng);
        let y = net.nominal_forward(&x).expect("fixture input matches network");
        if !decisive(&y) {
            continue;
        }
        let mut label = predicted_class(&y);
        if rng.random_bool(FLIP_RATE) {
            label = (label + rng.random_range(1..classes)) % classes;
        }
        out.push(Pattern { x, label });
    }
    out
}

pub fn fixture(shape: FixtureShape, seed: u64, count: usize) -> Fixture {
    let net = network(shape, seed);
    let patterns = patterns(&net, shape, count, seed);
    Fixture { shape, net, patterns }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes() {
        let dims: Vec<(usize, usize)> = FixtureShape::ALL
            .iter()
            .map(|s| {
                let n = network(*s, 1);
                (n.input_dim, n.output_dim())
            })
            .collect();
        assert_eq!(dims, vec![(30, 1), (4, 3), (196, 10), (196, 10)]);
        let cnn = network(FixtureShape::MnistCnn, 1).lowered().unwrap();
        assert_eq!((cnn[0].rows, cnn[0].cols), (64, 196));
    }

    #[test]
    fn deterministic() {
        assert_eq!(fixture(FixtureShape::Iris, 5, 10), fixture(FixtureShape::Iris, 5, 10));
        assert_ne!(network(FixtureShape::Iris, 5), network(FixtureShape::Iris, 6));
    }

    #[test]
    fn nominal_accuracy_near_ninety_percent() {
        for shape in FixtureShape::ALL {
            let f = fixture(shape, DEFAULT_FIXTURE_SEED, 200);
            let correct = f
                .patterns
                .iter()
                .filter(|p| predicted_class(&f.net.nominal_forward(&p.x).unwrap()) == p.label)
                .count();
            assert!((160..=195).contains(&correct), "{shape}: {correct}");
        }
    }

    #[test]
    fn names_parse() {
        for s in FixtureShape::ALL {
            assert_eq!(s.name().parse::<FixtureShape>().unwrap(), s);
        }
    }
}
