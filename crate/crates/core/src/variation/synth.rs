//! Deterministic stand-in for circuit-level Monte-Carlo data.
//!
//! Each code gets a cubic gain surface in the deviations `d = φ - 1` whose
//! value at `d = 0` is the dequantized weight. The three circuit variants
//! share the code's base surface with a few percent of perturbation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::fit::{SampleKind, SampleRow};
use super::{CodeEntry, Cubic, Variant, VariationModel};
use crate::network::{dequantize, MAX_CODE};
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthCircuit {
    pub seed: u64,
    pub sigma1: f64,
    pub sigma2: f64,
    /// Half-width of the uniform measurement noise.
    pub noise: f64,
}

impl SynthCircuit {
    pub const DEFAULT_SIGMA: f64 = 0.05;
    pub const DEFAULT_NOISE: f64 = 5e-4;

    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            sigma1: Self::DEFAULT_SIGMA,
            sigma2: Self::DEFAULT_SIGMA,
            noise: Self::DEFAULT_NOISE,
        }
    }

    pub fn with_noise(mut self, noise: f64) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_sigmas(mut self, sigma1: f64, sigma2: f64) -> Self {
        self.sigma1 = sigma1;
        self.sigma2 = sigma2;
        self
    }

    fn rng(&self, code: u8, tag: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(derive_seed(self.seed, (code as u64) << 8 | tag))
    }

    fn variant_tag(v: Variant) -> u64 {
        match v {
            Variant::FirstPos => 1,
            Variant::FirstNeg => 2,
            Variant::Hidden => 3,
        }
    }

    /// Weight surface in deviation coordinates `(d₁, d₂)`.
    pub fn deviation_surface(&self, code: u8, variant: Variant) -> Cubic {
        let w = dequantize(code.min(MAX_CODE)).expect("clamped code");
        let mut base = self.rng(code, 0);
        let mut gain = [
            1.0,
            base.random_range(0.8..1.2),
            base.random_range(-0.7..-0.3),
            base.random_range(-1.5..1.5),
            base.random_range(-1.0..1.0),
            base.random_range(-1.5..1.5),
            base.random_range(-2.0..2.0),
            base.random_range(-2.0..2.0),
            base.random_range(-2.0..2.0),
            base.random_range(-2.0..2.0),
        ];
        let mut offset = [base.random_range(-0.02..0.02), base.random_range(-0.02..0.02)];
        let mut tweak = self.rng(code, Self::variant_tag(variant));
        for g in gain.iter_mut().skip(1) {
            *g *= tweak.random_range(0.97..1.03);
        }
        for o in offset.iter_mut() {
            *o += tweak.random_range(-0.005..0.005);
        }
        let mut k = gain.map(|g| w * g);
        k[1] += offset[0];
        k[2] += offset[1];
        Cubic(k)
    }

    /// Leakage surface in deviation coordinates.
    pub fn deviation_leak(&self, code: u8) -> Cubic {
        let w = dequantize(code.min(MAX_CODE)).expect("clamped code");
        let mut r = self.rng(code, 10);
        let l0 = 1e-3 * (0.5 + 0.25 * w.abs());
        Cubic([
            l0,
            l0 * r.random_range(0.5..1.5),
            l0 * r.random_range(-0.5..0.5),
            l0 * r.random_range(-1.0..1.0),
            l0 * r.random_range(-1.0..1.0),
            l0 * r.random_range(-1.0..1.0),
            0.0,
            0.0,
            0.0,
            0.0,
        ])
    }

    /// Noise-free response at `(φ₁, φ₂)`.
    pub fn response(&self, code: u8, kind: SampleKind, phi1: f64, phi2: f64) -> f64 {
        let surface = match kind {
            SampleKind::Weight(v) => self.deviation_surface(code, v),
            SampleKind::Leak => self.deviation_leak(code),
        };
        surface.eval(phi1 - 1.0, phi2 - 1.0)
    }

    /// `n` measurements of one `(code, kind)` with normally distributed
    /// parameters and uniform noise.
    pub fn samples_for(&self, code: u8, kind: SampleKind, n: usize) -> Vec<SampleRow> {
        let tag = match kind {
            SampleKind::Weight(v) => 20 + Self::variant_tag(v),
            SampleKind::Leak => 30,
        };
        let mut rng = self.rng(code, tag);
        (0..n)
            .map(|_| {
                let z1: f64 = rng.sample(StandardNormal);
                let z2: f64 = rng.sample(StandardNormal);
                let phi1 = 1.0 + self.sigma1 * z1;
                let phi2 = 1.0 + self.sigma2 * z2;
                let noise = if self.noise > 0.0 {
                    rng.random_range(-self.noise..=self.noise)
                } else {
                    0.0
                };
                SampleRow {
                    phi1,
                    phi2,
                    code,
                    kind,
                    measured: self.response(code, kind, phi1, phi2) + noise,
                }
            })
            .collect()
    }

    /// Samples for all 64 codes, three weight variants and leakage.
    pub fn samples(&self, n_per: usize) -> Vec<SampleRow> {
        let kinds = [
            SampleKind::Weight(Variant::FirstPos),
            SampleKind::Weight(Variant::FirstNeg),
            SampleKind::Weight(Variant::Hidden),
            SampleKind::Leak,
        ];
        (0..=MAX_CODE)
            .flat_map(|code| kinds.iter().flat_map(move |k| self.samples_for(code, *k, n_per)))
            .collect()
    }

    /// The generating model itself, with the noise amplitude as residual.
    pub fn model(&self) -> VariationModel {
        let mut m = VariationModel::new(self.sigma1, self.sigma2);
        for code in 0..=MAX_CODE {
            for v in Variant::ALL {
                let leak = if v == Variant::Hidden {
                    self.deviation_leak(code).from_deviation_basis()
                } else {
                    Cubic::default()
                };
                m.insert(
                    code,
                    v,
                    CodeEntry {
                        coeffs: self.deviation_surface(code, v).from_deviation_basis(),
                        leak_coeffs: leak,
                        d3_half_width: self.noise,
                    },
                );
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nominal_query_returns_dequantized_weight() {
        let s = SynthCircuit::new(3).with_noise(0.0);
        for code in [0u8, 20, 31, 63] {
            for v in Variant::ALL {
                assert_eq!(
                    s.response(code, SampleKind::Weight(v), 1.0, 1.0),
                    dequantize(code).unwrap()
                );
            }
        }
    }

    #[test]
    fn same_seed_same_samples() {
        let a = SynthCircuit::new(11).samples_for(5, SampleKind::Leak, 50);
        let b = SynthCircuit::new(11).samples_for(5, SampleKind::Leak, 50);
        assert_eq!(a, b);
        let c = SynthCircuit::new(12).samples_for(5, SampleKind::Leak, 50);
        assert_ne!(a, c);
    }

    #[test]
    fn outputs_spread_when_sigma_positive() {
        let rows = SynthCircuit::new(1).samples_for(50, SampleKind::Weight(Variant::Hidden), 1000);
        let lo = rows.iter().map(|r| r.measured).fold(f64::INFINITY, f64::min);
        let hi = rows.iter().map(|r| r.measured).fold(f64::NEG_INFINITY, f64::max);
        assert!(hi - lo > 0.05, "spread {}", hi - lo);
    }

    #[test]
    fn model_matches_response() {
        let s = SynthCircuit::new(4);
        let m = s.model();
        let (p1, p2) = (1.07, 0.96);
        for v in Variant::ALL {
            let direct = s.response(40, SampleKind::Weight(v), p1, p2);
            let via = m.weight_value(40, v, p1 - 1.0, p2 - 1.0, 0.0).unwrap();
            assert!((direct - via).abs() < 1e-12);
        }
    }
}
