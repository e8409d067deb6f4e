//! Enclosure of the ReLU image of a polynomial zonotope.

use crate::error::{check_dim, Result};
use crate::interval::IntervalBox;
use crate::polyzono::PolyZonotope;

/// Sign situation of one neuron's pre-activation over the whole set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NeuronCase {
    /// Lower bound ≥ 0: the identity.
    Active,
    /// Upper bound < 0: the neuron is cut off.
    Inactive,
    /// Straddles zero. `slope`, `offset` and `band` describe the relaxation
    /// `slope·x + offset ± band`.
    Mixed { slope: f64, offset: f64, band: f64 },
}

impl NeuronCase {
    pub fn classify(lower: f64, upper: f64) -> Self {
        if lower >= 0.0 {
            NeuronCase::Active
        } else if upper < 0.0 {
            NeuronCase::Inactive
        } else {
            let slope = upper / (upper - lower);
            let half = -slope * lower / 2.0;
            NeuronCase::Mixed {
                slope,
                offset: half,
                band: half,
            }
        }
    }

    /// Whether `y` is an admissible output for input `x` under this case's
    /// relaxation (used by tests and diagnostics).
    pub fn admits(&self, x: f64, y: f64, tol: f64) -> bool {
        match *self {
            NeuronCase::Active => (y - x).abs() <= tol,
            NeuronCase::Inactive => y.abs() <= tol,
            NeuronCase::Mixed { slope, offset, band } => (y - slope * x - offset).abs() <= band + tol,
        }
    }
}

/// Per-neuron cases from an interval hull.
pub fn classify(hull: &IntervalBox) -> Vec<NeuronCase> {
    hull.lower
        .iter()
        .zip(&hull.upper)
        .map(|(l, u)| NeuronCase::classify(*l, *u))
        .collect()
}

/// Encloses `{ReLU(x) : x ∈ P}` coordinate-wise.
///
/// Active coordinates pass through exactly, inactive ones become `0` or the
/// given leakage, and mixed ones are replaced by the linear relaxation whose
/// band is one fresh independent generator per neuron. With leakage, a mixed
/// neuron's band grows by the magnitude of its leakage hull.
pub fn enclose_relu(p: &PolyZonotope, leak: Option<&PolyZonotope>) -> Result<PolyZonotope> {
    let n = p.dim();
    if let Some(l) = leak {
        check_dim("enclose_relu leakage", n, l.dim())?;
    }
    let cases = classify(&p.interval_hull());
    let leak_hull = leak.map(|l| l.interval_hull());
    let mut scale = vec![0.0; n];
    let mut offset = vec![0.0; n];
    let mut band = vec![0.0; n];
    let mut leak_rows = vec![0.0; n];
    for (i, case) in cases.iter().enumerate() {
        match *case {
            NeuronCase::Active => scale[i] = 1.0,
            NeuronCase::Inactive => leak_rows[i] = 1.0,
            NeuronCase::Mixed {
                slope,
                offset: mu,
                band: eps,
            } => {
                scale[i] = slope;
                offset[i] = mu;
                band[i] = eps + leak_hull.as_ref().map_or(0.0, |h| h.magnitude(i));
            }
        }
    }
    let mut out = p.scale_rows(&scale, &offset)?.add_box(&vec![0.0; n], &band)?;
    if let Some(l) = leak {
        if leak_rows.iter().any(|r| *r != 0.0) {
            out = out.exact_sum(&l.scale_rows(&leak_rows, &vec![0.0; n])?)?;
        }
    }
    Ok(out.compact())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyzono::{ExponentMatrix, FactorId};
    use ndarray::{arr1, arr2, Array2};

    fn one_factor(center: f64, g: f64) -> PolyZonotope {
        PolyZonotope::new(
            arr1(&[center]),
            arr2(&[[g]]),
            Array2::zeros((1, 0)),
            ExponentMatrix::from_rows(&[vec![1]]).unwrap(),
            vec![FactorId(5)],
        )
        .unwrap()
    }

    #[test]
    fn active_is_identity() {
        let p = one_factor(2.0, 1.0);
        assert_eq!(enclose_relu(&p, None).unwrap(), p);
    }

    #[test]
    fn inactive_is_zero() {
        let p = one_factor(-2.0, 1.0);
        let y = enclose_relu(&p, None).unwrap();
        assert!(y.is_point());
        assert_eq!(y.center()[0], 0.0);
    }

    #[test]
    fn inactive_takes_leakage() {
        let p = one_factor(-2.0, 1.0);
        let leak = one_factor(1e-3, 2e-4);
        let y = enclose_relu(&p, Some(&leak)).unwrap();
        assert_eq!(y, leak);
    }

    #[test]
    fn symmetric_mixed_band_covers_relu() {
        let p = one_factor(0.0, 1.0);
        let case = NeuronCase::classify(-1.0, 1.0);
        assert_eq!(
            case,
            NeuronCase::Mixed {
                slope: 0.5,
                offset: 0.25,
                band: 0.25
            }
        );
        let y = enclose_relu(&p, None).unwrap();
        assert_eq!(y.num_independent(), 1);
        let beta_radius = y.indep_gen()[[0, 0]].abs();
        for k in 0..1000 {
            let a = -1.0 + 2.0 * k as f64 / 999.0;
            let mid = y.sample_point(&[a], &[0.0]).unwrap()[0];
            let relu = a.max(0.0);
            assert!((relu - mid).abs() <= beta_radius + 1e-15, "a={a}");
        }
    }

    #[test]
    fn mixed_with_leak_widens_band() {
        let p = one_factor(0.0, 1.0);
        let leak = one_factor(1e-3, 5e-4);
        let y = enclose_relu(&p, Some(&leak)).unwrap();
        let hull = y.interval_hull();
        assert!(hull.upper[0] >= 1.0 && hull.lower[0] <= -1.5e-3);
        // at the lower end the input is negative and the true value is the leak
        let at_l = y.sample_point(&[-1.0], &[1.0]).unwrap()[0];
        assert!(at_l >= 1.5e-3);
    }

    #[test]
    fn zero_upper_bound_gives_zero() {
        let y = enclose_relu(&one_factor(-1.0, 1.0), None).unwrap();
        let h = y.interval_hull();
        assert_eq!((h.lower[0], h.upper[0]), (0.0, 0.0));
    }

    #[test]
    fn point_set() {
        let y = enclose_relu(&PolyZonotope::point(&[-0.5, 0.0, 3.0]), None).unwrap();
        assert!(y.is_point());
        assert_eq!(y.center().to_vec(), vec![0.0, 0.0, 3.0]);
    }
}
