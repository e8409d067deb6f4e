use serde::{Deserialize, Serialize};

/// Exponent pairs `(i, j)` of the ten monomials `u^i v^j`, `i + j ≤ 3`, in
/// graded lexicographic order.
pub const MONOMIALS: [(u32, u32); 10] = [
    (0, 0),
    (1, 0),
    (0, 1),
    (2, 0),
    (1, 1),
    (0, 2),
    (3, 0),
    (2, 1),
    (1, 2),
    (0, 3),
];

/// Bivariate polynomial of total degree ≤ 3 with coefficients ordered as
/// [`MONOMIALS`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Cubic(pub [f64; 10]);

fn binomial(n: u32, k: u32) -> f64 {
    match (n, k) {
        (_, 0) => 1.0,
        (n, k) if k == n => 1.0,
        (2, 1) => 2.0,
        (3, 1) | (3, 2) => 3.0,
        _ => unreachable!("degree above 3"),
    }
}

pub(crate) fn slot(i: u32, j: u32) -> usize {
    MONOMIALS
        .iter()
        .position(|m| *m == (i, j))
        .expect("monomial of degree ≤ 3")
}

impl Cubic {
    pub fn constant(c: f64) -> Self {
        let mut k = [0.0; 10];
        k[0] = c;
        Cubic(k)
    }

    pub fn coeffs(&self) -> &[f64; 10] {
        &self.0
    }

    pub fn eval(&self, u: f64, v: f64) -> f64 {
        MONOMIALS
            .iter()
            .zip(&self.0)
            .map(|((i, j), c)| c * u.powi(*i as i32) * v.powi(*j as i32))
            .sum()
    }

    /// `q(a, b) = p(o₁ + s₁ a, o₂ + s₂ b)`.
    pub fn compose_affine(&self, o1: f64, s1: f64, o2: f64, s2: f64) -> Cubic {
        let mut out = [0.0; 10];
        for ((i, j), c) in MONOMIALS.iter().zip(&self.0) {
            if *c == 0.0 {
                continue;
            }
            for a in 0..=*i {
                let fa = binomial(*i, a) * o1.powi((i - a) as i32) * s1.powi(a as i32);
                if fa == 0.0 {
                    continue;
                }
                for b in 0..=*j {
                    let fb = binomial(*j, b) * o2.powi((j - b) as i32) * s2.powi(b as i32);
                    out[slot(a, b)] += c * fa * fb;
                }
            }
        }
        Cubic(out)
    }

    /// Coefficients in the centered variables `d = φ - 1`.
    pub fn to_deviation_basis(&self) -> Cubic {
        self.compose_affine(1.0, 1.0, 1.0, 1.0)
    }

    /// Inverse of [`to_deviation_basis`](Self::to_deviation_basis).
    pub fn from_deviation_basis(&self) -> Cubic {
        self.compose_affine(-1.0, 1.0, -1.0, 1.0)
    }

    pub fn add(&self, other: &Cubic) -> Cubic {
        let mut k = self.0;
        for (a, b) in k.iter_mut().zip(&other.0) {
            *a += b;
        }
        Cubic(k)
    }

    pub fn sub(&self, other: &Cubic) -> Cubic {
        let mut k = self.0;
        for (a, b) in k.iter_mut().zip(&other.0) {
            *a -= b;
        }
        Cubic(k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_lex_order() {
        assert_eq!(slot(0, 0), 0);
        assert_eq!(slot(2, 0), 3);
        assert_eq!(slot(1, 2), 8);
    }

    #[test]
    fn compose_matches_direct_evaluation() {
        let p = Cubic([0.3, -1.0, 2.0, 0.5, -0.25, 1.5, 0.1, -0.7, 0.9, 0.05]);
        let (o1, s1, o2, s2) = (1.0, 0.15, 0.9, -0.3);
        let q = p.compose_affine(o1, s1, o2, s2);
        for &(a, b) in &[(0.0, 0.0), (1.0, -1.0), (-0.3, 0.8), (0.5, 0.5)] {
            let direct = p.eval(o1 + s1 * a, o2 + s2 * b);
            assert!((q.eval(a, b) - direct).abs() < 1e-13);
        }
    }

    #[test]
    fn deviation_basis_roundtrip() {
        let p = Cubic([1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0]);
        let back = p.to_deviation_basis().from_deviation_basis();
        for (a, b) in back.0.iter().zip(&p.0) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
