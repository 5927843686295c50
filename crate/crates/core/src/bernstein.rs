//! Bernstein bound matrices and the polyhedral cone of monotone skew polynomials.
//!
//! For a polynomial with monomial coefficients `z`, `M̃ z` holds its Bernstein
//! coefficients, which bracket the polynomial on `[0, 1]`. Applying this to the
//! derivative of `g(ξ) = Σ_{d=1}^D z_d ξ^d + c` gives the cone `{z | M z ≥ 0}`
//! with `M = M̃ diag(1, …, D)`: every nonzero member is nondecreasing.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::binomial;
use crate::polynomial::UniPoly;

/// Default absolute tolerance on the entries of `M z`.
pub const CONE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct ConeData {
    pub degree: usize,
    /// Lower-triangular monomial-to-Bernstein matrix `M̃`.
    pub m_tilde: DMatrix<f64>,
    /// Cone matrix `M = M̃ diag(1, 2, …, D)`.
    pub m: DMatrix<f64>,
}

/// `[M̃]_{ij} = C(i, j) / C(D−1, j)` for `i ≥ j` (0-based), and `M = M̃ diag(1..D)`.
pub fn build_cone(degree: usize) -> Result<ConeData> {
    if degree == 0 {
        return Err(Error::InvalidArgument(
            "cone degree must be positive".into(),
        ));
    }
    let d = degree;
    let m_tilde = DMatrix::from_fn(d, d, |i, j| {
        if i >= j {
            binomial(i, j) / binomial(d - 1, j)
        } else {
            0.0
        }
    });
    let m = DMatrix::from_fn(d, d, |i, j| m_tilde[(i, j)] * (j + 1) as f64);
    Ok(ConeData { degree, m_tilde, m })
}

impl ConeData {
    /// `M z` with a fixed left-to-right summation order over the triangle.
    pub fn image(&self, z: &[f64]) -> Vec<f64> {
        lower_matvec(&self.m, z)
    }

    pub fn bernstein_coefficients(&self, z: &[f64]) -> Vec<f64> {
        lower_matvec(&self.m_tilde, z)
    }

    /// Solves `M z = y` for `y ≥ 0` by forward substitution. Each `z_i` is
    /// nudged upward by ulps until the row `[M z]_i`, recomputed exactly as
    /// [`ConeData::image`] does, is nonnegative.
    pub fn preimage_nonnegative(&self, y: &[f64]) -> Result<Vec<f64>> {
        let d = self.degree;
        if y.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: y.len(),
            });
        }
        let mut z = vec![0.0; d];
        for i in 0..d {
            let mut partial = 0.0;
            for (j, zj) in z.iter().enumerate().take(i) {
                partial += self.m[(i, j)] * zj;
            }
            let diag = self.m[(i, i)];
            let mut zi = (y[i] - partial) / diag;
            let row = |zi: f64| partial + diag * zi;
            let mut guard = 0;
            while row(zi) < 0.0 && guard < 64 {
                zi = next_up(zi);
                guard += 1;
            }
            z[i] = zi;
        }
        Ok(z)
    }
}

fn lower_matvec(m: &DMatrix<f64>, z: &[f64]) -> Vec<f64> {
    (0..m.nrows())
        .map(|i| {
            let mut partial = 0.0;
            for j in 0..i {
                partial += m[(i, j)] * z[j];
            }
            partial + m[(i, i)] * z[i]
        })
        .collect()
}

fn next_up(x: f64) -> f64 {
    if x.is_nan() || x == f64::INFINITY {
        return x;
    }
    if x == 0.0 {
        return f64::from_bits(1);
    }
    let bits = x.to_bits();
    if x > 0.0 {
        f64::from_bits(bits + 1)
    } else {
        f64::from_bits(bits - 1)
    }
}

/// `(min_i [M̃ z]_i, max_i [M̃ z]_i)`: bounds on `Σ_{d<D} z_{d+1} ξ^d` over `[0, 1]`.
pub fn bernstein_bounds(cone: &ConeData, z: &[f64]) -> Result<(f64, f64)> {
    if z.len() != cone.degree {
        return Err(Error::DimensionMismatch {
            expected: cone.degree,
            found: z.len(),
        });
    }
    let b = cone.bernstein_coefficients(z);
    let lo = b.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = b.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((lo, hi))
}

/// Membership in the cone minus the origin: `min_i [M z]_i ≥ −tol` and `‖z‖_∞ > tol`.
pub fn in_cone(cone: &ConeData, z: &[f64], tol: f64) -> bool {
    if z.len() != cone.degree {
        return false;
    }
    let norm = z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(norm > tol) {
        return false;
    }
    cone.image(z).iter().all(|&r| r >= -tol)
}

/// Cone-feasible members of `{M⁻¹(M v)₊, M⁻¹(−M v)₊}`, in that order.
pub fn project_heuristic(cone: &ConeData, v: &[f64]) -> Vec<Vec<f64>> {
    if v.len() != cone.degree {
        return Vec::new();
    }
    let mv = cone.image(v);
    [1.0, -1.0]
        .iter()
        .map(|&sign| {
            let y: Vec<f64> = mv.iter().map(|r| (sign * r).max(0.0)).collect();
            cone.preimage_nonnegative(&y).expect("length checked")
        })
        .filter(|z| in_cone(cone, z, 0.0))
        .collect()
}

/// Skew polynomial `g(ξ) = Σ_{d=1}^D z_d ξ^d + c`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkewPoly {
    pub z: Vec<f64>,
    pub c: f64,
}

impl SkewPoly {
    pub fn new(z: Vec<f64>, c: f64) -> Self {
        Self { z, c }
    }

    pub fn degree(&self) -> usize {
        self.z.len()
    }

    pub fn to_uni(&self) -> UniPoly {
        let mut coeffs = Vec::with_capacity(self.z.len() + 1);
        coeffs.push(self.c);
        coeffs.extend_from_slice(&self.z);
        UniPoly::new(coeffs)
    }

    pub fn eval(&self, xi: f64) -> f64 {
        self.z.iter().rev().fold(0.0, |acc, c| acc * xi + c) * xi + self.c
    }

    pub fn derivative(&self, xi: f64) -> f64 {
        self.z
            .iter()
            .enumerate()
            .rev()
            .fold(0.0, |acc, (d, c)| acc * xi + (d + 1) as f64 * c)
    }

    pub fn in_cone(&self, cone: &ConeData, tol: f64) -> bool {
        in_cone(cone, &self.z, tol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx_eq(a: &DMatrix<f64>, b: &[&[f64]]) {
        for (i, row) in b.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                assert!((a[(i, j)] - v).abs() < 1e-15, "entry ({i},{j})");
            }
        }
    }

    #[test]
    fn degree_one_and_three() {
        let c = build_cone(1).unwrap();
        approx_eq(&c.m_tilde, &[&[1.0]]);
        approx_eq(&c.m, &[&[1.0]]);

        let c = build_cone(3).unwrap();
        approx_eq(
            &c.m_tilde,
            &[&[1.0, 0.0, 0.0], &[1.0, 0.5, 0.0], &[1.0, 1.0, 1.0]],
        );
        approx_eq(
            &c.m,
            &[&[1.0, 0.0, 0.0], &[1.0, 1.0, 0.0], &[1.0, 2.0, 3.0]],
        );
    }

    #[test]
    fn degree_twenty_structure() {
        let c = build_cone(20).unwrap();
        for j in 0..20 {
            assert_eq!(c.m_tilde[(19, j)], 1.0);
            assert_eq!(c.m_tilde[(j, 0)], 1.0);
        }
        assert!((c.m_tilde[(10, 10)] - 1.0 / 92378.0).abs() < 1e-20);
        assert!(c.m.lower_triangle() == c.m);
        assert!((0..20).all(|i| c.m[(i, i)] > 0.0));
    }

    #[test]
    fn bounds_examples() {
        let c = build_cone(3).unwrap();
        assert_eq!(bernstein_bounds(&c, &[2.5, 0.0, 0.0]).unwrap(), (2.5, 2.5));
        assert_eq!(bernstein_bounds(&c, &[0.0, 1.0, 0.0]).unwrap(), (0.0, 1.0));
        assert!(bernstein_bounds(&c, &[1.0]).is_err());
    }

    #[test]
    fn membership_examples() {
        let c = build_cone(3).unwrap();
        assert!(in_cone(&c, &[1.0, 0.0, 0.0], CONE_TOL));
        assert!(!in_cone(&c, &[-1.0, 0.0, 0.0], CONE_TOL));
        assert!(!in_cone(&c, &[0.0, 0.0, 0.0], CONE_TOL));
        let c2 = build_cone(2).unwrap();
        assert_eq!(c2.image(&[-1.0, 1.0]), vec![-1.0, 1.0]);
        assert!(!in_cone(&c2, &[-1.0, 1.0], CONE_TOL));
    }

    #[test]
    fn cone_is_sufficient_not_necessary() {
        // g(ξ) = 0.75ξ − 1.5ξ² + ξ³ has g′ = 3(ξ − 1/2)² ≥ 0, yet the Bernstein
        // coefficients of g′ are (0.75, −0.75, 0.75).
        let c = build_cone(3).unwrap();
        let g = SkewPoly::new(vec![0.75, -1.5, 1.0], 0.0);
        for i in 0..=1000 {
            assert!(g.derivative(i as f64 / 1000.0) >= 0.0);
        }
        let mz = c.image(&g.z);
        assert!((mz[1] + 0.75).abs() < 1e-15);
        assert!(!g.in_cone(&c, 0.0));
        assert!(!g.in_cone(&c, CONE_TOL));
    }

    #[test]
    fn projection_fixed_point_and_sign() {
        let c = build_cone(4).unwrap();
        let w = vec![0.5, 0.3, -0.1, 0.05];
        assert!(in_cone(&c, &w, 0.0));
        let cands = project_heuristic(&c, &w);
        assert_eq!(cands.len(), 1);
        for (a, b) in cands[0].iter().zip(&w) {
            assert!((a - b).abs() < 1e-14);
        }
        let neg: Vec<f64> = w.iter().map(|x| -x).collect();
        let cands = project_heuristic(&c, &neg);
        assert_eq!(cands.len(), 1);
        for (a, b) in cands[0].iter().zip(&w) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn projection_of_mixed_vector_is_feasible() {
        let c = build_cone(6).unwrap();
        let v = vec![1.0, -7.0, 3.0, 11.0, -4.0, 0.5];
        let cands = project_heuristic(&c, &v);
        assert!(!cands.is_empty());
        for z in cands {
            assert!(c.image(&z).iter().all(|&r| r >= 0.0));
            assert!(in_cone(&c, &z, 0.0));
        }
    }

    #[test]
    fn skew_eval_matches_unipoly() {
        let g = SkewPoly::new(vec![2.0, 3.0], 0.5);
        let u = g.to_uni();
        for i in 0..=10 {
            let x = i as f64 / 10.0;
            assert!((g.eval(x) - u.eval(x)).abs() < 1e-14);
            assert!((g.derivative(x) - u.derivative().eval(x)).abs() < 1e-14);
        }
    }
}
