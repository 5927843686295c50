//! Variance quadratic forms of skewed functions.
//!
//! For `g(ξ) = Σ_{d=1}^D z_d ξ^d + c` and `f: [0,1]^K → [0,1]`, the variance of
//! `g∘f` is `zᵀBz` and the variance of its `k`-th first-order ANOVA term is
//! `zᵀA_k z`, independently of `c`. Both matrices come from exact moments of
//! powers of `f`:
//!
//! * `B = B⁽¹⁾ − b⁽²⁾b⁽²⁾ᵀ` with `[B⁽¹⁾]_{ij} = ∫ f^{i+j}` and `b⁽²⁾_i = ∫ f^i`;
//! * `A_k = A⁽¹⁾(k) − b⁽²⁾b⁽²⁾ᵀ` with `[A⁽¹⁾(k)]_{ij} = ∫ m_i m_j dx_k`, where
//!   `m_i(x_k) = ∫ f^i dx_{K\k}`.

use std::collections::BTreeMap;

use log::debug;
use nalgebra::{DMatrix, DVector};
use twofloat::TwoFloat;

use crate::bernstein::ConeData;
use crate::error::{Error, Result};
use crate::numeric::{binomial, CompensatedSum};
use crate::polynomial::MultiPoly;

/// Slack allowed on either side of `[0, 1]` by the range check.
pub const RANGE_SLACK: f64 = 1e-9;
const SAMPLES_PER_AXIS: usize = 51;

#[derive(Clone, Debug)]
pub struct QuadForms {
    pub degree: usize,
    pub num_vars: usize,
    /// `μ_d = ∫ f^d` for `d = 0..=2D`.
    pub moments: Vec<f64>,
    pub b1: DMatrix<f64>,
    pub b2: DVector<f64>,
    pub a1: Vec<DMatrix<f64>>,
    pub b_mat: DMatrix<f64>,
    pub a_k: Vec<DMatrix<f64>>,
    pub a_sum: DMatrix<f64>,
    /// Equilibration `s_d = μ_{2d}^{-1/2}`.
    pub scale: Vec<f64>,
    /// `M⁻ᵀ B M⁻¹`: the variance form in the coordinates `y = M z`.
    pub b_lift: DMatrix<f64>,
    /// `M⁻ᵀ A M⁻¹`, with `A = Σ_k A_k`.
    pub a_lift: DMatrix<f64>,
}

/// Assembles `B⁽¹⁾`, `b⁽²⁾`, `A⁽¹⁾(k)` and the derived forms for skew degree `degree`.
pub fn build_forms(f: &MultiPoly, degree: usize) -> Result<QuadForms> {
    if degree == 0 {
        return Err(Error::InvalidArgument(
            "skew degree must be positive".into(),
        ));
    }
    check_unit_range(f)?;
    let d = degree;
    let k = f.num_vars();

    // Moments and marginals are accumulated in double-double arithmetic: the
    // small eigenvalues of B sit many decades below its entries, so each entry
    // has to come out correctly rounded.
    let base = DdPoly::from_multi(f);
    let mut powers = Vec::with_capacity(2 * d);
    powers.push(base.clone());
    for n in 1..2 * d {
        powers.push(powers[n - 1].mul(&base));
    }
    let mut mu = Vec::with_capacity(2 * d + 1);
    mu.push(TwoFloat::from(1.0));
    mu.extend(powers.iter().map(DdPoly::integrate_all));
    let moments: Vec<f64> = mu.iter().map(TwoFloat::hi).collect();

    let outer_dd = |i: usize, j: usize| mu[i + 1] * mu[j + 1];
    let b1 = DMatrix::from_fn(d, d, |i, j| moments[i + j + 2]);
    let b2 = DVector::from_fn(d, |i, _| moments[i + 1]);
    let b_dd: Vec<TwoFloat> = (0..d * d)
        .map(|n| mu[n / d + n % d + 2] - outer_dd(n / d, n % d))
        .collect();
    let b_mat = DMatrix::from_fn(d, d, |i, j| b_dd[i * d + j].hi());

    let mut a1 = Vec::with_capacity(k);
    let mut a_k = Vec::with_capacity(k);
    let mut a_sum_dd = vec![TwoFloat::from(0.0); d * d];
    for var in 0..k {
        let marginals: Vec<Vec<TwoFloat>> = powers[..d].iter().map(|p| p.marginal(var)).collect();
        let mut m = DMatrix::zeros(d, d);
        let mut centered = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in i..d {
                let v = unit_inner(&marginals[i], &marginals[j]);
                let c = v - outer_dd(i, j);
                a_sum_dd[i * d + j] += c;
                if i != j {
                    a_sum_dd[j * d + i] += c;
                }
                m[(i, j)] = v.hi();
                m[(j, i)] = v.hi();
                centered[(i, j)] = c.hi();
                centered[(j, i)] = c.hi();
            }
        }
        a1.push(m);
        a_k.push(centered);
    }
    let a_sum = DMatrix::from_fn(d, d, |i, j| a_sum_dd[i * d + j].hi());

    // In `y = M z` the entries of feasible `y` are nonnegative and the forms
    // are well scaled, but forming them costs up to cond(M)² in relative
    // accuracy, which the double-double products absorb.
    let m_inv = cone_inverse_dd(d);
    let b_lift = congruence_dd(&m_inv, &b_dd, d);
    let a_lift = congruence_dd(&m_inv, &a_sum_dd, d);
    let scale = (1..=d)
        .map(|i| moments[2 * i].max(1e-300).powf(-0.5))
        .collect();

    debug!(
        "built quadratic forms: K={k}, D={d}, mu_2D={:e}",
        moments[2 * d]
    );
    Ok(QuadForms {
        degree: d,
        num_vars: k,
        moments,
        b1,
        b2,
        a1,
        b_mat,
        a_k,
        a_sum,
        scale,
        b_lift,
        a_lift,
    })
}

/// `M⁻¹` of the cone matrix, row-major, by forward substitution.
fn cone_inverse_dd(d: usize) -> Vec<TwoFloat> {
    let m =
        |i: usize, j: usize| TwoFloat::from(binomial(i, j)) / binomial(d - 1, j) * (j + 1) as f64;
    let zero = TwoFloat::from(0.0);
    let mut inv = vec![zero; d * d];
    for j in 0..d {
        inv[j * d + j] = TwoFloat::from(1.0) / m(j, j);
        for i in j + 1..d {
            let mut acc = zero;
            for k in j..i {
                acc += m(i, k) * inv[k * d + j];
            }
            inv[i * d + j] = -acc / m(i, i);
        }
    }
    inv
}

/// `Xᵀ Q X` for row-major `X` and symmetric `Q`, rounded to `f64` at the end.
fn congruence_dd(x: &[TwoFloat], q: &[TwoFloat], d: usize) -> DMatrix<f64> {
    let zero = TwoFloat::from(0.0);
    let mut qx = vec![zero; d * d];
    for i in 0..d {
        for j in 0..d {
            let mut acc = zero;
            for k in 0..d {
                acc += q[i * d + k] * x[k * d + j];
            }
            qx[i * d + j] = acc;
        }
    }
    let mut out = DMatrix::zeros(d, d);
    for p in 0..d {
        for r in p..d {
            let mut acc = zero;
            for i in 0..d {
                acc += x[i * d + p] * qx[i * d + r];
            }
            out[(p, r)] = acc.hi();
            out[(r, p)] = acc.hi();
        }
    }
    out
}

/// `∫_0^1 p q` for coefficient vectors, without forming the product.
fn unit_inner(p: &[TwoFloat], q: &[TwoFloat]) -> TwoFloat {
    let mut acc = TwoFloat::from(0.0);
    for (a, ca) in p.iter().enumerate() {
        for (b, cb) in q.iter().enumerate() {
            acc += ca * cb / (a + b + 1) as f64;
        }
    }
    acc
}

/// Sparse polynomial with double-double coefficients.
#[derive(Clone)]
struct DdPoly {
    terms: Vec<(Vec<u32>, TwoFloat)>,
}

impl DdPoly {
    fn from_multi(f: &MultiPoly) -> Self {
        Self {
            terms: f
                .terms()
                .map(|(e, c)| (e.to_vec(), TwoFloat::from(c)))
                .collect(),
        }
    }

    fn mul(&self, other: &DdPoly) -> DdPoly {
        let mut acc: BTreeMap<Vec<u32>, TwoFloat> = BTreeMap::new();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                *acc.entry(e).or_insert_with(|| TwoFloat::from(0.0)) += ca * cb;
            }
        }
        DdPoly {
            terms: acc.into_iter().collect(),
        }
    }

    fn integrate_all(&self) -> TwoFloat {
        let mut acc = TwoFloat::from(0.0);
        for (e, c) in &self.terms {
            let den: f64 = e.iter().map(|&p| (p + 1) as f64).product();
            acc += c / den;
        }
        acc
    }

    /// Coefficients in `x_var` of `∫ p dx_{K\var}`.
    fn marginal(&self, var: usize) -> Vec<TwoFloat> {
        let deg = self.terms.iter().map(|(e, _)| e[var]).max().unwrap_or(0) as usize;
        let mut out = vec![TwoFloat::from(0.0); deg + 1];
        for (e, c) in &self.terms {
            let den: f64 = e
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != var)
                .map(|(_, &p)| (p + 1) as f64)
                .product();
            out[e[var] as usize] += c / den;
        }
        out
    }
}

/// `zᵀ Q z` with compensated accumulation.
pub fn quad_form(q: &DMatrix<f64>, z: &[f64]) -> f64 {
    let mut acc = CompensatedSum::new();
    for i in 0..z.len() {
        for j in 0..z.len() {
            acc.add(z[i] * q[(i, j)] * z[j]);
        }
    }
    acc.value()
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

fn norm_sq(z: &[f64]) -> f64 {
    z.iter().map(|v| v * v).sum()
}

fn clamp_round_off(v: f64, scale: f64) -> f64 {
    if v < 0.0 && v >= -1e-12 * scale.max(1.0) {
        0.0
    } else {
        v
    }
}

impl QuadForms {
    fn check_len(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.degree {
            return Err(Error::DimensionMismatch {
                expected: self.degree,
                found: z.len(),
            });
        }
        Ok(())
    }

    /// `σ² = zᵀBz` of `g∘f`.
    pub fn sigma_total(&self, z: &[f64]) -> Result<f64> {
        self.check_len(z)?;
        let v = quad_form(&self.b_mat, z);
        Ok(clamp_round_off(v, max_abs(&self.b_mat) * norm_sq(z)))
    }

    /// `σ_k² = zᵀA_k z` of `g∘f`, `k` 0-based.
    pub fn sigma_k(&self, k: usize, z: &[f64]) -> Result<f64> {
        self.check_len(z)?;
        let a = self.a_k.get(k).ok_or(Error::IndexOutOfRange {
            index: k,
            len: self.num_vars,
        })?;
        let v = quad_form(a, z);
        Ok(clamp_round_off(v, max_abs(a) * norm_sq(z)))
    }

    /// `zᵀAz / zᵀBz`, the first-order share of the variance of `g∘f`.
    pub fn rayleigh(&self, z: &[f64]) -> Result<f64> {
        self.check_len(z)?;
        let den = quad_form(&self.b_mat, z);
        if den <= 1e-14 * max_abs(&self.b_mat) * norm_sq(z) || den <= 0.0 {
            return Err(Error::DegenerateDenominator { value: den });
        }
        Ok(quad_form(&self.a_sum, z) / den)
    }

    /// The Rayleigh quotient of `z = M⁻¹ y`, evaluated on `y` directly.
    pub fn rayleigh_lifted(&self, y: &[f64]) -> Result<f64> {
        self.check_len(y)?;
        let den = quad_form(&self.b_lift, y);
        if den <= 1e-14 * max_abs(&self.b_lift) * norm_sq(y) || den <= 0.0 {
            return Err(Error::DegenerateDenominator { value: den });
        }
        Ok(quad_form(&self.a_lift, y) / den)
    }

    /// Congruence scaling by `S = diag(s)`; see [`Equilibrated`].
    pub fn equilibrate(&self, cone: &ConeData) -> Result<Equilibrated> {
        if cone.degree != self.degree {
            return Err(Error::DimensionMismatch {
                expected: self.degree,
                found: cone.degree,
            });
        }
        for i in 1..=self.degree {
            if !(self.moments[2 * i] > 0.0) {
                return Err(Error::ZeroMoment { order: 2 * i });
            }
        }
        let s = &self.scale;
        let d = self.degree;
        let b_hat = DMatrix::from_fn(d, d, |i, j| s[i] * self.b_mat[(i, j)] * s[j]);
        let a_hat = DMatrix::from_fn(d, d, |i, j| s[i] * self.a_sum[(i, j)] * s[j]);
        let m_hat = DMatrix::from_fn(d, d, |i, j| cone.m[(i, j)] * s[j]);
        Ok(Equilibrated {
            b_hat,
            a_hat,
            m_hat,
            scale: s.clone(),
        })
    }
}

/// Equilibrated problem data: `B̂ = SBS`, `Â = SAS`, `M̂ = MS`.
///
/// A maximizer `ẑ` of `ẑᵀÂẑ / ẑᵀB̂ẑ` over `M̂ẑ ≥ 0` maps back through `z = Sẑ`.
#[derive(Clone, Debug)]
pub struct Equilibrated {
    pub b_hat: DMatrix<f64>,
    pub a_hat: DMatrix<f64>,
    pub m_hat: DMatrix<f64>,
    pub scale: Vec<f64>,
}

impl Equilibrated {
    pub fn to_original(&self, z_hat: &[f64]) -> Vec<f64> {
        z_hat.iter().zip(&self.scale).map(|(z, s)| z * s).collect()
    }

    pub fn to_scaled(&self, z: &[f64]) -> Vec<f64> {
        z.iter().zip(&self.scale).map(|(z, s)| z / s).collect()
    }
}

/// Verifies that `f` maps the unit cube into `[0, 1]` (up to [`RANGE_SLACK`]).
///
/// Samples a uniform grid (51 points per axis for up to three variables, a
/// Halton set of the same size beyond that) plus every cube corner. For one or
/// two variables the tensor Bernstein coefficients on a uniform subdivision
/// are also inspected: a patch whose coefficients stay in range is certified.
pub fn check_unit_range(f: &MultiPoly) -> Result<()> {
    let k = f.num_vars();
    let lo = -RANGE_SLACK;
    let hi = 1.0 + RANGE_SLACK;
    let check = |x: &[f64]| -> Result<()> {
        let v = f.eval(x)?;
        if !(lo..=hi).contains(&v) {
            return Err(Error::RangeViolation(format!("f({x:?}) = {v}")));
        }
        Ok(())
    };

    if k <= 3 {
        let n = SAMPLES_PER_AXIS;
        let total = n.pow(k as u32);
        let mut x = vec![0.0; k];
        for idx in 0..total {
            let mut r = idx;
            for xv in x.iter_mut() {
                *xv = (r % n) as f64 / (n - 1) as f64;
                r /= n;
            }
            check(&x)?;
        }
    } else {
        let total = SAMPLES_PER_AXIS.pow(3);
        for idx in 1..=total as u64 {
            check(&halton(idx, k))?;
        }
        if k <= 16 {
            for mask in 0u32..(1 << k) {
                let x: Vec<f64> = (0..k).map(|v| ((mask >> v) & 1) as f64).collect();
                check(&x)?;
            }
        }
    }

    if k <= 2 {
        let uncertified = bernstein_uncertified_patches(f, lo, hi);
        if uncertified > 0 {
            log::warn!(
                "range of f certified by sampling only on {uncertified} subdivision patches"
            );
        }
    }
    Ok(())
}

fn halton(index: u64, dims: usize) -> Vec<f64> {
    // First primes, enough for any practical K; larger K reuse scrambled bases.
    const PRIMES: [u64; 24] = [
        2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
    ];
    (0..dims)
        .map(|d| {
            let base = PRIMES[d % PRIMES.len()];
            let mut i = index + (d / PRIMES.len()) as u64 * 7919;
            let mut f = 1.0;
            let mut r = 0.0;
            while i > 0 {
                f /= base as f64;
                r += f * (i % base) as f64;
                i /= base;
            }
            r
        })
        .collect()
}

/// Counts patches of a 16×16 (or 16-interval) subdivision whose Bernstein
/// coefficients leave `[lo, hi]`.
fn bernstein_uncertified_patches(f: &MultiPoly, lo: f64, hi: f64) -> usize {
    const PIECES: usize = 16;
    let k = f.num_vars();
    let deg: Vec<usize> = (0..2)
        .map(|v| if v < k { f.degree_in(v) as usize } else { 0 })
        .collect();
    let mut dense = vec![vec![0.0; deg[1] + 1]; deg[0] + 1];
    for (e, c) in f.terms() {
        let j = if k == 2 { e[1] as usize } else { 0 };
        dense[e[0] as usize][j] += c;
    }
    let h = 1.0 / PIECES as f64;
    let pieces_y = if k == 2 { PIECES } else { 1 };
    let mut bad = 0;
    for px in 0..PIECES {
        for py in 0..pieces_y {
            let (ay, hy) = if k == 2 {
                (py as f64 * h, h)
            } else {
                (0.0, 1.0)
            };
            let shifted = reparam_2d(&dense, px as f64 * h, h, ay, hy);
            let bern = to_bernstein_2d(&shifted);
            if bern.iter().flatten().any(|b| *b < lo || *b > hi) {
                bad += 1;
            }
        }
    }
    bad
}

/// Coefficients of `p(a + h s, b + w t)` in `(s, t)`.
fn reparam_2d(c: &[Vec<f64>], a: f64, h: f64, b: f64, w: f64) -> Vec<Vec<f64>> {
    let rows: Vec<Vec<f64>> = c.iter().map(|row| reparam_1d(row, b, w)).collect();
    let n = c.len();
    let m = rows[0].len();
    let mut out = vec![vec![0.0; m]; n];
    for j in 0..m {
        let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        for (i, v) in reparam_1d(&col, a, h).into_iter().enumerate() {
            out[i][j] = v;
        }
    }
    out
}

fn reparam_1d(c: &[f64], a: f64, h: f64) -> Vec<f64> {
    let n = c.len();
    (0..n)
        .map(|j| {
            let tail: f64 = (j..n)
                .map(|i| c[i] * binomial(i, j) * a.powi((i - j) as i32))
                .sum();
            tail * h.powi(j as i32)
        })
        .collect()
}

fn to_bernstein_1d(a: &[f64]) -> Vec<f64> {
    let n = a.len() - 1;
    (0..=n)
        .map(|k| {
            (0..=k)
                .map(|j| binomial(k, j) / binomial(n, j) * a[j])
                .sum()
        })
        .collect()
}

fn to_bernstein_2d(c: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let rows: Vec<Vec<f64>> = c.iter().map(|r| to_bernstein_1d(r)).collect();
    let n = c.len();
    let m = rows[0].len();
    let mut out = vec![vec![0.0; m]; n];
    for j in 0..m {
        let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        for (i, v) in to_bernstein_1d(&col).into_iter().enumerate() {
            out[i][j] = v;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bernstein::build_cone;

    fn x1() -> MultiPoly {
        MultiPoly::var(1, 0).unwrap()
    }

    #[test]
    fn identity_function_moments() {
        let qf = build_forms(&x1(), 2).unwrap();
        let mu = [1.0, 0.5, 1.0 / 3.0, 0.25, 0.2];
        for (a, b) in qf.moments.iter().zip(mu) {
            assert!((a - b).abs() < 1e-16);
        }
        let expect_b = [[1.0 / 12.0, 1.0 / 12.0], [1.0 / 12.0, 4.0 / 45.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((qf.b1[(i, j)] - mu[i + j + 2]).abs() < 1e-16);
                assert!((qf.b_mat[(i, j)] - expect_b[i][j]).abs() < 1e-15);
            }
        }
        // One variable: marginalizing over nothing leaves f, so A_1 = B.
        for i in 0..2 {
            for j in 0..2 {
                assert!((qf.a_k[0][(i, j)] - qf.b_mat[(i, j)]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_vector_gives_zero_variance() {
        let qf = build_forms(&x1(), 3).unwrap();
        assert_eq!(qf.sigma_total(&[0.0; 3]).unwrap(), 0.0);
        assert_eq!(qf.sigma_k(0, &[0.0; 3]).unwrap(), 0.0);
        assert!(qf.sigma_k(1, &[0.0; 3]).is_err());
        assert!(matches!(
            qf.rayleigh(&[0.0; 3]),
            Err(Error::DegenerateDenominator { .. })
        ));
    }

    #[test]
    fn range_violations_are_rejected() {
        let too_big = x1().scale(1.5);
        assert!(matches!(
            build_forms(&too_big, 2),
            Err(Error::RangeViolation(_))
        ));
        let negative = x1().sub(&MultiPoly::constant(1, 0.2)).unwrap();
        assert!(matches!(
            check_unit_range(&negative),
            Err(Error::RangeViolation(_))
        ));
        let bump = MultiPoly::from_terms(1, [(vec![1], 4.0), (vec![2], -4.0)]).unwrap();
        assert!(check_unit_range(&bump).is_ok());
        let k4 = MultiPoly::from_terms(4, [(vec![1, 1, 1, 1], 1.0)]).unwrap();
        assert!(check_unit_range(&k4).is_ok());
    }

    #[test]
    fn constant_function_scale_is_identity() {
        let qf = build_forms(&MultiPoly::constant(2, 1.0), 3).unwrap();
        assert_eq!(qf.scale, vec![1.0; 3]);
        let cone = build_cone(3).unwrap();
        let eq = qf.equilibrate(&cone).unwrap();
        assert_eq!(eq.m_hat, cone.m);
        assert_eq!(eq.b_hat, qf.b_mat);
    }

    #[test]
    fn zero_function_has_zero_moments() {
        let qf = build_forms(&MultiPoly::zero(2), 2).unwrap();
        let cone = build_cone(2).unwrap();
        assert!(matches!(
            qf.equilibrate(&cone),
            Err(Error::ZeroMoment { order: 2 })
        ));
    }

    #[test]
    fn bernstein_reparam_matches_pointwise() {
        let c = vec![vec![0.1, 0.2, 0.3], vec![0.0, 0.5, -0.2]];
        let r = reparam_2d(&c, 0.25, 0.5, 0.5, 0.25);
        let eval = |c: &[Vec<f64>], x: f64, y: f64| -> f64 {
            let mut s = 0.0;
            for (i, row) in c.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    s += v * x.powi(i as i32) * y.powi(j as i32);
                }
            }
            s
        };
        for (s, t) in [(0.0, 0.0), (0.3, 0.7), (1.0, 1.0)] {
            let a = eval(&r, s, t);
            let b = eval(&c, 0.25 + 0.5 * s, 0.5 + 0.25 * t);
            assert!((a - b).abs() < 1e-14);
        }
        // Corner Bernstein coefficients interpolate the corner values.
        let b = to_bernstein_2d(&c);
        assert!((b[0][0] - eval(&c, 0.0, 0.0)).abs() < 1e-15);
        assert!((b[1][2] - eval(&c, 1.0, 1.0)).abs() < 1e-15);
    }

    #[test]
    fn lifted_forms_match_congruence() {
        let f = MultiPoly::from_terms(
            2,
            vec![(vec![1, 0], 0.5), (vec![1, 1], 0.25), (vec![0, 2], 0.25)],
        )
        .unwrap();
        let qf = build_forms(&f, 4).unwrap();
        let cone = build_cone(4).unwrap();
        let inv = cone.m.clone().try_inverse().unwrap();
        let b = inv.transpose() * &qf.b_mat * &inv;
        let a = inv.transpose() * &qf.a_sum * &inv;
        for (x, y) in qf.b_lift.iter().zip(b.iter()) {
            assert!((x - y).abs() < 1e-12 * max_abs(&b));
        }
        for (x, y) in qf.a_lift.iter().zip(a.iter()) {
            assert!((x - y).abs() < 1e-12 * max_abs(&a));
        }
        let z = [0.3, -0.1, 0.2, 0.05];
        let y = cone.image(&z);
        let direct = qf.rayleigh(&z).unwrap();
        let lifted = qf.rayleigh_lifted(&y).unwrap();
        assert!((direct - lifted).abs() < 1e-12);
    }
}
