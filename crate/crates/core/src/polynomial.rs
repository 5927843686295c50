//! Sparse multivariate polynomials over the unit cube.
//!
//! A [`MultiPoly`] stores a canonical map from exponent tuples to nonzero
//! coefficients. Terms are kept in lexicographic exponent order, which is also
//! the order used for evaluation and serialization, so every output derived
//! from a polynomial is bit-deterministic.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, CompensatedSum};

pub type Exponents = Vec<u32>;

/// Real polynomial in `num_vars` variables on `[0, 1]^num_vars`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolyWire", into = "PolyWire")]
pub struct MultiPoly {
    num_vars: usize,
    terms: BTreeMap<Exponents, f64>,
}

impl MultiPoly {
    pub fn zero(num_vars: usize) -> Self {
        Self {
            num_vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(num_vars: usize, c: f64) -> Self {
        let mut p = Self::zero(num_vars);
        p.insert(vec![0; num_vars], c);
        p
    }

    /// The coordinate function `x_var` (0-based).
    pub fn var(num_vars: usize, var: usize) -> Result<Self> {
        if var >= num_vars {
            return Err(Error::IndexOutOfRange {
                index: var,
                len: num_vars,
            });
        }
        let mut exp = vec![0; num_vars];
        exp[var] = 1;
        let mut p = Self::zero(num_vars);
        p.insert(exp, 1.0);
        Ok(p)
    }

    /// Builds a polynomial from `(exponents, coefficient)` pairs; repeated
    /// exponents are summed.
    pub fn from_terms<I>(num_vars: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Exponents, f64)>,
    {
        if num_vars == 0 {
            return Err(Error::InvalidArgument(
                "polynomial needs at least one variable".into(),
            ));
        }
        let mut acc: BTreeMap<Exponents, f64> = BTreeMap::new();
        for (exp, c) in terms {
            if exp.len() != num_vars {
                return Err(Error::DimensionMismatch {
                    expected: num_vars,
                    found: exp.len(),
                });
            }
            if !c.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "non-finite coefficient {c} for exponent {exp:?}"
                )));
            }
            *acc.entry(exp).or_insert(0.0) += c;
        }
        acc.retain(|_, c| *c != 0.0);
        Ok(Self {
            num_vars,
            terms: acc,
        })
    }

    fn insert(&mut self, exp: Exponents, c: f64) {
        if c != 0.0 {
            self.terms.insert(exp, c);
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    /// Terms in lexicographic exponent order.
    pub fn terms(&self) -> impl Iterator<Item = (&[u32], f64)> + '_ {
        self.terms.iter().map(|(e, c)| (e.as_slice(), *c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, exp: &[u32]) -> f64 {
        self.terms.get(exp).copied().unwrap_or(0.0)
    }

    /// Highest exponent of `var` over all terms.
    pub fn degree_in(&self, var: usize) -> u32 {
        self.terms.keys().map(|e| e[var]).max().unwrap_or(0)
    }

    pub fn max_degree(&self) -> u32 {
        (0..self.num_vars)
            .map(|v| self.degree_in(v))
            .max()
            .unwrap_or(0)
    }

    /// True when every term has zero exponent outside the variables in `vars`.
    pub fn depends_only_on(&self, vars: &[usize]) -> bool {
        self.terms.keys().all(|e| {
            e.iter()
                .enumerate()
                .all(|(v, &p)| p == 0 || vars.contains(&v))
        })
    }

    fn check_dims(&self, other: &MultiPoly) -> Result<()> {
        if self.num_vars != other.num_vars {
            return Err(Error::DimensionMismatch {
                expected: self.num_vars,
                found: other.num_vars,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &MultiPoly) -> Result<MultiPoly> {
        self.check_dims(other)?;
        let mut terms = self.terms.clone();
        for (e, c) in &other.terms {
            *terms.entry(e.clone()).or_insert(0.0) += c;
        }
        terms.retain(|_, c| *c != 0.0);
        Ok(MultiPoly {
            num_vars: self.num_vars,
            terms,
        })
    }

    pub fn sub(&self, other: &MultiPoly) -> Result<MultiPoly> {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, a: f64) -> MultiPoly {
        let mut terms = BTreeMap::new();
        for (e, c) in &self.terms {
            let v = a * c;
            if v != 0.0 {
                terms.insert(e.clone(), v);
            }
        }
        MultiPoly {
            num_vars: self.num_vars,
            terms,
        }
    }

    pub fn mul(&self, other: &MultiPoly) -> Result<MultiPoly> {
        self.check_dims(other)?;
        let mut terms: BTreeMap<Exponents, f64> = BTreeMap::new();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e: Exponents = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                *terms.entry(e).or_insert(0.0) += ca * cb;
            }
        }
        terms.retain(|_, c| *c != 0.0);
        Ok(MultiPoly {
            num_vars: self.num_vars,
            terms,
        })
    }

    /// `self^d` by binary exponentiation; `pow(0)` is the constant one.
    pub fn pow(&self, d: u32) -> MultiPoly {
        let mut result = MultiPoly::constant(self.num_vars, 1.0);
        let mut base = self.clone();
        let mut d = d;
        while d > 0 {
            if d & 1 == 1 {
                result = result.mul(&base).expect("same dimension");
            }
            d >>= 1;
            if d > 0 {
                base = base.mul(&base).expect("same dimension");
            }
        }
        result
    }

    /// `[p, p^2, ..., p^n]` by successive multiplication.
    pub fn powers(&self, n: usize) -> Vec<MultiPoly> {
        let mut out: Vec<MultiPoly> = Vec::with_capacity(n);
        for i in 0..n {
            let next = match i {
                0 => self.clone(),
                _ => out[i - 1].mul(self).expect("same dimension"),
            };
            out.push(next);
        }
        out
    }

    /// Exact integral over `[0, 1]^K`.
    pub fn integrate_all(&self) -> f64 {
        compensated_sum(self.terms.iter().map(|(e, c)| c * monomial_integral(e)))
    }

    /// Integrates out every variable not flagged in `keep`; the result still
    /// has `num_vars` variables but depends only on the kept ones.
    pub fn integrate_out(&self, keep: &[bool]) -> Result<MultiPoly> {
        if keep.len() != self.num_vars {
            return Err(Error::DimensionMismatch {
                expected: self.num_vars,
                found: keep.len(),
            });
        }
        let mut acc: BTreeMap<Exponents, CompensatedSum> = BTreeMap::new();
        for (e, c) in &self.terms {
            let mut factor = 1.0;
            let mut reduced = e.clone();
            for (v, p) in reduced.iter_mut().enumerate() {
                if !keep[v] {
                    factor /= (*p + 1) as f64;
                    *p = 0;
                }
            }
            acc.entry(reduced).or_default().add(c * factor);
        }
        let terms = acc
            .into_iter()
            .map(|(e, s)| (e, s.value()))
            .filter(|(_, c)| *c != 0.0)
            .collect();
        Ok(MultiPoly {
            num_vars: self.num_vars,
            terms,
        })
    }

    /// Integrates out all variables but `var`, returning a polynomial in `x_var`.
    pub fn integrate_except(&self, var: usize) -> Result<UniPoly> {
        if var >= self.num_vars {
            return Err(Error::IndexOutOfRange {
                index: var,
                len: self.num_vars,
            });
        }
        let deg = self.degree_in(var) as usize;
        let mut acc = vec![CompensatedSum::new(); deg + 1];
        for (e, c) in &self.terms {
            let mut factor = 1.0;
            for (v, &p) in e.iter().enumerate() {
                if v != var {
                    factor /= (p + 1) as f64;
                }
            }
            acc[e[var] as usize].add(c * factor);
        }
        Ok(UniPoly::new(acc.iter().map(|s| s.value()).collect()))
    }

    /// Evaluates at `x`, summing terms in lexicographic exponent order.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.num_vars {
            return Err(Error::DimensionMismatch {
                expected: self.num_vars,
                found: x.len(),
            });
        }
        // Power tables per variable, filled by repeated multiplication.
        let tables: Vec<Vec<f64>> = (0..self.num_vars)
            .map(|v| {
                let deg = self.degree_in(v) as usize;
                let mut t = Vec::with_capacity(deg + 1);
                let mut acc = 1.0;
                for _ in 0..=deg {
                    t.push(acc);
                    acc *= x[v];
                }
                t
            })
            .collect();
        Ok(compensated_sum(self.terms.iter().map(|(e, c)| {
            e.iter()
                .enumerate()
                .fold(*c, |acc, (v, &p)| acc * tables[v][p as usize])
        })))
    }

    /// Univariate polynomial in `var` when `self` depends only on that variable.
    pub fn to_uni(&self, var: usize) -> Result<UniPoly> {
        if var >= self.num_vars {
            return Err(Error::IndexOutOfRange {
                index: var,
                len: self.num_vars,
            });
        }
        if !self.depends_only_on(&[var]) {
            return Err(Error::InvalidArgument(format!(
                "polynomial depends on variables other than x{var}"
            )));
        }
        let mut coeffs = vec![0.0; self.degree_in(var) as usize + 1];
        for (e, c) in &self.terms {
            coeffs[e[var] as usize] += c;
        }
        Ok(UniPoly::new(coeffs))
    }
}

/// `⟨p, q⟩ = ∫_{[0,1]^K} p q dx`, computed without forming the product.
pub fn inner_product(p: &MultiPoly, q: &MultiPoly) -> Result<f64> {
    p.check_dims(q)?;
    let mut acc = CompensatedSum::new();
    for (ea, ca) in &p.terms {
        for (eb, cb) in &q.terms {
            let w = ea
                .iter()
                .zip(eb)
                .fold(1.0, |w, (a, b)| w / (a + b + 1) as f64);
            acc.add(ca * cb * w);
        }
    }
    Ok(acc.value())
}

/// `∫_{[0,1]^K} x^α dx = ∏ 1/(α_k + 1)`.
fn monomial_integral(exp: &[u32]) -> f64 {
    exp.iter().fold(1.0, |acc, &p| acc / (p + 1) as f64)
}

/// `g(f(x))` as a multivariate polynomial.
pub fn compose_uni_multi(g: &UniPoly, f: &MultiPoly) -> MultiPoly {
    let k = f.num_vars();
    let deg = g.degree();
    let mut acc: BTreeMap<Exponents, CompensatedSum> = BTreeMap::new();
    let mut push = |p: &MultiPoly, w: f64| {
        if w == 0.0 {
            return;
        }
        for (e, c) in p.terms() {
            acc.entry(e.to_vec()).or_default().add(w * c);
        }
    };
    push(&MultiPoly::constant(k, 1.0), g.coeff(0));
    if deg >= 1 {
        for (i, p) in f.powers(deg).iter().enumerate() {
            push(p, g.coeff(i + 1));
        }
    }
    let terms = acc
        .into_iter()
        .map(|(e, s)| (e, s.value()))
        .filter(|(_, c)| *c != 0.0)
        .collect();
    MultiPoly { num_vars: k, terms }
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (e, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}")?;
            for (v, &p) in e.iter().enumerate() {
                match p {
                    0 => {}
                    1 => write!(f, "*x{}", v + 1)?,
                    _ => write!(f, "*x{}^{p}", v + 1)?,
                }
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct TermWire {
    exp: Vec<u32>,
    coeff: f64,
}

#[derive(Serialize, Deserialize)]
struct PolyWire {
    num_vars: usize,
    terms: Vec<TermWire>,
}

impl TryFrom<PolyWire> for MultiPoly {
    type Error = Error;

    fn try_from(w: PolyWire) -> Result<Self> {
        MultiPoly::from_terms(w.num_vars, w.terms.into_iter().map(|t| (t.exp, t.coeff)))
    }
}

impl From<MultiPoly> for PolyWire {
    fn from(p: MultiPoly) -> Self {
        PolyWire {
            num_vars: p.num_vars,
            terms: p
                .terms
                .into_iter()
                .map(|(exp, coeff)| TermWire { exp, coeff })
                .collect(),
        }
    }
}

/// Dense univariate polynomial, `coeffs[d]` multiplying `ξ^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniPoly {
    coeffs: Vec<f64>,
}

impl UniPoly {
    /// Trailing zero coefficients are dropped.
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, d: usize) -> f64 {
        self.coeffs.get(d).copied().unwrap_or(0.0)
    }

    /// Degree, with the zero polynomial reported as degree 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn derivative(&self) -> UniPoly {
        UniPoly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(d, c)| d as f64 * c)
                .collect(),
        )
    }

    pub fn add(&self, other: &UniPoly) -> UniPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        UniPoly::new((0..n).map(|d| self.coeff(d) + other.coeff(d)).collect())
    }

    pub fn mul(&self, other: &UniPoly) -> UniPoly {
        if self.is_zero() || other.is_zero() {
            return UniPoly::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        UniPoly::new(out)
    }

    /// `∫_0^1 p(ξ) dξ`.
    pub fn integrate_unit(&self) -> f64 {
        compensated_sum(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(d, c)| c / (d + 1) as f64),
        )
    }

    /// Embeds the polynomial as a function of `x_var` in `num_vars` variables.
    pub fn to_multi(&self, num_vars: usize, var: usize) -> Result<MultiPoly> {
        if var >= num_vars {
            return Err(Error::IndexOutOfRange {
                index: var,
                len: num_vars,
            });
        }
        MultiPoly::from_terms(
            num_vars,
            self.coeffs.iter().enumerate().map(|(d, &c)| {
                let mut e = vec![0; num_vars];
                e[var] = d as u32;
                (e, c)
            }),
        )
    }
}
