//! ANOVA (functional) decomposition of polynomials on the unit cube.
//!
//! Components are built by the subset recursion
//! `f_S = ∫ f dx_{K\S} − Σ_{U ⊊ S} f_U`, in order of increasing `|S|`, with
//! every integral evaluated exactly on the polynomial terms.

use std::collections::HashMap;

use log::warn;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::polynomial::{inner_product, MultiPoly, UniPoly};

/// Largest `K` accepted for decompositions of order 2.
pub const MAX_VARS_ORDER_TWO: usize = 20;
/// Largest `K` accepted for decompositions of order above 2.
pub const MAX_VARS_UNRESTRICTED: usize = 12;

const VARIANCE_TOL: f64 = 1e-12;

/// One ANOVA term `f_S` with its variance `σ_S²`.
#[derive(Clone, Debug, Serialize)]
pub struct Component {
    /// Sorted 0-based variable indices.
    pub subset: Vec<usize>,
    pub poly: MultiPoly,
    pub variance: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AnovaResult {
    pub num_vars: usize,
    /// `f_∅`.
    pub mean: f64,
    /// Components with `1 ≤ |S| ≤ max_order`, ordered by size then lexicographically.
    pub components: Vec<Component>,
    /// `σ² = ∫f² − (∫f)²`, computed independently of the components.
    pub total_variance: f64,
    pub max_order: usize,
}

impl AnovaResult {
    pub fn component(&self, subset: &[usize]) -> Option<&Component> {
        self.components.iter().find(|c| c.subset == subset)
    }

    /// `σ_S²`; the empty set has variance zero.
    pub fn variance(&self, subset: &[usize]) -> Option<f64> {
        if subset.is_empty() {
            return Some(0.0);
        }
        self.component(subset).map(|c| c.variance)
    }

    /// Sum of `σ_S²` over `1 ≤ |S| ≤ d`.
    pub fn variance_up_to(&self, d: usize) -> f64 {
        self.components
            .iter()
            .filter(|c| c.subset.len() <= d)
            .map(|c| c.variance)
            .sum()
    }

    /// `Σ_{|S|≤d} σ_S² / σ²`.
    pub fn superposition_ratio(&self, d: usize) -> Result<f64> {
        if d > self.max_order {
            return Err(Error::InvalidArgument(format!(
                "order {d} exceeds computed order {}",
                self.max_order
            )));
        }
        if self.total_variance <= 0.0 {
            return Err(Error::ZeroVariance);
        }
        Ok(self.variance_up_to(d) / self.total_variance)
    }

    /// Whether `Σ_{|S|≤d} σ_S² ≥ (1 − ε) σ²`.
    pub fn has_effective_dimension(&self, d: usize, epsilon: f64) -> Result<bool> {
        Ok(self.superposition_ratio(d)? >= 1.0 - epsilon)
    }

    /// `f_∅` and the univariate components `f_{k}` as polynomials in `x_k`.
    pub fn order_one_parts(&self) -> Result<(f64, Vec<UniPoly>)> {
        if self.max_order < 1 {
            return Err(Error::InvalidArgument("no order-one components".into()));
        }
        let inner = (0..self.num_vars)
            .map(|k| match self.component(&[k]) {
                Some(c) => c.poly.to_uni(k),
                None => Ok(UniPoly::zero()),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok((self.mean, inner))
    }

    /// Sum of all computed components plus the mean.
    pub fn reconstruct(&self) -> Result<MultiPoly> {
        let mut acc = MultiPoly::constant(self.num_vars, self.mean);
        for c in &self.components {
            acc = acc.add(&c.poly)?;
        }
        Ok(acc)
    }
}

/// Checks the subset budget for a decomposition of order `order` in `num_vars` variables.
pub fn check_budget(num_vars: usize, order: usize) -> Result<()> {
    if order == 0 || order > num_vars {
        return Err(Error::InvalidArgument(format!(
            "order must lie in 1..={num_vars}, got {order}"
        )));
    }
    let over = (order >= 2 && num_vars > MAX_VARS_ORDER_TWO)
        || (order > 2 && num_vars > MAX_VARS_UNRESTRICTED);
    if over {
        return Err(Error::SubsetBudget {
            vars: num_vars,
            order,
        });
    }
    Ok(())
}

/// All `size`-element subsets of `0..n`, in lexicographic order.
pub fn subsets_of_size(n: usize, size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if size > n {
        return out;
    }
    let mut cur: Vec<usize> = (0..size).collect();
    loop {
        out.push(cur.clone());
        // Advance the rightmost index that still has room.
        let mut i = size;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if cur[i] < n - size + i {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        cur[i] += 1;
        for j in i + 1..size {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// ANOVA decomposition of `f` up to subsets of size `max_order`.
pub fn anova_decompose(f: &MultiPoly, max_order: usize) -> Result<AnovaResult> {
    let k = f.num_vars();
    check_budget(k, max_order)?;

    let mean = f.integrate_all();
    let second = inner_product(f, f)?;
    let scale = second.abs().max(1.0);
    let total_variance = clamp_variance(second - mean * mean, scale, "total")?;

    let mut components: Vec<Component> = Vec::new();
    let mut index: HashMap<Vec<usize>, usize> = HashMap::new();

    for size in 1..=max_order {
        for subset in subsets_of_size(k, size) {
            let mut keep = vec![false; k];
            for &v in &subset {
                keep[v] = true;
            }
            let mut poly = f.integrate_out(&keep)?;
            poly = poly.sub(&MultiPoly::constant(k, mean))?;
            // Nonempty proper subsets, enumerated through bitmasks over `subset`.
            let full = (1u64 << size) - 1;
            for mask in 1..full {
                let sub: Vec<usize> = subset
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << i) != 0)
                    .map(|(_, &v)| v)
                    .collect();
                let lower = &components[index[&sub]];
                poly = poly.sub(&lower.poly)?;
            }
            let label = format!("{subset:?}");
            let variance = clamp_variance(inner_product(&poly, &poly)?, scale, &label)?;
            index.insert(subset.clone(), components.len());
            components.push(Component {
                subset,
                poly,
                variance,
            });
        }
    }

    Ok(AnovaResult {
        num_vars: k,
        mean,
        components,
        total_variance,
        max_order,
    })
}

fn clamp_variance(v: f64, scale: f64, label: &str) -> Result<f64> {
    if v >= 0.0 {
        return Ok(v);
    }
    if v >= -VARIANCE_TOL * scale {
        warn!("clamping round-off variance {v:e} for {label} to zero");
        return Ok(0.0);
    }
    Err(Error::Internal(format!(
        "variance for {label} is {v:e}, beyond round-off"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(k: usize, terms: &[(&[u32], f64)]) -> MultiPoly {
        MultiPoly::from_terms(k, terms.iter().map(|(e, c)| (e.to_vec(), *c))).unwrap()
    }

    fn benchmark() -> MultiPoly {
        let inner = poly(2, &[(&[1, 0], 1.0), (&[1, 1], 1.0), (&[0, 1], 1.0)]);
        inner.pow(2).scale(1.0 / 9.0)
    }

    #[test]
    fn additive_function() {
        let f = poly(2, &[(&[1, 0], 1.0), (&[0, 1], 1.0)]);
        let r = anova_decompose(&f, 2).unwrap();
        assert!((r.mean - 1.0).abs() < 1e-15);
        let f1 = &r.component(&[0]).unwrap().poly;
        assert_eq!(f1, &poly(2, &[(&[0, 0], -0.5), (&[1, 0], 1.0)]));
        assert!((r.variance(&[0]).unwrap() - 1.0 / 12.0).abs() < 1e-15);
        assert!((r.variance(&[1]).unwrap() - 1.0 / 12.0).abs() < 1e-15);
        assert!(r.variance(&[0, 1]).unwrap().abs() < 1e-15);
        assert!((r.superposition_ratio(1).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn benchmark_variances_exact() {
        let r = anova_decompose(&benchmark(), 2).unwrap();
        assert!((r.variance(&[0]).unwrap() - 0.016834324035970127).abs() < 1e-12);
        assert!((r.variance(&[1]).unwrap() - 0.016834324035970127).abs() < 1e-12);
        assert!((r.variance(&[0, 1]).unwrap() - 0.00430422191739064).abs() < 1e-12);
        assert!((r.total_variance - 0.037972869989330894).abs() < 1e-12);
        assert!((r.superposition_ratio(1).unwrap() - 0.8866500762623425).abs() < 1e-10);
        assert!((r.superposition_ratio(2).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_function_has_no_variance() {
        let r = anova_decompose(&MultiPoly::constant(3, 2.5), 3).unwrap();
        assert_eq!(r.total_variance, 0.0);
        assert!(r.components.iter().all(|c| c.variance == 0.0));
        assert_eq!(r.superposition_ratio(1), Err(Error::ZeroVariance));
    }

    #[test]
    fn order_one_parts_of_product() {
        let f = poly(2, &[(&[1, 1], 1.0)]);
        let r = anova_decompose(&f, 1).unwrap();
        let (mean, inner) = r.order_one_parts().unwrap();
        assert!((mean - 0.25).abs() < 1e-15);
        assert_eq!(inner[0], UniPoly::new(vec![-0.25, 0.5]));
        assert_eq!(inner[1], UniPoly::new(vec![-0.25, 0.5]));
    }

    #[test]
    fn budget_rules() {
        let f = MultiPoly::var(21, 0).unwrap();
        assert!(anova_decompose(&f, 1).is_ok());
        assert!(matches!(
            anova_decompose(&f, 2),
            Err(Error::SubsetBudget { .. })
        ));
        assert!(check_budget(12, 12).is_ok());
        assert!(check_budget(13, 3).is_err());
        assert!(check_budget(20, 2).is_ok());
        assert!(check_budget(2, 3).is_err());
        assert!(check_budget(2, 0).is_err());
    }

    #[test]
    fn subset_enumeration() {
        assert_eq!(
            subsets_of_size(4, 2),
            vec![
                vec![0, 1],
                vec![0, 2],
                vec![0, 3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3]
            ]
        );
        assert_eq!(subsets_of_size(3, 3), vec![vec![0, 1, 2]]);
        assert_eq!(subsets_of_size(3, 1).len(), 3);
        assert!(subsets_of_size(2, 3).is_empty());
    }

    #[test]
    fn ratio_requires_computed_order() {
        let r = anova_decompose(&benchmark(), 1).unwrap();
        assert!(r.superposition_ratio(2).is_err());
        assert!(r.has_effective_dimension(1, 0.2).unwrap());
        assert!(!r.has_effective_dimension(1, 0.05).unwrap());
    }
}
