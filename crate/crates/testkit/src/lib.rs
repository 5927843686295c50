//! Brute-force numerical oracles shared by the test suites.
//!
//! Nothing here depends on `nomograph-core`: every routine works on plain
//! closures and slices so the checks stay independent of the code under test.

/// Gauss–Legendre nodes and weights on `[0, 1]`.
///
/// Nodes are found by Newton iteration on the three-term Legendre recurrence,
/// then mapped from `[-1, 1]`. An `n`-point rule integrates polynomials of
/// degree `2n - 1` exactly.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess for the i-th root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Integrates `f` over `[0, 1]^dims` with an `n`-point tensor Gauss–Legendre rule.
pub fn tensor_quadrature<F: Fn(&[f64]) -> f64>(f: F, dims: usize, n: usize) -> f64 {
    let (nodes, weights) = gauss_legendre(n);
    let mut idx = vec![0usize; dims];
    let mut point = vec![0.0; dims];
    let mut total = 0.0;
    let mut comp = 0.0;
    loop {
        let mut w = 1.0;
        for (d, &i) in idx.iter().enumerate() {
            point[d] = nodes[i];
            w *= weights[i];
        }
        // Kahan summation keeps the oracle honest for high-degree integrands.
        let y = w * f(&point) - comp;
        let t = total + y;
        comp = (t - total) - y;
        total = t;

        let mut d = 0;
        loop {
            if d == dims {
                return total;
            }
            idx[d] += 1;
            if idx[d] < n {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

/// One-dimensional Gauss–Legendre integral over `[0, 1]`.
pub fn quad_1d<F: Fn(f64) -> f64>(f: F, n: usize) -> f64 {
    tensor_quadrature(|x| f(x[0]), 1, n)
}

/// Integrates `f` over every variable except `keep`, holding `x_keep = at`.
pub fn quad_except<F: Fn(&[f64]) -> f64>(f: F, dims: usize, keep: usize, at: f64, n: usize) -> f64 {
    if dims == 1 {
        return f(&[at]);
    }
    tensor_quadrature(
        |rest| {
            let mut full = Vec::with_capacity(dims);
            full.extend_from_slice(&rest[..keep]);
            full.push(at);
            full.extend_from_slice(&rest[keep..]);
            f(&full)
        },
        dims - 1,
        n,
    )
}

/// The `index`-th point of the Halton sequence in `dims` dimensions.
pub fn halton(index: u64, dims: usize) -> Vec<f64> {
    const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    assert!(dims <= PRIMES.len());
    PRIMES[..dims]
        .iter()
        .map(|&base| {
            let mut f = 1.0;
            let mut r = 0.0;
            let mut i = index;
            while i > 0 {
                f /= base as f64;
                r += f * (i % base) as f64;
                i /= base;
            }
            r
        })
        .collect()
}

/// Dense bivariate polynomial `c[i][j] x1^i x2^j`, used as an expansion oracle.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense2 {
    pub coeffs: Vec<Vec<f64>>,
}

impl Dense2 {
    pub fn new(coeffs: Vec<Vec<f64>>) -> Self {
        Self { coeffs }
    }

    pub fn mul(&self, other: &Dense2) -> Dense2 {
        let (n1, m1) = (self.coeffs.len(), self.coeffs[0].len());
        let (n2, m2) = (other.coeffs.len(), other.coeffs[0].len());
        let mut out = vec![vec![0.0; m1 + m2 - 1]; n1 + n2 - 1];
        for i in 0..n1 {
            for j in 0..m1 {
                let a = self.coeffs[i][j];
                if a == 0.0 {
                    continue;
                }
                for k in 0..n2 {
                    for l in 0..m2 {
                        out[i + k][j + l] += a * other.coeffs[k][l];
                    }
                }
            }
        }
        Dense2 { coeffs: out }
    }

    pub fn pow(&self, d: u32) -> Dense2 {
        let mut acc = Dense2::new(vec![vec![1.0]]);
        for _ in 0..d {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn nonzero_terms(&self) -> usize {
        self.coeffs.iter().flatten().filter(|c| **c != 0.0).count()
    }

    pub fn max_degree(&self) -> (usize, usize) {
        let mut di = 0;
        let mut dj = 0;
        for (i, row) in self.coeffs.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                if *c != 0.0 {
                    di = di.max(i);
                    dj = dj.max(j);
                }
            }
        }
        (di, dj)
    }

    pub fn eval(&self, x1: f64, x2: f64) -> f64 {
        let mut total = 0.0;
        for (i, row) in self.coeffs.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                total += c * x1.powi(i as i32) * x2.powi(j as i32);
            }
        }
        total
    }
}

/// The two-sensor benchmark `(x1 + x1 x2 + x2)^2 / 9`, written out densely.
pub fn benchmark_dense() -> Dense2 {
    let base = Dense2::new(vec![vec![0.0, 1.0 / 3.0], vec![1.0 / 3.0, 1.0 / 3.0]]);
    base.mul(&base)
}

/// Pointwise evaluation of the benchmark function.
pub fn benchmark_eval(x: &[f64]) -> f64 {
    let s = x[0] + x[0] * x[1] + x[1];
    s * s / 9.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_exact_for_degree_2n_minus_1() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            for p in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p as i32)).sum();
                assert!((q - 1.0 / (p as f64 + 1.0)).abs() < 1e-14, "n={n} p={p}");
            }
        }
    }

    #[test]
    fn weights_sum_to_one_for_large_rules() {
        let (_, w) = gauss_legendre(161);
        let s: f64 = w.iter().sum();
        assert!((s - 1.0).abs() < 1e-13);
    }

    #[test]
    fn halton_first_points() {
        assert_eq!(halton(1, 2), vec![0.5, 1.0 / 3.0]);
        assert_eq!(halton(2, 1), vec![0.25]);
    }
}
