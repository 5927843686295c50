//! End-to-end nomographic approximation `f(x) ≈ ψ(φ_∅ + Σ_k φ_k(x_k))`.
//!
//! 1. Build the variance forms `A`, `B` and the cone matrix `M`.
//! 2. Solve the semidefinite relaxation and round its leading eigenvector to a
//!    cone-feasible skew vector `z⋆`.
//! 3. Decompose `g⋆∘f` to first order; the components are the inner functions.
//! 4. Tabulate `g⋆` and invert it numerically to obtain the outer function `ψ`.

use log::{debug, info, warn};
use serde::Serialize;

use crate::anova::anova_decompose;
use nalgebra::DMatrix;

use crate::bernstein::{build_cone, in_cone, SkewPoly, CONE_TOL};
use crate::error::{Error, Result};
use crate::forms::{build_forms, QuadForms};
use crate::polynomial::{compose_uni_multi, MultiPoly, UniPoly};
use crate::sdp::{solve_sdr, SdpProblem, SdpSolution, SdpStatus};

pub const MAX_DEGREE: usize = 32;
pub const DEFAULT_TABLE_SIZE: usize = 4097;
/// Largest lattice accepted by [`error_report`].
pub const GRID_BUDGET: u128 = 10_000_000;

#[derive(Clone, Debug)]
pub struct Options {
    pub degree: usize,
    pub delta: f64,
    pub table_size: usize,
    /// Fold `φ_∅` into the inner functions as `φ_∅ / K` each.
    pub distribute_mean: bool,
    pub cone_tol: f64,
    pub max_iter: usize,
}

impl Options {
    pub fn new(degree: usize) -> Self {
        Self {
            degree,
            delta: 1.0,
            table_size: DEFAULT_TABLE_SIZE,
            distribute_mean: false,
            cone_tol: CONE_TOL,
            max_iter: crate::sdp::DEFAULT_MAX_ITER,
        }
    }
}

/// Piecewise-linear table of a nondecreasing skew function on `[0, 1]`,
/// answering inverse queries with bisection on the exact polynomial.
#[derive(Clone, Debug, Serialize)]
pub struct MonotoneTable {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    #[serde(skip)]
    skew: UniPoly,
    /// Inverse queries stop once `|g(ξ) − y| ≤ tol`.
    pub tol: f64,
}

impl MonotoneTable {
    pub fn domain(&self) -> (f64, f64) {
        (self.ys[0], *self.ys.last().expect("nonempty table"))
    }

    /// `g` by linear interpolation of the table.
    pub fn forward(&self, xi: f64) -> f64 {
        let n = self.xs.len();
        let xi = xi.clamp(0.0, 1.0);
        let pos = xi * (n - 1) as f64;
        let i = (pos.floor() as usize).min(n - 2);
        let w = pos - i as f64;
        self.ys[i] * (1.0 - w) + self.ys[i + 1] * w
    }

    /// `ψ(y) = g⁻¹(y)`, clamped to `[0, 1]` outside the tabulated range.
    /// Flat stretches of `g` map to their left endpoint.
    pub fn inverse(&self, y: f64) -> f64 {
        let (lo, hi) = self.domain();
        if y <= lo {
            return 0.0;
        }
        if y >= hi {
            return 1.0;
        }
        let i = self.ys.partition_point(|&v| v < y);
        if self.ys[i] == y {
            return self.xs[i];
        }
        let (mut a, mut b) = (self.xs[i - 1], self.xs[i]);
        let (ya, yb) = (self.ys[i - 1], self.ys[i]);
        let mut guess = a + (b - a) * (y - ya) / (yb - ya);
        let (ga, gb) = (self.skew.eval(a), self.skew.eval(b));
        if !(ga <= y && y <= gb) {
            // Table entries were regularized here; interpolation is the best answer.
            return guess;
        }
        for _ in 0..200 {
            let g = self.skew.eval(guess);
            if (g - y).abs() <= self.tol {
                break;
            }
            if g < y {
                a = guess;
            } else {
                b = guess;
            }
            if b - a <= f64::EPSILON * b.max(1.0) {
                break;
            }
            guess = 0.5 * (a + b);
        }
        guess
    }
}

/// Tabulates `g` on `grid_size` uniform points of `[0, 1]` for inversion.
pub fn invert_outer(g: &SkewPoly, grid_size: usize) -> Result<MonotoneTable> {
    if grid_size < 2 {
        return Err(Error::InvalidArgument(
            "table needs at least two points".into(),
        ));
    }
    let uni = g.to_uni();
    let xs: Vec<f64> = (0..grid_size)
        .map(|i| i as f64 / (grid_size - 1) as f64)
        .collect();
    let mut ys: Vec<f64> = xs.iter().map(|&x| uni.eval(x)).collect();
    let range = ys[grid_size - 1] - ys[0];
    if !(range >= 1e-12) {
        return Err(Error::FlatSkew { range });
    }
    let mut worst = 0.0f64;
    for i in 1..grid_size {
        if ys[i] < ys[i - 1] {
            worst = worst.max(ys[i - 1] - ys[i]);
            ys[i] = ys[i - 1];
        }
    }
    if worst > 1e-12 * range {
        warn!("skew table decreased by {worst:e}; flattened to a running maximum");
    }
    Ok(MonotoneTable {
        xs,
        ys,
        skew: uni,
        tol: 1e-10 * range,
    })
}

/// One rounding candidate from the relaxation.
#[derive(Clone, Debug, Serialize)]
pub struct Candidate {
    pub source: String,
    pub z: Vec<f64>,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct NomoApprox {
    pub num_vars: usize,
    pub inner: Vec<UniPoly>,
    pub mean: f64,
    pub skew: SkewPoly,
    pub outer: MonotoneTable,
    /// `zᵀAz / zᵀBz` at the chosen `z⋆`.
    pub ratio: f64,
    pub epsilon: f64,
    /// `[g⋆(0), g⋆(1)]`.
    pub domain: (f64, f64),
    /// Relaxation value `tr(AZ⋆)/δ`, an upper bound on `ratio`.
    pub sdr_objective: f64,
    pub sdr_rank: usize,
    pub sdr_status: SdpStatus,
    pub sdr_iterations: usize,
    pub candidates: Vec<Candidate>,
}

impl NomoApprox {
    /// `φ_∅ + Σ_k φ_k(x_k)`.
    pub fn inner_sum(&self, x: &[f64]) -> f64 {
        self.mean
            + self
                .inner
                .iter()
                .zip(x)
                .map(|(phi, &xk)| phi.eval(xk))
                .sum::<f64>()
    }

    /// `ψ(φ_∅ + Σ_k φ_k(x_k))`, with the inner sum clamped into `[g⋆(0), g⋆(1)]`.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.num_vars {
            return Err(Error::DimensionMismatch {
                expected: self.num_vars,
                found: x.len(),
            });
        }
        let s = self.inner_sum(x).clamp(self.domain.0, self.domain.1);
        Ok(self.outer.inverse(s))
    }
}

/// Intermediate products of the pipeline, exposed for reporting and dumps.
pub struct Stages {
    pub forms: QuadForms,
    pub problem: SdpProblem,
    pub solution: SdpSolution,
}

/// Runs the full approximation pipeline.
pub fn approximate(f: &MultiPoly, opts: &Options) -> Result<NomoApprox> {
    approximate_with_stages(f, opts).map(|(na, _)| na)
}

pub fn approximate_with_stages(f: &MultiPoly, opts: &Options) -> Result<(NomoApprox, Stages)> {
    let d = opts.degree;
    if d == 0 || d > MAX_DEGREE {
        return Err(Error::InvalidArgument(format!(
            "degree must lie in 1..={MAX_DEGREE}, got {d}"
        )));
    }
    let k = f.num_vars();

    // (1) forms and cone
    let forms = build_forms(f, d)?;
    let cone = build_cone(d)?;
    let base_variance = forms.b_mat[(0, 0)];
    if !(base_variance > 1e-14 * forms.moments[2]) {
        return Err(Error::ZeroVariance);
    }

    // (2) relaxation in the coordinates y = M z, where the cone is y ≥ 0
    let mut problem = SdpProblem::new(
        forms.a_lift.clone(),
        forms.b_lift.clone(),
        DMatrix::identity(d, d),
    )
    .with_delta(opts.delta);
    problem.max_iter = opts.max_iter;
    let solution = solve_sdr(&problem)?;
    if solution.status != SdpStatus::Optimal {
        warn!(
            "relaxation stopped at {:?} after {} iterations",
            solution.status, solution.iterations
        );
    }
    let sdr_objective = solution.normalized_objective(opts.delta);
    let lead = solution.leading_vector();

    // ±√λ₁q₁ when already feasible, otherwise the clipped images (±M v)₊.
    let tol = opts.cone_tol * lead.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut slopes: Vec<(&str, Vec<f64>)> = Vec::new();
    for (source, sign) in [("+eigvec", 1.0), ("-eigvec", -1.0)] {
        let y: Vec<f64> = lead.iter().map(|v| sign * v).collect();
        if y.iter().all(|&v| v >= -tol) {
            slopes.push((source, y.iter().map(|v| v.max(0.0)).collect()));
        }
    }
    if slopes.is_empty() {
        for (source, sign) in [("+projection", 1.0), ("-projection", -1.0)] {
            slopes.push((source, lead.iter().map(|v| (sign * v).max(0.0)).collect()));
        }
    }
    let mut scored = Vec::new();
    for (source, y) in slopes {
        if y.iter().all(|&v| v == 0.0) {
            continue;
        }
        match forms.rayleigh_lifted(&y) {
            Ok(ratio) => {
                let z = cone.preimage_nonnegative(&y)?;
                debug_assert!(in_cone(&cone, &z, 0.0));
                scored.push(Candidate {
                    source: source.to_string(),
                    z,
                    ratio,
                });
            }
            Err(e) => debug!("dropping candidate {source}: {e}"),
        }
    }
    // Stable: ties keep the + candidate first.
    let best = scored
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.ratio.total_cmp(&b.1.ratio).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
        .ok_or(Error::NoFeasibleCandidate { sdr_objective })?;
    let chosen = scored[best].clone();
    scored.sort_by(|a, b| b.ratio.total_cmp(&a.ratio));
    info!(
        "chose {} with ratio {:.9} (relaxation {:.9}, rank {})",
        chosen.source, chosen.ratio, sdr_objective, solution.rank_est
    );

    // (3) first-order ANOVA of g⋆∘f, with c = 0
    let skew = SkewPoly::new(chosen.z.clone(), 0.0);
    let skewed = compose_uni_multi(&skew.to_uni(), f);
    let decomposition = anova_decompose(&skewed, 1)?;
    let (mut mean, mut inner) = decomposition.order_one_parts()?;
    if opts.distribute_mean {
        let share = UniPoly::new(vec![mean / k as f64]);
        inner = inner.iter().map(|phi| phi.add(&share)).collect();
        mean = 0.0;
    }

    // (4) outer function
    let outer = invert_outer(&skew, opts.table_size)?;
    let domain = outer.domain();

    let na = NomoApprox {
        num_vars: k,
        inner,
        mean,
        skew,
        outer,
        ratio: chosen.ratio,
        epsilon: 1.0 - chosen.ratio,
        domain,
        sdr_objective,
        sdr_rank: solution.rank_est,
        sdr_status: solution.status,
        sdr_iterations: solution.iterations,
        candidates: scored,
    };
    Ok((
        na,
        Stages {
            forms,
            problem,
            solution,
        },
    ))
}

#[derive(Clone, Debug, Serialize)]
pub struct ErrorPoint {
    pub x: Vec<f64>,
    pub exact: f64,
    pub approx: f64,
    pub error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ErrorReport {
    pub sup_err: f64,
    pub rms_err: f64,
    pub grid_n: usize,
    pub points: Vec<ErrorPoint>,
}

/// `e = f − ψ(Σ φ)` on the uniform `grid_n^K` lattice, corners included.
pub fn error_report(na: &NomoApprox, f: &MultiPoly, grid_n: usize) -> Result<ErrorReport> {
    if grid_n < 2 {
        return Err(Error::InvalidArgument(
            "grid needs at least two points per axis".into(),
        ));
    }
    let k = f.num_vars();
    if k != na.num_vars {
        return Err(Error::DimensionMismatch {
            expected: na.num_vars,
            found: k,
        });
    }
    let points_total = (grid_n as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
    if points_total > GRID_BUDGET {
        return Err(Error::GridBudget {
            points: points_total,
            budget: GRID_BUDGET,
        });
    }
    let total = points_total as usize;
    let mut points = Vec::with_capacity(total);
    let mut sup: f64 = 0.0;
    let mut sq = 0.0;
    let mut x = vec![0.0; k];
    for idx in 0..total {
        // First coordinate varies slowest.
        let mut r = idx;
        for v in (0..k).rev() {
            x[v] = (r % grid_n) as f64 / (grid_n - 1) as f64;
            r /= grid_n;
        }
        let exact = f.eval(&x)?;
        let approx = na.evaluate(&x)?;
        let error = exact - approx;
        sup = sup.max(error.abs());
        sq += error * error;
        points.push(ErrorPoint {
            x: x.clone(),
            exact,
            approx,
            error,
        });
    }
    Ok(ErrorReport {
        sup_err: sup,
        rms_err: (sq / total as f64).sqrt(),
        grid_n,
        points,
    })
}
