//! Semidefinite relaxation of the cone-constrained Rayleigh quotient.
//!
//! Solves
//!
//! ```text
//! maximize  tr(A Z)
//! s.t.      tr(B Z) = δ,   Z ⪰ 0,   [M Z Mᵀ]_{ij} ≥ 0  for all i, j
//! ```
//!
//! for small dense `D × D` data. With `M` invertible the substitution
//! `Y = M Z Mᵀ` is exact: `Z ⪰ 0 ⟺ Y ⪰ 0` and the cone constraints become
//! `Y ≥ 0` entrywise, so the problem is a linear program over the doubly
//! nonnegative cone. After a diagonal rescaling of `Y` it is solved by ADMM on
//! the splitting `X = W₁ = W₂` with `X` on the affine trace hyperplane, `W₁` in
//! the PSD cone (eigen-projection) and `W₂` in the nonnegative orthant.

use log::debug;
use nalgebra::{DMatrix, Dyn, SymmetricEigen, LU};
use serde::Serialize;

use crate::error::{Error, Result};

pub const DEFAULT_TOL_FEAS: f64 = 1e-7;
pub const DEFAULT_TOL_GAP: f64 = 1e-6;
pub const DEFAULT_MAX_ITER: usize = 200_000;
/// ADMM stopping threshold on the scaled primal and dual residuals.
pub const DEFAULT_EPS: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct SdpProblem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub m: DMatrix<f64>,
    pub delta: f64,
    pub tol_feas: f64,
    pub tol_gap: f64,
    pub max_iter: usize,
    pub eps: f64,
}

impl SdpProblem {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, m: DMatrix<f64>) -> Self {
        Self {
            a,
            b,
            m,
            delta: 1.0,
            tol_feas: DEFAULT_TOL_FEAS,
            tol_gap: DEFAULT_TOL_GAP,
            max_iter: DEFAULT_MAX_ITER,
            eps: DEFAULT_EPS,
        }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn validate(&self) -> Result<()> {
        let d = self.dim();
        for (name, m) in [("A", &self.a), ("B", &self.b), ("M", &self.m)] {
            if m.nrows() != d || m.ncols() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: if m.nrows() != d { m.nrows() } else { m.ncols() },
                });
            }
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "{name} has non-finite entries"
                )));
            }
        }
        if d == 0 {
            return Err(Error::InvalidArgument("empty problem".into()));
        }
        for (name, m) in [("A", &self.a), ("B", &self.b)] {
            let asym = asymmetry(m);
            if asym > 1e-12 * max_abs(m).max(f64::MIN_POSITIVE) {
                return Err(Error::InvalidArgument(format!(
                    "{name} is not symmetric (relative asymmetry {asym:e})"
                )));
            }
        }
        if !(self.delta > 0.0) {
            return Err(Error::InvalidArgument("delta must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SdpStatus {
    Optimal,
    MaxIter,
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub z_mat: DMatrix<f64>,
    /// Lifted solution `Y⋆ = M Z⋆ Mᵀ`, as produced by the solver.
    pub y_mat: DMatrix<f64>,
    /// `tr(A Z⋆)`, evaluated in lifted coordinates.
    pub objective: f64,
    pub top_eigval: f64,
    /// Unit top eigenvector, largest-magnitude entry positive.
    pub top_eigvec: Vec<f64>,
    /// Number of eigenvalues above `1e-6 λ₁`.
    pub rank_est: usize,
    pub status: SdpStatus,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// Relative gap between the objective and the trace-constraint multiplier.
    pub gap: f64,
    pub iterations: usize,
}

impl SdpSolution {
    /// `tr(A Z⋆) / δ`: the relaxed Rayleigh quotient.
    pub fn normalized_objective(&self, delta: f64) -> f64 {
        self.objective / delta
    }

    /// `√λ₁ q₁`.
    pub fn leading_vector(&self) -> Vec<f64> {
        let r = self.top_eigval.max(0.0).sqrt();
        self.top_eigvec.iter().map(|q| r * q).collect()
    }
}

/// Largest eigenpair of a symmetric matrix, sign fixed so that the entry of
/// largest magnitude is positive.
pub fn extract_top_eig(z: &DMatrix<f64>) -> (f64, Vec<f64>) {
    let eig = SymmetricEigen::new(symmetrize(z));
    let (idx, &lambda) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty matrix");
    let mut q: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();
    let (mut pivot, mut best) = (0, -1.0);
    for (i, v) in q.iter().enumerate() {
        if v.abs() > best {
            best = v.abs();
            pivot = i;
        }
    }
    if q[pivot] < 0.0 {
        q.iter_mut().for_each(|v| *v = -*v);
    }
    (lambda, q)
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..i {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

fn dot(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// `M⁻ᵀ A M⁻¹` and `M⁻ᵀ B M⁻¹` through an explicit inverse.
fn audit_lift(
    m: &DMatrix<f64>,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
    let inv = m.clone().qr().try_inverse()?;
    let side = |q: &DMatrix<f64>| symmetrize(&(inv.transpose() * symmetrize(q) * &inv));
    Some((side(a), side(b)))
}

/// `M⁻ᵀ Q M⁻¹` for symmetric `Q`, given the factorization of `Mᵀ`.
fn lift(lu_t: &LU<f64, Dyn, Dyn>, q: &DMatrix<f64>) -> DMatrix<f64> {
    let left = lu_t.solve(q).expect("invertible");
    symmetrize(&lu_t.solve(&left.transpose()).expect("invertible"))
}

/// `M⁻¹ Y M⁻ᵀ`.
fn unlift(lu: &LU<f64, Dyn, Dyn>, y: &DMatrix<f64>) -> DMatrix<f64> {
    let left = lu.solve(y).expect("invertible");
    lu.solve(&left.transpose()).expect("invertible").transpose()
}

fn project_psd(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(symmetrize(m));
    let q = &eig.eigenvectors;
    let d = m.nrows();
    let mut out = DMatrix::zeros(d, d);
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda > 0.0 {
            let col = q.column(k);
            out += lambda * col * col.transpose();
        }
    }
    symmetrize(&out)
}

/// Solves the relaxation; see the module documentation for the method.
pub fn solve_sdr(p: &SdpProblem) -> Result<SdpSolution> {
    p.validate()?;
    let d = p.dim();

    let b_sym = symmetrize(&p.b);
    let b_eigs = SymmetricEigen::new(b_sym.clone()).eigenvalues;
    let b_top = b_eigs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if b_top <= 1e-14 * max_abs(&b_sym) || b_top <= 0.0 {
        return Err(Error::Infeasible(
            "B is negative semidefinite, so tr(BZ) = δ > 0 has no PSD solution".into(),
        ));
    }

    let lu = p.m.clone().lu();
    if !lu.is_invertible() {
        return Err(Error::InvalidArgument("cone matrix M is singular".into()));
    }
    let lu_t = p.m.transpose().lu();
    let c_lift = lift(&lu_t, &symmetrize(&p.a));
    let e_lift = lift(&lu_t, &b_sym);

    // Diagonal scaling Ŷ = diag(t) Y diag(t) that puts ones on the diagonal of Ê.
    let t: Vec<f64> = (0..d)
        .map(|i| {
            let v = e_lift[(i, i)];
            if v > 0.0 {
                v.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    let e_hat = DMatrix::from_fn(d, d, |i, j| e_lift[(i, j)] / (t[i] * t[j]));
    let c_raw = DMatrix::from_fn(d, d, |i, j| c_lift[(i, j)] / (t[i] * t[j]));
    let c_norm = max_abs(&c_raw).max(f64::MIN_POSITIVE);
    let c_hat = &c_raw / c_norm;

    let admm = run_admm(&c_hat, &e_hat, p.max_iter, p.eps);
    debug!(
        "ADMM finished after {} iterations (r = {:e}, s = {:e})",
        admm.iterations, admm.primal, admm.dual
    );

    // Back to Z with δ applied: Y = δ diag(1/t) Ŷ diag(1/t), Z = M⁻¹ Y M⁻ᵀ.
    let y_hat = &admm.w_psd;
    let y = symmetrize(&DMatrix::from_fn(d, d, |i, j| {
        p.delta * y_hat[(i, j)] / (t[i] * t[j])
    }));
    let z_mat = symmetrize(&unlift(&lu, &y));

    let c_norm_obj = dot(&c_raw, y_hat);
    let objective = p.delta * c_norm_obj;
    let (top_eigval, top_eigvec) = extract_top_eig(&z_mat);
    let z_eigs = SymmetricEigen::new(z_mat.clone()).eigenvalues;
    let rank_est = z_eigs
        .iter()
        .filter(|&&l| l > 1e-6 * top_eigval.max(0.0))
        .count();

    let multiplier = admm.multiplier * c_norm;
    let gap = (c_norm_obj - multiplier).abs() / (1.0 + c_norm_obj.abs());

    let mut sol = SdpSolution {
        z_mat,
        y_mat: y,
        objective,
        top_eigval,
        top_eigvec,
        rank_est,
        status: SdpStatus::MaxIter,
        primal_residual: admm.primal,
        dual_residual: admm.dual,
        gap,
        iterations: admm.iterations,
    };
    let report = verify_solution(p, &sol);
    if admm.converged && report.all_pass() && gap <= p.tol_gap {
        sol.status = SdpStatus::Optimal;
    }
    Ok(sol)
}

struct AdmmOutcome {
    w_psd: DMatrix<f64>,
    multiplier: f64,
    primal: f64,
    dual: f64,
    iterations: usize,
    converged: bool,
}

/// ADMM for `max ⟨C, Y⟩` s.t. `⟨E, Y⟩ = 1`, `Y ⪰ 0`, `Y ≥ 0`.
fn run_admm(c: &DMatrix<f64>, e: &DMatrix<f64>, max_iter: usize, eps: f64) -> AdmmOutcome {
    let d = c.nrows();
    let e_norm_sq = dot(e, e);
    let trace_e = e.trace();

    // Deterministic start: a multiple of the identity on the trace hyperplane.
    let x0 = if trace_e > 0.0 {
        DMatrix::identity(d, d) / trace_e
    } else {
        e / e_norm_sq
    };
    let mut w_psd = x0.clone();
    let mut w_nn = x0;
    let mut u_psd = DMatrix::zeros(d, d);
    let mut u_nn = DMatrix::zeros(d, d);
    let mut rho = 1.0;
    let mut multiplier = 0.0;
    let mut primal = f64::INFINITY;
    let mut dual = f64::INFINITY;

    for it in 0..max_iter {
        // X-update: projection of the averaged target onto ⟨E, X⟩ = 1.
        let target = ((&w_psd - &u_psd) + (&w_nn - &u_nn)) * 0.5 + c / (2.0 * rho);
        let kappa = (dot(e, &target) - 1.0) / e_norm_sq;
        let x = &target - e * kappa;
        multiplier = 2.0 * rho * kappa;

        let w_psd_next = project_psd(&(&x + &u_psd));
        let w_nn_next = (&x + &u_nn).map(|v| v.max(0.0));

        let r_psd = &x - &w_psd_next;
        let r_nn = &x - &w_nn_next;
        primal = r_psd.norm().max(r_nn.norm());
        dual = rho
            * (&w_psd_next - &w_psd)
                .norm()
                .max((&w_nn_next - &w_nn).norm());

        w_psd = w_psd_next;
        w_nn = w_nn_next;
        u_psd += &r_psd;
        u_nn += &r_nn;

        let scale = 1.0 + x.norm();
        if primal <= eps * scale && dual <= eps * scale {
            return AdmmOutcome {
                w_psd,
                multiplier,
                primal,
                dual,
                iterations: it + 1,
                converged: true,
            };
        }

        // Residual balancing; scaled duals are rescaled with ρ.
        if it % 50 == 49 {
            if primal > 10.0 * dual {
                rho *= 2.0;
                u_psd /= 2.0;
                u_nn /= 2.0;
            } else if dual > 10.0 * primal {
                rho /= 2.0;
                u_psd *= 2.0;
                u_nn *= 2.0;
            }
        }
    }
    AdmmOutcome {
        w_psd,
        multiplier,
        primal,
        dual,
        iterations: max_iter,
        converged: false,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidualCheck {
    pub name: &'static str,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<ResidualCheck>,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&ResidualCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Recomputes every feasibility residual of `sol` from scratch.
///
/// Residuals are measured on the lifted solution `Y⋆`: `tr(BZ) = ⟨M⁻ᵀBM⁻¹, Y⟩`,
/// `tr(AZ) = ⟨M⁻ᵀAM⁻¹, Y⟩`, `Z ⪰ 0 ⟺ Y ⪰ 0` and the cone rows are the
/// entries of `Y`. Forming `Z` explicitly loses up to `cond(M)²` in relative
/// accuracy, which at high degree swamps any useful tolerance. The lifted
/// data are rebuilt from a QR inverse of `M` rather than the solver's LU
/// solves, and sums run in reverse index order.
pub fn verify_solution(p: &SdpProblem, sol: &SdpSolution) -> VerifyReport {
    let y = &sol.y_mat;
    let d = y.nrows();
    let rev_dot = |a: &DMatrix<f64>| {
        let mut s = 0.0;
        for j in (0..d).rev() {
            for i in (0..d).rev() {
                s += a[(i, j)] * y[(j, i)];
            }
        }
        s
    };
    let (a_lift, b_lift) = match audit_lift(&p.m, &p.a, &p.b) {
        Some(pair) => pair,
        None => {
            let nan = DMatrix::from_element(d, d, f64::NAN);
            (nan.clone(), nan)
        }
    };

    let z_max = max_abs(&sol.z_mat);
    let symmetry = asymmetry(&sol.z_mat) / z_max.max(f64::MIN_POSITIVE);

    let eigs = SymmetricEigen::new(symmetrize(y)).eigenvalues;
    let min_eig = eigs.iter().copied().fold(f64::INFINITY, f64::min);
    let y_norm = eigs.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let psd = (-min_eig).max(0.0) / y_norm.max(f64::MIN_POSITIVE);

    let trace = (rev_dot(&b_lift) - p.delta).abs() / p.delta;

    let y_min = y.iter().copied().fold(f64::INFINITY, f64::min);
    let cone = (-y_min).max(0.0) / max_abs(y).max(f64::MIN_POSITIVE);

    let objective = (rev_dot(&a_lift) - sol.objective).abs() / (1.0 + sol.objective.abs());

    let check = |name, value: f64, threshold| ResidualCheck {
        name,
        value,
        threshold,
        pass: value <= threshold,
    };
    VerifyReport {
        checks: vec![
            check("symmetry", symmetry, 1e-12),
            check("psd", psd, p.tol_feas),
            check("trace", trace, p.tol_feas),
            check("cone", cone, p.tol_feas),
            check("objective", objective, p.tol_gap),
        ],
    }
}
