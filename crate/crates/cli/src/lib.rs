//! Front end for the `nomograph` binary: configuration, the run and sweep
//! drivers, and the CSV/JSON writers.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use nomograph::anova::{anova_decompose, AnovaResult};
use nomograph::pipeline::MAX_DEGREE;
use nomograph::{
    approximate_with_stages, build_cone, error_report, verify_solution, DMatrix, ErrorReport,
    MultiPoly, NomoApprox, Options, Stages,
};
use serde_json::{json, Value};
use thiserror::Error;

pub const DEFAULT_EPSILON: f64 = 1e-2;
pub const DEFAULT_GRID: usize = 101;
pub const PHI_SAMPLES: usize = 1001;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parse error in {path}: {source}")]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("range violation: {0}")]
    Range(nomograph::Error),
    #[error("solver infeasible: {0}")]
    Infeasible(nomograph::Error),
    #[error("{0}")]
    Pipeline(nomograph::Error),
}

impl From<nomograph::Error> for CliError {
    fn from(e: nomograph::Error) -> Self {
        use nomograph::Error as E;
        match e {
            E::RangeViolation(_) => CliError::Range(e),
            E::Infeasible(_) | E::NoFeasibleCandidate { .. } => CliError::Infeasible(e),
            other => CliError::Pipeline(other),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub input: PathBuf,
    pub degree: usize,
    pub epsilon_target: f64,
    pub grid_n: usize,
    pub out_dir: PathBuf,
    pub dump_cone: bool,
    pub dump_forms: bool,
    pub dump_sdp: bool,
    pub distribute_mean: bool,
    /// Omit wall-clock timings so reruns produce identical files.
    pub deterministic: bool,
    pub anova_only: bool,
    /// Order for `--anova-only`; defaults to `min(K, 2)`.
    pub max_order: Option<usize>,
}

impl RunConfig {
    pub fn new(input: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            input: input.into(),
            degree: 20,
            epsilon_target: DEFAULT_EPSILON,
            grid_n: DEFAULT_GRID,
            out_dir: out_dir.into(),
            dump_cone: false,
            dump_forms: false,
            dump_sdp: false,
            distribute_mean: false,
            deterministic: false,
            anova_only: false,
            max_order: None,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        check_degree(self.degree)?;
        if !(2..=2049).contains(&self.grid_n) {
            return Err(CliError::Config(format!(
                "grid must lie in 2..=2049, got {}",
                self.grid_n
            )));
        }
        if !(self.epsilon_target > 0.0 && self.epsilon_target < 1.0) {
            return Err(CliError::Config(format!(
                "epsilon must lie in (0, 1), got {}",
                self.epsilon_target
            )));
        }
        if self.max_order == Some(0) {
            return Err(CliError::Config("max-order must be positive".into()));
        }
        Ok(())
    }

    fn options(&self, degree: usize) -> Options {
        let mut o = Options::new(degree);
        o.distribute_mean = self.distribute_mean;
        o
    }
}

fn check_degree(d: usize) -> Result<(), CliError> {
    if !(1..=MAX_DEGREE).contains(&d) {
        return Err(CliError::Config(format!(
            "degree must lie in 1..={MAX_DEGREE}, got {d}"
        )));
    }
    Ok(())
}

/// What a run produced, before anything touches the disk.
#[derive(Debug)]
pub struct Outcome {
    pub epsilon: f64,
    pub target_met: bool,
    files: Vec<(String, String)>,
}

impl Outcome {
    /// 0 when the target is met, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.target_met {
            0
        } else {
            2
        }
    }

    pub fn file_names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    pub fn contents(&self, name: &str) -> Option<&str> {
        self.files
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, c)| c.as_str())
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        fs::create_dir_all(dir).map_err(|source| CliError::Write {
            path: dir.to_path_buf(),
            source,
        })?;
        for (name, body) in &self.files {
            let path = dir.join(name);
            fs::write(&path, body).map_err(|source| CliError::Write { path, source })?;
        }
        Ok(())
    }
}

pub fn load_poly(path: &Path) -> Result<MultiPoly, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| CliError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

/// Fixed 17-significant-digit rendering used in every CSV.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv(header: &[String], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(fmt_num).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn subset_label(s: &[usize]) -> String {
    let ids: Vec<String> = s.iter().map(|v| (v + 1).to_string()).collect();
    format!("sigma2_{{{}}}", ids.join(";"))
}

/// One column per component variance, then `σ²`, the
/// first-order ratio and `ε`.
pub fn variances_csv(r: &AnovaResult) -> Result<String, CliError> {
    let ratio = r.superposition_ratio(1)?;
    let mut header: Vec<String> = r
        .components
        .iter()
        .map(|c| subset_label(&c.subset))
        .collect();
    header.extend(["sigma2".into(), "ratio".into(), "epsilon".into()]);
    let mut row: Vec<f64> = r.components.iter().map(|c| c.variance).collect();
    row.extend([r.total_variance, ratio, 1.0 - ratio]);
    Ok(csv(&header, [row]))
}

fn matrix_json(m: &DMatrix<f64>) -> Value {
    let rows: Vec<Vec<f64>> = (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect();
    json!(rows)
}

fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

/// Runs the configured job and renders every output file in memory.
pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    cfg.validate()?;
    let f = load_poly(&cfg.input)?;
    if cfg.anova_only {
        run_anova(cfg, &f)
    } else {
        run_full(cfg, &f)
    }
}

fn run_anova(cfg: &RunConfig, f: &MultiPoly) -> Result<Outcome, CliError> {
    let k = f.num_vars();
    let order = cfg.max_order.unwrap_or(k.min(2));
    let t0 = Instant::now();
    let r = anova_decompose(f, order)?;
    let elapsed = t0.elapsed().as_secs_f64();
    let ratio = r.superposition_ratio(1)?;
    let epsilon = 1.0 - ratio;
    let target_met = epsilon <= cfg.epsilon_target;
    let components: Vec<Value> = r
        .components
        .iter()
        .map(|c| {
            let subset: Vec<usize> = c.subset.iter().map(|v| v + 1).collect();
            json!({ "subset": subset, "variance": c.variance })
        })
        .collect();
    let report = json!({
        "mode": "anova",
        "num_vars": k,
        "max_order": order,
        "mean": r.mean,
        "total_variance": r.total_variance,
        "components": components,
        "ratio": ratio,
        "epsilon": epsilon,
        "epsilon_target": cfg.epsilon_target,
        "target_met": target_met,
        "timings_s": timings(cfg, &[("anova", elapsed)]),
    });
    Ok(Outcome {
        epsilon,
        target_met,
        files: vec![
            ("report.json".into(), json_text(&report)),
            ("variances.csv".into(), variances_csv(&r)?),
        ],
    })
}

fn timings(cfg: &RunConfig, items: &[(&str, f64)]) -> Value {
    if cfg.deterministic {
        return Value::Null;
    }
    let map: serde_json::Map<String, Value> = items
        .iter()
        .map(|(k, v)| (k.to_string(), json!(v)))
        .collect();
    Value::Object(map)
}

fn run_full(cfg: &RunConfig, f: &MultiPoly) -> Result<Outcome, CliError> {
    let t0 = Instant::now();
    let (na, stages) = approximate_with_stages(f, &cfg.options(cfg.degree))?;
    let t_pipe = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let err = error_report(&na, f, cfg.grid_n)?;
    let t_err = t1.elapsed().as_secs_f64();

    let target_met = na.epsilon <= cfg.epsilon_target;
    info!(
        "epsilon = {:e} (target {:e}), sup error = {:e}",
        na.epsilon, cfg.epsilon_target, err.sup_err
    );

    let report = full_report(
        cfg,
        &na,
        &stages,
        &err,
        &[("pipeline", t_pipe), ("error_grid", t_err)],
    );
    let mut files = vec![
        ("report.json".to_string(), json_text(&report)),
        (
            "variances.csv".to_string(),
            skewed_variances_csv(&na, &stages)?,
        ),
        ("phi_k.csv".to_string(), phi_csv(&na)),
        ("psi.csv".to_string(), psi_csv(&na)),
        ("error.csv".to_string(), error_csv(&err, na.num_vars)),
    ];
    if cfg.dump_cone {
        let cone = build_cone(cfg.degree)?;
        let v = json!({ "degree": cone.degree, "m_tilde": matrix_json(&cone.m_tilde), "m": matrix_json(&cone.m) });
        files.push(("cone.json".into(), json_text(&v)));
    }
    if cfg.dump_forms {
        let q = &stages.forms;
        let v = json!({
            "degree": q.degree,
            "moments": q.moments,
            "b1": matrix_json(&q.b1),
            "b2": q.b2.iter().copied().collect::<Vec<f64>>(),
            "a1": q.a1.iter().map(matrix_json).collect::<Vec<_>>(),
            "b": matrix_json(&q.b_mat),
            "a_k": q.a_k.iter().map(matrix_json).collect::<Vec<_>>(),
            "a": matrix_json(&q.a_sum),
            "scale": q.scale,
            "b_lift": matrix_json(&q.b_lift),
            "a_lift": matrix_json(&q.a_lift),
        });
        files.push(("forms.json".into(), json_text(&v)));
    }
    if cfg.dump_sdp {
        let s = &stages.solution;
        let audit = verify_solution(&stages.problem, s);
        let v = json!({
            "status": s.status,
            "objective": s.objective,
            "delta": stages.problem.delta,
            "z": matrix_json(&s.z_mat),
            "y": matrix_json(&s.y_mat),
            "top_eigval": s.top_eigval,
            "top_eigvec": s.top_eigvec,
            "rank_est": s.rank_est,
            "primal_residual": s.primal_residual,
            "dual_residual": s.dual_residual,
            "gap": s.gap,
            "iterations": s.iterations,
            "verify": audit,
        });
        files.push(("sdp.json".into(), json_text(&v)));
    }
    Ok(Outcome {
        epsilon: na.epsilon,
        target_met,
        files,
    })
}

fn full_report(
    cfg: &RunConfig,
    na: &NomoApprox,
    stages: &Stages,
    err: &ErrorReport,
    times: &[(&str, f64)],
) -> Value {
    let inner: Vec<&[f64]> = na.inner.iter().map(|p| p.coeffs()).collect();
    json!({
        "mode": "approximate",
        "num_vars": na.num_vars,
        "degree": cfg.degree,
        "z": na.skew.z,
        "c": na.skew.c,
        "ratio": na.ratio,
        "epsilon": na.epsilon,
        "epsilon_target": cfg.epsilon_target,
        "target_met": na.epsilon <= cfg.epsilon_target,
        "mean": na.mean,
        "inner": inner,
        "domain": [na.domain.0, na.domain.1],
        "sdr_objective": na.sdr_objective,
        "sdr_rank": na.sdr_rank,
        "sdr_status": na.sdr_status,
        "sdr_iterations": na.sdr_iterations,
        "sdr_gap": stages.solution.gap,
        "candidates": na.candidates,
        "sup_err": err.sup_err,
        "rms_err": err.rms_err,
        "grid_n": err.grid_n,
        "timings_s": timings(cfg, times),
    })
}

/// Variances of `g⋆∘f` in the same layout as the plain ANOVA table.
fn skewed_variances_csv(na: &NomoApprox, stages: &Stages) -> Result<String, CliError> {
    let q = &stages.forms;
    let z = &na.skew.z;
    let mut header: Vec<String> = (0..na.num_vars).map(|k| subset_label(&[k])).collect();
    header.extend(["sigma2".into(), "ratio".into(), "epsilon".into()]);
    let mut row = (0..na.num_vars)
        .map(|k| q.sigma_k(k, z))
        .collect::<Result<Vec<f64>, _>>()?;
    row.extend([q.sigma_total(z)?, na.ratio, na.epsilon]);
    Ok(csv(&header, [row]))
}

fn phi_csv(na: &NomoApprox) -> String {
    let mut header = vec!["x".to_string()];
    header.extend((1..=na.num_vars).map(|k| format!("phi_{k}")));
    let rows = (0..PHI_SAMPLES).map(|i| {
        let x = i as f64 / (PHI_SAMPLES - 1) as f64;
        let mut row = vec![x];
        row.extend(na.inner.iter().map(|p| p.eval(x)));
        row
    });
    csv(&header, rows)
}

/// `ψ` as the swapped table of `g⋆`: `psi(s)` at `s = g⋆(ξ)`.
fn psi_csv(na: &NomoApprox) -> String {
    let t = &na.outer;
    let rows = t.ys.iter().zip(&t.xs).map(|(&s, &xi)| vec![s, xi]);
    csv(&["s".into(), "psi".into()], rows)
}

fn error_csv(err: &ErrorReport, k: usize) -> String {
    let mut header: Vec<String> = (1..=k).map(|v| format!("x{v}")).collect();
    header.extend(["f".into(), "approx".into(), "error".into()]);
    let rows = err.points.iter().map(|p| {
        let mut row = p.x.clone();
        row.extend([p.exact, p.approx, p.error]);
        row
    });
    csv(&header, rows)
}

/// One sweep row.
#[derive(Clone, Debug)]
pub struct SweepRow {
    pub degree: usize,
    pub sdr_objective: f64,
    pub ratio: f64,
    pub sup_err: f64,
}

/// Runs the pipeline for each degree on its own thread and returns the rows
/// in input order, along with their CSV rendering.
pub fn sweep_degrees(
    cfg: &RunConfig,
    degrees: &[usize],
) -> Result<(Vec<SweepRow>, String), CliError> {
    cfg.validate()?;
    if degrees.is_empty() {
        return Err(CliError::Config("sweep needs at least one degree".into()));
    }
    for &d in degrees {
        check_degree(d)?;
    }
    let f = load_poly(&cfg.input)?;
    let results: Vec<Result<SweepRow, CliError>> = std::thread::scope(|s| {
        let handles: Vec<_> = degrees
            .iter()
            .map(|&d| {
                let f = &f;
                s.spawn(move || -> Result<SweepRow, CliError> {
                    let (na, _) = approximate_with_stages(f, &cfg.options(d))?;
                    let err = error_report(&na, f, cfg.grid_n)?;
                    Ok(SweepRow {
                        degree: d,
                        sdr_objective: na.sdr_objective,
                        ratio: na.ratio,
                        sup_err: err.sup_err,
                    })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });
    let rows = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let mut out = String::from("degree,sdr_objective,ratio,sup_err\n");
    for r in &rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.degree,
            fmt_num(r.sdr_objective),
            fmt_num(r.ratio),
            fmt_num(r.sup_err)
        );
    }
    Ok((rows, out))
}
