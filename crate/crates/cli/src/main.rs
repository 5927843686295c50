use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use nomograph_cli::{run, sweep_degrees, CliError, RunConfig, DEFAULT_EPSILON, DEFAULT_GRID};

/// Nomographic approximation f(x) ≈ ψ(φ₀ + Σ φ_k(x_k)) of a polynomial on the unit cube.
#[derive(Parser, Debug)]
#[command(name = "nomograph", version)]
struct Args {
    /// Polynomial as JSON: {"num_vars": K, "terms": [{"exp": [...], "coeff": c}, ...]}
    #[arg(long)]
    input: PathBuf,
    /// Degree D of the skew polynomial.
    #[arg(long, default_value_t = 20)]
    degree: usize,
    /// Target for ε = 1 − (first-order variance share); exit code 2 when missed.
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    /// Points per axis of the error grid.
    #[arg(long, default_value_t = DEFAULT_GRID)]
    grid: usize,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Only decompose f and write its variance table.
    #[arg(long)]
    anova_only: bool,
    /// Largest subset size for --anova-only (default min(K, 2)).
    #[arg(long)]
    max_order: Option<usize>,
    /// Comma-separated degrees; writes sweep.csv instead of a single run.
    #[arg(long, value_delimiter = ',')]
    sweep: Option<Vec<usize>>,
    /// Fold φ₀ into the inner functions as φ₀/K each.
    #[arg(long)]
    distribute_mean: bool,
    /// Leave timings out of report.json so reruns are byte-identical.
    #[arg(long)]
    deterministic: bool,
    /// Write cone.json (monotonicity cone matrix).
    #[arg(long)]
    dump_cone: bool,
    /// Write forms.json (quadratic forms and moments).
    #[arg(long)]
    dump_forms: bool,
    /// Write sdp.json (relaxation solution and its audit).
    #[arg(long)]
    dump_sdp: bool,
}

fn config(a: &Args) -> RunConfig {
    let mut cfg = RunConfig::new(&a.input, &a.out);
    cfg.degree = a.degree;
    cfg.epsilon_target = a.epsilon;
    cfg.grid_n = a.grid;
    cfg.anova_only = a.anova_only;
    cfg.max_order = a.max_order;
    cfg.distribute_mean = a.distribute_mean;
    cfg.deterministic = a.deterministic;
    cfg.dump_cone = a.dump_cone;
    cfg.dump_forms = a.dump_forms;
    cfg.dump_sdp = a.dump_sdp;
    cfg
}

fn execute(a: &Args) -> Result<i32, CliError> {
    let cfg = config(a);
    if let Some(degrees) = &a.sweep {
        let (rows, csv) = sweep_degrees(&cfg, degrees)?;
        std::fs::create_dir_all(&cfg.out_dir).map_err(|source| CliError::Write {
            path: cfg.out_dir.clone(),
            source,
        })?;
        let path = cfg.out_dir.join("sweep.csv");
        std::fs::write(&path, csv).map_err(|source| CliError::Write { path, source })?;
        let best = rows
            .iter()
            .map(|r| r.ratio)
            .fold(f64::NEG_INFINITY, f64::max);
        return Ok(if 1.0 - best <= cfg.epsilon_target {
            0
        } else {
            2
        });
    }
    let outcome = run(&cfg)?;
    outcome.write(&cfg.out_dir)?;
    eprintln!(
        "epsilon = {:.6e} (target {:.1e}){}",
        outcome.epsilon,
        cfg.epsilon_target,
        if outcome.target_met {
            ""
        } else {
            ": target missed"
        }
    );
    Ok(outcome.exit_code())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    match execute(&args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
