//! Nomographic approximation of multivariate polynomials.
//!
//! Given `f: [0,1]^K → [0,1]`, find univariate inner functions `φ_k`, a
//! constant `φ_∅` and a continuous monotone outer function `ψ` such that
//! `f(x) ≈ ψ(φ_∅ + Σ_k φ_k(x_k))`. The outer function is the inverse of a
//! monotone skew polynomial `g` chosen to make `g∘f` as close to additive as
//! possible, measured by the first-order share of its ANOVA variance.
//!
//! ```no_run
//! use nomograph::{approximate, error_report, MultiPoly, Options};
//!
//! let f: MultiPoly = serde_json::from_str(r#"{"num_vars": 2, "terms": [
//!     {"exp": [1, 0], "coeff": 0.5}, {"exp": [0, 1], "coeff": 0.5}]}"#).unwrap();
//! let na = approximate(&f, &Options::new(5)).unwrap();
//! let report = error_report(&na, &f, 101).unwrap();
//! println!("epsilon = {:e}, sup error = {:e}", na.epsilon, report.sup_err);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod anova;
pub mod bernstein;
pub mod error;
pub mod forms;
pub mod numeric;
pub mod pipeline;
pub mod polynomial;
pub mod sdp;

pub use anova::{anova_decompose, AnovaResult, Component};
pub use bernstein::{bernstein_bounds, build_cone, in_cone, project_heuristic, ConeData, SkewPoly};
pub use error::{Error, Result};
pub use forms::{build_forms, check_unit_range, Equilibrated, QuadForms};
pub use nalgebra::{DMatrix, DVector};
pub use pipeline::{
    approximate, approximate_with_stages, error_report, invert_outer, ErrorReport, MonotoneTable,
    NomoApprox, Options, Stages,
};
pub use polynomial::{compose_uni_multi, inner_product, MultiPoly, UniPoly};
pub use sdp::{extract_top_eig, solve_sdr, verify_solution, SdpProblem, SdpSolution, SdpStatus};
