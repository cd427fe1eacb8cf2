//! Projection-type methods for monotone variational inequalities.
//!
//! Five methods share one driver:
//!
//! | method | predictor | corrector |
//! |---|---|---|
//! | projection | – | `P_C(x − αF(x))`, fixed `α` |
//! | extragradient | line search | `P_C(x − αF(y))` |
//! | projection–contraction | line search | `P_C(x − γρα F(y))` |
//! | subgradient extragradient | line search | `P_T(x − αF(y))` |
//! | modified subgradient extragradient | line search | `P_T(x − γρα F(y))` |
//!
//! `y = P_C(x − αF(x))` is the predictor, `T` the halfspace through `y`
//! that supports `C` (see [`build_tk`]) and `ρ` the contraction factor from
//! [`compute_rho`](crate::stepsize::compute_rho). Projections onto `T` are
//! closed form, so the subgradient variants make a single projection onto
//! `C` per line-search trial and none in the corrector.
//!
//! The projection method carries no convergence guarantee for merely
//! monotone fields; on the quarter-turn rotation it spirals outward.

mod driver;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{FeasibleSet, GeometryError, Halfspace, DEFAULT_PROJECTION_TOL};
use crate::linalg::Vector;
use crate::mappings::VectorField;
use crate::stepsize::{LineSearchParams, StepsizeError, DEFAULT_TRIAL_CAP};

pub use driver::solve;

/// How `inner_trials` is counted.
pub const INNER_TRIAL_CONVENTION: &str =
    "acceptance tests per line search, including the accepted one (m_k + 1)";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("starting point has dimension {found}, field has {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("iteration {iteration}: {source}")]
    Stepsize {
        iteration: usize,
        #[source]
        source: StepsizeError,
    },
    #[error("iteration {iteration}: {source}")]
    Projection {
        iteration: usize,
        #[source]
        source: GeometryError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// One-step projection method (fixed stepsize).
    Pm,
    /// Extragradient.
    Eg,
    /// Projection and contraction.
    Pc,
    /// Subgradient extragradient.
    Sem,
    /// Modified subgradient extragradient.
    Msem,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Pm,
        Algorithm::Eg,
        Algorithm::Pc,
        Algorithm::Sem,
        Algorithm::Msem,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Pm => "pm",
            Algorithm::Eg => "eg",
            Algorithm::Pc => "pc",
            Algorithm::Sem => "sem",
            Algorithm::Msem => "msem",
        }
    }

    /// Methods whose corrector is scaled by `γρ`.
    pub fn uses_contraction(self) -> bool {
        matches!(self, Algorithm::Pc | Algorithm::Msem)
    }

    /// Methods whose corrector projects onto the supporting halfspace.
    pub fn uses_halfspace(self) -> bool {
        matches!(self, Algorithm::Sem | Algorithm::Msem)
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown algorithm {s:?} (expected pm, eg, pc, sem or msem)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopRule {
    /// `‖x − y‖ ≤ ε` with `y` the accepted predictor.
    ResidualXY,
    /// `‖x‖ ≤ ε`; meaningful only when the solution is the origin.
    NormX,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub ls: LineSearchParams,
    /// Relaxation `γ ∈ (0, 2)`; values in `[1, 2)` tend to work best.
    pub gamma: f64,
    pub eps: f64,
    pub max_iter: usize,
    pub stop_rule: StopRule,
    pub check_invariants: bool,
    pub projector_tol: f64,
    pub trial_cap: u32,
    /// Start each line search from the previous accepted exponent instead
    /// of from `σ`. The stepsize floor is only guaranteed for cold starts.
    pub warm_start: bool,
    /// Known solution used by the distance-based invariant checks.
    pub reference_solution: Option<Vector>,
    pub capture_trajectory: bool,
    /// Replace `γρ` by 1 in the corrector. Diagnostic only: it turns the
    /// contraction methods back into their unscaled counterparts.
    pub unit_correction: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            ls: LineSearchParams::default(),
            gamma: 1.99,
            eps: 0.005,
            max_iter: 200_000,
            stop_rule: StopRule::ResidualXY,
            check_invariants: true,
            projector_tol: DEFAULT_PROJECTION_TOL,
            trial_cap: DEFAULT_TRIAL_CAP,
            warm_start: false,
            reference_solution: None,
            capture_trajectory: false,
            unit_correction: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolveError> {
        self.ls
            .validate()
            .map_err(|e| SolveError::InvalidConfig(e.to_string()))?;
        if !(self.gamma > 0.0 && self.gamma < 2.0) {
            return Err(SolveError::InvalidConfig(format!(
                "gamma must lie in (0, 2), got {}",
                self.gamma
            )));
        }
        if !(self.eps > 0.0) {
            return Err(SolveError::InvalidConfig("eps must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(SolveError::InvalidConfig("max_iter must be at least 1".into()));
        }
        if !(self.projector_tol > 0.0) {
            return Err(SolveError::InvalidConfig("projector_tol must be positive".into()));
        }
        if self.trial_cap == 0 {
            return Err(SolveError::InvalidConfig("trial_cap must be at least 1".into()));
        }
        Ok(())
    }
}

/// Per-iteration record, captured when `capture_trajectory` is set.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    /// `x⁰, …, x^K`: one more entry than the other lists, the last being
    /// the final iterate.
    pub xs: Vec<Vector>,
    pub ys: Vec<Vector>,
    pub alphas: Vec<f64>,
    /// Contraction factor `ρ_k`, absent for methods that do not use one.
    pub rhos: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub algorithm: Algorithm,
    /// Completed corrector steps.
    pub iterations: usize,
    /// Total line-search acceptance tests; see [`INNER_TRIAL_CONVENTION`].
    pub inner_trials: u64,
    pub wall_seconds: f64,
    /// Stop-rule measure at each completed iteration.
    pub residuals: Vec<f64>,
    /// Stop-rule measure at `final_x`, when it was evaluated.
    pub final_residual: Option<f64>,
    pub final_x: Vector,
    pub converged: bool,
    pub stopped_at_solution: bool,
    /// The iterate became non-finite; `final_x` is the last finite one.
    pub diverged: bool,
    pub invariant_violations: Vec<String>,
    pub trajectory: Option<Trajectory>,
}

/// The halfspace `T = {w : ⟨(x − αF(x)) − y, w − y⟩ ≤ 0}`.
///
/// Returns `None` when the normal vanishes, in which case `T` is the whole
/// space. Since `y` is the projection of `x − αF(x)` onto `C`, every point
/// of `C` lies in `T`.
pub fn build_tk(x: &Vector, alpha: f64, f_x: &Vector, y: &Vector) -> Option<Halfspace> {
    let normal = x.add_scaled(-alpha, f_x).sub(y);
    if normal.norm_sq() < f64::MIN_POSITIVE {
        return None;
    }
    Halfspace::new(normal, y.clone()).ok()
}

/// Natural residual `‖x − P_C(x − αF(x))‖`; zero exactly at solutions.
pub fn vi_residual(
    f: &dyn VectorField,
    set: &FeasibleSet,
    x: &Vector,
    alpha: f64,
    projector_tol: f64,
) -> Result<f64, GeometryError> {
    let p = set.project(&x.add_scaled(-alpha, &f.eval(x)), projector_tol)?;
    Ok(x.distance(&p))
}

/// One-step projection method `x ← P_C(x − αF(x))` with fixed `α`.
pub fn solve_projection_method(
    f: &dyn VectorField,
    set: &FeasibleSet,
    x0: &Vector,
    alpha: f64,
    cfg: &SolverConfig,
) -> Result<SolveReport, SolveError> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(SolveError::InvalidConfig(format!(
            "projection method stepsize must be positive, got {alpha}"
        )));
    }
    driver::solve_fixed_step(f, set, x0, alpha, cfg)
}

pub fn solve_extragradient(
    f: &dyn VectorField,
    set: &FeasibleSet,
    x0: &Vector,
    cfg: &SolverConfig,
) -> Result<SolveReport, SolveError> {
    solve(Algorithm::Eg, f, set, x0, cfg)
}

pub fn solve_projection_contraction(
    f: &dyn VectorField,
    set: &FeasibleSet,
    x0: &Vector,
    cfg: &SolverConfig,
) -> Result<SolveReport, SolveError> {
    solve(Algorithm::Pc, f, set, x0, cfg)
}

pub fn solve_subgradient_extragradient(
    f: &dyn VectorField,
    set: &FeasibleSet,
    x0: &Vector,
    cfg: &SolverConfig,
) -> Result<SolveReport, SolveError> {
    solve(Algorithm::Sem, f, set, x0, cfg)
}

pub fn solve_modified_subgradient_extragradient(
    f: &dyn VectorField,
    set: &FeasibleSet,
    x0: &Vector,
    cfg: &SolverConfig,
) -> Result<SolveReport, SolveError> {
    solve(Algorithm::Msem, f, set, x0, cfg)
}
