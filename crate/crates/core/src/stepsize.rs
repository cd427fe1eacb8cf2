//! Backtracking stepsize rule and the projection–contraction correction.
//!
//! The search tries `α = σρᵐ` for `m = 0, 1, …` and accepts the first `α`
//! whose predictor `y = P_C(x − αF(x))` satisfies
//!
//! ```text
//! α‖F(x) − F(y)‖ ≤ μ‖x − y‖
//! ```
//!
//! For an `L`-Lipschitz field every accepted `α` lies in
//! `[min{σ, μρ/L}, σ]`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{FeasibleSet, GeometryError, DEFAULT_PROJECTION_TOL};
use crate::linalg::Vector;
use crate::mappings::VectorField;

pub const DEFAULT_TRIAL_CAP: u32 = 100;

/// Predictor and iterate closer than `1e-14·(1 + ‖x‖)` certify a solution.
pub const STOP_RELATIVE_TOL: f64 = 1e-14;

/// Smallest `‖d‖` accepted by [`compute_rho`].
pub const MIN_D_NORM: f64 = 1e-300;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StepsizeError {
    #[error("invalid line-search parameters: {0}")]
    InvalidParams(&'static str),
    #[error("line search exceeded {cap} trials (last alpha {last_alpha:e})")]
    TrialCapExceeded { cap: u32, last_alpha: f64 },
    #[error("direction d has norm {0:e}; iterate and predictor coincide")]
    DegenerateDirection(f64),
    #[error("predictor is not finite at alpha {0:e}")]
    NonFinite(f64),
    #[error(transparent)]
    Projection(#[from] GeometryError),
}

/// `σ > 0`, `ρ ∈ (0, 1)`, `μ ∈ (0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSearchParams {
    pub sigma: f64,
    pub rho: f64,
    pub mu: f64,
}

impl Default for LineSearchParams {
    fn default() -> Self {
        Self {
            sigma: 7.55,
            rho: 0.5,
            mu: 0.85,
        }
    }
}

impl LineSearchParams {
    pub fn new(sigma: f64, rho: f64, mu: f64) -> Result<Self, StepsizeError> {
        let p = Self { sigma, rho, mu };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), StepsizeError> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(StepsizeError::InvalidParams("sigma must be positive"));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(StepsizeError::InvalidParams("rho must lie in (0, 1)"));
        }
        if !(self.mu > 0.0 && self.mu < 1.0) {
            return Err(StepsizeError::InvalidParams("mu must lie in (0, 1)"));
        }
        Ok(())
    }

    /// `σρᵐ`
    pub fn alpha(&self, exponent: u32) -> f64 {
        self.sigma * self.rho.powi(exponent as i32)
    }

    /// The guaranteed floor `min{σ, μρ/L}` for an `L`-Lipschitz field.
    pub fn alpha_floor(&self, lipschitz: f64) -> f64 {
        self.sigma.min(self.mu * self.rho / lipschitz)
    }

    /// The guaranteed floor `(1 − μ)/(1 + μ²)` on the contraction factor.
    pub fn rho_floor(&self) -> f64 {
        (1.0 - self.mu) / (1.0 + self.mu * self.mu)
    }

    /// Upper bound `1/(1 − μ)²` on the contraction factor.
    pub fn rho_ceiling(&self) -> f64 {
        1.0 / ((1.0 - self.mu) * (1.0 - self.mu))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineSearchOutcome {
    pub alpha: f64,
    pub y: Vector,
    pub f_y: Vector,
    /// Number of acceptance tests evaluated, including the successful one.
    pub trials: u32,
    /// Exponent of the accepted stepsize.
    pub exponent: u32,
    /// `x` and `y` coincided: `x` solves the problem.
    pub at_solution: bool,
}

impl LineSearchOutcome {
    /// Re-evaluates the acceptance test on the stored pair.
    pub fn satisfies_rule(&self, x: &Vector, f_x: &Vector, mu: f64) -> bool {
        self.alpha * f_x.distance(&self.f_y) <= mu * x.distance(&self.y)
    }
}

/// Backtracking search with explicit starting exponent and projector
/// tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmijoSearch {
    pub params: LineSearchParams,
    pub trial_cap: u32,
    pub projector_tol: f64,
}

impl ArmijoSearch {
    pub fn new(params: LineSearchParams) -> Self {
        Self {
            params,
            trial_cap: DEFAULT_TRIAL_CAP,
            projector_tol: DEFAULT_PROJECTION_TOL,
        }
    }

    /// Runs the search starting from `α = σρ^start`. Each trial costs one
    /// projection onto `set` and one field evaluation.
    pub fn run(
        &self,
        f: &dyn VectorField,
        set: &FeasibleSet,
        x: &Vector,
        f_x: &Vector,
        start: u32,
    ) -> Result<LineSearchOutcome, StepsizeError> {
        let stop_tol = STOP_RELATIVE_TOL * (1.0 + x.norm());
        let mut exponent = start;
        let mut alpha = self.params.alpha(exponent);
        for trial in 1..=self.trial_cap.max(1) {
            alpha = self.params.alpha(exponent);
            let y = set.project(&x.add_scaled(-alpha, f_x), self.projector_tol)?;
            if !y.is_finite() {
                return Err(StepsizeError::NonFinite(alpha));
            }
            let gap = x.distance(&y);
            let f_y = f.eval(&y);
            if gap <= stop_tol {
                return Ok(LineSearchOutcome {
                    alpha,
                    y,
                    f_y,
                    trials: trial,
                    exponent,
                    at_solution: true,
                });
            }
            if alpha * f_x.distance(&f_y) <= self.params.mu * gap {
                return Ok(LineSearchOutcome {
                    alpha,
                    y,
                    f_y,
                    trials: trial,
                    exponent,
                    at_solution: false,
                });
            }
            exponent += 1;
        }
        Err(StepsizeError::TrialCapExceeded {
            cap: self.trial_cap,
            last_alpha: alpha,
        })
    }
}

/// Cold-start search from `α = σ` with the default projector tolerance.
pub fn armijo_search(
    f: &dyn VectorField,
    set: &FeasibleSet,
    x: &Vector,
    f_x: &Vector,
    params: &LineSearchParams,
    trial_cap: u32,
) -> Result<LineSearchOutcome, StepsizeError> {
    params.validate()?;
    ArmijoSearch {
        params: *params,
        trial_cap,
        projector_tol: DEFAULT_PROJECTION_TOL,
    }
    .run(f, set, x, f_x, 0)
}

/// `d(x, y) = (x − y) − α(F(x) − F(y))`
pub fn compute_d(x: &Vector, y: &Vector, alpha: f64, f_x: &Vector, f_y: &Vector) -> Vector {
    Vector::from_fn(x.dim(), |i| (x[i] - y[i]) - alpha * (f_x[i] - f_y[i]))
}

/// `ρ = ⟨x − y, d⟩ / ‖d‖²`
pub fn compute_rho(x: &Vector, y: &Vector, d: &Vector) -> Result<f64, StepsizeError> {
    let dn = d.norm_sq();
    if dn.sqrt() <= MIN_D_NORM {
        return Err(StepsizeError::DegenerateDirection(dn.sqrt()));
    }
    Ok(x.sub(y).dot(d) / dn)
}
