use std::time::Instant;

use super::{build_tk, Algorithm, SolveError, SolveReport, SolverConfig, StopRule, Trajectory};
use crate::geometry::FeasibleSet;
use crate::linalg::Vector;
use crate::mappings::VectorField;
use crate::stepsize::{compute_d, compute_rho, ArmijoSearch, LineSearchOutcome, STOP_RELATIVE_TOL};

/// Stored violation messages are capped; the count keeps going.
const MAX_VIOLATION_MESSAGES: usize = 200;

const CONTRACTION_SLACK: f64 = 1e-9;
const BOUND_SLACK: f64 = 1e-12;
const HALFSPACE_SLACK: f64 = 1e-12;

struct Monitor {
    enabled: bool,
    messages: Vec<String>,
    dropped: usize,
}

impl Monitor {
    fn new(enabled: bool) -> Self {
        Self {
            enabled,
            messages: Vec::new(),
            dropped: 0,
        }
    }

    fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if ok {
            return;
        }
        if self.messages.len() < MAX_VIOLATION_MESSAGES {
            self.messages.push(msg());
        } else {
            self.dropped += 1;
        }
    }

    fn finish(mut self) -> Vec<String> {
        if self.dropped > 0 {
            self.messages
                .push(format!("... {} further violations not recorded", self.dropped));
        }
        self.messages
    }
}

fn check_dim(f: &dyn VectorField, set: &FeasibleSet, x0: &Vector) -> Result<(), SolveError> {
    if x0.dim() != f.dim() {
        return Err(SolveError::DimensionMismatch {
            expected: f.dim(),
            found: x0.dim(),
        });
    }
    if let Some(d) = set.dim() {
        if d != f.dim() {
            return Err(SolveError::DimensionMismatch {
                expected: f.dim(),
                found: d,
            });
        }
    }
    Ok(())
}

/// Runs one of the line-search methods. The projection method needs a
/// fixed stepsize; use [`super::solve_projection_method`] for it.
pub fn solve(
    algorithm: Algorithm,
    f: &dyn VectorField,
    set: &FeasibleSet,
    x0: &Vector,
    cfg: &SolverConfig,
) -> Result<SolveReport, SolveError> {
    if algorithm == Algorithm::Pm {
        return Err(SolveError::InvalidConfig(
            "the projection method takes a fixed stepsize; call solve_projection_method".into(),
        ));
    }
    cfg.validate()?;
    check_dim(f, set, x0)?;

    let search = ArmijoSearch {
        params: cfg.ls,
        trial_cap: cfg.trial_cap,
        projector_tol: cfg.projector_tol,
    };
    let lipschitz = f.lipschitz_hint();
    let reference = cfg.reference_solution.as_ref();
    let fejer_slack = CONTRACTION_SLACK * (1.0 + x0.norm());

    let mut monitor = Monitor::new(cfg.check_invariants);
    let mut trajectory = cfg.capture_trajectory.then(Trajectory::default);
    let mut residuals = Vec::new();
    let mut inner_trials = 0u64;
    let mut converged = false;
    let mut stopped_at_solution = false;
    let mut diverged = false;
    let mut final_residual = None;
    let mut start_exponent = 0u32;

    let clock = Instant::now();
    let mut x = x0.clone();
    let mut f_x = f.eval(&x);
    let mut k = 0usize;

    while k < cfg.max_iter {
        if cfg.stop_rule == StopRule::NormX {
            let nx = x.norm();
            if nx <= cfg.eps {
                final_residual = Some(nx);
                converged = true;
                break;
            }
        }

        let ls = search
            .run(f, set, &x, &f_x, start_exponent)
            .map_err(|source| SolveError::Stepsize {
                iteration: k,
                source,
            })?;
        inner_trials += u64::from(ls.trials);
        if cfg.warm_start {
            start_exponent = ls.exponent;
        }
        let gap = x.distance(&ls.y);
        let measure = match cfg.stop_rule {
            StopRule::ResidualXY => gap,
            StopRule::NormX => x.norm(),
        };
        if ls.at_solution {
            stopped_at_solution = true;
            converged = measure <= cfg.eps;
            final_residual = Some(measure);
            break;
        }
        if cfg.stop_rule == StopRule::ResidualXY && gap <= cfg.eps {
            final_residual = Some(gap);
            converged = true;
            break;
        }

        let step = corrector(algorithm, cfg, set, &x, &f_x, &ls).map_err(|e| match e {
            CorrectorError::Stepsize(source) => SolveError::Stepsize { iteration: k, source },
            CorrectorError::Projection(source) => SolveError::Projection { iteration: k, source },
        })?;

        if !step.next.is_finite() {
            diverged = true;
            break;
        }

        if monitor.enabled {
            audit(
                &mut monitor,
                algorithm,
                cfg,
                set,
                k,
                &x,
                &f_x,
                &ls,
                &step,
                lipschitz,
                reference,
                fejer_slack,
            );
        }

        residuals.push(measure);
        if let Some(t) = trajectory.as_mut() {
            t.xs.push(x.clone());
            t.ys.push(ls.y.clone());
            t.alphas.push(ls.alpha);
            t.rhos.push(step.rho);
        }

        x = step.next;
        f_x = f.eval(&x);
        k += 1;
    }

    if k == cfg.max_iter && cfg.stop_rule == StopRule::NormX {
        let nx = x.norm();
        final_residual = Some(nx);
        converged = nx <= cfg.eps;
    }
    let wall_seconds = clock.elapsed().as_secs_f64();

    if let Some(t) = trajectory.as_mut() {
        t.xs.push(x.clone());
    }

    Ok(SolveReport {
        algorithm,
        iterations: k,
        inner_trials,
        wall_seconds,
        residuals,
        final_residual,
        final_x: x,
        converged,
        stopped_at_solution,
        diverged,
        invariant_violations: monitor.finish(),
        trajectory,
    })
}

struct Step {
    next: Vector,
    rho: Option<f64>,
    d: Option<Vector>,
    /// The supporting halfspace for the subgradient variants, `None` also
    /// when it degenerates to the whole space.
    tk: Option<crate::geometry::Halfspace>,
}

enum CorrectorError {
    Stepsize(crate::stepsize::StepsizeError),
    Projection(crate::geometry::GeometryError),
}

fn corrector(
    algorithm: Algorithm,
    cfg: &SolverConfig,
    set: &FeasibleSet,
    x: &Vector,
    f_x: &Vector,
    ls: &LineSearchOutcome,
) -> Result<Step, CorrectorError> {
    let (scale, rho, d) = if algorithm.uses_contraction() {
        let d = compute_d(x, &ls.y, ls.alpha, f_x, &ls.f_y);
        let rho = compute_rho(x, &ls.y, &d).map_err(CorrectorError::Stepsize)?;
        let scale = if cfg.unit_correction { 1.0 } else { cfg.gamma * rho };
        (scale, Some(rho), Some(d))
    } else {
        (1.0, None, None)
    };
    let trial = x.add_scaled(-(scale * ls.alpha), &ls.f_y);

    if algorithm.uses_halfspace() {
        let tk = build_tk(x, ls.alpha, f_x, &ls.y);
        let next = match &tk {
            Some(h) => h.project(&trial),
            None => trial,
        };
        Ok(Step { next, rho, d, tk })
    } else {
        let next = set
            .project(&trial, cfg.projector_tol)
            .map_err(CorrectorError::Projection)?;
        Ok(Step {
            next,
            rho,
            d,
            tk: None,
        })
    }
}

#[allow(clippy::too_many_arguments)]
fn audit(
    monitor: &mut Monitor,
    algorithm: Algorithm,
    cfg: &SolverConfig,
    set: &FeasibleSet,
    k: usize,
    x: &Vector,
    f_x: &Vector,
    ls: &LineSearchOutcome,
    step: &Step,
    lipschitz: Option<f64>,
    reference: Option<&Vector>,
    fejer_slack: f64,
) {
    let p = &cfg.ls;
    let gap = x.distance(&ls.y);

    monitor.check(ls.satisfies_rule(x, f_x, p.mu), || {
        format!("iter {k}: accepted alpha {:e} fails the line-search test", ls.alpha)
    });
    monitor.check(ls.alpha <= p.sigma, || {
        format!("iter {k}: alpha {:e} exceeds sigma", ls.alpha)
    });
    // The floor argument needs the rejected trial at α/ρ, which a warm
    // start that succeeds immediately never made.
    if let Some(l) = lipschitz {
        if !cfg.warm_start || ls.trials > 1 {
            let floor = p.alpha_floor(l);
            monitor.check(ls.alpha >= floor - BOUND_SLACK, || {
                format!("iter {k}: alpha {:e} below floor {floor:e}", ls.alpha)
            });
        }
    }
    monitor.check(set.contains(&ls.y, cfg.projector_tol), || {
        format!("iter {k}: predictor violates C by {:e}", set.violation(&ls.y))
    });

    if let (Some(rho), Some(d)) = (step.rho, step.d.as_ref()) {
        let dn = d.norm();
        monitor.check(dn >= (1.0 - p.mu) * gap - BOUND_SLACK, || {
            format!("iter {k}: |d| = {dn:e} below (1-mu)|x-y| = {:e}", (1.0 - p.mu) * gap)
        });
        let lo = p.rho_floor() - BOUND_SLACK;
        let hi = p.rho_ceiling() + BOUND_SLACK;
        monitor.check(rho >= lo && rho <= hi, || {
            format!("iter {k}: rho {rho} outside [{lo}, {hi}]")
        });
    }

    if let Some(tk) = &step.tk {
        let v = tk.violation(&step.next);
        monitor.check(v <= HALFSPACE_SLACK, || {
            format!("iter {k}: next iterate violates T_k by {v:e}")
        });
    }

    let Some(xs) = reference else { return };
    if algorithm == Algorithm::Eg {
        return;
    }
    let before = x.distance(xs);
    let after = step.next.distance(xs);
    monitor.check(after <= before + fejer_slack, || {
        format!("iter {k}: distance to solution grew from {before:e} to {after:e}")
    });
    match algorithm {
        Algorithm::Sem => {
            let bound = before * before - (1.0 - p.mu * p.mu) * gap * gap;
            monitor.check(after * after <= bound + CONTRACTION_SLACK, || {
                format!(
                    "iter {k}: contraction fails, |x+ - x*|^2 = {:e} > {bound:e}",
                    after * after
                )
            });
        }
        Algorithm::Msem => {
            let (Some(rho), Some(d)) = (step.rho, step.d.as_ref()) else { return };
            let bound = msem_contraction_bound(x, &step.next, xs, d, rho, cfg.gamma);
            monitor.check(after * after <= bound + CONTRACTION_SLACK, || {
                format!(
                    "iter {k}: contraction fails, |x+ - x*|^2 = {:e} > {bound:e}",
                    after * after
                )
            });
        }
        _ => {}
    }
}

/// `‖x − x*‖² − ‖(x − x⁺) − γρd‖² − γ(2 − γ)ρ²‖d‖²`
pub(crate) fn msem_contraction_bound(
    x: &Vector,
    next: &Vector,
    solution: &Vector,
    d: &Vector,
    rho: f64,
    gamma: f64,
) -> f64 {
    let before = x.sub(solution).norm_sq();
    let gap = x.sub(next).add_scaled(-gamma * rho, d).norm_sq();
    before - gap - gamma * (2.0 - gamma) * rho * rho * d.norm_sq()
}

pub(super) fn solve_fixed_step(
    f: &dyn VectorField,
    set: &FeasibleSet,
    x0: &Vector,
    alpha: f64,
    cfg: &SolverConfig,
) -> Result<SolveReport, SolveError> {
    cfg.validate()?;
    check_dim(f, set, x0)?;

    let mut trajectory = cfg.capture_trajectory.then(Trajectory::default);
    let mut residuals = Vec::new();
    let mut converged = false;
    let mut stopped_at_solution = false;
    let mut diverged = false;
    let mut final_residual = None;

    let clock = Instant::now();
    let mut x = x0.clone();
    let mut k = 0usize;
    while k < cfg.max_iter {
        if cfg.stop_rule == StopRule::NormX {
            let nx = x.norm();
            if nx <= cfg.eps {
                final_residual = Some(nx);
                converged = true;
                break;
            }
        }
        let next = set
            .project(&x.add_scaled(-alpha, &f.eval(&x)), cfg.projector_tol)
            .map_err(|source| SolveError::Projection { iteration: k, source })?;
        if !next.is_finite() {
            diverged = true;
            break;
        }
        let gap = x.distance(&next);
        let measure = match cfg.stop_rule {
            StopRule::ResidualXY => gap,
            StopRule::NormX => x.norm(),
        };
        if gap <= STOP_RELATIVE_TOL * (1.0 + x.norm()) {
            stopped_at_solution = true;
            converged = measure <= cfg.eps;
            final_residual = Some(measure);
            break;
        }
        if cfg.stop_rule == StopRule::ResidualXY && gap <= cfg.eps {
            final_residual = Some(gap);
            converged = true;
            break;
        }
        residuals.push(measure);
        if let Some(t) = trajectory.as_mut() {
            t.xs.push(x.clone());
            t.ys.push(next.clone());
            t.alphas.push(alpha);
            t.rhos.push(None);
        }
        x = next;
        k += 1;
    }
    if k == cfg.max_iter && cfg.stop_rule == StopRule::NormX {
        let nx = x.norm();
        final_residual = Some(nx);
        converged = nx <= cfg.eps;
    }
    let wall_seconds = clock.elapsed().as_secs_f64();
    if let Some(t) = trajectory.as_mut() {
        t.xs.push(x.clone());
    }

    Ok(SolveReport {
        algorithm: Algorithm::Pm,
        iterations: k,
        inner_trials: 0,
        wall_seconds,
        residuals,
        final_residual,
        final_x: x,
        converged,
        stopped_at_solution,
        diverged,
        invariant_violations: Vec::new(),
        trajectory,
    })
}
