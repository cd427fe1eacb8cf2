mod common;

use msem::mappings::rotation_field;
use msem::problems::{harker_pang, starting_point, toy_instances};
use msem::solvers::{solve, vi_residual, Algorithm, SolverConfig, StopRule};
use msem::stepsize::{armijo_search, compute_d, compute_rho, LineSearchParams, DEFAULT_TRIAL_CAP};
use msem::{FeasibleSet, Vector, VectorField};

fn norm_x() -> SolverConfig {
    SolverConfig {
        stop_rule: StopRule::NormX,
        check_invariants: false,
        ..SolverConfig::default()
    }
}

fn iterations(algo: Algorithm, m: usize, seed: u64) -> usize {
    let inst = harker_pang(m, 100, seed).unwrap();
    let r = solve(algo, &inst.field, &inst.set, &starting_point(m, seed), &norm_x()).unwrap();
    assert!(r.converged, "{algo} m={m} seed={seed}");
    r.iterations
}

#[test]
fn projection_contraction_beats_extragradient_on_most_seeds() {
    let wins = (0..20)
        .filter(|&s| iterations(Algorithm::Pc, 10, s) < iterations(Algorithm::Eg, 10, s))
        .count();
    assert!(wins >= 18, "PC fewer iterations on {wins}/20 seeds");
}

#[test]
fn modified_method_beats_subgradient_extragradient_at_m20() {
    let wins = (0..20)
        .filter(|&s| iterations(Algorithm::Msem, 20, s) < iterations(Algorithm::Sem, 20, s))
        .count();
    assert!(wins >= 18, "MSEM fewer iterations on {wins}/20 seeds");
}

#[test]
fn contraction_methods_audited_on_benchmark_instances() {
    for seed in 0..3 {
        let inst = harker_pang(10, 100, seed).unwrap();
        for algo in [Algorithm::Eg, Algorithm::Pc, Algorithm::Sem, Algorithm::Msem] {
            let cfg = SolverConfig {
                check_invariants: true,
                reference_solution: inst.known_solution.clone(),
                ..norm_x()
            };
            let r = solve(algo, &inst.field, &inst.set, &starting_point(10, seed), &cfg).unwrap();
            assert!(r.converged);
            assert!(r.final_x.norm() <= 0.005);
            assert!(r.invariant_violations.is_empty(), "{algo}: {:?}", r.invariant_violations);
        }
    }
}

#[test]
fn rho_matches_the_expanded_formula() {
    // ρ = (‖x−y‖² − α⟨x−y, F(x)−F(y)⟩)/‖d‖², from the definition of d.
    let params = LineSearchParams::default();
    for seed in 0..10 {
        let inst = harker_pang(8, 100, seed).unwrap();
        let x = starting_point(8, seed).scale(2.0);
        let fx = inst.field.eval(&x);
        let out = armijo_search(&inst.field, &inst.set, &x, &fx, &params, DEFAULT_TRIAL_CAP).unwrap();
        let d = compute_d(&x, &out.y, out.alpha, &fx, &out.f_y);
        let xy = x.sub(&out.y);
        let expanded = (xy.norm_sq() - out.alpha * xy.dot(&fx.sub(&out.f_y))) / d.norm_sq();
        let rho = compute_rho(&x, &out.y, &d).unwrap();
        assert!((rho - expanded).abs() <= 1e-12 * rho.abs().max(1.0), "{rho} vs {expanded}");
    }
}

#[test]
fn modified_method_reduces_the_natural_residual() {
    for seed in 0..5 {
        let inst = harker_pang(10, 100, seed).unwrap();
        let x0 = starting_point(10, seed);
        let r = solve(Algorithm::Msem, &inst.field, &inst.set, &x0, &norm_x()).unwrap();
        let before = vi_residual(&inst.field, &inst.set, &x0, 1.0, 1e-10).unwrap();
        let after = vi_residual(&inst.field, &inst.set, &r.final_x, 1.0, 1e-10).unwrap();
        assert!(after <= before, "seed {seed}: {after} > {before}");
    }
}

#[test]
fn extragradient_reaches_the_origin_on_the_rotation() {
    let cfg = SolverConfig {
        eps: 1e-10,
        ..SolverConfig::default()
    };
    let r = solve(
        Algorithm::Eg,
        &rotation_field(),
        &FeasibleSet::WholeSpace,
        &Vector::from(vec![1.0, 0.0]),
        &cfg,
    )
    .unwrap();
    assert!(r.converged);
    assert!(r.final_x.norm() < 1e-8);
}

#[test]
fn box_problem_converges_to_the_lower_corner() {
    let inst = &toy_instances()[1];
    let xs = inst.known_solution.clone().unwrap();
    for algo in [Algorithm::Eg, Algorithm::Pc, Algorithm::Sem, Algorithm::Msem] {
        let cfg = SolverConfig {
            eps: 1e-10,
            ..SolverConfig::default()
        };
        let r = solve(algo, &inst.field, &inst.set, &Vector::from(vec![1.9, 1.4]), &cfg).unwrap();
        assert!(r.final_x.distance(&xs) < 1e-8, "{algo}: {:?}", r.final_x);
    }
}

#[test]
fn warm_start_needs_fewer_trials() {
    let inst = harker_pang(10, 100, 4).unwrap();
    let x0 = starting_point(10, 4);
    let cold = solve(Algorithm::Msem, &inst.field, &inst.set, &x0, &norm_x()).unwrap();
    let warm = solve(
        Algorithm::Msem,
        &inst.field,
        &inst.set,
        &x0,
        &SolverConfig {
            warm_start: true,
            ..norm_x()
        },
    )
    .unwrap();
    assert!(warm.converged);
    assert!(
        (warm.inner_trials as f64 / warm.iterations as f64) < (cold.inner_trials as f64 / cold.iterations as f64)
    );
}

#[test]
fn squared_residuals_are_summable() {
    // Telescoping the per-step contraction bounds Σ‖x^k − y^k‖² by a
    // multiple of ‖x⁰ − x*‖².
    let p = LineSearchParams::default();
    let gamma = SolverConfig::default().gamma;
    for seed in 0..5 {
        let inst = harker_pang(10, 100, seed).unwrap();
        let x0 = starting_point(10, seed);
        let cfg = SolverConfig {
            capture_trajectory: true,
            ..norm_x()
        };
        for (algo, per_step) in [
            (Algorithm::Sem, 1.0 - p.mu * p.mu),
            (Algorithm::Msem, gamma * (2.0 - gamma) * p.rho_floor() * (1.0 - p.mu)),
        ] {
            let r = solve(algo, &inst.field, &inst.set, &x0, &cfg).unwrap();
            let t = r.trajectory.unwrap();
            let sum: f64 = t.xs.iter().zip(&t.ys).map(|(x, y)| x.sub(y).norm_sq()).sum();
            let bound = x0.norm_sq() / per_step;
            assert!(sum <= bound * (1.0 + 1e-9), "{algo} seed {seed}: {sum} > {bound}");
        }
    }
}
