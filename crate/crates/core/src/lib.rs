//! Projection-type solvers for monotone variational inequalities.
//!
//! Given a monotone, Lipschitz field `F` and a closed convex set `C`, find
//! `x* ∈ C` with `⟨F(x*), x − x*⟩ ≥ 0` for every `x ∈ C`.
//!
//! The crate provides the one-step projection method, extragradient,
//! projection–contraction, subgradient extragradient and the modified
//! subgradient extragradient method, which scales the closed-form halfspace
//! corrector of subgradient extragradient by a projection–contraction factor.
//! Solvers can audit their own iterates against the known contraction and
//! stepsize bounds while they run.
//!
//! ```
//! use msem::problems::{harker_pang, starting_point};
//! use msem::solvers::{solve_modified_subgradient_extragradient, SolverConfig, StopRule};
//!
//! let inst = harker_pang(5, 20, 1).unwrap();
//! let cfg = SolverConfig { stop_rule: StopRule::NormX, ..SolverConfig::default() };
//! let report = solve_modified_subgradient_extragradient(
//!     &inst.field, &inst.set, &starting_point(5, 1), &cfg,
//! ).unwrap();
//! assert!(report.converged);
//! assert!(report.final_x.norm() <= 0.005);
//! ```

pub mod bench;
pub mod geometry;
pub mod linalg;
pub mod mappings;
pub mod problems;
pub mod solvers;
pub mod stepsize;

pub use geometry::{FeasibleSet, Halfspace, Polyhedron};
pub use linalg::{Matrix, Vector};
pub use mappings::{AffineField, VectorField};
pub use solvers::{Algorithm, SolveReport, SolverConfig, StopRule};
