//! Vector fields `F : Rᵐ → Rᵐ` and sampling diagnostics for them.

use std::fmt;

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::linalg::{spectral_norm, unit_f64, LinalgError, Matrix, Vector, SPECTRAL_MAX_ITER, SPECTRAL_TOL};

/// The operator of a variational inequality.
///
/// Implementations must be re-entrant: the benchmark harness evaluates one
/// field from several threads at once.
pub trait VectorField: Send + Sync {
    fn dim(&self) -> usize;

    /// Evaluates the field. Panics if `x` has the wrong dimension.
    fn eval(&self, x: &Vector) -> Vector;

    /// A known Lipschitz constant, if any.
    fn lipschitz_hint(&self) -> Option<f64> {
        None
    }
}

/// `F(x) = Mx + q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineField {
    #[serde(rename = "M")]
    m: Matrix,
    q: Vector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lipschitz: Option<f64>,
}

impl AffineField {
    pub fn new(m: Matrix, q: Vector) -> Result<Self, LinalgError> {
        if !m.is_square() {
            return Err(LinalgError::NotSquare {
                rows: m.rows(),
                cols: m.cols(),
            });
        }
        if m.rows() != q.dim() {
            return Err(LinalgError::DimensionMismatch {
                expected: m.rows(),
                found: q.dim(),
            });
        }
        Ok(Self {
            m,
            q,
            lipschitz: None,
        })
    }

    /// `F(x) = Mx`.
    pub fn linear(m: Matrix) -> Result<Self, LinalgError> {
        let q = Vector::zeros(m.rows());
        Self::new(m, q)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.m
    }

    pub fn offset(&self) -> &Vector {
        &self.q
    }

    pub fn with_lipschitz(mut self, l: f64) -> Self {
        self.lipschitz = Some(l);
        self
    }

    /// Computes `‖M‖` and stores it as the Lipschitz hint.
    pub fn with_estimated_lipschitz(self) -> Result<Self, LinalgError> {
        let l = estimate_lipschitz(&self)?;
        Ok(self.with_lipschitz(l))
    }
}

impl VectorField for AffineField {
    fn dim(&self) -> usize {
        self.q.dim()
    }

    fn eval(&self, x: &Vector) -> Vector {
        let mut y = self.m.matvec(x);
        y.axpy(1.0, &self.q);
        y
    }

    fn lipschitz_hint(&self) -> Option<f64> {
        self.lipschitz
    }
}

/// Checked `Mx + q`.
pub fn affine_eval(f: &AffineField, x: &Vector) -> Result<Vector, LinalgError> {
    let mut y = f.m.try_matvec(x)?;
    y.axpy(1.0, &f.q);
    Ok(y)
}

/// Lipschitz constant of an affine field, `‖M‖₂`.
pub fn estimate_lipschitz(f: &AffineField) -> Result<f64, LinalgError> {
    Ok(spectral_norm(&f.m, SPECTRAL_TOL, SPECTRAL_MAX_ITER)?.value)
}

/// The quarter-turn rotation `F(x₁, x₂) = (−x₂, x₁)`.
///
/// Monotone with `⟨F(x) − F(y), x − y⟩ = 0` and 1-Lipschitz; the only
/// solution of the unconstrained problem is the origin, yet the one-step
/// projection method moves away from it for every stepsize.
pub fn rotation_field() -> AffineField {
    let m = Matrix::from_rows(&[vec![0.0, -1.0], vec![1.0, 0.0]]).expect("static shape");
    AffineField::linear(m).expect("square").with_lipschitz(1.0)
}

/// A field backed by a closure, for user-supplied nonlinear operators.
pub struct FnField<F> {
    dim: usize,
    f: F,
    lipschitz: Option<f64>,
}

impl<F> FnField<F>
where
    F: Fn(&Vector) -> Vector + Send + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self {
            dim,
            f,
            lipschitz: None,
        }
    }

    pub fn with_lipschitz(mut self, l: f64) -> Self {
        self.lipschitz = Some(l);
        self
    }
}

impl<F> VectorField for FnField<F>
where
    F: Fn(&Vector) -> Vector + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &Vector) -> Vector {
        assert_eq!(x.dim(), self.dim, "FnField: dimension mismatch");
        let y = (self.f)(x);
        assert_eq!(y.dim(), self.dim, "FnField: closure changed the dimension");
        y
    }

    fn lipschitz_hint(&self) -> Option<f64> {
        self.lipschitz
    }
}

impl<F> fmt::Debug for FnField<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnField")
            .field("dim", &self.dim)
            .field("lipschitz", &self.lipschitz)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonicityReport {
    /// Smallest sampled `⟨F(x) − F(y), x − y⟩`.
    pub min_pairing: f64,
    /// Whether some pair fell below `−1e-9·(1 + ‖x − y‖²)`.
    pub violated: bool,
}

/// Samples pairs uniformly in `[−radius, radius]ᵐ` and reports the worst
/// monotonicity pairing. A diagnostic, not a certificate.
pub fn check_monotone(
    f: &dyn VectorField,
    samples: usize,
    box_radius: f64,
    seed: u64,
) -> MonotonicityReport {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let n = f.dim();
    let mut draw = || Vector::from_fn(n, |_| box_radius * (2.0 * unit_f64(rng.next_u64()) - 1.0));
    let mut min_pairing = f64::INFINITY;
    let mut violated = false;
    for _ in 0..samples.max(1) {
        let x = draw();
        let y = draw();
        let dx = x.sub(&y);
        let pairing = f.eval(&x).sub(&f.eval(&y)).dot(&dx);
        min_pairing = min_pairing.min(pairing);
        if pairing < -1e-9 * (1.0 + dx.norm_sq()) {
            violated = true;
        }
    }
    MonotonicityReport {
        min_pairing,
        violated,
    }
}

/// Largest sampled ratio `‖F(x) − F(y)‖ / ‖x − y‖` over pairs drawn in
/// `[−radius, radius]ᵐ`; a lower bound on the Lipschitz constant.
pub fn sampled_lipschitz_ratio(f: &dyn VectorField, samples: usize, box_radius: f64, seed: u64) -> f64 {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let n = f.dim();
    let mut draw = || Vector::from_fn(n, |_| box_radius * (2.0 * unit_f64(rng.next_u64()) - 1.0));
    let mut best = 0.0_f64;
    for _ in 0..samples {
        let x = draw();
        let y = draw();
        let dx = x.distance(&y);
        if dx > 0.0 {
            best = best.max(f.eval(&x).distance(&f.eval(&y)) / dx);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> Vector {
        Vector::new(x.to_vec()).unwrap()
    }

    #[test]
    fn identity_field() {
        let f = AffineField::linear(Matrix::identity(3)).unwrap();
        let x = v(&[1.0, -2.0, 0.5]);
        assert_eq!(affine_eval(&f, &x).unwrap(), x);
        assert!((estimate_lipschitz(&f).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rotation_column_action() {
        let f = rotation_field();
        assert_eq!(f.eval(&v(&[1.0, 0.0])), v(&[0.0, 1.0]));
        assert_eq!(f.eval(&v(&[0.0, 0.0])), v(&[0.0, 0.0]));
        assert_eq!(f.lipschitz_hint(), Some(1.0));
        assert!((estimate_lipschitz(&f).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rotation_is_skew() {
        let f = rotation_field();
        let r = check_monotone(&f, 1000, 10.0, 3);
        assert!(!r.violated);
        assert!(r.min_pairing.abs() < 1e-9, "{}", r.min_pairing);
    }

    #[test]
    fn antitone_field_is_flagged() {
        let m = Matrix::diagonal(&[-1.0, -1.0, -1.0]);
        let f = AffineField::linear(m).unwrap();
        assert!(check_monotone(&f, 10, 1.0, 0).violated);
    }

    #[test]
    fn affine_eval_checks_dimension() {
        let f = rotation_field();
        assert!(affine_eval(&f, &v(&[1.0, 2.0, 3.0])).is_err());
        assert!(AffineField::new(Matrix::identity(2), v(&[1.0])).is_err());
    }

    #[test]
    fn closure_field() {
        let f = FnField::new(2, |x: &Vector| Vector::from_fn(2, |i| x[i].powi(3) + x[i]));
        assert!(!check_monotone(&f, 500, 2.0, 11).violated);
        assert_eq!(f.lipschitz_hint(), None);
        assert_eq!(f.with_lipschitz(13.0).lipschitz_hint(), Some(13.0));
    }
}
