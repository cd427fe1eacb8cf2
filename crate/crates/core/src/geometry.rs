//! Metric projections onto the feasible sets used by the solvers.
//!
//! Halfspaces, boxes and balls have closed-form projections. A polyhedron
//! `{x : Qx ≤ b}` is projected with Dykstra's alternating-projection method
//! over its row halfspaces, which (unlike plain cyclic projection) converges
//! to the true nearest point.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{nnls, LinalgError, Matrix, Vector};

/// Default stopping tolerance for iterative projections.
pub const DEFAULT_PROJECTION_TOL: f64 = 1e-10;
/// Default sweep budget for Dykstra's method.
pub const DEFAULT_MAX_SWEEPS: usize = 100_000;

/// Dykstra sweeps after which the polyhedral projector switches to the
/// exact least-distance solve.
pub const EXACT_AFTER_SWEEPS: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("halfspace normal must be nonzero")]
    ZeroNormal,
    #[error("dimension mismatch: set has dimension {expected}, point has {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("box bounds inverted at coordinate {index}")]
    InvertedBox { index: usize },
    #[error("ball radius must be nonnegative and finite, got {0}")]
    BadRadius(f64),
    #[error("row {row} of Q is zero but b[{row}] = {rhs} < 0: the polyhedron is empty")]
    EmptyPolyhedron { row: usize, rhs: f64 },
    #[error("Dykstra projection did not converge in {sweeps} sweeps (last change {last_change:e})")]
    NotConverged {
        sweeps: usize,
        last_change: f64,
        best: Vector,
    },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// The halfspace `{z : ⟨normal, z − anchor⟩ ≤ 0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "HalfspaceData", into = "HalfspaceData")]
pub struct Halfspace {
    normal: Vector,
    anchor: Vector,
    normal_sq: f64,
}

#[derive(Serialize, Deserialize)]
struct HalfspaceData {
    normal: Vector,
    anchor: Vector,
}

impl TryFrom<HalfspaceData> for Halfspace {
    type Error = GeometryError;

    fn try_from(d: HalfspaceData) -> Result<Self, Self::Error> {
        Halfspace::new(d.normal, d.anchor)
    }
}

impl From<Halfspace> for HalfspaceData {
    fn from(h: Halfspace) -> Self {
        HalfspaceData {
            normal: h.normal,
            anchor: h.anchor,
        }
    }
}

impl Halfspace {
    pub fn new(normal: Vector, anchor: Vector) -> Result<Self, GeometryError> {
        if normal.dim() != anchor.dim() {
            return Err(GeometryError::DimensionMismatch {
                expected: normal.dim(),
                found: anchor.dim(),
            });
        }
        let normal_sq = normal.norm_sq();
        if !(normal_sq > 0.0) || !normal_sq.is_finite() {
            return Err(GeometryError::ZeroNormal);
        }
        Ok(Self {
            normal,
            anchor,
            normal_sq,
        })
    }

    pub fn normal(&self) -> &Vector {
        &self.normal
    }

    pub fn anchor(&self) -> &Vector {
        &self.anchor
    }

    pub fn dim(&self) -> usize {
        self.normal.dim()
    }

    /// `⟨normal, z − anchor⟩`; nonpositive exactly on members.
    pub fn level(&self, z: &[f64]) -> f64 {
        self.normal
            .iter()
            .zip(z.iter().zip(self.anchor.iter()))
            .map(|(v, (z, a))| v * (z - a))
            .sum()
    }

    /// Euclidean distance from `z` to the halfspace.
    pub fn violation(&self, z: &Vector) -> f64 {
        self.level(z).max(0.0) / self.normal_sq.sqrt()
    }

    pub fn contains(&self, z: &Vector, tol: f64) -> bool {
        self.violation(z) <= tol
    }

    /// Closed-form projection `u − max{0, ⟨v, u − x⟩/‖v‖²}·v`.
    pub fn project(&self, u: &Vector) -> Vector {
        let level = self.level(u);
        if level <= 0.0 {
            return u.clone();
        }
        u.add_scaled(-level / self.normal_sq, &self.normal)
    }
}

/// Checked closed-form halfspace projection.
pub fn project_halfspace(u: &Vector, h: &Halfspace) -> Result<Vector, GeometryError> {
    if u.dim() != h.dim() {
        return Err(GeometryError::DimensionMismatch {
            expected: h.dim(),
            found: u.dim(),
        });
    }
    Ok(h.project(u))
}

/// The polyhedron `{x : Qx ≤ b}`.
///
/// Zero rows of `Q` with `b_i ≥ 0` are vacuous and dropped from the sweep
/// order; the original matrix is kept for membership tests and
/// serialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolyhedronData", into = "PolyhedronData")]
pub struct Polyhedron {
    q: Matrix,
    b: Vector,
    active_rows: Vec<usize>,
    row_norm_sq: Vec<f64>,
    b_norm: f64,
}

#[derive(Serialize, Deserialize)]
struct PolyhedronData {
    #[serde(rename = "Q")]
    q: Matrix,
    b: Vector,
}

impl TryFrom<PolyhedronData> for Polyhedron {
    type Error = GeometryError;

    fn try_from(d: PolyhedronData) -> Result<Self, Self::Error> {
        Polyhedron::new(d.q, d.b)
    }
}

impl From<Polyhedron> for PolyhedronData {
    fn from(p: Polyhedron) -> Self {
        PolyhedronData { q: p.q, b: p.b }
    }
}

impl Polyhedron {
    pub fn new(q: Matrix, b: Vector) -> Result<Self, GeometryError> {
        if q.rows() != b.dim() {
            return Err(GeometryError::DimensionMismatch {
                expected: q.rows(),
                found: b.dim(),
            });
        }
        let mut active_rows = Vec::with_capacity(q.rows());
        let mut row_norm_sq = vec![0.0; q.rows()];
        for i in 0..q.rows() {
            let ns: f64 = q.row(i).iter().map(|a| a * a).sum();
            row_norm_sq[i] = ns;
            if ns > 0.0 {
                active_rows.push(i);
            } else if b[i] < 0.0 {
                return Err(GeometryError::EmptyPolyhedron { row: i, rhs: b[i] });
            }
        }
        let b_norm = b.norm();
        Ok(Self {
            q,
            b,
            active_rows,
            row_norm_sq,
            b_norm,
        })
    }

    pub fn q(&self) -> &Matrix {
        &self.q
    }

    pub fn b(&self) -> &Vector {
        &self.b
    }

    pub fn dim(&self) -> usize {
        self.q.cols()
    }

    /// Feasibility tolerance `tol·(1 + ‖b‖)`.
    pub fn scaled_tol(&self, tol: f64) -> f64 {
        tol * (1.0 + self.b_norm)
    }

    /// Largest constraint violation `max_i (Q_i z − b_i)⁺`.
    pub fn max_violation(&self, z: &[f64]) -> f64 {
        (0..self.q.rows())
            .map(|i| {
                let qz: f64 = self.q.row(i).iter().zip(z).map(|(a, b)| a * b).sum();
                qz - self.b[i]
            })
            .fold(0.0, f64::max)
    }

    pub fn contains(&self, z: &Vector, tol: f64) -> bool {
        self.max_violation(z) <= self.scaled_tol(tol)
    }

    /// Dykstra's method over the row halfspaces.
    ///
    /// Stops when the Euclidean length of all moves made during one full
    /// sweep is at most `tol` and the iterate satisfies every row within
    /// `tol·(1 + ‖b‖)`. Dykstra converges sublinearly when many rows meet
    /// near the projection, so after [`EXACT_AFTER_SWEEPS`] sweeps the
    /// exact [`Polyhedron::project_least_distance`] is tried once; if it
    /// fails, sweeping continues to `max_sweeps`.
    pub fn project(&self, u: &Vector, tol: f64, max_sweeps: usize) -> Result<Vector, GeometryError> {
        if u.dim() != self.dim() {
            return Err(GeometryError::DimensionMismatch {
                expected: self.dim(),
                found: u.dim(),
            });
        }
        let feas_tol = self.scaled_tol(tol);
        if self.max_violation(u) <= 0.0 {
            return Ok(u.clone());
        }
        let n = self.dim();
        let rows = &self.active_rows;
        let mut x = u.to_vec();
        // One correction vector per active row, stored contiguously.
        let mut corr = vec![0.0; rows.len() * n];
        let mut z = vec![0.0; n];
        let mut last_change = f64::INFINITY;

        for sweep in 0..max_sweeps {
            let mut moved_sq = 0.0;
            for (k, &i) in rows.iter().enumerate() {
                let qi = self.q.row(i);
                let p = &mut corr[k * n..(k + 1) * n];
                for j in 0..n {
                    z[j] = x[j] + p[j];
                }
                let level: f64 = qi.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>() - self.b[i];
                let shift = if level > 0.0 {
                    level / self.row_norm_sq[i]
                } else {
                    0.0
                };
                for j in 0..n {
                    let xn = z[j] - shift * qi[j];
                    let d = xn - x[j];
                    moved_sq += d * d;
                    x[j] = xn;
                    p[j] = z[j] - xn;
                }
            }
            last_change = moved_sq.sqrt();
            if last_change <= tol && self.max_violation(&x) <= feas_tol {
                return Ok(Vector::from(x));
            }
            if sweep + 1 == EXACT_AFTER_SWEEPS {
                if let Some(z) = self.project_least_distance(u, feas_tol) {
                    return Ok(z);
                }
            }
        }
        Err(GeometryError::NotConverged {
            sweeps: max_sweeps,
            last_change,
            best: Vector::from(x),
        })
    }
}

impl Polyhedron {
    /// Exact projection as a least-distance program.
    ///
    /// With `w = z − u` the projection is `min ‖w‖` subject to
    /// `−Qw ≥ Qu − b`, which reduces to nonnegative least squares on the
    /// stacked matrix `[−Qᵀ; (Qu − b)ᵀ]`. The result is accepted only if it
    /// is feasible within `feas_tol`.
    pub fn project_least_distance(&self, u: &Vector, feas_tol: f64) -> Option<Vector> {
        let n = self.dim();
        let rows = n + 1;
        let levels: Vec<f64> = self.active_rows.iter().map(|&i| self.level(i, u)).collect();
        // Solving for w/s with s ≈ ‖w‖ keeps the last residual entry, which
        // behaves like 1/(1 + ‖w/s‖²), away from zero.
        let s = self
            .active_rows
            .iter()
            .zip(&levels)
            .map(|(&i, &h)| h / self.row_norm_sq[i].sqrt())
            .fold(0.0, f64::max);
        if s <= 0.0 {
            return Some(u.clone());
        }
        let mut e = Vec::with_capacity(rows * self.active_rows.len());
        for (&i, &h) in self.active_rows.iter().zip(&levels) {
            e.extend(self.q.row(i).iter().map(|a| -a));
            e.push(h / s);
        }
        let mut f = vec![0.0; rows];
        f[n] = 1.0;
        let t = nnls(&e, rows, &f)?;
        let mut r: Vec<f64> = f.iter().map(|x| -x).collect();
        for (k, &tk) in t.iter().enumerate() {
            if tk != 0.0 {
                for (rj, ej) in r.iter_mut().zip(&e[k * rows..(k + 1) * rows]) {
                    *rj += tk * ej;
                }
            }
        }
        if r[n] == 0.0 {
            return None;
        }
        let z = Vector::from_fn(n, |j| u[j] - s * r[j] / r[n]);
        (self.max_violation(&z) <= feas_tol).then_some(z)
    }

    fn level(&self, i: usize, z: &[f64]) -> f64 {
        self.q.row(i).iter().zip(z).map(|(a, b)| a * b).sum::<f64>() - self.b[i]
    }
}

/// A closed convex feasible set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeasibleSet {
    WholeSpace,
    Halfspace(Halfspace),
    Box { lower: Vector, upper: Vector },
    Ball { center: Vector, radius: f64 },
    Polyhedron(Polyhedron),
}

impl FeasibleSet {
    pub fn boxed(lower: Vector, upper: Vector) -> Result<Self, GeometryError> {
        if lower.dim() != upper.dim() {
            return Err(GeometryError::DimensionMismatch {
                expected: lower.dim(),
                found: upper.dim(),
            });
        }
        if let Some(index) = (0..lower.dim()).find(|&i| lower[i] > upper[i]) {
            return Err(GeometryError::InvertedBox { index });
        }
        Ok(FeasibleSet::Box { lower, upper })
    }

    pub fn ball(center: Vector, radius: f64) -> Result<Self, GeometryError> {
        if !(radius >= 0.0) || !radius.is_finite() {
            return Err(GeometryError::BadRadius(radius));
        }
        Ok(FeasibleSet::Ball { center, radius })
    }

    pub fn polyhedron(q: Matrix, b: Vector) -> Result<Self, GeometryError> {
        Polyhedron::new(q, b).map(FeasibleSet::Polyhedron)
    }

    /// Dimension of the ambient space, `None` for the whole space.
    pub fn dim(&self) -> Option<usize> {
        match self {
            FeasibleSet::WholeSpace => None,
            FeasibleSet::Halfspace(h) => Some(h.dim()),
            FeasibleSet::Box { lower, .. } => Some(lower.dim()),
            FeasibleSet::Ball { center, .. } => Some(center.dim()),
            FeasibleSet::Polyhedron(p) => Some(p.dim()),
        }
    }

    fn check_dim(&self, u: &Vector) -> Result<(), GeometryError> {
        match self.dim() {
            Some(d) if d != u.dim() => Err(GeometryError::DimensionMismatch {
                expected: d,
                found: u.dim(),
            }),
            _ => Ok(()),
        }
    }

    /// Whether the projection is available in closed form.
    pub fn is_closed_form(&self) -> bool {
        !matches!(self, FeasibleSet::Polyhedron(_))
    }

    /// Metric projection with the default sweep budget. `tol` only affects
    /// polyhedra.
    pub fn project(&self, u: &Vector, tol: f64) -> Result<Vector, GeometryError> {
        self.project_with(u, tol, DEFAULT_MAX_SWEEPS)
    }

    pub fn project_with(
        &self,
        u: &Vector,
        tol: f64,
        max_sweeps: usize,
    ) -> Result<Vector, GeometryError> {
        self.check_dim(u)?;
        Ok(match self {
            FeasibleSet::WholeSpace => u.clone(),
            FeasibleSet::Halfspace(h) => h.project(u),
            FeasibleSet::Box { lower, upper } => {
                Vector::from_fn(u.dim(), |i| u[i].clamp(lower[i], upper[i]))
            }
            FeasibleSet::Ball { center, radius } => {
                let offset = u.sub(center);
                let dist = offset.norm();
                if dist <= *radius {
                    u.clone()
                } else {
                    center.add_scaled(radius / dist, &offset)
                }
            }
            FeasibleSet::Polyhedron(p) => return p.project(u, tol, max_sweeps),
        })
    }

    /// Distance-like violation of membership: zero for members.
    ///
    /// For polyhedra this is the largest row residual `(Q_i z − b_i)⁺`,
    /// for the other variants the Euclidean distance to the set.
    pub fn violation(&self, z: &Vector) -> f64 {
        match self {
            FeasibleSet::WholeSpace => 0.0,
            FeasibleSet::Halfspace(h) => h.violation(z),
            FeasibleSet::Box { lower, upper } => (0..z.dim())
                .map(|i| (lower[i] - z[i]).max(z[i] - upper[i]).max(0.0))
                .fold(0.0_f64, |acc, d| acc.hypot(d)),
            FeasibleSet::Ball { center, radius } => (z.distance(center) - radius).max(0.0),
            FeasibleSet::Polyhedron(p) => p.max_violation(z),
        }
    }

    /// Membership within `tol`; polyhedra scale the tolerance by `1 + ‖b‖`.
    pub fn contains(&self, z: &Vector, tol: f64) -> bool {
        match self {
            FeasibleSet::Polyhedron(p) => p.contains(z, tol),
            _ => self.violation(z) <= tol,
        }
    }
}

/// `⟨u − z, z − y⟩`, nonnegative for every `y` in the set exactly when `z` is
/// the projection of `u`.
pub fn characterization_residual(u: &Vector, z: &Vector, y: &Vector) -> f64 {
    u.sub(z).dot(&z.sub(y))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> Vector {
        Vector::new(x.to_vec()).unwrap()
    }

    #[test]
    fn halfspace_inside_point_is_fixed() {
        let h = Halfspace::new(v(&[1.0, 0.0]), v(&[0.0, 0.0])).unwrap();
        let u = v(&[-1.0, 3.0]);
        assert_eq!(project_halfspace(&u, &h).unwrap(), u);
    }

    #[test]
    fn halfspace_axis_clamp() {
        let h = Halfspace::new(v(&[1.0, 0.0]), v(&[0.0, 0.0])).unwrap();
        assert_eq!(project_halfspace(&v(&[2.0, 0.0]), &h).unwrap(), v(&[0.0, 0.0]));
    }

    #[test]
    fn halfspace_rejects_zero_normal_and_bad_dims() {
        assert_eq!(
            Halfspace::new(v(&[0.0, 0.0]), v(&[1.0, 1.0])),
            Err(GeometryError::ZeroNormal)
        );
        let h = Halfspace::new(v(&[1.0, 0.0]), v(&[0.0, 0.0])).unwrap();
        assert!(project_halfspace(&v(&[1.0]), &h).is_err());
    }

    #[test]
    fn ball_radial_scaling() {
        let ball = FeasibleSet::ball(v(&[0.0, 0.0]), 1.0).unwrap();
        let p = ball.project(&v(&[3.0, 4.0]), 1e-10).unwrap();
        assert!(p.max_abs_diff(&v(&[0.6, 0.8])) < 1e-15);
        assert!(FeasibleSet::ball(v(&[0.0]), -1.0).is_err());
    }

    #[test]
    fn box_clamps_componentwise() {
        let bx = FeasibleSet::boxed(v(&[1.0, 1.0]), v(&[2.0, 2.0])).unwrap();
        assert_eq!(bx.project(&v(&[0.0, 5.0]), 1e-10).unwrap(), v(&[1.0, 2.0]));
        assert_eq!(
            FeasibleSet::boxed(v(&[1.0]), v(&[0.0])),
            Err(GeometryError::InvertedBox { index: 0 })
        );
    }

    #[test]
    fn whole_space_is_identity() {
        let u = v(&[1.0, -2.0]);
        assert_eq!(FeasibleSet::WholeSpace.project(&u, 1e-10).unwrap(), u);
    }

    #[test]
    fn polyhedron_members_are_fixed() {
        let q = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let set = FeasibleSet::polyhedron(q, v(&[1.0, 1.0])).unwrap();
        let u = v(&[0.5, -3.0]);
        assert_eq!(set.project(&u, 1e-10).unwrap(), u);
    }

    #[test]
    fn polyhedron_orthant_corner() {
        // {x ≤ 1, y ≤ 1}: the projection of (3, 2) is the corner (1, 1).
        let q = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let set = FeasibleSet::polyhedron(q, v(&[1.0, 1.0])).unwrap();
        let p = set.project(&v(&[3.0, 2.0]), 1e-12).unwrap();
        assert!(p.max_abs_diff(&v(&[1.0, 1.0])) < 1e-12);
    }

    #[test]
    fn polyhedron_wedge_needs_dykstra() {
        // Cyclic projection lands on (2, 0) here; the nearest point is (1, 0).
        let q = Matrix::from_rows(&[vec![-1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let set = FeasibleSet::polyhedron(q, v(&[0.0, 0.0])).unwrap();
        let u = v(&[1.0, 3.0]);
        let p = set.project(&u, 1e-12).unwrap();
        // Nearest point of {y ≤ x} ∩ {y ≤ 0} to (1, 3) is (1, 0).
        assert!(p.max_abs_diff(&v(&[1.0, 0.0])) < 1e-9, "{p:?}");
    }

    #[test]
    fn polyhedron_zero_rows() {
        let q = Matrix::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let set = FeasibleSet::polyhedron(q.clone(), v(&[0.5, 0.0])).unwrap();
        let p = set.project(&v(&[2.0, 2.0]), 1e-12).unwrap();
        assert!(p.max_abs_diff(&v(&[0.0, 2.0])) < 1e-12);
        assert!(matches!(
            FeasibleSet::polyhedron(q, v(&[-0.5, 0.0])),
            Err(GeometryError::EmptyPolyhedron { row: 0, .. })
        ));
    }

    #[test]
    fn polyhedron_reports_non_convergence_with_best_iterate() {
        let q = Matrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.001]]).unwrap();
        let set = FeasibleSet::polyhedron(q, v(&[0.0, 0.0])).unwrap();
        match set.project_with(&v(&[5.0, 7.0]), 1e-15, 2) {
            Err(GeometryError::NotConverged { sweeps, best, .. }) => {
                assert_eq!(sweeps, 2);
                assert_eq!(best.dim(), 2);
            }
            other => panic!("expected NotConverged, got {other:?}"),
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let bx = FeasibleSet::boxed(v(&[0.0, 0.0]), v(&[1.0, 1.0])).unwrap();
        assert!(matches!(
            bx.project(&v(&[1.0]), 1e-10),
            Err(GeometryError::DimensionMismatch { expected: 2, found: 1 })
        ));
    }

    #[test]
    fn characterization_zero_when_fixed() {
        let u = v(&[0.1, 0.2]);
        assert_eq!(characterization_residual(&u, &u, &v(&[5.0, 5.0])), 0.0);
    }

    #[test]
    fn polyhedron_serde_round_trip() {
        let q = Matrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 0.0]]).unwrap();
        let set = FeasibleSet::polyhedron(q, v(&[1.0, 0.0])).unwrap();
        let json = serde_json::to_string(&set).unwrap();
        assert!(json.starts_with(r#"{"kind":"polyhedron","Q":[[1.0,2.0],[0.0,0.0]]"#), "{json}");
        let back: FeasibleSet = serde_json::from_str(&json).unwrap();
        assert_eq!(back, set);
    }
}
