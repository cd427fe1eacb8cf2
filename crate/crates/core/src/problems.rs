//! Test problems: the Harker–Pang affine family and small instances with
//! known solutions.
//!
//! # Generator
//!
//! All randomness comes from xoshiro256++ seeded through SplitMix64 (the
//! reference seeding: the four state words are the first four SplitMix64
//! outputs for the given seed). A 64-bit output `w` maps to `[0, 1)` as
//! `(w >> 11)·2⁻⁵³`, and to `[lo, hi)` as `lo + (hi − lo)·u`.
//!
//! A Harker–Pang instance `(m, l, seed)` draws, from one stream seeded with
//! `seed` and in this order:
//!
//! 1. `B`, `m×m` row-major, entries in `[−5, 5)`;
//! 2. `G`, `m×m` row-major, entries in `[−5, 5)`;
//! 3. the diagonal of `D`, `m` entries in `[0, 0.3)`;
//! 4. `Q`, `l×m` row-major, entries in `[−1, 1)`;
//! 5. `b`, `l` entries in `[0, 1)`.
//!
//! Then `S = (G − Gᵀ)/2`, `M = BBᵀ + S + D` (each `BBᵀ` entry summed in
//! increasing inner index, then `+ S`, then `+ D`), `q = 0` and
//! `C = {x : Qx ≤ b}`. `M` is positive semidefinite, `0 ∈ C` and the unique
//! solution is the origin whenever `D` has a positive diagonal.
//!
//! Starting points for `(m, seed)` use a separate stream seeded with
//! `seed XOR 0x9E3779B97F4A7C15`, drawing `m` entries in `[0, 1)`.

use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{FeasibleSet, GeometryError};
use crate::linalg::{unit_f64, LinalgError, Matrix, Vector};
use crate::mappings::{rotation_field, AffineField, VectorField};

pub const STARTING_POINT_STREAM: u64 = 0x9E37_79B9_7F4A_7C15;
pub const DEFAULT_CONSTRAINTS: usize = 100;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("problem size must be positive (m = {m}, l = {l})")]
    BadSize { m: usize, l: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("malformed instance document: {0}")]
    Json(#[from] serde_json::Error),
}

/// Entry distributions and generator, recorded alongside every instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub name: String,
    pub m: usize,
    pub l: usize,
    pub seed: u64,
    pub prng: String,
    pub distributions: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub meta: InstanceMeta,
    pub field: AffineField,
    pub set: FeasibleSet,
    pub known_solution: Option<Vector>,
    pub lipschitz: f64,
}

impl ProblemInstance {
    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("instances always serialize")
    }

    pub fn from_json(s: &str) -> Result<Self, ProblemError> {
        Ok(serde_json::from_str(s)?)
    }
}

struct Stream(Xoshiro256PlusPlus);

impl Stream {
    fn new(seed: u64) -> Self {
        Stream(Xoshiro256PlusPlus::seed_from_u64(seed))
    }

    fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * unit_f64(self.0.next_u64())
    }

    fn fill(&mut self, n: usize, lo: f64, hi: f64) -> Vec<f64> {
        (0..n).map(|_| self.uniform(lo, hi)).collect()
    }
}

/// `M = BBᵀ + S + D`, `q = 0`, `C = {x : Qx ≤ b}` with `Q` of size `l×m`.
pub fn harker_pang(m: usize, l: usize, seed: u64) -> Result<ProblemInstance, ProblemError> {
    if m == 0 || l == 0 {
        return Err(ProblemError::BadSize { m, l });
    }
    let mut rng = Stream::new(seed);
    let b_mat = rng.fill(m * m, -5.0, 5.0);
    let g = rng.fill(m * m, -5.0, 5.0);
    let diag = rng.fill(m, 0.0, 0.3);
    let q = rng.fill(l * m, -1.0, 1.0);
    let rhs = rng.fill(l, 0.0, 1.0);

    let mm = Matrix::from_fn(m, m, |i, j| {
        let bbt: f64 = (0..m).map(|k| b_mat[i * m + k] * b_mat[j * m + k]).sum();
        let s = (g[i * m + j] - g[j * m + i]) / 2.0;
        let d = if i == j { diag[i] } else { 0.0 };
        bbt + s + d
    });
    let field = AffineField::linear(mm)?.with_estimated_lipschitz()?;
    let lipschitz = field.lipschitz_hint().unwrap_or_default();
    let set = FeasibleSet::polyhedron(Matrix::new(l, m, q)?, Vector::new(rhs)?)?;

    Ok(ProblemInstance {
        meta: InstanceMeta {
            name: "harker_pang".into(),
            m,
            l,
            seed,
            prng: "xoshiro256++ seeded by splitmix64; u = (w >> 11) * 2^-53".into(),
            distributions: vec![
                ("B".into(), "uniform[-5,5)".into()),
                ("S".into(), "(G - G^T)/2, G uniform[-5,5)".into()),
                ("D".into(), "diagonal, uniform[0,0.3)".into()),
                ("Q".into(), "uniform[-1,1)".into()),
                ("b".into(), "uniform[0,1)".into()),
                ("q".into(), "zero".into()),
            ],
        },
        field,
        set,
        known_solution: Some(Vector::zeros(m)),
        lipschitz,
    })
}

/// The skew part `S = (G − Gᵀ)/2` and diagonal of `D` drawn for an
/// instance, exposed for structural checks.
pub fn harker_pang_parts(m: usize, seed: u64) -> (Matrix, Matrix, Vec<f64>) {
    let mut rng = Stream::new(seed);
    let b_mat = rng.fill(m * m, -5.0, 5.0);
    let g = rng.fill(m * m, -5.0, 5.0);
    let diag = rng.fill(m, 0.0, 0.3);
    let s = Matrix::from_fn(m, m, |i, j| (g[i * m + j] - g[j * m + i]) / 2.0);
    (Matrix::from_fn(m, m, |i, j| b_mat[i * m + j]), s, diag)
}

/// Uniform starting point in `[0, 1)ᵐ`.
pub fn starting_point(m: usize, seed: u64) -> Vector {
    let mut rng = Stream::new(seed ^ STARTING_POINT_STREAM);
    Vector::from(rng.fill(m, 0.0, 1.0))
}

fn toy(name: &str, field: AffineField, set: FeasibleSet, solution: Vector) -> ProblemInstance {
    let m = field.dim();
    let lipschitz = field.lipschitz_hint().unwrap_or(1.0);
    ProblemInstance {
        meta: InstanceMeta {
            name: name.into(),
            m,
            l: 0,
            seed: 0,
            prng: "none".into(),
            distributions: Vec::new(),
        },
        field,
        set,
        known_solution: Some(solution),
        lipschitz,
    }
}

/// Hand-built instances with analytically known solutions:
///
/// * `rotation`: the quarter turn on R², solution at the origin;
/// * `identity_box`: `F(x) = x` on `[1, 2]²`, solution at the lower corner;
/// * `shifted_interval`: `F(x) = x − 1` on `[0, 10]`, interior solution 1.
pub fn toy_instances() -> Vec<ProblemInstance> {
    let one = |n: usize, c: f64| Vector::from(vec![c; n]);
    vec![
        toy(
            "rotation",
            rotation_field(),
            FeasibleSet::WholeSpace,
            Vector::zeros(2),
        ),
        toy(
            "identity_box",
            AffineField::linear(Matrix::identity(2))
                .expect("square")
                .with_lipschitz(1.0),
            FeasibleSet::boxed(one(2, 1.0), one(2, 2.0)).expect("ordered bounds"),
            one(2, 1.0),
        ),
        toy(
            "shifted_interval",
            AffineField::new(Matrix::identity(1), one(1, -1.0))
                .expect("matching shapes")
                .with_lipschitz(1.0),
            FeasibleSet::boxed(one(1, 0.0), one(1, 10.0)).expect("ordered bounds"),
            one(1, 1.0),
        ),
    ]
}
