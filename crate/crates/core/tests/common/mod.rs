//! Independent reference implementations used by the integration tests.
//!
//! Nothing here calls into the projection or norm code under test; the
//! linear solves go through nalgebra.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use msem::{Matrix, Vector};

pub struct Rng(Xoshiro256PlusPlus);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(Xoshiro256PlusPlus::seed_from_u64(seed))
    }

    pub fn unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.0.next_u64() % n as u64) as usize
    }

    pub fn vector(&mut self, n: usize, lo: f64, hi: f64) -> Vector {
        Vector::from_fn(n, |_| self.uniform(lo, hi))
    }

    pub fn matrix(&mut self, rows: usize, cols: usize, lo: f64, hi: f64) -> Matrix {
        Matrix::from_fn(rows, cols, |_, _| self.uniform(lo, hi))
    }
}

pub fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m.get(i, j))
}

/// Entrywise `Mx` with its own summation loop.
pub fn naive_matvec(m: &Matrix, x: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; m.rows()];
    for (i, o) in out.iter_mut().enumerate() {
        for (j, xj) in x.iter().enumerate() {
            *o += m.get(i, j) * xj;
        }
    }
    out
}

/// Largest singular value by one-sided Jacobi (Hestenes) orthogonalization.
pub fn jacobi_sigma_max(m: &Matrix) -> f64 {
    let (r, c) = (m.rows(), m.cols());
    let mut a: Vec<Vec<f64>> = (0..c).map(|j| (0..r).map(|i| m.get(i, j)).collect()).collect();
    for _ in 0..100 {
        let mut off = 0.0_f64;
        for p in 0..c {
            for q in p + 1..c {
                let alpha: f64 = a[p].iter().map(|x| x * x).sum();
                let beta: f64 = a[q].iter().map(|x| x * x).sum();
                let gamma: f64 = a[p].iter().zip(&a[q]).map(|(x, y)| x * y).sum();
                if gamma == 0.0 {
                    continue;
                }
                off = off.max(gamma.abs() / (alpha * beta).sqrt());
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for k in 0..r {
                    let (x, y) = (a[p][k], a[q][k]);
                    a[p][k] = cs * x - sn * y;
                    a[q][k] = sn * x + cs * y;
                }
            }
        }
        if off < 1e-15 {
            break;
        }
    }
    a.iter()
        .map(|col| col.iter().map(|x| x * x).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

/// Projection onto `{z : ⟨v, z − x⟩ ≤ 0}` from the KKT system of the
/// single-constraint least-squares problem.
pub fn halfspace_kkt(u: &Vector, v: &Vector, x: &Vector) -> Vector {
    let n = u.dim();
    let slack: f64 = v.iter().zip(u.iter().zip(x.iter())).map(|(vi, (ui, xi))| vi * (ui - xi)).sum();
    if slack <= 0.0 {
        return u.clone();
    }
    // [I v; vᵀ 0] [z; λ] = [u; ⟨v, x⟩]
    let k = DMatrix::from_fn(n + 1, n + 1, |i, j| match (i < n, j < n) {
        (true, true) => f64::from(u8::from(i == j)),
        (true, false) => v[i],
        (false, true) => v[j],
        (false, false) => 0.0,
    });
    let vx: f64 = v.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
    let rhs = DVector::from_fn(n + 1, |i, _| if i < n { u[i] } else { vx });
    let sol = k.lu().solve(&rhs).expect("KKT system is nonsingular for v ≠ 0");
    Vector::from_fn(n, |i| sol[i])
}

/// Projection onto `{z : Qz ≤ b}` by trying every subset of rows as the
/// active set and keeping the closest feasible candidate.
///
/// Exponential in the number of rows; intended for `l ≤ 10`.
pub fn polyhedron_enumeration(u: &Vector, q: &Matrix, b: &Vector) -> Vector {
    let (l, n) = (q.rows(), q.cols());
    let feasible = |z: &[f64]| (0..l).all(|i| naive_matvec(q, z)[i] <= b[i] + 1e-9);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1 << l) {
        let rows: Vec<usize> = (0..l).filter(|i| mask & (1 << i) != 0).collect();
        if rows.len() > n {
            continue;
        }
        let k = rows.len();
        let z: Vec<f64> = if k == 0 {
            u.to_vec()
        } else {
            let kkt = DMatrix::from_fn(n + k, n + k, |i, j| match (i < n, j < n) {
                (true, true) => f64::from(u8::from(i == j)),
                (true, false) => q.get(rows[j - n], i),
                (false, true) => q.get(rows[i - n], j),
                (false, false) => 0.0,
            });
            let rhs = DVector::from_fn(n + k, |i, _| if i < n { u[i] } else { b[rows[i - n]] });
            let Some(sol) = kkt.lu().solve(&rhs) else { continue };
            if sol.iter().any(|x| !x.is_finite()) {
                continue;
            }
            (0..n).map(|i| sol[i]).collect()
        };
        if !feasible(&z) {
            continue;
        }
        let d: f64 = z.iter().zip(u.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
        if best.as_ref().is_none_or(|(bd, _)| d < *bd) {
            best = Some((d, z));
        }
    }
    Vector::from(best.expect("0 is feasible when b ≥ 0").1)
}

/// Uniform samples of `{Qz ≤ b}` by rejection from a box around the origin.
///
/// The box half-width starts at `radius` and halves whenever fewer than
/// one in fifty draws are accepted.
pub fn sample_polyhedron(rng: &mut Rng, q: &Matrix, b: &Vector, count: usize, radius: f64) -> Vec<Vector> {
    let n = q.cols();
    let mut r = radius;
    let mut out = Vec::with_capacity(count);
    let mut tries = 0usize;
    while out.len() < count {
        let z = rng.vector(n, -r, r);
        tries += 1;
        let qz = naive_matvec(q, &z);
        if qz.iter().zip(b.iter()).all(|(a, bi)| a <= bi) {
            out.push(z);
        } else if tries > 50 * (out.len() + 1) {
            r *= 0.5;
            tries = 0;
        }
    }
    out
}
