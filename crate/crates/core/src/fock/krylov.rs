//! Lanczos approximation of `e^{-iHt} v` for Hermitian `H`.
//!
//! The subspace grows until the a-posteriori estimate `β₀ β_m |[e^{-iT_m t}]_{m,1}|`
//! falls below the tolerance. If the maximal subspace is exhausted the step is
//! split in halves, each carrying half the error budget.

use nalgebra::DMatrix;

use super::sparse::{dot, norm, LinearOperator};
use crate::{Error, Result, C64};

/// Per-piece tolerances are not split below round-off level.
const TOL_FLOOR: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrylovOptions {
    /// Target bound on `‖result - e^{-iHt}v‖ / ‖v‖`.
    pub tol: f64,
    pub max_subspace: usize,
    /// Maximal recursion depth of step halving.
    pub max_splits: u32,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        KrylovOptions { tol: 1e-12, max_subspace: 40, max_splits: 24 }
    }
}

impl KrylovOptions {
    pub fn with_tol(tol: f64) -> Self {
        KrylovOptions { tol, ..Default::default() }
    }
}

/// `e^{-iHt} v` with the default subspace limits.
pub fn krylov_expm<Op: LinearOperator + ?Sized>(op: &Op, v: &[C64], t: f64, tol: f64) -> Result<Vec<C64>> {
    propagate(op, v, t, &KrylovOptions::with_tol(tol))
}

pub fn propagate<Op: LinearOperator + ?Sized>(op: &Op, v: &[C64], t: f64, opts: &KrylovOptions) -> Result<Vec<C64>> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("Krylov tolerance must be positive, got {}", opts.tol)));
    }
    if v.len() != op.dim() {
        return Err(Error::SizeMismatch { expected: op.dim(), got: v.len() });
    }
    step(op, v, t, opts.tol, opts, 0)
}

fn step<Op: LinearOperator + ?Sized>(
    op: &Op,
    v: &[C64],
    t: f64,
    tol: f64,
    opts: &KrylovOptions,
    depth: u32,
) -> Result<Vec<C64>> {
    match lanczos_expm(op, v, t, tol, opts.max_subspace) {
        Ok(out) => Ok(out),
        Err(estimate) => {
            if depth >= opts.max_splits {
                return Err(Error::KrylovNonConvergence { estimate, tol });
            }
            let sub = (0.5 * tol).max(TOL_FLOOR);
            let half = step(op, v, 0.5 * t, sub, opts, depth + 1)?;
            step(op, &half, 0.5 * t, sub, opts, depth + 1)
        }
    }
}

/// One Lanczos attempt; returns the error estimate on failure.
fn lanczos_expm<Op: LinearOperator + ?Sized>(
    op: &Op,
    v: &[C64],
    t: f64,
    tol: f64,
    max_subspace: usize,
) -> std::result::Result<Vec<C64>, f64> {
    let n = v.len();
    let beta0 = norm(v);
    if beta0 == 0.0 || t == 0.0 {
        return Ok(v.to_vec());
    }
    let m_max = max_subspace.min(n).max(1);
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(m_max + 1);
    basis.push(v.iter().map(|c| c / beta0).collect());
    let mut alpha: Vec<f64> = Vec::with_capacity(m_max);
    let mut beta: Vec<f64> = Vec::with_capacity(m_max);
    let mut w = vec![C64::new(0.0, 0.0); n];
    let mut last_estimate = f64::INFINITY;

    for j in 0..m_max {
        op.apply(&basis[j], &mut w);
        let a = dot(&basis[j], &w).re;
        alpha.push(a);
        for (wi, vi) in w.iter_mut().zip(&basis[j]) {
            *wi -= vi * a;
        }
        if j > 0 {
            let b = beta[j - 1];
            for (wi, vi) in w.iter_mut().zip(&basis[j - 1]) {
                *wi -= vi * b;
            }
        }
        // full reorthogonalization
        for vi in &basis {
            let proj = dot(vi, &w);
            for (wk, vk) in w.iter_mut().zip(vi) {
                *wk -= vk * proj;
            }
        }
        let b = norm(&w);
        let scale = alpha.iter().chain(beta.iter()).fold(1.0f64, |m, x| m.max(x.abs()));
        let breakdown = b <= 1e-13 * scale || j + 1 == n;

        let y = tridiagonal_expm_first_column(&alpha, &beta, t);
        let estimate = b * y[j].norm();
        // the estimate cannot resolve below round-off in the projected matrix
        let floor = 64.0 * f64::EPSILON * (scale * t.abs()).max(1.0);
        if breakdown || estimate <= tol.max(floor) {
            let mut out = vec![C64::new(0.0, 0.0); n];
            for (vi, yi) in basis.iter().zip(&y) {
                let c = yi * beta0;
                for (o, x) in out.iter_mut().zip(vi) {
                    *o += x * c;
                }
            }
            return Ok(out);
        }
        last_estimate = estimate;
        beta.push(b);
        basis.push(w.iter().map(|c| c / b).collect());
    }
    Err(last_estimate)
}

/// First column of `exp(-i T t)` for the real symmetric tridiagonal `T`.
fn tridiagonal_expm_first_column(alpha: &[f64], beta: &[f64], t: f64) -> Vec<C64> {
    let m = alpha.len();
    let mut tri = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        tri[(i, i)] = alpha[i];
        if i + 1 < m {
            tri[(i, i + 1)] = beta[i];
            tri[(i + 1, i)] = beta[i];
        }
    }
    let eig = tri.symmetric_eigen();
    (0..m)
        .map(|r| {
            (0..m)
                .map(|k| {
                    let q = eig.eigenvectors[(r, k)] * eig.eigenvectors[(0, k)];
                    C64::from_polar(q, -eig.eigenvalues[k] * t)
                })
                .sum()
        })
        .collect()
}
