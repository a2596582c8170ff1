//! Arnoldi iteration for a few eigenvalues of a large operator.
//!
//! Used in shift-invert mode: the operator is `(A - sigma)^{-1}`, whose
//! dominant eigenvalues `mu` give the eigenvalues `sigma + 1/mu` of `A`
//! nearest to the shift.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64 as C64;
use num_traits::Zero;

use super::dense::{dot_c, norm2, CMatrix};
use super::eigen::{hessenberg_qr, NoConvergence};

/// A converged Ritz pair of the transformed operator.
#[derive(Clone, Debug)]
pub struct RitzPair {
    /// Eigenvalue of the operator that was iterated.
    pub value: C64,
    /// Unit-norm Ritz vector.
    pub vector: Vec<C64>,
    /// Residual norm `||T u - mu u||`.
    pub residual: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct ArnoldiOptions {
    pub krylov_dim: usize,
    /// Relative residual `||T u - mu u|| / |mu|` below which a pair is accepted.
    pub tol: f64,
    /// Whether to build Ritz vectors for accepted pairs.
    pub want_vectors: bool,
}

impl Default for ArnoldiOptions {
    fn default() -> Self {
        Self { krylov_dim: 60, tol: 1e-10, want_vectors: false }
    }
}

/// Runs `m` Arnoldi steps from `start` and returns the converged Ritz pairs,
/// largest `|mu|` first. An invariant subspace found early is handled exactly.
pub fn arnoldi<F>(n: usize, start: &[C64], opts: ArnoldiOptions, mut apply: F) -> Result<Vec<RitzPair>, NoConvergence>
where
    F: FnMut(&[C64], &mut [C64]),
{
    assert_eq!(start.len(), n);
    let m = opts.krylov_dim.min(n).max(1);
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(m + 1);
    let mut h = CMatrix::zeros(m + 1, m);
    let nrm = norm2(start);
    assert!(nrm > 0.0, "zero start vector");
    basis.push(start.iter().map(|z| z / nrm).collect());
    let mut w = vec![C64::zero(); n];
    let mut steps = m;
    let mut beta_last = 0.0;
    for j in 0..m {
        apply(&basis[j], &mut w);
        // classical Gram-Schmidt, twice
        for _ in 0..2 {
            for (i, q) in basis.iter().enumerate() {
                let c = dot_c(q, &w);
                h[(i, j)] += c;
                for (wk, qk) in w.iter_mut().zip(q) {
                    *wk -= c * qk;
                }
            }
        }
        let beta = norm2(&w);
        h[(j + 1, j)] = C64::new(beta, 0.0);
        beta_last = beta;
        let scale = (0..=j).map(|i| h[(i, j)].norm()).fold(beta, f64::max);
        if beta <= 1e-14 * scale {
            steps = j + 1;
            beta_last = 0.0;
            break;
        }
        if j + 1 < m {
            basis.push(w.iter().map(|z| z / beta).collect());
        }
    }
    let k = steps;
    let mut hk = CMatrix::from_fn(k, k, |r, c| h[(r, c)]);
    let mut zk = CMatrix::identity(k);
    hessenberg_qr(&mut hk, Some(&mut zk))?;
    let schur = super::eigen::Schur { t: hk, z: Some(zk) };
    let vals = schur.eigenvalues();
    let yvecs = schur.eigenvectors();
    let mut out = Vec::new();
    for (idx, mu) in vals.iter().enumerate() {
        let resid = beta_last * yvecs[(k - 1, idx)].norm();
        if mu.norm() == 0.0 || resid > opts.tol * mu.norm() {
            continue;
        }
        let vector = if opts.want_vectors {
            let mut v = vec![C64::zero(); n];
            for (c, q) in basis.iter().take(k).enumerate() {
                let y = yvecs[(c, idx)];
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi += y * qi;
                }
            }
            let nv = norm2(&v);
            v.iter_mut().for_each(|z| *z /= nv);
            v
        } else {
            Vec::new()
        };
        out.push(RitzPair { value: *mu, vector, residual: resid });
    }
    out.sort_by(|a, b| b.value.norm().partial_cmp(&a.value.norm()).unwrap_or(core::cmp::Ordering::Equal));
    Ok(out)
}

/// Deterministic, non-degenerate start vector.
pub fn default_start(n: usize) -> Vec<C64> {
    let mut seed: u64 = 0x9E37_79B9_7F4A_7C15;
    (0..n)
        .map(|_| {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            let a = (seed >> 11) as f64 / (1u64 << 53) as f64;
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            let b = (seed >> 11) as f64 / (1u64 << 53) as f64;
            C64::new(0.5 + a, b - 0.5)
        })
        .collect()
}
