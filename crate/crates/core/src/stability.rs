//! Linear stability of the symmetric steady state against lattice
//! excitations with momentum `k`, dispersion `t_k = -J cos k`.
//!
//! A perturbation `drho_k` evolves under `M_k = L + R_k` with the rank-2
//! correction `R_k drho = -i t_k (Tr(a drho) [a^†, rho_s] + Tr(a^† drho) [a, rho_s])`.
//! Eigenvalues `lambda` of `M_k` are reported as `omega = i lambda`, so a mode
//! is damped when `Im omega < 0`.
//!
//! At `alpha = 0` the generator is block diagonal in the parity sectors
//! (`m + n` even / odd). The steady state is even, `R_k` acts only inside the
//! odd sector, so the even block is `k`-independent and computed once.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64 as C64;
#[allow(unused_imports)]
use num_traits::Float;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::fock::{annihilation, FockDim};
use crate::linalg::arnoldi::{arnoldi, default_start, ArnoldiOptions, RitzPair};
use crate::linalg::dense::{dot_c, norm2};
use crate::linalg::eigen::schur;
use crate::linalg::{BandLu, CMatrix, SparseMatrix};
use crate::lindblad::{build_liouvillian, parity_sector, trace_functional, DensityMatrix, Generator, ModelParams, Superoperator};
use crate::steadystate::{order_parameter, steady_state_at_fixed_alpha, NULL_TOL};

pub const DEFAULT_N_K: usize = 65;
/// Minimum normalized overlap of the stationary eigenvector with `rho_s`.
pub const STATIONARY_OVERLAP: f64 = 0.9;

#[derive(Debug, Clone, PartialEq)]
pub struct MomentumGrid {
    k_values: Vec<f64>,
    /// Coordination number of the chain.
    pub z: usize,
}

impl MomentumGrid {
    /// `n_k` uniform points on `[0, pi]`, endpoints included.
    pub fn uniform(n_k: usize) -> Result<Self> {
        if n_k < 2 {
            return Err(Error::InvalidParams(alloc::format!("n_k must be >= 2, got {n_k}")));
        }
        let k_values = (0..n_k).map(|i| core::f64::consts::PI * i as f64 / (n_k - 1) as f64).collect();
        Ok(Self { k_values, z: 2 })
    }

    pub fn k_values(&self) -> &[f64] {
        &self.k_values
    }

    pub fn t_k(j: f64, k: f64) -> f64 {
        -j * k.cos()
    }
}

impl Default for MomentumGrid {
    fn default() -> Self {
        Self::uniform(DEFAULT_N_K).expect("default grid is valid")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectrumMethod {
    /// Full dense eigendecomposition of each block.
    Dense,
    /// Shift-invert Arnoldi around the real shift `sigma`; returns the
    /// eigenvalues nearest the shift, which include the slowest modes.
    ShiftInvert { sigma: f64, krylov_dim: usize },
}

impl Default for SpectrumMethod {
    fn default() -> Self {
        SpectrumMethod::ShiftInvert { sigma: 0.2, krylov_dim: 60 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExcitationSpectrum {
    pub k_values: Vec<f64>,
    /// Retained `omega` per `k` (stationary mode removed).
    pub omegas: Vec<Vec<C64>>,
    /// `max Im omega` per `k`.
    pub max_im_per_k: Vec<f64>,
    pub max_im: f64,
    pub argmax_k: f64,
}

/// Ingredients of `R_k` in the full vectorized space.
struct RankTwo {
    v: [Vec<C64>; 2],
    w: [Vec<C64>; 2],
}

fn rank_two(rho_s: &DensityMatrix) -> RankTwo {
    let dim = rho_s.dim();
    let a = annihilation(dim);
    let ad = a.adjoint();
    let r = rho_s.matrix();
    RankTwo {
        v: [ad.commutator(r).into_vec(), a.commutator(r).into_vec()],
        w: [trace_functional(&a), trace_functional(&ad)],
    }
}

fn require_symmetric(rho_s: &DensityMatrix) -> Result<()> {
    let value = order_parameter(rho_s).norm();
    if value >= 1e-9 {
        return Err(Error::SymmetryViolation { value });
    }
    Ok(())
}

/// `M_k = L + R_k` in the full space.
pub fn linearized_generator(l: &Superoperator, rho_s: &DensityMatrix, t_k: f64) -> Result<Superoperator> {
    require_symmetric(rho_s)?;
    let dim = l.dim();
    if rho_s.dim() != dim {
        return Err(Error::DimensionMismatch { expected: dim.n(), found: rho_s.dim().n() });
    }
    if t_k == 0.0 {
        return Ok(l.clone());
    }
    let rk = rank_two(rho_s);
    let c = C64::new(0.0, -t_k);
    let mut trip: Vec<(usize, usize, C64)> = l.sparse().entries().collect();
    for (v, w) in rk.v.iter().zip(&rk.w) {
        for (r, vr) in v.iter().enumerate() {
            if vr.is_zero() {
                continue;
            }
            for (col, wc) in w.iter().enumerate() {
                if !wc.is_zero() {
                    trip.push((r, col, c * vr * wc));
                }
            }
        }
    }
    let n2 = dim.liouville();
    Ok(Superoperator::from_sparse(dim, SparseMatrix::from_triplets(n2, n2, trip)))
}

fn gather(x: &[C64], idx: &[usize]) -> Vec<C64> {
    idx.iter().map(|&i| x[i]).collect()
}

/// Removes the stationary eigenvalue from an even-sector spectrum. `vectors`
/// holds the eigenvectors (sector coordinates) aligned with `values`.
fn remove_stationary(values: &[C64], vectors: &[Vec<C64>], rho_even: &[C64]) -> Result<Vec<C64>> {
    let rn = norm2(rho_even);
    let candidates: Vec<usize> = (0..values.len()).filter(|&i| values[i].norm() < NULL_TOL).collect();
    let matching: Vec<usize> = candidates
        .iter()
        .copied()
        .filter(|&i| {
            let v = &vectors[i];
            dot_c(v, rho_even).norm() / (norm2(v) * rn) > STATIONARY_OVERLAP
        })
        .collect();
    if matching.len() != 1 {
        return Err(Error::StationaryModeAmbiguous { candidates: candidates.len() });
    }
    let skip = matching[0];
    Ok(values.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, v)| *v).collect())
}

fn dense_eigen(m: &CMatrix, vectors: bool) -> Result<(Vec<C64>, Vec<Vec<C64>>)> {
    let s = schur(m, vectors)?;
    let vals = s.eigenvalues();
    let vecs = if vectors {
        let ev = s.eigenvectors();
        (0..vals.len()).map(|k| ev.column(k)).collect()
    } else {
        Vec::new()
    };
    Ok((vals, vecs))
}

fn shift_invert_pairs<F>(n: usize, sigma: f64, krylov_dim: usize, want_vectors: bool, mut solve: F) -> Result<Vec<RitzPair>>
where
    F: FnMut(&mut [C64]),
{
    let mut kd = krylov_dim.min(n);
    loop {
        let opts = ArnoldiOptions { krylov_dim: kd, tol: 1e-9, want_vectors };
        let mut pairs = arnoldi(n, &default_start(n), opts, |x, y| {
            y.copy_from_slice(x);
            solve(y);
        })?;
        if pairs.len() >= 6.min(n) || kd >= n || kd >= 4 * krylov_dim {
            for p in pairs.iter_mut() {
                p.value = C64::new(sigma, 0.0) + 1.0 / p.value;
            }
            return Ok(pairs);
        }
        kd = (2 * kd).min(n);
    }
}

struct Sectors {
    rho_s: DensityMatrix,
    even: Vec<usize>,
    odd: Vec<usize>,
    l_even: SparseMatrix,
    l_odd: SparseMatrix,
    /// `R_k` factors restricted to the odd sector.
    v: [Vec<C64>; 2],
    w: [Vec<C64>; 2],
}

fn sectors(params: &ModelParams, dim: FockDim) -> Result<Sectors> {
    let rho_s = steady_state_at_fixed_alpha(params, C64::zero(), dim)?;
    require_symmetric(&rho_s)?;
    let l = Generator::new(params, C64::zero(), dim).to_sparse();
    let even = parity_sector(dim, 0);
    let odd = parity_sector(dim, 1);
    let rk = rank_two(&rho_s);
    let v = [gather(&rk.v[0], &odd), gather(&rk.v[1], &odd)];
    let w = [gather(&rk.w[0], &odd), gather(&rk.w[1], &odd)];
    Ok(Sectors { l_even: l.principal_submatrix(&even), l_odd: l.principal_submatrix(&odd), rho_s, even, odd, v, w })
}

fn max_re(values: &[C64]) -> f64 {
    values.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

/// Orthonormal basis `Q` of the block Krylov space of `A^-1` started from
/// `[b, Z_0, Z_1]` with `Z = A^-1 V`. For every `k` the shift-inverted
/// operator `T_k = A^-1 - Z C_k W^T A^-1` maps `span Q` into itself up to the
/// images of the last block, so one basis serves the whole momentum grid.
struct BlockProjection {
    /// `Q^H A^-1 Q`
    p: CMatrix,
    /// `Q^H Z`, one row per basis vector.
    qz: Vec<[C64; 2]>,
    /// `W^T A^-1 q_j`
    wa: Vec<[C64; 2]>,
    /// Columns whose images leave the space, and the Gram matrix of the leaks.
    tail: Vec<usize>,
    leak: CMatrix,
}

impl BlockProjection {
    fn build<F: FnMut(&mut [C64])>(n: usize, max_dim: usize, z: &[Vec<C64>; 2], w: &[Vec<C64>; 2], mut solve: F) -> Self {
        let max_dim = max_dim.min(n);
        let mut q: Vec<Vec<C64>> = Vec::new();
        // Gram-Schmidt (twice) of v against q; returns coefficients and remainder
        let orth = |q: &[Vec<C64>], mut v: Vec<C64>| -> (Vec<C64>, Vec<C64>) {
            let mut c = vec![C64::zero(); q.len()];
            for _ in 0..2 {
                for (i, qi) in q.iter().enumerate() {
                    let d = dot_c(qi, &v);
                    c[i] += d;
                    v.iter_mut().zip(qi).for_each(|(x, y)| *x -= d * y);
                }
            }
            (c, v)
        };
        for v in [default_start(n), z[0].clone(), z[1].clone()] {
            let n0 = norm2(&v);
            let (_, r) = orth(&q, v);
            let nr = norm2(&r);
            if nr > 1e-12 * n0 {
                q.push(r.iter().map(|x| x / nr).collect());
            }
        }
        let mut cols: Vec<Vec<C64>> = Vec::new();
        let mut wa = Vec::new();
        let mut tail = Vec::new();
        let mut leaks: Vec<Vec<C64>> = Vec::new();
        let mut j = 0;
        while j < q.len() {
            let mut y = q[j].clone();
            solve(&mut y);
            wa.push([dot(&w[0], &y), dot(&w[1], &y)]);
            let n0 = norm2(&y);
            let (mut c, r) = orth(&q, y);
            let nr = norm2(&r);
            if nr > 1e-12 * n0 {
                if q.len() < max_dim {
                    c.push(C64::new(nr, 0.0));
                    q.push(r.iter().map(|x| x / nr).collect());
                } else {
                    tail.push(j);
                    leaks.push(r);
                }
            }
            cols.push(c);
            j += 1;
        }
        let m = q.len();
        let p = CMatrix::from_fn(m, m, |i, j| cols[j].get(i).copied().unwrap_or_else(C64::zero));
        let qz = q.iter().map(|qi| [dot_c(qi, &z[0]), dot_c(qi, &z[1])]).collect();
        let leak = CMatrix::from_fn(leaks.len(), leaks.len(), |a, b| dot_c(&leaks[a], &leaks[b]));
        Self { p, qz, wa, tail, leak }
    }

    /// Converged eigenvalues `mu` of `T_k` for the 2x2 coupling `cmat`:
    /// Ritz values whose residual `||E y||` is below `1e-9 |mu|`.
    fn converged(&self, cmat: &[[C64; 2]; 2]) -> Result<Vec<C64>> {
        let m = self.p.rows();
        let mut h = self.p.clone();
        for i in 0..m {
            let zc = [
                self.qz[i][0] * cmat[0][0] + self.qz[i][1] * cmat[1][0],
                self.qz[i][0] * cmat[0][1] + self.qz[i][1] * cmat[1][1],
            ];
            if zc[0].is_zero() && zc[1].is_zero() {
                continue;
            }
            for j in 0..m {
                h[(i, j)] -= zc[0] * self.wa[j][0] + zc[1] * self.wa[j][1];
            }
        }
        let sch = schur(&h, true)?;
        let vals = sch.eigenvalues();
        let vecs = sch.eigenvectors();
        let mut out = Vec::new();
        for (idx, mu) in vals.iter().enumerate() {
            let mut r2 = 0.0;
            for (a, &ta) in self.tail.iter().enumerate() {
                for (b, &tb) in self.tail.iter().enumerate() {
                    r2 += (vecs[(ta, idx)].conj() * self.leak[(a, b)] * vecs[(tb, idx)]).re;
                }
            }
            if mu.norm() > 0.0 && r2.max(0.0).sqrt() <= 1e-9 * mu.norm() {
                out.push(*mu);
            }
        }
        out.sort_by(|a, b| b.norm().partial_cmp(&a.norm()).unwrap_or(core::cmp::Ordering::Equal));
        Ok(out)
    }
}

fn dot(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Excitation spectrum of the symmetric state over the momentum grid.
pub fn excitation_spectrum(params: &ModelParams, grid: &MomentumGrid, dim: FockDim, method: SpectrumMethod) -> Result<ExcitationSpectrum> {
    params.validate()?;
    let s = sectors(params, dim)?;
    let rho_even = gather(s.rho_s.as_vec(), &s.even);

    let even_vals = match method {
        SpectrumMethod::Dense => {
            let (vals, vecs) = dense_eigen(&s.l_even.to_dense(), true)?;
            remove_stationary(&vals, &vecs, &rho_even)?
        }
        SpectrumMethod::ShiftInvert { sigma, krylov_dim } => {
            let lu = BandLu::factor(&s.l_even.shifted(C64::new(-sigma, 0.0)))?;
            let pairs = shift_invert_pairs(s.even.len(), sigma, krylov_dim, true, |y| lu.solve_in_place(y))?;
            let vals: Vec<C64> = pairs.iter().map(|p| p.value).collect();
            let vecs: Vec<Vec<C64>> = pairs.into_iter().map(|p| p.vector).collect();
            remove_stationary(&vals, &vecs, &rho_even)?
        }
    };

    let mut odd_per_k = Vec::with_capacity(grid.k_values().len());
    match method {
        SpectrumMethod::Dense => {
            let base = s.l_odd.to_dense();
            for &k in grid.k_values() {
                let c = C64::new(0.0, -MomentumGrid::t_k(params.j, k));
                let mut m = base.clone();
                for (v, w) in s.v.iter().zip(&s.w) {
                    for (r, vr) in v.iter().enumerate() {
                        if vr.is_zero() {
                            continue;
                        }
                        let row = m.row_mut(r);
                        for (dst, wc) in row.iter_mut().zip(w) {
                            *dst += c * vr * wc;
                        }
                    }
                }
                odd_per_k.push(dense_eigen(&m, false)?.0);
            }
        }
        SpectrumMethod::ShiftInvert { sigma, krylov_dim } => {
            let lu = BandLu::factor(&s.l_odd.shifted(C64::new(-sigma, 0.0)))?;
            let z = [lu.solve(&s.v[0]), lu.solve(&s.v[1])];
            let wz = |i: usize, j: usize| -> C64 { s.w[i].iter().zip(&z[j]).map(|(a, b)| a * b).sum() };
            let sm = [[wz(0, 0), wz(0, 1)], [wz(1, 0), wz(1, 1)]];
            let proj = BlockProjection::build(s.odd.len(), krylov_dim, &z, &s.w, |y| lu.solve_in_place(y));
            for &k in grid.k_values() {
                let c = C64::new(0.0, -MomentumGrid::t_k(params.j, k));
                // (A + c V W^T)^-1 = A^-1 - Z C W^T A^-1 with C = c (I + c W^T Z)^-1
                let (a, b, cc, d) = (1.0 + c * sm[0][0], c * sm[0][1], c * sm[1][0], 1.0 + c * sm[1][1]);
                let det = a * d - b * cc;
                if det.norm() == 0.0 {
                    return Err(Error::Singular { column: 0 });
                }
                let cmat = [[c * d / det, -c * b / det], [-c * cc / det, c * a / det]];
                let mut mus = proj.converged(&cmat)?;
                if mus.len() < 6.min(s.odd.len()) {
                    log::debug!("block projection short at k = {k}; falling back to Arnoldi");
                    mus = shift_invert_pairs(s.odd.len(), sigma, krylov_dim, false, |y| {
                        lu.solve_in_place(y);
                        let p: C64 = s.w[0].iter().zip(y.iter()).map(|(w, x)| w * x).sum();
                        let q: C64 = s.w[1].iter().zip(y.iter()).map(|(w, x)| w * x).sum();
                        let c0 = cmat[0][0] * p + cmat[0][1] * q;
                        let c1 = cmat[1][0] * p + cmat[1][1] * q;
                        for ((yi, z0), z1) in y.iter_mut().zip(&z[0]).zip(&z[1]) {
                            *yi -= z0 * c0 + z1 * c1;
                        }
                    })?
                    .into_iter()
                    .map(|p| 1.0 / (p.value - sigma))
                    .collect();
                }
                odd_per_k.push(mus.into_iter().map(|mu| sigma + 1.0 / mu).collect::<Vec<_>>());
            }
        }
    }

    let even_max = max_re(&even_vals);
    let mut omegas = Vec::with_capacity(odd_per_k.len());
    let mut max_im_per_k = Vec::with_capacity(odd_per_k.len());
    for odd in odd_per_k {
        max_im_per_k.push(max_re(&odd).max(even_max));
        let all: Vec<C64> = even_vals.iter().chain(odd.iter()).map(|l| C64::i() * l).collect();
        omegas.push(all);
    }
    // first (smallest) k wins ties
    let mut best = 0;
    for (i, &m) in max_im_per_k.iter().enumerate() {
        if m > max_im_per_k[best] {
            best = i;
        }
    }
    Ok(ExcitationSpectrum {
        k_values: grid.k_values().to_vec(),
        omegas,
        max_im: max_im_per_k[best],
        argmax_k: grid.k_values()[best],
        max_im_per_k,
    })
}

/// Bisection in `J` for the zero crossing of `max_im`. Other parameters
/// (including the detuning rule) are taken from `params`.
pub fn stability_boundary(
    params: &ModelParams,
    j_range: (f64, f64),
    tol: f64,
    grid: &MomentumGrid,
    dim: FockDim,
    method: SpectrumMethod,
) -> Result<f64> {
    let f = |j: f64| -> Result<f64> { Ok(excitation_spectrum(&params.with_j(j), grid, dim, method)?.max_im) };
    let (mut lo, mut hi) = j_range;
    let (flo, fhi) = (f(lo)?, f(hi)?);
    if !(flo < 0.0 && fhi > 0.0) && !(flo > 0.0 && fhi < 0.0) {
        return Err(Error::NoSignChange { lo, hi });
    }
    let rising = flo < 0.0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if (fm < 0.0) == rising {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Full-space linearized generator at one `t_k`, built from the parameters.
pub fn linearized_generator_at(params: &ModelParams, t_k: f64, dim: FockDim) -> Result<Superoperator> {
    let l = build_liouvillian(params, C64::zero(), dim);
    let rho_s = steady_state_at_fixed_alpha(params, C64::zero(), dim)?;
    linearized_generator(&l, &rho_s, t_k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lindblad::DeltaMode;
    use crate::steadystate::map_with_jacobian;

    #[test]
    fn grid_and_dispersion() {
        let g = MomentumGrid::default();
        assert_eq!(g.k_values().len(), 65);
        assert_eq!(g.k_values()[0], 0.0);
        assert!((g.k_values()[64] - core::f64::consts::PI).abs() < 1e-15);
        assert_eq!(MomentumGrid::t_k(0.5, 0.0), -0.5);
        assert!(MomentumGrid::uniform(1).is_err());
    }

    #[test]
    fn correction_is_rank_two_and_vanishes_at_zero_t() {
        let d = FockDim::new(6).unwrap();
        let p = ModelParams::new(2.0, 0.5, DeltaMode::BandBottom);
        let l = build_liouvillian(&p, C64::zero(), d);
        let rho = steady_state_at_fixed_alpha(&p, C64::zero(), d).unwrap();
        assert_eq!(linearized_generator(&l, &rho, 0.0).unwrap(), l);
        let m = linearized_generator(&l, &rho, -0.4).unwrap().to_dense();
        let r = m.sub(&l.to_dense());
        // rank via singular values of R^† R
        let ev = crate::linalg::eigen::eigenvalues(&r.adjoint().matmul(&r)).unwrap();
        let big = ev.iter().filter(|z| z.norm() > 1e-12 * r.max_abs().powi(2)).count();
        assert!(big <= 2 && big >= 1);
    }

    #[test]
    fn asymmetric_reference_is_rejected() {
        let d = FockDim::new(8).unwrap();
        let p = ModelParams::new(2.0, 0.5, DeltaMode::BandBottom);
        let l = build_liouvillian(&p, C64::new(0.3, 0.0), d);
        let rho = steady_state_at_fixed_alpha(&p, C64::new(0.3, 0.0), d).unwrap();
        assert!(matches!(linearized_generator(&l, &rho, 0.1), Err(Error::SymmetryViolation { .. })));
    }

    #[test]
    fn shift_invert_agrees_with_dense() {
        let d = FockDim::new(14).unwrap();
        let grid = MomentumGrid::uniform(5).unwrap();
        for p in [ModelParams::new(3.0, 0.5, DeltaMode::BandBottom), ModelParams::new(4.0, 2.0, DeltaMode::Fixed(0.0))] {
            let dense = excitation_spectrum(&p, &grid, d, SpectrumMethod::Dense).unwrap();
            let si = excitation_spectrum(&p, &grid, d, SpectrumMethod::default()).unwrap();
            for (a, b) in dense.max_im_per_k.iter().zip(&si.max_im_per_k) {
                assert!((a - b).abs() < 1e-7, "{a} {b}");
            }
            assert_eq!(dense.argmax_k, si.argmax_k);
        }
    }

    #[test]
    fn full_space_generator_matches_sector_spectrum() {
        let d = FockDim::new(8).unwrap();
        let p = ModelParams::new(3.0, 0.5, DeltaMode::BandBottom);
        let grid = MomentumGrid::uniform(3).unwrap();
        let sp = excitation_spectrum(&p, &grid, d, SpectrumMethod::Dense).unwrap();
        for (i, &k) in grid.k_values().iter().enumerate() {
            let m = linearized_generator_at(&p, MomentumGrid::t_k(p.j, k), d).unwrap();
            let ev = crate::linalg::eigen::eigenvalues(&m.to_dense()).unwrap();
            let mut full: Vec<f64> = ev.iter().filter(|z| z.norm() > 1e-9).map(|z| z.re).collect();
            full.sort_by(|a, b| b.partial_cmp(a).unwrap());
            assert!((full[0] - sp.max_im_per_k[i]).abs() < 1e-8);
            assert_eq!(sp.omegas[i].len(), 63);
        }
    }

    #[test]
    fn k_zero_threshold_matches_map_slope() {
        // M_0 has a zero eigenvalue exactly where the mean-field map has slope one
        let d = FockDim::new(20).unwrap();
        let grid = MomentumGrid::uniform(2).unwrap();
        let method = SpectrumMethod::default();
        let base = ModelParams::new(3.0, 0.0, DeltaMode::BandBottom);
        let jc = stability_boundary(&base, (0.2, 0.5), 1e-5, &grid, d, method).unwrap();
        for (j, unstable) in [(jc - 1e-3, false), (jc + 1e-3, true)] {
            let (_, jac, _) = map_with_jacobian(&base.with_j(j), C64::zero(), d).unwrap();
            let r = crate::steadystate::map_spectral_radius(jac);
            assert_eq!(r > 1.0, unstable, "J={j} radius {r}");
        }
    }

    #[test]
    fn stability_classification() {
        let d = FockDim::new(40).unwrap();
        let grid = MomentumGrid::default();
        let m = SpectrumMethod::default();
        let s = excitation_spectrum(&ModelParams::new(3.0, 0.2, DeltaMode::BandBottom), &grid, d, m).unwrap();
        assert!(s.max_im < 0.0);
        let s = excitation_spectrum(&ModelParams::new(3.0, 0.5, DeltaMode::BandBottom), &grid, d, m).unwrap();
        assert!(s.max_im > 0.0);
        assert_eq!(s.argmax_k, 0.0);
        let s = excitation_spectrum(&ModelParams::new(4.0, 2.0, DeltaMode::Fixed(0.0)), &grid, d, m).unwrap();
        assert!(s.argmax_k != 0.0, "argmax {}", s.argmax_k);
    }
}
