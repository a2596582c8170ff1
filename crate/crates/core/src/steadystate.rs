//! Steady states of the single-site generator and the mean-field
//! self-consistency loop `alpha = Tr[a rho_ss(alpha)]`.
//!
//! The null space of `L` is found by a direct solve: the equation for
//! `rho[0][0]` (implied by the others through trace preservation) is replaced
//! by the trace functional and the system is solved with a unit right-hand
//! side in that row. Unknowns are ordered in reverse so that the replaced row
//! and the vacuum population, which never decays, come last in the banded
//! elimination. At `alpha = 0` only the even parity
//! sector (`m + n` even) is solved, which halves the dimension and the band.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64 as C64;
#[allow(unused_imports)]
use num_traits::Float;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::fock::{parity_operator, FockDim};
use crate::linalg::arnoldi::{arnoldi, default_start, ArnoldiOptions};
use crate::linalg::{BandLu, CMatrix};
use crate::lindblad::{parity_sector, DensityMatrix, Generator, ModelParams};

/// Eigenvalues of `L` below this modulus count as stationary.
pub const NULL_TOL: f64 = 1e-9;
pub const DEFAULT_SYMMETRIC_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    Symmetric,
    Broken,
}

#[derive(Debug, Clone)]
pub struct FixedPoint {
    pub alpha: C64,
    pub rho: DensityMatrix,
    /// `|Tr[a rho] - alpha|` at the returned iterate.
    pub residual: f64,
    pub iterations: usize,
    pub branch: Branch,
    /// False when `max_iter` ran out; the best iterate is returned.
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub mixing: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub seeds: Vec<C64>,
    pub newton_fallback: bool,
    pub symmetric_threshold: f64,
    /// Mixing hands over to Newton once the residual has shrunk by less than
    /// this factor on `stall_window` consecutive iterations.
    pub stall_ratio: f64,
    pub stall_window: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        let mut seeds = Vec::new();
        for phase in [C64::new(1.0, 0.0), C64::i()] {
            for r in [0.1, 0.5, 2.0] {
                seeds.push(phase * r);
            }
        }
        Self {
            mixing: 0.5,
            max_iter: 400,
            tol: 1e-10,
            seeds,
            newton_fallback: true,
            symmetric_threshold: DEFAULT_SYMMETRIC_THRESHOLD,
            stall_ratio: 0.25,
            stall_window: 3,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParams(m.into()));
        if !(self.mixing > 0.0 && self.mixing <= 1.0) {
            return bad("mixing must lie in (0, 1]");
        }
        if self.max_iter == 0 {
            return bad("max_iter must be >= 1");
        }
        if !(self.tol > 0.0) {
            return bad("tol must be positive");
        }
        if self.seeds.is_empty() {
            return bad("seeds must be nonempty");
        }
        if !(self.symmetric_threshold > 0.0) {
            return bad("symmetric_threshold must be positive");
        }
        Ok(())
    }
}

fn trace_border(n: usize, order: &[usize]) -> Vec<C64> {
    order.iter().map(|&i| if i / n == i % n { C64::new(1.0, 0.0) } else { C64::zero() }).collect()
}

fn scatter(n: usize, order: &[usize], x: &[C64]) -> Vec<C64> {
    let mut full = vec![C64::zero(); n * n];
    for (v, &i) in x.iter().zip(order) {
        full[i] = *v;
    }
    full
}

/// Factored bordered generator at one `alpha`, with its normalized solution.
struct Solved {
    lu: BandLu,
    order: Vec<usize>,
    /// Full-space vectorized steady state (Hermitized, unit trace).
    rho: Vec<C64>,
}

fn hermitize_normalize(n: usize, x: &[C64]) -> Vec<C64> {
    let m = CMatrix::from_row_major(n, n, x.to_vec()).hermitian_part();
    let t = m.trace().re;
    m.into_vec().into_iter().map(|z| z / t).collect()
}

fn solve_full(params: &ModelParams, alpha: C64, dim: FockDim) -> Result<Solved> {
    let n = dim.n();
    let order: Vec<usize> = (0..n * n).rev().collect();
    let l = Generator::new(params, alpha, dim).to_sparse().principal_submatrix(&order);
    let lu = BandLu::factor_bordered(&l, &trace_border(n, &order))?;
    let mut x = vec![C64::zero(); n * n];
    x[n * n - 1] = C64::new(1.0, 0.0);
    lu.solve_in_place(&mut x);
    let rho = hermitize_normalize(n, &scatter(n, &order, &x));
    Ok(Solved { lu, order, rho })
}

fn solve_symmetric(params: &ModelParams, dim: FockDim) -> Result<Vec<C64>> {
    let n = dim.n();
    let mut order = parity_sector(dim, 0);
    order.reverse();
    let l = Generator::new(params, C64::zero(), dim).to_sparse().principal_submatrix(&order);
    let lu = BandLu::factor_bordered(&l, &trace_border(n, &order))?;
    let mut x = vec![C64::zero(); order.len()];
    *x.last_mut().unwrap() = C64::new(1.0, 0.0);
    lu.solve_in_place(&mut x);
    Ok(hermitize_normalize(n, &scatter(n, &order, &x)))
}

fn steady_vec(params: &ModelParams, alpha: C64, dim: FockDim) -> Result<Vec<C64>> {
    if alpha.is_zero() {
        solve_symmetric(params, dim)
    } else {
        Ok(solve_full(params, alpha, dim)?.rho)
    }
}

fn check_stationary(params: &ModelParams, alpha: C64, dim: FockDim, rho: &[C64]) -> Result<()> {
    let mut out = vec![C64::zero(); rho.len()];
    Generator::new(params, alpha, dim).apply_into(rho, &mut out);
    let r = out.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    if r < 1e-8 {
        Ok(())
    } else {
        Err(Error::NoConvergence { iterations: 1, residual: r })
    }
}

#[derive(Debug, Clone)]
pub struct SteadyStateReport {
    pub rho: DensityMatrix,
    /// Number of generator eigenvalues with modulus below [`NULL_TOL`].
    pub multiplicity: usize,
    /// Smallest modulus among the remaining eigenvalues found near zero.
    pub gap: f64,
}

/// Steady state plus a null-space multiplicity count from shift-invert
/// Arnoldi around a small negative shift. A degenerate null space is reported,
/// not rejected; the returned state is the trace-one solution, which at
/// `alpha = 0` lies in the even parity sector.
pub fn steady_state_report(params: &ModelParams, alpha: C64, dim: FockDim) -> Result<SteadyStateReport> {
    params.validate()?;
    let rho = steady_vec(params, alpha, dim)?;
    check_stationary(params, alpha, dim, &rho)?;
    let n = dim.n();
    let l = Generator::new(params, alpha, dim).to_sparse();
    let sigma = C64::new(-0.0371, 0.0);
    let lu = BandLu::factor(&l.shifted(-sigma))?;
    let opts = ArnoldiOptions { krylov_dim: 30.min(n * n), tol: 1e-10, want_vectors: false };
    let pairs = arnoldi(n * n, &default_start(n * n), opts, |x, y| {
        y.copy_from_slice(x);
        lu.solve_in_place(y);
    })?;
    let mut multiplicity = 0;
    let mut gap = f64::INFINITY;
    for p in &pairs {
        let lam = sigma + 1.0 / p.value;
        if lam.norm() < NULL_TOL {
            multiplicity += 1;
        } else {
            gap = gap.min(lam.norm());
        }
    }
    let rho = DensityMatrix::from_trusted(CMatrix::from_row_major(n, n, rho));
    Ok(SteadyStateReport { rho, multiplicity: multiplicity.max(1), gap })
}

/// Unique steady state of `L(alpha)`; errors when the null space is degenerate.
pub fn steady_state_at_fixed_alpha(params: &ModelParams, alpha: C64, dim: FockDim) -> Result<DensityMatrix> {
    let rep = steady_state_report(params, alpha, dim)?;
    if rep.multiplicity > 1 {
        return Err(Error::DegenerateSteadyState { multiplicity: rep.multiplicity });
    }
    Ok(rep.rho)
}

/// `Tr[a X]` for a vectorized `X`.
pub(crate) fn trace_a(n: usize, x: &[C64]) -> C64 {
    (0..n - 1).map(|k| ((k + 1) as f64).sqrt() * x[(k + 1) * n + k]).sum()
}

/// `[X, rho]` where `X` is tridiagonal with `X[k][k+1] = up * sqrt(k+1)` and
/// `X[k+1][k] = down * sqrt(k+1)`.
fn tridiagonal_commutator(n: usize, up: C64, down: C64, rho: &[C64]) -> Vec<C64> {
    let s = |k: usize| ((k + 1) as f64).sqrt();
    let x = |i: usize, j: usize| -> C64 {
        if j == i + 1 {
            up * s(i)
        } else if i == j + 1 {
            down * s(j)
        } else {
            C64::zero()
        }
    };
    let mut out = vec![C64::zero(); n * n];
    for m in 0..n {
        for q in 0..n {
            let mut acc = C64::zero();
            for k in m.saturating_sub(1)..=(m + 1).min(n - 1) {
                acc += x(m, k) * rho[k * n + q];
            }
            for k in q.saturating_sub(1)..=(q + 1).min(n - 1) {
                acc -= rho[m * n + k] * x(k, q);
            }
            out[m * n + q] = acc;
        }
    }
    out
}

/// Value of the mean-field map and its real 2x2 Jacobian
/// `d(Re F, Im F) / d(Re alpha, Im alpha)`.
///
/// The derivative of the steady state solves `L drho = -(dL) rho` with the
/// same bordered factorization and a zero trace constraint.
pub fn map_with_jacobian(params: &ModelParams, alpha: C64, dim: FockDim) -> Result<(C64, [[f64; 2]; 2], Vec<C64>)> {
    let n = dim.n();
    let s = solve_full(params, alpha, dim)?;
    let f = trace_a(n, &s.rho);
    let i = C64::i();
    let j = params.j;
    // dH/dRe(alpha) = -J (a + a^†), dH/dIm(alpha) = -J i (a^† - a); dL rho = -i [dH, rho]
    let dirs = [(C64::new(-j, 0.0), C64::new(-j, 0.0)), (C64::new(0.0, j), C64::new(0.0, -j))];
    let mut jac = [[0.0; 2]; 2];
    for (col, (up, down)) in dirs.iter().enumerate() {
        let c = tridiagonal_commutator(n, *up, *down, &s.rho);
        let mut rhs: Vec<C64> = s.order.iter().map(|&k| i * c[k]).collect();
        rhs[n * n - 1] = C64::zero();
        s.lu.solve_in_place(&mut rhs);
        let df = trace_a(n, &scatter(n, &s.order, &rhs));
        jac[0][col] = df.re;
        jac[1][col] = df.im;
    }
    Ok((f, jac, s.rho))
}

/// `F(alpha) = Tr[a rho_ss(alpha)]`.
pub fn mean_field_map(params: &ModelParams, alpha: C64, dim: FockDim) -> Result<C64> {
    Ok(trace_a(dim.n(), &steady_vec(params, alpha, dim)?))
}

fn fixed_point(n: usize, alpha: C64, rho: Vec<C64>, residual: f64, iterations: usize, converged: bool, thr: f64) -> FixedPoint {
    let branch = if alpha.norm() < thr { Branch::Symmetric } else { Branch::Broken };
    FixedPoint {
        alpha,
        rho: DensityMatrix::from_trusted(CMatrix::from_row_major(n, n, rho)),
        residual,
        iterations,
        branch,
        converged,
    }
}

fn symmetric_point(params: &ModelParams, dim: FockDim, iterations: usize, thr: f64) -> Result<FixedPoint> {
    let rho = solve_symmetric(params, dim)?;
    Ok(fixed_point(dim.n(), C64::zero(), rho, 0.0, iterations, true, thr))
}

/// Solves `(J - I) d = -r` for the real 2x2 Newton step.
fn newton_step(jac: [[f64; 2]; 2], r: C64) -> Option<C64> {
    let a = jac[0][0] - 1.0;
    let b = jac[0][1];
    let c = jac[1][0];
    let d = jac[1][1] - 1.0;
    let det = a * d - b * c;
    if det.abs() < 1e-300 || !det.is_finite() {
        return None;
    }
    let x = (-r.re * d + r.im * b) / det;
    let y = (-r.im * a + r.re * c) / det;
    Some(C64::new(x, y))
}

/// Eigenvalue moduli of the real 2x2 matrix `jac`; a value above one marks a
/// fixed point that repels the map (a saddle of the self-consistency).
pub fn map_spectral_radius(jac: [[f64; 2]; 2]) -> f64 {
    let tr = jac[0][0] + jac[1][1];
    let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
    let disc = tr * tr / 4.0 - det;
    if disc >= 0.0 {
        let s = disc.sqrt();
        (tr / 2.0 + s).abs().max((tr / 2.0 - s).abs())
    } else {
        det.abs().sqrt()
    }
}

/// Damped fixed-point iteration with Newton acceleration.
///
/// The iterate is captured onto the exact symmetric point `alpha = 0` once it
/// is contracting below a tenth of the symmetric threshold, or below
/// `CAPTURE_RADIUS` when the map is a contraction at the origin (the map is
/// odd in `alpha`, so its nonlinearity there is cubic). An iterate whose best
/// residual has not halved in `STAGNATION_WINDOW` evaluations is abandoned.
pub fn selfconsistent_steady_state(params: &ModelParams, seed: C64, opts: &SolverOptions, dim: FockDim) -> Result<FixedPoint> {
    iterate(params, seed, opts, dim, &mut None)
}

const CAPTURE_RADIUS: f64 = 1e-3;
const STAGNATION_WINDOW: usize = 60;

fn origin_radius(params: &ModelParams, dim: FockDim, cache: &mut Option<f64>) -> Result<f64> {
    if let Some(r) = *cache {
        return Ok(r);
    }
    let (_, j0, _) = map_with_jacobian(params, C64::zero(), dim)?;
    let r = map_spectral_radius(j0);
    *cache = Some(r);
    Ok(r)
}

fn iterate(params: &ModelParams, seed: C64, opts: &SolverOptions, dim: FockDim, origin: &mut Option<f64>) -> Result<FixedPoint> {
    params.validate()?;
    opts.validate()?;
    let n = dim.n();
    let thr = opts.symmetric_threshold;
    if seed.is_zero() || params.j == 0.0 {
        return symmetric_point(params, dim, 0, thr);
    }
    let capture = 0.1 * thr;
    let mut alpha = seed;
    let mut m = opts.mixing;
    let mut prev_res = f64::INFINITY;
    let mut prev_step: Option<C64> = None;
    let mut slow = 0usize;
    let mut newton = false;
    // whether Newton must avoid the symmetric root (decided on first use)
    let mut deflate: Option<bool> = None;
    let mut best: Option<(f64, C64, Vec<C64>)> = None;
    let mut it = 0;
    let mut mark = (f64::INFINITY, 0usize);
    while it < opts.max_iter {
        it += 1;
        if let Some(b) = best.as_ref() {
            if b.0 < 0.5 * mark.0 {
                mark = (b.0, it);
            } else if it - mark.1 > STAGNATION_WINDOW {
                break;
            }
        }
        if newton {
            let (f, jac, rho) = map_with_jacobian(params, alpha, dim)?;
            let r = f - alpha;
            let res = r.norm();
            if best.as_ref().map_or(true, |b| res < b.0) {
                best = Some((res, alpha, rho.clone()));
            }
            if res < opts.tol {
                return Ok(fixed_point(n, alpha, rho, res, it, true, thr));
            }
            if deflate != Some(true) && f.norm() < alpha.norm() && captured(params, dim, alpha, capture, origin)? {
                return symmetric_point(params, dim, it, thr);
            }
            let Some(mut step) = newton_step(jac, r) else {
                newton = false;
                continue;
            };
            let deflate = match deflate {
                Some(d) => d,
                None => {
                    let d = origin_radius(params, dim, origin)? > 1.0;
                    deflate = Some(d);
                    d
                }
            };
            if deflate {
                // deflate the known root alpha = 0 with M = |alpha|^-2 + 1
                let a2 = alpha.norm_sqr();
                let mval = 1.0 / a2 + 1.0;
                let grad_dot = -2.0 / (a2 * a2) * (alpha.conj() * step).re;
                let denom = 1.0 - grad_dot / mval;
                if denom.abs() > 1e-12 {
                    step /= denom;
                }
            }
            // backtrack on the residual of the map
            let mut lam = 1.0;
            let mut next = alpha + step;
            for _ in 0..8 {
                let trial = alpha + step * lam;
                let ft = mean_field_map(params, trial, dim)?;
                it += 1;
                if (ft - trial).norm() < res * (1.0 - 1e-4 * lam) {
                    next = trial;
                    break;
                }
                lam *= 0.5;
                next = trial;
            }
            alpha = next;
        } else {
            let rho = steady_vec(params, alpha, dim)?;
            let f = trace_a(n, &rho);
            let r = f - alpha;
            let res = r.norm();
            if best.as_ref().map_or(true, |b| res < b.0) {
                best = Some((res, alpha, rho.clone()));
            }
            if res < opts.tol {
                return Ok(fixed_point(n, alpha, rho, res, it, true, thr));
            }
            if f.norm() < alpha.norm() && captured(params, dim, alpha, capture, origin)? {
                return symmetric_point(params, dim, it, thr);
            }
            let step = r * m;
            if let Some(p) = prev_step {
                // reversal of the step direction: damp harder
                if (p.conj() * step).re < 0.0 {
                    m = (m * 0.5).max(1.0 / 64.0);
                }
            }
            if res > opts.stall_ratio * prev_res {
                slow += 1;
            } else {
                slow = 0;
            }
            if opts.newton_fallback && slow >= opts.stall_window {
                newton = true;
            }
            prev_res = res;
            prev_step = Some(step);
            alpha += step;
        }
    }
    let (res, a, rho) = best.expect("at least one iteration");
    Ok(fixed_point(n, a, rho, res, it, false, thr))
}

fn captured(params: &ModelParams, dim: FockDim, alpha: C64, capture: f64, origin: &mut Option<f64>) -> Result<bool> {
    let a = alpha.norm();
    if a < capture {
        return Ok(true);
    }
    Ok(a < CAPTURE_RADIUS && origin_radius(params, dim, origin)? < 1.0)
}

/// Maps a broken solution to its canonical Z2 representative
/// (`Re alpha >= 0`, ties broken by `Im alpha >= 0`).
pub fn canonicalize(fp: FixedPoint) -> FixedPoint {
    let a = fp.alpha;
    if a.re > 0.0 || (a.re == 0.0 && a.im >= 0.0) {
        return fp;
    }
    let p = parity_operator(fp.rho.dim());
    let rho = p.matmul(fp.rho.matrix()).matmul(&p);
    FixedPoint { alpha: -a, rho: DensityMatrix::from_trusted(rho), ..fp }
}

/// Symmetric branch first, then at most one broken branch (canonical form).
///
/// `hint` is tried before the configured seeds; sweeps pass the neighbouring
/// cell's solution. Broken candidates that repel the map are discarded.
pub fn find_branches_from(params: &ModelParams, opts: &SolverOptions, dim: FockDim, hint: Option<C64>) -> Result<Vec<FixedPoint>> {
    let mut out = vec![symmetric_point(params, dim, 0, opts.symmetric_threshold)?];
    if params.j == 0.0 {
        return Ok(out);
    }
    let mut seeds: Vec<C64> = hint.into_iter().filter(|h| h.norm() >= opts.symmetric_threshold).collect();
    // large seeds first: they reach a broken branch in fewer steps
    let mut rest: Vec<C64> = opts.seeds.iter().copied().filter(|s| !s.is_zero()).collect();
    rest.sort_by(|a, b| b.norm().partial_cmp(&a.norm()).unwrap_or(core::cmp::Ordering::Equal));
    seeds.extend(rest);
    let mut origin = None;
    for seed in seeds {
        let fp = iterate(params, seed, opts, dim, &mut origin)?;
        if fp.branch != Branch::Broken || !fp.converged {
            continue;
        }
        let (_, jac, _) = map_with_jacobian(params, fp.alpha, dim)?;
        if map_spectral_radius(jac) > 1.0 {
            log::debug!("discarding repelling fixed point alpha = {}", fp.alpha);
            continue;
        }
        out.push(canonicalize(fp));
        break;
    }
    Ok(out)
}

pub fn find_branches(params: &ModelParams, opts: &SolverOptions, dim: FockDim) -> Result<Vec<FixedPoint>> {
    find_branches_from(params, opts, dim, None)
}

/// `Tr[a rho]` for a density matrix.
pub fn order_parameter(rho: &DensityMatrix) -> C64 {
    trace_a(rho.dim().n(), rho.as_vec())
}
