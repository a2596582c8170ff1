//! Single-site mean-field Hamiltonian and Lindblad generator.
//!
//! Vectorization convention (used everywhere in this crate): the density
//! matrix entry `rho[m][n]` sits at index `m * N + n`. Because [`CMatrix`] is
//! row-major, `vec(rho)` is simply `rho.as_slice()`.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64 as C64;
#[allow(unused_imports)]
use num_traits::Float;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::fock::{FockDim, FockMatrix, StateVector};
use crate::linalg::eigen::hermitian_eigenvalues;
use crate::linalg::{CMatrix, SparseMatrix};

/// Index of `rho[m][n]` in the vectorized density matrix.
#[inline]
pub fn vec_index(m: usize, n: usize, dim: FockDim) -> usize {
    m * dim.n() + n
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeltaMode {
    Fixed(f64),
    /// Detuning tied to the bottom of the hopping band, `Delta = -J`.
    BandBottom,
}

/// Physical parameters in units of the one-photon loss rate `kappa`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub delta_mode: DeltaMode,
    pub u: f64,
    pub g: C64,
    pub j: f64,
    pub kappa: f64,
    pub eta: f64,
}

impl ModelParams {
    /// `U = eta = kappa = 1`.
    pub fn new(g: f64, j: f64, delta_mode: DeltaMode) -> Self {
        Self { delta_mode, u: 1.0, g: C64::new(g, 0.0), j, kappa: 1.0, eta: 1.0 }
    }

    pub fn with_j(self, j: f64) -> Self {
        Self { j, ..self }
    }

    pub fn with_g(self, g: C64) -> Self {
        Self { g, ..self }
    }

    pub fn delta(&self) -> f64 {
        match self.delta_mode {
            DeltaMode::Fixed(d) => d,
            DeltaMode::BandBottom => -self.j,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParams(msg.into()));
        let finite = [self.delta(), self.u, self.g.re, self.g.im, self.j, self.kappa, self.eta];
        if finite.iter().any(|x| !x.is_finite()) {
            return bad("parameters must be finite");
        }
        if self.kappa <= 0.0 {
            return bad("kappa must be positive");
        }
        if self.eta < 0.0 {
            return bad("eta must be non-negative");
        }
        if self.u < 0.0 {
            return bad("u must be non-negative");
        }
        if self.j < 0.0 {
            return bad("j must be non-negative");
        }
        Ok(())
    }
}

/// A validated density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: CMatrix,
}

pub const HERMITICITY_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = 1e-8;

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() || m.rows() < 2 {
            return Err(Error::InvalidDensityMatrix("not a square matrix of size >= 2".into()));
        }
        let h = m.hermiticity_defect();
        if h >= HERMITICITY_TOL {
            return Err(Error::InvalidDensityMatrix(alloc::format!("hermiticity defect {h:e}")));
        }
        let t = m.trace();
        if (t - 1.0).norm() >= TRACE_TOL {
            return Err(Error::InvalidDensityMatrix(alloc::format!("trace {t}")));
        }
        let rho = Self { m };
        let e = rho.min_eigenvalue()?;
        if e <= -POSITIVITY_TOL {
            return Err(Error::InvalidDensityMatrix(alloc::format!("min eigenvalue {e:e}")));
        }
        Ok(rho)
    }

    /// Hermitizes and trace-normalizes before validating.
    pub fn from_hermitized(m: &CMatrix) -> Result<Self> {
        let mut h = m.hermitian_part();
        let t = h.trace().re;
        if !(t.abs() > 0.0) {
            return Err(Error::InvalidDensityMatrix("zero trace".into()));
        }
        h.scale_mut(C64::new(1.0 / t, 0.0));
        Self::new(h)
    }

    /// Skips the eigenvalue check; for states produced by trusted solvers.
    pub(crate) fn from_trusted(m: CMatrix) -> Self {
        Self { m }
    }

    pub fn pure(psi: &StateVector) -> Self {
        let mut p = psi.projector();
        let t = p.trace().re;
        p.scale_mut(C64::new(1.0 / t, 0.0));
        Self { m: p }
    }

    pub fn dim(&self) -> FockDim {
        FockDim::new(self.m.rows()).expect("validated on construction")
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn as_vec(&self) -> &[C64] {
        self.m.as_slice()
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(hermitian_eigenvalues(&self.m)?.first().copied().unwrap_or(0.0))
    }
}

/// Linear map on vectorized density matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    dim: FockDim,
    matrix: SparseMatrix,
}

impl Superoperator {
    pub fn from_sparse(dim: FockDim, matrix: SparseMatrix) -> Self {
        assert_eq!(matrix.rows(), dim.liouville());
        assert_eq!(matrix.cols(), dim.liouville());
        Self { dim, matrix }
    }

    pub fn dim(&self) -> FockDim {
        self.dim
    }

    pub fn sparse(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn to_dense(&self) -> CMatrix {
        self.matrix.to_dense()
    }

    pub fn apply(&self, rho: &FockMatrix) -> Result<FockMatrix> {
        let n = self.dim.n();
        if rho.rows() != n || rho.cols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: rho.rows() });
        }
        Ok(CMatrix::from_row_major(n, n, self.matrix.matvec(rho.as_slice())))
    }
}

/// Banded effective Hamiltonian `H - (i/2) sum_k K_k^† K_k`.
///
/// `band[d][i] = Heff[i][i + d - 2]` for the diagonals `d - 2 in -2..=2`.
#[derive(Debug, Clone)]
pub struct Generator {
    n: usize,
    band: [Vec<C64>; 5],
    /// `kappa sqrt(k+1)` and `sqrt(eta (k+1)(k+2))`, the jump-term factors per index.
    jump1: Vec<f64>,
    jump2: Vec<f64>,
    kappa: f64,
    eta: f64,
}

impl Generator {
    pub fn new(params: &ModelParams, alpha: C64, dim: FockDim) -> Self {
        let n = dim.n();
        let z = || vec![C64::zero(); n];
        let mut band = [z(), z(), z(), z(), z()];
        let delta = params.delta();
        for k in 0..n {
            let nk = k as f64;
            let h = -delta * nk + 0.5 * params.u * nk * (nk - 1.0);
            let loss = 0.5 * (params.kappa * nk + params.eta * nk * (nk - 1.0));
            band[2][k] = C64::new(h, -loss);
        }
        let hop = -params.j;
        for k in 0..n.saturating_sub(1) {
            let s = ((k + 1) as f64).sqrt();
            // <k+1| -J alpha a^† |k>,  <k| -J alpha^* a |k+1>
            band[1][k + 1] = hop * alpha * s;
            band[3][k] = hop * alpha.conj() * s;
        }
        for k in 0..n.saturating_sub(2) {
            let s = (((k + 1) * (k + 2)) as f64).sqrt();
            band[0][k + 2] = 0.5 * params.g * s;
            band[4][k] = 0.5 * params.g.conj() * s;
        }
        let jump1 = (0..n).map(|k| ((k + 1) as f64).sqrt()).collect();
        let jump2 = (0..n).map(|k| (((k + 1) * (k + 2)) as f64).sqrt()).collect();
        Self { n, band, jump1, jump2, kappa: params.kappa, eta: params.eta }
    }

    #[inline]
    fn heff(&self, i: usize, j: usize) -> C64 {
        let d = j as isize - i as isize;
        if d.unsigned_abs() > 2 || i >= self.n || j >= self.n {
            return C64::zero();
        }
        self.band[(d + 2) as usize][i]
    }

    /// Hermitian part of the effective Hamiltonian, i.e. `H` itself.
    pub fn hamiltonian(&self) -> FockMatrix {
        CMatrix::from_fn(self.n, self.n, |i, j| {
            let h = self.heff(i, j);
            if i == j {
                C64::new(h.re, 0.0)
            } else {
                h
            }
        })
    }

    /// `out = L rho` on a row-major `N x N` buffer. Written as whole-row
    /// updates so the inner loops are contiguous.
    pub fn apply_into(&self, rho: &[C64], out: &mut [C64]) {
        let n = self.n;
        debug_assert_eq!(rho.len(), n * n);
        debug_assert_eq!(out.len(), n * n);
        let mi = C64::new(0.0, -1.0);
        for m in 0..n {
            let o = &mut out[m * n..(m + 1) * n];
            o.fill(C64::zero());
            // -i Heff rho: a combination of up to five rows
            for k in m.saturating_sub(2)..=(m + 2).min(n - 1) {
                let c = mi * self.band[k + 2 - m][m];
                for (x, y) in o.iter_mut().zip(&rho[k * n..(k + 1) * n]) {
                    *x += c * y;
                }
            }
            // +i rho Heff^†: (rho Heff^†)[m][nn] = sum_d rho[m][nn + d - 2] conj(Heff[nn][nn + d - 2])
            let row = &rho[m * n..(m + 1) * n];
            for (d, b) in self.band.iter().enumerate() {
                let lo = 2usize.saturating_sub(d);
                let hi = (n + 2).saturating_sub(d).min(n);
                for nn in lo..hi {
                    let h = b[nn];
                    // i conj(h)
                    o[nn] += C64::new(h.im, h.re) * row[nn + d - 2];
                }
            }
            if m + 1 < n {
                let c = self.kappa * self.jump1[m];
                for ((x, y), s) in o.iter_mut().zip(&rho[(m + 1) * n + 1..(m + 2) * n]).zip(&self.jump1) {
                    *x += y * (c * s);
                }
            }
            if m + 2 < n {
                let c = self.eta * self.jump2[m];
                for ((x, y), s) in o.iter_mut().zip(&rho[(m + 2) * n + 2..(m + 3) * n]).zip(&self.jump2) {
                    *x += y * (c * s);
                }
            }
        }
    }

    /// Sparse superoperator in the crate-wide vectorization.
    pub fn to_sparse(&self) -> SparseMatrix {
        let n = self.n;
        let mi = C64::new(0.0, -1.0);
        let mut trip = Vec::with_capacity(n * n * 12);
        for m in 0..n {
            for nn in 0..n {
                let row = m * n + nn;
                for k in m.saturating_sub(2)..=(m + 2).min(n - 1) {
                    trip.push((row, k * n + nn, mi * self.heff(m, k)));
                }
                for l in nn.saturating_sub(2)..=(nn + 2).min(n - 1) {
                    trip.push((row, m * n + l, -mi * self.heff(nn, l).conj()));
                }
                if m + 1 < n && nn + 1 < n {
                    let s = (((m + 1) * (nn + 1)) as f64).sqrt();
                    trip.push((row, (m + 1) * n + nn + 1, C64::new(self.kappa * s, 0.0)));
                }
                if m + 2 < n && nn + 2 < n {
                    let s = (((m + 1) * (m + 2) * (nn + 1) * (nn + 2)) as f64).sqrt();
                    trip.push((row, (m + 2) * n + nn + 2, C64::new(self.eta * s, 0.0)));
                }
            }
        }
        SparseMatrix::from_triplets(n * n, n * n, trip)
    }
}

/// `H = -Delta a^†a + (U/2) a^†a^†aa + (G/2) a^†a^† + (G^*/2) aa - J(alpha a^† + alpha^* a)`.
///
/// The hopping term carries the sign of the band-bottom dispersion `t_0 = -J`,
/// so that `Delta = -J` is resonant with the uniform mode.
pub fn build_hamiltonian(params: &ModelParams, alpha_mf: C64, dim: FockDim) -> FockMatrix {
    Generator::new(params, alpha_mf, dim).hamiltonian()
}

pub fn build_liouvillian(params: &ModelParams, alpha_mf: C64, dim: FockDim) -> Superoperator {
    Superoperator::from_sparse(dim, Generator::new(params, alpha_mf, dim).to_sparse())
}

/// Row vector `w` with `w . vec(X) = Tr(op X)`.
pub fn trace_functional(op: &FockMatrix) -> Vec<C64> {
    op.transpose().into_vec()
}

/// Indices of the vectorized entries `rho[m][n]` with `(m + n) % 2 == parity`.
/// For `alpha = 0` the generator is block diagonal in these two sectors.
pub fn parity_sector(dim: FockDim, parity: usize) -> Vec<usize> {
    let n = dim.n();
    (0..n * n).filter(|i| (i / n + i % n) % 2 == parity).collect()
}
