//! Truncated Fock space: ladder, number and parity operators, coherent and
//! cat states, displacement operators.
//!
//! Basis states are `|0>, ..., |N-1>`; matrix row/column index = photon number.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64 as C64;
#[allow(unused_imports)]
use num_traits::Float;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::linalg::dense::{dot_c, norm2};
use crate::linalg::eigen::symmetric_tridiagonal;
use crate::linalg::CMatrix;

/// Operators on the truncated Fock space are plain dense matrices.
pub type FockMatrix = CMatrix;

pub const DEFAULT_LEVELS: usize = 40;
pub const DEFAULT_TRUNCATION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FockDim(usize);

impl FockDim {
    pub fn new(n_levels: usize) -> Result<Self> {
        if n_levels < 2 {
            return Err(Error::InvalidParams(alloc::format!("n_levels must be >= 2, got {n_levels}")));
        }
        Ok(Self(n_levels))
    }

    #[inline]
    pub fn n(self) -> usize {
        self.0
    }

    /// Dimension of the vectorized density-matrix space, `N^2`.
    #[inline]
    pub fn liouville(self) -> usize {
        self.0 * self.0
    }
}

impl Default for FockDim {
    fn default() -> Self {
        Self(DEFAULT_LEVELS)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<C64>,
}

impl StateVector {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() < 2 {
            return Err(Error::DimensionMismatch { expected: 2, found: amplitudes.len() });
        }
        let nrm = norm2(&amplitudes);
        if !(nrm > 0.0 && nrm.is_finite()) {
            return Err(Error::InvalidParams(alloc::format!("state norm must be finite and positive, got {nrm}")));
        }
        Ok(Self { amplitudes })
    }

    pub fn basis(n: usize, dim: FockDim) -> Self {
        let mut amplitudes = vec![C64::zero(); dim.n()];
        amplitudes[n] = C64::new(1.0, 0.0);
        Self { amplitudes }
    }

    pub fn vacuum(dim: FockDim) -> Self {
        Self::basis(0, dim)
    }

    pub fn dim(&self) -> FockDim {
        FockDim(self.amplitudes.len())
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        norm2(&self.amplitudes)
    }

    pub fn normalized(mut self) -> Self {
        let nrm = self.norm();
        self.amplitudes.iter_mut().for_each(|z| *z /= nrm);
        self
    }

    /// `<self|other>`
    pub fn inner(&self, other: &Self) -> C64 {
        dot_c(&self.amplitudes, &other.amplitudes)
    }

    /// `|psi><psi|`
    pub fn projector(&self) -> FockMatrix {
        let a = &self.amplitudes;
        CMatrix::from_fn(a.len(), a.len(), |i, j| a[i] * a[j].conj())
    }
}

pub fn annihilation(dim: FockDim) -> FockMatrix {
    let n = dim.n();
    let mut a = CMatrix::zeros(n, n);
    for k in 0..n - 1 {
        a[(k, k + 1)] = C64::new(((k + 1) as f64).sqrt(), 0.0);
    }
    a
}

pub fn creation(dim: FockDim) -> FockMatrix {
    annihilation(dim).adjoint()
}

pub fn number_operator(dim: FockDim) -> FockMatrix {
    let d: Vec<C64> = (0..dim.n()).map(|k| C64::new(k as f64, 0.0)).collect();
    CMatrix::from_diagonal(&d)
}

pub fn parity_operator(dim: FockDim) -> FockMatrix {
    let d: Vec<C64> = (0..dim.n()).map(|k| C64::new(if k % 2 == 0 { 1.0 } else { -1.0 }, 0.0)).collect();
    CMatrix::from_diagonal(&d)
}

/// Untruncated coherent amplitudes `e^{-|a|^2/2} a^n / sqrt(n!)` for `n < N`,
/// plus the weight `|c_{N-1}|^2` used as the truncation indicator.
fn coherent_amplitudes(alpha: C64, n: usize) -> (Vec<C64>, f64) {
    let mut c = Vec::with_capacity(n);
    let mut cur = C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    c.push(cur);
    for k in 1..n {
        cur = cur * alpha / (k as f64).sqrt();
        c.push(cur);
    }
    let tail = c[n - 1].norm_sqr();
    (c, tail)
}

pub fn coherent_state(alpha: C64, dim: FockDim) -> Result<StateVector> {
    coherent_state_with_tol(alpha, dim, DEFAULT_TRUNCATION_TOL)
}

pub fn coherent_state_with_tol(alpha: C64, dim: FockDim, tol: f64) -> Result<StateVector> {
    let (c, tail) = coherent_amplitudes(alpha, dim.n());
    if tail > tol {
        return Err(Error::Truncation { weight: tail, tol });
    }
    Ok(StateVector { amplitudes: c }.normalized())
}

/// `(|alpha> + s|-alpha>)` normalized, `s = +1` (even) or `-1` (odd).
pub fn cat_state(alpha: C64, parity: Parity, dim: FockDim) -> Result<StateVector> {
    if parity == Parity::Odd && alpha.is_zero() {
        return Err(Error::DegenerateCat);
    }
    let (c, tail) = coherent_amplitudes(alpha, dim.n());
    if tail > DEFAULT_TRUNCATION_TOL {
        return Err(Error::Truncation { weight: tail, tol: DEFAULT_TRUNCATION_TOL });
    }
    // (-alpha)^n = (-1)^n alpha^n, so only one parity survives
    let keep = match parity {
        Parity::Even => 0,
        Parity::Odd => 1,
    };
    let amplitudes: Vec<C64> =
        c.iter().enumerate().map(|(k, z)| if k % 2 == keep { 2.0 * z } else { C64::zero() }).collect();
    StateVector::new(amplitudes).map(StateVector::normalized)
}

/// `D(z) = exp(z a^† - z^* a)` on the truncated space.
///
/// With `z = r e^{i theta}`, `z a^† - z^* a = -i r R T X T^† R^†`, where
/// `X = a + a^†` is real symmetric tridiagonal, `T = diag(i^n)` and
/// `R = diag(e^{i n theta})`. Diagonalizing `X` gives `D(z)` exactly unitary.
pub fn displacement(z: C64, dim: FockDim) -> Result<FockMatrix> {
    let n = dim.n();
    let (_, tail) = coherent_amplitudes(z, n);
    if tail > DEFAULT_TRUNCATION_TOL {
        return Err(Error::Truncation { weight: tail, tol: DEFAULT_TRUNCATION_TOL });
    }
    let d = displacement_unchecked(z, n)?;
    let defect = d.adjoint().matmul(&d).max_abs_diff(&CMatrix::identity(n));
    if defect > 1e-6 {
        return Err(Error::Truncation { weight: defect, tol: 1e-6 });
    }
    Ok(d)
}

fn displacement_unchecked(z: C64, n: usize) -> Result<FockMatrix> {
    let r = z.norm();
    if r == 0.0 {
        return Ok(CMatrix::identity(n));
    }
    let theta = z.arg();
    let off: Vec<f64> = (1..n).map(|k| (k as f64).sqrt()).collect();
    let (lam, w) = symmetric_tridiagonal(&vec![0.0; n], &off)?;
    let phase: Vec<C64> = lam.iter().map(|l| C64::from_polar(1.0, -r * l)).collect();
    // u_k = i^k e^{i k theta}
    let u: Vec<C64> = (0..n)
        .map(|k| C64::i().powu(k as u32) * C64::from_polar(1.0, k as f64 * theta))
        .collect();
    Ok(CMatrix::from_fn(n, n, |i, j| {
        let mut s = C64::zero();
        for (m, p) in phase.iter().enumerate() {
            s += p * (w[i * n + m] * w[j * n + m]);
        }
        u[i] * s * u[j].conj()
    }))
}
