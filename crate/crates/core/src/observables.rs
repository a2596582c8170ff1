//! Expectation values, purity, parity and the Wigner function.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64 as C64;
#[allow(unused_imports)]
use num_traits::Float;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::fock::FockMatrix;
use crate::lindblad::DensityMatrix;

/// `Tr[op rho]`
pub fn expectation(op: &FockMatrix, rho: &DensityMatrix) -> Result<C64> {
    let r = rho.matrix();
    let n = r.rows();
    if op.rows() != n || op.cols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: op.rows() });
    }
    let mut acc = C64::zero();
    for i in 0..n {
        for (j, o) in op.row(i).iter().enumerate() {
            acc += o * r[(j, i)];
        }
    }
    Ok(acc)
}

/// `<a^† a>`
pub fn occupation(rho: &DensityMatrix) -> f64 {
    rho.matrix().diagonal().iter().enumerate().map(|(k, z)| k as f64 * z.re).sum()
}

/// `Tr[rho^2]`, clipped into `(0, 1]` only when the excess is below `1e-10`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    let p: f64 = rho.as_vec().iter().map(|z| z.norm_sqr()).sum();
    if p > 1.0 && p - 1.0 < 1e-10 {
        1.0
    } else {
        p
    }
}

/// `Tr[P rho]` with `P = (-1)^{a^† a}`.
pub fn parity_expectation(rho: &DensityMatrix) -> f64 {
    rho.matrix().diagonal().iter().enumerate().map(|(k, z)| if k % 2 == 0 { z.re } else { -z.re }).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct WignerMap {
    pub re_grid: Vec<f64>,
    pub im_grid: Vec<f64>,
    /// `values[iy * re_grid.len() + ix] = W(re_grid[ix] + i im_grid[iy])`.
    pub values: Vec<f64>,
    /// Largest imaginary part discarded from the complex evaluation.
    pub imag_residue: f64,
    /// `|sum W dx dy - 1|` over the grid (Riemann sum).
    pub normalization_defect: f64,
}

impl WignerMap {
    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.re_grid.len() + ix]
    }

    /// Grid point with the largest value.
    pub fn argmax(&self) -> C64 {
        let (mut best, mut bi) = (f64::NEG_INFINITY, 0);
        for (i, &v) in self.values.iter().enumerate() {
            if v > best {
                best = v;
                bi = i;
            }
        }
        let nx = self.re_grid.len();
        C64::new(self.re_grid[bi % nx], self.im_grid[bi / nx])
    }
}

/// Evenly spaced points on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Default half-width of the Wigner window for a state with occupation `n`.
pub fn default_window(n: f64) -> f64 {
    3.0f64.max(2.0 * n.max(0.0).sqrt())
}

/// `W(z) = (2/pi) Tr[D(-z) rho D(z) P] = (2/pi) Tr[rho D(2z) P]`.
///
/// Matrix elements `<m|D(b)|n>` for `m, n < N` are those of the untruncated
/// displacement, generated column by column from
/// `D(b)|n> = (a^† - b^*) D(b)|n-1> / sqrt(n)` starting at the coherent state
/// `D(b)|0>`. The recursion only reads components below `N`, so it is exact for
/// a state supported on the first `N` levels.
pub fn wigner_point(rho: &DensityMatrix, z: C64) -> C64 {
    let r = rho.matrix();
    let n = r.rows();
    let beta = 2.0 * z;
    let sq: Vec<f64> = (0..n).map(|k| (k as f64).sqrt()).collect();
    let mut col = vec![C64::zero(); n];
    let mut cur = C64::new((-0.5 * beta.norm_sqr()).exp(), 0.0);
    col[0] = cur;
    for k in 1..n {
        cur = cur * beta / sq[k];
        col[k] = cur;
    }
    let bc = beta.conj();
    let mut acc = C64::zero();
    let mut next = vec![C64::zero(); n];
    for q in 0..n {
        // sum_p rho[q][p] D[p][q] (-1)^q
        let mut s = C64::zero();
        for p in 0..n {
            s += r[(q, p)] * col[p];
        }
        acc += if q % 2 == 0 { s } else { -s };
        if q + 1 < n {
            let inv = 1.0 / sq[q + 1];
            next[0] = -bc * col[0] * inv;
            for m in 1..n {
                next[m] = (sq[m] * col[m - 1] - bc * col[m]) * inv;
            }
            core::mem::swap(&mut col, &mut next);
        }
    }
    acc * (2.0 / core::f64::consts::PI)
}

pub fn wigner(rho: &DensityMatrix, re_grid: &[f64], im_grid: &[f64]) -> WignerMap {
    let mut values = Vec::with_capacity(re_grid.len() * im_grid.len());
    let mut imag_residue = 0.0f64;
    for &y in im_grid {
        for &x in re_grid {
            let w = wigner_point(rho, C64::new(x, y));
            imag_residue = imag_residue.max(w.im.abs());
            values.push(w.re);
        }
    }
    let dx = if re_grid.len() > 1 { re_grid[1] - re_grid[0] } else { 0.0 };
    let dy = if im_grid.len() > 1 { im_grid[1] - im_grid[0] } else { 0.0 };
    let total: f64 = values.iter().sum::<f64>() * dx * dy;
    WignerMap {
        re_grid: re_grid.to_vec(),
        im_grid: im_grid.to_vec(),
        values,
        imag_residue,
        normalization_defect: (total - 1.0).abs(),
    }
}

/// Distribution of the quadrature `(a + a^†)/2` at the points `xs`, the
/// marginal of `W` over the imaginary axis.
pub fn quadrature_distribution(rho: &DensityMatrix, xs: &[f64]) -> Vec<f64> {
    let r = rho.matrix();
    let n = r.rows();
    let norm0 = core::f64::consts::PI.powf(-0.25) * 2f64.powf(0.25);
    xs.iter()
        .map(|&x| {
            let u = 2f64.sqrt() * x;
            let mut psi = vec![0.0; n];
            psi[0] = norm0 * (-0.5 * u * u).exp();
            if n > 1 {
                psi[1] = 2f64.sqrt() * u * psi[0];
            }
            for k in 2..n {
                let kf = k as f64;
                psi[k] = (2.0 / kf).sqrt() * u * psi[k - 1] - ((kf - 1.0) / kf).sqrt() * psi[k - 2];
            }
            let mut acc = 0.0;
            for m in 0..n {
                for q in 0..n {
                    acc += psi[m] * r[(m, q)].re * psi[q];
                }
            }
            acc
        })
        .collect()
}
