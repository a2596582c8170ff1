//! Banded LU factorization with partial pivoting, optionally bordered by one
//! dense final row.
//!
//! The layout follows LAPACK `gbtrf`: column-major band storage with `kl`
//! extra rows reserved for pivoting fill, so `A[i, j]` lives at
//! `ab[(kv + i - j) + j * ldab]` with `kv = kl + ku`.
//!
//! The bordered variant replaces the last equation by a dense row. That row is
//! never used as a pivot before the final column, which keeps the band intact.
//! It is how normalization constraints (`Tr rho = 1`) are imposed on a
//! singular generator.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64 as C64;
use num_traits::Zero;

use super::sparse::SparseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SingularPivot {
    pub column: usize,
}

#[derive(Clone, Debug)]
pub struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    ab: Vec<C64>,
    ipiv: Vec<usize>,
    /// Multipliers that eliminated the dense border row, and its final pivot.
    border: Option<(Vec<C64>, C64)>,
    min_pivot: f64,
}

impl BandLu {
    /// Factors a square sparse matrix as a band matrix.
    pub fn factor(a: &SparseMatrix) -> Result<Self, SingularPivot> {
        Self::factor_impl(a, None)
    }

    /// Factors `a` with its last row replaced by `border`.
    pub fn factor_bordered(a: &SparseMatrix, border: &[C64]) -> Result<Self, SingularPivot> {
        assert_eq!(border.len(), a.cols());
        Self::factor_impl(a, Some(border))
    }

    fn factor_impl(a: &SparseMatrix, border: Option<&[C64]>) -> Result<Self, SingularPivot> {
        let n = a.rows();
        assert_eq!(n, a.cols(), "band LU needs a square matrix");
        assert!(n > 0);
        let last = n - 1;
        let (mut kl, mut ku) = (0usize, 0usize);
        for (r, c, _) in a.entries() {
            if border.is_some() && r == last {
                continue;
            }
            if r > c {
                kl = kl.max(r - c);
            } else {
                ku = ku.max(c - r);
            }
        }
        let kv = kl + ku;
        let ldab = 2 * kl + ku + 1;
        let mut ab = vec![C64::zero(); ldab * n];
        for (r, c, v) in a.entries() {
            if border.is_some() && r == last {
                continue;
            }
            ab[kv + r - c + c * ldab] = v;
        }
        let mut dense: Option<Vec<C64>> = border.map(|b| b.to_vec());
        let mut border_mult = vec![C64::zero(); if border.is_some() { n } else { 0 }];

        let mut ipiv = vec![0usize; n];
        let mut ju = 0usize;
        let mut min_pivot = f64::INFINITY;
        let ncols = if border.is_some() { n - 1 } else { n };
        for j in 0..ncols {
            let km = kl.min(n - 1 - j);
            let col = j * ldab;
            let mut jp = 0;
            let mut best = ab[col + kv].norm();
            for r in 1..=km {
                let v = ab[col + kv + r].norm();
                if v > best {
                    best = v;
                    jp = r;
                }
            }
            ipiv[j] = j + jp;
            if best == 0.0 {
                return Err(SingularPivot { column: j });
            }
            min_pivot = min_pivot.min(best);
            ju = ju.max((j + ku + jp).min(n - 1));
            if jp != 0 {
                for c in j..=ju {
                    let base = c * ldab + kv;
                    ab.swap(base + j + jp - c, base + j - c);
                }
            }
            let pivot = ab[col + kv];
            let inv = C64::new(1.0, 0.0) / pivot;
            for r in 1..=km {
                ab[col + kv + r] *= inv;
            }
            if ju > j {
                for c in j + 1..=ju {
                    let base = c * ldab + kv;
                    let u = ab[base + j - c];
                    if u.is_zero() {
                        continue;
                    }
                    if km > 0 {
                        // column c > j, so the multipliers sit strictly before it
                        let (lo, hi) = ab.split_at_mut(c * ldab);
                        let lcol = &lo[col + kv + 1..col + kv + 1 + km];
                        let ccol = &mut hi[kv + j + 1 - c..kv + j + 1 - c + km];
                        for (dst, l) in ccol.iter_mut().zip(lcol) {
                            *dst -= l * u;
                        }
                    }
                }
            }
            if let Some(d) = dense.as_mut() {
                let dj = d[j];
                if !dj.is_zero() {
                    let l = dj * inv;
                    border_mult[j] = l;
                    d[j] = C64::zero();
                    for c in j + 1..=ju {
                        let u = ab[c * ldab + kv + j - c];
                        d[c] -= l * u;
                    }
                }
            }
        }
        let border = match dense {
            Some(d) => {
                let p = d[last];
                if p.norm() == 0.0 {
                    return Err(SingularPivot { column: last });
                }
                min_pivot = min_pivot.min(p.norm());
                ipiv[last] = last;
                Some((border_mult, p))
            }
            None => None,
        };
        Ok(Self { n, kl, ku, ldab, ab, ipiv, border, min_pivot })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    /// Smallest pivot modulus encountered; a cheap conditioning hint.
    pub fn min_pivot(&self) -> f64 {
        self.min_pivot
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [C64]) {
        let n = self.n;
        assert_eq!(x.len(), n);
        let kl = self.kl;
        let kv = self.kl + self.ku;
        let ldab = self.ldab;
        let ncols = if self.border.is_some() { n - 1 } else { n };
        // Forward: L^{-1} P b
        for j in 0..ncols.min(n - 1) {
            let km = kl.min(n - 1 - j);
            let l = self.ipiv[j];
            if l != j {
                x.swap(l, j);
            }
            let xj = x[j];
            if xj.is_zero() {
                continue;
            }
            let col = j * ldab + kv;
            for r in 1..=km {
                x[j + r] -= self.ab[col + r] * xj;
            }
        }
        if let Some((mult, _)) = &self.border {
            let mut acc = C64::zero();
            for j in 0..n - 1 {
                acc += mult[j] * x[j];
            }
            x[n - 1] -= acc;
        }
        // Backward: U^{-1}
        let start = if let Some((_, p)) = &self.border {
            x[n - 1] /= p;
            n - 1
        } else {
            n
        };
        for j in (0..start).rev() {
            let mut s = x[j];
            let cmax = (j + kv).min(n - 1);
            for c in j + 1..=cmax {
                let u = self.ab[c * ldab + kv + j - c];
                s -= u * x[c];
            }
            x[j] = s / self.ab[j * ldab + kv];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dense::{solve_dense, CMatrix};

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((*seed >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
    }

    fn random_band(n: usize, kl: usize, ku: usize, seed: &mut u64) -> SparseMatrix {
        let mut trip = Vec::new();
        for i in 0..n {
            for j in i.saturating_sub(kl)..(i + ku + 1).min(n) {
                // weak diagonal forces real pivoting
                let v = C64::new(lcg(seed), lcg(seed));
                trip.push((i, j, v));
            }
        }
        SparseMatrix::from_triplets(n, n, trip)
    }

    #[test]
    fn band_solve_matches_dense() {
        let mut seed = 7;
        for &(n, kl, ku) in &[(1, 0, 0), (5, 1, 2), (30, 4, 3), (40, 7, 0), (25, 0, 5)] {
            let a = random_band(n, kl, ku, &mut seed);
            let b: Vec<C64> = (0..n).map(|_| C64::new(lcg(&mut seed), lcg(&mut seed))).collect();
            let lu = BandLu::factor(&a).unwrap();
            let x = lu.solve(&b);
            let r = a.matvec(&x);
            let xmax = x.iter().fold(1.0f64, |m, z| m.max(z.norm()));
            for (u, v) in r.iter().zip(&b) {
                assert!((u - v).norm() < 1e-12 * xmax, "n={n} kl={kl} ku={ku}: {}", (u - v).norm());
            }
        }
    }

    #[test]
    fn bordered_solve_matches_dense() {
        let mut seed = 11;
        for &(n, kl, ku) in &[(2, 1, 1), (12, 2, 3), (50, 6, 6)] {
            let a = random_band(n, kl, ku, &mut seed);
            let border: Vec<C64> = (0..n).map(|i| C64::new(1.0 + lcg(&mut seed), if i % 3 == 0 { 0.3 } else { 0.0 })).collect();
            let mut dense = a.to_dense();
            for (c, v) in border.iter().enumerate() {
                dense[(n - 1, c)] = *v;
            }
            let b: Vec<C64> = (0..n).map(|_| C64::new(lcg(&mut seed), lcg(&mut seed))).collect();
            let expect = solve_dense(&dense, &b).unwrap();
            let lu = BandLu::factor_bordered(&a, &border).unwrap();
            let got = lu.solve(&b);
            for (u, v) in got.iter().zip(&expect) {
                assert!((u - v).norm() < 1e-9 * (1.0 + v.norm()), "n={n}: {u} vs {v}");
            }
        }
    }

    #[test]
    fn zero_matrix_reports_singular_pivot() {
        let a = SparseMatrix::from_triplets(3, 3, vec![(0, 0, C64::new(1.0, 0.0))]);
        assert_eq!(BandLu::factor(&a).unwrap_err(), SingularPivot { column: 1 });
        let _ = CMatrix::zeros(1, 1);
    }
}
