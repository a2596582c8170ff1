//! Dense eigensolvers: complex Schur decomposition for general matrices and
//! implicit QL for real symmetric tridiagonal matrices.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64 as C64;
#[allow(unused_imports)]
use num_traits::Float;
use num_traits::Zero;

use super::dense::CMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoConvergence {
    pub index: usize,
}

/// Complex Schur form `A = Z T Z^†` with `T` upper triangular.
#[derive(Clone, Debug)]
pub struct Schur {
    pub t: CMatrix,
    pub z: Option<CMatrix>,
}

impl Schur {
    pub fn eigenvalues(&self) -> Vec<C64> {
        self.t.diagonal()
    }

    /// Right eigenvectors as columns (unit 2-norm), ordered like `eigenvalues()`.
    /// Requires the Schur vectors.
    pub fn eigenvectors(&self) -> CMatrix {
        let z = self.z.as_ref().expect("eigenvectors need Schur vectors");
        let n = self.t.rows();
        let t = &self.t;
        let mut y = CMatrix::zeros(n, n);
        let smallnum = f64::MIN_POSITIVE * (n as f64) / f64::EPSILON;
        let tnorm = t.max_abs().max(smallnum);
        for k in 0..n {
            let lam = t[(k, k)];
            let mut x = vec![C64::zero(); k + 1];
            x[k] = C64::new(1.0, 0.0);
            for i in (0..k).rev() {
                let mut s = C64::zero();
                for j in i + 1..=k {
                    s += t[(i, j)] * x[j];
                }
                let mut d = t[(i, i)] - lam;
                if d.norm() < f64::EPSILON * tnorm {
                    d = C64::new(f64::EPSILON * tnorm, 0.0);
                }
                x[i] = -s / d;
                // rescale to avoid overflow on nearly defective spectra
                let big = x.iter().fold(0.0f64, |m, v| m.max(v.norm()));
                if big > 1e100 {
                    x.iter_mut().for_each(|v| *v /= big);
                }
            }
            let mut v = vec![C64::zero(); n];
            for (r, out) in v.iter_mut().enumerate() {
                let row = z.row(r);
                let mut s = C64::zero();
                for j in 0..=k {
                    s += row[j] * x[j];
                }
                *out = s;
            }
            let nrm = super::dense::norm2(&v);
            for (r, val) in v.iter().enumerate() {
                y[(r, k)] = *val / nrm;
            }
        }
        y
    }
}

/// Reduces `a` to upper Hessenberg form by Householder reflections.
/// Returns `(H, Q)` with `A = Q H Q^†` when `want_q`.
pub fn hessenberg(a: &CMatrix, want_q: bool) -> (CMatrix, Option<CMatrix>) {
    let n = a.rows();
    assert!(a.is_square());
    let mut h = a.clone();
    let mut q = if want_q { Some(CMatrix::identity(n)) } else { None };
    if n < 3 {
        return (h, q);
    }
    let mut v = vec![C64::zero(); n];
    for k in 0..n - 2 {
        // Householder vector annihilating h[k+2.., k]
        // the reflector is scale invariant; scaling keeps tiny columns from
        // underflowing in the squared norm
        let scale = (k + 1..n).fold(0.0f64, |m, i| m.max(h[(i, k)].norm()));
        if scale == 0.0 {
            continue;
        }
        let mut alpha_sq = 0.0;
        for i in k + 1..n {
            alpha_sq += (h[(i, k)] / scale).norm_sqr();
        }
        let alpha = alpha_sq.sqrt();
        let x0 = h[(k + 1, k)] / scale;
        let phase = if x0.norm() == 0.0 { C64::new(1.0, 0.0) } else { x0 / x0.norm() };
        // v = x + phase * alpha * e1
        for i in 0..n {
            v[i] = C64::zero();
        }
        v[k + 1] = x0 + phase * alpha;
        for i in k + 2..n {
            v[i] = h[(i, k)] / scale;
        }
        let vnorm_sq: f64 = v[k + 1..].iter().map(|z| z.norm_sqr()).sum();
        if vnorm_sq == 0.0 {
            continue;
        }
        let beta = 2.0 / vnorm_sq;
        // H <- (I - beta v v^†) H
        for j in 0..n {
            let mut s = C64::zero();
            for i in k + 1..n {
                s += v[i].conj() * h[(i, j)];
            }
            if s.is_zero() {
                continue;
            }
            s *= beta;
            for i in k + 1..n {
                let vi = v[i];
                h[(i, j)] -= vi * s;
            }
        }
        // H <- H (I - beta v v^†)
        for i in 0..n {
            let row = h.row_mut(i);
            let mut s = C64::zero();
            for j in k + 1..n {
                s += row[j] * v[j];
            }
            if s.is_zero() {
                continue;
            }
            s *= beta;
            for j in k + 1..n {
                row[j] -= s * v[j].conj();
            }
        }
        for i in k + 2..n {
            h[(i, k)] = C64::zero();
        }
        if let Some(q) = q.as_mut() {
            for i in 0..n {
                let row = q.row_mut(i);
                let mut s = C64::zero();
                for j in k + 1..n {
                    s += row[j] * v[j];
                }
                if s.is_zero() {
                    continue;
                }
                s *= beta;
                for j in k + 1..n {
                    row[j] -= s * v[j].conj();
                }
            }
        }
    }
    (h, q)
}

/// Complex Schur decomposition via Hessenberg reduction and single-shift QR.
pub fn schur(a: &CMatrix, want_vectors: bool) -> Result<Schur, NoConvergence> {
    let (mut h, mut z) = hessenberg(a, want_vectors);
    hessenberg_qr(&mut h, z.as_mut())?;
    Ok(Schur { t: h, z })
}

pub fn eigenvalues(a: &CMatrix) -> Result<Vec<C64>, NoConvergence> {
    Ok(schur(a, false)?.eigenvalues())
}

#[inline]
fn abs1(z: C64) -> f64 {
    z.re.abs() + z.im.abs()
}

/// Complex Givens rotation `[c s; -conj(s) c]` with real `c` mapping `(f, g)` to `(r, 0)`.
fn givens(f: C64, g: C64) -> (f64, C64, C64) {
    if g.is_zero() {
        return (1.0, C64::zero(), f);
    }
    if f.is_zero() {
        let gn = g.norm();
        return (0.0, g.conj() / gn, C64::new(gn, 0.0));
    }
    let fn_ = f.norm();
    let gn = g.norm();
    let d = (fn_ * fn_ + gn * gn).sqrt();
    let c = fn_ / d;
    let ph = f / fn_;
    let s = ph * g.conj() / d;
    let r = ph * d;
    (c, s, r)
}

/// In-place QR iteration on an upper Hessenberg matrix, accumulating into `z`.
/// On return `h` is upper triangular.
pub fn hessenberg_qr(h: &mut CMatrix, mut z: Option<&mut CMatrix>) -> Result<(), NoConvergence> {
    let n = h.rows();
    if n == 0 {
        return Ok(());
    }
    let ulp = f64::EPSILON;
    let smlnum = f64::MIN_POSITIVE * (n as f64 / ulp);
    let itmax = 60 * n.max(10);
    let mut ihi = n - 1;
    let mut its_since_deflation = 0usize;
    let mut total = 0usize;
    loop {
        if ihi == 0 {
            break;
        }
        // find small subdiagonal
        let mut l = ihi;
        while l > 0 {
            let sub = abs1(h[(l, l - 1)]);
            if sub <= smlnum {
                break;
            }
            let mut tst = abs1(h[(l - 1, l - 1)]) + abs1(h[(l, l)]);
            if tst == 0.0 {
                if l >= 2 {
                    tst += h[(l - 1, l - 2)].re.abs();
                }
                if l + 1 <= ihi {
                    tst += h[(l + 1, l)].re.abs();
                }
            }
            if sub <= ulp * tst {
                // Ahues & Tisseur conservative deflation test
                let ab = sub.max(abs1(h[(l - 1, l)]));
                let ba = sub.min(abs1(h[(l - 1, l)]));
                let aa = abs1(h[(l, l)]).max(abs1(h[(l - 1, l - 1)] - h[(l, l)]));
                let bb = abs1(h[(l, l)]).min(abs1(h[(l - 1, l - 1)] - h[(l, l)]));
                let s = aa + ab;
                if ba * (ab / s) <= smlnum.max(ulp * (bb * (aa / s))) {
                    break;
                }
            }
            l -= 1;
        }
        if l > 0 {
            h[(l, l - 1)] = C64::zero();
        }
        if l == ihi {
            // 1x1 block converged
            ihi -= 1;
            its_since_deflation = 0;
            if ihi == 0 {
                break;
            }
            continue;
        }
        total += 1;
        its_since_deflation += 1;
        if total > itmax {
            return Err(NoConvergence { index: ihi });
        }
        // shift
        let shift = if its_since_deflation % 10 == 0 {
            // exceptional shift
            C64::new(0.75 * h[(ihi, ihi - 1)].re.abs(), 0.0) + h[(ihi, ihi)]
        } else {
            wilkinson_shift(h[(ihi - 1, ihi - 1)], h[(ihi - 1, ihi)], h[(ihi, ihi - 1)], h[(ihi, ihi)])
        };
        // implicit single-shift QR sweep on rows/cols l..=ihi
        let mut x = h[(l, l)] - shift;
        let mut y = h[(l + 1, l)];
        for k in l..ihi {
            let (c, s, _r) = givens(x, y);
            // apply from the left to rows k, k+1 (columns from max(l, k-1) to n-1)
            let cstart = if k > l { k - 1 } else { l };
            for j in cstart..n {
                let a = h[(k, j)];
                let b = h[(k + 1, j)];
                h[(k, j)] = a * c + s * b;
                h[(k + 1, j)] = -s.conj() * a + b * c;
            }
            // apply from the right to columns k, k+1 (rows 0..=min(k+2, ihi))
            let rend = (k + 2).min(ihi);
            for i in 0..=rend {
                let a = h[(i, k)];
                let b = h[(i, k + 1)];
                h[(i, k)] = a * c + b * s.conj();
                h[(i, k + 1)] = -a * s + b * c;
            }
            if let Some(zm) = z.as_deref_mut() {
                for i in 0..n {
                    let a = zm[(i, k)];
                    let b = zm[(i, k + 1)];
                    zm[(i, k)] = a * c + b * s.conj();
                    zm[(i, k + 1)] = -a * s + b * c;
                }
            }
            if k + 1 < ihi {
                x = h[(k + 1, k)];
                y = h[(k + 2, k)];
            }
        }
        // clean bulge remnants below the subdiagonal
        for k in l..ihi.saturating_sub(1) {
            h[(k + 2, k)] = C64::zero();
        }
    }
    // zero strictly lower part for a clean triangular factor
    for i in 1..n {
        for j in 0..i {
            h[(i, j)] = C64::zero();
        }
    }
    Ok(())
}

/// Eigenvalue of the trailing 2x2 block closest to its last diagonal entry.
fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let tr_half = (a + d) * 0.5;
    let det = a * d - b * c;
    let disc = (tr_half * tr_half - det).sqrt();
    let l1 = tr_half + disc;
    let l2 = tr_half - disc;
    if (l1 - d).norm() < (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// Eigenvalues (ascending) of a Hermitian matrix. Only the lower triangle
/// matters; the Hessenberg form of a Hermitian matrix is tridiagonal and a
/// diagonal phase change makes it real.
pub fn hermitian_eigenvalues(a: &CMatrix) -> Result<Vec<f64>, NoConvergence> {
    let n = a.rows();
    let (h, _) = hessenberg(&a.hermitian_part(), false);
    // reversed: density matrices are graded large-to-small along the
    // diagonal, and QL wants the large end last
    let diag: Vec<f64> = (0..n).rev().map(|i| h[(i, i)].re).collect();
    let off: Vec<f64> = (1..n).rev().map(|i| h[(i, i - 1)].norm()).collect();
    Ok(symmetric_tridiagonal(&diag, &off)?.0)
}

/// Eigen-decomposition of a real symmetric tridiagonal matrix by implicit QL.
///
/// `diag` has length n, `off` has length n-1 (`off[i]` couples i and i+1).
/// Returns eigenvalues (ascending) and the orthogonal eigenvector matrix as
/// row-major `n x n` with eigenvectors in columns.
pub fn symmetric_tridiagonal(diag: &[f64], off: &[f64]) -> Result<(Vec<f64>, Vec<f64>), NoConvergence> {
    let n = diag.len();
    assert!(off.len() + 1 == n || n == 0);
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n.saturating_sub(1)].copy_from_slice(off);
    let mut z = vec![0.0; n * n];
    for i in 0..n {
        z[i * n + i] = 1.0;
    }
    let anorm = d.iter().chain(&e).fold(0.0f64, |m, x| m.max(x.abs()));
    let floor = f64::EPSILON * anorm;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                // the absolute floor handles clusters of (near) zero eigenvalues,
                // where the relative test alone never fires
                if e[m].abs() <= f64::EPSILON * dd || e[m].abs() <= floor {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(NoConvergence { index: l });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + if g >= 0.0 { r.abs() } else { -r.abs() });
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    let zk1 = z[k * n + i + 1];
                    let zk = z[k * n + i];
                    z[k * n + i + 1] = s * zk + c * zk1;
                    z[k * n + i] = c * zk - s * zk1;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    // sort ascending
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap_or(core::cmp::Ordering::Equal));
    let vals: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let mut vecs = vec![0.0; n * n];
    for (new_c, &old_c) in order.iter().enumerate() {
        for r in 0..n {
            vecs[r * n + new_c] = z[r * n + old_c];
        }
    }
    Ok((vals, vecs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((*seed >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
    }

    fn random(n: usize, seed: &mut u64) -> CMatrix {
        CMatrix::from_fn(n, n, |_, _| C64::new(lcg(seed), lcg(seed)))
    }

    #[test]
    fn hessenberg_is_similarity() {
        let mut seed = 3;
        let a = random(9, &mut seed);
        let (h, q) = hessenberg(&a, true);
        let q = q.unwrap();
        let back = q.matmul(&h).matmul(&q.adjoint());
        assert!(back.max_abs_diff(&a) < 1e-12);
        for i in 2..9 {
            for j in 0..i - 1 {
                assert_eq!(h[(i, j)], C64::zero());
            }
        }
    }

    #[test]
    fn schur_reconstructs_and_eigenpairs_hold() {
        let mut seed = 5;
        for n in [1usize, 2, 3, 8, 40] {
            let a = random(n, &mut seed);
            let s = schur(&a, true).unwrap();
            let z = s.z.as_ref().unwrap();
            let back = z.matmul(&s.t).matmul(&z.adjoint());
            assert!(back.max_abs_diff(&a) < 1e-11 * n as f64, "n={n}");
            let vals = s.eigenvalues();
            let vecs = s.eigenvectors();
            for k in 0..n {
                let v = vecs.column(k);
                let av = a.matvec(&v);
                let res: f64 = av.iter().zip(&v).map(|(x, y)| (x - vals[k] * y).norm()).fold(0.0, f64::max);
                assert!(res < 1e-10, "n={n} k={k} res={res}");
            }
        }
    }

    #[test]
    fn eigenvalues_of_triangular_and_rotation() {
        // Jordan-like block keeps its diagonal
        let mut a = CMatrix::zeros(3, 3);
        a[(0, 0)] = C64::new(1.0, 0.0);
        a[(1, 1)] = C64::new(2.0, 1.0);
        a[(2, 2)] = C64::new(-3.0, 0.0);
        a[(0, 1)] = C64::new(5.0, 0.0);
        let mut ev = eigenvalues(&a).unwrap();
        ev.sort_by(|x, y| x.re.partial_cmp(&y.re).unwrap());
        assert!((ev[0] - C64::new(-3.0, 0.0)).norm() < 1e-14);
        assert!((ev[2] - C64::new(2.0, 1.0)).norm() < 1e-14);
        // real rotation generator has eigenvalues +-i
        let r = CMatrix::from_row_major(2, 2, vec![C64::zero(), C64::new(-1.0, 0.0), C64::new(1.0, 0.0), C64::zero()]);
        let mut ev = eigenvalues(&r).unwrap();
        ev.sort_by(|x, y| x.im.partial_cmp(&y.im).unwrap());
        assert!((ev[0] - C64::new(0.0, -1.0)).norm() < 1e-14);
        assert!((ev[1] - C64::new(0.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn tridiagonal_eigen_matches_definition() {
        let n = 30;
        let diag: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let off: Vec<f64> = (1..n).map(|i| (i as f64).sqrt()).collect();
        let (vals, vecs) = symmetric_tridiagonal(&diag, &off).unwrap();
        for k in 0..n {
            for i in 0..n {
                let mut tv = diag[i] * vecs[i * n + k];
                if i > 0 {
                    tv += off[i - 1] * vecs[(i - 1) * n + k];
                }
                if i + 1 < n {
                    tv += off[i] * vecs[(i + 1) * n + k];
                }
                assert!((tv - vals[k] * vecs[i * n + k]).abs() < 1e-11);
            }
        }
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn hermitian_eigenvalues_match_general_solver() {
        let mut seed = 11;
        let n = 12;
        let a = CMatrix::from_fn(n, n, |_, _| C64::new(lcg(&mut seed), lcg(&mut seed))).hermitian_part();
        let got = hermitian_eigenvalues(&a).unwrap();
        let mut want: Vec<f64> = eigenvalues(&a).unwrap().iter().map(|z| z.re).collect();
        want.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-12);
        }
    }
}
