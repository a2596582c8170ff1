//! Compressed sparse row storage for superoperators.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64 as C64;
use num_traits::Zero;

use super::dense::CMatrix;

#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<C64>,
}

impl SparseMatrix {
    /// Builds a CSR matrix, summing duplicate coordinates and dropping exact zeros.
    pub fn from_triplets(rows: usize, cols: usize, mut triplets: Vec<(usize, usize, C64)>) -> Self {
        triplets.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; rows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        let mut row_of = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            assert!(r < rows && c < cols, "triplet out of bounds");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_of.push(r);
                last = Some((r, c));
            }
        }
        // Drop entries that cancelled exactly.
        let mut keep_c = Vec::with_capacity(col_idx.len());
        let mut keep_v = Vec::with_capacity(values.len());
        for ((r, c), v) in row_of.into_iter().zip(col_idx).zip(values) {
            if !v.is_zero() {
                row_ptr[r + 1] += 1;
                keep_c.push(c);
                keep_v.push(v);
            }
        }
        for r in 0..rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self { rows, cols, row_ptr, col_idx: keep_c, values: keep_v }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterates `(col, value)` over row `r`.
    pub fn row_entries(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    /// Iterates every stored entry as `(row, col, value)`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.rows).flat_map(move |r| self.row_entries(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.row_entries(r).find(|(cc, _)| *cc == c).map(|(_, v)| v).unwrap_or_else(C64::zero)
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::zero(); self.rows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(y.len(), self.rows);
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = C64::zero();
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *out = acc;
        }
    }

    /// `y = x^T A` for a row vector `x`.
    pub fn vecmat(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.rows);
        let mut y = vec![C64::zero(); self.cols];
        for (r, xr) in x.iter().enumerate() {
            if xr.is_zero() {
                continue;
            }
            for (c, v) in self.row_entries(r) {
                y[c] += xr * v;
            }
        }
        y
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.rows, self.cols);
        for (r, c, v) in self.entries() {
            m[(r, c)] = v;
        }
        m
    }

    /// `(lower, upper)` bandwidths of the stored pattern.
    pub fn bandwidths(&self) -> (usize, usize) {
        let mut kl = 0;
        let mut ku = 0;
        for (r, c, _) in self.entries() {
            if r > c {
                kl = kl.max(r - c);
            } else {
                ku = ku.max(c - r);
            }
        }
        (kl, ku)
    }

    /// Restricts to the rows/columns listed in `keep` (in that order).
    pub fn principal_submatrix(&self, keep: &[usize]) -> Self {
        let mut new_index = vec![usize::MAX; self.cols.max(self.rows)];
        for (k, &i) in keep.iter().enumerate() {
            new_index[i] = k;
        }
        let mut trip = Vec::new();
        for (k, &r) in keep.iter().enumerate() {
            for (c, v) in self.row_entries(r) {
                let nc = new_index[c];
                if nc != usize::MAX {
                    trip.push((k, nc, v));
                }
            }
        }
        Self::from_triplets(keep.len(), keep.len(), trip)
    }

    /// Returns `A + s I`.
    pub fn shifted(&self, s: C64) -> Self {
        let mut trip: Vec<_> = self.entries().collect();
        for i in 0..self.rows.min(self.cols) {
            trip.push((i, i, s));
        }
        Self::from_triplets(self.rows, self.cols, trip)
    }

    /// Returns `A + B`.
    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let trip = self.entries().chain(other.entries()).collect();
        Self::from_triplets(self.rows, self.cols, trip)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, z| m.max(z.norm()))
    }
}
