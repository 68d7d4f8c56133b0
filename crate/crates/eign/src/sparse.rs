//! Compressed sparse row storage for complex matrices.
//!
//! Boundary operators and edge Laplacians are stored in CSR form with
//! `num_complex::Complex64` values. Column indices are sorted and unique
//! within each row, and entries with magnitude below [`ZERO_DROP_TOL`] are
//! dropped at assembly time.

use num_complex::Complex64;

use crate::{Error, Result};

/// Entries with magnitude below this are not stored.
pub const ZERO_DROP_TOL: f64 = 1e-15;

/// A complex matrix in compressed sparse row format.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseComplexMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<Complex64>,
}

impl SparseComplexMatrix {
    /// Build from (row, col, value) triplets. Duplicate coordinates are summed.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, Complex64)>,
    ) -> Self {
        let mut per_row: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); rows];
        for (r, c, v) in triplets {
            debug_assert!(r < rows && c < cols, "triplet out of bounds");
            per_row[r].push((c, v));
        }
        let mut row_ptr = Vec::with_capacity(rows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for entries in per_row.iter_mut() {
            entries.sort_by_key(|&(c, _)| c);
            let mut i = 0;
            while i < entries.len() {
                let c = entries[i].0;
                let mut sum = Complex64::new(0.0, 0.0);
                while i < entries.len() && entries[i].0 == c {
                    sum += entries[i].1;
                    i += 1;
                }
                if sum.norm() >= ZERO_DROP_TOL {
                    col_idx.push(c);
                    values.push(sum);
                }
            }
            row_ptr.push(col_idx.len());
        }
        SparseComplexMatrix {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        SparseComplexMatrix {
            rows,
            cols,
            row_ptr: vec![0; rows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, n, (0..n).map(|i| (i, i, Complex64::new(1.0, 0.0))))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Stored entries of one row, as (column, value) pairs sorted by column.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let lo = self.row_ptr[r];
        let hi = self.row_ptr[r + 1];
        self.col_idx[lo..hi]
            .iter()
            .zip(&self.values[lo..hi])
            .map(|(&c, &v)| (c, v))
    }

    /// All stored entries in (row, col) order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.rows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        let lo = self.row_ptr[r];
        let hi = self.row_ptr[r + 1];
        match self.col_idx[lo..hi].binary_search(&c) {
            Ok(k) => self.values[lo + k],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    /// Conjugate transpose.
    pub fn conj_transpose(&self) -> Self {
        Self::from_triplets(
            self.cols,
            self.rows,
            self.iter().map(|(r, c, v)| (c, r, v.conj())),
        )
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self::from_triplets(
            self.rows,
            self.cols,
            self.iter().map(|(r, c, v)| (r, c, v * factor)),
        )
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension(format!(
                "add: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Self::from_triplets(
            self.rows,
            self.cols,
            self.iter().chain(other.iter()),
        ))
    }

    /// Scale column `c` by `factor[c]` (right-multiplication by a diagonal).
    pub fn scale_columns(&self, factor: &[f64]) -> Result<Self> {
        if factor.len() != self.cols {
            return Err(Error::Dimension(format!(
                "scale_columns: got {} factors for {} columns",
                factor.len(),
                self.cols
            )));
        }
        Ok(Self::from_triplets(
            self.rows,
            self.cols,
            self.iter().map(|(r, c, v)| (r, c, v * factor[c])),
        ))
    }

    /// Dense product `self * x` where `x` is complex, row-major `self.cols x d`.
    pub fn apply_dense(&self, x: &[Complex64], d: usize) -> Result<Vec<Complex64>> {
        if x.len() != self.cols * d {
            return Err(Error::Dimension(format!(
                "apply_dense: x has {} entries, expected {}x{}",
                x.len(),
                self.cols,
                d
            )));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.rows * d];
        for r in 0..self.rows {
            for (c, v) in self.row(r) {
                let xrow = &x[c * d..(c + 1) * d];
                let orow = &mut out[r * d..(r + 1) * d];
                for k in 0..d {
                    orow[k] += v * xrow[k];
                }
            }
        }
        Ok(out)
    }

    /// Dense row-major copy.
    pub fn to_dense(&self) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.rows * self.cols];
        for (r, c, v) in self.iter() {
            out[r * self.cols + c] = v;
        }
        out
    }

    /// Split into real and imaginary CSR parts (both real-valued).
    pub fn split_real_imag(&self) -> (SparseRealMatrix, SparseRealMatrix) {
        let re = SparseRealMatrix::from_triplets(
            self.rows,
            self.cols,
            self.iter()
                .filter(|(_, _, v)| v.re != 0.0)
                .map(|(r, c, v)| (r, c, v.re)),
        );
        let im = SparseRealMatrix::from_triplets(
            self.rows,
            self.cols,
            self.iter()
                .filter(|(_, _, v)| v.im != 0.0)
                .map(|(r, c, v)| (r, c, v.im)),
        );
        (re, im)
    }

    /// Largest entry magnitude of `self - other`, treating missing entries as zero.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut worst: f64 = 0.0;
        for (r, c, v) in self.iter() {
            worst = worst.max((v - other.get(r, c)).norm());
        }
        for (r, c, v) in other.iter() {
            worst = worst.max((self.get(r, c) - v).norm());
        }
        worst
    }

    /// Largest deviation from being Hermitian.
    pub fn hermitian_deviation(&self) -> f64 {
        self.max_abs_diff(&self.conj_transpose())
    }

    /// Coordinate-format lines `row col re im`, sorted by (row, col).
    pub fn coordinate_lines(&self) -> Vec<String> {
        self.iter()
            .map(|(r, c, v)| format!("{} {} {:.17e} {:.17e}", r, c, v.re, v.im))
            .collect()
    }
}

/// A real matrix in CSR format, with its transpose precomputed so products
/// with both the matrix and its transpose are cheap.
#[derive(Debug, Clone)]
pub struct SparseRealMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    // transpose in CSR (row_ptr over `cols`)
    t_row_ptr: Vec<usize>,
    t_col_idx: Vec<usize>,
    t_values: Vec<f64>,
}

impl SparseRealMatrix {
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Self {
        let trips: Vec<(usize, usize, f64)> = triplets.into_iter().collect();
        let (row_ptr, col_idx, values) = Self::build_csr(rows, cols, trips.iter().copied());
        let (t_row_ptr, t_col_idx, t_values) =
            Self::build_csr(cols, rows, trips.iter().map(|&(r, c, v)| (c, r, v)));
        SparseRealMatrix {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
            t_row_ptr,
            t_col_idx,
            t_values,
        }
    }

    fn build_csr(
        rows: usize,
        cols: usize,
        triplets: impl Iterator<Item = (usize, usize, f64)>,
    ) -> (Vec<usize>, Vec<usize>, Vec<f64>) {
        let mut per_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); rows];
        for (r, c, v) in triplets {
            debug_assert!(r < rows && c < cols);
            per_row[r].push((c, v));
        }
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for entries in per_row.iter_mut() {
            entries.sort_by_key(|&(c, _)| c);
            let mut i = 0;
            while i < entries.len() {
                let c = entries[i].0;
                let mut sum = 0.0;
                while i < entries.len() && entries[i].0 == c {
                    sum += entries[i].1;
                    i += 1;
                }
                if sum.abs() >= ZERO_DROP_TOL {
                    col_idx.push(c);
                    values.push(sum);
                }
            }
            row_ptr.push(col_idx.len());
        }
        (row_ptr, col_idx, values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// `out = self * x` for row-major dense `x` (`cols x d`), written into `out` (`rows x d`).
    pub fn apply(&self, x: &[f64], d: usize, out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols * d);
        debug_assert_eq!(out.len(), self.rows * d);
        out.fill(0.0);
        for r in 0..self.rows {
            let orow = &mut out[r * d..(r + 1) * d];
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col_idx[k];
                let v = self.values[k];
                let xrow = &x[c * d..(c + 1) * d];
                for j in 0..d {
                    orow[j] += v * xrow[j];
                }
            }
        }
    }

    /// `out += self^T * x` for row-major dense `x` (`rows x d`), accumulated into `out` (`cols x d`).
    pub fn apply_transpose_add(&self, x: &[f64], d: usize, out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.rows * d);
        debug_assert_eq!(out.len(), self.cols * d);
        for r in 0..self.cols {
            let orow = &mut out[r * d..(r + 1) * d];
            for k in self.t_row_ptr[r]..self.t_row_ptr[r + 1] {
                let c = self.t_col_idx[k];
                let v = self.t_values[k];
                let xrow = &x[c * d..(c + 1) * d];
                for j in 0..d {
                    orow[j] += v * xrow[j];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn triplets_sum_and_drop_zeros() {
        let m = SparseComplexMatrix::from_triplets(
            2,
            2,
            vec![
                (0, 0, c(1.0, 0.0)),
                (0, 0, c(2.0, 0.0)),
                (1, 1, c(1.0, 0.0)),
                (1, 1, c(-1.0, 0.0)),
            ],
        );
        assert_eq!(m.get(0, 0), c(3.0, 0.0));
        assert_eq!(m.nnz(), 1);
    }

    #[test]
    fn conj_transpose_roundtrip() {
        let m = SparseComplexMatrix::from_triplets(
            2,
            3,
            vec![(0, 1, c(1.0, 2.0)), (1, 2, c(-1.0, 0.5))],
        );
        let t = m.conj_transpose();
        assert_eq!(t.rows(), 3);
        assert_eq!(t.get(1, 0), c(1.0, -2.0));
        assert_eq!(t.conj_transpose().max_abs_diff(&m), 0.0);
    }

    #[test]
    fn apply_dense_matches_hand_product() {
        let m = SparseComplexMatrix::from_triplets(
            2,
            2,
            vec![(0, 0, c(0.0, 1.0)), (0, 1, c(2.0, 0.0)), (1, 1, c(1.0, -1.0))],
        );
        let x = vec![c(1.0, 0.0), c(0.0, 1.0)];
        let y = m.apply_dense(&x, 1).unwrap();
        assert_eq!(y[0], c(0.0, 1.0) * c(1.0, 0.0) + c(2.0, 0.0) * c(0.0, 1.0));
        assert_eq!(y[1], c(1.0, -1.0) * c(0.0, 1.0));
    }

    #[test]
    fn real_apply_and_transpose() {
        // [[1, 0], [2, 3]]
        let m = SparseRealMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (1, 0, 2.0), (1, 1, 3.0)]);
        let x = vec![5.0, 7.0];
        let mut out = vec![0.0; 2];
        m.apply(&x, 1, &mut out);
        assert_eq!(out, vec![5.0, 31.0]);
        let mut tout = vec![0.0; 2];
        m.apply_transpose_add(&x, 1, &mut tout);
        assert_eq!(tout, vec![5.0 + 14.0, 21.0]);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let m = SparseComplexMatrix::identity(2);
        assert!(m.apply_dense(&[c(1.0, 0.0)], 1).is_err());
    }
}
