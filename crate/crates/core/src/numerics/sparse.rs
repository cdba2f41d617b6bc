//! Row-compressed sparse matrix.

use crate::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix<T> {
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<T>,
}

impl<T: Scalar> SparseMatrix<T> {
    /// An empty matrix with no rows; rows are appended with [`push_row`](Self::push_row).
    pub fn new() -> Self {
        Self {
            row_ptr: vec![0],
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn with_capacity(rows: usize, nnz: usize) -> Self {
        let mut row_ptr = Vec::with_capacity(rows + 1);
        row_ptr.push(0);
        Self {
            row_ptr,
            cols: Vec::with_capacity(nnz),
            vals: Vec::with_capacity(nnz),
        }
    }

    /// Build from per-row `(column, value)` lists. Columns need not be sorted.
    pub fn from_rows(rows: Vec<Vec<(usize, T)>>) -> Self {
        let mut m = Self::new();
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            m.push_row(row.into_iter());
        }
        m
    }

    pub fn push_row(&mut self, entries: impl Iterator<Item = (usize, T)>) {
        for (c, v) in entries {
            self.cols.push(u32::try_from(c).expect("column index exceeds u32"));
            self.vals.push(v);
        }
        self.row_ptr.push(self.cols.len());
    }

    pub fn rows(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    #[inline]
    pub fn row(&self, i: usize) -> (&[u32], &[T]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.cols[a..b], &self.vals[a..b])
    }

    /// Offset range of row `i` in the entry arrays.
    #[inline]
    pub fn row_range(&self, i: usize) -> std::ops::Range<usize> {
        self.row_ptr[i]..self.row_ptr[i + 1]
    }

    #[inline]
    pub fn row_iter(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let (c, v) = self.row(i);
        c.iter().zip(v).map(|(&c, &v)| (c as usize, v))
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&(j as u32)) {
            Ok(k) => vals[k],
            Err(_) => T::zero(),
        }
    }

    pub fn values(&self) -> &[T] {
        &self.vals
    }

    /// Transpose with `n_cols` columns in the source (rows in the result).
    pub fn transpose(&self, n_cols: usize) -> Self {
        let mut counts = vec![0usize; n_cols + 1];
        for &c in &self.cols {
            counts[c as usize + 1] += 1;
        }
        for i in 0..n_cols {
            counts[i + 1] += counts[i];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut cols = vec![0u32; self.nnz()];
        let mut vals = vec![T::zero(); self.nnz()];
        for r in 0..self.rows() {
            for k in self.row_range(r) {
                let c = self.cols[k] as usize;
                let dst = next[c];
                cols[dst] = r as u32;
                vals[dst] = self.vals[k];
                next[c] += 1;
            }
        }
        Self { row_ptr, cols, vals }
    }

    /// Approximate heap footprint in bytes.
    pub fn memory_bytes(&self) -> usize {
        self.row_ptr.len() * std::mem::size_of::<usize>()
            + self.cols.len() * std::mem::size_of::<u32>()
            + self.vals.len() * std::mem::size_of::<T>()
    }
}

impl<T: Scalar> Default for SparseMatrix<T> {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transpose_round_trips() {
        let m = SparseMatrix::<f64>::from_rows(vec![vec![(2, 1.0), (0, 3.0)], vec![], vec![(1, 2.0)]]);
        assert_eq!(m.get(0, 2), 1.0);
        assert_eq!(m.get(1, 1), 0.0);
        let t = m.transpose(3);
        assert_eq!(t.get(2, 0), 1.0);
        assert_eq!(t.get(1, 2), 2.0);
        assert_eq!(t.transpose(3), m);
    }
}
