use nalgebra::DMatrix;

use crate::{Error, Result};

/// Compressed sparse row matrix. Column indices are strictly increasing
/// within each row.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
}

impl CsrMatrix {
    pub fn new(nrows: usize, ncols: usize, indptr: Vec<usize>, indices: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if indptr.len() != nrows + 1 || indptr[0] != 0 || *indptr.last().unwrap() != indices.len() {
            return Err(Error::InvalidMesh("inconsistent CSR row offsets".into()));
        }
        if indices.len() != data.len() {
            return Err(Error::DimensionMismatch { expected: indices.len(), got: data.len() });
        }
        for i in 0..nrows {
            let row = &indices[indptr[i]..indptr[i + 1]];
            if row.windows(2).any(|w| w[0] >= w[1]) || row.iter().any(|&j| j >= ncols) {
                return Err(Error::InvalidMesh(format!("CSR row {i} has unsorted or out-of-range columns")));
            }
        }
        Ok(Self { nrows, ncols, indptr, indices, data })
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, indptr: vec![0; nrows + 1], indices: vec![], data: vec![] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let n = d.len();
        Self { nrows: n, ncols: n, indptr: (0..=n).collect(), indices: (0..n).collect(), data: d.to_vec() }
    }

    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_unstable_by_key(|t| (t.0, t.1));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut data: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            assert!(i < nrows && j < ncols, "triplet ({i}, {j}) outside {nrows}x{ncols}");
            if last == Some((i, j)) {
                *data.last_mut().unwrap() += v;
            } else {
                indices.push(j);
                data.push(v);
                indptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..nrows {
            indptr[i + 1] += indptr[i];
        }
        Self { nrows, ncols, indptr, indices, data }
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let mut t = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)] != 0.0 {
                    t.push((i, j, m[(i, j)]));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), t)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[r.clone()], &self.data[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map(|k| vals[k]).unwrap_or(0.0)
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            let (c, v) = self.row(i);
            c.iter().zip(v).map(move |(&j, &x)| (i, j, x))
        })
    }

    /// `y = A x`.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.ncols {
            return Err(Error::DimensionMismatch { expected: self.ncols, got: x.len() });
        }
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_into(x, &mut y);
        Ok(y)
    }

    /// `y = A x` without allocation. Panics on dimension mismatch.
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.indptr[i]..self.indptr[i + 1] {
                s += self.data[k] * x[self.indices[k]];
            }
            *yi = s;
        }
    }

    /// `y += alpha A x`.
    pub fn mul_vec_add(&self, alpha: f64, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.indptr[i]..self.indptr[i + 1] {
                s += self.data[k] * x[self.indices[k]];
            }
            *yi += alpha * s;
        }
    }

    pub fn transpose(&self) -> Self {
        let mut count = vec![0usize; self.ncols + 1];
        for &j in &self.indices {
            count[j + 1] += 1;
        }
        for j in 0..self.ncols {
            count[j + 1] += count[j];
        }
        let indptr = count.clone();
        let mut next = count;
        let mut indices = vec![0; self.nnz()];
        let mut data = vec![0.0; self.nnz()];
        for i in 0..self.nrows {
            for k in self.indptr[i]..self.indptr[i + 1] {
                let j = self.indices[k];
                let p = next[j];
                indices[p] = i;
                data[p] = self.data[k];
                next[j] += 1;
            }
        }
        Self { nrows: self.ncols, ncols: self.nrows, indptr, indices, data }
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut m = self.clone();
        m.data.iter_mut().for_each(|v| *v *= alpha);
        m
    }

    /// `self + alpha * other`.
    pub fn add(&self, alpha: f64, other: &CsrMatrix) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch { expected: self.nrows, got: other.nrows });
        }
        let t = self.triplets().chain(other.triplets().map(|(i, j, v)| (i, j, alpha * v))).collect();
        Ok(Self::from_triplets(self.nrows, self.ncols, t))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    /// Keeps the rows listed in `rows` (in that order) and the columns with
    /// `col_map[j] = Some(new_j)`.
    pub fn select(&self, rows: &[usize], col_map: &[Option<usize>], ncols: usize) -> Self {
        assert_eq!(col_map.len(), self.ncols);
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        indptr.push(0);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        for &i in rows {
            let (c, v) = self.row(i);
            let mut entries: Vec<(usize, f64)> =
                c.iter().zip(v).filter_map(|(&j, &x)| col_map[j].map(|nj| (nj, x))).collect();
            entries.sort_unstable_by_key(|e| e.0);
            for (j, x) in entries {
                indices.push(j);
                data.push(x);
            }
            indptr.push(indices.len());
        }
        Self { nrows: rows.len(), ncols, indptr, indices, data }
    }

    /// Assembles a block matrix; `None` blocks are zero. Every block row
    /// needs at least one block to fix its height, likewise for columns.
    pub fn from_blocks(blocks: &[Vec<Option<&CsrMatrix>>]) -> Result<Self> {
        let nbr = blocks.len();
        let nbc = blocks.first().map_or(0, |r| r.len());
        let mut heights = vec![None; nbr];
        let mut widths = vec![None; nbc];
        for (bi, row) in blocks.iter().enumerate() {
            if row.len() != nbc {
                return Err(Error::DimensionMismatch { expected: nbc, got: row.len() });
            }
            for (bj, b) in row.iter().enumerate() {
                if let Some(b) = b {
                    for (slot, v) in [(&mut heights[bi], b.nrows), (&mut widths[bj], b.ncols)] {
                        match slot {
                            None => *slot = Some(v),
                            Some(w) if *w != v => return Err(Error::DimensionMismatch { expected: *w, got: v }),
                            _ => {}
                        }
                    }
                }
            }
        }
        let heights: Vec<usize> = heights.into_iter().map(|h| h.unwrap_or(0)).collect();
        let widths: Vec<usize> = widths.into_iter().map(|w| w.unwrap_or(0)).collect();
        let row_off: Vec<usize> = std::iter::once(0).chain(heights.iter().scan(0, |s, h| { *s += h; Some(*s) })).collect();
        let col_off: Vec<usize> = std::iter::once(0).chain(widths.iter().scan(0, |s, w| { *s += w; Some(*s) })).collect();
        let mut t = Vec::new();
        for (bi, row) in blocks.iter().enumerate() {
            for (bj, b) in row.iter().enumerate() {
                if let Some(b) = b {
                    t.extend(b.triplets().map(|(i, j, v)| (i + row_off[bi], j + col_off[bj], v)));
                }
            }
        }
        Ok(Self::from_triplets(row_off[nbr], col_off[nbc], t))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            m[(i, j)] = v;
        }
        m
    }

    /// Largest `|a_ij - a_ji|` relative to the largest entry.
    pub fn asymmetry(&self) -> f64 {
        let t = self.transpose();
        let scale = self.data.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let diff = self.add(-1.0, &t).expect("square");
        diff.data.iter().fold(0.0f64, |m, v| m.max(v.abs())) / scale
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_times_vector() {
        let x = vec![1.0, -2.0, 3.5];
        assert_eq!(CsrMatrix::identity(3).spmv(&x).unwrap(), x);
    }

    #[test]
    fn diagonal_product() {
        let a = CsrMatrix::from_diagonal(&[2.0, 3.0]);
        assert_eq!(a.spmv(&[1.0, 1.0]).unwrap(), vec![2.0, 3.0]);
    }

    #[test]
    fn spmv_rejects_mismatch() {
        let a = CsrMatrix::identity(3);
        assert!(matches!(a.spmv(&[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn triplets_sum_duplicates() {
        let a = CsrMatrix::from_triplets(2, 2, vec![(0, 1, 1.0), (0, 1, 2.0), (1, 0, 4.0)]);
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.get(0, 1), 3.0);
        assert_eq!(a.transpose().get(1, 0), 3.0);
    }

    #[test]
    fn validation_rejects_unsorted_rows() {
        assert!(CsrMatrix::new(1, 3, vec![0, 2], vec![2, 1], vec![1.0, 1.0]).is_err());
    }

    #[test]
    fn block_assembly() {
        let i2 = CsrMatrix::identity(2);
        let r = CsrMatrix::from_triplets(1, 2, vec![(0, 0, 5.0)]);
        let rt = r.transpose();
        let b = CsrMatrix::from_blocks(&[vec![Some(&i2), Some(&rt)], vec![Some(&r), None]]).unwrap();
        assert_eq!(b.shape(), (3, 3));
        assert_eq!(b.get(2, 0), 5.0);
        assert_eq!(b.get(0, 2), 5.0);
        assert_eq!(b.get(2, 2), 0.0);
    }
}
