//! Minimal CSR matrix used to assemble the finite-difference operator.
//! Factorization is delegated to faer.

use faer::sparse::{SparseColMat, Triplet};

#[derive(Debug, Clone)]
pub(crate) struct Csr {
    pub nrows: usize,
    pub ncols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl Csr {
    /// Duplicate entries are summed; explicit zeros are dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, mut trip: Vec<(usize, usize, f64)>) -> Self {
        trip.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(trip.len());
        let mut values: Vec<f64> = Vec::with_capacity(trip.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in trip {
            debug_assert!(r < nrows && c < ncols);
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        Csr {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
        .pruned()
    }

    fn pruned(self) -> Self {
        let mut trip_count = 0;
        let mut indptr = vec![0usize; self.nrows + 1];
        let mut indices = Vec::with_capacity(self.indices.len());
        let mut values = Vec::with_capacity(self.values.len());
        for r in 0..self.nrows {
            for k in self.indptr[r]..self.indptr[r + 1] {
                if self.values[k] != 0.0 {
                    indices.push(self.indices[k]);
                    values.push(self.values[k]);
                    trip_count += 1;
                }
            }
            indptr[r + 1] = trip_count;
        }
        Csr {
            nrows: self.nrows,
            ncols: self.ncols,
            indptr,
            indices,
            values,
        }
    }

    pub fn identity(n: usize, scale: f64) -> Self {
        Self::diag(&vec![scale; n])
    }

    pub fn diag(d: &[f64]) -> Self {
        let n = d.len();
        Self::from_triplets(n, n, d.iter().enumerate().map(|(i, &v)| (i, i, v)).collect())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows)
            .flat_map(move |r| (self.indptr[r]..self.indptr[r + 1]).map(move |k| (r, self.indices[k], self.values[k])))
    }

    /// Largest absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.nrows)
            .map(|r| {
                self.values[self.indptr[r]..self.indptr[r + 1]]
                    .iter()
                    .map(|v| v.abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn scaled(mut self, s: f64) -> Self {
        self.values.iter_mut().for_each(|v| *v *= s);
        self
    }

    /// `self + other`.
    pub fn add(&self, other: &Csr) -> Csr {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let trip: Vec<_> = self.triplets().chain(other.triplets()).collect();
        Csr::from_triplets(self.nrows, self.ncols, trip)
    }

    /// Sparse product with a dense row accumulator.
    pub fn matmul(&self, other: &Csr) -> Csr {
        assert_eq!(self.ncols, other.nrows);
        let mut acc = vec![0.0f64; other.ncols];
        let mut mark = vec![usize::MAX; other.ncols];
        let mut cols: Vec<usize> = Vec::new();
        let mut indptr = vec![0usize; self.nrows + 1];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for r in 0..self.nrows {
            cols.clear();
            for k in self.indptr[r]..self.indptr[r + 1] {
                let a = self.values[k];
                let mid = self.indices[k];
                for kk in other.indptr[mid]..other.indptr[mid + 1] {
                    let c = other.indices[kk];
                    if mark[c] != r {
                        mark[c] = r;
                        acc[c] = 0.0;
                        cols.push(c);
                    }
                    acc[c] += a * other.values[kk];
                }
            }
            cols.sort_unstable();
            for &c in &cols {
                if acc[c] != 0.0 {
                    indices.push(c);
                    values.push(acc[c]);
                }
            }
            indptr[r + 1] = indices.len();
        }
        Csr {
            nrows: self.nrows,
            ncols: other.ncols,
            indptr,
            indices,
            values,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|r| {
                (self.indptr[r]..self.indptr[r + 1])
                    .map(|k| self.values[k] * x[self.indices[k]])
                    .sum()
            })
            .collect()
    }

    /// Assemble a 2x2 block matrix `[[a, b], [c, d]]`.
    pub fn block2(a: &Csr, b: &Csr, c: &Csr, d: &Csr) -> Csr {
        let (n, m) = (a.nrows, a.ncols);
        let mut trip = Vec::with_capacity(a.nnz() + b.nnz() + c.nnz() + d.nnz());
        trip.extend(a.triplets());
        trip.extend(b.triplets().map(|(r, cc, v)| (r, cc + m, v)));
        trip.extend(c.triplets().map(|(r, cc, v)| (r + n, cc, v)));
        trip.extend(d.triplets().map(|(r, cc, v)| (r + n, cc + m, v)));
        Csr::from_triplets(2 * n, 2 * m, trip)
    }

    pub fn to_faer_shifted(&self, shift: f64) -> Result<SparseColMat<usize, f64>, String> {
        let mut trip: Vec<Triplet<usize, usize, f64>> =
            self.triplets().map(|(r, c, v)| Triplet::new(r, c, v)).collect();
        if shift != 0.0 {
            trip.extend((0..self.nrows.min(self.ncols)).map(|i| Triplet::new(i, i, -shift)));
        }
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &trip).map_err(|e| format!("{e:?}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(m: &Csr) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; m.ncols]; m.nrows];
        for (r, c, v) in m.triplets() {
            d[r][c] += v;
        }
        d
    }

    #[test]
    fn matmul_matches_dense() {
        let a = Csr::from_triplets(2, 3, vec![(0, 0, 1.0), (0, 2, 2.0), (1, 1, 3.0), (0, 0, 1.0)]);
        let b = Csr::from_triplets(3, 2, vec![(0, 1, 1.0), (1, 0, -1.0), (2, 0, 4.0)]);
        let p = dense(&a.matmul(&b));
        assert_eq!(p, vec![vec![8.0, 2.0], vec![-3.0, 0.0]]);
    }

    #[test]
    fn block_and_add() {
        let i = Csr::identity(2, 1.0);
        let z = Csr::from_triplets(2, 2, vec![]);
        let b = Csr::block2(&i, &z, &z, &i.clone().scaled(2.0));
        assert_eq!(b.mul_vec(&[1.0, 2.0, 3.0, 4.0]), vec![1.0, 2.0, 6.0, 8.0]);
        let s = b.add(&Csr::identity(4, -1.0));
        assert_eq!(s.nnz(), 2);
    }
}
