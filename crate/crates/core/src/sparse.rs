//! Minimal compressed-sparse-row storage for complex superoperators.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::operators::{C64, ZERO};

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
}

impl CsrMatrix {
    /// Entries with modulus `<= drop_tol` are discarded.
    pub fn from_dense(m: &DMatrix<C64>, drop_tol: f64) -> Self {
        let (nrows, ncols) = m.shape();
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for i in 0..nrows {
            for j in 0..ncols {
                let z = m[(i, j)];
                if z.norm() > drop_tol {
                    indices.push(j);
                    values.push(z);
                }
            }
            indptr.push(indices.len());
        }
        CsrMatrix { nrows, ncols, indptr, indices, values }
    }

    /// Duplicate entries are summed; exact zeros are dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, entries: impl IntoIterator<Item = (usize, usize, C64)>) -> Self {
        let mut map: HashMap<(usize, usize), C64> = HashMap::new();
        for (i, j, z) in entries {
            assert!(i < nrows && j < ncols, "triplet out of range");
            *map.entry((i, j)).or_insert(ZERO) += z;
        }
        let mut entries: Vec<_> = map.into_iter().filter(|(_, z)| *z != ZERO).collect();
        entries.sort_unstable_by_key(|(k, _)| *k);
        let mut indptr = vec![0; nrows + 1];
        for ((i, _), _) in &entries {
            indptr[i + 1] += 1;
        }
        for i in 0..nrows {
            indptr[i + 1] += indptr[i];
        }
        let indices = entries.iter().map(|((_, j), _)| *j).collect();
        let values = entries.iter().map(|(_, z)| *z).collect();
        CsrMatrix { nrows, ncols, indptr, indices, values }
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }

    /// Position of entry `(i, j)` in the value array, if stored.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let row = &self.indices[self.indptr[i]..self.indptr[i + 1]];
        row.binary_search(&j).ok().map(|k| self.indptr[i] + k)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `y += alpha * A x`.
    pub fn mul_add(&self, alpha: C64, x: &[C64], y: &mut [C64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = ZERO;
            for k in self.indptr[i]..self.indptr[i + 1] {
                acc += self.values[k] * x[self.indices[k]];
            }
            *yi += alpha * acc;
        }
    }

    /// `Y += alpha * A X` for `X`, `Y` holding `cols` contiguous columns.
    pub fn mul_add_columns(&self, alpha: C64, x: &[C64], y: &mut [C64]) {
        let (n, m) = (self.nrows, self.ncols);
        debug_assert_eq!(x.len() % m, 0);
        for (xc, yc) in x.chunks_exact(m).zip(y.chunks_exact_mut(n)) {
            self.mul_add(alpha, xc, yc);
        }
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for k in self.indptr[i]..self.indptr[i + 1] {
                m[(i, self.indices[k])] = self.values[k];
            }
        }
        m
    }
}

/// Nonzero entries of a dense matrix.
pub fn nonzeros(m: &DMatrix<C64>) -> Vec<(usize, usize, C64)> {
    let mut out = Vec::new();
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            if m[(i, j)] != ZERO {
                out.push((i, j, m[(i, j)]));
            }
        }
    }
    out
}

/// Entries of `coef · (A ⊗ B)` from the nonzero lists of `A` and `B`
/// (`B` is `nb × nb`).
pub fn kron_entries<'a>(
    coef: C64,
    a: &'a [(usize, usize, C64)],
    b: &[(usize, usize, C64)],
    nb: usize,
) -> impl Iterator<Item = (usize, usize, C64)> + 'a {
    let b = b.to_vec();
    a.iter().flat_map(move |&(ia, ja, za)| {
        b.clone()
            .into_iter()
            .map(move |(ib, jb, zb)| (ia * nb + ib, ja * nb + jb, coef * za * zb))
    })
}
