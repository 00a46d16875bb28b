//! Dense real symmetric matrices.

use serde::Serialize;

/// Row-major dense square matrix whose construction keeps it exactly symmetric.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix from rows, rejecting anything that is not square or
    /// deviates from symmetry by more than `tol`.
    pub fn from_rows(rows: &[Vec<f64>], tol: f64) -> Option<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return None;
        }
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if (v - rows[j][i]).abs() > tol {
                    return None;
                }
                m.data[i * n + j] = v;
            }
        }
        // symmetrize exactly
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (m.data[i * n + j] + m.data[j * n + i]);
                m.data[i * n + j] = v;
                m.data[j * n + i] = v;
            }
        }
        Some(m)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn add_diagonal(&mut self, shift: f64) {
        for i in 0..self.n {
            self.data[i * self.n + i] += shift;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.n.max(1))
    }
}

/// Dense column-major storage for an orthogonal matrix of eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ColMatrix {
    n: usize,
    data: Vec<f64>,
}

impl ColMatrix {
    pub(crate) fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        ColMatrix { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Element in row `i` of column `j`.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.n + i]
    }

    #[inline]
    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.n..(j + 1) * self.n]
    }

    pub(crate) fn two_columns_mut(&mut self, p: usize, q: usize) -> (&mut [f64], &mut [f64]) {
        debug_assert!(p < q);
        let n = self.n;
        let (lo, hi) = self.data.split_at_mut(q * n);
        (&mut lo[p * n..(p + 1) * n], &mut hi[..n])
    }

    pub(crate) fn from_columns(n: usize, columns: Vec<Vec<f64>>) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for c in columns {
            data.extend_from_slice(&c);
        }
        ColMatrix { n, data }
    }
}
