//! Small dense linear algebra helpers.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix { n, data: vec![0.0; n * n] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.n + c]
    }

    pub fn add(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.n + c] += v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.n..(r + 1) * self.n]
    }
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting. Zero
/// multipliers are skipped, which keeps sparse systems cheap.
pub fn solve(mut a: Matrix, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = a.n;
    debug_assert_eq!(b.len(), n);
    for k in 0..n {
        let pivot = (k..n)
            .max_by(|&i, &j| a.get(i, k).abs().total_cmp(&a.get(j, k).abs()))
            .ok_or(Error::Singular)?;
        if a.get(pivot, k) == 0.0 {
            return Err(Error::Singular);
        }
        if pivot != k {
            for c in 0..n {
                a.data.swap(k * n + c, pivot * n + c);
            }
            b.swap(k, pivot);
        }
        let (upper, lower) = a.data.split_at_mut((k + 1) * n);
        let pivot_row = &upper[k * n..];
        let inv = 1.0 / pivot_row[k];
        for (i, row) in lower.chunks_exact_mut(n).enumerate() {
            let factor = row[k] * inv;
            if factor == 0.0 {
                continue;
            }
            row[k] = 0.0;
            for c in k + 1..n {
                let p = pivot_row[c];
                if p != 0.0 {
                    row[c] -= factor * p;
                }
            }
            b[k + 1 + i] -= factor * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let row = a.row(k);
        let s: f64 = (k + 1..n).map(|c| row[c] * x[c]).sum();
        x[k] = (b[k] - s) / row[k];
    }
    Ok(x)
}

/// Stationary distribution `pi P = pi`, `sum(pi) = 1` of a row-stochastic
/// matrix. The last balance equation is replaced by the normalization.
pub fn stationary(p: &Matrix) -> Result<Vec<f64>> {
    let n = p.n;
    let mut a = Matrix::zeros(n);
    for r in 0..n {
        for c in 0..n {
            let v = p.get(r, c);
            if v != 0.0 {
                a.add(c, r, v);
            }
        }
    }
    for i in 0..n {
        a.add(i, i, -1.0);
    }
    for c in 0..n {
        a.data[(n - 1) * n + c] = 1.0;
    }
    let mut rhs = vec![0.0; n];
    rhs[n - 1] = 1.0;
    solve(a, rhs)
}
