//! Small dense linear algebra: square matrices, Gaussian elimination and
//! random orthogonal matrices.

use alloc::vec;
use alloc::vec::Vec;

use crate::rng::RandomStream;
use crate::{Error, Result};

/// Row-major square matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self {
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

    pub fn from_rows(n: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * n, "matrix data length");
        Self { n, data }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    /// Solves `self * x = b` by Gaussian elimination with partial pivoting.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        assert_eq!(b.len(), n, "right-hand side length");
        let mut a = self.data.clone();
        let mut x = b.to_vec();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| libm::fabs(a[i * n + col]).total_cmp(&libm::fabs(a[j * n + col])))
                .unwrap_or(col);
            let mag = libm::fabs(a[pivot * n + col]);
            if mag.is_nan() || mag <= 1e-300 {
                return Err(Error::Singular);
            }
            if pivot != col {
                for j in 0..n {
                    a.swap(col * n + j, pivot * n + j);
                }
                x.swap(col, pivot);
            }
            let d = a[col * n + col];
            for i in col + 1..n {
                let factor = a[i * n + col] / d;
                if factor == 0.0 {
                    continue;
                }
                for j in col..n {
                    a[i * n + j] -= factor * a[col * n + j];
                }
                x[i] -= factor * x[col];
            }
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= a[i * n + j] * x[j];
            }
            x[i] = s / a[i * n + i];
        }
        Ok(x)
    }

    /// Uniformly random orthogonal matrix: Gram-Schmidt on a Gaussian matrix.
    pub fn random_orthogonal(n: usize, rng: &mut RandomStream) -> Matrix {
        loop {
            let mut rows: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.normal()).collect()).collect();
            let mut ok = true;
            for i in 0..n {
                for j in 0..i {
                    let d: f64 = rows[i].iter().zip(&rows[j]).map(|(a, b)| a * b).sum();
                    let rj = rows[j].clone();
                    for (a, b) in rows[i].iter_mut().zip(&rj) {
                        *a -= d * b;
                    }
                }
                let norm = libm::sqrt(rows[i].iter().map(|a| a * a).sum::<f64>());
                if norm < 1e-10 {
                    ok = false;
                    break;
                }
                for a in rows[i].iter_mut() {
                    *a /= norm;
                }
            }
            if ok {
                return Matrix::from_rows(n, rows.concat());
            }
        }
    }
}

/// Solves `(I - gamma * P) q = rhs` for a square transition matrix `P`.
pub fn discounted_solve(p: &Matrix, gamma: f64, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = p.size();
    let mut a = Matrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let id = if i == j { 1.0 } else { 0.0 };
            a.set(i, j, id - gamma * p.get(i, j));
        }
    }
    a.solve(rhs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_small_system() {
        let a = Matrix::from_rows(3, vec![2.0, 1.0, -1.0, -3.0, -1.0, 2.0, -2.0, 1.0, 2.0]);
        let x = a.solve(&[8.0, -11.0, -3.0]).unwrap();
        for (got, want) in x.iter().zip([2.0, 3.0, -1.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_detected() {
        let a = Matrix::from_rows(2, vec![1.0, 2.0, 2.0, 4.0]);
        assert_eq!(a.solve(&[1.0, 2.0]), Err(Error::Singular));
    }

    #[test]
    fn orthogonal_preserves_norm() {
        let mut rng = RandomStream::new(5);
        let r = Matrix::random_orthogonal(7, &mut rng);
        let rt = Matrix::from_rows(7, (0..49).map(|k| r.get(k % 7, k / 7)).collect());
        let prod = r.mul(&rt);
        for i in 0..7 {
            for j in 0..7 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((prod.get(i, j) - want).abs() < 1e-12);
            }
        }
    }
}
