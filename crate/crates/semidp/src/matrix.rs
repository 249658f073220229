//! Small dense real matrices.
//!
//! The quadratic-cost specialization only ever manipulates matrices of a
//! handful of rows (test instances cap at 4), so the linear algebra is kept
//! self-contained: Gaussian elimination with partial pivoting for solves,
//! cyclic Jacobi rotations for symmetric eigenvalues, and a
//! norm-of-powers limit for spectral radii of general (possibly
//! non-symmetric) matrices.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MatrixError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("singular linear system")]
    Singular,
    #[error("matrix rows are ragged or empty")]
    BadShape,
}

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl TryFrom<Vec<Vec<f64>>> for Mat {
    type Error = MatrixError;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self, MatrixError> {
        Mat::from_rows(&rows)
    }
}

impl From<Mat> for Vec<Vec<f64>> {
    fn from(m: Mat) -> Vec<Vec<f64>> {
        (0..m.rows).map(|i| m.data[i * m.cols..(i + 1) * m.cols].to_vec()).collect()
    }
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn scalar(value: f64) -> Self {
        Mat { rows: 1, cols: 1, data: vec![value] }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, MatrixError> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(MatrixError::BadShape);
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(MatrixError::BadShape);
        }
        Ok(Mat { rows: rows.len(), cols, data: rows.iter().flatten().copied().collect() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> Mat {
        let mut out = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    pub fn matmul(&self, rhs: &Mat) -> Mat {
        assert_eq!(self.cols, rhs.rows, "matmul shape mismatch");
        let mut out = Mat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }

    pub fn add(&self, rhs: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, rhs: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, factor: f64) -> Mat {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| a * factor).collect() }
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, a| acc.max(a.abs()))
    }

    /// Entrywise symmetry drift `max |M - M'|`.
    pub fn asymmetry(&self) -> f64 {
        assert!(self.is_square());
        let mut worst = 0.0_f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    /// `(M + M') / 2`.
    pub fn symmetrized(&self) -> Mat {
        assert!(self.is_square());
        let mut out = self.clone();
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = 0.5 * (self[(i, j)] + self[(j, i)]);
            }
        }
        out
    }

    /// Solves `self * X = rhs` by Gaussian elimination with partial
    /// pivoting.
    pub fn solve(&self, rhs: &Mat) -> Result<Mat, MatrixError> {
        if !self.is_square() {
            return Err(MatrixError::DimensionMismatch("solve needs a square matrix".into()));
        }
        if self.rows != rhs.rows {
            return Err(MatrixError::DimensionMismatch("solve rhs row count".into()));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut b = rhs.clone();
        for col in 0..n {
            let pivot_row = (col..n)
                .max_by(|&i, &j| a[(i, col)].abs().partial_cmp(&a[(j, col)].abs()).unwrap())
                .unwrap();
            if a[(pivot_row, col)].abs() < 1e-300 {
                return Err(MatrixError::Singular);
            }
            if pivot_row != col {
                for j in 0..n {
                    let tmp = a[(col, j)];
                    a[(col, j)] = a[(pivot_row, j)];
                    a[(pivot_row, j)] = tmp;
                }
                for j in 0..b.cols {
                    let tmp = b[(col, j)];
                    b[(col, j)] = b[(pivot_row, j)];
                    b[(pivot_row, j)] = tmp;
                }
            }
            let pivot = a[(col, col)];
            for row in (col + 1)..n {
                let factor = a[(row, col)] / pivot;
                if factor == 0.0 {
                    continue;
                }
                for j in col..n {
                    a[(row, j)] -= factor * a[(col, j)];
                }
                for j in 0..b.cols {
                    b[(row, j)] -= factor * b[(col, j)];
                }
            }
        }
        let mut x = Mat::zeros(n, b.cols);
        for j in 0..b.cols {
            for row in (0..n).rev() {
                let mut acc = b[(row, j)];
                for k in (row + 1)..n {
                    acc -= a[(row, k)] * x[(k, j)];
                }
                x[(row, j)] = acc / a[(row, row)];
            }
        }
        Ok(x)
    }

    /// Eigenvalues of a symmetric matrix via cyclic Jacobi rotations,
    /// ascending.
    pub fn sym_eigenvalues(&self) -> Vec<f64> {
        assert!(self.is_square(), "eigenvalues need a square matrix");
        let n = self.rows;
        let mut a = self.symmetrized();
        let scale = a.max_abs();
        if scale == 0.0 {
            return vec![0.0; n];
        }
        for _sweep in 0..100 {
            let mut off = 0.0_f64;
            for i in 0..n {
                for j in (i + 1)..n {
                    off = off.max(a[(i, j)].abs());
                }
            }
            if off <= 1e-15 * scale {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    if apq.abs() <= 1e-18 * scale {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut eigs: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
        eigs.sort_by(|x, y| x.partial_cmp(y).unwrap());
        eigs
    }

    pub fn min_sym_eigenvalue(&self) -> f64 {
        self.sym_eigenvalues()[0]
    }

    /// Spectral radius of a general square matrix via the norm-of-powers
    /// limit `ρ(M) = lim ‖M^k‖^{1/k}`, evaluated by repeated squaring with
    /// renormalization. After 80 squarings the power is `2^80`, which
    /// drives the polynomial factor of defective matrices below 1e-16
    /// relative. A power that vanishes exactly signals (numerical)
    /// nilpotency, i.e. a radius below every threshold in use.
    pub fn spectral_radius(&self) -> f64 {
        assert!(self.is_square());
        let mut m = self.clone();
        let mut log_scale = 0.0_f64; // ln ‖M^{2^k}‖ = log_scale + ln ‖m‖
        let mut estimate = 0.0_f64;
        for k in 0..80 {
            let norm = m.max_abs();
            if norm == 0.0 {
                return 0.0;
            }
            estimate = (log_scale + norm.ln()) / 2.0_f64.powi(k);
            m = m.scale(1.0 / norm);
            m = m.matmul(&m);
            log_scale = 2.0 * (log_scale + norm.ln());
        }
        estimate.exp()
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_small_system() {
        let a = Mat::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let b = Mat::from_rows(&[vec![5.0], vec![10.0]]).unwrap();
        let x = a.solve(&b).unwrap();
        assert!((x[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((x[(1, 0)] - 3.0).abs() < 1e-12);
        let singular = Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert_eq!(singular.solve(&b), Err(MatrixError::Singular));
    }

    #[test]
    fn jacobi_eigenvalues() {
        let m = Mat::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let eigs = m.sym_eigenvalues();
        assert!((eigs[0] - 1.0).abs() < 1e-12);
        assert!((eigs[1] - 3.0).abs() < 1e-12);

        let d = Mat::from_rows(&[vec![4.0, 0.0, 0.0], vec![0.0, -1.0, 0.0], vec![0.0, 0.0, 0.5]]).unwrap();
        let eigs = d.sym_eigenvalues();
        assert!((eigs[0] + 1.0).abs() < 1e-12);
        assert!((eigs[2] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn spectral_radius_cases() {
        assert!((Mat::scalar(0.5).spectral_radius() - 0.5).abs() < 1e-12);
        assert!((Mat::scalar(2.0).spectral_radius() - 2.0).abs() < 1e-12);
        assert_eq!(Mat::zeros(3, 3).spectral_radius(), 0.0);
        // Rotation-dilation: complex eigenvalues of modulus sqrt(2)*0.6.
        let r = Mat::from_rows(&[vec![0.6, -0.6], vec![0.6, 0.6]]).unwrap();
        let expected = (2.0_f64).sqrt() * 0.6;
        assert!((r.spectral_radius() - expected).abs() < 1e-10);
        // Defective (Jordan block): radius 1 despite growing powers.
        let j = Mat::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        assert!((j.spectral_radius() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn serde_round_trip() {
        let m = Mat::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let json = serde_json::to_string(&m).unwrap();
        assert_eq!(json, "[[1.0,2.0],[3.0,4.0]]");
        let back: Mat = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
    }
}
