//! Dense complex matrices and LU factorization with partial pivoting.

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Row-major dense square or rectangular complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T: Scalar = f64> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex::zero(); rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Wraps row-major storage.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex<T>>) -> Self {
        assert_eq!(data.len(), rows * cols, "storage does not match shape");
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex<T>) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[Complex<T>] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn mul_vec(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .fold(Complex::zero(), |acc, (a, b)| acc + *a * *b)
            })
            .collect()
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> T {
        (0..self.rows)
            .map(|i| self.row(i).iter().fold(T::zero(), |acc, v| acc + v.norm()))
            .fold(T::zero(), T::max)
    }

    pub fn norm_frobenius(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, v| acc + v.norm_sqr())
            .sqrt()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }
}

/// `max_i |v_i|`.
pub fn norm_inf_vec<T: Scalar>(v: &[Complex<T>]) -> T {
    v.iter().fold(T::zero(), |acc, x| acc.max(x.norm()))
}

/// `||a x - b||_inf / ||b||_inf`, or the absolute residual when `b = 0`.
pub fn relative_residual<T: Scalar>(a: &DenseMatrix<T>, x: &[Complex<T>], b: &[Complex<T>]) -> T {
    let ax = a.mul_vec(x);
    let r = ax
        .iter()
        .zip(b)
        .fold(T::zero(), |acc, (p, q)| acc.max((*p - *q).norm()));
    let scale = norm_inf_vec(b);
    if scale > T::zero() {
        r / scale
    } else {
        r
    }
}

/// `P A = L U` with unit lower-triangular `L`, stored in place.
#[derive(Debug, Clone)]
pub struct Lu<T: Scalar = f64> {
    n: usize,
    factors: Vec<Complex<T>>,
    perm: Vec<usize>,
    min_pivot: T,
}

impl<T: Scalar> Lu<T> {
    /// Factors a square matrix; fails when a pivot falls below
    /// `rel_pivot_tol * ||a||_inf`.
    pub fn factor(a: &DenseMatrix<T>, rel_pivot_tol: T) -> Result<Self> {
        assert_eq!(a.rows, a.cols, "LU needs a square matrix");
        let n = a.rows;
        let threshold = rel_pivot_tol * a.norm_inf();
        let mut f = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut min_pivot = T::infinity();

        for k in 0..n {
            let mut p = k;
            let mut best = f[k * n + k].norm_sqr();
            for i in k + 1..n {
                let v = f[i * n + k].norm_sqr();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            let pivot_mag = best.sqrt();
            if !(pivot_mag > threshold) || !pivot_mag.is_finite() || pivot_mag == T::zero() {
                return Err(Error::SingularSystem {
                    column: k,
                    pivot: pivot_mag.to_f64().unwrap_or(0.0),
                    threshold: threshold.to_f64().unwrap_or(0.0),
                });
            }
            min_pivot = min_pivot.min(pivot_mag);
            if p != k {
                for j in 0..n {
                    f.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let inv = Complex::new(T::one(), T::zero()) / f[k * n + k];
            let (upper, lower) = f.split_at_mut((k + 1) * n);
            let pivot_row = &upper[k * n..(k + 1) * n];
            for row in lower.chunks_exact_mut(n) {
                let l = row[k] * inv;
                row[k] = l;
                if l.is_zero() {
                    continue;
                }
                for j in k + 1..n {
                    row[j] = row[j] - l * pivot_row[j];
                }
            }
        }
        Ok(Self {
            n,
            factors: f,
            perm,
            min_pivot,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Smallest pivot magnitude met during elimination.
    pub fn min_pivot(&self) -> T {
        self.min_pivot
    }

    pub fn solve(&self, b: &[Complex<T>]) -> Vec<Complex<T>> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut x: Vec<Complex<T>> = self.perm.iter().map(|&i| b[i]).collect();
        for i in 0..n {
            let row = &self.factors[i * n..i * n + i];
            let s = row
                .iter()
                .zip(&x[..i])
                .fold(Complex::zero(), |acc, (l, v)| acc + *l * *v);
            x[i] = x[i] - s;
        }
        for i in (0..n).rev() {
            let row = &self.factors[i * n..(i + 1) * n];
            let s = row[i + 1..]
                .iter()
                .zip(&x[i + 1..])
                .fold(Complex::zero(), |acc, (u, v)| acc + *u * *v);
            x[i] = (x[i] - s) / row[i];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type C = Complex<f64>;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn solves_small_system_needing_pivoting() {
        let a = DenseMatrix::from_row_major(
            3,
            3,
            vec![
                c(0.0, 0.0), c(2.0, 1.0), c(1.0, 0.0),
                c(1.0, -1.0), c(0.5, 0.0), c(0.0, 3.0),
                c(4.0, 0.0), c(-1.0, 0.0), c(2.0, 2.0),
            ],
        );
        let x_true = vec![c(1.0, 2.0), c(-0.5, 0.25), c(3.0, -1.0)];
        let b = a.mul_vec(&x_true);
        let lu = Lu::factor(&a, 1e-14).unwrap();
        let x = lu.solve(&b);
        for (p, q) in x.iter().zip(&x_true) {
            assert!((p - q).norm() < 1e-14);
        }
        assert!(relative_residual(&a, &x, &b) < 1e-15);
    }

    #[test]
    fn singular_matrix_rejected() {
        let a = DenseMatrix::from_row_major(
            2,
            2,
            vec![c(1.0, 1.0), c(2.0, 2.0), c(0.5, 0.5), c(1.0, 1.0)],
        );
        assert!(matches!(Lu::factor(&a, 1e-14), Err(Error::SingularSystem { .. })));
    }

    #[test]
    fn single_precision_factorization() {
        let a = DenseMatrix::<f32>::from_row_major(
            2,
            2,
            vec![
                Complex::new(2.0, 0.0),
                Complex::new(1.0, 0.0),
                Complex::new(1.0, 0.0),
                Complex::new(3.0, 0.0),
            ],
        );
        let x = Lu::factor(&a, 1e-6).unwrap().solve(&[Complex::new(3.0, 0.0), Complex::new(4.0, 0.0)]);
        assert!((x[0].re - 1.0).abs() < 1e-6 && (x[1].re - 1.0).abs() < 1e-6);
    }

    #[test]
    fn norms() {
        let a = DenseMatrix::from_row_major(2, 2, vec![c(3.0, 4.0), c(0.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0)]);
        assert_eq!(a.norm_inf(), 5.0);
        assert!((a.norm_frobenius() - 27f64.sqrt()).abs() < 1e-15);
        assert_eq!(a.transpose().get(0, 1), c(1.0, 0.0));
    }
}
