//! Small dense linear algebra for d ≤ ~6. Row-major storage.

use std::ops::{Index, IndexMut};

use crate::point::Point;
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T: Real> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged matrix rows");
            data.extend_from_slice(row);
        }
        Matrix { rows: r, cols: c, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Matrix { rows, cols, data }
    }

    pub fn diag(values: &[T]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Point<T>]) -> Self {
        let n = cols[0].dim();
        let mut m = Self::zeros(n, cols.len());
        for (j, c) in cols.iter().enumerate() {
            for i in 0..n {
                m[(i, j)] = c[i];
            }
        }
        m
    }

    pub fn outer(u: &Point<T>, v: &Point<T>) -> Self {
        let mut m = Self::zeros(u.dim(), v.dim());
        for i in 0..u.dim() {
            for j in 0..v.dim() {
                m[(i, j)] = u[i] * v[j];
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row_major(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> Point<T> {
        Point::new(&self.data[i * self.cols..(i + 1) * self.cols])
    }

    pub fn column(&self, j: usize) -> Point<T> {
        Point::from_vec((0..self.rows).map(|i| self[(i, j)]).collect())
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows);
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &Point<T>) -> Point<T> {
        assert_eq!(self.cols, v.dim());
        Point::from_vec((0..self.rows).map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum()).collect())
    }

    /// `selfᵀ · v`.
    pub fn tmul_vec(&self, v: &Point<T>) -> Point<T> {
        assert_eq!(self.rows, v.dim());
        Point::from_vec((0..self.cols).map(|j| (0..self.rows).map(|i| self[(i, j)] * v[i]).sum()).collect())
    }

    pub fn add(&self, rhs: &Self) -> Self {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a + b).collect(),
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a - b).collect(),
        }
    }

    pub fn scale(&self, s: T) -> Self {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&a| a * s).collect() }
    }

    pub fn symmetrize(&self) -> Self {
        let mut m = self.clone();
        for i in 0..self.rows {
            for j in 0..i {
                let v = (self[(i, j)] + self[(j, i)]) * T::c(0.5);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &v| m.max(v.abs()))
    }

    pub fn is_symmetric(&self, tol: T) -> bool {
        if self.rows != self.cols {
            return false;
        }
        let scale = self.max_abs().max(T::one());
        (0..self.rows).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol * scale))
    }

    /// Lower-triangular G with `self = G·Gᵀ`; `None` if not positive definite.
    pub fn cholesky(&self) -> Option<Self> {
        let n = self.rows;
        let mut g = Self::zeros(n, n);
        for j in 0..n {
            let mut s = self[(j, j)];
            for k in 0..j {
                s -= g[(j, k)] * g[(j, k)];
            }
            if !(s > T::zero()) || !s.is_finite() {
                return None;
            }
            let djj = s.sqrt();
            g[(j, j)] = djj;
            for i in j + 1..n {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s -= g[(i, k)] * g[(j, k)];
                }
                g[(i, j)] = s / djj;
            }
        }
        Some(g)
    }

    /// Inverse of a symmetric positive definite matrix.
    pub fn inverse_spd(&self) -> Option<Self> {
        let g = self.cholesky()?;
        let n = self.rows;
        let mut inv = Self::zeros(n, n);
        for j in 0..n {
            let x = cholesky_solve(&g, &Point::unit(n, j));
            for i in 0..n {
                inv[(i, j)] = x[i];
            }
        }
        Some(inv.symmetrize())
    }

    /// LU decomposition with partial pivoting: returns (LU packed, permutation, sign).
    fn lu(&self) -> Option<(Self, Vec<usize>, T)> {
        let n = self.rows;
        let mut a = self.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = T::one();
        let scale = self.max_abs();
        if scale == T::zero() {
            return None;
        }
        for k in 0..n {
            let mut piv = k;
            for i in k + 1..n {
                if a[(i, k)].abs() > a[(piv, k)].abs() {
                    piv = i;
                }
            }
            if a[(piv, k)].abs() <= scale * T::epsilon() * T::c(16.0) {
                return None;
            }
            if piv != k {
                for j in 0..n {
                    a.data.swap(k * n + j, piv * n + j);
                }
                perm.swap(k, piv);
                sign = -sign;
            }
            for i in k + 1..n {
                let f = a[(i, k)] / a[(k, k)];
                a[(i, k)] = f;
                for j in k + 1..n {
                    let v = a[(k, j)];
                    a[(i, j)] -= f * v;
                }
            }
        }
        Some((a, perm, sign))
    }

    pub fn determinant(&self) -> T {
        assert_eq!(self.rows, self.cols);
        if self.rows == 0 {
            return T::one();
        }
        match self.lu() {
            Some((lu, _, sign)) => (0..self.rows).fold(sign, |acc, i| acc * lu[(i, i)]),
            None => T::zero(),
        }
    }

    /// Solves `self·x = b` for square nonsingular `self`.
    pub fn solve(&self, b: &Point<T>) -> Option<Point<T>> {
        let n = self.rows;
        let (lu, perm, _) = self.lu()?;
        let mut y = Point::zeros(n);
        for i in 0..n {
            let mut s = b[perm[i]];
            for j in 0..i {
                s -= lu[(i, j)] * y[j];
            }
            y[i] = s;
        }
        let mut x = Point::zeros(n);
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in i + 1..n {
                s -= lu[(i, j)] * x[j];
            }
            x[i] = s / lu[(i, i)];
        }
        Some(x)
    }

    /// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
    /// Returns eigenvalues ascending and the matching unit eigenvectors as columns.
    pub fn symmetric_eigen(&self) -> (Vec<T>, Self) {
        let n = self.rows;
        let mut a = self.symmetrize();
        let mut v = Self::identity(n);
        for _sweep in 0..100 {
            let mut off = T::zero();
            for i in 0..n {
                for j in 0..i {
                    off += a[(i, j)] * a[(i, j)];
                }
            }
            let total: T = a.data.iter().map(|&x| x * x).sum();
            if off <= total * T::epsilon() * T::epsilon() || off == T::zero() {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a[(p, q)];
                    if apq == T::zero() {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (T::c(2.0) * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                    let c = T::one() / (t * t + T::one()).sqrt();
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
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| a[(i, i)].partial_cmp(&a[(j, j)]).unwrap_or(std::cmp::Ordering::Equal));
        let values = order.iter().map(|&i| a[(i, i)]).collect();
        let mut vecs = Self::zeros(n, n);
        for (new, &old) in order.iter().enumerate() {
            for k in 0..n {
                vecs[(k, new)] = v[(k, old)];
            }
        }
        (values, vecs)
    }
}

/// Solves `G·Gᵀ·x = b` given the lower Cholesky factor G.
pub fn cholesky_solve<T: Real>(g: &Matrix<T>, b: &Point<T>) -> Point<T> {
    let n = g.rows();
    let mut y = Point::zeros(n);
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= g[(i, k)] * y[k];
        }
        y[i] = s / g[(i, i)];
    }
    let mut x = Point::zeros(n);
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= g[(k, i)] * x[k];
        }
        x[i] = s / g[(i, i)];
    }
    x
}

impl<T: Real> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T: Real> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// `n!` as a real.
pub fn factorial<T: Real>(n: usize) -> T {
    (1..=n).fold(T::one(), |acc, k| acc * T::from_usize_lossy(k))
}

/// Volume of the d-dimensional unit ball.
pub fn unit_ball_volume<T: Real>(d: usize) -> T {
    let mut v = [T::one(), T::c(2.0)];
    if d < 2 {
        return v[d];
    }
    let two_pi = T::c(2.0) * T::PI();
    for k in 2..=d {
        let next = v[k % 2] * two_pi / T::from_usize_lossy(k);
        v[k % 2] = next;
    }
    v[d % 2]
}

/// Unsigned volume of the simplex with the given d+1 vertices.
pub fn simplex_volume<T: Real>(verts: &[Point<T>]) -> T {
    let d = verts[0].dim();
    debug_assert_eq!(verts.len(), d + 1);
    let cols: Vec<Point<T>> = verts[1..].iter().map(|v| v - &verts[0]).collect();
    Matrix::from_columns(&cols).determinant().abs() / factorial::<T>(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_roundtrip() {
        let a = Matrix::from_rows(&[vec![4.0, 2.0, 0.4], vec![2.0, 3.0, 0.5], vec![0.4, 0.5, 2.0]]);
        let g = a.cholesky().unwrap();
        let back = g.mul(&g.transpose());
        assert!(back.sub(&a).max_abs() < 1e-12);
        let inv = a.inverse_spd().unwrap();
        assert!(inv.mul(&a).sub(&Matrix::identity(3)).max_abs() < 1e-12);
    }

    #[test]
    fn not_positive_definite() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert!(a.cholesky().is_none());
    }

    #[test]
    fn determinant_and_solve() {
        let a = Matrix::from_rows(&[vec![0.0, 2.0, 1.0], vec![1.0, 1.0, 0.0], vec![3.0, 0.0, 1.0]]);
        assert!((a.determinant() - (-5.0f64)).abs() < 1e-12);
        let x = a.solve(&Point::new(&[3.0, 2.0, 4.0])).unwrap();
        assert!(a.mul_vec(&x).dist(&Point::new(&[3.0, 2.0, 4.0])) < 1e-12);
    }

    #[test]
    fn jacobi_eigen() {
        let a = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        let (vals, vecs) = a.symmetric_eigen();
        assert!((vals[0] - 1.0f64).abs() < 1e-12 && (vals[1] - 3.0).abs() < 1e-12);
        let v1 = vecs.column(1);
        assert!((v1[0].abs() - v1[1].abs()).abs() < 1e-12);
    }

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume::<f64>(1) - 2.0).abs() < 1e-15);
        assert!((unit_ball_volume::<f64>(2) - std::f64::consts::PI).abs() < 1e-15);
        assert!((unit_ball_volume::<f64>(3) - 4.0 / 3.0 * std::f64::consts::PI).abs() < 1e-14);
    }
}
