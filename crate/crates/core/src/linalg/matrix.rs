use std::fmt;

use crate::scalar::{convert, Scalar};

/// Dense row-major matrix over a [`Scalar`].
#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

/// Reduced row echelon form together with its pivot columns.
#[derive(Clone)]
pub struct Rref<T> {
    pub matrix: Matrix<T>,
    pub pivots: Vec<usize>,
}

impl<T: fmt::Debug> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = self.data[i * self.cols..(i + 1) * self.cols].iter().map(|x| format!("{x:?}")).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

impl<T: Scalar> Matrix<T> {
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

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    /// Panics on ragged input.
    pub fn from_rows(rows: Vec<Vec<T>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged matrix rows");
            data.extend(row);
        }
        Matrix { rows: r, cols: c, data }
    }

    pub fn from_i64_rows(rows: &[&[i64]]) -> Self {
        Self::from_rows(rows.iter().map(|r| r.iter().map(|&v| T::from_i64(v)).collect()).collect())
    }

    pub fn from_columns(rows: usize, cols: &[Vec<T>]) -> Self {
        Self::from_fn(rows, cols.len(), |i, j| cols[j][i].clone())
    }

    pub fn column_vector(v: Vec<T>) -> Self {
        let n = v.len();
        Matrix { rows: n, cols: 1, data: v }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Matrix<U> {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    pub fn cast<U: Scalar>(&self) -> Matrix<U> {
        self.map(|x| convert::<T, U>(x))
    }

    pub fn to_f64(&self) -> Matrix<f64> {
        self.map(|x| x.to_f64())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn mul(&self, rhs: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.cols, rhs.rows, "matrix product shape");
        let mut out = Matrix::<T>::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let b = &rhs[(k, j)];
                    if b.is_zero() {
                        continue;
                    }
                    let v = out[(i, j)].clone() + a.clone() * b.clone();
                    out[(i, j)] = v;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len(), "matrix-vector shape");
        (0..self.rows)
            .map(|i| {
                let mut acc = T::zero();
                for (a, b) in self.row(i).iter().zip(v) {
                    if !a.is_zero() && !b.is_zero() {
                        acc = acc + a.clone() * b.clone();
                    }
                }
                acc
            })
            .collect()
    }

    pub fn add(&self, rhs: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.shape(), rhs.shape());
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a.clone() + b.clone()).collect(),
        }
    }

    pub fn sub(&self, rhs: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.shape(), rhs.shape());
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a.clone() - b.clone()).collect(),
        }
    }

    pub fn scale(&self, s: &T) -> Matrix<T> {
        self.map(|x| x.clone() * s.clone())
    }

    pub fn pow(&self, k: usize) -> Matrix<T> {
        let mut out = Matrix::identity(self.rows);
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).fold(T::zero(), |acc, i| acc + self[(i, i)].clone())
    }

    pub fn hstack(&self, rhs: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.rows, rhs.rows);
        Self::from_fn(self.rows, self.cols + rhs.cols, |i, j| {
            if j < self.cols {
                self[(i, j)].clone()
            } else {
                rhs[(i, j - self.cols)].clone()
            }
        })
    }

    pub fn vstack(&self, rhs: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.cols, rhs.cols);
        Self::from_fn(self.rows + rhs.rows, self.cols, |i, j| {
            if i < self.rows {
                self[(i, j)].clone()
            } else {
                rhs[(i - self.rows, j)].clone()
            }
        })
    }

    pub fn select_cols(&self, cols: &[usize]) -> Matrix<T> {
        Self::from_fn(self.rows, cols.len(), |i, j| self[(i, cols[j])].clone())
    }

    pub fn select_rows(&self, rows: &[usize]) -> Matrix<T> {
        Self::from_fn(rows.len(), self.cols, |i, j| self[(rows[i], j)].clone())
    }

    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Matrix<T> {
        Self::from_fn(nr, nc, |i, j| self[(r0 + i, c0 + j)].clone())
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.magnitude()).fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x.magnitude().powi(2)).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn is_negligible(&self, tol: f64) -> bool {
        self.data.iter().all(|x| x.is_negligible(tol))
    }

    /// Gauss-Jordan elimination with largest-magnitude pivoting. Entries
    /// of magnitude at most `tol` count as zero (ignored for exact scalars).
    pub fn rref(&self, tol: f64) -> Rref<T> {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let mut best: Option<(usize, f64)> = None;
            for i in r..m.rows {
                let v = &m[(i, c)];
                if v.is_negligible(tol) {
                    continue;
                }
                let mag = v.magnitude();
                if T::EXACT {
                    best = Some((i, mag));
                    break;
                }
                if best.is_none_or(|(_, b)| mag > b) {
                    best = Some((i, mag));
                }
            }
            let Some((p, _)) = best else {
                if !T::EXACT {
                    for i in r..m.rows {
                        m[(i, c)] = T::zero();
                    }
                }
                continue;
            };
            m.swap_rows(r, p);
            let inv = T::one() / m[(r, c)].clone();
            for j in 0..m.cols {
                let v = m[(r, j)].clone() * inv.clone();
                m[(r, j)] = v;
            }
            m[(r, c)] = T::one();
            for i in 0..m.rows {
                if i == r {
                    continue;
                }
                let f = m[(i, c)].clone();
                if f.is_zero() {
                    continue;
                }
                for j in 0..m.cols {
                    let rv = m[(r, j)].clone();
                    if rv.is_zero() {
                        continue;
                    }
                    let v = m[(i, j)].clone() - f.clone() * rv;
                    m[(i, j)] = v;
                }
                m[(i, c)] = T::zero();
            }
            pivots.push(c);
            r += 1;
        }
        Rref { matrix: m, pivots }
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn rank(&self, tol: f64) -> usize {
        self.rref(tol).pivots.len()
    }

    /// Basis of the null space as columns. Each basis vector has a 1 in
    /// its free coordinate and zeros in the other free coordinates.
    pub fn nullspace(&self, tol: f64) -> Matrix<T> {
        let Rref { matrix, pivots } = self.rref(tol);
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let mut basis = Matrix::zeros(self.cols, free.len());
        for (k, &f) in free.iter().enumerate() {
            basis[(f, k)] = T::one();
            for (r, &p) in pivots.iter().enumerate() {
                basis[(p, k)] = -matrix[(r, f)].clone();
            }
        }
        basis
    }

    /// Basis of the column space made of the pivot columns of `self`.
    pub fn column_space(&self, tol: f64) -> Matrix<T> {
        let pivots = self.rref(tol).pivots;
        self.select_cols(&pivots)
    }

    pub fn inverse(&self, tol: f64) -> Option<Matrix<T>> {
        if !self.is_square() {
            return None;
        }
        let n = self.rows;
        let aug = self.hstack(&Matrix::identity(n));
        let Rref { matrix, pivots } = aug.rref(tol);
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return None;
        }
        Some(matrix.block(0, n, n, n))
    }

    /// Solves `self * X = rhs`, returning `None` when the system is
    /// inconsistent beyond `tol`. Free variables are set to zero.
    pub fn solve(&self, rhs: &Matrix<T>, tol: f64) -> Option<Matrix<T>> {
        assert_eq!(self.rows, rhs.rows);
        let aug = self.hstack(rhs);
        let Rref { matrix, pivots } = aug.rref(tol);
        if pivots.iter().any(|&p| p >= self.cols) {
            return None;
        }
        let mut x = Matrix::zeros(self.cols, rhs.cols);
        for (r, &p) in pivots.iter().enumerate() {
            for j in 0..rhs.cols {
                x[(p, j)] = matrix[(r, self.cols + j)].clone();
            }
        }
        Some(x)
    }

    pub fn kron(&self, rhs: &Matrix<T>) -> Matrix<T> {
        Self::from_fn(self.rows * rhs.rows, self.cols * rhs.cols, |i, j| {
            self[(i / rhs.rows, j / rhs.cols)].clone() * rhs[(i % rhs.rows, j % rhs.cols)].clone()
        })
    }

    pub fn is_identity(&self) -> bool {
        self.is_square() && *self == Matrix::identity(self.rows)
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    #[test]
    fn exact_nullspace_has_unit_free_coordinates() {
        // kernel of [[0,1,0],[0,0,0]] is spanned by e1, e3
        let m = Matrix::<Rational>::from_i64_rows(&[&[0, 1, 0], &[0, 0, 0]]);
        let k = m.nullspace(0.0);
        assert_eq!(k, Matrix::from_i64_rows(&[&[1, 0], &[0, 0], &[0, 1]]));
    }

    #[test]
    fn exact_inverse_and_solve() {
        let m = Matrix::<Rational>::from_i64_rows(&[&[2, 1], &[1, 1]]);
        let inv = m.inverse(0.0).unwrap();
        assert!(m.mul(&inv).is_identity());
        let b = Matrix::column_vector(vec![q(1, 1), q(1, 2)]);
        let x = m.solve(&b, 0.0).unwrap();
        assert_eq!(m.mul(&x), b);
        let singular = Matrix::<Rational>::from_i64_rows(&[&[1, 2], &[2, 4]]);
        assert!(singular.inverse(0.0).is_none());
        let b2 = Matrix::<Rational>::from_i64_rows(&[&[1], &[0]]);
        assert!(singular.solve(&b2, 0.0).is_none());
    }

    #[test]
    fn float_rank_uses_tolerance() {
        let m = Matrix::<f64>::from_rows(vec![vec![1.0, 1.0], vec![1.0, 1.0 + 1e-14]]);
        assert_eq!(m.rank(1e-10), 1);
        assert_eq!(m.rank(0.0), 2);
    }
}
