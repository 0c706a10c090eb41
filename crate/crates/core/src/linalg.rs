//! Small dense linear algebra for the d ≤ 10 matrices this crate handles.
//!
//! Everything here is row-major and allocation-light; nothing tries to be a
//! general-purpose BLAS.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn norm_sq<T: Scalar>(a: &[T]) -> T {
    dot(a, a)
}

pub fn sub<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

pub fn scale<T: Scalar>(a: &[T], c: T) -> Vec<T> {
    a.iter().map(|&x| x * c).collect()
}

/// `a + c·b`
pub fn axpy<T: Scalar>(a: &[T], c: T, b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x + c * y).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
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
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Self { rows: r, cols: c, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    /// `self += w · x xᵀ`
    pub fn add_outer(&mut self, w: T, x: &[T]) {
        debug_assert_eq!(self.rows, x.len());
        debug_assert_eq!(self.cols, x.len());
        for i in 0..x.len() {
            let wi = w * x[i];
            for j in i..x.len() {
                let v = wi * x[j];
                self.data[i * self.cols + j] += v;
                if j != i {
                    self.data[j * self.cols + i] += v;
                }
            }
        }
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `xᵀ M x`
    pub fn quad_form(&self, x: &[T]) -> T {
        dot(x, &self.mul_vec(x))
    }

    pub fn scaled(&self, c: T) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| v * c).collect() }
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max)
    }

    pub fn is_symmetric(&self, tol: T) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol))
    }

    /// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
    pub fn symmetric_eigenvalues(&self) -> Vec<T> {
        let n = self.rows;
        let mut a = self.clone();
        let eps = T::epsilon();
        for _sweep in 0..100 {
            let off: T = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[(i, j)] * a[(i, j)])
                .sum();
            let diag: T = (0..n).map(|i| a[(i, i)] * a[(i, i)]).sum();
            if off <= eps * eps * diag || off == T::zero() {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a[(p, q)];
                    if apq == T::zero() {
                        continue;
                    }
                    let two = T::of(2.0);
                    let theta = (a[(q, q)] - a[(p, p)]) / (two * apq);
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
                }
            }
        }
        let mut ev: Vec<T> = (0..n).map(|i| a[(i, i)]).collect();
        ev.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
        ev
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    l: Matrix<T>,
}

impl<T: Scalar> Cholesky<T> {
    /// Fails with [`Error::Singular`] when a pivot is not safely positive.
    /// The reported eigenvalue estimate is the smallest eigenvalue of `a`.
    pub fn factor(a: &Matrix<T>) -> Result<Self> {
        let n = a.rows();
        let scale = (0..n).map(|i| a[(i, i)].abs()).fold(T::zero(), T::max);
        let floor = scale * T::epsilon() * T::of_usize(n.max(1)) * T::of(16.0);
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut diag = a[(j, j)];
            for k in 0..j {
                diag -= l[(j, k)] * l[(j, k)];
            }
            if !(diag > floor) {
                let ev = a.symmetric_eigenvalues().first().copied().unwrap_or(T::zero());
                return Err(Error::Singular { eigenvalue: ev.as_f64() });
            }
            let ljj = diag.sqrt();
            l[(j, j)] = ljj;
            for i in j + 1..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / ljj;
            }
        }
        Ok(Self { l })
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    /// Solves `L y = b`; `‖y‖² = bᵀ A⁻¹ b`.
    pub fn forward(&self, b: &[T]) -> Vec<T> {
        let n = self.dim();
        let mut y = vec![T::zero(); n];
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.l[(i, k)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        y
    }

    fn backward(&self, y: &[T]) -> Vec<T> {
        let n = self.dim();
        let mut x = vec![T::zero(); n];
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.l[(k, i)] * x[k];
            }
            x[i] = s / self.l[(i, i)];
        }
        x
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        self.backward(&self.forward(b))
    }

    /// `bᵀ A⁻¹ b` without forming the inverse.
    pub fn inv_quad(&self, b: &[T]) -> T {
        norm_sq(&self.forward(b))
    }
}

/// Numerical rank by Gaussian elimination with partial pivoting; entries
/// below `rel_tol · max|entry|` count as zero.
pub fn rank<T: Scalar>(rows: &[Vec<T>], rel_tol: T) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let mut m: Vec<Vec<T>> = rows.to_vec();
    let ncols = m[0].len();
    let scale = m.iter().flatten().map(|v| v.abs()).fold(T::zero(), T::max);
    if scale == T::zero() {
        return 0;
    }
    let tol = rel_tol * scale;
    let mut r = 0;
    for c in 0..ncols {
        if r == m.len() {
            break;
        }
        let (piv, val) = (r..m.len())
            .map(|i| (i, m[i][c].abs()))
            .fold((r, T::zero()), |acc, x| if x.1 > acc.1 { x } else { acc });
        if val <= tol {
            continue;
        }
        m.swap(r, piv);
        for i in r + 1..m.len() {
            let f = m[i][c] / m[r][c];
            for k in c..ncols {
                let v = m[r][k];
                m[i][k] -= f * v;
            }
        }
        r += 1;
    }
    r
}

/// A nonzero vector `c` with `M c ≈ 0`, where `M` is given column-wise
/// (`cols[j]` is column `j`). Returns `None` when the columns are
/// independent at tolerance `rel_tol`.
pub fn null_vector<T: Scalar>(cols: &[Vec<T>], rel_tol: T) -> Option<Vec<T>> {
    let p = cols.len();
    if p == 0 {
        return None;
    }
    let nrows = cols[0].len();
    // Work on rows of M.
    let mut m: Vec<Vec<T>> = (0..nrows).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
    let scale = m.iter().flatten().map(|v| v.abs()).fold(T::zero(), T::max);
    let tol = rel_tol * scale.max(T::min_positive_value());
    let mut pivot_cols = Vec::new();
    let mut r = 0;
    for c in 0..p {
        if r == nrows {
            break;
        }
        let (piv, val) = (r..nrows)
            .map(|i| (i, m[i][c].abs()))
            .fold((r, T::zero()), |acc, x| if x.1 > acc.1 { x } else { acc });
        if val <= tol {
            continue;
        }
        m.swap(r, piv);
        let inv = T::one() / m[r][c];
        for k in 0..p {
            m[r][k] *= inv;
        }
        for i in 0..nrows {
            if i != r {
                let f = m[i][c];
                if f != T::zero() {
                    for k in 0..p {
                        let v = m[r][k];
                        m[i][k] -= f * v;
                    }
                }
            }
        }
        pivot_cols.push(c);
        r += 1;
    }
    let free = (0..p).find(|c| !pivot_cols.contains(c))?;
    let mut v = vec![T::zero(); p];
    v[free] = T::one();
    for (row, &pc) in pivot_cols.iter().enumerate() {
        v[pc] = -m[row][free];
    }
    Some(v)
}
