//! Small dense linear algebra for the fitters (a handful of parameters,
//! at most a few thousand residuals).

use crate::scalar::Real;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// `AᵀA`.
    pub fn gram(&self) -> Matrix<T> {
        let n = self.cols;
        let mut out = Matrix::zeros(n, n);
        for r in 0..self.rows {
            let row = self.row(r);
            for i in 0..n {
                if row[i] == T::zero() {
                    continue;
                }
                for j in i..n {
                    out[(i, j)] += row[i] * row[j];
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                out[(i, j)] = out[(j, i)];
            }
        }
        out
    }

    /// `Aᵀv`.
    pub fn transpose_mul(&self, v: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.cols];
        for (r, &x) in v.iter().enumerate().take(self.rows) {
            for (o, &a) in out.iter_mut().zip(self.row(r)) {
                *o += a * x;
            }
        }
        out
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }
}

impl<T> core::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (r, c): (usize, usize)) -> &T {
        &self.data[r * self.cols + c]
    }
}

impl<T> core::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut T {
        &mut self.data[r * self.cols + c]
    }
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
/// Returns `None` for a (numerically) singular matrix.
pub fn solve<T: Real>(a: &Matrix<T>, b: &[T]) -> Option<Vec<T>> {
    let n = a.rows;
    assert_eq!(a.cols, n, "square system");
    assert_eq!(b.len(), n);
    let mut m = a.clone();
    let mut x = b.to_vec();
    let scale = m.data.iter().fold(T::zero(), |acc, v| acc.max(v.abs()));
    if scale == T::zero() {
        return None;
    }
    let tiny = scale * T::epsilon() * T::from_usize_lossy(n);
    for k in 0..n {
        let pivot = (k..n)
            .max_by(|&i, &j| m[(i, k)].abs().partial_cmp(&m[(j, k)].abs()).unwrap_or(core::cmp::Ordering::Equal))
            .expect("non-empty range");
        if !(m[(pivot, k)].abs() > tiny) {
            return None;
        }
        if pivot != k {
            for c in 0..n {
                m.data.swap(k * n + c, pivot * n + c);
            }
            x.swap(k, pivot);
        }
        for i in k + 1..n {
            let f = m[(i, k)] / m[(k, k)];
            if f == T::zero() {
                continue;
            }
            for c in k..n {
                let v = m[(k, c)];
                m[(i, c)] -= f * v;
            }
            let xk = x[k];
            x[i] -= f * xk;
        }
    }
    for k in (0..n).rev() {
        let mut acc = x[k];
        for c in k + 1..n {
            acc -= m[(k, c)] * x[c];
        }
        x[k] = acc / m[(k, k)];
    }
    Some(x)
}

pub fn invert<T: Real>(a: &Matrix<T>) -> Option<Matrix<T>> {
    let n = a.rows;
    let mut out = Matrix::zeros(n, n);
    for c in 0..n {
        let mut e = vec![T::zero(); n];
        e[c] = T::one();
        let col = solve(a, &e)?;
        for r in 0..n {
            out[(r, c)] = col[r];
        }
    }
    Some(out)
}

/// Least-squares solution of `A x ≈ b` via Householder QR, together with
/// `(AᵀA)⁻¹` for covariance estimates. `None` when `A` is rank deficient.
pub fn lstsq<T: Real>(a: &Matrix<T>, b: &[T]) -> Option<(Vec<T>, Matrix<T>)> {
    let (m, n) = (a.rows, a.cols);
    if m < n {
        return None;
    }
    let mut r = a.clone();
    let mut y = b.to_vec();
    let col_scale: Vec<T> = (0..n)
        .map(|c| (0..m).map(|i| r[(i, c)] * r[(i, c)]).sum::<T>().sqrt())
        .collect();
    for k in 0..n {
        let norm = (k..m).map(|i| r[(i, k)] * r[(i, k)]).sum::<T>().sqrt();
        if !(norm > col_scale[k] * T::lit(1e-12)) || norm == T::zero() {
            return None;
        }
        let alpha = if r[(k, k)] > T::zero() { -norm } else { norm };
        let mut v: Vec<T> = (k..m).map(|i| r[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm2: T = v.iter().map(|x| *x * *x).sum();
        if vnorm2 == T::zero() {
            continue;
        }
        for c in k..n {
            let dot: T = v.iter().enumerate().map(|(i, vi)| *vi * r[(k + i, c)]).sum();
            let f = T::lit(2.0) * dot / vnorm2;
            for (i, vi) in v.iter().enumerate() {
                r[(k + i, c)] -= f * *vi;
            }
        }
        let dot: T = v.iter().enumerate().map(|(i, vi)| *vi * y[k + i]).sum();
        let f = T::lit(2.0) * dot / vnorm2;
        for (i, vi) in v.iter().enumerate() {
            y[k + i] -= f * *vi;
        }
    }
    let mut x = vec![T::zero(); n];
    for k in (0..n).rev() {
        let mut acc = y[k];
        for c in k + 1..n {
            acc -= r[(k, c)] * x[c];
        }
        x[k] = acc / r[(k, k)];
    }
    // (AᵀA)⁻¹ = R⁻¹ R⁻ᵀ
    let mut rinv = Matrix::zeros(n, n);
    for c in 0..n {
        for k in (0..=c).rev() {
            let mut acc = if k == c { T::one() } else { T::zero() };
            for j in k + 1..=c {
                acc -= r[(k, j)] * rinv[(j, c)];
            }
            rinv[(k, c)] = acc / r[(k, k)];
        }
    }
    let mut cov = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            cov[(i, j)] = (0..n).map(|k| rinv[(i, k)] * rinv[(j, k)]).sum();
        }
    }
    Some((x, cov))
}
