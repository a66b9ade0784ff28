//! Small dense linear algebra on fixed-size arrays.
//!
//! Parameter dimensions here never exceed five, so everything is written for
//! stack-allocated `[[T; N]; N]` matrices.

use crate::Scalar;

pub type Vector<T, const N: usize> = [T; N];
pub type Matrix<T, const N: usize> = [[T; N]; N];

pub fn zeros<T: Scalar, const N: usize>() -> Matrix<T, N> {
    [[T::zero(); N]; N]
}

pub fn identity<T: Scalar, const N: usize>() -> Matrix<T, N> {
    let mut m = zeros();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = T::one();
    }
    m
}

pub fn diag<T: Scalar, const N: usize>(d: &[T; N]) -> Matrix<T, N> {
    let mut m = zeros();
    for i in 0..N {
        m[i][i] = d[i];
    }
    m
}

pub fn diagonal<T: Scalar, const N: usize>(m: &Matrix<T, N>) -> [T; N] {
    std::array::from_fn(|i| m[i][i])
}

pub fn transpose<T: Scalar, const N: usize>(m: &Matrix<T, N>) -> Matrix<T, N> {
    std::array::from_fn(|i| std::array::from_fn(|j| m[j][i]))
}

pub fn symmetrize<T: Scalar, const N: usize>(m: &Matrix<T, N>) -> Matrix<T, N> {
    let half = T::lit(0.5);
    std::array::from_fn(|i| std::array::from_fn(|j| (m[i][j] + m[j][i]) * half))
}

pub fn add<T: Scalar, const N: usize>(a: &Matrix<T, N>, b: &Matrix<T, N>) -> Matrix<T, N> {
    std::array::from_fn(|i| std::array::from_fn(|j| a[i][j] + b[i][j]))
}

pub fn sub<T: Scalar, const N: usize>(a: &Matrix<T, N>, b: &Matrix<T, N>) -> Matrix<T, N> {
    std::array::from_fn(|i| std::array::from_fn(|j| a[i][j] - b[i][j]))
}

pub fn scale<T: Scalar, const N: usize>(a: &Matrix<T, N>, s: T) -> Matrix<T, N> {
    std::array::from_fn(|i| std::array::from_fn(|j| a[i][j] * s))
}

pub fn mat_mul<T: Scalar, const N: usize>(a: &Matrix<T, N>, b: &Matrix<T, N>) -> Matrix<T, N> {
    std::array::from_fn(|i| {
        std::array::from_fn(|j| (0..N).fold(T::zero(), |acc, k| acc + a[i][k] * b[k][j]))
    })
}

pub fn mat_vec<T: Scalar, const N: usize>(a: &Matrix<T, N>, x: &[T; N]) -> [T; N] {
    std::array::from_fn(|i| (0..N).fold(T::zero(), |acc, k| acc + a[i][k] * x[k]))
}

pub fn dot<T: Scalar, const N: usize>(a: &[T; N], b: &[T; N]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + *x * *y)
}

/// Largest absolute entry.
pub fn max_abs<T: Scalar, const N: usize>(m: &Matrix<T, N>) -> T {
    m.iter()
        .flatten()
        .fold(T::zero(), |acc, x| if x.abs() > acc { x.abs() } else { acc })
}

/// Lower Cholesky factor `L` with `L Lᵀ = a`. Returns `None` unless `a` is
/// (numerically) symmetric positive definite with finite entries.
pub fn cholesky<T: Scalar, const N: usize>(a: &Matrix<T, N>) -> Option<Matrix<T, N>> {
    let mut l = zeros::<T, N>();
    for j in 0..N {
        let mut d = a[j][j];
        for k in 0..j {
            d = d - l[j][k] * l[j][k];
        }
        if !(d > T::zero()) || !d.is_finite() {
            return None;
        }
        let djj = d.sqrt();
        l[j][j] = djj;
        for i in (j + 1)..N {
            let mut s = a[i][j];
            for k in 0..j {
                s = s - l[i][k] * l[j][k];
            }
            l[i][j] = s / djj;
        }
    }
    Some(l)
}

/// Solves `L x = b` for lower-triangular `L`.
pub fn forward_sub<T: Scalar, const N: usize>(l: &Matrix<T, N>, b: &[T; N]) -> [T; N] {
    let mut x = [T::zero(); N];
    for i in 0..N {
        let mut s = b[i];
        for k in 0..i {
            s = s - l[i][k] * x[k];
        }
        x[i] = s / l[i][i];
    }
    x
}

/// Solves `Lᵀ x = b` for lower-triangular `L`.
pub fn backward_sub_t<T: Scalar, const N: usize>(l: &Matrix<T, N>, b: &[T; N]) -> [T; N] {
    let mut x = [T::zero(); N];
    for i in (0..N).rev() {
        let mut s = b[i];
        for k in (i + 1)..N {
            s = s - l[k][i] * x[k];
        }
        x[i] = s / l[i][i];
    }
    x
}

/// Solves `A x = b` given the Cholesky factor of `A`.
pub fn chol_solve<T: Scalar, const N: usize>(l: &Matrix<T, N>, b: &[T; N]) -> [T; N] {
    backward_sub_t(l, &forward_sub(l, b))
}

/// `A⁻¹` from the Cholesky factor of `A`, symmetrized.
pub fn chol_inverse<T: Scalar, const N: usize>(l: &Matrix<T, N>) -> Matrix<T, N> {
    let mut inv = zeros::<T, N>();
    for j in 0..N {
        let mut e = [T::zero(); N];
        e[j] = T::one();
        let col = chol_solve(l, &e);
        for i in 0..N {
            inv[i][j] = col[i];
        }
    }
    symmetrize(&inv)
}

pub fn chol_log_det<T: Scalar, const N: usize>(l: &Matrix<T, N>) -> T {
    (0..N).fold(T::zero(), |acc, i| acc + l[i][i].ln()) * T::lit(2.0)
}

/// Gaussian elimination with partial pivoting. `None` when `a` is singular.
pub fn solve<T: Scalar, const N: usize>(a: &Matrix<T, N>, b: &[T; N]) -> Option<[T; N]> {
    let mut m = *a;
    let mut x = *b;
    for col in 0..N {
        let pivot = (col..N).max_by(|&i, &j| {
            m[i][col]
                .abs()
                .partial_cmp(&m[j][col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if m[pivot][col] == T::zero() || !m[pivot][col].is_finite() {
            return None;
        }
        m.swap(col, pivot);
        x.swap(col, pivot);
        for row in (col + 1)..N {
            let factor = m[row][col] / m[col][col];
            for k in col..N {
                m[row][k] = m[row][k] - factor * m[col][k];
            }
            x[row] = x[row] - factor * x[col];
        }
    }
    for i in (0..N).rev() {
        let mut s = x[i];
        for k in (i + 1)..N {
            s = s - m[i][k] * x[k];
        }
        x[i] = s / m[i][i];
    }
    Some(x)
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn sym_eigenvalues<T: Scalar, const N: usize>(a: &Matrix<T, N>) -> [T; N] {
    let mut m = symmetrize(a);
    for _sweep in 0..100 {
        let mut off = T::zero();
        for i in 0..N {
            for j in (i + 1)..N {
                off = off + m[i][j] * m[i][j];
            }
        }
        if off <= T::epsilon() * T::epsilon() * (T::one() + max_abs(&m).powi(2)) {
            break;
        }
        for p in 0..N {
            for q in (p + 1)..N {
                if m[p][q] == T::zero() {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (T::lit(2.0) * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..N {
                    let mkp = m[k][p];
                    let mkq = m[k][q];
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..N {
                    let mpk = m[p][k];
                    let mqk = m[q][k];
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut ev = diagonal(&m);
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    ev
}
