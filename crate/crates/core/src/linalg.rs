//! Small dense linear algebra: a cyclic Jacobi eigensolver for real symmetric
//! matrices, a thin SVD for two-row matrices, least squares, and 2×2 / 4×4
//! complex matrix helpers used by circuit synthesis.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use num_traits::Float;

use crate::error::{domain, Error, Result};

/// Row-major dense real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(domain!("expected {} entries for a {rows}x{cols} matrix, got {}", rows * cols, data.len()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
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

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    /// Square submatrix on the given row/column indices.
    pub fn submatrix(&self, indices: &[usize]) -> Self {
        let n = indices.len();
        let mut out = Self::zeros(n, n);
        for (a, &i) in indices.iter().enumerate() {
            for (b, &j) in indices.iter().enumerate() {
                out[(a, b)] = self[(i, j)];
            }
        }
        out
    }

    /// Largest `|a_ij − a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in 0..i {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()))
    }

    pub fn determinant(&self) -> f64 {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let n = self.rows;
        let mut a = self.data.clone();
        let mut det = 1.0;
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&x, &y| a[x * n + col].abs().total_cmp(&a[y * n + col].abs()))
                .unwrap_or(col);
            if a[pivot * n + col] == 0.0 {
                return 0.0;
            }
            if pivot != col {
                for k in 0..n {
                    a.swap(pivot * n + k, col * n + k);
                }
                det = -det;
            }
            let p = a[col * n + col];
            det *= p;
            for r in col + 1..n {
                let f = a[r * n + col] / p;
                for k in col..n {
                    a[r * n + k] -= f * a[col * n + k];
                }
            }
        }
        det
    }
}

impl core::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Eigenpairs of a real symmetric matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    /// Column `k` is the unit eigenvector for `values[k]`.
    pub vectors: Matrix,
}

impl SymmetricEigen {
    pub fn vector(&self, k: usize) -> Vec<f64> {
        self.vectors.column(k)
    }
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi rotations until the off-diagonal mass is below round-off.
pub fn symmetric_eigen(a: &Matrix) -> Result<SymmetricEigen> {
    if a.rows != a.cols {
        return Err(domain!("eigen decomposition needs a square matrix, got {}x{}", a.rows, a.cols));
    }
    let scale = a.data.iter().map(|x| x * x).sum::<f64>();
    if a.asymmetry() > 1e-12 * scale.sqrt().max(1.0) {
        return Err(domain!("matrix is not symmetric"));
    }
    let n = a.rows;
    let mut m = a.clone();
    let mut v = Matrix::identity(n);
    let threshold = 1e-30 * scale.max(f64::MIN_POSITIVE);
    let mut converged = n < 2;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|p| (p + 1..n).map(move |q| (p, q)))
            .map(|(p, q)| m[(p, q)] * m[(p, q)])
            .sum();
        if off <= threshold {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (m[(k, p)], m[(k, q)]);
                    m[(k, p)] = c * akp - s * akq;
                    m[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (m[(p, k)], m[(q, k)]);
                    m[(p, k)] = c * apk - s * aqk;
                    m[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::Fit(alloc::format!("Jacobi iteration did not converge in {JACOBI_MAX_SWEEPS} sweeps")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| m[(x, x)].total_cmp(&m[(y, y)]).then(x.cmp(&y)));
    let values = order.iter().map(|&k| m[(k, k)]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (new, &old) in order.iter().enumerate() {
        for i in 0..n {
            vectors[(i, new)] = v[(i, old)];
        }
    }
    Ok(SymmetricEigen { values, vectors })
}

/// Thin SVD `M = Σ_k σ_k u_k v_kᵀ` of a real matrix with two rows.
#[derive(Debug, Clone)]
pub struct TwoRowSvd {
    /// Left singular vectors as the columns of a 2×2 orthogonal matrix.
    pub u: Matrix,
    /// Singular values, descending.
    pub sigma: [f64; 2],
    /// Right singular vectors (each of length `cols`), orthonormal.
    pub v: [Vec<f64>; 2],
}

/// SVD of a 2×n matrix through the eigenpairs of `M Mᵀ`.
///
/// Ties in the singular values keep the eigensolver's index order; a zero
/// singular value gets a right vector completed by Gram-Schmidt.
pub fn svd_two_rows(m: &Matrix) -> Result<TwoRowSvd> {
    if m.rows != 2 || m.cols < 2 {
        return Err(domain!("two-row SVD expects a 2xn matrix with n >= 2, got {}x{}", m.rows, m.cols));
    }
    let gram = m.matmul(&m.transpose());
    let eig = symmetric_eigen(&gram)?;
    // descending singular values
    let order = [1usize, 0];
    let mut u = Matrix::zeros(2, 2);
    let mut sigma = [0.0; 2];
    for (k, &src) in order.iter().enumerate() {
        sigma[k] = eig.values[src].max(0.0).sqrt();
        u[(0, k)] = eig.vectors[(0, src)];
        u[(1, k)] = eig.vectors[(1, src)];
    }
    // the small singular value from Cauchy-Binet keeps full relative accuracy
    let gram_det: f64 = (0..m.cols)
        .flat_map(|i| (i + 1..m.cols).map(move |j| (i, j)))
        .map(|(i, j)| {
            let minor = m[(0, i)] * m[(1, j)] - m[(0, j)] * m[(1, i)];
            minor * minor
        })
        .sum();
    if sigma[0] > 0.0 {
        sigma[1] = gram_det.sqrt() / sigma[0];
    }
    let mt = m.transpose();
    let mut v: Vec<Vec<f64>> = Vec::with_capacity(2);
    for k in 0..2 {
        let uk = u.column(k);
        let mut vk: Vec<f64> = mt.matvec(&uk);
        for prev in &v {
            let overlap: f64 = prev.iter().zip(&vk).map(|(a, b)| a * b).sum();
            vk.iter_mut().zip(prev).for_each(|(x, p)| *x -= overlap * p);
        }
        let norm = vk.iter().map(|x| x * x).sum::<f64>().sqrt();
        if sigma[k] > 1e-13 && norm > 0.5 * sigma[k] {
            v.push(vk.into_iter().map(|x| x / norm).collect());
        } else {
            sigma[k] = 0.0;
            let completed = complete_orthonormal(&v, m.cols);
            v.push(completed[v.len()].clone());
        }
    }
    let v1 = v.pop().unwrap_or_default();
    let v0 = v.pop().unwrap_or_default();
    Ok(TwoRowSvd { u, sigma, v: [v0, v1] })
}

/// Extends an orthonormal set to a full orthonormal basis of `R^n` by
/// Gram-Schmidt over the standard basis vectors in index order.
pub fn complete_orthonormal(partial: &[Vec<f64>], n: usize) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = partial.to_vec();
    for e in 0..n {
        if basis.len() == n {
            break;
        }
        let mut candidate = vec![0.0; n];
        candidate[e] = 1.0;
        for _ in 0..2 {
            for b in &basis {
                let overlap: f64 = b.iter().zip(&candidate).map(|(x, y)| x * y).sum();
                for (c, x) in candidate.iter_mut().zip(b) {
                    *c -= overlap * x;
                }
            }
        }
        let norm = candidate.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            basis.push(candidate.into_iter().map(|x| x / norm).collect());
        }
    }
    basis
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
///
/// Returns `None` when a pivot falls below `1e-12` relative to the largest
/// entry of `A`.
pub fn solve(a: &Matrix, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.rows;
    assert_eq!(a.cols, n);
    assert_eq!(b.len(), n);
    let scale = a.data.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    if scale == 0.0 {
        return None;
    }
    let mut m = a.data.clone();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let pivot = (col..n).max_by(|&x, &y| m[x * n + col].abs().total_cmp(&m[y * n + col].abs()))?;
        if m[pivot * n + col].abs() < 1e-12 * scale {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                m.swap(pivot * n + k, col * n + k);
            }
            rhs.swap(pivot, col);
        }
        for r in col + 1..n {
            let f = m[r * n + col] / m[col * n + col];
            for k in col..n {
                m[r * n + k] -= f * m[col * n + k];
            }
            rhs[r] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let tail: f64 = (r + 1..n).map(|k| m[r * n + k] * x[k]).sum();
        x[r] = (rhs[r] - tail) / m[r * n + r];
    }
    Some(x)
}

/// Inverse of a small square matrix, `None` if singular.
pub fn inverse(a: &Matrix) -> Option<Matrix> {
    let n = a.rows;
    let mut inv = Matrix::zeros(n, n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let col = solve(a, &e)?;
        for i in 0..n {
            inv[(i, j)] = col[i];
        }
    }
    Some(inv)
}

/// Weighted linear least squares on a design matrix given row by row.
///
/// Returns the coefficients together with the linear map `C` such that
/// `coef = C y`; callers use `C` to propagate per-point uncertainties.
pub fn weighted_least_squares(design: &Matrix, y: &[f64], weights: &[f64]) -> Option<(Vec<f64>, Matrix)> {
    let (n, p) = (design.rows, design.cols);
    assert_eq!(y.len(), n);
    assert_eq!(weights.len(), n);
    let mut normal = Matrix::zeros(p, p);
    for i in 0..n {
        for a in 0..p {
            for b in 0..p {
                normal[(a, b)] += weights[i] * design[(i, a)] * design[(i, b)];
            }
        }
    }
    let normal_inv = inverse(&normal)?;
    // C = (XᵀWX)⁻¹ XᵀW
    let mut c = Matrix::zeros(p, n);
    for a in 0..p {
        for i in 0..n {
            c[(a, i)] = (0..p).map(|b| normal_inv[(a, b)] * design[(i, b)]).sum::<f64>() * weights[i];
        }
    }
    let coef = c.matvec(y);
    Some((coef, c))
}

pub type C64 = Complex64;

/// 2×2 complex matrix, row-major.
pub type Mat2 = [[C64; 2]; 2];
/// 4×4 complex matrix, row-major.
pub type Mat4 = [[C64; 4]; 4];

pub const fn c64(re: f64, im: f64) -> C64 {
    Complex64::new(re, im)
}

pub fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[c64(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn mat2_dagger(a: &Mat2) -> Mat2 {
    [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]]
}

pub fn mat2_identity() -> Mat2 {
    [[c64(1.0, 0.0), c64(0.0, 0.0)], [c64(0.0, 0.0), c64(1.0, 0.0)]]
}

pub fn mat4_mul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = [[c64(0.0, 0.0); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

pub fn mat4_dagger(a: &Mat4) -> Mat4 {
    let mut out = [[c64(0.0, 0.0); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = a[j][i].conj();
        }
    }
    out
}

/// `a ⊗ b` with `a` acting on the more significant qubit.
pub fn kron2(a: &Mat2, b: &Mat2) -> Mat4 {
    let mut out = [[c64(0.0, 0.0); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = a[i >> 1][j >> 1] * b[i & 1][j & 1];
        }
    }
    out
}

/// Splits a 4×4 matrix that is a tensor product into `(a, b)` with
/// `m = a ⊗ b`, both factors unitary when `m` is. Fails when the operator
/// Schmidt rank exceeds one beyond `tol`.
pub fn factor_kron(m: &Mat4, tol: f64) -> Result<(Mat2, Mat2)> {
    // reshuffled entry R[(i0 j0), (i1 j1)] = m[(i0 i1), (j0 j1)] = a[i0][j0] b[i1][j1]
    let entry = |i0: usize, j0: usize, i1: usize, j1: usize| m[(i0 << 1) | i1][(j0 << 1) | j1];
    let mut best = (0, 0, 0.0f64);
    for i1 in 0..2 {
        for j1 in 0..2 {
            let norm: f64 = (0..4).map(|k| entry(k >> 1, k & 1, i1, j1).norm_sqr()).sum();
            if norm > best.2 {
                best = (i1, j1, norm);
            }
        }
    }
    let (bi, bj, norm) = best;
    if norm == 0.0 {
        return Err(Error::Structure("cannot factor the zero matrix".into()));
    }
    let mut a = [[c64(0.0, 0.0); 2]; 2];
    for i0 in 0..2 {
        for j0 in 0..2 {
            a[i0][j0] = entry(i0, j0, bi, bj);
        }
    }
    // normalise a to unit determinant magnitude
    let det_a = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let scale = det_a.norm().sqrt();
    if scale == 0.0 {
        return Err(Error::Structure("singular tensor factor".into()));
    }
    for row in a.iter_mut() {
        for x in row.iter_mut() {
            *x /= scale;
        }
    }
    // b[i1][j1] = Σ conj(a[i0][j0]) m[(i0 i1), (j0 j1)] / Σ |a|²
    let a_norm: f64 = a.iter().flatten().map(|x| x.norm_sqr()).sum();
    let mut b = [[c64(0.0, 0.0); 2]; 2];
    for i1 in 0..2 {
        for j1 in 0..2 {
            let mut acc = c64(0.0, 0.0);
            for i0 in 0..2 {
                for j0 in 0..2 {
                    acc += a[i0][j0].conj() * entry(i0, j0, i1, j1);
                }
            }
            b[i1][j1] = acc / a_norm;
        }
    }
    let rebuilt = kron2(&a, &b);
    let err = (0..4)
        .flat_map(|i| (0..4).map(move |j| (i, j)))
        .fold(0.0f64, |acc, (i, j)| acc.max((rebuilt[i][j] - m[i][j]).norm()));
    if err > tol {
        return Err(Error::Structure(alloc::format!("matrix is not a tensor product (residual {err:.3e})")));
    }
    Ok((a, b))
}
