//! Dense linear algebra used across the crate: a cyclic Jacobi eigensolver
//! for the small nodewise forms, generalized symmetric eigenproblems on
//! assembled operators, conjugate gradients and tridiagonal inertia counts.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Eigen-decomposition of a small symmetric matrix (row-major `n x n`).
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub n: usize,
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// Row-major; column `k` is the eigenvector of `values[k]`.
    pub vectors: Vec<f64>,
}

/// Cyclic Jacobi rotations. The input is read as its symmetric part.
pub fn jacobi_eigen(a: &[f64], n: usize) -> SymEigen {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            m[i * n + j] = 0.5 * (a[i * n + j] + a[j * n + i]);
        }
    }
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale: f64 = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    for _sweep in 0..64 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j] * m[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-17 * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| m[a * n + a].total_cmp(&m[b * n + b]));
    let values = order.iter().map(|&k| m[k * n + k]).collect();
    let mut vectors = vec![0.0; n * n];
    for (new, &old) in order.iter().enumerate() {
        for r in 0..n {
            vectors[r * n + new] = v[r * n + old];
        }
    }
    SymEigen { n, values, vectors }
}

impl SymEigen {
    /// `V f(Λ) Vᵀ` as a row-major matrix.
    pub fn apply_fn(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        let n = self.n;
        let fl: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = (0..n).map(|k| self.vectors[i * n + k] * fl[k] * self.vectors[j * n + k]).sum();
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min_abs(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()))
    }
}

/// Relative asymmetry `max|A - Aᵀ| / max|A|` of a row-major matrix.
pub fn asymmetry(a: &[f64], n: usize) -> f64 {
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut d = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            d = d.max((a[i * n + j] - a[j * n + i]).abs());
        }
    }
    if scale == 0.0 {
        0.0
    } else {
        d / scale
    }
}

/// Eigenvalues of the pencil `K v = λ M v` with `M` symmetric positive definite.
pub fn generalized_eigenvalues(k: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = k.nrows();
    if k.ncols() != n || m.nrows() != n || m.ncols() != n {
        return Err(Error::EigensolveFailure("pencil dimensions disagree".into()));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::EigensolveFailure("mass matrix is not positive definite".into()))?;
    let l = chol.l();
    // C = L⁻¹ K L⁻ᵀ
    let y = l
        .solve_lower_triangular(k)
        .ok_or_else(|| Error::EigensolveFailure("triangular solve failed".into()))?;
    let c = l
        .solve_lower_triangular(&y.transpose())
        .ok_or_else(|| Error::EigensolveFailure("triangular solve failed".into()))?;
    let c = (&c + c.transpose()) * 0.5;
    let mut vals: Vec<f64> = c.symmetric_eigenvalues().iter().cloned().collect();
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigensolveFailure("non-finite eigenvalue".into()));
    }
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

/// Eigenpairs of the pencil `K v = λ M v`, ascending, with `M`-orthonormal
/// eigenvectors as columns.
pub fn generalized_eigen(k: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = k.nrows();
    if k.ncols() != n || m.nrows() != n || m.ncols() != n {
        return Err(Error::EigensolveFailure("pencil dimensions disagree".into()));
    }
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::EigensolveFailure("mass matrix is not positive definite".into()))?;
    let l = chol.l();
    let y = l
        .solve_lower_triangular(k)
        .ok_or_else(|| Error::EigensolveFailure("triangular solve failed".into()))?;
    let c = l
        .solve_lower_triangular(&y.transpose())
        .ok_or_else(|| Error::EigensolveFailure("triangular solve failed".into()))?;
    let c = (&c + c.transpose()) * 0.5;
    let eig = c.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigensolveFailure("non-finite eigenvalue".into()));
    }
    let w = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    let v = l
        .transpose()
        .solve_upper_triangular(&w)
        .ok_or_else(|| Error::EigensolveFailure("triangular solve failed".into()))?;
    Ok((vals, v))
}

/// Result of a conjugate-gradient solve.
#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Conjugate gradients for a symmetric positive semidefinite operator with a
/// consistent right-hand side, started from zero.
pub fn conjugate_gradient(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<CgOutcome> {
    let n = b.len();
    let bnorm = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(CgOutcome { x, iterations: 0, relative_residual: 0.0 });
    }
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    for it in 1..=max_iter {
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::SolverNonconvergence { iterations: it, residual: rr.sqrt() / bnorm });
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        if rr_new.sqrt() <= rel_tol * bnorm {
            return Ok(CgOutcome { x, iterations: it, relative_residual: rr_new.sqrt() / bnorm });
        }
        let beta = rr_new / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
    }
    Err(Error::SolverNonconvergence { iterations: max_iter, residual: rr.sqrt() / bnorm })
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Number of eigenvalues below `tau` of the symmetric tridiagonal matrix
/// with diagonal `d` and off-diagonal `e` (Sturm sequence / LDLᵀ inertia).
pub fn tridiagonal_count_below(d: &[f64], e: &[f64], tau: f64) -> usize {
    let n = d.len();
    debug_assert!(e.len() + 1 == n || n == 0);
    let scale = d.iter().chain(e).fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let pivmin = f64::EPSILON * scale * 1e-3;
    let mut count = 0;
    let mut q = 0.0;
    for i in 0..n {
        q = if i == 0 { d[0] - tau } else { d[i] - tau - e[i - 1] * e[i - 1] / q };
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

pub fn to_dmatrix(rows: usize, cols: usize, row_major: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(rows, cols, row_major)
}

pub fn solve_spd(m: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::EigensolveFailure("matrix is not positive definite".into()))?;
    Ok(chol.solve(b))
}

pub fn dvector(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}
