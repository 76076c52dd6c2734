//! Minimum-volume enclosing ellipsoid of a centrally symmetric sample set,
//! giving a Euclidean structure bi-Lipschitz to the sampled norm.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::jacobi_eigen;

/// Stopping tolerance on the relative duality gap of the ellipsoid iteration.
pub const JOHN_TOLERANCE: f64 = 1e-7;
const MAX_ITERATIONS: usize = 200_000;

/// Enclosing ellipsoid `{x : xᵀ Q x <= 1}` and the factor `f` with
/// `Q-ball ⊇ body ⊇ Q-ball / f`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EllipsoidCertificate {
    pub dim: usize,
    /// Row-major `dim x dim`.
    pub matrix: Vec<f64>,
    pub bilipschitz_factor: f64,
    pub iterations: usize,
}

impl EllipsoidCertificate {
    /// Quadratic form of the certificate.
    pub fn form(&self, x: &[f64]) -> f64 {
        let n = self.dim;
        (0..n).map(|i| (0..n).map(|j| x[i] * self.matrix[i * n + j] * x[j]).sum::<f64>()).sum()
    }
}

fn invert(a: &[f64], n: usize) -> Vec<f64> {
    jacobi_eigen(a, n).apply_fn(|l| 1.0 / l)
}

/// John ellipsoid of the symmetric hull of `samples`. Each point `p` is
/// used together with `-p`.
pub fn john_metric(samples: &[Vec<f64>]) -> Result<EllipsoidCertificate> {
    let n = samples.first().map(|p| p.len()).unwrap_or(0);
    if n == 0 || samples.iter().any(|p| p.len() != n) {
        return Err(Error::ShapeMismatch("samples must share a positive dimension".into()));
    }
    if samples.len() < 2 * n {
        return Err(Error::ShapeMismatch(format!("need at least {} samples, got {}", 2 * n, samples.len())));
    }
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(2 * samples.len());
    for p in samples {
        pts.push(p.clone());
        pts.push(p.iter().map(|v| -v).collect());
    }
    let m = pts.len();

    let mut scatter = vec![0.0; n * n];
    for p in &pts {
        for i in 0..n {
            for j in 0..n {
                scatter[i * n + j] += p[i] * p[j];
            }
        }
    }
    let e = jacobi_eigen(&scatter, n);
    let rank = e.values.iter().filter(|&&l| l > 1e-12 * e.max_abs()).count();
    if rank < n {
        return Err(Error::DegenerateBody { rank, dim: n });
    }

    // Khachiyan iteration with Todd–Yildirim away steps on the weights u.
    let mut u = vec![1.0 / m as f64; m];
    let nf = n as f64;
    let mut iterations = 0;
    let mut lev = vec![0.0; m];
    loop {
        let mut x = vec![0.0; n * n];
        for (p, &w) in pts.iter().zip(&u) {
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                for j in 0..n {
                    x[i * n + j] += w * p[i] * p[j];
                }
            }
        }
        let xinv = invert(&x, n);
        for (l, p) in lev.iter_mut().zip(&pts) {
            *l = (0..n).map(|i| (0..n).map(|j| p[i] * xinv[i * n + j] * p[j]).sum::<f64>()).sum();
        }
        let (jmax, &mmax) = lev.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
        let (jmin, &mmin) = lev
            .iter()
            .enumerate()
            .filter(|(k, _)| u[*k] > 0.0)
            .min_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        let gap_up = mmax / nf - 1.0;
        let gap_down = 1.0 - mmin / nf;
        if gap_up.max(gap_down) <= JOHN_TOLERANCE || iterations >= MAX_ITERATIONS {
            // Q = X⁻¹ / n, rescaled so every sample lies inside.
            let fit = mmax / nf;
            let q: Vec<f64> = xinv.iter().map(|v| v / (nf * fit)).collect();
            let factor = inner_factor(&pts, &q, n);
            return Ok(EllipsoidCertificate { dim: n, matrix: q, bilipschitz_factor: factor, iterations });
        }
        iterations += 1;
        if gap_up >= gap_down {
            let step = (mmax - nf) / (nf * (mmax - 1.0));
            u.iter_mut().for_each(|w| *w *= 1.0 - step);
            u[jmax] += step;
        } else {
            let uj = u[jmin];
            let mut step = (nf - mmin) / (nf * (mmin - 1.0));
            let max_step = uj / (1.0 - uj);
            if step > max_step {
                step = max_step;
            }
            u.iter_mut().for_each(|w| *w *= 1.0 + step);
            u[jmin] -= step;
            if u[jmin] < 1e-300 {
                u[jmin] = 0.0;
            }
        }
    }
}

/// `1 / inradius` of the symmetric hull after mapping the ellipsoid to the unit ball.
fn inner_factor(pts: &[Vec<f64>], q: &[f64], n: usize) -> f64 {
    let root = jacobi_eigen(q, n).apply_fn(|l| l.sqrt());
    let mapped: Vec<Vec<f64>> = pts
        .iter()
        .map(|p| (0..n).map(|i| (0..n).map(|j| root[i * n + j] * p[j]).sum()).collect())
        .collect();
    let inradius = if n == 2 { inradius_planar(&mapped) } else { inradius_facets(&mapped, n) };
    1.0 / inradius
}

fn inradius_planar(pts: &[Vec<f64>]) -> f64 {
    let mut p: Vec<(f64, f64)> = pts.iter().map(|v| (v[0], v[1])).collect();
    p.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let tol = 1e-12 * p.iter().fold(0.0f64, |a, q| a.max(q.0.abs()).max(q.1.abs()));
    p.dedup_by(|a, b| (a.0 - b.0).abs() <= tol && (a.1 - b.1).abs() <= tol);
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(2 * p.len());
    for pass in 0..2 {
        let floor = if pass == 0 { 2 } else { hull.len() + 1 };
        let seq: Box<dyn Iterator<Item = &(f64, f64)>> =
            if pass == 0 { Box::new(p.iter()) } else { Box::new(p.iter().rev().skip(1)) };
        for &pt in seq {
            while hull.len() >= floor && cross(hull[hull.len() - 2], hull[hull.len() - 1], pt) <= tol * tol {
                hull.pop();
            }
            hull.push(pt);
        }
    }
    hull.pop();
    let k = hull.len();
    (0..k)
        .map(|i| {
            let a = hull[i];
            let b = hull[(i + 1) % k];
            let len = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
            (a.0 * b.1 - a.1 * b.0).abs() / len
        })
        .fold(f64::INFINITY, f64::min)
}

/// Brute-force facet enumeration over `n`-subsets; fine for small sample sets.
fn inradius_facets(pts: &[Vec<f64>], n: usize) -> f64 {
    let m = pts.len();
    let mut best = f64::INFINITY;
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        if let Some((normal, offset)) = hyperplane(pts, &idx, n) {
            if offset > 0.0 {
                let support = pts
                    .iter()
                    .map(|p| p.iter().zip(&normal).map(|(a, b)| a * b).sum::<f64>().abs())
                    .fold(0.0, f64::max);
                if support <= offset * (1.0 + 1e-10) {
                    best = best.min(offset);
                }
            }
        }
        let mut k = n;
        loop {
            if k == 0 {
                return best;
            }
            k -= 1;
            if idx[k] < m - n + k {
                idx[k] += 1;
                for j in k + 1..n {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Unit normal `a` and offset `|aᵀx|` of the hyperplane through the selected points.
fn hyperplane(pts: &[Vec<f64>], idx: &[usize], n: usize) -> Option<(Vec<f64>, f64)> {
    let base = &pts[idx[0]];
    let rows: Vec<Vec<f64>> = idx[1..].iter().map(|&i| pts[i].iter().zip(base).map(|(a, b)| a - b).collect()).collect();
    // normal spans the null space of the (n-1) x n difference matrix
    let mut gram = vec![0.0; n * n];
    for r in &rows {
        for i in 0..n {
            for j in 0..n {
                gram[i * n + j] += r[i] * r[j];
            }
        }
    }
    let e = jacobi_eigen(&gram, n);
    let scale = e.max_abs();
    if e.values.len() > 1 && e.values[1] <= 1e-12 * scale {
        return None;
    }
    let normal: Vec<f64> = (0..n).map(|i| e.vectors[i * n]).collect();
    let offset = normal.iter().zip(base).map(|(a, b)| a * b).sum::<f64>().abs();
    Some((normal, offset))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn circle_points(k: usize, a: f64, b: f64) -> Vec<Vec<f64>> {
        (0..k).map(|i| {
            let t = PI * i as f64 / k as f64;
            vec![a * t.cos(), b * t.sin()]
        }).collect()
    }

    #[test]
    fn unit_circle_is_its_own_ellipsoid() {
        let c = john_metric(&circle_points(4000, 1.0, 1.0)).unwrap();
        assert!((c.matrix[0] - 1.0).abs() < 1e-6 && (c.matrix[3] - 1.0).abs() < 1e-6 && c.matrix[1].abs() < 1e-6);
        assert!((c.bilipschitz_factor - 1.0).abs() < 1e-6);
    }

    #[test]
    fn square_gives_sqrt_two() {
        let sq = vec![vec![1.0, 1.0], vec![1.0, -1.0], vec![-1.0, 1.0], vec![-1.0, -1.0]];
        let c = john_metric(&sq).unwrap();
        assert!((c.matrix[0] - 0.5).abs() < 1e-6 && (c.matrix[3] - 0.5).abs() < 1e-6);
        assert!((c.bilipschitz_factor - 2f64.sqrt()).abs() < 1e-6, "{c:?}");
    }

    #[test]
    fn cube_factor_within_sqrt_n() {
        let mut pts = Vec::new();
        for s in 0..8 {
            pts.push((0..3).map(|b| if s >> b & 1 == 1 { 1.0 } else { -1.0 }).collect());
        }
        let c = john_metric(&pts).unwrap();
        assert!((c.bilipschitz_factor - 3f64.sqrt()).abs() < 1e-6);
        for i in 0..3 {
            assert!((c.matrix[i * 3 + i] - 1.0 / 3.0).abs() < 1e-6);
        }
    }

    #[test]
    fn collinear_samples_degenerate() {
        let pts = vec![vec![1.0, 2.0], vec![2.0, 4.0], vec![-1.0, -2.0], vec![0.5, 1.0]];
        assert_eq!(john_metric(&pts).unwrap_err(), Error::DegenerateBody { rank: 1, dim: 2 });
    }

    #[test]
    fn ellipse_recovered() {
        let c = john_metric(&circle_points(4000, 2.0, 1.0)).unwrap();
        assert!((c.matrix[0] - 0.25).abs() < 1e-6 && (c.matrix[3] - 1.0).abs() < 1e-6 && c.matrix[1].abs() < 1e-6);
        assert!((c.bilipschitz_factor - 1.0).abs() < 1e-6);
    }

    #[test]
    fn affine_equivariance() {
        // Samples mapped by T give Q' = T⁻ᵀ Q T⁻¹.
        let decagon: Vec<Vec<f64>> = (0..5).map(|k| {
            let t = PI * k as f64 / 5.0 + 0.2;
            vec![t.cos(), 1.5 * t.sin()]
        }).collect();
        let t = [1.3, 0.4, -0.7, 0.9];
        let det = t[0] * t[3] - t[1] * t[2];
        let tinv = [t[3] / det, -t[1] / det, -t[2] / det, t[0] / det];
        let mapped: Vec<Vec<f64>> = decagon.iter().map(|p| vec![t[0] * p[0] + t[1] * p[1], t[2] * p[0] + t[3] * p[1]]).collect();
        let q = john_metric(&decagon).unwrap();
        let qm = john_metric(&mapped).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let mut want = 0.0;
                for a in 0..2 {
                    for b in 0..2 {
                        want += tinv[a * 2 + i] * q.matrix[a * 2 + b] * tinv[b * 2 + j];
                    }
                }
                assert!((qm.matrix[i * 2 + j] - want).abs() < 1e-5, "{i}{j}: {} vs {want}", qm.matrix[i * 2 + j]);
            }
        }
        assert!((q.bilipschitz_factor - qm.bilipschitz_factor).abs() < 1e-5);
    }
}
