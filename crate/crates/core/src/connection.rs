//! Levi–Civita data of a metric on a chart.
//!
//! Index conventions: `gamma[k][i][j] = Γ^k_{ij}`; the Riemann tensor is
//! stored as `R^l_{ijk}` with `R(∂_j, ∂_k) ∂_i = R^l_{ijk} ∂_l`, so that
//!
//! ```text
//! R^l_{ijk} = ∂_j Γ^l_{ki} − ∂_k Γ^l_{ji} + Γ^l_{jm} Γ^m_{ki} − Γ^l_{km} Γ^m_{ji}
//! Ric_{ij}  = R^k_{ikj},   Scal = g^{ij} Ric_{ij}
//! ```
//!
//! With these signs the unit sphere has `Ric = g` and `Scal = 2`.
//!
//! Numerically the lowered tensor is assembled from mixed second derivatives
//! of `g` plus quadratic Christoffel terms. This is the same expression
//! expanded, but the discrete version keeps every algebraic symmetry exact
//! and never differentiates `g^{-1}`, which matters near coordinate
//! singularities such as the poles of a spherical chart.

use std::sync::Arc;

use serde::Serialize;

use crate::cone::MetricField;
use crate::error::{Error, Result};
use crate::grid::{diff_raw, same_chart, Chart, ScalarField, Scheme, TensorField};
use crate::linalg::jacobi_eigen;

/// Nodewise inverse metric, volume density and condition numbers.
#[derive(Debug, Clone)]
pub struct InverseMetric {
    pub n: usize,
    /// `n x n` per node.
    pub ginv: Vec<f64>,
    /// `sqrt|det g|` per node.
    pub volume: Vec<f64>,
    /// Largest nodewise condition number `max|λ| / min|λ|`.
    pub max_condition: f64,
}

pub fn inverse_metric(g: &MetricField) -> Result<InverseMetric> {
    let n = g.dim();
    let len = g.chart().len();
    let mut ginv = vec![0.0; len * n * n];
    let mut volume = vec![0.0; len];
    let mut max_condition: f64 = 1.0;
    for node in 0..len {
        let e = jacobi_eigen(g.at(node), n);
        let (lo, hi) = (e.min_abs(), e.max_abs());
        if lo <= g.eig_tolerance() * hi {
            return Err(Error::SingularMetric { node, condition: if lo == 0.0 { f64::INFINITY } else { hi / lo } });
        }
        max_condition = max_condition.max(hi / lo);
        ginv[node * n * n..(node + 1) * n * n].copy_from_slice(&e.apply_fn(|l| 1.0 / l));
        volume[node] = e.values.iter().map(|l| l.abs()).product::<f64>().sqrt();
    }
    Ok(InverseMetric { n, ginv, volume, max_condition })
}

/// Christoffel symbols of the second kind.
#[derive(Debug, Clone)]
pub struct ConnectionCoeffs {
    chart: Arc<Chart>,
    n: usize,
    gamma: Vec<f64>,
}

impl ConnectionCoeffs {
    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `Γ^k_{ij}` at a node.
    pub fn get(&self, node: usize, k: usize, i: usize, j: usize) -> f64 {
        let n = self.n;
        self.gamma[node * n * n * n + (k * n + i) * n + j]
    }

    /// All `n^3` coefficients at a node, ordered `(k, i, j)`.
    pub fn at(&self, node: usize) -> &[f64] {
        let c = self.n * self.n * self.n;
        &self.gamma[node * c..(node + 1) * c]
    }

    pub fn raw(&self) -> &[f64] {
        &self.gamma
    }

    /// Largest `|Γ^k_{ij} - Γ^k_{ji}|`; zero by construction.
    pub fn torsion(&self) -> f64 {
        let n = self.n;
        let mut t = 0.0f64;
        for block in self.gamma.chunks(n * n * n) {
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        t = t.max((block[(k * n + i) * n + j] - block[(k * n + j) * n + i]).abs());
                    }
                }
            }
        }
        t
    }
}

/// `Γ^k_{ij} = ½ g^{kl}(∂_i g_{jl} + ∂_j g_{il} − ∂_l g_{ij})`.
pub fn christoffel(g: &MetricField) -> Result<ConnectionCoeffs> {
    let inv = inverse_metric(g)?;
    christoffel_with(g, &inv)
}

pub(crate) fn christoffel_with(g: &MetricField, inv: &InverseMetric) -> Result<ConnectionCoeffs> {
    let chart = g.chart();
    let n = g.dim();
    let nn = n * n;
    let dg: Vec<Vec<f64>> = (0..n)
        .map(|a| diff_raw(chart, g.components().data(), nn, a, g.scheme()))
        .collect::<Result<_>>()?;
    let len = chart.len();
    let mut gamma = vec![0.0; len * n * nn];
    let mut first = vec![0.0; n * nn];
    for node in 0..len {
        let d = |a: usize, i: usize, j: usize| dg[a][node * nn + i * n + j];
        // Γ_{l,ij}
        for l in 0..n {
            for i in 0..n {
                for j in i..n {
                    let v = 0.5 * (d(i, j, l) + d(j, i, l) - d(l, i, j));
                    first[(l * n + i) * n + j] = v;
                    first[(l * n + j) * n + i] = v;
                }
            }
        }
        let ginv = &inv.ginv[node * nn..(node + 1) * nn];
        let out = &mut gamma[node * n * nn..(node + 1) * n * nn];
        for k in 0..n {
            for i in 0..n {
                for j in i..n {
                    let v: f64 = (0..n).map(|l| ginv[k * n + l] * first[(l * n + i) * n + j]).sum();
                    out[(k * n + i) * n + j] = v;
                    out[(k * n + j) * n + i] = v;
                }
            }
        }
    }
    Ok(ConnectionCoeffs { chart: chart.clone(), n, gamma })
}

/// Riemann, Ricci and scalar curvature plus the volume density of one metric.
#[derive(Debug, Clone)]
pub struct CurvatureData {
    chart: Arc<Chart>,
    n: usize,
    riemann: Vec<f64>,
    pub ricci: TensorField,
    pub scalar: ScalarField,
    pub volume_density: ScalarField,
    /// Largest `|Ric_{ij} - Ric_{ji}|` of the raw contraction before symmetrization.
    pub ricci_asymmetry: f64,
}

impl CurvatureData {
    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `R^l_{ijk}` at a node.
    pub fn riemann(&self, node: usize, l: usize, i: usize, j: usize, k: usize) -> f64 {
        let n = self.n;
        self.riemann[node * n * n * n * n + ((l * n + i) * n + j) * n + k]
    }

    pub fn riemann_raw(&self) -> &[f64] {
        &self.riemann
    }

    /// `R_{lijk} = g_{lm} R^m_{ijk}` as a (0,4) field.
    pub fn lowered(&self, g: &MetricField) -> TensorField {
        let n = self.n;
        let n4 = n * n * n * n;
        let n3 = n * n * n;
        let mut data = vec![0.0; self.chart.len() * n4];
        for node in 0..self.chart.len() {
            let gm = g.at(node);
            let r = &self.riemann[node * n4..(node + 1) * n4];
            let out = &mut data[node * n4..(node + 1) * n4];
            for l in 0..n {
                for rest in 0..n3 {
                    out[l * n3 + rest] = (0..n).map(|m| gm[l * n + m] * r[m * n3 + rest]).sum();
                }
            }
        }
        TensorField::from_raw(self.chart.clone(), 0, 4, false, data)
    }

    /// Algebraic-identity defects, relative to `max(sup|R_{lijk}|, 1)`.
    pub fn symmetry_residuals(&self, g: &MetricField) -> SymmetryResiduals {
        let n = self.n;
        let low = self.lowered(g);
        let scale = low.max_abs().max(1.0);
        let mut anti_first = 0.0f64;
        let mut anti_second = 0.0f64;
        let mut pair = 0.0f64;
        let mut bianchi = 0.0f64;
        let mut contraction = 0.0f64;
        let idx = |l: usize, i: usize, j: usize, k: usize| ((l * n + i) * n + j) * n + k;
        for node in 0..self.chart.len() {
            let r = low.at(node);
            for l in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            anti_first = anti_first.max((r[idx(l, i, j, k)] + r[idx(i, l, j, k)]).abs());
                            anti_second = anti_second.max((r[idx(l, i, j, k)] + r[idx(l, i, k, j)]).abs());
                            pair = pair.max((r[idx(l, i, j, k)] - r[idx(j, k, l, i)]).abs());
                            let up = |a, b, c| self.riemann(node, l, a, b, c);
                            bianchi = bianchi.max((up(i, j, k) + up(j, k, i) + up(k, i, j)).abs());
                        }
                    }
                }
            }
            for i in 0..n {
                for j in 0..n {
                    let raw: f64 = (0..n).map(|k| self.riemann(node, k, i, k, j)).sum();
                    let raw_t: f64 = (0..n).map(|k| self.riemann(node, k, j, k, i)).sum();
                    let stored = self.ricci.at(node)[i * n + j];
                    contraction = contraction.max((0.5 * (raw + raw_t) - stored).abs());
                }
            }
        }
        SymmetryResiduals {
            antisymmetry_first_pair: anti_first / scale,
            antisymmetry_second_pair: anti_second / scale,
            pair_symmetry: pair / scale,
            first_bianchi: bianchi / scale,
            ricci_contraction: contraction,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymmetryResiduals {
    pub antisymmetry_first_pair: f64,
    pub antisymmetry_second_pair: f64,
    pub pair_symmetry: f64,
    pub first_bianchi: f64,
    pub ricci_contraction: f64,
}

impl SymmetryResiduals {
    pub fn max(&self) -> f64 {
        self.antisymmetry_first_pair
            .max(self.antisymmetry_second_pair)
            .max(self.pair_symmetry)
            .max(self.first_bianchi)
            .max(self.ricci_contraction)
    }
}

pub fn curvature(g: &MetricField) -> Result<CurvatureData> {
    let inv = inverse_metric(g)?;
    let conn = christoffel_with(g, &inv)?;
    curvature_with(g, &inv, &conn)
}

pub(crate) fn curvature_with(g: &MetricField, inv: &InverseMetric, conn: &ConnectionCoeffs) -> Result<CurvatureData> {
    let chart = g.chart();
    let n = g.dim();
    let nn = n * n;
    let n3 = nn * n;
    let n4 = n3 * n;
    let len = chart.len();
    // Mixed second derivatives ∂_a∂_b g, computed once per unordered pair so
    // that they commute exactly.
    let first: Vec<Vec<f64>> =
        (0..n).map(|a| diff_raw(chart, g.components().data(), nn, a, g.scheme())).collect::<Result<_>>()?;
    let mut second: Vec<Vec<f64>> = vec![Vec::new(); nn];
    for a in 0..n {
        for b in a..n {
            second[a * n + b] = diff_raw(chart, &first[b], nn, a, g.scheme())?;
        }
    }
    let dd = |node: usize, a: usize, b: usize, i: usize, j: usize| {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        second[a * n + b][node * nn + i * n + j]
    };
    let mut riemann = vec![0.0; len * n4];
    let mut lowered = vec![0.0; n4];
    let mut ricci = vec![0.0; len * nn];
    let mut scalar = vec![0.0; len];
    let mut asym = 0.0f64;
    for node in 0..len {
        let gam = conn.at(node);
        let gm = |k: usize, i: usize, j: usize| gam[(k * n + i) * n + j];
        let gmat = g.at(node);
        // R_{lijk} = ½(∂_j∂_i g_{lk} + ∂_k∂_l g_{ij} − ∂_k∂_i g_{lj} − ∂_j∂_l g_{ik})
        //          + g_{pq}(Γ^p_{ij} Γ^q_{lk} − Γ^p_{ik} Γ^q_{lj})
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let lin = 0.5 * (dd(node, j, i, l, k) + dd(node, k, l, i, j) - dd(node, k, i, l, j) - dd(node, j, l, i, k));
                        let mut quad = 0.0;
                        for p in 0..n {
                            for q in 0..n {
                                quad += gmat[p * n + q] * (gm(p, i, j) * gm(q, l, k) - gm(p, i, k) * gm(q, l, j));
                            }
                        }
                        lowered[((l * n + i) * n + j) * n + k] = lin + quad;
                    }
                }
            }
        }
        let ginv = &inv.ginv[node * nn..(node + 1) * nn];
        let r = &mut riemann[node * n4..(node + 1) * n4];
        for l in 0..n {
            for rest in 0..n3 {
                r[l * n3 + rest] = (0..n).map(|m| ginv[l * n + m] * lowered[m * n3 + rest]).sum();
            }
        }
        let ric = &mut ricci[node * nn..(node + 1) * nn];
        for i in 0..n {
            for j in 0..n {
                ric[i * n + j] = (0..n).map(|k| r[((k * n + i) * n + k) * n + j]).sum();
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                asym = asym.max((ric[i * n + j] - ric[j * n + i]).abs());
                let m = 0.5 * (ric[i * n + j] + ric[j * n + i]);
                ric[i * n + j] = m;
                ric[j * n + i] = m;
            }
        }
        scalar[node] = (0..nn).map(|a| ginv[a] * ric[a]).sum();
    }
    Ok(CurvatureData {
        chart: chart.clone(),
        n,
        riemann,
        ricci: TensorField::from_raw(chart.clone(), 0, 2, true, ricci),
        scalar: ScalarField::from_raw(chart.clone(), scalar),
        volume_density: ScalarField::from_raw(chart.clone(), inv.volume.clone()),
        ricci_asymmetry: asym,
    })
}

/// Covariant derivative of a purely covariant tensor; the derivative
/// direction is appended as the last slot:
/// `(∇T)_{a_1..a_r b} = ∂_b T_{a..} − Σ_s Γ^c_{b a_s} T_{a_1..c..a_r}`.
pub fn covariant_derivative(t: &TensorField, conn: &ConnectionCoeffs, scheme: Scheme) -> Result<TensorField> {
    same_chart(t.chart(), conn.chart())?;
    if t.contravariant() != 0 {
        return Err(Error::Unsupported("covariant derivative implemented for covariant tensors".into()));
    }
    let chart = t.chart();
    let n = chart.dim();
    let r = t.covariant();
    let comps = t.components();
    let partial = t.partial_gradient(scheme)?;
    let mut data = partial.into_data();
    let mut idx = vec![0usize; r];
    for node in 0..chart.len() {
        let tb = t.at(node);
        let gam = conn.at(node);
        for flat in 0..comps {
            let mut rem = flat;
            for s in (0..r).rev() {
                idx[s] = rem % n;
                rem /= n;
            }
            for b in 0..n {
                let mut corr = 0.0;
                for s in 0..r {
                    let stride = n.pow((r - 1 - s) as u32);
                    let base = flat - idx[s] * stride;
                    for c in 0..n {
                        corr += gam[(c * n + b) * n + idx[s]] * tb[base + c * stride];
                    }
                }
                data[(node * comps + flat) * n + b] -= corr;
            }
        }
    }
    Ok(TensorField::from_raw(chart.clone(), 0, r + 1, false, data))
}

/// Pointwise `|T|_g^2` of a covariant tensor, all slots raised with `g^{-1}`.
pub fn tensor_norm_sq(t: &TensorField, inv: &InverseMetric) -> Vec<f64> {
    let n = inv.n;
    let r = t.covariant();
    let comps = t.components();
    let mut out = vec![0.0; t.chart().len()];
    let mut buf = vec![0.0; comps];
    let mut tmp = vec![0.0; comps];
    for (node, o) in out.iter_mut().enumerate() {
        let tb = t.at(node);
        let ginv = &inv.ginv[node * n * n..(node + 1) * n * n];
        buf.copy_from_slice(tb);
        for s in 0..r {
            let stride = n.pow((r - 1 - s) as u32);
            for (flat, v) in tmp.iter_mut().enumerate() {
                let a = (flat / stride) % n;
                let base = flat - a * stride;
                *v = (0..n).map(|c| ginv[a * n + c] * buf[base + c * stride]).sum();
            }
            std::mem::swap(&mut buf, &mut tmp);
        }
        *o = buf.iter().zip(tb).map(|(x, y)| x * y).sum();
    }
    out
}

/// Sup of `|∇_k g_{ij}|` relative to sup `|g|`.
pub fn metric_compatibility_residual(g: &MetricField) -> Result<f64> {
    let conn = christoffel(g)?;
    let dg = covariant_derivative(g.components(), &conn, g.scheme())?;
    Ok(dg.max_abs() / g.components().max_abs())
}

/// A map between charts sampled on the domain grid, with its Jacobian
/// `∂φ^a/∂x^i` stored row-major per node.
#[derive(Debug, Clone)]
pub struct SampledMap {
    pub domain: Arc<Chart>,
    pub images: Vec<f64>,
    pub jacobian: Vec<f64>,
    pub target_dim: usize,
}

impl SampledMap {
    pub fn from_fn(
        domain: &Arc<Chart>,
        target_dim: usize,
        phi: impl Fn(&[f64]) -> Vec<f64>,
        jac: impl Fn(&[f64]) -> Vec<f64>,
    ) -> SampledMap {
        let mut images = Vec::with_capacity(domain.len() * target_dim);
        let mut jacobian = Vec::with_capacity(domain.len() * target_dim * domain.dim());
        for node in 0..domain.len() {
            let x = domain.node_coords(node);
            images.extend(phi(&x));
            jacobian.extend(jac(&x));
        }
        SampledMap { domain: domain.clone(), images, jacobian, target_dim }
    }

    /// Translation `x ↦ x + c` on a chart mapping to itself.
    pub fn translation(chart: &Arc<Chart>, c: &[f64]) -> SampledMap {
        let n = chart.dim();
        let c = c.to_vec();
        SampledMap::from_fn(
            chart,
            n,
            move |x| x.iter().zip(&c).map(|(a, b)| a + b).collect(),
            move |_| {
                let mut j = vec![0.0; n * n];
                for i in 0..n {
                    j[i * n + i] = 1.0;
                }
                j
            },
        )
    }

    pub fn image(&self, node: usize) -> &[f64] {
        &self.images[node * self.target_dim..(node + 1) * self.target_dim]
    }
}

/// `(φ*g)_{ij}(x) = ∂_iφ^a ∂_jφ^b g_{ab}(φ(x))`, with `g` sampled at `φ(x)`
/// by multilinear interpolation.
pub fn pullback_metric(g: &MetricField, map: &SampledMap) -> Result<MetricField> {
    let m = g.dim();
    if map.target_dim != m {
        return Err(Error::ShapeMismatch("map target dimension differs from the metric".into()));
    }
    let target = g.chart();
    let n = map.domain.dim();
    let mut data = vec![0.0; map.domain.len() * n * n];
    let mut gx = vec![0.0; m * m];
    for node in 0..map.domain.len() {
        let stencil = target.interpolation_stencil(map.image(node)).ok_or(Error::MapsOutsideChart { node })?;
        gx.iter_mut().for_each(|v| *v = 0.0);
        for (tn, w) in stencil {
            for (acc, v) in gx.iter_mut().zip(g.at(tn)) {
                *acc += w * v;
            }
        }
        let jac = &map.jacobian[node * m * n..(node + 1) * m * n];
        if n == m {
            let det = crate::linalg::to_dmatrix(n, n, jac).determinant();
            let scale = jac.iter().fold(0.0f64, |a, v| a.max(v.abs())).powi(n as i32);
            if det.abs() <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
                return Err(Error::SingularJacobian { node });
            }
        }
        let out = &mut data[node * n * n..(node + 1) * n * n];
        for i in 0..n {
            for j in i..n {
                let mut v = 0.0;
                for a in 0..m {
                    for b in 0..m {
                        v += jac[a * n + i] * jac[b * n + j] * gx[a * m + b];
                    }
                }
                out[i * n + j] = v;
                out[j * n + i] = v;
            }
        }
    }
    let t = TensorField::from_raw(map.domain.clone(), 0, 2, true, data);
    let scheme = if g.scheme() == Scheme::Spectral && !map.domain.fully_periodic() { Scheme::Central4 } else { g.scheme() };
    Ok(MetricField::with_tolerance(t, g.declared_inertia(), g.eig_tolerance())?.with_scheme(scheme))
}

/// Sup-norms of `∇^k Riem` for `k = 0..=m`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundedGeometryReport {
    /// `sup |∇^k Riem|_g`, index `k`.
    pub sup_norms: Vec<f64>,
    /// In dimension two: `sup |K|` of the Gaussian curvature.
    pub sup_gauss_curvature: Option<f64>,
}

pub fn bounded_geometry_report(g: &MetricField, m: usize) -> Result<BoundedGeometryReport> {
    if m > 2 {
        return Err(Error::Unsupported(format!("derivative order {m} exceeds the supported 2")));
    }
    let inv = inverse_metric(g)?;
    let conn = christoffel_with(g, &inv)?;
    let curv = curvature_with(g, &inv, &conn)?;
    let mut t = curv.lowered(g);
    let mut sup_norms = Vec::with_capacity(m + 1);
    for k in 0..=m {
        if k > 0 {
            t = covariant_derivative(&t, &conn, g.scheme())?;
        }
        let sup = tensor_norm_sq(&t, &inv).iter().fold(0.0f64, |a, v| a.max(v.abs())).sqrt();
        sup_norms.push(sup);
    }
    let sup_gauss_curvature = (g.dim() == 2).then(|| 0.5 * curv.scalar.max_abs());
    Ok(BoundedGeometryReport { sup_norms, sup_gauss_curvature })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;
    use std::f64::consts::PI;

    #[test]
    fn euclidean_christoffels_vanish() {
        let chart = Arc::new(Chart::new(2, &[(0.0, 1.0), (0.0, 2.0)], &[12, 16], &[false, false]).unwrap());
        let g = models::euclidean(&chart).unwrap();
        let c = christoffel(&g).unwrap();
        assert!(c.raw().iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn polar_christoffels() {
        let g = models::polar_plane(0.5, 2.0, 64, 32).unwrap();
        let c = christoffel(&g).unwrap();
        let chart = g.chart();
        let mut err = 0.0f64;
        for node in 0..chart.len() {
            let r = chart.node_coords(node)[0];
            err = err.max((c.get(node, 0, 1, 1) + r).abs());
            err = err.max((c.get(node, 1, 0, 1) - 1.0 / r).abs());
            err = err.max((c.get(node, 1, 1, 0) - 1.0 / r).abs());
        }
        assert!(err < 1e-6, "err = {err}");
        assert_eq!(c.torsion(), 0.0);
    }

    #[test]
    fn sphere_christoffel() {
        let n = 128;
        let g = models::round_sphere(n, 64, models::sphere_delta(n)).unwrap();
        let c = christoffel(&g).unwrap();
        let chart = g.chart();
        let err = (0..chart.len())
            .map(|node| {
                let th = chart.node_coords(node)[0];
                (c.get(node, 0, 1, 1) + th.sin() * th.cos()).abs()
            })
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "err = {err}");
    }

    #[test]
    fn sphere_scalar_and_riemann_norm() {
        let g = models::round_sphere(256, 16, 0.5).unwrap();
        let k = curvature(&g).unwrap();
        let err = k.scalar.values().iter().map(|s| (s - 2.0).abs()).fold(0.0, f64::max);
        assert!(err < 1e-4, "err = {err}");
        assert!(k.symmetry_residuals(&g).max() < 1e-12);
        let rep = bounded_geometry_report(&g, 0).unwrap();
        assert!((rep.sup_norms[0] - 2.0).abs() < 1e-3, "{rep:?}");
    }

    #[test]
    fn flat_torus_curvature_vanishes() {
        let g = models::flat_torus(16).unwrap();
        let k = curvature(&g).unwrap();
        assert!(k.scalar.max_abs() < 1e-10);
    }

    #[test]
    fn half_plane_scalar() {
        let g = models::half_plane(8, 512).unwrap();
        let k = curvature(&g).unwrap();
        let err = k.scalar.values().iter().map(|s| (s + 2.0).abs()).fold(0.0, f64::max);
        assert!(err < 1e-5, "err = {err}");
        assert!(k.symmetry_residuals(&g).max() < 1e-6);
    }

    #[test]
    fn bumpy_torus_identities() {
        let g = models::bumpy_torus(32, 0.3).unwrap();
        let k = curvature(&g).unwrap();
        let res = k.symmetry_residuals(&g);
        assert!(res.max() < 1e-6, "{res:?}");
        assert!(metric_compatibility_residual(&g).unwrap() < 1e-6);
    }

    #[test]
    fn translation_pullback_identity() {
        let g = models::bumpy_torus(16, 0.2).unwrap();
        let id = SampledMap::translation(g.chart(), &[0.0, 0.0]);
        let p = pullback_metric(&g, &id).unwrap();
        let d = p.components().lin_comb(1.0, g.components(), -1.0).unwrap().max_abs();
        assert!(d < 1e-12);
    }

    #[test]
    fn dilation_pullback() {
        let target = Arc::new(Chart::new(2, &[(-4.0, 4.0), (-4.0, 4.0)], &[17, 17], &[false, false]).unwrap());
        let domain = Arc::new(Chart::new(2, &[(-1.0, 1.0), (-1.0, 1.0)], &[9, 9], &[false, false]).unwrap());
        let g = models::euclidean(&target).unwrap();
        let map = SampledMap::from_fn(&domain, 2, |x| vec![3.0 * x[0], 3.0 * x[1]], |_| vec![3.0, 0.0, 0.0, 3.0]);
        let p = pullback_metric(&g, &map).unwrap();
        for node in 0..domain.len() {
            let b = p.at(node);
            assert!((b[0] - 9.0).abs() < 1e-12 && b[1].abs() < 1e-12 && (b[3] - 9.0).abs() < 1e-12);
        }
        let far = SampledMap::from_fn(&domain, 2, |x| vec![5.0 * x[0], x[1]], |_| vec![5.0, 0.0, 0.0, 1.0]);
        assert!(matches!(pullback_metric(&g, &far), Err(Error::MapsOutsideChart { .. })));
        let flat = SampledMap::from_fn(&domain, 2, |x| vec![x[0], 0.0], |_| vec![1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(pullback_metric(&g, &flat), Err(Error::SingularJacobian { .. })));
    }

    #[test]
    fn curvature_is_natural_under_translation() {
        let n = 32;
        let g = models::bumpy_torus(n, 0.3).unwrap();
        let h = 2.0 * PI / n as f64;
        let shift = 5.0 * h;
        let p = pullback_metric(&g, &SampledMap::translation(g.chart(), &[shift, 0.0])).unwrap();
        let s0 = curvature(&g).unwrap().scalar;
        let s1 = curvature(&p).unwrap().scalar;
        let chart = g.chart();
        let mut err = 0.0f64;
        for node in 0..chart.len() {
            let idx = chart.multi_index(node);
            let moved = chart.node_index(&[(idx[0] + 5) % n, idx[1]]);
            err = err.max((s1.values()[node] - s0.values()[moved]).abs());
        }
        assert!(err < 1e-6, "err = {err}");
    }

    #[test]
    fn bounded_geometry_flat_and_warped() {
        let flat = bounded_geometry_report(&models::flat_torus(16).unwrap(), 2).unwrap();
        assert!(flat.sup_norms.iter().all(|v| *v < 1e-10));
        let a = 0.5;
        let w = models::warped_cylinder(a, 2.0, 161, 16).unwrap();
        let rep = bounded_geometry_report(&w, 0).unwrap();
        assert!((rep.sup_gauss_curvature.unwrap() - a * a).abs() < 1e-4, "{rep:?}");
        assert!((rep.sup_norms[0] - 2.0 * a * a).abs() < 2e-4, "{rep:?}");
    }
}
