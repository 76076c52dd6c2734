//! Large-scale comparisons: lattice distances, quasi-isometry fits, warped
//! end diagnostics, multi-Sobolev norms and their equivalence constants.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use serde::Serialize;

use crate::cone::{MetricField, Polymetric};
use crate::connection::{christoffel_with, covariant_derivative, inverse_metric, tensor_norm_sq};
use crate::error::{Error, Result};
use crate::grid::{integrate_raw, Chart, TensorField};
use crate::linalg::jacobi_eigen;
use crate::models;

/// Worst ratio of 8-neighbour lattice length to Euclidean length,
/// `√(4 − 2√2)`, attained at 22.5° to the axes.
pub fn lattice_anisotropy() -> f64 {
    (4.0 - 2.0 * 2f64.sqrt()).sqrt()
}

/// Bisection tolerance on the multiplicative constant.
pub const QI_TOLERANCE: f64 = 1e-4;
/// C(T) growing strictly by more than this factor over the tested window is
/// reported as nonuniform.
pub const NONUNIFORM_RATIO: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceSampleSet {
    pub point_pairs: Vec<(usize, usize)>,
    pub distances: Vec<f64>,
    pub metric_id: String,
}

impl DistanceSampleSet {
    pub fn scaled(&self, s: f64) -> DistanceSampleSet {
        DistanceSampleSet {
            point_pairs: self.point_pairs.clone(),
            distances: self.distances.iter().map(|d| d * s).collect(),
            metric_id: format!("{} x {s}", self.metric_id),
        }
    }

    pub fn subset(&self, keep: usize) -> DistanceSampleSet {
        DistanceSampleSet {
            point_pairs: self.point_pairs[..keep].to_vec(),
            distances: self.distances[..keep].to_vec(),
            metric_id: self.metric_id.clone(),
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0).then_with(|| o.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Neighbours of a node in the king-move lattice with their coordinate
/// displacements; periodic axes wrap.
fn neighbours(chart: &Chart, node: usize) -> Vec<(usize, Vec<f64>)> {
    let n = chart.dim();
    let idx = chart.multi_index(node);
    let mut out = Vec::new();
    for code in 0..3usize.pow(n as u32) {
        let mut off = Vec::with_capacity(n);
        let mut c = code;
        for _ in 0..n {
            off.push((c % 3) as i64 - 1);
            c /= 3;
        }
        if off.iter().all(|&o| o == 0) {
            continue;
        }
        let mut target = Vec::with_capacity(n);
        let mut ok = true;
        for a in 0..n {
            let res = chart.resolution()[a] as i64;
            let mut k = idx[a] as i64 + off[a];
            if chart.is_periodic(a) {
                k = k.rem_euclid(res);
            } else if k < 0 || k >= res {
                ok = false;
                break;
            }
            target.push(k as usize);
        }
        if ok {
            let v = (0..n).map(|a| off[a] as f64 * chart.spacing(a)).collect();
            out.push((chart.node_index(&target), v));
        }
    }
    out
}

fn edge_length(g: &MetricField, a: usize, b: usize, v: &[f64]) -> f64 {
    let n = v.len();
    let q = |node: usize| -> f64 {
        let m = g.at(node);
        (0..n).map(|i| (0..n).map(|j| v[i] * m[i * n + j] * v[j]).sum::<f64>()).sum::<f64>().sqrt()
    };
    0.5 * (q(a) + q(b))
}

/// Lattice distances from one source to every node.
pub fn distances_from(g: &MetricField, source: usize) -> Vec<f64> {
    let chart = g.chart();
    let mut dist = vec![f64::INFINITY; chart.len()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Entry(0.0, source));
    while let Some(Entry(d, node)) = heap.pop() {
        if d > dist[node] {
            continue;
        }
        for (next, v) in neighbours(chart, node) {
            let nd = d + edge_length(g, node, next, &v);
            if nd < dist[next] {
                dist[next] = nd;
                heap.push(Entry(nd, next));
            }
        }
    }
    dist
}

/// Shortest paths on the king-move lattice, each edge weighted by the
/// trapezoid g-length of the straight coordinate segment.
pub fn graph_distances(g: &MetricField, pairs: &[(usize, usize)], metric_id: &str) -> Result<DistanceSampleSet> {
    let chart = g.chart();
    if let Some(&(a, b)) = pairs.iter().find(|(a, b)| *a >= chart.len() || *b >= chart.len()) {
        return Err(Error::ShapeMismatch(format!("pair ({a}, {b}) outside {} nodes", chart.len())));
    }
    let mut by_source: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut distances = Vec::with_capacity(pairs.len());
    for &(a, b) in pairs {
        let row = by_source.entry(a).or_insert_with(|| distances_from(g, a));
        let d = row[b];
        if !d.is_finite() {
            return Err(Error::DisconnectedGraph);
        }
        distances.push(d);
    }
    Ok(DistanceSampleSet { point_pairs: pairs.to_vec(), distances, metric_id: metric_id.to_string() })
}

/// All unordered pairs of nodes on the sub-lattice with the given stride
/// per axis.
pub fn lattice_pairs(chart: &Chart, stride: &[usize]) -> Vec<(usize, usize)> {
    let nodes: Vec<usize> = (0..chart.len())
        .filter(|&node| chart.multi_index(node).iter().zip(stride).all(|(i, s)| i % s == 0))
        .collect();
    let mut pairs = Vec::new();
    for (i, &a) in nodes.iter().enumerate() {
        for &b in &nodes[i + 1..] {
            pairs.push((a, b));
        }
    }
    pairs
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QIFit {
    #[serde(rename = "C")]
    pub mult: f64,
    #[serde(rename = "c")]
    pub add: f64,
    pub residual_violations: usize,
    pub slack: f64,
}

fn check_samples<'a>(s0: &'a DistanceSampleSet, s1: &'a DistanceSampleSet) -> Result<Vec<(f64, f64)>> {
    if s0.point_pairs.is_empty() {
        return Err(Error::EmptySamples);
    }
    if s0.point_pairs != s1.point_pairs {
        return Err(Error::ShapeMismatch("sample sets use different point pairs".into()));
    }
    Ok(s0.distances.iter().copied().zip(s1.distances.iter().copied()).collect())
}

/// Smallest additive constant making `C⁻¹d₀ − c ≤ d₁ ≤ C d₀ + c` hold.
fn additive_needed(pairs: &[(f64, f64)], mult: f64) -> f64 {
    pairs.iter().map(|&(d0, d1)| (d1 - mult * d0).max(d0 / mult - d1)).fold(0.0, f64::max)
}

/// Number of pairs violating the two-sided bound for `(C, c)`.
pub fn qi_violations(s0: &DistanceSampleSet, s1: &DistanceSampleSet, mult: f64, add: f64) -> Result<usize> {
    let pairs = check_samples(s0, s1)?;
    let scale = pairs.iter().map(|(a, b)| a.max(*b)).fold(0.0, f64::max);
    let eps = 1e-12 * scale;
    Ok(pairs.iter().filter(|&&(d0, d1)| d1 > mult * d0 + add + eps || d1 < d0 / mult - add - eps).count())
}

/// Quasi-isometry fit with additive budget 0: the bi-Lipschitz constant.
pub fn qi_fit(s0: &DistanceSampleSet, s1: &DistanceSampleSet) -> Result<QIFit> {
    qi_fit_with_slack(s0, s1, 0.0)
}

/// Smallest `C` (to `QI_TOLERANCE`) whose minimal additive constant fits
/// within `slack`, then that minimal `c`.
pub fn qi_fit_with_slack(s0: &DistanceSampleSet, s1: &DistanceSampleSet, slack: f64) -> Result<QIFit> {
    let pairs = check_samples(s0, s1)?;
    let ratio = pairs
        .iter()
        .filter(|(a, b)| *a > 0.0 && *b > 0.0)
        .map(|(a, b)| (a / b).max(b / a))
        .fold(1.0, f64::max);
    let mult = if additive_needed(&pairs, 1.0) <= slack {
        1.0
    } else {
        let (mut lo, mut hi) = (1.0, ratio);
        while hi - lo > QI_TOLERANCE {
            let mid = 0.5 * (lo + hi);
            if additive_needed(&pairs, mid) <= slack {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };
    let add = additive_needed(&pairs, mult);
    let residual_violations = qi_violations(s0, s1, mult, add)?;
    Ok(QIFit { mult, add, residual_violations, slack })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EndGrowthRow {
    pub t_max: f64,
    #[serde(rename = "C")]
    pub mult: f64,
    #[serde(rename = "c")]
    pub add: f64,
    pub pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EndGrowth {
    pub a: f64,
    pub rows: Vec<EndGrowthRow>,
    pub nonuniform: bool,
}

/// QI constants of `dt² + e^{2at}dθ²` against `dt² + dθ²` on `[0, T] × S¹`
/// for each truncation length.
pub fn end_growth_diagnostic(a: f64, t_list: &[f64], per_unit: usize, n_theta: usize) -> Result<EndGrowth> {
    if a < 0.0 {
        return Err(Error::Unsupported("warping rate must be nonnegative".into()));
    }
    if t_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Unsupported("truncation lengths must increase".into()));
    }
    let mut rows = Vec::with_capacity(t_list.len());
    for &t in t_list {
        let n_t = (t * per_unit as f64).round() as usize + 1;
        let warped = models::warped_cylinder(a, t, n_t, n_theta)?;
        let product = models::warped_cylinder(0.0, t, n_t, n_theta)?;
        let stride = [((n_t - 1) / 8).max(1), (n_theta / 8).max(1)];
        let pairs = lattice_pairs(warped.chart(), &stride);
        let d0 = graph_distances(&product, &pairs, "product")?;
        let d1 = graph_distances(&warped, &pairs, &format!("warped a={a}"))?;
        let fit = qi_fit(&d0, &d1)?;
        rows.push(EndGrowthRow { t_max: t, mult: fit.mult, add: fit.add, pairs: pairs.len() });
    }
    let increasing = rows.windows(2).all(|w| w[1].mult > w[0].mult);
    let nonuniform = rows.len() >= 2 && increasing && rows[rows.len() - 1].mult > NONUNIFORM_RATIO * rows[0].mult;
    Ok(EndGrowth { a, rows, nonuniform })
}

fn squared_norm_terms(g: &MetricField, u: &TensorField, k: usize) -> Result<f64> {
    if !g.chart().fully_periodic() {
        return Err(Error::NonPeriodicChart);
    }
    if !g.declared_inertia().is_riemannian() {
        return Err(Error::Unsupported("Sobolev norms need Riemannian components".into()));
    }
    let inv = inverse_metric(g)?;
    let conn = christoffel_with(g, &inv)?;
    let mut t = u.clone();
    let mut total = 0.0;
    for j in 0..=k {
        if j > 0 {
            t = covariant_derivative(&t, &conn, g.scheme())?;
        }
        total += integrate_raw(g.chart(), &tensor_norm_sq(&t, &inv), Some(&inv.volume));
    }
    Ok(total)
}

/// `(Σ_i Σ_{j≤k} ∫ |∇^{(i),j} u|²_{g_i} dvol_{g_i})^{1/2}`.
pub fn multi_sobolev_norm(gs: &Polymetric, u: &TensorField, k: usize) -> Result<f64> {
    if k > 2 {
        return Err(Error::Unsupported(format!("Sobolev order {k} (at most 2)")));
    }
    if u.contravariant() != 0 {
        return Err(Error::Unsupported("Sobolev norms of covariant tensors only".into()));
    }
    let mut total = 0.0;
    for g in gs.components() {
        total += squared_norm_terms(g, u, k)?;
    }
    Ok(total.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceRecord {
    pub c1: f64,
    pub c2: f64,
    pub samples: usize,
    /// Nodewise eigenvalue-ratio bounds `[lower, upper]` on `C1, C2`, when
    /// the derivatives involved do not depend on the connection.
    pub envelope: Option<(f64, f64)>,
    /// `max` over nodes of `max(μ_max, 1/μ_min)` for `g⁻¹h`.
    pub rho: f64,
}

/// Eigenvalues of `g⁻¹h` at a node.
fn relative_eigenvalues(g: &[f64], h: &[f64], n: usize) -> Vec<f64> {
    let s = jacobi_eigen(g, n).apply_fn(|l| 1.0 / l.sqrt());
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            m[i * n + j] = (0..n)
                .map(|p| (0..n).map(|q| s[i * n + p] * h[p * n + q] * s[q * n + j]).sum::<f64>())
                .sum();
        }
    }
    jacobi_eigen(&m, n).values
}

/// Empirical `C1 = min ‖u‖_H/‖u‖_G`, `C2 = max` over the sample fields.
pub fn sobolev_equivalence_constants(gs: &Polymetric, hs: &Polymetric, samples: &[TensorField], k: usize) -> Result<EquivalenceRecord> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut c1 = f64::INFINITY;
    let mut c2: f64 = 0.0;
    for u in samples {
        let r = multi_sobolev_norm(hs, u, k)? / multi_sobolev_norm(gs, u, k)?;
        c1 = c1.min(r);
        c2 = c2.max(r);
    }
    let n = gs.chart().dim();
    let mut rho: f64 = 1.0;
    let ranks: Vec<usize> = samples.iter().map(|u| u.covariant()).collect();
    let connection_free = k == 0 || (k == 1 && ranks.iter().all(|&r| r == 0));
    let mut lower = f64::INFINITY;
    let mut upper: f64 = 0.0;
    let paired = gs.len() == hs.len();
    for (g, h) in gs.components().iter().zip(hs.components()) {
        for node in 0..g.chart().len() {
            let mu = relative_eigenvalues(g.at(node), h.at(node), n);
            let (lo, hi) = (mu[0], mu[n - 1]);
            rho = rho.max(hi).max(1.0 / lo);
            let vol: f64 = mu.iter().product::<f64>().sqrt();
            for &r in &ranks {
                for j in 0..=k {
                    let s = (r + j) as i32;
                    lower = lower.min(vol * hi.powi(-s));
                    upper = upper.max(vol * lo.powi(-s));
                }
            }
        }
    }
    let envelope = (connection_free && paired).then(|| (lower.sqrt(), upper.sqrt()));
    Ok(EquivalenceRecord { c1, c2, samples: samples.len(), envelope, rho })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{ScalarField, Scheme};
    use crate::rng::CounterRng;
    use proptest::prelude::*;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn unit_square(n: usize) -> MetricField {
        let chart = Arc::new(Chart::new(2, &[(0.0, 1.0), (0.0, 1.0)], &[n, n], &[false, false]).unwrap());
        models::euclidean(&chart).unwrap()
    }

    fn poly(gs: Vec<MetricField>) -> Polymetric {
        Polymetric::from_metrics(gs).unwrap()
    }

    #[test]
    fn square_diagonal_and_anisotropy() {
        let g = unit_square(21);
        let last = g.chart().len() - 1;
        let s = graph_distances(&g, &[(0, last), (0, 0)], "euclid").unwrap();
        assert!((s.distances[0] - 2f64.sqrt()).abs() / 2f64.sqrt() < lattice_anisotropy() - 1.0);
        assert_eq!(s.distances[1], 0.0);
        // 22.5° direction attains the lattice constant asymptotically
        let knight = g.chart().node_index(&[20, 8]);
        let d = graph_distances(&g, &[(0, knight)], "euclid").unwrap().distances[0];
        let exact = (1.0f64 + 0.16).sqrt();
        assert!(d / exact <= lattice_anisotropy() + 1e-12 && d / exact > 1.05);
    }

    #[test]
    fn distances_scale_with_metric() {
        let g = models::bumpy_torus(16, 0.3).unwrap();
        let pairs = lattice_pairs(g.chart(), &[3, 3]);
        let a = graph_distances(&g, &pairs, "g").unwrap();
        let b = graph_distances(&g.scaled(2.25).unwrap(), &pairs, "g").unwrap();
        for (x, y) in a.distances.iter().zip(&b.distances) {
            assert!((y - 1.5 * x).abs() <= 1e-12 * y);
        }
    }

    #[test]
    fn distances_are_symmetric_and_triangular() {
        let g = models::bumpy_torus(12, 0.3).unwrap();
        let n = g.chart().len();
        let rows: Vec<Vec<f64>> = (0..n).step_by(7).map(|s| distances_from(&g, s)).collect();
        let src: Vec<usize> = (0..n).step_by(7).collect();
        for (i, a) in src.iter().enumerate() {
            for (j, b) in src.iter().enumerate() {
                assert!((rows[i][*b] - rows[j][*a]).abs() < 1e-12);
                for c in &src {
                    assert!(rows[i][*c] <= rows[i][*b] + rows[j][*c] + 1e-12);
                }
            }
        }
    }

    #[test]
    fn half_cylinder_axis() {
        let g = models::warped_cylinder(0.0, 5.0, 51, 16).unwrap();
        let end = g.chart().node_index(&[50, 0]);
        let d = graph_distances(&g, &[(0, end)], "cyl").unwrap().distances[0];
        assert!((d - 5.0).abs() < 1e-12);
    }

    #[test]
    fn qi_trivial_fits() {
        let g = models::bumpy_torus(12, 0.3).unwrap();
        let s = graph_distances(&g, &lattice_pairs(g.chart(), &[2, 2]), "g").unwrap();
        let fit = qi_fit(&s, &s).unwrap();
        assert_eq!((fit.mult, fit.add, fit.residual_violations), (1.0, 0.0, 0));
        let lam = 2.7;
        let fit = qi_fit(&s, &s.scaled(lam)).unwrap();
        assert!((fit.mult - lam).abs() < QI_TOLERANCE && fit.add.abs() < 1e-9 && fit.residual_violations == 0);
        let fit = qi_fit(&s.scaled(lam), &s).unwrap();
        assert!((fit.mult - lam).abs() < QI_TOLERANCE);
        let empty = DistanceSampleSet { point_pairs: vec![], distances: vec![], metric_id: "e".into() };
        assert_eq!(qi_fit(&empty, &empty).unwrap_err(), Error::EmptySamples);
    }

    #[test]
    fn qi_with_slack_trades_multiplicative_for_additive() {
        let g = models::bumpy_torus(12, 0.3).unwrap();
        let s = graph_distances(&g, &lattice_pairs(g.chart(), &[2, 2]), "g").unwrap();
        let shifted = DistanceSampleSet {
            distances: s.distances.iter().map(|d| 1.2 * d + 0.3).collect(),
            ..s.clone()
        };
        let tight = qi_fit(&s, &shifted).unwrap();
        let loose = qi_fit_with_slack(&s, &shifted, 0.3).unwrap();
        assert!(loose.mult <= 1.2 + QI_TOLERANCE && loose.mult < tight.mult);
        assert!(loose.add <= 0.3 + 1e-12 && loose.residual_violations == 0);
    }

    #[test]
    fn product_end_is_uniformly_quasi_isometric() {
        let t = 10.0;
        let g0 = models::warped_cylinder(0.0, t, 81, 24).unwrap();
        let g1 = models::product_end(0.3, t, 81, 24).unwrap();
        let pairs = lattice_pairs(g0.chart(), &[8, 3]);
        let fit = qi_fit(&graph_distances(&g0, &pairs, "0").unwrap(), &graph_distances(&g1, &pairs, "1").unwrap()).unwrap();
        assert!(fit.mult <= 1.3 && fit.residual_violations == 0, "{fit:?}");
    }

    #[test]
    fn warped_end_trend() {
        let flat = end_growth_diagnostic(0.0, &[5.0, 10.0], 4, 16).unwrap();
        assert!(flat.rows.iter().all(|r| r.mult == 1.0) && !flat.nonuniform);
        let mild = end_growth_diagnostic(0.05, &[5.0, 10.0], 4, 16).unwrap();
        assert!(mild.rows.iter().all(|r| r.mult < 2.0) && !mild.nonuniform, "{mild:?}");
        let steep = end_growth_diagnostic(1.0, &[5.0, 10.0, 20.0], 4, 16).unwrap();
        assert!(steep.nonuniform, "{steep:?}");
        assert!(steep.rows.windows(2).all(|w| w[1].mult > w[0].mult));
    }

    #[test]
    fn sobolev_closed_forms() {
        let chart = Arc::new(Chart::new(2, &[(0.0, 1.0), (0.0, 1.0)], &[8, 8], &[true, true]).unwrap());
        let one = ScalarField::constant(&chart, 1.0).to_tensor();
        let e = models::euclidean(&chart).unwrap().with_scheme(Scheme::Spectral);
        assert!((multi_sobolev_norm(&poly(vec![e.clone()]), &one, 0).unwrap() - 1.0).abs() < 1e-14);
        let g = models::flat_torus(32).unwrap();
        let u = ScalarField::from_fn(g.chart(), |x| x[0].sin()).to_tensor();
        assert!((multi_sobolev_norm(&poly(vec![g.clone()]), &u, 1).unwrap() - 2.0 * PI).abs() < 1e-8);
        let b = models::bumpy_torus(32, 0.3).unwrap();
        let single = multi_sobolev_norm(&poly(vec![b.clone()]), &u, 2).unwrap();
        let double = multi_sobolev_norm(&poly(vec![b.clone(), b]), &u, 2).unwrap();
        assert!((double * double - 2.0 * single * single).abs() <= 1e-12 * double * double);
        assert!(matches!(multi_sobolev_norm(&poly(vec![g]), &u, 3), Err(Error::Unsupported(_))));
    }

    #[test]
    fn sobolev_norm_is_a_norm() {
        let gs = poly(vec![models::bumpy_torus(16, 0.3).unwrap(), models::flat_torus(16).unwrap()]);
        let chart = gs.chart().clone();
        let mut rng = CounterRng::new(7);
        for _ in 0..100 {
            let u = models::random_scalar(&chart, &mut rng, 2, 1.0).to_tensor();
            let v = models::random_scalar(&chart, &mut rng, 2, 1.0).to_tensor();
            let nu = multi_sobolev_norm(&gs, &u, 1).unwrap();
            let nv = multi_sobolev_norm(&gs, &v, 1).unwrap();
            let nw = multi_sobolev_norm(&gs, &u.lin_comb(1.0, &v, 1.0).unwrap(), 1).unwrap();
            assert!(nw <= nu + nv + 1e-12);
            let ns = multi_sobolev_norm(&gs, &u.scaled(-3.0), 1).unwrap();
            assert!((ns - 3.0 * nu).abs() <= 1e-12 * ns);
        }
    }

    #[test]
    fn equivalence_constants() {
        let g = models::flat_torus(16).unwrap();
        let chart = g.chart().clone();
        let mut rng = CounterRng::new(3);
        let samples: Vec<TensorField> = (0..50).map(|_| models::random_scalar(&chart, &mut rng, 3, 1.0).to_tensor()).collect();
        let gs = poly(vec![g.clone()]);
        let same = sobolev_equivalence_constants(&gs, &gs, &samples, 1).unwrap();
        assert_eq!((same.c1, same.c2), (1.0, 1.0));
        let lam = 1.8;
        let scaled = poly(vec![g.scaled(lam * lam).unwrap()]);
        let r = sobolev_equivalence_constants(&gs, &scaled, &samples, 0).unwrap();
        assert!((r.c1 - lam).abs() < 1e-12 && (r.c2 - lam).abs() < 1e-12);
        let bumpy = poly(vec![models::bumpy_torus(16, 0.3).unwrap()]);
        let r = sobolev_equivalence_constants(&gs, &bumpy, &samples, 1).unwrap();
        let (lo, hi) = r.envelope.unwrap();
        assert!(lo <= r.c1 && r.c1 <= r.c2 && r.c2 <= hi, "{r:?}");
        assert!(r.c2 / r.c1 <= r.rho.powf(1.0 + 1.0));
        // Composition through an intermediate polymetric.
        let mid = poly(vec![models::bumpy_torus(16, 0.15).unwrap()]);
        let a = sobolev_equivalence_constants(&gs, &mid, &samples, 1).unwrap();
        let b = sobolev_equivalence_constants(&mid, &bumpy, &samples, 1).unwrap();
        assert!(a.c1 * b.c1 <= r.c1 + 1e-12 && r.c2 <= a.c2 * b.c2 + 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn enlarging_samples_never_decreases_c(keep in 1usize..60, lam in 0.5f64..3.0) {
            let g = models::bumpy_torus(12, 0.3).unwrap();
            let h = models::bumpy_torus(12, -0.2).unwrap().scaled(lam).unwrap();
            let pairs = lattice_pairs(g.chart(), &[2, 2]);
            let s0 = graph_distances(&g, &pairs, "g").unwrap();
            let s1 = graph_distances(&h, &pairs, "h").unwrap();
            let small = qi_fit(&s0.subset(keep), &s1.subset(keep)).unwrap();
            let full = qi_fit(&s0, &s1).unwrap();
            prop_assert!(full.mult >= small.mult);
            prop_assert_eq!(full.residual_violations, 0);
            prop_assert_eq!(qi_violations(&s0, &s1, full.mult, full.add).unwrap(), 0);
        }
    }
}
