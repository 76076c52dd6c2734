//! Geodesic spray and the exponential map by fixed-step RK4.
//!
//! Christoffel symbols are computed once on the grid and evaluated off-grid
//! with tensor-product 8-point Lagrange interpolation (eighth order), which
//! keeps speed drift near integrator roundoff on smooth metrics.

use std::sync::Arc;

use serde::Serialize;

use crate::cone::{convex_path, MetricField};
use crate::connection::{christoffel, ConnectionCoeffs};
use crate::error::{Error, Result};
use crate::grid::Chart;

const STENCIL: usize = 8;
/// Relative speed drift above which the integration is rejected.
pub const MAX_DRIFT: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeodesicState {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub time: f64,
}

/// Local Lagrange stencil on one axis: node indices and weights.
fn axis_stencil(chart: &Chart, axis: usize, x: f64) -> ([usize; STENCIL], [f64; STENCIL]) {
    let n = chart.resolution()[axis];
    let s = (x - chart.bounds()[axis].0) / chart.spacing(axis);
    let base = s.floor() as isize - (STENCIL as isize / 2 - 1);
    let start = if chart.is_periodic(axis) { base } else { base.clamp(0, n as isize - STENCIL as isize) };
    let mut idx = [0usize; STENCIL];
    let mut w = [0.0; STENCIL];
    for k in 0..STENCIL {
        let node = start + k as isize;
        idx[k] = node.rem_euclid(n as isize) as usize;
        let mut l = 1.0;
        for m in 0..STENCIL {
            if m != k {
                l *= (s - (start + m as isize) as f64) / (k as f64 - m as f64);
            }
        }
        w[k] = l;
    }
    (idx, w)
}

/// Interpolates `ncomp` values per node at a point of the chart.
fn interpolate(chart: &Chart, data: &[f64], ncomp: usize, x: &[f64], out: &mut [f64]) -> bool {
    let Some(x) = chart.wrap(x) else { return false };
    let dim = chart.dim();
    let stencils: Vec<_> = (0..dim).map(|a| axis_stencil(chart, a, x[a])).collect();
    out.iter_mut().for_each(|v| *v = 0.0);
    let total = STENCIL.pow(dim as u32);
    for flat in 0..total {
        let mut rem = flat;
        let mut node = 0;
        let mut w = 1.0;
        for a in (0..dim).rev() {
            let k = rem % STENCIL;
            rem /= STENCIL;
            node += stencils[a].0[k] * chart.stride(a);
            w *= stencils[a].1[k];
        }
        for (o, v) in out.iter_mut().zip(&data[node * ncomp..(node + 1) * ncomp]) {
            *o += w * v;
        }
    }
    true
}

/// Precomputed geodesic spray of a metric.
#[derive(Debug, Clone)]
pub struct Spray {
    chart: Arc<Chart>,
    n: usize,
    conn: ConnectionCoeffs,
    metric: Vec<f64>,
}

impl Spray {
    pub fn new(g: &MetricField) -> Result<Spray> {
        Ok(Spray {
            chart: g.chart().clone(),
            n: g.dim(),
            conn: christoffel(g)?,
            metric: g.components().data().to_vec(),
        })
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    /// `a^k = −Γ^k_{ij}(x) v^i v^j`.
    pub fn acceleration(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        let mut gam = vec![0.0; n * n * n];
        if !interpolate(&self.chart, self.conn.raw(), n * n * n, x, &mut gam) {
            return Err(Error::OutsideChart { position: x.to_vec() });
        }
        Ok((0..n)
            .map(|k| {
                let mut s = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        s += gam[(k * n + i) * n + j] * v[i] * v[j];
                    }
                }
                -s
            })
            .collect())
    }

    /// `‖v‖_g` at `x`.
    pub fn speed(&self, x: &[f64], v: &[f64]) -> Result<f64> {
        let n = self.n;
        let mut g = vec![0.0; n * n];
        if !interpolate(&self.chart, &self.metric, n * n, x, &mut g) {
            return Err(Error::OutsideChart { position: x.to_vec() });
        }
        let q: f64 = (0..n).map(|i| (0..n).map(|j| g[i * n + j] * v[i] * v[j]).sum::<f64>()).sum();
        Ok(q.abs().sqrt())
    }
}

pub fn spray(g: &MetricField, state: &GeodesicState) -> Result<Vec<f64>> {
    Spray::new(g)?.acceleration(&state.position, &state.velocity)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpResult {
    pub state: GeodesicState,
    pub initial_speed: f64,
    /// `max_t |‖γ'(t)‖_g − ‖v‖_g|`.
    pub speed_drift: f64,
    pub steps: usize,
    pub trajectory: Vec<TrajectoryPoint>,
}

impl ExpResult {
    pub fn relative_drift(&self) -> f64 {
        if self.initial_speed > 0.0 {
            self.speed_drift / self.initial_speed
        } else {
            self.speed_drift
        }
    }
}

/// Integrates `γ'' = spray` from `(x, v)` for time `t_end` with RK4 and a
/// step no larger than `dt`. `record_every = Some(k)` keeps every k-th state.
pub fn integrate(
    spray: &Spray,
    x: &[f64],
    v: &[f64],
    t_end: f64,
    dt: f64,
    record_every: Option<usize>,
) -> Result<ExpResult> {
    let n = spray.n;
    if x.len() != n || v.len() != n {
        return Err(Error::ShapeMismatch(format!("point and velocity need {n} components")));
    }
    if !(dt > 0.0) || !t_end.is_finite() || t_end < 0.0 {
        return Err(Error::ShapeMismatch("need dt > 0 and t_end >= 0".into()));
    }
    let chart = &spray.chart;
    let mut pos = chart.wrap(x).ok_or_else(|| Error::OutsideChart { position: x.to_vec() })?;
    let mut vel = v.to_vec();
    let steps = (t_end / dt).ceil().max(if t_end > 0.0 { 1.0 } else { 0.0 }) as usize;
    let h = if steps > 0 { t_end / steps as f64 } else { 0.0 };
    let initial_speed = spray.speed(&pos, &vel)?;
    let mut drift = 0.0f64;
    let mut trajectory = Vec::new();
    let record = |t: f64, p: &[f64], w: &[f64], s: f64, trajectory: &mut Vec<TrajectoryPoint>| {
        trajectory.push(TrajectoryPoint { t, position: p.to_vec(), velocity: w.to_vec(), speed: s });
    };
    if record_every.is_some() {
        record(0.0, &pos, &vel, initial_speed, &mut trajectory);
    }
    let axpy = |a: &[f64], s: f64, b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(p, q)| p + s * q).collect() };
    for step in 1..=steps {
        let k1x = vel.clone();
        let k1v = spray.acceleration(&pos, &vel)?;
        let x2 = axpy(&pos, 0.5 * h, &k1x);
        let k2x = axpy(&vel, 0.5 * h, &k1v);
        let k2v = spray.acceleration(&x2, &k2x)?;
        let x3 = axpy(&pos, 0.5 * h, &k2x);
        let k3x = axpy(&vel, 0.5 * h, &k2v);
        let k3v = spray.acceleration(&x3, &k3x)?;
        let x4 = axpy(&pos, h, &k3x);
        let k4x = axpy(&vel, h, &k3v);
        let k4v = spray.acceleration(&x4, &k4x)?;
        let next: Vec<f64> =
            (0..n).map(|i| pos[i] + h / 6.0 * (k1x[i] + 2.0 * k2x[i] + 2.0 * k3x[i] + k4x[i])).collect();
        for i in 0..n {
            vel[i] += h / 6.0 * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]);
        }
        pos = chart.wrap(&next).ok_or(Error::OutsideChart { position: next })?;
        let s = spray.speed(&pos, &vel)?;
        drift = drift.max((s - initial_speed).abs());
        let scale = if initial_speed > 0.0 { initial_speed } else { 1.0 };
        if drift / scale > MAX_DRIFT {
            return Err(Error::StepTooLarge { drift: drift / scale });
        }
        if let Some(k) = record_every {
            if step % k.max(1) == 0 || step == steps {
                record(step as f64 * h, &pos, &vel, s, &mut trajectory);
            }
        }
    }
    Ok(ExpResult {
        state: GeodesicState { position: pos, velocity: vel, time: t_end },
        initial_speed,
        speed_drift: drift,
        steps,
        trajectory,
    })
}

/// `γ(t_end)` for the geodesic with `γ(0) = x`, `γ'(0) = v`.
pub fn exp_map(g: &MetricField, x: &[f64], v: &[f64], t_end: f64, dt: f64) -> Result<ExpResult> {
    integrate(&Spray::new(g)?, x, v, t_end, dt, None)
}

/// Coordinate distance with periodic axes measured the short way round.
pub fn chart_distance(chart: &Chart, a: &[f64], b: &[f64]) -> f64 {
    (0..chart.dim())
        .map(|k| {
            let mut d = (a[k] - b[k]).abs();
            if chart.is_periodic(k) {
                d = d.min(chart.length(k) - d);
            }
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpDependence {
    pub parameters: Vec<f64>,
    pub endpoints: Vec<Vec<f64>>,
    /// Distance of each endpoint from the `s = 0` endpoint.
    pub displacement: Vec<f64>,
    pub increments: Vec<f64>,
    pub max_increment: f64,
    /// `max increment / Δs`.
    pub lipschitz: f64,
}

/// Endpoints of `exp^{g_s}(x, t_end·v)` along `g_s = (1−s) g0 + s g1` at
/// `s = j / samples`.
pub fn exp_dependence(
    g0: &MetricField,
    g1: &MetricField,
    x: &[f64],
    v: &[f64],
    t_end: f64,
    samples: usize,
    dt: f64,
) -> Result<ExpDependence> {
    let samples = samples.max(1);
    let chart = g0.chart().clone();
    let mut parameters = Vec::with_capacity(samples + 1);
    let mut endpoints = Vec::with_capacity(samples + 1);
    for j in 0..=samples {
        let s = j as f64 / samples as f64;
        let gs = convex_path(g0, g1, s)?;
        parameters.push(s);
        endpoints.push(exp_map(&gs, x, v, t_end, dt)?.state.position);
    }
    let displacement: Vec<f64> = endpoints.iter().map(|e| chart_distance(&chart, e, &endpoints[0])).collect();
    let increments: Vec<f64> = endpoints.windows(2).map(|w| chart_distance(&chart, &w[0], &w[1])).collect();
    let max_increment = increments.iter().cloned().fold(0.0, f64::max);
    Ok(ExpDependence { parameters, endpoints, displacement, increments, max_increment, lipschitz: max_increment * samples as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::{pullback_metric, SampledMap};
    use crate::models;
    use std::f64::consts::PI;

    #[test]
    fn lagrange_reproduces_polynomials() {
        let chart = Chart::new(1, &[(0.0, 1.0)], &[20], &[false]).unwrap();
        let data: Vec<f64> = chart.axis_coords(0).iter().map(|x| x.powi(7) - 2.0 * x).collect();
        let mut out = [0.0];
        for x in [0.0, 0.013, 0.5, 0.97, 1.0] {
            assert!(interpolate(&chart, &data, 1, &[x], &mut out));
            assert!((out[0] - (x.powi(7) - 2.0 * x)).abs() < 1e-13);
        }
    }

    #[test]
    fn euclidean_spray_vanishes() {
        let chart = Arc::new(Chart::new(2, &[(-1.0, 1.0), (-1.0, 1.0)], &[16, 16], &[false, false]).unwrap());
        let g = models::euclidean(&chart).unwrap();
        let st = GeodesicState { position: vec![0.1, -0.3], velocity: vec![2.0, 1.0], time: 0.0 };
        assert!(spray(&g, &st).unwrap().iter().all(|a| a.abs() < 1e-14));
        let r = exp_map(&g, &[0.1, -0.3], &[0.5, 0.2], 1.0, 1e-2).unwrap();
        assert!((r.state.position[0] - 0.6).abs() < 1e-12 && (r.state.position[1] + 0.1).abs() < 1e-12);
    }

    #[test]
    fn polar_spray() {
        let g = models::polar_plane(0.5, 2.0, 64, 32).unwrap();
        let st = GeodesicState { position: vec![1.0, 0.0], velocity: vec![0.0, 1.0], time: 0.0 };
        let a = spray(&g, &st).unwrap();
        assert!((a[0] - 1.0).abs() < 1e-6 && a[1].abs() < 1e-6, "{a:?}");
    }

    #[test]
    fn equator_is_geodesic() {
        let g = models::round_sphere(128, 64, models::sphere_delta(128)).unwrap();
        let st = GeodesicState { position: vec![PI / 2.0, 0.3], velocity: vec![0.0, 1.0], time: 0.0 };
        assert!(spray(&g, &st).unwrap()[0].abs() < 1e-10);
    }

    #[test]
    fn sphere_meridian_and_great_circle() {
        let g = models::round_sphere(128, 64, models::sphere_delta(128)).unwrap();
        let sp = Spray::new(&g).unwrap();
        let r = integrate(&sp, &[PI / 4.0, 0.0], &[1.0, 0.0], PI / 2.0, 1e-3, None).unwrap();
        assert!((r.state.position[0] - 3.0 * PI / 4.0).abs() < 1e-6);
        assert!((r.initial_speed * PI / 2.0 - PI / 2.0).abs() < 1e-6);
        // Inclined great circle through (θ, φ) = (π/2, 0).
        let alpha: f64 = 0.6;
        let t: f64 = 2.0;
        let r = integrate(&sp, &[PI / 2.0, 0.0], &[alpha.sin(), alpha.cos()], t, 1e-3, None).unwrap();
        let theta = (-alpha.sin() * t.sin()).acos();
        let phi = (alpha.cos() * t.sin()).atan2(t.cos());
        assert!((r.state.position[0] - theta).abs() < 1e-6, "{:?} {theta}", r.state.position);
        assert!((r.state.position[1] - phi).abs() < 1e-6, "{:?} {phi}", r.state.position);
        assert!(r.relative_drift() < 1e-7);
    }

    #[test]
    fn flat_torus_speed_conserved() {
        let g = models::flat_torus(16).unwrap();
        let r = exp_map(&g, &[1.0, 2.0], &[1.0, 2f64.sqrt()], 10.0, 1e-3).unwrap();
        assert!(r.speed_drift < 1e-9);
    }

    #[test]
    fn bumpy_torus_drift_per_unit_time() {
        let g = models::bumpy_torus(32, 0.3).unwrap();
        let r = exp_map(&g, &[0.4, 1.1], &[0.8, -0.5], 2.0, 1e-3).unwrap();
        assert!(r.relative_drift() / 2.0 < 1e-8, "{}", r.relative_drift());
    }

    #[test]
    fn homogeneity() {
        let g = models::bumpy_torus(32, 0.3).unwrap();
        let sp = Spray::new(&g).unwrap();
        for c in [0.5, 2.0] {
            let a = integrate(&sp, &[0.4, 1.1], &[0.8 * c, -0.5 * c], 1.5, 1e-3, None).unwrap();
            let b = integrate(&sp, &[0.4, 1.1], &[0.8, -0.5], 1.5 * c, 1e-3, None).unwrap();
            assert!(chart_distance(g.chart(), &a.state.position, &b.state.position) < 1e-8);
        }
    }

    #[test]
    fn translation_equivariance() {
        let n = 32;
        let g = models::bumpy_torus(n, 0.3).unwrap();
        let c = 3.0 * 2.0 * PI / n as f64;
        let pulled = pullback_metric(&g, &SampledMap::translation(g.chart(), &[c, 0.0])).unwrap();
        let a = exp_map(&pulled, &[0.4, 1.1], &[0.8, -0.5], 2.0, 1e-3).unwrap();
        let b = exp_map(&g, &[0.4 + c, 1.1], &[0.8, -0.5], 2.0, 1e-3).unwrap();
        let back = [b.state.position[0] - c, b.state.position[1]];
        assert!(chart_distance(g.chart(), &a.state.position, &back) < 1e-6);
    }

    #[test]
    fn leaving_open_chart_is_an_error() {
        let g = models::polar_plane(0.5, 2.0, 32, 32).unwrap();
        assert!(matches!(exp_map(&g, &[1.5, 0.0], &[1.0, 0.0], 2.0, 1e-2), Err(Error::OutsideChart { .. })));
    }

    #[test]
    fn dependence_on_metric() {
        let g0 = models::flat_torus(32).unwrap();
        let same = exp_dependence(&g0, &g0, &[1.0, 1.0], &[0.7, 0.3], 2.0, 4, 1e-2).unwrap();
        assert!(same.displacement.iter().all(|d| *d == 0.0));
        let g1 = g0.scaled(1.1).unwrap();
        let d = exp_dependence(&g0, &g1, &[1.0, 1.0], &[0.7, 0.3], 2.0, 10, 1e-2).unwrap();
        assert!(d.displacement.windows(2).all(|w| w[1] >= w[0]));
        let mean = d.increments.iter().sum::<f64>() / d.increments.len() as f64;
        assert!(d.increments.iter().all(|i| *i <= 2.0 * mean));
        let bumpy = models::bumpy_torus(32, 0.1).unwrap();
        let coarse = exp_dependence(&g0, &bumpy, &[1.0, 1.0], &[0.7, 0.3], 2.0, 4, 1e-3).unwrap();
        let fine = exp_dependence(&g0, &bumpy, &[1.0, 1.0], &[0.7, 0.3], 2.0, 8, 1e-3).unwrap();
        for (j, e) in coarse.endpoints.iter().enumerate() {
            assert!(chart_distance(g0.chart(), e, &fine.endpoints[2 * j]) < 1e-4);
        }
    }
}
