//! Named metric recipes shared by tests, suites and the CLI.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::cone::{Inertia, MetricField, DEFAULT_EIG_TOLERANCE};
use crate::error::Result;
use crate::grid::{Chart, ScalarField, Scheme, TensorField};
use crate::rng::CounterRng;

pub fn euclidean(chart: &Arc<Chart>) -> Result<MetricField> {
    let n = chart.dim();
    MetricField::riemannian_from_fn(chart, |_, g| {
        for i in 0..n {
            g[i * n + i] = 1.0;
        }
    })
}

/// Flat `[0, 2π)^2` torus, spectral differentiation.
pub fn flat_torus(n: usize) -> Result<MetricField> {
    let chart = Arc::new(Chart::torus(2, n)?);
    Ok(euclidean(&chart)?.with_scheme(Scheme::Spectral))
}

/// `(1 + eps·sin x·sin y)·δ` on the `[0, 2π)^2` torus.
pub fn bumpy_torus(n: usize, eps: f64) -> Result<MetricField> {
    let chart = Arc::new(Chart::torus(2, n)?);
    Ok(bumpy_on(&chart, eps)?.with_scheme(Scheme::Spectral))
}

pub fn bumpy_on(chart: &Arc<Chart>, eps: f64) -> Result<MetricField> {
    MetricField::riemannian_from_fn(chart, |x, g| {
        let f = 1.0 + eps * x[0].sin() * x[1].sin();
        g[0] = f;
        g[3] = f;
    })
}

/// Pole cutoff `δ = 4h` for an `n`-point polar axis on `[δ, π - δ]`.
pub fn sphere_delta(n: usize) -> f64 {
    4.0 * PI / (n as f64 + 7.0)
}

pub fn sphere_chart(n_theta: usize, n_phi: usize, delta: f64) -> Result<Arc<Chart>> {
    Ok(Arc::new(Chart::new(2, &[(delta, PI - delta), (0.0, 2.0 * PI)], &[n_theta, n_phi], &[false, true])?))
}

/// Unit round sphere `dθ² + sin²θ dφ²` on the pole-truncated chart.
pub fn round_sphere(n_theta: usize, n_phi: usize, delta: f64) -> Result<MetricField> {
    let chart = sphere_chart(n_theta, n_phi, delta)?;
    MetricField::riemannian_from_fn(&chart, |x, g| {
        g[0] = 1.0;
        g[3] = x[0].sin().powi(2);
    })
}

/// Polar plane `dr² + r² dθ²` on `[r0, r1] x [0, 2π)`.
pub fn polar_plane(r0: f64, r1: f64, n_r: usize, n_theta: usize) -> Result<MetricField> {
    let chart = Arc::new(Chart::new(2, &[(r0, r1), (0.0, 2.0 * PI)], &[n_r, n_theta], &[false, true])?);
    MetricField::riemannian_from_fn(&chart, |x, g| {
        g[0] = 1.0;
        g[3] = x[0] * x[0];
    })
}

/// Poincaré half-plane `(dx² + dy²)/y²` on the strip `y ∈ [1,2]`, with `x`
/// taken mod 1 (the metric is translation invariant in `x`).
pub fn half_plane(n_x: usize, n_y: usize) -> Result<MetricField> {
    let chart = Arc::new(Chart::new(2, &[(0.0, 1.0), (1.0, 2.0)], &[n_x, n_y], &[true, false])?);
    MetricField::riemannian_from_fn(&chart, |x, g| {
        let w = 1.0 / (x[1] * x[1]);
        g[0] = w;
        g[3] = w;
    })
}

pub fn cylinder_chart(t_max: f64, n_t: usize, n_theta: usize) -> Result<Arc<Chart>> {
    Ok(Arc::new(Chart::new(2, &[(0.0, t_max), (0.0, 2.0 * PI)], &[n_t, n_theta], &[false, true])?))
}

/// Warped end `dt² + e^{2at} dθ²` on `[0, T] x S¹`. The condition number
/// `e^{2aT}` is legitimate here, so the degeneracy test is relaxed to it.
pub fn warped_cylinder(a: f64, t_max: f64, n_t: usize, n_theta: usize) -> Result<MetricField> {
    let chart = cylinder_chart(t_max, n_t, n_theta)?;
    let components = TensorField::symmetric_from_fn(&chart, |x, g| {
        g[0] = 1.0;
        g[3] = (2.0 * a * x[0]).exp();
    });
    let tol = DEFAULT_EIG_TOLERANCE.min(0.5 * (-2.0 * a.abs() * t_max).exp());
    MetricField::with_tolerance(components, Inertia::riemannian(2), tol)
}

/// Product-type end `dt² + (1 + amp·sin t) dθ²`.
pub fn product_end(amp: f64, t_max: f64, n_t: usize, n_theta: usize) -> Result<MetricField> {
    let chart = cylinder_chart(t_max, n_t, n_theta)?;
    MetricField::riemannian_from_fn(&chart, |x, g| {
        g[0] = 1.0;
        g[3] = 1.0 + amp * x[0].sin();
    })
}

/// Random trigonometric polynomial of total frequency at most `modes` per
/// axis, scaled to unit amplitude bound times `amp`.
pub fn random_trig(rng: &mut CounterRng, dim: usize, modes: usize, amp: f64) -> impl Fn(&[f64]) -> f64 {
    let mut terms = Vec::new();
    let count = (2 * modes + 1).pow(dim as u32);
    for t in 0..count {
        let mut k = Vec::with_capacity(dim);
        let mut r = t;
        for _ in 0..dim {
            k.push((r % (2 * modes + 1)) as f64 - modes as f64);
            r /= 2 * modes + 1;
        }
        let c = rng.normal();
        let phase = rng.range(0.0, 2.0 * PI);
        terms.push((k, c, phase));
    }
    let norm: f64 = terms.iter().map(|(_, c, _)| c.abs()).sum();
    let scale = amp / norm;
    move |x: &[f64]| {
        terms
            .iter()
            .map(|(k, c, ph)| c * scale * (k.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + ph).cos())
            .sum()
    }
}

pub fn random_scalar(chart: &Arc<Chart>, rng: &mut CounterRng, modes: usize, amp: f64) -> ScalarField {
    let f = random_trig(rng, chart.dim(), modes, amp);
    ScalarField::from_fn(chart, f)
}

/// Random band-limited symmetric (0,2) field.
pub fn random_symmetric(chart: &Arc<Chart>, rng: &mut CounterRng, modes: usize, amp: f64) -> TensorField {
    let n = chart.dim();
    let fs: Vec<Vec<_>> = (0..n)
        .map(|i| (0..n).map(|j| if j >= i { Some(random_trig(rng, n, modes, amp)) } else { None }).collect())
        .collect();
    TensorField::symmetric_from_fn(chart, |x, h| {
        for i in 0..n {
            for j in i..n {
                h[i * n + j] = fs[i][j].as_ref().unwrap()(x);
            }
        }
    })
}

pub fn random_vector(chart: &Arc<Chart>, rng: &mut CounterRng, modes: usize, amp: f64) -> TensorField {
    let n = chart.dim();
    let fs: Vec<_> = (0..n).map(|_| random_trig(rng, n, modes, amp)).collect();
    TensorField::vector_from_fn(chart, |x, v| {
        for (k, f) in fs.iter().enumerate() {
            v[k] = f(x);
        }
    })
}

/// Random positive-definite band-limited metric `c·I + A Aᵀ / n`, with `A`
/// a random trigonometric matrix field of amplitude `amp`.
pub fn random_riemannian(chart: &Arc<Chart>, rng: &mut CounterRng, modes: usize, amp: f64) -> Result<MetricField> {
    let n = chart.dim();
    let a: Vec<_> = (0..n * n).map(|_| random_trig(rng, n, modes, amp)).collect();
    let floor = rng.range(0.5, 1.5);
    let m = MetricField::new(
        TensorField::symmetric_from_fn(chart, |x, g| {
            let av: Vec<f64> = a.iter().map(|f| f(x)).collect();
            for i in 0..n {
                for j in i..n {
                    let s: f64 = (0..n).map(|k| av[i * n + k] * av[j * n + k]).sum();
                    g[i * n + j] = s / n as f64 + if i == j { floor } else { 0.0 };
                }
            }
        }),
        Inertia::riemannian(n),
    )?;
    Ok(if chart.fully_periodic() { m.with_scheme(Scheme::Spectral) } else { m })
}

/// Constant diagonal metric with the given entries.
pub fn constant_diagonal(chart: &Arc<Chart>, diag: &[f64], inertia: Inertia) -> Result<MetricField> {
    let n = chart.dim();
    MetricField::new(
        TensorField::symmetric_from_fn(chart, |_, g| {
            for i in 0..n {
                g[i * n + i] = diag[i];
            }
        }),
        inertia,
    )
}
