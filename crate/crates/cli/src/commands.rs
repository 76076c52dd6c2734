//! Module-level commands operating on user files.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use serde_json::{json, Value};

use polymet_core::chern_weil::{euler_integral, family_constancy, sphere_gauss_bonnet, FamilyFunctional};
use polymet_core::cone::{john_metric, polymetric_failures, Inertia, MetricField, Polymetric};
use polymet_core::connection::{bounded_geometry_report, curvature, metric_compatibility_residual};
use polymet_core::gauge::{adjoint_identity_residual, slice_decompose};
use polymet_core::geodesic::{integrate, Spray};
use polymet_core::grid::{Chart, ScalarField, Scheme, TensorField};
use polymet_core::models;
use polymet_core::rng::CounterRng;
use polymet_core::scales::{end_growth_diagnostic, graph_distances, qi_fit, sobolev_equivalence_constants};
use polymet_core::spectral::{
    callias_index_1d, de_rham_index, de_rham_index_sphere, sphere_complex, torus_complex, FormComplex,
};

use crate::error::{CliError, CliResult};
use crate::files::{read_metric, read_polymetric, read_samples, read_tensor, FamilySpec};

fn stats(values: &[f64]) -> Value {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = values.iter().sum::<f64>() / values.len().max(1) as f64;
    json!({ "min": min, "max": max, "mean": mean })
}

/// Nodewise inertia check of every component; `ok` iff all pass.
pub fn cone_validate(path: &Path) -> CliResult<(Value, bool)> {
    let blob = read_polymetric(path)?;
    let failures = polymetric_failures(&blob.components, &blob.inertias);
    let chart = blob.components[0].chart().clone();
    let same_chart = blob.components.iter().all(|t| **t.chart() == *chart);
    let per_component: Vec<usize> =
        (0..blob.components.len()).map(|i| failures.iter().filter(|(c, _)| *c == i).count()).collect();
    let first = failures.first().map(|(c, f)| {
        json!({
            "component": c,
            "node": f.node,
            "coords": f.coords,
            "expected": blob.inertias[*c].to_string(),
            "found": f.found.to_string(),
        })
    });
    let ok = failures.is_empty() && same_chart;
    let v = json!({
        "components": blob.components.len(),
        "inertias": blob.inertias.iter().map(|i| i.to_string()).collect::<Vec<_>>(),
        "nodes": chart.len(),
        "shared_chart": same_chart,
        "failures_per_component": per_component,
        "first_failure": first,
        "valid": ok,
    });
    Ok((v, ok))
}

pub fn cone_john(path: &Path) -> CliResult<Value> {
    let samples = read_samples(path)?;
    let c = john_metric(&samples)?;
    Ok(serde_json::to_value(c).expect("certificate serializes"))
}

pub fn curvature_report(path: &Path) -> CliResult<Value> {
    let g = read_metric(path)?;
    let k = curvature(&g)?;
    let res = k.symmetry_residuals(&g);
    let bg = bounded_geometry_report(&g, 0)?;
    Ok(json!({
        "resolution": g.chart().resolution(),
        "scheme": g.scheme().name(),
        "scalar_curvature": stats(k.scalar.values()),
        "symmetry_residuals": res,
        "max_symmetry_residual": res.max(),
        "metric_compatibility": metric_compatibility_residual(&g)?,
        "sup_riemann_norm": bg.sup_norms[0],
        "sup_gauss_curvature": bg.sup_gauss_curvature,
    }))
}

pub fn gauge_adjoint(trials: usize, seed: u64, resolution: usize, tol: f64) -> CliResult<(Value, bool)> {
    let chart = Arc::new(Chart::torus(2, resolution)?);
    let mut rng = CounterRng::new(seed);
    let mut records = Vec::with_capacity(trials);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let g = models::random_riemannian(&chart, &mut rng, 2, 0.8)?;
        let x = models::random_vector(&chart, &mut rng, 2, 1.0);
        let h = models::random_symmetric(&chart, &mut rng, 2, 1.0);
        let r = adjoint_identity_residual(&g, &x, &h)?;
        worst = worst.max(r.residual);
        records.push(r);
    }
    let ok = worst < tol;
    Ok((json!({ "trials": records, "max_residual": worst, "tolerance": tol, "pass": ok }), ok))
}

pub fn gauge_slice(metric: &Path, tensor: &Path) -> CliResult<Value> {
    let g = read_metric(metric)?;
    let h = read_tensor(tensor)?;
    let s = slice_decompose(&g, &h)?;
    Ok(serde_json::to_value(s).expect("decomposition serializes"))
}

fn parse_list(s: &str, what: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("{what}: `{v}` is not a number"))))
        .collect()
}

pub fn parse_point(s: &str, what: &str) -> CliResult<Vec<f64>> {
    parse_list(s, what)
}

/// Trajectory CSV with columns `t, x0.., v0.., speed`.
pub fn geodesic_csv(metric: &Path, x: &[f64], v: &[f64], t: f64, dt: f64, every: usize) -> CliResult<String> {
    let g = read_metric(metric)?;
    let sp = Spray::new(&g)?;
    let r = integrate(&sp, x, v, t, dt, Some(every.max(1)))?;
    let n = x.len();
    let mut s = String::from("t");
    for i in 0..n {
        let _ = write!(s, ",x{i}");
    }
    for i in 0..n {
        let _ = write!(s, ",v{i}");
    }
    s.push_str(",speed\n");
    for p in &r.trajectory {
        let _ = write!(s, "{:.16e}", p.t);
        for c in p.position.iter().chain(&p.velocity) {
            let _ = write!(s, ",{c:.16e}");
        }
        let _ = writeln!(s, ",{:.16e}", p.speed);
    }
    Ok(s)
}

pub fn chern_gauss_bonnet(metric: Option<&Path>, sphere: Option<usize>) -> CliResult<Value> {
    match (metric, sphere) {
        (Some(path), None) => {
            let g = read_metric(path)?;
            let v = euler_integral(&g)?;
            Ok(json!({ "euler_integral": v, "euler_characteristic": v.round() }))
        }
        (None, Some(n)) => {
            let r = sphere_gauss_bonnet(n, n)?;
            Ok(json!({ "sphere": r, "euler_integral": r.extrapolated, "euler_characteristic": r.extrapolated.round() }))
        }
        _ => Err(CliError::Usage("give exactly one of --metric or --sphere".into())),
    }
}

pub fn chern_family(spec: &Path) -> CliResult<Value> {
    let spec = FamilySpec::read(spec)?;
    let rec = family_constancy(&spec.members()?, FamilyFunctional::EulerIntegral)?;
    Ok(json!({ "parameters": spec.parameters, "record": rec }))
}

fn spectra(complex: &FormComplex, cap: f64) -> CliResult<Vec<Vec<f64>>> {
    (0..=complex.dim)
        .map(|k| Ok(complex.laplacian(k)?.eigenvalues()?.into_iter().filter(|&l| l <= cap).collect()))
        .collect()
}

pub fn index_derham(metric: Option<&Path>, sphere_band: Option<usize>, cap: Option<f64>) -> CliResult<Value> {
    match (metric, sphere_band) {
        (Some(path), None) => {
            let g = read_metric(path)?;
            let r = de_rham_index(&g)?;
            let spectrum = match cap {
                Some(c) => Some(spectra(&torus_complex(&g, None)?, c)?),
                None => None,
            };
            Ok(json!({ "report": r, "spectrum_cap": cap, "spectra": spectrum }))
        }
        (None, Some(band)) => {
            let r = de_rham_index_sphere(band, |_, _| 0.0)?;
            let spectrum = match cap {
                Some(c) => Some(spectra(&sphere_complex(band, |_, _| 0.0)?.complex, c)?),
                None => None,
            };
            Ok(json!({ "report": r, "spectrum_cap": cap, "spectra": spectrum }))
        }
        _ => Err(CliError::Usage("give exactly one of --metric or --sphere-band".into())),
    }
}

pub fn potential_fn(name: &str) -> CliResult<fn(f64) -> f64> {
    Ok(match name {
        "tanh" => f64::tanh,
        "minus-tanh" => |x: f64| -x.tanh(),
        "constant" => |_| 1.0,
        "triple-kink" => |x: f64| (x - 5.0).tanh() * x.tanh() * (x + 5.0).tanh(),
        other => {
            return Err(CliError::Usage(format!(
                "unknown potential `{other}` (tanh, minus-tanh, constant, triple-kink)"
            )))
        }
    })
}

pub fn index_callias(potential: &str, l: f64, n: usize) -> CliResult<Value> {
    let f = potential_fn(potential)?;
    let chart = Arc::new(Chart::new(1, &[(-l, l)], &[n], &[false])?);
    let r = callias_index_1d(&ScalarField::from_fn(&chart, |x| f(x[0])))?;
    Ok(json!({ "potential": potential, "L": l, "N": n, "report": r }))
}

pub fn index_family(spec: &Path, cap: Option<f64>) -> CliResult<Value> {
    let spec = FamilySpec::read(spec)?;
    let members = spec.members()?;
    let mut rows = Vec::with_capacity(members.len());
    for (s, g) in spec.parameters.iter().zip(&members) {
        let r = de_rham_index(g)?;
        let spectrum = match cap {
            Some(c) => Some(spectra(&torus_complex(g, None)?, c)?),
            None => None,
        };
        rows.push(json!({ "parameter": s, "betti": r.betti, "index": r.index, "spectra": spectrum }));
    }
    Ok(json!({ "members": rows, "spectrum_cap": cap }))
}

pub fn scales_qi(g0: &Path, g1: &Path, pairs: usize, seed: u64) -> CliResult<Value> {
    let a = read_metric(g0)?;
    let b = read_metric(g1)?;
    if a.chart() != b.chart() && **a.chart() != **b.chart() {
        return Err(polymet_core::Error::ChartMismatch.into());
    }
    let len = a.chart().len();
    let mut rng = CounterRng::new(seed);
    let mut sample = Vec::with_capacity(pairs);
    while sample.len() < pairs {
        let (i, j) = (rng.below(len), rng.below(len));
        if i != j {
            sample.push((i.min(j), i.max(j)));
        }
    }
    let d0 = graph_distances(&a, &sample, "g0")?;
    let d1 = graph_distances(&b, &sample, "g1")?;
    let fit = qi_fit(&d0, &d1)?;
    Ok(json!({ "C": fit.mult, "c": fit.add, "violations": fit.residual_violations, "pairs": pairs }))
}

pub fn scales_warped(a: f64, lengths: &[f64], per_unit: usize, n_theta: usize) -> CliResult<Value> {
    let e = end_growth_diagnostic(a, lengths, per_unit, n_theta)?;
    Ok(json!({ "a": e.a, "trend": e.rows, "nonuniform": e.nonuniform }))
}

pub fn scales_sobolev(g: &Path, h: &Path, k: usize, samples: usize, seed: u64) -> CliResult<Value> {
    let gs = read_polymetric(g)?.into_polymetric()?;
    let hs = read_polymetric(h)?.into_polymetric()?;
    let chart = gs.chart().clone();
    let mut rng = CounterRng::new(seed);
    let fields: Vec<TensorField> = (0..samples).map(|_| models::random_scalar(&chart, &mut rng, 3, 1.0).to_tensor()).collect();
    let rec = sobolev_equivalence_constants(&gs, &hs, &fields, k)?;
    Ok(serde_json::to_value(rec).expect("record serializes"))
}

/// Named metric recipes for `polymet generate metric`.
pub fn generate_metric(model: &str, resolution: usize, param: f64, seed: u64) -> CliResult<MetricField> {
    let n = resolution;
    Ok(match model {
        "flat-torus" => models::flat_torus(n)?,
        "bumpy-torus" => models::bumpy_torus(n, param)?,
        "random-torus" => {
            let chart = Arc::new(Chart::torus(2, n)?);
            models::random_riemannian(&chart, &mut CounterRng::new(seed), 2, param)?
        }
        "lorentz-torus" => {
            let chart = Arc::new(Chart::torus(2, n)?);
            models::constant_diagonal(&chart, &[1.0, -1.0], Inertia::new(1, 1))?.with_scheme(Scheme::Spectral)
        }
        "round-sphere" => models::round_sphere(n, n, models::sphere_delta(n))?,
        "half-plane" => models::half_plane(8, n)?,
        "warped-end" => models::warped_cylinder(param, 10.0, n, 16)?,
        other => {
            return Err(CliError::Usage(format!(
                "unknown model `{other}` (flat-torus, bumpy-torus, random-torus, lorentz-torus, round-sphere, half-plane, warped-end)"
            )))
        }
    })
}

/// Polymetric of several models on one chart.
pub fn generate_polymetric(models: &[String], resolution: usize, param: f64, seed: u64) -> CliResult<Vec<MetricField>> {
    let metrics = models
        .iter()
        .enumerate()
        .map(|(i, m)| generate_metric(m, resolution, param, seed.wrapping_add(i as u64)))
        .collect::<CliResult<Vec<_>>>()?;
    let chart = metrics[0].chart();
    if metrics.iter().any(|g| **g.chart() != **chart) {
        return Err(polymet_core::Error::ChartMismatch.into());
    }
    Ok(metrics)
}

/// Named tensor recipes on the chart of `like` (or the `resolution` torus).
pub fn generate_tensor(model: &str, like: Option<&Path>, resolution: usize, amplitude: f64, seed: u64) -> CliResult<TensorField> {
    let chart = match like {
        Some(p) => read_metric(p)?.chart().clone(),
        None => Arc::new(Chart::torus(2, resolution)?),
    };
    let mut rng = CounterRng::new(seed);
    Ok(match model {
        "random-symmetric" => models::random_symmetric(&chart, &mut rng, 2, amplitude),
        "random-vector" => models::random_vector(&chart, &mut rng, 2, amplitude),
        "random-scalar" => models::random_scalar(&chart, &mut rng, 2, amplitude).to_tensor(),
        "bump" => {
            let n = chart.dim();
            TensorField::symmetric_from_fn(&chart, |x, h| {
                let f = amplitude * x.iter().map(|c| c.sin()).product::<f64>();
                for i in 0..n {
                    h[i * n + i] = f;
                }
            })
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown tensor model `{other}` (random-symmetric, random-vector, random-scalar, bump)"
            )))
        }
    })
}

pub fn polymetric_summary(p: &Polymetric) -> Value {
    json!({
        "components": p.len(),
        "inertias": p.inertias().iter().map(|i| i.to_string()).collect::<Vec<_>>(),
        "resolution": p.chart().resolution(),
    })
}
