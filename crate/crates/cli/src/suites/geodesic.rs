use std::f64::consts::PI;

use polymet_core::geodesic::{chart_distance, exp_map, integrate, Spray};
use polymet_core::models;

use super::Ctx;

pub(super) fn run(ctx: &mut Ctx) {
    let cfg = ctx.cfg;
    let n = cfg.resolution;
    let sphere = models::round_sphere(128, 64, models::sphere_delta(128)).and_then(|g| Ok((Spray::new(&g)?, g)));

    let tol = ctx.tol("sphere_distance");
    ctx.check("sphere_distance", Some(tol), |x| {
        let (sp, _) = sphere.as_ref().map_err(Clone::clone)?;
        x.resolution("sphere", &[128, 64]);
        // Meridian from θ = π/4 for length π/2.
        let r = integrate(sp, &[PI / 4.0, 0.0], &[1.0, 0.0], PI / 2.0, 1e-3, None)?;
        let pos = (r.state.position[0] - 3.0 * PI / 4.0).abs();
        let len = (r.initial_speed * PI / 2.0 - PI / 2.0).abs();
        Ok((vec![("endpoint_error", pos), ("length_error", len), ("relative_drift", r.relative_drift())], pos < tol && len < tol))
    });

    let tol = ctx.tol("great_circle");
    ctx.check("great_circle", Some(tol), |_| {
        let (sp, _) = sphere.as_ref().map_err(Clone::clone)?;
        let alpha: f64 = 0.6;
        let t: f64 = 2.0;
        let r = integrate(sp, &[PI / 2.0, 0.0], &[alpha.sin(), alpha.cos()], t, 1e-3, None)?;
        let theta = (-alpha.sin() * t.sin()).acos();
        let phi = (alpha.cos() * t.sin()).atan2(t.cos());
        let err = (r.state.position[0] - theta).abs().max((r.state.position[1] - phi).abs());
        Ok((vec![("endpoint_error", err)], err < tol))
    });

    let tol = ctx.tol("drift_rate");
    ctx.check("drift_rate", Some(tol), |x| {
        x.resolution("torus", &[n, n]);
        let flat = exp_map(&models::flat_torus(n)?, &[1.0, 2.0], &[1.0, 2f64.sqrt()], 10.0, 1e-3)?;
        let bumpy = exp_map(&models::bumpy_torus(n, cfg.bump)?, &[0.4, 1.1], &[0.8, -0.5], 2.0, 1e-3)?;
        let flat_rate = flat.relative_drift() / 10.0;
        let bumpy_rate = bumpy.relative_drift() / 2.0;
        Ok((vec![("flat_per_unit_time", flat_rate), ("bumpy_per_unit_time", bumpy_rate)], flat_rate.max(bumpy_rate) < tol))
    });

    let tol = ctx.tol("homogeneity");
    ctx.check("homogeneity", Some(tol), |_| {
        let g = models::bumpy_torus(n, cfg.bump)?;
        let sp = Spray::new(&g)?;
        let mut err: f64 = 0.0;
        for c in [0.5, 2.0] {
            let a = integrate(&sp, &[0.4, 1.1], &[0.8 * c, -0.5 * c], 1.5, 1e-3, None)?;
            let b = integrate(&sp, &[0.4, 1.1], &[0.8, -0.5], 1.5 * c, 1e-3, None)?;
            err = err.max(chart_distance(g.chart(), &a.state.position, &b.state.position));
        }
        Ok((vec![("max_endpoint_gap", err)], err < tol))
    });
}
