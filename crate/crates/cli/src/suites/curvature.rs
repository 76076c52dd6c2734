use polymet_core::connection::{bounded_geometry_report, curvature, metric_compatibility_residual};
use polymet_core::models;

use super::Ctx;

pub(super) fn run(ctx: &mut Ctx) {
    let cfg = ctx.cfg;
    let n = cfg.resolution;

    let tol = ctx.tol("sphere_scalar");
    ctx.check("sphere_scalar", Some(tol), |x| {
        // Unit sphere, θ ∈ [0.5, π − 0.5].
        let g = models::round_sphere(256, 16, 0.5)?;
        x.resolution("sphere", &[256, 16]);
        let k = curvature(&g)?;
        let err = k.scalar.values().iter().map(|s| (s - 2.0).abs()).fold(0.0, f64::max);
        let riem = bounded_geometry_report(&g, 0)?.sup_norms[0];
        Ok((
            vec![("max_error", err), ("symmetry_residual", k.symmetry_residuals(&g).max()), ("sup_riemann_norm", riem)],
            err < tol,
        ))
    });

    let tol = ctx.tol("half_plane_scalar");
    ctx.check("half_plane_scalar", Some(tol), |x| {
        let g = models::half_plane(8, 512)?;
        x.resolution("half_plane", &[8, 512]);
        let k = curvature(&g)?;
        let err = k.scalar.values().iter().map(|s| (s + 2.0).abs()).fold(0.0, f64::max);
        Ok((vec![("max_error", err), ("symmetry_residual", k.symmetry_residuals(&g).max())], err < tol))
    });

    let tol = ctx.tol("flat_scalar");
    ctx.check("flat_scalar", Some(tol), |x| {
        let g = models::flat_torus(n)?;
        x.resolution("torus", &[n, n]);
        let k = curvature(&g)?;
        let err = k.scalar.max_abs();
        Ok((vec![("max_abs_scalar", err)], err < tol))
    });

    let tol = ctx.tol("symmetry");
    ctx.check("symmetry", Some(tol), |_| {
        let g = models::bumpy_torus(n, cfg.bump)?;
        let r = curvature(&g)?.symmetry_residuals(&g);
        let sphere = models::round_sphere(256, 16, 0.5)?;
        let rs = curvature(&sphere)?.symmetry_residuals(&sphere).max();
        let half = models::half_plane(8, 512)?;
        let rh = curvature(&half)?.symmetry_residuals(&half).max();
        Ok((
            vec![
                ("antisymmetry_first_pair", r.antisymmetry_first_pair),
                ("antisymmetry_second_pair", r.antisymmetry_second_pair),
                ("pair_symmetry", r.pair_symmetry),
                ("first_bianchi", r.first_bianchi),
                ("ricci_contraction", r.ricci_contraction),
                ("sphere_max", rs),
                ("half_plane_max", rh),
            ],
            r.max().max(rs).max(rh) < tol,
        ))
    });

    let tol = ctx.tol("compatibility");
    ctx.check("compatibility", Some(tol), |_| {
        let g = models::bumpy_torus(n, cfg.bump)?;
        let r = metric_compatibility_residual(&g)?;
        Ok((vec![("nabla_g", r)], r < tol))
    });
}
