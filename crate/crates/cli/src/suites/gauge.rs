use polymet_core::connection::curvature;
use polymet_core::gauge::{
    adjoint_identity_residual, conformal_variation_check, lie_derivative_metric, slice_decompose,
    volume_first_variation, SliceDecomposition,
};
use polymet_core::grid::{ScalarField, TensorField};
use polymet_core::models;

use super::{max_abs_diff, random_metric, torus, Ctx};

pub(super) fn run(ctx: &mut Ctx) {
    let cfg = ctx.cfg;
    let n = cfg.resolution;
    let rng = ctx.rng.clone();

    let tol = ctx.tol("adjoint");
    ctx.check("adjoint", Some(tol), |x| {
        let chart = torus(n)?;
        x.resolution("torus", &[n, n]);
        let mut r = rng.split(0);
        let trials = cfg.count("adjoint_trials");
        let mut rows = Vec::with_capacity(trials);
        let mut worst: f64 = 0.0;
        for t in 0..trials {
            let g = random_metric(cfg, &chart, &mut r)?;
            let v = models::random_vector(&chart, &mut r, cfg.modes, 1.0);
            let h = models::random_symmetric(&chart, &mut r, cfg.modes, 1.0);
            let rec = adjoint_identity_residual(&g, &v, &h)?;
            worst = worst.max(rec.residual);
            rows.push(vec![
                t as f64,
                rec.lie_pairing,
                rec.div_pairing,
                rec.bianchi_pairing,
                rec.bianchi_pairing - rec.div_pairing,
                rec.residual,
            ]);
        }
        x.table("adjoint_discrepancy", &["trial", "lie_pairing", "div_pairing", "bianchi_pairing", "bianchi_minus_div", "residual"], rows);
        Ok((vec![("trials", trials as f64), ("max_residual", worst)], worst < tol))
    });

    let tol = ctx.tol("conformal");
    ctx.check("conformal", Some(tol), |x| {
        let sphere = models::round_sphere(64, 16, 0.5)?;
        x.resolution("sphere", &[64, 16]);
        let a = conformal_variation_check(&sphere, &ScalarField::constant(sphere.chart(), 0.3), tol)?;
        let bumpy = models::bumpy_torus(n, cfg.bump)?;
        let u = ScalarField::from_fn(bumpy.chart(), |p| p[0].sin() * p[1].sin());
        let b = conformal_variation_check(&bumpy, &u, tol)?;
        let mut r = rng.split(1);
        let g = random_metric(cfg, bumpy.chart(), &mut r)?;
        let u = models::random_scalar(g.chart(), &mut r, cfg.modes, 0.5);
        let c = conformal_variation_check(&g, &u, tol)?;
        let worst = a.max_residual.max(b.max_residual).max(c.max_residual);
        Ok((
            vec![
                ("sphere_constant", a.max_residual),
                ("bumpy_torus", b.max_residual),
                ("random_torus", c.max_residual),
                ("volume_rate_error", (c.fd_vol_rate - c.formula_vol_rate).abs()),
            ],
            worst < tol,
        ))
    });

    let tol = ctx.tol("scaling_law");
    ctx.check("scaling_law", Some(tol), |_| {
        let c: f64 = 0.3;
        let mut worst: f64 = 0.0;
        for g in [models::bumpy_torus(n, cfg.bump)?, models::round_sphere(64, 16, 0.5)?] {
            let s = curvature(&g)?.scalar;
            let scaled = curvature(&g.scaled((2.0 * c).exp())?)?.scalar;
            let want: Vec<f64> = s.values().iter().map(|v| (-2.0 * c).exp() * v).collect();
            worst = worst.max(max_abs_diff(scaled.values(), &want));
        }
        Ok((vec![("max_error", worst)], worst < tol))
    });

    let tol = ctx.tol("volume");
    ctx.check("volume", Some(tol), |_| {
        let g = models::bumpy_torus(n, cfg.bump)?;
        let mut r = rng.split(2);
        let h = models::random_symmetric(g.chart(), &mut r, cfg.modes, 1.0);
        let v = volume_first_variation(&g, &h)?;
        Ok((vec![("fd_rate", v.fd_rate), ("formula_rate", v.formula_rate), ("residual", v.residual)], v.residual < tol))
    });

    // Slice decompositions: constructed and random inputs.
    let slices = (|| -> polymet_core::Result<Vec<(SliceDecomposition, f64)>> {
        let flat = models::flat_torus(n)?;
        let chart = flat.chart().clone();
        let xv = TensorField::vector_from_fn(&chart, |p, v| {
            v[0] = p[1].sin();
            v[1] = p[0].sin();
        });
        let pure = slice_decompose(&flat, &lie_derivative_metric(&xv, &flat)?)?;
        // Pure gauge: the whole field is orbit, and X is recovered.
        let pure_err = (pure.complement_norm / pure.h_norm).max(max_abs_diff(pure.vector_part.data(), xv.data()));
        let tt = TensorField::symmetric_from_fn(&chart, |_, t| {
            t[0] = 1.0;
            t[1] = 0.5;
            t[3] = -1.0;
        });
        let tt = slice_decompose(&flat, &tt)?;
        let tt_err = tt.orbit_norm / tt.h_norm;
        let mut r = rng.split(3);
        let h = models::random_symmetric(&chart, &mut r, cfg.modes, 1.0);
        let random_flat = slice_decompose(&flat, &h)?;
        let bumpy = models::bumpy_torus(n, cfg.bump)?;
        let h = models::random_symmetric(&chart, &mut r, cfg.modes, 1.0);
        let random_bumpy = slice_decompose(&bumpy, &h)?;
        Ok(vec![(pure, pure_err), (tt, tt_err), (random_flat, 0.0), (random_bumpy, 0.0)])
    })();

    let tol = ctx.tol("slice_reconstruction");
    ctx.check("slice_reconstruction", Some(tol), |_| {
        let s = slices.as_ref().map_err(Clone::clone)?;
        let residual = s.iter().map(|(d, _)| d.residual).fold(0.0, f64::max);
        let constructed = s.iter().map(|(_, e)| *e).fold(0.0, f64::max);
        Ok((vec![("max_residual", residual), ("constructed_error", constructed)], residual < tol && constructed < tol))
    });
    let tol = ctx.tol("slice_divergence");
    ctx.check("slice_divergence", Some(tol), |_| {
        let s = slices.as_ref().map_err(Clone::clone)?;
        let d = s.iter().map(|(d, _)| d.divergence_defect).fold(0.0, f64::max);
        let b = s.iter().map(|(d, _)| d.bianchi_defect).fold(0.0, f64::max);
        Ok((vec![("max_divergence_defect", d), ("max_bianchi_defect", b)], d < tol))
    });
    let tol = ctx.tol("slice_orthogonality");
    ctx.check("slice_orthogonality", Some(tol), |_| {
        let s = slices.as_ref().map_err(Clone::clone)?;
        let o = s.iter().map(|(d, _)| d.orthogonality_defect).fold(0.0, f64::max);
        let it = s.iter().map(|(d, _)| d.iterations).max().unwrap_or(0);
        Ok((vec![("max_cosine", o), ("max_iterations", it as f64)], o < tol))
    });
}
