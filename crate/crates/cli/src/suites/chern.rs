use std::sync::Arc;

use polymet_core::chern_weil::{
    characteristic_form, curvature_two_form_in, euler_form, euler_form_from, euler_integral, family_constancy,
    first_pontryagin, generating_series, sphere_gauss_bonnet, FamilyFunctional, Form, FormMatrix, SeriesKind,
};
use polymet_core::grid::{Chart, Scheme};
use polymet_core::models;

use super::{max_abs_diff, Ctx};

/// Constant antisymmetric curvature matrix of rank 4 over a 4-dimensional base.
fn sample_curvature() -> FormMatrix {
    let mut m = FormMatrix::zeros(4, 4);
    for a in 0..4 {
        for b in a + 1..4 {
            let mut f = Form::zero(4);
            for i in 0..4 {
                for j in i + 1..4 {
                    let v = ((1 + a + 2 * b) as f64 * 0.7 + (i + 3 * j) as f64 * 0.31).sin();
                    f = f.add(&Form::two_form(4, i, j, v));
                }
            }
            m.set(b, a, f.scale(-1.0));
            m.set(a, b, f);
        }
    }
    m
}

pub(super) fn run(ctx: &mut Ctx) {
    let cfg = ctx.cfg;
    let n = cfg.resolution;

    let tol = ctx.tol("gauss_bonnet_sphere");
    ctx.check("gauss_bonnet_sphere", Some(tol), |x| {
        let m = cfg.count("sphere_resolution");
        x.resolution("sphere", &[m, m]);
        let r = sphere_gauss_bonnet(m, m)?;
        let err = (r.extrapolated - 2.0).abs();
        Ok((
            vec![("delta", r.delta), ("coarse", r.coarse), ("fine", r.fine), ("extrapolated", r.extrapolated), ("error", err)],
            err < tol,
        ))
    });

    let tol = ctx.tol("gauss_bonnet_torus");
    ctx.check("gauss_bonnet_torus", Some(tol), |x| {
        x.resolution("torus", &[n, n]);
        let v = euler_integral(&models::bumpy_torus(n, cfg.bump)?)?;
        Ok((vec![("euler_integral", v)], v.abs() < tol))
    });

    let tol = ctx.tol("frame_independence");
    ctx.check("frame_independence", Some(tol), |_| {
        let g = models::bumpy_torus(n, cfg.bump)?;
        let a = euler_form(&g)?;
        let b = euler_form_from(&curvature_two_form_in(&g, &[1, 0])?)?;
        let d = max_abs_diff(a.values(), b.values());
        Ok((vec![("max_difference", d), ("max_euler_density", a.max_abs())], d < tol))
    });

    let tol = ctx.tol("family_constancy");
    ctx.check("family_constancy", Some(tol), |x| {
        let chart = Arc::new(Chart::torus(2, n)?);
        let members = cfg.count("family_members");
        let bumps: Vec<f64> = (0..members).map(|k| 0.5 * k as f64 / (members.max(2) - 1) as f64).collect();
        let family = bumps
            .iter()
            .map(|&b| Ok(models::bumpy_on(&chart, b)?.with_scheme(Scheme::Spectral)))
            .collect::<polymet_core::Result<Vec<_>>>()?;
        let rec = family_constancy(&family, FamilyFunctional::EulerIntegral)?;
        let worst = rec.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        x.table("euler_family", &["bump", "euler_integral"], bumps.iter().zip(&rec.values).map(|(b, v)| vec![*b, *v]).collect());
        Ok((vec![("members", members as f64), ("max_deviation", rec.max_deviation), ("max_abs", worst)], rec.max_deviation < tol && worst < tol))
    });

    let tol = ctx.tol("series_coefficients");
    ctx.check("series_coefficients", Some(tol), |_| {
        let want: [(SeriesKind, [f64; 5]); 4] = [
            (SeriesKind::Ahat, [1.0, 0.0, -1.0 / 24.0, 0.0, 7.0 / 5760.0]),
            (SeriesKind::L, [1.0, 0.0, 1.0 / 3.0, 0.0, -1.0 / 45.0]),
            (SeriesKind::Todd, [1.0, 0.5, 1.0 / 12.0, 0.0, -1.0 / 720.0]),
            (SeriesKind::Ch, [1.0, 1.0, 0.5, 1.0 / 6.0, 1.0 / 24.0]),
        ];
        let coeff = want.iter().map(|(k, w)| max_abs_diff(&generating_series(*k, 4), w)).fold(0.0, f64::max);
        // Degree four: Â = −p₁/24, L = p₁/3.
        let m = sample_curvature();
        let p1 = first_pontryagin(&m);
        let ahat = characteristic_form(&m, SeriesKind::Ahat, 4)?.degree_part(4);
        let l = characteristic_form(&m, SeriesKind::L, 4)?.degree_part(4);
        let scale = p1.max_abs().max(1e-300);
        let ahat_err = ahat.add(&p1.scale(1.0 / 24.0)).max_abs() / scale;
        let l_err = l.add(&p1.scale(-1.0 / 3.0)).max_abs() / scale;
        Ok((
            vec![("taylor_coefficients", coeff), ("ahat_vs_p1", ahat_err), ("l_vs_p1", l_err), ("p1_top", p1.top())],
            coeff < tol && ahat_err < tol && l_err < tol && p1.max_abs() > 0.0,
        ))
    });
}
