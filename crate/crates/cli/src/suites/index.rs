use std::f64::consts::PI;
use std::sync::Arc;

use polymet_core::cone::{convex_path, MetricField};
use polymet_core::grid::{Chart, ScalarField};
use polymet_core::models;
use polymet_core::spectral::{
    block_index_additivity, callias_index_1d, callias_operator, de_rham_index, de_rham_index_sphere, hodge_laplacian,
    sphere_complex, spectral_cutoff,
};

use super::{flag, torus, Ctx};

fn circle(n: usize) -> polymet_core::Result<MetricField> {
    let chart = Arc::new(Chart::new(1, &[(0.0, 2.0 * PI)], &[n], &[true])?);
    models::euclidean(&chart)
}

pub(crate) fn potential(f: impl Fn(f64) -> f64, l: f64, n: usize) -> polymet_core::Result<ScalarField> {
    let chart = Arc::new(Chart::new(1, &[(-l, l)], &[n], &[false])?);
    Ok(ScalarField::from_fn(&chart, |x| f(x[0])))
}

pub(super) fn run(ctx: &mut Ctx) {
    let cfg = ctx.cfg;
    let n = cfg.resolution;

    let tol = ctx.tol("circle_spectrum");
    ctx.check("circle_cutoff", Some(tol), |x| {
        x.resolution("circle", &[64]);
        let op = hodge_laplacian(&circle(64)?, 0)?;
        let vals = op.eigenvalues()?;
        let mut err: f64 = vals[0].abs();
        for m in 1..=8 {
            let want = (m * m) as f64;
            for v in &vals[2 * m - 1..=2 * m] {
                err = err.max((v - want).abs() / want);
            }
        }
        let below_half = spectral_cutoff(&op, 0.5)?.rank_below;
        let below = spectral_cutoff(&op, 4.5)?.rank_below;
        let at_one = spectral_cutoff(&op, 1.0)?;
        Ok((
            vec![
                ("eigenvalue_relative_error", err),
                ("rank_below_0.5", below_half as f64),
                ("rank_below_4.5", below as f64),
                ("rank_below_1_shifted", at_one.rank_below as f64),
            ],
            err < tol && below_half == 1 && below == 5 && at_one.rank_below == 3 && at_one.shifted,
        ))
    });

    ctx.check("cutoff_monotone", None, |_| {
        let op = hodge_laplacian(&circle(32)?, 0)?;
        let mut last = 0;
        let mut ok = true;
        for step in 0..40 {
            let r = spectral_cutoff(&op, 0.25 * step as f64 + 0.1)?.rank_below;
            ok &= r == last || r == last + 2 || (last == 0 && r == 1);
            last = r;
        }
        Ok((vec![("final_rank", last as f64)], ok))
    });

    ctx.check("cutoff_family", None, |_| {
        let chart = torus(16)?;
        let mut ranks = Vec::new();
        for k in 0..=4 {
            let g = models::bumpy_on(&chart, 0.05 * k as f64)?;
            ranks.push(spectral_cutoff(&hodge_laplacian(&g, 0)?, 1.5)?.rank_below);
        }
        let same = ranks.iter().all(|&r| r == 5);
        Ok((vec![("min_rank", *ranks.iter().min().unwrap() as f64), ("max_rank", *ranks.iter().max().unwrap() as f64)], same))
    });

    ctx.check("betti_torus", None, |x| {
        x.resolution("torus", &[n, n]);
        let flat = de_rham_index(&models::flat_torus(n)?)?;
        let bumpy = de_rham_index(&models::bumpy_torus(n, cfg.bump)?)?;
        let ok = [&flat, &bumpy].iter().all(|r| r.betti == [1, 2, 1] && r.index == 0);
        Ok((
            vec![
                ("flat_b0", flat.betti[0] as f64),
                ("flat_b1", flat.betti[1] as f64),
                ("flat_b2", flat.betti[2] as f64),
                ("bumpy_b0", bumpy.betti[0] as f64),
                ("bumpy_b1", bumpy.betti[1] as f64),
                ("bumpy_b2", bumpy.betti[2] as f64),
                ("flat_index", flat.index as f64),
                ("bumpy_index", bumpy.index as f64),
            ],
            ok,
        ))
    });

    ctx.check("betti_path", None, |x| {
        let chart = torus(n)?;
        let g0 = models::bumpy_on(&chart, cfg.bump)?;
        let g1 = MetricField::riemannian_from_fn(&chart, |p, g| {
            g[0] = 1.5 + 0.4 * p[1].cos();
            g[1] = 0.2 * p[0].sin();
            g[2] = g[1];
            g[3] = 1.0 + 0.3 * (p[0] + p[1]).sin();
        })?;
        let samples = cfg.count("path_samples").max(2);
        let mut rows = Vec::with_capacity(samples);
        let mut ok = true;
        for k in 0..samples {
            let s = k as f64 / (samples - 1) as f64;
            let r = de_rham_index(&convex_path(&g0, &g1, s)?)?;
            ok &= r.betti == [1, 2, 1] && r.index == 0;
            rows.push(vec![s, r.betti[0] as f64, r.betti[1] as f64, r.betti[2] as f64, r.index as f64, r.smallest_nonzero[0]]);
        }
        x.table("derham_path", &["s", "b0", "b1", "b2", "index", "gap0"], rows);
        Ok((vec![("samples", samples as f64)], ok))
    });

    let tol = ctx.tol("sphere_spectrum");
    ctx.check("sphere_index", Some(tol), |x| {
        let band = cfg.count("sphere_band");
        x.resolution("sphere_band", &[band]);
        let sc = sphere_complex(band, |_, _| 0.0)?;
        let vals = sc.complex.laplacian(0)?.eigenvalues()?;
        let spec_err = (vals[1] - 2.0).abs().max((vals[4] - 6.0).abs());
        let round = de_rham_index_sphere(band, |_, _| 0.0)?;
        let bumped = de_rham_index_sphere(band.min(8), |t, p| 0.3 * t.cos() + 0.2 * (t.sin() * p.cos()))?;
        Ok((
            vec![
                ("round_index", round.index as f64),
                ("round_b1", round.betti[1] as f64),
                ("conformal_index", bumped.index as f64),
                ("spectrum_error", spec_err),
                ("subcomplex_defect", sc.subcomplex_defect),
            ],
            round.index == 2 && round.betti == [1, 0, 1] && bumped.index == 2 && spec_err < tol,
        ))
    });

    ctx.check("callias", None, |x| {
        x.resolution("callias", &[2000]);
        let plus = callias_index_1d(&potential(f64::tanh, 20.0, 2000)?)?;
        let minus = callias_index_1d(&potential(|t| -t.tanh(), 20.0, 2000)?)?;
        let constant = callias_index_1d(&potential(|_| 1.0, 20.0, 2000)?)?;
        let ok = (plus.index, minus.index, constant.index) == (1, -1, 0) && plus.agree && minus.agree && constant.agree;
        Ok((
            vec![
                ("tanh_index", plus.index as f64),
                ("minus_tanh_index", minus.index as f64),
                ("constant_index", constant.index as f64),
                ("counts_agree", flag(plus.agree && minus.agree && constant.agree)),
            ],
            ok,
        ))
    });

    ctx.check("callias_additivity", None, |_| {
        let plus = callias_operator(&potential(f64::tanh, 20.0, 800)?)?;
        let minus = callias_operator(&potential(|t| -t.tanh(), 20.0, 800)?)?;
        let two = block_index_additivity(&[plus.clone(), plus.clone()])?;
        let zero = block_index_additivity(&[plus, minus])?;
        Ok((
            vec![
                ("plus_plus_sum", two.sum as f64),
                ("plus_plus_assembled", two.assembled as f64),
                ("plus_minus_assembled", zero.assembled as f64),
            ],
            (two.sum, two.assembled, zero.sum, zero.assembled) == (2, 2, 0, 0),
        ))
    });
}
