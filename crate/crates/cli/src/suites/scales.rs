use polymet_core::cone::Polymetric;
use polymet_core::grid::{ScalarField, TensorField};
use polymet_core::models;
use polymet_core::scales::{
    end_growth_diagnostic, graph_distances, lattice_pairs, multi_sobolev_norm, qi_fit, sobolev_equivalence_constants,
};

use super::{flag, Ctx};

pub(super) fn run(ctx: &mut Ctx) {
    let cfg = ctx.cfg;
    let n = cfg.resolution;
    let rng = ctx.rng.clone();
    let stride = [(n / 8).max(1), (n / 8).max(1)];

    let tol = ctx.tol("qi_identity");
    ctx.check("qi_identity", Some(tol), |x| {
        x.resolution("torus", &[n, n]);
        let g = models::bumpy_torus(n, cfg.bump)?;
        let s = graph_distances(&g, &lattice_pairs(g.chart(), &stride), "g")?;
        let fit = qi_fit(&s, &s)?;
        Ok((
            vec![("C", fit.mult), ("c", fit.add), ("violations", fit.residual_violations as f64), ("pairs", s.distances.len() as f64)],
            (fit.mult - 1.0).abs() <= tol && fit.add.abs() <= tol && fit.residual_violations == 0,
        ))
    });

    let tol = ctx.tol("qi_scaling");
    ctx.check("qi_scaling", Some(tol), |_| {
        let lam = 2.7;
        let g = models::bumpy_torus(n, cfg.bump)?;
        let pairs = lattice_pairs(g.chart(), &stride);
        let s0 = graph_distances(&g, &pairs, "g")?;
        let s1 = graph_distances(&g.scaled(lam * lam)?, &pairs, "lambda^2 g")?;
        let fit = qi_fit(&s0, &s1)?;
        Ok((
            vec![("lambda", lam), ("C", fit.mult), ("c", fit.add)],
            (fit.mult - lam).abs() < tol && fit.add.abs() < 1e-9 && fit.residual_violations == 0,
        ))
    });

    ctx.check("warped_trend", None, |x| {
        let rates = cfg.param("warped_rates");
        let lengths = cfg.param("warped_lengths");
        let mut rows = Vec::new();
        let mut flat_uniform = true;
        let mut flagged = Vec::new();
        for &a in rates {
            let e = end_growth_diagnostic(a, lengths, 4, 16)?;
            for r in &e.rows {
                rows.push(vec![a, r.t_max, r.mult, r.add, r.pairs as f64, flag(e.nonuniform)]);
                if a == 0.0 {
                    flat_uniform &= r.mult == 1.0;
                }
            }
            flagged.push(e.nonuniform);
        }
        x.table("warped_end", &["a", "T", "C", "c", "pairs", "nonuniform"], rows);
        let count = flagged.iter().filter(|&&f| f).count();
        Ok((vec![("rates", rates.len() as f64), ("nonuniform_rates", count as f64), ("flat_end_uniform", flag(flat_uniform))], flat_uniform))
    });

    let tol = ctx.tol("sobolev_closed_form");
    ctx.check("sobolev_closed_form", Some(tol), |_| {
        let g = models::flat_torus(n)?;
        let u = ScalarField::from_fn(g.chart(), |p| p[0].sin()).to_tensor();
        let v = multi_sobolev_norm(&Polymetric::from_metrics(vec![g])?, &u, 1)?;
        let err = (v - 2.0 * std::f64::consts::PI).abs();
        Ok((vec![("norm", v), ("error", err)], err < tol))
    });

    let tol = ctx.tol("sobolev_duplication");
    ctx.check("sobolev_duplication", Some(tol), |_| {
        let b = models::bumpy_torus(n, cfg.bump)?;
        let u = ScalarField::from_fn(b.chart(), |p| p[0].sin()).to_tensor();
        let single = multi_sobolev_norm(&Polymetric::from_metrics(vec![b.clone()])?, &u, 2)?;
        let double = multi_sobolev_norm(&Polymetric::from_metrics(vec![b.clone(), b])?, &u, 2)?;
        let rel = (double * double - 2.0 * single * single).abs() / (double * double);
        Ok((vec![("single", single), ("double", double), ("relative_error", rel)], rel <= tol))
    });

    let tol = ctx.tol("sobolev_envelope");
    ctx.check("sobolev_envelope", Some(tol), |_| {
        let g = models::flat_torus(n)?;
        let chart = g.chart().clone();
        let mut r = rng.split(0);
        let count = cfg.count("sobolev_samples");
        let samples: Vec<TensorField> =
            (0..count).map(|_| models::random_scalar(&chart, &mut r, cfg.modes + 1, 1.0).to_tensor()).collect();
        let gs = Polymetric::from_metrics(vec![g])?;
        let hs = Polymetric::from_metrics(vec![models::bumpy_torus(n, cfg.bump)?])?;
        let rec = sobolev_equivalence_constants(&gs, &hs, &samples, 1)?;
        let (lo, hi) = rec.envelope.unwrap_or((f64::NAN, f64::NAN));
        let inside = lo * (1.0 - tol) <= rec.c1 && rec.c1 <= rec.c2 && rec.c2 <= hi * (1.0 + tol);
        Ok((
            vec![("samples", count as f64), ("C1", rec.c1), ("C2", rec.c2), ("envelope_lower", lo), ("envelope_upper", hi), ("rho", rec.rho)],
            inside,
        ))
    });
}
