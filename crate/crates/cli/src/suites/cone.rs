use std::f64::consts::PI;

use polymet_core::cone::{
    convex_path, inertia_by_minors, inertia_of, john_metric, stability_radius, validate_polymetric, Inertia,
};
use polymet_core::grid::TensorField;
use polymet_core::models;
use polymet_core::rng::CounterRng;
use polymet_core::Error;

use super::{flag, random_metric, torus, Ctx};

/// Smaller eigenvalue of a symmetric 2x2 block, in closed form.
fn min_eig2(m: &[f64]) -> f64 {
    let (a, b, c) = (m[0], m[1], m[3]);
    0.5 * (a + c) - (0.25 * (a - c) * (a - c) + b * b).sqrt()
}

fn random_sym(rng: &mut CounterRng, n: usize) -> Vec<f64> {
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = rng.normal();
            a[i * n + j] = v;
            a[j * n + i] = v;
        }
    }
    a
}

/// `Sᵀ A S`, symmetrized.
fn congruence(a: &[f64], s: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let mut acc = 0.0;
            for k in 0..n {
                for l in 0..n {
                    acc += s[k * n + i] * a[k * n + l] * s[l * n + j];
                }
            }
            out[i * n + j] = acc;
            out[j * n + i] = acc;
        }
    }
    out
}

fn half_ellipse(k: usize, a: f64, b: f64, phase: f64) -> Vec<Vec<f64>> {
    (0..k)
        .map(|i| {
            let t = PI * i as f64 / k as f64 + phase;
            vec![a * t.cos(), b * t.sin()]
        })
        .collect()
}

pub(super) fn run(ctx: &mut Ctx) {
    let cfg = ctx.cfg;
    let n = cfg.resolution;
    let rng = ctx.rng.clone();

    ctx.check("convexity", None, |x| {
        let chart = torus(n)?;
        x.resolution("torus", &[n, n]);
        let mut r = rng.split(0);
        let pairs = cfg.count("convexity_pairs");
        let (mut lost, mut interpolants, mut min_eig) = (0usize, 0usize, f64::INFINITY);
        for _ in 0..pairs {
            let g0 = random_metric(cfg, &chart, &mut r)?;
            let g1 = random_metric(cfg, &chart, &mut r)?;
            for k in 0..=20 {
                match convex_path(&g0, &g1, k as f64 / 20.0) {
                    Ok(g) => {
                        interpolants += 1;
                        min_eig = (0..chart.len()).map(|v| min_eig2(g.at(v))).fold(min_eig, f64::min);
                    }
                    Err(Error::SignatureLost { .. }) => lost += 1,
                    Err(e) => return Err(e),
                }
            }
        }
        Ok((
            vec![
                ("pairs", pairs as f64),
                ("interpolants", interpolants as f64),
                ("signature_lost", lost as f64),
                ("oracle_min_eigenvalue", min_eig),
            ],
            lost == 0 && min_eig > 0.0,
        ))
    });

    ctx.check("indefinite_path", None, |_| {
        let chart = torus(16)?;
        let g0 = models::constant_diagonal(&chart, &[1.0, -1.0], Inertia::new(1, 1))?;
        let g1 = models::constant_diagonal(&chart, &[-1.0, 1.0], Inertia::new(1, 1))?;
        let lost = matches!(convex_path(&g0, &g1, 0.5), Err(Error::SignatureLost { node: 0 }));
        Ok((vec![("signature_lost_at_midpoint", flag(lost))], lost))
    });

    ctx.check("stability", None, |_| {
        let chart = torus(n)?;
        let mut r = rng.split(1);
        let g = random_metric(cfg, &chart, &mut r)?;
        let eps = stability_radius(&g);
        let trials = cfg.count("perturbations");
        let (mut kept, mut min_eig) = (0usize, f64::INFINITY);
        for _ in 0..trials {
            let h = models::random_symmetric(&chart, &mut r, cfg.modes, 1.0);
            // Frobenius norm bounds the operator norm from above.
            let sup = (0..chart.len()).map(|k| h.at(k).iter().map(|v| v * v).sum::<f64>().sqrt()).fold(0.0, f64::max);
            match g.perturbed(&h, 0.99 * eps / sup) {
                Ok(p) => {
                    kept += 1;
                    min_eig = (0..chart.len()).map(|v| min_eig2(p.at(v))).fold(min_eig, f64::min);
                }
                Err(Error::InertiaMismatch { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        // −(λ_min + δ)·v vᵀ at the weakest node: operator norm 2.01·ε.
        let (node, e) = (0..chart.len())
            .map(|k| (k, g.eigen_at(k)))
            .min_by(|a, b| a.1.min_abs().total_cmp(&b.1.min_abs()))
            .expect("chart has nodes");
        let v = [e.vectors[0], e.vectors[2]];
        let s = 2.01 * eps;
        let mut data = vec![0.0; chart.len() * 4];
        for i in 0..2 {
            for j in 0..2 {
                data[node * 4 + i * 2 + j] = -s * v[i] * v[j];
            }
        }
        let h = TensorField::new(chart.clone(), 0, 2, false, data)?.symmetrized()?;
        let breaks = matches!(g.perturbed(&h, 1.0), Err(Error::InertiaMismatch { node: k, .. }) if k == node);
        Ok((
            vec![
                ("radius", eps),
                ("perturbations", trials as f64),
                ("preserved", kept as f64),
                ("oracle_min_eigenvalue", min_eig),
                ("constructed_2.01_breaks", flag(breaks)),
            ],
            kept == trials && min_eig > 0.0 && breaks,
        ))
    });

    ctx.check("stability_examples", None, |_| {
        let chart = torus(16)?;
        let e = stability_radius(&models::euclidean(&chart)?);
        let d = stability_radius(&models::constant_diagonal(&chart, &[4.0, 9.0], Inertia::riemannian(2))?);
        Ok((vec![("euclidean", e), ("diag_4_9", d)], e == 0.5 && (d - 2.0).abs() < 1e-14))
    });

    ctx.check("sylvester", None, |_| {
        let mut r = rng.split(2);
        let trials = cfg.count("sylvester_trials");
        let (mut mismatches, mut minor_checks, mut minor_mismatches) = (0usize, 0usize, 0usize);
        for dim in 2..=4 {
            for _ in 0..trials {
                let a = random_sym(&mut r, dim);
                let s: Vec<f64> = (0..dim * dim).map(|_| r.normal()).collect();
                let base = inertia_of(&a, dim, 1e-9)?;
                if inertia_of(&congruence(&a, &s, dim), dim, 1e-9)? != base {
                    mismatches += 1;
                }
                if let Some(m) = inertia_by_minors(&a, dim) {
                    minor_checks += 1;
                    if m != base {
                        minor_mismatches += 1;
                    }
                }
            }
        }
        Ok((
            vec![
                ("trials", (3 * trials) as f64),
                ("congruence_mismatches", mismatches as f64),
                ("minor_comparisons", minor_checks as f64),
                ("minor_mismatches", minor_mismatches as f64),
            ],
            mismatches == 0 && minor_mismatches == 0,
        ))
    });

    ctx.check("polymetric", None, |_| {
        let chart = torus(16)?;
        let e = models::euclidean(&chart)?;
        let l = models::constant_diagonal(&chart, &[1.0, -1.0], Inertia::new(1, 1))?;
        let r2 = [Inertia::riemannian(2); 2];
        let valid = validate_polymetric(vec![e.components().clone(), e.components().clone()], &r2).is_ok();
        let bad = match validate_polymetric(vec![e.components().clone(), l.components().clone()], &r2) {
            Err(Error::InertiaMismatch { component, .. }) => component as f64,
            _ => -1.0,
        };
        let sphere = models::round_sphere(32, 16, 0.5)?;
        let u = polymet_core::grid::ScalarField::from_fn(sphere.chart(), |p| (2.0 * (0.3 * p[0].cos())).exp());
        let conformal = sphere.conformal(&u)?;
        let sphere_ok =
            validate_polymetric(vec![sphere.components().clone(), conformal.components().clone()], &r2).is_ok();
        Ok((
            vec![("euclidean_pair_valid", flag(valid)), ("mismatch_component_index", bad), ("sphere_conformal_valid", flag(sphere_ok))],
            valid && bad == 1.0 && sphere_ok,
        ))
    });

    let tol = ctx.tol("john_factor");
    ctx.check("john_square", Some(tol), |_| {
        let sq = vec![vec![1.0, 1.0], vec![1.0, -1.0], vec![-1.0, 1.0], vec![-1.0, -1.0]];
        let c = john_metric(&sq)?;
        let err = (c.bilipschitz_factor - 2f64.sqrt()).abs();
        let radius_err = (c.matrix[0] - 0.5).abs().max((c.matrix[3] - 0.5).abs()).max(c.matrix[1].abs());
        Ok((vec![("factor", c.bilipschitz_factor), ("factor_error", err), ("matrix_error", radius_err)], err < tol && radius_err < tol))
    });

    let tol = ctx.tol("john_ellipse");
    ctx.check("john_ellipse", Some(tol), |_| {
        let c = john_metric(&half_ellipse(4000, 2.0, 1.0, 0.0))?;
        let err = (c.matrix[0] - 0.25).abs().max((c.matrix[3] - 1.0).abs()).max(c.matrix[1].abs());
        let ferr = (c.bilipschitz_factor - 1.0).abs();
        Ok((vec![("matrix_error", err), ("factor", c.bilipschitz_factor)], err < tol && ferr < tol))
    });

    let tol = ctx.tol("john_equivariance");
    ctx.check("john_equivariance", Some(tol), |_| {
        let pts: Vec<Vec<f64>> = half_ellipse(5, 1.0, 1.5, 0.2);
        let t = [1.3, 0.4, -0.7, 0.9];
        let det = t[0] * t[3] - t[1] * t[2];
        let tinv = [t[3] / det, -t[1] / det, -t[2] / det, t[0] / det];
        let mapped: Vec<Vec<f64>> =
            pts.iter().map(|p| vec![t[0] * p[0] + t[1] * p[1], t[2] * p[0] + t[3] * p[1]]).collect();
        let q = john_metric(&pts)?;
        let qm = john_metric(&mapped)?;
        let mut err: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let mut want = 0.0;
                for a in 0..2 {
                    for b in 0..2 {
                        want += tinv[a * 2 + i] * q.matrix[a * 2 + b] * tinv[b * 2 + j];
                    }
                }
                err = err.max((qm.matrix[i * 2 + j] - want).abs());
            }
        }
        let ferr = (q.bilipschitz_factor - qm.bilipschitz_factor).abs();
        Ok((vec![("congruence_error", err), ("factor_difference", ferr)], err < tol && ferr < tol))
    });
}
