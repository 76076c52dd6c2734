use crate::error::{Error, Result};
use crate::grid::field::same_chart;
use crate::grid::ScalarField;

/// `Σ f · weight · cell volume` with trapezoid weights on open axes.
pub fn integrate(f: &ScalarField, weight: &ScalarField) -> Result<f64> {
    same_chart(f.chart(), weight.chart())?;
    if let Some(node) = weight.values().iter().position(|&w| w < 0.0) {
        return Err(Error::Format(format!("negative quadrature weight at node {node}")));
    }
    Ok(integrate_raw(f.chart(), f.values(), Some(weight.values())))
}

/// Unchecked quadrature of raw node values against optional node weights.
pub(crate) fn integrate_raw(chart: &crate::grid::Chart, f: &[f64], weight: Option<&[f64]>) -> f64 {
    let cells = chart.cell_weights();
    match weight {
        Some(w) => f.iter().zip(w).zip(&cells).map(|((a, b), c)| a * b * c).sum(),
        None => f.iter().zip(&cells).map(|(a, c)| a * c).sum(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Chart, Scheme};
    use std::f64::consts::PI;
    use std::sync::Arc;

    #[test]
    fn unit_box() {
        let c = Arc::new(Chart::new(2, &[(0.0, 1.0), (0.0, 1.0)], &[9, 13], &[false, false]).unwrap());
        let one = ScalarField::constant(&c, 1.0);
        assert!((integrate(&one, &one).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn sine_squared_on_circle() {
        let c = Arc::new(Chart::new(1, &[(0.0, 2.0 * PI)], &[32], &[true]).unwrap());
        let f = ScalarField::from_fn(&c, |x| x[0].sin().powi(2));
        let one = ScalarField::constant(&c, 1.0);
        assert!((integrate(&f, &one).unwrap() - PI).abs() < 1e-10);
    }

    #[test]
    fn sphere_area_converges() {
        let area = |n: usize| {
            let h = PI / (n as f64 + 7.0);
            let delta = 4.0 * h;
            let c = Arc::new(
                Chart::new(2, &[(delta, PI - delta), (0.0, 2.0 * PI)], &[n, n], &[false, true]).unwrap(),
            );
            let one = ScalarField::constant(&c, 1.0);
            let w = ScalarField::from_fn(&c, |x| x[0].sin());
            (integrate(&one, &w).unwrap(), delta)
        };
        let (a1, d1) = area(64);
        let (a2, d2) = area(128);
        // truncated cap area is 4π cos δ; the deficit shrinks with δ
        assert!((4.0 * PI - a2).abs() < (4.0 * PI - a1).abs());
        assert!((a2 - 4.0 * PI * d2.cos()).abs() < 1e-3);
        assert!((a1 - 4.0 * PI * d1.cos()).abs() < 4e-3);
    }

    #[test]
    fn chart_mismatch() {
        let a = Arc::new(Chart::torus(1, 16).unwrap());
        let b = Arc::new(Chart::torus(1, 32).unwrap());
        let fa = ScalarField::constant(&a, 1.0);
        let fb = ScalarField::constant(&b, 1.0);
        assert_eq!(integrate(&fa, &fb).unwrap_err(), Error::ChartMismatch);
    }

    #[test]
    fn integration_by_parts_on_torus() {
        let c = Arc::new(Chart::torus(2, 32).unwrap());
        let f = ScalarField::from_fn(&c, |x| (x[0].sin() * x[1].cos()).exp());
        let g = ScalarField::from_fn(&c, |x| 1.0 / (2.0 + (2.0 * x[0] + x[1]).cos()));
        let one = ScalarField::constant(&c, 1.0);
        for scheme in [Scheme::Central4, Scheme::Spectral] {
            let df = f.differentiate(0, scheme).unwrap();
            let dg = g.differentiate(0, scheme).unwrap();
            let a = integrate(&df.zip_with(&g, |p, q| p * q).unwrap(), &one).unwrap();
            let b = integrate(&f.zip_with(&dg, |p, q| p * q).unwrap(), &one).unwrap();
            let scale = integrate(&f.map(|v| v * v), &one).unwrap().sqrt()
                * integrate(&g.map(|v| v * v), &one).unwrap().sqrt();
            assert!((a + b).abs() < 1e-8 * scale, "{scheme:?}: {}", a + b);
        }
    }
}
