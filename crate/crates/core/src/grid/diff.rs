use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Chart, ScalarField, TensorField};

/// Finite-difference or Fourier scheme for partial derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub enum Scheme {
    /// Second-order central differences, second-order one-sided at open ends.
    Central2,
    /// Fourth-order central differences, fourth-order one-sided at open ends.
    #[default]
    Central4,
    /// Trigonometric interpolation; periodic axes only. The Nyquist mode of an
    /// even grid is differentiated to zero.
    Spectral,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Central2 => "central2",
            Scheme::Central4 => "central4",
            Scheme::Spectral => "spectral",
        }
    }

    pub fn parse(s: &str) -> Option<Scheme> {
        match s {
            "central2" => Some(Scheme::Central2),
            "central4" => Some(Scheme::Central4),
            "spectral" => Some(Scheme::Spectral),
            _ => None,
        }
    }
}

/// Dense Fourier differentiation matrix for `n` equispaced points on a period `length`.
pub fn spectral_matrix(n: usize, length: f64) -> Vec<f64> {
    let h = 2.0 * PI / n as f64;
    let scale = 2.0 * PI / length;
    let mut d = vec![0.0; n * n];
    for j in 0..n {
        for k in 0..n {
            if j == k {
                continue;
            }
            let m = j as isize - k as isize;
            let sign = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            let arg = m as f64 * h / 2.0;
            let v = if n.is_multiple_of(2) { 0.5 * sign / arg.tan() } else { 0.5 * sign / arg.sin() };
            d[j * n + k] = scale * v;
        }
    }
    d
}

fn diff_line(line: &[f64], out: &mut [f64], h: f64, periodic: bool, scheme: Scheme, dmat: &[f64]) {
    let n = line.len();
    match scheme {
        Scheme::Spectral => {
            for (j, o) in out.iter_mut().enumerate() {
                let row = &dmat[j * n..(j + 1) * n];
                *o = row.iter().zip(line).map(|(a, b)| a * b).sum();
            }
        }
        Scheme::Central2 => {
            let inv = 1.0 / (2.0 * h);
            if periodic {
                for j in 0..n {
                    out[j] = (line[(j + 1) % n] - line[(j + n - 1) % n]) * inv;
                }
            } else {
                for j in 1..n - 1 {
                    out[j] = (line[j + 1] - line[j - 1]) * inv;
                }
                out[0] = (-3.0 * line[0] + 4.0 * line[1] - line[2]) * inv;
                out[n - 1] = (3.0 * line[n - 1] - 4.0 * line[n - 2] + line[n - 3]) * inv;
            }
        }
        Scheme::Central4 => {
            let inv = 1.0 / (12.0 * h);
            let at = |j: isize| line[j.rem_euclid(n as isize) as usize];
            if periodic {
                for j in 0..n as isize {
                    out[j as usize] = (-at(j + 2) + 8.0 * at(j + 1) - 8.0 * at(j - 1) + at(j - 2)) * inv;
                }
            } else {
                for j in 2..n - 2 {
                    out[j] = (-line[j + 2] + 8.0 * line[j + 1] - 8.0 * line[j - 1] + line[j - 2]) * inv;
                }
                let f = line;
                out[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) * inv;
                out[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) * inv;
                let m = n - 1;
                out[m] = (25.0 * f[m] - 48.0 * f[m - 1] + 36.0 * f[m - 2] - 16.0 * f[m - 3] + 3.0 * f[m - 4])
                    * inv;
                out[m - 1] =
                    (3.0 * f[m] + 10.0 * f[m - 1] - 18.0 * f[m - 2] + 6.0 * f[m - 3] - f[m - 4]) * inv;
            }
        }
    }
}

/// Partial derivative along `axis` of interleaved node data with `ncomp`
/// components per node.
pub fn diff_raw(chart: &Chart, data: &[f64], ncomp: usize, axis: usize, scheme: Scheme) -> Result<Vec<f64>> {
    if axis >= chart.dim() {
        return Err(Error::ShapeMismatch(format!("axis {axis} out of range")));
    }
    if scheme == Scheme::Spectral && !chart.is_periodic(axis) {
        return Err(Error::SchemeUnsupported { scheme: scheme.name(), axis });
    }
    debug_assert_eq!(data.len(), chart.len() * ncomp);
    let n = chart.resolution()[axis];
    let stride = chart.stride(axis);
    let h = chart.spacing(axis);
    let periodic = chart.is_periodic(axis);
    let dmat = if scheme == Scheme::Spectral { spectral_matrix(n, chart.length(axis)) } else { Vec::new() };
    let mut out = vec![0.0; data.len()];
    let mut line = vec![0.0; n];
    let mut dline = vec![0.0; n];
    for start in 0..chart.len() {
        if !(start / stride).is_multiple_of(n) {
            continue;
        }
        for c in 0..ncomp {
            for (k, v) in line.iter_mut().enumerate() {
                *v = data[(start + k * stride) * ncomp + c];
            }
            diff_line(&line, &mut dline, h, periodic, scheme, &dmat);
            for (k, v) in dline.iter().enumerate() {
                out[(start + k * stride) * ncomp + c] = *v;
            }
        }
    }
    Ok(out)
}

impl ScalarField {
    pub fn differentiate(&self, axis: usize, scheme: Scheme) -> Result<ScalarField> {
        let d = diff_raw(self.chart(), self.values(), 1, axis, scheme)?;
        Ok(ScalarField::from_raw(self.chart().clone(), d))
    }

    /// Differential as a (0,1) field.
    pub fn gradient(&self, scheme: Scheme) -> Result<TensorField> {
        let chart = self.chart();
        let n = chart.dim();
        let parts: Vec<Vec<f64>> =
            (0..n).map(|a| diff_raw(chart, self.values(), 1, a, scheme)).collect::<Result<_>>()?;
        let mut data = vec![0.0; chart.len() * n];
        for node in 0..chart.len() {
            for a in 0..n {
                data[node * n + a] = parts[a][node];
            }
        }
        Ok(TensorField::from_raw(chart.clone(), 0, 1, false, data))
    }
}

impl TensorField {
    /// Componentwise partial derivative along one axis; same type as `self`.
    pub fn differentiate(&self, axis: usize, scheme: Scheme) -> Result<TensorField> {
        let d = diff_raw(self.chart(), self.data(), self.components(), axis, scheme)?;
        Ok(TensorField::from_raw(
            self.chart().clone(),
            self.contravariant(),
            self.covariant(),
            self.is_symmetric(),
            d,
        ))
    }

    /// All coordinate partials, appended as a trailing covariant slot.
    pub fn partial_gradient(&self, scheme: Scheme) -> Result<TensorField> {
        let chart: &Arc<Chart> = self.chart();
        let n = chart.dim();
        let c = self.components();
        let parts: Vec<Vec<f64>> =
            (0..n).map(|a| diff_raw(chart, self.data(), c, a, scheme)).collect::<Result<_>>()?;
        let mut data = vec![0.0; chart.len() * c * n];
        for node in 0..chart.len() {
            for comp in 0..c {
                for a in 0..n {
                    data[(node * c + comp) * n + a] = parts[a][node * c + comp];
                }
            }
        }
        Ok(TensorField::from_raw(chart.clone(), self.contravariant(), self.covariant() + 1, false, data))
    }
}
