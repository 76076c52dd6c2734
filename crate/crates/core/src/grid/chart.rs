use serde::Serialize;

use crate::error::{Error, Result};

/// Smallest number of samples allowed on any axis.
pub const MIN_RESOLUTION: usize = 8;

/// A rectangular coordinate domain sampled on a uniform grid.
///
/// Nodes are stored row-major: axis 0 varies slowest. On a periodic axis the
/// upper endpoint is identified with the lower one and is not sampled.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Chart {
    bounds: Vec<(f64, f64)>,
    resolution: Vec<usize>,
    periodic: Vec<bool>,
    #[serde(skip)]
    strides: Vec<usize>,
}

impl Chart {
    pub fn new(
        dim: usize,
        bounds: &[(f64, f64)],
        resolution: &[usize],
        periodic: &[bool],
    ) -> Result<Chart> {
        if dim == 0 || bounds.len() != dim || resolution.len() != dim || periodic.len() != dim {
            return Err(Error::InvalidChart(format!(
                "dimension {dim} does not match {} bounds, {} resolutions, {} flags",
                bounds.len(),
                resolution.len(),
                periodic.len()
            )));
        }
        for (axis, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
                return Err(Error::InvalidBounds { axis, lo, hi });
            }
        }
        for (axis, &n) in resolution.iter().enumerate() {
            if n < MIN_RESOLUTION {
                return Err(Error::ResolutionTooSmall { axis, resolution: n });
            }
        }
        let mut strides = vec![1; dim];
        for axis in (0..dim.saturating_sub(1)).rev() {
            strides[axis] = strides[axis + 1] * resolution[axis + 1];
        }
        Ok(Chart {
            bounds: bounds.to_vec(),
            resolution: resolution.to_vec(),
            periodic: periodic.to_vec(),
            strides,
        })
    }

    /// Fully periodic box `[0, 2π)^dim` with `n` points per axis.
    pub fn torus(dim: usize, n: usize) -> Result<Chart> {
        let tau = 2.0 * std::f64::consts::PI;
        Chart::new(dim, &vec![(0.0, tau); dim], &vec![n; dim], &vec![true; dim])
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    pub fn periodic(&self) -> &[bool] {
        &self.periodic
    }

    pub fn is_periodic(&self, axis: usize) -> bool {
        self.periodic[axis]
    }

    pub fn fully_periodic(&self) -> bool {
        self.periodic.iter().all(|&p| p)
    }

    /// Number of grid nodes.
    pub fn len(&self) -> usize {
        self.resolution.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    pub fn length(&self, axis: usize) -> f64 {
        let (lo, hi) = self.bounds[axis];
        hi - lo
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        let n = self.resolution[axis];
        let intervals = if self.periodic[axis] { n } else { n - 1 };
        self.length(axis) / intervals as f64
    }

    pub fn coord(&self, axis: usize, k: usize) -> f64 {
        self.bounds[axis].0 + k as f64 * self.spacing(axis)
    }

    pub fn axis_coords(&self, axis: usize) -> Vec<f64> {
        (0..self.resolution[axis]).map(|k| self.coord(axis, k)).collect()
    }

    pub fn multi_index(&self, node: usize) -> Vec<usize> {
        (0..self.dim())
            .map(|a| (node / self.strides[a]) % self.resolution[a])
            .collect()
    }

    pub fn node_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn node_coords(&self, node: usize) -> Vec<f64> {
        (0..self.dim())
            .map(|a| self.coord(a, (node / self.strides[a]) % self.resolution[a]))
            .collect()
    }

    /// Per-axis quadrature weights: uniform on periodic axes, trapezoid otherwise.
    pub fn axis_weights(&self, axis: usize) -> Vec<f64> {
        let n = self.resolution[axis];
        let h = self.spacing(axis);
        let mut w = vec![h; n];
        if !self.periodic[axis] {
            w[0] = 0.5 * h;
            w[n - 1] = 0.5 * h;
        }
        w
    }

    /// Tensor-product cell weights, one per node.
    pub fn cell_weights(&self) -> Vec<f64> {
        let per_axis: Vec<Vec<f64>> = (0..self.dim()).map(|a| self.axis_weights(a)).collect();
        (0..self.len())
            .map(|node| {
                (0..self.dim())
                    .map(|a| per_axis[a][(node / self.strides[a]) % self.resolution[a]])
                    .product()
            })
            .collect()
    }

    /// Coordinate volume of the chart.
    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.length(a)).product()
    }

    /// Wraps periodic coordinates into `[lo, hi)`; returns `None` when a
    /// non-periodic coordinate falls outside its interval.
    pub fn wrap(&self, x: &[f64]) -> Option<Vec<f64>> {
        let mut out = Vec::with_capacity(x.len());
        for (a, &xa) in x.iter().enumerate() {
            let (lo, hi) = self.bounds[a];
            if !xa.is_finite() {
                return None;
            }
            if self.periodic[a] {
                let len = hi - lo;
                out.push(lo + (xa - lo).rem_euclid(len));
            } else {
                let slack = 1e-12 * (hi - lo);
                if xa < lo - slack || xa > hi + slack {
                    return None;
                }
                out.push(xa.clamp(lo, hi));
            }
        }
        Some(out)
    }

    /// Multilinear interpolation stencil at a (wrapped) point: node indices and weights.
    pub fn interpolation_stencil(&self, x: &[f64]) -> Option<Vec<(usize, f64)>> {
        let x = self.wrap(x)?;
        let dim = self.dim();
        let mut lower = vec![0usize; dim];
        let mut upper = vec![0usize; dim];
        let mut frac = vec![0.0; dim];
        for a in 0..dim {
            let n = self.resolution[a];
            let s = (x[a] - self.bounds[a].0) / self.spacing(a);
            let mut k = s.floor() as isize;
            if self.periodic[a] {
                let t = s - k as f64;
                let k0 = k.rem_euclid(n as isize) as usize;
                lower[a] = k0;
                upper[a] = (k0 + 1) % n;
                frac[a] = t;
            } else {
                k = k.clamp(0, n as isize - 2);
                lower[a] = k as usize;
                upper[a] = k as usize + 1;
                frac[a] = (s - k as f64).clamp(0.0, 1.0);
            }
        }
        let mut stencil = Vec::with_capacity(1 << dim);
        for corner in 0..(1usize << dim) {
            let mut node = 0;
            let mut w = 1.0;
            for a in 0..dim {
                if corner >> a & 1 == 1 {
                    node += upper[a] * self.strides[a];
                    w *= frac[a];
                } else {
                    node += lower[a] * self.strides[a];
                    w *= 1.0 - frac[a];
                }
            }
            if w != 0.0 {
                stencil.push((node, w));
            }
        }
        Some(stencil)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn circle_spacing() {
        let c = Chart::new(1, &[(0.0, 2.0 * PI)], &[64], &[true]).unwrap();
        assert_eq!(c.len(), 64);
        assert!((c.spacing(0) - 2.0 * PI / 64.0).abs() < 1e-15);
        assert!((c.coord(0, 63) - 63.0 * 2.0 * PI / 64.0).abs() < 1e-13);
    }

    #[test]
    fn open_axis_includes_endpoint() {
        let c = Chart::new(1, &[(0.0, 1.0)], &[11], &[false]).unwrap();
        assert!((c.coord(0, 10) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn flat_torus_chart() {
        let c = Chart::torus(2, 32).unwrap();
        assert_eq!(c.len(), 1024);
        assert!(c.fully_periodic());
        assert_eq!(c.multi_index(33), vec![1, 1]);
        assert_eq!(c.node_index(&[3, 5]), 3 * 32 + 5);
    }

    #[test]
    fn degenerate_interval_rejected() {
        let err = Chart::new(1, &[(0.0, 0.0)], &[64], &[true]).unwrap_err();
        assert!(matches!(err, Error::InvalidBounds { axis: 0, .. }));
    }

    #[test]
    fn coarse_axis_rejected() {
        let err = Chart::new(2, &[(0.0, 1.0), (0.0, 1.0)], &[16, 4], &[false, false]).unwrap_err();
        assert_eq!(err, Error::ResolutionTooSmall { axis: 1, resolution: 4 });
    }

    #[test]
    fn stencil_weights_sum_to_one() {
        let c = Chart::torus(2, 16).unwrap();
        let st = c.interpolation_stencil(&[7.0, -0.3]).unwrap();
        let total: f64 = st.iter().map(|(_, w)| w).sum();
        assert!((total - 1.0).abs() < 1e-14);
        let open = Chart::new(1, &[(0.0, 1.0)], &[9], &[false]).unwrap();
        assert!(open.interpolation_stencil(&[1.5]).is_none());
    }
}
