use std::sync::Arc;

use crate::cone::inertia::{inertia_from_eigenvalues, Inertia};
use crate::error::{Error, Result};
use crate::grid::{same_chart, Chart, Scheme, TensorField};
use crate::linalg::{jacobi_eigen, SymEigen};

/// Relative eigenvalue tolerance used when a metric is validated.
pub const DEFAULT_EIG_TOLERANCE: f64 = 1e-9;

/// A symmetric (0,2) field whose nodewise inertia equals a declared signature.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricField {
    components: TensorField,
    declared: Inertia,
    eig_tolerance: f64,
    scheme: Scheme,
}

/// First node where a field's inertia differs from the declared one.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeFailure {
    pub node: usize,
    pub coords: Vec<f64>,
    pub found: Inertia,
}

/// Nodewise inertia with `|λ| <= rel_tol · max|λ|` counted as zero.
pub fn node_inertia(block: &[f64], n: usize, rel_tol: f64) -> Inertia {
    let e = jacobi_eigen(block, n);
    let tol = rel_tol * e.max_abs();
    inertia_from_eigenvalues(&e.values, tol)
}

/// Checks every node of a symmetric field against `declared`.
pub fn first_inertia_failure(t: &TensorField, declared: Inertia, rel_tol: f64) -> Option<NodeFailure> {
    let n = t.chart().dim();
    (0..t.chart().len()).find_map(|node| {
        let found = node_inertia(t.at(node), n, rel_tol);
        (found != declared).then(|| NodeFailure { node, coords: t.chart().node_coords(node), found })
    })
}

impl MetricField {
    pub fn new(components: TensorField, declared: Inertia) -> Result<MetricField> {
        MetricField::with_tolerance(components, declared, DEFAULT_EIG_TOLERANCE)
    }

    pub fn with_tolerance(components: TensorField, declared: Inertia, eig_tolerance: f64) -> Result<MetricField> {
        check_metric_shape(&components)?;
        if declared.degenerate || declared.positive + declared.negative != components.chart().dim() {
            return Err(Error::ShapeMismatch(format!("declared inertia {declared} is not a nondegenerate signature")));
        }
        if let Some(fail) = first_inertia_failure(&components, declared, eig_tolerance) {
            return Err(Error::InertiaMismatch {
                component: 0,
                node: fail.node,
                coords: fail.coords,
                expected: declared.to_string(),
                found: fail.found.to_string(),
            });
        }
        Ok(MetricField { components, declared, eig_tolerance, scheme: Scheme::default() })
    }

    /// Riemannian metric from a closure filling the upper triangle.
    pub fn riemannian_from_fn(chart: &Arc<Chart>, f: impl Fn(&[f64], &mut [f64])) -> Result<MetricField> {
        let n = chart.dim();
        MetricField::new(TensorField::symmetric_from_fn(chart, f), Inertia::riemannian(n))
    }

    /// Differentiation scheme used by curvature and gauge operators.
    pub fn with_scheme(mut self, scheme: Scheme) -> MetricField {
        self.scheme = scheme;
        self
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn chart(&self) -> &Arc<Chart> {
        self.components.chart()
    }

    pub fn dim(&self) -> usize {
        self.chart().dim()
    }

    pub fn components(&self) -> &TensorField {
        &self.components
    }

    pub fn declared_inertia(&self) -> Inertia {
        self.declared
    }

    pub fn eig_tolerance(&self) -> f64 {
        self.eig_tolerance
    }

    /// Row-major `n x n` block at a node.
    pub fn at(&self, node: usize) -> &[f64] {
        self.components.at(node)
    }

    pub fn eigen_at(&self, node: usize) -> SymEigen {
        jacobi_eigen(self.at(node), self.dim())
    }

    /// Same metric multiplied by a positive constant.
    pub fn scaled(&self, c: f64) -> Result<MetricField> {
        let t = self.components.scaled(c);
        let mut m = MetricField::with_tolerance(t, self.declared, self.eig_tolerance)?;
        m.scheme = self.scheme;
        Ok(m)
    }

    /// Same metric multiplied pointwise by a positive function.
    pub fn conformal(&self, factor: &crate::grid::ScalarField) -> Result<MetricField> {
        let t = self.components.scaled_by(factor)?;
        let mut m = MetricField::with_tolerance(t, self.declared, self.eig_tolerance)?;
        m.scheme = self.scheme;
        Ok(m)
    }

    /// `self + t·h`, validated against the same signature.
    pub fn perturbed(&self, h: &TensorField, t: f64) -> Result<MetricField> {
        let sum = self.components.lin_comb(1.0, h, t)?.symmetrized()?;
        let mut m = MetricField::with_tolerance(sum, self.declared, self.eig_tolerance)?;
        m.scheme = self.scheme;
        Ok(m)
    }
}

fn check_metric_shape(t: &TensorField) -> Result<()> {
    if t.contravariant() != 0 || t.covariant() != 2 || !t.is_symmetric() {
        return Err(Error::ShapeMismatch("metric components must be a symmetric (0,2) field".into()));
    }
    Ok(())
}

/// `½ · min over nodes of min |λ|`: symmetric perturbations with smaller
/// nodewise operator norm cannot change the inertia.
pub fn stability_radius(g: &MetricField) -> f64 {
    let n = g.dim();
    let min_abs = (0..g.chart().len())
        .map(|node| jacobi_eigen(g.at(node), n).min_abs())
        .fold(f64::INFINITY, f64::min);
    0.5 * min_abs
}

/// Straight-line interpolation `(1-t) g0 + t g1`, revalidated.
pub fn convex_path(g0: &MetricField, g1: &MetricField, t: f64) -> Result<MetricField> {
    same_chart(g0.chart(), g1.chart())?;
    if g0.declared != g1.declared {
        return Err(Error::ShapeMismatch(format!(
            "endpoint signatures differ: {} vs {}",
            g0.declared, g1.declared
        )));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::ShapeMismatch(format!("path parameter {t} outside [0,1]")));
    }
    if t == 0.0 {
        return Ok(g0.clone());
    }
    if t == 1.0 {
        return Ok(MetricField { scheme: g0.scheme, ..g1.clone() });
    }
    let t_field = g0.components.lin_comb(1.0 - t, &g1.components, t)?;
    match first_inertia_failure(&t_field, g0.declared, g0.eig_tolerance) {
        Some(fail) => Err(Error::SignatureLost { node: fail.node }),
        None => Ok(MetricField { components: t_field, declared: g0.declared, eig_tolerance: g0.eig_tolerance, scheme: g0.scheme }),
    }
}

/// Finite ordered tuple of metrics on one chart.
#[derive(Debug, Clone, PartialEq)]
pub struct Polymetric {
    components: Vec<MetricField>,
}

impl Polymetric {
    pub fn components(&self) -> &[MetricField] {
        &self.components
    }

    pub fn inertias(&self) -> Vec<Inertia> {
        self.components.iter().map(|g| g.declared).collect()
    }

    pub fn chart(&self) -> &Arc<Chart> {
        self.components[0].chart()
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn from_metrics(components: Vec<MetricField>) -> Result<Polymetric> {
        let inertias = components.iter().map(|g| g.declared).collect::<Vec<_>>();
        let schemes = components.iter().map(|g| g.scheme).collect::<Vec<_>>();
        let mut p = validate_polymetric(components.into_iter().map(|g| g.components).collect(), &inertias)?;
        for (g, s) in p.components.iter_mut().zip(schemes) {
            g.scheme = s;
        }
        Ok(p)
    }
}

/// Every per-component, per-node inertia failure.
pub fn polymetric_failures(components: &[TensorField], inertias: &[Inertia]) -> Vec<(usize, NodeFailure)> {
    let mut out = Vec::new();
    for (i, (t, &inertia)) in components.iter().zip(inertias).enumerate() {
        let n = t.chart().dim();
        for node in 0..t.chart().len() {
            let found = node_inertia(t.at(node), n, DEFAULT_EIG_TOLERANCE);
            if found != inertia {
                out.push((i, NodeFailure { node, coords: t.chart().node_coords(node), found }));
            }
        }
    }
    out
}

/// Builds a polymetric iff every component has its declared inertia at every node.
pub fn validate_polymetric(components: Vec<TensorField>, inertias: &[Inertia]) -> Result<Polymetric> {
    if components.is_empty() {
        return Err(Error::ShapeMismatch("a polymetric needs at least one component".into()));
    }
    if components.len() != inertias.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} components but {} inertias",
            components.len(),
            inertias.len()
        )));
    }
    let chart = components[0].chart().clone();
    for t in &components[1..] {
        same_chart(&chart, t.chart())?;
    }
    let mut metrics = Vec::with_capacity(components.len());
    for (i, (t, &inertia)) in components.into_iter().zip(inertias).enumerate() {
        check_metric_shape(&t)?;
        if let Some(fail) = first_inertia_failure(&t, inertia, DEFAULT_EIG_TOLERANCE) {
            return Err(Error::InertiaMismatch {
                component: i,
                node: fail.node,
                coords: fail.coords,
                expected: inertia.to_string(),
                found: fail.found.to_string(),
            });
        }
        metrics.push(MetricField { components: t, declared: inertia, eig_tolerance: DEFAULT_EIG_TOLERANCE, scheme: Scheme::default() });
    }
    Ok(Polymetric { components: metrics })
}
