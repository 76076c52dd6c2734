//! Characteristic forms from curvature: the curvature 2-form in an
//! orthonormal frame, the Euler (Pfaffian) form, and the multiplicative
//! series Â, L, Todd and the Chern character as pointwise differential
//! forms.
//!
//! Conventions, fixed once here:
//! - Real (orthogonal) curvature `Ω` enters Â and L through the Pontryagin
//!   power sums `Σ_j x_j^{2k} = (−1)^k/2 · tr((Ω/2π)^{2k})`, so
//!   `p₁ = −tr(Ω∧Ω)/8π²`, `Â = ∏ (x/2)/sinh(x/2)`, `L = ∏ x/tanh x`.
//! - Todd and ch take an already normalized real curvature `X` (for a
//!   unitary connection `X = iF/2π`), with Chern power sums
//!   `Σ_j x_j^k = tr(X^k)`: `ch = tr exp X`, `Td = ∏ x/(1 − e^{−x})`.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use crate::cone::MetricField;
use crate::connection::{christoffel_with, curvature_with, inverse_metric};
use crate::error::{Error, Result};
use crate::grid::{integrate_raw, Chart, ScalarField};

/// Inhomogeneous exterior form at a point: one coefficient per basis blade,
/// blades indexed by bitmask over `dim` coordinate directions.
#[derive(Debug, Clone, PartialEq)]
pub struct Form {
    dim: usize,
    c: Vec<f64>,
}

fn blade_sign(a: usize, b: usize) -> f64 {
    // (−1)^{#{(i, j) : i ∈ a, j ∈ b, i > j}}
    let mut swaps = 0;
    let mut bb = b;
    while bb != 0 {
        let j = bb.trailing_zeros();
        swaps += (a >> (j + 1)).count_ones();
        bb &= bb - 1;
    }
    if swaps % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

impl Form {
    pub fn zero(dim: usize) -> Form {
        Form { dim, c: vec![0.0; 1 << dim] }
    }

    pub fn scalar(dim: usize, v: f64) -> Form {
        let mut f = Form::zero(dim);
        f.c[0] = v;
        f
    }

    /// `v · dx^i ∧ dx^j`.
    pub fn two_form(dim: usize, i: usize, j: usize, v: f64) -> Form {
        let mut f = Form::zero(dim);
        if i != j {
            let sign = if i < j { 1.0 } else { -1.0 };
            f.c[(1 << i) | (1 << j)] = sign * v;
        }
        f
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Coefficient of the blade `mask`.
    pub fn coeff(&self, mask: usize) -> f64 {
        self.c[mask]
    }

    /// Coefficient of `dx^1 ∧ … ∧ dx^n`.
    pub fn top(&self) -> f64 {
        self.c[(1 << self.dim) - 1]
    }

    pub fn add(&self, o: &Form) -> Form {
        Form { dim: self.dim, c: self.c.iter().zip(&o.c).map(|(a, b)| a + b).collect() }
    }

    pub fn scale(&self, s: f64) -> Form {
        Form { dim: self.dim, c: self.c.iter().map(|a| a * s).collect() }
    }

    pub fn wedge(&self, o: &Form) -> Form {
        let mut out = Form::zero(self.dim);
        for (a, &x) in self.c.iter().enumerate() {
            if x == 0.0 {
                continue;
            }
            for (b, &y) in o.c.iter().enumerate() {
                if y == 0.0 || a & b != 0 {
                    continue;
                }
                out.c[a | b] += blade_sign(a, b) * x * y;
            }
        }
        out
    }

    /// Homogeneous part of the given degree.
    pub fn degree_part(&self, degree: usize) -> Form {
        let mut out = Form::zero(self.dim);
        for (m, v) in self.c.iter().enumerate() {
            if m.count_ones() as usize == degree {
                out.c[m] = *v;
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.c.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Square matrix of even forms (entries commute under the wedge product).
#[derive(Debug, Clone, PartialEq)]
pub struct FormMatrix {
    pub rank: usize,
    pub entries: Vec<Form>,
}

impl FormMatrix {
    pub fn zeros(rank: usize, dim: usize) -> FormMatrix {
        FormMatrix { rank, entries: vec![Form::zero(dim); rank * rank] }
    }

    pub fn get(&self, a: usize, b: usize) -> &Form {
        &self.entries[a * self.rank + b]
    }

    pub fn set(&mut self, a: usize, b: usize, f: Form) {
        self.entries[a * self.rank + b] = f;
    }

    fn dim(&self) -> usize {
        self.entries.first().map(|f| f.dim).unwrap_or(0)
    }

    pub fn mul(&self, o: &FormMatrix) -> FormMatrix {
        let r = self.rank;
        let mut out = FormMatrix::zeros(r, self.dim());
        for a in 0..r {
            for b in 0..r {
                let mut acc = Form::zero(self.dim());
                for c in 0..r {
                    acc = acc.add(&self.get(a, c).wedge(o.get(c, b)));
                }
                out.set(a, b, acc);
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> FormMatrix {
        FormMatrix { rank: self.rank, entries: self.entries.iter().map(|f| f.scale(s)).collect() }
    }

    pub fn trace(&self) -> Form {
        (0..self.rank).fold(Form::zero(self.dim()), |acc, a| acc.add(self.get(a, a)))
    }

    /// Block-diagonal sum.
    pub fn direct_sum(&self, o: &FormMatrix) -> FormMatrix {
        let r = self.rank + o.rank;
        let mut out = FormMatrix::zeros(r, self.dim());
        for a in 0..self.rank {
            for b in 0..self.rank {
                out.set(a, b, self.get(a, b).clone());
            }
        }
        for a in 0..o.rank {
            for b in 0..o.rank {
                out.set(self.rank + a, self.rank + b, o.get(a, b).clone());
            }
        }
        out
    }

    /// Curvature of `E ⊗ L` from `X_E` and the line curvature `ω`: `X_E + ω·I`.
    pub fn twist(&self, omega: &Form) -> FormMatrix {
        let mut out = self.clone();
        for a in 0..self.rank {
            out.set(a, a, self.get(a, a).add(omega));
        }
        out
    }

    /// Pfaffian of an antisymmetric matrix of 2-forms.
    pub fn pfaffian(&self) -> Result<Form> {
        if self.rank % 2 == 1 {
            return Err(Error::OddDimension(self.rank));
        }
        let idx: Vec<usize> = (0..self.rank).collect();
        Ok(self.pfaffian_of(&idx))
    }

    fn pfaffian_of(&self, idx: &[usize]) -> Form {
        if idx.is_empty() {
            return Form::scalar(self.dim(), 1.0);
        }
        let mut acc = Form::zero(self.dim());
        for j in 1..idx.len() {
            let rest: Vec<usize> = idx.iter().enumerate().filter(|(k, _)| *k != 0 && *k != j).map(|(_, &v)| v).collect();
            let term = self.get(idx[0], idx[j]).wedge(&self.pfaffian_of(&rest));
            let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
            acc = acc.add(&term.scale(sign));
        }
        acc
    }
}

/// Curvature 2-form `Ω^a_b(∂_i, ∂_j)` in an orthonormal frame.
#[derive(Debug, Clone)]
pub struct CurvatureTwoForm {
    chart: Arc<Chart>,
    n: usize,
    /// `(node, a, b, i, j)`.
    omega: Vec<f64>,
    /// `(node, a, i)`: `E_a = e_a^i ∂_i`.
    frame: Vec<f64>,
    /// Sign of `det(e_a^i)` per node.
    orientation: Vec<f64>,
}

impl CurvatureTwoForm {
    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, node: usize, a: usize, b: usize, i: usize, j: usize) -> f64 {
        let n = self.n;
        self.omega[node * n.pow(4) + ((a * n + b) * n + i) * n + j]
    }

    pub fn frame(&self, node: usize) -> &[f64] {
        &self.frame[node * self.n * self.n..(node + 1) * self.n * self.n]
    }

    pub fn orientation(&self, node: usize) -> f64 {
        self.orientation[node]
    }

    /// Curvature matrix at a node as 2-forms in the coordinate coframe.
    pub fn form_matrix(&self, node: usize) -> FormMatrix {
        let n = self.n;
        let mut m = FormMatrix::zeros(n, n);
        for a in 0..n {
            for b in 0..n {
                let mut f = Form::zero(n);
                for i in 0..n {
                    for j in i + 1..n {
                        f.c[(1 << i) | (1 << j)] = self.get(node, a, b, i, j);
                    }
                }
                m.set(a, b, f);
            }
        }
        m
    }

    /// Largest defect of antisymmetry in `(a, b)` and in `(i, j)`.
    pub fn antisymmetry_defect(&self) -> f64 {
        let n = self.n;
        let mut d = 0.0f64;
        for node in 0..self.chart.len() {
            for a in 0..n {
                for b in 0..n {
                    for i in 0..n {
                        for j in 0..n {
                            let v = self.get(node, a, b, i, j);
                            d = d.max((v + self.get(node, b, a, i, j)).abs()).max((v + self.get(node, a, b, j, i)).abs());
                        }
                    }
                }
            }
        }
        d
    }
}

/// Gram–Schmidt on the coordinate frame taken in `order`.
fn orthonormal_frame(g: &[f64], n: usize, order: &[usize]) -> Result<Vec<f64>> {
    let ip = |u: &[f64], v: &[f64]| -> f64 { (0..n).map(|i| (0..n).map(|j| u[i] * g[i * n + j] * v[j]).sum::<f64>()).sum() };
    let mut frame = vec![0.0; n * n];
    for (a, &axis) in order.iter().enumerate() {
        let mut v = vec![0.0; n];
        v[axis] = 1.0;
        for b in 0..a {
            let e = frame[b * n..(b + 1) * n].to_vec();
            let c = ip(&v, &e);
            for i in 0..n {
                v[i] -= c * e[i];
            }
        }
        let norm = ip(&v, &v);
        if !(norm > 0.0) {
            return Err(Error::SingularMetric { node: 0, condition: f64::INFINITY });
        }
        let s = 1.0 / norm.sqrt();
        for i in 0..n {
            frame[a * n + i] = v[i] * s;
        }
    }
    Ok(frame)
}

pub fn curvature_two_form(g: &MetricField) -> Result<CurvatureTwoForm> {
    let order: Vec<usize> = (0..g.dim()).collect();
    curvature_two_form_in(g, &order)
}

/// Same, with Gram–Schmidt applied to `∂_{order[0]}, ∂_{order[1]}, …`.
pub fn curvature_two_form_in(g: &MetricField, order: &[usize]) -> Result<CurvatureTwoForm> {
    let n = g.dim();
    if order.len() != n {
        return Err(Error::ShapeMismatch("frame order must list every axis".into()));
    }
    if !g.declared_inertia().is_riemannian() {
        return Err(Error::Unsupported("orthonormal frames need a Riemannian metric".into()));
    }
    let inv = inverse_metric(g)?;
    let conn = christoffel_with(g, &inv)?;
    let curv = curvature_with(g, &inv, &conn)?;
    let low = curv.lowered(g);
    let chart = g.chart().clone();
    let n4 = n.pow(4);
    let mut omega = vec![0.0; chart.len() * n4];
    let mut frame = vec![0.0; chart.len() * n * n];
    let mut orientation = vec![0.0; chart.len()];
    for node in 0..chart.len() {
        let e = orthonormal_frame(g.at(node), n, order).map_err(|_| Error::SingularMetric { node, condition: f64::INFINITY })?;
        let r = low.at(node);
        // Upper triangles only; the rest is filled by antisymmetry.
        for a in 0..n {
            for b in a + 1..n {
                for i in 0..n {
                    for j in i + 1..n {
                        let mut s = 0.0;
                        for l in 0..n {
                            for k in 0..n {
                                s += e[a * n + l] * e[b * n + k] * r[((l * n + k) * n + i) * n + j];
                            }
                        }
                        let at = |a: usize, b: usize, i: usize, j: usize| node * n4 + ((a * n + b) * n + i) * n + j;
                        omega[at(a, b, i, j)] = s;
                        omega[at(b, a, i, j)] = -s;
                        omega[at(a, b, j, i)] = -s;
                        omega[at(b, a, j, i)] = s;
                    }
                }
            }
        }
        orientation[node] = crate::linalg::to_dmatrix(n, n, &e).determinant().signum();
        frame[node * n * n..(node + 1) * n * n].copy_from_slice(&e);
    }
    Ok(CurvatureTwoForm { chart, n, omega, frame, orientation })
}

/// `Pf(Ω/2π)` as a density against the coordinate measure.
pub fn euler_form(g: &MetricField) -> Result<ScalarField> {
    if g.dim() % 2 == 1 {
        return Err(Error::OddDimension(g.dim()));
    }
    euler_form_from(&curvature_two_form(g)?)
}

pub fn euler_form_from(omega: &CurvatureTwoForm) -> Result<ScalarField> {
    if omega.n % 2 == 1 {
        return Err(Error::OddDimension(omega.n));
    }
    let values = (0..omega.chart.len())
        .map(|node| {
            let pf = omega.form_matrix(node).scale(1.0 / (2.0 * PI)).pfaffian()?;
            Ok(pf.top() * omega.orientation(node))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ScalarField::from_raw(omega.chart.clone(), values))
}

pub fn euler_integral(g: &MetricField) -> Result<f64> {
    let e = euler_form(g)?;
    Ok(integrate_raw(g.chart(), e.values(), None))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SphereGaussBonnet {
    pub delta: f64,
    pub coarse: f64,
    pub fine: f64,
    pub extrapolated: f64,
}

/// Euler integral of the unit sphere with the polar caps removed, on the
/// cutoffs `δ` and `δ/2`, extrapolated in `δ²` to the closed sphere.
pub fn sphere_gauss_bonnet(n_theta: usize, n_phi: usize) -> Result<SphereGaussBonnet> {
    let delta = crate::models::sphere_delta(n_theta);
    let coarse = euler_integral(&crate::models::round_sphere(n_theta, n_phi, delta)?)?;
    let fine = euler_integral(&crate::models::round_sphere(n_theta, n_phi, 0.5 * delta)?)?;
    Ok(SphereGaussBonnet { delta, coarse, fine, extrapolated: (4.0 * fine - coarse) / 3.0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SeriesKind {
    Ahat,
    L,
    Todd,
    Ch,
}

impl SeriesKind {
    pub fn name(self) -> &'static str {
        match self {
            SeriesKind::Ahat => "Ahat",
            SeriesKind::L => "L",
            SeriesKind::Todd => "Todd",
            SeriesKind::Ch => "ch",
        }
    }
}

/// Truncated power series in one variable.
fn series_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let n = a.len();
    let mut out = vec![0.0; n];
    for i in 0..n {
        for j in 0..n - i {
            out[i + j] += a[i] * b[j];
        }
    }
    out
}

fn series_inv(a: &[f64]) -> Vec<f64> {
    let n = a.len();
    let mut out = vec![0.0; n];
    out[0] = 1.0 / a[0];
    for k in 1..n {
        let s: f64 = (1..=k).map(|j| a[j] * out[k - j]).sum();
        out[k] = -s / a[0];
    }
    out
}

/// `log a` for `a[0] = 1`, via `(log a)' = a'/a`.
fn series_log(a: &[f64]) -> Vec<f64> {
    let n = a.len();
    let da: Vec<f64> = (0..n).map(|k| if k + 1 < n { (k + 1) as f64 * a[k + 1] } else { 0.0 }).collect();
    let q = series_mul(&da, &series_inv(a));
    let mut out = vec![0.0; n];
    for k in 1..n {
        out[k] = q[k - 1] / k as f64;
    }
    out
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

/// Taylor coefficients of the generating function `Q(x)` up to `x^order`.
pub fn generating_series(kind: SeriesKind, order: usize) -> Vec<f64> {
    let n = order + 1;
    match kind {
        // (x/2)/sinh(x/2) = 1 / Σ (x/2)^{2k} / (2k+1)!
        SeriesKind::Ahat => {
            let d: Vec<f64> = (0..n).map(|k| if k % 2 == 0 { 0.5f64.powi(k as i32) / factorial(k + 1) } else { 0.0 }).collect();
            series_inv(&d)
        }
        // x/tanh x = cosh x / (sinh x / x)
        SeriesKind::L => {
            let ch: Vec<f64> = (0..n).map(|k| if k % 2 == 0 { 1.0 / factorial(k) } else { 0.0 }).collect();
            let sh: Vec<f64> = (0..n).map(|k| if k % 2 == 0 { 1.0 / factorial(k + 1) } else { 0.0 }).collect();
            series_mul(&ch, &series_inv(&sh))
        }
        // x/(1 − e^{−x}) = 1 / Σ (−x)^k / (k+1)!
        SeriesKind::Todd => {
            let d: Vec<f64> = (0..n).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 } / factorial(k + 1)).collect();
            series_inv(&d)
        }
        SeriesKind::Ch => (0..n).map(|k| 1.0 / factorial(k)).collect(),
    }
}

/// Form exponential of a nilpotent form (no degree-0 part).
fn form_exp(y: &Form, max_power: usize) -> Form {
    let mut acc = Form::scalar(y.dim, 1.0);
    let mut term = Form::scalar(y.dim, 1.0);
    for m in 1..=max_power {
        term = term.wedge(y).scale(1.0 / m as f64);
        acc = acc.add(&term);
    }
    acc
}

/// Characteristic form of one curvature matrix, truncated at form degree
/// `truncation` (even).
pub fn characteristic_form(m: &FormMatrix, kind: SeriesKind, truncation: usize) -> Result<Form> {
    let dim = m.dim();
    if truncation > dim {
        return Err(Error::TruncationTooHigh { degree: truncation, dim });
    }
    let half = truncation / 2;
    let cut = |f: Form| -> Form {
        let mut out = Form::zero(dim);
        for d in (0..=truncation).step_by(2) {
            out = out.add(&f.degree_part(d));
        }
        out
    };
    match kind {
        SeriesKind::Ch => {
            // tr exp X = Σ tr(X^k)/k!
            let mut acc = Form::scalar(dim, m.rank as f64);
            let mut power = m.clone();
            for k in 1..=half {
                if k > 1 {
                    power = power.mul(m);
                }
                acc = acc.add(&power.trace().scale(1.0 / factorial(k)));
            }
            Ok(cut(acc))
        }
        SeriesKind::Todd => {
            // log Td = Σ_k c_k tr(X^k), c_k from log(x/(1−e^{−x}))
            let coeffs = series_log(&generating_series(kind, half));
            let mut log = Form::zero(dim);
            let mut power = m.clone();
            for k in 1..=half {
                if k > 1 {
                    power = power.mul(m);
                }
                log = log.add(&power.trace().scale(coeffs[k]));
            }
            Ok(cut(form_exp(&log, half)))
        }
        SeriesKind::Ahat | SeriesKind::L => {
            // log ∏ Q(x_j) = Σ_k a_k s_k, s_k = (−1)^k/2 · tr((Ω/2π)^{2k})
            let coeffs = series_log(&generating_series(kind, 2 * (half / 2) + 1));
            let x = m.scale(1.0 / (2.0 * PI));
            let x2 = x.mul(&x);
            let mut log = Form::zero(dim);
            let mut power = x2.clone();
            for k in 1..=half / 2 {
                if k > 1 {
                    power = power.mul(&x2);
                }
                let s = power.trace().scale(if k % 2 == 0 { 0.5 } else { -0.5 });
                log = log.add(&s.scale(coeffs[2 * k]));
            }
            Ok(cut(form_exp(&log, half)))
        }
    }
}

/// First Pontryagin form `−tr(Ω∧Ω)/8π²`.
pub fn first_pontryagin(m: &FormMatrix) -> Form {
    m.mul(m).trace().scale(-1.0 / (8.0 * PI * PI))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CharSeries {
    pub kind: SeriesKind,
    pub truncation_degree: usize,
    /// `degree_terms[d/2][node]`: homogeneous part of degree `d`.
    pub degree_terms: Vec<Vec<Form>>,
}

impl CharSeries {
    /// Top-degree coefficients of the degree-`d` term, per node.
    pub fn coefficient_field(&self, degree: usize) -> Vec<f64> {
        self.degree_terms[degree / 2].iter().map(|f| f.top()).collect()
    }
}

/// Pointwise characteristic series of a field of curvature matrices.
pub fn char_series(curvature: &[FormMatrix], kind: SeriesKind, truncation: usize) -> Result<CharSeries> {
    let mut degree_terms = vec![Vec::with_capacity(curvature.len()); truncation / 2 + 1];
    for m in curvature {
        let f = characteristic_form(m, kind, truncation)?;
        for (k, slot) in degree_terms.iter_mut().enumerate() {
            slot.push(f.degree_part(2 * k));
        }
    }
    Ok(CharSeries { kind, truncation_degree: truncation, degree_terms })
}

/// Curvature matrices of the tangent bundle, one per node.
pub fn tangent_curvature(g: &MetricField) -> Result<Vec<FormMatrix>> {
    let omega = curvature_two_form(g)?;
    Ok((0..g.chart().len()).map(|node| omega.form_matrix(node)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FamilyFunctional {
    EulerIntegral,
    DeRhamIndex,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyRecord {
    pub functional: FamilyFunctional,
    pub values: Vec<f64>,
    pub max_deviation: f64,
}

/// Evaluates the functional along a metric family and reports the largest
/// deviation from the first member.
pub fn family_constancy(family: &[MetricField], functional: FamilyFunctional) -> Result<FamilyRecord> {
    let values = family
        .iter()
        .map(|g| match functional {
            FamilyFunctional::EulerIntegral => euler_integral(g),
            FamilyFunctional::DeRhamIndex => crate::spectral::de_rham_index(g).map(|r| r.index as f64),
        })
        .collect::<Result<Vec<f64>>>()?;
    let first = values.first().copied().unwrap_or(0.0);
    let max_deviation = values.iter().map(|v| (v - first).abs()).fold(0.0, f64::max);
    Ok(FamilyRecord { functional, values, max_deviation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;

    fn constant_matrix(dim: usize, rank: usize, f: impl Fn(usize, usize, usize, usize) -> f64) -> FormMatrix {
        let mut m = FormMatrix::zeros(rank, dim);
        for a in 0..rank {
            for b in 0..rank {
                let mut form = Form::zero(dim);
                for i in 0..dim {
                    for j in i + 1..dim {
                        form = form.add(&Form::two_form(dim, i, j, f(a, b, i, j)));
                    }
                }
                m.set(a, b, form);
            }
        }
        m
    }

    #[test]
    fn wedge_signs() {
        let dx = Form { dim: 3, c: vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0] };
        let mut dy = Form::zero(3);
        dy.c[2] = 1.0;
        assert_eq!(dx.wedge(&dy).coeff(3), 1.0);
        assert_eq!(dy.wedge(&dx).coeff(3), -1.0);
        assert_eq!(dx.wedge(&dx).max_abs(), 0.0);
        let w = Form::two_form(4, 0, 1, 1.0).wedge(&Form::two_form(4, 2, 3, 1.0));
        assert_eq!(w.top(), 1.0);
        let w = Form::two_form(4, 0, 2, 1.0).wedge(&Form::two_form(4, 1, 3, 1.0));
        assert_eq!(w.top(), -1.0);
    }

    #[test]
    fn generating_series_coefficients() {
        let a = generating_series(SeriesKind::Ahat, 4);
        assert!((a[2] + 1.0 / 24.0).abs() < 1e-15 && (a[4] - 7.0 / 5760.0).abs() < 1e-15);
        let l = generating_series(SeriesKind::L, 4);
        assert!((l[2] - 1.0 / 3.0).abs() < 1e-15 && (l[4] + 1.0 / 45.0).abs() < 1e-15);
        let t = generating_series(SeriesKind::Todd, 4);
        assert!((t[1] - 0.5).abs() < 1e-15 && (t[2] - 1.0 / 12.0).abs() < 1e-15 && t[3].abs() < 1e-15);
        assert!((t[4] + 1.0 / 720.0).abs() < 1e-15);
    }

    #[test]
    fn flat_metric_has_zero_curvature_form() {
        let g = models::flat_torus(16).unwrap();
        let om = curvature_two_form(&g).unwrap();
        assert!(om.omega.iter().all(|v| v.abs() < 1e-10));
        assert!(euler_integral(&g).unwrap().abs() < 1e-10);
    }

    #[test]
    fn sphere_two_form_is_area_form() {
        let g = models::round_sphere(256, 16, 0.5).unwrap();
        let om = curvature_two_form(&g).unwrap();
        let chart = g.chart();
        let err = (0..chart.len())
            .map(|node| (om.get(node, 0, 1, 0, 1) - chart.node_coords(node)[0].sin()).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-4, "err = {err}");
        assert_eq!(om.antisymmetry_defect(), 0.0);
    }

    #[test]
    fn hyperbolic_strip_curvature() {
        let g = models::half_plane(8, 512).unwrap();
        let om = curvature_two_form(&g).unwrap();
        let chart = g.chart();
        let err = (0..chart.len())
            .map(|node| {
                let y = chart.node_coords(node)[1];
                (om.get(node, 0, 1, 0, 1) / (1.0 / (y * y)) + 1.0).abs()
            })
            .fold(0.0, f64::max);
        assert!(err < 1e-5, "err = {err}");
    }

    #[test]
    fn gauss_bonnet_sphere_extrapolated() {
        let r = sphere_gauss_bonnet(128, 128).unwrap();
        assert!((r.extrapolated - 2.0).abs() < 1e-3, "{r:?}");
        assert!((r.coarse - 2.0 * r.delta.cos()).abs() < 1e-3);
    }

    #[test]
    fn gauss_bonnet_bumpy_torus_and_frame_independence() {
        let g = models::bumpy_torus(32, 0.3).unwrap();
        assert!(euler_integral(&g).unwrap().abs() < 1e-4);
        let a = euler_form(&g).unwrap();
        let b = euler_form_from(&curvature_two_form_in(&g, &[1, 0]).unwrap()).unwrap();
        let d = a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(d < 1e-8);
        assert!(a.max_abs() > 1e-2);
    }

    #[test]
    fn euler_integral_is_conformally_invariant() {
        let g = models::bumpy_torus(32, 0.3).unwrap();
        let u = ScalarField::from_fn(g.chart(), |p| 0.4 * (p[0] + 2.0 * p[1]).cos());
        let h = g.conformal(&u.map(|v| (2.0 * v).exp())).unwrap();
        assert!(euler_integral(&h).unwrap().abs() < 1e-4);
    }

    #[test]
    fn odd_dimension_rejected() {
        let chart = Arc::new(Chart::torus(3, 8).unwrap());
        let g = models::euclidean(&chart).unwrap();
        assert_eq!(euler_form(&g).unwrap_err(), Error::OddDimension(3));
    }

    #[test]
    fn zero_curvature_series() {
        let m = FormMatrix::zeros(2, 2);
        for kind in [SeriesKind::Ahat, SeriesKind::L, SeriesKind::Todd] {
            let f = characteristic_form(&m, kind, 2).unwrap();
            assert_eq!(f.coeff(0), 1.0);
            assert_eq!(f.degree_part(2).max_abs(), 0.0);
        }
        assert_eq!(characteristic_form(&m, SeriesKind::Ch, 2).unwrap().coeff(0), 2.0);
        assert_eq!(
            characteristic_form(&m, SeriesKind::Ch, 4).unwrap_err(),
            Error::TruncationTooHigh { degree: 4, dim: 2 }
        );
    }

    #[test]
    fn line_bundle_chern_character() {
        let omega = Form::two_form(4, 0, 1, 0.7).add(&Form::two_form(4, 2, 3, -1.3));
        let m = FormMatrix { rank: 1, entries: vec![omega.clone()] };
        let ch = characteristic_form(&m, SeriesKind::Ch, 4).unwrap();
        let direct = Form::scalar(4, 1.0).add(&omega).add(&omega.wedge(&omega).scale(0.5));
        assert!(ch.add(&direct.scale(-1.0)).max_abs() < 1e-12);
        // Todd of a line: 1 + c₁/2 + c₁²/12
        let td = characteristic_form(&m, SeriesKind::Todd, 4).unwrap();
        let expect = Form::scalar(4, 1.0).add(&omega.scale(0.5)).add(&omega.wedge(&omega).scale(1.0 / 12.0));
        assert!(td.add(&expect.scale(-1.0)).max_abs() < 1e-12);
    }

    #[test]
    fn degree_four_pontryagin_coefficients() {
        // Synthetic so(4) curvature with independent entries.
        let m = constant_matrix(4, 4, |a, b, i, j| {
            if a == b {
                return 0.0;
            }
            let s = if a < b { 1.0 } else { -1.0 };
            let (a, b) = (a.min(b), a.max(b));
            s * ((a * 7 + b * 3 + i * 5 + j * 11) as f64 * 0.37).sin()
        });
        let p1 = first_pontryagin(&m);
        let ahat = characteristic_form(&m, SeriesKind::Ahat, 4).unwrap();
        let l = characteristic_form(&m, SeriesKind::L, 4).unwrap();
        assert!(p1.top().abs() > 1e-3);
        assert!((ahat.top() + p1.top() / 24.0).abs() < 1e-14);
        assert!((l.top() - p1.top() / 3.0).abs() < 1e-14);
        assert!(ahat.degree_part(2).max_abs() < 1e-15);
    }

    #[test]
    fn ahat_and_l_from_roots_match_taylor_coefficients() {
        // Block-diagonal so(4) curvature with root 2-forms
        // r₁ = x(dx⁰¹ + dx²³), r₂ = y(dx⁰² + dx¹³), each scaled by 2π.
        let (x, y) = (0.8, -0.45);
        let r1 = Form::two_form(4, 0, 1, x).add(&Form::two_form(4, 2, 3, x));
        let r2 = Form::two_form(4, 0, 2, y).add(&Form::two_form(4, 1, 3, y));
        let mut m = FormMatrix::zeros(4, 4);
        m.set(0, 1, r1.scale(2.0 * PI));
        m.set(1, 0, r1.scale(-2.0 * PI));
        m.set(2, 3, r2.scale(2.0 * PI));
        m.set(3, 2, r2.scale(-2.0 * PI));
        let squares = r1.wedge(&r1).add(&r2.wedge(&r2));
        assert!((squares.top() - 2.0 * (x * x - y * y)).abs() < 1e-15);
        // (x/2)/sinh(x/2) = 1 − x²/24 + …, x/tanh x = 1 + x²/3 + …
        for (kind, q2) in [(SeriesKind::Ahat, -1.0 / 24.0), (SeriesKind::L, 1.0 / 3.0)] {
            let f = characteristic_form(&m, kind, 4).unwrap();
            let expect = Form::scalar(4, 1.0).add(&squares.scale(q2));
            assert!(f.add(&expect.scale(-1.0)).max_abs() < 1e-14, "{kind:?}");
        }
        assert!((first_pontryagin(&m).top() - squares.top()).abs() < 1e-14);
    }

    #[test]
    fn chern_character_is_additive_and_multiplicative() {
        let e = constant_matrix(4, 2, |a, b, i, j| ((a + 2 * b + 3 * i + 5 * j) as f64).cos() * 0.3);
        let f = constant_matrix(4, 3, |a, b, i, j| ((3 * a + b + i + 7 * j) as f64).sin() * 0.2);
        let ch = |m: &FormMatrix| characteristic_form(m, SeriesKind::Ch, 4).unwrap();
        let sum = ch(&e.direct_sum(&f));
        assert!(sum.add(&ch(&e).add(&ch(&f)).scale(-1.0)).max_abs() < 1e-15);
        let omega = Form::two_form(4, 0, 2, 0.4).add(&Form::two_form(4, 1, 3, 0.9));
        let line = FormMatrix { rank: 1, entries: vec![omega.clone()] };
        let twisted = ch(&e.twist(&omega));
        let product = ch(&e).wedge(&ch(&line));
        assert!(twisted.add(&product.scale(-1.0)).max_abs() < 1e-10);
    }

    #[test]
    fn bumpy_family_euler_constancy() {
        let chart = Arc::new(Chart::torus(2, 32).unwrap());
        let family: Vec<MetricField> = (0..=10)
            .map(|k| models::bumpy_on(&chart, 0.05 * k as f64).unwrap().with_scheme(crate::grid::Scheme::Spectral))
            .collect();
        let rec = family_constancy(&family, FamilyFunctional::EulerIntegral).unwrap();
        assert!(rec.values.iter().all(|v| v.abs() < 1e-4));
        let same = family_constancy(&vec![family[3].clone(); 3], FamilyFunctional::EulerIntegral).unwrap();
        assert_eq!(same.max_deviation, 0.0);
    }
}
