//! Gauge calculus on the space of metrics: Lie derivatives, divergence and
//! the Bianchi operator, the `L²` pairing, first-variation checks and the
//! least-squares slice decomposition.
//!
//! Divergence convention: `(div_g h)_j = g^{ik} ∇_i h_{kj}`. With it, on a
//! closed chart, `⟨L_X g, h⟩ = −2 ∫ ⟨X, (div_g h)^♯⟩ dvol`.

use std::sync::Arc;

use serde::Serialize;

use crate::cone::{stability_radius, MetricField};
use crate::connection::{
    christoffel_with, covariant_derivative, curvature, curvature_with, inverse_metric, InverseMetric,
};
use crate::error::{Error, Result};
use crate::grid::{diff_raw, integrate_raw, same_chart, Chart, ScalarField, Scheme, TensorField};
use crate::linalg::{conjugate_gradient, dot};

fn check_vector(x: &TensorField) -> Result<()> {
    if x.contravariant() != 1 || x.covariant() != 0 {
        return Err(Error::ShapeMismatch("expected a vector field".into()));
    }
    Ok(())
}

fn check_sym2(h: &TensorField) -> Result<()> {
    if h.contravariant() != 0 || h.covariant() != 2 {
        return Err(Error::ShapeMismatch("expected a covariant 2-tensor".into()));
    }
    Ok(())
}

/// `(L_X g)_{ij} = X^k ∂_k g_{ij} + g_{kj} ∂_i X^k + g_{ik} ∂_j X^k`.
pub fn lie_derivative_metric(x: &TensorField, g: &MetricField) -> Result<TensorField> {
    check_vector(x)?;
    same_chart(x.chart(), g.chart())?;
    let op = OrbitOperator::without_weights(g)?;
    let data = op.apply(x.data());
    Ok(TensorField::from_raw(g.chart().clone(), 0, 2, true, data))
}

/// `tr_g h = g^{ij} h_{ij}`.
pub fn trace(g: &MetricField, h: &TensorField) -> Result<ScalarField> {
    check_sym2(h)?;
    same_chart(h.chart(), g.chart())?;
    let inv = inverse_metric(g)?;
    Ok(trace_with(&inv, h))
}

fn trace_with(inv: &InverseMetric, h: &TensorField) -> ScalarField {
    let nn = inv.n * inv.n;
    let values = (0..h.chart().len())
        .map(|node| dot(&inv.ginv[node * nn..(node + 1) * nn], h.at(node)))
        .collect();
    ScalarField::from_raw(h.chart().clone(), values)
}

/// `(div_g h)_j = g^{ik} ∇_i h_{kj}` as a 1-form.
pub fn divergence(g: &MetricField, h: &TensorField) -> Result<TensorField> {
    check_sym2(h)?;
    same_chart(h.chart(), g.chart())?;
    let inv = inverse_metric(g)?;
    divergence_with(g, &inv, h)
}

fn divergence_with(g: &MetricField, inv: &InverseMetric, h: &TensorField) -> Result<TensorField> {
    let n = g.dim();
    let nn = n * n;
    let conn = christoffel_with(g, inv)?;
    let dh = covariant_derivative(h, &conn, g.scheme())?;
    let mut data = vec![0.0; g.chart().len() * n];
    for node in 0..g.chart().len() {
        let ginv = &inv.ginv[node * nn..(node + 1) * nn];
        let d = dh.at(node);
        for j in 0..n {
            let mut s = 0.0;
            for i in 0..n {
                for k in 0..n {
                    s += ginv[i * n + k] * d[(k * n + j) * n + i];
                }
            }
            data[node * n + j] = s;
        }
    }
    Ok(TensorField::from_raw(g.chart().clone(), 0, 1, false, data))
}

/// `B_g(h) = div_g h − ½ d(tr_g h)`.
pub fn bianchi_operator(g: &MetricField, h: &TensorField) -> Result<TensorField> {
    check_sym2(h)?;
    same_chart(h.chart(), g.chart())?;
    let inv = inverse_metric(g)?;
    bianchi_with(g, &inv, h)
}

fn bianchi_with(g: &MetricField, inv: &InverseMetric, h: &TensorField) -> Result<TensorField> {
    let div = divergence_with(g, inv, h)?;
    let dtr = trace_with(inv, h).gradient(g.scheme())?;
    div.lin_comb(1.0, &dtr, -0.5)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct L2Pairing {
    pub value: f64,
    pub quadrature_resolution: Vec<usize>,
}

/// Pointwise `g^{ik} g^{jl} a_{ij} b_{kl}`.
fn contract2(ginv: &[f64], a: &[f64], b: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            let aij = a[i * n + j];
            if aij == 0.0 {
                continue;
            }
            for k in 0..n {
                let gik = ginv[i * n + k];
                for l in 0..n {
                    s += gik * ginv[j * n + l] * aij * b[k * n + l];
                }
            }
        }
    }
    s
}

/// `∫ tr_g(h1 h2) dvol_g`, evaluated symmetrically so swapping the
/// arguments gives a bit-identical value.
pub fn l2_pairing(g: &MetricField, h1: &TensorField, h2: &TensorField) -> Result<L2Pairing> {
    check_sym2(h1)?;
    check_sym2(h2)?;
    same_chart(h1.chart(), g.chart())?;
    same_chart(h2.chart(), g.chart())?;
    let inv = inverse_metric(g)?;
    Ok(L2Pairing { value: pairing_with(g.chart(), &inv, h1, h2), quadrature_resolution: g.chart().resolution().to_vec() })
}

fn pairing_with(chart: &Chart, inv: &InverseMetric, h1: &TensorField, h2: &TensorField) -> f64 {
    let n = inv.n;
    let nn = n * n;
    let f: Vec<f64> = (0..chart.len())
        .map(|node| {
            let ginv = &inv.ginv[node * nn..(node + 1) * nn];
            let a = contract2(ginv, h1.at(node), h2.at(node), n);
            let b = contract2(ginv, h2.at(node), h1.at(node), n);
            0.5 * (a + b) * inv.volume[node]
        })
        .collect();
    integrate_raw(chart, &f, None)
}

/// `∫ X^j ω_j dvol_g`, i.e. `∫ ⟨X, ω^♯⟩_g`.
fn vector_form_pairing(chart: &Chart, inv: &InverseMetric, x: &TensorField, w: &TensorField) -> f64 {
    let f: Vec<f64> = (0..chart.len()).map(|node| dot(x.at(node), w.at(node)) * inv.volume[node]).collect();
    integrate_raw(chart, &f, None)
}

fn vector_norm(chart: &Chart, g: &MetricField, inv: &InverseMetric, x: &TensorField) -> f64 {
    let n = inv.n;
    let f: Vec<f64> = (0..chart.len())
        .map(|node| {
            let gm = g.at(node);
            let v = x.at(node);
            let q: f64 = (0..n).map(|i| (0..n).map(|j| gm[i * n + j] * v[i] * v[j]).sum::<f64>()).sum();
            q * inv.volume[node]
        })
        .collect();
    integrate_raw(chart, &f, None).max(0.0).sqrt()
}

fn form_norm(chart: &Chart, inv: &InverseMetric, w: &TensorField) -> f64 {
    let n = inv.n;
    let nn = n * n;
    let f: Vec<f64> = (0..chart.len())
        .map(|node| {
            let ginv = &inv.ginv[node * nn..(node + 1) * nn];
            let v = w.at(node);
            let q: f64 = (0..n).map(|i| (0..n).map(|j| ginv[i * n + j] * v[i] * v[j]).sum::<f64>()).sum();
            q * inv.volume[node]
        })
        .collect();
    integrate_raw(chart, &f, None).max(0.0).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdjointRecord {
    /// `⟨L_X g, h⟩_g`
    pub lie_pairing: f64,
    /// `∫ ⟨X, (div_g h)^♯⟩`
    pub div_pairing: f64,
    /// `∫ ⟨X, B_g(h)^♯⟩`
    pub bianchi_pairing: f64,
    /// `|lie + 2·div| / scale`
    pub residual: f64,
}

pub fn adjoint_identity_residual(g: &MetricField, x: &TensorField, h: &TensorField) -> Result<AdjointRecord> {
    check_vector(x)?;
    check_sym2(h)?;
    same_chart(x.chart(), g.chart())?;
    same_chart(h.chart(), g.chart())?;
    let chart = g.chart();
    if !chart.fully_periodic() {
        return Err(Error::NonPeriodicChart);
    }
    let inv = inverse_metric(g)?;
    let lie = lie_derivative_metric(x, g)?;
    let div = divergence_with(g, &inv, h)?;
    let bianchi = bianchi_with(g, &inv, h)?;
    let lie_pairing = pairing_with(chart, &inv, &lie, h);
    let div_pairing = vector_form_pairing(chart, &inv, x, &div);
    let bianchi_pairing = vector_form_pairing(chart, &inv, x, &bianchi);
    let lie_norm = pairing_with(chart, &inv, &lie, &lie).max(0.0).sqrt();
    let h_norm = pairing_with(chart, &inv, h, h).max(0.0).sqrt();
    let scale = (lie_norm * h_norm).max(2.0 * vector_norm(chart, g, &inv, x) * form_norm(chart, &inv, &div));
    let defect = (lie_pairing + 2.0 * div_pairing).abs();
    let residual = if scale > 0.0 { defect / scale } else { defect };
    Ok(AdjointRecord { lie_pairing, div_pairing, bianchi_pairing, residual })
}

/// Finite-difference step for the variation checks.
pub const VARIATION_STEP: f64 = 1e-4;

/// Centered difference with one Richardson refinement at `τ/2` when the
/// plain estimate misses `tol`.
fn centered_rate(
    f: impl Fn(f64) -> Result<Vec<f64>>,
    tau: f64,
    formula: &[f64],
    tol: f64,
) -> Result<(Vec<f64>, bool)> {
    let diff = |t: f64| -> Result<Vec<f64>> {
        let (p, m) = (f(t)?, f(-t)?);
        Ok(p.iter().zip(&m).map(|(a, b)| (a - b) / (2.0 * t)).collect())
    };
    let coarse = diff(tau)?;
    let err = |r: &[f64]| r.iter().zip(formula).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if err(&coarse) <= tol {
        return Ok((coarse, false));
    }
    let fine = diff(0.5 * tau)?;
    let extrapolated: Vec<f64> = fine.iter().zip(&coarse).map(|(f, c)| (4.0 * f - c) / 3.0).collect();
    Ok((extrapolated, true))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConformalVariation {
    #[serde(skip)]
    pub fd_scal_rate: ScalarField,
    #[serde(skip)]
    pub formula_scal_rate: ScalarField,
    pub fd_vol_rate: f64,
    pub formula_vol_rate: f64,
    pub max_residual: f64,
    pub refined: bool,
}

/// Laplace–Beltrami `Δ_g u = g^{ij}(∂_i∂_j u − Γ^k_{ij} ∂_k u)`.
pub fn laplacian(g: &MetricField, u: &ScalarField) -> Result<ScalarField> {
    same_chart(u.chart(), g.chart())?;
    let inv = inverse_metric(g)?;
    let conn = christoffel_with(g, &inv)?;
    let du = u.gradient(g.scheme())?;
    let hess = covariant_derivative(&du, &conn, g.scheme())?;
    let n = g.dim();
    let nn = n * n;
    let values = (0..g.chart().len()).map(|node| dot(&inv.ginv[node * nn..(node + 1) * nn], hess.at(node))).collect();
    Ok(ScalarField::from_raw(g.chart().clone(), values))
}

fn total_volume(g: &MetricField) -> Result<f64> {
    let inv = inverse_metric(g)?;
    Ok(integrate_raw(g.chart(), &inv.volume, None))
}

/// Compares `d/dt Scal(e^{2tu} g)` and `d/dt vol(e^{2tu} g)` at `t = 0`
/// against `−2(n−1)Δu − 2u·Scal` and `∫ n u dvol`. `tol` only decides
/// whether the Richardson refinement is run.
pub fn conformal_variation_check(g: &MetricField, u: &ScalarField, tol: f64) -> Result<ConformalVariation> {
    same_chart(u.chart(), g.chart())?;
    let n = g.dim() as f64;
    let chart = g.chart();
    let inv = inverse_metric(g)?;
    let conn = christoffel_with(g, &inv)?;
    let scal = curvature_with(g, &inv, &conn)?.scalar;
    let lap = laplacian(g, u)?;
    let formula: Vec<f64> = (0..chart.len())
        .map(|p| -2.0 * (n - 1.0) * lap.values()[p] - 2.0 * u.values()[p] * scal.values()[p])
        .collect();
    let nu: Vec<f64> = (0..chart.len()).map(|p| n * u.values()[p] * inv.volume[p]).collect();
    let formula_vol_rate = integrate_raw(chart, &nu, None);
    if u.max_abs() == 0.0 {
        let zero = ScalarField::constant(chart, 0.0);
        return Ok(ConformalVariation {
            fd_scal_rate: zero.clone(),
            formula_scal_rate: zero,
            fd_vol_rate: 0.0,
            formula_vol_rate: 0.0,
            max_residual: 0.0,
            refined: false,
        });
    }
    let metric_at = |t: f64| g.conformal(&u.map(|v| (2.0 * t * v).exp()));
    let (fd, refined_s) = centered_rate(
        |t| Ok(curvature(&metric_at(t)?)?.scalar.into_values()),
        VARIATION_STEP,
        &formula,
        tol,
    )?;
    let (fd_vol, refined_v) =
        centered_rate(|t| Ok(vec![total_volume(&metric_at(t)?)?]), VARIATION_STEP, &[formula_vol_rate], tol)?;
    let max_residual = fd
        .iter()
        .zip(&formula)
        .map(|(a, b)| (a - b).abs())
        .fold((fd_vol[0] - formula_vol_rate).abs(), f64::max);
    Ok(ConformalVariation {
        fd_scal_rate: ScalarField::from_raw(chart.clone(), fd),
        formula_scal_rate: ScalarField::from_raw(chart.clone(), formula),
        fd_vol_rate: fd_vol[0],
        formula_vol_rate,
        max_residual,
        refined: refined_s || refined_v,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VolumeVariation {
    pub fd_rate: f64,
    pub formula_rate: f64,
    pub residual: f64,
    pub step: f64,
}

/// `d/dt vol(g + t h)` at `t = 0` against `½ ∫ tr_g h dvol_g`.
pub fn volume_first_variation(g: &MetricField, h: &TensorField) -> Result<VolumeVariation> {
    check_sym2(h)?;
    same_chart(h.chart(), g.chart())?;
    let inv = inverse_metric(g)?;
    let tr = trace_with(&inv, h);
    let f: Vec<f64> = tr.values().iter().zip(&inv.volume).map(|(t, v)| 0.5 * t * v).collect();
    let formula_rate = integrate_raw(g.chart(), &f, None);
    // Keep g ± τh inside the cone: Frobenius norm bounds the operator norm.
    let hmax = (0..h.chart().len())
        .map(|p| h.at(p).iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let mut step = VARIATION_STEP;
    if hmax > 0.0 {
        step = step.min(0.5 * stability_radius(g) / hmax);
    }
    let vol = |t: f64| total_volume(&g.perturbed(h, t)?);
    let fd_rate = if hmax == 0.0 { 0.0 } else { (vol(step)? - vol(-step)?) / (2.0 * step) };
    Ok(VolumeVariation { fd_rate, formula_rate, residual: (fd_rate - formula_rate).abs(), step })
}

/// Discrete `X ↦ L_X g` with its exact transpose on a periodic chart, and
/// the pointwise weights of the `L²(g)` pairing.
struct OrbitOperator {
    chart: Arc<Chart>,
    n: usize,
    scheme: Scheme,
    g: Vec<f64>,
    dg: Vec<Vec<f64>>,
    /// `w_p √det g` times `g^{-1}` per node.
    weight: Vec<f64>,
    ginv: Vec<f64>,
}

impl OrbitOperator {
    fn without_weights(g: &MetricField) -> Result<OrbitOperator> {
        let chart = g.chart().clone();
        let n = g.dim();
        let nn = n * n;
        let dg = (0..n).map(|a| diff_raw(&chart, g.components().data(), nn, a, g.scheme())).collect::<Result<_>>()?;
        Ok(OrbitOperator {
            chart,
            n,
            scheme: g.scheme(),
            g: g.components().data().to_vec(),
            dg,
            weight: Vec::new(),
            ginv: Vec::new(),
        })
    }

    fn new(g: &MetricField, inv: &InverseMetric) -> Result<OrbitOperator> {
        let mut op = OrbitOperator::without_weights(g)?;
        let cells = op.chart.cell_weights();
        op.weight = cells.iter().zip(&inv.volume).map(|(c, v)| c * v).collect();
        op.ginv = inv.ginv.clone();
        Ok(op)
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        let nn = n * n;
        let len = self.chart.len();
        let dx: Vec<Vec<f64>> =
            (0..n).map(|a| diff_raw(&self.chart, x, n, a, self.scheme).expect("scheme validated")).collect();
        let mut out = vec![0.0; len * nn];
        for p in 0..len {
            let gm = &self.g[p * nn..(p + 1) * nn];
            let xv = &x[p * n..(p + 1) * n];
            for i in 0..n {
                for j in i..n {
                    let mut v = 0.0;
                    for k in 0..n {
                        v += xv[k] * self.dg[k][p * nn + i * n + j];
                        v += gm[k * n + j] * dx[i][p * n + k] + gm[i * n + k] * dx[j][p * n + k];
                    }
                    out[p * nn + i * n + j] = v;
                    out[p * nn + j * n + i] = v;
                }
            }
        }
        out
    }

    /// Transpose of `apply` for a symmetric argument; periodic
    /// differentiation matrices are antisymmetric.
    fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        let n = self.n;
        let nn = n * n;
        let len = self.chart.len();
        let mut out = vec![0.0; len * n];
        // z[i][p*n + k] = 2 Σ_j g_kj Y_ij
        let mut z = vec![vec![0.0; len * n]; n];
        for p in 0..len {
            let gm = &self.g[p * nn..(p + 1) * nn];
            let yp = &y[p * nn..(p + 1) * nn];
            for k in 0..n {
                out[p * n + k] = (0..nn).map(|a| yp[a] * self.dg[k][p * nn + a]).sum();
                for (i, zi) in z.iter_mut().enumerate() {
                    zi[p * n + k] = 2.0 * (0..n).map(|j| gm[k * n + j] * yp[i * n + j]).sum::<f64>();
                }
            }
        }
        for (i, zi) in z.iter().enumerate() {
            let d = diff_raw(&self.chart, zi, n, i, self.scheme).expect("scheme validated");
            for (o, v) in out.iter_mut().zip(d) {
                *o -= v;
            }
        }
        out
    }

    /// `W y`: pointwise `w √g · g^{-1} y g^{-1}`.
    fn weigh(&self, y: &[f64]) -> Vec<f64> {
        let n = self.n;
        let nn = n * n;
        let mut out = vec![0.0; y.len()];
        for p in 0..self.chart.len() {
            let gi = &self.ginv[p * nn..(p + 1) * nn];
            let yp = &y[p * nn..(p + 1) * nn];
            for k in 0..n {
                for l in 0..n {
                    let mut s = 0.0;
                    for i in 0..n {
                        for j in 0..n {
                            s += gi[k * n + i] * yp[i * n + j] * gi[j * n + l];
                        }
                    }
                    out[p * nn + k * n + l] = self.weight[p] * s;
                }
            }
        }
        out
    }

    fn normal(&self, x: &[f64]) -> Vec<f64> {
        self.apply_transpose(&self.weigh(&self.apply(x)))
    }

    /// Constant and grid-alternating vector fields `X = ±e_k` that the
    /// discrete operator annihilates: Killing translations plus the
    /// checkerboard modes invisible to periodic stencils.
    fn null_patterns(&self) -> Vec<Vec<f64>> {
        let n = self.n;
        let len = self.chart.len();
        let even: Vec<usize> = (0..n).filter(|&a| self.chart.resolution()[a].is_multiple_of(2)).collect();
        let scale = self.g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut out = Vec::new();
        for subset in 0..(1usize << even.len()) {
            let sign: Vec<f64> = (0..len)
                .map(|p| {
                    let idx = self.chart.multi_index(p);
                    let flips: usize = even.iter().enumerate().filter(|(b, _)| subset >> b & 1 == 1).map(|(_, &a)| idx[a]).sum();
                    if flips.is_multiple_of(2) { 1.0 } else { -1.0 }
                })
                .collect();
            for k in 0..n {
                let mut v = vec![0.0; len * n];
                for p in 0..len {
                    v[p * n + k] = sign[p];
                }
                if self.apply(&v).iter().all(|x| x.abs() <= 1e-12 * scale) {
                    let norm = (len as f64).sqrt();
                    v.iter_mut().for_each(|x| *x /= norm);
                    out.push(v);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceDecomposition {
    #[serde(skip)]
    pub vector_part: TensorField,
    #[serde(skip)]
    pub divfree_parts: Vec<TensorField>,
    /// Sup norm of `h − L_X g − k`, relative to sup `|h|`.
    pub residual: f64,
    /// `⟨L_X g, k⟩ / (‖L_X g‖ ‖k‖)`, or `/‖h‖²` when either factor vanishes.
    pub orthogonality_defect: f64,
    /// `sup |div_g k|` relative to `sup |h|` scaled by the first wavenumber.
    pub divergence_defect: f64,
    /// Same for `B_g(k)`; diagnostic only.
    pub bianchi_defect: f64,
    pub iterations: usize,
    pub solver_residual: f64,
    pub h_norm: f64,
    pub orbit_norm: f64,
    pub complement_norm: f64,
}

impl SliceDecomposition {
    pub fn divfree_part(&self) -> &TensorField {
        &self.divfree_parts[0]
    }
}

pub const SLICE_TOLERANCE: f64 = 1e-10;

/// `min_X ‖h − L_X g‖²_{L²(g)}` by conjugate gradients on the normal
/// equations; `k = h − L_X g`.
pub fn slice_decompose(g: &MetricField, h: &TensorField) -> Result<SliceDecomposition> {
    slice_decompose_product(std::slice::from_ref(g), std::slice::from_ref(h))
}

/// Shared-`X` decomposition of a polymetric perturbation: the normal form
/// is the sum of the component forms.
pub fn slice_decompose_product(gs: &[MetricField], hs: &[TensorField]) -> Result<SliceDecomposition> {
    if gs.is_empty() || gs.len() != hs.len() {
        return Err(Error::ShapeMismatch("need one perturbation per metric component".into()));
    }
    let chart = gs[0].chart().clone();
    if !chart.fully_periodic() {
        return Err(Error::NonPeriodicChart);
    }
    let n = chart.dim();
    let mut ops = Vec::with_capacity(gs.len());
    let mut invs = Vec::with_capacity(gs.len());
    for (g, h) in gs.iter().zip(hs) {
        same_chart(g.chart(), &chart)?;
        same_chart(h.chart(), &chart)?;
        check_sym2(h)?;
        let inv = inverse_metric(g)?;
        ops.push(OrbitOperator::new(g, &inv)?);
        invs.push(inv);
    }
    let size = chart.len() * n;
    let mut rhs = vec![0.0; size];
    for (op, h) in ops.iter().zip(hs) {
        for (r, v) in rhs.iter_mut().zip(op.apply_transpose(&op.weigh(h.data()))) {
            *r += v;
        }
    }
    // Patterns annihilated by every component span the discrete kernel.
    let mut kernel = ops[0].null_patterns();
    for op in &ops[1..] {
        kernel.retain(|v| op.apply(v).iter().all(|x| x.abs() <= 1e-12 * op.g.iter().fold(0.0f64, |m, y| m.max(y.abs()))));
    }
    project_out(&mut rhs, &kernel);
    let normal = |x: &[f64]| {
        let mut acc = vec![0.0; x.len()];
        for op in &ops {
            for (a, v) in acc.iter_mut().zip(op.normal(x)) {
                *a += v;
            }
        }
        acc
    };
    let cg = conjugate_gradient(normal, &rhs, SLICE_TOLERANCE, 10 * size)?;
    let mut x = cg.x;
    project_out(&mut x, &kernel);
    let vector_part = TensorField::from_raw(chart.clone(), 1, 0, false, x);

    let mut residual = 0.0f64;
    let mut dot_sum = 0.0;
    let (mut lie_sq, mut k_sq, mut h_sq) = (0.0, 0.0, 0.0);
    let mut div_sup = 0.0f64;
    let mut bianchi_sup = 0.0f64;
    let mut h_sup = 0.0f64;
    let mut parts = Vec::with_capacity(gs.len());
    for ((g, h), (op, inv)) in gs.iter().zip(hs).zip(ops.iter().zip(&invs)) {
        let lie = TensorField::from_raw(chart.clone(), 0, 2, true, op.apply(vector_part.data()));
        let k = h.lin_comb(1.0, &lie, -1.0)?;
        let recon = lie.lin_comb(1.0, &k, 1.0)?.lin_comb(1.0, h, -1.0)?;
        residual = residual.max(recon.max_abs());
        dot_sum += pairing_with(&chart, inv, &lie, &k);
        lie_sq += pairing_with(&chart, inv, &lie, &lie);
        k_sq += pairing_with(&chart, inv, &k, &k);
        h_sq += pairing_with(&chart, inv, h, h);
        div_sup = div_sup.max(divergence_with(g, inv, &k)?.max_abs());
        bianchi_sup = bianchi_sup.max(bianchi_with(g, inv, &k)?.max_abs());
        h_sup = h_sup.max(h.max_abs());
        parts.push(k);
    }
    let (lie_norm, k_norm, h_norm) = (lie_sq.max(0.0).sqrt(), k_sq.max(0.0).sqrt(), h_sq.max(0.0).sqrt());
    let orthogonality_defect = if lie_norm > 1e-8 * h_norm && k_norm > 1e-8 * h_norm {
        dot_sum.abs() / (lie_norm * k_norm)
    } else if h_norm > 0.0 {
        dot_sum.abs() / (h_norm * h_norm)
    } else {
        0.0
    };
    // Derivatives of k scale with the inverse chart length.
    let wave = (0..n).map(|a| 2.0 * std::f64::consts::PI / chart.length(a)).fold(0.0, f64::max);
    let denom = if h_sup > 0.0 { h_sup } else { 1.0 };
    Ok(SliceDecomposition {
        vector_part,
        divfree_parts: parts,
        residual: residual / denom,
        orthogonality_defect,
        divergence_defect: div_sup / (denom * wave),
        bianchi_defect: bianchi_sup / (denom * wave),
        iterations: cg.iterations,
        solver_residual: cg.relative_residual,
        h_norm,
        orbit_norm: lie_norm,
        complement_norm: k_norm,
    })
}

/// Removes the span of orthonormal `basis` from `v`.
fn project_out(v: &mut [f64], basis: &[Vec<f64>]) {
    for b in basis {
        let c = dot(v, b);
        for (x, y) in v.iter_mut().zip(b) {
            *x -= c * y;
        }
    }
}

/// Dense matrix of the joint normal operator `Σ_i A_iᵀ W_i A_i`, built
/// column by column. Meant for small grids.
pub fn assemble_normal_matrix(gs: &[MetricField]) -> Result<nalgebra::DMatrix<f64>> {
    let chart = gs.first().ok_or(Error::ShapeMismatch("no metric components".into()))?.chart().clone();
    if !chart.fully_periodic() {
        return Err(Error::NonPeriodicChart);
    }
    let size = chart.len() * chart.dim();
    let ops: Vec<OrbitOperator> =
        gs.iter().map(|g| OrbitOperator::new(g, &inverse_metric(g)?)).collect::<Result<_>>()?;
    let mut m = nalgebra::DMatrix::zeros(size, size);
    let mut e = vec![0.0; size];
    for c in 0..size {
        e[c] = 1.0;
        for op in &ops {
            for (r, v) in op.normal(&e).into_iter().enumerate() {
                m[(r, c)] += v;
            }
        }
        e[c] = 0.0;
    }
    Ok(m)
}

/// Right-hand side `Σ_i A_iᵀ W_i h_i` of the joint normal equations.
pub fn normal_rhs(gs: &[MetricField], hs: &[TensorField]) -> Result<Vec<f64>> {
    let chart = gs[0].chart();
    let mut rhs = vec![0.0; chart.len() * chart.dim()];
    for (g, h) in gs.iter().zip(hs) {
        let op = OrbitOperator::new(g, &inverse_metric(g)?)?;
        for (r, v) in rhs.iter_mut().zip(op.apply_transpose(&op.weigh(h.data()))) {
            *r += v;
        }
    }
    Ok(rhs)
}
