//! Discretized Hodge Laplacians, spectral cutoffs, de Rham indices and the
//! one-dimensional Callias index.
//!
//! Torus Laplacians are Galerkin discretizations of the de Rham complex on
//! trigonometric polynomials of bounded band: exterior derivatives map the
//! trial spaces into each other exactly, so the discrete complex has the
//! cohomology of the torus for every metric, and the metric enters only
//! through the L² mass matrices of forms. The sphere uses the analogous
//! complex spanned by real spherical harmonics.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::cone::MetricField;
use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::linalg::{generalized_eigen, generalized_eigenvalues, solve_spd, tridiagonal_count_below};

/// Kernel threshold relative to the largest eigenvalue of each Laplacian.
pub const KERNEL_REL_TOL: f64 = 1e-6;
/// Cutoffs closer than this to an eigenvalue are shifted up by it.
pub const CUTOFF_SHIFT: f64 = 1e-8;
/// Singular values below this fraction of `‖A‖` count as kernel.
pub const SINGULAR_REL_TOL: f64 = 1e-6;
/// Minimal `|φ|` at the ends of the Callias interval.
pub const CALLIAS_COERCIVITY: f64 = 0.1;
/// Dense eigensolves beyond this size are refused.
pub const MAX_DENSE: usize = 4096;

/// Galerkin pencil `K v = λ M v`.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub stiffness: DMatrix<f64>,
    pub mass: DMatrix<f64>,
    pub domain: String,
}

impl OperatorMatrix {
    pub fn size(&self) -> usize {
        self.stiffness.nrows()
    }

    pub fn symmetry_defect(&self) -> f64 {
        (&self.stiffness - self.stiffness.transpose()).amax()
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        if self.size() > MAX_DENSE {
            return Err(Error::EigensolveFailure(format!("pencil of size {} exceeds {MAX_DENSE}", self.size())));
        }
        generalized_eigenvalues(&self.stiffness, &self.mass)
    }
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Per-axis trigonometric basis `1, cos k₁x, sin k₁x, …, cos k_M x, sin k_M x`.
fn trig_values(x: f64, length: f64, band: usize) -> Vec<f64> {
    let mut v = Vec::with_capacity(2 * band + 1);
    v.push(1.0);
    for m in 1..=band {
        let k = 2.0 * PI * m as f64 / length;
        v.push((k * x).cos());
        v.push((k * x).sin());
    }
    v
}

/// Derivative in coefficient space of the per-axis basis.
fn trig_derivative(length: f64, band: usize) -> DMatrix<f64> {
    let b = 2 * band + 1;
    let mut d = DMatrix::zeros(b, b);
    for m in 1..=band {
        let k = 2.0 * PI * m as f64 / length;
        d[(2 * m, 2 * m - 1)] = -k;
        d[(2 * m - 1, 2 * m)] = k;
    }
    d
}

fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

/// Default trigonometric band for `n` nodes per axis.
pub fn default_band(n: usize) -> usize {
    (n / 4).max(1).min(n.saturating_sub(1) / 2)
}

/// The discrete de Rham complex of a periodic chart of dimension 1 or 2:
/// exterior derivatives `d[k]` and metric mass matrices `mass[k]`.
#[derive(Debug, Clone)]
pub struct FormComplex {
    pub dim: usize,
    pub d: Vec<DMatrix<f64>>,
    pub mass: Vec<DMatrix<f64>>,
    pub domain: String,
}

impl FormComplex {
    /// Galerkin Hodge Laplacian `dδ + δd` on degree `k`.
    pub fn laplacian(&self, k: usize) -> Result<OperatorMatrix> {
        if k > self.dim {
            return Err(Error::ShapeMismatch(format!("form degree {k} exceeds dimension {}", self.dim)));
        }
        let mk = &self.mass[k];
        let mut stiff = DMatrix::zeros(mk.nrows(), mk.ncols());
        if k < self.dim {
            let d = &self.d[k];
            stiff += d.transpose() * &self.mass[k + 1] * d;
        }
        if k > 0 {
            let d = &self.d[k - 1];
            let dt_m = d.transpose() * mk;
            let solved = solve_spd(&self.mass[k - 1], &dt_m)?;
            stiff += dt_m.transpose() * solved;
        }
        Ok(OperatorMatrix { stiffness: symmetrize(stiff), mass: mk.clone(), domain: format!("{} degree {k}", self.domain) })
    }

    /// Largest defect of `d ∘ d = 0`.
    pub fn complex_defect(&self) -> f64 {
        self.d.windows(2).map(|w| (&w[1] * &w[0]).amax()).fold(0.0, f64::max)
    }
}

pub fn torus_complex(g: &MetricField, band: Option<usize>) -> Result<FormComplex> {
    let chart = g.chart();
    let n = chart.dim();
    if !chart.fully_periodic() {
        return Err(Error::NonPeriodicChart);
    }
    if n > 2 {
        return Err(Error::Unsupported(format!("form Laplacians on {n}-dimensional charts")));
    }
    let bands: Vec<usize> = (0..n).map(|a| band.unwrap_or_else(|| default_band(chart.resolution()[a]))).collect();
    for a in 0..n {
        if 2 * bands[a] + 1 > chart.resolution()[a] - 1 {
            return Err(Error::ResolutionTooSmall { axis: a, resolution: chart.resolution()[a] });
        }
    }
    let sizes: Vec<usize> = bands.iter().map(|b| 2 * b + 1).collect();
    let nb: usize = sizes.iter().product();
    let weights = chart.cell_weights();
    // Basis values at the nodes, one row per node.
    let mut e = DMatrix::zeros(chart.len(), nb);
    let mut density = vec![0.0; chart.len()];
    let mut inv_density = vec![0.0; chart.len()];
    let mut ginv_density = vec![[0.0; 4]; chart.len()];
    for node in 0..chart.len() {
        let x = chart.node_coords(node);
        let vals: Vec<Vec<f64>> = (0..n).map(|a| trig_values(x[a], chart.length(a), bands[a])).collect();
        if n == 1 {
            for (c, v) in vals[0].iter().enumerate() {
                e[(node, c)] = *v;
            }
        } else {
            for (i, vi) in vals[0].iter().enumerate() {
                for (j, vj) in vals[1].iter().enumerate() {
                    e[(node, i * sizes[1] + j)] = vi * vj;
                }
            }
        }
        let gm = g.at(node);
        let det = if n == 1 { gm[0] } else { gm[0] * gm[3] - gm[1] * gm[2] };
        let s = det.sqrt();
        density[node] = s * weights[node];
        inv_density[node] = weights[node] / s;
        if n == 2 {
            ginv_density[node] = [gm[3] / s * weights[node], -gm[1] / s * weights[node], -gm[2] / s * weights[node], gm[0] / s * weights[node]];
        }
    }
    let weighted = |w: &[f64]| -> DMatrix<f64> {
        let mut we = e.clone();
        for (r, wr) in w.iter().enumerate() {
            we.row_mut(r).scale_mut(*wr);
        }
        symmetrize(e.transpose() * we)
    };
    let derivs: Vec<DMatrix<f64>> = (0..n).map(|a| trig_derivative(chart.length(a), bands[a])).collect();
    let domain = format!("trigonometric band {:?} on {:?} torus", bands, chart.resolution());
    if n == 1 {
        return Ok(FormComplex {
            dim: 1,
            d: vec![derivs[0].clone()],
            mass: vec![weighted(&density), weighted(&inv_density)],
            domain,
        });
    }
    let d0x = kron(&derivs[0], &DMatrix::identity(sizes[1], sizes[1]));
    let d1x = kron(&DMatrix::identity(sizes[0], sizes[0]), &derivs[1]);
    let mut d0 = DMatrix::zeros(2 * nb, nb);
    d0.view_mut((0, 0), (nb, nb)).copy_from(&d0x);
    d0.view_mut((nb, 0), (nb, nb)).copy_from(&d1x);
    let mut d1 = DMatrix::zeros(nb, 2 * nb);
    d1.view_mut((0, 0), (nb, nb)).copy_from(&(-&d1x));
    d1.view_mut((0, nb), (nb, nb)).copy_from(&d0x);
    let mut m1 = DMatrix::zeros(2 * nb, 2 * nb);
    for i in 0..2 {
        for j in 0..2 {
            let w: Vec<f64> = ginv_density.iter().map(|v| v[i * 2 + j]).collect();
            m1.view_mut((i * nb, j * nb), (nb, nb)).copy_from(&weighted(&w));
        }
    }
    Ok(FormComplex { dim: 2, d: vec![d0, d1], mass: vec![weighted(&density), symmetrize(m1), weighted(&inv_density)], domain })
}

pub fn hodge_laplacian(g: &MetricField, k: usize) -> Result<OperatorMatrix> {
    torus_complex(g, None)?.laplacian(k)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralReport {
    pub eigenvalues: Vec<f64>,
    pub cutoff: f64,
    pub shifted: bool,
    pub rank_below: usize,
    pub kernel_dim: usize,
    pub kernel_tol: f64,
    pub index: Option<i64>,
}

fn shift_cutoff(eigenvalues: &[f64], mut cutoff: f64) -> (f64, bool) {
    let mut shifted = false;
    while eigenvalues.iter().any(|l| (l - cutoff).abs() < CUTOFF_SHIFT) {
        cutoff += CUTOFF_SHIFT;
        shifted = true;
    }
    (cutoff, shifted)
}

fn report_from(eigenvalues: Vec<f64>, cutoff: f64) -> SpectralReport {
    let (cutoff, shifted) = shift_cutoff(&eigenvalues, cutoff);
    let kernel_tol = KERNEL_REL_TOL * eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    SpectralReport {
        rank_below: eigenvalues.iter().filter(|&&l| l <= cutoff).count(),
        kernel_dim: eigenvalues.iter().filter(|&&l| l < kernel_tol).count(),
        eigenvalues,
        cutoff,
        shifted,
        kernel_tol,
        index: None,
    }
}

pub fn spectral_cutoff(op: &OperatorMatrix, cutoff: f64) -> Result<SpectralReport> {
    Ok(report_from(op.eigenvalues()?, cutoff))
}

/// `M`-orthonormal basis (columns) of the eigenspaces with `λ ≤ Λ`.
pub fn spectral_projection(op: &OperatorMatrix, cutoff: f64) -> Result<DMatrix<f64>> {
    let (vals, vecs) = generalized_eigen(&op.stiffness, &op.mass)?;
    let (cutoff, _) = shift_cutoff(&vals, cutoff);
    let keep = vals.iter().filter(|&&l| l <= cutoff).count();
    Ok(vecs.columns(0, keep).into_owned())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeRhamReport {
    pub betti: Vec<usize>,
    pub index: i64,
    pub kernel_tol: Vec<f64>,
    pub smallest_nonzero: Vec<f64>,
}

fn de_rham_from(complex: &FormComplex) -> Result<DeRhamReport> {
    let mut betti = Vec::new();
    let mut tols = Vec::new();
    let mut gaps = Vec::new();
    for k in 0..=complex.dim {
        let vals = complex.laplacian(k)?.eigenvalues()?;
        let tol = KERNEL_REL_TOL * vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let kernel = vals.iter().filter(|&&l| l < tol).count();
        let smallest = vals.get(kernel).copied().unwrap_or(f64::INFINITY);
        if smallest < 10.0 * tol {
            return Err(Error::KernelGapTooSmall { smallest, tol });
        }
        betti.push(kernel);
        tols.push(tol);
        gaps.push(smallest);
    }
    let index = betti.iter().enumerate().map(|(k, b)| if k % 2 == 0 { *b as i64 } else { -(*b as i64) }).sum();
    Ok(DeRhamReport { betti, index, kernel_tol: tols, smallest_nonzero: gaps })
}

/// `Σ (−1)^k dim ker Δ_k` on a periodic chart.
pub fn de_rham_index(g: &MetricField) -> Result<DeRhamReport> {
    de_rham_from(&torus_complex(g, None)?)
}

/// Gauss–Legendre nodes and weights on `[−1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Real orthonormal spherical harmonics `Y_lm`, `l ≤ band`, at `(θ, φ)`:
/// values and the derivatives `∂_θ`, `∂_φ`, ordered by `l` then `m = −l..=l`.
pub fn spherical_harmonics(theta: f64, phi: f64, band: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let (z, s) = (theta.cos(), theta.sin());
    let n = band + 1;
    let mut p = vec![vec![0.0; n]; n];
    p[0][0] = (0.25 / PI).sqrt();
    for m in 1..n {
        p[m][m] = ((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * s * p[m - 1][m - 1];
    }
    for m in 0..n {
        if m + 1 < n {
            p[m + 1][m] = ((2 * m + 3) as f64).sqrt() * z * p[m][m];
        }
        for l in m + 2..n {
            let (lf, mf) = (l as f64, m as f64);
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
            p[l][m] = a * (z * p[l - 1][m] - b * p[l - 2][m]);
        }
    }
    // sinθ ∂_θ P_l^m = l z P_l^m − c_lm P_{l−1}^m
    let dp = |l: usize, m: usize| -> f64 {
        let (lf, mf) = (l as f64, m as f64);
        let lower = if l > m { ((2.0 * lf + 1.0) * (lf * lf - mf * mf) / (2.0 * lf - 1.0)).sqrt() * p[l - 1][m] } else { 0.0 };
        (lf * z * p[l][m] - lower) / s
    };
    let count = n * n;
    let (mut y, mut yt, mut yp) = (Vec::with_capacity(count), Vec::with_capacity(count), Vec::with_capacity(count));
    for l in 0..n {
        for mm in -(l as i64)..=(l as i64) {
            let m = mm.unsigned_abs() as usize;
            let (pv, dv) = (p[l][m], dp(l, m));
            if mm == 0 {
                y.push(pv);
                yt.push(dv);
                yp.push(0.0);
            } else {
                let r = 2f64.sqrt();
                let mf = m as f64;
                let (c, sn) = ((mf * phi).cos(), (mf * phi).sin());
                if mm > 0 {
                    y.push(r * pv * c);
                    yt.push(r * dv * c);
                    yp.push(-r * pv * mf * sn);
                } else {
                    y.push(r * pv * sn);
                    yt.push(r * dv * sn);
                    yp.push(r * pv * mf * c);
                }
            }
        }
    }
    (y, yt, yp)
}

/// Quadrature on `S²`: Gauss–Legendre in `cos θ` times uniform in `φ`.
struct SphereQuadrature {
    theta: Vec<f64>,
    phi: Vec<f64>,
    weight: Vec<f64>,
}

fn sphere_quadrature(n_z: usize, n_phi: usize) -> SphereQuadrature {
    let (z, w) = gauss_legendre(n_z);
    let mut q = SphereQuadrature { theta: Vec::new(), phi: Vec::new(), weight: Vec::new() };
    for (zi, wi) in z.iter().zip(&w) {
        for j in 0..n_phi {
            q.theta.push(zi.acos());
            q.phi.push(2.0 * PI * j as f64 / n_phi as f64);
            q.weight.push(wi * 2.0 * PI / n_phi as f64);
        }
    }
    q
}

/// Largest residual of projecting the columns of `target` onto the span of
/// an orthonormal basis (both sampled at quadrature nodes, `w`-weighted).
fn projection_defect(target: &DMatrix<f64>, coeffs: &DMatrix<f64>) -> f64 {
    let full: Vec<f64> = (0..target.ncols()).map(|c| target.column(c).norm_squared()).collect();
    let kept: Vec<f64> = (0..coeffs.ncols()).map(|c| coeffs.column(c).norm_squared()).collect();
    full.iter().zip(&kept).map(|(f, k)| (f - k).abs() / f.max(1.0)).fold(0.0, f64::max)
}

/// De Rham complex of `S²` with metric `e^{2u}·round`, spanned by
/// spherical harmonics of degree `≤ band` (0-forms), tangential fields
/// `P_T(e_a)·Y` with `deg Y < band` (1-forms) and `Y·dA` with
/// `deg Y < band` (2-forms).
#[derive(Debug, Clone)]
pub struct SphereComplex {
    pub complex: FormComplex,
    /// Largest defect of `d` mapping the trial spaces into each other.
    pub subcomplex_defect: f64,
}

pub fn sphere_complex(band: usize, u: impl Fn(f64, f64) -> f64) -> Result<SphereComplex> {
    if band == 0 {
        return Err(Error::Unsupported("spherical band must be positive".into()));
    }
    let q = sphere_quadrature(band + 4, 2 * band + 4);
    let nq = q.weight.len();
    let n0 = (band + 1) * (band + 1);
    let n2 = band * band;
    let sw: Vec<f64> = q.weight.iter().map(|w| w.sqrt()).collect();
    // Weighted samples: rows are quadrature nodes (×3 for vector fields).
    let mut y0 = DMatrix::zeros(nq, n0);
    let mut grad0 = DMatrix::zeros(3 * nq, n0);
    let mut raw1 = DMatrix::zeros(3 * nq, 3 * n2);
    let mut draw1 = DMatrix::zeros(nq, 3 * n2);
    let mut conformal = vec![0.0; nq];
    for node in 0..nq {
        let (th, ph) = (q.theta[node], q.phi[node]);
        let (y, yt, yp) = spherical_harmonics(th, ph, band);
        let x = [th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()];
        let e_t = [th.cos() * ph.cos(), th.cos() * ph.sin(), -th.sin()];
        let e_p = [-ph.sin(), ph.cos(), 0.0];
        let w = sw[node];
        conformal[node] = 2.0 * u(th, ph);
        for c in 0..n0 {
            y0[(node, c)] = w * y[c];
            for a in 0..3 {
                grad0[(3 * node + a, c)] = w * (yt[c] * e_t[a] + yp[c] / th.sin() * e_p[a]);
            }
        }
        for c in 0..n2 {
            let grad: Vec<f64> = (0..3).map(|a| yt[c] * e_t[a] + yp[c] / th.sin() * e_p[a]).collect();
            for a in 0..3 {
                let col = 3 * c + a;
                for b in 0..3 {
                    let pt = if a == b { 1.0 } else { 0.0 } - x[a] * x[b];
                    raw1[(3 * node + b, col)] = w * pt * y[c];
                }
                // (∇_S Y × e_a) · x
                let (i, j) = ((a + 1) % 3, (a + 2) % 3);
                let cross_dot = x[i] * grad[j] - x[j] * grad[i];
                draw1[(node, col)] = w * cross_dot;
            }
        }
    }
    // Orthonormal basis of the 1-form space (round L², conformally invariant).
    let gram = symmetrize(raw1.transpose() * &raw1);
    let eig = gram.symmetric_eigen();
    let top = eig.eigenvalues.amax();
    let keep: Vec<usize> = (0..eig.eigenvalues.len()).filter(|&i| eig.eigenvalues[i] > 1e-10 * top).collect();
    let n1 = keep.len();
    let mut c1 = DMatrix::zeros(raw1.ncols(), n1);
    for (col, &i) in keep.iter().enumerate() {
        c1.set_column(col, &(eig.eigenvectors.column(i) / eig.eigenvalues[i].sqrt()));
    }
    let basis1 = &raw1 * &c1;
    let y2 = y0.columns(0, n2).into_owned();
    let d0 = basis1.transpose() * &grad0;
    let d1 = y2.transpose() * (&draw1 * &c1);
    let defect = projection_defect(&grad0, &d0).max(projection_defect(&(&draw1 * &c1), &d1));
    let weighted = |m: &DMatrix<f64>, sign: f64| -> DMatrix<f64> {
        let mut wm = m.clone();
        for (r, cf) in conformal.iter().enumerate() {
            wm.row_mut(r).scale_mut((sign * cf).exp());
        }
        symmetrize(m.transpose() * wm)
    };
    let complex = FormComplex {
        dim: 2,
        d: vec![d0, d1],
        mass: vec![weighted(&y0, 1.0), DMatrix::identity(n1, n1), weighted(&y2, -1.0)],
        domain: format!("spherical harmonics band {band}"),
    };
    Ok(SphereComplex { complex, subcomplex_defect: defect })
}

/// De Rham index of `(S², e^{2u}·round)` from the harmonic Galerkin complex.
pub fn de_rham_index_sphere(band: usize, u: impl Fn(f64, f64) -> f64) -> Result<DeRhamReport> {
    de_rham_from(&sphere_complex(band, u)?.complex)
}

/// Sparse real matrix with at most two adjacent nonzeros per row.
#[derive(Debug, Clone, PartialEq)]
pub struct BandOperator {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<Vec<(usize, f64)>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct KernelCount {
    pub kernel: usize,
    pub cokernel: usize,
    pub index: i64,
}

impl BandOperator {
    /// `AᵀA` (columns) or `AAᵀ` (rows) as a symmetric tridiagonal pair.
    fn gram(&self, of_columns: bool) -> Result<(Vec<f64>, Vec<f64>)> {
        let size = if of_columns { self.cols } else { self.rows };
        let mut d = vec![0.0; size];
        let mut e = vec![0.0; size.saturating_sub(1)];
        if of_columns {
            for row in &self.entries {
                for &(i, a) in row {
                    for &(j, b) in row {
                        if i == j {
                            d[i] += a * b;
                        } else if j == i + 1 {
                            e[i] += a * b;
                        } else if j > i + 1 {
                            return Err(Error::Unsupported("operator is not bidiagonal".into()));
                        }
                    }
                }
            }
        } else {
            for (r, row) in self.entries.iter().enumerate() {
                d[r] = row.iter().map(|(_, a)| a * a).sum();
                if let Some(next) = self.entries.get(r + 1) {
                    e[r] = row.iter().map(|&(c, a)| next.iter().filter(|(c2, _)| *c2 == c).map(|(_, b)| a * b).sum::<f64>()).sum();
                }
            }
        }
        Ok((d, e))
    }

    /// Kernel and cokernel dimensions from Sturm counts of the Gram
    /// matrices below `(SINGULAR_REL_TOL·‖A‖)²`.
    pub fn kernel_count(&self) -> Result<KernelCount> {
        let (dc, ec) = self.gram(true)?;
        let (dr, er) = self.gram(false)?;
        // Gershgorin bound on ‖AᵀA‖ = ‖A‖².
        let norm_sq = (0..dc.len())
            .map(|i| dc[i].abs() + if i > 0 { ec[i - 1].abs() } else { 0.0 } + ec.get(i).map_or(0.0, |v| v.abs()))
            .fold(0.0, f64::max);
        let tau = SINGULAR_REL_TOL * SINGULAR_REL_TOL * norm_sq;
        let kernel = tridiagonal_count_below(&dc, &ec, tau);
        let cokernel = tridiagonal_count_below(&dr, &er, tau);
        Ok(KernelCount { kernel, cokernel, index: kernel as i64 - cokernel as i64 })
    }

    pub fn block_diagonal(blocks: &[BandOperator]) -> BandOperator {
        let mut out = BandOperator { rows: 0, cols: 0, entries: Vec::new() };
        for b in blocks {
            let off = out.cols;
            out.entries.extend(b.entries.iter().map(|row| row.iter().map(|&(c, v)| (c + off, v)).collect()));
            out.rows += b.rows;
            out.cols += b.cols;
        }
        out
    }
}

/// `A = d/dx + φ` on `[−L, L]` by the box scheme (one row per cell),
/// with `u = 0` imposed at each end where the solutions of `Au = 0` grow
/// towards that end; an L² zero mode never needs the removed value.
pub fn callias_operator(phi: &ScalarField) -> Result<BandOperator> {
    let chart = phi.chart();
    if chart.dim() != 1 || chart.is_periodic(0) {
        return Err(Error::InvalidChart("Callias potentials live on an open interval".into()));
    }
    let v = phi.values();
    let n = v.len();
    let (left, right) = (v[0], v[n - 1]);
    for end in [left, right] {
        if end.abs() < CALLIAS_COERCIVITY {
            return Err(Error::PotentialNotCoercive { value: end, bound: CALLIAS_COERCIVITY });
        }
    }
    // Solutions behave like e^{−φ(±L)x}: they grow to the right when φ(L) < 0
    // and to the left when φ(−L) > 0.
    let drop_left = left > 0.0;
    let drop_right = right < 0.0;
    let first = usize::from(drop_left);
    let last = if drop_right { n - 2 } else { n - 1 };
    let h = chart.spacing(0);
    let mut entries = Vec::with_capacity(n - 1);
    for j in 0..n - 1 {
        let mid = 0.5 * (v[j] + v[j + 1]);
        let mut row = Vec::with_capacity(2);
        for (col, val) in [(j, -1.0 / h + 0.5 * mid), (j + 1, 1.0 / h + 0.5 * mid)] {
            if col >= first && col <= last {
                row.push((col - first, val));
            }
        }
        entries.push(row);
    }
    Ok(BandOperator { rows: n - 1, cols: last + 1 - first, entries })
}

/// Spectral-flow count: `+1` per − → + crossing of `φ`, `−1` per + → −.
pub fn sign_change_index(phi: &ScalarField) -> i64 {
    let signs: Vec<f64> = phi.values().iter().filter(|v| **v != 0.0).map(|v| v.signum()).collect();
    signs.windows(2).map(|w| ((w[1] - w[0]) / 2.0) as i64).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalliasReport {
    pub index: i64,
    pub kernel: usize,
    pub cokernel: usize,
    pub sign_count: i64,
    pub agree: bool,
}

pub fn callias_index_1d(phi: &ScalarField) -> Result<CalliasReport> {
    let count = callias_operator(phi)?.kernel_count()?;
    let sign_count = sign_change_index(phi);
    Ok(CalliasReport { index: count.index, kernel: count.kernel, cokernel: count.cokernel, sign_count, agree: count.index == sign_count })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdditivityRecord {
    pub block_indices: Vec<i64>,
    pub sum: i64,
    pub assembled: i64,
}

pub fn block_index_additivity(blocks: &[BandOperator]) -> Result<AdditivityRecord> {
    let block_indices = blocks.iter().map(|b| b.kernel_count().map(|k| k.index)).collect::<Result<Vec<i64>>>()?;
    let assembled = BandOperator::block_diagonal(blocks).kernel_count()?.index;
    Ok(AdditivityRecord { sum: block_indices.iter().sum(), block_indices, assembled })
}
