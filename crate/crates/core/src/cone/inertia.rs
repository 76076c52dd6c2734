use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{asymmetry, jacobi_eigen};

/// Signature data `(p, q)` of a symmetric bilinear form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Inertia {
    pub positive: usize,
    pub negative: usize,
    pub degenerate: bool,
}

impl Inertia {
    /// Nondegenerate signature `(p, q)`.
    pub fn new(positive: usize, negative: usize) -> Inertia {
        Inertia { positive, negative, degenerate: false }
    }

    pub fn riemannian(n: usize) -> Inertia {
        Inertia::new(n, 0)
    }

    pub fn lorentzian(n: usize) -> Inertia {
        Inertia::new(n - 1, 1)
    }

    pub fn is_riemannian(&self) -> bool {
        self.negative == 0 && !self.degenerate
    }
}

impl fmt::Display for Inertia {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.positive, self.negative)?;
        if self.degenerate {
            write!(f, " degenerate")?;
        }
        Ok(())
    }
}

/// Inertia of a symmetric `n x n` matrix (row-major) by Jacobi eigenvalues,
/// treating `|λ| <= tol` as zero.
pub fn inertia_of(matrix: &[f64], n: usize, tol: f64) -> Result<Inertia> {
    if matrix.len() != n * n {
        return Err(Error::ShapeMismatch(format!("{} entries for a {n}x{n} matrix", matrix.len())));
    }
    let defect = asymmetry(matrix, n);
    if defect > 1e-12 {
        return Err(Error::NotSymmetric { defect });
    }
    Ok(inertia_from_eigenvalues(&jacobi_eigen(matrix, n).values, tol))
}

pub(crate) fn inertia_from_eigenvalues(values: &[f64], tol: f64) -> Inertia {
    let positive = values.iter().filter(|&&l| l > tol).count();
    let negative = values.iter().filter(|&&l| l < -tol).count();
    Inertia { positive, negative, degenerate: positive + negative < values.len() }
}

/// Inertia from signs of leading principal minors (Jacobi's rule). Only valid
/// when every leading minor is nonzero; returns `None` otherwise.
pub fn inertia_by_minors(matrix: &[f64], n: usize) -> Option<Inertia> {
    let mut prev = 1.0;
    let mut negative = 0;
    for k in 1..=n {
        let minor = leading_minor(matrix, n, k);
        if minor == 0.0 || !minor.is_finite() {
            return None;
        }
        if (minor > 0.0) != (prev > 0.0) {
            negative += 1;
        }
        prev = minor;
    }
    Some(Inertia::new(n - negative, negative))
}

fn leading_minor(matrix: &[f64], n: usize, k: usize) -> f64 {
    let mut a: Vec<f64> = (0..k).flat_map(|i| (0..k).map(move |j| (i, j))).map(|(i, j)| matrix[i * n + j]).collect();
    let mut det = 1.0;
    for c in 0..k {
        let p = (c..k).max_by(|&x, &y| a[x * k + c].abs().total_cmp(&a[y * k + c].abs())).unwrap();
        if a[p * k + c] == 0.0 {
            return 0.0;
        }
        if p != c {
            for j in 0..k {
                a.swap(p * k + j, c * k + j);
            }
            det = -det;
        }
        det *= a[c * k + c];
        for r in c + 1..k {
            let f = a[r * k + c] / a[c * k + c];
            for j in c..k {
                a[r * k + j] -= f * a[c * k + j];
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;

    #[test]
    fn identity_is_riemannian() {
        let i3 = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        assert_eq!(inertia_of(&i3, 3, 1e-9).unwrap(), Inertia::new(3, 0));
    }

    #[test]
    fn lorentzian_form() {
        let mut m = [0.0; 16];
        m[0] = -1.0;
        m[5] = 1.0;
        m[10] = 1.0;
        m[15] = 1.0;
        assert_eq!(inertia_of(&m, 4, 1e-9).unwrap(), Inertia::new(3, 1));
    }

    #[test]
    fn zero_eigenvalue_is_degenerate() {
        let m = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -1.0];
        let i = inertia_of(&m, 3, 1e-9).unwrap();
        assert!(i.degenerate);
        assert_eq!((i.positive, i.negative), (1, 1));
    }

    #[test]
    fn asymmetric_rejected() {
        assert!(matches!(inertia_of(&[1.0, 2.0, 0.0, 1.0], 2, 1e-9), Err(Error::NotSymmetric { .. })));
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

    // Sylvester's law: congruence preserves inertia; minors and eigenvalues agree.
    #[test]
    fn sylvester_congruence_invariance() {
        let mut rng = CounterRng::new(11);
        for n in 2..=4 {
            for _ in 0..100 {
                let a = random_sym(&mut rng, n);
                let s: Vec<f64> = (0..n * n).map(|_| rng.normal()).collect();
                let mut sas = vec![0.0; n * n];
                for i in 0..n {
                    for j in 0..n {
                        let mut acc = 0.0;
                        for k in 0..n {
                            for l in 0..n {
                                acc += s[k * n + i] * a[k * n + l] * s[l * n + j];
                            }
                        }
                        sas[i * n + j] = acc;
                    }
                }
                for i in 0..n {
                    for j in i + 1..n {
                        let m = 0.5 * (sas[i * n + j] + sas[j * n + i]);
                        sas[i * n + j] = m;
                        sas[j * n + i] = m;
                    }
                }
                let base = inertia_of(&a, n, 1e-9).unwrap();
                assert_eq!(inertia_of(&sas, n, 1e-9).unwrap(), base);
                if let Some(by_minors) = inertia_by_minors(&a, n) {
                    assert_eq!(by_minors, base);
                }
            }
        }
    }
}
