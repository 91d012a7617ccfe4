//! Dense complex linear algebra over small Hermitian and general matrices.
//!
//! Eigen- and singular-value decompositions are delegated to `nalgebra`;
//! the Cholesky factorization is implemented here so that the pivot
//! threshold is explicit.

use std::ops::Deref;

use nalgebra::{DMatrix, SymmetricEigen, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// General dense complex matrix (channels, transforms, factors).
pub type ComplexMatrix = DMatrix<Complex64>;

/// Pivots at or below this value are rejected by [`cholesky_factor`].
pub const PD_PIVOT_TOL: f64 = 1e-12;

/// Absolute tolerance on conjugate symmetry accepted by [`HermitianMatrix::new`].
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Square complex matrix with conjugate symmetry.
///
/// Construction through [`HermitianMatrix::symmetrize`] averages the matrix
/// with its conjugate transpose, so products that are Hermitian only up to
/// rounding can be stored without drift.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(ComplexMatrix);

impl HermitianMatrix {
    /// Wraps `m` after checking squareness and conjugate symmetry.
    pub fn new(m: ComplexMatrix) -> Option<Self> {
        if !m.is_square() {
            return None;
        }
        let n = m.nrows();
        for i in 0..n {
            for j in i..n {
                if (m[(i, j)] - m[(j, i)].conj()).norm() > HERMITIAN_TOL {
                    return None;
                }
            }
        }
        Some(Self::symmetrize(m))
    }

    /// Returns `(m + mᴴ) / 2`.
    pub fn symmetrize(m: ComplexMatrix) -> Self {
        assert!(m.is_square(), "Hermitian part of a non-square matrix");
        let adj = m.adjoint();
        Self((m + adj).scale(0.5))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(ComplexMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(ComplexMatrix::identity(dim, dim))
    }

    pub fn scaled_identity(dim: usize, scale: f64) -> Self {
        Self(ComplexMatrix::identity(dim, dim).scale(scale))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = ComplexMatrix::zeros(n, n);
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(*d, 0.0);
        }
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    /// Real part of the trace.
    pub fn trace_re(&self) -> f64 {
        (0..self.dim()).map(|i| self.0[(i, i)].re).sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.0.norm()
    }

    /// `Re Tr[self · other]`, the real inner product of two Hermitian matrices.
    pub fn inner(&self, other: &HermitianMatrix) -> f64 {
        self.0.dot(&other.0.transpose()).re
    }

    pub fn add(&self, other: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix(&self.0 - &other.0)
    }

    pub fn scale(&self, s: f64) -> HermitianMatrix {
        HermitianMatrix(self.0.scale(s))
    }

    /// Eigenvalues in ascending order with matching unit eigenvectors as columns.
    pub fn eigh(&self) -> (Vec<f64>, ComplexMatrix) {
        let n = self.dim();
        if n == 0 {
            return (Vec::new(), ComplexMatrix::zeros(0, 0));
        }
        let eig = SymmetricEigen::new(self.0.clone());
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = ComplexMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
        (values, vectors)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eigh().0
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    /// Rebuilds `V diag(g(λ)) Vᴴ` from the eigendecomposition.
    pub fn map_eigenvalues(&self, g: impl Fn(f64) -> f64) -> HermitianMatrix {
        let (values, vectors) = self.eigh();
        let mapped: Vec<f64> = values.into_iter().map(g).collect();
        congruence(&vectors, &HermitianMatrix::from_real_diagonal(&mapped))
    }
}

impl Deref for HermitianMatrix {
    type Target = ComplexMatrix;

    fn deref(&self) -> &ComplexMatrix {
        &self.0
    }
}

/// Lower-triangular `L` with `L·Lᴴ = m`.
pub fn cholesky_factor(m: &HermitianMatrix) -> Result<ComplexMatrix> {
    let n = m.dim();
    let mut l = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if d.is_nan() || d <= PD_PIVOT_TOL {
            return Err(Error::NotPositiveDefinite { index: j, pivot: d });
        }
        let djj = d.sqrt();
        l[(j, j)] = Complex64::new(djj, 0.0);
        for i in (j + 1)..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Thin singular value decomposition `m = U·diag(σ)·Vᴴ`.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: ComplexMatrix,
    /// Nonincreasing, nonnegative.
    pub singular_values: Vec<f64>,
    pub v: ComplexMatrix,
}

impl Svd {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let k = self.singular_values.len();
        let mut us = self.u.clone();
        for c in 0..k {
            let s = self.singular_values[c];
            us.column_mut(c).scale_mut(s);
        }
        us * self.v.adjoint()
    }
}

pub fn svd(m: &ComplexMatrix) -> Svd {
    let (r, c) = m.shape();
    let k = r.min(c);
    if k == 0 {
        return Svd {
            u: ComplexMatrix::zeros(r, 0),
            singular_values: Vec::new(),
            v: ComplexMatrix::zeros(c, 0),
        };
    }
    let dec = SVD::new(m.clone(), true, true);
    let u = dec.u.expect("left singular vectors requested");
    let v_t = dec.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| dec.singular_values[b].total_cmp(&dec.singular_values[a]));
    Svd {
        u: ComplexMatrix::from_fn(r, k, |i, j| u[(i, order[j])]),
        singular_values: order.iter().map(|&i| dec.singular_values[i].max(0.0)).collect(),
        v: ComplexMatrix::from_fn(c, k, |i, j| v_t[(order[j], i)].conj()),
    }
}

/// Natural-log determinant of a positive definite matrix.
pub fn logdet(m: &HermitianMatrix) -> Result<f64> {
    let l = cholesky_factor(m)?;
    Ok((0..m.dim()).map(|i| 2.0 * l[(i, i)].re.ln()).sum())
}

/// Clamps negative eigenvalues to zero.
pub fn psd_project(m: &HermitianMatrix) -> HermitianMatrix {
    if m.min_eigenvalue() >= 0.0 {
        return m.clone();
    }
    m.map_eigenvalues(|l| l.max(0.0))
}

/// Hermitian square root of the PSD part of `m`.
pub fn psd_sqrt(m: &HermitianMatrix) -> HermitianMatrix {
    m.map_eigenvalues(|l| l.max(0.0).sqrt())
}

/// Inverse of a lower-triangular matrix by forward substitution.
pub fn lower_triangular_inverse(l: &ComplexMatrix) -> ComplexMatrix {
    let n = l.nrows();
    let mut inv = ComplexMatrix::zeros(n, n);
    for col in 0..n {
        for i in col..n {
            let mut s = if i == col {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
            for k in col..i {
                s -= l[(i, k)] * inv[(k, col)];
            }
            inv[(i, col)] = s / l[(i, i)];
        }
    }
    inv
}

/// Inverse of a positive definite matrix through its Cholesky factor.
pub fn hermitian_inverse(m: &HermitianMatrix) -> Result<HermitianMatrix> {
    let l_inv = lower_triangular_inverse(&cholesky_factor(m)?);
    Ok(HermitianMatrix::symmetrize(l_inv.adjoint() * l_inv))
}

/// `A·S·Aᴴ`, symmetrized.
pub fn congruence(a: &ComplexMatrix, s: &HermitianMatrix) -> HermitianMatrix {
    HermitianMatrix::symmetrize(a * s.as_matrix() * a.adjoint())
}

/// `Aᴴ·S·A`, symmetrized.
pub fn adjoint_congruence(a: &ComplexMatrix, s: &HermitianMatrix) -> HermitianMatrix {
    HermitianMatrix::symmetrize(a.adjoint() * s.as_matrix() * a)
}

/// Largest singular value.
pub fn spectral_norm(m: &ComplexMatrix) -> f64 {
    svd(m).singular_values.first().copied().unwrap_or(0.0)
}

/// Euclidean projection onto `{S ⪰ 0, Tr S ≤ budget}`.
pub fn project_power_set(m: &HermitianMatrix, budget: f64) -> HermitianMatrix {
    let (values, vectors) = m.eigh();
    let clamped: Vec<f64> = values.iter().map(|l| l.max(0.0)).collect();
    let total: f64 = clamped.iter().sum();
    let projected = if total <= budget {
        clamped
    } else {
        // shift tau solves sum_i max(l_i - tau, 0) = budget
        let mut sorted = values.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let mut tau = 0.0;
        let mut acc = 0.0;
        for (k, l) in sorted.iter().enumerate() {
            acc += l;
            let candidate = (acc - budget) / (k as f64 + 1.0);
            if k + 1 == sorted.len() || sorted[k + 1] <= candidate {
                tau = candidate;
                break;
            }
        }
        values.iter().map(|l| (l - tau).max(0.0)).collect()
    };
    congruence(&vectors, &HermitianMatrix::from_real_diagonal(&projected))
}

/// Orthonormal basis of the Hermitian matrices under `Re Tr[X·Y]`.
pub fn hermitian_basis(dim: usize) -> Vec<HermitianMatrix> {
    let mut basis = Vec::with_capacity(dim * dim);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..dim {
        for j in i..dim {
            if i == j {
                let mut m = ComplexMatrix::zeros(dim, dim);
                m[(i, i)] = Complex64::new(1.0, 0.0);
                basis.push(HermitianMatrix(m));
            } else {
                let mut re = ComplexMatrix::zeros(dim, dim);
                re[(i, j)] = Complex64::new(r, 0.0);
                re[(j, i)] = Complex64::new(r, 0.0);
                basis.push(HermitianMatrix(re));
                let mut im = ComplexMatrix::zeros(dim, dim);
                im[(i, j)] = Complex64::new(0.0, r);
                im[(j, i)] = Complex64::new(0.0, -r);
                basis.push(HermitianMatrix(im));
            }
        }
    }
    basis
}

/// Central-difference gradient of a real function of a Hermitian matrix,
/// expressed so that `f(S + D) ≈ f(S) + Re Tr[∇·D]`.
pub fn fd_gradient<F>(f: F, at: &HermitianMatrix, step: f64) -> Result<HermitianMatrix>
where
    F: Fn(&HermitianMatrix) -> Result<f64>,
{
    let dim = at.dim();
    let mut grad = HermitianMatrix::zeros(dim);
    for dir in hermitian_basis(dim) {
        let plus = f(&at.add(&dir.scale(step)))?;
        let minus = f(&at.sub(&dir.scale(step)))?;
        grad = grad.add(&dir.scale((plus - minus) / (2.0 * step)));
    }
    Ok(grad)
}

#[cfg(test)]
pub(crate) mod testing {
    use super::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    pub fn random_complex<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> ComplexMatrix {
        ComplexMatrix::from_fn(rows, cols, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        })
    }

    pub fn random_pd<R: Rng>(rng: &mut R, dim: usize) -> HermitianMatrix {
        let a = random_complex(rng, dim, dim);
        let g = HermitianMatrix::symmetrize(&a * a.adjoint());
        g.add(&HermitianMatrix::scaled_identity(dim, 0.1))
    }

    pub fn random_hermitian<R: Rng>(rng: &mut R, dim: usize) -> HermitianMatrix {
        HermitianMatrix::symmetrize(random_complex(rng, dim, dim))
    }
}
