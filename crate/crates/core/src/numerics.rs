//! Dense complex linear algebra used by every other module.
//!
//! Matrices are square and stored as [`ComplexMatrix`]. Hermitian problems
//! go through [`hermitian_eigendecompose`], and every operator function
//! (exponentials included) is evaluated in the eigenbasis, so the unitarity
//! of `exp(-iHt)` holds by construction.

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
pub use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Maximum entry of `|H - H^dagger|` accepted as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Shorthand for a complex number with the given real and imaginary parts.
#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Square dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    inner: DMatrix<C64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be at least 1");
        Self {
            inner: DMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be at least 1");
        Self {
            inner: DMatrix::identity(dim, dim),
        }
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        assert!(dim >= 1, "matrix dimension must be at least 1");
        Self {
            inner: DMatrix::from_fn(dim, dim, f),
        }
    }

    /// Builds a matrix from entries listed row by row.
    pub fn from_row_major(entries: &[C64]) -> Result<Self> {
        let len = entries.len();
        let dim = (len as f64).sqrt().round() as usize;
        if dim == 0 || dim * dim != len {
            return Err(Error::NotSquare { len });
        }
        Ok(Self {
            inner: DMatrix::from_row_slice(dim, dim, entries),
        })
    }

    pub fn from_dmatrix(inner: DMatrix<C64>) -> Result<Self> {
        if inner.nrows() != inner.ncols() || inner.nrows() == 0 {
            return Err(Error::NotSquare {
                len: inner.nrows() * inner.ncols(),
            });
        }
        Ok(Self { inner })
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        Self::from_fn(diag.len(), |i, j| {
            if i == j {
                c64(diag[i], 0.0)
            } else {
                C64::default()
            }
        })
    }

    /// Rank-one projector `|v><v|`.
    pub fn outer(v: &DVector<C64>) -> Self {
        Self {
            inner: v * v.adjoint(),
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    pub fn as_dmatrix(&self) -> &DMatrix<C64> {
        &self.inner
    }

    pub fn into_dmatrix(self) -> DMatrix<C64> {
        self.inner
    }

    pub fn adjoint(&self) -> Self {
        Self {
            inner: self.inner.adjoint(),
        }
    }

    pub fn trace(&self) -> C64 {
        self.inner.trace()
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            inner: &self.inner * factor,
        }
    }

    /// Kronecker product `self (x) other`; `self` indexes the slow (outer) factor.
    pub fn kron(&self, other: &ComplexMatrix) -> Self {
        Self {
            inner: self.inner.kronecker(&other.inner),
        }
    }

    pub fn mul_vector(&self, v: &DVector<C64>) -> DVector<C64> {
        &self.inner * v
    }

    /// `self * other * self^dagger`.
    pub fn conjugate(&self, other: &ComplexMatrix) -> Self {
        Self {
            inner: &self.inner * &other.inner * self.inner.adjoint(),
        }
    }

    /// Largest `|A_ij - conj(A_ji)|`.
    pub fn hermitian_asymmetry(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                let d = (self.inner[(i, j)] - self.inner[(j, i)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.inner.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `(A + A^dagger) / 2`.
    pub fn hermitian_part(&self) -> Self {
        Self {
            inner: (&self.inner + self.inner.adjoint()) * c64(0.5, 0.0),
        }
    }

    fn require_hermitian(&self) -> Result<()> {
        let asymmetry = self.hermitian_asymmetry();
        if asymmetry > HERMITIAN_TOL || !asymmetry.is_finite() {
            return Err(Error::NotHermitian { asymmetry });
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.inner[idx]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, idx: (usize, usize)) -> &mut C64 {
        &mut self.inner[idx]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix {
            inner: &self.inner * &rhs.inner,
        }
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix {
            inner: &self.inner + &rhs.inner,
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix {
            inner: &self.inner - &rhs.inner,
        }
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        ComplexMatrix {
            inner: -&self.inner,
        }
    }
}

/// Spectrum of a Hermitian matrix: ascending eigenvalues and orthonormal
/// eigenvectors stored as the columns of `vectors`.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenSystem {
    values: Vec<f64>,
    vectors: ComplexMatrix,
}

impl EigenSystem {
    /// Assembles an eigensystem from known eigenpairs (columns of `vectors`).
    pub fn from_parts(values: Vec<f64>, vectors: ComplexMatrix) -> Result<Self> {
        if values.len() != vectors.dim() {
            return Err(Error::DimensionMismatch {
                expected: vectors.dim(),
                found: values.len(),
            });
        }
        if values.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidState(
                "eigenvalues must be sorted ascending".into(),
            ));
        }
        let gram = &vectors.adjoint() * &vectors;
        let dev = frobenius_distance(&gram, &ComplexMatrix::identity(vectors.dim()))?;
        if dev > 1e-10 {
            return Err(Error::InvalidState(format!(
                "eigenvectors are not orthonormal (|V^dagger V - I| = {dev:e})"
            )));
        }
        Ok(Self { values, vectors })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vectors(&self) -> &ComplexMatrix {
        &self.vectors
    }

    pub fn vector(&self, k: usize) -> DVector<C64> {
        self.vectors.as_dmatrix().column(k).into_owned()
    }

    /// `V^dagger A V`: expresses `a` in this eigenbasis.
    pub fn to_eigenbasis(&self, a: &ComplexMatrix) -> ComplexMatrix {
        &(&self.vectors.adjoint() * a) * &self.vectors
    }

    /// `V A V^dagger`: maps a matrix given in this eigenbasis back.
    pub fn from_eigenbasis(&self, a: &ComplexMatrix) -> ComplexMatrix {
        self.vectors.conjugate(a)
    }

    /// `V f(Lambda) V^dagger`.
    pub fn apply_function(&self, f: impl Fn(f64) -> C64) -> ComplexMatrix {
        let v = self.vectors.as_dmatrix();
        let mut scaled = v.clone();
        for (k, &e) in self.values.iter().enumerate() {
            let fe = f(e);
            for z in scaled.column_mut(k).iter_mut() {
                *z *= fe;
            }
        }
        ComplexMatrix {
            inner: scaled * v.adjoint(),
        }
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.apply_function(|e| c64(e, 0.0))
    }
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Eigenvalues come back ascending. Each eigenvector's phase is fixed so
/// that its largest-modulus component (first one, on ties) is real and
/// positive, which makes the output deterministic for nondegenerate spectra.
pub fn hermitian_eigendecompose(h: &ComplexMatrix) -> Result<EigenSystem> {
    h.require_hermitian()?;
    let n = h.dim();
    let sym = h.hermitian_part().into_dmatrix();
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 0).ok_or(Error::NoConvergence)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = DMatrix::<C64>::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    orthonormalize_columns(&mut vectors);
    for k in 0..n {
        fix_phase(&mut vectors, k);
    }

    Ok(EigenSystem {
        values,
        vectors: ComplexMatrix { inner: vectors },
    })
}

/// Modified Gram-Schmidt over the columns, in place.
fn orthonormalize_columns(v: &mut DMatrix<C64>) {
    let n = v.ncols();
    for k in 0..n {
        for j in 0..k {
            let proj = v.column(j).dotc(&v.column(k));
            let qj = v.column(j).into_owned();
            v.column_mut(k).axpy(-proj, &qj, C64::new(1.0, 0.0));
        }
        let norm = v.column(k).norm();
        v.column_mut(k).unscale_mut(norm);
    }
}

fn fix_phase(v: &mut DMatrix<C64>, k: usize) {
    let col = v.column(k);
    let max = col.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = col
        .iter()
        .find(|z| z.norm() >= max * (1.0 - 1e-9))
        .copied()
        .unwrap_or(C64::new(1.0, 0.0));
    let phase = pivot.conj() / pivot.norm();
    for z in v.column_mut(k).iter_mut() {
        *z *= phase;
    }
}

/// `f(H)` for Hermitian `H` and any scalar function `f`, via the eigenbasis.
pub fn hermitian_function(h: &ComplexMatrix, f: impl Fn(f64) -> C64) -> Result<ComplexMatrix> {
    Ok(hermitian_eigendecompose(h)?.apply_function(f))
}

/// `exp(-i H t)`.
pub fn unitary_from_hamiltonian(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    if !t.is_finite() {
        return Err(Error::InvalidParameter {
            name: "t",
            value: t,
            reason: "duration must be finite",
        });
    }
    hermitian_function(h, |e| C64::from_polar(1.0, -e * t))
}

/// Frobenius norm of `a - b`.
pub fn frobenius_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(a.inner
        .iter()
        .zip(b.inner.iter())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sigma_x() -> ComplexMatrix {
        ComplexMatrix::from_row_major(&[c64(0., 0.), c64(1., 0.), c64(1., 0.), c64(0., 0.)])
            .unwrap()
    }

    fn sigma_y() -> ComplexMatrix {
        ComplexMatrix::from_row_major(&[c64(0., 0.), c64(0., -1.), c64(0., 1.), c64(0., 0.)])
            .unwrap()
    }

    #[test]
    fn sigma_x_spectrum() {
        let eig = hermitian_eigendecompose(&sigma_x()).unwrap();
        assert!((eig.values()[0] + 1.0).abs() < 1e-14);
        assert!((eig.values()[1] - 1.0).abs() < 1e-14);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // |-> = (|0> - |1>)/sqrt2 and |+> = (|0> + |1>)/sqrt2 under the phase convention
        let minus = eig.vector(0);
        let plus = eig.vector(1);
        assert!((minus[0] - c64(s, 0.)).norm() < 1e-14);
        assert!((minus[1] - c64(-s, 0.)).norm() < 1e-14);
        assert!((plus[0] - c64(s, 0.)).norm() < 1e-14);
        assert!((plus[1] - c64(s, 0.)).norm() < 1e-14);
    }

    #[test]
    fn zero_matrix_has_zero_spectrum() {
        let eig = hermitian_eigendecompose(&ComplexMatrix::zeros(3)).unwrap();
        assert_eq!(eig.values(), &[0.0, 0.0, 0.0]);
        let gram = &eig.vectors().adjoint() * eig.vectors();
        assert!(frobenius_distance(&gram, &ComplexMatrix::identity(3)).unwrap() < 1e-12);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m =
            ComplexMatrix::from_row_major(&[c64(0., 0.), c64(1., 0.), c64(0.5, 0.), c64(0., 0.)])
                .unwrap();
        match hermitian_eigendecompose(&m) {
            Err(Error::NotHermitian { asymmetry }) => assert!((asymmetry - 0.5).abs() < 1e-15),
            other => panic!("expected NotHermitian, got {other:?}"),
        }
        assert!(unitary_from_hamiltonian(&m, 1.0).is_err());
    }

    #[test]
    fn exponential_of_zero_is_identity() {
        let u = unitary_from_hamiltonian(&ComplexMatrix::zeros(4), 3.7).unwrap();
        assert!(frobenius_distance(&u, &ComplexMatrix::identity(4)).unwrap() < 1e-15);
    }

    #[test]
    fn exp_minus_i_pi_sigma_x() {
        let u = unitary_from_hamiltonian(&sigma_x(), std::f64::consts::PI).unwrap();
        let minus_i = -&ComplexMatrix::identity(2);
        assert!(frobenius_distance(&u, &minus_i).unwrap() < 1e-14);
    }

    #[test]
    fn short_time_matches_taylor_series() {
        let h = sigma_x();
        let t = 1e-4;
        let u = unitary_from_hamiltonian(&h, t).unwrap();
        let id = ComplexMatrix::identity(2);
        let first = h.scale(c64(0., -t));
        let second = (&h * &h).scale(c64(-t * t / 2.0, 0.0));
        let taylor = &(&id + &first) + &second;
        assert!(frobenius_distance(&u, &taylor).unwrap() < 1e-10);
    }

    #[test]
    fn frobenius_examples() {
        let id = ComplexMatrix::identity(2);
        assert_eq!(frobenius_distance(&id, &id).unwrap(), 0.0);
        let d = frobenius_distance(&id, &-&id).unwrap();
        assert!((d - 2.0 * 2f64.sqrt()).abs() < 1e-15);
        let d = frobenius_distance(&sigma_x(), &sigma_y()).unwrap();
        assert!((d - 2.0).abs() < 1e-15);
        assert!(matches!(
            frobenius_distance(&id, &ComplexMatrix::identity(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn from_row_major_requires_square_length() {
        assert!(matches!(
            ComplexMatrix::from_row_major(&[c64(1., 0.); 3]),
            Err(Error::NotSquare { len: 3 })
        ));
        assert!(ComplexMatrix::from_row_major(&[]).is_err());
    }

    #[test]
    fn from_parts_validates() {
        let id = ComplexMatrix::identity(2);
        assert!(EigenSystem::from_parts(vec![1.0, 0.0], id.clone()).is_err());
        assert!(EigenSystem::from_parts(vec![0.0], id.clone()).is_err());
        assert!(EigenSystem::from_parts(vec![0.0, 1.0], id.scale(c64(2., 0.))).is_err());
        assert!(EigenSystem::from_parts(vec![0.0, 1.0], id).is_ok());
    }
}
