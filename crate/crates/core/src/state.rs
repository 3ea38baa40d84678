//! System states: Gibbs, coherent Gibbs, and the state left behind by the
//! first detector coupling.

use nalgebra::DVector;

use crate::error::{non_negative, positive, Error, Result};
use crate::numerics::{c64, hermitian_eigendecompose, ComplexMatrix, EigenSystem, C64};

/// Tolerance on Hermiticity, unit trace and positivity of a density matrix.
pub const STATE_TOL: f64 = 1e-10;

/// A validated density matrix, stored in the computational basis.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    basis: Option<String>,
}

impl DensityMatrix {
    /// Checks Hermiticity, unit trace and positivity (all to [`STATE_TOL`]).
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let asym = matrix.hermitian_asymmetry();
        if asym.is_nan() || asym > STATE_TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian (asymmetry {asym:e})"
            )));
        }
        let tr = matrix.trace();
        let off = (tr - c64(1.0, 0.0)).norm();
        if off.is_nan() || off > STATE_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let eig = hermitian_eigendecompose(&matrix)?;
        let min = eig.values()[0];
        if min < -STATE_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self {
            matrix,
            basis: None,
        })
    }

    /// `|psi><psi|` for a state vector, normalizing it first.
    pub fn from_pure(psi: &DVector<C64>) -> Result<Self> {
        let norm = psi.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::InvalidState("state vector has zero norm".into()));
        }
        let psi = psi.unscale(norm);
        Ok(Self {
            matrix: ComplexMatrix::outer(&psi),
            basis: None,
        })
    }

    /// Attaches a label naming the eigenbasis this state was built in.
    pub fn with_basis_tag(mut self, tag: impl Into<String>) -> Self {
        self.basis = Some(tag.into());
        self
    }

    pub fn basis_tag(&self) -> Option<&str> {
        self.basis.as_deref()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Matrix elements `<E_m| rho |E_n>` in the given eigenbasis.
    pub fn in_eigenbasis(&self, eig: &EigenSystem) -> Result<ComplexMatrix> {
        if eig.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: eig.dim(),
            });
        }
        Ok(eig.to_eigenbasis(&self.matrix))
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    pub fn expectation(&self, op: &ComplexMatrix) -> C64 {
        (&self.matrix * op).trace()
    }

    /// Uhlmann fidelity `(Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2`.
    pub fn fidelity(&self, other: &DensityMatrix) -> Result<f64> {
        if other.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        // eigenvalues at rounding level would add spurious square roots
        let floor = |values: &[f64]| 1e-14 * values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let own = hermitian_eigendecompose(&self.matrix)?;
        let cut = floor(own.values());
        let sqrt_self = own.apply_function(|e| c64(if e > cut { e.sqrt() } else { 0.0 }, 0.0));
        let inner = (&(&sqrt_self * &other.matrix) * &sqrt_self).hermitian_part();
        let eig = hermitian_eigendecompose(&inner)?;
        let cut = floor(eig.values());
        let root_sum: f64 = eig
            .values()
            .iter()
            .filter(|&&v| v > cut)
            .map(|v| v.sqrt())
            .sum();
        Ok(root_sum * root_sum)
    }
}

/// Gibbs state together with its partition function.
#[derive(Clone, Debug)]
pub struct GibbsState {
    pub state: DensityMatrix,
    /// `ln Z`, kept in log form so large `beta` does not overflow.
    pub log_partition: f64,
    /// Boltzmann weights in ascending-energy order.
    pub populations: Vec<f64>,
}

impl GibbsState {
    pub fn partition_function(&self) -> f64 {
        self.log_partition.exp()
    }
}

/// Boltzmann populations and `ln Z` for a spectrum.
pub fn boltzmann(energies: &[f64], beta: f64) -> Result<(Vec<f64>, f64)> {
    non_negative("beta", beta)?;
    let e_min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let weights: Vec<f64> = energies
        .iter()
        .map(|e| (-beta * (e - e_min)).exp())
        .collect();
    let sum: f64 = weights.iter().sum();
    let log_z = -beta * e_min + sum.ln();
    Ok((weights.iter().map(|w| w / sum).collect(), log_z))
}

/// `exp(-beta H) / Z`.
pub fn gibbs_state(h: &ComplexMatrix, beta: f64) -> Result<GibbsState> {
    non_negative("beta", beta)?;
    let eig = hermitian_eigendecompose(h)?;
    gibbs_state_in(&eig, beta)
}

/// Gibbs state built from an already computed eigensystem.
pub fn gibbs_state_in(eig: &EigenSystem, beta: f64) -> Result<GibbsState> {
    let (populations, log_partition) = boltzmann(eig.values(), beta)?;
    let rho = eig.from_eigenbasis(&ComplexMatrix::from_real_diagonal(&populations));
    Ok(GibbsState {
        state: DensityMatrix::new(rho.hermitian_part())?.with_basis_tag("gibbs"),
        log_partition,
        populations,
    })
}

/// Amplitudes `sqrt(exp(-beta E_n) / Z)` of the coherent Gibbs state, as a
/// computational-basis vector.
pub fn coherent_gibbs_vector(eig: &EigenSystem, beta: f64) -> Result<DVector<C64>> {
    let (populations, _) = boltzmann(eig.values(), beta)?;
    let mut psi = DVector::<C64>::zeros(eig.dim());
    for (n, p) in populations.iter().enumerate() {
        psi += eig.vector(n) * c64(p.sqrt(), 0.0);
    }
    Ok(psi)
}

/// Pure state `sum_n sqrt(exp(-beta E_n) / Z) |E_n>`.
///
/// The amplitudes are real and positive relative to the eigenvector phases
/// chosen by [`hermitian_eigendecompose`].
pub fn coherent_gibbs_state(h: &ComplexMatrix, beta: f64) -> Result<DensityMatrix> {
    non_negative("beta", beta)?;
    let eig = hermitian_eigendecompose(h)?;
    coherent_gibbs_state_in(&eig, beta)
}

/// Coherent Gibbs state relative to the phases of a supplied eigenbasis.
pub fn coherent_gibbs_state_in(eig: &EigenSystem, beta: f64) -> Result<DensityMatrix> {
    let psi = coherent_gibbs_vector(eig, beta)?;
    Ok(DensityMatrix::from_pure(&psi)?.with_basis_tag("coherent-gibbs"))
}

/// Gaussian factor `exp(-(E_m - E_n)^2 / (4 sigma^2))` applied to each
/// off-diagonal element in the `eig0` basis.
pub fn dephasing_factor(e_m: f64, e_n: f64, sigma: f64) -> f64 {
    let d = e_m - e_n;
    (-d * d / (4.0 * sigma * sigma)).exp()
}

/// State of the system right after the first detector coupling is removed:
/// coherences between initial energy levels are damped by a Gaussian in
/// their energy gap.
pub fn decohere_for_measurement(
    rho: &DensityMatrix,
    eig0: &EigenSystem,
    sigma: f64,
) -> Result<DensityMatrix> {
    positive("sigma", sigma)?;
    let dephased = dephased_in_eigenbasis(rho, eig0, sigma)?;
    let back = eig0.from_eigenbasis(&dephased).hermitian_part();
    let mut out = DensityMatrix::new(back)?;
    out.basis = rho.basis.clone();
    Ok(out)
}

/// Same as [`decohere_for_measurement`] but returns the matrix in the
/// `eig0` basis without re-validating it.
pub(crate) fn dephased_in_eigenbasis(
    rho: &DensityMatrix,
    eig0: &EigenSystem,
    sigma: f64,
) -> Result<ComplexMatrix> {
    positive("sigma", sigma)?;
    let mut m = rho.in_eigenbasis(eig0)?;
    let e = eig0.values();
    for i in 0..m.dim() {
        for j in 0..m.dim() {
            if i != j {
                m[(i, j)] *= dephasing_factor(e[i], e[j], sigma);
            }
        }
    }
    Ok(m)
}
