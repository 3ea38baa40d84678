//! Work statistics of a driven process read out through a detector with
//! Gaussian measurement error `sigma`.
//!
//! The distribution is a finite Gaussian mixture. Incoherent components carry
//! the two-point-measurement weights `P_n |U_ln|^2` at `E_t^l - E_0^n`.
//! Coherent components carry `rho~_mn U_lm U_ln^*` at `E_t^l - (E_0^m + E_0^n)/2`,
//! where `rho~` is the initial state after the first coupling has damped its
//! energy coherences. Every component has width `sigma`.

use std::f64::consts::PI;

use crate::error::{positive, Error, Result};
use crate::numerics::{
    c64, frobenius_distance, hermitian_eigendecompose, ComplexMatrix, EigenSystem, C64,
};
use crate::protocol::{auto_propagate, transition_amplitudes, DrivingProtocol};
use crate::quadrature::adaptive_simpson;
use crate::state::{boltzmann, dephased_in_eigenbasis, DensityMatrix};

/// Tolerance on the unit row and column norms of the transition amplitudes.
pub const AMPLITUDE_TOL: f64 = 1e-8;

/// Measurement error produced by squeezing strength `r`.
pub fn sigma_from_squeezing(r: f64) -> f64 {
    (-r).exp() / 2f64.sqrt()
}

/// Squeezing strength that produces measurement error `sigma`.
pub fn squeezing_from_sigma(sigma: f64) -> f64 {
    -(2f64.sqrt() * sigma).ln()
}

/// Normal density `N(w | mean, sigma)`.
#[inline]
pub fn normal_pdf(w: f64, mean: f64, sigma: f64) -> f64 {
    let z = (w - mean) / sigma;
    (-0.5 * z * z).exp() / ((2.0 * PI).sqrt() * sigma)
}

/// Everything needed to evaluate the work statistics of one process.
#[derive(Clone, Debug)]
pub struct ProcessSnapshot {
    eig0: EigenSystem,
    eig_t: EigenSystem,
    amplitudes: ComplexMatrix,
    rho0: DensityMatrix,
    sigma: f64,
}

impl ProcessSnapshot {
    pub fn new(
        eig0: EigenSystem,
        eig_t: EigenSystem,
        amplitudes: ComplexMatrix,
        rho0: DensityMatrix,
        sigma: f64,
    ) -> Result<Self> {
        positive("sigma", sigma)?;
        let d = eig0.dim();
        for found in [eig_t.dim(), amplitudes.dim(), rho0.dim()] {
            if found != d {
                return Err(Error::DimensionMismatch { expected: d, found });
            }
        }
        let gram = &amplitudes.adjoint() * &amplitudes;
        for i in 0..d {
            let col: f64 = (0..d).map(|l| amplitudes[(l, i)].norm_sqr()).sum();
            let row: f64 = (0..d).map(|m| amplitudes[(i, m)].norm_sqr()).sum();
            if (col - 1.0).abs() > AMPLITUDE_TOL || (row - 1.0).abs() > AMPLITUDE_TOL {
                return Err(Error::InvalidState(format!(
                    "transition amplitudes are not unitary (row/column {i} norms {row}, {col})"
                )));
            }
        }
        let dev = frobenius_distance(&gram, &ComplexMatrix::identity(d))?;
        if dev > AMPLITUDE_TOL * d as f64 {
            return Err(Error::InvalidState(format!(
                "transition amplitudes are not unitary (|U^dagger U - I| = {dev:e})"
            )));
        }
        Ok(Self {
            eig0,
            eig_t,
            amplitudes,
            rho0,
            sigma,
        })
    }

    /// Builds the snapshot from initial/final Hamiltonians and a propagator.
    pub fn from_propagator(
        h0: &ComplexMatrix,
        h_t: &ComplexMatrix,
        u: &ComplexMatrix,
        rho0: DensityMatrix,
        sigma: f64,
    ) -> Result<Self> {
        let eig0 = hermitian_eigendecompose(h0)?;
        let eig_t = hermitian_eigendecompose(h_t)?;
        let amplitudes = transition_amplitudes(u, &eig0, &eig_t)?;
        Self::new(eig0, eig_t, amplitudes, rho0, sigma)
    }

    /// Propagates `protocol` to tolerance `tol` and builds the snapshot.
    pub fn from_protocol(
        protocol: &dyn DrivingProtocol,
        rho0: DensityMatrix,
        sigma: f64,
        tol: f64,
    ) -> Result<Self> {
        let h0 = protocol.hamiltonian_at(0.0)?;
        let h_t = protocol.hamiltonian_at(protocol.duration())?;
        let u = auto_propagate(protocol, tol)?.unitary;
        Self::from_propagator(&h0, &h_t, &u, rho0, sigma)
    }

    /// Same process, different measurement error.
    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        positive("sigma", sigma)?;
        Ok(Self {
            sigma,
            ..self.clone()
        })
    }

    /// Same process, different initial state.
    pub fn with_initial_state(&self, rho0: DensityMatrix) -> Result<Self> {
        Self::new(
            self.eig0.clone(),
            self.eig_t.clone(),
            self.amplitudes.clone(),
            rho0,
            self.sigma,
        )
    }

    pub fn eig0(&self) -> &EigenSystem {
        &self.eig0
    }

    pub fn eig_t(&self) -> &EigenSystem {
        &self.eig_t
    }

    /// `U_lm = <E_t^l| U |E_0^m>`.
    pub fn amplitudes(&self) -> &ComplexMatrix {
        &self.amplitudes
    }

    pub fn rho0(&self) -> &DensityMatrix {
        &self.rho0
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn dim(&self) -> usize {
        self.eig0.dim()
    }

    /// Squeezing strength `r` with `sigma = exp(-r) / sqrt(2)`.
    pub fn squeezing(&self) -> f64 {
        squeezing_from_sigma(self.sigma)
    }

    /// Initial state after the first detector coupling, in the `eig0` basis.
    pub fn dephased(&self) -> ComplexMatrix {
        dephased_in_eigenbasis(&self.rho0, &self.eig0, self.sigma)
            .expect("snapshot invariants guarantee matching dims and sigma > 0")
    }

    /// Largest `|E_t^l - E_0^m|`.
    pub fn max_work_magnitude(&self) -> f64 {
        let mut worst = 0.0f64;
        for &et in self.eig_t.values() {
            for &e0 in self.eig0.values() {
                worst = worst.max((et - e0).abs());
            }
        }
        worst
    }

    /// Free-energy change `-ln(Z_t / Z_0) / beta` from the two spectra.
    pub fn free_energy_change(&self, beta: f64) -> Result<f64> {
        positive("beta", beta)?;
        let (_, log_z0) = boltzmann(self.eig0.values(), beta)?;
        let (_, log_zt) = boltzmann(self.eig_t.values(), beta)?;
        Ok(-(log_zt - log_z0) / beta)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ComponentKind {
    Incoherent,
    Coherent,
}

/// One Gaussian of the work mixture.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WorkComponent {
    pub weight: C64,
    pub mean: f64,
    pub kind: ComponentKind,
    /// `(l, m, n)`: final level and the pair of initial levels.
    pub levels: (usize, usize, usize),
}

/// Gaussian-mixture work distribution with a shared width.
#[derive(Clone, Debug)]
pub struct WorkDistribution {
    sigma: f64,
    components: Vec<WorkComponent>,
}

impl WorkDistribution {
    pub fn from_components(sigma: f64, components: Vec<WorkComponent>) -> Result<Self> {
        positive("sigma", sigma)?;
        Ok(Self { sigma, components })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn components(&self) -> &[WorkComponent] {
        &self.components
    }

    pub fn of_kind(&self, kind: ComponentKind) -> impl Iterator<Item = &WorkComponent> {
        self.components.iter().filter(move |c| c.kind == kind)
    }

    /// Complex sum of all weights; equals 1 for a valid distribution.
    pub fn total_weight(&self) -> C64 {
        self.components.iter().map(|c| c.weight).sum()
    }

    /// `sum |w|` over coherent components.
    pub fn coherent_weight_magnitude(&self) -> f64 {
        self.of_kind(ComponentKind::Coherent)
            .map(|c| c.weight.norm())
            .sum()
    }

    /// Incoherent weights in construction order.
    pub fn incoherent_weights(&self) -> Vec<f64> {
        self.of_kind(ComponentKind::Incoherent)
            .map(|c| c.weight.re)
            .collect()
    }

    /// Smallest and largest component mean.
    pub fn mean_range(&self) -> (f64, f64) {
        self.components
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| {
                (lo.min(c.mean), hi.max(c.mean))
            })
    }

    /// Mixture value before discarding the imaginary part.
    pub fn density_complex(&self, w: f64) -> C64 {
        self.components
            .iter()
            .map(|c| c.weight * normal_pdf(w, c.mean, self.sigma))
            .sum()
    }

    /// `P(W)`.
    pub fn density(&self, w: f64) -> f64 {
        let z = self.density_complex(w);
        debug_assert!(z.im.abs() <= 1e-9, "imaginary residual {} at W = {w}", z.im);
        z.re
    }

    /// Contribution of one component kind to `P(W)`.
    pub fn density_of(&self, kind: ComponentKind, w: f64) -> f64 {
        self.of_kind(kind)
            .map(|c| c.weight * normal_pdf(w, c.mean, self.sigma))
            .sum::<C64>()
            .re
    }

    /// Integration window `[min mean - 8 sigma, max mean + 8 sigma]`.
    pub fn support(&self) -> (f64, f64) {
        let (lo, hi) = self.mean_range();
        (lo - 8.0 * self.sigma, hi + 8.0 * self.sigma)
    }
}

/// Closed-form work distribution of a snapshot.
pub fn build_work_distribution(snap: &ProcessSnapshot) -> Result<WorkDistribution> {
    let rho = snap.dephased();
    let u = snap.amplitudes();
    let e0 = snap.eig0().values();
    let et = snap.eig_t().values();
    let d = snap.dim();

    let mut components = Vec::with_capacity(d * d * d);
    for l in 0..d {
        for n in 0..d {
            components.push(WorkComponent {
                weight: c64(rho[(n, n)].re * u[(l, n)].norm_sqr(), 0.0),
                mean: et[l] - e0[n],
                kind: ComponentKind::Incoherent,
                levels: (l, n, n),
            });
        }
    }
    let mut mismatch = 0.0f64;
    for l in 0..d {
        for m in 0..d {
            for n in 0..d {
                if m == n {
                    continue;
                }
                let weight = rho[(m, n)] * u[(l, m)] * u[(l, n)].conj();
                let partner = rho[(n, m)] * u[(l, n)] * u[(l, m)].conj();
                mismatch = mismatch.max((weight - partner.conj()).norm());
                components.push(WorkComponent {
                    weight,
                    mean: et[l] - 0.5 * (e0[m] + e0[n]),
                    kind: ComponentKind::Coherent,
                    levels: (l, m, n),
                });
            }
        }
    }
    if mismatch > 1e-12 {
        return Err(Error::UnpairedCoherence { mismatch });
    }
    WorkDistribution::from_components(snap.sigma(), components)
}

/// Density of `dist` at `w`.
pub fn density(dist: &WorkDistribution, w: f64) -> f64 {
    dist.density(w)
}

/// Atom of the two-point-measurement distribution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TpmAtom {
    pub probability: f64,
    pub work: f64,
}

/// Work values closer than this are merged into one atom.
pub const TPM_MERGE_TOL: f64 = 1e-12;

/// Two-point-measurement distribution: the `sigma -> 0` limit.
pub fn tpm_distribution(snap: &ProcessSnapshot) -> Vec<TpmAtom> {
    let rho = snap
        .rho0()
        .in_eigenbasis(snap.eig0())
        .expect("dims checked");
    let u = snap.amplitudes();
    let e0 = snap.eig0().values();
    let et = snap.eig_t().values();
    let d = snap.dim();
    let mut atoms: Vec<TpmAtom> = Vec::with_capacity(d * d);
    for l in 0..d {
        for n in 0..d {
            atoms.push(TpmAtom {
                probability: rho[(n, n)].re * u[(l, n)].norm_sqr(),
                work: et[l] - e0[n],
            });
        }
    }
    atoms.sort_by(|a, b| a.work.total_cmp(&b.work));
    let mut merged: Vec<TpmAtom> = Vec::with_capacity(atoms.len());
    for atom in atoms {
        match merged.last_mut() {
            Some(last) if (atom.work - last.work).abs() <= TPM_MERGE_TOL => {
                last.probability += atom.probability;
            }
            _ => merged.push(atom),
        }
    }
    merged
}

/// Heisenberg-picture operators of a snapshot, expressed in the `eig0` basis.
#[derive(Clone, Debug)]
pub struct HeisenbergPieces {
    initial_energies: Vec<f64>,
    final_hamiltonian: ComplexMatrix,
    final_spectrum: EigenSystem,
    dephased: ComplexMatrix,
    sigma: f64,
}

impl HeisenbergPieces {
    pub fn new(snap: &ProcessSnapshot) -> Result<Self> {
        let u = snap.amplitudes();
        let diag_t = ComplexMatrix::from_real_diagonal(snap.eig_t().values());
        let final_hamiltonian = (&(&u.adjoint() * &diag_t) * u).hermitian_part();
        let final_spectrum = hermitian_eigendecompose(&final_hamiltonian)?;
        Ok(Self {
            initial_energies: snap.eig0().values().to_vec(),
            final_hamiltonian,
            final_spectrum,
            dephased: snap.dephased(),
            sigma: snap.sigma(),
        })
    }

    /// `U^dagger H(t') U` in the `eig0` basis.
    pub fn final_hamiltonian(&self) -> &ComplexMatrix {
        &self.final_hamiltonian
    }

    /// `chi(kappa) = exp(-kappa^2 sigma^2 / 2) Tr[e^{i kappa H_t} e^{-i kappa H_0 / 2} rho~ e^{-i kappa H_0 / 2}]`
    /// for complex `kappa`.
    pub fn characteristic(&self, kappa: C64) -> C64 {
        let i = c64(0.0, 1.0);
        let forward = self
            .final_spectrum
            .apply_function(|e| (i * kappa * e).exp());
        let half: Vec<C64> = self
            .initial_energies
            .iter()
            .map(|&e| (-i * kappa * e * 0.5).exp())
            .collect();
        let d = half.len();
        let mut sandwiched = self.dephased.clone();
        for r in 0..d {
            for c in 0..d {
                sandwiched[(r, c)] *= half[r] * half[c];
            }
        }
        let trace = (&forward * &sandwiched).trace();
        let s = self.sigma;
        (-kappa * kappa * s * s * 0.5).exp() * trace
    }
}

/// Characteristic function `chi(kappa) = <exp(i kappa W)>`.
pub fn characteristic_function(snap: &ProcessSnapshot, kappa: C64) -> Result<C64> {
    Ok(HeisenbergPieces::new(snap)?.characteristic(kappa))
}

/// First two moments of work from the trace formulas.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WorkMoments {
    pub mean: f64,
    pub second_moment: f64,
    pub variance: f64,
    /// Variance of the internal-energy change, `variance - sigma^2`.
    pub energy_change_variance: f64,
}

/// `<W> = Tr[H_t rho~(t')] - Tr[H_0 rho~(0)]` and
/// `<W^2> = Tr[(H_t^H - H_0^H)^2 rho~(0)] + sigma^2`.
pub fn analytic_moments(snap: &ProcessSnapshot) -> Result<WorkMoments> {
    let rho = snap.dephased();
    let u = snap.amplitudes();
    let e0 = snap.eig0().values();
    let et = snap.eig_t().values();
    let d = snap.dim();

    let evolved = u.conjugate(&rho);
    let final_energy: f64 = (0..d).map(|l| et[l] * evolved[(l, l)].re).sum();
    let initial_energy: f64 = (0..d).map(|n| e0[n] * rho[(n, n)].re).sum();
    let mean = final_energy - initial_energy;

    let diag_t = ComplexMatrix::from_real_diagonal(et);
    let heis_t = &(&u.adjoint() * &diag_t) * u;
    let delta = &heis_t - &ComplexMatrix::from_real_diagonal(e0);
    let second_moment = (&(&delta * &delta) * &rho).trace().re + snap.sigma() * snap.sigma();
    let variance = second_moment - mean * mean;
    Ok(WorkMoments {
        mean,
        second_moment,
        variance,
        energy_change_variance: variance - snap.sigma() * snap.sigma(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JarzynskiReport {
    /// `<exp(-beta W)>`, evaluated as `chi(i beta)`.
    pub exponential_average: f64,
    /// `exp(-beta dF) exp(beta^2 sigma^2 / 2)`.
    pub prediction: f64,
    pub delta_f: f64,
    /// `exponential_average / prediction - 1`.
    pub residual: f64,
}

/// Largest deviation of `rho0` from the Gibbs state at `beta` accepted by
/// [`jarzynski_residual`].
pub const THERMAL_TOL: f64 = 1e-10;

/// Checks `<exp(-beta W)> = exp(-beta dF) exp(beta^2 sigma^2 / 2)` for a
/// thermal initial state.
pub fn jarzynski_residual(snap: &ProcessSnapshot, beta: f64) -> Result<JarzynskiReport> {
    positive("beta", beta)?;
    let (populations, _) = boltzmann(snap.eig0().values(), beta)?;
    let rho = snap.rho0().in_eigenbasis(snap.eig0())?;
    let thermal = ComplexMatrix::from_real_diagonal(&populations);
    let deviation = (0..snap.dim())
        .flat_map(|i| (0..snap.dim()).map(move |j| (i, j)))
        .map(|(i, j)| (rho[(i, j)] - thermal[(i, j)]).norm())
        .fold(0.0, f64::max);
    if deviation > THERMAL_TOL {
        return Err(Error::NotThermal { deviation });
    }
    let delta_f = snap.free_energy_change(beta)?;
    let exponential_average = characteristic_function(snap, c64(0.0, beta))?.re;
    let s = snap.sigma();
    let prediction = (-beta * delta_f + 0.5 * beta * beta * s * s).exp();
    Ok(JarzynskiReport {
        exponential_average,
        prediction,
        delta_f,
        residual: exponential_average / prediction - 1.0,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FdtReport {
    pub mean_work: f64,
    pub irreversible_work: f64,
    /// `beta * energy_change_variance / 2`.
    pub half_beta_energy_variance: f64,
    /// `irreversible_work - half_beta_energy_variance`.
    pub residual: f64,
}

/// Residual of `<W> - dF = beta * var(dH) / 2`.
pub fn fdt_residual(snap: &ProcessSnapshot, beta: f64, delta_f: f64) -> Result<FdtReport> {
    let m = analytic_moments(snap)?;
    let irreversible_work = m.mean - delta_f;
    let half_beta_energy_variance = 0.5 * beta * m.energy_change_variance;
    Ok(FdtReport {
        mean_work: m.mean,
        irreversible_work,
        half_beta_energy_variance,
        residual: irreversible_work - half_beta_energy_variance,
    })
}

/// Quadrature tolerance for moments of the density.
pub const QUADRATURE_TOL: f64 = 1e-10;

/// `int W^k P(W) dW` by adaptive Simpson over [`WorkDistribution::support`].
pub fn quadrature_moment(dist: &WorkDistribution, k: i32) -> f64 {
    let (a, b) = dist.support();
    adaptive_simpson(|w| w.powi(k) * dist.density(w), a, b, QUADRATURE_TOL)
}

/// `int (W - center)^k P(W) dW`.
pub fn quadrature_central_moment(dist: &WorkDistribution, center: f64, k: i32) -> f64 {
    let (a, b) = dist.support();
    adaptive_simpson(
        |w| (w - center).powi(k) * dist.density(w),
        a,
        b,
        QUADRATURE_TOL,
    )
}

/// Excess kurtosis of `P(W)` from quadrature.
pub fn excess_kurtosis(dist: &WorkDistribution) -> f64 {
    let mean = quadrature_moment(dist, 1);
    let m2 = quadrature_central_moment(dist, mean, 2);
    let m4 = quadrature_central_moment(dist, mean, 4);
    m4 / (m2 * m2) - 3.0
}

/// `<W>` and `<W^2>` from central differences of `chi` at zero, with one
/// Richardson extrapolation. Step is `1e-4 / sigma`.
pub fn characteristic_moments(pieces: &HeisenbergPieces) -> (f64, f64) {
    let h = 1e-4 / pieces.sigma;
    let chi = |k: f64| pieces.characteristic(c64(k, 0.0));
    let c0 = chi(0.0);
    let first = |h: f64| (chi(h) - chi(-h)) / (2.0 * h);
    let second = |h: f64| (chi(h) - c0 * 2.0 + chi(-h)) / (h * h);
    let d1 = (first(h) * 4.0 - first(2.0 * h)) / 3.0;
    let d2 = (second(h) * 4.0 - second(2.0 * h)) / 3.0;
    // <W> = -i chi'(0), <W^2> = -chi''(0)
    ((c64(0.0, -1.0) * d1).re, (-d2).re)
}
