//! Two-level system driven by a rotating field with a linear frequency ramp:
//! `H(t) = nu(t) (sigma_x cos(pi t / 2t') + sigma_y sin(pi t / 2t'))`,
//! `nu(t) = nu_0 (1 - t/t') + nu_t t/t'`.
//!
//! Basis order is `(|0>, |1>)` with `sigma_y = [[0, i], [-i, 0]]`. The
//! initial eigenbasis is `|+-> = (+-1, 1)/sqrt(2)` and the final one is
//! `|+-i> = (+-i, 1)/sqrt(2)`; index 0 is the lower level in both.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::str::FromStr;

use crate::error::{non_negative, positive, Error, Result};
use crate::numerics::{c64, ComplexMatrix, EigenSystem, C64};
use crate::protocol::{auto_propagate, DrivingProtocol};
use crate::state::{coherent_gibbs_state_in, dephasing_factor, gibbs_state_in, DensityMatrix};
use crate::work::{
    analytic_moments, build_work_distribution, fdt_residual, jarzynski_residual, normal_pdf,
    ComponentKind, ProcessSnapshot, WorkComponent, WorkDistribution,
};

/// Propagation tolerance used by the duration sweep.
pub const SWEEP_TOL: f64 = 1e-9;
/// Largest deviation of the fixed bases from the actual eigenvectors.
pub const BASIS_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinParams {
    pub nu0: f64,
    pub nu_t: f64,
    pub t_prime: f64,
    pub beta: f64,
    pub sigma: f64,
}

impl SpinParams {
    pub fn new(nu0: f64, nu_t: f64, t_prime: f64, beta: f64, sigma: f64) -> Result<Self> {
        let p = Self {
            nu0,
            nu_t,
            t_prime,
            beta,
            sigma,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        positive("nu0", self.nu0)?;
        positive("nu_t", self.nu_t)?;
        positive("t_prime", self.t_prime)?;
        non_negative("beta", self.beta)?;
        positive("sigma", self.sigma)?;
        Ok(())
    }

    pub fn with_t_prime(&self, t_prime: f64) -> Result<Self> {
        Self::new(self.nu0, self.nu_t, t_prime, self.beta, self.sigma)
    }

    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        Self::new(self.nu0, self.nu_t, self.t_prime, self.beta, sigma)
    }

    /// `Z_0 = exp(-beta nu_0) + exp(beta nu_0)`.
    pub fn partition_initial(&self) -> f64 {
        2.0 * (self.beta * self.nu0).cosh()
    }

    /// `-ln(cosh(beta nu_t) / cosh(beta nu_0)) / beta`.
    pub fn free_energy_change(&self) -> f64 {
        -((self.beta * self.nu_t).cosh() / (self.beta * self.nu0).cosh()).ln() / self.beta
    }
}

/// Initial state of the system.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitialState {
    Thermal,
    CoherentGibbs,
}

impl InitialState {
    pub fn as_str(&self) -> &'static str {
        match self {
            InitialState::Thermal => "thermal",
            InitialState::CoherentGibbs => "coherent-gibbs",
        }
    }
}

impl FromStr for InitialState {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "thermal" => Ok(InitialState::Thermal),
            "coherent-gibbs" => Ok(InitialState::CoherentGibbs),
            other => Err(format!(
                "unknown state '{other}' (expected thermal or coherent-gibbs)"
            )),
        }
    }
}

fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_row_major(&[c64(0., 0.), c64(1., 0.), c64(1., 0.), c64(0., 0.)])
        .expect("4 entries")
}

fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_row_major(&[c64(0., 0.), c64(0., 1.), c64(0., -1.), c64(0., 0.)])
        .expect("4 entries")
}

/// Field amplitude and direction at time `t`.
fn field(t: f64, p: &SpinParams) -> Result<(f64, f64)> {
    if !(0.0..=p.t_prime).contains(&t) {
        return Err(Error::InvalidParameter {
            name: "t",
            value: t,
            reason: "time lies outside [0, t_prime]",
        });
    }
    let s = t / p.t_prime;
    Ok((p.nu0 * (1.0 - s) + p.nu_t * s, 0.5 * PI * s))
}

/// `H(t)` for `0 <= t <= t'`.
pub fn spin_hamiltonian(t: f64, p: &SpinParams) -> Result<ComplexMatrix> {
    let (nu, phi) = field(t, p)?;
    Ok(&pauli_x().scale(c64(nu * phi.cos(), 0.0)) + &pauli_y().scale(c64(nu * phi.sin(), 0.0)))
}

/// The ramp as a [`DrivingProtocol`].
#[derive(Clone, Copy, Debug)]
pub struct SpinProtocol {
    params: SpinParams,
}

impl SpinProtocol {
    pub fn new(params: SpinParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { params })
    }
}

impl DrivingProtocol for SpinProtocol {
    fn duration(&self) -> f64 {
        self.params.t_prime
    }

    fn dim(&self) -> usize {
        2
    }

    fn hamiltonian_at(&self, t: f64) -> Result<ComplexMatrix> {
        spin_hamiltonian(t, &self.params)
    }

    /// `H^2 = nu^2 I`, so `exp(-i H dt) = cos(nu dt) I - i sin(nu dt) H / nu`.
    fn step_unitary(&self, t: f64, dt: f64) -> Result<ComplexMatrix> {
        let (nu, phi) = field(t, &self.params)?;
        let (c, s) = ((nu * dt).cos(), (nu * dt).sin());
        // H/nu = [[0, e^{i phi}], [e^{-i phi}, 0]] with this sigma_y
        let upper = c64(0.0, -s) * c64(phi.cos(), phi.sin());
        let lower = c64(0.0, -s) * c64(phi.cos(), -phi.sin());
        ComplexMatrix::from_row_major(&[c64(c, 0.0), upper, lower, c64(c, 0.0)])
    }
}

/// Eigenbasis of `nu_0 sigma_x`: values `(-nu_0, nu_0)`, vectors `(|->, |+>)`.
pub fn initial_basis(p: &SpinParams) -> EigenSystem {
    let h = FRAC_1_SQRT_2;
    let v = ComplexMatrix::from_row_major(&[c64(-h, 0.), c64(h, 0.), c64(h, 0.), c64(h, 0.)])
        .expect("4 entries");
    EigenSystem::from_parts(vec![-p.nu0, p.nu0], v).expect("orthonormal by construction")
}

/// Eigenbasis of `nu_t sigma_y`: values `(-nu_t, nu_t)`, vectors `(|-i>, |+i>)`.
pub fn final_basis(p: &SpinParams) -> EigenSystem {
    let h = FRAC_1_SQRT_2;
    let v = ComplexMatrix::from_row_major(&[c64(0., -h), c64(0., h), c64(h, 0.), c64(h, 0.)])
        .expect("4 entries");
    EigenSystem::from_parts(vec![-p.nu_t, p.nu_t], v).expect("orthonormal by construction")
}

fn basis_deviation(h: &ComplexMatrix, eig: &EigenSystem) -> f64 {
    let d = eig.dim();
    let expected = ComplexMatrix::from_real_diagonal(eig.values());
    let actual = eig.to_eigenbasis(h);
    (0..d)
        .flat_map(|i| (0..d).map(move |j| (i, j)))
        .map(|(i, j)| (actual[(i, j)] - expected[(i, j)]).norm())
        .fold(0.0, f64::max)
}

/// Transition amplitudes in the fixed bases.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinAmplitudes {
    /// `<+i|U|+>`
    pub up_plus: C64,
    /// `<+i|U|->`
    pub up_minus: C64,
    /// `<-i|U|+>`
    pub down_plus: C64,
    /// `<-i|U|->`
    pub down_minus: C64,
}

impl SpinAmplitudes {
    /// Amplitudes of a computational-basis propagator. Rejects parameters
    /// whose endpoint Hamiltonians are not diagonal in the fixed bases.
    pub fn from_propagator(p: &SpinParams, u: &ComplexMatrix) -> Result<Self> {
        if u.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                found: u.dim(),
            });
        }
        let eig0 = initial_basis(p);
        let eig_t = final_basis(p);
        let deviation = basis_deviation(&spin_hamiltonian(0.0, p)?, &eig0)
            .max(basis_deviation(&spin_hamiltonian(p.t_prime, p)?, &eig_t));
        if deviation > BASIS_TOL {
            return Err(Error::BasisMismatch { deviation });
        }
        let a = &(&eig_t.vectors().adjoint() * u) * eig0.vectors();
        Ok(Self::from_matrix(&a))
    }

    /// From `A_lm = <E_t^l|U|E_0^m>` with index 0 the lower level.
    pub fn from_matrix(a: &ComplexMatrix) -> Self {
        Self {
            up_plus: a[(1, 1)],
            up_minus: a[(1, 0)],
            down_plus: a[(0, 1)],
            down_minus: a[(0, 0)],
        }
    }

    pub fn to_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_row_major(&[
            self.down_minus,
            self.down_plus,
            self.up_minus,
            self.up_plus,
        ])
        .expect("4 entries")
    }

    /// Sudden quench, `U = I`.
    pub fn quench(p: &SpinParams) -> Result<Self> {
        Self::from_propagator(p, &ComplexMatrix::identity(2))
    }

    /// Propagates the ramp to `tol`.
    pub fn propagate(p: &SpinParams, tol: f64) -> Result<Self> {
        let u = auto_propagate(&SpinProtocol::new(*p)?, tol)?.unitary;
        Self::from_propagator(p, &u)
    }

    /// `Re(<+i|U|+> <+i|U|->^*)`, the interference term behind coherent work.
    pub fn interference(&self) -> f64 {
        (self.up_plus * self.up_minus.conj()).re
    }
}

/// Initial state in the computational basis.
pub fn initial_state(p: &SpinParams, kind: InitialState) -> Result<DensityMatrix> {
    let eig0 = initial_basis(p);
    match kind {
        InitialState::Thermal => Ok(gibbs_state_in(&eig0, p.beta)?.state),
        InitialState::CoherentGibbs => coherent_gibbs_state_in(&eig0, p.beta),
    }
}

/// Snapshot of the ramp in the fixed bases.
pub fn spin_snapshot(
    p: &SpinParams,
    amps: &SpinAmplitudes,
    kind: InitialState,
) -> Result<ProcessSnapshot> {
    ProcessSnapshot::new(
        initial_basis(p),
        final_basis(p),
        amps.to_matrix(),
        initial_state(p, kind)?,
        p.sigma,
    )
}

/// Level-resolved parts of the work distribution for the coherent Gibbs state.
#[derive(Clone, Debug)]
pub struct SpinComponents {
    /// Starting from `|+>`.
    pub plus: Vec<WorkComponent>,
    /// Starting from `|->`.
    pub minus: Vec<WorkComponent>,
    /// Interference between `|+>` and `|->`.
    pub coherent: Vec<WorkComponent>,
    pub sigma: f64,
}

impl SpinComponents {
    fn density_of(&self, parts: &[WorkComponent], w: f64) -> f64 {
        parts
            .iter()
            .map(|c| c.weight.re * normal_pdf(w, c.mean, self.sigma))
            .sum()
    }

    pub fn plus_density(&self, w: f64) -> f64 {
        self.density_of(&self.plus, w)
    }

    pub fn minus_density(&self, w: f64) -> f64 {
        self.density_of(&self.minus, w)
    }

    pub fn coherent_density(&self, w: f64) -> f64 {
        self.density_of(&self.coherent, w)
    }

    pub fn incoherent_density(&self, w: f64) -> f64 {
        self.plus_density(w) + self.minus_density(w)
    }

    pub fn total_density(&self, w: f64) -> f64 {
        self.incoherent_density(w) + self.coherent_density(w)
    }

    /// All parts as one mixture.
    pub fn pooled(&self) -> Result<WorkDistribution> {
        let all = self
            .plus
            .iter()
            .chain(&self.minus)
            .chain(&self.coherent)
            .copied()
            .collect();
        WorkDistribution::from_components(self.sigma, all)
    }
}

fn gaussian(
    weight: f64,
    mean: f64,
    kind: ComponentKind,
    levels: (usize, usize, usize),
) -> WorkComponent {
    WorkComponent {
        weight: c64(weight, 0.0),
        mean,
        kind,
        levels,
    }
}

/// Closed-form `P_+`, `P_-` and `P_c` for the coherent Gibbs state.
pub fn analytic_components(p: &SpinParams, amps: &SpinAmplitudes) -> Result<SpinComponents> {
    p.validate()?;
    let z0 = p.partition_initial();
    let wp = (-p.beta * p.nu0).exp() / z0;
    let wm = (p.beta * p.nu0).exp() / z0;
    let plus = vec![
        gaussian(
            wp * amps.up_plus.norm_sqr(),
            p.nu_t - p.nu0,
            ComponentKind::Incoherent,
            (1, 1, 1),
        ),
        gaussian(
            wp * amps.down_plus.norm_sqr(),
            -p.nu_t - p.nu0,
            ComponentKind::Incoherent,
            (0, 1, 1),
        ),
    ];
    let minus = vec![
        gaussian(
            wm * amps.up_minus.norm_sqr(),
            p.nu_t + p.nu0,
            ComponentKind::Incoherent,
            (1, 0, 0),
        ),
        gaussian(
            wm * amps.down_minus.norm_sqr(),
            -p.nu_t + p.nu0,
            ComponentKind::Incoherent,
            (0, 0, 0),
        ),
    ];
    let c = 2.0 * dephasing_factor(p.nu0, -p.nu0, p.sigma) * amps.interference() / z0;
    let coherent = vec![
        gaussian(c, p.nu_t, ComponentKind::Coherent, (1, 1, 0)),
        gaussian(-c, -p.nu_t, ComponentKind::Coherent, (0, 1, 0)),
    ];
    Ok(SpinComponents {
        plus,
        minus,
        coherent,
        sigma: p.sigma,
    })
}

/// Mean work split by origin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WorkBreakdown {
    pub w_plus: f64,
    pub w_minus: f64,
    pub w_coherent: f64,
    pub total: f64,
}

/// Closed-form `<W_+>`, `<W_->` and `<W_c>` for the coherent Gibbs state.
pub fn average_works(p: &SpinParams, amps: &SpinAmplitudes) -> Result<WorkBreakdown> {
    p.validate()?;
    let z0 = p.partition_initial();
    let w_plus = (-p.beta * p.nu0).exp() / z0
        * (amps.up_plus.norm_sqr() * (p.nu_t - p.nu0)
            - amps.down_plus.norm_sqr() * (p.nu_t + p.nu0));
    let w_minus = (p.beta * p.nu0).exp() / z0
        * (amps.up_minus.norm_sqr() * (p.nu_t + p.nu0)
            - amps.down_minus.norm_sqr() * (p.nu_t - p.nu0));
    let w_coherent =
        4.0 / z0 * dephasing_factor(p.nu0, -p.nu0, p.sigma) * amps.interference() * p.nu_t;
    Ok(WorkBreakdown {
        w_plus,
        w_minus,
        w_coherent,
        total: w_plus + w_minus + w_coherent,
    })
}

/// One duration of the sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub t_prime: f64,
    /// `<W_+> + <W_->`.
    pub w_incoherent: f64,
    /// `beta * var(dH) / 2` for the chosen initial state.
    pub half_beta_var: f64,
    pub w_coherent: f64,
    pub fdt_residual: f64,
    /// Computed on the thermal initial state.
    pub jarzynski_residual: f64,
}

/// Evaluates one duration.
pub fn sweep_row(p: &SpinParams, kind: InitialState, tol: f64) -> Result<SweepRow> {
    let amps = SpinAmplitudes::propagate(p, tol)?;
    let snap = spin_snapshot(p, &amps, kind)?;
    let delta_f = p.free_energy_change();
    let fdt = fdt_residual(&snap, p.beta, delta_f)?;
    let (w_incoherent, w_coherent) = match kind {
        InitialState::CoherentGibbs => {
            let b = average_works(p, &amps)?;
            (b.w_plus + b.w_minus, b.w_coherent)
        }
        InitialState::Thermal => (analytic_moments(&snap)?.mean, 0.0),
    };
    let thermal = spin_snapshot(p, &amps, InitialState::Thermal)?;
    let jarzynski = jarzynski_residual(&thermal, p.beta)?;
    Ok(SweepRow {
        t_prime: p.t_prime,
        w_incoherent,
        half_beta_var: fdt.half_beta_energy_variance,
        w_coherent,
        fdt_residual: fdt.residual,
        jarzynski_residual: jarzynski.residual,
    })
}

/// Sweep over durations; a failed duration yields an error row and the rest
/// continue.
pub fn sweep_duration(
    p: &SpinParams,
    t_primes: &[f64],
    kind: InitialState,
    tol: f64,
) -> Vec<Result<SweepRow>> {
    let run = |&t: &f64| p.with_t_prime(t).and_then(|q| sweep_row(&q, kind, tol));
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        t_primes.par_iter().map(run).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        t_primes.iter().map(run).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProfileRow {
    pub w: f64,
    pub total: f64,
    pub incoherent: f64,
    pub coherent: f64,
}

/// Work density and its incoherent and coherent parts on `w_grid`.
pub fn density_profile(
    p: &SpinParams,
    kind: InitialState,
    w_grid: &[f64],
    tol: f64,
) -> Result<Vec<ProfileRow>> {
    let amps = SpinAmplitudes::propagate(p, tol)?;
    profile_from_amplitudes(p, &amps, kind, w_grid)
}

/// [`density_profile`] for known amplitudes.
pub fn profile_from_amplitudes(
    p: &SpinParams,
    amps: &SpinAmplitudes,
    kind: InitialState,
    w_grid: &[f64],
) -> Result<Vec<ProfileRow>> {
    let dist = build_work_distribution(&spin_snapshot(p, amps, kind)?)?;
    Ok(w_grid
        .iter()
        .map(|&w| {
            let incoherent = dist.density_of(ComponentKind::Incoherent, w);
            let coherent = dist.density_of(ComponentKind::Coherent, w);
            ProfileRow {
                w,
                total: incoherent + coherent,
                incoherent,
                coherent,
            }
        })
        .collect())
}
