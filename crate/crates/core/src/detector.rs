//! Brute-force simulation of the detector measurement in a truncated Fock
//! space.
//!
//! The detector starts in the squeezed vacuum `S(r)|0>`, is displaced by
//! `-H(0)`, the system evolves under `U`, and the detector is displaced by
//! `+H(t')`. Tracing out the system leaves a mixture of squeezed coherent
//! states. Work is read from the Husimi Q function of the detector in the
//! squeezed frame, `W = Re(beta) / e^r`.

use std::f64::consts::PI;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::numerics::{c64, unitary_from_hamiltonian, ComplexMatrix, C64, HERMITIAN_TOL};
use crate::protocol::{auto_propagate, DrivingProtocol};
use crate::quadrature::{linspace, trapezoid};
use crate::state::DensityMatrix;
use crate::work::{build_work_distribution, sigma_from_squeezing, ProcessSnapshot};

/// Largest population allowed in the top two Fock levels of any stage.
pub const CUTOFF_POPULATION_TOL: f64 = 1e-8;
/// Same bound for the bare squeezed vacuum.
pub const VACUUM_POPULATION_TOL: f64 = 1e-10;
/// Largest Q value allowed on the Im boundary of the grid.
pub const GRID_BOUNDARY_TOL: f64 = 1e-8;
/// Cutoff at which the doubling runner gives up.
pub const MAX_CUTOFF: usize = 512;

/// Ladder-operator algebra on Fock levels `0..=cutoff`.
#[derive(Clone, Debug)]
pub struct FockSpace {
    cutoff: usize,
    a: ComplexMatrix,
    a_dag: ComplexMatrix,
}

impl FockSpace {
    /// Highest retained level `N`; the space has `N + 1` levels.
    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        self.cutoff + 1
    }

    /// Annihilation operator, `a|n> = sqrt(n)|n-1>`.
    pub fn annihilation(&self) -> &ComplexMatrix {
        &self.a
    }

    pub fn creation(&self) -> &ComplexMatrix {
        &self.a_dag
    }

    pub fn number(&self) -> ComplexMatrix {
        &self.a_dag * &self.a
    }

    /// `q = (a + a^dagger) / 2`.
    pub fn position(&self) -> ComplexMatrix {
        (&self.a + &self.a_dag).scale(c64(0.5, 0.0))
    }

    /// `p = (a - a^dagger) / (2i)`.
    pub fn momentum(&self) -> ComplexMatrix {
        (&self.a - &self.a_dag).scale(c64(0.0, -0.5))
    }

    /// Fock basis vector `|n>`.
    pub fn basis(&self, n: usize) -> DVector<C64> {
        let mut v = DVector::zeros(self.dim());
        v[n] = c64(1.0, 0.0);
        v
    }
}

/// Fock space with levels `0..=cutoff`.
pub fn build_fock(cutoff: usize) -> Result<FockSpace> {
    if cutoff < 2 {
        return Err(Error::InvalidParameter {
            name: "cutoff",
            value: cutoff as f64,
            reason: "need at least three Fock levels",
        });
    }
    let a = ComplexMatrix::from_fn(cutoff + 1, |i, j| {
        if j == i + 1 {
            c64((j as f64).sqrt(), 0.0)
        } else {
            c64(0.0, 0.0)
        }
    });
    let a_dag = a.adjoint();
    Ok(FockSpace { cutoff, a, a_dag })
}

/// `exp(G)` for anti-Hermitian `G`.
fn exp_anti_hermitian(g: &ComplexMatrix) -> Result<ComplexMatrix> {
    unitary_from_hamiltonian(&g.scale(c64(0.0, 1.0)), 1.0)
}

/// `S(r) = exp{(r/2)(a^2 - a^dagger^2)}`.
pub fn squeeze_operator(fock: &FockSpace, r: f64) -> Result<ComplexMatrix> {
    let a2 = fock.annihilation() * fock.annihilation();
    let ad2 = fock.creation() * fock.creation();
    exp_anti_hermitian(&(&a2 - &ad2).scale(c64(0.5 * r, 0.0)))
}

/// Population of the two highest Fock levels of a state vector.
fn top_population_vector(v: &DVector<C64>) -> f64 {
    let n = v.len();
    v[n - 1].norm_sqr() + v[n - 2].norm_sqr()
}

/// Population of the two highest levels of a detector density matrix.
fn top_population_matrix(rho: &ComplexMatrix) -> f64 {
    let n = rho.dim();
    rho[(n - 1, n - 1)].re + rho[(n - 2, n - 2)].re
}

/// `S(r)|0>`, rejected when the top two levels hold more than
/// [`VACUUM_POPULATION_TOL`].
pub fn squeezed_vacuum(fock: &FockSpace, r: f64) -> Result<DVector<C64>> {
    let psi = squeeze_operator(fock, r)?.mul_vector(&fock.basis(0));
    let population = top_population_vector(&psi);
    if population >= VACUUM_POPULATION_TOL {
        return Err(Error::CutoffBreach {
            stage: "squeezed vacuum",
            population,
        });
    }
    Ok(psi)
}

/// Coherent-state coefficients `exp(-|alpha|^2/2) alpha^n / sqrt(n!)` for
/// `n = 0..dim`, exact up to the truncation.
pub fn coherent_coefficients(alpha: C64, dim: usize) -> DVector<C64> {
    let mut v = DVector::zeros(dim);
    let mut c = c64((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for n in 0..dim {
        if n > 0 {
            c = c * alpha / (n as f64).sqrt();
        }
        v[n] = c;
    }
    v
}

/// Coherent state `|alpha>` truncated to the Fock space.
pub fn coherent_state(fock: &FockSpace, alpha: C64) -> DVector<C64> {
    coherent_coefficients(alpha, fock.dim())
}

/// `exp{sign (a^dagger - a) (x) H}` on detector (x) system, with the detector
/// index major. Displaces the detector by `sign * E` on the eigenstate `|E>`.
pub fn coupling_unitary(fock: &FockSpace, hs: &ComplexMatrix, sign: f64) -> Result<ComplexMatrix> {
    let asym = hs.hermitian_asymmetry();
    if asym > HERMITIAN_TOL {
        return Err(Error::NotHermitian { asymmetry: asym });
    }
    let generator = (fock.creation() - fock.annihilation()).kron(hs);
    exp_anti_hermitian(&generator.scale(c64(sign, 0.0)))
}

/// Rectangular grid on the `beta` plane.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub re_min: f64,
    pub re_max: f64,
    pub re_points: usize,
    pub im_min: f64,
    pub im_max: f64,
    pub im_points: usize,
}

impl GridSpec {
    /// Grid covering work values `[w_min - 6 sigma, w_max + 6 sigma]` with at
    /// least 20 points per Gaussian width on both axes.
    pub fn covering(w_min: f64, w_max: f64, r: f64) -> Self {
        Self::covering_with_density(w_min, w_max, r, 20.0)
    }

    /// [`GridSpec::covering`] with `per_width` points per Gaussian width.
    pub fn covering_with_density(w_min: f64, w_max: f64, r: f64, per_width: f64) -> Self {
        let scale = r.exp();
        let sigma = sigma_from_squeezing(r);
        let re_min = scale * (w_min - 6.0 * sigma);
        let re_max = scale * (w_max + 6.0 * sigma);
        // Q has width 1/sqrt(2) along Im in the squeezed frame
        let im_width = std::f64::consts::FRAC_1_SQRT_2;
        let im_half = 8.0 * im_width;
        Self {
            re_min,
            re_max,
            re_points: points_for(re_max - re_min, sigma * scale / per_width),
            im_min: -im_half,
            im_max: im_half,
            im_points: points_for(2.0 * im_half, im_width / per_width),
        }
    }

    pub fn re_axis(&self) -> Vec<f64> {
        linspace(self.re_min, self.re_max, self.re_points)
    }

    pub fn im_axis(&self) -> Vec<f64> {
        linspace(self.im_min, self.im_max, self.im_points)
    }

    /// Same grid moved along the Im axis.
    pub fn shifted_im(&self, offset: f64) -> Self {
        Self {
            im_min: self.im_min + offset,
            im_max: self.im_max + offset,
            ..self.clone()
        }
    }
}

fn points_for(span: f64, max_spacing: f64) -> usize {
    (span / max_spacing).ceil() as usize + 1
}

/// Cutoff `ceil((e^r E_max + 6)^2)` for largest work magnitude `e_max`.
pub fn cutoff_rule(r: f64, e_max: f64) -> usize {
    let amplitude = r.exp() * e_max.abs() + 6.0;
    ((amplitude * amplitude).ceil() as usize).max(2)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DetectorConfig {
    /// Squeezing strength with `sigma = exp(-r) / sqrt(2)`; either sign allowed.
    pub squeezing: f64,
    pub cutoff: usize,
    pub grid: GridSpec,
}

impl DetectorConfig {
    /// Cutoff and grid chosen for the work range of `snap`.
    pub fn for_snapshot(snap: &ProcessSnapshot) -> Self {
        Self::for_snapshot_with_density(snap, 20.0)
    }

    /// [`DetectorConfig::for_snapshot`] with `per_width` grid points per width.
    pub fn for_snapshot_with_density(snap: &ProcessSnapshot, per_width: f64) -> Self {
        let r = snap.squeezing();
        let e_max = snap.max_work_magnitude();
        let dist = build_work_distribution(snap).expect("snapshot is valid");
        let (w_min, w_max) = dist.mean_range();
        Self {
            squeezing: r,
            cutoff: cutoff_rule(r, e_max),
            grid: GridSpec::covering_with_density(w_min, w_max, r, per_width),
        }
    }

    pub fn sigma(&self) -> f64 {
        sigma_from_squeezing(self.squeezing)
    }
}

/// Reduced detector state plus the Fock space it lives in.
#[derive(Clone, Debug)]
pub struct DetectorState {
    pub fock: FockSpace,
    pub state: DensityMatrix,
}

fn detector_reduced(joint: &ComplexMatrix, fock_dim: usize, sys_dim: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(fock_dim, |i, j| {
        (0..sys_dim)
            .map(|s| joint[(i * sys_dim + s, j * sys_dim + s)])
            .sum()
    })
}

fn check_stage(
    joint: &ComplexMatrix,
    fock_dim: usize,
    sys_dim: usize,
    stage: &'static str,
) -> Result<()> {
    let population = top_population_matrix(&detector_reduced(joint, fock_dim, sys_dim));
    if population >= CUTOFF_POPULATION_TOL {
        return Err(Error::CutoffBreach { stage, population });
    }
    Ok(())
}

/// Runs the measurement with an explicit system propagator `u` (computational
/// basis) and returns the detector state after the second coupling.
pub fn run_measurement_scheme_with(
    rho_s0: &DensityMatrix,
    h0: &ComplexMatrix,
    h_t: &ComplexMatrix,
    u: &ComplexMatrix,
    cfg: &DetectorConfig,
) -> Result<DetectorState> {
    let d = rho_s0.dim();
    for found in [h0.dim(), h_t.dim(), u.dim()] {
        if found != d {
            return Err(Error::DimensionMismatch { expected: d, found });
        }
    }
    let fock = build_fock(cfg.cutoff)?;
    let n = fock.dim();
    let vacuum = squeezed_vacuum(&fock, cfg.squeezing)?;
    let mut joint = ComplexMatrix::outer(&vacuum).kron(rho_s0.matrix());

    joint = coupling_unitary(&fock, h0, -1.0)?.conjugate(&joint);
    check_stage(&joint, n, d, "first coupling")?;
    joint = ComplexMatrix::identity(n).kron(u).conjugate(&joint);
    joint = coupling_unitary(&fock, h_t, 1.0)?.conjugate(&joint);
    check_stage(&joint, n, d, "second coupling")?;

    let reduced = detector_reduced(&joint, n, d).hermitian_part();
    let state = DensityMatrix::new(reduced)?.with_basis_tag("fock");
    Ok(DetectorState { fock, state })
}

/// Propagates `protocol` to `tol`, then runs the measurement.
pub fn run_measurement_scheme(
    rho_s0: &DensityMatrix,
    protocol: &dyn DrivingProtocol,
    cfg: &DetectorConfig,
    tol: f64,
) -> Result<DetectorState> {
    let h0 = protocol.hamiltonian_at(0.0)?;
    let h_t = protocol.hamiltonian_at(protocol.duration())?;
    let u = auto_propagate(protocol, tol)?.unitary;
    run_measurement_scheme_with(rho_s0, &h0, &h_t, &u, cfg)
}

/// Hamiltonians and propagator of a snapshot in the computational basis.
fn snapshot_operators(snap: &ProcessSnapshot) -> (ComplexMatrix, ComplexMatrix, ComplexMatrix) {
    let h0 = snap.eig0().reconstruct();
    let h_t = snap.eig_t().reconstruct();
    let u = &(snap.eig_t().vectors() * snap.amplitudes()) * &snap.eig0().vectors().adjoint();
    (h0, h_t, u)
}

/// Runs the measurement for a snapshot, doubling the cutoff on a breach up to
/// [`MAX_CUTOFF`].
pub fn run_for_snapshot(
    snap: &ProcessSnapshot,
    cfg: &DetectorConfig,
) -> Result<(DetectorConfig, DetectorState)> {
    let (h0, h_t, u) = snapshot_operators(snap);
    let mut cfg = cfg.clone();
    loop {
        match run_measurement_scheme_with(snap.rho0(), &h0, &h_t, &u, &cfg) {
            Ok(state) => return Ok((cfg, state)),
            Err(Error::CutoffBreach { .. }) if 2 * cfg.cutoff <= MAX_CUTOFF => cfg.cutoff *= 2,
            Err(e) => return Err(e),
        }
    }
}

/// `sum rho_mn U_lm U_ln^* S|beta_lm><beta_ln|S^dagger` with
/// `beta_lm = e^r (E_t^l - E_0^m)`, built from the snapshot's initial state.
pub fn analytic_detector_state(
    snap: &ProcessSnapshot,
    fock: &FockSpace,
    r: f64,
) -> Result<DensityMatrix> {
    let s = squeeze_operator(fock, r)?;
    let rho = snap.rho0().in_eigenbasis(snap.eig0())?;
    let amps = snap.amplitudes();
    let e0 = snap.eig0().values();
    let et = snap.eig_t().values();
    let d = snap.dim();
    let scale = r.exp();
    let mut out = ComplexMatrix::zeros(fock.dim());
    for l in 0..d {
        let kets: Vec<DVector<C64>> = (0..d)
            .map(|m| s.mul_vector(&coherent_state(fock, c64(scale * (et[l] - e0[m]), 0.0))))
            .collect();
        for m in 0..d {
            for n in 0..d {
                let w = rho[(m, n)] * amps[(l, m)] * amps[(l, n)].conj();
                if w.norm() == 0.0 {
                    continue;
                }
                let dyad = &kets[m] * kets[n].adjoint();
                for (i, j) in (0..fock.dim()).flat_map(|i| (0..fock.dim()).map(move |j| (i, j))) {
                    out[(i, j)] += w * dyad[(i, j)];
                }
            }
        }
    }
    // the truncated dyads lose a little norm; renormalize before validating
    let tr = out.trace().re;
    DensityMatrix::new(out.scale(c64(1.0 / tr, 0.0)).hermitian_part())
}

/// Husimi Q sampled on a grid; `values[i * im.len() + j]` is at `re[i] + i im[j]`.
#[derive(Clone, Debug)]
pub struct QGrid {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    pub values: Vec<f64>,
}

impl QGrid {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.im.len() + j]
    }

    /// Riemann sum over the grid cells.
    pub fn total(&self) -> f64 {
        let dre = (self.re[self.re.len() - 1] - self.re[0]) / (self.re.len() - 1) as f64;
        let dim_ = (self.im[self.im.len() - 1] - self.im[0]) / (self.im.len() - 1) as f64;
        self.values.iter().sum::<f64>() * dre * dim_
    }

    /// Largest value on the first and last Im gridlines.
    pub fn im_boundary_max(&self) -> f64 {
        let last = self.im.len() - 1;
        (0..self.re.len())
            .map(|i| self.at(i, 0).max(self.at(i, last)))
            .fold(0.0, f64::max)
    }
}

fn map_rows<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// `Q(beta) = <beta, r| rho_a |beta, r> / pi` with probe `S(r)|beta>`.
pub fn husimi_q(det: &DetectorState, cfg: &DetectorConfig) -> Result<QGrid> {
    let s = squeeze_operator(&det.fock, cfg.squeezing)?;
    let frame = (&(&s.adjoint() * det.state.matrix()) * &s).into_dmatrix();
    let dim = det.fock.dim();
    let re = cfg.grid.re_axis();
    let im = cfg.grid.im_axis();
    let rows = map_rows(re.len(), |i| {
        im.iter()
            .map(|&y| {
                let c = coherent_coefficients(c64(re[i], y), dim);
                let v = &frame * &c;
                (c.dotc(&v).re / PI).max(0.0)
            })
            .collect::<Vec<f64>>()
    });
    Ok(QGrid {
        re,
        im,
        values: rows.into_iter().flatten().collect(),
    })
}

/// Work density sampled at `w[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledDensity {
    pub w: Vec<f64>,
    pub density: Vec<f64>,
}

impl SampledDensity {
    pub fn integral(&self) -> f64 {
        trapezoid(&self.w, &self.density)
    }
}

/// `P(W) = e^r int Q(beta) dIm(beta)` at `W = Re(beta) / e^r`.
pub fn marginal_work_distribution(q: &QGrid, r: f64) -> Result<SampledDensity> {
    let boundary = q.im_boundary_max();
    if boundary > GRID_BOUNDARY_TOL {
        return Err(Error::GridCoverage { boundary });
    }
    let scale = r.exp();
    let n_im = q.im.len();
    let density = (0..q.re.len())
        .map(|i| scale * trapezoid(&q.im, &q.values[i * n_im..(i + 1) * n_im]))
        .collect();
    let w = q.re.iter().map(|x| x / scale).collect();
    Ok(SampledDensity { w, density })
}

/// Oracle marginal next to the closed-form density.
#[derive(Clone, Debug)]
pub struct OracleReport {
    pub config: DetectorConfig,
    pub w: Vec<f64>,
    pub closed_form: Vec<f64>,
    pub oracle: Vec<f64>,
    /// Trapezoid integral of `|closed_form - oracle|` over the W grid.
    pub l1_distance: f64,
    /// Fidelity of the simulated detector with the analytic dyad mixture.
    pub fidelity: f64,
}

/// Simulates the detector for `snap` and compares its work marginal with the
/// closed form.
pub fn compare_with_closed_form(snap: &ProcessSnapshot) -> Result<OracleReport> {
    compare_with_closed_form_with(snap, &DetectorConfig::for_snapshot(snap))
}

/// [`compare_with_closed_form`] starting from an explicit configuration.
pub fn compare_with_closed_form_with(
    snap: &ProcessSnapshot,
    cfg: &DetectorConfig,
) -> Result<OracleReport> {
    let (config, det) = run_for_snapshot(snap, cfg)?;
    let analytic = analytic_detector_state(snap, &det.fock, config.squeezing)?;
    let fidelity = det.state.fidelity(&analytic)?;
    let q = husimi_q(&det, &config)?;
    let sampled = marginal_work_distribution(&q, config.squeezing)?;
    let dist = build_work_distribution(snap)?;
    let closed_form: Vec<f64> = sampled.w.iter().map(|&w| dist.density(w)).collect();
    let diff: Vec<f64> = closed_form
        .iter()
        .zip(&sampled.density)
        .map(|(a, b)| (a - b).abs())
        .collect();
    let l1_distance = trapezoid(&sampled.w, &diff);
    Ok(OracleReport {
        config,
        w: sampled.w,
        closed_form,
        oracle: sampled.density,
        l1_distance,
        fidelity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{frobenius_distance, hermitian_eigendecompose};
    use crate::protocol::transition_amplitudes;
    use crate::state::gibbs_state_in;

    fn sigma_x(nu: f64) -> ComplexMatrix {
        ComplexMatrix::from_row_major(&[c64(0., 0.), c64(nu, 0.), c64(nu, 0.), c64(0., 0.)])
            .unwrap()
    }

    fn sigma_y(nu: f64) -> ComplexMatrix {
        ComplexMatrix::from_row_major(&[c64(0., 0.), c64(0., nu), c64(0., -nu), c64(0., 0.)])
            .unwrap()
    }

    fn expect(psi: &DVector<C64>, op: &ComplexMatrix) -> C64 {
        psi.dotc(&op.mul_vector(psi))
    }

    #[test]
    fn ladder_actions() {
        let fock = build_fock(8).unwrap();
        let a = fock.annihilation();
        assert!((a.mul_vector(&fock.basis(1)) - fock.basis(0)).norm() < 1e-15);
        assert!(a.mul_vector(&fock.basis(0)).norm() < 1e-15);
        let num = fock.number();
        for n in 0..8 {
            assert!((num[(n, n)].re - n as f64).abs() < 1e-12);
        }
        assert!(build_fock(1).is_err());
    }

    #[test]
    fn squeezed_vacuum_moments() {
        let fock = build_fock(60).unwrap();
        let r = 0.5;
        let psi = squeezed_vacuum(&fock, r).unwrap();
        let q = fock.position();
        let mean = expect(&psi, &q).re;
        let second = expect(&psi, &(&q * &q)).re;
        assert!(mean.abs() < 1e-12);
        assert!(((second - mean * mean).sqrt() - (-r).exp() / 2.0).abs() < 1e-8);
        let n = expect(&psi, &fock.number()).re;
        assert!((n - r.sinh().powi(2)).abs() < 1e-8);
        let vac = squeezed_vacuum(&fock, 0.0).unwrap();
        assert!((vac - fock.basis(0)).norm() < 1e-14);
    }

    #[test]
    fn small_cutoff_breaches() {
        let fock = build_fock(4).unwrap();
        assert!(matches!(
            squeezed_vacuum(&fock, 1.5),
            Err(Error::CutoffBreach { .. })
        ));
    }

    #[test]
    fn coupling_displaces_eigenstates() {
        let fock = build_fock(40).unwrap();
        let h = sigma_x(1.0);
        let plus = DVector::from_vec(vec![c64(0.5f64.sqrt(), 0.), c64(0.5f64.sqrt(), 0.)]);
        let input = fock.basis(0).kronecker(&plus);
        let out = coupling_unitary(&fock, &h, -1.0)
            .unwrap()
            .mul_vector(&input);
        let expected = coherent_state(&fock, c64(-1.0, 0.0)).kronecker(&plus);
        let overlap = expected.dotc(&out).norm_sqr();
        assert!(overlap >= 1.0 - 1e-8, "overlap {overlap}");

        let forward = coupling_unitary(&fock, &h, 1.0).unwrap();
        let back = coupling_unitary(&fock, &h, -1.0).unwrap();
        let id = ComplexMatrix::identity(forward.dim());
        assert!(frobenius_distance(&(&forward * &back), &id).unwrap() < 1e-8);
        let zero = coupling_unitary(&fock, &ComplexMatrix::zeros(2), 1.0).unwrap();
        assert!(frobenius_distance(&zero, &id).unwrap() < 1e-12);
        let bad =
            ComplexMatrix::from_row_major(&[c64(0., 0.), c64(1., 0.), c64(0., 0.), c64(0., 0.)])
                .unwrap();
        assert!(coupling_unitary(&fock, &bad, 1.0).is_err());
    }

    fn vacuum_state(fock: &FockSpace, psi: &DVector<C64>) -> DetectorState {
        DetectorState {
            fock: fock.clone(),
            state: DensityMatrix::from_pure(psi).unwrap(),
        }
    }

    fn small_grid(r: f64) -> DetectorConfig {
        DetectorConfig {
            squeezing: r,
            cutoff: 40,
            grid: GridSpec::covering(-1.0, 1.0, r),
        }
    }

    #[test]
    fn vacuum_and_coherent_q() {
        let cfg = small_grid(0.0);
        let fock = build_fock(cfg.cutoff).unwrap();
        let q = husimi_q(&vacuum_state(&fock, &fock.basis(0)), &cfg).unwrap();
        let i0 = q.re.iter().position(|x| x.abs() < 1e-12);
        let j0 = q.im.iter().position(|y| y.abs() < 1e-12);
        if let (Some(i), Some(j)) = (i0, j0) {
            assert!((q.at(i, j) - 1.0 / PI).abs() < 1e-12);
        }
        for (i, &x) in q.re.iter().enumerate().step_by(17) {
            for (j, &y) in q.im.iter().enumerate().step_by(13) {
                assert!((q.at(i, j) - (-(x * x + y * y)).exp() / PI).abs() < 1e-12);
            }
        }
        assert!((q.total() - 1.0).abs() < 1e-4);

        let alpha = c64(0.8, -0.3);
        let q = husimi_q(&vacuum_state(&fock, &coherent_state(&fock, alpha)), &cfg).unwrap();
        for (i, &x) in q.re.iter().enumerate().step_by(11) {
            for (j, &y) in q.im.iter().enumerate().step_by(7) {
                let d2 = (c64(x, y) - alpha).norm_sqr();
                assert!((q.at(i, j) - (-d2).exp() / PI).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn squeezed_vacuum_marginal_is_gaussian() {
        for r in [0.0, -0.5 * 2f64.ln()] {
            let cfg = small_grid(r);
            let fock = build_fock(cfg.cutoff).unwrap();
            let det = vacuum_state(&fock, &squeezed_vacuum(&fock, r).unwrap());
            let q = husimi_q(&det, &cfg).unwrap();
            let m = marginal_work_distribution(&q, r).unwrap();
            let sigma = sigma_from_squeezing(r);
            for (w, p) in m.w.iter().zip(&m.density) {
                assert!((p - crate::work::normal_pdf(*w, 0.0, sigma)).abs() < 1e-6);
            }
            assert!((m.integral() - 1.0).abs() < 1e-3);

            let shifted = DetectorConfig {
                grid: cfg.grid.shifted_im(0.3),
                ..cfg.clone()
            };
            let m2 = marginal_work_distribution(&husimi_q(&det, &shifted).unwrap(), r).unwrap();
            for (a, b) in m.density.iter().zip(&m2.density) {
                assert!((a - b).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn narrow_im_range_is_rejected() {
        let mut cfg = small_grid(0.0);
        cfg.grid.im_min = -1.0;
        cfg.grid.im_max = 1.0;
        let fock = build_fock(cfg.cutoff).unwrap();
        let q = husimi_q(&vacuum_state(&fock, &fock.basis(0)), &cfg).unwrap();
        assert!(matches!(
            marginal_work_distribution(&q, 0.0),
            Err(Error::GridCoverage { .. })
        ));
    }

    #[test]
    fn idle_system_returns_detector_to_squeezed_vacuum() {
        let h = sigma_x(1.0);
        let eig = hermitian_eigendecompose(&h).unwrap();
        let rho = DensityMatrix::from_pure(&eig.vector(1)).unwrap();
        let u = unitary_from_hamiltonian(&h, 0.7).unwrap();
        let r = -0.5 * 2f64.ln();
        let cfg = DetectorConfig {
            squeezing: r,
            cutoff: 48,
            grid: GridSpec::covering(-1.0, 1.0, r),
        };
        let det = run_measurement_scheme_with(&rho, &h, &h, &u, &cfg).unwrap();
        assert!((det.state.trace().re - 1.0).abs() < 1e-9);
        let vac = DensityMatrix::from_pure(&squeezed_vacuum(&det.fock, r).unwrap()).unwrap();
        assert!(det.state.fidelity(&vac).unwrap() >= 1.0 - 1e-8);
    }

    #[test]
    fn quench_from_plus_is_two_squeezed_coherent_states() {
        let eig0 = hermitian_eigendecompose(&sigma_x(1.0)).unwrap();
        let eig_t = hermitian_eigendecompose(&sigma_y(1.8)).unwrap();
        let rho = DensityMatrix::from_pure(&eig0.vector(1)).unwrap();
        let amps = transition_amplitudes(&ComplexMatrix::identity(2), &eig0, &eig_t).unwrap();
        let snap = ProcessSnapshot::new(eig0, eig_t, amps, rho, 1.0).unwrap();
        let cfg = DetectorConfig::for_snapshot(&snap);
        assert_eq!(cfg.cutoff, 64);
        let (cfg, det) = run_for_snapshot(&snap, &cfg).unwrap();
        let spectrum = hermitian_eigendecompose(det.state.matrix()).unwrap();
        let significant = spectrum.values().iter().filter(|&&v| v > 1e-9).count();
        assert!(significant <= 2);
        let analytic = analytic_detector_state(&snap, &det.fock, cfg.squeezing).unwrap();
        assert!(det.state.fidelity(&analytic).unwrap() >= 1.0 - 1e-6);
    }

    #[test]
    fn cutoff_rule_values() {
        let r = -0.5 * 2f64.ln();
        assert_eq!(cutoff_rule(r, 2.8), 64);
        assert_eq!(cutoff_rule(0.0, 0.0), 36);
    }

    #[test]
    fn thermal_quench_oracle_matches_closed_form() {
        let eig0 = hermitian_eigendecompose(&sigma_x(1.0)).unwrap();
        let eig_t = hermitian_eigendecompose(&sigma_y(1.8)).unwrap();
        let rho = gibbs_state_in(&eig0, 0.01).unwrap().state;
        let amps = transition_amplitudes(&ComplexMatrix::identity(2), &eig0, &eig_t).unwrap();
        let snap = ProcessSnapshot::new(eig0, eig_t, amps, rho, 1.0).unwrap();
        let report = compare_with_closed_form(&snap).unwrap();
        assert!(report.l1_distance <= 1e-3, "l1 {}", report.l1_distance);
        assert!(report.fidelity >= 1.0 - 1e-6);
    }
}
