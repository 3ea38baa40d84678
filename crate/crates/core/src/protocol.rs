//! Driving protocols and the time-ordered propagator.
//!
//! The propagator is the midpoint product
//! `U = exp(-i H(t_n) dt) ... exp(-i H(t_1) dt)` on a uniform grid with later
//! times to the left. Every factor is exactly unitary.

use crate::error::{positive, Error, Result};
use crate::numerics::{frobenius_distance, unitary_from_hamiltonian, ComplexMatrix, EigenSystem};

/// Step count [`auto_propagate`] starts from.
pub const AUTO_START_STEPS: usize = 64;
/// Largest grid [`auto_propagate`] will try.
pub const AUTO_MAX_STEPS: usize = 1 << 20;

/// A time-dependent Hamiltonian `t -> H(t)` on `[0, duration]`.
pub trait DrivingProtocol: Sync {
    fn duration(&self) -> f64;
    fn dim(&self) -> usize;
    fn hamiltonian_at(&self, t: f64) -> Result<ComplexMatrix>;

    /// `exp(-i H(t) dt)`. Override when a closed form is cheaper.
    fn step_unitary(&self, t: f64, dt: f64) -> Result<ComplexMatrix> {
        unitary_from_hamiltonian(&self.hamiltonian_at(t)?, dt)
    }
}

/// A time-independent Hamiltonian held for `duration`.
#[derive(Clone, Debug)]
pub struct ConstantProtocol {
    hamiltonian: ComplexMatrix,
    duration: f64,
}

impl ConstantProtocol {
    pub fn new(hamiltonian: ComplexMatrix, duration: f64) -> Result<Self> {
        positive("duration", duration)?;
        Ok(Self {
            hamiltonian,
            duration,
        })
    }
}

impl DrivingProtocol for ConstantProtocol {
    fn duration(&self) -> f64 {
        self.duration
    }

    fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    fn hamiltonian_at(&self, _t: f64) -> Result<ComplexMatrix> {
        Ok(self.hamiltonian.clone())
    }
}

/// Protocol defined by a closure.
pub struct FnProtocol<F> {
    f: F,
    duration: f64,
    dim: usize,
}

impl<F> FnProtocol<F>
where
    F: Fn(f64) -> Result<ComplexMatrix> + Sync,
{
    pub fn new(dim: usize, duration: f64, f: F) -> Result<Self> {
        positive("duration", duration)?;
        Ok(Self { f, duration, dim })
    }
}

impl<F> DrivingProtocol for FnProtocol<F>
where
    F: Fn(f64) -> Result<ComplexMatrix> + Sync,
{
    fn duration(&self) -> f64 {
        self.duration
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn hamiltonian_at(&self, t: f64) -> Result<ComplexMatrix> {
        (self.f)(t)
    }
}

#[derive(Clone, Debug)]
pub struct PropagationResult {
    pub unitary: ComplexMatrix,
    pub steps: usize,
    /// Frobenius distance between this propagator and the one on a grid
    /// twice as fine (or half as fine, for [`auto_propagate`]).
    pub estimated_error: f64,
}

fn step_at(protocol: &dyn DrivingProtocol, t: f64, dt: f64) -> Result<ComplexMatrix> {
    let u = protocol.step_unitary(t, dt).map_err(|e| match e {
        Error::Protocol { .. } => e,
        other => Error::Protocol {
            time: t,
            reason: other.to_string(),
        },
    })?;
    if u.dim() != protocol.dim() {
        return Err(Error::Protocol {
            time: t,
            reason: format!("step has dim {}, expected {}", u.dim(), protocol.dim()),
        });
    }
    Ok(u)
}

/// Midpoint-rule product on `steps` equal intervals.
pub fn midpoint_product(protocol: &dyn DrivingProtocol, steps: usize) -> Result<ComplexMatrix> {
    if steps == 0 {
        return Err(Error::InvalidParameter {
            name: "steps",
            value: 0.0,
            reason: "need at least one step",
        });
    }
    let dt = protocol.duration() / steps as f64;
    let mut u = ComplexMatrix::identity(protocol.dim());
    for k in 0..steps {
        let t = (k as f64 + 0.5) * dt;
        let step = step_at(protocol, t, dt)?;
        u = &step * &u;
    }
    Ok(u)
}

/// Propagator on `steps` intervals, with an error estimate from a second
/// run on `2 * steps` intervals.
pub fn propagate(protocol: &dyn DrivingProtocol, steps: usize) -> Result<PropagationResult> {
    let coarse = midpoint_product(protocol, steps)?;
    let fine = midpoint_product(protocol, 2 * steps)?;
    let estimated_error = frobenius_distance(&coarse, &fine)?;
    Ok(PropagationResult {
        unitary: coarse,
        steps,
        estimated_error,
    })
}

/// Doubles the step count from [`AUTO_START_STEPS`] until two successive
/// grids agree to `tol`, returning the finer of the two.
pub fn auto_propagate(protocol: &dyn DrivingProtocol, tol: f64) -> Result<PropagationResult> {
    positive("tol", tol)?;
    let mut steps = AUTO_START_STEPS;
    let mut coarse = midpoint_product(protocol, steps)?;
    loop {
        let fine_steps = 2 * steps;
        let fine = midpoint_product(protocol, fine_steps)?;
        let err = frobenius_distance(&coarse, &fine)?;
        if err <= tol {
            return Ok(PropagationResult {
                unitary: fine,
                steps: fine_steps,
                estimated_error: err,
            });
        }
        if fine_steps >= AUTO_MAX_STEPS {
            return Err(Error::PropagationCap {
                steps: fine_steps,
                last_error: err,
            });
        }
        steps = fine_steps;
        coarse = fine;
    }
}

/// `U_lm = <E_t^l| U |E_0^m>`.
pub fn transition_amplitudes(
    u: &ComplexMatrix,
    eig0: &EigenSystem,
    eig_t: &EigenSystem,
) -> Result<ComplexMatrix> {
    for found in [eig0.dim(), eig_t.dim()] {
        if found != u.dim() {
            return Err(Error::DimensionMismatch {
                expected: u.dim(),
                found,
            });
        }
    }
    Ok(&(&eig_t.vectors().adjoint() * u) * eig0.vectors())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{c64, hermitian_eigendecompose};

    fn sigma_x() -> ComplexMatrix {
        ComplexMatrix::from_row_major(&[c64(0., 0.), c64(1., 0.), c64(1., 0.), c64(0., 0.)])
            .unwrap()
    }

    fn sigma_y() -> ComplexMatrix {
        ComplexMatrix::from_row_major(&[c64(0., 0.), c64(0., -1.), c64(0., 1.), c64(0., 0.)])
            .unwrap()
    }

    fn rotating(duration: f64) -> FnProtocol<impl Fn(f64) -> Result<ComplexMatrix> + Sync> {
        let x = sigma_x();
        let y = sigma_y();
        FnProtocol::new(2, duration, move |t| {
            let phase = 3.0 * t;
            Ok(&x.scale(c64((1.0 + t) * phase.cos(), 0.0)) + &y.scale(c64(phase.sin(), 0.0)))
        })
        .unwrap()
    }

    #[test]
    fn constant_hamiltonian_is_exact() {
        let h = sigma_x().scale(c64(0.7, 0.0));
        let p = ConstantProtocol::new(h.clone(), 2.3).unwrap();
        let exact = unitary_from_hamiltonian(&h, 2.3).unwrap();
        for steps in [1, 7, 64] {
            let r = propagate(&p, steps).unwrap();
            assert!(frobenius_distance(&r.unitary, &exact).unwrap() < 1e-12);
        }
        let auto = auto_propagate(&p, 1e-10).unwrap();
        assert_eq!(auto.steps, 2 * AUTO_START_STEPS);
    }

    #[test]
    fn zero_steps_rejected() {
        let p = ConstantProtocol::new(sigma_x(), 1.0).unwrap();
        assert!(propagate(&p, 0).is_err());
    }

    #[test]
    fn unreachable_tolerance_hits_cap() {
        let p = rotating(5.0);
        match auto_propagate(&p, 1e-30) {
            Err(Error::PropagationCap { steps, last_error }) => {
                assert_eq!(steps, AUTO_MAX_STEPS);
                assert!(last_error > 0.0);
            }
            other => panic!("expected cap rejection, got {other:?}"),
        }
    }

    #[test]
    fn protocol_errors_propagate() {
        let p = FnProtocol::new(2, 1.0, |t| {
            if t > 0.5 {
                Err(Error::InvalidState("boom".into()))
            } else {
                Ok(sigma_x())
            }
        })
        .unwrap();
        match propagate(&p, 4) {
            Err(Error::Protocol { time, .. }) => assert!(time > 0.5),
            other => panic!("expected protocol error, got {other:?}"),
        }
    }

    #[test]
    fn second_order_convergence() {
        let p = rotating(1.0);
        let a = propagate(&p, 200).unwrap().estimated_error;
        let b = propagate(&p, 400).unwrap().estimated_error;
        let ratio = a / b;
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn amplitudes_identity_and_unit_norms() {
        let eig = hermitian_eigendecompose(&sigma_x()).unwrap();
        let amps = transition_amplitudes(&ComplexMatrix::identity(2), &eig, &eig).unwrap();
        assert!(frobenius_distance(&amps, &ComplexMatrix::identity(2)).unwrap() < 1e-14);

        let u = propagate(&rotating(1.3), 500).unwrap().unitary;
        let eig_t = hermitian_eigendecompose(&sigma_y()).unwrap();
        let amps = transition_amplitudes(&u, &eig, &eig_t).unwrap();
        for m in 0..2 {
            let col: f64 = (0..2).map(|l| amps[(l, m)].norm_sqr()).sum();
            let row: f64 = (0..2).map(|l| amps[(m, l)].norm_sqr()).sum();
            assert!((col - 1.0).abs() < 1e-12);
            assert!((row - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sigma_x_to_sigma_y_overlaps_are_half() {
        let eig0 = hermitian_eigendecompose(&sigma_x()).unwrap();
        let eig_t = hermitian_eigendecompose(&sigma_y()).unwrap();
        let amps = transition_amplitudes(&ComplexMatrix::identity(2), &eig0, &eig_t).unwrap();
        for l in 0..2 {
            for m in 0..2 {
                assert!((amps[(l, m)].norm_sqr() - 0.5).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn amplitude_dims_checked() {
        let eig = hermitian_eigendecompose(&sigma_x()).unwrap();
        assert!(transition_amplitudes(&ComplexMatrix::identity(3), &eig, &eig).is_err());
    }
}
