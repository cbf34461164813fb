//! Stage S1: chiral potentials (u, w) from Cauchy data.
//!
//! u = (1/16) [ (phi' - pi)^2 - 4 (phi'' - pi') + m^2 exp(phi) ]
//! w = (1/16) [ (phi' + pi)^2 - 4 (phi'' + pi') + m^2 exp(phi) ]
//!
//! u drives the psi equations (argument x - t), w the chi equations
//! (argument x + t). The derivative of (phi' -+ pi) is expanded as
//! phi'' -+ pi' so each factor comes straight from the data backing instead
//! of differencing an already-differenced quantity.

use thiserror::Error;

use crate::initial_data::{DataError, DataHandle};
use crate::scalar::{real, Scalar};

#[derive(Debug, Error)]
pub enum PotentialError {
    #[error("mass must be positive, got {got}")]
    NonPositiveMass { got: f64 },
    #[error(transparent)]
    Data(#[from] DataError),
}

/// The pair (u, w), exposed as callables; the ODE integrator picks its own
/// query points, so nothing is pre-tabulated.
#[derive(Debug, Clone)]
pub struct PotentialPair<T> {
    data: DataHandle<T>,
    mass: T,
}

/// Validate the mass and bind the potentials to their source data.
pub fn compute_potentials<T: Scalar>(
    data: DataHandle<T>,
    mass: T,
) -> Result<PotentialPair<T>, PotentialError> {
    if !(mass > T::zero()) {
        return Err(PotentialError::NonPositiveMass {
            got: crate::scalar::approx_f64(mass),
        });
    }
    Ok(PotentialPair { data, mass })
}

#[derive(Clone, Copy)]
enum Chirality {
    /// minus signs: u
    U,
    /// plus signs: w
    W,
}

impl<T: Scalar> PotentialPair<T> {
    pub fn mass(&self) -> T {
        self.mass
    }

    /// The source Cauchy data.
    pub fn data(&self) -> &DataHandle<T> {
        &self.data
    }

    pub fn u(&self, x: T) -> Result<T, DataError> {
        self.eval(Chirality::U, x)
    }

    pub fn w(&self, x: T) -> Result<T, DataError> {
        self.eval(Chirality::W, x)
    }

    fn eval(&self, which: Chirality, x: T) -> Result<T, DataError> {
        let d = &self.data;
        let phi = d.phi(x)?;
        let dphi = d.phi_d1(x)?;
        let ddphi = d.phi_d2(x)?;
        let pi = d.pi(x)?;
        let dpi = d.pi_d1(x)?;

        let (lin, dlin) = match which {
            Chirality::U => (dphi - pi, ddphi - dpi),
            Chirality::W => (dphi + pi, ddphi + dpi),
        };
        let four = real::<T>(4.0);
        let sixteenth = real::<T>(1.0 / 16.0);
        Ok(sixteenth * (lin * lin - four * dlin + self.mass * self.mass * phi.exp()))
    }
}
