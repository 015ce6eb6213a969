//! Dielectric response at imaginary frequency.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constants::SPEED_OF_LIGHT;
use crate::error::{Error, Result};

/// Material description used for both the particle and the surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PermittivityModel {
    /// Lossless plasma model `1 + omega_p^2 / xi^2`, `omega_p` in rad/s.
    Plasma { omega_p: f64 },
    /// Frequency-independent permittivity.
    Constant { epsilon: f64 },
    /// Ideal metal, `epsilon = +inf` at every frequency.
    PerfectConductor,
}

impl PermittivityModel {
    pub fn plasma(omega_p: f64) -> Result<Self> {
        let m = PermittivityModel::Plasma { omega_p };
        m.validate()?;
        Ok(m)
    }

    pub fn constant(epsilon: f64) -> Result<Self> {
        let m = PermittivityModel::Constant { epsilon };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            PermittivityModel::Plasma { omega_p } if !(omega_p > 0.0 && omega_p.is_finite()) => {
                Err(Error::invalid("omega_p", format!("must be positive, got {omega_p}")))
            }
            PermittivityModel::Constant { epsilon } if !(epsilon >= 1.0 && epsilon.is_finite()) => {
                Err(Error::invalid("epsilon", format!("must be >= 1, got {epsilon}")))
            }
            _ => Ok(()),
        }
    }

    /// Plasma frequency, if the model has one.
    pub fn plasma_frequency(&self) -> Option<f64> {
        match *self {
            PermittivityModel::Plasma { omega_p } => Some(omega_p),
            _ => None,
        }
    }

    /// True when `epsilon` depends on frequency.
    pub fn is_dispersive(&self) -> bool {
        matches!(self, PermittivityModel::Plasma { .. })
    }
}

/// Permittivity value: finite, or the perfect-conductor limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Permittivity {
    Finite(f64),
    Infinite,
}

impl Permittivity {
    pub fn finite(self) -> Option<f64> {
        match self {
            Permittivity::Finite(e) => Some(e),
            Permittivity::Infinite => None,
        }
    }

    /// `(eps - 1) / (eps + 1)^2`, zero at `eps = +inf`.
    pub fn reflection_weight(self) -> f64 {
        match self {
            Permittivity::Finite(e) => (e - 1.0) / ((e + 1.0) * (e + 1.0)),
            Permittivity::Infinite => 0.0,
        }
    }
}

/// `epsilon(i xi)` for `xi >= 0` in rad/s.
pub fn permittivity(model: &PermittivityModel, xi: f64) -> Result<Permittivity> {
    if !(xi >= 0.0) {
        return Err(Error::domain(
            "permittivity",
            format!("frequency must be non-negative, got {xi}"),
        ));
    }
    Ok(match *model {
        PermittivityModel::Plasma { omega_p } => {
            if xi == 0.0 {
                Permittivity::Infinite
            } else {
                let r = omega_p / xi;
                Permittivity::Finite(1.0 + r * r)
            }
        }
        PermittivityModel::Constant { epsilon } => Permittivity::Finite(epsilon),
        PermittivityModel::PerfectConductor => Permittivity::Infinite,
    })
}

/// Susceptibility `epsilon(i xi) - 1`, or `None` where `epsilon` is infinite.
/// Unlike `permittivity(..) - 1` it keeps full precision when `epsilon` is
/// close to one.
pub fn susceptibility(model: &PermittivityModel, xi: f64) -> Result<Option<f64>> {
    Ok(match permittivity(model, xi)? {
        Permittivity::Infinite => None,
        Permittivity::Finite(e) => Some(match *model {
            PermittivityModel::Plasma { omega_p } => {
                let r = omega_p / xi;
                r * r
            }
            _ => e - 1.0,
        }),
    })
}

/// Plasma wavelength `2 pi c / omega_p` in metres.
pub fn plasma_wavelength(omega_p: f64) -> Result<f64> {
    if !(omega_p > 0.0) {
        return Err(Error::invalid("omega_p", format!("must be positive, got {omega_p}")));
    }
    Ok(2.0 * PI * SPEED_OF_LIGHT / omega_p)
}
