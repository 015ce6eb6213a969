//! Polarizability tensor of a prolate spheroidal particle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::materials::{susceptibility, Permittivity, PermittivityModel};

const SERIES_ECCENTRICITY: f64 = 0.1;

/// Prolate spheroid with its symmetry axis at polar angle `theta` and
/// azimuth `phi` (radians). `volume` is in m^3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParticleModel {
    pub aspect_ratio: f64,
    pub volume: f64,
    pub material: PermittivityModel,
    pub theta: f64,
    pub phi: f64,
}

impl ParticleModel {
    pub fn new(
        aspect_ratio: f64,
        volume: f64,
        material: PermittivityModel,
        theta: f64,
        phi: f64,
    ) -> Result<Self> {
        let p = ParticleModel {
            aspect_ratio,
            volume,
            material,
            theta,
            phi,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.aspect_ratio >= 1.0 && self.aspect_ratio.is_finite()) {
            return Err(Error::invalid(
                "aspect_ratio",
                format!("must be >= 1, got {}", self.aspect_ratio),
            ));
        }
        if !(self.volume > 0.0 && self.volume.is_finite()) {
            return Err(Error::invalid(
                "volume",
                format!("must be positive, got {}", self.volume),
            ));
        }
        if !(0.0..=std::f64::consts::PI).contains(&self.theta) {
            return Err(Error::invalid(
                "theta",
                format!("must lie in [0, pi], got {}", self.theta),
            ));
        }
        if !(0.0..std::f64::consts::TAU).contains(&self.phi) {
            return Err(Error::invalid(
                "phi",
                format!("must lie in [0, 2 pi), got {}", self.phi),
            ));
        }
        self.material.validate()
    }

    pub fn depolarizing_factor(&self) -> f64 {
        depolarizing_factor(self.aspect_ratio).expect("aspect ratio validated")
    }

    /// Tensor at imaginary frequency `xi` (rad/s) in units of `eps0 * V`.
    pub fn normalized_tensor(&self, xi: f64) -> Result<PolarizabilityTensor> {
        let chi = susceptibility(&self.material, xi)?;
        let (par, perp) = principal_from_susceptibility(chi, 1.0, self.depolarizing_factor())?;
        Ok(oriented_tensor(par, perp, self.theta, self.phi))
    }

    /// Tensor for a given particle permittivity, in units of `eps0 * V`.
    pub fn normalized_tensor_for(&self, eps: Permittivity) -> Result<PolarizabilityTensor> {
        let (par, perp) = principal_polarizabilities(eps, 1.0, self.depolarizing_factor())?;
        Ok(oriented_tensor(par, perp, self.theta, self.phi))
    }

    /// Tensor at imaginary frequency `xi` in units of `eps0 * m^3`.
    pub fn tensor(&self, xi: f64) -> Result<PolarizabilityTensor> {
        Ok(self.normalized_tensor(xi)?.scaled(self.volume))
    }
}

/// Depolarizing factor of a prolate spheroid with aspect ratio `r >= 1`.
pub fn depolarizing_factor(r: f64) -> Result<f64> {
    if !(r >= 1.0) {
        return Err(Error::domain(
            "depolarizing_factor",
            format!("aspect ratio must be >= 1, got {r}"),
        ));
    }
    if r.is_infinite() {
        return Ok(0.0);
    }
    // e^2 = 1 - 1/r^2 without cancellation near r = 1.
    let e2 = (r - 1.0) * (r + 1.0) / (r * r);
    let one_minus_e2 = 1.0 / (r * r);
    let e = e2.sqrt();
    let g = if e < SERIES_ECCENTRICITY {
        // (atanh e - e) / e^3 = sum_n e^(2n) / (2n + 3)
        let mut sum = 0.0;
        let mut pow = 1.0;
        let mut n = 0.0;
        while pow > 1e-18 {
            sum += pow / (2.0 * n + 3.0);
            pow *= e2;
            n += 1.0;
        }
        sum
    } else {
        // atanh e = ln((1 + e) r), exact even when e rounds to 1.
        (((1.0 + e) * r).ln() - e) / (e2 * e)
    };
    Ok(one_minus_e2 * g)
}

/// Principal polarizabilities `(alpha_par, alpha_perp)` in units of `eps0`
/// times the unit of `volume`.
pub fn principal_polarizabilities(eps: Permittivity, volume: f64, d: f64) -> Result<(f64, f64)> {
    principal_from_susceptibility(eps.finite().map(|e| e - 1.0), volume, d)
}

/// As [`principal_polarizabilities`], from `chi = eps - 1` (`None` for a
/// perfect conductor).
pub fn principal_from_susceptibility(chi: Option<f64>, volume: f64, d: f64) -> Result<(f64, f64)> {
    if !(volume > 0.0) {
        return Err(Error::invalid("volume", format!("must be positive, got {volume}")));
    }
    if !(d > 0.0 && d <= 1.0 / 3.0 + 1e-15) {
        return Err(Error::invalid("d", format!("must lie in (0, 1/3], got {d}")));
    }
    Ok(match chi {
        Some(chi) => {
            if !(chi >= 0.0) {
                return Err(Error::invalid("epsilon", format!("must be >= 1, got {}", chi + 1.0)));
            }
            (
                volume * chi / (1.0 + chi * d),
                volume * chi / (1.0 + 0.5 * chi * (1.0 - d)),
            )
        }
        None => (volume / d, 2.0 * volume / (1.0 - d)),
    })
}

/// Symmetric 3x3 polarizability tensor stored as its six independent entries.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PolarizabilityTensor {
    pub xx: f64,
    pub yy: f64,
    pub zz: f64,
    pub xy: f64,
    pub xz: f64,
    pub yz: f64,
}

impl PolarizabilityTensor {
    pub fn isotropic(alpha: f64) -> Self {
        PolarizabilityTensor {
            xx: alpha,
            yy: alpha,
            zz: alpha,
            ..Default::default()
        }
    }

    /// Entry `(m, n)` with indices 0, 1, 2 for x, y, z.
    pub fn get(&self, m: usize, n: usize) -> f64 {
        match (m.min(n), m.max(n)) {
            (0, 0) => self.xx,
            (1, 1) => self.yy,
            (2, 2) => self.zz,
            (0, 1) => self.xy,
            (0, 2) => self.xz,
            (1, 2) => self.yz,
            _ => panic!("tensor index ({m}, {n}) out of range"),
        }
    }

    pub fn matrix(&self) -> [[f64; 3]; 3] {
        [
            [self.xx, self.xy, self.xz],
            [self.xy, self.yy, self.yz],
            [self.xz, self.yz, self.zz],
        ]
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy + self.zz
    }

    pub fn scaled(&self, s: f64) -> Self {
        PolarizabilityTensor {
            xx: self.xx * s,
            yy: self.yy * s,
            zz: self.zz * s,
            xy: self.xy * s,
            xz: self.xz * s,
            yz: self.yz * s,
        }
    }
}

/// Rotate `diag(alpha_perp, alpha_perp, alpha_par)` so the symmetry axis
/// points along `(sin theta cos phi, sin theta sin phi, cos theta)`.
pub fn oriented_tensor(par: f64, perp: f64, theta: f64, phi: f64) -> PolarizabilityTensor {
    let diff = par - perp;
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let (s2t, _) = (2.0 * theta).sin_cos();
    let (s2p, _) = (2.0 * phi).sin_cos();
    PolarizabilityTensor {
        xx: perp + diff * st * st * cp * cp,
        yy: perp + diff * st * st * sp * sp,
        zz: perp + diff * ct * ct,
        xy: 0.5 * diff * s2p * st * st,
        xz: 0.5 * diff * s2t * cp,
        yz: 0.5 * diff * s2t * sp,
    }
}
