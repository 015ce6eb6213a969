//! Fixtures shared by the benchmarks.

use casimir_lateral::constants::GOLD_PLASMA_FREQUENCY;
use casimir_lateral::{Geometry, ParticleModel, PermittivityModel};

pub fn gold() -> PermittivityModel {
    PermittivityModel::Plasma {
        omega_p: GOLD_PLASMA_FREQUENCY,
    }
}

/// Gold spheroid with aspect ratio 2 tilted by `theta` in the xz plane.
pub fn spheroid(theta: f64) -> ParticleModel {
    ParticleModel::new(2.0, 1e-24, gold(), theta, 0.0).expect("valid particle")
}

pub fn geometry(lambda_over_z0: f64, height: f64) -> Geometry {
    Geometry::from_period_ratio(height / 20.0, lambda_over_z0, height).expect("valid geometry")
}
