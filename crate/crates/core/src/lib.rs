//! First-order lateral Casimir-Polder interaction between an anisotropic
//! polarizable nanoparticle and a sinusoidally corrugated dispersive surface.
//!
//! Two independent evaluation paths are provided and cross-check each other:
//!
//! * the fully retarded scattering integrals over imaginary frequency and the
//!   lateral wavevector plane ([`lateral_energy::Evaluator::retarded`]),
//! * the closed-form van der Waals limit built on modified Bessel kernels
//!   ([`lateral_energy::Evaluator::vdw`]).
//!
//! On top of the energy components, [`regimes`] classifies the lateral force
//! regime (peak, valley or intermediate) and locates peak/valley transitions.

pub mod constants;
pub mod error;
pub mod lateral_energy;
pub mod materials;
pub mod polarizability;
pub mod quadrature;
pub mod regimes;
pub mod scattering;
pub mod special_functions;

pub use error::{Error, Result};
pub use lateral_energy::{
    amplitude_phase, equilibrium_position, kernels_vdw, lateral_energy, v_components_cp,
    v_components_retarded, v_components_vdw, Evaluator, Geometry, Mode, VComponents, VdwKernels,
};
pub use materials::{
    permittivity, plasma_wavelength, susceptibility, Permittivity, PermittivityModel,
};
pub use polarizability::{
    depolarizing_factor, oriented_tensor, principal_polarizabilities, ParticleModel,
    PolarizabilityTensor,
};
pub use quadrature::{QuadratureConfig, QuadratureResult};
pub use regimes::{
    classify, find_transition, scan_for_bracket, sweep, RegimeClass, RegimeReport, Scenario,
    SweepRow, Transition,
};
pub use special_functions::{bessel_k, BesselOrder};
