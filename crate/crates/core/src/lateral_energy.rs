//! Energy components of the first-order lateral interaction.
//!
//! All components are reported in the dimensionless normalization
//! `V_hat = V z0^4 / (eps0 V_p omega_ref)`, where `V_p` is the particle volume
//! and `omega_ref` is the plasma frequency of the particle (or of the surface
//! when the particle is non-dispersive, or `c / z0` when neither is).
//! `VComponents::si_scale` converts back to SI units.
//!
//! The retarded path integrates the full response over the imaginary
//! frequency and the lateral wavevector plane. The plane integral uses
//! elliptic coordinates with foci at `k' = 0` and `k' = k_c x`, where the
//! integrand has direction singularities:
//!
//! ```text
//! k'_x = u/2 (1 + cosh mu cos nu),  k'_y = u/2 sinh mu sin nu
//! |k'| = u/2 (cosh mu + cos nu),    |k' - k_c x| = u/2 (cosh mu - cos nu)
//! ```
//!
//! with Jacobian `|k'| |k' - k_c x|`. Entries odd in `k'_y` (`xy`, `yz`)
//! integrate to zero, so only `nu` in `[0, pi]` is sampled and doubled.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::constants::{EPSILON_0, HBAR, SPEED_OF_LIGHT};
use crate::error::{Error, Result};
use crate::materials::{permittivity, Permittivity, PermittivityModel};
use crate::polarizability::{ParticleModel, PolarizabilityTensor};
use crate::quadrature::{
    integrate_semi_infinite_vec, integrate_interval_vec, Estimate, QuadratureConfig,
    QuadratureResult, Tolerance, VecQuadrature,
};
use crate::scattering::{reduced_integrand, trace_integrand_with};
use crate::special_functions::bessel_k_all;

const VDW_DIAGONAL: f64 = -3.0 * PI / 64.0;
const VDW_OFF_DIAGONAL: f64 = 3.0 * PI / 32.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Full retarded scattering integrals.
    Retarded,
    /// Closed-form non-retarded limit.
    Vdw,
    /// Retarded integrals with static polarizability and permittivity.
    Cp,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Retarded => "retarded",
            Mode::Vdw => "vdw",
            Mode::Cp => "cp",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "retarded" => Ok(Mode::Retarded),
            "vdw" => Ok(Mode::Vdw),
            "cp" => Ok(Mode::Cp),
            other => Err(Error::invalid(
                "mode",
                format!("expected retarded, vdw or cp, got {other:?}"),
            )),
        }
    }
}

/// Sinusoidal corrugation `h(x) = a cos(k_c x)` below a particle at height
/// `z0`. SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub amplitude: f64,
    pub wavenumber: f64,
    pub height: f64,
}

impl Geometry {
    pub fn new(amplitude: f64, wavenumber: f64, height: f64) -> Result<Self> {
        let g = Geometry {
            amplitude,
            wavenumber,
            height,
        };
        g.validate()?;
        Ok(g)
    }

    /// Geometry from the corrugation period measured in units of `z0`.
    pub fn from_period_ratio(amplitude: f64, lambda_over_z0: f64, height: f64) -> Result<Self> {
        if !(lambda_over_z0 > 0.0 && lambda_over_z0.is_finite()) {
            return Err(Error::invalid(
                "lambda_c_over_z0",
                format!("must be positive, got {lambda_over_z0}"),
            ));
        }
        Self::new(amplitude, 2.0 * PI / (lambda_over_z0 * height), height)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("amplitude", self.amplitude),
            ("wavenumber", self.wavenumber),
            ("height", self.height),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, format!("must be positive, got {v}")));
            }
        }
        if self.amplitude >= self.height {
            return Err(Error::invalid(
                "amplitude",
                format!(
                    "must be below the particle height ({} >= {})",
                    self.amplitude, self.height
                ),
            ));
        }
        Ok(())
    }

    /// Whether `a <= z0 / 10`, where the first-order expansion is trustworthy.
    pub fn is_perturbative(&self) -> bool {
        self.amplitude <= 0.1 * self.height
    }

    /// `u = k_c z0`.
    pub fn u(&self) -> f64 {
        self.wavenumber * self.height
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.wavenumber
    }

    pub fn period_ratio(&self) -> f64 {
        self.period() / self.height
    }
}

/// The four energy components and their sum, normalized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VComponents {
    pub xx: f64,
    pub yy: f64,
    pub zz: f64,
    pub xz: f64,
    /// Always `xx + yy + zz`.
    pub sum: f64,
    /// Error estimates of `xx, yy, zz, xz`.
    pub error: [f64; 4],
    /// Multiply a normalized value by this to obtain SI units.
    pub si_scale: f64,
    /// `omega_ref` of the normalization (rad/s).
    pub reference_frequency: f64,
    pub evaluations: usize,
}

impl VComponents {
    fn from_parts(
        v: [f64; 4],
        error: [f64; 4],
        si_scale: f64,
        reference_frequency: f64,
        evaluations: usize,
    ) -> Self {
        VComponents {
            xx: v[0],
            yy: v[1],
            zz: v[2],
            xz: v[3],
            sum: v[0] + v[1] + v[2],
            error,
            si_scale,
            reference_frequency,
            evaluations,
        }
    }

    pub fn values(&self) -> [f64; 4] {
        [self.xx, self.yy, self.zz, self.xz]
    }

    /// Error bound on `sum`.
    pub fn sum_error(&self) -> f64 {
        self.error[0] + self.error[1] + self.error[2]
    }

    /// `(xx, yy, zz, xz, sum)` in SI units.
    pub fn si(&self) -> [f64; 5] {
        let s = self.si_scale;
        [self.xx * s, self.yy * s, self.zz * s, self.xz * s, self.sum * s]
    }
}

/// Closed-form kernels of the non-retarded limit at `u = k_c z0`, ordered
/// `xx, yy, zz, xz`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VdwKernels {
    pub cond: [f64; 4],
    pub diel: [f64; 4],
    pub underflow: bool,
}

pub fn kernels_vdw(u: f64) -> Result<VdwKernels> {
    let ([_, _, k2, k3], underflow) = bessel_k_all(u)?;
    let (u2, u3, u4) = (u * u, u * u * u, u * u * u * u);
    Ok(VdwKernels {
        cond: [
            u3 * k3 - u4 * k2,
            u3 * k3,
            (16.0 / 3.0 * u2 + u4) * k2 + 2.0 / 3.0 * u3 * k3,
            8.0 / 3.0 * u3 * k2 - u4 * k3,
        ],
        diel: [
            (56.0 / 3.0 * u2 + u4) * k2 - 11.0 / 3.0 * u3 * k3,
            8.0 * u2 * k2 - u3 * k3,
            2.0 * u3 * k3 - u4 * k2,
            u4 * k3 - 16.0 / 3.0 * u3 * k2,
        ],
        underflow,
    })
}

/// `(A, delta)` with `delta` in `(-pi, pi]`.
pub fn amplitude_phase(v: &VComponents) -> Result<(f64, f64)> {
    if v.sum == 0.0 && v.xz == 0.0 {
        return Err(Error::Degenerate);
    }
    let mut delta = v.xz.atan2(v.sum);
    if delta <= -PI {
        delta = PI;
    }
    Ok((v.sum.hypot(v.xz), delta))
}

/// `U(x0) = a hbar / (8 pi^3 eps0) A cos(k_c x0 - delta)` in joules, with
/// the amplitude `A` in SI units.
pub fn lateral_energy(x0: f64, geom: &Geometry, amplitude_si: f64, delta: f64) -> f64 {
    geom.amplitude * HBAR / (8.0 * PI.powi(3) * EPSILON_0)
        * amplitude_si
        * (geom.wavenumber * x0 - delta).cos()
}

/// Stable lateral equilibrium in `[0, lambda_c)`.
pub fn equilibrium_position(geom: &Geometry, delta: f64) -> f64 {
    let period = geom.period();
    let x = ((delta + PI) / geom.wavenumber).rem_euclid(period);
    if x >= period {
        0.0
    } else {
        x
    }
}

/// Evaluates the energy components at a chosen speed of light, which tests
/// inflate to approach the non-retarded limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluator {
    pub quad: QuadratureConfig,
    pub light_speed: f64,
}

impl Default for Evaluator {
    fn default() -> Self {
        Evaluator {
            quad: QuadratureConfig::default(),
            light_speed: SPEED_OF_LIGHT,
        }
    }
}

/// Per-call view with everything reduced to units of `z0`.
struct Scaled<'a> {
    particle: &'a ParticleModel,
    surface: &'a PermittivityModel,
    /// `c / z0`, converting `q` to `xi`.
    frequency_unit: f64,
    omega_ref: f64,
    u: f64,
}

impl Scaled<'_> {
    fn xi(&self, q: f64) -> f64 {
        q * self.frequency_unit
    }

    fn alpha(&self, q: f64) -> Result<PolarizabilityTensor> {
        self.particle.normalized_tensor(self.xi(q))
    }

    fn surface_eps(&self, q: f64) -> Result<Permittivity> {
        permittivity(self.surface, self.xi(q))
    }

    /// `omega_ref z0 / c`.
    fn omega_ref_q(&self) -> f64 {
        self.omega_ref / self.frequency_unit
    }

    /// Smallest material frequency in units of `q`, or 1.
    fn q_scale(&self) -> f64 {
        [self.particle.material.plasma_frequency(), self.surface.plasma_frequency()]
            .into_iter()
            .flatten()
            .map(|w| w / self.frequency_unit)
            .fold(1.0, f64::min)
    }
}

/// `omega_ref` of the normalization for a given speed of light.
pub fn reference_frequency(
    particle: &ParticleModel,
    surface: &PermittivityModel,
    height: f64,
    light_speed: f64,
) -> f64 {
    particle
        .material
        .plasma_frequency()
        .or(surface.plasma_frequency())
        .unwrap_or(light_speed / height)
}

/// `int d^2k' f(k', k' - k_c x)` for `f` returning values already
/// multiplied by the Jacobian, with nested adaptive quadrature in
/// `mu` (outer) and `nu` (inner).
pub(crate) fn plane_integral<const N: usize, F>(
    u: f64,
    q: f64,
    tail: f64,
    tol: Tolerance,
    max_evaluations: usize,
    f: F,
) -> VecQuadrature<N>
where
    F: Fn([f64; 2], f64, [f64; 2], f64) -> [f64; N],
{
    // The integrand carries exp(-(kappa' + kappa'')). Its minimum over the
    // plane is 2 sqrt(q^2 + u^2/4); stop once the exponent is `tail` above.
    let base = (q * q + 0.25 * u * u).sqrt();
    let half_sum = ((base + 0.5 * tail).powi(2) - q * q).sqrt();
    let mu_max = (2.0 * half_sum / u).max(1.0 + 1e-12).acosh();
    let half = 0.5 * u;
    let inner_tol = tol.scaled(1.0 / 3.0);
    let mut failed = false;
    let outer = |mu: f64| {
        let hs = (0.5 * mu).sinh();
        let s2 = 2.0 * hs * hs;
        let sh = mu.sinh();
        let r = integrate_interval_vec(
            |nu: f64| {
                let (sn, cn) = nu.sin_cos();
                let hn = (0.5 * nu).sin();
                let sn2 = 2.0 * hn * hn;
                let cs2 = 2.0 - sn2;
                let n1 = half * (s2 + cs2);
                let n2 = half * (s2 + sn2);
                let ky = half * sh * sn;
                let k1 = [half * (cs2 + s2 * cn), ky];
                let k2 = [half * (s2 * cn - sn2), ky];
                let v = f(k1, n1, k2, n2);
                let jac = 2.0 * n1 * n2;
                let mut out = [0.0; N];
                for c in 0..N {
                    out[c] = jac * v[c];
                }
                Estimate::exact(out)
            },
            0.0,
            PI,
            2,
            inner_tol,
            max_evaluations,
        );
        Estimate {
            value: r.value,
            error: if r.converged { r.error } else { [f64::INFINITY; N] },
        }
    };
    let r = integrate_interval_vec(outer, 0.0, mu_max, 4, tol.scaled(1.0 / 3.0), max_evaluations);
    if r.error.iter().any(|e| e.is_infinite()) {
        failed = true;
    }
    VecQuadrature {
        converged: r.converged && !failed,
        ..r
    }
}

fn convergence_error(r: &VecQuadrature<4>, scale: f64) -> Error {
    Error::Convergence {
        best: QuadratureResult {
            value: (r.value[0] + r.value[1] + r.value[2]) * scale,
            error_estimate: (r.error[0] + r.error[1] + r.error[2]) * scale,
            evaluations: r.evaluations,
        },
    }
}

impl Evaluator {
    pub fn new(quad: QuadratureConfig) -> Self {
        Evaluator {
            quad,
            ..Default::default()
        }
    }

    /// Same evaluator with the speed of light multiplied by `factor`.
    pub fn with_light_speed_factor(self, factor: f64) -> Self {
        Evaluator {
            light_speed: self.light_speed * factor,
            ..self
        }
    }

    fn scaled<'a>(
        &self,
        particle: &'a ParticleModel,
        surface: &'a PermittivityModel,
        geom: &Geometry,
    ) -> Result<Scaled<'a>> {
        self.quad.validate()?;
        particle.validate()?;
        surface.validate()?;
        geom.validate()?;
        if !(self.light_speed > 0.0 && self.light_speed.is_finite()) {
            return Err(Error::invalid(
                "light_speed",
                format!("must be positive, got {}", self.light_speed),
            ));
        }
        Ok(Scaled {
            particle,
            surface,
            frequency_unit: self.light_speed / geom.height,
            omega_ref: reference_frequency(particle, surface, geom.height, self.light_speed),
            u: geom.u(),
        })
    }

    fn si_scale(particle: &ParticleModel, geom: &Geometry, omega_ref: f64) -> f64 {
        EPSILON_0 * particle.volume * omega_ref / geom.height.powi(4)
    }

    pub fn components(
        &self,
        mode: Mode,
        particle: &ParticleModel,
        surface: &PermittivityModel,
        geom: &Geometry,
    ) -> Result<VComponents> {
        match mode {
            Mode::Retarded => self.retarded(particle, surface, geom),
            Mode::Vdw => self.vdw(particle, surface, geom),
            Mode::Cp => self.cp(particle, surface, geom),
        }
    }

    /// Full retarded components.
    pub fn retarded(
        &self,
        particle: &ParticleModel,
        surface: &PermittivityModel,
        geom: &Geometry,
    ) -> Result<VComponents> {
        let sc = self.scaled(particle, surface, geom)?;
        let tol = self.quad.tolerance();
        let tail = self.quad.tail_cutoff_multiplier;
        let budget = self.quad.max_evaluations;
        let u = sc.u;
        let mut failure: Option<Error> = None;

        let integrand = |q: f64| -> Estimate<4> {
            let (alpha, eps) = match (sc.alpha(q), sc.surface_eps(q)) {
                (Ok(a), Ok(e)) => (a, e),
                (Err(e), _) | (_, Err(e)) => {
                    failure.get_or_insert(e);
                    return Estimate::exact([0.0; 4]);
                }
            };
            let plane = plane_integral(u, q, tail, tol.scaled(1.0 / 3.0), budget, |k1, n1, k2, n2| {
                reduced_integrand(k1, n1, k2, n2, q, eps)
            });
            let a = [alpha.xx, alpha.yy, alpha.zz, alpha.xz];
            let mut out = Estimate::exact([0.0; 4]);
            for c in 0..4 {
                out.value[c] = a[c] * plane.value[c];
                out.error[c] = if plane.converged {
                    (a[c] * plane.error[c]).abs()
                } else {
                    f64::INFINITY
                };
            }
            out
        };
        let r = integrate_semi_infinite_vec(
            integrand,
            sc.q_scale(),
            (1e-3 * tol.rel, 0.5 * tail / sc.q_scale()),
            tol,
            budget,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        self.finish_retarded(r, &sc, particle, geom)
    }

    fn finish_retarded(
        &self,
        r: VecQuadrature<4>,
        sc: &Scaled<'_>,
        particle: &ParticleModel,
        geom: &Geometry,
    ) -> Result<VComponents> {
        let norm = 1.0 / sc.omega_ref_q();
        // The xz slot holds int Im(a^xz + a^zx); V_xz = i * i * that.
        let v = [
            r.value[0] * norm,
            r.value[1] * norm,
            r.value[2] * norm,
            -r.value[3] * norm,
        ];
        if !r.converged || r.error.iter().any(|e| !e.is_finite()) {
            return Err(convergence_error(&r, norm));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::domain("retarded", "non-finite integral"));
        }
        let err = r.error.map(|e| e * norm);
        Ok(VComponents::from_parts(
            v,
            err,
            Self::si_scale(particle, geom, sc.omega_ref),
            sc.omega_ref,
            r.evaluations,
        ))
    }

    /// Retarded integrals with `alpha(0)` and `eps(0)`.
    pub fn cp(
        &self,
        particle: &ParticleModel,
        surface: &PermittivityModel,
        geom: &Geometry,
    ) -> Result<VComponents> {
        let sc = self.scaled(particle, surface, geom)?;
        let tol = self.quad.tolerance();
        let tail = self.quad.tail_cutoff_multiplier;
        let budget = self.quad.max_evaluations;
        let alpha = particle.normalized_tensor(0.0)?;
        let eps = permittivity(surface, 0.0)?;
        let u = sc.u;
        let integrand = |q: f64| -> Estimate<4> {
            let plane = plane_integral(u, q, tail, tol.scaled(1.0 / 3.0), budget, |k1, n1, k2, n2| {
                reduced_integrand(k1, n1, k2, n2, q, eps)
            });
            Estimate {
                value: plane.value,
                error: if plane.converged { plane.error } else { [f64::INFINITY; 4] },
            }
        };
        let mut r = integrate_semi_infinite_vec(integrand, 1.0, (1e-3 * tol.rel, 0.5 * tail), tol, budget);
        let a = [alpha.xx, alpha.yy, alpha.zz, alpha.xz];
        for c in 0..4 {
            r.value[c] *= a[c];
            r.error[c] *= a[c].abs();
        }
        self.finish_retarded(r, &sc, particle, geom)
    }

    /// Closed-form non-retarded components.
    pub fn vdw(
        &self,
        particle: &ParticleModel,
        surface: &PermittivityModel,
        geom: &Geometry,
    ) -> Result<VComponents> {
        let sc = self.scaled(particle, surface, geom)?;
        if !particle.material.is_dispersive() && !surface.is_dispersive() {
            return Err(Error::Divergent(
                "a non-dispersive particle above a non-dispersive surface has no \
                 convergent non-retarded frequency integral"
                    .into(),
            ));
        }
        let kernels = kernels_vdw(sc.u)?;
        let si = Self::si_scale(particle, geom, sc.omega_ref);
        if kernels.underflow {
            return Ok(VComponents::from_parts([0.0; 4], [0.0; 4], si, sc.omega_ref, 0));
        }
        let pre = [VDW_DIAGONAL, VDW_DIAGONAL, VDW_DIAGONAL, VDW_OFF_DIAGONAL];
        let mut failure: Option<Error> = None;
        // s = xi / omega_ref
        let integrand = |s: f64| -> Estimate<4> {
            let xi = s * sc.omega_ref;
            let (alpha, eps) = match (particle.normalized_tensor(xi), permittivity(surface, xi)) {
                (Ok(a), Ok(e)) => (a, e),
                (Err(e), _) | (_, Err(e)) => {
                    failure.get_or_insert(e);
                    return Estimate::exact([0.0; 4]);
                }
            };
            let a = [alpha.xx, alpha.yy, alpha.zz, alpha.xz];
            let mut out = [0.0; 4];
            for c in 0..4 {
                let bracket = match eps {
                    Permittivity::Finite(e) => {
                        (e - 1.0) / ((e + 1.0) * (e + 1.0))
                            * (e * kernels.cond[c] + kernels.diel[c])
                    }
                    Permittivity::Infinite => kernels.cond[c],
                };
                out[c] = pre[c] * a[c] * bracket;
            }
            Estimate::exact(out)
        };
        let r = integrate_semi_infinite_vec(
            integrand,
            1.0,
            (1e-6 * self.quad.rel_tol, self.quad.tail_cutoff_multiplier),
            self.quad.tolerance(),
            self.quad.max_evaluations,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        if !r.converged {
            return Err(convergence_error(&r, 1.0));
        }
        Ok(VComponents::from_parts(r.value, r.error, si, sc.omega_ref, r.evaluations))
    }

    /// Retarded `V_sum` assembled from the trace of the response with the
    /// isotropic part `tr(alpha) / 3` of the polarizability. Equal to
    /// `retarded(..).sum` for isotropic particles.
    pub fn retarded_trace_sum(
        &self,
        particle: &ParticleModel,
        surface: &PermittivityModel,
        geom: &Geometry,
    ) -> Result<QuadratureResult> {
        let sc = self.scaled(particle, surface, geom)?;
        let tol = self.quad.tolerance();
        let tail = self.quad.tail_cutoff_multiplier;
        let budget = self.quad.max_evaluations;
        let u = sc.u;
        let mut failure: Option<Error> = None;
        let integrand = |q: f64| -> Estimate<1> {
            let (alpha, eps) = match (sc.alpha(q), sc.surface_eps(q)) {
                (Ok(a), Ok(e)) => (a, e),
                (Err(e), _) | (_, Err(e)) => {
                    failure.get_or_insert(e);
                    return Estimate::exact([0.0]);
                }
            };
            let plane = plane_integral(u, q, tail, tol.scaled(1.0 / 3.0), budget, |k1, n1, k2, n2| {
                // k2 = k1 - u x gives S = -u k1_y / (n1 n2).
                let sn = -u * k1[1] / (n1 * n2);
                let cs = (k1[0] * k2[0] + k1[1] * k2[1]) / (n1 * n2);
                [trace_integrand_with(k1, n1, k2, n2, sn, cs, q, eps)]
            });
            let iso = alpha.trace() / 3.0;
            Estimate {
                value: [iso * plane.value[0]],
                error: [if plane.converged { (iso * plane.error[0]).abs() } else { f64::INFINITY }],
            }
        };
        let r = integrate_semi_infinite_vec(
            integrand,
            sc.q_scale(),
            (1e-3 * tol.rel, 0.5 * tail / sc.q_scale()),
            tol,
            budget,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        let norm = 1.0 / sc.omega_ref_q();
        let out = QuadratureResult {
            value: r.value[0] * norm,
            error_estimate: r.error[0] * norm,
            evaluations: r.evaluations,
        };
        if !r.converged || !out.error_estimate.is_finite() {
            return Err(Error::Convergence { best: out });
        }
        Ok(out)
    }
}

pub fn v_components_retarded(
    particle: &ParticleModel,
    surface: &PermittivityModel,
    geom: &Geometry,
    quad: &QuadratureConfig,
) -> Result<VComponents> {
    Evaluator::new(*quad).retarded(particle, surface, geom)
}

pub fn v_components_vdw(
    particle: &ParticleModel,
    surface: &PermittivityModel,
    geom: &Geometry,
    quad: &QuadratureConfig,
) -> Result<VComponents> {
    Evaluator::new(*quad).vdw(particle, surface, geom)
}

pub fn v_components_cp(
    particle: &ParticleModel,
    surface: &PermittivityModel,
    geom: &Geometry,
    quad: &QuadratureConfig,
) -> Result<VComponents> {
    Evaluator::new(*quad).cp(particle, surface, geom)
}
