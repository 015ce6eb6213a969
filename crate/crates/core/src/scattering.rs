//! Integrand of the first-order corrugation response.
//!
//! Everything here is dimensionless: wavevectors are measured in units of
//! `1/z0` and the imaginary frequency enters as `q = xi z0 / c`, so the vacuum
//! decay constant is `kappa = sqrt(q^2 + |k|^2)`.
//!
//! For a pair of lateral wavevectors `(k, k')` the channel `(p, p')` couples
//! the reflection element `R_{p p'}(k, k')` to the dyad
//! `[e-_{p'}(k')]_m [e+_p(k)]_n` built from the polarization vectors
//!
//! ```text
//! e_TE(k)   = (-k_y, k_x, 0) / |k|
//! e+-_TM(k) = (+-kappa k_x, +-kappa k_y, i |k|^2) / (q |k|)
//! ```

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::materials::Permittivity;

/// Frequencies below this value are clamped before evaluating `q^2 a`.
pub const SMALL_FREQUENCY: f64 = 1e-8;

pub type Matrix3 = [[Complex64; 3]; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarization {
    TE,
    TM,
}

/// Polarization `p` on the incoming wavevector and `p'` on the outgoing one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Channel {
    pub p: Polarization,
    pub p_prime: Polarization,
}

impl Channel {
    pub const TE_TE: Channel = Channel::new(Polarization::TE, Polarization::TE);
    pub const TE_TM: Channel = Channel::new(Polarization::TE, Polarization::TM);
    pub const TM_TE: Channel = Channel::new(Polarization::TM, Polarization::TE);
    pub const TM_TM: Channel = Channel::new(Polarization::TM, Polarization::TM);
    pub const ALL: [Channel; 4] = [Self::TE_TE, Self::TE_TM, Self::TM_TE, Self::TM_TM];

    pub const fn new(p: Polarization, p_prime: Polarization) -> Self {
        Channel { p, p_prime }
    }

    fn tm_count(self) -> i32 {
        (self.p == Polarization::TM) as i32 + (self.p_prime == Polarization::TM) as i32
    }
}

/// Lateral wavevector with its decay constants in vacuum and in the medium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveState {
    pub k: [f64; 2],
    pub magnitude: f64,
    pub q: f64,
    pub kappa: f64,
    /// `None` for the perfect conductor.
    pub kappa_t: Option<f64>,
}

impl WaveState {
    pub fn new(k: [f64; 2], q: f64, eps: Permittivity) -> Self {
        Self::with_magnitude(k, k[0].hypot(k[1]), q, eps)
    }

    /// Same as `new` with a precomputed `|k|`, which callers may know more
    /// accurately than `hypot` of the components.
    pub fn with_magnitude(k: [f64; 2], magnitude: f64, q: f64, eps: Permittivity) -> Self {
        let kappa = q.hypot(magnitude);
        let kappa_t = eps.finite().map(|e| (e * q * q + magnitude * magnitude).sqrt());
        WaveState {
            k,
            magnitude,
            q,
            kappa,
            kappa_t,
        }
    }
}

/// `(S, C) = (sin, cos)` of the angle from `k'` to `k`.
pub fn angle_factors(k: [f64; 2], kp: [f64; 2]) -> Result<(f64, f64)> {
    let nk = k[0].hypot(k[1]);
    let nkp = kp[0].hypot(kp[1]);
    if !(nk > 0.0 && nkp > 0.0) {
        return Err(Error::domain(
            "angle_factors",
            "wavevectors must have non-zero magnitude",
        ));
    }
    Ok(angle_factors_unchecked(k, nk, kp, nkp))
}

fn angle_factors_unchecked(k: [f64; 2], nk: f64, kp: [f64; 2], nkp: f64) -> (f64, f64) {
    let norm = nk * nkp;
    (
        (k[1] * kp[0] - k[0] * kp[1]) / norm,
        (k[0] * kp[0] + k[1] * kp[1]) / norm,
    )
}

/// Polarization vectors with the TM `1/q` factor removed.
fn stripped_vector(pol: Polarization, sign: f64, s: &WaveState) -> [Complex64; 3] {
    let n = s.magnitude;
    match pol {
        Polarization::TE => [
            Complex64::new(-s.k[1] / n, 0.0),
            Complex64::new(s.k[0] / n, 0.0),
            Complex64::new(0.0, 0.0),
        ],
        Polarization::TM => [
            Complex64::new(sign * s.kappa * s.k[0] / n, 0.0),
            Complex64::new(sign * s.kappa * s.k[1] / n, 0.0),
            Complex64::new(0.0, n),
        ],
    }
}

/// Dyad times `q^(number of TM legs)`, finite as `q -> 0`.
fn stripped_outer(channel: Channel, s: &WaveState, sp: &WaveState) -> Matrix3 {
    let out = stripped_vector(channel.p_prime, -1.0, sp);
    let inc = stripped_vector(channel.p, 1.0, s);
    let mut m = [[Complex64::new(0.0, 0.0); 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, e) in row.iter_mut().enumerate() {
            *e = out[i] * inc[j];
        }
    }
    m
}

/// `[e-_{p'}(k')]_m [e+_p(k)]_n` at frequency `q > 0`.
pub fn outer_product_matrix(channel: Channel, k: [f64; 2], kp: [f64; 2], q: f64) -> Result<Matrix3> {
    if !(q > 0.0) {
        return Err(Error::domain(
            "outer_product_matrix",
            format!("frequency must be positive, got {q}"),
        ));
    }
    angle_factors(k, kp)?;
    let s = WaveState::new(k, q, Permittivity::Infinite);
    let sp = WaveState::new(kp, q, Permittivity::Infinite);
    let scale = q.powi(-channel.tm_count());
    let mut m = stripped_outer(channel, &s, &sp);
    for row in m.iter_mut() {
        for e in row.iter_mut() {
            *e *= scale;
        }
    }
    Ok(m)
}

/// The four first-order reflection elements, ordered as `Channel::ALL`.
///
/// They are real for real permittivity. Differences such as
/// `kappa - kappa_t` are rewritten to avoid cancellation at large `eps`.
fn reflection_all(s: &WaveState, sp: &WaveState, eps: Permittivity) -> [f64; 4] {
    let q = s.q;
    let (sn, cs) = angle_factors_unchecked(s.k, s.magnitude, sp.k, sp.magnitude);
    let (ka, kb) = (s.kappa, sp.kappa);
    match (eps, s.kappa_t, sp.kappa_t) {
        (Permittivity::Finite(e), Some(ta), Some(tb)) => {
            let em1 = e - 1.0;
            // kappa - kappa_t and eps kappa - kappa_t
            let d = -em1 * q * q / (ka + ta);
            let g = em1 * ((e + 1.0) * s.magnitude * s.magnitude + e * q * q) / (e * ka + ta);
            let den = q * q - ka * ka * (e + 1.0);
            debug_assert!(den < 0.0 || em1 == 0.0, "TM denominator must be negative");
            let te_te = 2.0 * kb * d / (kb + tb) * cs;
            let te_tm = 2.0 * kb * tb * (-em1 * q / (ka + ta)) / (e * kb + tb) * sn;
            let tm_te = 2.0 * kb * q / (kb + tb) * g * ta * sn / den;
            let tm_tm = -2.0 * kb * g / (e * kb + tb)
                * (e * s.magnitude * sp.magnitude + ta * tb * cs)
                / den;
            [te_te, te_tm, tm_te, tm_tm]
        }
        _ => [
            -2.0 * kb * cs,
            -2.0 * q * sn,
            -2.0 * q * kb / ka * sn,
            2.0 / ka * (s.magnitude * sp.magnitude + q * q * cs),
        ],
    }
}

/// First-order reflection element `R_{p p'}(k, k')` at frequency `q > 0`.
pub fn reflection_first_order(
    channel: Channel,
    k: [f64; 2],
    kp: [f64; 2],
    q: f64,
    eps: Permittivity,
) -> Result<f64> {
    if !(q > 0.0) {
        return Err(Error::domain(
            "reflection_first_order",
            format!("frequency must be positive, got {q}"),
        ));
    }
    angle_factors(k, kp)?;
    let s = WaveState::new(k, q, eps);
    let sp = WaveState::new(kp, q, eps);
    let all = reflection_all(&s, &sp, eps);
    let idx = Channel::ALL.iter().position(|c| *c == channel).unwrap();
    Ok(all[idx])
}

fn assemble(s: &WaveState, sp: &WaveState, eps: Permittivity, z0: f64) -> Matrix3 {
    let q = s.q;
    let r = reflection_all(s, sp, eps);
    let pref = (-(s.kappa + sp.kappa) * z0).exp() / (2.0 * sp.kappa);
    let mut out = [[Complex64::new(0.0, 0.0); 3]; 3];
    for (ch, rc) in Channel::ALL.iter().zip(r) {
        let m = stripped_outer(*ch, s, sp);
        let w = pref * rc * q.powi(2 - ch.tm_count());
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] += w * m[i][j];
            }
        }
    }
    out
}

/// `a^{mn}_{k, k'}` at frequency `q > 0` and height `z0` (in the length unit
/// of `k`).
pub fn integrand_a(
    k: [f64; 2],
    kp: [f64; 2],
    q: f64,
    z0: f64,
    eps: Permittivity,
) -> Result<Matrix3> {
    if !(q > 0.0 && z0 > 0.0) {
        return Err(Error::domain(
            "integrand_a",
            format!("need q > 0 and z0 > 0, got q = {q}, z0 = {z0}"),
        ));
    }
    angle_factors(k, kp)?;
    let s = WaveState::new(k, q, eps);
    let sp = WaveState::new(kp, q, eps);
    let mut m = assemble(&s, &sp, eps, z0);
    let inv = 1.0 / (q * q);
    for row in m.iter_mut() {
        for e in row.iter_mut() {
            *e *= inv;
        }
    }
    Ok(m)
}

/// `q^2 a^{mn}_{k, k'}` at unit height, finite down to `q = 0`.
pub fn prefactored_integrand(k: [f64; 2], kp: [f64; 2], q: f64, eps: Permittivity) -> Result<Matrix3> {
    if !(q >= 0.0) {
        return Err(Error::domain(
            "prefactored_integrand",
            format!("frequency must be non-negative, got {q}"),
        ));
    }
    angle_factors(k, kp)?;
    let q = q.max(SMALL_FREQUENCY);
    let s = WaveState::new(k, q, eps);
    let sp = WaveState::new(kp, q, eps);
    Ok(assemble(&s, &sp, eps, 1.0))
}

/// Diagonal entries and `Im(a^xz + a^zx)` of `q^2 a` at unit height.
///
/// The inner loop of the retarded integrals; `|k|`, `|k'|` are passed in so
/// the caller can supply values free of cancellation.
#[inline]
pub fn reduced_integrand(
    k: [f64; 2],
    nk: f64,
    kp: [f64; 2],
    nkp: f64,
    q: f64,
    eps: Permittivity,
) -> [f64; 4] {
    let q = q.max(SMALL_FREQUENCY);
    let s = WaveState::with_magnitude(k, nk, q, eps);
    let sp = WaveState::with_magnitude(kp, nkp, q, eps);
    let [te_te, te_tm, tm_te, tm_tm] = reflection_all(&s, &sp, eps);
    let (ka, kb) = (s.kappa, sp.kappa);
    let inv = 1.0 / (nk * nkp);
    let (kx, ky, px, py) = (k[0], k[1], kp[0], kp[1]);
    let q2 = q * q;

    let mut xx = te_te * q2 * py * ky;
    let mut yy = te_te * q2 * px * kx;
    let mut zz = 0.0;
    let mut xz = 0.0;

    xx -= tm_te * q * py * ka * kx;
    yy += tm_te * q * px * ka * ky;
    xz -= tm_te * q * py * nk * nk;

    xx += te_tm * q * kb * px * ky;
    yy -= te_tm * q * kb * py * kx;
    xz -= te_tm * q * ky * nkp * nkp;

    xx -= tm_tm * kb * px * ka * kx;
    yy -= tm_tm * kb * py * ka * ky;
    zz -= tm_tm * nkp * nkp * nk * nk;
    xz += tm_tm * (ka * kx * nkp * nkp - kb * px * nk * nk);

    let pref = (-(ka + kb)).exp() / (2.0 * kb) * inv;
    [pref * xx, pref * yy, pref * zz, pref * xz]
}

/// Trace of `q^2 a` at unit height assembled from scalar products of the
/// polarization vectors rather than from the dyads.
pub fn trace_integrand(k: [f64; 2], kp: [f64; 2], q: f64, eps: Permittivity) -> Result<f64> {
    let (nk, nkp) = (k[0].hypot(k[1]), kp[0].hypot(kp[1]));
    let (sn, cs) = angle_factors(k, kp)?;
    Ok(trace_integrand_with(k, nk, kp, nkp, sn, cs, q, eps))
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn trace_integrand_with(
    k: [f64; 2],
    nk: f64,
    kp: [f64; 2],
    nkp: f64,
    sn: f64,
    cs: f64,
    q: f64,
    eps: Permittivity,
) -> f64 {
    let q = q.max(SMALL_FREQUENCY);
    let s = WaveState::with_magnitude(k, nk, q, eps);
    let sp = WaveState::with_magnitude(kp, nkp, q, eps);
    let [te_te, te_tm, tm_te, tm_tm] = reflection_all(&s, &sp, eps);
    // e-_{p'}(k') . e+_p(k), times q^(TM legs)
    let dot_te_te = cs;
    let dot_tm_te = s.kappa * sn;
    let dot_te_tm = sp.kappa * sn;
    let dot_tm_tm = -(s.kappa * sp.kappa * cs + nk * nkp);
    let sum = q * q * te_te * dot_te_te
        + q * (tm_te * dot_tm_te + te_tm * dot_te_tm)
        + tm_tm * dot_tm_tm;
    (-(s.kappa + sp.kappa)).exp() / (2.0 * sp.kappa) * sum
}

/// Non-retarded limit of `q^2 a^{mn}` (real parts; the xz slot holds
/// `Im(a^xz + a^zx)`) for a surface of permittivity `eps`.
pub fn vdw_integrand(k: [f64; 2], kp: [f64; 2], eps: Permittivity) -> Result<[f64; 4]> {
    let (nk, nkp) = (k[0].hypot(k[1]), kp[0].hypot(kp[1]));
    let (_, cs) = angle_factors(k, kp)?;
    let factor = match eps {
        Permittivity::Finite(e) => (e - 1.0) / ((e + 1.0) * (e + 1.0)) * (e + cs),
        Permittivity::Infinite => 1.0,
    };
    let w = (-(nk + nkp)).exp() * factor;
    Ok([
        -w * kp[0] * k[0],
        -w * kp[1] * k[1],
        -w * nk * nkp,
        w * (k[0] * nkp - kp[0] * nk),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn angle_examples() {
        assert_eq!(angle_factors([1.0, 0.0], [1.0, 0.0]).unwrap(), (0.0, 1.0));
        assert_eq!(angle_factors([1.0, 0.0], [0.0, 1.0]).unwrap(), (-1.0, 0.0));
        assert!(angle_factors([0.0, 0.0], [1.0, 0.0]).is_err());
    }

    #[test]
    fn outer_product_examples() {
        let m = outer_product_matrix(Channel::TE_TE, [2.0, 0.0], [2.0, 0.0], 0.7).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if (i, j) == (1, 1) { c(1.0, 0.0) } else { c(0.0, 0.0) };
                assert!((m[i][j] - expect).norm() < 1e-15);
            }
        }
        let (k, kp, q) = ([0.3, -1.2], [0.8, 0.5], 0.4);
        let m = outer_product_matrix(Channel::TM_TM, k, kp, q).unwrap();
        let (nk, nkp) = (k[0].hypot(k[1]), kp[0].hypot(kp[1]));
        let zz = -(nkp * nkp) * (nk * nk) / (q * q * nk * nkp);
        assert!((m[2][2] - c(zz, 0.0)).norm() < 1e-14);
        let te = outer_product_matrix(Channel::TE_TE, k, kp, q).unwrap();
        for i in 0..3 {
            assert_eq!(te[2][i], c(0.0, 0.0));
            assert_eq!(te[i][2], c(0.0, 0.0));
        }
    }

    #[test]
    fn vacuum_surface_reflects_nothing() {
        let one = Permittivity::Finite(1.0);
        for ch in Channel::ALL {
            let r = reflection_first_order(ch, [0.4, 0.9], [-1.1, 0.3], 0.8, one).unwrap();
            assert_eq!(r, 0.0);
        }
    }

    #[test]
    fn cross_channels_vanish_for_collinear() {
        for eps in [Permittivity::Finite(3.0), Permittivity::Infinite] {
            for ch in [Channel::TE_TM, Channel::TM_TE] {
                let r = reflection_first_order(ch, [0.5, 0.5], [1.5, 1.5], 0.3, eps).unwrap();
                assert!(r.abs() < 1e-15);
            }
        }
    }

    #[test]
    fn reduced_matches_full_matrix() {
        for eps in [Permittivity::Finite(4.2), Permittivity::Infinite] {
            let (k, kp, q) = ([0.7, 0.4], [-0.3, 0.4], 0.9);
            let full = prefactored_integrand(k, kp, q, eps).unwrap();
            let red = reduced_integrand(k, k[0].hypot(k[1]), kp, kp[0].hypot(kp[1]), q, eps);
            assert!(rel(full[0][0].re, red[0]) < 1e-13);
            assert!(rel(full[1][1].re, red[1]) < 1e-13);
            assert!(rel(full[2][2].re, red[2]) < 1e-13);
            assert!(rel((full[0][2] + full[2][0]).im, red[3]) < 1e-13);
        }
    }

    #[test]
    fn doubling_height_multiplies_by_decay() {
        let eps = Permittivity::Finite(6.0);
        let (k, kp, q) = ([0.5, 0.2], [0.1, -0.6], 0.35);
        let a1 = integrand_a(k, kp, q, 1.0, eps).unwrap();
        let a2 = integrand_a(k, kp, q, 2.0, eps).unwrap();
        let decay = (-(q.hypot(0.5f64.hypot(0.2)) + q.hypot(0.1f64.hypot(0.6)))).exp();
        for i in 0..3 {
            for j in 0..3 {
                assert!((a2[i][j] - a1[i][j] * decay).norm() <= 1e-14 * a1[i][j].norm().max(1e-300));
            }
        }
    }

    #[test]
    fn small_frequency_is_finite() {
        let eps = Permittivity::Finite(1.0 + 0.2f64.powi(2) / 1e-20);
        let m = prefactored_integrand([0.5, 0.1], [-0.5, 0.1], 0.0, eps).unwrap();
        for row in m {
            for e in row {
                assert!(e.re.is_finite() && e.im.is_finite());
            }
        }
    }

    #[test]
    fn trace_route_matches_dyads() {
        for eps in [Permittivity::Finite(2.5), Permittivity::Finite(1e6), Permittivity::Infinite] {
            let (k, kp, q) = ([0.9, -0.2], [0.3, 1.4], 0.6);
            let m = prefactored_integrand(k, kp, q, eps).unwrap();
            let tr = (m[0][0] + m[1][1] + m[2][2]).re;
            assert!(rel(tr, trace_integrand(k, kp, q, eps).unwrap()) < 1e-12);
        }
    }

    #[test]
    fn retarded_tends_to_nonretarded() {
        // q -> 0 with eps held fixed
        let eps = Permittivity::Finite(5.0);
        let (k, kp) = ([0.9, 0.4], [-0.2, 0.4]);
        let v = vdw_integrand(k, kp, eps).unwrap();
        let r = reduced_integrand(k, k[0].hypot(k[1]), kp, kp[0].hypot(kp[1]), 1e-7, eps);
        for i in 0..4 {
            assert!((r[i] - v[i]).abs() < 1e-6 * v[i].abs().max(1e-3), "{i}: {} {}", r[i], v[i]);
        }
    }

    fn random_vec(x: f64, y: f64) -> [f64; 2] {
        [x, y]
    }

    proptest! {
        #[test]
        fn angle_identity(a in -5.0f64..5.0, b in -5.0f64..5.0, c_ in -5.0f64..5.0, d in -5.0f64..5.0) {
            prop_assume!(a.hypot(b) > 1e-3 && c_.hypot(d) > 1e-3);
            let (s, cc) = angle_factors([a, b], [c_, d]).unwrap();
            prop_assert!((s * s + cc * cc - 1.0).abs() < 1e-14);
        }

        #[test]
        fn tm_denominator_negative(q in 1e-6f64..50.0, k in 0.0f64..50.0, eps in 1.0f64..1e12) {
            let kappa = q.hypot(k);
            prop_assert!(q * q - kappa * kappa * (eps + 1.0) < 0.0);
        }

        #[test]
        fn vanishes_at_unit_permittivity(a in -3.0f64..3.0, b in -3.0f64..3.0,
                                         c_ in -3.0f64..3.0, d in -3.0f64..3.0, q in 1e-4f64..5.0) {
            prop_assume!(a.hypot(b) > 1e-3 && c_.hypot(d) > 1e-3);
            for ch in Channel::ALL {
                let r = reflection_first_order(ch, [a, b], [c_, d], q, Permittivity::Finite(1.0)).unwrap();
                prop_assert_eq!(r, 0.0);
            }
        }

        #[test]
        fn realness_pattern(a in -3.0f64..3.0, b in -3.0f64..3.0,
                            c_ in -3.0f64..3.0, d in -3.0f64..3.0, q in 1e-3f64..5.0, e in 1.0f64..50.0) {
            prop_assume!(a.hypot(b) > 1e-3 && c_.hypot(d) > 1e-3);
            let m = integrand_a(random_vec(a, b), random_vec(c_, d), q, 1.0, Permittivity::Finite(e)).unwrap();
            let scale = m.iter().flatten().fold(0.0f64, |s, x| s.max(x.norm())).max(1e-300);
            for i in 0..3 {
                prop_assert!(m[i][i].im.abs() <= 1e-15 * scale);
            }
            prop_assert!(m[0][2].re.abs() <= 1e-15 * scale);
            prop_assert!(m[2][0].re.abs() <= 1e-15 * scale);
        }

        #[test]
        fn mirror_under_reversed_modulation(kx in -3.0f64..3.0, ky in -3.0f64..3.0,
                                            u in 0.1f64..3.0, q in 1e-3f64..3.0) {
            // (k', k' - u x) versus (k'', k'' + u x) with k'' the x-mirror of k'
            let k = [kx, ky];
            let kp = [kx - u, ky];
            let km = [-kx, ky];
            let kpm = [-kx + u, ky];
            prop_assume!(kx.hypot(ky) > 1e-3 && (kx - u).hypot(ky) > 1e-3);
            let eps = Permittivity::Finite(3.0);
            let a = reduced_integrand(k, kx.hypot(ky), kp, (kx - u).hypot(ky), q, eps);
            let b = reduced_integrand(km, kx.hypot(ky), kpm, (kx - u).hypot(ky), q, eps);
            for i in 0..3 {
                prop_assert!((a[i] - b[i]).abs() <= 1e-13 * a[i].abs().max(1e-12));
            }
            prop_assert!((a[3] + b[3]).abs() <= 1e-13 * a[3].abs().max(1e-12));
        }

        #[test]
        fn perfect_conductor_limit(a in -1.0f64..1.0, b in -1.0f64..1.0,
                                   c_ in -1.0f64..1.0, d in -1.0f64..1.0, q in 0.5f64..5.0) {
            prop_assume!(a.hypot(b) > 1e-2 && c_.hypot(d) > 1e-2);
            for ch in Channel::ALL {
                let big = reflection_first_order(ch, [a, b], [c_, d], q, Permittivity::Finite(1e10)).unwrap();
                let inf = reflection_first_order(ch, [a, b], [c_, d], q, Permittivity::Infinite).unwrap();
                prop_assert!((big - inf).abs() <= 1e-4 * inf.abs().max(1e-12), "{:?}: {} vs {}", ch, big, inf);
            }
        }
    }
}
