//! Modified Bessel functions of the second kind, orders 0 through 3.
//!
//! `K0` and `K1` come from the power series for `u < 2` and from Steed's
//! continued fraction (Temme's CF2) above. Orders 2 and 3 follow by upward
//! recurrence, which is stable for the second-kind family.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Arguments above this value make `e^{-u}` underflow; `bessel_k` returns 0.
pub const UNDERFLOW_THRESHOLD: f64 = 700.0;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SERIES_LIMIT: f64 = 2.0;

/// Order of a modified Bessel function of the second kind. Only 0..=3 exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BesselOrder(u8);

impl BesselOrder {
    pub const ZERO: Self = BesselOrder(0);
    pub const ONE: Self = BesselOrder(1);
    pub const TWO: Self = BesselOrder(2);
    pub const THREE: Self = BesselOrder(3);

    pub fn new(order: u32) -> Result<Self> {
        if order <= 3 {
            Ok(BesselOrder(order as u8))
        } else {
            Err(Error::domain(
                "BesselOrder::new",
                format!("order {order} not in 0..=3"),
            ))
        }
    }

    pub fn get(self) -> usize {
        self.0 as usize
    }
}

impl TryFrom<u32> for BesselOrder {
    type Error = Error;

    fn try_from(order: u32) -> Result<Self> {
        BesselOrder::new(order)
    }
}

/// Value of `K_n(u)` together with the underflow flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KValue {
    pub value: f64,
    pub underflow: bool,
}

/// `K_order(u)` for `u > 0`.
pub fn bessel_k(order: BesselOrder, u: f64) -> Result<KValue> {
    let (all, underflow) = bessel_k_all(u)?;
    Ok(KValue {
        value: all[order.get()],
        underflow,
    })
}

/// `[K0(u), K1(u), K2(u), K3(u)]` and the underflow flag.
pub fn bessel_k_all(u: f64) -> Result<([f64; 4], bool)> {
    if !(u > 0.0) {
        return Err(Error::domain(
            "bessel_k",
            format!("argument must be positive, got {u}"),
        ));
    }
    if u > UNDERFLOW_THRESHOLD {
        return Ok(([0.0; 4], true));
    }
    let (k0, k1) = if u < SERIES_LIMIT {
        k0_k1_series(u)
    } else {
        k0_k1_continued_fraction(u)
    };
    let k2 = k0 + 2.0 * k1 / u;
    let k3 = k1 + 4.0 * k2 / u;
    Ok(([k0, k1, k2, k3], false))
}

/// Ascending series:
/// `K0 = -(ln(u/2) + γ) I0 + Σ (u²/4)^k / (k!)² H_k` and
/// `K1 = 1/u + ln(u/2) I1 - (u/4) Σ [ψ(k+1) + ψ(k+2)] (u²/4)^k / (k!(k+1)!)`.
fn k0_k1_series(u: f64) -> (f64, f64) {
    let y = 0.25 * u * u;
    let log_half = (0.5 * u).ln();

    let mut term = 1.0;
    let mut harmonic = 0.0;
    let mut i0 = 1.0;
    let mut tail0 = 0.0;
    let mut k = 1.0;
    loop {
        term *= y / (k * k);
        harmonic += 1.0 / k;
        i0 += term;
        tail0 += term * harmonic;
        if term * harmonic.max(1.0) < 1e-18 * tail0.abs().max(i0) {
            break;
        }
        k += 1.0;
    }
    let k0 = -(log_half + EULER_GAMMA) * i0 + tail0;

    let mut term = 1.0;
    let mut psi1 = -EULER_GAMMA;
    let mut psi2 = 1.0 - EULER_GAMMA;
    let mut i1 = 1.0;
    let mut tail1 = psi1 + psi2;
    let mut k = 1.0;
    loop {
        term *= y / (k * (k + 1.0));
        psi1 += 1.0 / k;
        psi2 += 1.0 / (k + 1.0);
        i1 += term;
        let inc = (psi1 + psi2) * term;
        tail1 += inc;
        if inc.abs() < 1e-18 * tail1.abs() {
            break;
        }
        k += 1.0;
    }
    let i1 = 0.5 * u * i1;
    let k1 = 1.0 / u + i1 * log_half - 0.25 * u * tail1;
    (k0, k1)
}

/// Steed's algorithm for the CF2 continued fraction at order zero.
fn k0_k1_continued_fraction(u: f64) -> (f64, f64) {
    const MAX_ITER: usize = 10_000;
    let a1 = 0.25;
    let mut b = 2.0 * (1.0 + u);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 1..MAX_ITER {
        let fi = i as f64;
        a -= 2.0 * fi;
        c = -a * c / (fi + 1.0);
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < 1e-17 {
            break;
        }
    }
    h *= a1;
    let k0 = (PI / (2.0 * u)).sqrt() * (-u).exp() / s;
    let k1 = k0 * (u + 0.5 - h) / u;
    (k0, k1)
}
