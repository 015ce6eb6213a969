//! Adaptive quadrature: Gauss-Kronrod (10, 21) with a global priority queue,
//! an exponential map for semi-infinite ranges, and a periodic trapezoid rule
//! for angular integrals.
//!
//! The engine is vector valued so that all tensor components of a physical
//! integrand share one set of nodes. Integrands may themselves be the result
//! of an inner quadrature; they then report an error alongside each value and
//! that error is propagated outward without driving further subdivision.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Kronrod abscissae on [-1, 1] (non-negative half, descending).
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

/// Kronrod weights matching `XGK`.
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_600_525_793_964,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Gauss weights for the nodes `XGK[1], XGK[3], .., XGK[9]`.
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

const EPMACH: f64 = f64::EPSILON;
/// Relative floor, in units of the integral of |f|, below which error
/// targets are not pursued.
const ROUNDOFF_FLOOR: f64 = 100.0 * EPMACH;
const UFLOW: f64 = f64::MIN_POSITIVE;

/// Lower end of the exponential map, relative to the integrand scale.
const LOWER_CUTOFF: f64 = 1e-15;
/// Largest exponent reachable by tail extension.
const MAX_LOG_RANGE: f64 = 700.0;

/// User-facing integration controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Evaluation budget of each adaptive call.
    pub max_evaluations: usize,
    /// Semi-infinite ranges are first truncated at this many decay lengths.
    pub tail_cutoff_multiplier: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            rel_tol: 1e-8,
            abs_tol: 0.0,
            max_evaluations: 200_000,
            tail_cutoff_multiplier: 40.0,
        }
    }
}

impl QuadratureConfig {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        QuadratureConfig {
            rel_tol,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::invalid(
                "rel_tol",
                format!("must lie in (0, 1), got {}", self.rel_tol),
            ));
        }
        if !(self.abs_tol >= 0.0) {
            return Err(Error::invalid(
                "abs_tol",
                format!("must be non-negative, got {}", self.abs_tol),
            ));
        }
        if self.max_evaluations < 21 {
            return Err(Error::invalid(
                "max_evaluations",
                format!("must be at least 21, got {}", self.max_evaluations),
            ));
        }
        if !(self.tail_cutoff_multiplier > 0.0) {
            return Err(Error::invalid(
                "tail_cutoff_multiplier",
                format!("must be positive, got {}", self.tail_cutoff_multiplier),
            ));
        }
        Ok(())
    }

    pub(crate) fn tolerance(&self) -> Tolerance {
        Tolerance {
            rel: self.rel_tol,
            abs: self.abs_tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

/// Target accuracy: `error <= max(abs, rel * |value|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
}

impl Tolerance {
    pub fn scaled(self, factor: f64) -> Self {
        Tolerance {
            rel: self.rel * factor,
            abs: self.abs * factor,
        }
    }
}

/// Integrand value with the error it already carries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<const N: usize> {
    pub value: [f64; N],
    pub error: [f64; N],
}

impl<const N: usize> Estimate<N> {
    pub fn exact(value: [f64; N]) -> Self {
        Estimate {
            value,
            error: [0.0; N],
        }
    }
}

/// Result of a vector-valued integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VecQuadrature<const N: usize> {
    pub value: [f64; N],
    pub error: [f64; N],
    pub evaluations: usize,
    pub converged: bool,
}

impl<const N: usize> VecQuadrature<N> {
    pub fn component(&self, i: usize) -> QuadratureResult {
        QuadratureResult {
            value: self.value[i],
            error_estimate: self.error[i],
            evaluations: self.evaluations,
        }
    }

    pub fn into_result(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::Convergence {
                best: self.component(0),
            })
        }
    }
}

fn max_abs<const N: usize>(v: &[f64; N]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

struct Panel<const N: usize> {
    a: f64,
    b: f64,
    value: [f64; N],
    quad_err: [f64; N],
    inner_err: [f64; N],
    abs_value: [f64; N],
    key: f64,
}

impl<const N: usize> PartialEq for Panel<N> {
    fn eq(&self, other: &Self) -> bool {
        self.key.total_cmp(&other.key) == Ordering::Equal
    }
}
impl<const N: usize> Eq for Panel<N> {}
impl<const N: usize> PartialOrd for Panel<N> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<const N: usize> Ord for Panel<N> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key.total_cmp(&other.key)
    }
}

/// One 21-point Gauss-Kronrod panel with the QUADPACK error heuristic.
fn gk21<const N: usize, F>(f: &mut F, a: f64, b: f64) -> Panel<N>
where
    F: FnMut(f64) -> Estimate<N>,
{
    let centr = 0.5 * (a + b);
    let hlgth = 0.5 * (b - a);
    let dhlgth = hlgth.abs();

    let mut fv1 = [[0.0; N]; 10];
    let mut fv2 = [[0.0; N]; 10];
    let mut resg = [0.0; N];
    let mut resk = [0.0; N];
    let mut resabs = [0.0; N];
    let mut inner = [0.0; N];

    let fc = f(centr);
    for c in 0..N {
        resk[c] = WGK[10] * fc.value[c];
        resabs[c] = resk[c].abs();
        inner[c] = WGK[10] * fc.error[c];
    }
    for j in 0..10 {
        let absc = hlgth * XGK[j];
        let f1 = f(centr - absc);
        let f2 = f(centr + absc);
        for c in 0..N {
            fv1[j][c] = f1.value[c];
            fv2[j][c] = f2.value[c];
            let sum = f1.value[c] + f2.value[c];
            resk[c] += WGK[j] * sum;
            resabs[c] += WGK[j] * (f1.value[c].abs() + f2.value[c].abs());
            inner[c] += WGK[j] * (f1.error[c] + f2.error[c]);
            if j % 2 == 1 {
                resg[c] += WG[j / 2] * sum;
            }
        }
    }

    let mut value = [0.0; N];
    let mut quad_err = [0.0; N];
    let mut inner_err = [0.0; N];
    let mut abs_value = [0.0; N];
    for c in 0..N {
        let reskh = 0.5 * resk[c];
        let mut resasc = WGK[10] * (fc.value[c] - reskh).abs();
        for j in 0..10 {
            resasc += WGK[j] * ((fv1[j][c] - reskh).abs() + (fv2[j][c] - reskh).abs());
        }
        let result = resk[c] * hlgth;
        let resabs_c = resabs[c] * dhlgth;
        resasc *= dhlgth;
        let mut err = ((resk[c] - resg[c]) * hlgth).abs();
        if resasc != 0.0 && err != 0.0 {
            err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
        }
        if resabs_c > UFLOW / (50.0 * EPMACH) {
            err = err.max(50.0 * EPMACH * resabs_c);
        }
        value[c] = result;
        abs_value[c] = resabs_c;
        quad_err[c] = err;
        inner_err[c] = inner[c].abs() * dhlgth;
    }
    Panel {
        a,
        b,
        value,
        key: max_abs(&quad_err),
        quad_err,
        inner_err,
        abs_value,
    }
}

/// Globally adaptive GK21 integration that can be seeded with several
/// panels and extended after a first convergence pass.
pub struct Adaptive<const N: usize> {
    heap: BinaryHeap<Panel<N>>,
    done: Vec<Panel<N>>,
    evaluations: usize,
    max_evaluations: usize,
}

impl<const N: usize> Adaptive<N> {
    pub fn new(max_evaluations: usize) -> Self {
        Adaptive {
            heap: BinaryHeap::new(),
            done: Vec::new(),
            evaluations: 0,
            max_evaluations,
        }
    }

    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    /// Add `[a, b]` split into `pieces` equal panels.
    pub fn add<F>(&mut self, f: &mut F, a: f64, b: f64, pieces: usize)
    where
        F: FnMut(f64) -> Estimate<N>,
    {
        let pieces = pieces.max(1);
        let h = (b - a) / pieces as f64;
        for i in 0..pieces {
            let lo = a + h * i as f64;
            let hi = if i + 1 == pieces { b } else { lo + h };
            self.heap.push(gk21(f, lo, hi));
            self.evaluations += 21;
        }
    }

    fn panels(&self) -> impl Iterator<Item = &Panel<N>> {
        self.heap.iter().chain(self.done.iter())
    }

    /// Sums `(value, quadrature error, total error, integral of |f|)` in a
    /// fixed order.
    fn totals(&self) -> ([f64; N], [f64; N], [f64; N], [f64; N]) {
        let mut panels: Vec<&Panel<N>> = self.panels().collect();
        panels.sort_by(|p, q| p.a.total_cmp(&q.a));
        let mut value = [0.0; N];
        let mut quad = [0.0; N];
        let mut total = [0.0; N];
        let mut l1 = [0.0; N];
        for p in panels {
            for c in 0..N {
                value[c] += p.value[c];
                l1[c] += p.abs_value[c];
                quad[c] += p.quad_err[c];
                total[c] += p.quad_err[c] + p.inner_err[c];
            }
        }
        (value, quad, total, l1)
    }

    /// Current estimate.
    pub fn result(&self, converged: bool) -> VecQuadrature<N> {
        let (value, _, error, _) = self.totals();
        VecQuadrature {
            value,
            error,
            evaluations: self.evaluations,
            converged,
        }
    }

    /// Bisect the worst panel until the summed quadrature error meets `tol`
    /// in the max norm over components. Returns false if the budget ran out.
    pub fn refine<F>(&mut self, f: &mut F, tol: Tolerance) -> bool
    where
        F: FnMut(f64) -> Estimate<N>,
    {
        let (mut value, mut quad, total, mut l1) = self.totals();
        let mut inner: [f64; N] = std::array::from_fn(|c| total[c] - quad[c]);
        loop {
            // Cancellation caps the attainable accuracy at a few ulps of the
            // integral of |f|, which matters when the integral vanishes.
            // Resolving the outer integral below the error already carried
            // by the integrand is pointless as well.
            let target = tol
                .abs
                .max(tol.rel * max_abs(&value))
                .max(ROUNDOFF_FLOOR * max_abs(&l1))
                .max(max_abs(&inner));
            if max_abs(&quad) <= target {
                return true;
            }
            let Some(worst) = self.heap.pop() else {
                // Every remaining panel is at the resolution limit.
                return true;
            };
            let mid = 0.5 * (worst.a + worst.b);
            let too_small = (worst.b - worst.a).abs()
                <= 1e3 * EPMACH * worst.a.abs().max(worst.b.abs()).max(UFLOW);
            if too_small || !(worst.a < mid && mid < worst.b) {
                self.done.push(worst);
                continue;
            }
            if self.evaluations + 42 > self.max_evaluations {
                self.heap.push(worst);
                return false;
            }
            let left = gk21(f, worst.a, mid);
            let right = gk21(f, mid, worst.b);
            self.evaluations += 42;
            for c in 0..N {
                value[c] += left.value[c] + right.value[c] - worst.value[c];
                quad[c] += left.quad_err[c] + right.quad_err[c] - worst.quad_err[c];
                l1[c] += left.abs_value[c] + right.abs_value[c] - worst.abs_value[c];
                inner[c] += left.inner_err[c] + right.inner_err[c] - worst.inner_err[c];
            }
            self.heap.push(left);
            self.heap.push(right);
            // Running sums drift; resynchronise occasionally.
            if self.evaluations % (42 * 64) == 0 {
                let (v, q, t, a) = self.totals();
                value = v;
                quad = q;
                l1 = a;
                inner = std::array::from_fn(|c| t[c] - q[c]);
            }
        }
    }
}

/// Vector integral over a finite interval.
pub fn integrate_interval_vec<const N: usize, F>(
    mut f: F,
    a: f64,
    b: f64,
    pieces: usize,
    tol: Tolerance,
    max_evaluations: usize,
) -> VecQuadrature<N>
where
    F: FnMut(f64) -> Estimate<N>,
{
    let mut eng = Adaptive::new(max_evaluations);
    eng.add(&mut f, a, b, pieces);
    let ok = eng.refine(&mut f, tol);
    eng.result(ok)
}

/// Vector integral over `(0, inf)` through `x = scale * e^t`.
///
/// The initial range covers `x / scale` in `range`. Either end
/// is pushed outward while the integrand still carries weight there, which
/// also handles algebraically decaying tails.
pub fn integrate_semi_infinite_vec<const N: usize, F>(
    mut f: F,
    scale: f64,
    range: (f64, f64),
    tol: Tolerance,
    max_evaluations: usize,
) -> VecQuadrature<N>
where
    F: FnMut(f64) -> Estimate<N>,
{
    let mut g = |t: f64| {
        let x = scale * t.exp();
        let e = f(x);
        let mut out = e;
        for c in 0..N {
            out.value[c] = x * e.value[c];
            out.error[c] = x * e.error[c];
        }
        out
    };
    let mut lo = range.0.ln();
    let mut hi = range.1.ln().max(lo + 1.0);
    let mut eng = Adaptive::new(max_evaluations);
    eng.add(&mut g, lo, hi, 8);
    loop {
        if !eng.refine(&mut g, tol) {
            return eng.result(false);
        }
        let current = eng.result(true);
        let target = tol.abs.max(tol.rel * max_abs(&current.value));
        // Weight left at an end: |g| times a few decay lengths in t.
        let at_hi = max_abs(&g(hi).value) * 4.0;
        let at_lo = max_abs(&g(lo).value) * 4.0;
        let mut extended = false;
        if at_hi > 0.01 * target && hi < MAX_LOG_RANGE {
            let next = (hi + (hi - lo).max(8.0)).min(MAX_LOG_RANGE);
            eng.add(&mut g, hi, next, 4);
            hi = next;
            extended = true;
        }
        if at_lo > 0.01 * target && lo > -MAX_LOG_RANGE {
            let next = (lo - 16.0).max(-MAX_LOG_RANGE);
            eng.add(&mut g, next, lo, 2);
            lo = next;
            extended = true;
        }
        if !extended {
            return current;
        }
    }
}

fn scalar<F: FnMut(f64) -> f64>(mut f: F) -> impl FnMut(f64) -> Estimate<1> {
    move |x| Estimate::exact([f(x)])
}

fn finish(r: VecQuadrature<1>) -> Result<QuadratureResult> {
    let out = r.component(0);
    if !out.value.is_finite() {
        return Err(Error::domain("quadrature", "integrand produced a non-finite value"));
    }
    if r.converged {
        Ok(out)
    } else {
        Err(Error::Convergence { best: out })
    }
}

/// `int_a^b f(x) dx`.
pub fn integrate_interval<F>(f: F, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<QuadratureResult>
where
    F: FnMut(f64) -> f64,
{
    cfg.validate()?;
    finish(integrate_interval_vec(
        scalar(f),
        a,
        b,
        1,
        cfg.tolerance(),
        cfg.max_evaluations,
    ))
}

/// `int_0^inf f(x) dx` for integrands decaying on a scale of order one.
pub fn integrate_semi_infinite<F>(f: F, cfg: &QuadratureConfig) -> Result<QuadratureResult>
where
    F: FnMut(f64) -> f64,
{
    integrate_semi_infinite_scaled(f, 1.0, cfg)
}

/// `int_0^inf f(x) dx` with the decay scale of `f` given explicitly.
pub fn integrate_semi_infinite_scaled<F>(
    f: F,
    scale: f64,
    cfg: &QuadratureConfig,
) -> Result<QuadratureResult>
where
    F: FnMut(f64) -> f64,
{
    cfg.validate()?;
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::invalid("scale", format!("must be positive, got {scale}")));
    }
    finish(integrate_semi_infinite_vec(
        scalar(f),
        scale,
        (LOWER_CUTOFF, cfg.tail_cutoff_multiplier),
        cfg.tolerance(),
        cfg.max_evaluations,
    ))
}

/// Periodic trapezoid rule on `[0, 2 pi)` with doubling until two successive
/// estimates agree. Returns `(value, error, evaluations)`.
pub fn periodic_trapezoid<F>(mut f: F, tol: Tolerance, max_points: usize) -> (f64, f64, usize, bool)
where
    F: FnMut(f64) -> f64,
{
    let mut n = 8usize;
    let mut sum = 0.0;
    let mut abs_sum = 0.0;
    for i in 0..n {
        let v = f(2.0 * PI * i as f64 / n as f64);
        sum += v;
        abs_sum += v.abs();
    }
    let mut prev = 2.0 * PI * sum / n as f64;
    let mut evals = n;
    while 2 * n <= max_points {
        // Only the odd nodes of the refined grid are new.
        for i in 0..n {
            let v = f(2.0 * PI * (2 * i + 1) as f64 / (2 * n) as f64);
            sum += v;
            abs_sum += v.abs();
        }
        evals += n;
        n *= 2;
        let h = 2.0 * PI / n as f64;
        let est = h * sum;
        let diff = (est - prev).abs();
        let target = tol.abs.max(tol.rel * (h * abs_sum));
        if diff <= target {
            let err = diff.max(10.0 * EPMACH * h * abs_sum);
            return (est, err, evals, true);
        }
        prev = est;
    }
    (prev, f64::INFINITY, evals, false)
}

/// `int_0^inf dk k int_0^{2 pi} dphi f(k, phi)`.
///
/// The magnitude runs through the semi-infinite map; each angular integral
/// uses the periodic trapezoid rule at a third of the requested tolerance.
pub fn integrate_k_polar<F>(mut f: F, cfg: &QuadratureConfig) -> Result<QuadratureResult>
where
    F: FnMut(f64, f64) -> f64,
{
    cfg.validate()?;
    let inner_tol = cfg.tolerance().scaled(1.0 / 3.0);
    let mut failed = false;
    let mut radial = |k: f64| {
        let (v, e, _, ok) = periodic_trapezoid(|phi| f(k, phi), inner_tol, 1 << 16);
        failed |= !ok;
        Estimate {
            value: [k * v],
            error: [k * e.min(v.abs().max(1.0))],
        }
    };
    let r = integrate_semi_infinite_vec(
        &mut radial,
        1.0,
        (LOWER_CUTOFF, cfg.tail_cutoff_multiplier),
        cfg.tolerance(),
        cfg.max_evaluations,
    );
    if failed {
        return Err(Error::Convergence {
            best: r.component(0),
        });
    }
    finish(r)
}
