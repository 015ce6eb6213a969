//! Regime classification, parameter sweeps and transition search.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lateral_energy::{amplitude_phase, equilibrium_position, Evaluator, Geometry, Mode, VComponents};
use crate::materials::PermittivityModel;
use crate::polarizability::ParticleModel;
use crate::quadrature::QuadratureConfig;

/// Default tolerance on `delta` when deciding peak or valley.
pub const DEFAULT_DELTA_TOL: f64 = 1e-6;
/// Sweeps are restricted to this range of `lambda_c / z0`.
pub const SWEEP_RANGE: (f64, f64) = (0.1, 50.0);
/// Relative width at which the transition search stops.
pub const ROOT_REL_WIDTH: f64 = 1e-4;
/// Tightest tolerance tried when certifying the sign of `v_sum`.
pub const TOLERANCE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RegimeClass {
    /// Equilibrium above the corrugation crests (`delta = pi`).
    Peak,
    /// Equilibrium above the troughs (`delta = 0`).
    Valley,
    /// Equilibrium in between, carrying the phase.
    Intermediate(f64),
}

impl RegimeClass {
    pub fn label(&self) -> &'static str {
        match self {
            RegimeClass::Peak => "peak",
            RegimeClass::Valley => "valley",
            RegimeClass::Intermediate(_) => "intermediate",
        }
    }
}

pub fn classify(delta: f64, delta_tol: f64) -> RegimeClass {
    if (delta.abs() - PI).abs() <= delta_tol {
        RegimeClass::Peak
    } else if delta.abs() <= delta_tol {
        RegimeClass::Valley
    } else {
        RegimeClass::Intermediate(delta)
    }
}

/// Everything except the corrugation period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub particle: ParticleModel,
    pub surface: PermittivityModel,
    /// Particle height `z0` (m).
    pub height: f64,
    /// Corrugation amplitude `a` (m).
    pub amplitude: f64,
}

impl Scenario {
    pub fn geometry(&self, lambda_over_z0: f64) -> Result<Geometry> {
        Geometry::from_period_ratio(self.amplitude, lambda_over_z0, self.height)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub components: VComponents,
    /// Normalized amplitude `A`.
    pub amplitude: f64,
    pub delta: f64,
    pub class: RegimeClass,
    /// Stable lateral equilibrium in `[0, lambda_c)` (m).
    pub equilibrium: f64,
}

impl RegimeReport {
    pub fn new(components: VComponents, geom: &Geometry, delta_tol: f64) -> Result<Self> {
        let (amplitude, delta) = amplitude_phase(&components)?;
        Ok(RegimeReport {
            components,
            amplitude,
            delta,
            class: classify(delta, delta_tol),
            equilibrium: equilibrium_position(geom, delta),
        })
    }

    pub fn amplitude_si(&self) -> f64 {
        self.amplitude * self.components.si_scale
    }
}

/// Evaluate and classify a single configuration.
pub fn evaluate(
    ev: &Evaluator,
    scenario: &Scenario,
    mode: Mode,
    lambda_over_z0: f64,
    delta_tol: f64,
) -> Result<RegimeReport> {
    let geom = scenario.geometry(lambda_over_z0)?;
    let v = ev.components(mode, &scenario.particle, &scenario.surface, &geom)?;
    RegimeReport::new(v, &geom, delta_tol)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub lambda_over_z0: f64,
    pub outcome: Result<RegimeReport, Error>,
}

/// Evenly spaced abscissae over `range`, endpoints included.
pub fn sweep_points(range: (f64, f64), n_points: usize) -> Result<Vec<f64>> {
    let (lo, hi) = range;
    if !(lo >= SWEEP_RANGE.0 && hi <= SWEEP_RANGE.1 && lo < hi) {
        return Err(Error::invalid(
            "range",
            format!(
                "need {} <= min < max <= {}, got [{lo}, {hi}]",
                SWEEP_RANGE.0, SWEEP_RANGE.1
            ),
        ));
    }
    if n_points < 2 {
        return Err(Error::invalid(
            "points",
            format!("need at least 2, got {n_points}"),
        ));
    }
    let step = (hi - lo) / (n_points - 1) as f64;
    Ok((0..n_points)
        .map(|i| if i + 1 == n_points { hi } else { lo + step * i as f64 })
        .collect())
}

/// Evaluate every point of the sweep independently and in parallel. Row
/// order and values do not depend on scheduling.
pub fn sweep(
    ev: &Evaluator,
    scenario: &Scenario,
    mode: Mode,
    range: (f64, f64),
    n_points: usize,
    delta_tol: f64,
) -> Result<Vec<SweepRow>> {
    let points = sweep_points(range, n_points)?;
    Ok(points
        .into_par_iter()
        .map(|x| SweepRow {
            lambda_over_z0: x,
            outcome: evaluate(ev, scenario, mode, x, delta_tol),
        })
        .collect())
}

/// Certified bracket of a zero of `v_sum`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub root: f64,
    pub lo: f64,
    pub hi: f64,
    pub sum_lo: f64,
    pub sum_hi: f64,
    /// Component evaluations spent.
    pub evaluations: usize,
}

impl Transition {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// `v_sum` at `lambda / z0` with a sign that exceeds three times its error
/// estimate, tightening the tolerance as needed.
fn certified_sum(ev: &Evaluator, scenario: &Scenario, mode: Mode, x: f64) -> Result<Option<f64>> {
    let geom = scenario.geometry(x)?;
    let mut quad: QuadratureConfig = ev.quad;
    loop {
        let local = Evaluator { quad, ..*ev };
        let v = local.components(mode, &scenario.particle, &scenario.surface, &geom)?;
        if v.sum.abs() > 3.0 * v.sum_error() {
            return Ok(Some(v.sum));
        }
        if v.sum == 0.0 && v.sum_error() == 0.0 {
            return Ok(Some(0.0));
        }
        if quad.rel_tol <= TOLERANCE_FLOOR * 1.000_001 {
            return Ok(None);
        }
        quad.rel_tol = (quad.rel_tol * 0.1).max(TOLERANCE_FLOOR);
    }
}

/// Locate a sign change of `v_sum` inside `bracket` by trisection with both
/// interior points evaluated concurrently.
pub fn find_transition(
    ev: &Evaluator,
    scenario: &Scenario,
    mode: Mode,
    bracket: (f64, f64),
) -> Result<Transition> {
    let (mut lo, mut hi) = bracket;
    if !(lo > 0.0 && lo < hi && hi.is_finite()) {
        return Err(Error::invalid(
            "bracket",
            format!("need 0 < lo < hi, got [{lo}, {hi}]"),
        ));
    }
    let floor = |lo: f64, hi: f64| Error::ToleranceFloor { lo, hi };
    let (f_lo, f_hi) = rayon::join(
        || certified_sum(ev, scenario, mode, lo),
        || certified_sum(ev, scenario, mode, hi),
    );
    let mut f_lo = f_lo?.ok_or_else(|| floor(lo, hi))?;
    let mut f_hi = f_hi?.ok_or_else(|| floor(lo, hi))?;
    let mut evaluations = 2;
    if f_lo == 0.0 || f_hi == 0.0 {
        let root = if f_lo == 0.0 { lo } else { hi };
        return Ok(Transition {
            root,
            lo: root,
            hi: root,
            sum_lo: 0.0,
            sum_hi: 0.0,
            evaluations,
        });
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoSignChange {
            lo,
            hi,
            f_lo,
            f_hi,
        });
    }
    while (hi - lo) > ROOT_REL_WIDTH * 0.5 * (lo + hi) {
        let w = (hi - lo) / 3.0;
        let (m1, m2) = (lo + w, hi - w);
        let (a, b) = rayon::join(
            || certified_sum(ev, scenario, mode, m1),
            || certified_sum(ev, scenario, mode, m2),
        );
        evaluations += 2;
        let (a, b) = match (a?, b?) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(floor(lo, hi)),
        };
        for (x, fx) in [(m1, a), (m2, b)] {
            if fx == 0.0 {
                return Ok(Transition {
                    root: x,
                    lo: x,
                    hi: x,
                    sum_lo: 0.0,
                    sum_hi: 0.0,
                    evaluations,
                });
            }
        }
        if a.signum() != f_lo.signum() {
            hi = m1;
            f_hi = a;
        } else if b.signum() != a.signum() {
            lo = m1;
            f_lo = a;
            hi = m2;
            f_hi = b;
        } else {
            lo = m2;
            f_lo = b;
        }
    }
    // Linear interpolation inside the certified bracket.
    let root = lo + (hi - lo) * f_lo / (f_lo - f_hi);
    Ok(Transition {
        root,
        lo,
        hi,
        sum_lo: f_lo,
        sum_hi: f_hi,
        evaluations,
    })
}

/// First sign change of `v_sum` on an evenly spaced scan, as a bracket.
pub fn scan_for_bracket(
    ev: &Evaluator,
    scenario: &Scenario,
    mode: Mode,
    range: (f64, f64),
    n_points: usize,
) -> Result<(f64, f64)> {
    let rows = sweep(ev, scenario, mode, range, n_points, DEFAULT_DELTA_TOL)?;
    let mut prev: Option<(f64, f64)> = None;
    for row in &rows {
        let sum = match &row.outcome {
            Ok(r) => r.components.sum,
            Err(e) => return Err(e.clone()),
        };
        if let Some((x0, s0)) = prev {
            if s0.signum() != sum.signum() {
                return Ok((x0, row.lambda_over_z0));
            }
        }
        prev = Some((row.lambda_over_z0, sum));
    }
    let first = rows.first().and_then(|r| r.outcome.as_ref().ok()).map(|r| r.components.sum);
    let last = rows.last().and_then(|r| r.outcome.as_ref().ok()).map(|r| r.components.sum);
    Err(Error::NoSignChange {
        lo: range.0,
        hi: range.1,
        f_lo: first.unwrap_or(f64::NAN),
        f_hi: last.unwrap_or(f64::NAN),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::GOLD_PLASMA_FREQUENCY;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4};

    fn scenario(surface: PermittivityModel, theta: f64) -> Scenario {
        let gold = PermittivityModel::Plasma {
            omega_p: GOLD_PLASMA_FREQUENCY,
        };
        Scenario {
            particle: ParticleModel::new(2.0, 1e-24, gold, theta, 0.0).unwrap(),
            surface,
            height: 30e-9,
            amplitude: 1.5e-9,
        }
    }

    fn gold() -> PermittivityModel {
        PermittivityModel::Plasma {
            omega_p: GOLD_PLASMA_FREQUENCY,
        }
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify(PI, 1e-6), RegimeClass::Peak);
        assert_eq!(classify(0.0, 1e-6), RegimeClass::Valley);
        assert_eq!(classify(FRAC_PI_4, 1e-6), RegimeClass::Intermediate(FRAC_PI_4));
        assert_eq!(classify(PI - 5e-7, 1e-6), RegimeClass::Peak);
        assert_eq!(classify(-2e-7, 1e-6), RegimeClass::Valley);
    }

    #[test]
    fn sweep_contract() {
        let ev = Evaluator::new(QuadratureConfig::with_rel_tol(1e-6));
        let s = scenario(gold(), FRAC_PI_2);
        let rows = sweep(&ev, &s, Mode::Vdw, (1.0, 12.0), 100, DEFAULT_DELTA_TOL).unwrap();
        assert_eq!(rows.len(), 100);
        assert!(rows.windows(2).all(|w| w[0].lambda_over_z0 < w[1].lambda_over_z0));
        for r in &rows {
            let rep = r.outcome.as_ref().unwrap();
            assert!(matches!(rep.class, RegimeClass::Peak | RegimeClass::Valley));
        }
        assert!(sweep(&ev, &s, Mode::Vdw, (0.05, 12.0), 10, DEFAULT_DELTA_TOL).is_err());
        assert!(sweep(&ev, &s, Mode::Vdw, (1.0, 12.0), 1, DEFAULT_DELTA_TOL).is_err());
    }

    #[test]
    fn sweep_is_deterministic() {
        let ev = Evaluator::new(QuadratureConfig::with_rel_tol(1e-6));
        let s = scenario(gold(), FRAC_PI_3);
        let a = sweep(&ev, &s, Mode::Vdw, (0.5, 12.0), 24, DEFAULT_DELTA_TOL).unwrap();
        let b = sweep(&ev, &s, Mode::Vdw, (0.5, 12.0), 24, DEFAULT_DELTA_TOL).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn two_point_sweep_across_root() {
        let ev = Evaluator::new(QuadratureConfig::with_rel_tol(1e-8));
        let s = scenario(gold(), FRAC_PI_2);
        let rows = sweep(&ev, &s, Mode::Vdw, (0.5, 2.0), 2, DEFAULT_DELTA_TOL).unwrap();
        let c0 = rows[0].outcome.as_ref().unwrap().class;
        let c1 = rows[1].outcome.as_ref().unwrap().class;
        assert_eq!(c0, RegimeClass::Valley);
        assert_eq!(c1, RegimeClass::Peak);
    }

    #[test]
    fn perfect_conductor_root_matches_dense_scan() {
        let ev = Evaluator::new(QuadratureConfig::with_rel_tol(1e-9));
        let s = scenario(PermittivityModel::PerfectConductor, FRAC_PI_2);
        let t = find_transition(&ev, &s, Mode::Vdw, (0.5, 1.5)).unwrap();
        assert!(t.width() <= ROOT_REL_WIDTH * t.root);
        // 200-point scan oracle
        let rows = sweep(&ev, &s, Mode::Vdw, (0.5, 1.5), 200, DEFAULT_DELTA_TOL).unwrap();
        let sums: Vec<f64> = rows.iter().map(|r| r.outcome.as_ref().unwrap().components.sum).collect();
        let i = sums.windows(2).position(|w| w[0].signum() != w[1].signum()).unwrap();
        let (x0, x1) = (rows[i].lambda_over_z0, rows[i + 1].lambda_over_z0);
        let scan_root = x0 + (x1 - x0) * sums[i] / (sums[i] - sums[i + 1]);
        assert!((t.root - scan_root).abs() < 1e-3 * scan_root);
        assert!((t.root - 0.711_911_9).abs() < 2e-4);
    }

    #[test]
    fn transition_errors() {
        let ev = Evaluator::new(QuadratureConfig::with_rel_tol(1e-8));
        let s = scenario(gold(), FRAC_PI_2);
        assert!(matches!(
            find_transition(&ev, &s, Mode::Vdw, (2.0, 4.0)),
            Err(Error::NoSignChange { .. })
        ));
        assert!(find_transition(&ev, &s, Mode::Vdw, (4.0, 2.0)).is_err());
    }

    #[test]
    fn dispersive_root_exceeds_perfect_conductor_root() {
        let ev = Evaluator::new(QuadratureConfig::with_rel_tol(1e-9));
        let g = find_transition(&ev, &scenario(gold(), FRAC_PI_2), Mode::Vdw, (0.5, 1.5)).unwrap();
        let pc = find_transition(
            &ev,
            &scenario(PermittivityModel::PerfectConductor, FRAC_PI_2),
            Mode::Vdw,
            (0.5, 1.5),
        )
        .unwrap();
        assert!(g.lo > pc.hi);
        assert!((g.root - 0.934_155_7).abs() < 2e-4);
    }

    #[test]
    fn auto_bracket() {
        let ev = Evaluator::new(QuadratureConfig::with_rel_tol(1e-8));
        let s = scenario(gold(), FRAC_PI_2);
        let (lo, hi) = scan_for_bracket(&ev, &s, Mode::Vdw, (0.2, 10.0), 32).unwrap();
        let t = find_transition(&ev, &s, Mode::Vdw, (lo, hi)).unwrap();
        assert!(lo <= t.root && t.root <= hi);
    }

    #[test]
    fn tilted_particle_is_intermediate() {
        let ev = Evaluator::new(QuadratureConfig::with_rel_tol(1e-8));
        let s = scenario(gold(), FRAC_PI_3);
        let r = evaluate(&ev, &s, Mode::Vdw, 4.0, DEFAULT_DELTA_TOL).unwrap();
        // V_xz < 0 for this orientation, so the phase sits in (-pi, 0).
        match r.class {
            RegimeClass::Intermediate(d) => assert!(d < 0.0 && d > -PI),
            other => panic!("expected intermediate, got {other:?}"),
        }
    }
}
