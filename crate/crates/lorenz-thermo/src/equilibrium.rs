//! Periodic-orbit measures, their free energy, the boundary-perturbation
//! test battery, and the phase-transition scan.

use rayon::prelude::*;
use serde::Serialize;

use crate::cylinders::Subset;
use crate::error::{Error, Result};
use crate::map::{LorenzMap, Side, Symbol};
use crate::periodic::{boundary_periodic_point, PeriodicOrbit};
use crate::potentials::{
    build_bump, phase_family, variation_detailed, variation_series, DepthRule, HeightRule,
    Potential, SummabilityVerdict,
};
use crate::pressure::{
    gap_check, pressure, GapCheck, GapVerdict, PressureOptions,
};

/// The uniform probability measure on a periodic orbit.
#[derive(Debug, Clone, Serialize)]
pub struct AtomicMeasure {
    pub orbit: PeriodicOrbit,
}

impl AtomicMeasure {
    /// Wraps an orbit after checking invariance: pushing every atom one step
    /// along the map permutes the atom set.
    pub fn new(map: &LorenzMap, orbit: PeriodicOrbit) -> Result<Self> {
        let n = orbit.period;
        for j in 0..n {
            let image = map.apply_branch(orbit.word[j], orbit.orbit[j]);
            let target = orbit.orbit[(j + 1) % n];
            if (image - target).abs() > 1e-8 {
                return Err(Error::Precondition(format!(
                    "orbit is not invariant: atom {j} maps {image} away from {target}"
                )));
            }
        }
        Ok(AtomicMeasure { orbit })
    }

    pub fn weight(&self) -> f64 {
        1.0 / self.orbit.period as f64
    }

    pub fn atoms(&self) -> &[f64] {
        &self.orbit.orbit
    }
}

/// Free energy of a measure; periodic-orbit measures have zero entropy, so
/// this is the orbit average of the potential. Values past the sentinel are
/// reported as divergent rather than as errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum FreeEnergy {
    Finite(f64),
    Divergent { witness: f64 },
}

impl FreeEnergy {
    pub fn is_divergent(&self) -> bool {
        matches!(self, FreeEnergy::Divergent { .. })
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            FreeEnergy::Finite(v) => Some(*v),
            FreeEnergy::Divergent { .. } => None,
        }
    }
}

impl std::fmt::Display for FreeEnergy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FreeEnergy::Finite(v) => write!(f, "{v}"),
            FreeEnergy::Divergent { .. } => write!(f, "divergent"),
        }
    }
}

const FE_SENTINEL: f64 = 1e12;

fn side_of_symbol(sym: Symbol) -> Side {
    match sym {
        Symbol::L => Side::Minus,
        Symbol::R => Side::Plus,
    }
}

/// `(1/N) Σ_j φ(ℓ^j p)`, evaluated on the depth-`N` family member so the
/// phase family's orbit averages match its period.
pub fn free_energy(_map: &LorenzMap, phi: &Potential, mu: &AtomicMeasure) -> FreeEnergy {
    let n = mu.orbit.period;
    let mut sum = 0.0;
    let mut witness = 0.0_f64;
    for (&x, &s) in mu.orbit.orbit.iter().zip(mu.orbit.word.iter()) {
        let v = phi.value_at_depth(x, side_of_symbol(s), n);
        if !v.is_finite() || v.abs() > FE_SENTINEL {
            return FreeEnergy::Divergent {
                witness: if v.is_finite() { v } else { witness },
            };
        }
        witness = witness.abs().max(v.abs());
        sum += v;
    }
    let avg = sum / n as f64;
    if avg.abs() > FE_SENTINEL {
        FreeEnergy::Divergent { witness: avg }
    } else {
        FreeEnergy::Finite(avg)
    }
}

/// One instance of the subset-pressure lower bound: pressure over any subset
/// charged by the measure dominates its free energy.
#[derive(Debug, Clone, Serialize)]
pub struct MedCheck {
    pub lhs: f64,
    pub rhs: FreeEnergy,
    pub band: f64,
    pub holds: bool,
}

pub fn proposition_med_check(
    map: &LorenzMap,
    phi: &Potential,
    mu: &AtomicMeasure,
    subset: &Subset,
    n_min: usize,
    n_max: usize,
    opts: PressureOptions,
) -> Result<MedCheck> {
    let tol = 1e-9;
    let supported = match subset {
        Subset::Interval(a, b) => mu
            .atoms()
            .iter()
            .all(|&x| x >= a - tol && x <= b + tol),
        Subset::Points(ps) => mu
            .atoms()
            .iter()
            .all(|&x| ps.iter().any(|&p| (p - x).abs() <= tol)),
    };
    if !supported {
        return Err(Error::Precondition(
            "subset does not carry the orbit measure (nu(S) = 0)".into(),
        ));
    }
    let est = pressure(map, phi, subset, n_min, n_max, opts)?;
    let rhs = free_energy(map, phi, mu);
    let band = 3.0 * est.tail_dispersion() + 1e-9;
    let holds = match rhs {
        FreeEnergy::Finite(v) => est.diverged || est.value >= v - band,
        FreeEnergy::Divergent { .. } => est.diverged,
    };
    Ok(MedCheck {
        lhs: est.value,
        rhs,
        band,
        holds,
    })
}

/// Per-orbit row of the boundary test battery.
#[derive(Debug, Clone, Serialize)]
pub struct BatteryRow {
    pub side: Side,
    pub k: usize,
    pub period: usize,
    pub point: f64,
    /// Orbit average of the unperturbed potential.
    pub orbit_average: f64,
    /// The endpoint Birkhoff limit this average should approach.
    pub target: f64,
    /// Error in the exact Birkhoff-shift identity for the orbit bump.
    pub identity_error: f64,
    /// Pressure estimate of the bump alone.
    pub bump_pressure: f64,
    /// The ceiling `sup_j a_j` the bump pressure must respect.
    pub bump_bound: f64,
}

/// Outcome of the four-part boundary battery.
#[derive(Debug, Clone, Serialize)]
pub struct TheoremBattery {
    pub rows: Vec<BatteryRow>,
    pub limsup_at_zero: f64,
    pub limsup_at_one: f64,
    /// (a) orbit averages converge to the endpoint limits, per side.
    pub orbit_convergence_minus: bool,
    pub orbit_convergence_plus: bool,
    /// (b) the Birkhoff-shift identity holds to 1e-12 on every row.
    pub identity_pass: bool,
    /// (c) every bump pressure stays below its ceiling plus 0.02.
    pub bump_bound_pass: bool,
    /// (d) the total-versus-boundary comparison.
    pub gap: GapCheck,
    pub all_pass: bool,
}

/// Runs the boundary battery: periodic points on both sides, the orbit bump,
/// the exact Birkhoff-shift identity, the bump-pressure ceiling, and the
/// final pressure-gap verdict. Requires a potential declared continuous.
pub fn theorem_a_battery(
    map: &LorenzMap,
    phi: &Potential,
    k_max: usize,
    n_max: usize,
    opts: PressureOptions,
) -> Result<TheoremBattery> {
    if !phi.is_continuous() {
        return Err(Error::Precondition(
            "battery requires a potential declared continuous on [0,1]".into(),
        ));
    }
    if k_max == 0 {
        return Err(Error::Precondition("battery needs k_max >= 1".into()));
    }
    let averages = crate::pressure::boundary_averages(map, phi, (4 * n_max).max(64));
    let limsup0 = averages.limsup0;
    let limsup1 = averages.limsup1;

    let mut jobs = Vec::new();
    for side in [Side::Minus, Side::Plus] {
        for k in 1..=k_max {
            jobs.push((side, k));
        }
    }
    let rows: Result<Vec<BatteryRow>> = jobs
        .par_iter()
        .map(|&(side, k)| {
            let po = boundary_periodic_point(map, k, side)?;
            let target = match side {
                // points right of d shadow the orbit of 0, points left of d
                // the orbit of 1
                Side::Plus => limsup0,
                Side::Minus => limsup1,
            };
            let orbit_average = po.average(|x, s| phi.value_sided(x, side_of_symbol(s)));
            let bump = build_bump(&po, &HeightRule::Harmonic, None)?;
            let perturbed = Potential::sum(phi, &bump);
            // Birkhoff sums along the solved orbit; the bump peaks sit
            // exactly on the orbit points.
            let s_plain: f64 = po
                .orbit
                .iter()
                .zip(po.word.iter())
                .map(|(&x, &s)| phi.value_sided(x, side_of_symbol(s)))
                .sum();
            let s_pert: f64 = po
                .orbit
                .iter()
                .zip(po.word.iter())
                .map(|(&x, &s)| perturbed.value_sided(x, side_of_symbol(s)))
                .sum();
            let height_sum: f64 = (0..po.period).map(|j| 1.0 / (j as f64 + 1.0)).sum();
            let identity_error = (s_pert - s_plain - height_sum).abs();
            let bump_est = pressure(map, &bump, &Subset::full(), 4.min(n_max - 3), n_max, opts)?;
            Ok(BatteryRow {
                side,
                k,
                period: po.period,
                point: po.point,
                orbit_average,
                target,
                identity_error,
                bump_pressure: bump_est.value,
                bump_bound: bump.sup_bound,
            })
        })
        .collect();
    let rows = rows?;

    let convergence = |side: Side| -> bool {
        let errs: Vec<f64> = rows
            .iter()
            .filter(|r| r.side == side)
            .map(|r| (r.orbit_average - r.target).abs())
            .collect();
        match (errs.first(), errs.last()) {
            (Some(&first), Some(&last)) => last <= 0.5 * first + 0.02,
            _ => false,
        }
    };
    let orbit_convergence_minus = convergence(Side::Minus);
    let orbit_convergence_plus = convergence(Side::Plus);
    let identity_pass = rows.iter().all(|r| r.identity_error <= 1e-12);
    let bump_bound_pass = rows
        .iter()
        .all(|r| r.bump_pressure <= r.bump_bound + 0.02);
    let gap = gap_check(map, phi, 3, n_max, opts)?;
    let all_pass = orbit_convergence_minus
        && orbit_convergence_plus
        && identity_pass
        && bump_bound_pass
        && gap.verdict == GapVerdict::Gap;
    Ok(TheoremBattery {
        rows,
        limsup_at_zero: limsup0,
        limsup_at_one: limsup1,
        orbit_convergence_minus,
        orbit_convergence_plus,
        identity_pass,
        bump_bound_pass,
        gap,
        all_pass,
    })
}

/// Phase classification of one parameter value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    MultipleEquilibria,
    NoEquilibriumCandidate,
    UniqueCandidate,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Regime::MultipleEquilibria => write!(f, "multiple-equilibria"),
            Regime::NoEquilibriumCandidate => write!(f, "no-equilibrium-candidate"),
            Regime::UniqueCandidate => write!(f, "unique-candidate"),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PhaseScanRow {
    pub t: f64,
    pub verdict: Option<SummabilityVerdict>,
    pub limit_ratio: f64,
    pub fe_minus: Vec<FreeEnergy>,
    pub fe_plus: Vec<FreeEnergy>,
    /// Whether the orbit free energies blow up along the boundary sequence
    /// (sentinel trip or positive growth in the period).
    pub fe_divergent: bool,
    pub pressure_value: f64,
    pub pressure_diverged: bool,
    pub gap_verdict: Option<GapVerdict>,
    pub regime: Regime,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PhaseScan {
    pub rows: Vec<PhaseScanRow>,
    /// Consecutive grid values straddling the verdict flip.
    pub critical_bracket: Option<(f64, f64)>,
    /// The critical-value formula evaluated over the variation-dominant
    /// cylinder: `λ / (1 − ln x)` for `x` at that cylinder's ends.
    pub formula_range: Option<(f64, f64)>,
    /// Number of regime changes along the grid.
    pub regime_flips: usize,
    /// True when, past the first unique-candidate row, every later row is
    /// unique-candidate as well.
    pub regime_monotone: bool,
}

#[derive(Debug, Clone)]
pub struct PhaseScanConfig {
    pub rule: DepthRule,
    pub n_min: usize,
    pub n_max: usize,
    pub k_max: usize,
    pub variation_samples: usize,
    pub pressure: PressureOptions,
}

impl Default for PhaseScanConfig {
    fn default() -> Self {
        PhaseScanConfig {
            rule: DepthRule::DepthCoupled,
            n_min: 4,
            n_max: 14,
            k_max: 8,
            variation_samples: 9,
            pressure: PressureOptions::default(),
        }
    }
}

/// Detects divergence of the free-energy sequence along the boundary orbits:
/// a sentinel trip, or log-growth in the orbit period.
fn fe_trend_divergent(fes: &[(usize, FreeEnergy)]) -> bool {
    if fes.iter().any(|(_, fe)| fe.is_divergent()) {
        return true;
    }
    let pts: Vec<(f64, f64)> = fes
        .iter()
        .filter_map(|&(n, fe)| fe.finite().map(|v| (n as f64, v.abs())))
        .filter(|&(_, v)| v > 1e-300)
        .map(|(n, v)| (n, v.ln()))
        .collect();
    if pts.len() < 3 {
        return false;
    }
    let m = pts.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in &pts {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let det = m * sxx - sx * sx;
    if det.abs() < 1e-12 {
        return false;
    }
    let slope = (m * sxy - sx * sy) / det;
    slope > 1e-3
}

/// Scans the phase family over a parameter grid. Rows are independent and
/// evaluated in parallel; the boundary orbits are solved once and shared.
pub fn phase_scan(map: &LorenzMap, t_grid: &[f64], cfg: &PhaseScanConfig) -> Result<PhaseScan> {
    if t_grid.is_empty() {
        return Err(Error::Precondition("phase scan needs a nonempty t grid".into()));
    }
    let mut orbits_minus = Vec::new();
    let mut orbits_plus = Vec::new();
    for k in 1..=cfg.k_max {
        match boundary_periodic_point(map, k, Side::Minus) {
            Ok(po) => orbits_minus.push(po),
            Err(Error::NoBoundaryCylinder { .. }) => break,
            Err(e) => return Err(e),
        }
    }
    for k in 1..=cfg.k_max {
        match boundary_periodic_point(map, k, Side::Plus) {
            Ok(po) => orbits_plus.push(po),
            Err(Error::NoBoundaryCylinder { .. }) => break,
            Err(e) => return Err(e),
        }
    }
    let measures_minus: Vec<AtomicMeasure> = orbits_minus
        .iter()
        .map(|po| AtomicMeasure { orbit: po.clone() })
        .collect();
    let measures_plus: Vec<AtomicMeasure> = orbits_plus
        .iter()
        .map(|po| AtomicMeasure { orbit: po.clone() })
        .collect();

    let rows: Vec<PhaseScanRow> = t_grid
        .par_iter()
        .map(|&t| scan_row(map, t, cfg, &measures_minus, &measures_plus))
        .collect();

    let valid: Vec<&PhaseScanRow> = rows.iter().filter(|r| r.error.is_none()).collect();
    let mut critical_bracket = None;
    for w in valid.windows(2) {
        let a = w[0];
        let b = w[1];
        if a.verdict != Some(SummabilityVerdict::Summable)
            && b.verdict == Some(SummabilityVerdict::Summable)
        {
            critical_bracket = Some((a.t, b.t));
            break;
        }
    }
    let mut regime_flips = 0;
    for w in valid.windows(2) {
        if w[0].regime != w[1].regime {
            regime_flips += 1;
        }
    }
    let first_unique = valid.iter().position(|r| r.regime == Regime::UniqueCandidate);
    let regime_monotone = match first_unique {
        Some(i) => valid[i..].iter().all(|r| r.regime == Regime::UniqueCandidate),
        None => true,
    };
    let formula_range = critical_bracket.and_then(|(_, t_hi)| {
        let phi = phase_family(map, t_hi, cfg.rule).ok()?;
        let est = variation_detailed(map, &phi, cfg.n_max, cfg.variation_samples).ok()?;
        let cyl = est.argmax?;
        let rate = |x: f64| {
            if x <= 0.0 {
                0.0
            } else {
                map.lambda() / (1.0 - x.ln())
            }
        };
        let (a, b) = (rate(cyl.lo), rate(cyl.hi));
        Some((a.min(b), a.max(b)))
    });
    Ok(PhaseScan {
        rows,
        critical_bracket,
        formula_range,
        regime_flips,
        regime_monotone,
    })
}

fn scan_row(
    map: &LorenzMap,
    t: f64,
    cfg: &PhaseScanConfig,
    measures_minus: &[AtomicMeasure],
    measures_plus: &[AtomicMeasure],
) -> PhaseScanRow {
    if t == 0.0 {
        return PhaseScanRow {
            t,
            verdict: None,
            limit_ratio: f64::NAN,
            fe_minus: Vec::new(),
            fe_plus: Vec::new(),
            fe_divergent: false,
            pressure_value: f64::NAN,
            pressure_diverged: false,
            gap_verdict: None,
            regime: Regime::NoEquilibriumCandidate,
            error: Some("family is singular at t = 0".into()),
        };
    }
    let inner = || -> Result<PhaseScanRow> {
        let phi = phase_family(map, t, cfg.rule)?;
        let series = variation_series(map, &phi, cfg.n_max, cfg.variation_samples)?;
        let fe_minus: Vec<(usize, FreeEnergy)> = measures_minus
            .iter()
            .map(|mu| (mu.orbit.period, free_energy(map, &phi, mu)))
            .collect();
        let fe_plus: Vec<(usize, FreeEnergy)> = measures_plus
            .iter()
            .map(|mu| (mu.orbit.period, free_energy(map, &phi, mu)))
            .collect();
        let fe_divergent = fe_trend_divergent(&fe_minus) || fe_trend_divergent(&fe_plus);
        let gap = gap_check(map, &phi, cfg.n_min, cfg.n_max, cfg.pressure)?;
        let pressure_value = gap.total.value;
        let pressure_diverged = gap.total.diverged;
        let max_fe = fe_minus
            .iter()
            .chain(fe_plus.iter())
            .filter_map(|(_, fe)| fe.finite())
            .fold(f64::NEG_INFINITY, f64::max);
        let regime = if series.verdict == SummabilityVerdict::Divergent
            && (fe_divergent || max_fe >= pressure_value)
        {
            Regime::MultipleEquilibria
        } else if series.verdict == SummabilityVerdict::Summable
            && gap.verdict == GapVerdict::Gap
        {
            Regime::UniqueCandidate
        } else {
            Regime::NoEquilibriumCandidate
        };
        Ok(PhaseScanRow {
            t,
            verdict: Some(series.verdict),
            limit_ratio: series.limit_ratio,
            fe_minus: fe_minus.into_iter().map(|(_, fe)| fe).collect(),
            fe_plus: fe_plus.into_iter().map(|(_, fe)| fe).collect(),
            fe_divergent,
            pressure_value,
            pressure_diverged,
            gap_verdict: Some(gap.verdict),
            regime,
            error: None,
        })
    };
    match inner() {
        Ok(row) => row,
        Err(e) => PhaseScanRow {
            t,
            verdict: None,
            limit_ratio: f64::NAN,
            fe_minus: Vec::new(),
            fe_plus: Vec::new(),
            fe_divergent: false,
            pressure_value: f64::NAN,
            pressure_diverged: false,
            gap_verdict: None,
            regime: Regime::NoEquilibriumCandidate,
            error: Some(e.to_string()),
        },
    }
}

/// Log-spaced grid helper for parameter scans.
pub fn log_spaced_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && count >= 2);
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (llo + (lhi - llo) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn orbit_13_23() -> (LorenzMap, AtomicMeasure) {
        let map = LorenzMap::doubling();
        let po = boundary_periodic_point(&map, 2, Side::Minus).unwrap();
        let mu = AtomicMeasure::new(&map, po).unwrap();
        (map, mu)
    }

    #[test]
    fn free_energy_basics() {
        let (map, mu) = orbit_13_23();
        assert_eq!(free_energy(&map, &Potential::zero(), &mu), FreeEnergy::Finite(0.0));
        match free_energy(&map, &Potential::identity(), &mu) {
            FreeEnergy::Finite(v) => assert!((v - 0.5).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
        match free_energy(&map, &Potential::constant(2.5), &mu) {
            FreeEnergy::Finite(v) => assert!((v - 2.5).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn free_energy_shift_and_rotation() {
        let (map, mu) = orbit_13_23();
        let phi = Potential::identity();
        let shifted = Potential::sum(&phi, &Potential::constant(0.7));
        let a = free_energy(&map, &phi, &mu).finite().unwrap();
        let b = free_energy(&map, &shifted, &mu).finite().unwrap();
        assert!((b - a - 0.7).abs() < 1e-12);
        // rotate the orbit one step
        let mut rotated = mu.orbit.clone();
        rotated.orbit.rotate_left(1);
        rotated.word.rotate_left(1);
        rotated.point = rotated.orbit[0];
        let mu2 = AtomicMeasure::new(&map, rotated).unwrap();
        let c = free_energy(&map, &phi, &mu2).finite().unwrap();
        assert!((c - a).abs() < 1e-12);
    }

    #[test]
    fn med_check_full_interval() {
        let (map, mu) = orbit_13_23();
        let check = proposition_med_check(
            &map,
            &Potential::zero(),
            &mu,
            &Subset::full(),
            3,
            10,
            PressureOptions::default(),
        )
        .unwrap();
        assert!(check.holds);
        assert!((check.lhs - 2.0_f64.ln()).abs() < 1e-9);
        assert_eq!(check.rhs, FreeEnergy::Finite(0.0));
    }

    #[test]
    fn med_check_orbit_cylinder() {
        let map = LorenzMap::doubling();
        let po = boundary_periodic_point(&map, 3, Side::Plus).unwrap();
        let mu = AtomicMeasure::new(&map, po).unwrap();
        // an interval containing the whole orbit
        let lo = mu.atoms().iter().cloned().fold(f64::INFINITY, f64::min) - 0.01;
        let hi = mu.atoms().iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 0.01;
        let check = proposition_med_check(
            &map,
            &Potential::identity(),
            &mu,
            &Subset::Interval(lo, hi),
            3,
            12,
            PressureOptions::default(),
        )
        .unwrap();
        assert!(check.holds, "lhs {} rhs {:?}", check.lhs, check.rhs);
    }

    #[test]
    fn med_check_rejects_disjoint_subset() {
        let (map, mu) = orbit_13_23();
        let err = proposition_med_check(
            &map,
            &Potential::zero(),
            &mu,
            &Subset::Interval(0.9, 0.95),
            3,
            8,
            PressureOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn battery_zero_potential_passes() {
        let map = LorenzMap::doubling();
        let report =
            theorem_a_battery(&map, &Potential::zero(), 4, 12, PressureOptions::default())
                .unwrap();
        assert!(report.all_pass, "{report:?}");
        assert!((report.gap.margin - 2.0_f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn battery_identity_potential_passes() {
        let map = LorenzMap::doubling();
        let report = theorem_a_battery(
            &map,
            &Potential::identity(),
            6,
            12,
            PressureOptions::default(),
        )
        .unwrap();
        assert!(report.all_pass, "{report:?}");
        assert!(report.rows.iter().all(|r| r.identity_error <= 1e-12));
    }

    #[test]
    fn battery_refuses_discontinuous_potentials() {
        let map = LorenzMap::doubling();
        let phi = Potential::tabulated(
            vec![(0.0, 0.0), (1.0, 1.0)],
            map.d(),
            0.2,
            0.8,
        )
        .unwrap();
        assert!(matches!(
            theorem_a_battery(&map, &phi, 3, 10, PressureOptions::default()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn scan_flags_zero_t() {
        let map = LorenzMap::doubling();
        let cfg = PhaseScanConfig {
            n_max: 8,
            k_max: 3,
            ..Default::default()
        };
        let scan = phase_scan(&map, &[0.0, 2.0], &cfg).unwrap();
        assert!(scan.rows[0].error.is_some());
        assert!(scan.rows[1].error.is_none());
    }

    #[test]
    fn scan_large_t_is_unique_candidate() {
        let map = LorenzMap::doubling();
        let cfg = PhaseScanConfig {
            n_max: 12,
            k_max: 5,
            ..Default::default()
        };
        let scan = phase_scan(&map, &[8.0], &cfg).unwrap();
        let row = &scan.rows[0];
        assert_eq!(row.verdict, Some(SummabilityVerdict::Summable));
        assert_eq!(row.regime, Regime::UniqueCandidate, "{row:?}");
        assert!(!row.fe_divergent);
    }

    #[test]
    fn scan_small_t_is_multiple_equilibria() {
        let map = LorenzMap::doubling();
        let cfg = PhaseScanConfig {
            n_max: 12,
            k_max: 6,
            ..Default::default()
        };
        let scan = phase_scan(&map, &[0.05], &cfg).unwrap();
        let row = &scan.rows[0];
        assert_eq!(row.verdict, Some(SummabilityVerdict::Divergent));
        assert!(row.fe_divergent, "{row:?}");
        assert_eq!(row.regime, Regime::MultipleEquilibria);
    }

    #[test]
    fn log_grid_shape() {
        let g = log_spaced_grid(0.1, 10.0, 5);
        assert_eq!(g.len(), 5);
        assert!((g[0] - 0.1).abs() < 1e-12);
        assert!((g[4] - 10.0).abs() < 1e-9);
        let r1 = g[1] / g[0];
        let r2 = g[3] / g[2];
        assert!((r1 - r2).abs() < 1e-9);
    }
}
