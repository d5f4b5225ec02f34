//! Birkhoff sums, partition functions, and topological pressure of subsets.
//!
//! The partition function at depth `n` sums `sup exp(S_n φ)` over the
//! cylinders selected by the subset. Everything is carried in log space via
//! a streaming log-sum-exp reduction whose merge order is fixed by the
//! cylinder tree, so parallel runs reproduce serial results bit for bit.

use serde::Serialize;

use crate::cylinders::{self, Subset};
use crate::error::{Error, Result};
use crate::map::{HitPolicy, LorenzMap, Side, Symbol};
use crate::potentials::Potential;

/// Log-space accumulator for `log Σ e^{x_i}`.
///
/// Stored as `(max, Σ e^{x_i − max})`; merging never exponentiates a positive
/// argument, so sums stay finite for exponents up to ±10⁶ and far beyond.
#[derive(Debug, Clone, Copy)]
pub struct LogSum {
    max: f64,
    scaled: f64,
}

impl LogSum {
    pub fn empty() -> Self {
        LogSum {
            max: f64::NEG_INFINITY,
            scaled: 0.0,
        }
    }

    pub fn of(x: f64) -> Self {
        LogSum { max: x, scaled: 1.0 }
    }

    pub fn push(&mut self, x: f64) {
        *self = self.merge(LogSum::of(x));
    }

    pub fn merge(self, other: LogSum) -> LogSum {
        if self.scaled == 0.0 {
            return other;
        }
        if other.scaled == 0.0 {
            return self;
        }
        if self.max >= other.max {
            LogSum {
                max: self.max,
                scaled: self.scaled + other.scaled * (other.max - self.max).exp(),
            }
        } else {
            LogSum {
                max: other.max,
                scaled: other.scaled + self.scaled * (self.max - other.max).exp(),
            }
        }
    }

    /// `log Σ e^{x_i}`; negative infinity for the empty sum.
    pub fn value(&self) -> f64 {
        if self.scaled == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max + self.scaled.ln()
        }
    }
}

fn side_of_symbol(sym: Symbol) -> Side {
    match sym {
        Symbol::L => Side::Minus,
        Symbol::R => Side::Plus,
    }
}

/// `S_n φ(x) = Σ_{j<n} φ(ℓ^j x)` with the one-sided convention at `d`.
pub fn birkhoff_sum(
    map: &LorenzMap,
    phi: &Potential,
    x: f64,
    n: usize,
    side0: Option<Side>,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::OutsideDomain { x });
    }
    let mut sum = 0.0;
    let mut cur = x;
    for step in 0..n {
        if map.hits_discontinuity(cur) {
            let side = if step == 0 { side0 } else { None }.or(match map.tolerances().hit_policy {
                HitPolicy::Error => None,
                HitPolicy::Plus => Some(Side::Plus),
                HitPolicy::Minus => Some(Side::Minus),
            });
            match side {
                Some(s) => {
                    sum += phi.value_sided(cur, s);
                    cur = match s {
                        Side::Plus => 0.0,
                        Side::Minus => 1.0,
                    };
                }
                None => return Err(Error::OrbitHitsDiscontinuity { step, x: cur }),
            }
        } else {
            sum += phi.value(cur);
            cur = map.evaluate(cur, None)?;
        }
    }
    Ok(sum)
}

/// Birkhoff sum along a known word: branches are applied as the symbols
/// dictate, so points that ride the edge of `d` never become ambiguous.
pub fn birkhoff_on_word(map: &LorenzMap, phi: &Potential, x0: f64, word: &[Symbol]) -> f64 {
    let mut sum = 0.0;
    let mut cur = x0;
    for &sym in word {
        sum += phi.value_sided(cur, side_of_symbol(sym));
        cur = map.apply_branch(sym, cur);
    }
    sum
}

/// Sampled sup of `S_n φ` over a cylinder: the midpoint by default, a denser
/// interior grid plus inward endpoint offsets when `samples > 1`.
fn sup_birkhoff(
    map: &LorenzMap,
    phi: &Potential,
    word: &[Symbol],
    lo: f64,
    hi: f64,
    samples: usize,
) -> f64 {
    if samples <= 1 {
        return birkhoff_on_word(map, phi, 0.5 * (lo + hi), word);
    }
    let w = hi - lo;
    let mut best = f64::NEG_INFINITY;
    for i in 0..samples {
        let x = lo + w * (i as f64 + 0.5) / samples as f64;
        best = best.max(birkhoff_on_word(map, phi, x, word));
    }
    best = best.max(birkhoff_on_word(map, phi, lo + w * 1e-6, word));
    best = best.max(birkhoff_on_word(map, phi, hi - w * 1e-6, word));
    best
}

/// `log Z_n(φ, S)` together with the number of cylinder terms summed.
pub fn log_partition(
    map: &LorenzMap,
    phi: &Potential,
    n: usize,
    subset: &Subset,
    sup_samples: usize,
) -> Result<(f64, usize)> {
    match subset {
        Subset::Interval(a, b) => {
            let out = cylinders::reduce_cylinders(
                map,
                n,
                Some((*a, *b)),
                |view| {
                    (
                        LogSum::of(sup_birkhoff(map, phi, view.word, view.lo, view.hi, sup_samples)),
                        1usize,
                    )
                },
                |x, y| (x.0.merge(y.0), x.1 + y.1),
            )?;
            match out {
                Some((ls, count)) => Ok((ls.value(), count)),
                None => Ok((f64::NEG_INFINITY, 0)),
            }
        }
        Subset::Points(_) => {
            let cyls = cylinders::touching(map, n, subset)?;
            let mut ls = LogSum::empty();
            for c in &cyls {
                ls.push(sup_birkhoff(map, phi, &c.word, c.lo, c.hi, sup_samples));
            }
            Ok((ls.value(), cyls.len()))
        }
    }
}

/// How the finite-depth pressure sequence is turned into one number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ExtrapolationMethod {
    /// The deepest average, as is.
    LastTerm,
    /// Aitken Δ² acceleration of the averages.
    Aitken,
    /// Least-squares slope of `log Z_n` against `n` over the tail window;
    /// cancels the `C/n` transient exactly when `log Z_n = P·n + C`.
    TailSlope,
}

impl std::fmt::Display for ExtrapolationMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExtrapolationMethod::LastTerm => write!(f, "last-term"),
            ExtrapolationMethod::Aitken => write!(f, "aitken"),
            ExtrapolationMethod::TailSlope => write!(f, "tail-slope"),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PressureOptions {
    pub method: ExtrapolationMethod,
    pub sup_samples: usize,
}

impl Default for PressureOptions {
    fn default() -> Self {
        PressureOptions {
            method: ExtrapolationMethod::TailSlope,
            sup_samples: 1,
        }
    }
}

/// Finite-depth pressure data for one subset.
#[derive(Debug, Clone, Serialize)]
pub struct PressureEstimate {
    /// `(n, (1/n) log Z_n)`.
    pub sequence: Vec<(usize, f64)>,
    /// Raw `log Z_n` values, aligned with `sequence`.
    pub log_zs: Vec<f64>,
    /// Number of cylinder terms at each depth.
    pub cylinder_counts: Vec<usize>,
    /// Extrapolated pressure.
    pub value: f64,
    pub method: ExtrapolationMethod,
    /// Set when the sequence blows past the divergence sentinel.
    pub diverged: bool,
    /// Human-readable subset description.
    pub subset: String,
    /// Per-cylinder sup sampling density used.
    pub sup_samples: usize,
}

impl PressureEstimate {
    /// Dispersion of the one-step growth `log Z_{n+1} − log Z_n` over the
    /// tail window; the scale against which pressure gaps are judged.
    pub fn tail_dispersion(&self) -> f64 {
        let incs: Vec<f64> = self.log_zs.windows(2).map(|w| w[1] - w[0]).collect();
        if incs.len() < 2 {
            return 0.0;
        }
        let window = (incs.len() / 3).max(2).min(incs.len());
        let tail = &incs[incs.len() - window..];
        let mean = tail.iter().sum::<f64>() / tail.len() as f64;
        let var = tail.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / tail.len() as f64;
        var.sqrt()
    }
}

const DIVERGENCE_SENTINEL: f64 = 1e12;

/// Estimates `P_top(φ, S, ℓ)` from depths `n_min..=n_max`.
pub fn pressure(
    map: &LorenzMap,
    phi: &Potential,
    subset: &Subset,
    n_min: usize,
    n_max: usize,
    opts: PressureOptions,
) -> Result<PressureEstimate> {
    if n_min < 1 {
        return Err(Error::Precondition("pressure needs n_min >= 1".into()));
    }
    if n_max < n_min + 3 {
        return Err(Error::Precondition(
            "pressure needs n_max - n_min >= 3 for a usable sequence".into(),
        ));
    }
    let mut sequence = Vec::new();
    let mut log_zs = Vec::new();
    let mut counts = Vec::new();
    let mut diverged = false;
    for n in n_min..=n_max {
        let (log_z, count) = log_partition(map, phi, n, subset, opts.sup_samples)?;
        let avg = log_z / n as f64;
        if !avg.is_finite() || avg.abs() > DIVERGENCE_SENTINEL {
            diverged = true;
        }
        sequence.push((n, avg));
        log_zs.push(log_z);
        counts.push(count);
    }
    let value = if diverged {
        sequence
            .iter()
            .map(|&(_, a)| a)
            .filter(|a| a.is_finite())
            .last()
            .unwrap_or(f64::INFINITY)
    } else {
        extrapolate(&sequence, &log_zs, opts.method)
    };
    Ok(PressureEstimate {
        sequence,
        log_zs,
        cylinder_counts: counts,
        value,
        method: opts.method,
        diverged,
        subset: subset.describe(),
        sup_samples: opts.sup_samples,
    })
}

fn extrapolate(sequence: &[(usize, f64)], log_zs: &[f64], method: ExtrapolationMethod) -> f64 {
    match method {
        ExtrapolationMethod::LastTerm => sequence.last().map(|&(_, a)| a).unwrap_or(f64::NAN),
        ExtrapolationMethod::Aitken => {
            if sequence.len() < 3 {
                return sequence.last().map(|&(_, a)| a).unwrap_or(f64::NAN);
            }
            let m = sequence.len();
            let (x0, x1, x2) = (sequence[m - 3].1, sequence[m - 2].1, sequence[m - 1].1);
            let d2 = x2 - 2.0 * x1 + x0;
            if d2.abs() < 1e-14 {
                x2
            } else {
                x2 - (x2 - x1) * (x2 - x1) / d2
            }
        }
        ExtrapolationMethod::TailSlope => {
            let m = sequence.len();
            let window = (m / 3).max(3).min(m);
            let tail = &sequence[m - window..];
            let zs = &log_zs[m - window..];
            // least squares of log Z_n on n
            let len = tail.len() as f64;
            let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
            for (&(n, _), &z) in tail.iter().zip(zs.iter()) {
                let x = n as f64;
                sx += x;
                sy += z;
                sxx += x * x;
                sxy += x * z;
            }
            let det = len * sxx - sx * sx;
            if det.abs() < 1e-12 {
                return sequence.last().unwrap().1;
            }
            (len * sxy - sx * sy) / det
        }
    }
}

/// Birkhoff-average data along the orbits of the two partition endpoints.
#[derive(Debug, Clone, Serialize)]
pub struct BoundaryAverages {
    /// `(n, (1/n) S_n φ(0))`.
    pub seq0: Vec<(usize, f64)>,
    /// `(n, (1/n) S_n φ(1))`.
    pub seq1: Vec<(usize, f64)>,
    pub limsup0: f64,
    pub limsup1: f64,
    /// `max(limsup0, limsup1)`.
    pub m_value: f64,
    /// Set when the orbit of 0 lands on `d` at that step; the average is then
    /// the exact finite cycle value.
    pub preperiod_hit0: Option<usize>,
    pub preperiod_hit1: Option<usize>,
}

fn endpoint_averages(
    map: &LorenzMap,
    phi: &Potential,
    start: f64,
    n_max: usize,
) -> (Vec<(usize, f64)>, f64, Option<usize>) {
    let mut seq = Vec::new();
    let mut sum = 0.0;
    let mut cur = start;
    let mut hit = None;
    for n in 1..=n_max {
        sum += phi.value(cur);
        seq.push((n, sum / n as f64));
        let next = if map.hits_discontinuity(cur) {
            // starting endpoint orbits stop at the discontinuity; handled
            // below via `hit`
            break;
        } else {
            map.evaluate(cur, None).expect("endpoint orbits stay in [0,1]")
        };
        if map.hits_discontinuity(next) {
            hit = Some(n);
            break;
        }
        cur = next;
    }
    let limsup = match hit {
        // the finite cycle average is exact
        Some(_) => seq.last().map(|&(_, a)| a).unwrap_or(0.0),
        None => {
            let window = (seq.len() / 3).max(1);
            seq[seq.len() - window..]
                .iter()
                .map(|&(_, a)| a)
                .fold(f64::NEG_INFINITY, f64::max)
        }
    };
    (seq, limsup, hit)
}

/// Birkhoff averages along the orbits of `0` and `1`, with the finite-cycle
/// convention when either orbit lands exactly on `d`.
pub fn boundary_averages(map: &LorenzMap, phi: &Potential, n_max: usize) -> BoundaryAverages {
    let (seq0, limsup0, hit0) = endpoint_averages(map, phi, 0.0, n_max);
    let (seq1, limsup1, hit1) = endpoint_averages(map, phi, 1.0, n_max);
    BoundaryAverages {
        seq0,
        seq1,
        limsup0,
        limsup1,
        m_value: limsup0.max(limsup1),
        preperiod_hit0: hit0,
        preperiod_hit1: hit1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GapVerdict {
    Gap,
    NoGap,
    Inconclusive,
}

impl std::fmt::Display for GapVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GapVerdict::Gap => write!(f, "gap"),
            GapVerdict::NoGap => write!(f, "no-gap"),
            GapVerdict::Inconclusive => write!(f, "inconclusive"),
        }
    }
}

/// Total-versus-boundary pressure comparison.
#[derive(Debug, Clone, Serialize)]
pub struct GapCheck {
    pub boundary: PressureEstimate,
    pub total: PressureEstimate,
    pub margin: f64,
    pub verdict: GapVerdict,
}

/// Compares `P(φ, [0,1])` against `P(φ, ∂P)`. The verdict is `gap` when the
/// margin clears three times the combined tail dispersion of the two
/// sequences.
pub fn gap_check(
    map: &LorenzMap,
    phi: &Potential,
    n_min: usize,
    n_max: usize,
    opts: PressureOptions,
) -> Result<GapCheck> {
    let total = pressure(map, phi, &Subset::full(), n_min, n_max, opts)?;
    let boundary = pressure(
        map,
        phi,
        &Subset::partition_boundary(map),
        n_min,
        n_max,
        opts,
    )?;
    let margin = total.value - boundary.value;
    let band = (3.0 * (total.tail_dispersion() + boundary.tail_dispersion())).max(1e-6);
    let verdict = if margin > band {
        GapVerdict::Gap
    } else if margin <= 0.0 {
        GapVerdict::NoGap
    } else {
        GapVerdict::Inconclusive
    };
    Ok(GapCheck {
        boundary,
        total,
        margin,
        verdict,
    })
}

/// Boundary pressure versus the endpoint Birkhoff bound `M(φ, ℓ)`.
#[derive(Debug, Clone, Serialize)]
pub struct PartialPressureCheck {
    pub m_value: f64,
    /// `(1/n_max) log Z_{n_max}(φ, ∂P)`.
    pub boundary: f64,
    /// Final discrepancy `|boundary − M|`.
    pub c_bound: f64,
    /// `(n, |(1/n) log Z_n − M|)`.
    pub discrepancies: Vec<(usize, f64)>,
    /// True when the discrepancy is non-increasing across the tail window.
    pub holds: bool,
}

pub fn prop_partial_check(
    map: &LorenzMap,
    phi: &Potential,
    n_max: usize,
    opts: PressureOptions,
) -> Result<PartialPressureCheck> {
    if n_max < 6 {
        return Err(Error::Precondition("prop_partial_check needs n_max >= 6".into()));
    }
    let averages = boundary_averages(map, phi, n_max.max(64));
    let m_value = averages.m_value;
    let subset = Subset::partition_boundary(map);
    let mut discrepancies = Vec::new();
    let mut boundary_last = f64::NAN;
    for n in 2..=n_max {
        let (log_z, _) = log_partition(map, phi, n, &subset, opts.sup_samples)?;
        let avg = log_z / n as f64;
        boundary_last = avg;
        discrepancies.push((n, (avg - m_value).abs()));
    }
    let window = (discrepancies.len() / 3).max(3).min(discrepancies.len());
    let tail = &discrepancies[discrepancies.len() - window..];
    let holds = tail.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-9);
    Ok(PartialPressureCheck {
        m_value,
        boundary: boundary_last,
        c_bound: (boundary_last - m_value).abs(),
        discrepancies,
        holds,
    })
}

/// Independent pressure estimate: leading eigenvalue of a grid-discretized
/// weighted transfer operator, by power iteration.
///
/// Each grid cell pushes its weight `exp(φ(g(midpoint)))` through every
/// inverse branch `g` whose image covers the cell, distributed over the
/// target cells in proportion to overlap. The log of the spectral radius
/// estimates `P_top(φ, ℓ)` for potentials with mild distortion.
pub fn transfer_pressure_oracle(map: &LorenzMap, phi: &Potential, grid: usize) -> Result<f64> {
    if grid < 64 {
        return Err(Error::Precondition("transfer oracle needs grid >= 64".into()));
    }
    let g = grid as f64;
    // rows[j] = list of (source cell, weight) feeding cell j
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); grid];
    for (j, row) in rows.iter_mut().enumerate() {
        let cell_lo = j as f64 / g;
        let cell_hi = (j + 1) as f64 / g;
        for sym in [Symbol::L, Symbol::R] {
            let (img_lo, img_hi) = map.branch_image(sym);
            let clip_lo = cell_lo.max(img_lo);
            let clip_hi = cell_hi.min(img_hi);
            if clip_hi - clip_lo <= 0.0 {
                continue;
            }
            let x_mid = map.inverse_clamped(sym, 0.5 * (clip_lo + clip_hi));
            let weight = phi.value_sided(x_mid, side_of_symbol(sym)).exp();
            let a = map.inverse_clamped(sym, clip_lo);
            let b = map.inverse_clamped(sym, clip_hi);
            let (a, b) = (a.min(b), a.max(b));
            let span = (b - a).max(1e-300);
            let i_lo = ((a * g).floor() as usize).min(grid - 1);
            let i_hi = ((b * g).ceil() as usize).min(grid);
            for i in i_lo..i_hi.max(i_lo + 1) {
                let o_lo = (i as f64 / g).max(a);
                let o_hi = (((i + 1) as f64) / g).min(b);
                if o_hi > o_lo {
                    row.push((i, weight * (o_hi - o_lo) / span));
                }
            }
        }
    }
    let mut v = vec![1.0 / g; grid];
    let mut rho_prev = f64::NAN;
    let max_iters = 100_000;
    for iter in 0..max_iters {
        let mut next = vec![0.0_f64; grid];
        for (j, row) in rows.iter().enumerate() {
            let mut acc = 0.0;
            for &(i, w) in row {
                acc += w * v[i];
            }
            next[j] = acc;
        }
        let norm: f64 = next.iter().map(|x| x.abs()).sum();
        if norm == 0.0 {
            return Err(Error::PowerIterationDiverged { iterations: iter });
        }
        for x in next.iter_mut() {
            *x /= norm;
        }
        let diff: f64 = next
            .iter()
            .zip(v.iter())
            .map(|(a, b)| (a - b).abs())
            .sum();
        v = next;
        let rho = norm;
        if diff <= 1e-12 && (rho - rho_prev).abs() <= 1e-10 * rho.max(1.0) {
            return Ok(rho.ln());
        }
        rho_prev = rho;
    }
    Err(Error::PowerIterationDiverged {
        iterations: max_iters,
    })
}
