//! One-dimensional Lorenz-like expanding maps.
//!
//! A map `ℓ : [0,1] ∖ {d} → [0,1]` with a single discontinuity at `d`, two
//! strictly increasing branches, one-sided limits `ℓ(d⁻) = 1` and
//! `ℓ(d⁺) = 0`, and expansion strictly above √2 on both branches. All
//! downstream machinery (cylinders, pressure, periodic orbits) drives the map
//! through this module.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One-sided limit selector at a point; `Minus` approaches from below.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Minus,
    Plus,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Side::Minus => write!(f, "minus"),
            Side::Plus => write!(f, "plus"),
        }
    }
}

/// Partition symbol: `L` is the element `(0, d)`, `R` is `(d, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Symbol {
    L,
    R,
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::L => write!(f, "L"),
            Symbol::R => write!(f, "R"),
        }
    }
}

/// Renders a word as a compact string like `LRRL`.
pub fn word_string(word: &[Symbol]) -> String {
    word.iter().map(|s| s.to_string()).collect()
}

/// What to do when an orbit iterate lands on the discontinuity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HitPolicy {
    /// Refuse: interior hits are an error.
    Error,
    /// Continue as the right-hand limit (`ℓ(d⁺) = 0`).
    Plus,
    /// Continue as the left-hand limit (`ℓ(d⁻) = 1`).
    Minus,
}

/// Numerical policy knobs shared by all operations on a map.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Tolerances {
    /// A point within this distance of `d` counts as hitting the discontinuity.
    pub discontinuity: f64,
    /// Target residual for periodic-point solves.
    pub residual: f64,
    /// A pullback interval narrower than this is treated as empty.
    pub empty_cylinder: f64,
    /// Policy for orbit iterates that land on `d`.
    pub hit_policy: HitPolicy,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            discontinuity: 1e-12,
            residual: 1e-12,
            empty_cylinder: 1e-15,
            hit_policy: HitPolicy::Error,
        }
    }
}

type BranchFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// One monotone branch, supplied as a (forward, inverse) pair of callables.
#[derive(Clone)]
pub struct Branch {
    forward: BranchFn,
    inverse: BranchFn,
}

impl Branch {
    pub fn new(
        forward: impl Fn(f64) -> f64 + Send + Sync + 'static,
        inverse: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Branch {
            forward: Arc::new(forward),
            inverse: Arc::new(inverse),
        }
    }
}

/// A Lorenz-like expanding interval map.
///
/// Immutable after construction and cheap to clone (branches are shared), so
/// it can be captured freely by parallel reductions.
#[derive(Clone)]
pub struct LorenzMap {
    d: f64,
    y0: f64,
    y1: f64,
    min_slope: f64,
    lambda: f64,
    left: Branch,
    right: Branch,
    tol: Tolerances,
    depth_cap: usize,
}

impl fmt::Debug for LorenzMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LorenzMap")
            .field("d", &self.d)
            .field("y0", &self.y0)
            .field("y1", &self.y1)
            .field("min_slope", &self.min_slope)
            .field("lambda", &self.lambda)
            .field("depth_cap", &self.depth_cap)
            .finish()
    }
}

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Default cap on cylinder depth; 2^26 leaves is the practical budget.
pub const DEFAULT_DEPTH_CAP: usize = 26;

impl LorenzMap {
    /// Builds a map from explicit branch callables and certified slope bounds.
    ///
    /// `min_slope` must be a lower bound for `|ℓ′|` on both branches and
    /// `lambda` an upper bound for the inverse-branch derivatives. Branch
    /// monotonicity and the one-sided limits at `d` are spot-checked on a
    /// sample grid at construction.
    pub fn from_branches(
        d: f64,
        left: Branch,
        right: Branch,
        min_slope: f64,
        lambda: f64,
    ) -> Result<Self> {
        if !(d > 0.0 && d < 1.0) {
            return Err(Error::InvalidMap(format!("d = {d} must lie in (0, 1)")));
        }
        if !(min_slope > SQRT_2) {
            return Err(Error::InvalidMap(format!(
                "min_slope = {min_slope} must exceed sqrt(2)"
            )));
        }
        if !(lambda > 0.0 && lambda < 1.0 / SQRT_2 + 1e-12) {
            return Err(Error::InvalidMap(format!(
                "lambda = {lambda} must lie in (0, 1/sqrt(2)]"
            )));
        }
        let y0 = (left.forward)(0.0);
        let y1 = (right.forward)(1.0);
        if !(0.0..1.0).contains(&y0) || !(y1 > 0.0 && y1 <= 1.0) {
            return Err(Error::InvalidMap(format!(
                "branch images out of range: l(0) = {y0}, l(1) = {y1}"
            )));
        }
        let map = LorenzMap {
            d,
            y0,
            y1,
            min_slope,
            lambda,
            left,
            right,
            tol: Tolerances::default(),
            depth_cap: DEFAULT_DEPTH_CAP,
        };
        map.validate_branches()?;
        Ok(map)
    }

    /// Affine map: left branch from `(0, y0)` to `(d, 1)`, right branch from
    /// `(d, 0)` to `(1, y1)`. The doubling map is `affine(0.5, 0.0, 1.0)`.
    pub fn affine(d: f64, y0: f64, y1: f64) -> Result<Self> {
        if !(d > 0.0 && d < 1.0) {
            return Err(Error::InvalidMap(format!("d = {d} must lie in (0, 1)")));
        }
        if !(0.0..1.0).contains(&y0) || !(y1 > 0.0 && y1 <= 1.0) {
            return Err(Error::InvalidMap(format!(
                "need 0 <= y0 < 1 and 0 < y1 <= 1, got y0 = {y0}, y1 = {y1}"
            )));
        }
        let slope_l = (1.0 - y0) / d;
        let slope_r = y1 / (1.0 - d);
        if slope_l <= SQRT_2 || slope_r <= SQRT_2 {
            return Err(Error::InvalidMap(format!(
                "branch slopes ({slope_l}, {slope_r}) must both exceed sqrt(2)"
            )));
        }
        let left = Branch::new(
            move |x| y0 + slope_l * x,
            move |y| (y - y0) / slope_l,
        );
        let right = Branch::new(
            move |x| slope_r * (x - d),
            move |y| d + y / slope_r,
        );
        let min_slope = slope_l.min(slope_r);
        Self::from_branches(d, left, right, min_slope, 1.0 / min_slope)
    }

    /// The doubling map `x ↦ 2x mod 1` with `d = 1/2`.
    pub fn doubling() -> Self {
        Self::affine(0.5, 0.0, 1.0).expect("doubling map is valid")
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_hit_policy(mut self, policy: HitPolicy) -> Self {
        self.tol.hit_policy = policy;
        self
    }

    pub fn with_depth_cap(mut self, cap: usize) -> Self {
        self.depth_cap = cap;
        self
    }

    fn validate_branches(&self) -> Result<()> {
        // Sampled monotonicity and limit checks; certified bounds are the
        // caller's contract, this only catches outright mistakes.
        let n = 64;
        let mut prev = (self.left.forward)(1e-9);
        for i in 1..=n {
            let x = self.d * i as f64 / (n as f64 + 1.0);
            let y = (self.left.forward)(x);
            if y <= prev {
                return Err(Error::InvalidMap(format!(
                    "left branch not strictly increasing near x = {x}"
                )));
            }
            prev = y;
        }
        let mut prev = (self.right.forward)(self.d + 1e-9);
        for i in 1..=n {
            let x = self.d + (1.0 - self.d) * i as f64 / (n as f64 + 1.0);
            let y = (self.right.forward)(x);
            if y <= prev {
                return Err(Error::InvalidMap(format!(
                    "right branch not strictly increasing near x = {x}"
                )));
            }
            prev = y;
        }
        let eps = 1e-9;
        let near_one = (self.left.forward)(self.d - eps);
        if (near_one - 1.0).abs() > 4.0 * eps * self.min_slope.max(4.0) + 1e-9 {
            return Err(Error::InvalidMap(format!(
                "left branch limit at d is {near_one}, expected 1"
            )));
        }
        let near_zero = (self.right.forward)(self.d + eps);
        if near_zero.abs() > 4.0 * eps * self.min_slope.max(4.0) + 1e-9 {
            return Err(Error::InvalidMap(format!(
                "right branch limit at d is {near_zero}, expected 0"
            )));
        }
        Ok(())
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    /// `ℓ(0)`, the lower edge of the left-branch image.
    pub fn left_image_low(&self) -> f64 {
        self.y0
    }

    /// `ℓ(1)`, the upper edge of the right-branch image.
    pub fn right_image_high(&self) -> f64 {
        self.y1
    }

    pub fn min_slope(&self) -> f64 {
        self.min_slope
    }

    /// Certified upper bound on the inverse-branch derivatives.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn tolerances(&self) -> &Tolerances {
        self.tol()
    }

    pub(crate) fn tol(&self) -> &Tolerances {
        &self.tol
    }

    pub fn depth_cap(&self) -> usize {
        self.depth_cap
    }

    /// The boundary set of the natural partition: `{0, d, 1}`.
    pub fn partition_boundary(&self) -> [f64; 3] {
        [0.0, self.d, 1.0]
    }

    /// True when `x` lies within the discontinuity tolerance of `d`.
    pub fn hits_discontinuity(&self, x: f64) -> bool {
        (x - self.d).abs() <= self.tol.discontinuity
    }

    /// Applies the map. At `x = d` the side decides: `plus → 0`, `minus → 1`,
    /// exactly. Without a side the call is rejected as ambiguous.
    pub fn evaluate(&self, x: f64, side: Option<Side>) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::OutsideDomain { x });
        }
        if self.hits_discontinuity(x) {
            return match side {
                Some(Side::Plus) => Ok(0.0),
                Some(Side::Minus) => Ok(1.0),
                None => Err(Error::AmbiguousAtDiscontinuity { d: self.d }),
            };
        }
        if x < self.d {
            Ok((self.left.forward)(x))
        } else {
            Ok((self.right.forward)(x))
        }
    }

    /// Applies the branch named by `sym`, honoring the exact one-sided values
    /// at the partition corners. The caller vouches that `x` belongs to that
    /// branch; no discontinuity check is made.
    pub fn apply_branch(&self, sym: Symbol, x: f64) -> f64 {
        match sym {
            Symbol::L => {
                if self.hits_discontinuity(x) {
                    1.0
                } else {
                    (self.left.forward)(x)
                }
            }
            Symbol::R => {
                if self.hits_discontinuity(x) {
                    0.0
                } else {
                    (self.right.forward)(x)
                }
            }
        }
    }

    /// Image interval of a branch, as `[lo, hi]`.
    pub fn branch_image(&self, sym: Symbol) -> (f64, f64) {
        match sym {
            Symbol::L => (self.y0, 1.0),
            Symbol::R => (0.0, self.y1),
        }
    }

    /// Inverse branch with a domain check: `y` must lie in the branch image.
    pub fn inverse_branch(&self, y: f64, branch: Symbol) -> Result<f64> {
        let (lo, hi) = self.branch_image(branch);
        let slack = 1e-12;
        if y < lo - slack || y > hi + slack {
            return Err(Error::NoPreimageOnBranch {
                y,
                branch: match branch {
                    Symbol::L => "left",
                    Symbol::R => "right",
                },
                img_lo: lo,
                img_hi: hi,
            });
        }
        Ok(self.inverse_clamped(branch, y))
    }

    /// Inverse branch with clamping into the image interval; used by the
    /// contraction solver, which verifies admissibility afterwards.
    pub(crate) fn inverse_clamped(&self, sym: Symbol, y: f64) -> f64 {
        let (lo, hi) = self.branch_image(sym);
        let y = y.clamp(lo, hi);
        let x = match sym {
            Symbol::L => (self.left.inverse)(y),
            Symbol::R => (self.right.inverse)(y),
        };
        match sym {
            Symbol::L => x.clamp(0.0, self.d),
            Symbol::R => x.clamp(self.d, 1.0),
        }
    }

    /// Whether `y` lies in the image of the branch (with tolerance slack).
    pub(crate) fn in_branch_image(&self, sym: Symbol, y: f64, slack: f64) -> bool {
        let (lo, hi) = self.branch_image(sym);
        y >= lo - slack && y <= hi + slack
    }

    /// Pulls `y` back through a word: applies the inverse branches of
    /// `word[n-1], …, word[0]` in that order. For an admissible word this
    /// lands in the word's cylinder; the composition contracts by `λ^n`.
    pub fn pull_back(&self, word: &[Symbol], y: f64) -> f64 {
        word.iter().rev().fold(y, |acc, &s| self.inverse_clamped(s, acc))
    }

    /// The forward orbit `[x, ℓx, …, ℓ^{n-1}x]`.
    ///
    /// `side0` resolves the branch when `x` itself sits on the discontinuity.
    /// Later iterates that land on `d` follow the configured [`HitPolicy`];
    /// the default refuses with [`Error::OrbitHitsDiscontinuity`].
    pub fn orbit(&self, x: f64, n: usize, side0: Option<Side>) -> Result<Vec<f64>> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::OutsideDomain { x });
        }
        let mut points = Vec::with_capacity(n);
        let mut cur = x;
        for step in 0..n {
            points.push(cur);
            if step + 1 == n {
                break;
            }
            cur = if self.hits_discontinuity(cur) {
                let side = if step == 0 {
                    side0.or(match self.tol.hit_policy {
                        HitPolicy::Error => None,
                        HitPolicy::Plus => Some(Side::Plus),
                        HitPolicy::Minus => Some(Side::Minus),
                    })
                } else {
                    match self.tol.hit_policy {
                        HitPolicy::Error => None,
                        HitPolicy::Plus => Some(Side::Plus),
                        HitPolicy::Minus => Some(Side::Minus),
                    }
                };
                match side {
                    Some(Side::Plus) => 0.0,
                    Some(Side::Minus) => 1.0,
                    None => {
                        return Err(Error::OrbitHitsDiscontinuity { step, x: cur });
                    }
                }
            } else {
                self.evaluate(cur, None)?
            };
        }
        Ok(points)
    }

    /// One step of the signed dynamics. A signed point `(x, σ)` stands for
    /// the one-sided limit `x^σ`; increasing branches preserve the side, and
    /// the corner conventions are exact: `(d, −) ↦ (1, −)`, `(d, +) ↦ (0, +)`,
    /// `(0, +) ↦ (y0, +)`, `(1, −) ↦ (y1, −)`.
    pub fn step_signed(&self, x: f64, side: Side) -> (f64, Side) {
        if self.hits_discontinuity(x) {
            return match side {
                Side::Minus => (1.0, Side::Minus),
                Side::Plus => (0.0, Side::Plus),
            };
        }
        let sym = self.symbol_signed(x, side);
        (self.apply_branch(sym, x), side)
    }

    /// Partition symbol of the one-sided limit `x^σ`.
    pub fn symbol_signed(&self, x: f64, side: Side) -> Symbol {
        if self.hits_discontinuity(x) {
            match side {
                Side::Minus => Symbol::L,
                Side::Plus => Symbol::R,
            }
        } else if x < self.d {
            Symbol::L
        } else {
            Symbol::R
        }
    }

    /// First `n` symbols of the itinerary of the one-sided point `x^σ`.
    /// With `x = d` this is the kneading word of `d⁻` or `d⁺`.
    pub fn kneading_word(&self, x: f64, side: Side, n: usize) -> Vec<Symbol> {
        let mut word = Vec::with_capacity(n);
        let (mut cur, mut cur_side) = (x, side);
        for _ in 0..n {
            word.push(self.symbol_signed(cur, cur_side));
            let next = self.step_signed(cur, cur_side);
            cur = next.0;
            cur_side = next.1;
        }
        word
    }

    /// Cutting times for the given side of the discontinuity, up to `n_max`.
    ///
    /// The auxiliary interval starts as `(d, 1)` on the plus side (`(0, d)`
    /// on the minus side) and is pushed forward step by step while one
    /// endpoint tracks the orbit of `d^±`. Whenever `d` falls in the interior
    /// the step count is recorded and the recursion restarts from the
    /// component containing the tracked orbit point.
    pub fn cutting_times_for_side(&self, side: Side, n_max: usize) -> Vec<usize> {
        let mut times = Vec::new();
        if n_max == 0 {
            return times;
        }
        // Interval endpoints carry the side facing the interval interior. The
        // tracked orbit of d^± stays on one fixed end: left for the plus side,
        // right for the minus side (increasing branches preserve order).
        let (mut a, mut b, z_is_left) = match side {
            Side::Plus => (self.d, 1.0, true),
            Side::Minus => (0.0, self.d, false),
        };
        for n in 1..=n_max {
            let (na, _) = self.step_signed(a, Side::Plus);
            let (nb, _) = self.step_signed(b, Side::Minus);
            a = na;
            b = nb;
            if a >= b {
                // Degenerate interval; stop scanning.
                break;
            }
            let tol = self.tol.discontinuity;
            if self.d > a + tol && self.d < b - tol {
                times.push(n);
                if z_is_left {
                    b = self.d;
                } else {
                    a = self.d;
                }
            }
        }
        times
    }

    /// Cutting times in the classical sense (plus side, starting from `(d, 1)`).
    pub fn cutting_times(&self, n_max: usize) -> Vec<usize> {
        self.cutting_times_for_side(Side::Plus, n_max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn affine_test_map() -> LorenzMap {
        LorenzMap::affine(0.4, 0.1, 0.9).unwrap()
    }

    #[test]
    fn doubling_left_branch() {
        let map = LorenzMap::doubling();
        assert!((map.evaluate(0.3, None).unwrap() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn one_sided_values_at_d_are_exact() {
        let map = LorenzMap::doubling();
        assert_eq!(map.evaluate(0.5, Some(Side::Minus)).unwrap(), 1.0);
        assert_eq!(map.evaluate(0.5, Some(Side::Plus)).unwrap(), 0.0);
    }

    #[test]
    fn affine_right_branch_value() {
        let map = affine_test_map();
        // right slope 0.9 / 0.6 = 1.5, so l(0.7) = 1.5 * 0.3
        assert!((map.evaluate(0.7, None).unwrap() - 0.45).abs() < 1e-15);
    }

    #[test]
    fn evaluate_rejects_ambiguous_and_out_of_domain() {
        let map = LorenzMap::doubling();
        assert!(matches!(
            map.evaluate(0.5, None),
            Err(Error::AmbiguousAtDiscontinuity { .. })
        ));
        assert!(matches!(
            map.evaluate(1.2, None),
            Err(Error::OutsideDomain { .. })
        ));
    }

    #[test]
    fn inverse_branches_doubling() {
        let map = LorenzMap::doubling();
        assert!((map.inverse_branch(0.6, Symbol::L).unwrap() - 0.3).abs() < 1e-15);
        assert!((map.inverse_branch(0.6, Symbol::R).unwrap() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn inverse_branch_rejects_outside_image() {
        let map = affine_test_map();
        // left image is [0.1, 1]
        assert!(matches!(
            map.inverse_branch(0.05, Symbol::L),
            Err(Error::NoPreimageOnBranch { .. })
        ));
    }

    #[test]
    fn inverse_forward_roundtrip() {
        let map = affine_test_map();
        for i in 1..200 {
            let x = i as f64 / 200.0;
            if map.hits_discontinuity(x) {
                continue;
            }
            let y = map.evaluate(x, None).unwrap();
            let sym = if x < map.d() { Symbol::L } else { Symbol::R };
            let back = map.inverse_branch(y, sym).unwrap();
            assert!(
                (back - x).abs() < 10.0 * f64::EPSILON * map.min_slope(),
                "roundtrip failed at x = {x}"
            );
        }
    }

    #[test]
    fn expansion_lower_bound_sampled() {
        let map = affine_test_map();
        let pts: Vec<f64> = (1..100).map(|i| i as f64 * 0.004).collect();
        for w in pts.windows(2) {
            let (x, y) = (w[0], w[1]);
            if (x < map.d()) != (y < map.d()) {
                continue;
            }
            let fx = map.evaluate(x, None).unwrap();
            let fy = map.evaluate(y, None).unwrap();
            assert!((fx - fy).abs() >= map.min_slope() * (x - y).abs() - 1e-12);
        }
    }

    #[test]
    fn orbit_period_two() {
        let map = LorenzMap::doubling();
        let orbit = map.orbit(1.0 / 3.0, 4, None).unwrap();
        let expect = [1.0 / 3.0, 2.0 / 3.0, 1.0 / 3.0, 2.0 / 3.0];
        for (a, b) in orbit.iter().zip(expect.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn orbit_from_discontinuity_with_side() {
        let map = LorenzMap::doubling();
        let orbit = map.orbit(0.5, 2, Some(Side::Plus)).unwrap();
        assert_eq!(orbit, vec![0.5, 0.0]);
    }

    #[test]
    fn orbit_simple_doubling() {
        let map = LorenzMap::doubling();
        let orbit = map.orbit(0.1, 3, None).unwrap();
        for (a, b) in orbit.iter().zip([0.1, 0.2, 0.4]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn orbit_interior_hit_errors_by_default() {
        let map = LorenzMap::doubling();
        let err = map.orbit(0.25, 3, None).unwrap_err();
        assert!(matches!(err, Error::OrbitHitsDiscontinuity { step: 1, .. }));
        let tolerant = map.clone().with_hit_policy(HitPolicy::Plus);
        assert_eq!(tolerant.orbit(0.25, 3, None).unwrap(), vec![0.25, 0.5, 0.0]);
    }

    #[test]
    fn cutting_times_doubling_full_branch() {
        let map = LorenzMap::doubling();
        assert_eq!(map.cutting_times(5), vec![1, 2, 3, 4, 5]);
        assert_eq!(map.cutting_times(0), Vec::<usize>::new());
    }

    // Independent oracle: push a dense sample of the auxiliary interval
    // forward point by point and detect cuts from the sampled extent. The
    // tracked orbit of d^± is iterated separately.
    fn cutting_times_oracle(map: &LorenzMap, side: Side, n_max: usize) -> Vec<usize> {
        const SAMPLES: usize = 4001;
        let fill = |lo: f64, hi: f64| -> Vec<f64> {
            (1..SAMPLES)
                .map(|i| lo + (hi - lo) * i as f64 / SAMPLES as f64)
                .collect()
        };
        let step_one = |x: f64, s: Side| -> f64 {
            if (x - map.d()).abs() <= 1e-12 {
                match s {
                    Side::Minus => 1.0,
                    Side::Plus => 0.0,
                }
            } else {
                map.evaluate(x, Some(s)).unwrap()
            }
        };
        let mut out = Vec::new();
        let (mut z, mut pts, z_left) = match side {
            Side::Plus => (map.d(), fill(map.d(), 1.0), true),
            Side::Minus => (map.d(), fill(0.0, map.d()), false),
        };
        let z_side = if z_left { Side::Plus } else { Side::Minus };
        for n in 1..=n_max {
            z = step_one(z, z_side);
            for p in pts.iter_mut() {
                // interior samples never sit on d up to the sampling density
                *p = map.evaluate(*p, None).unwrap();
            }
            let lo = pts.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = pts.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let margin = (hi - lo) / SAMPLES as f64 * 4.0;
            if map.d() > lo + margin && map.d() < hi - margin {
                out.push(n);
                pts = if z_left {
                    fill(z, map.d())
                } else {
                    fill(map.d(), z)
                };
            }
        }
        out
    }

    #[test]
    fn cutting_times_affine_match_oracle() {
        let map = affine_test_map();
        let got = map.cutting_times(8);
        let want = cutting_times_oracle(&map, Side::Plus, 8);
        assert_eq!(got, want);
        assert_eq!(got, vec![1, 2, 3, 6]);
    }

    #[test]
    fn cutting_times_both_sides_slope_18() {
        let map = LorenzMap::affine(0.5, 0.1, 0.9).unwrap();
        for side in [Side::Plus, Side::Minus] {
            assert_eq!(
                map.cutting_times_for_side(side, 12),
                cutting_times_oracle(&map, side, 12),
                "side {side}"
            );
        }
        assert_eq!(&map.cutting_times_for_side(Side::Plus, 6), &[1, 2, 3, 5, 6]);
        assert_eq!(&map.cutting_times_for_side(Side::Minus, 5), &[1, 2, 3, 5]);
    }

    #[test]
    fn kneading_words_doubling() {
        let map = LorenzMap::doubling();
        assert_eq!(
            map.kneading_word(map.d(), Side::Minus, 3),
            vec![Symbol::L, Symbol::R, Symbol::R]
        );
        assert_eq!(
            map.kneading_word(map.d(), Side::Plus, 3),
            vec![Symbol::R, Symbol::L, Symbol::L]
        );
    }

    #[test]
    fn pull_back_contracts() {
        let map = affine_test_map();
        let word = [Symbol::R, Symbol::L, Symbol::R, Symbol::L];
        let a = map.pull_back(&word, 0.2);
        let b = map.pull_back(&word, 0.8);
        assert!((a - b).abs() <= map.lambda().powi(word.len() as i32) * 0.6 + 1e-15);
    }

    #[test]
    fn rejects_shallow_slopes() {
        assert!(LorenzMap::affine(0.5, 0.4, 0.9).is_err());
    }
}
