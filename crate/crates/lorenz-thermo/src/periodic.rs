//! Periodic points located by backward (inverse-branch) iteration.
//!
//! Composing the inverse branches along a length-`N` word gives a map that
//! contracts by `λ^N`; its fixed point, when consistent with the word, is the
//! periodic point with that itinerary. Backward iteration is therefore the
//! solver of choice: forward root-finding would fight expansion by
//! `min_slope^N` instead.

use serde::Serialize;

use crate::cylinders::{anchored_cylinder_at_depth, Cylinder};
use crate::error::{Error, Result};
use crate::map::{word_string, LorenzMap, Side, Symbol};

/// A solved periodic orbit anchored at a boundary cylinder of `d`.
#[derive(Debug, Clone, Serialize)]
pub struct PeriodicOrbit {
    /// The periodic point itself.
    pub point: f64,
    /// Its (primitive) period.
    pub period: usize,
    /// `[p, ℓp, …, ℓ^{N-1}p]`, reconstructed from the backward pass so each
    /// entry is accurate to solver precision rather than forward-amplified.
    pub orbit: Vec<f64>,
    /// Which side of `d` the point sits on.
    pub side: Side,
    /// Forward residual `|ℓ^N(p) − p|`.
    pub residual: f64,
    /// Itinerary of the orbit.
    pub word: Vec<Symbol>,
}

impl PeriodicOrbit {
    /// Orbit average of an arbitrary function of the orbit points.
    pub fn average(&self, mut f: impl FnMut(f64, Symbol) -> f64) -> f64 {
        let n = self.period as f64;
        self.orbit
            .iter()
            .zip(self.word.iter())
            .map(|(&x, &s)| f(x, s))
            .sum::<f64>()
            / n
    }
}

/// Iteration budget: linear convergence at rate `λ^N` towards the residual
/// target, padded by a safety factor of ten.
fn iteration_budget(map: &LorenzMap, period: usize) -> usize {
    let per_sweep = period as f64 * (1.0 / map.lambda()).ln();
    let needed = (1.0 / map.tolerances().residual).ln() / per_sweep;
    (10.0 * needed.ceil()).max(16.0) as usize
}

/// Residual gate: the configured tolerance, widened by the certified forward
/// rounding amplification `ε · min_slope^N` once periods are deep enough that
/// f64 cannot do better.
fn residual_gate(map: &LorenzMap, period: usize) -> f64 {
    let amplified = 32.0 * f64::EPSILON * map.min_slope().powi(period as i32);
    map.tolerances().residual.max(amplified)
}

/// Solves `ℓ^N(p) = p` for the periodic point whose itinerary repeats `word`.
///
/// Backward-iterates the composed inverse branches from `x0` and then runs one
/// final pass to harvest the whole orbit. Fails with [`Error::NoPeriodicPoint`]
/// when the word admits no periodic point (pullback exits a branch image) and
/// with [`Error::NonConvergence`] when the residual gate is missed.
pub fn periodic_point_of_word(map: &LorenzMap, word: &[Symbol], x0: f64) -> Result<PeriodicOrbit> {
    let n = word.len();
    if n == 0 {
        return Err(Error::Precondition("periodic word must be nonempty".into()));
    }
    let budget = iteration_budget(map, n);
    let mut x = x0;
    for _ in 0..budget {
        let next = map.pull_back(word, x);
        let delta = (next - x).abs();
        x = next;
        if delta <= 4.0 * f64::EPSILON {
            break;
        }
    }
    // Final pass: harvest the orbit and check the word is honored without
    // clamping (a clamp means the periodic extension is inadmissible).
    let mut orbit = vec![0.0; n];
    let mut cur = x;
    let slack = 1e-9;
    for j in (0..n).rev() {
        if !map.in_branch_image(word[j], cur, slack) {
            return Err(Error::NoPeriodicPoint {
                word: word_string(word),
            });
        }
        cur = map.inverse_clamped(word[j], cur);
        orbit[j] = cur;
    }
    let p = orbit[0];
    if (p - x).abs() > 1e-9 {
        return Err(Error::NonConvergence {
            word: word_string(word),
            residual: (p - x).abs(),
            iterations: budget,
        });
    }
    // Symbol consistency of each orbit point.
    let tol_d = map.tolerances().discontinuity;
    for (j, (&v, &s)) in orbit.iter().zip(word.iter()).enumerate() {
        let ok = match s {
            Symbol::L => v <= map.d() + tol_d,
            Symbol::R => v >= map.d() - tol_d,
        };
        if !ok {
            return Err(Error::NoPeriodicPoint {
                word: format!("{} (point {j} strays)", word_string(word)),
            });
        }
    }
    // Forward residual along the word's branches.
    let mut fwd = p;
    for &s in word {
        fwd = map.apply_branch(s, fwd);
    }
    let residual = (fwd - p).abs();
    let gate = residual_gate(map, n);
    if residual > gate {
        return Err(Error::NonConvergence {
            word: word_string(word),
            residual,
            iterations: budget,
        });
    }
    let side = if p < map.d() { Side::Minus } else { Side::Plus };
    Ok(PeriodicOrbit {
        point: p,
        period: n,
        orbit,
        side,
        residual,
        word: word.to_vec(),
    })
}

/// The `k`-th boundary cylinder of `d` together with its periodic point.
///
/// Candidate depths are the cutting times for the side; a candidate counts
/// only when its kneading-prefix cylinder actually hosts a periodic point of
/// that period (the image interval at a cut need not cover the cylinder, in
/// which case the backward iteration leaves a branch image and the depth is
/// skipped).
pub fn boundary_pair(map: &LorenzMap, k: usize, side: Side) -> Result<(Cylinder, PeriodicOrbit)> {
    if k == 0 {
        return Err(Error::Precondition("boundary index k must be >= 1".into()));
    }
    let times = map.cutting_times_for_side(side, map.depth_cap());
    let mut found = 0;
    for &depth in &times {
        let cyl = anchored_cylinder_at_depth(map, depth, side)?;
        match solve_in_cylinder(map, &cyl) {
            Ok(mut po) => {
                po.side = side;
                let consistent = match side {
                    Side::Minus => po.point <= map.d() + map.tolerances().discontinuity,
                    Side::Plus => po.point >= map.d() - map.tolerances().discontinuity,
                };
                if !consistent {
                    continue;
                }
                found += 1;
                if found == k {
                    return Ok((cyl, po));
                }
            }
            Err(Error::NoPeriodicPoint { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::NoBoundaryCylinder {
        k,
        side: side.to_string(),
        cap: map.depth_cap(),
    })
}

/// The `k`-th boundary cylinder: the cylinder of [`boundary_pair`].
pub fn boundary_cylinder(map: &LorenzMap, k: usize, side: Side) -> Result<Cylinder> {
    Ok(boundary_pair(map, k, side)?.0)
}

/// The periodic point `p_k^±` inside the `k`-th boundary cylinder of `d`.
///
/// The point converges to `d^±` as `k` grows, at the cylinder contraction
/// rate.
pub fn boundary_periodic_point(map: &LorenzMap, k: usize, side: Side) -> Result<PeriodicOrbit> {
    Ok(boundary_pair(map, k, side)?.1)
}

/// Solves for the periodic point of a cylinder's word, seeded at its midpoint,
/// and checks the point lands back in the cylinder's closure.
pub fn solve_in_cylinder(map: &LorenzMap, cyl: &Cylinder) -> Result<PeriodicOrbit> {
    let po = periodic_point_of_word(map, &cyl.word, cyl.midpoint())?;
    let slack = (cyl.width() * 1e-6).max(1e-12);
    if po.point < cyl.lo - slack || po.point > cyl.hi + slack {
        return Err(Error::NoPeriodicPoint {
            word: cyl.word_string(),
        });
    }
    // Primitive period: orbit entries must be pairwise distinct.
    for i in 0..po.orbit.len() {
        for j in (i + 1)..po.orbit.len() {
            if (po.orbit[i] - po.orbit[j]).abs() <= 32.0 * f64::EPSILON {
                return Err(Error::NoPeriodicPoint {
                    word: format!("{} (period not primitive)", cyl.word_string()),
                });
            }
        }
    }
    Ok(po)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force oracle for the doubling map: periodic points of period n
    /// are exactly m / (2^n − 1); pick the one whose itinerary matches.
    fn doubling_oracle(n: usize, side: Side) -> f64 {
        let denom = (1u64 << n) - 1;
        let mut best = None;
        for m in 0..=denom {
            let p = m as f64 / denom as f64;
            // itinerary of p under doubling
            let mut x = p;
            let mut word = Vec::new();
            let mut ok = true;
            for _ in 0..n {
                if (x - 0.5).abs() < 1e-9 {
                    ok = false;
                    break;
                }
                word.push(if x < 0.5 { Symbol::L } else { Symbol::R });
                x = if x < 0.5 { 2.0 * x } else { 2.0 * x - 1.0 };
            }
            if !ok && !(m == 0 || m == denom) {
                continue;
            }
            let target = match side {
                Side::Minus => {
                    // word L R^{n-1}
                    let mut w = vec![Symbol::L];
                    w.extend(std::iter::repeat(Symbol::R).take(n - 1));
                    w
                }
                Side::Plus => {
                    let mut w = vec![Symbol::R];
                    w.extend(std::iter::repeat(Symbol::L).take(n - 1));
                    w
                }
            };
            // endpoints 0 and 1 have constant itineraries
            let word = if m == 0 {
                vec![Symbol::L; n]
            } else if m == denom {
                vec![Symbol::R; n]
            } else {
                word
            };
            let matches = if n == 1 {
                match side {
                    Side::Minus => m == 0,
                    Side::Plus => m == denom,
                }
            } else {
                word == target
            };
            if matches {
                best = Some(p);
            }
        }
        best.expect("oracle found no periodic point")
    }

    #[test]
    fn doubling_boundary_periodic_points_match_oracle() {
        let map = LorenzMap::doubling();
        for k in 1..=6 {
            let minus = boundary_periodic_point(&map, k, Side::Minus).unwrap();
            let plus = boundary_periodic_point(&map, k, Side::Plus).unwrap();
            assert_eq!(minus.period, k);
            assert_eq!(plus.period, k);
            assert!((minus.point - doubling_oracle(k, Side::Minus)).abs() < 1e-12);
            assert!((plus.point - doubling_oracle(k, Side::Plus)).abs() < 1e-12);
            // closed forms
            let pm = ((1u64 << (k - 1)) - 1) as f64 / ((1u64 << k) - 1) as f64;
            let pp = (1u64 << (k - 1)) as f64 / ((1u64 << k) - 1) as f64;
            assert!((minus.point - pm).abs() < 1e-12);
            assert!((plus.point - pp).abs() < 1e-12);
        }
    }

    #[test]
    fn points_close_in_on_discontinuity() {
        let map = LorenzMap::affine(0.5, 0.1, 0.9).unwrap();
        let mut prev_gap = f64::INFINITY;
        let mut periods = Vec::new();
        for k in 1..=6 {
            let po = boundary_periodic_point(&map, k, Side::Plus).unwrap();
            periods.push(po.period);
            let gap = (po.point - map.d()).abs();
            assert!(gap < prev_gap + 1e-15, "gap not shrinking at k = {k}");
            assert!(
                gap <= map.lambda().powi(po.period as i32 - 1) + 1e-12,
                "contraction geometry violated at k = {k}"
            );
            prev_gap = gap;
        }
        // depth 1 is a cutting time but its cylinder has no fixed point
        // (the right branch's fixed point falls outside [0,1]), so the
        // boundary sequence starts at period 2.
        assert_eq!(periods[0], 2);
        assert!(periods.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn boundary_cylinder_and_point_agree() {
        let map = LorenzMap::affine(0.5, 0.1, 0.9).unwrap();
        for k in 1..=4 {
            let (cyl, po) = boundary_pair(&map, k, Side::Minus).unwrap();
            assert_eq!(cyl.depth(), po.period);
            assert!(po.point >= cyl.lo - 1e-12 && po.point <= cyl.hi + 1e-12);
            assert!((cyl.hi - map.d()).abs() < 1e-9);
        }
    }

    #[test]
    fn boundary_point_beyond_cap_errors() {
        let map = LorenzMap::doubling().with_depth_cap(6);
        assert!(matches!(
            boundary_periodic_point(&map, 7, Side::Minus),
            Err(Error::NoBoundaryCylinder { .. })
        ));
    }

    #[test]
    fn orbit_entries_are_a_cycle() {
        let map = LorenzMap::affine(0.4, 0.1, 0.9).unwrap();
        let po = boundary_periodic_point(&map, 3, Side::Minus).unwrap();
        for j in 0..po.period {
            let next = map.apply_branch(po.word[j], po.orbit[j]);
            let target = po.orbit[(j + 1) % po.period];
            assert!((next - target).abs() < 1e-9, "cycle broken at {j}");
        }
        assert!(po.residual <= 1e-10);
    }

    #[test]
    fn inadmissible_periodic_word_is_rejected() {
        // For the slope-1.8 map, depth 4 is not a cutting time: the word
        // R L L L has a nonempty cylinder but no periodic point.
        let map = LorenzMap::affine(0.5, 0.1, 0.9).unwrap();
        let word = [Symbol::R, Symbol::L, Symbol::L, Symbol::L];
        let err = periodic_point_of_word(&map, &word, 0.52).unwrap_err();
        assert!(matches!(err, Error::NoPeriodicPoint { .. }), "got {err}");
        // while the cutting-time depth 5 word works
        let word5 = [Symbol::R, Symbol::L, Symbol::L, Symbol::L, Symbol::R];
        let po = periodic_point_of_word(&map, &word5, 0.52).unwrap();
        assert!(po.point > 0.5 && po.point < 0.56);
    }

    #[test]
    fn sides_are_consistent() {
        let map = LorenzMap::doubling();
        for k in 2..=5 {
            let minus = boundary_periodic_point(&map, k, Side::Minus).unwrap();
            assert!(minus.point < map.d());
            let plus = boundary_periodic_point(&map, k, Side::Plus).unwrap();
            assert!(plus.point > map.d());
        }
    }
}
