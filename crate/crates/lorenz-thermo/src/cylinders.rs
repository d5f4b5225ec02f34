//! Refined partitions of the interval into cylinders.
//!
//! A depth-`n` cylinder is the open interval of points sharing the same first
//! `n` partition symbols. Enumeration walks the word tree keeping two
//! intervals per node: the cylinder itself (endpoints maintained by inverse
//! pullback, so errors contract) and its forward image under `ℓ^depth`
//! (endpoints are orbits of `{0, d, 1}`). A word dies as soon as its image
//! interval fails to reach the next symbol's partition element.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::map::{word_string, LorenzMap, Side, Symbol};

/// An element of the depth-`n` refinement, with its symbolic word and
/// endpoints.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cylinder {
    pub word: Vec<Symbol>,
    pub lo: f64,
    pub hi: f64,
}

impl Cylinder {
    pub fn depth(&self) -> usize {
        self.word.len()
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// Whether the closure `[lo, hi]` contains `x` (with slack).
    pub fn closure_contains(&self, x: f64, tol: f64) -> bool {
        x >= self.lo - tol && x <= self.hi + tol
    }

    pub fn word_string(&self) -> String {
        word_string(&self.word)
    }
}

/// Borrowed view of a cylinder handed to streaming visitors; owns nothing.
#[derive(Debug, Clone, Copy)]
pub struct CylinderView<'a> {
    pub word: &'a [Symbol],
    pub lo: f64,
    pub hi: f64,
}

impl CylinderView<'_> {
    pub fn depth(&self) -> usize {
        self.word.len()
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn to_owned(&self) -> Cylinder {
        Cylinder {
            word: self.word.to_vec(),
            lo: self.lo,
            hi: self.hi,
        }
    }
}

/// A subset of `[0,1]` against which cylinders are selected.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Subset {
    /// A closed interval `[lo, hi]`.
    Interval(f64, f64),
    /// A finite set of points.
    Points(Vec<f64>),
}

impl Subset {
    pub fn full() -> Self {
        Subset::Interval(0.0, 1.0)
    }

    /// The boundary of the natural partition, `{0, d, 1}`.
    pub fn partition_boundary(map: &LorenzMap) -> Self {
        Subset::Points(vec![0.0, map.d(), 1.0])
    }

    pub fn describe(&self) -> String {
        match self {
            Subset::Interval(a, b) if *a == 0.0 && *b == 1.0 => "[0,1]".to_string(),
            Subset::Interval(a, b) => format!("[{a},{b}]"),
            Subset::Points(ps) => {
                let inner: Vec<String> = ps.iter().map(|p| format!("{p}")).collect();
                format!("{{{}}}", inner.join(","))
            }
        }
    }
}

// Spawn rayon tasks only for the top levels of the word tree; below that the
// walk is sequential. Merge order is fixed by the recursion, so results do
// not depend on the thread count.
const PARALLEL_LEVELS: usize = 10;

struct Walk<'m, L, M, T> {
    map: &'m LorenzMap,
    depth: usize,
    window: Option<(f64, f64)>,
    leaf: L,
    merge: M,
    _marker: std::marker::PhantomData<fn() -> T>,
}

impl<'m, L, M, T> Walk<'m, L, M, T>
where
    L: Fn(CylinderView<'_>) -> T + Sync,
    M: Fn(T, T) -> T + Sync,
    T: Send,
{
    fn child(
        &self,
        sym: Symbol,
        cyl: (f64, f64),
        img: (f64, f64),
        word: &[Symbol],
    ) -> Option<((f64, f64), (f64, f64))> {
        let map = self.map;
        let d = map.d();
        let tol = map.tolerances().empty_cylinder;
        let (clip_lo, clip_hi, cut_hi) = match sym {
            Symbol::L => {
                let hi = img.1.min(d);
                (img.0, hi, img.1 > d)
            }
            Symbol::R => {
                let lo = img.0.max(d);
                (lo, img.1, img.0 < d)
            }
        };
        if clip_hi - clip_lo <= tol {
            return None;
        }
        // Cylinder endpoints: either inherited or the pullback of d through
        // the current word (the new subdivision point).
        let new_cyl = match sym {
            Symbol::L => {
                let hi = if cut_hi { map.pull_back(word, d) } else { cyl.1 };
                (cyl.0, hi)
            }
            Symbol::R => {
                let lo = if cut_hi { map.pull_back(word, d) } else { cyl.0 };
                (lo, cyl.1)
            }
        };
        if new_cyl.1 - new_cyl.0 <= tol {
            return None;
        }
        // Forward image endpoints, exact at the corners of the branch.
        let new_img = match sym {
            Symbol::L => {
                let lo = map.apply_branch(Symbol::L, clip_lo);
                let hi = if clip_hi >= d { 1.0 } else { map.apply_branch(Symbol::L, clip_hi) };
                (lo, hi)
            }
            Symbol::R => {
                let lo = if clip_lo <= d { 0.0 } else { map.apply_branch(Symbol::R, clip_lo) };
                let hi = map.apply_branch(Symbol::R, clip_hi);
                (lo, hi)
            }
        };
        Some((new_cyl, new_img))
    }

    fn in_window(&self, cyl: (f64, f64)) -> bool {
        match self.window {
            None => true,
            Some((a, b)) => cyl.1 >= a - 1e-12 && cyl.0 <= b + 1e-12,
        }
    }

    fn run(&self, word: &mut Vec<Symbol>, cyl: (f64, f64), img: (f64, f64)) -> Option<T> {
        if !self.in_window(cyl) {
            return None;
        }
        if word.len() == self.depth {
            return Some((self.leaf)(CylinderView {
                word,
                lo: cyl.0,
                hi: cyl.1,
            }));
        }
        let parallel = word.len() < PARALLEL_LEVELS.min(self.depth.saturating_sub(3));
        if parallel {
            let left = self.child(Symbol::L, cyl, img, word);
            let right = self.child(Symbol::R, cyl, img, word);
            let mut wl = word.clone();
            let mut wr = word.clone();
            wl.push(Symbol::L);
            wr.push(Symbol::R);
            let (lres, rres) = rayon::join(
                || left.and_then(|(c, i)| self.run(&mut wl, c, i)),
                || right.and_then(|(c, i)| self.run(&mut wr, c, i)),
            );
            match (lres, rres) {
                (Some(a), Some(b)) => Some((self.merge)(a, b)),
                (Some(a), None) => Some(a),
                (None, Some(b)) => Some(b),
                (None, None) => None,
            }
        } else {
            let mut acc: Option<T> = None;
            for sym in [Symbol::L, Symbol::R] {
                if let Some((c, i)) = self.child(sym, cyl, img, word) {
                    word.push(sym);
                    let sub = self.run(word, c, i);
                    word.pop();
                    acc = match (acc, sub) {
                        (Some(a), Some(b)) => Some((self.merge)(a, b)),
                        (a, None) => a,
                        (None, b) => b,
                    };
                }
            }
            acc
        }
    }
}

/// Streams every nonempty depth-`n` cylinder through `leaf` and folds the
/// results with `merge`. The fold order is the lexicographic word order
/// regardless of parallelism, so floating-point reductions are reproducible.
/// `window` restricts the walk to cylinders whose closure meets the interval.
pub fn reduce_cylinders<T, L, M>(
    map: &LorenzMap,
    depth: usize,
    window: Option<(f64, f64)>,
    leaf: L,
    merge: M,
) -> Result<Option<T>>
where
    L: Fn(CylinderView<'_>) -> T + Sync,
    M: Fn(T, T) -> T + Sync,
    T: Send,
{
    if depth == 0 {
        return Err(Error::Precondition("cylinder depth must be >= 1".into()));
    }
    if depth > map.depth_cap() {
        return Err(Error::DepthCap {
            requested: depth,
            cap: map.depth_cap(),
        });
    }
    let walk = Walk {
        map,
        depth,
        window,
        leaf,
        merge,
        _marker: std::marker::PhantomData,
    };
    let mut word = Vec::with_capacity(depth);
    Ok(walk.run(&mut word, (0.0, 1.0), (0.0, 1.0)))
}

/// All nonempty depth-`n` cylinders in interval order.
pub fn enumerate(map: &LorenzMap, n: usize) -> Result<Vec<Cylinder>> {
    let out = reduce_cylinders(
        map,
        n,
        None,
        |view| vec![view.to_owned()],
        |mut a, mut b| {
            a.append(&mut b);
            a
        },
    )?;
    Ok(out.unwrap_or_default())
}

/// Number of nonempty depth-`n` cylinders without materializing them.
pub fn count(map: &LorenzMap, n: usize) -> Result<usize> {
    Ok(reduce_cylinders(map, n, None, |_| 1usize, |a, b| a + b)?.unwrap_or(0))
}

/// Pullback interval of a word: clips to the branch image and inverts, one
/// symbol at a time from the end. `None` when the word is inadmissible.
pub fn word_interval(map: &LorenzMap, word: &[Symbol]) -> Option<(f64, f64)> {
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    for &sym in word.iter().rev() {
        let (img_lo, img_hi) = map.branch_image(sym);
        let clo = lo.max(img_lo);
        let chi = hi.min(img_hi);
        if chi - clo <= map.tolerances().empty_cylinder {
            return None;
        }
        lo = map.inverse_clamped(sym, clo);
        hi = map.inverse_clamped(sym, chi);
    }
    Some((lo, hi))
}

/// The depth-`n` cylinder whose closure contains the one-sided point `x^σ`.
pub fn cylinder_of_point(map: &LorenzMap, n: usize, x: f64, side: Side) -> Result<Cylinder> {
    if n == 0 || n > map.depth_cap() {
        return Err(Error::DepthCap {
            requested: n,
            cap: map.depth_cap(),
        });
    }
    let word = map.kneading_word(x, side, n);
    let (lo, hi) = word_interval(map, &word).ok_or_else(|| Error::InadmissibleWord {
        word: word_string(&word),
    })?;
    Ok(Cylinder { word, lo, hi })
}

/// Flanking cylinders of a point: the depth-`n` cylinders closing up on `p`
/// from below and from above. At the interval ends the flank wraps around
/// (`0` and `1` are the two one-sided images of `d`, glued as on the circle),
/// so every point contributes two entries; the pair collapses to one when
/// both sides land in the same cylinder.
pub fn flank_cylinders(map: &LorenzMap, n: usize, p: f64) -> Result<Vec<Cylinder>> {
    let tol = map.tolerances().discontinuity;
    let below = if p <= tol {
        cylinder_of_point(map, n, 1.0, Side::Minus)?
    } else {
        cylinder_of_point(map, n, p, Side::Minus)?
    };
    let above = if p >= 1.0 - tol {
        cylinder_of_point(map, n, 0.0, Side::Plus)?
    } else {
        cylinder_of_point(map, n, p, Side::Plus)?
    };
    if below.word == above.word {
        Ok(vec![below])
    } else {
        Ok(vec![below, above])
    }
}

/// Cylinders whose closures meet `S`.
///
/// For an interval subset this is the plain sub-list of the depth-`n`
/// refinement. For a point set the result lists one flank entry per
/// one-sided approach to each point, duplicates across points retained;
/// this is the family the boundary partition functions sum over.
pub fn touching(map: &LorenzMap, n: usize, subset: &Subset) -> Result<Vec<Cylinder>> {
    match subset {
        Subset::Interval(a, b) => {
            let out = reduce_cylinders(
                map,
                n,
                Some((*a, *b)),
                |view| {
                    if view.hi >= a - 1e-12 && view.lo <= b + 1e-12 {
                        vec![view.to_owned()]
                    } else {
                        Vec::new()
                    }
                },
                |mut x, mut y| {
                    x.append(&mut y);
                    x
                },
            )?;
            Ok(out.unwrap_or_default())
        }
        Subset::Points(ps) => {
            let mut sorted = ps.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut out = Vec::new();
            for &p in &sorted {
                out.extend(flank_cylinders(map, n, p)?);
            }
            Ok(out)
        }
    }
}

/// The depth-`n` cylinder with `d` on its boundary on the requested side: the
/// kneading-prefix cylinder of `d^±`.
pub fn anchored_cylinder_at_depth(map: &LorenzMap, depth: usize, side: Side) -> Result<Cylinder> {
    let cyl = cylinder_of_point(map, depth, map.d(), side)?;
    let anchored = match side {
        Side::Minus => (cyl.hi - map.d()).abs() <= 1e-9,
        Side::Plus => (cyl.lo - map.d()).abs() <= 1e-9,
    };
    if !anchored {
        return Err(Error::InadmissibleWord {
            word: cyl.word_string(),
        });
    }
    Ok(cyl)
}
