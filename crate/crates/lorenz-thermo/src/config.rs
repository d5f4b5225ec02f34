//! Flat key/value run configuration.
//!
//! The format is deliberately minimal: `[section]` headers, `key = value`
//! lines, `#` comments. One level of sections, no nesting, parseable from
//! any language.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::cylinders::Subset;
use crate::error::{Error, Result};
use crate::map::{HitPolicy, LorenzMap, Side, Tolerances};
use crate::potentials::{build_bump, build_eps_bump, phase_family, DepthRule, HeightRule, Potential};
use crate::periodic::boundary_periodic_point;
use crate::pressure::{ExtrapolationMethod, PressureOptions};

#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    sections: BTreeMap<String, BTreeMap<String, String>>,
    pub source: String,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        let mut current = String::from("global");
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') {
                if !line.ends_with(']') {
                    return Err(Error::Config(format!(
                        "line {}: malformed section header `{raw}`",
                        lineno + 1
                    )));
                }
                current = line[1..line.len() - 1].trim().to_lowercase();
                sections.entry(current.clone()).or_default();
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "line {}: expected `key = value`, got `{raw}`",
                    lineno + 1
                )));
            };
            sections
                .entry(current.clone())
                .or_default()
                .insert(key.trim().to_lowercase(), value.trim().to_string());
        }
        Ok(RawConfig {
            sections,
            source: text.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section)?.get(key).map(|s| s.as_str())
    }

    pub fn f64(&self, section: &str, key: &str) -> Result<Option<f64>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(v) => v
                .parse::<f64>()
                .map(Some)
                .map_err(|_| Error::Config(format!("[{section}] {key} = `{v}` is not a number"))),
        }
    }

    pub fn usize(&self, section: &str, key: &str) -> Result<Option<usize>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(v) => v
                .parse::<usize>()
                .map(Some)
                .map_err(|_| Error::Config(format!("[{section}] {key} = `{v}` is not an integer"))),
        }
    }
}

/// Builds the map described by the `[map]` section.
pub fn build_map(cfg: &RawConfig) -> Result<LorenzMap> {
    let kind = cfg.get("map", "kind").unwrap_or("doubling").to_lowercase();
    let mut map = match kind.as_str() {
        "doubling" => LorenzMap::doubling(),
        "affine" => {
            let d = cfg
                .f64("map", "d")?
                .ok_or_else(|| Error::Config("[map] affine kind needs d".into()))?;
            let y0 = cfg.f64("map", "y0")?.unwrap_or(0.0);
            let y1 = cfg.f64("map", "y1")?.unwrap_or(1.0);
            LorenzMap::affine(d, y0, y1)?
        }
        other => {
            return Err(Error::Config(format!(
                "[map] kind must be doubling or affine, got `{other}`"
            )))
        }
    };
    let mut tol = Tolerances::default();
    if let Some(v) = cfg.f64("map", "tol_discontinuity")? {
        tol.discontinuity = v;
    }
    if let Some(v) = cfg.f64("map", "tol_residual")? {
        tol.residual = v;
    }
    if let Some(policy) = cfg.get("map", "hit_policy") {
        tol.hit_policy = match policy.to_lowercase().as_str() {
            "error" => HitPolicy::Error,
            "plus" => HitPolicy::Plus,
            "minus" => HitPolicy::Minus,
            other => {
                return Err(Error::Config(format!(
                    "[map] hit_policy must be error|plus|minus, got `{other}`"
                )))
            }
        };
    }
    map = map.with_tolerances(tol);
    if let Some(cap) = cfg.usize("map", "depth_cap")? {
        map = map.with_depth_cap(cap);
    }
    Ok(map)
}

fn parse_side(s: &str) -> Result<Side> {
    match s.to_lowercase().as_str() {
        "minus" | "-" => Ok(Side::Minus),
        "plus" | "+" => Ok(Side::Plus),
        other => Err(Error::Config(format!("side must be plus or minus, got `{other}`"))),
    }
}

pub fn parse_depth_rule(s: &str) -> Result<DepthRule> {
    let s = s.to_lowercase();
    if s == "chain" || s == "chain-to-zero" {
        return Ok(DepthRule::ChainToZero);
    }
    if s == "coupled" || s == "depth-coupled" {
        return Ok(DepthRule::DepthCoupled);
    }
    if let Some(rest) = s.strip_prefix("fixed:") {
        let n: u32 = rest
            .parse()
            .map_err(|_| Error::Config(format!("bad fixed depth rule `{s}`")))?;
        return Ok(DepthRule::Fixed(n));
    }
    Err(Error::Config(format!(
        "depth_rule must be chain | coupled | fixed:N, got `{s}`"
    )))
}

/// Builds the potential described by the `[potential]` section.
pub fn build_potential(cfg: &RawConfig, map: &LorenzMap, base_dir: &Path) -> Result<Potential> {
    let kind = cfg
        .get("potential", "kind")
        .unwrap_or("constant")
        .to_lowercase();
    match kind.as_str() {
        "zero" => Ok(Potential::zero()),
        "constant" => {
            let c = cfg.f64("potential", "c")?.unwrap_or(0.0);
            Ok(Potential::constant(c))
        }
        "identity" => Ok(Potential::identity()),
        "holder" => {
            let alpha = cfg.f64("potential", "alpha")?.unwrap_or(0.5);
            let k = cfg.f64("potential", "k")?.unwrap_or(1.0);
            Potential::holder_sample(alpha, k)
        }
        "phase_family" => {
            let t = cfg
                .f64("potential", "t")?
                .ok_or_else(|| Error::Config("[potential] phase_family needs t".into()))?;
            let rule = match cfg.get("potential", "depth_rule") {
                Some(s) => parse_depth_rule(s)?,
                None => DepthRule::ChainToZero,
            };
            phase_family(map, t, rule)
        }
        "bump" | "eps_bump" => {
            let k = cfg.usize("potential", "orbit_k")?.unwrap_or(1);
            let side = parse_side(cfg.get("potential", "orbit_side").unwrap_or("minus"))?;
            let orbit = boundary_periodic_point(map, k, side)?;
            let delta = cfg.f64("potential", "delta")?;
            if kind == "eps_bump" {
                let eps = cfg.f64("potential", "eps")?.unwrap_or(0.05);
                build_eps_bump(&orbit, eps, delta)
            } else {
                let heights = match cfg.get("potential", "heights") {
                    None | Some("harmonic") => HeightRule::Harmonic,
                    Some(s) if s.starts_with("uniform:") => {
                        let h: f64 = s["uniform:".len()..]
                            .parse()
                            .map_err(|_| Error::Config(format!("bad heights `{s}`")))?;
                        HeightRule::Uniform(h)
                    }
                    Some(other) => {
                        return Err(Error::Config(format!(
                            "[potential] heights must be harmonic or uniform:H, got `{other}`"
                        )))
                    }
                };
                build_bump(&orbit, &heights, delta)
            }
        }
        "tabulated" => {
            let rel = cfg
                .get("potential", "table")
                .ok_or_else(|| Error::Config("[potential] tabulated needs table = <csv path>".into()))?;
            let path: PathBuf = if Path::new(rel).is_absolute() {
                rel.into()
            } else {
                base_dir.join(rel)
            };
            let text = std::fs::read_to_string(&path)
                .map_err(|e| Error::Config(format!("cannot read table {}: {e}", path.display())))?;
            let mut pts = Vec::new();
            for line in text.lines() {
                let line = line.split('#').next().unwrap_or("").trim();
                if line.is_empty() || line.starts_with("x,") {
                    continue;
                }
                let mut parts = line.split(',');
                let x: f64 = parts
                    .next()
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| Error::Config(format!("bad table line `{line}`")))?;
                let y: f64 = parts
                    .next()
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| Error::Config(format!("bad table line `{line}`")))?;
                pts.push((x, y));
            }
            let left = cfg.f64("potential", "d_left")?;
            let right = cfg.f64("potential", "d_right")?;
            let (left, right) = match (left, right) {
                (Some(l), Some(r)) => (l, r),
                _ => {
                    // default to the interpolated value on both sides
                    let interp = |pts: &[(f64, f64)], x: f64| -> f64 {
                        let mut best = pts[0].1;
                        let mut dist = f64::INFINITY;
                        for &(px, py) in pts {
                            if (px - x).abs() < dist {
                                dist = (px - x).abs();
                                best = py;
                            }
                        }
                        best
                    };
                    let v = interp(&pts, map.d());
                    (v, v)
                }
            };
            Potential::tabulated(pts, map.d(), left, right)
        }
        other => Err(Error::Config(format!("[potential] unknown kind `{other}`"))),
    }
}

/// Parses a subset description: `full`, `boundary`, `points:a,b,c`, or
/// `interval:a,b`.
pub fn parse_subset(s: &str, map: &LorenzMap) -> Result<Subset> {
    let s = s.trim().to_lowercase();
    if s == "full" {
        return Ok(Subset::full());
    }
    if s == "boundary" {
        return Ok(Subset::partition_boundary(map));
    }
    if let Some(rest) = s.strip_prefix("points:") {
        let mut pts = Vec::new();
        for part in rest.split(',') {
            let v: f64 = part
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad point `{part}` in subset")))?;
            pts.push(v);
        }
        return Ok(Subset::Points(pts));
    }
    if let Some(rest) = s.strip_prefix("interval:") {
        let parts: Vec<&str> = rest.split(',').collect();
        if parts.len() != 2 {
            return Err(Error::Config(format!("interval subset needs two endpoints: `{s}`")));
        }
        let a: f64 = parts[0].trim().parse().map_err(|_| Error::Config(format!("bad interval `{s}`")))?;
        let b: f64 = parts[1].trim().parse().map_err(|_| Error::Config(format!("bad interval `{s}`")))?;
        return Ok(Subset::Interval(a, b));
    }
    Err(Error::Config(format!(
        "subset must be full | boundary | points:... | interval:a,b, got `{s}`"
    )))
}

pub fn parse_method(s: &str) -> Result<ExtrapolationMethod> {
    match s.to_lowercase().as_str() {
        "last-term" => Ok(ExtrapolationMethod::LastTerm),
        "aitken" => Ok(ExtrapolationMethod::Aitken),
        "tail-slope" => Ok(ExtrapolationMethod::TailSlope),
        other => Err(Error::Config(format!(
            "method must be last-term | aitken | tail-slope, got `{other}`"
        ))),
    }
}

/// Pressure options from a `[pressure]`-style section.
pub fn pressure_options(cfg: &RawConfig, section: &str) -> Result<PressureOptions> {
    let mut opts = PressureOptions::default();
    if let Some(s) = cfg.get(section, "method") {
        opts.method = parse_method(s)?;
    }
    if let Some(n) = cfg.usize(section, "sup_samples")? {
        opts.sup_samples = n.max(1);
    }
    Ok(opts)
}

/// Parses a scan grid: `log:lo,hi,count` or `list:v1,v2,...`.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let s = s.trim().to_lowercase();
    if let Some(rest) = s.strip_prefix("log:") {
        let parts: Vec<&str> = rest.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::Config(format!("log grid needs lo,hi,count: `{s}`")));
        }
        let lo: f64 = parts[0].trim().parse().map_err(|_| Error::Config(format!("bad grid `{s}`")))?;
        let hi: f64 = parts[1].trim().parse().map_err(|_| Error::Config(format!("bad grid `{s}`")))?;
        let count: usize = parts[2].trim().parse().map_err(|_| Error::Config(format!("bad grid `{s}`")))?;
        if !(lo > 0.0 && hi > lo && count >= 2) {
            return Err(Error::Config(format!("log grid needs 0 < lo < hi and count >= 2: `{s}`")));
        }
        return Ok(crate::equilibrium::log_spaced_grid(lo, hi, count));
    }
    if let Some(rest) = s.strip_prefix("list:") {
        let mut out = Vec::new();
        for part in rest.split(',') {
            out.push(
                part.trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("bad grid entry `{part}`")))?,
            );
        }
        if out.is_empty() {
            return Err(Error::Config("empty grid list".into()));
        }
        return Ok(out);
    }
    Err(Error::Config(format!("grid must be log:lo,hi,count or list:..., got `{s}`")))
}

pub fn parse_side_selector(s: &str) -> Result<Vec<Side>> {
    match s.to_lowercase().as_str() {
        "both" => Ok(vec![Side::Minus, Side::Plus]),
        other => Ok(vec![parse_side(other)?]),
    }
}
