//! Command implementations behind the thin binary.
//!
//! Every command reads one flat config file, writes deterministic CSV (and,
//! on request, a JSON mirror) into the output directory, prints a one-line
//! summary, and maps its verdict onto the process exit code:
//! `0` success/gap, `1` error, `2` no-gap, `3` inconclusive.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{
    self, build_map, build_potential, parse_depth_rule, parse_grid, parse_side_selector,
    parse_subset, RawConfig,
};
use crate::cylinders::{self, Subset};
use crate::equilibrium::{
    phase_scan, theorem_a_battery, PhaseScanConfig, Regime,
};
use crate::error::{Error, Result};

use crate::periodic::boundary_periodic_point;
use crate::potentials::DepthRule;
use crate::pressure::{gap_check, prop_partial_check, GapVerdict, PressureEstimate};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Exit codes shared by all subcommands.
pub mod exit_code {
    pub const SUCCESS: i32 = 0;
    pub const ERROR: i32 = 1;
    pub const NO_GAP: i32 = 2;
    pub const INCONCLUSIVE: i32 = 3;
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub config_path: PathBuf,
    pub out_dir: PathBuf,
    pub json: bool,
    pub depth: Option<usize>,
    pub seed: Option<u64>,
}

/// FNV-1a over the config text; stamped into every output file so results
/// can be traced back to their inputs.
pub fn config_hash(text: &str) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for b in text.as_bytes() {
        hash ^= *b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

struct OutputWriter<'a> {
    out_dir: &'a Path,
    comment: String,
    json: bool,
}

impl<'a> OutputWriter<'a> {
    fn new(opts: &'a RunOptions, cfg: &RawConfig) -> Result<Self> {
        std::fs::create_dir_all(&opts.out_dir)?;
        let seed = opts
            .seed
            .map(|s| format!(" seed={s}"))
            .unwrap_or_default();
        Ok(OutputWriter {
            out_dir: &opts.out_dir,
            comment: format!(
                "# lorenz-thermo v{TOOL_VERSION} config_hash={:016x}{seed}",
                config_hash(&cfg.source)
            ),
            json: opts.json,
        })
    }

    fn write_csv(&self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf> {
        let mut text = String::new();
        writeln!(text, "{}", self.comment).unwrap();
        writeln!(text, "{}", header.join(",")).unwrap();
        for row in rows {
            writeln!(text, "{}", row.join(",")).unwrap();
        }
        let path = self.out_dir.join(name);
        std::fs::write(&path, text)?;
        Ok(path)
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        if !self.json {
            return Ok(());
        }
        let path = self.out_dir.join(name);
        let text = serde_json::to_string_pretty(value)
            .map_err(|e| Error::Config(format!("json encoding failed: {e}")))?;
        std::fs::write(path, text)?;
        Ok(())
    }
}

fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v:.17e}")
    }
}

/// `cylinders`: enumerate a refinement depth, optionally restricted to the
/// cylinders touching a subset, and export them.
pub fn cmd_cylinders(opts: &RunOptions) -> Result<i32> {
    let cfg = RawConfig::load(&opts.config_path)?;
    let map = build_map(&cfg)?;
    let depth = opts
        .depth
        .or(cfg.usize("cylinders", "depth")?)
        .ok_or_else(|| Error::Config("[cylinders] needs depth".into()))?;
    if depth == 0 {
        return Err(Error::Config("[cylinders] depth must be >= 1".into()));
    }
    let mut cyls = match cfg.get("cylinders", "subset") {
        Some(s) => cylinders::touching(&map, depth, &parse_subset(s, &map)?)?,
        None => cylinders::enumerate(&map, depth)?,
    };
    cyls.sort_by(|a, b| {
        a.lo.partial_cmp(&b.lo)
            .unwrap()
            .then_with(|| a.word_string().cmp(&b.word_string()))
    });
    let writer = OutputWriter::new(opts, &cfg)?;
    let rows: Vec<Vec<String>> = cyls
        .iter()
        .map(|c| {
            vec![
                c.depth().to_string(),
                c.word_string(),
                fmt_f64(c.lo),
                fmt_f64(c.hi),
            ]
        })
        .collect();
    let path = writer.write_csv("cylinders.csv", &["depth", "word", "lo", "hi"], &rows)?;
    writer.write_json("cylinders.json", &cyls)?;
    println!("cylinders: {} rows -> {}", cyls.len(), path.display());
    Ok(exit_code::SUCCESS)
}

fn pressure_rows(est: &PressureEstimate) -> Vec<Vec<String>> {
    est.sequence
        .iter()
        .zip(est.log_zs.iter())
        .zip(est.cylinder_counts.iter())
        .map(|((&(n, avg), &log_z), &count)| {
            vec![
                n.to_string(),
                count.to_string(),
                fmt_f64(log_z),
                fmt_f64(avg),
            ]
        })
        .collect()
}

/// `pressure`: totals versus boundary, the gap verdict, and the endpoint
/// Birkhoff comparison. Exit code carries the verdict.
pub fn cmd_pressure(opts: &RunOptions) -> Result<i32> {
    let cfg = RawConfig::load(&opts.config_path)?;
    let map = build_map(&cfg)?;
    let base = opts
        .config_path
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .to_path_buf();
    let phi = build_potential(&cfg, &map, &base)?;
    let n_min = cfg.usize("pressure", "n_min")?.unwrap_or(3);
    let n_max = opts
        .depth
        .or(cfg.usize("pressure", "n_max")?)
        .unwrap_or(14);
    let popts = config::pressure_options(&cfg, "pressure")?;
    let gc = gap_check(&map, &phi, n_min, n_max, popts)?;
    let partial = prop_partial_check(&map, &phi, n_max, popts)?;

    let writer = OutputWriter::new(opts, &cfg)?;
    let header = ["n", "cylinders_touching", "log_Zn", "avg"];
    writer.write_csv("pressure_total.csv", &header, &pressure_rows(&gc.total))?;
    writer.write_csv(
        "pressure_boundary.csv",
        &header,
        &pressure_rows(&gc.boundary),
    )?;
    writer.write_json("pressure.json", &gc)?;
    writer.write_json("prop_partial.json", &partial)?;

    // optional extra subset
    if let Some(s) = cfg.get("pressure", "subset") {
        let subset = parse_subset(s, &map)?;
        if subset != Subset::full() {
            let est = crate::pressure::pressure(&map, &phi, &subset, n_min, n_max, popts)?;
            writer.write_csv("pressure_subset.csv", &header, &pressure_rows(&est))?;
            writer.write_json("pressure_subset.json", &est)?;
        }
    }

    println!(
        "total={:.4} boundary={:.4} margin={:.4} verdict={} | M={:.4} C_emp={:.4} bounded={}",
        gc.total.value,
        gc.boundary.value,
        gc.margin,
        gc.verdict,
        partial.m_value,
        partial.c_bound,
        partial.holds
    );
    Ok(match gc.verdict {
        GapVerdict::Gap => exit_code::SUCCESS,
        GapVerdict::NoGap => exit_code::NO_GAP,
        GapVerdict::Inconclusive => exit_code::INCONCLUSIVE,
    })
}

/// `periodic`: boundary periodic orbits on one or both sides.
pub fn cmd_periodic(opts: &RunOptions) -> Result<i32> {
    let cfg = RawConfig::load(&opts.config_path)?;
    let map = build_map(&cfg)?;
    let k_max = cfg.usize("periodic", "k_max")?.unwrap_or(8);
    let sides = parse_side_selector(cfg.get("periodic", "side").unwrap_or("both"))?;
    let mut rows = Vec::new();
    let mut orbits = Vec::new();
    for side in sides {
        for k in 1..=k_max {
            let po = boundary_periodic_point(&map, k, side)?;
            rows.push(vec![
                side.to_string(),
                k.to_string(),
                po.period.to_string(),
                fmt_f64(po.point),
                fmt_f64(po.residual),
                po.word
                    .iter()
                    .map(|s| s.to_string())
                    .collect::<Vec<_>>()
                    .join(""),
                po.orbit
                    .iter()
                    .map(|x| fmt_f64(*x))
                    .collect::<Vec<_>>()
                    .join(";"),
            ]);
            orbits.push(po);
        }
    }
    let writer = OutputWriter::new(opts, &cfg)?;
    let path = writer.write_csv(
        "periodic.csv",
        &["side", "k", "period", "point", "residual", "word", "orbit"],
        &rows,
    )?;
    writer.write_json("periodic.json", &orbits)?;
    println!("periodic: {} orbits -> {}", orbits.len(), path.display());
    Ok(exit_code::SUCCESS)
}

/// `scan`: the phase-transition sweep of the one-parameter family.
pub fn cmd_scan(opts: &RunOptions) -> Result<i32> {
    let cfg = RawConfig::load(&opts.config_path)?;
    let map = build_map(&cfg)?;
    let grid = parse_grid(
        cfg.get("scan", "grid")
            .ok_or_else(|| Error::Config("[scan] needs grid".into()))?,
    )?;
    let rule = match cfg.get("scan", "depth_rule") {
        Some(s) => parse_depth_rule(s)?,
        None => DepthRule::DepthCoupled,
    };
    let mut scfg = PhaseScanConfig {
        rule,
        ..Default::default()
    };
    if let Some(n) = cfg.usize("scan", "n_min")? {
        scfg.n_min = n;
    }
    if let Some(n) = opts.depth.or(cfg.usize("scan", "n_max")?) {
        scfg.n_max = n;
    }
    if let Some(k) = cfg.usize("scan", "k_max")? {
        scfg.k_max = k;
    }
    let scan = phase_scan(&map, &grid, &scfg)?;

    let k_cols = scan
        .rows
        .iter()
        .map(|r| r.fe_minus.len().max(r.fe_plus.len()))
        .max()
        .unwrap_or(0);
    let mut header: Vec<String> = vec![
        "t".into(),
        "verdict".into(),
        "ratio_limit".into(),
        "fe_divergent".into(),
        "pressure".into(),
        "gap".into(),
        "regime".into(),
        "error".into(),
    ];
    for k in 1..=k_cols {
        header.push(format!("fe_minus_{k}"));
    }
    for k in 1..=k_cols {
        header.push(format!("fe_plus_{k}"));
    }
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let fe_cell = |fe: Option<&crate::equilibrium::FreeEnergy>| -> String {
        match fe {
            None => String::new(),
            Some(crate::equilibrium::FreeEnergy::Finite(v)) => fmt_f64(*v),
            Some(crate::equilibrium::FreeEnergy::Divergent { .. }) => "divergent".into(),
        }
    };
    let rows: Vec<Vec<String>> = scan
        .rows
        .iter()
        .map(|r| {
            let mut row = vec![
                fmt_f64(r.t),
                r.verdict.map(|v| v.to_string()).unwrap_or_default(),
                fmt_f64(r.limit_ratio),
                r.fe_divergent.to_string(),
                fmt_f64(r.pressure_value),
                r.gap_verdict.map(|v| v.to_string()).unwrap_or_default(),
                r.regime.to_string(),
                r.error.clone().unwrap_or_default(),
            ];
            for k in 0..k_cols {
                row.push(fe_cell(r.fe_minus.get(k)));
            }
            for k in 0..k_cols {
                row.push(fe_cell(r.fe_plus.get(k)));
            }
            row
        })
        .collect();
    let writer = OutputWriter::new(opts, &cfg)?;
    let path = writer.write_csv("scan.csv", &header_refs, &rows)?;
    writer.write_json("scan.json", &scan)?;
    let bracket = scan
        .critical_bracket
        .map(|(a, b)| format!("[{a:.6}, {b:.6}]"))
        .unwrap_or_else(|| "none".into());
    let formula = scan
        .formula_range
        .map(|(a, b)| format!("[{a:.6}, {b:.6}]"))
        .unwrap_or_else(|| "none".into());
    println!(
        "scan: {} rows, critical bracket {bracket}, formula range {formula}, regime flips {} -> {}",
        scan.rows.len(),
        scan.regime_flips,
        path.display()
    );
    let valid = scan.rows.iter().filter(|r| r.error.is_none()).count();
    let unique_rows = scan
        .rows
        .iter()
        .filter(|r| r.regime == Regime::UniqueCandidate)
        .count();
    if unique_rows == 0 || unique_rows == valid {
        // the grid never crossed the transition; flag as inconclusive
        return Ok(exit_code::INCONCLUSIVE);
    }
    Ok(exit_code::SUCCESS)
}

/// `battery`: the boundary-perturbation checks for one declared-continuous
/// potential.
pub fn cmd_battery(opts: &RunOptions) -> Result<i32> {
    let cfg = RawConfig::load(&opts.config_path)?;
    let map = build_map(&cfg)?;
    let base = opts
        .config_path
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .to_path_buf();
    let phi = build_potential(&cfg, &map, &base)?;
    let k_max = cfg.usize("battery", "k_max")?.unwrap_or(6);
    let n_max = opts.depth.or(cfg.usize("battery", "n_max")?).unwrap_or(14);
    let popts = config::pressure_options(&cfg, "battery")?;
    let report = theorem_a_battery(&map, &phi, k_max, n_max, popts)?;
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.side.to_string(),
                r.k.to_string(),
                r.period.to_string(),
                fmt_f64(r.point),
                fmt_f64(r.orbit_average),
                fmt_f64(r.target),
                fmt_f64(r.identity_error),
                fmt_f64(r.bump_pressure),
                fmt_f64(r.bump_bound),
            ]
        })
        .collect();
    let writer = OutputWriter::new(opts, &cfg)?;
    let path = writer.write_csv(
        "battery.csv",
        &[
            "side",
            "k",
            "period",
            "point",
            "orbit_average",
            "target",
            "identity_error",
            "bump_pressure",
            "bump_bound",
        ],
        &rows,
    )?;
    writer.write_json("battery.json", &report)?;
    println!(
        "battery: convergence(minus)={} convergence(plus)={} identity={} bump_bound={} gap={} margin={:.4} -> {}",
        report.orbit_convergence_minus,
        report.orbit_convergence_plus,
        report.identity_pass,
        report.bump_bound_pass,
        report.gap.verdict,
        report.gap.margin,
        path.display()
    );
    Ok(if report.all_pass {
        exit_code::SUCCESS
    } else {
        exit_code::INCONCLUSIVE
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn opts_for(dir: &Path, config: &str) -> RunOptions {
        let config_path = dir.join("run.cfg");
        fs::write(&config_path, config).unwrap();
        RunOptions {
            config_path,
            out_dir: dir.join("out"),
            json: true,
            depth: None,
            seed: None,
        }
    }

    #[test]
    fn cylinders_doubling_depth_three() {
        let dir = tempfile::tempdir().unwrap();
        let opts = opts_for(
            dir.path(),
            "[map]\nkind = doubling\n\n[cylinders]\ndepth = 3\n",
        );
        assert_eq!(cmd_cylinders(&opts).unwrap(), 0);
        let text = fs::read_to_string(opts.out_dir.join("cylinders.csv")).unwrap();
        let data_rows = text.lines().skip(2).count();
        assert_eq!(data_rows, 8);
        assert!(text.lines().next().unwrap().starts_with("# lorenz-thermo"));
    }

    #[test]
    fn cylinders_touching_boundary_six_rows() {
        let dir = tempfile::tempdir().unwrap();
        let opts = opts_for(
            dir.path(),
            "[map]\nkind = doubling\n\n[cylinders]\ndepth = 5\nsubset = boundary\n",
        );
        assert_eq!(cmd_cylinders(&opts).unwrap(), 0);
        let text = fs::read_to_string(opts.out_dir.join("cylinders.csv")).unwrap();
        assert_eq!(text.lines().skip(2).count(), 6);
    }

    #[test]
    fn cylinders_rejects_zero_depth() {
        let dir = tempfile::tempdir().unwrap();
        let opts = opts_for(
            dir.path(),
            "[map]\nkind = doubling\n\n[cylinders]\ndepth = 0\n",
        );
        assert!(cmd_cylinders(&opts).is_err());
    }

    #[test]
    fn pressure_zero_potential_gap_exit() {
        let dir = tempfile::tempdir().unwrap();
        let opts = opts_for(
            dir.path(),
            "[map]\nkind = doubling\n\n[potential]\nkind = zero\n\n[pressure]\nn_min = 3\nn_max = 12\n",
        );
        assert_eq!(cmd_pressure(&opts).unwrap(), exit_code::SUCCESS);
        let total = fs::read_to_string(opts.out_dir.join("pressure_total.csv")).unwrap();
        let last = total.lines().last().unwrap();
        let avg: f64 = last.split(',').last().unwrap().parse().unwrap();
        assert!((avg - 2.0_f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn pressure_constant_shift() {
        let dir = tempfile::tempdir().unwrap();
        let opts = opts_for(
            dir.path(),
            "[map]\nkind = doubling\n\n[potential]\nkind = constant\nc = 0.5\n\n[pressure]\nn_min = 3\nn_max = 12\n",
        );
        assert_eq!(cmd_pressure(&opts).unwrap(), exit_code::SUCCESS);
        let total = fs::read_to_string(opts.out_dir.join("pressure_total.csv")).unwrap();
        let avg: f64 = total
            .lines()
            .last()
            .unwrap()
            .split(',')
            .last()
            .unwrap()
            .parse()
            .unwrap();
        assert!((avg - (2.0_f64.ln() + 0.5)).abs() < 1e-12);
    }

    #[test]
    fn malformed_config_is_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let opts = opts_for(dir.path(), "[map\nkind=doubling\n");
        assert!(cmd_pressure(&opts).is_err());
    }

    #[test]
    fn periodic_doubling_first_five() {
        let dir = tempfile::tempdir().unwrap();
        let opts = opts_for(
            dir.path(),
            "[map]\nkind = doubling\n\n[periodic]\nk_max = 5\nside = both\n",
        );
        assert_eq!(cmd_periodic(&opts).unwrap(), 0);
        let text = fs::read_to_string(opts.out_dir.join("periodic.csv")).unwrap();
        let lines: Vec<&str> = text.lines().skip(2).collect();
        assert_eq!(lines.len(), 10);
        // minus side k=3 has point 3/7
        let row: Vec<&str> = lines[2].split(',').collect();
        let p: f64 = row[3].parse().unwrap();
        assert!((p - 3.0 / 7.0).abs() < 1e-10);
    }

    #[test]
    fn periodic_beyond_cap_is_error() {
        let dir = tempfile::tempdir().unwrap();
        let opts = opts_for(
            dir.path(),
            "[map]\nkind = doubling\ndepth_cap = 4\n\n[periodic]\nk_max = 6\n",
        );
        assert!(cmd_periodic(&opts).is_err());
    }

    #[test]
    fn scan_single_t_and_zero_flag() {
        let dir = tempfile::tempdir().unwrap();
        let opts = opts_for(
            dir.path(),
            "[map]\nkind = doubling\n\n[scan]\ngrid = list:0,4\nn_max = 8\nk_max = 3\n",
        );
        let code = cmd_scan(&opts).unwrap();
        let text = fs::read_to_string(opts.out_dir.join("scan.csv")).unwrap();
        let lines: Vec<&str> = text.lines().skip(2).collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].contains("singular"));
        assert!(lines[1].contains("unique-candidate"));
        // a grid that never crosses the transition is inconclusive
        assert_eq!(code, exit_code::INCONCLUSIVE);
    }

    #[test]
    fn battery_refuses_declared_discontinuous() {
        let dir = tempfile::tempdir().unwrap();
        let table = dir.path().join("table.csv");
        fs::write(&table, "0.0,0.0\n1.0,1.0\n").unwrap();
        let opts = opts_for(
            dir.path(),
            "[map]\nkind = doubling\n\n[potential]\nkind = tabulated\ntable = table.csv\nd_left = 0.2\nd_right = 0.9\n\n[battery]\nk_max = 2\nn_max = 8\n",
        );
        let err = cmd_battery(&opts).unwrap_err();
        assert!(err.to_string().contains("continuous"), "{err}");
    }

    #[test]
    fn battery_identity_passes() {
        let dir = tempfile::tempdir().unwrap();
        let opts = opts_for(
            dir.path(),
            "[map]\nkind = doubling\n\n[potential]\nkind = identity\n\n[battery]\nk_max = 3\nn_max = 10\n",
        );
        assert_eq!(cmd_battery(&opts).unwrap(), exit_code::SUCCESS);
    }
}
