//! Numerical thermodynamic formalism for one-dimensional Lorenz-like
//! expanding maps.
//!
//! The toolkit covers five building blocks:
//!
//! - [`map`]: the maps themselves — two increasing branches, one
//!   discontinuity, one-sided conventions, orbits, cutting times.
//! - [`cylinders`]: the refined partitions, streamed or materialized, with
//!   subset selection.
//! - [`periodic`]: boundary periodic orbits via contracting inverse-branch
//!   iteration.
//! - [`potentials`]: potential functions (bumps, tabulated data, the
//!   phase-transition family), variation estimates, and regularity
//!   classification.
//! - [`pressure`] / [`equilibrium`]: partition functions, subset pressure,
//!   gap checks, orbit free energies, the perturbation battery, and the
//!   phase scan.
//!
//! Start with the runnable examples in `examples/`; each one exercises a
//! major capability end to end. The `lorenz-thermo` binary exposes the same
//! operations behind a flat config file for scripted runs.

pub mod cli;
pub mod config;
pub mod cylinders;
pub mod equilibrium;
pub mod error;
pub mod map;
pub mod periodic;
pub mod potentials;
pub mod pressure;

pub use cylinders::{enumerate, touching, Cylinder, CylinderView, Subset};
pub use equilibrium::{
    free_energy, phase_scan, proposition_med_check, theorem_a_battery, AtomicMeasure, FreeEnergy,
    PhaseScan, PhaseScanConfig, PhaseScanRow, Regime, TheoremBattery,
};
pub use error::{Error, Result};
pub use map::{HitPolicy, LorenzMap, Side, Symbol, Tolerances};
pub use periodic::{boundary_cylinder, boundary_periodic_point, PeriodicOrbit};
pub use potentials::{
    build_bump, build_eps_bump, classify, phase_family, variation, variation_series, Continuity,
    DepthRule, HeightRule, Potential, RegularityClass, SummabilityVerdict,
};
pub use pressure::{
    birkhoff_sum, boundary_averages, gap_check, log_partition, pressure, prop_partial_check,
    transfer_pressure_oracle, BoundaryAverages, ExtrapolationMethod, GapCheck, GapVerdict,
    PressureEstimate, PressureOptions,
};
