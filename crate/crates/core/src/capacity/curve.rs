use std::io::Write;

use rayon::prelude::*;

use super::assemble::{capacity_profile, capacity_symbolic, CapacityConfig, CapacityResult};
use crate::cloud::PointCloud;
use crate::error::Result;
use crate::estimate::{estimate_dimension, DimensionEstimate, EstimatorOptions};
use crate::io::fmt_f64;
use crate::kernels::AdmissibleFn;
use crate::symbolic::{AffineIfs, SymbolicSet};

/// Capacities of a symbolic set over an r grid at fixed `s`.
pub fn symbolic_capacity_curve(
    set: &SymbolicSet,
    ifs: &AffineIfs,
    phi: &AdmissibleFn,
    r_grid: &[f64],
    s: f64,
    cfg: &CapacityConfig,
) -> Result<Vec<CapacityResult>> {
    r_grid
        .par_iter()
        .map(|&r| capacity_symbolic(set, ifs, r, s, phi, cfg))
        .collect()
}

/// Profile capacities of a cloud over an r grid at fixed `s`.
pub fn profile_capacity_curve(
    cloud: &PointCloud,
    tau: f64,
    phi: &AdmissibleFn,
    r_grid: &[f64],
    s: f64,
    cfg: &CapacityConfig,
) -> Result<Vec<CapacityResult>> {
    r_grid
        .par_iter()
        .map(|&r| capacity_profile(cloud, r, s, tau, phi, cfg))
        .collect()
}

/// Bisects `s` for the zero of the windowed slope of `ln C^s` against
/// `-ln r`; `curve_builder` returns the capacity curve at a given `s`.
pub fn capacity_dimension<F>(r_grid: &[f64], opts: &EstimatorOptions, curve_builder: F) -> Result<DimensionEstimate>
where
    F: Fn(f64) -> Result<Vec<CapacityResult>>,
{
    estimate_dimension(r_grid, opts, |s| {
        Ok(curve_builder(s)?.iter().map(|c| c.ln_capacity).collect())
    })
}

/// Capacity dimension of a symbolic set; the bracket is `[0, d]`.
pub fn symbolic_capacity_dimension(
    set: &SymbolicSet,
    ifs: &AffineIfs,
    phi: &AdmissibleFn,
    r_grid: &[f64],
    opts: &EstimatorOptions,
    cfg: &CapacityConfig,
) -> Result<DimensionEstimate> {
    capacity_dimension(r_grid, opts, |s| symbolic_capacity_curve(set, ifs, phi, r_grid, s, cfg))
}

/// Profile dimension of a cloud at target dimension `τ`; the bracket is `[0, τ]`.
pub fn profile_dimension(
    cloud: &PointCloud,
    tau: f64,
    phi: &AdmissibleFn,
    r_grid: &[f64],
    opts: &EstimatorOptions,
    cfg: &CapacityConfig,
) -> Result<DimensionEstimate> {
    // The profile kernel is only defined for s <= tau.
    let mut opts = opts.clone();
    opts.bracket.1 = opts.bracket.1.min(tau);
    opts.bracket.0 = opts.bracket.0.min(opts.bracket.1);
    capacity_dimension(r_grid, &opts, |s| profile_capacity_curve(cloud, tau, phi, r_grid, s, cfg))
}

/// CSV with columns `family, r, s, energy, capacity, gap, iters, converged`.
pub fn write_capacity_csv<W: Write>(w: W, rows: &[CapacityResult]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["family", "r", "s", "energy", "capacity", "gap", "iters", "converged"])?;
    for c in rows {
        out.write_record([
            c.family.to_string(),
            fmt_f64(c.r),
            fmt_f64(c.s),
            fmt_f64(c.energy),
            fmt_f64(c.capacity),
            fmt_f64(c.gap),
            c.iterations.to_string(),
            c.converged.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
