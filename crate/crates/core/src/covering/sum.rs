use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::hierarchy::{cover_registry, CellHierarchy, Cover, DEFAULT_COVER_STRATEGY};
use crate::capacity::ProbabilityVector;
use crate::cloud::PointCloud;
use crate::error::{invalid, Result};
use crate::estimate::{estimate_dimension, DimensionEstimate, EstimatorOptions};
use crate::io::fmt_f64;
use crate::kernels::{ln_psi, AdmissibleFn, Scale};

#[derive(Debug, Clone, PartialEq)]
pub struct CoverConfig {
    pub strategy: String,
    /// Integer ratio between consecutive ladder scales.
    pub factor: u32,
}

impl Default for CoverConfig {
    fn default() -> Self {
        CoverConfig {
            strategy: DEFAULT_COVER_STRATEGY.into(),
            factor: 2,
        }
    }
}

impl CoverConfig {
    pub fn with_strategy(mut self, name: &str) -> Self {
        self.strategy = name.into();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverSumResult {
    pub r: f64,
    pub s: f64,
    pub phi_r: f64,
    /// Price of the constructed mixed-scale cover.
    pub upper_bound: f64,
    /// `min_j N_{δ_j} δ_j^s` over the ladder.
    pub single_scale_floor: f64,
    pub ladder: Vec<f64>,
    /// Sets used at each ladder scale.
    pub counts: Vec<usize>,
    pub cover_size: usize,
}

impl CoverSumResult {
    fn new(cells: &CellHierarchy, scale: &Scale, s: f64, cover: Cover) -> Self {
        CoverSumResult {
            r: scale.r,
            s,
            phi_r: scale.phi_r,
            upper_bound: cover.price(s),
            single_scale_floor: cells.single_scale_floor(s),
            cover_size: cover.size(),
            ladder: cover.ladder,
            counts: cover.counts,
        }
    }

    /// The same cover priced at another exponent.
    pub fn reprice(&self, s: f64) -> f64 {
        self.ladder
            .iter()
            .zip(&self.counts)
            .map(|(d, n)| *n as f64 * d.powf(s))
            .sum()
    }
}

/// Upper bound on `S^s_{Φ,r}` of the cloud from a cover by ladder cells.
pub fn cover_sum(cloud: &PointCloud, r: f64, s: f64, phi: &AdmissibleFn, cfg: &CoverConfig) -> Result<CoverSumResult> {
    let scale = Scale::new(r, phi)?;
    let cells = CellHierarchy::build(cloud, &scale, cfg.factor)?;
    let strategy = cover_registry().get(&cfg.strategy)?;
    Ok(CoverSumResult::new(&cells, &scale, s, strategy.cover(&cells, s)))
}

/// Mass-distribution lower bound `1/γ` with
/// `γ = max_{w_i > 0} Σ_j w_j ψ(|x_i − x_j|)`.
pub fn cover_sum_lower_certificate(
    cloud: &PointCloud,
    measure: &ProbabilityVector,
    r: f64,
    s: f64,
    phi: &AdmissibleFn,
) -> Result<f64> {
    if measure.len() != cloud.len() {
        return Err(invalid("measure and cloud sizes differ"));
    }
    let scale = Scale::new(r, phi)?;
    let ln_diag = scale.ln_diagonal(s);
    let w = measure.weights();
    let support: Vec<usize> = measure.support().collect();
    let gamma = support
        .par_iter()
        .map(|&i| {
            (0..cloud.len())
                .filter(|&j| w[j] > 0.0)
                .map(|j| w[j] * (ln_psi(cloud.distance(i, j), &scale, s) - ln_diag).exp())
                .sum::<f64>()
        })
        .reduce(|| 0.0, f64::max);
    Ok((-ln_diag - gamma.ln()).exp())
}

/// Cell hierarchies of one cloud over an r grid, reusable across `s`.
pub struct CoverCurve {
    scales: Vec<Scale>,
    cells: Vec<CellHierarchy>,
    cfg: CoverConfig,
}

impl CoverCurve {
    pub fn new(cloud: &PointCloud, phi: &AdmissibleFn, r_grid: &[f64], cfg: &CoverConfig) -> Result<Self> {
        cover_registry().get(&cfg.strategy)?;
        let scales: Vec<Scale> = r_grid.iter().map(|&r| Scale::new(r, phi)).collect::<Result<_>>()?;
        let cells = scales
            .par_iter()
            .map(|sc| CellHierarchy::build(cloud, sc, cfg.factor))
            .collect::<Result<Vec<_>>>()?;
        Ok(CoverCurve {
            scales,
            cells,
            cfg: cfg.clone(),
        })
    }

    pub fn at(&self, s: f64) -> Result<Vec<CoverSumResult>> {
        let strategy = cover_registry().get(&self.cfg.strategy)?;
        Ok(self
            .cells
            .par_iter()
            .zip(&self.scales)
            .map(|(cells, sc)| CoverSumResult::new(cells, sc, s, strategy.cover(cells, s)))
            .collect())
    }
}

/// Warnings when `ln r / ln Φ(r)` drifts toward zero along the grid, the
/// regime where cover sums no longer characterize the dimension.
pub fn validity_warnings(phi: &AdmissibleFn, r_grid: &[f64]) -> Vec<String> {
    let ratio = |r: f64| r.ln() / phi.ln_phi(r.ln());
    let (first, last) = match (r_grid.first(), r_grid.last()) {
        (Some(a), Some(b)) => (ratio(*a), ratio(*b)),
        _ => return Vec::new(),
    };
    if last < 0.01 || last < 0.5 * first {
        vec![format!(
            "log r / log Phi(r) falls from {first:.4} to {last:.4} along the grid; the cover characterization needs it bounded away from 0"
        )]
    } else {
        Vec::new()
    }
}

/// Cover-route dimension estimate of a cloud.
pub fn phi_dimension(
    cloud: &PointCloud,
    phi: &AdmissibleFn,
    r_grid: &[f64],
    opts: &EstimatorOptions,
    cfg: &CoverConfig,
) -> Result<DimensionEstimate> {
    let curve = CoverCurve::new(cloud, phi, r_grid, cfg)?;
    let mut est = estimate_dimension(r_grid, opts, |s| {
        Ok(curve.at(s)?.iter().map(|c| c.upper_bound.ln()).collect())
    })?;
    est.warnings.extend(validity_warnings(phi, r_grid));
    Ok(est)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverRow {
    pub r: f64,
    pub s: f64,
    pub upper_bound: f64,
    pub lower_certificate: f64,
    pub single_scale_floor: f64,
    pub cover_size: usize,
}

/// Cover sums and certificates (for the uniform measure, or the cloud's own
/// weights if it has them) over an `(r, s)` grid.
pub fn cover_table(
    cloud: &PointCloud,
    phi: &AdmissibleFn,
    r_grid: &[f64],
    s_values: &[f64],
    cfg: &CoverConfig,
) -> Result<Vec<CoverRow>> {
    let measure = match cloud.weights() {
        Some(w) => ProbabilityVector::normalized(w.to_vec())?,
        None => ProbabilityVector::uniform(cloud.len())?,
    };
    let curve = CoverCurve::new(cloud, phi, r_grid, cfg)?;
    let mut rows = Vec::new();
    for &s in s_values {
        for c in curve.at(s)? {
            rows.push(CoverRow {
                r: c.r,
                s,
                upper_bound: c.upper_bound,
                lower_certificate: cover_sum_lower_certificate(cloud, &measure, c.r, s, phi)?,
                single_scale_floor: c.single_scale_floor,
                cover_size: c.cover_size,
            });
        }
    }
    Ok(rows)
}

/// CSV with columns `r, s, upper_bound, lower_certificate, single_scale_floor, cover_size`.
pub fn write_cover_csv<W: Write>(w: W, rows: &[CoverRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["r", "s", "upper_bound", "lower_certificate", "single_scale_floor", "cover_size"])?;
    for row in rows {
        out.write_record([
            fmt_f64(row.r),
            fmt_f64(row.s),
            fmt_f64(row.upper_bound),
            fmt_f64(row.lower_certificate),
            fmt_f64(row.single_scale_floor),
            row.cover_size.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
