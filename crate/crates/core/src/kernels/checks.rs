use serde::Serialize;

use super::gauge::AdmissibleFn;

/// Outcome of the numerical admissibility check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    /// `0 < Φ(r) ≤ r` at every grid point.
    pub bounded: bool,
    /// `Φ` non-decreasing along the grid.
    pub monotone: bool,
    /// `Φ(r)/r` falls by two orders of magnitude and keeps falling.
    pub ratio_vanishes: bool,
    pub grid_points: usize,
}

impl AdmissibilityReport {
    pub fn admissible(&self) -> bool {
        self.bounded && self.monotone && self.ratio_vanishes
    }
}

fn default_ln_r_grid(phi: &AdmissibleFn, n: usize) -> Vec<f64> {
    let t0 = -phi.domain_bound().min(1.0).ln() + 0.01;
    let span = 2000.0f64;
    (0..n)
        .map(|k| -(t0 + ((span + 1.0).ln() * k as f64 / (n - 1) as f64).exp() - 1.0))
        .collect()
}

/// Checks admissibility on a grid of `ln r` values (descending toward `-∞`).
/// Tabulated gauges are checked on their own abscissae.
pub fn check_admissible(phi: &AdmissibleFn) -> AdmissibilityReport {
    let grid: Vec<f64> = if phi.variant() == "custom" {
        let table = phi.spec().params["r"].clone();
        let r: Vec<f64> = serde_json::from_value(table).unwrap_or_default();
        r.iter().rev().map(|v| v.ln()).collect()
    } else {
        default_ln_r_grid(phi, 200)
    };
    check_admissible_on(phi, &grid)
}

/// As [`check_admissible`] on a caller-supplied descending `ln r` grid.
pub fn check_admissible_on(phi: &AdmissibleFn, ln_r: &[f64]) -> AdmissibilityReport {
    let ln_phi: Vec<f64> = ln_r.iter().map(|&x| phi.ln_phi(x)).collect();
    let tol = |x: f64| 1e-12 * x.abs().max(1.0);
    let bounded = ln_r
        .iter()
        .zip(&ln_phi)
        .all(|(&x, &y)| y.is_finite() && y <= x + tol(x));
    let monotone = ln_phi.windows(2).all(|w| w[1] <= w[0] + tol(w[0]));
    let ratio: Vec<f64> = ln_r.iter().zip(&ln_phi).map(|(x, y)| y - x).collect();
    let ratio_vanishes = match (ratio.first(), ratio.last()) {
        (Some(&first), Some(&last)) => {
            let tail = &ratio[ratio.len() / 2..];
            last <= first + 0.01f64.ln() && tail.windows(2).all(|w| w[1] <= w[0] + tol(w[0]))
        }
        _ => false,
    };
    AdmissibilityReport {
        bounded,
        monotone,
        ratio_vanishes,
        grid_points: ln_r.len(),
    }
}

/// Trace of `ln |r^ε ln Φ(r)|` along the grid for one `ε`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthTrace {
    pub eps: f64,
    pub ln_values: Vec<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthReport {
    pub passed: bool,
    pub ln_r: Vec<f64>,
    pub traces: Vec<GrowthTrace>,
}

pub const DEFAULT_GROWTH_EPS: [f64; 4] = [0.5, 0.25, 0.1, 0.05];

/// Geometric grid of `t = -ln r` from 2 to 20000.
pub fn default_growth_ln_r() -> Vec<f64> {
    let n = 60;
    (0..n)
        .map(|k| -2.0 * 10_000f64.powf(k as f64 / (n - 1) as f64))
        .collect()
}

/// Checks `r^ε ln Φ(r) → 0` along a descending `ln r` grid: for every `ε` the
/// magnitude must be strictly decreasing over the finer half of the grid and
/// end below `1e-3`.
pub fn check_growth_condition(phi: &AdmissibleFn, eps: &[f64], ln_r: &[f64]) -> GrowthReport {
    let threshold = 1e-3f64.ln();
    let traces: Vec<GrowthTrace> = eps
        .iter()
        .map(|&e| {
            let ln_values: Vec<f64> = ln_r
                .iter()
                .map(|&x| e * x + phi.ln_phi(x).abs().ln())
                .collect();
            let tail = &ln_values[ln_values.len() / 2..];
            let passed = !tail.is_empty()
                && tail.iter().all(|v| v.is_finite())
                && tail.windows(2).all(|w| w[1] < w[0])
                && *tail.last().unwrap() < threshold;
            GrowthTrace {
                eps: e,
                ln_values,
                passed,
            }
        })
        .collect();
    GrowthReport {
        passed: !traces.is_empty() && traces.iter().all(|t| t.passed),
        ln_r: ln_r.to_vec(),
        traces,
    }
}

/// [`check_growth_condition`] on the default grids.
pub fn check_growth_default(phi: &AdmissibleFn) -> GrowthReport {
    check_growth_condition(phi, &DEFAULT_GROWTH_EPS, &default_growth_ln_r())
}
